import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nhscatter.errors import ExceptionalPointWarning
from nhscatter.model import ImaginaryOnsite, LatticeSpec, UnequalHopping, build_finite_hamiltonian
from nhscatter.spectrum import (
    BiorthogonalSpectrum,
    detect_bound_states,
    eigendecompose,
    finite_size_scaling,
    participation_ratio,
)


@pytest.fixture
def small_h():
    return build_finite_hamiltonian(ImaginaryOnsite(1.0, 1.8), 40)


def test_fit_sorts_and_biorthonormalizes(small_h):
    est = BiorthogonalSpectrum().fit(small_h)
    w = est.eigenvalues_
    order = np.lexsort((w.imag, w.real))
    np.testing.assert_array_equal(order, np.arange(w.size))
    np.testing.assert_allclose(np.linalg.norm(est.right_vectors_, axis=0), 1.0, atol=1e-13)
    gram = est.left_vectors_.conj().T @ est.right_vectors_
    assert np.abs(gram - np.eye(40)).max() < 1e-10
    assert est.completeness_residual_ < 1e-10
    assert not est.near_exceptional_
    # right and left eigen-equations
    np.testing.assert_allclose(small_h @ est.right_vectors_, est.right_vectors_ * w, atol=1e-10)
    np.testing.assert_allclose(
        small_h.conj().T @ est.left_vectors_, est.left_vectors_ * w.conj(), atol=1e-10
    )


def test_transform_roundtrip_and_evolution(small_h):
    est = BiorthogonalSpectrum().fit(small_h)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 40)) + 1j * rng.normal(size=(3, 40))
    np.testing.assert_allclose(est.inverse_transform(est.transform(X)), X, atol=1e-10)
    x = X[0]
    assert est.transform(x).shape == (40,)
    states = est.evolve(x, [0.0, 0.7, 1.5])
    for t, s in zip([0.0, 0.7, 1.5], states):
        np.testing.assert_allclose(s, scipy.linalg.expm(-1j * small_h * t) @ x, atol=1e-9)


def test_estimator_protocol(small_h):
    est = BiorthogonalSpectrum(max_size=100, ep_tol=1e-9)
    assert est.get_params() == {"max_size": 100, "ep_tol": 1e-9, "completeness_tol": 1e-7}
    other = clone(est)
    assert other.get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        other.transform(np.zeros(40))
    with pytest.raises(ValueError, match="exceeds"):
        BiorthogonalSpectrum(max_size=10).fit(small_h)
    est.fit(small_h)
    with pytest.raises(ValueError, match="length"):
        est.transform(np.zeros(39))


@pytest.mark.parametrize("bad", [np.zeros((3, 4)), np.zeros(5), np.zeros((0, 0)), np.full((2, 2), np.nan)])
def test_rejects_malformed_matrices(bad):
    with pytest.raises(ValueError):
        BiorthogonalSpectrum().fit(bad)


def test_exceptional_point_flagged():
    with pytest.warns(ExceptionalPointWarning):
        spec = eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert spec.near_exceptional
    # balanced gain/loss at gamma = 1 sits close to an exceptional point
    with pytest.warns(ExceptionalPointWarning):
        spec = eigendecompose(build_finite_hamiltonian(ImaginaryOnsite(1.0, 1.0), 100))
    assert spec.near_exceptional


def test_supercritical_bound_state(spectrum800):
    spec = spectrum800(1.8)
    bound = detect_bound_states(spec)
    assert len(bound) == 1
    b = bound[0]
    assert b.energy.imag == pytest.approx(0.6550510257, abs=1e-8)
    assert abs(b.energy.real) < 1e-8
    assert b.alpha == pytest.approx(0.3219355876, abs=1e-6)
    assert b.fit_r2 > 0.999
    assert b.participation_ratio < 10
    assert b.center_site in (0, 1)


def test_subcritical_spectrum_has_no_bound_state(spectrum800):
    spec = spectrum800(1.2)
    assert detect_bound_states(spec) == []
    assert spec.eigenvalues.imag.max() < 0.01
    # extended states occupy a large part of the chain
    mid = len(spec) // 2
    assert participation_ratio(spec.right[:, mid]) > 200


def test_unequal_hopping_bound_state():
    lat = LatticeSpec(400)
    spec = eigendecompose(build_finite_hamiltonian(UnequalHopping(-1.0, 1.5), lat), lat.sites)
    bound = detect_bound_states(spec)
    assert len(bound) == 1
    # Im k = ln(gamma^2 - 1) / 2 at Re k = pi/2, so Im E = 2 sinh(Im k)
    expected = 2.0 * math.sinh(0.5 * math.log(1.5**2 - 1.0))
    assert bound[0].energy.imag == pytest.approx(expected, abs=1e-8)


def test_bound_threshold_validation(spectrum800):
    with pytest.raises(ValueError):
        detect_bound_states(spectrum800(1.8), threshold=0.0)


def test_participation_ratio():
    assert participation_ratio(np.ones(50)) == pytest.approx(50.0)
    e = np.zeros(50)
    e[3] = 2.0
    assert participation_ratio(e) == pytest.approx(1.0)


def test_finite_size_scaling_hermitian_and_errors():
    table = finite_size_scaling(ImaginaryOnsite(), [20, 40, 60])
    assert table.exact_zero and table.exponent is None
    with pytest.raises(ValueError):
        finite_size_scaling(ImaginaryOnsite(), [20, 40])
    with pytest.raises(ValueError):
        finite_size_scaling(ImaginaryOnsite(), [40, 20, 60])


def test_supercritical_scaling_reports_bound_state():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = finite_size_scaling(ImaginaryOnsite(1.0, 1.8), [100, 200, 300])
    for b in table.bound_im:
        assert b.size == 1 and b[0] == pytest.approx(0.6550510257, abs=1e-6)
