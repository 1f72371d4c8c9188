import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nhscatter.errors import DegreeCollapseWarning, NoCriticalPointError, PolesAtInfinityError
from nhscatter.model import (
    AntiHermitianHopping,
    ComplexHopping,
    ImaginaryCoupling,
    ImaginaryOnsite,
    UnequalHopping,
)
from nhscatter.poles import (
    Pole,
    PoleKind,
    classify,
    critical_gamma,
    match_poles,
    normalize_k,
    pole_equation_value,
    pole_trajectory,
    solve_poles,
    solve_poles_analytic,
    solve_poles_numeric,
    validity_verdict,
)

K2_IM = -math.log((-1.0 + math.sqrt(6.0)) / 2.0)


def _ks(poles):
    return np.array([p.k for p in poles])


def test_supercritical_growing_pole():
    poles = solve_poles(ImaginaryOnsite(1.0, 1.8))
    growing = [p for p in poles if p.kind is PoleKind.GROWING_BOUND]
    assert len(growing) == 1
    p = growing[0]
    assert p.k == pytest.approx(complex(np.pi / 2, K2_IM), abs=1e-14)
    assert p.k.imag == pytest.approx(0.3219355876, abs=1e-10)
    assert p.E == pytest.approx(0.6550510257j, abs=1e-10)


def test_subcritical_poles_outside_first_quadrant():
    poles = solve_poles(ImaginaryOnsite(1.0, 1.2))
    assert not any(p.in_first_quadrant for p in poles)
    assert validity_verdict(ImaginaryOnsite(1.0, 1.2)).valid


def test_gain_free_poles_are_virtual():
    ks = _ks(solve_poles(ImaginaryOnsite(1.0, 0.0)))
    np.testing.assert_allclose(ks, [-5 * np.pi / 6, -np.pi / 6], atol=1e-14)
    assert {p.kind for p in solve_poles(ImaginaryOnsite(1.0, 0.0))} == {PoleKind.REAL_AXIS_VIRTUAL}


def test_degenerate_point_has_poles_at_infinity():
    with pytest.raises(PolesAtInfinityError):
        solve_poles_analytic(ImaginaryOnsite(1.0, 1.0))
    # gamma0 = gamma1 = 1: the z-polynomial collapses to a constant
    with pytest.warns(DegreeCollapseWarning):
        poles = solve_poles_numeric(ImaginaryOnsite(1.0, 1.0))
    assert poles == []
    with pytest.raises(PolesAtInfinityError):
        solve_poles(ImaginaryCoupling(gamma=0.0))


@st.composite
def models(draw):
    family = draw(st.integers(0, 4))
    g = draw(st.floats(0.0, 3.0))
    return [
        ImaginaryOnsite(1.0, g),
        UnequalHopping(-1.0, g),
        ComplexHopping(-1.0, g),
        AntiHermitianHopping(-1.0, g),
        ImaginaryCoupling(gamma=g),
    ][family]


def _near_degenerate(model):
    if isinstance(model, ImaginaryOnsite):
        return abs(model.gamma1 - 1.0) < 1e-3
    if isinstance(model, (UnequalHopping, ImaginaryCoupling)):
        return abs(abs(model.gamma) - 1.0) < 1e-3 or abs(model.gamma) < 1e-3
    return False


@settings(max_examples=200, deadline=None)
@given(model=models())
def test_analytic_matches_numeric(model):
    if _near_degenerate(model):
        return
    a = _ks(solve_poles_analytic(model))
    n = _ks(solve_poles_numeric(model))
    assert a.size == n.size == 2
    # compare as sets, modulo 2 pi in Re k
    for k in a:
        d = np.abs(np.remainder(n.real - k.real + np.pi, 2 * np.pi) - np.pi) + np.abs(n.imag - k.imag)
        assert d.min() < 1e-9


@settings(max_examples=200, deadline=None)
@given(model=models())
def test_pole_residuals_and_energy_identity(model):
    if _near_degenerate(model):
        return  # poles run off to -i infinity
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegreeCollapseWarning)
            poles = solve_poles(model)
    except PolesAtInfinityError:
        return
    for p in poles:
        assert abs(pole_equation_value(model, p.k)) <= 1e-10
        ident = 2.0 * math.sin(p.k.real) * math.sinh(p.k.imag)
        assert abs(p.E.imag - ident) <= 1e-12 * max(1.0, abs(ident))


@pytest.mark.parametrize(
    "k, kind",
    [
        (complex(1.0, 0.5), PoleKind.GROWING_BOUND),
        (complex(-1.0, 0.5), PoleKind.DECAYING_BOUND),
        (complex(-1.0, -0.5), PoleKind.ANTIRESONANT),
        (complex(1.0, -0.5), PoleKind.RESONANT),
        (complex(1.0, 0.0), PoleKind.SPECTRAL_SINGULARITY),
        (complex(-1.0, 0.0), PoleKind.REAL_AXIS_VIRTUAL),
        (complex(0.0, -0.3), PoleKind.REAL_AXIS_VIRTUAL),
        (complex(np.pi, 0.3), PoleKind.REAL_BOUND),
        (complex(0.0, 0.3), PoleKind.REAL_BOUND),
    ],
)
def test_classify(k, kind):
    assert classify(k) is kind


def test_normalize_k_branch():
    assert normalize_k(-np.pi) == complex(np.pi, 0)
    assert normalize_k(3 * np.pi / 2 + 0.1j) == pytest.approx(complex(-np.pi / 2, 0.1))
    assert normalize_k(0.5) == 0.5


@pytest.mark.parametrize(
    "model, expected",
    [
        (ImaginaryOnsite(1.0), 1.5),
        (UnequalHopping(-1.0), math.sqrt(2.0)),
        (ComplexHopping(-1.0), 0.0),
        (AntiHermitianHopping(-1.0), 0.0),
        (ImaginaryCoupling(), 1.0),
    ],
)
def test_critical_values(model, expected):
    assert critical_gamma(model) == pytest.approx(expected, abs=1e-8)


def test_zero_threshold_is_immediate():
    for model in (ComplexHopping(-1.0, 1e-9), AntiHermitianHopping(-1.0, 1e-9)):
        assert any(p.in_first_quadrant for p in solve_poles(model))
        assert not validity_verdict(model).valid


def test_no_critical_point_in_range():
    with pytest.raises(NoCriticalPointError):
        critical_gamma(ImaginaryOnsite(1.0), stop=1.4)


def test_verdicts():
    at_critical = validity_verdict(ImaginaryOnsite(1.0, 1.5))
    assert not at_critical.valid
    assert [p.kind for p in at_critical.offending_poles] == [PoleKind.SPECTRAL_SINGULARITY]
    assert at_critical.n_growing == 0
    above = validity_verdict(ImaginaryOnsite(1.0, 1.8))
    assert not above.valid and above.n_growing == 1
    assert above.gamma_margin == pytest.approx(0.3, abs=1e-8)
    below = validity_verdict(ImaginaryOnsite(1.0, 1.2))
    assert below.valid and below.gamma_margin == pytest.approx(-0.3, abs=1e-8)


def test_trajectory_labels_are_continuous():
    # start above gamma1 = 1, where both poles pass through -i infinity
    grid = np.linspace(1.05, 3.0, 196)
    traj = pole_trajectory(ImaginaryOnsite(1.0), grid)
    rows = list(traj.rows())
    assert {r[1] for r in rows} == {0, 1}
    # each label moves continuously between consecutive grid points (mod 2 pi)
    for label in (0, 1):
        ks = np.array([complex(r[2], r[3]) for r in rows if r[1] == label])
        jumps = np.abs(np.remainder(np.diff(ks.real) + np.pi, 2 * np.pi) - np.pi)
        jumps = jumps[np.isfinite(jumps)]
        assert jumps.max() < 0.5
    # the growing pole appears after gamma1 = 1.5
    growing = {r[0] for r in rows if r[6] == "GrowingBound"}
    assert min(growing) > 1.5


def test_trajectory_rejects_empty_grid():
    with pytest.raises(ValueError):
        pole_trajectory(UnequalHopping(-1.0), [])


def test_match_poles_across_branch_cut():
    prev = [(0, Pole(complex(np.pi - 0.01, 0.1))), (1, Pole(complex(0.5, -0.2)))]
    cur = [Pole(complex(0.5, -0.21)), Pole(complex(-np.pi + 0.01, 0.1))]
    labelled, nxt = match_poles(prev, cur, 2)
    assert nxt == 2
    assert dict((lab, p.k) for lab, p in labelled)[0] == cur[1].k
