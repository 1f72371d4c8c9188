"""Biorthogonal eigenanalysis of the finite non-Hermitian Hamiltonian."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._fitting import fit_exponential_tails, linear_fit
from ._validation import check_hamiltonian, check_states, check_times
from .errors import ExceptionalPointWarning, FitQualityError
from .model import CenterModel, LatticeSpec, build_finite_hamiltonian

DEFAULT_MAX_SIZE = 2000
DEFAULT_BOUND_THRESHOLD = 0.05


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    right: np.ndarray  # columns psi_n, unit norm
    left: np.ndarray  # columns phi_n, <phi_n|psi_n> = 1
    sites: np.ndarray
    min_overlap: float
    completeness_residual: float
    near_exceptional: bool

    def __len__(self):
        return self.eigenvalues.size


def participation_ratio(psi) -> float:
    """(sum |psi|^2)^2 / sum |psi|^4: about the number of occupied sites."""
    p = np.abs(psi) ** 2
    return float(p.sum() ** 2 / (p**2).sum())


def _default_sites(n):
    if n >= 4 and n % 2 == 0:
        return LatticeSpec(n).sites
    return np.arange(n)


class BiorthogonalSpectrum(TransformerMixin, BaseEstimator):
    """Right/left eigenpairs of a non-Hermitian matrix with <phi_n|psi_m> = delta_nm.

    ``fit`` diagonalizes; ``transform`` maps states to expansion coefficients
    c_n = <phi_n|x>; ``inverse_transform`` rebuilds states from coefficients;
    ``evolve`` applies exp(-iHt) through the eigenbasis.

    Parameters
    ----------
    max_size : int
        Largest accepted matrix dimension.
    ep_tol : float
        Flag the basis as near-exceptional when some |<phi_n|psi_n>| (both
        unit norm) falls below this.
    completeness_tol : float
        Also flag it when ||sum_n |psi_n><phi_n| - 1||_max exceeds this.
    """

    def __init__(self, max_size=DEFAULT_MAX_SIZE, ep_tol=1e-10, completeness_tol=1e-7):
        self.max_size = max_size
        self.ep_tol = ep_tol
        self.completeness_tol = completeness_tol

    def fit(self, H, y=None):
        H = check_hamiltonian(H, self.max_size)
        w, vl, vr = scipy.linalg.eig(H, left=True, right=True)
        order = np.lexsort((w.imag, w.real))
        w, vl, vr = w[order], vl[:, order], vr[:, order]
        vr = vr / np.linalg.norm(vr, axis=0)
        vl = vl / np.linalg.norm(vl, axis=0)
        overlap = np.einsum("ij,ij->j", vl.conj(), vr)
        self.min_overlap_ = float(np.abs(overlap).min())
        vl = vl / overlap.conj()
        self.eigenvalues_ = w
        self.right_vectors_ = vr
        self.left_vectors_ = vl
        self.completeness_residual_ = float(
            np.abs(vr @ vl.conj().T - np.eye(H.shape[0])).max()
        )
        self.near_exceptional_ = bool(
            self.min_overlap_ < self.ep_tol
            or self.completeness_residual_ > self.completeness_tol
        )
        self.n_features_in_ = H.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X, single = check_states(X, self.n_features_in_)
        C = X @ self.left_vectors_.conj()
        return C[0] if single else C

    def inverse_transform(self, C):
        check_is_fitted(self)
        C, single = check_states(C, self.n_features_in_)
        X = C @ self.right_vectors_.T
        return X[0] if single else X

    def evolve(self, psi0, times):
        """States exp(-iHt) psi0 at each time, shape (len(times), L)."""
        check_is_fitted(self)
        times = check_times(times)
        c = self.transform(np.asarray(psi0).ravel())
        phases = np.exp(-1j * np.outer(times, self.eigenvalues_))
        return (phases * c) @ self.right_vectors_.T


def eigendecompose(H, sites=None, max_size: int = DEFAULT_MAX_SIZE) -> SpectrumResult:
    """Full biorthonormalized eigendecomposition, eigenvalues sorted by (Re, Im).

    Warns with :class:`ExceptionalPointWarning` and sets ``near_exceptional``
    when the eigenbasis is too ill-conditioned for the biorthogonal expansion.
    """
    est = BiorthogonalSpectrum(max_size=max_size).fit(H)
    n = est.n_features_in_
    sites = _default_sites(n) if sites is None else np.asarray(sites)
    if est.near_exceptional_:
        warnings.warn(
            f"near an exceptional point: min |<phi|psi>| = {est.min_overlap_:.2e}, "
            f"completeness residual = {est.completeness_residual_:.2e}",
            ExceptionalPointWarning,
            stacklevel=2,
        )
    return SpectrumResult(
        est.eigenvalues_,
        est.right_vectors_,
        est.left_vectors_,
        sites,
        est.min_overlap_,
        est.completeness_residual_,
        est.near_exceptional_,
    )


@dataclass(frozen=True)
class BoundStateReport:
    index: int
    energy: complex
    center_site: int
    alpha: Optional[float]
    alpha_stderr: Optional[float]
    fit_r2: Optional[float]
    participation_ratio: float
    diagnostic: Optional[str] = None


def detect_bound_states(
    spec: SpectrumResult, threshold: float = DEFAULT_BOUND_THRESHOLD
) -> list[BoundStateReport]:
    """Isolated eigenstates with Im E > ``threshold``, each with a tail fit."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    reports = []
    for n in np.flatnonzero(spec.eigenvalues.imag > threshold):
        psi = spec.right[:, n]
        center = int(spec.sites[np.argmax(np.abs(psi))])
        alpha = stderr = r2 = None
        diagnostic = None
        try:
            alpha, stderr, r2 = fit_exponential_tails(spec.sites, psi)
        except FitQualityError as exc:
            diagnostic = str(exc)
        reports.append(
            BoundStateReport(
                int(n),
                complex(spec.eigenvalues[n]),
                center,
                alpha,
                stderr,
                r2,
                participation_ratio(psi),
                diagnostic,
            )
        )
    return reports


@dataclass
class ScalingTable:
    sizes: np.ndarray
    max_continuum_im: np.ndarray
    bound_im: list
    exponent: Optional[float]
    exponent_stderr: Optional[float]
    exact_zero: bool


def finite_size_scaling(
    model: CenterModel, sizes, threshold: float = DEFAULT_BOUND_THRESHOLD
) -> ScalingTable:
    """Max Im E of continuum states versus L, with a power-law exponent fit.

    States with Im E > ``threshold`` are treated as bound and reported
    separately.  If every continuum maximum is below 1e-12 in magnitude the
    spectrum is real and ``exact_zero`` is set instead of fitting.
    """
    sizes = np.asarray(sizes, dtype=int)
    if sizes.size < 3:
        raise ValueError("finite-size scaling needs at least 3 sizes")
    if (np.diff(sizes) <= 0).any():
        raise ValueError("sizes must be strictly ascending")
    max_im, bound = [], []
    for L in sizes:
        w = scipy.linalg.eigvals(build_finite_hamiltonian(model, LatticeSpec(int(L))))
        im = w.imag
        max_im.append(im[im <= threshold].max())
        bound.append(np.sort(im[im > threshold]))
    max_im = np.array(max_im)
    if (np.abs(max_im) < 1e-12).all():
        return ScalingTable(sizes, max_im, bound, None, None, True)
    if (max_im <= 0).any():
        return ScalingTable(sizes, max_im, bound, None, None, False)
    X = np.column_stack([np.log(sizes), np.ones(sizes.size)])
    fit = linear_fit(X, np.log(max_im))
    return ScalingTable(sizes, max_im, bound, fit.slope, fit.slope_stderr, False)
