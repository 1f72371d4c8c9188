"""Time-independent scattering amplitudes of the two-site center.

Conventions for a wave incident from the left::

    psi(j) = A e^{ikj} + B e^{-ikj}   (j <= -1)
    psi(j) = C e^{ikj}                (j >= 2)

with r_L = B/A, t_L = C/A.  For incidence from the right the left lead holds
B e^{-ikj}, the right lead C e^{ikj} + D e^{-ikj}, and r_R = C/D, t_R = B/D.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearSingularSystemError, SpectralSingularityError
from .model import CenterModel, ImaginaryOnsite, chain_hamiltonian, dispersion

#: |denominator| below this at real k is treated as a spectral singularity.
SINGULARITY_TOL = 1e-8
#: Default window size of the numeric oracle.
DEFAULT_WINDOW = 41


@dataclass(frozen=True)
class Coefficients:
    R_L: float
    T_L: float
    R_R: float
    T_R: float


@dataclass(frozen=True)
class Amplitudes:
    r_L: complex
    t_L: complex
    r_R: complex
    t_R: complex
    k: float

    def coefficients(self) -> Coefficients:
        return Coefficients(
            abs(self.r_L) ** 2, abs(self.t_L) ** 2, abs(self.r_R) ** 2, abs(self.t_R) ** 2
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.r_L, self.t_L, self.r_R, self.t_R])


def _check_k(k) -> float:
    k = float(k)
    if not 0.0 <= k <= np.pi:
        raise ValueError(f"wave number must lie in [0, pi], got {k}")
    return k


def scattering_denominator(model: CenterModel, k):
    """Common denominator of the four closed-form amplitudes."""
    z = np.exp(1j * np.asarray(k))
    if isinstance(model, ImaginaryOnsite):
        g0, g1 = model.gamma0, model.gamma1
        return g0 - g1 + 1j * g0 * g1 * z + 2.0 * np.sin(k)
    kappa_L, kappa_R = model.hoppings
    return 1.0 - kappa_L * kappa_R * z**2


def _band_edge_limit(model: CenterModel, k: float) -> Amplitudes:
    # 0/0 at k = 0 or pi happens only for a transparent center; take the k-limit.
    if isinstance(model, ImaginaryOnsite):
        return Amplitudes(0j, 1 + 0j, 0j, 1 + 0j, k)
    kappa_L, kappa_R = model.hoppings
    product = kappa_L * kappa_R
    return Amplitudes(0j, -kappa_R / product, 0j, -kappa_L / product, k)


def amplitudes_closed_form(model: CenterModel, k: float) -> Amplitudes:
    """Evaluate the analytic r_L, t_L, r_R, t_R at real wave number ``k``.

    Raises
    ------
    SpectralSingularityError
        If the denominator vanishes (|den| < 1e-8) at an interior ``k``.
    """
    k = _check_k(k)
    den = scattering_denominator(model, k)
    z = np.exp(1j * k)
    if abs(den) < SINGULARITY_TOL:
        if k in (0.0, np.pi):
            return _band_edge_limit(model, k)
        raise SpectralSingularityError(
            f"amplitudes divergent at real k = {k!r} (|denominator| = {abs(den):.3e})"
        )
    if isinstance(model, ImaginaryOnsite):
        g0, g1 = model.gamma0, model.gamma1
        t = 2.0 * np.sin(k) / den
        r_L = (-g0 + g1 * z**2 - 1j * g0 * g1 * z) / den
        r_R = (-g0 + g1 * z**-2 - 1j * g0 * g1 / z) / den
        return Amplitudes(complex(r_L), complex(t), complex(r_R), complex(t), k)
    kappa_L, kappa_R = model.hoppings
    product = kappa_L * kappa_R
    r_L = (product - 1.0) * z**2 / den
    t_L = kappa_R * (z**2 - 1.0) / den
    r_R = (product - 1.0) / den
    t_R = kappa_L * (z**2 - 1.0) / den
    return Amplitudes(complex(r_L), complex(t_L), complex(r_R), complex(t_R), k)


def amplitudes_numeric(
    model: CenterModel, k: float, window: int = DEFAULT_WINDOW, max_condition: float = 1e12
) -> Amplitudes:
    """Solve the scattering boundary-value problem by direct linear algebra.

    The lattice Schrodinger equation is imposed on every interior site of a
    finite window; the two outermost sites on each side are pinned to the
    incoming/outgoing plane-wave forms.  The unknowns are the window
    amplitudes plus the two outgoing amplitudes, so both incidence directions
    share one square system and differ only in the right-hand side.
    """
    k = _check_k(k)
    if window < 6:
        raise ValueError("window must hold at least 6 sites")
    j_min = -((window - 1) // 2)
    j_max = j_min + window - 1
    H = chain_hamiltonian(model, j_min, j_max)
    E = dispersion(k)
    n = window
    sites = np.arange(j_min, j_max + 1)
    A = np.zeros((n + 2, n + 2), dtype=complex)
    A[: n - 2, :n] = (H - E * np.eye(n))[1:-1]
    rhs = np.zeros((n + 2, 2), dtype=complex)
    out_left, out_right = n, n + 1
    for row, i in enumerate((0, 1)):
        j = sites[i]
        A[n - 2 + row, i] = 1.0
        A[n - 2 + row, out_left] = -np.exp(-1j * k * j)
        rhs[n - 2 + row, 0] = np.exp(1j * k * j)
    for row, i in enumerate((n - 1, n - 2)):
        j = sites[i]
        A[n + row, i] = 1.0
        A[n + row, out_right] = -np.exp(1j * k * j)
        rhs[n + row, 1] = np.exp(-1j * k * j)

    condition = np.linalg.cond(A)
    if not np.isfinite(condition) or condition > max_condition:
        raise NearSingularSystemError(
            f"scattering system near-singular at k = {k!r} (condition ~ {condition:.3e})",
            condition=condition,
        )
    sol = np.linalg.solve(A, rhs)
    r_L, t_L = sol[out_left, 0], sol[out_right, 0]
    t_R, r_R = sol[out_left, 1], sol[out_right, 1]
    return Amplitudes(complex(r_L), complex(t_L), complex(r_R), complex(t_R), k)


def s_matrix(model: CenterModel, k: float) -> np.ndarray:
    """2x2 S matrix ``[[r_L, t_R], [t_L, r_R]]``."""
    a = amplitudes_closed_form(model, k)
    return np.array([[a.r_L, a.t_R], [a.t_L, a.r_R]])


def coefficients_over_k(model: CenterModel, ks) -> np.ndarray:
    """Rows ``(k, R_L, T_L, R_R, T_R)``; NaN where the amplitudes diverge."""
    rows = []
    for k in np.asarray(ks, dtype=float):
        try:
            c = amplitudes_closed_form(model, k).coefficients()
            rows.append((k, c.R_L, c.T_L, c.R_R, c.T_R))
        except SpectralSingularityError:
            rows.append((k,) + (np.nan,) * 4)
    return np.array(rows, dtype=float).reshape(-1, 5)
