"""Wave-packet propagation on the finite lattice and the observables read from it."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._fitting import fit_exponential_tails, linear_fit
from ._validation import check_hamiltonian, check_times
from .errors import (
    ExceptionalPointError,
    FitQualityError,
    InstabilityError,
    NotLocalizedError,
)
from .model import LatticeSpec
from .spectrum import SpectrumResult

DEFAULT_DT = 0.01
DEFAULT_RECORD_EVERY = 1.0


@dataclass(frozen=True)
class WavePacket:
    j0: int
    sigma: float
    k: float
    sites: np.ndarray
    amplitudes: np.ndarray


def gaussian_packet(lattice, j0: int, sigma: float, k: float) -> WavePacket:
    """Normalized packet exp(-(j-j0)^2 / 2 sigma^2) exp(ikj)."""
    if not isinstance(lattice, LatticeSpec):
        lattice = LatticeSpec(lattice)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    sites = lattice.sites
    if not sites[0] <= j0 <= sites[-1]:
        raise ValueError(f"packet center j0={j0} lies outside the lattice [{sites[0]}, {sites[-1]}]")
    psi = np.exp(-((sites - j0) ** 2) / (2.0 * sigma**2)) * np.exp(1j * k * sites)
    psi /= np.linalg.norm(psi)
    tail = max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2)
    if tail > 1e-8:
        warnings.warn(f"packet intensity at the hard walls is {tail:.1e} (> 1e-8)", stacklevel=2)
    return WavePacket(int(j0), float(sigma), float(k), sites, psi)


@dataclass
class EvolutionResult:
    times: np.ndarray
    snapshots: np.ndarray  # (n_times, L)
    sites: np.ndarray

    @property
    def intensity(self) -> np.ndarray:
        # super-critical runs can legitimately overflow to inf
        with np.errstate(over="ignore"):
            return np.abs(self.snapshots) ** 2

    @property
    def total_intensity(self) -> np.ndarray:
        return self.intensity.sum(axis=1)

    @property
    def R_L(self) -> np.ndarray:
        return self.intensity[:, self.sites <= -1].sum(axis=1)

    @property
    def T_L(self) -> np.ndarray:
        return self.intensity[:, self.sites >= 2].sum(axis=1)

    @property
    def center_intensity(self) -> np.ndarray:
        return self.intensity[:, (self.sites == 0) | (self.sites == 1)].sum(axis=1)

    def time_index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(f"t = {t} is not a recorded time")
        return i

    def snapshot(self, t: float) -> np.ndarray:
        return self.snapshots[self.time_index(t)]


def propagate_eigen(spec: SpectrumResult, packet: WavePacket, times) -> EvolutionResult:
    """|Psi(t)> = sum_n <phi_n|Psi(0)> e^{-i E_n t} |psi_n>."""
    if spec.near_exceptional:
        raise ExceptionalPointError(
            "eigenbasis is near an exceptional point; use propagate_stepper instead"
        )
    times = check_times(times)
    psi0 = packet.amplitudes
    c = spec.left.conj().T @ psi0
    with np.errstate(over="ignore", invalid="ignore"):
        phases = np.exp(-1j * np.outer(times, spec.eigenvalues))
        snapshots = (phases * c) @ spec.right.T
    snapshots[times == 0] = psi0
    return EvolutionResult(times, snapshots, spec.sites)


def _bands(H: np.ndarray):
    diag = np.diag(H).copy()
    upper = np.diag(H, 1).copy()
    lower = np.diag(H, -1).copy()
    band = np.diag(diag) + np.diag(upper, 1) + np.diag(lower, -1)
    if np.any(H != band):
        raise ValueError("Hamiltonian is not tridiagonal")
    return diag, upper, lower


def max_imag_estimate(H: np.ndarray) -> float:
    """Gershgorin bound on |Im E| from the anti-Hermitian part of H."""
    A = (H - H.conj().T) / 2.0
    return float(np.abs(A).sum(axis=1).max())


def _rk4_run(bands, psi, dt, record_times, hermitian):
    diag, upper, lower = bands

    def rhs(v):
        out = diag * v
        out[:-1] += upper * v[1:]
        out[1:] += lower * v[:-1]
        return -1j * out

    snaps = np.empty((len(record_times), psi.size), dtype=complex)
    t = 0.0
    norm = np.linalg.norm(psi)
    for r, t_rec in enumerate(record_times):
        n = int(math.ceil((t_rec - t) / dt - 1e-9))
        h = (t_rec - t) / n if n else 0.0
        for _ in range(n):
            k1 = rhs(psi)
            k2 = rhs(psi + 0.5 * h * k1)
            k3 = rhs(psi + 0.5 * h * k2)
            k4 = rhs(psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if hermitian:
                new_norm = np.linalg.norm(psi)
                if not new_norm <= 10.0 * norm:
                    raise InstabilityError(
                        f"norm jumped from {norm:.3e} to {new_norm:.3e} in one step of "
                        f"dt = {h:g}; reduce the step size"
                    )
                norm = new_norm
        t = t_rec
        snaps[r] = psi
    return snaps


def choose_dt(
    H, packet: WavePacket, dt: float = DEFAULT_DT, tol: float = 1e-8, t_probe: float = 2.0,
    min_dt: float = 1e-5,
) -> float:
    """Halve ``dt`` until a probe run agrees with its half-step refinement to ``tol``."""
    H = check_hamiltonian(H)
    bands = _bands(H)
    while dt >= min_dt:
        coarse = _rk4_run(bands, packet.amplitudes, dt, [t_probe], False)[0]
        fine = _rk4_run(bands, packet.amplitudes, dt / 2, [t_probe], False)[0]
        if np.abs(coarse - fine).max() <= tol * np.abs(fine).max():
            return dt
        dt /= 2
    raise InstabilityError(f"no step size above {min_dt} met the refinement tolerance {tol}")


def propagate_stepper(
    H,
    packet: WavePacket,
    dt: Optional[float] = None,
    t_end: float = 0.0,
    record_every: float = DEFAULT_RECORD_EVERY,
    times=None,
) -> EvolutionResult:
    """Classical RK4 integration of i dPsi/dt = H Psi on the tridiagonal band.

    Snapshots are taken at ``times`` if given, otherwise every ``record_every``
    up to ``t_end`` (inclusive).  With ``dt=None`` the step is chosen by
    :func:`choose_dt`.  Each recording interval is split into equal sub-steps
    no longer than ``dt``.
    """
    H = check_hamiltonian(H)
    if times is None:
        if t_end < 0:
            raise ValueError("t_end must be non-negative")
        n = int(math.floor(t_end / record_every + 1e-9))
        times = record_every * np.arange(n + 1)
        if not math.isclose(times[-1], t_end, abs_tol=1e-9):
            times = np.append(times, t_end)
    times = check_times(times)
    limit = 0.05 / (2.0 + max_imag_estimate(H))
    if dt is None:
        dt = choose_dt(H, packet, dt=min(DEFAULT_DT, limit))
    if not 0 < dt <= limit:
        raise ValueError(f"dt = {dt} violates the stability bound dt <= {limit:.4g}")
    hermitian = bool(np.all(H == H.conj().T))
    snaps = _rk4_run(_bands(H), packet.amplitudes.copy(), dt, times, hermitian)
    snaps[times == 0] = packet.amplitudes
    return EvolutionResult(times, snaps, packet.sites)


@dataclass(frozen=True)
class LeadIntensities:
    R_L: float
    T_L: float
    center: float


def extract_RT(result: EvolutionResult, t: float) -> LeadIntensities:
    """Lead sums R_L = sum_{j<=-1} |Psi_j|^2, T_L = sum_{j>=2} |Psi_j|^2 at recorded time ``t``.

    ``center`` is the intensity left on sites 0 and 1, a diagnostic for
    whether reflected and transmitted parts have separated.
    """
    i = result.time_index(t)
    return LeadIntensities(
        float(result.R_L[i]), float(result.T_L[i]), float(result.center_intensity[i])
    )


def separation_time(result: EvolutionResult, fraction: float = 1e-4) -> Optional[float]:
    """First recorded time after the packet hits the center at which the
    center intensity drops below ``fraction`` of the total."""
    center = result.center_intensity
    peak = int(np.argmax(center))
    ok = np.flatnonzero(center[peak:] < fraction * result.total_intensity[peak:])
    return float(result.times[peak + ok[0]]) if ok.size else None


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    stderr: float
    r2: float


def fit_growth_rate(result: EvolutionResult, window=None, min_r2: float = 0.999) -> GrowthFit:
    """Fit total intensity ~ C exp(2 Gamma t) over ``window`` and return Gamma.

    The default window is the last 40% of the recorded run.
    """
    t = result.times
    if window is None:
        window = (0.6 * t[-1], t[-1])
    lo, hi = window
    if lo < t[0] - 1e-9 or hi > t[-1] + 1e-9 or lo >= hi:
        raise ValueError(f"window {window} is not inside the recorded times")
    mask = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    intensity = result.total_intensity[mask]
    if (intensity <= 0).any() or not np.isfinite(intensity).all():
        raise FitQualityError("total intensity must be positive and finite in the window")
    X = np.column_stack([t[mask], np.ones(mask.sum())])
    fit = linear_fit(X, np.log(intensity))
    if fit.r2 < min_r2:
        raise FitQualityError(f"log-intensity is not linear in the window (R^2 = {fit.r2:.5f})")
    return GrowthFit(0.5 * fit.slope, 0.5 * fit.slope_stderr, fit.r2)


@dataclass(frozen=True)
class DecayFit:
    alpha: float
    stderr: float
    r2: float


def fit_spatial_decay(snapshot, sites) -> DecayFit:
    """Fit |Psi_j|^2 ~ C exp(-2 alpha |j|) around the center.

    Requires the center intensity to be at least 10x the intensity at the
    lattice edges; otherwise :class:`NotLocalizedError`.
    """
    snapshot = np.asarray(snapshot)
    sites = np.asarray(sites)
    intensity = np.abs(snapshot) ** 2
    center = intensity[(sites == 0) | (sites == 1)].max()
    edge = max(intensity[0], intensity[-1])
    if not center >= 10.0 * edge or center == 0:
        raise NotLocalizedError("profile not localized at the scattering center")
    alpha, stderr, r2 = fit_exponential_tails(sites, snapshot)
    return DecayFit(alpha, stderr, r2)


def probability_current(snapshot, j, sites=None):
    """Bond current J(j) = i [psi*(j+1) psi(j) - psi(j+1) psi*(j)].

    ``j`` is a site label when ``sites`` is given, otherwise an array index.
    """
    snapshot = np.asarray(snapshot)
    idx = np.asarray(j)
    if sites is not None:
        idx = idx - np.asarray(sites)[0]
    if np.any(idx < 0) or np.any(idx + 1 >= snapshot.size):
        raise IndexError("both j and j+1 must lie on the lattice")
    a, b = snapshot[idx], snapshot[idx + 1]
    return -2.0 * np.imag(np.conj(b) * a)
