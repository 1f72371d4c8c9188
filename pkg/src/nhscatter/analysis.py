"""Experiment drivers: TI-vs-TD sweeps and the table of critical values."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import extract_RT, gaussian_packet, propagate_eigen, propagate_stepper
from .errors import ExceptionalPointWarning, NHScatterError, SpectralSingularityError
from .model import (
    AntiHermitianHopping,
    CenterModel,
    ComplexHopping,
    ImaginaryCoupling,
    ImaginaryOnsite,
    LatticeSpec,
    UnequalHopping,
    build_finite_hamiltonian,
    with_parameter,
)
from .poles import critical_gamma, solve_poles, validity_verdict
from .scattering import amplitudes_closed_form
from .spectrum import eigendecompose

#: Relative TI/TD deviation above which a sweep point counts as diverged.
DIVERGENCE_THRESHOLD = 0.10


@dataclass(frozen=True)
class PacketConfig:
    """Wave-packet experiment settings; the defaults are the reduced L=400 sweep."""

    L: int = 400
    j0: int = -100
    sigma: float = 20.0
    k: float = np.pi / 3
    t_extract: float = 120.0
    propagator: str = "eigen"
    dt: Optional[float] = None


#: Full-size packet: L=800, j0=-200, sigma=40, extraction at t=240.
REFERENCE_PACKET = PacketConfig(L=800, j0=-200, sigma=40.0, k=np.pi / 3, t_extract=240.0)


@dataclass
class SweepRow:
    param: float
    R_L_ti: float
    T_L_ti: float
    R_L_td: float
    T_L_td: float
    valid: bool
    n_growing_poles: int
    diverged: bool
    error: Optional[str] = None

    def csv_row(self):
        return (
            self.param,
            self.R_L_ti,
            self.T_L_ti,
            self.R_L_td,
            self.T_L_td,
            self.valid,
            self.n_growing_poles,
            self.diverged,
        )


SWEEP_COLUMNS = ("param", "R_L_ti", "T_L_ti", "R_L_td", "T_L_td", "valid", "n_growing_poles", "diverged")


@dataclass
class SweepReport:
    family: str
    parameter: str
    rows: list = field(default_factory=list)

    @property
    def grid(self):
        return np.array([r.param for r in self.rows])


def _relative_deviation(td, ti, scale):
    # deviations are measured against max(|ti|, 1e-4 * (R_ti + T_ti)) so an
    # exactly vanishing TI coefficient does not turn round-off into "divergence"
    if not (math.isfinite(td) and math.isfinite(ti)):
        return math.inf
    return abs(td - ti) / max(abs(ti), 1e-4 * scale)


def td_coefficients(model: CenterModel, packet: PacketConfig):
    """(R_L, T_L) from a wave-packet run, falling back to the stepper near an EP."""
    lattice = LatticeSpec(packet.L)
    H = build_finite_hamiltonian(model, lattice)
    psi = gaussian_packet(lattice, packet.j0, packet.sigma, packet.k)
    times = [0.0, packet.t_extract]
    if packet.propagator == "eigen":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExceptionalPointWarning)
            spec = eigendecompose(H, lattice.sites)
        if not spec.near_exceptional:
            result = propagate_eigen(spec, psi, times)
            rt = extract_RT(result, packet.t_extract)
            return rt.R_L, rt.T_L
    elif packet.propagator != "stepper":
        raise ValueError(f"unknown propagator {packet.propagator!r}")
    result = propagate_stepper(H, psi, dt=packet.dt, times=times)
    rt = extract_RT(result, packet.t_extract)
    return rt.R_L, rt.T_L


def _sweep_point(model: CenterModel, parameter: str, value: float, packet: PacketConfig):
    m = with_parameter(model, parameter, value)
    errors = []
    try:
        c = amplitudes_closed_form(m, packet.k).coefficients()
        R_ti, T_ti = c.R_L, c.T_L
    except SpectralSingularityError as exc:
        R_ti = T_ti = math.nan
        errors.append(str(exc))
    verdict = validity_verdict(m)
    try:
        R_td, T_td = td_coefficients(m, packet)
    except (NHScatterError, ValueError, np.linalg.LinAlgError) as exc:
        R_td = T_td = math.nan
        errors.append(str(exc))
    scale = abs(R_ti) + abs(T_ti)
    deviation = max(
        _relative_deviation(R_td, R_ti, scale), _relative_deviation(T_td, T_ti, scale)
    )
    return SweepRow(
        float(value),
        R_ti,
        T_ti,
        R_td,
        T_td,
        verdict.valid,
        verdict.n_growing,
        (not verdict.valid) or deviation > DIVERGENCE_THRESHOLD,
        "; ".join(errors) or None,
    )


def sweep_ti_vs_td(
    model: CenterModel,
    grid,
    packet: PacketConfig = PacketConfig(),
    parameter: Optional[str] = None,
    threads: int = 1,
) -> SweepReport:
    """Compare closed-form and wave-packet R_L, T_L across a parameter grid.

    Failures at a grid point are recorded in that row (``error``, NaN values)
    instead of aborting the sweep.  Rows keep the grid order regardless of
    ``threads``.
    """
    parameter = parameter or model.sweep_parameter
    grid = [float(v) for v in np.asarray(grid, dtype=float).ravel()]
    if not grid:
        raise ValueError("empty sweep grid")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda v: _sweep_point(model, parameter, v, packet), grid))
    else:
        rows = [_sweep_point(model, parameter, v, packet) for v in grid]
    return SweepReport(model.family, parameter, rows)


@dataclass(frozen=True)
class CriticalRow:
    label: str
    model: CenterModel
    gamma_c: float
    reference: float
    zero_threshold: bool
    first_quadrant_at_1e9: Optional[bool]


#: The five reference configurations and their known critical values.
REFERENCE_MODELS = (
    ("ImaginaryOnsite(gamma0=1)", ImaginaryOnsite(gamma0=1.0), 1.5),
    ("UnequalHopping(kappa=-1)", UnequalHopping(kappa=-1.0), math.sqrt(2.0)),
    ("ComplexHopping(kappa=-1)", ComplexHopping(kappa=-1.0), 0.0),
    ("AntiHermitianHopping(kappa=-1)", AntiHermitianHopping(kappa=-1.0), 0.0),
    ("ImaginaryCoupling", ImaginaryCoupling(), 1.0),
)


def critical_table(xtol: float = 1e-13) -> list[CriticalRow]:
    """Critical values of the five reference models, each found by bisection.

    For zero-threshold models the row also records whether a pole sits
    strictly in the first quadrant at gamma = 1e-9.
    """
    rows = []
    for label, model, reference in REFERENCE_MODELS:
        gc = critical_gamma(model, xtol=xtol)
        zero = gc < 1e-8
        probe = None
        if zero:
            m = with_parameter(model, model.sweep_parameter, 1e-9)
            probe = any(p.in_first_quadrant for p in solve_poles(m))
        rows.append(CriticalRow(label, model, gc, reference, zero, probe))
    return rows
