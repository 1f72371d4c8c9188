"""S-matrix poles in the strip -pi < Re k <= pi.

Poles are the zeros of the common amplitude denominator.  With z = e^{ik}
every model reduces to a quadratic in z; ``solve_poles_numeric`` finds its
roots through companion-matrix eigenvalues, ``solve_poles_analytic`` uses the
branch formulas.  The two are kept independent and cross-checked in tests.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegreeCollapseWarning, NoCriticalPointError, PolesAtInfinityError
from .model import (
    AntiHermitianHopping,
    CenterModel,
    ComplexHopping,
    ImaginaryCoupling,
    ImaginaryOnsite,
    UnequalHopping,
    with_parameter,
)

#: |Im k| below this counts as "on the real axis".
AXIS_TOL = 1e-9
#: Re k within this of -pi is folded onto +pi.
BRANCH_TIE_TOL = 1e-12


class PoleKind(enum.Enum):
    GROWING_BOUND = "GrowingBound"
    DECAYING_BOUND = "DecayingBound"
    ANTIRESONANT = "Antiresonant"
    RESONANT = "Resonant"
    SPECTRAL_SINGULARITY = "SpectralSingularity"
    REAL_AXIS_VIRTUAL = "RealAxisVirtual"
    # k on Re k = 0 or pi with Im k > 0: normalizable, real energy outside the band
    REAL_BOUND = "RealBound"


def classify(k: complex, tol: float = AXIS_TOL) -> PoleKind:
    """Quadrant classification of a pole.

    Poles with Re k at 0 or pi (within ``tol``) have real energy and are never
    counted as growing; a real pole strictly inside (0, pi) is a spectral
    singularity.
    """
    kr, ki = k.real, k.imag
    on_imag_axis = abs(kr) < tol or abs(kr) > np.pi - tol
    if abs(ki) < tol:
        if tol <= kr <= np.pi - tol:
            return PoleKind.SPECTRAL_SINGULARITY
        return PoleKind.REAL_AXIS_VIRTUAL
    if on_imag_axis:
        return PoleKind.REAL_BOUND if ki > 0 else PoleKind.REAL_AXIS_VIRTUAL
    if ki > 0:
        return PoleKind.GROWING_BOUND if kr > 0 else PoleKind.DECAYING_BOUND
    return PoleKind.RESONANT if kr > 0 else PoleKind.ANTIRESONANT


@dataclass(frozen=True)
class Pole:
    k: complex

    @property
    def E(self) -> complex:
        return complex(-2.0 * np.cos(self.k))

    @property
    def kind(self) -> PoleKind:
        return classify(self.k)

    @property
    def in_first_quadrant(self) -> bool:
        """Strict test 0 < Re k < pi, Im k > 0, with no tolerance band."""
        return 0.0 < self.k.real < np.pi and self.k.imag > 0.0


def normalize_k(k) -> complex:
    """Fold ``k`` into the strip -pi < Re k <= pi."""
    k = complex(k)
    kr = math.remainder(k.real, 2 * np.pi)
    if kr <= -np.pi + BRANCH_TIE_TOL:
        kr += 2 * np.pi
    return complex(kr, k.imag)


def pole_equation_value(model: CenterModel, k):
    """Pole denominator at complex ``k`` (zero exactly at the poles)."""
    k = np.asarray(k, dtype=complex)
    if isinstance(model, ImaginaryOnsite):
        g0, g1 = model.gamma0, model.gamma1
        return g0 - g1 + 1j * g0 * g1 * np.exp(1j * k) + 2.0 * np.sin(k)
    kappa_L, kappa_R = model.hoppings
    return 1.0 - kappa_L * kappa_R * np.exp(2j * k)


def pole_polynomial(model: CenterModel) -> np.ndarray:
    """Coefficients (highest power first) of the pole equation as a polynomial in z."""
    if isinstance(model, ImaginaryOnsite):
        g0, g1 = model.gamma0, model.gamma1
        # z * (equation) * (-i), using 2 sin k = -i (z - 1/z)
        return np.array([g0 * g1 - 1.0, -1j * (g0 - g1), 1.0], dtype=complex)
    kappa_L, kappa_R = model.hoppings
    return np.array([-kappa_L * kappa_R, 0.0, 1.0], dtype=complex)


def _sorted(poles):
    return sorted(poles, key=lambda p: (p.k.real, p.k.imag))


def solve_poles_numeric(model: CenterModel, rtol: float = 1e-13) -> list[Pole]:
    """All poles from the companion-matrix roots of the z-polynomial."""
    coeffs = pole_polynomial(model)
    degree = len(coeffs) - 1
    scale = np.abs(coeffs).max()
    lead = 0
    while lead < len(coeffs) - 1 and abs(coeffs[lead]) <= rtol * scale:
        lead += 1
    if lead:
        warnings.warn(
            f"pole polynomial degree dropped from {degree} to {degree - lead}; "
            f"{lead} pole(s) at infinity",
            DegreeCollapseWarning,
            stacklevel=2,
        )
    roots = np.roots(coeffs[lead:])
    roots = roots[np.abs(roots) > 0]
    return _sorted(Pole(normalize_k(-1j * np.log(z))) for z in roots)


def _onsite_analytic(gamma1: float) -> list[complex]:
    if gamma1 == 1.0:
        raise PolesAtInfinityError("gamma0 = gamma1 = 1: both poles move to -i*infinity")
    if gamma1 < 1.0:
        a = math.asin(math.sqrt(1.0 - gamma1) / 2.0)
        im = 0.5 * math.log1p(-gamma1)
        return [complex(-np.pi + a, im), complex(-a, im)]
    s = math.sqrt((gamma1 + 3.0) / (gamma1 - 1.0))
    return [
        complex(-np.pi / 2, -math.log(0.5 * (1.0 + s))),
        complex(np.pi / 2, -math.log(0.5 * (-1.0 + s))),
    ]


def _hopping_analytic(model) -> list[complex]:
    g = model.gamma
    if isinstance(model, ImaginaryCoupling):
        if g == 0:
            raise PolesAtInfinityError("gamma = 0: both poles at +-pi/2 - i*infinity")
        im = math.log(abs(g))
        return [complex(-np.pi / 2, im), complex(np.pi / 2, im)]
    if model.kappa == -1.0:
        if isinstance(model, UnequalHopping):
            if abs(g) == 1.0:
                raise PolesAtInfinityError("|gamma| = 1: both poles at -i*infinity")
            if abs(g) < 1.0:
                im = 0.5 * math.log1p(-g * g)
                return [complex(0.0, im), complex(np.pi, im)]
            im = 0.5 * math.log(g * g - 1.0)
            return [complex(-np.pi / 2, im), complex(np.pi / 2, im)]
        if isinstance(model, ComplexHopping):
            a, im = math.atan(g), 0.5 * math.log1p(g * g)
            return [complex(-np.pi + a, im), complex(a, im)]
        if isinstance(model, AntiHermitianHopping):
            im = 0.5 * math.log1p(g * g)
            return [complex(-np.pi / 2, im), complex(np.pi / 2, im)]
    # generic kappa: e^{2ik} = 1/(kappa_L kappa_R)  =>  k = (i/2) Log(kappa_L kappa_R) + {0, pi}
    kappa_L, kappa_R = model.hoppings
    product = kappa_L * kappa_R
    if product == 0:
        raise PolesAtInfinityError("kappa_L * kappa_R = 0: poles at -i*infinity")
    k0 = 0.5j * np.log(product)
    return [k0, k0 + np.pi]


def solve_poles_analytic(model: CenterModel) -> list[Pole]:
    """Poles from the closed-form branch formulas.

    ``ImaginaryOnsite`` has closed forms only for gamma0 = 1 (and gamma1 >= 0);
    other parameter points are delegated to :func:`solve_poles_numeric`.

    Raises
    ------
    PolesAtInfinityError
        At parameter points where the pole polynomial degenerates.
    """
    if isinstance(model, ImaginaryOnsite):
        if model.gamma0 != 1.0 or model.gamma1 < 0:
            return solve_poles_numeric(model)
        ks = _onsite_analytic(model.gamma1)
    else:
        ks = _hopping_analytic(model)
    return _sorted(Pole(normalize_k(k)) for k in ks)


def has_analytic_poles(model: CenterModel) -> bool:
    return not isinstance(model, ImaginaryOnsite) or (
        model.gamma0 == 1.0 and model.gamma1 >= 0
    )


def solve_poles(model: CenterModel) -> list[Pole]:
    """Analytic poles where closed forms exist, numeric otherwise."""
    return solve_poles_analytic(model)


def _first_quadrant_reach(model: CenterModel) -> float:
    """max Im k over poles with 0 < Re k < pi; -inf if there are none."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegreeCollapseWarning)
            poles = solve_poles(model)
    except PolesAtInfinityError:
        return -math.inf
    eligible = [p.k.imag for p in poles if 0.0 < p.k.real < np.pi]
    return max(eligible, default=-math.inf)


def critical_gamma(
    model: CenterModel,
    parameter: Optional[str] = None,
    start: float = 0.0,
    stop: float = 5.0,
    step: float = 0.01,
    xtol: float = 1e-13,
) -> float:
    """Smallest swept parameter value at which a pole enters the open first quadrant.

    The sweep grid ``start..stop`` is scanned for the first point with a pole
    at Im k > 0, 0 < Re k < pi; the crossing is then bracketed and bisected
    down to ``xtol``.  Returns ``start`` if the model is already critical there.
    """
    parameter = parameter or model.sweep_parameter

    def entered(value):
        return _first_quadrant_reach(with_parameter(model, parameter, value)) > 0.0

    n = int(round((stop - start) / step)) + 1
    grid = start + step * np.arange(n)
    if entered(grid[0]):
        return float(grid[0])
    for lo, hi in zip(grid[:-1], grid[1:]):
        if entered(hi):
            break
    else:
        raise NoCriticalPointError(
            f"no critical point in range [{start}, {stop}] for {model.family}.{parameter}"
        )
    lo, hi = float(lo), float(hi)
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if entered(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class Verdict:
    valid: bool
    offending_poles: list = field(default_factory=list)
    gamma_margin: Optional[float] = None
    poles: list = field(default_factory=list)

    @property
    def n_growing(self) -> int:
        return sum(p.kind is PoleKind.GROWING_BOUND for p in self.offending_poles)


def validity_verdict(model: CenterModel, critical: Optional[float] = None) -> Verdict:
    """Is the time-independent scattering picture physically meaningful here?

    Invalid when any pole is a time-growing bound state or a spectral
    singularity.  ``gamma_margin`` is the swept parameter minus its critical
    value (negative means sub-critical) when a crossing exists in range.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegreeCollapseWarning)
            poles = solve_poles(model)
    except PolesAtInfinityError:
        poles = []
    bad = {PoleKind.GROWING_BOUND, PoleKind.SPECTRAL_SINGULARITY}
    offending = [p for p in poles if p.kind in bad]
    if critical is None:
        try:
            critical = critical_gamma(model)
        except NoCriticalPointError:
            critical = None
    margin = None
    if critical is not None:
        margin = getattr(model, model.sweep_parameter) - critical
    return Verdict(not offending, offending, margin, poles)


@dataclass
class PoleTrajectory:
    parameter: str
    grid: np.ndarray
    poles: list  # per grid point, list of (pole_index, Pole)

    def rows(self):
        """Flat rows ``(param, pole_index, re_k, im_k, re_E, im_E, class)``."""
        for value, entries in zip(self.grid, self.poles):
            for index, p in entries:
                E = p.E
                yield (
                    float(value),
                    index,
                    p.k.real,
                    p.k.imag,
                    E.real,
                    E.imag,
                    p.kind.value,
                )


def _periodic_distance(a: complex, b: complex) -> float:
    d = a - b
    dr = math.remainder(d.real, 2 * np.pi)
    return math.hypot(dr, d.imag)


def match_poles(previous: list, current: list[Pole], next_index: int):
    """Carry pole labels across a sweep step by optimal assignment.

    ``previous`` is a list of ``(index, Pole)``.  Returns the labelled current
    poles and the next unused label.
    """
    if not previous or not current:
        labelled = []
        for p in current:
            labelled.append((next_index, p))
            next_index += 1
        return labelled, next_index
    cost = np.array([[_periodic_distance(q.k, p.k) for p in current] for _, q in previous])
    rows, cols = linear_sum_assignment(cost)
    labels = {c: previous[r][0] for r, c in zip(rows, cols)}
    labelled = []
    for c, p in enumerate(current):
        if c not in labels:
            labels[c] = next_index
            next_index += 1
        labelled.append((labels[c], p))
    labelled.sort(key=lambda item: item[0])
    return labelled, next_index


def pole_trajectory(
    model: CenterModel, grid, parameter: Optional[str] = None, solver: str = "numeric"
) -> PoleTrajectory:
    """Track poles across a parameter grid with consistent labels."""
    parameter = parameter or model.sweep_parameter
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty sweep grid")
    solve = {"numeric": solve_poles_numeric, "analytic": solve_poles}[solver]
    out, previous, next_index = [], [], 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegreeCollapseWarning)
        for value in grid:
            try:
                current = solve(with_parameter(model, parameter, value))
            except PolesAtInfinityError:
                current = []
            labelled, next_index = match_poles(previous, current, next_index)
            out.append(labelled)
            if labelled:
                previous = labelled
    return PoleTrajectory(parameter, grid, out)
