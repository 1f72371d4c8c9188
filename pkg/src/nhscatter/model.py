"""Scattering-center models and finite tight-binding Hamiltonians.

Units: hbar = J = a = 1.  The two center sites carry labels j = 0 and j = 1,
the left lead occupies j <= -1 and the right lead j >= 2.  Lead hopping is -1.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

LEAD_HOPPING = -1.0


@dataclass(frozen=True)
class ImaginaryOnsite:
    """Two-site center with loss -i*gamma0 on site 0 and gain +i*gamma1 on site 1."""

    gamma0: float = 0.0
    gamma1: float = 0.0

    family = "ImaginaryOnsite"
    sweep_parameter = "gamma1"

    @property
    def is_hermitian(self) -> bool:
        return self.gamma0 == 0 and self.gamma1 == 0


@dataclass(frozen=True)
class _AsymmetricHopping:
    kappa: float = -1.0
    gamma: float = 0.0

    sweep_parameter = "gamma"

    @property
    def hoppings(self) -> tuple[complex, complex]:
        """Return ``(kappa_L, kappa_R)``: the 0<-1 and 1<-0 center hoppings."""
        raise NotImplementedError

    @property
    def is_hermitian(self) -> bool:
        kappa_L, kappa_R = self.hoppings
        return kappa_L == np.conj(kappa_R)


@dataclass(frozen=True)
class UnequalHopping(_AsymmetricHopping):
    family = "UnequalHopping"

    @property
    def hoppings(self):
        return complex(self.kappa + self.gamma), complex(self.kappa - self.gamma)


@dataclass(frozen=True)
class ComplexHopping(_AsymmetricHopping):
    family = "ComplexHopping"

    @property
    def hoppings(self):
        value = complex(self.kappa, self.gamma)
        return value, value


@dataclass(frozen=True)
class AntiHermitianHopping(_AsymmetricHopping):
    family = "AntiHermitianHopping"

    @property
    def hoppings(self):
        return complex(-self.kappa, self.gamma), complex(self.kappa, self.gamma)


@dataclass(frozen=True)
class ImaginaryCoupling(_AsymmetricHopping):
    """Purely imaginary symmetric coupling i*gamma; ``kappa`` is ignored."""

    kappa: float = 0.0
    family = "ImaginaryCoupling"

    @property
    def hoppings(self):
        return complex(0.0, self.gamma), complex(0.0, self.gamma)


CenterModel = Union[
    ImaginaryOnsite, UnequalHopping, ComplexHopping, AntiHermitianHopping, ImaginaryCoupling
]

FAMILIES = {
    cls.family: cls
    for cls in (
        ImaginaryOnsite,
        UnequalHopping,
        ComplexHopping,
        AntiHermitianHopping,
        ImaginaryCoupling,
    )
}


def make_model(family: str, **params) -> CenterModel:
    """Build a center model from its family name and keyword parameters."""
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(params) - names
    if unknown:
        raise ValueError(f"{family} does not take parameter(s) {sorted(unknown)}")
    for name, value in params.items():
        if not math.isfinite(float(value)):
            raise ValueError(f"{family}.{name} must be finite, got {value!r}")
    return cls(**{k: float(v) for k, v in params.items()})


def with_parameter(model: CenterModel, name: str, value: float) -> CenterModel:
    """Return a copy of ``model`` with one parameter replaced."""
    return dataclasses.replace(model, **{name: float(value)})


def model_params(model: CenterModel) -> dict:
    return {f.name: getattr(model, f.name) for f in dataclasses.fields(model)}


class Center(NamedTuple):
    block: np.ndarray
    lead_couplings: tuple[float, float]


def build_center(model: CenterModel) -> Center:
    """Return the 2x2 center block (rows/cols = sites 0, 1) and the lead couplings."""
    block = np.zeros((2, 2), dtype=complex)
    if isinstance(model, ImaginaryOnsite):
        block[0, 0] = -1j * model.gamma0
        block[1, 1] = 1j * model.gamma1
        block[0, 1] = block[1, 0] = LEAD_HOPPING
    else:
        kappa_L, kappa_R = model.hoppings
        block[0, 1] = kappa_L
        block[1, 0] = kappa_R
    return Center(block, (LEAD_HOPPING, LEAD_HOPPING))


@dataclass(frozen=True)
class LatticeSpec:
    """Finite chain of ``L`` sites, hard-wall ends, center at the two middle sites."""

    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 4 or self.L % 2:
            raise ValueError(f"lattice size must be an even integer >= 4, got {self.L!r}")

    @property
    def lead_length(self) -> int:
        return (self.L - 2) // 2

    @property
    def sites(self) -> np.ndarray:
        """Site labels j, from -(L-2)/2 to (L-2)/2 + 1."""
        return np.arange(self.L) - self.lead_length

    def index(self, j):
        """Array index of site label ``j``."""
        return np.asarray(j) + self.lead_length


def chain_hamiltonian(model: CenterModel, j_min: int, j_max: int) -> np.ndarray:
    """Dense Hamiltonian of the window of sites ``j_min..j_max`` (must contain 0 and 1)."""
    if j_min > 0 or j_max < 1:
        raise ValueError("window must contain the center sites 0 and 1")
    n = j_max - j_min + 1
    H = np.zeros((n, n), dtype=complex)
    i = np.arange(n - 1)
    H[i, i + 1] = LEAD_HOPPING
    H[i + 1, i] = LEAD_HOPPING
    c = -j_min
    H[c : c + 2, c : c + 2] = build_center(model).block
    return H


def build_finite_hamiltonian(model: CenterModel, lattice) -> np.ndarray:
    """Dense L x L Hamiltonian of the center attached to two truncated leads."""
    if not isinstance(lattice, LatticeSpec):
        lattice = LatticeSpec(lattice)
    sites = lattice.sites
    return chain_hamiltonian(model, int(sites[0]), int(sites[-1]))


def dispersion(k):
    """Lead band energy E(k) = -2 cos k."""
    return -2.0 * np.cos(k)
