"""Scattering off non-Hermitian two-site centers in a 1D tight-binding chain.

Closed-form and numeric scattering amplitudes, S-matrix poles and their
classification, biorthogonal spectra of the finite lattice, wave-packet
propagation, and drivers that compare the time-independent and
time-dependent pictures.
"""
from .errors import (
    ConfigError,
    DegreeCollapseWarning,
    ExceptionalPointError,
    ExceptionalPointWarning,
    FitQualityError,
    InstabilityError,
    NearSingularSystemError,
    NHScatterError,
    NoCriticalPointError,
    NotLocalizedError,
    PolesAtInfinityError,
    SpectralSingularityError,
)
from .model import (
    AntiHermitianHopping,
    ComplexHopping,
    ImaginaryCoupling,
    ImaginaryOnsite,
    LatticeSpec,
    UnequalHopping,
    build_finite_hamiltonian,
    make_model,
)
from .scattering import amplitudes_closed_form, amplitudes_numeric, s_matrix
from .poles import Pole, PoleKind, critical_gamma, solve_poles, validity_verdict
from .spectrum import BiorthogonalSpectrum, detect_bound_states, eigendecompose
from .dynamics import (
    extract_RT,
    fit_growth_rate,
    fit_spatial_decay,
    gaussian_packet,
    propagate_eigen,
    propagate_stepper,
)
from .analysis import critical_table, sweep_ti_vs_td

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
