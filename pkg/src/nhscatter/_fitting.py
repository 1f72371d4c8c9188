"""Least-squares helpers shared by the spectrum and dynamics fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitQualityError


@dataclass(frozen=True)
class LinearFit:
    slope: float
    slope_stderr: float
    r2: float
    n_points: int


def linear_fit(X: np.ndarray, y: np.ndarray, slope_column: int = 0) -> LinearFit:
    """Ordinary least squares of ``y`` on the design matrix ``X``.

    Returns the coefficient in ``slope_column`` with its standard error and the
    coefficient of determination (1 when ``y`` is constant and fit exactly).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise FitQualityError(f"need more than {p} points for the fit, got {n}")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    scale = max(ss_tot, float(y @ y), 1.0)
    r2 = 1.0 if ss_tot <= 1e-24 * scale else 1.0 - ss_res / ss_tot
    sigma2 = ss_res / (n - p)
    cov = sigma2 * np.linalg.pinv(X.T @ X)
    return LinearFit(
        float(beta[slope_column]), float(np.sqrt(max(cov[slope_column, slope_column], 0.0))), r2, n
    )


def decay_window(sites: np.ndarray, intensity: np.ndarray, min_distance: int = 5):
    """Sites used for an exponential-tail fit, as a boolean mask.

    On each side of the center, take |j| >= ``min_distance`` outward for as
    long as the intensity stays above 1e3 times the floating-point floor of
    the profile maximum.
    """
    floor = 1e3 * np.finfo(float).eps * intensity.max()
    mask = np.zeros(sites.shape, dtype=bool)
    # sites are ascending; walk outward from the center on each side
    left = np.flatnonzero(sites <= -min_distance)[::-1]
    right = np.flatnonzero(sites >= min_distance)
    for idx in (left, right):
        for i in idx:
            if intensity[i] <= floor:
                break
            mask[i] = True
    return mask


def fit_exponential_tails(sites, psi, min_distance: int = 5, min_r2: float = 0.99):
    """Fit |psi_j|^2 ~ C_side exp(-2 alpha |j|) on both tails with a shared alpha.

    Each side gets its own intercept so unequal tail amplitudes do not bias
    the slope.  Returns ``(alpha, alpha_stderr, r2)``.
    """
    sites = np.asarray(sites)
    intensity = np.abs(np.asarray(psi)) ** 2
    mask = decay_window(sites, intensity, min_distance)
    if mask.sum() < 4:
        raise FitQualityError("too few sites above the numerical floor for a decay fit")
    j = sites[mask]
    y = np.log(intensity[mask])
    left = (j < 0).astype(float)
    X = np.column_stack([np.abs(j), left, 1.0 - left])
    if left.all() or not left.any():
        X = X[:, :2] if left.all() else X[:, [0, 2]]
    fit = linear_fit(X, y)
    if fit.r2 < min_r2:
        raise FitQualityError(f"profile is not exponential (R^2 = {fit.r2:.4f})")
    return -0.5 * fit.slope, 0.5 * fit.slope_stderr, fit.r2
