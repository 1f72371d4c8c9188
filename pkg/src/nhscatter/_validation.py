"""Input validation for complex Hamiltonians and state vectors.

sklearn's ``check_array`` refuses complex data, so these mirror its role for
the complex-valued objects used here.
"""
import numpy as np


def check_hamiltonian(H, max_size=None) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"Hamiltonian must be a square 2-D array, got shape {H.shape}")
    if H.shape[0] == 0:
        raise ValueError("Hamiltonian is empty")
    if max_size is not None and H.shape[0] > max_size:
        raise ValueError(f"matrix size {H.shape[0]} exceeds the configured cap {max_size}")
    H = H.astype(complex, copy=False)
    if not np.isfinite(H).all():
        raise ValueError("Hamiltonian contains NaN or infinite entries")
    return H


def check_states(X, size: int) -> tuple[np.ndarray, bool]:
    """Coerce one state (1-D) or a stack of states (2-D) to a complex 2-D array.

    Returns the array and whether the input was a single vector.
    """
    X = np.asarray(X)
    single = X.ndim == 1
    X = np.atleast_2d(X).astype(complex, copy=False)
    if X.ndim != 2 or X.shape[1] != size:
        raise ValueError(f"states must have length {size}, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("states contain NaN or infinite entries")
    return X, single


def check_times(times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if (times < 0).any() or (np.diff(times) < 0).any():
        raise ValueError("times must be non-negative and ascending")
    return times
