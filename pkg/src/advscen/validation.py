"""Input checks shared by the public entry points."""

from __future__ import annotations

import numpy as np


def check_delta(delta, dim: int | None = None, radius: float = 1.0, tol: float = 1e-12) -> np.ndarray:
    """Validate a normalized perturbation: finite, 1-D, right length, inside the l-inf ball."""
    arr = np.asarray(delta, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"perturbation must be 1-D, got shape {arr.shape}")
    if dim is not None and len(arr) != dim:
        raise ValueError(f"perturbation has length {len(arr)}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("perturbation contains non-finite entries")
    if np.any(np.abs(arr) > radius + tol):
        raise ValueError(f"perturbation leaves the l-inf ball of radius {radius}: max |delta| = {np.abs(arr).max():.6g}")
    return np.clip(arr, -radius, radius)


def check_states(states, n_fields: int = 6) -> np.ndarray:
    """Validate a ``(n, n_fields)`` finite state array."""
    arr = np.asarray(states, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_fields:
        raise ValueError(f"expected states of shape (n, {n_fields}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("states contain non-finite entries")
    return arr


def check_positive(name: str, value, integer: bool = False):
    if integer and (not float(value).is_integer()):
        raise ValueError(f"{name} must be an integer, got {value}")
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return int(value) if integer else float(value)
