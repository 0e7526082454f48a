"""Input checks shared by the estimator front end."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .grid import GridMeasure, PeriodicGrid


def check_positions(x) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array of circle points."""
    arr = check_array(np.atleast_1d(np.asarray(x, dtype=float)), ensure_2d=False, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"positions must be one-dimensional, got shape {arr.shape}")
    return np.mod(arr, 1.0)


def check_measure(X, grid: PeriodicGrid) -> GridMeasure:
    """Interpret ``X`` as nodal weights (``None`` means uniform) and normalize them."""
    if X is None:
        return GridMeasure.uniform(grid)
    if isinstance(X, GridMeasure):
        if X.grid.n != grid.n:
            raise ValueError(f"measure has {X.grid.n} nodes, estimator uses {grid.n}")
        return X
    w = check_array(np.asarray(X, dtype=float).reshape(1, -1), dtype=float).ravel()
    if w.shape[0] != grid.n:
        raise ValueError(f"expected {grid.n} weights, got {w.shape[0]}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return GridMeasure.normalized(grid, w)
