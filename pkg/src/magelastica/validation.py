"""Input validation helpers for array-facing entry points."""

from __future__ import annotations

import numpy as np

from .grid import Grid, ScalarField


def check_targets(X, n_cells=None) -> np.ndarray:
    """Validate a 2-D array of nodal target samples, one target per row.

    Rows hold values at the n_cells + 1 uniform nodes of [0, 1]; the grid
    size is inferred from the column count unless ``n_cells`` pins it.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"targets must be a 2-D array, got ndim={X.ndim}")
    if X.shape[0] < 1:
        raise ValueError("at least one target row is required")
    if X.shape[1] < 5:
        raise ValueError(
            f"target rows need at least 5 nodal samples, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("targets must be finite")
    if n_cells is not None and X.shape[1] != int(n_cells) + 1:
        raise ValueError(
            f"targets have {X.shape[1]} columns but n_cells={n_cells} "
            f"needs {int(n_cells) + 1}"
        )
    return X


def check_controls(X) -> np.ndarray:
    """Validate an (m, 2) array of applied-field pairs."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"controls must have shape (m, 2), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("controls must be finite")
    return X


def targets_as_fields(X: np.ndarray) -> tuple:
    """Wrap validated target rows as fields on their inferred grid."""
    grid = Grid(X.shape[1] - 1)
    return tuple(ScalarField(grid, row, "target") for row in X)
