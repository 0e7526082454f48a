"""The set ``K = {(x, u_-(x), 0) : H(x, u_-(x), 0) = F(x, m)}`` and atomic Mather measures.

For reversible Hamiltonians this set is made of fixed points of the
characteristic flow, and any convex combination of Dirac masses on it is a
flow-invariant measure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyKSetError
from .grid import GridFunction, GridMeasure, PeriodicGrid, PhaseMeasure
from .model import ContactModel, Coupling, eval_H

__all__ = [
    "KSet",
    "default_tolerances",
    "extract_kset",
    "aubry_proxy",
    "build_mather_measure",
]


@dataclass(frozen=True, eq=False)
class KSet:
    """Grid nodes of ``K`` with their residuals and the tolerances used."""

    grid: PeriodicGrid
    indices: np.ndarray
    u_values: np.ndarray
    h_residuals: np.ndarray
    g_residuals: np.ndarray
    tol_h: float
    tol_g: float

    @property
    def positions(self) -> np.ndarray:
        return self.grid.nodes[self.indices]

    def __len__(self):
        return int(self.indices.size)

    def to_dict(self) -> dict:
        return {
            "n": self.grid.n,
            "tol_H": self.tol_h,
            "tol_g": self.tol_g,
            "nodes": [
                {
                    "index": int(i),
                    "x": float(x),
                    "u": float(u),
                    "h_residual": float(rh),
                    "g_residual": float(rg),
                }
                for i, x, u, rh, rg in zip(self.indices, self.positions, self.u_values, self.h_residuals, self.g_residuals)
            ],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def default_tolerances(model: ContactModel, coupling: Coupling, grid: PeriodicGrid):
    """``(tol_H, tol_g) = (1e-7 (1 + Lip V + F_inf), 5 sqrt(h))``.

    The H-tolerance is tight on purpose: the discrete solution meets
    ``H = F`` to rounding precision at the nodes where no upwind neighbour is
    lower, and misses it by ``O(h^2)`` elsewhere, so a tolerance above ``h^2``
    would absorb whole neighbourhoods of each point of ``K``.
    """
    lip_v = model.potential.sup_norms()[1]
    return 1e-7 * (1.0 + lip_v + coupling.f_infinity), 5.0 * math.sqrt(grid.h)


def _residuals(u: GridFunction, model, coupling, m):
    grid = u.grid
    F = coupling.on_grid(grid, m)
    rh = np.abs(eval_H(model, grid.nodes, u.values, 0.0) - F)
    rg = np.abs(np.roll(u.values, -1) - np.roll(u.values, 1)) / (2.0 * grid.h)
    return rh, rg


def extract_kset(
    u_minus: GridFunction,
    model: ContactModel,
    coupling: Coupling,
    m: GridMeasure,
    tol_h: float | None = None,
    tol_g: float | None = None,
) -> KSet:
    """Nodes where both ``|H(x, u, 0) - F|`` and the centered slope are within tolerance.

    Raises
    ------
    EmptyKSetError
        If no node qualifies; the error reports the smallest residuals seen.
    """
    d_h, d_g = default_tolerances(model, coupling, u_minus.grid)
    tol_h = d_h if tol_h is None else float(tol_h)
    tol_g = d_g if tol_g is None else float(tol_g)
    rh, rg = _residuals(u_minus, model, coupling, m)
    idx = np.flatnonzero((rh <= tol_h) & (rg <= tol_g))
    if idx.size == 0:
        raise EmptyKSetError(float(np.min(rh)), float(np.min(rg)), tol_h, tol_g)
    return KSet(u_minus.grid, idx, u_minus.values[idx].copy(), rh[idx], rg[idx], tol_h, tol_g)


def aubry_proxy(u_minus: GridFunction, u_plus: GridFunction, tol: float) -> np.ndarray:
    """Indices where ``|u_- - u_+| <= tol``."""
    return np.flatnonzero(np.abs(u_minus.values - u_plus.values) <= tol)


def build_mather_measure(kset: KSet, u_minus: GridFunction | None = None, weights="uniform") -> PhaseMeasure:
    """Atoms ``(x_i, u_-(x_i), 0)`` over the K-set.

    Parameters
    ----------
    weights : "uniform", "residual" or array_like
        ``residual`` favours nodes with smaller H-residual, with weight
        proportional to ``tol_H - residual``. An array must match the K-set
        size, be nonnegative and sum to 1.
    """
    k = len(kset)
    if k == 0:
        raise ValueError("empty K-set")
    if isinstance(weights, str):
        if weights == "uniform":
            w = np.full(k, 1.0 / k)
        elif weights == "residual":
            raw = np.maximum(kset.tol_h - kset.h_residuals, 0.0)
            w = raw / raw.sum() if raw.sum() > 0 else np.full(k, 1.0 / k)
        else:
            raise ValueError(f"unknown weight rule {weights!r}")
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (k,):
            raise ValueError(f"expected {k} weights, got shape {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
    w = w.copy()
    w[np.argmax(w)] += 1.0 - w.sum()
    u = kset.u_values if u_minus is None else u_minus.values[kset.indices]
    return PhaseMeasure(kset.positions, u, np.zeros(k), w)
