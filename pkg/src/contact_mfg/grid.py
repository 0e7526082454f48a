"""Uniform periodic grids on the unit circle.

Grid functions and grid measures are thin immutable wrappers around numpy
arrays. The helpers here (differences, linear interpolation, quadrature,
nearest-node pushforward and the circular Wasserstein-1 distance) are the
only discretization primitives used by the solvers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "PeriodicGrid",
    "GridFunction",
    "GridMeasure",
    "ContactState",
    "PhaseMeasure",
    "gradient",
    "interpolate",
    "d1_distance",
    "pushforward",
    "quadrature",
    "measure_integral",
    "circle_distance",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """``n`` equispaced nodes ``x_i = i/n`` on the circle ``[0, 1)``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"grid needs an integer n >= 8, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def nearest(self, x) -> np.ndarray:
        """Index of the nearest node; exact half-way points go to the lower index."""
        r = np.mod(np.asarray(x, dtype=float), 1.0) * self.n
        lo = np.floor(r)
        idx = np.where(r - lo > 0.5, lo + 1, lo).astype(int)
        return np.mod(idx, self.n)


def _frozen_array(values, n=None) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} values, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values of a periodic function."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.values, self.grid.n)
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid, f):
        return cls(grid, f(grid.nodes))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, x):
        return interpolate(self, x)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """A probability measure carried by the grid nodes."""

    grid: PeriodicGrid
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.weights, self.grid.n)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("measure weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"measure weights must sum to 1 (got {w.sum()!r})")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, grid):
        return cls(grid, np.full(grid.n, 1.0 / grid.n))

    @classmethod
    def dirac(cls, grid, x):
        w = np.zeros(grid.n)
        w[grid.nearest(x)] = 1.0
        return cls(grid, w)

    @classmethod
    def normalized(cls, grid, weights):
        """Build a measure from nonnegative weights, rescaling them to unit mass."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise ValueError("weights must have positive total mass")
        w = w / total
        # push the rounding residue onto the heaviest node
        w[np.argmax(w)] += 1.0 - w.sum()
        return cls(grid, w)

    def mix(self, other, alpha):
        """Convex combination ``(1 - alpha) * self + alpha * other``."""
        return GridMeasure.normalized(self.grid, (1.0 - alpha) * self.weights + alpha * other.weights)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def rotate(self, k):
        return GridMeasure(self.grid, np.roll(self.weights, k))


class ContactState(NamedTuple):
    """A point ``(x, u, p)`` of the extended phase space; ``x`` lives on the circle."""

    x: float
    u: float
    p: float

    def wrapped(self) -> "ContactState":
        return ContactState(float(np.mod(self.x, 1.0)), float(self.u), float(self.p))


@dataclass(frozen=True, eq=False)
class PhaseMeasure:
    """A finite convex combination of Dirac masses in ``(x, u, p)`` space."""

    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        x = _frozen_array(np.mod(self.x, 1.0))
        u = _frozen_array(self.u, x.size)
        p = _frozen_array(self.p, x.size)
        w = _frozen_array(self.weights, x.size)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("phase-measure weights must be nonnegative and sum to 1")
        for name, arr in (("x", x), ("u", u), ("p", p), ("weights", w)):
            object.__setattr__(self, name, arr)

    @classmethod
    def from_atoms(cls, atoms):
        states, weights = zip(*atoms)
        xs, us, ps = (np.array(c, dtype=float) for c in zip(*states))
        return cls(xs, us, ps, np.array(weights, dtype=float))

    @property
    def atoms(self) -> list:
        return [
            (ContactState(float(a), float(b), float(c)), float(w))
            for a, b, c, w in zip(self.x, self.u, self.p, self.weights)
        ]

    def __len__(self):
        return self.x.size


def circle_distance(x, y):
    """Geodesic distance on the unit circle."""
    d = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def gradient(f: GridFunction, mode: str = "centered") -> GridFunction:
    """Periodic first difference of ``f``; ``mode`` is centered, forward or backward."""
    u, h = f.values, f.grid.h
    if mode == "centered":
        d = (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * h)
    elif mode == "forward":
        d = (np.roll(u, -1) - u) / h
    elif mode == "backward":
        d = (u - np.roll(u, 1)) / h
    else:
        raise ValueError(f"unknown difference mode {mode!r}")
    return GridFunction(f.grid, d)


def interpolate_values(values: np.ndarray, x) -> np.ndarray:
    n = values.shape[0]
    r = np.mod(np.asarray(x, dtype=float), 1.0) * n
    i = np.floor(r).astype(int)
    t = r - i
    i = np.mod(i, n)
    return (1.0 - t) * values[i] + t * values[(i + 1) % n]


def interpolate(f: GridFunction, x):
    """Periodic piecewise-linear interpolation, exact at the nodes."""
    out = interpolate_values(f.values, x)
    return float(out) if np.ndim(x) == 0 else out


def quadrature(f: GridFunction) -> float:
    """Periodic trapezoid rule ``h * sum(f_i)``."""
    return float(f.grid.h * np.sum(f.values))


def measure_integral(f: GridFunction, m: GridMeasure) -> float:
    if f.grid.n != m.grid.n:
        raise ValueError("function and measure live on different grids")
    return float(np.dot(f.values, m.weights))


def d1_weights(w1: np.ndarray, w2: np.ndarray, h: float) -> float:
    # CDF difference is constant on each cell; the optimal shift is its median
    g = np.cumsum(w1 - w2)
    return float(h * np.sum(np.abs(g - np.median(g))))


def d1_distance(m1: GridMeasure, m2: GridMeasure) -> float:
    """Exact Wasserstein-1 distance between two grid measures on the circle."""
    if m1.grid.n != m2.grid.n:
        raise ValueError("measures live on different grids")
    return d1_weights(m1.weights, m2.weights, m1.grid.h)


def pushforward(eta: PhaseMeasure, grid: PeriodicGrid) -> GridMeasure:
    """Project atoms to ``x`` and deposit each weight on its nearest node."""
    w = np.zeros(grid.n)
    np.add.at(w, grid.nearest(eta.x), eta.weights)
    return GridMeasure.normalized(grid, w)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(path, obj) -> None:
    """Write a GridFunction or GridMeasure as ``x,value`` rows."""
    values = obj.weights if isinstance(obj, GridMeasure) else obj.values
    with open(path, "w", newline="") as fh:
        fh.write("x,value\n")
        for x, v in zip(obj.grid.nodes, values):
            fh.write(f"{_fmt(x)},{_fmt(v)}\n")


def read_csv(path, kind: str = "function"):
    """Read a file written by :func:`write_csv`; ``kind`` is ``function`` or ``measure``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header] != ["x", "value"]:
            raise ValueError(f"{path}: expected header 'x,value', got {header!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    grid = PeriodicGrid(len(rows))
    xs = np.array([r[0] for r in rows])
    if not np.allclose(xs, grid.nodes, atol=1e-12):
        raise ValueError(f"{path}: x column is not a uniform periodic grid")
    vals = np.array([r[1] for r in rows])
    if kind == "measure":
        return GridMeasure(grid, vals)
    return GridFunction(grid, vals)
