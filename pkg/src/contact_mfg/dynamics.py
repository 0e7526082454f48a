"""Characteristic (contact Hamiltonian) flow of ``H_m = H - F(., m)``.

    x' = H_p,   p' = -H_x - H_u p,   u' = p H_p - H

integrated with fixed-step classical RK4. Along orbits ``d/dt H_m = -H_u H_m``,
so the zero level of ``H_m`` is invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DivergenceError
from .grid import ContactState, GridMeasure, PhaseMeasure, circle_distance
from .model import ContactModel, Coupling, compute_bounds, eval_H, eval_partials

__all__ = [
    "FlowConfig",
    "Trajectory",
    "vector_field",
    "hamiltonian_m",
    "integrate_orbit",
    "integrate_batch",
    "fixed_point_drift",
    "invariance_check",
    "default_test_functions",
    "FIXED_POINT_TOL",
]

FIXED_POINT_TOL = 1e-6


@dataclass(frozen=True)
class FlowConfig:
    """RK4 settings; ``T`` may be negative for backward-time sampling.

    ``blowup`` is the threshold on ``|u|`` and ``|p|``; ``None`` means
    ``1e3 * D_3`` from the a-priori bounds.
    """

    dt_ode: float = 1e-3
    T: float = 1.0
    blowup: float | None = None

    def __post_init__(self):
        if not self.dt_ode > 0:
            raise ValueError("dt_ode must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    H_m: np.ndarray

    @property
    def final(self) -> ContactState:
        return ContactState(float(self.x[-1]), float(self.u[-1]), float(self.p[-1]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,x,u,p,H_m\n")
            for row in zip(self.t, self.x, self.u, self.p, self.H_m):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def hamiltonian_m(model: ContactModel, coupling: Coupling, m: GridMeasure, x, u, p):
    """``H(x, u, p) - F(x, m)``."""
    return eval_H(model, x, u, p) - coupling.value(x, m)


def vector_field(model: ContactModel, coupling: Coupling, m: GridMeasure, s):
    """Right-hand side ``(dx, dp, du)`` at ``s`` (a ContactState or a triple of arrays)."""
    x, u, p = (np.asarray(c, dtype=float) for c in s)
    hx, hu, hp = eval_partials(model, x, u, p)
    hx = hx - coupling.dx(x, m)
    H = hamiltonian_m(model, coupling, m, x, u, p)
    return hp, -hx - hu * p, p * hp - H


def _rhs(model, coupling, m, y):
    dx, dp, du = vector_field(model, coupling, m, (y[0], y[1], y[2]))
    return np.stack([dx, du, dp])


def integrate_batch(model, coupling, m, x0, u0, p0, T, dt_ode=1e-3, blowup=None, keep_path=False):
    """RK4 for a batch of initial states; returns final ``(x, u, p)`` arrays.

    With ``keep_path`` the full sampled path of shape ``(steps+1, 3, k)`` is
    returned as well.
    """
    y = np.stack([np.atleast_1d(np.asarray(c, dtype=float)) for c in (x0, u0, p0)])
    nsteps = max(1, int(math.ceil(abs(T) / dt_ode - 1e-9)))
    h = T / nsteps
    if blowup is None:
        blowup = 1e3 * compute_bounds(model, coupling, m.grid).d3_sup
    path = [y.copy()] if keep_path else None
    for k in range(nsteps):
        k1 = _rhs(model, coupling, m, y)
        k2 = _rhs(model, coupling, m, y + 0.5 * h * k1)
        k3 = _rhs(model, coupling, m, y + 0.5 * h * k2)
        k4 = _rhs(model, coupling, m, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        big = np.maximum(np.abs(y[1]), np.abs(y[2]))
        if not np.all(np.isfinite(y)) or np.any(big > blowup):
            j = int(np.argmax(np.where(np.isfinite(big), big, np.inf)))
            state = ContactState(float(np.mod(y[0, j], 1.0)), float(y[1, j]), float(y[2, j]))
            raise DivergenceError(
                f"orbit left the bounded region |u|,|p| <= {blowup:.3g} at t={(k + 1) * h:.6g}",
                time=(k + 1) * h,
                state=state,
            )
        if keep_path:
            path.append(y.copy())
    y[0] = np.mod(y[0], 1.0)
    if keep_path:
        return y, np.array(path), h
    return y


def integrate_orbit(model: ContactModel, coupling: Coupling, m: GridMeasure, s0: ContactState, cfg: FlowConfig | None = None) -> Trajectory:
    """Sampled RK4 orbit of ``s0`` over ``[0, T]`` (or ``[T, 0]`` for negative ``T``).

    Raises
    ------
    DivergenceError
        When ``|u|`` or ``|p|`` exceeds the blow-up threshold.
    """
    cfg = cfg or FlowConfig()
    _, path, h = integrate_batch(
        model, coupling, m, s0[0], s0[1], s0[2], cfg.T, cfg.dt_ode, cfg.blowup, keep_path=True
    )
    x, u, p = np.mod(path[:, 0, 0], 1.0), path[:, 1, 0], path[:, 2, 0]
    t = h * np.arange(path.shape[0])
    Hm = hamiltonian_m(model, coupling, m, x, u, p)
    return Trajectory(t, x, u, p, Hm)


def fixed_point_drift(model, coupling, m, s: ContactState, T: float = 1.0, dt_ode: float = 1e-3) -> float:
    """``max`` over components of ``|Phi_T(s) - s|``, with ``x`` compared on the circle."""
    y = integrate_batch(model, coupling, m, s[0], s[1], s[2], T, dt_ode)
    return float(max(circle_distance(y[0, 0], s[0]), abs(y[1, 0] - s[1]), abs(y[2, 0] - s[2])))


def default_test_functions(modes: int = 2, degree: int = 1) -> list:
    """Products of Fourier modes in ``x`` with monomials ``u^i p^j`` (``i + j <= degree``)."""
    fourier = [lambda x: np.ones_like(x)]
    for k in range(1, modes + 1):
        fourier.append(lambda x, k=k: np.cos(2 * np.pi * k * x))
        fourier.append(lambda x, k=k: np.sin(2 * np.pi * k * x))
    out = []
    for f in fourier:
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                out.append(lambda x, u, p, f=f, i=i, j=j: f(x) * u**i * p**j)
    return out


def invariance_check(
    eta: PhaseMeasure,
    model: ContactModel,
    coupling: Coupling,
    m: GridMeasure,
    T: float = 1.0,
    test_functions=None,
    dt_ode: float = 1e-3,
) -> float:
    """``max_f |int f(Phi_T) d eta - int f d eta|`` over the test functions."""
    fs = test_functions if test_functions is not None else default_test_functions()
    y = integrate_batch(model, coupling, m, eta.x, eta.u, eta.p, T, dt_ode)
    worst = 0.0
    for f in fs:
        after = float(np.dot(eta.weights, f(y[0], y[1], y[2])))
        before = float(np.dot(eta.weights, f(eta.x, eta.u, eta.p)))
        worst = max(worst, abs(after - before))
    return worst
