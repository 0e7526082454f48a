"""Contact Lax-Oleinik semigroups on the periodic grid.

One backward step evaluates

    w_i = min_{|v| <= v_max} { u(x_i - dt v) + dt (L(x_i, w_i, v) + F(x_i, m)) }

with linear interpolation. With ``dt * v_max <= h`` the foot never leaves
the neighbouring cell, and the minimum over ``v`` has a closed form in the
upwind difference ``g = (u_i - min(u_{i-1}, u_{i+1})) / h``:
``u_i - dt * psi(g)`` with

    psi(g) = max_{0 <= v <= v_max} (v g - v^2 / (2 a)).

The ``w_i`` that appears inside ``L`` makes the step implicit; it is solved by
fixed-point iteration with contraction factor ``dt * lambda``.

The fixed point of the step does not depend on ``dt``. It solves the monotone
upwind scheme ``theta(u_i) + psi(g_i) + V_i - F_i = 0``, which
:func:`solve_u_minus` computes directly by nodal relaxation and then
certifies against :func:`backward_step`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .exceptions import AssumptionViolation, SchemeError
from .grid import GridFunction, GridMeasure, PeriodicGrid
from .model import ContactModel, Coupling, compute_bounds, solve_a_m, theta_inverse

__all__ = [
    "SemigroupConfig",
    "WeakKamSolution",
    "ForwardSolution",
    "CriticalValue",
    "backward_step",
    "forward_step",
    "solve_u_minus",
    "solve_u_plus",
    "finite_action",
    "frozen_level_solution",
    "critical_value",
    "discrete_residual",
    "scheme_tolerance",
    "psi",
]

_INNER_MAX = 100


def psi(g, a, v_max):
    """``max_{0 <= v <= v_max} (v g - v^2/(2a))``, zero for ``g <= 0``."""
    g = np.maximum(g, 0.0)
    quad = a * g <= v_max
    return np.where(quad, 0.5 * a * g * g, v_max * g - v_max * v_max / (2.0 * a))


@dataclass(frozen=True)
class SemigroupConfig:
    """Discretization parameters; ``None`` fields are filled by :meth:`resolve`.

    Parameters
    ----------
    dt : float, optional
        Time step. Defaults to ``0.4 * h / v_max``. Must keep ``dt * v_max <= h``
        and ``dt * lambda < 1``.
    v_max : float, optional
        Velocity bound. Defaults to ``(D_2 + 1) * max(a)`` and may not be smaller.
    tol_conv : float, optional
        Sup-norm error target. Defaults to ``1e-9 * (1 + |u|_inf)``.
    max_steps : int, optional
        Iteration cap. Defaults to ``10 * ceil(log(1e9) / (delta * dt))``.
    inner_tol : float
        Tolerance of the per-node implicit solve.
    method : {"relax", "march"}
        ``relax`` solves the stationary scheme by nodal relaxation, ``march``
        iterates :func:`backward_step`. Both are certified the same way.
    """

    dt: float | None = None
    v_max: float | None = None
    tol_conv: float | None = None
    max_steps: int | None = None
    inner_tol: float = 1e-13
    method: str = "relax"

    def resolve(self, model: ContactModel, coupling: Coupling, grid: PeriodicGrid) -> "SemigroupConfig":
        delta = model.delta
        if not delta > 0:
            raise AssumptionViolation("H3", "the semigroup needs theta' >= delta > 0", witness={"delta": delta})
        if self.method not in ("relax", "march"):
            raise SchemeError(f"unknown method {self.method!r}")
        h = grid.h
        a_max = float(np.max(model.a_on(grid)))
        v_floor = (compute_bounds(model, coupling, grid).d2_lip + 1.0) * a_max
        v_max = v_floor if self.v_max is None else float(self.v_max)
        if v_max < v_floor * (1 - 1e-12):
            raise SchemeError(f"v_max={v_max} is below the a-priori slope range {v_floor}")
        dt = 0.4 * h / v_max if self.dt is None else float(self.dt)
        if not dt > 0:
            raise SchemeError("dt must be positive")
        if dt * v_max > h * (1 + 1e-12):
            raise SchemeError(f"dt*v_max={dt * v_max} exceeds the cell width h={h}")
        if dt * model.lam >= 1.0:
            raise SchemeError(f"dt*lambda={dt * model.lam} must be < 1")
        max_steps = self.max_steps
        if max_steps is None:
            max_steps = 10 * math.ceil(math.log(1e9) / (delta * dt))
        if self.tol_conv is not None and not self.tol_conv > 0:
            raise SchemeError("tol_conv must be positive")
        if not self.inner_tol > 0:
            raise SchemeError("inner_tol must be positive")
        return replace(self, dt=dt, v_max=v_max, max_steps=int(max_steps))

    def tolerance(self, u: np.ndarray) -> float:
        if self.tol_conv is not None:
            return float(self.tol_conv)
        return 1e-9 * (1.0 + float(np.max(np.abs(u))))


@dataclass(frozen=True, eq=False)
class WeakKamSolution:
    """Result of :func:`solve_u_minus`.

    ``error_bound`` is an a-posteriori bound on the sup-distance to the exact
    fixed point of the backward step, ``residual`` the kink-aware discrete
    residual of the equation.
    """

    u_minus: GridFunction
    residual: float
    steps: int
    converged: bool
    error_bound: float
    config: SemigroupConfig = field(repr=False)


@dataclass(frozen=True, eq=False)
class ForwardSolution:
    u_plus: GridFunction
    steps: int
    converged: bool
    increment: float


class CriticalValue(NamedTuple):
    value: float
    long_time: float
    horizon: float


class _Problem:
    """Node arrays shared by every step of one solve."""

    def __init__(self, model, coupling, m, grid=None):
        self.grid = grid if grid is not None else m.grid
        self.model = model
        self.theta = model.theta
        self.a = model.a_on(self.grid)
        self.V = model.v_on(self.grid)
        self.F = coupling.on_grid(self.grid, m) if m is not None else coupling.base(self.grid.nodes)
        self.r = self.F - self.V
        self.h = self.grid.h


def _implicit(q, theta, dt, sign, inner_tol):
    # w + sign*dt*theta(w) = q
    if theta.is_linear:
        return q / (1.0 + sign * dt * theta.slope)
    w = q.copy()
    for _ in range(_INNER_MAX):
        w_new = q - sign * dt * theta(w)
        if np.max(np.abs(w_new - w)) <= inner_tol * (1.0 + np.max(np.abs(w_new))):
            return w_new
        w = w_new
    raise SchemeError(f"implicit solve did not converge in {_INNER_MAX} iterations (dt*lambda={dt * theta.lam})")


def _backward(u, prob, cfg):
    mu = np.minimum(np.roll(u, 1), np.roll(u, -1))
    q = u - cfg.dt * psi((u - mu) / prob.h, prob.a, cfg.v_max) + cfg.dt * prob.r
    return _implicit(q, prob.theta, cfg.dt, 1.0, cfg.inner_tol)


def _forward(u, prob, cfg):
    big = np.maximum(np.roll(u, 1), np.roll(u, -1))
    q = u + cfg.dt * psi((big - u) / prob.h, prob.a, cfg.v_max) - cfg.dt * prob.r
    return _implicit(q, prob.theta, cfg.dt, -1.0, cfg.inner_tol)


def _resolve(cfg, model, coupling, grid):
    return (cfg or SemigroupConfig()).resolve(model, coupling, grid)


def backward_step(u: GridFunction, model: ContactModel, coupling: Coupling, m: GridMeasure, cfg=None) -> GridFunction:
    """One implicit step of the backward contact semigroup."""
    cfg = _resolve(cfg, model, coupling, u.grid)
    return GridFunction(u.grid, _backward(u.values, _Problem(model, coupling, m, u.grid), cfg))


def forward_step(u: GridFunction, model: ContactModel, coupling: Coupling, m: GridMeasure, cfg=None) -> GridFunction:
    """One implicit step of the forward contact semigroup (sup over forward feet)."""
    cfg = _resolve(cfg, model, coupling, u.grid)
    return GridFunction(u.grid, _forward(u.values, _Problem(model, coupling, m, u.grid), cfg))


def _nodal_sweep(u, prob, v_max, theta_inv_r, inner_tol):
    theta, a, r, h = prob.theta, prob.a, prob.r, prob.h
    mu = np.minimum(np.roll(u, 1), np.roll(u, -1))
    move = theta(mu) < r
    w = theta_inv_r.copy()
    if not np.any(move):
        return w
    mu_m, r_m, a_m = mu[move], r[move], a[move]
    if theta.is_linear:
        k = theta.slope
        s = r_m - k * mu_m
        c = a_m / (2.0 * h * h)
        y = 2.0 * s / (k + np.sqrt(k * k + 4.0 * c * s))
        clip = a_m * y / h > v_max
        y_clip = (s + v_max * v_max / (2.0 * a_m)) / (k + v_max / h)
        y = np.where(clip, y_clip, y)
    else:
        lo = np.zeros_like(mu_m)
        hi = (r_m - theta(mu_m)) / theta.delta
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            pos = theta(mu_m + mid) + psi(mid / h, a_m, v_max) > r_m
            hi = np.where(pos, mid, hi)
            lo = np.where(pos, lo, mid)
            if np.max(hi - lo) <= inner_tol * (1.0 + np.max(np.abs(mu_m))):
                break
        y = 0.5 * (lo + hi)
    w[move] = mu_m + y
    return w


def discrete_residual(u: np.ndarray, prob: _Problem) -> np.ndarray:
    """Per-node ``|H(x_i, u_i, Du_i) - F_i|`` with a kink-aware gradient.

    Centered differences are used where the one-sided differences agree to
    within ``sqrt(h)``; elsewhere the upwind magnitude
    ``max(0, (u_i - min neighbour) / h)`` is used.
    """
    h = prob.h
    fwd = (np.roll(u, -1) - u) / h
    bwd = (u - np.roll(u, 1)) / h
    kink = np.abs(fwd - bwd) > math.sqrt(h)
    p = np.where(kink, np.maximum(np.maximum(-fwd, bwd), 0.0), 0.5 * (fwd + bwd))
    return np.abs(prob.theta(u) + 0.5 * prob.a * p * p + prob.V - prob.F)


def scheme_tolerance(model: ContactModel, coupling: Coupling, grid: PeriodicGrid) -> float:
    """The declared first-order accuracy ``5 h (1 + Lip V + F_inf)``."""
    lip_v = model.potential.sup_norms()[1]
    return 5.0 * grid.h * (1.0 + lip_v + coupling.f_infinity)


def _certify(u, prob, cfg):
    step = _backward(u, prob, cfg)
    kd = prob.theta.delta * cfg.dt
    return float(np.max(np.abs(step - u))) * (1.0 + kd) / kd


def solve_u_minus(
    model: ContactModel,
    coupling: Coupling,
    m: GridMeasure,
    seed: GridFunction | None = None,
    cfg: SemigroupConfig | None = None,
) -> WeakKamSolution:
    """Long-time limit of the backward semigroup, the unique viscosity solution.

    Parameters
    ----------
    seed : GridFunction, optional
        Initial datum; defaults to zero. The limit does not depend on it.
    cfg : SemigroupConfig, optional
        Discretization; defaults are resolved from the a-priori bounds.

    Returns
    -------
    WeakKamSolution
        ``converged`` is set when the certified error bound is below the
        stopping tolerance. Hitting ``max_steps`` is reported, not raised.
    """
    grid = m.grid
    cfg = _resolve(cfg, model, coupling, grid)
    prob = _Problem(model, coupling, m, grid)
    u = np.zeros(grid.n) if seed is None else np.array(seed.values, dtype=float)
    if u.shape[0] != grid.n:
        raise ValueError("seed lives on a different grid")
    kd = model.delta * cfg.dt
    steps = 0
    bound = math.inf
    if cfg.method == "relax":
        theta_inv_r = np.asarray(theta_inverse(model.theta, prob.r), dtype=float)
        floor = 4.0 * np.finfo(float).eps
        while steps < cfg.max_steps:
            w = _nodal_sweep(u, prob, cfg.v_max, theta_inv_r, cfg.inner_tol)
            steps += 1
            inc = float(np.max(np.abs(w - u)))
            u = w
            if inc <= max(cfg.inner_tol, floor) * (1.0 + float(np.max(np.abs(u)))):
                break
        bound = _certify(u, prob, cfg)
    # the march also serves as a fallback when relaxation stalls above tolerance
    while bound > cfg.tolerance(u) and steps < cfg.max_steps:
        w = _backward(u, prob, cfg)
        steps += 1
        bound = float(np.max(np.abs(w - u))) * (1.0 + kd) / kd
        # the bound above is for u; w is closer by the contraction factor
        bound /= 1.0 + kd
        u = w
    converged = bound <= cfg.tolerance(u)
    res = float(np.max(discrete_residual(u, prob)))
    return WeakKamSolution(GridFunction(grid, u), res, steps, bool(converged), float(bound), cfg)


def solve_u_plus(
    u_minus,
    model: ContactModel,
    coupling: Coupling,
    m: GridMeasure,
    cfg: SemigroupConfig | None = None,
) -> ForwardSolution:
    """Long-time limit of the forward semigroup started at ``u_minus``.

    The forward orbit of ``u_minus`` is nonincreasing in time, so every step is
    clamped from above by ``u_minus``; this removes the slow upward drift the
    forward (anti-damped) scheme otherwise accumulates at the Aubry nodes.
    Stops when the sup increment per step falls below ``dt * tol_conv``.
    """
    if isinstance(u_minus, WeakKamSolution):
        if not u_minus.converged:
            raise SchemeError("solve_u_plus needs a converged u_minus")
        um = u_minus.u_minus
    else:
        um = u_minus
    grid = um.grid
    cfg = _resolve(cfg, model, coupling, grid)
    prob = _Problem(model, coupling, m, grid)
    cap = um.values
    v = cap.copy()
    inc = math.inf
    steps = 0
    tol = cfg.dt * cfg.tolerance(cap)
    while steps < cfg.max_steps:
        w = np.minimum(cap, _forward(v, prob, cfg))
        steps += 1
        inc = float(np.max(np.abs(w - v)))
        v = w
        if inc <= tol:
            break
    return ForwardSolution(GridFunction(grid, v), steps, bool(inc <= tol), inc)


def frozen_level_solution(model: ContactModel, coupling: Coupling, m: GridMeasure, a_m: float | None = None) -> GridFunction:
    """A viscosity solution of ``H(x, a_m, Dw) = F(x, m)`` with ``w = 0`` on its zero set.

    With ``a_m`` admissible the equation reads ``|w'| = rho(x)`` where
    ``rho = sqrt(2 (F - V - theta(a_m)) / a)`` vanishes exactly on the maximizers
    of ``V - F``. The solution is the ``rho``-weighted circle distance to that
    set, integrated with the trapezoid rule.
    """
    grid = m.grid
    if a_m is None:
        a_m = solve_a_m(model, coupling, m)
    prob = _Problem(model, coupling, m, grid)
    slack = np.maximum(prob.r - float(model.theta(a_m)), 0.0)
    rho = np.sqrt(2.0 * slack / prob.a)
    n, h = grid.n, grid.h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (rho + np.roll(rho, -1)))])
    total = cum[-1]
    R = cum[:n]
    zeros = np.flatnonzero(slack <= 1e-12 * (1.0 + np.max(np.abs(prob.r))))
    if zeros.size == 0:
        zeros = np.array([int(np.argmin(slack))])
    d = np.abs(R[:, None] - R[zeros][None, :])
    w = np.min(np.minimum(d, total - d), axis=1)
    return GridFunction(grid, w)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def finite_action(
    model: ContactModel,
    coupling: Coupling,
    m: GridMeasure,
    x: int,
    y: int,
    t: float,
    steps: int = 8,
    a_m: float | None = None,
) -> float:
    """Minimal frozen-level action between nodes ``x`` and ``y`` over horizon ``t``.

    Paths are piecewise linear with ``steps`` pieces of equal duration joining
    grid nodes (shortest displacement on the circle). Each piece is integrated
    with 5-point Gauss-Legendre quadrature and the optimum is found by min-plus
    dynamic programming. The result is an upper approximation of the
    continuum infimum.
    """
    if not t > 0:
        raise ValueError("horizon must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    grid = m.grid
    n = grid.n
    if a_m is None:
        a_m = solve_a_m(model, coupling, m)
    tau = t / steps
    nodes = grid.nodes
    disp = nodes[None, :] - nodes[:, None]
    disp = disp - np.round(disp)
    vel = disp / tau
    s = 0.5 * (_GL_NODES + 1.0)
    pts = nodes[:, None, None] + disp[:, :, None] * s[None, None, :]
    pts = np.mod(pts, 1.0)
    flat = pts.reshape(-1)
    inv_a = (1.0 / model.kinetic(flat)).reshape(pts.shape)
    pot = (model.potential(flat) - coupling.value(flat, m)).reshape(pts.shape)
    integrand = 0.5 * (vel[:, :, None] ** 2) * inv_a - pot - float(model.theta(a_m))
    cost = tau * 0.5 * np.sum(integrand * _GL_WEIGHTS[None, None, :], axis=-1)
    c = np.full(n, np.inf)
    c[int(x) % n] = 0.0
    for _ in range(steps):
        c = np.min(c[:, None] + cost, axis=0)
    return float(c[int(y) % n])


def critical_value(
    model: ContactModel,
    coupling: Coupling,
    m: GridMeasure,
    a: float,
    horizon: float = 40.0,
    tol: float | None = None,
) -> CriticalValue:
    """Critical value of ``K(x, p) = H(x, a, p) - F(x, m)``.

    For the reversible family this is ``max_x K(x, 0)``. The value is
    cross-checked by the long-time average ``-(T_T phi - T_{T/2} phi) / (T/2)``
    of the classical (u-independent) Lax-Oleinik semigroup.

    Raises
    ------
    SchemeError
        When the two estimates disagree by more than ``tol``
        (default ``scheme_tolerance + 4 / horizon``).
    """
    grid = m.grid
    prob = _Problem(model, coupling, m, grid)
    k0 = float(model.theta(a)) + prob.V - prob.F
    value = float(np.max(k0))
    a_max = float(np.max(prob.a))
    slope = math.sqrt(2.0 * max(float(np.max(k0 - np.min(k0))), 0.0) / float(np.min(prob.a)))
    v_max = (slope + 1.0) * a_max
    dt = 0.9 * grid.h / v_max
    n_half = int(math.ceil(0.5 * horizon / dt))
    phi = np.zeros(grid.n)
    for i in range(2 * n_half):
        if i == n_half:
            mid = phi.copy()
        mu = np.minimum(np.roll(phi, 1), np.roll(phi, -1))
        phi = phi - dt * (psi((phi - mu) / grid.h, prob.a, v_max) + k0)
    rate = -float(np.mean(phi - mid)) / (n_half * dt)
    if tol is None:
        tol = scheme_tolerance(model, coupling, grid) + 4.0 / horizon
    if abs(rate - value) > tol:
        raise SchemeError(f"critical value {value} and long-time estimate {rate} disagree beyond {tol}")
    return CriticalValue(value, rate, horizon)

