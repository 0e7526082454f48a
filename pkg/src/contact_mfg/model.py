"""Contact Hamiltonians of mechanical type and the mean-field coupling.

The family is

    H(x, u, p) = theta(u) + a(x) p^2 / 2 + V(x)

on the unit circle, with Lagrangian ``L(x, u, v) = v^2 / (2 a(x)) - theta(u) - V(x)``.
The coupling is ``F(x, m) = g(x) + beta * (K_eps * m)(x)`` with a wrapped
Gaussian kernel ``K_eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import AssumptionViolation
from .grid import GridMeasure, PeriodicGrid, d1_weights

__all__ = [
    "Theta",
    "Func1D",
    "ContactModel",
    "WrappedGaussian",
    "Coupling",
    "Bounds",
    "AssumptionReport",
    "eval_H",
    "eval_partials",
    "eval_L",
    "check_assumptions",
    "solve_a_m",
    "compute_bounds",
    "action_bound",
    "theta_inverse",
]

# Resolution used when a sup over the circle has to be sampled.
_FINE_N = 4096
_DIAM = 0.5


@dataclass(frozen=True)
class Theta:
    """Strictly increasing u-dependence of the Hamiltonian.

    Parameters
    ----------
    kind : {"linear", "sine", "arctan"}
        ``linear`` is ``slope * u``; ``sine`` is ``slope * u + amplitude * sin(u)``;
        ``arctan`` is ``arctan(u)``, whose derivative degenerates at infinity.
    slope, amplitude : float
        Shape parameters. ``sine`` needs ``|amplitude| < slope``.
    """

    kind: str = "linear"
    slope: float = 1.0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "sine", "arctan"):
            raise ValueError(f"unknown theta kind {self.kind!r}")
        if self.kind != "arctan" and not self.slope > 0:
            raise ValueError("theta slope must be positive")
        if self.kind == "sine" and not abs(self.amplitude) < self.slope:
            raise ValueError("sine theta needs |amplitude| < slope to stay strictly increasing")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            return self.slope * u
        if self.kind == "sine":
            return self.slope * u + self.amplitude * np.sin(u)
        return np.arctan(u)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            return np.full_like(u, self.slope)
        if self.kind == "sine":
            return self.slope + self.amplitude * np.cos(u)
        return 1.0 / (1.0 + u * u)

    @property
    def delta(self) -> float:
        """Declared lower bound of ``theta'`` over the whole real line."""
        if self.kind == "linear":
            return self.slope
        if self.kind == "sine":
            return self.slope - abs(self.amplitude)
        return 0.0

    @property
    def lam(self) -> float:
        """Declared upper bound of ``theta'``."""
        if self.kind == "linear":
            return self.slope
        if self.kind == "sine":
            return self.slope + abs(self.amplitude)
        return 1.0

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"


def theta_inverse(theta: Theta, y, tol: float = 1e-13):
    """Solve ``theta(u) = y`` elementwise.

    Closed form for linear ``theta``; otherwise a vectorized bisection on an
    expanding bracket. Raises ``AssumptionViolation`` when ``y`` lies outside
    the range of ``theta``.
    """
    y = np.asarray(y, dtype=float)
    if theta.kind == "linear":
        return y / theta.slope
    if theta.kind == "arctan":
        if np.any(np.abs(y) >= np.pi / 2):
            raise AssumptionViolation("H3", "value outside the range of arctan", witness=float(np.max(np.abs(y))))
        return np.tan(y)
    # slope*u - |b| <= theta(u) <= slope*u + |b|
    b = abs(theta.amplitude)
    lo = (y - b) / theta.slope - 1.0
    hi = (y + b) / theta.slope + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = theta(mid) > y
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) < tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Func1D:
    """A periodic scalar function of ``x`` together with its derivative."""

    value: Callable
    deriv: Callable
    label: str = ""

    def __call__(self, x):
        return np.asarray(self.value(np.asarray(x, dtype=float)), dtype=float) + 0.0 * np.asarray(x, dtype=float)

    def d(self, x):
        return np.asarray(self.deriv(np.asarray(x, dtype=float)), dtype=float) + 0.0 * np.asarray(x, dtype=float)

    @classmethod
    def constant(cls, c: float):
        return cls(lambda x: np.full_like(x, float(c)), lambda x: np.zeros_like(x), label=repr(float(c)))

    @classmethod
    def cosine(cls, k: int = 1, amplitude: float = 1.0):
        """``amplitude * cos(2 pi k x)``."""
        w = 2.0 * np.pi * k
        return cls(
            lambda x: amplitude * np.cos(w * x),
            lambda x: -amplitude * w * np.sin(w * x),
            label=f"{amplitude}*cos(2*pi*{k}*x)",
        )

    @classmethod
    def from_expression(cls, expr):
        """Wrap a parsed expression (anything with ``evaluate`` and ``derivative``)."""
        dexpr = expr.derivative()
        return cls(expr.evaluate, dexpr.evaluate, label=str(expr))

    def sup_norms(self, n: int = _FINE_N):
        xs = np.arange(n) / n
        return float(np.max(np.abs(self(xs)))), float(np.max(np.abs(self.d(xs))))


@dataclass(frozen=True)
class ContactModel:
    """``H(x, u, p) = theta(u) + a(x) p^2 / 2 + V(x)``; reversible by construction."""

    theta: Theta = field(default_factory=Theta)
    kinetic: Func1D = field(default_factory=lambda: Func1D.constant(1.0))
    potential: Func1D = field(default_factory=lambda: Func1D.constant(0.0))

    @property
    def reversible(self) -> bool:
        return True

    @property
    def delta(self) -> float:
        return self.theta.delta

    @property
    def lam(self) -> float:
        return self.theta.lam

    @classmethod
    def cosine(cls, k: int = 1, theta: Theta | None = None):
        """``theta(u) + p^2/2 + cos(2 pi k x)``, the standard benchmark."""
        return cls(theta or Theta(), Func1D.constant(1.0), Func1D.cosine(k))

    @classmethod
    def flat(cls, theta: Theta | None = None):
        return cls(theta or Theta(), Func1D.constant(1.0), Func1D.constant(0.0))

    def a_on(self, grid: PeriodicGrid) -> np.ndarray:
        return self.kinetic(grid.nodes)

    def v_on(self, grid: PeriodicGrid) -> np.ndarray:
        return self.potential(grid.nodes)


@dataclass(frozen=True)
class WrappedGaussian:
    """Periodization of the centred Gaussian density with standard deviation ``eps``."""

    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("kernel bandwidth must be positive")

    def _images(self):
        k = int(math.ceil(8.0 * self.eps)) + 1
        return np.arange(-k, k + 1, dtype=float)

    def __call__(self, d):
        d = np.mod(np.asarray(d, dtype=float), 1.0)[..., None] - self._images()
        s = np.exp(-(d * d) / (2.0 * self.eps**2)).sum(axis=-1)
        return s / (self.eps * math.sqrt(2.0 * math.pi))

    def deriv(self, d):
        d = np.mod(np.asarray(d, dtype=float), 1.0)[..., None] - self._images()
        s = (-d / self.eps**2 * np.exp(-(d * d) / (2.0 * self.eps**2))).sum(axis=-1)
        return s / (self.eps * math.sqrt(2.0 * math.pi))


class Coupling:
    """Mean-field cost ``F(x, m) = g(x) + beta * (K * m)(x)``.

    Parameters
    ----------
    base : Func1D, optional
        The measure-independent part ``g``. Defaults to zero.
    strength : float
        ``beta``. Positive values penalize crowding.
    kernel : WrappedGaussian, optional
        Required when ``strength`` is nonzero.
    """

    def __init__(self, base: Func1D | None = None, strength: float = 0.0, kernel: WrappedGaussian | None = None):
        self.base = base if base is not None else Func1D.constant(0.0)
        self.strength = float(strength)
        if self.strength != 0.0 and kernel is None:
            raise ValueError("a nonzero coupling strength needs a kernel")
        self.kernel = kernel
        xs = np.arange(_FINE_N) / _FINE_N
        g_sup, dg_sup = self.base.sup_norms()
        if kernel is not None:
            k_sup = float(np.max(np.abs(kernel(xs))))
            dk_sup = float(np.max(np.abs(kernel.deriv(xs))))
        else:
            k_sup = dk_sup = 0.0
        b = abs(self.strength)
        self.f_infinity = g_sup + dg_sup + b * (k_sup + dk_sup)
        self.lip_in_m = b * dk_sup
        self._cache = {}

    @classmethod
    def zero(cls):
        return cls()

    @property
    def is_local_constant(self) -> bool:
        return self.strength == 0.0

    def __repr__(self):
        eps = None if self.kernel is None else self.kernel.eps
        return f"Coupling(base={self.base.label!r}, strength={self.strength}, eps={eps})"

    def _kernel_fft(self, grid: PeriodicGrid):
        key = ("kfft", grid.n)
        if key not in self._cache:
            self._cache[key] = np.fft.rfft(self.kernel(grid.nodes))
        return self._cache[key]

    def on_grid(self, grid: PeriodicGrid, m: GridMeasure | np.ndarray | None) -> np.ndarray:
        """Values ``F(x_i, m)`` at all nodes; the convolution is an exact circulant product."""
        g = self.base(grid.nodes)
        if self.strength == 0.0:
            return g
        w = m.weights if isinstance(m, GridMeasure) else np.asarray(m, dtype=float)
        conv = np.fft.irfft(self._kernel_fft(grid) * np.fft.rfft(w), n=grid.n)
        return g + self.strength * conv

    def value(self, x, m: GridMeasure):
        """``F(x, m)`` at arbitrary points, summing the kernel over the atoms of ``m``."""
        x = np.asarray(x, dtype=float)
        out = self.base(x)
        if self.strength != 0.0:
            idx = np.flatnonzero(m.weights)
            k = self.kernel(x[..., None] - m.grid.nodes[idx])
            out = out + self.strength * (k @ m.weights[idx])
        return out

    def dx(self, x, m: GridMeasure):
        """``dF/dx (x, m)``."""
        x = np.asarray(x, dtype=float)
        out = self.base.d(x)
        if self.strength != 0.0:
            idx = np.flatnonzero(m.weights)
            k = self.kernel.deriv(x[..., None] - m.grid.nodes[idx])
            out = out + self.strength * (k @ m.weights[idx])
        return out


@dataclass(frozen=True)
class Bounds:
    """A-priori constants for the family.

    ``d1_bound`` bounds the admissible level ``|a_m|``, ``d2_lip`` the slopes of
    the frozen-level solutions, ``d3_sup`` the sup norm of ``u_m``, ``e_t`` the
    action upper bound at horizon ``t0`` and ``b_const`` the classical Lipschitz
    constant of the frozen problem.
    """

    d1_bound: float
    d2_lip: float
    d3_sup: float
    e_t: float
    t0: float
    b_const: float
    f_infinity: float


@dataclass
class AssumptionReport:
    """Outcome of :func:`check_assumptions`.

    ``passed`` maps each assumption key to a boolean, ``witnesses`` holds the
    sample that decided each failure and ``estimates`` the sampled constants.
    """

    passed: dict
    witnesses: dict
    estimates: dict
    messages: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "passed": dict(self.passed),
            "witnesses": dict(self.witnesses),
            "estimates": dict(self.estimates),
            "messages": dict(self.messages),
        }


def eval_H(model: ContactModel, x, u, p):
    """``theta(u) + a(x) p^2 / 2 + V(x)``; broadcasts over array inputs."""
    p = np.asarray(p, dtype=float)
    return model.theta(u) + 0.5 * model.kinetic(x) * (p * p) + model.potential(x)


def eval_partials(model: ContactModel, x, u, p):
    """Analytic ``(H_x, H_u, H_p)``."""
    p = np.asarray(p, dtype=float)
    hx = 0.5 * model.kinetic.d(x) * (p * p) + model.potential.d(x)
    hu = model.theta.deriv(u) + 0.0 * p
    hp = model.kinetic(x) * p
    return hx, hu, hp


def eval_L(model: ContactModel, x, u, v):
    """Closed-form Legendre transform ``v^2 / (2 a(x)) - theta(u) - V(x)``."""
    v = np.asarray(v, dtype=float)
    return (v * v) / (2.0 * model.kinetic(x)) - model.theta(u) - model.potential(x)


def _frozen_max(model, grid, F):
    return float(np.max(model.v_on(grid) - F))


def solve_a_m(model: ContactModel, coupling: Coupling, m: GridMeasure, tol: float = 1e-12) -> float:
    """Admissible level ``a`` with ``max_x (H(x, a, 0) - F(x, m)) = 0``.

    The map ``a -> theta(a) + max(V - F)`` is increasing with slope at least
    ``delta``, so bisection on a bracket derived from the bound ``D_1`` is
    guaranteed to work whenever the assumptions hold.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = m.grid
    c = _frozen_max(model, grid, coupling.on_grid(grid, m))
    if model.theta.is_linear:
        return -c / model.theta.slope
    d1 = _d1_bound(model, coupling, grid)
    lo, hi = -d1 - 1.0, d1 + 1.0
    f_lo, f_hi = float(model.theta(lo)) + c, float(model.theta(hi)) + c
    if not (f_lo <= 0.0 <= f_hi):
        raise AssumptionViolation("H3", "level bracket does not change sign", witness=(lo, f_lo, hi, f_hi))
    # stop on the residual; bisection keeps the sign change inside [lo, hi]
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        f_mid = float(model.theta(mid)) + c
        if abs(f_mid) <= tol or hi - lo < 1e-15 * max(1.0, abs(mid)):
            return mid
        if f_mid > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _d1_bound(model, coupling, grid):
    v = model.v_on(grid)
    f = coupling.f_infinity
    vals = theta_inverse(model.theta, np.array([-np.max(v) - f, -np.max(v) + f]))
    return float(np.max(np.abs(vals)))


def _e_tilde(model, coupling, grid, t, d1):
    a = model.a_on(grid)
    v = model.v_on(grid)
    speed = _DIAM / t
    return float(np.max(speed**2 / (2.0 * a) - v) - model.theta(-d1) + coupling.f_infinity)


def action_bound(model: ContactModel, coupling: Coupling, grid: PeriodicGrid, t: float) -> float:
    """``E_t = t * E~_t``: an upper bound for the frozen action between any two points."""
    if not t > 0:
        raise ValueError("horizon must be positive")
    d1 = _d1_bound(model, coupling, grid)
    return t * _e_tilde(model, coupling, grid, t, d1)


def compute_bounds(model: ContactModel, coupling: Coupling, grid: PeriodicGrid, t0: float = 1.0) -> Bounds:
    """Evaluate the a-priori constants by maximizing over the grid.

    Suprema over ``|u| <= D_1`` are attained at ``u = -D_1`` because ``-theta``
    is decreasing. The circle has diameter 1/2.
    """
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    a = model.a_on(grid)
    v = model.v_on(grid)
    f = coupling.f_infinity
    d1 = _d1_bound(model, coupling, grid)
    th = float(model.theta(-d1))
    d2 = float(np.max(1.0 / (2.0 * a) - v) - th + f)
    e_t = t0 * _e_tilde(model, coupling, grid, t0, d1)
    d3 = 2.0 * d1 + max(e_t + 3.0 * d2 * _DIAM, d2 * _DIAM)
    # theta cancels between the Lagrangian sup and the critical value
    b_const = float(np.max(1.0 / (2.0 * a) - v) + np.max(v) + 2.0 * f)
    return Bounds(d1, d2, d3, e_t, float(t0), b_const, f)


def check_assumptions(
    model: ContactModel,
    coupling: Coupling,
    n_samples: int = 200,
    grid: PeriodicGrid | None = None,
    seed: int = 0,
    strict: bool = False,
) -> AssumptionReport:
    """Sample-based check of the structural assumptions.

    Verifies positivity of ``a`` (H1, H2), the derivative bounds of ``theta``
    on the working interval ``[-10 D_3, 10 D_3]`` (H3), evenness in ``p`` (H4)
    and the coupling constants (F1, F2) on random measure pairs.

    Parameters
    ----------
    n_samples : int
        Number of random samples per check, at least 1.
    strict : bool
        Raise ``AssumptionViolation`` on the first failure instead of reporting.
    """
    if n_samples < 1:
        raise ValueError("sample budget must be at least 1")
    grid = grid or PeriodicGrid(256)
    rng = np.random.default_rng(seed)
    passed, wit, est, msg = {}, {}, {}, {}
    fine = np.arange(_FINE_N) / _FINE_N

    a_fine = model.kinetic(fine)
    i = int(np.argmin(a_fine))
    est["a_min"] = float(a_fine[i])
    est["a_max"] = float(np.max(a_fine))
    ok = bool(np.all(np.isfinite(a_fine)) and a_fine[i] > 0)
    passed["H1"] = passed["H2"] = ok
    if not ok:
        wit["H1"] = wit["H2"] = {"x": float(fine[i]), "a": float(a_fine[i])}
        msg["H1"] = msg["H2"] = "kinetic_coeff not positive"

    th = model.theta
    est["delta"], est["lambda"] = th.delta, th.lam
    if th.delta > 0 and ok:
        half = 10.0 * compute_bounds(model, coupling, grid).d3_sup
    else:
        half = 1e3
    est["working_interval"] = [-half, half]
    us = np.concatenate([rng.uniform(-half, half, n_samples), [-half, 0.0, half]])
    dth = th.deriv(us)
    j = int(np.argmin(dth))
    ok3 = th.delta > 0 and np.isfinite(th.lam) and bool(np.all(dth >= th.delta - 1e-12)) and bool(np.all(dth <= th.lam + 1e-12))
    passed["H3"] = ok3
    if not ok3:
        wit["H3"] = {"u": float(us[j]), "theta_prime": float(dth[j]), "declared_delta": th.delta}
        msg["H3"] = "theta' is not bounded below by a positive constant"

    xs = rng.uniform(0, 1, n_samples)
    uu = rng.uniform(-half, half, n_samples)
    pp = rng.normal(0, 10, n_samples)
    diff = np.abs(eval_H(model, xs, uu, pp) - eval_H(model, xs, uu, -pp))
    k = int(np.argmax(diff))
    passed["H4"] = bool(diff[k] == 0.0)
    if not passed["H4"]:
        wit["H4"] = {"x": float(xs[k]), "u": float(uu[k]), "p": float(pp[k])}
        msg["H4"] = "H is not even in p"

    # sampled F1 / F2 on random measures
    f_seen, lip_seen = 0.0, 0.0
    f_wit, lip_wit = None, None
    for _ in range(n_samples):
        m1 = _random_measure(grid, rng)
        m2 = _random_measure(grid, rng)
        F1 = coupling.on_grid(grid, m1)
        dF1 = coupling.dx(grid.nodes, m1)
        val = float(np.max(np.abs(F1)) + np.max(np.abs(dF1)))
        if val > f_seen:
            f_seen, f_wit = val, m1.weights.nonzero()[0].tolist()
        d = d1_weights(m1.weights, m2.weights, grid.h)
        if d > 0:
            ratio = float(np.max(np.abs(F1 - coupling.on_grid(grid, m2)))) / d
            if ratio > lip_seen:
                lip_seen, lip_wit = ratio, d
    est["f_infinity_declared"] = coupling.f_infinity
    est["f_infinity_sampled"] = f_seen
    est["lip_in_m_declared"] = coupling.lip_in_m
    est["lip_in_m_sampled"] = lip_seen
    passed["F1"] = bool(np.isfinite(coupling.f_infinity) and f_seen <= coupling.f_infinity * (1 + 1e-9) + 1e-12)
    passed["F2"] = bool(lip_seen <= coupling.lip_in_m * (1 + 1e-9) + 1e-12)
    if not passed["F1"]:
        wit["F1"], msg["F1"] = f_wit, "sampled |F| + |F_x| exceeds f_infinity"
    if not passed["F2"]:
        wit["F2"], msg["F2"] = lip_wit, "sampled Lipschitz ratio exceeds lip_in_m"

    report = AssumptionReport(passed, wit, est, msg)
    if strict:
        for key in ("H1", "H2", "H3", "H4", "F1", "F2"):
            if not passed[key]:
                raise AssumptionViolation(key, msg[key], witness=wit.get(key))
    return report


def _random_measure(grid, rng):
    k = int(rng.integers(1, 5))
    idx = rng.choice(grid.n, size=k, replace=False)
    w = np.zeros(grid.n)
    w[idx] = rng.dirichlet(np.ones(k))
    return GridMeasure.normalized(grid, w)
