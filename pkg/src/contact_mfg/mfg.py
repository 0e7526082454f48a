"""Equilibria of the stationary contact mean field game.

A pair ``(u, m)`` is an equilibrium when ``u`` is the viscosity solution of
``H(x, u, Du) = F(x, m)`` and ``m`` is the projection of a Mather measure of
``H - F(., m)``. The best response to ``m`` projects an atomic measure on the
K-set of ``u_m``; equilibria are fixed points of that map and are searched
for by damped (fictitious-play) iteration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import GridFunction, GridMeasure, d1_distance, pushforward
from .mather import KSet, build_mather_measure, extract_kset
from .model import ContactModel, Coupling, eval_partials
from .weak_kam import SemigroupConfig, WeakKamSolution, _Problem, discrete_residual, solve_u_minus

__all__ = [
    "EquilibriumConfig",
    "EquilibriumResult",
    "BestResponse",
    "best_response",
    "iterate_equilibrium",
    "hj_residual",
    "continuity_residual",
]


@dataclass(frozen=True)
class EquilibriumConfig:
    """Settings of the outer iteration.

    Parameters
    ----------
    selection : {"uniform", "residual"}
        Weights of the atomic Mather measure chosen on the K-set.
    damping : "averaging" or float
        ``averaging`` uses ``alpha_k = 1/(k+1)``; a float in ``(0, 1]`` is a fixed step.
    tol_m : float, optional
        ``d_1`` stopping tolerance, default ``max(1e-6, h/10)``.
    tol_mass : float
        Allowed mass of ``m`` outside the K-set of its own solution.
    """

    selection: str = "uniform"
    damping: str | float = "averaging"
    tol_m: float | None = None
    tol_mass: float = 1e-3
    max_outer: int = 200
    modes: int = 8
    tol_h: float | None = None
    tol_g: float | None = None
    semigroup: SemigroupConfig = field(default_factory=SemigroupConfig)

    def __post_init__(self):
        if self.selection not in ("uniform", "residual"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.damping != "averaging":
            a = float(self.damping)
            if not 0 < a <= 1:
                raise ValueError("fixed damping must lie in (0, 1]")
        if self.tol_m is not None and not self.tol_m > 0:
            raise ValueError("tol_m must be positive")
        if not self.tol_mass >= 0:
            raise ValueError("tol_mass must be nonnegative")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")

    def alpha(self, k: int) -> float:
        return 1.0 / (k + 1) if self.damping == "averaging" else float(self.damping)

    def tol_m_for(self, grid) -> float:
        return max(1e-6, grid.h / 10.0) if self.tol_m is None else float(self.tol_m)


class BestResponse(NamedTuple):
    measure: GridMeasure
    solution: WeakKamSolution
    kset: KSet


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    u: GridFunction
    m: GridMeasure
    hj_residual: float
    continuity_residual: float
    d1_gap: float
    support_leak: float
    iterations: int
    converged: bool
    kset: KSet
    trace: list = field(default_factory=list)

    def report(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "d1_gap": self.d1_gap,
            "support_leak": self.support_leak,
            "hj_residual": self.hj_residual,
            "continuity_residual": self.continuity_residual,
            "kset": [int(i) for i in self.kset.indices],
            "trace": self.trace,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.report(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def best_response(
    m: GridMeasure,
    model: ContactModel,
    coupling: Coupling,
    cfg: EquilibriumConfig | None = None,
    seed: GridFunction | None = None,
) -> BestResponse:
    """One selection from the best-response set of ``m``.

    Solves for ``u_m``, extracts its K-set, places an atomic Mather measure on
    it and projects to the circle.
    """
    cfg = cfg or EquilibriumConfig()
    sol = solve_u_minus(model, coupling, m, seed=seed, cfg=cfg.semigroup)
    ks = extract_kset(sol.u_minus, model, coupling, m, cfg.tol_h, cfg.tol_g)
    eta = build_mather_measure(ks, sol.u_minus, cfg.selection)
    return BestResponse(pushforward(eta, m.grid), sol, ks)


def _leak(m: GridMeasure, ks: KSet) -> float:
    inside = float(np.sum(m.weights[ks.indices]))
    return max(0.0, 1.0 - inside)


def iterate_equilibrium(
    m0: GridMeasure,
    model: ContactModel,
    coupling: Coupling,
    cfg: EquilibriumConfig | None = None,
) -> EquilibriumResult:
    """Damped best-response iteration ``m <- (1 - alpha_k) m + alpha_k BR(m)``.

    Stops once ``d_1(m_k, m_{k+1}) <= tol_m`` and ``m_k`` leaks at most
    ``tol_mass`` outside the K-set of ``u_{m_k}``; the returned pair is
    ``(u_{m_k}, m_k)``. Hitting ``max_outer`` returns ``converged=False``
    with the last pair and the full trace.
    """
    cfg = cfg or EquilibriumConfig()
    grid = m0.grid
    tol_m = cfg.tol_m_for(grid)
    m = m0
    seed = None
    trace = []
    for k in range(cfg.max_outer):
        br = best_response(m, model, coupling, cfg, seed=seed)
        seed = br.solution.u_minus
        leak = _leak(m, br.kset)
        m_next = m.mix(br.measure, cfg.alpha(k))
        gap = d1_distance(m, m_next)
        trace.append({"k": k, "d1_gap": gap, "support_leak": leak, "kset_size": len(br.kset)})
        done = gap <= tol_m and leak <= cfg.tol_mass
        if done or k == cfg.max_outer - 1:
            u = br.solution.u_minus
            return EquilibriumResult(
                u=u,
                m=m,
                hj_residual=hj_residual(u, model, coupling, m),
                continuity_residual=continuity_residual(u, m, model, coupling, cfg.modes),
                d1_gap=gap,
                support_leak=leak,
                iterations=k + 1,
                converged=bool(done),
                kset=br.kset,
                trace=trace,
            )
        m = m_next
    raise AssertionError("unreachable")


def hj_residual(u: GridFunction, model: ContactModel, coupling: Coupling, m: GridMeasure) -> float:
    """Discrete residual of ``H(x, u, Du) = F(x, m)`` in the viscosity sense.

    The larger of the kink-aware pointwise residual and the subsolution
    defect ``max(0, H(x, u, p_min) - F)``, where ``p_min`` is the smaller
    one-sided slope in magnitude (zero at discrete local maxima).
    """
    prob = _Problem(model, coupling, m, u.grid)
    v = u.values
    res = discrete_residual(v, prob)
    fwd = (np.roll(v, -1) - v) / prob.h
    bwd = (v - np.roll(v, 1)) / prob.h
    p_min = np.where((bwd >= 0) & (fwd <= 0), 0.0, np.minimum(np.abs(fwd), np.abs(bwd)))
    sub = np.maximum(prob.theta(v) + 0.5 * prob.a * p_min * p_min + prob.V - prob.F, 0.0)
    return float(max(np.max(res), np.max(sub)))


def continuity_residual(u: GridFunction, m: GridMeasure, model: ContactModel, coupling: Coupling | None = None, modes: int = 8) -> float:
    """``max_phi |int phi'(x) H_p(x, u, D_h u) dm|`` over ``sin, cos(2 pi k x)``, ``k <= modes``."""
    if modes < 1:
        raise ValueError("modes must be >= 1")
    grid = u.grid
    x = grid.nodes
    du = (np.roll(u.values, -1) - np.roll(u.values, 1)) / (2.0 * grid.h)
    _, _, hp = eval_partials(model, x, u.values, du)
    flux = hp * m.weights
    worst = 0.0
    for k in range(1, modes + 1):
        w = 2.0 * math.pi * k
        for dphi in (w * np.cos(w * x), -w * np.sin(w * x)):
            worst = max(worst, abs(float(np.dot(dphi, flux))))
    return worst
