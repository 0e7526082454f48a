"""Estimator-style front end (``fit`` / ``predict`` / ``get_params``).

The solvers take no training data; ``fit`` receives the population measure
as nodal weights and ``predict`` evaluates the fitted value function at
arbitrary circle points.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_measure, check_positions
from .expr import parse_expression
from .grid import PeriodicGrid, interpolate
from .mather import extract_kset
from .mfg import EquilibriumConfig, iterate_equilibrium
from .model import ContactModel, Coupling, Func1D, Theta, WrappedGaussian
from .weak_kam import SemigroupConfig, solve_u_minus

__all__ = ["ContactHJSolver", "ContactMFG"]


class _ProblemMixin:
    def _grid(self):
        return PeriodicGrid(self.n)

    def _model(self):
        theta = Theta(self.theta, self.theta_slope, self.theta_amplitude)
        a = Func1D.from_expression(parse_expression(self.kinetic_coeff))
        V = Func1D.from_expression(parse_expression(self.potential))
        return ContactModel(theta, a, V)

    def _coupling(self):
        g = Func1D.from_expression(parse_expression(self.base))
        kernel = WrappedGaussian(self.eps) if self.strength != 0.0 else None
        return Coupling(g, self.strength, kernel)

    def _semigroup(self):
        return SemigroupConfig(method=self.method)

    def predict(self, x):
        """Fitted value function at the points ``x`` (linear interpolation)."""
        check_is_fitted(self, "u_")
        return interpolate(self.u_, check_positions(x))


class ContactHJSolver(_ProblemMixin, BaseEstimator):
    """Viscosity solution of ``H(x, u, Du) = F(x, m)`` for a fixed measure.

    Parameters
    ----------
    potential, kinetic_coeff, base : str
        Expressions in ``x`` for ``V``, ``a`` and the coupling base ``g``.
    theta, theta_slope, theta_amplitude
        The u-dependence, see :class:`~contact_mfg.model.Theta`.
    strength, eps : float
        Coupling strength and kernel bandwidth.
    n : int
        Grid size.
    method : {"relax", "march"}

    Attributes
    ----------
    u_ : GridFunction
    solution_ : WeakKamSolution
    kset_ : KSet
    """

    def __init__(
        self,
        potential="cos(2*pi*x)",
        kinetic_coeff="1",
        theta="linear",
        theta_slope=1.0,
        theta_amplitude=0.0,
        base="0",
        strength=0.0,
        eps=0.1,
        n=128,
        method="relax",
    ):
        self.potential = potential
        self.kinetic_coeff = kinetic_coeff
        self.theta = theta
        self.theta_slope = theta_slope
        self.theta_amplitude = theta_amplitude
        self.base = base
        self.strength = strength
        self.eps = eps
        self.n = n
        self.method = method

    def fit(self, X=None, y=None):
        """Solve for the measure given by the weights ``X`` (uniform if omitted)."""
        grid = self._grid()
        m = check_measure(X, grid)
        model, coupling = self._model(), self._coupling()
        self.solution_ = solve_u_minus(model, coupling, m, cfg=self._semigroup())
        self.u_ = self.solution_.u_minus
        self.kset_ = extract_kset(self.u_, model, coupling, m)
        self.converged_ = self.solution_.converged
        return self


class ContactMFG(_ProblemMixin, BaseEstimator):
    """Equilibrium ``(u, m)`` of the stationary contact mean field game.

    Parameters are those of :class:`ContactHJSolver` plus ``selection``,
    ``max_outer`` and ``tol_mass`` of the outer iteration. ``fit`` takes the
    initial measure.

    Attributes
    ----------
    u_ : GridFunction
    measure_ : GridMeasure
    result_ : EquilibriumResult
    """

    def __init__(
        self,
        potential="cos(2*pi*x)",
        kinetic_coeff="1",
        theta="linear",
        theta_slope=1.0,
        theta_amplitude=0.0,
        base="0",
        strength=0.0,
        eps=0.1,
        n=128,
        method="relax",
        selection="uniform",
        max_outer=200,
        tol_mass=1e-3,
    ):
        self.potential = potential
        self.kinetic_coeff = kinetic_coeff
        self.theta = theta
        self.theta_slope = theta_slope
        self.theta_amplitude = theta_amplitude
        self.base = base
        self.strength = strength
        self.eps = eps
        self.n = n
        self.method = method
        self.selection = selection
        self.max_outer = max_outer
        self.tol_mass = tol_mass

    def fit(self, X=None, y=None):
        grid = self._grid()
        m0 = check_measure(X, grid)
        cfg = EquilibriumConfig(
            selection=self.selection,
            max_outer=self.max_outer,
            tol_mass=self.tol_mass,
            semigroup=self._semigroup(),
        )
        self.result_ = iterate_equilibrium(m0, self._model(), self._coupling(), cfg)
        self.u_ = self.result_.u
        self.measure_ = self.result_.m
        self.converged_ = self.result_.converged
        return self

    def predict_measure(self):
        """Nodal weights of the fitted equilibrium measure."""
        check_is_fitted(self, "measure_")
        return np.asarray(self.measure_.weights)
