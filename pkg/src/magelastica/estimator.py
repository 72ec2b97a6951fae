"""Scikit-learn style front end for the design-and-control optimizer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

import warnings

from .grid import ScalarField
from .magnetics import Control, ControlSet, solve_state
from .programming import (
    DEFAULT_CAP,
    ProblemSpec,
    attainment_error,
    direct_minimize,
    outer_loop,
)
from .validation import check_controls, check_targets, targets_as_fields


class ShapeProgrammer(BaseEstimator):
    """Learn a magnetization design and per-target fields from target shapes.

    ``fit`` consumes an (n_targets, n_nodes) array of rotation fields sampled
    on the uniform nodes of [0, 1] and computes the magnetization angle
    profile plus one applied-field pair per target whose equilibria best
    match the targets under quadratic penalties.

    Parameters
    ----------
    epsilon : float
        Design-roughness penalty weight (must be positive).
    gamma : float
        Field-intensity penalty weight; larger values buy uniqueness and
        contraction at the price of weaker fields.
    cap : float
        Admissible bound on each |h_i|; must stay below the uniqueness
        threshold (pi/2)^2.
    n_cells : int or None
        Grid resolution; inferred from the column count when None.
    solver : {"fixed_point", "gradient"}
        Nested fixed-point scheme or direct gradient descent on the reduced
        cost.
    inner_tol, outer_tol, inner_max, outer_max : float, float, int, int
        Iteration controls passed through to the optimizer.

    Attributes
    ----------
    alpha_ : ndarray of shape (n_nodes,)
        Fitted magnetization angle per node.
    controls_ : ndarray of shape (n_targets, 2)
        Fitted applied-field pair per target.
    thetas_ : ndarray of shape (n_targets, n_nodes)
        Equilibrium shapes attained at the fitted design and controls.
    report_ : SolveReport
        Convergence history, residuals, and bounds audit.
    cost_ : float
        Final penalized cost.
    n_iter_ : int
        Outer iterations performed.
    """

    def __init__(
        self,
        epsilon: float = 0.1,
        gamma: float = 10.0,
        cap: float = DEFAULT_CAP,
        n_cells=None,
        solver: str = "fixed_point",
        inner_tol: float = 1e-9,
        outer_tol: float = 1e-8,
        inner_max: int = 200,
        outer_max: int = 500,
    ):
        self.epsilon = epsilon
        self.gamma = gamma
        self.cap = cap
        self.n_cells = n_cells
        self.solver = solver
        self.inner_tol = inner_tol
        self.outer_tol = outer_tol
        self.inner_max = inner_max
        self.outer_max = outer_max

    def _build_spec(self, X) -> ProblemSpec:
        X = check_targets(X, self.n_cells)
        return ProblemSpec(
            targets=targets_as_fields(X),
            epsilon=self.epsilon,
            gamma=self.gamma,
            cap=self.cap,
            inner_tol=self.inner_tol,
            outer_tol=self.outer_tol,
            inner_max=self.inner_max,
            outer_max=self.outer_max,
        )

    def fit(self, X, y=None):
        """Optimize design and controls for the target shapes in ``X``."""
        spec = self._build_spec(X)
        if self.solver == "fixed_point":
            state, report = outer_loop(spec)
        elif self.solver == "gradient":
            state, report = direct_minimize(spec)
        else:
            raise ValueError(
                f"solver must be 'fixed_point' or 'gradient', got {self.solver!r}"
            )
        if report.status != "converged":
            warnings.warn(
                f"optimization ended with status {report.status!r}",
                ConvergenceWarning,
                stacklevel=2,
            )
        self.grid_ = spec.grid
        self.spec_ = spec
        self.alpha_ = state.alpha.values.copy()
        self.controls_ = state.controls.as_array()
        self.thetas_ = np.array([t.values for t in state.thetas])
        self.lambdas_ = np.array([l.values for l in state.lambdas])
        self.report_ = report
        self.cost_ = report.cost
        self.n_iter_ = report.outer_iterations
        return self

    def predict(self, X=None):
        """Equilibrium shapes under the fitted design.

        With ``X=None`` returns the shapes attained at the fitted controls;
        otherwise ``X`` is an (m, 2) array of applied-field pairs and the
        corresponding equilibria are solved on the fitted design.
        """
        check_is_fitted(self, "alpha_")
        if X is None:
            return self.thetas_.copy()
        H = check_controls(X)
        alpha = ScalarField(self.grid_, self.alpha_, "design")
        out = np.empty((H.shape[0], self.grid_.n_cells + 1))
        for i, row in enumerate(H):
            theta = solve_state(Control(row[0], row[1]), alpha)
            out[i] = theta.values
        return out

    def score(self, X, y=None):
        """Negative attainment error of the fit against targets ``X``."""
        check_is_fitted(self, "alpha_")
        X = check_targets(X, self.grid_.n_cells)
        if X.shape[0] != self.controls_.shape[0]:
            raise ValueError(
                f"expected {self.controls_.shape[0]} target rows, got {X.shape[0]}"
            )
        alpha = ScalarField(self.grid_, self.alpha_, "design")
        controls = ControlSet.from_array(self.controls_)
        targets = tuple(ScalarField(self.grid_, r, "target") for r in X)
        return -attainment_error(controls, alpha, targets)
