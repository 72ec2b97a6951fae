"""Optimization drivers for the design-and-control problem.

Given n target shapes, find per-target controls h_i and one magnetization
design alpha minimizing

    (1/2) sum_i int |theta_i - target_i|^2
        + (epsilon/2) int (alpha')^2 + (gamma/2) sum_i |h_i|^2

subject to each theta_i being the equilibrium under (h_i, alpha).  Two
independent routes are provided and cross-checked:

* :func:`outer_loop` - the nested fixed-point scheme: an inner loop iterates
  h -> theta -> lambda -> h at frozen design, an outer loop re-derives the
  design from the multipliers; contraction ratios are recorded so loss of
  contraction is observable rather than assumed away.
* :func:`direct_minimize` - plain gradient descent with backtracking on the
  reduced cost, using the adjoint gradient; serves as an oracle for the
  fixed-point route in the uniqueness regime (gamma large).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .bvp import SolveOptions, bvp_residual_parts, double_integral_representation
from .errors import (
    CapExceededWarning,
    LineSearchError,
    NonConvergenceError,
    NonFiniteValueError,
    SingularOperatorError,
)
from .grid import (
    Grid,
    ScalarField,
    h1_seminorm,
    integral,
    require_same_grid,
    second_derivative_interior,
    sup_norm,
)
from .magnetics import (
    UNIQUENESS_THRESHOLD,
    ControlSet,
    control_update,
    design_update,
    field_dot_dm,
    m_derivative,
    solve_adjoint,
    solve_state,
    state_residual,
)

DEFAULT_CAP = 0.99 * UNIQUENESS_THRESHOLD

# contraction ratios are only trusted while increments sit well above the
# stopping tolerance
_RATIO_FLOOR_FACTOR = 100.0


@dataclass(frozen=True)
class ProblemSpec:
    """Targets, penalty weights, admissible cap, and iteration controls."""

    targets: tuple
    epsilon: float
    gamma: float
    cap: float = DEFAULT_CAP
    inner_tol: float = 1e-9
    outer_tol: float = 1e-8
    inner_max: int = 200
    outer_max: int = 500

    def __post_init__(self):
        targets = tuple(self.targets)
        if not targets:
            raise ValueError("at least one target is required")
        require_same_grid(*targets)
        object.__setattr__(self, "targets", targets)
        if self.epsilon <= 0 or self.gamma <= 0:
            raise ValueError("epsilon and gamma must be positive")
        if not 0 < self.cap < UNIQUENESS_THRESHOLD:
            raise ValueError(f"cap must lie in (0, {UNIQUENESS_THRESHOLD:.6f})")
        if self.inner_tol <= 0 or self.outer_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.inner_max < 1 or self.outer_max < 1:
            raise ValueError("iteration limits must be at least 1")

    @property
    def grid(self) -> Grid:
        return self.targets[0].grid

    @property
    def n(self) -> int:
        return len(self.targets)

    @property
    def target_norm(self) -> float:
        """sqrt(sum_i int target_i^2), the scale controlling minimizer bounds."""
        cached = getattr(self, "_target_norm", None)
        if cached is None:
            total = 0.0
            for t in self.targets:
                total += integral(ScalarField(t.grid, t.values**2))
            cached = float(np.sqrt(total))
            object.__setattr__(self, "_target_norm", cached)
        return cached


@dataclass(frozen=True)
class DesignState:
    """A quadruplet (controls, design, states, multipliers)."""

    controls: ControlSet
    alpha: ScalarField
    thetas: tuple
    lambdas: tuple

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(self.thetas))
        object.__setattr__(self, "lambdas", tuple(self.lambdas))


@dataclass
class BoundsCheck:
    name: str
    passed: bool
    slack: float

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "slack": float(self.slack)}


@dataclass
class SolveReport:
    """Iteration history and audit data for one optimization run."""

    status: str = "converged"
    inner_iterations: int = 0
    outer_iterations: int = 0
    inner_ratios: list = field(default_factory=list)
    outer_ratios: list = field(default_factory=list)
    inner_history: list = field(default_factory=list)
    residuals: dict | None = None
    cost: float | None = None
    gradient_norm: float | None = None
    bounds: list | None = None
    cap_exceeded: bool = False
    cost_history: list = field(default_factory=list)

    @property
    def contraction_estimate(self) -> float:
        """Median of the trusted inner contraction ratios (nan if none)."""
        if not self.inner_ratios:
            return float("nan")
        return float(np.median(self.inner_ratios))

    def to_dict(self):
        return {
            "status": self.status,
            "inner_iterations": self.inner_iterations,
            "outer_iterations": self.outer_iterations,
            "inner_ratios": [float(r) for r in self.inner_ratios],
            "outer_ratios": [float(r) for r in self.outer_ratios],
            "inner_history": self.inner_history,
            "residuals": self.residuals,
            "cost": self.cost,
            "gradient_norm": self.gradient_norm,
            "bounds": [b.to_dict() for b in self.bounds] if self.bounds else None,
            "cap_exceeded": self.cap_exceeded,
            "cost_history": [float(v) for v in self.cost_history],
            "contraction_estimate": self.contraction_estimate,
        }


def cost(spec: ProblemSpec, controls: ControlSet, alpha: ScalarField, thetas) -> float:
    """Penalized tracking cost of an admissible triple."""
    thetas = tuple(thetas)
    if len(thetas) != spec.n or len(controls) != spec.n:
        raise ValueError("one state and one control per target are required")
    grid = require_same_grid(alpha, *thetas, *spec.targets)
    misfit = 0.0
    for th, tg in zip(thetas, spec.targets):
        diff = th.values - tg.values
        misfit += integral(ScalarField(grid, diff * diff))
    penal_a = spec.epsilon * h1_seminorm(alpha) ** 2
    penal_h = spec.gamma * sum(c.magnitude**2 for c in controls)
    return 0.5 * (misfit + penal_a + penal_h)


def residual_cost(controls: ControlSet, alpha: ScalarField, targets) -> float:
    """Summed squared equation residual of the targets themselves.

    Vanishes exactly on attainable pairs; cheap to evaluate because no state
    solve is involved, but it is not the attainment error.
    """
    targets = tuple(targets)
    grid = require_same_grid(alpha, *targets)
    total = 0.0
    for c, tg in zip(controls, targets):
        res = -second_derivative_interior(tg).values - field_dot_dm(
            c, alpha.values + tg.values, 1
        )
        total += integral(ScalarField(grid, res * res))
    return float(total)


def attainment_error(
    controls: ControlSet,
    alpha: ScalarField,
    targets,
    options: SolveOptions | None = None,
) -> float:
    """(1/2) sum_i int |target_i - theta(h_i)|^2 with theta solved per control.

    Each state solve is seeded with its target so that, above the uniqueness
    threshold, the equilibrium branch nearest the target is measured.
    """
    targets = tuple(targets)
    grid = require_same_grid(alpha, *targets)
    total = 0.0
    for c, tg in zip(controls, targets):
        seed = ScalarField(grid, tg.values - tg.values[0])
        th = solve_state(c, alpha, options=options, initial=seed)
        diff = tg.values - th.values
        total += integral(ScalarField(grid, diff * diff))
    return 0.5 * float(total)


def _solve_states(controls, alpha, targets, seeds, options):
    def one(args):
        c, seed = args
        return solve_state(c, alpha, options=options, initial=seed)

    return parallel_map(one, list(zip(controls, seeds)))


def _solve_adjoints(controls, alpha, thetas, targets):
    def one(args):
        c, th, tg = args
        return solve_adjoint(c, alpha, th, tg)

    return parallel_map(one, list(zip(controls, thetas, targets)))


def inner_loop(
    alpha: ScalarField,
    spec: ProblemSpec,
    h_init: ControlSet | None = None,
    theta_init=None,
    options: SolveOptions | None = None,
):
    """Fixed-point iteration h -> theta -> lambda -> h at frozen design.

    Returns ``(controls, thetas, lambdas, report)``.  Iterates are not
    projected back into the admissible ball; leaving it is recorded in the
    report and raised as a :class:`CapExceededWarning` so the iteration map
    stays exactly the optimality chain.
    """
    n = spec.n
    controls = h_init if h_init is not None else ControlSet.zeros(n)
    if len(controls) != n:
        raise ValueError("h_init must provide one control per target")
    seeds = list(theta_init) if theta_init is not None else [None] * n

    report = SolveReport(status="max_iter")
    ratio_floor = max(_RATIO_FLOOR_FACTOR * spec.inner_tol, 1e-14)
    prev_delta = None

    for it in range(1, spec.inner_max + 1):
        thetas = _solve_states(controls, alpha, spec.targets, seeds, options)
        lambdas = _solve_adjoints(controls, alpha, thetas, spec.targets)
        new = ControlSet(
            [
                control_update(lam, alpha, th, spec.gamma)
                for lam, th in zip(lambdas, thetas)
            ]
        )
        delta = max(
            np.hypot(a.hx - b.hx, a.hy - b.hy) for a, b in zip(new, controls)
        )
        if prev_delta is not None and prev_delta > ratio_floor:
            report.inner_ratios.append(delta / prev_delta)
        if new.max_magnitude > spec.cap and not report.cap_exceeded:
            report.cap_exceeded = True
            warnings.warn(
                f"inner iterate left the admissible ball: max|h| = "
                f"{new.max_magnitude:.6f} > cap {spec.cap:.6f}",
                CapExceededWarning,
                stacklevel=2,
            )
        controls = new
        seeds = thetas
        report.inner_iterations = it
        if delta <= spec.inner_tol:
            report.status = "converged"
            break
        if not np.isfinite(delta) or delta > 1e8:
            report.status = "diverged"
            break
        prev_delta = delta

    # refresh states and multipliers at the final controls so the returned
    # quadruplet satisfies its equations to solver tolerance
    thetas = _solve_states(controls, alpha, spec.targets, seeds, options)
    lambdas = _solve_adjoints(controls, alpha, thetas, spec.targets)
    return controls, thetas, lambdas, report


def equation_residuals(
    spec: ProblemSpec,
    state: DesignState,
) -> dict:
    """Sup-style residuals of the four optimality equations at ``state``."""
    grid = require_same_grid(state.alpha, *state.thetas, *state.lambdas)
    ds = grid.ds
    a = state.alpha.values

    res_state = max(
        state_residual(th, state.alpha, c)
        for th, c in zip(state.thetas, state.controls)
    )

    res_adj = 0.0
    rho = np.zeros(grid.n_cells + 1)
    for c, th, lam, tg in zip(state.controls, state.thetas, state.lambdas, spec.targets):
        mixed = field_dot_dm(c, a + th.values, 2)
        src = -lam.values * mixed - (th.values - tg.values)
        parts = bvp_residual_parts(lam.values, src, ds)
        res_adj = max(res_adj, *parts)
        rho += lam.values * mixed

    parts = bvp_residual_parts(a, rho / spec.epsilon, ds)
    res_design = spec.epsilon * max(parts[0], parts[2])
    res_design = max(res_design, abs(a[0]))

    res_control = 0.0
    for c, th, lam in zip(state.controls, state.thetas, state.lambdas):
        dm = m_derivative(a + th.values, 1)
        gx = spec.gamma * c.hx + integral(ScalarField(grid, lam.values * dm[0]))
        gy = spec.gamma * c.hy + integral(ScalarField(grid, lam.values * dm[1]))
        res_control = max(res_control, float(np.hypot(gx, gy)))

    return {
        "state": float(res_state),
        "adjoint": float(res_adj),
        "design": float(res_design),
        "control": float(res_control),
    }


def bounds_audit(spec: ProblemSpec, state: DesignState) -> list:
    """Check the minimizer bound, the state sup bound, and cap membership.

    Slack is the distance to the bound (negative means violated beyond the
    numerical allowance).
    """
    max_h = state.controls.max_magnitude
    theta_bar = spec.target_norm

    slack_min = theta_bar**2 / spec.gamma - max_h**2
    slack_state = min(
        c.magnitude - sup_norm(th) for c, th in zip(state.controls, state.thetas)
    )
    slack_cap = spec.cap - max_h
    return [
        BoundsCheck("control-energy-bound", slack_min >= -1e-8, float(slack_min)),
        BoundsCheck("state-sup-bound", slack_state >= -1e-6, float(slack_state)),
        BoundsCheck("cap-membership", slack_cap >= 0.0, float(slack_cap)),
    ]


def outer_loop(
    spec: ProblemSpec,
    alpha_init: ScalarField | None = None,
    h_init: ControlSet | None = None,
    options: SolveOptions | None = None,
):
    """Nested fixed-point scheme; returns ``(DesignState, SolveReport)``.

    Initial guesses default to the zero design and zero controls; both can
    be overridden.  The outer loop stops when the design increment sup-norm
    falls below ``outer_tol``; on convergence one extra inner pass aligns
    the quadruplet before residuals, cost, and bounds are audited.
    """
    grid = spec.grid
    alpha = alpha_init if alpha_init is not None else ScalarField.zeros(grid, "design")
    if alpha.grid != grid:
        raise ValueError("alpha_init grid does not match the targets")
    if h_init is not None and len(h_init) != spec.n:
        raise ValueError("h_init must provide one control per target")

    report = SolveReport(status="max_iter")
    controls: ControlSet | None = h_init
    thetas = None
    lambdas = None
    prev_delta = None
    ratio_floor = max(_RATIO_FLOOR_FACTOR * spec.outer_tol, 1e-14)

    try:
        for it in range(1, spec.outer_max + 1):
            controls, thetas, lambdas, inner_rep = inner_loop(
                alpha, spec, h_init=controls, theta_init=thetas, options=options
            )
            report.inner_iterations += inner_rep.inner_iterations
            if inner_rep.inner_ratios:
                report.inner_ratios = inner_rep.inner_ratios
            report.cap_exceeded = report.cap_exceeded or inner_rep.cap_exceeded
            report.inner_history.append(
                {
                    "iterations": inner_rep.inner_iterations,
                    "ratios": [float(r) for r in inner_rep.inner_ratios],
                    "converged": inner_rep.status == "converged",
                    "cap_exceeded": inner_rep.cap_exceeded,
                }
            )
            report.outer_iterations = it
            if inner_rep.status != "converged":
                report.status = inner_rep.status
                break

            alpha_new = design_update(controls, lambdas, thetas, alpha, spec.epsilon)
            delta = float(np.max(np.abs(alpha_new.values - alpha.values)))
            if prev_delta is not None and prev_delta > ratio_floor:
                report.outer_ratios.append(delta / prev_delta)
            alpha = alpha_new
            if delta <= spec.outer_tol:
                report.status = "converged"
                break
            if not np.isfinite(delta) or delta > 1e8:
                report.status = "diverged"
                break
            prev_delta = delta
    except SingularOperatorError:
        report.status = "resonant"
    except (NonConvergenceError, NonFiniteValueError):
        report.status = "diverged"

    if thetas is None:
        # first inner pass never completed; report against the zero state
        controls = controls if controls is not None else ControlSet.zeros(spec.n)
        thetas = [ScalarField.zeros(grid, "shape")] * spec.n
        lambdas = [ScalarField.zeros(grid, "multiplier")] * spec.n
    elif report.status == "converged":
        try:
            controls, thetas, lambdas, _ = inner_loop(
                alpha, spec, h_init=controls, theta_init=thetas, options=options
            )
        except SingularOperatorError:
            report.status = "resonant"
        except (NonConvergenceError, NonFiniteValueError):
            report.status = "diverged"

    state = DesignState(controls, alpha, tuple(thetas), tuple(lambdas))
    report.residuals = equation_residuals(spec, state)
    report.cost = cost(spec, controls, alpha, thetas)
    report.bounds = bounds_audit(spec, state)
    return state, report


def _gradient_with_states(
    spec: ProblemSpec,
    controls: ControlSet,
    alpha: ScalarField,
    options: SolveOptions | None = None,
):
    grid = require_same_grid(alpha, *spec.targets)
    thetas = _solve_states(controls, alpha, spec.targets, [None] * spec.n, options)
    lambdas = _solve_adjoints(controls, alpha, thetas, spec.targets)

    grad_h = np.zeros((spec.n, 2))
    rho = np.zeros(grid.n_cells + 1)
    a = alpha.values
    for i, (c, th, lam) in enumerate(zip(controls, thetas, lambdas)):
        ang = a + th.values
        dm = m_derivative(ang, 1)
        grad_h[i, 0] = spec.gamma * c.hx + integral(ScalarField(grid, lam.values * dm[0]))
        grad_h[i, 1] = spec.gamma * c.hy + integral(ScalarField(grid, lam.values * dm[1]))
        rho += lam.values * field_dot_dm(c, ang, 2)

    riesz = double_integral_representation(ScalarField(grid, rho))
    grad_alpha = ScalarField(grid, spec.epsilon * a + riesz.values)
    return grad_h, grad_alpha, thetas, lambdas


def reduced_cost_gradient(
    spec: ProblemSpec,
    controls: ControlSet,
    alpha: ScalarField,
    options: SolveOptions | None = None,
):
    """Adjoint gradient of the reduced cost at (controls, alpha).

    Returns ``(grad_controls, grad_alpha)``: an (n, 2) array of per-control
    derivatives gamma h_i + int lambda_i Dm(alpha + theta_i), and the
    H1-Riesz representative of the design derivative, the field g with
    int g' b' = epsilon int alpha' b' + int (sum_i lambda_i h_i .
    D2m(alpha + theta_i)) b for every left-clamped b.  Zero exactly at
    solutions of the optimality system.
    """
    grad_h, grad_alpha, _, _ = _gradient_with_states(spec, controls, alpha, options)
    return grad_h, grad_alpha


def gradient_norm(grad_h: np.ndarray, grad_alpha: ScalarField) -> float:
    """Norm in the product metric: Euclidean controls x H1 design."""
    return float(np.sqrt(np.sum(grad_h**2) + h1_seminorm(grad_alpha) ** 2))


def direct_minimize(
    spec: ProblemSpec,
    init: DesignState | None = None,
    grad_tol: float = 1e-6,
    max_iter: int = 5000,
    options: SolveOptions | None = None,
):
    """Gradient descent with backtracking on the reduced cost.

    Independent of the fixed-point scheme; in the uniqueness regime both
    converge to the same quadruplet.  The cost decreases monotonically along
    iterations (Armijo backtracking), and the run stops once the gradient
    norm in the product metric drops below ``grad_tol``.
    """
    grid = spec.grid
    if init is not None:
        h = init.controls.as_array()
        a = init.alpha.values.copy()
    else:
        h = np.zeros((spec.n, 2))
        a = np.zeros(grid.n_cells + 1)

    def reduced_cost(h_arr, a_arr, seeds):
        alpha_f = ScalarField(grid, a_arr, "design")
        cset = ControlSet.from_array(h_arr)
        thetas = _solve_states(cset, alpha_f, spec.targets, seeds, options)
        return cost(spec, cset, alpha_f, thetas), thetas, cset, alpha_f

    seeds = [None] * spec.n
    value, thetas, cset, alpha_f = reduced_cost(h, a, seeds)
    report = SolveReport(status="max_iter")
    report.cost_history.append(value)
    step = 1.0
    lambdas = None

    for it in range(1, max_iter + 1):
        grad_h, grad_a, thetas, lambdas = _gradient_with_states(spec, cset, alpha_f, options)
        gnorm = gradient_norm(grad_h, grad_a)
        report.outer_iterations = it
        report.gradient_norm = gnorm
        if gnorm <= grad_tol:
            report.status = "converged"
            break

        sq = gnorm**2
        accepted = False
        t = step
        for _ in range(45):
            h_try = h - t * grad_h
            a_try = a - t * grad_a.values
            try:
                val_try, thetas_try, cset_try, alpha_try = reduced_cost(h_try, a_try, thetas)
            except (NonConvergenceError, NonFiniteValueError):
                t *= 0.5
                continue
            if val_try <= value - 1e-4 * t * sq:
                h, a, value = h_try, a_try, val_try
                thetas, cset, alpha_f = thetas_try, cset_try, alpha_try
                report.cost_history.append(value)
                step = min(t * 2.0, 1e6)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if gnorm <= 10.0 * grad_tol:
                report.status = "converged"
                break
            raise LineSearchError(
                f"backtracking failed at iteration {it} with gradient norm {gnorm:.3e}"
            )

    if lambdas is None:
        lambdas = _solve_adjoints(cset, alpha_f, thetas, spec.targets)
    state = DesignState(cset, alpha_f.retag("design"), tuple(thetas), tuple(lambdas))
    report.residuals = equation_residuals(spec, state)
    report.cost = value
    report.bounds = bounds_audit(spec, state)
    return state, report
