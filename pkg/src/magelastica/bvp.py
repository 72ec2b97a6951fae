"""Two-point boundary-value solvers on [0, 1].

All equation layers of the optimization reduce to the scalar problem

    -v'' + f(s, v) = 0   in (0, 1),    v(0) = 0,    v'(1) = 0,

so this module provides the shared numerical machinery:

* a damped Newton solver with a Picard fallback for the nonlinear problem,
* a banded LU solver for the linearization -u'' + q u = rhs,
* the explicit double-integral inverse of -v'' = g under the same
  boundary conditions,
* a Sturm-sequence bisection eigensolver for the generalized problem
  -u'' + q u = mu w u used by the resonance audit.

Discretization: second-order central differences with a mirrored ghost node
enforcing v'(1) = 0, which keeps every Jacobian tridiagonal.  When the
source is Lipschitz in v with constant below the uniqueness threshold
(pi/2)^2, the discrete problem inherits the contraction property of the
continuous one and the solution is independent of the initial guess.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import NonConvergenceError, NonFiniteValueError, SingularOperatorError
from .grid import Grid, ScalarField, require_same_grid

# singularity / resonance detection threshold, scaled to the O(ds^2)
# eigenvalue accuracy of the discretization
RESONANCE_TOL_FACTOR = 10.0

_PICARD_SWEEPS = 25
_MAX_STALL_ROUNDS = 6


@dataclass(frozen=True)
class PointwiseSource:
    """Vectorized source f(s, v) with its v-derivative.

    ``fn(s, v)`` receives the full nodal arrays and returns the pair
    ``(f(s, v), df/dv(s, v))``.  ``lipschitz`` is the declared Lipschitz
    constant of f in v; values below (pi/2)^2 put the problem in the
    contraction (unique-solution) regime.
    """

    fn: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    lipschitz: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.lipschitz) or self.lipschitz < 0:
            raise ValueError("lipschitz must be a finite nonnegative number")

    def __call__(self, s, v):
        return self.fn(s, v)


@dataclass(frozen=True)
class SolveOptions:
    tol_residual: float = 1e-10
    max_newton: int = 50
    damping_factor: float = 0.5
    max_halvings: int = 30
    picard_fallback: bool = True

    def __post_init__(self):
        if self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")
        if self.max_newton < 1:
            raise ValueError("max_newton must be at least 1")
        if not 0 < self.damping_factor < 1:
            raise ValueError("damping_factor must lie in (0, 1)")


@dataclass(frozen=True)
class SLSpectrum:
    """Leading generalized eigenvalues, sorted ascending."""

    eigenvalues: np.ndarray
    count_requested: int

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if not np.all(np.isfinite(ev)):
            raise ValueError("eigenvalues must be finite")
        if np.any(np.diff(ev) <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def dist_to_one(self) -> float:
        return float(np.min(np.abs(self.eigenvalues - 1.0)))


def _banded_operator(q_rows: np.ndarray, ds: float) -> np.ndarray:
    """Banded storage of the tridiagonal operator for unknowns v_1..v_n.

    Interior rows discretize -v'' + q v; the last row carries the mirrored
    ghost-node closure of v'(1) = 0 (subdiagonal entry -2/ds^2).
    """
    m = q_rows.shape[0]
    inv = 1.0 / ds ** 2
    ab = np.zeros((3, m))
    ab[0, 1:] = -inv
    ab[1, :] = 2.0 * inv + q_rows
    ab[2, :-1] = -inv
    ab[2, m - 2] = -2.0 * inv
    return ab


def _apply_operator(v_full: np.ndarray, ds: float) -> np.ndarray:
    """Rows of the discrete -v'' for nodes 1..n (ghost closure at n)."""
    inv = 1.0 / ds ** 2
    out = np.empty(v_full.shape[0] - 1)
    out[:-1] = (-v_full[:-2] + 2.0 * v_full[1:-1] - v_full[2:]) * inv
    out[-1] = (-2.0 * v_full[-2] + 2.0 * v_full[-1]) * inv
    return out


def bvp_residual_parts(v_full: np.ndarray, source_vals: np.ndarray, ds: float):
    """Residual measures of -v'' + g = 0 with the clamped/free-end BCs.

    Returns ``(interior, left, neumann)``: the sup of the interior rows, the
    clamp violation |v(0)|, and the ghost-consistent derivative measure
    (ds/2) * |last row| which approximates |v'(1)|.
    """
    rows = _apply_operator(v_full, ds) + source_vals[1:]
    interior = float(np.max(np.abs(rows[:-1]))) if rows.shape[0] > 1 else 0.0
    return interior, float(abs(v_full[0])), float(0.5 * ds * abs(rows[-1]))


def solve_nonlinear_bvp(
    source: PointwiseSource,
    initial: ScalarField,
    options: SolveOptions | None = None,
) -> ScalarField:
    """Solve -v'' + f(s, v) = 0, v(0) = 0, v'(1) = 0 on the grid of ``initial``.

    Damped Newton with residual-monotone backtracking; when Newton stalls and
    ``picard_fallback`` is on, a few sweeps of the integral fixed-point map
    v <- double_integral_representation(-f(., v)) pull the iterate back into
    the contraction basin before Newton resumes.  The returned field has
    discrete residual sup-norm at most ``tol_residual`` or, on fine grids
    where that is no longer representable, at the double-precision roundoff
    floor of the second-difference stencil (roughly eps |v| / ds^2, reached
    only when no Newton step can reduce the residual further).
    """
    opts = options or SolveOptions()
    grid = initial.grid
    s = grid.nodes
    ds = grid.ds

    v = initial.values.copy()
    v[0] = 0.0

    def evaluate(vec):
        f, df = source(s, vec)
        f = np.asarray(f, dtype=float)
        df = np.asarray(df, dtype=float)
        res = _apply_operator(vec, ds) + f[1:]
        return res, f, df

    res_vec, f_vals, df_vals = evaluate(v)
    res = float(np.max(np.abs(res_vec)))
    if not np.isfinite(res):
        raise NonFiniteValueError("source evaluation is not finite at the initial guess")

    stall_rounds = 0
    newton_steps = 0
    while newton_steps < opts.max_newton:
        if res <= opts.tol_residual:
            break
        ab = _banded_operator(df_vals[1:], ds)
        try:
            step = solve_banded((1, 1), ab, -res_vec)
        except LinAlgError:
            step = None

        accepted = False
        if step is not None and np.all(np.isfinite(step)):
            t = 1.0
            for _ in range(opts.max_halvings + 1):
                v_try = v.copy()
                v_try[1:] += t * step
                res_vec_try, f_try, df_try = evaluate(v_try)
                res_try = float(np.max(np.abs(res_vec_try)))
                if np.isfinite(res_try) and res_try < res:
                    v, res_vec, f_vals, df_vals, res = v_try, res_vec_try, f_try, df_try, res_try
                    accepted = True
                    break
                t *= opts.damping_factor
        newton_steps += 1

        if not accepted:
            # roundoff floor of the stencil: below this no step can help
            floor = 8.0 * np.finfo(float).eps * (
                float(np.max(np.abs(v))) / ds ** 2 + float(np.max(np.abs(f_vals)))
            )
            if res <= floor:
                break
            if not (opts.picard_fallback and stall_rounds < _MAX_STALL_ROUNDS):
                raise NonConvergenceError(
                    f"Newton stalled at residual {res:.3e} (tol {opts.tol_residual:.1e})",
                    residual=res,
                )
            stall_rounds += 1
            for _ in range(_PICARD_SWEEPS):
                w = _double_integral(-f_vals, ds)
                res_vec_w, f_w, df_w = evaluate(w)
                res_w = float(np.max(np.abs(res_vec_w)))
                if not np.isfinite(res_w):
                    raise NonFiniteValueError("Picard sweep produced non-finite values")
                v, res_vec, f_vals, df_vals = w, res_vec_w, f_w, df_w
                if res_w >= res:
                    res = res_w
                    break
                res = res_w
    else:
        raise NonConvergenceError(
            f"no convergence after {opts.max_newton} Newton steps, residual {res:.3e}",
            residual=res,
        )

    # one polishing step tightens agreement across different initial guesses
    ab = _banded_operator(df_vals[1:], ds)
    try:
        step = solve_banded((1, 1), ab, -res_vec)
        v_try = v.copy()
        v_try[1:] += step
        res_vec_try, _, _ = evaluate(v_try)
        res_try = float(np.max(np.abs(res_vec_try)))
        if np.isfinite(res_try) and res_try < res:
            v = v_try
    except LinAlgError:
        pass

    v[0] = 0.0
    return ScalarField(grid, v)


def _sym_pencil(q_nodal: np.ndarray, w_nodal: np.ndarray, ds: float):
    """Symmetrized tridiagonal pencil (T, W) for -u'' + q u = mu w u.

    Unknowns u_1..u_n; the ghost row is halved (the free-end node carries
    half a cell), which makes T symmetric and W diagonal positive.
    """
    inv = 1.0 / ds ** 2
    d = 2.0 * inv + q_nodal[1:].astype(float).copy()
    d[-1] = inv + 0.5 * q_nodal[-1]
    e = np.full(d.shape[0] - 1, -inv)
    w = w_nodal[1:].astype(float).copy()
    w[-1] *= 0.5
    return d, e, w


def _pencil_count(d, e2, w, x, pivmin) -> int:
    """Number of generalized eigenvalues of (T, W) strictly below x.

    Sturm count via the LDL^T pivots of T - x W; pivots are clamped away
    from zero by ``pivmin`` so the recurrence never overflows.  Pure-Python
    scalars keep the scalar loop fast and warning-free.
    """
    count = 0
    p = d[0] - x * w[0]
    if abs(p) < pivmin:
        p = -pivmin
    if p < 0.0:
        count += 1
    for i in range(1, len(d)):
        p = (d[i] - x * w[i]) - e2[i - 1] / p
        if abs(p) < pivmin:
            p = -pivmin
        if p < 0.0:
            count += 1
    return count


def _pencil_eigenvalues(d, e, w, k: int, rel_tol: float = 1e-10) -> np.ndarray:
    """Smallest k generalized eigenvalues by bisection on the Sturm count."""
    e2 = e * e
    radius = np.zeros_like(d)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    wmin = float(np.min(w))
    lo_t = float(np.min(d - radius))
    hi_t = float(np.max(d + radius))
    lo = min(lo_t / wmin, 0.0) - 1.0
    hi = max(hi_t / wmin, 0.0) + 1.0
    pivmin = 2.3e-308 * max(1.0, float(np.max(e2)))

    dl, e2l, wl = d.tolist(), e2.tolist(), w.tolist()
    out = np.empty(k)
    left = lo
    for j in range(1, k + 1):
        a, b = left, hi
        while b - a > rel_tol * max(1.0, abs(a), abs(b)):
            mid = 0.5 * (a + b)
            if _pencil_count(dl, e2l, wl, mid, pivmin) >= j:
                b = mid
            else:
                a = mid
        out[j - 1] = 0.5 * (a + b)
        left = a
    return out


def solve_linear_bvp(q: ScalarField, rhs: ScalarField) -> ScalarField:
    """Solve -u'' + q u = rhs with u(0) = 0, u'(1) = 0 by banded LU.

    Raises :class:`SingularOperatorError` when the discrete operator has a
    generalized eigenvalue within ``10 * ds^2`` of zero, the numerical
    signature of resonance.
    """
    grid = require_same_grid(q, rhs)
    ds = grid.ds
    tau = RESONANCE_TOL_FACTOR * ds ** 2

    d, e, w = _sym_pencil(q.values, np.ones_like(q.values), ds)
    e2 = e * e
    pivmin = 2.3e-308 * max(1.0, float(np.max(e2)))
    dl, e2l, wl = d.tolist(), e2.tolist(), w.tolist()
    if _pencil_count(dl, e2l, wl, tau, pivmin) - _pencil_count(dl, e2l, wl, -tau, pivmin) > 0:
        raise SingularOperatorError(
            f"operator -u'' + q u has an eigenvalue within {tau:.2e} of zero"
        )

    ab = _banded_operator(q.values[1:], ds)
    b = rhs.values[1:]
    try:
        u = solve_banded((1, 1), ab, b)
    except LinAlgError as exc:
        raise SingularOperatorError(f"banded LU failed: {exc}") from exc

    full = np.concatenate(([0.0], u))
    check = _apply_operator(full, ds) + q.values[1:] * u - b
    scale = float(np.max(np.abs(b))) + (2.0 / ds ** 2 + float(np.max(np.abs(q.values)))) * float(
        np.max(np.abs(u), initial=0.0)
    )
    if float(np.max(np.abs(check))) > 1e-10 * max(scale, 1e-300):
        raise SingularOperatorError(
            "linear solve residual exceeds tolerance; operator is near-singular"
        )
    return ScalarField(grid, full)


def _double_integral(g_vals: np.ndarray, ds: float) -> np.ndarray:
    """Nodal values of v(s) = int_0^s int_{s'}^1 g, by nested trapezoid sums."""
    seg = 0.5 * ds * (g_vals[:-1] + g_vals[1:])
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    inner = cum[-1] - cum  # int_{s_j}^1 g
    seg2 = 0.5 * ds * (inner[:-1] + inner[1:])
    return np.concatenate(([0.0], np.cumsum(seg2)))


def double_integral_representation(g: ScalarField) -> ScalarField:
    """Explicit inverse of -v'' = g with v(0) = 0, v'(1) = 0.

    Returns v(s) = int_0^s int_{s'}^1 g(s'') ds'' ds' computed by two nested
    cumulative trapezoid sums; exact for affine g.
    """
    return ScalarField(g.grid, _double_integral(g.values, g.grid.ds))


def sl_eigen(q: ScalarField, w: ScalarField, k: int) -> SLSpectrum:
    """First k eigenvalues of -u'' + q u = mu w u, u(0) = 0, u'(1) = 0.

    Requires q >= 0 and w > 0 nodally, which makes the pencil symmetric
    positive and every eigenvalue positive and simple.  Solved by bisection
    on the Sturm sequence of the weight-reduced tridiagonal pencil.
    """
    grid = require_same_grid(q, w)
    if np.any(w.values <= 0.0):
        raise ValueError("weight must be strictly positive at every node")
    if np.any(q.values < -1e-12):
        raise ValueError("potential must be nonnegative at every node")
    k = int(k)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > grid.n_cells:
        raise ValueError(f"at most {grid.n_cells} eigenvalues exist, requested {k}")

    d, e, wd = _sym_pencil(q.values, w.values, grid.ds)
    eigs = _pencil_eigenvalues(d, e, wd, k)
    return SLSpectrum(eigenvalues=eigs, count_requested=k)


def poincare_constant_check(grid: Grid) -> float:
    """Smallest eigenvalue of -u'' = mu u under the clamped/free-end BCs.

    Converges at O(ds^2) to (pi/2)^2, the reciprocal square of the best
    constant in the Poincare inequality for left-clamped functions.
    """
    q = ScalarField.zeros(grid)
    w = ScalarField(grid, np.ones(grid.n_cells + 1))
    return float(sl_eigen(q, w, 1).eigenvalues[0])
