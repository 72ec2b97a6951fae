"""Magneto-elastic cantilever primitives.

The beam is an inextensible planar rod clamped at s = 0, described by the
rotation theta(s) of its tangent.  A permanent magnetization sits at relative
angle alpha(s) from the tangent; a constant dimensionless applied field
h = (hx, hy) exerts the torque density h . Dm(alpha + theta), where
m(v) = (cos v, sin v) and Dm is its rotation by pi/2.  Equilibria solve

    -theta'' - h . Dm(alpha + theta) = 0,   theta(0) = 0,  theta'(1) = 0,

and are unique whenever |h| < (pi/2)^2.  This module provides the direction
field and its derivatives, the state and adjoint solves, the optimality
updates for controls and design, physical renormalization, and the
reconstruction of the beam curve from its rotation field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvp import (
    PointwiseSource,
    SolveOptions,
    bvp_residual_parts,
    double_integral_representation,
    solve_linear_bvp,
    solve_nonlinear_bvp,
)
from .grid import ScalarField, integral, require_same_grid

POINCARE_CONSTANT = 2.0 / np.pi
# |h| below this bound guarantees a unique equilibrium
UNIQUENESS_THRESHOLD = (np.pi / 2.0) ** 2

_ALPHA_CLAMP_TOL = 1e-8


def m_derivative(v, order: int = 0):
    """N-th derivative of the direction field m(v) = (cos v, sin v).

    Each derivative rotates m(v) counter-clockwise by pi/2, so the result
    always has unit magnitude.  Accepts scalars or arrays; returns an array
    with a leading component axis of length 2.
    """
    order = int(order)
    if order < 0:
        raise ValueError("order must be nonnegative")
    c = np.cos(v)
    s = np.sin(v)
    k = order % 4
    if k == 0:
        return np.stack([c, s])
    if k == 1:
        return np.stack([-s, c])
    if k == 2:
        return np.stack([-c, -s])
    return np.stack([s, -c])


@dataclass(frozen=True)
class Control:
    """A dimensionless applied-field pair."""

    hx: float
    hy: float

    def __post_init__(self):
        if not (np.isfinite(self.hx) and np.isfinite(self.hy)):
            raise ValueError("control components must be finite")

    @property
    def magnitude(self) -> float:
        return float(np.hypot(self.hx, self.hy))

    @property
    def in_uniqueness_ball(self) -> bool:
        return self.magnitude < UNIQUENESS_THRESHOLD

    def as_array(self) -> np.ndarray:
        return np.array([self.hx, self.hy])

    @classmethod
    def from_array(cls, arr) -> "Control":
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), float(arr[1]))

    def rotated(self, angle: float) -> "Control":
        c, s = np.cos(angle), np.sin(angle)
        return Control(c * self.hx - s * self.hy, s * self.hx + c * self.hy)


class ControlSet:
    """An ordered collection of controls, one per target shape."""

    __slots__ = ("controls",)

    def __init__(self, controls):
        controls = tuple(controls)
        if not controls:
            raise ValueError("a control set needs at least one control")
        for c in controls:
            if not isinstance(c, Control):
                raise TypeError("control set entries must be Control instances")
        self.controls = controls

    @classmethod
    def zeros(cls, n: int) -> "ControlSet":
        return cls([Control(0.0, 0.0) for _ in range(n)])

    @classmethod
    def from_array(cls, arr) -> "ControlSet":
        arr = np.asarray(arr, dtype=float).reshape(-1, 2)
        return cls([Control(float(r[0]), float(r[1])) for r in arr])

    def as_array(self) -> np.ndarray:
        return np.array([[c.hx, c.hy] for c in self.controls])

    @property
    def max_magnitude(self) -> float:
        return max(c.magnitude for c in self.controls)

    @property
    def aggregate_magnitude(self) -> float:
        return sum(c.magnitude for c in self.controls)

    def __len__(self):
        return len(self.controls)

    def __iter__(self):
        return iter(self.controls)

    def __getitem__(self, i):
        return self.controls[i]

    def __repr__(self):
        return f"ControlSet(n={len(self.controls)}, max|h|={self.max_magnitude:.4g})"


@dataclass(frozen=True)
class PhysicalScaling:
    """Dimensional data mapping a physical field to its dimensionless form.

    magnetization_intensity [A m^-2], length [m], bending_stiffness [N m^2],
    vacuum_permeability [H m^-1]; field_pair is the applied field in A m^-1.
    """

    magnetization_intensity: float
    length: float
    bending_stiffness: float
    vacuum_permeability: float
    field_pair: tuple[float, float]

    def __post_init__(self):
        for name in ("magnetization_intensity", "length", "bending_stiffness", "vacuum_permeability"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def renormalize(scaling: PhysicalScaling) -> Control:
    """Dimensionless control mu0 * M0 * L^2 / S times the physical field."""
    factor = (
        scaling.vacuum_permeability
        * scaling.magnetization_intensity
        * scaling.length ** 2
        / scaling.bending_stiffness
    )
    return Control(factor * scaling.field_pair[0], factor * scaling.field_pair[1])


def _check_alpha(alpha: ScalarField) -> None:
    if abs(alpha.values[0]) > _ALPHA_CLAMP_TOL:
        raise ValueError("magnetization angle must vanish at the clamp (alpha(0) = 0)")


def field_dot_dm(control: Control, angles: np.ndarray, order: int) -> np.ndarray:
    dm = m_derivative(angles, order)
    return control.hx * dm[0] + control.hy * dm[1]


def solve_state(
    control: Control,
    alpha: ScalarField,
    options: SolveOptions | None = None,
    initial: ScalarField | None = None,
) -> ScalarField:
    """Equilibrium rotation field under ``control`` for design ``alpha``.

    Satisfies sup |theta| <= |h|; for |h| below the uniqueness threshold the
    result does not depend on the initial guess.
    """
    _check_alpha(alpha)
    grid = alpha.grid
    a = alpha.values
    hx, hy = control.hx, control.hy

    def fn(s, v):
        ang = a + v
        sin_a = np.sin(ang)
        cos_a = np.cos(ang)
        f = -(hx * (-sin_a) + hy * cos_a)
        dfdv = -(hx * (-cos_a) + hy * (-sin_a))
        return f, dfdv

    source = PointwiseSource(fn, lipschitz=control.magnitude)
    guess = initial if initial is not None else ScalarField.zeros(grid)
    sol = solve_nonlinear_bvp(source, guess, options)
    return sol.retag("shape")


def energy(theta: ScalarField, alpha: ScalarField, control: Control) -> float:
    """Discrete magneto-elastic energy (1/2) int (theta')^2 - int h . m(theta+alpha)."""
    grid = require_same_grid(theta, alpha)
    dv = np.diff(theta.values)
    bending = 0.5 * float(np.sum(dv * dv)) / grid.ds
    coupling = field_dot_dm(control, theta.values + alpha.values, 0)
    return bending - integral(ScalarField(grid, coupling))


def solve_adjoint(
    control: Control,
    alpha: ScalarField,
    theta: ScalarField,
    target: ScalarField,
) -> ScalarField:
    """Multiplier lambda solving -u'' - (h . D2m(alpha+theta)) u = theta - target."""
    grid = require_same_grid(alpha, theta, target)
    q = -field_dot_dm(control, alpha.values + theta.values, 2)
    rhs = theta.values - target.values
    lam = solve_linear_bvp(ScalarField(grid, q), ScalarField(grid, rhs))
    return lam.retag("multiplier")


def control_update(
    lam: ScalarField,
    alpha: ScalarField,
    theta: ScalarField,
    gamma: float,
) -> Control:
    """Optimality update h = -(1/gamma) int lambda Dm(alpha + theta)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    grid = require_same_grid(lam, alpha, theta)
    ang = alpha.values + theta.values
    dm = m_derivative(ang, 1)
    hx = -integral(ScalarField(grid, lam.values * dm[0])) / gamma
    hy = -integral(ScalarField(grid, lam.values * dm[1])) / gamma
    return Control(hx, hy)


def design_update(
    controls: ControlSet,
    lambdas,
    thetas,
    alpha_prev: ScalarField,
    epsilon: float,
) -> ScalarField:
    """New magnetization angle from the design optimality condition.

    Returns the double-integral representation of the field solving
    -epsilon a'' + sum_i lambda_i h_i . D2m(alpha_prev + theta_i) = 0 with
    a(0) = a'(1) = 0.  Degenerate at epsilon = 0, which is rejected.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive (design equation degenerates at 0)")
    if not (len(controls) == len(lambdas) == len(thetas)):
        raise ValueError("controls, lambdas, thetas must have equal length")
    grid = require_same_grid(alpha_prev, *lambdas, *thetas)
    rho = np.zeros(grid.n_cells + 1)
    for c, lam, th in zip(controls, lambdas, thetas):
        rho += lam.values * field_dot_dm(c, alpha_prev.values + th.values, 2)
    alpha = double_integral_representation(ScalarField(grid, -rho / epsilon))
    return alpha.retag("design")


def curve(theta: ScalarField, ell: float = 1.0) -> np.ndarray:
    """Beam centerline (x, y) per node: ell * int_0^s m(theta), trapezoid rule."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    ds = theta.grid.ds
    mx = np.cos(theta.values)
    my = np.sin(theta.values)
    x = ell * np.concatenate(([0.0], np.cumsum(0.5 * ds * (mx[:-1] + mx[1:]))))
    y = ell * np.concatenate(([0.0], np.cumsum(0.5 * ds * (my[:-1] + my[1:]))))
    return np.column_stack([x, y])


def state_residual(theta: ScalarField, alpha: ScalarField, control: Control) -> float:
    """Sup-style residual of the equilibrium equation at ``theta``.

    Maximum of the interior finite-difference residual, the clamp violation
    |theta(0)|, and the ghost-consistent free-end derivative measure.
    """
    grid = require_same_grid(theta, alpha)
    source = -field_dot_dm(control, alpha.values + theta.values, 1)
    interior, left, neumann = bvp_residual_parts(theta.values, source, grid.ds)
    return max(interior, left, neumann)
