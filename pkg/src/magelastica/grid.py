"""Uniform 1-D grids on [0, 1] and nodal scalar fields.

Every solver in this package shares one discretization: ``n_cells`` uniform
intervals on [0, 1], nodal values at ``s_j = j / n_cells``, composite
trapezoid quadrature, and second-order finite differences.  Fields carry a
role tag; roles representing left-clamped functions (beam shapes,
magnetization designs, adjoint multipliers) must vanish at s = 0, while
targets and generic data are unconstrained.
"""

from __future__ import annotations

import csv

import numpy as np

CLAMPED_ROLES = frozenset({"shape", "design", "multiplier"})
ROLES = CLAMPED_ROLES | {"target", "generic"}

# left-clamp enforcement tolerance; solvers pin the node exactly
CLAMP_TOL = 1e-9


class Grid:
    """Uniform grid with nodes j / n_cells for j = 0 .. n_cells."""

    __slots__ = ("n_cells", "ds", "nodes")

    def __init__(self, n_cells: int = 400):
        n = int(n_cells)
        if n < 2:
            raise ValueError(f"grid needs at least 2 cells, got {n}")
        self.n_cells = n
        self.ds = 1.0 / n
        nodes = np.linspace(0.0, 1.0, n + 1)
        nodes.flags.writeable = False
        self.nodes = nodes

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n_cells == self.n_cells

    def __hash__(self):
        return hash(("Grid", self.n_cells))

    def __repr__(self):
        return f"Grid(n_cells={self.n_cells})"


class ScalarField:
    """Nodal values of a scalar function on a :class:`Grid`.

    Immutable after construction; arithmetic helpers return new fields with
    role ``generic``.
    """

    __slots__ = ("grid", "values", "role")

    def __init__(self, grid: Grid, values, role: str = "generic"):
        if role not in ROLES:
            raise ValueError(f"unknown field role {role!r}")
        v = np.array(values, dtype=float)
        if v.shape != (grid.n_cells + 1,):
            raise ValueError(
                f"expected {grid.n_cells + 1} nodal values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if role in CLAMPED_ROLES and abs(v[0]) > CLAMP_TOL:
            raise ValueError(
                f"role {role!r} requires value 0 at s=0, got {v[0]:.3e}"
            )
        v.flags.writeable = False
        self.grid = grid
        self.values = v
        self.role = role

    @classmethod
    def zeros(cls, grid: Grid, role: str = "generic") -> "ScalarField":
        return cls(grid, np.zeros(grid.n_cells + 1), role)

    @classmethod
    def from_function(cls, grid: Grid, fn, role: str = "generic") -> "ScalarField":
        return cls(grid, fn(grid.nodes), role)

    def with_values(self, values, role: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, self.role if role is None else role)

    def retag(self, role: str) -> "ScalarField":
        return ScalarField(self.grid, self.values, role)

    def __add__(self, other):
        require_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        require_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, scalar):
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"ScalarField(n_cells={self.grid.n_cells}, role={self.role!r})"


def require_same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError(f"grid mismatch: {f.grid} vs {grid}")
    return grid


def integral(f: ScalarField) -> float:
    """Composite trapezoid approximation of the integral over [0, 1]."""
    v = f.values
    return float(f.grid.ds * (0.5 * (v[0] + v[-1]) + v[1:-1].sum()))


def l2_norm(f: ScalarField) -> float:
    v = f.values
    return float(np.sqrt(f.grid.ds * (0.5 * (v[0] ** 2 + v[-1] ** 2) + (v[1:-1] ** 2).sum())))


def sup_norm(f: ScalarField) -> float:
    return float(np.max(np.abs(f.values)))


def h1_seminorm(f: ScalarField) -> float:
    """Seminorm sqrt(int (f')^2) of the piecewise-linear interpolant."""
    dv = np.diff(f.values)
    return float(np.sqrt(np.sum(dv * dv) / f.grid.ds))


def derivative(f: ScalarField) -> ScalarField:
    """O(ds^2) first derivative: central interior, one-sided at the ends."""
    vals = np.gradient(f.values, f.grid.ds, edge_order=2)
    return ScalarField(f.grid, vals)


def second_derivative_interior(f: ScalarField) -> ScalarField:
    """O(ds^2) second derivative: central interior, one-sided at the ends."""
    n = f.grid.n_cells
    if n < 3:
        raise ValueError("grid too coarse for a second derivative (need >= 3 cells)")
    v = f.values
    ds2 = f.grid.ds ** 2
    out = np.empty_like(v)
    out[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / ds2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / ds2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / ds2
    return ScalarField(f.grid, out)


def write_field_csv(f: ScalarField, path) -> None:
    """Serialize as ``s,value`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "value"])
        for s, v in zip(f.grid.nodes, f.values):
            w.writerow([f"{s:.17g}", f"{v:.17g}"])


def read_field_csv(path, role: str = "generic") -> ScalarField:
    """Read a field written by :func:`write_field_csv`; grid inferred."""
    s_list, v_list = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["s", "value"]:
            raise ValueError(f"{path}: expected header 's,value'")
        for row in reader:
            if not row:
                continue
            s_list.append(float(row[0]))
            v_list.append(float(row[1]))
    s = np.asarray(s_list)
    if len(s) < 3 or abs(s[0]) > 1e-12 or abs(s[-1] - 1.0) > 1e-12:
        raise ValueError(f"{path}: nodes must run from 0 to 1")
    n = len(s) - 1
    if np.max(np.abs(s - np.linspace(0.0, 1.0, n + 1))) > 1e-10:
        raise ValueError(f"{path}: nodes are not a uniform grid on [0, 1]")
    return ScalarField(Grid(n), np.asarray(v_list), role)
