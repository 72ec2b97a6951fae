"""Analytic oracles and audits.

Closed-form constructions that cross-check the optimization stack:

* :func:`attainable_design` inverts the equilibrium equation for a single
  target in closed form (any smooth clamped target with a free right end is
  exactly realizable by some design and field),
* the post-buckling branch of the compressed cantilever, parametrized by
  complete/incomplete elliptic integrals of the first kind,
* a Sturm-Liouville eigenvalue audit that flags resonance of the
  linearized constraint (the non-generic case where the multiplier
  formulation may fail),
* an epsilon-sweep experiment tracking the attainment error of an
  attainable target as both penalty weights shrink together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .bvp import RESONANCE_TOL_FACTOR, SLSpectrum, sl_eigen
from .errors import (
    BoundaryMismatchError,
    HTooSmallError,
    MagelasticaError,
    NoNontrivialBranchError,
)
from .grid import Grid, ScalarField, second_derivative_interior
from .magnetics import UNIQUENESS_THRESHOLD, Control, field_dot_dm
from .programming import ProblemSpec, attainment_error, outer_loop

# arcsin arguments are clamped only after the strict margin check, so the
# clamp absorbs roundoff rather than masking bad inputs
_ARCSIN_GUARD = 1e-12
_H_MARGIN = 1e-6


@dataclass(frozen=True)
class BranchPoint:
    """One point of the buckled branch: intensity, tip rotation, profile."""

    intensity: float
    tip_rotation: float
    profile: ScalarField

    def __post_init__(self):
        if self.intensity <= UNIQUENESS_THRESHOLD:
            raise ValueError("nontrivial branch points require H above the threshold")
        if not 0.0 < self.tip_rotation < np.pi:
            raise ValueError("tip rotation must lie in (0, pi)")
        if np.any(np.diff(self.profile.values) <= 0.0):
            raise ValueError("branch profiles are strictly increasing")


def attainable_design(target: ScalarField, intensity: float):
    """Closed-form (control, design) pair whose equilibrium is ``target``.

    With d = target'' computed by second differences and H = ``intensity``
    dominating sup |d|, the pair

        h = H (cos psi, sin psi),   psi = -arcsin(d(0) / H),
        alpha(s) = arcsin(d(s) / H) - target(s) + psi,

    satisfies the equilibrium equation at the target identically on the
    interior stencil, and alpha(0) = 0.
    """
    grid = target.grid
    t = target.values
    if abs(t[0]) > 1e-8:
        raise BoundaryMismatchError(
            f"target must vanish at the clamp; target(0) = {t[0]:.3e}"
        )
    d = second_derivative_interior(target).values
    tip_slope = (3.0 * t[-1] - 4.0 * t[-2] + t[-3]) / (2.0 * grid.ds)
    slope_tol = RESONANCE_TOL_FACTOR * grid.ds**2 * (1.0 + float(np.max(np.abs(d))))
    if abs(tip_slope) > slope_tol:
        raise BoundaryMismatchError(
            f"target must have a free right end; discrete slope at s=1 is "
            f"{tip_slope:.3e} (tolerance {slope_tol:.3e})"
        )

    peak = float(np.max(np.abs(d)))
    if intensity * (1.0 - _H_MARGIN) <= peak:
        raise HTooSmallError(
            f"need intensity H > max |target''| = {peak:.6g} "
            f"(strictly, with relative margin {_H_MARGIN:g}); got H = {intensity:.6g}"
        )

    ratio = np.clip(d / intensity, -1.0 + _ARCSIN_GUARD, 1.0 - _ARCSIN_GUARD)
    psi = -float(np.arcsin(ratio[0]))
    control = Control(intensity * np.cos(psi), intensity * np.sin(psi))
    alpha_vals = np.arcsin(ratio) - t + psi
    alpha_vals[0] = 0.0
    return control, ScalarField(grid, alpha_vals, "design")


def complete_elliptic_K(k: float) -> float:
    """Complete elliptic integral of the first kind by AGM iteration.

    K(k) = int_0^{pi/2} dphi / sqrt(1 - k^2 sin^2 phi); the arithmetic-
    geometric mean of (1, sqrt(1 - k^2)) converges quadratically and gives
    K = pi / (2 agm).
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must lie in [0, 1), got {k}")
    a = 1.0
    b = float(np.sqrt(1.0 - k * k))
    for _ in range(60):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), float(np.sqrt(a * b))
    return float(np.pi / (2.0 * a))


def bifurcation_tip(intensity: float) -> float:
    """Tip rotation of the buckled cantilever branch at field intensity H.

    Solves K(sin(t/2)) = sqrt(H) for t in (0, pi) by bisection over the
    modulus.  Below the threshold (pi/2)^2 only the straight configuration
    exists and :class:`NoNontrivialBranchError` is raised.
    """
    if intensity <= UNIQUENESS_THRESHOLD:
        raise NoNontrivialBranchError(
            f"no buckled branch at H = {intensity:.6g} <= {UNIQUENESS_THRESHOLD:.6g}"
        )
    root = float(np.sqrt(intensity))
    lo, hi = 0.0, 1.0 - 1e-15
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = complete_elliptic_K(mid) - root
        if abs(val) <= 1e-13:
            lo = hi = mid
            break
        if val < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break
    k = 0.5 * (lo + hi)
    return float(2.0 * np.arcsin(k))


def _incomplete_first_kind(phi: float, k: float) -> float:
    """Incomplete elliptic integral F(phi, k) by adaptive quadrature."""
    k2 = k * k

    def integrand(t):
        return 1.0 / np.sqrt(1.0 - k2 * np.sin(t) ** 2)

    val, _ = quad(integrand, 0.0, phi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(val)


def bifurcation_profile(intensity: float, grid: Grid) -> BranchPoint:
    """Nodal rotation profile of the buckled branch at intensity H.

    The arc-length relation for a profile rising to tip rotation t1 is, after
    the substitution sin(phi) = sin(t/2) / sin(t1/2) that removes the
    endpoint singularity, F(phi(s), k) = sqrt(H) s with k = sin(t1/2).  Each
    node is recovered by root-finding phi, then t = 2 arcsin(k sin phi).
    """
    tip = bifurcation_tip(intensity)
    k = float(np.sin(0.5 * tip))
    root_h = float(np.sqrt(intensity))

    phis = np.empty(grid.n_cells + 1)
    phis[0] = 0.0
    phis[-1] = 0.5 * np.pi
    lo = 0.0
    for j in range(1, grid.n_cells):
        target = root_h * grid.nodes[j]
        phi_j = brentq(
            lambda p: _incomplete_first_kind(p, k) - target,
            lo,
            0.5 * np.pi,
            xtol=1e-14,
            rtol=8.9e-16,
        )
        phis[j] = phi_j
        lo = phi_j
    values = 2.0 * np.arcsin(k * np.sin(phis))
    values[0] = 0.0
    profile = ScalarField(grid, values, "shape")
    return BranchPoint(intensity=intensity, tip_rotation=tip, profile=profile)


@dataclass(frozen=True)
class RegularityReport:
    """Eigenvalue audit of the linearized constraint at one control."""

    spectrum: SLSpectrum
    dist_to_one: float
    verdict: str
    sufficient_condition: bool


def regularity_check(
    control: Control,
    alpha: ScalarField,
    theta: ScalarField,
    k: int = 8,
) -> RegularityReport:
    """Audit whether the linearized constraint is safely invertible.

    Builds r = h . D2m(alpha + theta) and solves the generalized problem
    -u'' + (r^- + 1) u = mu (r^+ + 1) u; the constraint is resonant exactly
    when mu = 1 is an eigenvalue, so the verdict is ``resonant`` when the
    computed spectrum comes within 10 ds^2 of 1.  |h| below (pi/2)^2 is a
    sufficient condition for regularity and is reported alongside.
    """
    grid = alpha.grid
    r = field_dot_dm(control, alpha.values + theta.values, 2)
    q = ScalarField(grid, np.maximum(-r, 0.0) + 1.0)
    w = ScalarField(grid, np.maximum(r, 0.0) + 1.0)

    k_eff = max(1, int(k))
    spectrum = sl_eigen(q, w, k_eff)
    # extend until the spectrum brackets 1, so dist_to_one is trustworthy
    while spectrum.eigenvalues[-1] <= 1.0 and k_eff < min(grid.n_cells, 64):
        k_eff = min(2 * k_eff, grid.n_cells, 64)
        spectrum = sl_eigen(q, w, k_eff)

    dist = spectrum.dist_to_one
    tol = RESONANCE_TOL_FACTOR * grid.ds**2
    verdict = "resonant" if dist < tol else "regular"
    return RegularityReport(
        spectrum=spectrum,
        dist_to_one=dist,
        verdict=verdict,
        sufficient_condition=control.magnitude < UNIQUENESS_THRESHOLD,
    )


@dataclass
class SweepRow:
    epsilon: float
    cost: float
    attainment_error: float
    status: str
    contraction_lost: bool

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "cost": self.cost,
            "attainment_error": self.attainment_error,
            "status": self.status,
            "contraction_lost": self.contraction_lost,
        }


def epsilon_sweep(
    target: ScalarField,
    epsilons,
    cap: float = 0.99 * UNIQUENESS_THRESHOLD,
    inner_tol: float = 1e-9,
    outer_tol: float = 1e-8,
    inner_max: int = 200,
    outer_max: int = 500,
) -> list:
    """Run the nested scheme with epsilon = gamma over a list of values.

    For an attainable target the attainment error trends down as the
    penalties vanish together, until the inner map stops contracting; rows
    that lose contraction (or fail outright) are flagged, never dropped.
    """
    rows = []
    for eps in epsilons:
        try:
            spec = ProblemSpec(
                targets=(target,),
                epsilon=float(eps),
                gamma=float(eps),
                cap=cap,
                inner_tol=inner_tol,
                outer_tol=outer_tol,
                inner_max=inner_max,
                outer_max=outer_max,
            )
            state, report = outer_loop(spec)
            try:
                err = attainment_error(state.controls, state.alpha, spec.targets)
            except MagelasticaError:
                err = float("nan")
            lost = (
                report.status != "converged"
                or report.cap_exceeded
                or any(r >= 1.0 for r in report.inner_ratios)
            )
            rows.append(
                SweepRow(float(eps), float(report.cost), float(err), report.status, lost)
            )
        except (MagelasticaError, ValueError) as exc:
            rows.append(
                SweepRow(float(eps), float("nan"), float("nan"), f"failed: {exc}", True)
            )
    return rows
