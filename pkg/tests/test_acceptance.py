"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is fixed here, nothing is calibrated at runtime.
"""

import json
import time
import warnings

import numpy as np
import pytest

from magelastica import (
    Control,
    ControlSet,
    Grid,
    ProblemSpec,
    ScalarField,
    attainable_design,
    attainment_error,
    bifurcation_profile,
    bifurcation_tip,
    complete_elliptic_K,
    cost,
    direct_minimize,
    epsilon_sweep,
    inner_loop,
    outer_loop,
    poincare_constant_check,
    preset_field,
    reduced_cost_gradient,
    regularity_check,
    second_derivative_interior,
    solve_state,
    state_residual,
    sup_norm,
)
from magelastica.cli import main as cli_main
from magelastica.errors import NoNontrivialBranchError
from magelastica.magnetics import UNIQUENESS_THRESHOLD
from magelastica.programming import _solve_states

from conftest import clamped_field

N_CELLS = 400
DS = 1.0 / N_CELLS
GRID = Grid(N_CELLS)


def report(idx, name):
    print(f"ACCEPTANCE {idx:02d} {name}: PASS")


@pytest.fixture(scope="module")
def converged_program():
    """Converged nested-scheme runs reused by several criteria."""
    runs = []
    for names, gamma, eps in (
        (("parabolic(0.3)",), 10.0, 0.1),
        (("parabolic(0.3)", "parabolic(-0.25)"), 8.0, 0.2),
    ):
        spec = ProblemSpec(
            targets=tuple(preset_field(GRID, n) for n in names),
            epsilon=eps,
            gamma=gamma,
        )
        state, rep = outer_loop(spec)
        assert rep.status == "converged"
        runs.append((spec, state, rep))
    return runs


def random_case(rng):
    mag = rng.uniform(0.0, 0.99 * UNIQUENESS_THRESHOLD)
    ang = rng.uniform(0.0, 2.0 * np.pi)
    control = Control(mag * np.cos(ang), mag * np.sin(ang))
    alpha = clamped_field(GRID, rng, amplitude=rng.uniform(0.2, 2.0), role="design")
    return control, alpha


@pytest.fixture(scope="module")
def randomized_cases():
    rng = np.random.default_rng(101)
    return [random_case(rng) for _ in range(100)]


def test_criterion_01_poincare_threshold():
    value = poincare_constant_check(GRID)
    assert value == pytest.approx(np.pi**2 / 4.0, abs=1e-4)
    exact = np.pi**2 / 4.0
    errs = [abs(poincare_constant_check(Grid(n)) - exact) for n in (100, 200, 400)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.25)
    report(1, "poincare-threshold")


def test_criterion_02_state_sup_bound(randomized_cases):
    for control, alpha in randomized_cases:
        theta = solve_state(control, alpha)
        assert sup_norm(theta) <= control.magnitude + 1e-6
    report(2, "state-sup-bound")


def test_criterion_03_uniqueness_regime(randomized_cases):
    rng = np.random.default_rng(202)
    guesses = [
        np.zeros(N_CELLS + 1),
        np.r_[0.0, np.ones(N_CELLS)],
        np.r_[0.0, -np.ones(N_CELLS)],
        None,  # filled with a fresh random guess per case
    ]
    for control, alpha in randomized_cases:
        sols = []
        for g0 in guesses:
            vec = rng.uniform(-2.0, 2.0, N_CELLS + 1) if g0 is None else g0.copy()
            vec[0] = 0.0
            theta = solve_state(control, alpha, initial=ScalarField(GRID, vec))
            sols.append(theta.values)
        for other in sols[1:]:
            assert np.max(np.abs(other - sols[0])) <= 1e-8
    report(3, "uniqueness-regime")


def test_criterion_04_buckling_bifurcation():
    assert complete_elliptic_K(0.0) == pytest.approx(np.pi / 2.0, abs=1e-12)
    for H in (2.0, 2.4):
        with pytest.raises(NoNontrivialBranchError):
            bifurcation_tip(H)
    tips = [bifurcation_tip(H) for H in (2.5, 3.0, 5.0)]
    assert all(t > 0.0 for t in tips)
    assert np.all(np.diff(tips) > 0)
    H = 3.0
    point = bifurcation_profile(H, GRID)
    res = state_residual(point.profile, ScalarField.zeros(GRID, "design"), Control(-H, 0.0))
    assert res <= 10 * DS**2
    report(4, "buckling-bifurcation")


def test_criterion_05_attainability_round_trip():
    for name in ("parabolic(0.3)", "quarter-turn"):
        target = preset_field(GRID, name)
        intensity = 1.5 * sup_norm(second_derivative_interior(target))
        control, alpha = attainable_design(target, intensity)
        err = attainment_error(ControlSet([control]), alpha, (target,))
        assert err <= (10 * DS**2) ** 2
    report(5, "attainability-round-trip")


def test_criterion_06_minimizer_bound_cli(tmp_path):
    configs = [
        {"targets": ["parabolic(0.3)"], "epsilon": 0.1, "gamma": 10.0},
        {"targets": ["parabolic(0.3)", "parabolic(-0.25)"], "epsilon": 0.2, "gamma": 4.0},
        {"targets": ["quarter-turn"], "epsilon": 0.3, "gamma": 6.0},
    ]
    for i, payload in enumerate(configs):
        cfg = tmp_path / f"prog{i}.json"
        cfg.write_text(json.dumps(payload))
        out = tmp_path / f"out{i}"
        code = cli_main(
            ["program", "--config", str(cfg), "--out", str(out), "--grid", str(N_CELLS), "--quiet"]
        )
        assert code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["status"] == "converged"
        controls = np.loadtxt(out / "controls.csv", delimiter=",", skiprows=1, ndmin=2)
        max_h2 = np.max(controls[:, 1] ** 2 + controls[:, 2] ** 2)
        targets = tuple(preset_field(GRID, n) for n in payload["targets"])
        spec = ProblemSpec(targets=targets, epsilon=payload["epsilon"], gamma=payload["gamma"])
        assert max_h2 <= spec.target_norm**2 / spec.gamma + 1e-8
    report(6, "minimizer-bound")


def test_criterion_07_stationarity(converged_program):
    tol = max(1e-6, 10 * DS**2)
    for spec, state, rep in converged_program:
        for name, value in rep.residuals.items():
            assert value <= tol, (name, value)
        a = state.alpha.values
        left_slope = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * DS)
        assert abs(left_slope) <= 10 * DS**2
    report(7, "stationarity")


def test_criterion_08_gradient_oracle():
    t0 = time.monotonic()
    targets = (preset_field(GRID, "parabolic(0.25)"), preset_field(GRID, "quarter-turn"))
    spec = ProblemSpec(targets=targets, epsilon=0.1, gamma=10.0)
    rng = np.random.default_rng(808)

    def reduced(h_arr, a_vals):
        alpha = ScalarField(GRID, a_vals, "design")
        cs = ControlSet.from_array(h_arr)
        thetas = _solve_states(cs, alpha, spec.targets, [None] * 2, None)
        return cost(spec, cs, alpha, thetas)

    worst = 0.0
    for _ in range(20):
        h0 = rng.uniform(-0.8, 0.8, size=(2, 2))
        a0 = clamped_field(GRID, rng, amplitude=0.4).values
        dh = rng.normal(size=(2, 2))
        da = clamped_field(GRID, rng).values.copy()
        norm = np.sqrt(np.sum(dh**2) + np.sum(np.diff(da) ** 2) / DS)
        dh /= norm
        da /= norm
        gh, ga = reduced_cost_gradient(
            spec, ControlSet.from_array(h0), ScalarField(GRID, a0, "design")
        )
        adj = float(np.sum(gh * dh) + np.sum(np.diff(ga.values) * np.diff(da)) / DS)
        step = 1e-6
        fd = (reduced(h0 + step * dh, a0 + step * da) - reduced(h0 - step * dh, a0 - step * da)) / (
            2 * step
        )
        worst = max(worst, abs(adj - fd) / max(abs(fd), 1e-8))
    elapsed = time.monotonic() - t0
    assert worst <= 1e-5, worst
    assert elapsed < 60.0
    report(8, "gradient-oracle")


def test_criterion_09_cross_solver_agreement():
    targets = (preset_field(GRID, "parabolic(0.3)"), preset_field(GRID, "parabolic(-0.2)"))
    spec = ProblemSpec(targets=targets, epsilon=0.5, gamma=20.0)
    s_fp, r_fp = outer_loop(spec)
    assert r_fp.status == "converged"
    assert r_fp.contraction_estimate < 0.5
    s_gd, r_gd = direct_minimize(spec)
    assert r_gd.status == "converged"
    assert abs(r_fp.cost - r_gd.cost) <= 1e-6
    assert np.max(np.abs(s_fp.controls.as_array() - s_gd.controls.as_array())) <= 1e-4
    report(9, "cross-solver-agreement")


def test_criterion_10_contraction_scaling():
    gamma0 = 2.0
    target = preset_field(GRID, "parabolic(0.5)")
    alpha0 = ScalarField.zeros(GRID, "design")
    ratios = []
    for gamma in (gamma0, 2 * gamma0, 4 * gamma0, 8 * gamma0):
        spec = ProblemSpec(targets=(target,), epsilon=0.1, gamma=gamma)
        _, _, _, rep = inner_loop(alpha0, spec)
        assert rep.status == "converged"
        ratios.append(rep.contraction_estimate)
    for prev, nxt in zip(ratios, ratios[1:]):
        assert nxt == pytest.approx(prev / 2.0, rel=0.3)
    report(10, "contraction-scaling")


def test_criterion_11_regularity_audit(converged_program):
    for spec, state, rep in converged_program:
        assert state.controls.max_magnitude < UNIQUENESS_THRESHOLD
        for control, theta in zip(state.controls, state.thetas):
            audit = regularity_check(control, state.alpha, theta)
            assert audit.verdict == "regular"

    # constructed constant case: the first eigenvalue (1 + pi^2/4)/(1 + c)
    # crosses 1 exactly at c = pi^2/4
    def verdict(c_val):
        alpha = ScalarField(GRID, np.full(N_CELLS + 1, np.pi))
        theta = ScalarField.zeros(GRID, "shape")
        return regularity_check(Control(c_val, 0.0), alpha, theta).verdict

    crossing = np.pi**2 / 4.0
    assert verdict(crossing) == "resonant"
    assert verdict(crossing - 0.05) == "regular"
    assert verdict(crossing + 0.05) == "regular"
    lo, hi = 2.0, crossing
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if verdict(mid) == "resonant":
            hi = mid
        else:
            lo = mid
    band = 10 * DS**2 * (1.0 + crossing)
    assert abs(hi - crossing) <= 2.0 * band
    report(11, "regularity-audit")


def test_criterion_12_epsilon_sweep_trend():
    target = preset_field(GRID, "parabolic(0.3)")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = epsilon_sweep(target, [1.0, 0.3, 0.1, 0.03], inner_max=60, outer_max=60)
    assert len(rows) == 4
    held = []
    for row in rows:
        if row.contraction_lost:
            break
        held.append(row)
    assert len(held) >= 2, "contraction must hold on a nontrivial prefix"
    for prev, nxt in zip(held, held[1:]):
        assert nxt.attainment_error <= prev.attainment_error * 1.10
    # rows losing contraction are flagged and retained
    for row in rows[len(held):]:
        assert row.contraction_lost
    report(12, "epsilon-sweep-trend")
