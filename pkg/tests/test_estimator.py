import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import ConvergenceWarning, NotFittedError

from magelastica import Grid, ShapeProgrammer, preset_field
from magelastica.validation import check_controls, check_targets


def target_matrix(grid, names):
    return np.vstack([preset_field(grid, n).values for n in names])


def test_fit_learns_design_and_controls(grid200):
    X = target_matrix(grid200, ["parabolic(0.3)", "parabolic(-0.2)"])
    est = ShapeProgrammer(epsilon=0.2, gamma=5.0).fit(X)
    assert est.alpha_.shape == (grid200.n_cells + 1,)
    assert est.controls_.shape == (2, 2)
    assert est.thetas_.shape == X.shape
    assert est.report_.status == "converged"
    assert est.n_iter_ >= 1
    assert est.cost_ >= 0.0


def test_fit_infers_grid_from_columns():
    g = Grid(120)
    X = target_matrix(g, ["parabolic(0.4)"])
    est = ShapeProgrammer(epsilon=0.2, gamma=5.0).fit(X)
    assert est.grid_.n_cells == 120


def test_fit_rejects_grid_mismatch():
    g = Grid(100)
    X = target_matrix(g, ["parabolic(0.4)"])
    with pytest.raises(ValueError):
        ShapeProgrammer(n_cells=200).fit(X)


def test_fit_rejects_bad_targets():
    with pytest.raises(ValueError):
        ShapeProgrammer().fit(np.full((1, 101), np.nan))
    with pytest.raises(ValueError):
        ShapeProgrammer().fit(np.zeros((1, 3)))


def test_predict_defaults_to_fitted_shapes(grid200):
    X = target_matrix(grid200, ["parabolic(0.3)"])
    est = ShapeProgrammer(epsilon=0.2, gamma=5.0).fit(X)
    assert np.array_equal(est.predict(), est.thetas_)


def test_predict_new_controls(grid200):
    X = target_matrix(grid200, ["parabolic(0.3)"])
    est = ShapeProgrammer(epsilon=0.2, gamma=5.0).fit(X)
    shapes = est.predict([[0.0, 0.001]])
    exact = 0.001 * grid200.nodes * (2.0 - grid200.nodes) / 2.0
    assert np.max(np.abs(shapes[0] - exact)) / np.max(exact) < 5e-3


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        ShapeProgrammer().predict()


def test_score_is_negative_attainment(grid200):
    X = target_matrix(grid200, ["parabolic(0.3)"])
    est = ShapeProgrammer(epsilon=0.2, gamma=5.0).fit(X)
    score = est.score(X)
    assert score <= 0.0
    # weak fields: the shapes stay near zero, so the error is ~ half the norm
    assert score == pytest.approx(-0.5 * est.spec_.target_norm**2, rel=0.2)


def test_solvers_agree(grid200):
    X = target_matrix(grid200, ["parabolic(0.3)", "parabolic(-0.2)"])
    fp = ShapeProgrammer(epsilon=0.5, gamma=20.0, solver="fixed_point").fit(X)
    gd = ShapeProgrammer(epsilon=0.5, gamma=20.0, solver="gradient").fit(X)
    assert abs(fp.cost_ - gd.cost_) < 1e-6
    assert np.max(np.abs(fp.controls_ - gd.controls_)) < 1e-4


def test_unknown_solver_rejected(grid200):
    X = target_matrix(grid200, ["zero"])
    with pytest.raises(ValueError):
        ShapeProgrammer(solver="annealing").fit(X)


def test_convergence_warning_on_budget(grid200):
    X = target_matrix(grid200, ["parabolic(0.5)"])
    est = ShapeProgrammer(epsilon=0.05, gamma=0.5, outer_max=1, inner_max=2)
    with pytest.warns(ConvergenceWarning):
        est.fit(X)
    assert est.report_.status != "converged"


def test_get_params_round_trip():
    est = ShapeProgrammer(gamma=7.0)
    params = est.get_params()
    assert params["gamma"] == 7.0
    twin = clone(est)
    assert twin.get_params() == params


def test_check_targets_shapes():
    X = check_targets(np.zeros(11))
    assert X.shape == (1, 11)
    with pytest.raises(ValueError):
        check_targets(np.zeros((2, 11)), n_cells=20)


def test_check_controls_shapes():
    assert check_controls([0.1, 0.2]).shape == (1, 2)
    with pytest.raises(ValueError):
        check_controls(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        check_controls([np.inf, 0.0])
