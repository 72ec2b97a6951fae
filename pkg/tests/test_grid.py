import numpy as np
import pytest

from magelastica import (
    Grid,
    ScalarField,
    derivative,
    h1_seminorm,
    integral,
    l2_norm,
    read_field_csv,
    second_derivative_interior,
    sup_norm,
    write_field_csv,
)
from magelastica.magnetics import POINCARE_CONSTANT

from conftest import clamped_field, smooth_field


def test_grid_nodes_uniform():
    g = Grid(17)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 1.0
    assert np.all(np.diff(g.nodes) > 0)
    assert np.max(np.abs(np.diff(g.nodes) - g.ds)) < 1e-15


def test_grid_too_coarse():
    with pytest.raises(ValueError):
        Grid(1)


def test_clamped_role_enforced():
    g = Grid(10)
    with pytest.raises(ValueError):
        ScalarField(g, np.ones(11), role="shape")
    # targets are plain L2 data, no clamp
    ScalarField(g, np.ones(11), role="target")


def test_field_rejects_nonfinite():
    g = Grid(10)
    vals = np.zeros(11)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, vals)


def test_integral_constant_is_one():
    g = Grid(50)
    assert integral(ScalarField(g, np.ones(51))) == pytest.approx(1.0, abs=1e-14)


def test_integral_affine_exact():
    g = Grid(37)
    f = ScalarField.from_function(g, lambda s: s)
    assert integral(f) == pytest.approx(0.5, abs=1e-14)


def test_integral_quadratic_trapezoid_error():
    g = Grid(100)
    f = ScalarField.from_function(g, lambda s: s**2)
    # trapezoid error bound ds^2 * max|f''| / 12
    assert integral(f) == pytest.approx(1.0 / 3.0, abs=2e-5)


def test_integral_linear_and_monotone(rng):
    g = Grid(64)
    f = smooth_field(g, rng)
    h = smooth_field(g, rng)
    lhs = integral(ScalarField(g, 2.0 * f.values - 3.0 * h.values))
    assert lhs == pytest.approx(2.0 * integral(f) - 3.0 * integral(h), abs=1e-12)
    lower = ScalarField(g, np.minimum(f.values, h.values))
    assert integral(lower) <= integral(f) + 1e-14
    assert integral(lower) <= integral(h) + 1e-14


def test_norms_identity_field():
    g = Grid(80)
    f = ScalarField.from_function(g, lambda s: s)
    assert h1_seminorm(f) == pytest.approx(1.0, abs=1e-12)
    assert sup_norm(f) == pytest.approx(1.0, abs=1e-15)


def test_norms_zero_field():
    g = Grid(80)
    z = ScalarField.zeros(g)
    assert l2_norm(z) == 0.0
    assert sup_norm(z) == 0.0
    assert h1_seminorm(z) == 0.0


def test_l2_norm_sine_closed_form():
    g = Grid(200)
    f = ScalarField.from_function(g, lambda s: np.sin(np.pi * s / 2))
    # int sin^2(pi s / 2) = 1/2
    assert l2_norm(f) == pytest.approx(np.sqrt(0.5), abs=1e-4)


def test_derivative_quadratic():
    g = Grid(100)
    f = ScalarField.from_function(g, lambda s: s**2)
    d = derivative(f)
    # central and one-sided O(ds^2) stencils are exact on quadratics
    assert np.max(np.abs(d.values - 2.0 * g.nodes)) < 1e-10


def test_derivative_constant_is_zero():
    g = Grid(60)
    d = derivative(ScalarField(g, np.full(61, 4.2)))
    assert np.max(np.abs(d.values)) < 1e-12


def test_second_derivative_parabola():
    g = Grid(100)
    f = ScalarField.from_function(g, lambda s: s * (2.0 - s) / 2.0)
    d2 = second_derivative_interior(f)
    assert np.max(np.abs(d2.values + 1.0)) < 1e-9


def test_second_derivative_order(rng):
    errs = []
    for n in (100, 200):
        g = Grid(n)
        f = ScalarField.from_function(g, lambda s: np.sin(2.0 * s))
        d2 = second_derivative_interior(f)
        errs.append(np.max(np.abs(d2.values + 4.0 * np.sin(2.0 * g.nodes))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.35)


def test_discrete_poincare_inequality(rng):
    # l2^2 <= c_p^2 h1^2 plus the trapezoid surplus ds^2 h1^2 / 6
    for n in (50, 400):
        g = Grid(n)
        for _ in range(10):
            f = clamped_field(g, rng, modes=6)
            h1 = h1_seminorm(f)
            assert l2_norm(f) ** 2 <= POINCARE_CONSTANT**2 * h1**2 + g.ds**2 * h1**2 / 6.0 + 1e-12


def test_sup_norm_bounded_by_h1(rng):
    g = Grid(128)
    for _ in range(10):
        f = clamped_field(g, rng, modes=6)
        assert sup_norm(f) ** 2 <= h1_seminorm(f) ** 2 + 1e-12


def test_csv_round_trip(tmp_path, rng):
    g = Grid(33)
    f = smooth_field(g, rng)
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    text = path.read_text().splitlines()
    assert text[0] == "s,value"
    assert len(text) == g.n_cells + 2
    back = read_field_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n0,0\n1,1\n")
    with pytest.raises(ValueError):
        read_field_csv(path)


def test_csv_rejects_nonuniform_nodes(tmp_path):
    path = tmp_path / "warped.csv"
    path.write_text("s,value\n0,0\n0.3,1\n0.5,2\n1,3\n")
    with pytest.raises(ValueError):
        read_field_csv(path)


def test_grid_equality_and_hash():
    assert Grid(40) == Grid(40)
    assert Grid(40) != Grid(41)
    assert len({Grid(40), Grid(40), Grid(41)}) == 2
