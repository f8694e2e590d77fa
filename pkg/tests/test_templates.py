import json

import numpy as np
import pytest

from rankmatch.templates import (
    TEMPLATE_A, TEMPLATE_B, TEMPLATE_C, Template, TemplateError, get_template, load_template,
    piecewise_linear,
)

BUILTINS = [TEMPLATE_A, TEMPLATE_B, TEMPLATE_C]


@pytest.mark.parametrize("t, x, expected", [
    (TEMPLATE_A, 0.5, 1.0),
    (TEMPLATE_A, 1.3, 0.2),
    (TEMPLATE_A, 0.1, 0.0),
    (TEMPLATE_A, 0.25, 0.0),
    (TEMPLATE_A, 0.75, 0.0),
    (TEMPLATE_B, 0.3, 1.0),
    (TEMPLATE_B, 0.7, 1.0),
    (TEMPLATE_B, 0.5, 0.0),
    (TEMPLATE_C, 0.5, 1.0),
    (TEMPLATE_C, 0.25, 0.0),
    (TEMPLATE_C, 0.375, (1 - 0.25) ** 3),
])
def test_eval_examples(t, x, expected):
    assert t.eval(x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("t, x, expected", [
    (TEMPLATE_A, 0.3, 4.0), (TEMPLATE_A, 0.6, -4.0), (TEMPLATE_A, 0.1, 0.0),
    (TEMPLATE_A, 0.5, -4.0),  # right-hand derivative at the kink
    (TEMPLATE_B, 0.25, 10.0), (TEMPLATE_B, 0.35, -10.0), (TEMPLATE_C, 0.5, 0.0),
])
def test_eval_deriv_examples(t, x, expected):
    assert t.eval_deriv(x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("t", BUILTINS, ids="ABC")
def test_periodicity_exact(t):
    x = np.random.default_rng(1).uniform(-3, 3, 1000)
    k = np.round(x)
    frac = np.arange(64) / 64  # dyadic points: x + 1 is exact, so equality is bitwise
    assert np.array_equal(t.eval(frac + 1.0), t.eval(frac))
    assert np.array_equal(t.eval(frac - 2.0), t.eval(frac))
    np.testing.assert_allclose(t.eval(x + k), t.eval(x), atol=1e-12)


@pytest.mark.parametrize("t", BUILTINS, ids="ABC")
def test_finite_difference_matches_derivative(t):
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 1, 4000)
    kinks = np.array(t.kink_points + t.breakpoints)
    if kinks.size:
        d = np.abs(((x[:, None] - kinks[None, :]) + 0.5) % 1.0 - 0.5).min(axis=1)
        x = x[d > 1e-3]
    x = x[:1000]
    h = 1e-6
    fd = (t.eval(x + h) - t.eval(x - h)) / (2 * h)
    assert np.max(np.abs(fd - t.eval_deriv(x))) <= t.lipschitz_bound * h


@pytest.mark.parametrize("t", BUILTINS, ids="ABC")
def test_lipschitz_bound(t):
    x = np.linspace(0, 1, 200001)
    assert np.max(np.abs(t.eval_deriv(x))) <= t.lipschitz_bound + 1e-12
    assert np.max(np.abs(np.diff(t.eval(x)))) <= t.lipschitz_bound * (x[1] - x[0]) + 1e-12


def test_deriv_energy():
    assert TEMPLATE_A.deriv_energy() == 8.0
    assert TEMPLATE_B.deriv_energy() == 40.0
    assert TEMPLATE_C.deriv_energy() == pytest.approx(110592 / 10395, abs=1e-8)


def test_piecewise_linear_equals_a():
    a = piecewise_linear([[0.25, 0.0], [0.5, 1.0], [0.75, 0.0]])
    x = np.random.default_rng(3).uniform(-1, 2, 5000)
    np.testing.assert_allclose(a.eval(x), TEMPLATE_A.eval(x), atol=1e-14)
    assert a.deriv_energy() == pytest.approx(8.0, abs=1e-14)
    assert a.lipschitz_bound == 4.0
    assert a.kink_points == (0.25, 0.5, 0.75)


def test_piecewise_linear_wraps_last_segment():
    t = piecewise_linear([[0.0, 0.0], [0.5, 1.0]])
    assert t.eval(0.75) == pytest.approx(0.5)
    assert t.eval(-0.25) == pytest.approx(0.5)
    assert t.eval_deriv(0.9) == -2.0


@pytest.mark.parametrize("knots", [
    [[0.5, 1.0], [0.25, 0.0]],
    [[0.2, 0.0], [0.2, 1.0]],
    [[0.0, 0.0], [1.0, 1.0]],
    [[-0.1, 0.0], [0.3, 1.0]],
    [],
])
def test_bad_knots_rejected(knots):
    with pytest.raises(TemplateError):
        piecewise_linear(knots)


def test_constant_template_has_zero_energy():
    assert piecewise_linear([[0.0, 2.0]]).deriv_energy() == 0.0
    assert piecewise_linear([[0.0, 2.0], [0.5, 2.0]]).deriv_energy() == 0.0


def test_json_loading(tmp_path):
    p = tmp_path / "tmpl.json"
    p.write_text(json.dumps({"knots": [[0.25, 0.0], [0.5, 1.0], [0.75, 0.0]]}))
    t = load_template(p)
    assert t.eval(0.5) == 1.0
    assert get_template(str(p)) == t
    assert get_template(json.loads(t.to_json())) == t
    assert get_template("a") == TEMPLATE_A
    with pytest.raises(TemplateError):
        get_template("D")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(TemplateError):
        load_template(bad)


def test_templates_are_hashable_and_immutable():
    assert len({TEMPLATE_A, Template("A"), TEMPLATE_B}) == 2
    with pytest.raises(Exception):
        TEMPLATE_A.kind = "B"
