import numpy as np
import pytest
from scipy.optimize import brentq

from adrdyn.errors import InvalidParameterError
from adrdyn.operators import (
    OperatorSpec,
    affine_operator,
    prox_l1,
    prox_quadratic,
    relaxed_resolvent,
    resolvent,
    spec_from_prox,
    zero_operator,
)


def linear_spec(a):
    return affine_operator([[a]])


def grid_argmin(fn, lo, hi, n=200001):
    z = np.linspace(lo, hi, n)
    return z[np.argmin(fn(z))]


@pytest.mark.parametrize("a, gamma, x, expected", [
    (1.0, 1.0, [4.0], [2.0]),
    (-0.5, 1.0, [2.0], [4.0]),
])
def test_resolvent_examples(a, gamma, x, expected):
    np.testing.assert_allclose(resolvent(linear_spec(a), gamma, x), expected, rtol=1e-14)


def test_resolvent_of_zero_is_identity():
    np.testing.assert_array_equal(resolvent(zero_operator(), 5.0, [3.0, -3.0]), [3.0, -3.0])


def test_resolvent_weak_example_against_root_finder():
    # z + gamma * (-0.5 z) = 2 solved by bracketing rather than by the closed form
    z = brentq(lambda z: z - 0.5 * z - 2.0, -10, 10, xtol=1e-14)
    np.testing.assert_allclose(resolvent(linear_spec(-0.5), 1.0, [2.0]), [z], rtol=1e-12)


@pytest.mark.parametrize("gamma", [2.0, 3.0, -1.0, 0.0])
def test_resolvent_rejects_inadmissible_step(gamma):
    with pytest.raises(InvalidParameterError):
        resolvent(linear_spec(-0.5), gamma, [1.0])


def test_relaxed_resolvent_examples():
    a = linear_spec(1.0)
    x = np.array([4.0])
    np.testing.assert_array_equal(relaxed_resolvent(a, 1.0, 1.0, x), resolvent(a, 1.0, x))
    np.testing.assert_allclose(relaxed_resolvent(a, 1.0, 2.0, x), [0.0], atol=1e-15)
    np.testing.assert_array_equal(relaxed_resolvent(a, 1.0, 0.0, x), x)


def test_relaxed_resolvent_propagates_error():
    with pytest.raises(InvalidParameterError):
        relaxed_resolvent(linear_spec(-1.0), 1.0, 2.0, [1.0])


def test_prox_quadratic_weak_example():
    h = prox_quadratic(-0.5, [1.0])
    z = h.prox_oracle(1.0, np.array([2.0]))
    np.testing.assert_allclose(z, [3.0], rtol=1e-14)
    zg = grid_argmin(lambda z: -0.25 * (z - 1.0) ** 2 + 0.5 * (z - 2.0) ** 2, -10, 10)
    assert abs(zg - 3.0) < 1e-3


@pytest.mark.parametrize("a, p, tau, x, expected", [
    (1.0, [0.0], 1.0, [4.0], [2.0]),
    (0.0, [5.0], 3.0, [7.0], [7.0]),
])
def test_prox_quadratic_trivial(a, p, tau, x, expected):
    np.testing.assert_allclose(prox_quadratic(a, p).prox_oracle(tau, np.array(x)), expected)


def test_prox_quadratic_rejects_large_step():
    with pytest.raises(InvalidParameterError):
        prox_quadratic(-0.5, [0.0]).prox_oracle(2.0, np.array([1.0]))


@pytest.mark.parametrize("w, tau, x, expected", [
    (1.0, 1.0, [2.5], [1.5]),
    (1.0, 1.0, [0.5], [0.0]),
    (2.0, 0.5, [-3.0], [-2.0]),
    (1.0, 1.0, [1.0], [0.0]),
])
def test_prox_l1_examples(w, tau, x, expected):
    np.testing.assert_array_equal(prox_l1(w).prox_oracle(tau, np.array(x)), expected)


def test_prox_l1_derived_example_by_grid():
    zg = grid_argmin(lambda z: 2.0 * np.abs(z) + (z + 3.0) ** 2, -10, 10)
    assert abs(zg - (-2.0)) < 1e-3


def test_prox_l1_rejects_nonpositive_weight():
    with pytest.raises(InvalidParameterError):
        prox_l1(0.0)


def test_spec_from_prox_passthrough():
    s = spec_from_prox(prox_quadratic(1.0, [0.0]))
    assert s.alpha == 1.0
    np.testing.assert_allclose(resolvent(s, 1.0, [6.0, -2.0]), [3.0, -1.0])
    assert spec_from_prox(prox_l1(1.0)).alpha == 0.0
    assert spec_from_prox(prox_quadratic(-0.3, [1.0, 2.0])).alpha == -0.3


def test_operator_spec_rejects_small_lipschitz():
    with pytest.raises(InvalidParameterError):
        OperatorSpec(lambda g, x: x, -2.0, lipschitz_const=1.0)


def test_affine_operator_certificates():
    s = affine_operator([[2.0, 1.0], [1.0, 2.0]], [1.0, 0.0])
    assert s.alpha == pytest.approx(1.0)
    assert s.lipschitz_const == pytest.approx(3.0)
    x = np.array([0.3, -0.7])
    z = resolvent(s, 0.5, x)
    # z + gamma A z = x
    np.testing.assert_allclose(z + 0.5 * s.direct_eval(z), x, atol=1e-14)


def test_affine_operator_rejects_asymmetric():
    with pytest.raises(InvalidParameterError):
        affine_operator([[1.0, 2.0], [0.0, 1.0]])


def _specs():
    return [
        ("quad_strong", spec_from_prox(prox_quadratic(2.0, [1.0, -1.0, 0.5]))),
        ("quad_weak", spec_from_prox(prox_quadratic(-0.5, [0.0, 1.0, 2.0]))),
        ("l1", spec_from_prox(prox_l1(0.7))),
        ("affine", affine_operator(np.diag([-0.4, 1.0, 3.0]), [1.0, 0.0, -1.0])),
    ]


@pytest.mark.parametrize("name, spec", _specs())
def test_resolvent_contraction(name, spec, rng):
    for gamma in (0.3, 1.0, 1.9):
        if not spec.admissible(gamma):
            continue
        x = rng.normal(scale=3.0, size=(2000, 3))
        y = rng.normal(scale=3.0, size=(2000, 3))
        lhs = np.linalg.norm(spec.resolvent_oracle(gamma, x) - spec.resolvent_oracle(gamma, y), axis=1)
        rhs = np.linalg.norm(x - y, axis=1) / (1.0 + gamma * spec.alpha)
        assert np.all(lhs <= rhs + 1e-9)


@pytest.mark.parametrize("name, spec", _specs())
@pytest.mark.parametrize("nu", [1.0, 1.5, 2.0, 3.0])
def test_relaxed_resolvent_inequality(name, spec, nu, rng):
    gamma = 1.0
    if not spec.admissible(gamma):
        pytest.skip("step not admissible")
    a = spec.alpha
    x = rng.normal(scale=3.0, size=(2000, 3))
    y = rng.normal(scale=3.0, size=(2000, 3))
    jx, jy = spec.resolvent_oracle(gamma, x), spec.resolvent_oracle(gamma, y)
    rx, ry = (1 - nu) * x + nu * jx, (1 - nu) * y + nu * jy
    lhs = np.sum((rx - ry) ** 2, axis=1)
    rhs = ((1 - nu) ** 2 * np.sum((x - y) ** 2, axis=1)
           + nu * ((1 - nu) * (2 + 2 * gamma * a) + nu) * np.sum((jx - jy) ** 2, axis=1))
    assert np.all(lhs <= rhs + 1e-9)


@pytest.mark.parametrize("h", [prox_quadratic(1.5, [1.0, -2.0]), prox_quadratic(-0.4, [0.5, 0.5]), prox_l1(1.2)])
def test_prox_optimality(h, rng):
    tau = 1.0
    for _ in range(20):
        x = rng.normal(scale=3.0, size=2)
        z = h.prox_oracle(tau, x)
        base = h.evaluate(z) + np.sum((z - x) ** 2) / (2 * tau)
        d = rng.normal(size=(20, 2))
        d *= 1e-3 / np.linalg.norm(d, axis=1, keepdims=True)
        for di in d:
            assert base <= h.evaluate(z + di) + np.sum((z + di - x) ** 2) / (2 * tau) + 1e-9


@pytest.mark.parametrize("a", [-0.7, 0.0, 0.3, 4.0])
def test_prox_quadratic_resolvent_closed_form(a, rng):
    p = rng.normal(size=4)
    s = spec_from_prox(prox_quadratic(a, p))
    for tau in (0.1, 0.5, 1.0):
        x = rng.normal(size=4)
        np.testing.assert_allclose(resolvent(s, tau, x), (x + tau * a * p) / (1 + tau * a), rtol=1e-12, atol=1e-12)
