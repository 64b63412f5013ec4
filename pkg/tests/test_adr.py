import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adrdyn.adr import (
    Case,
    DROperator,
    DRParams,
    apply_averaged,
    apply_dr,
    lipschitz_zeta,
    residual,
    shadow,
    validate,
)
from adrdyn.diagnostics import empirical_lipschitz
from adrdyn.errors import InvalidParameterError
from adrdyn.operators import affine_operator, zero_operator
from adrdyn.problems import problem_quad_quad


def locate_fixed_point(op, u, tol=1e-12, max_iter=100_000):
    for _ in range(max_iter):
        if op.residual(u) <= tol:
            return u
        u = 0.5 * u + 0.5 * op.apply(u)
    raise AssertionError("fixed point not located")


# -- validate ----------------------------------------------------------------

def test_validate_c1_pass_with_slack():
    rep = validate(DRParams.c1(2.0, -0.5, 1.0, 0.25), Case.C1)
    assert rep.passed
    slack = {c.name: c.slack for c in rep.checks}["gamma*alpha*beta/(alpha+beta) > epsilon - 1"]
    assert slack == pytest.approx(1.0 / 12.0, abs=1e-15)


def test_validate_c1_fails_for_large_epsilon():
    rep = validate(DRParams.c1(2.0, -0.5, 1.0, 0.5), Case.C1)
    assert not rep.passed
    assert [c.name for c in rep.violated_conditions] == ["gamma*alpha*beta/(alpha+beta) > epsilon - 1"]
    assert rep.violated_conditions[0].slack == pytest.approx(-2.0 / 3.0 + 0.5, abs=1e-15)


def test_validate_c2_example():
    rep = validate(DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0, 0.0), "C2")
    assert rep.passed
    assert rep.to_dict()["passed"] is True


def test_p1_classical_parameters_are_not_c2(p1_c1):
    # mu = 2 lies below 2 - 2*gamma*beta = 3
    rep = validate(p1_c1, Case.C2)
    assert [c.name for c in rep.violated_conditions] == ["mu >= 2 - 2*gamma*beta"]


def test_validate_reports_linkage_violation():
    rep = validate(DRParams(1.0, 0.0, 1.0, 0.5, 2.0, 2.0), Case.C2)
    assert "delta = (lam-1)*gamma" in [c.name for c in rep.violated_conditions]


def test_c3_with_zero_sum_fails():
    rep = validate(DRParams.c3(1.0, -1.0, 1.0), Case.C3)
    assert not rep.passed


def test_c2_builder_satisfies_linkage():
    p = DRParams.c2(2.0, -0.5, 1.0, 4.0)
    assert (p.lam - 1) * (p.mu - 1) == pytest.approx(1.0, abs=1e-15)
    assert p.delta == pytest.approx((p.lam - 1) * p.gamma, abs=1e-15)


@pytest.mark.parametrize("kw", [dict(epsilon=1.0), dict(gamma=0.0), dict(delta=-1.0), dict(alpha=math.nan)])
def test_params_reject_bad_values(kw):
    base = dict(alpha=1.0, beta=0.0, gamma=1.0, delta=1.0, lam=2.0, mu=2.0, epsilon=0.0)
    base.update(kw)
    with pytest.raises(InvalidParameterError):
        DRParams(**base)


def test_operator_requires_matching_moduli(p1):
    with pytest.raises(InvalidParameterError):
        DROperator(p1.spec_a, p1.spec_b, DRParams.c1(1.0, -0.5, 1.0, 0.25))


# -- apply / residual / shadow -------------------------------------------------

def test_apply_dr_zero_operators_is_identity(rng):
    x = rng.normal(size=3)
    p = DRParams.c3(0.0, 0.0, 1.7)
    np.testing.assert_array_equal(apply_dr(zero_operator(), zero_operator(), p, x), x)
    assert residual(zero_operator(), zero_operator(), p, x) == 0.0


def test_apply_dr_hand_chain():
    a = affine_operator([[1.0]])
    p = DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    np.testing.assert_allclose(apply_dr(a, zero_operator(), p, [4.0]), [0.0], atol=1e-15)


@pytest.mark.parametrize("which", ["p1_c1", "p1_c2"])
def test_p1_fixed_point_located_and_shadow(p1, which, request):
    params = request.getfixturevalue(which)
    op = DROperator(p1.spec_a, p1.spec_b, params)
    u_hat = locate_fixed_point(op, np.zeros(1))
    np.testing.assert_allclose(u_hat, [3.0], atol=1e-10)
    np.testing.assert_allclose(apply_dr(p1.spec_a, p1.spec_b, params, u_hat), u_hat, atol=1e-12)
    np.testing.assert_allclose(shadow(p1.spec_a, params, u_hat), [5.0 / 3.0], atol=1e-10)
    np.testing.assert_allclose(p1.fixed_point(params.gamma), [3.0], rtol=1e-15)


@pytest.mark.parametrize("which, expected", [("p1_c1", 6.0), ("p1_c2", 2.4)])
def test_p1_residual_at_origin(p1, which, expected, request):
    params = request.getfixturevalue(which)
    # hand-scripted composition of the two closed-form resolvents
    g, d, lam, mu = params.gamma, params.delta, params.lam, params.mu
    ja = (0.0 + g * 2.0 * 1.0) / (1 + g * 2.0)
    ra = (1 - lam) * 0.0 + lam * ja
    jb = (ra + d * (-0.5) * (-1.0)) / (1 + d * (-0.5))
    rr = (1 - mu) * ra + mu * jb
    assert residual(p1.spec_a, p1.spec_b, params, [0.0]) == pytest.approx(abs(rr), rel=1e-14)
    assert abs(rr) == pytest.approx(expected, rel=1e-14)


def test_apply_averaged_examples(p1):
    a = affine_operator([[1.0]])
    p0 = DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0, 0.0)
    np.testing.assert_array_equal(apply_averaged(a, zero_operator(), p0, [4.0]), [4.0])
    p5 = DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0, 0.5)
    np.testing.assert_allclose(apply_averaged(a, zero_operator(), p5, [4.0]), [2.0])
    for eps in (0.1, 0.5, 0.9):
        p = DRParams.c1(2.0, -0.5, 1.0, eps)
        np.testing.assert_allclose(apply_averaged(p1.spec_a, p1.spec_b, p, [3.0]), [3.0], atol=1e-13)


def test_shadow_of_zero_operator_is_identity(rng):
    x = rng.normal(size=4)
    np.testing.assert_array_equal(shadow(zero_operator(), DRParams.c3(0.0, 1.0, 1.0), x), x)


def test_shadow_lipschitz(p1, p1_c1, rng):
    x, y = rng.normal(size=(2, 1000, 1)) * 5
    op = DROperator(p1.spec_a, p1.spec_b, p1_c1)
    lhs = np.linalg.norm(op.shadow(x) - op.shadow(y), axis=1)
    assert np.all(lhs <= np.linalg.norm(x - y, axis=1) / (1 + p1_c1.gamma * p1_c1.alpha) + 1e-9)


# -- zeta ---------------------------------------------------------------------

def test_zeta_examples():
    p = DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    assert lipschitz_zeta(p, 1.0) == 0.0
    assert lipschitz_zeta(p, 2.0) == pytest.approx(math.sqrt(3.0 / 7.0), abs=1e-15)
    assert lipschitz_zeta(p, 2.0) == pytest.approx(0.654654, abs=1e-6)


def test_zeta_excluded_boundary():
    # mu = 2 + 2*gamma*alpha
    p = DRParams(0.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    with pytest.raises(InvalidParameterError):
        lipschitz_zeta(p, 1.0)


def test_zeta_rejects_small_l_and_non_c2(p1_c1):
    with pytest.raises(InvalidParameterError):
        lipschitz_zeta(DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0), 0.5)
    with pytest.raises(InvalidParameterError):
        lipschitz_zeta(p1_c1, 2.0)


def test_zeta_dominates_empirical_lipschitz(rng):
    a = affine_operator(np.diag([1.0, 2.0]))
    b = affine_operator(np.diag([0.0, 0.5]))
    p = DRParams(1.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    op = DROperator(a, b, p)
    zeta = lipschitz_zeta(p, 2.0)
    assert empirical_lipschitz(op.apply, np.zeros(2), 3.0, 2000, seed=1) <= zeta + 1e-6


# -- properties ---------------------------------------------------------------

def _c2_cases():
    quad = problem_quad_quad(2.0, [1.0, 0.0], -0.5, [-1.0, 2.0])
    aff = (affine_operator(np.diag([1.0, 2.0]), [1.0, 0.0]), affine_operator(np.diag([-0.5, 0.5]), [0.0, 1.0]))
    return [
        ("quad_mu3", quad.spec_a, quad.spec_b, DRParams.c2(2.0, -0.5, 1.0, 3.0)),
        ("quad_mu5", quad.spec_a, quad.spec_b, DRParams.c2(2.0, -0.5, 1.0, 5.0, 0.3)),
        ("affine_mu3.5", *aff, DRParams.c2(1.0, -0.5, 1.0, 3.5, 0.6)),
    ]


@pytest.mark.parametrize("name, a, b, params", _c2_cases())
def test_c2_operator_inequality_and_nonexpansive(name, a, b, params, rng):
    assert validate(params, Case.C2).passed
    op = DROperator(a, b, params)
    g, al, be, mu = params.gamma, params.alpha, params.beta, params.mu
    x, y = rng.normal(scale=4.0, size=(2, 3000, 2))
    jax, jbx, rrx = op.components(x)
    jay, jby, rry = op.components(y)
    sq = lambda v: np.sum(v * v, axis=1)
    lhs = sq(rrx - rry)
    rhs = sq(x - y) - mu * (2 + 2 * g * al - mu) * sq(jax - jay) - mu * (mu - (2 - 2 * g * be)) * sq(jbx - jby)
    assert np.all(lhs <= rhs + 1e-9)
    assert np.all(np.sqrt(lhs) <= np.linalg.norm(x - y, axis=1) + 1e-9)
    eps = params.epsilon if params.epsilon > 0 else 0.5
    tx, ty = op.averaged(x, eps), op.averaged(y, eps)
    rhs0 = (sq(x - y) - (1 - eps) / eps * sq((x - tx) - (y - ty))
            - eps * mu * (2 + 2 * g * al - mu) * sq(jax - jay)
            - eps * mu * (mu - (2 - 2 * g * be)) * sq(jbx - jby))
    assert np.all(sq(tx - ty) <= rhs0 + 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_identity_decomposition(eps, xs):
    quad = problem_quad_quad(2.0, [1.0, 0.0], -0.5, [-1.0, 2.0])
    params = DRParams.c2(2.0, -0.5, 1.0, 4.0, eps)
    op = DROperator(quad.spec_a, quad.spec_b, params)
    x = np.array(xs)
    ja, jbra, rr = op.components(x)
    lhs = x - op.averaged(x)
    scale = max(1.0, float(np.max(np.abs(x))))
    np.testing.assert_allclose(lhs, eps * (x - rr), atol=1e-12 * scale * 10)
    np.testing.assert_allclose(x - rr, params.mu * (ja - jbra), atol=1e-12 * scale * 10)


def test_quasi_nonexpansive_under_c1(p1, p1_c1, rng):
    op = DROperator(p1.spec_a, p1.spec_b, p1_c1)
    u_hat = np.array([3.0])
    x = rng.normal(scale=10.0, size=(5000, 1))
    lhs = np.linalg.norm(op.averaged(x) - u_hat, axis=1)
    assert np.all(lhs <= np.linalg.norm(x - u_hat, axis=1) + 1e-9)


def test_fixed_point_shadow_solves_inclusion(problems):
    for name in ("p1", "affine_p1", "affine_diag", "affine_coupled"):
        prob = problems[name]
        params = DRParams.c3(prob.alpha, prob.beta, 0.5)
        op = DROperator(prob.spec_a, prob.spec_b, params)
        u_hat = locate_fixed_point(op, np.zeros(prob.dim))
        z = op.shadow(u_hat)
        assert np.linalg.norm(prob.spec_a.direct_eval(z) + prob.spec_b.direct_eval(z)) <= 1e-6
