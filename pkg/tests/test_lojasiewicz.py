from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lojatool import ExponentEstimate, Poly, SamplingOptions, parse_poly
from lojatool.errors import AllSamplesVanish, InputError
from lojatool.lojasiewicz import (direct_sum_extend, estimate_sampling, lower_envelope_fit,
                                  monomial_exponent, quadratic_constant, verify_inequality)


def random_sym(rng, d, cond):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    mags = np.exp(rng.uniform(0.0, np.log(cond), size=d))
    mags[0], mags[-1] = 1.0, cond
    lam = mags * rng.choice([-1.0, 1.0], size=d)
    A = Q @ np.diag(lam) @ Q.T
    return 0.5 * (A + A.T)


def near_identity(rng, d, eps):
    """``x + eps * q(x)`` with ``q`` a random quadratic map, as polynomials."""
    subs = []
    for i in range(d):
        terms = {tuple(int(j == i) for j in range(d)): 1.0}
        for j in range(d):
            for k in range(j, d):
                e = [0] * d
                e[j] += 1
                e[k] += 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + eps * rng.uniform(-1, 1)
        subs.append(Poly(d, terms))
    return subs


# -- monomial_exponent ----------------------------------------------------------

@pytest.mark.parametrize("n,theta,N", [
    ((2, 0), Fraction(1, 2), 2),
    ((1, 1), Fraction(1, 2), 2),
    ((2, 1), Fraction(2, 3), 3),
])
def test_monomial_exponent_examples(n, theta, N):
    assert monomial_exponent(n) == (theta, N)


@pytest.mark.parametrize("n", [(1, 0), (0, 0, 0), (1,), (2, -1)])
def test_monomial_exponent_rejects(n):
    with pytest.raises(InputError):
        monomial_exponent(n)


@given(st.lists(st.integers(0, 20), min_size=1, max_size=6).filter(lambda n: sum(n) >= 2))
def test_monomial_exponent_formula(n):
    theta, N = monomial_exponent(n)
    assert N == sum(n) and theta == 1 - Fraction(1, N)
    assert Fraction(1, 2) <= theta < 1


# -- quadratic_constant -------------------------------------------------------------

@pytest.mark.parametrize("A,C", [
    (np.eye(3), np.sqrt(2)),
    (np.diag([1.0, -1.0]), np.sqrt(2)),
    (np.diag([4.0, 1.0]), np.sqrt(2 / 4)),
])
def test_quadratic_constant_examples(A, C):
    assert abs(quadratic_constant(A) - C) <= 1e-15


def test_quadratic_constant_ignores_kernel():
    assert abs(quadratic_constant(np.diag([2.0, 0.0])) - 2.0 * np.sqrt(1.0)) <= 1e-15


def test_quadratic_constant_zero():
    with pytest.raises(InputError):
        quadratic_constant(np.zeros((2, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(1.0, 1e4), st.integers(0, 2**32 - 1))
def test_quadratic_guarantee(d, cond, seed):
    A = random_sym(np.random.default_rng(seed), d, cond)
    f = Poly.quadratic_form(A)
    rep = verify_inequality(f, np.zeros(d), 0.5, quadratic_constant(A), atol=1e-10)
    assert rep.passed and rep.min_margin >= -1e-10


# -- estimate_sampling ---------------------------------------------------------------

@pytest.mark.parametrize("text,theta,tol", [
    ("x1^2", 0.5, 0.02),
    ("x1^4", 0.75, 0.02),
    ("x1^2*x2^2", 0.75, 0.05),
])
def test_estimate_examples(text, theta, tol):
    est = estimate_sampling(parse_poly(text))
    assert est.method == "sampling"
    assert abs(est.theta_hat - theta) <= tol
    assert est.fit_residual >= 0 and est.n_samples > 0
    assert est.radii_range == (1e-4, 1e-1)


def test_estimate_constant_of_square():
    # |f'| = 2 |f|^{1/2} exactly, so the fitted constant is 2
    est = estimate_sampling(parse_poly("x1^2"))
    assert abs(est.constant_hat - 2.0) < 1e-6


def test_estimate_at_translated_point():
    f = parse_poly("(x1 - 0.5)^4 + 3", 1)
    assert abs(estimate_sampling(f, [0.5]).theta_hat - 0.75) <= 0.02


def test_estimate_all_vanish():
    with pytest.raises(AllSamplesVanish):
        estimate_sampling(Poly(2))


def test_estimate_low_flag():
    # a non-critical point: the fit falls below one half and is flagged
    est = estimate_sampling(parse_poly("x1"), [0.0])
    assert est.theta_hat < 0.45 and est.diagnostics["below_one_half"]


def test_estimate_deterministic():
    f = parse_poly("x1^2 + x2^4")
    a, b = estimate_sampling(f), estimate_sampling(f)
    assert a.theta_hat == b.theta_hat and a.constant_hat == b.constant_hat


def test_estimate_options():
    est = estimate_sampling(parse_poly("x1^4"), options=SamplingOptions(n_shells=12, dirs_per_shell=8))
    assert abs(est.theta_hat - 0.75) <= 0.02


def test_lower_envelope_fit_line():
    x = np.linspace(-10, 0, 200)
    y = 0.6 * x + 1.0 + np.abs(np.sin(7 * x))  # lower envelope is the line
    slope, intercept, resid, nb = lower_envelope_fit(x, y, -10.0, 0.0, 20)
    assert abs(slope - 0.6) < 0.01 and abs(intercept - 1.0) < 0.1 and nb == 20


def test_exponent_estimate_validation():
    with pytest.raises(ValueError):
        ExponentEstimate(theta_hat=1.0, method="sampling")
    with pytest.raises(ValueError):
        ExponentEstimate(theta_hat=0.5, method="sampling", fit_residual=-1.0)


# -- verify_inequality ---------------------------------------------------------------

def test_verify_half_norm_square():
    f = Poly.quadratic_form(np.eye(3))
    rep = verify_inequality(f, np.zeros(3), 0.5, np.sqrt(2))
    assert rep.passed and rep.min_margin >= -1e-12
    assert abs(rep.min_margin) <= 1e-12  # equality case


def test_verify_quartic_fails_at_one_half():
    f = parse_poly("x1^4")
    rep = verify_inequality(f, [0.0], 0.5, 1e-3)
    assert not rep.passed
    assert abs(rep.worst_point[0]) < 1e-3  # the failure sits near the critical point


def test_verify_product_amgm(rng):
    f = parse_poly("x1*x2")
    X = rng.uniform(-1, 1, size=(4000, 2))
    X = X[np.linalg.norm(X, axis=1) <= 1]
    rep = verify_inequality(f, [0.0, 0.0], 0.5, 1.0, samples=X)
    assert rep.passed and rep.n_samples == X.shape[0]


# -- direct_sum_extend --------------------------------------------------------------

def test_direct_sum_examples():
    assert direct_sum_extend(parse_poly("x1^4"), [[2.0]]) == parse_poly("x1^4 + x2^2")
    assert direct_sum_extend(Poly(1), np.eye(2)) == parse_poly("0.5*x2^2 + 0.5*x3^2", 3)
    assert direct_sum_extend(parse_poly("x1^2"), [[-2.0]]) == parse_poly("x1^2 - x2^2")


def test_direct_sum_zero_block():
    with pytest.raises(InputError):
        direct_sum_extend(parse_poly("x1^2"), np.zeros((2, 2)))


@pytest.mark.parametrize("text,dim", [("x1^2 + x2^4", 2), ("x1^2*x2^2", 2), ("x1^4", 1)])
def test_direct_sum_invariance(text, dim, rng):
    f = parse_poly(text, dim)
    base = estimate_sampling(f).theta_hat
    for _ in range(2):
        e = int(rng.integers(1, 3))
        A = random_sym(rng, e, 5.0)
        assert abs(estimate_sampling(direct_sum_extend(f, A)).theta_hat - base) <= 0.05


# -- invariance under near-identity polynomial changes of variables -------------------

@pytest.mark.parametrize("text,dim", [("x1^2 + x2^4", 2), ("(x1 + x2^2)^2", 2), ("x1^3 - 3*x1*x2^2", 2),
                                      ("x1^2 + x2^2 + x3^4", 3)])
def test_near_identity_invariance(text, dim, rng):
    f = parse_poly(text, dim)
    base = estimate_sampling(f).theta_hat
    for _ in range(3):
        subs = near_identity(rng, dim, 0.25)
        # |D Phi - I| <= 0.1 on the sampled ball of radius 0.1
        pts = 0.1 * rng.normal(size=(200, dim))
        pts /= np.maximum(1.0, 10 * np.linalg.norm(pts, axis=1))[:, None]
        jac = np.stack([np.stack([s.grad_at(p) for s in subs]) for p in pts])
        assert np.max(np.linalg.norm(jac - np.eye(dim), ord=2, axis=(1, 2))) <= 0.1
        g = f.compose(subs)
        assert abs(estimate_sampling(g).theta_hat - base) <= 0.05
