import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import LABELED
from lojatool import ClassifyOptions, Poly, SplitChart, VerdictKind, blowup_check, classify, kernel_split, parse_poly
from lojatool.errors import NotCritical, SignatureMismatch
from lojatool.morse_bott import lowest_order, normal_form, signatures
from lojatool.sphere import sphere_directions


def random_invertible(rng, d, max_cond=10.0):
    while True:
        L = rng.normal(size=(d, d))
        if np.linalg.cond(L) < max_cond:
            return L / np.linalg.norm(L, 2)


# -- kernel_split -------------------------------------------------------------

def test_kernel_split_examples():
    s = kernel_split(np.diag([2.0, 0.0]))
    assert s.kernel_dim == 1
    np.testing.assert_allclose(np.abs(s.kernel_basis[:, 0]), [0.0, 1.0])
    np.testing.assert_allclose(s.A0, [[2.0]])
    assert kernel_split(np.array([[0.0, 1.0], [1.0, 0.0]])).kernel_dim == 0
    assert kernel_split(np.zeros((3, 3))).kernel_dim == 3


def test_kernel_split_rejects_asymmetric():
    with pytest.raises(ValueError):
        kernel_split(np.array([[1.0, 2.0], [0.0, 1.0]]))


@st.composite
def sym_with_kernel(draw):
    d = draw(st.integers(1, 6))
    c = draw(st.integers(0, d))
    r = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    Q, _ = np.linalg.qr(r.normal(size=(d, d)))
    lam = np.zeros(d)
    lam[c:] = r.uniform(0.1, 10.0, size=d - c) * r.choice([-1.0, 1.0], size=d - c)
    H = Q @ np.diag(lam) @ Q.T
    return 0.5 * (H + H.T), c


@settings(max_examples=80, deadline=None)
@given(sym_with_kernel())
def test_kernel_split_invariants(hc):
    H, c = hc
    tol = 1e-8
    s = kernel_split(H, tol)
    d = H.shape[0]
    assert s.kernel_dim == c and s.rank + s.kernel_dim == d
    top = np.max(np.abs(s.eigenvalues))
    for k in s.kernel_basis.T:
        assert np.linalg.norm(H @ k) <= tol * top * np.linalg.norm(k) + 1e-15
    Q = s.basis()
    np.testing.assert_allclose(Q.T @ Q, np.eye(d), atol=1e-12)
    Z = s.complement_basis
    np.testing.assert_allclose(Z.T @ H @ Z, s.A0, atol=1e-12)
    if s.rank:
        assert np.min(np.abs(np.linalg.eigvalsh(s.A0))) > tol * top


def test_rank_gap_flags_ill_conditioning():
    s = kernel_split(np.diag([1.0, 1e-7, 5e-10]), tol=1e-8)
    assert s.kernel_dim == 1 and abs(s.rank_gap - 200.0) < 1e-9 and s.is_ill_conditioned()
    assert kernel_split(np.diag([1.0, 0.0])).rank_gap == np.inf
    assert not kernel_split(np.diag([1.0, 0.5, 0.0])).is_ill_conditioned()


# -- lowest_order -------------------------------------------------------------

def test_lowest_order_single_monomial():
    m, v = lowest_order(parse_poly("x1^4"))
    assert m == 4 and abs(abs(v[0]) - 1.0) < 1e-15


def test_lowest_order_zero():
    assert lowest_order(Poly(2)) is None


def test_lowest_order_cubic_form():
    g = parse_poly("x1^3 - 3*x1*x2^2")
    m, v = lowest_order(g)
    assert m == 3
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    # oracle: dense sweep of the circle, |g(cos t, sin t)| = |cos 3t|
    t = np.linspace(0, 2 * np.pi, 20001)
    best = np.max(np.abs(g.eval_many(np.column_stack([np.cos(t), np.sin(t)]))))
    assert abs(abs(g.eval(v)) - best) < 1e-9
    assert abs(abs(g.eval(v)) - 1.0) < 1e-9


def test_lowest_order_ignores_higher_parts():
    m, v = lowest_order(parse_poly("x1^3*x2 + x1^6 + x2^5"))
    assert m == 4


# -- classify -------------------------------------------------------------------

def test_classify_examples():
    assert classify(parse_poly("x1^2 + x2^2")).kind is VerdictKind.MORSE
    v = classify(parse_poly("(x1 + x2^2)^2"))
    assert v.kind is VerdictKind.MORSE_BOTT and v.critical_dim == 1 and v.kernel_dim == 1
    v = classify(parse_poly("x1^2 + x2^4"))
    assert v.kind is VerdictKind.NOT_MORSE_BOTT and v.order == 4 and v.exponent_bound == 0.75


def test_classify_not_critical():
    with pytest.raises(NotCritical):
        classify(parse_poly("x1^2 + x2^2"), [1.0, 1.0])


def test_classify_constant():
    v = classify(Poly.constant(2, 3.0))
    assert v.kind is VerdictKind.CONSTANT


def test_classify_translated_point():
    f = parse_poly("(x1 - 1)^2 + (x2 + 2)^4")
    v = classify(f, [1.0, -2.0])
    assert v.label() == "NotMorseBott(4)" and v.kernel_dim == 1


def test_classify_inconclusive_beyond_max_order():
    v = classify(parse_poly("x1^2 + x2^10"), max_order=8)
    assert v.kind is VerdictKind.INCONCLUSIVE and v.max_order_checked == 8
    assert classify(parse_poly("x1^2 + x2^10"), max_order=10).label() == "NotMorseBott(10)"


def test_classify_series_elimination():
    # the branch equation 2 x1 + x2^2 + 3 x1^2 = 0 is not affine in x1
    v = classify(parse_poly("x1^2 + x1*x2^2 + x1^3 + x2^4"))
    assert v.diagnostics["elimination"] == "series"
    assert v.label() == "NotMorseBott(4)"
    assert abs(v.reduced.coeff((4,)) - 0.75) < 1e-12


@pytest.mark.parametrize("text,dim,label,kdim", LABELED)
def test_labeled_corpus(text, dim, label, kdim):
    v = classify(parse_poly(text, dim))
    assert v.label() == label and v.kernel_dim == kdim
    if v.kind is VerdictKind.NOT_MORSE_BOTT:
        assert v.exponent_bound == (v.order - 1) / v.order >= 2 / 3


@pytest.mark.parametrize("text,dim,label,kdim",
                         [row for row in LABELED if row[2].startswith("NotMorseBott")])
def test_direction_certificate(text, dim, label, kdim):
    v = classify(parse_poly(text, dim))
    line = v.reduced.restrict_direction(v.direction)
    m = v.order
    assert all(line.coeff((j,)) == 0.0 for j in range(m))
    assert abs(line.coeff((m,))) > 1e-3


@pytest.mark.parametrize("text,dim,label,kdim",
                         [row for row in LABELED if row[2].startswith("MorseBott")])
def test_morse_bott_branch_is_critical(text, dim, label, kdim):
    f = parse_poly(text, dim)
    split = kernel_split(f.hessian(np.zeros(dim)))
    chart = SplitChart(f, split)
    radius = 0.5 * chart.trust_radius
    dirs = sphere_directions(kdim, 16) if kdim > 1 else np.array([[1.0], [-1.0]])
    for u in dirs:
        for frac in (0.25, 1.0):
            xi = frac * radius * u
            x = chart.to_original(chart.solve_branch(xi).psi, xi)
            assert np.linalg.norm(f.grad_at(x)) <= 1e-10


@pytest.mark.parametrize("text,dim,label,kdim", LABELED)
def test_affine_invariance(text, dim, label, kdim):
    rng = np.random.default_rng(len(text) * 7919 + dim)
    f = parse_poly(text, dim)
    for _ in range(3):
        L = random_invertible(rng, dim)
        v = classify(f.compose_affine(L))
        assert v.kernel_dim == kdim
        assert v.label() == label


def test_options_respected():
    f = parse_poly("x1^2 + 1e-9*x2^2")
    assert classify(f, options=ClassifyOptions(kernel_tol=1e-10)).kind is VerdictKind.MORSE
    # under the default tolerance the tiny direction is kernel, and the
    # branch check sees |grad f| = 1e-9 on it, so no verdict is claimed
    v = classify(f)
    assert v.kernel_dim == 1 and v.kind is VerdictKind.INCONCLUSIVE


def test_verdict_serialization():
    d = classify(parse_poly("x1^2 + x2^4")).to_dict()
    assert d["kind"] == "NotMorseBott" and d["order"] == 4
    assert d["reduced_polynomial"] == "x1^4"


# -- blowup -----------------------------------------------------------------------

def test_blowup_examples():
    assert blowup_check((2, 0, 0), parse_poly("x1^2 + x2^2")) < 1e-14
    assert blowup_check((1, 1, 0), parse_poly("x1^2 - x2^2")) < 1e-14
    assert blowup_check((0, 1, 1), parse_poly("-x1^2", 2)) < 1e-14


@pytest.mark.parametrize("sig", list(signatures(3, 2)))
def test_blowup_all_signatures(sig):
    assert blowup_check(sig, normal_form(*sig), samples=1000) < 1e-14


def test_blowup_signature_mismatch():
    with pytest.raises(SignatureMismatch):
        blowup_check((1, 1, 0), parse_poly("x1^2 + x2^2"))
    with pytest.raises(SignatureMismatch):
        blowup_check((1, 0, 0), parse_poly("x1^2 + x2^2"))
