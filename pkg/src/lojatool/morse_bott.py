"""Classification of critical points: Morse, Morse-Bott, or degenerate of order m.

The reduced function ``g(xi) = f(psi(xi), xi)`` on the Hessian kernel is
built as a truncated power series.  If it vanishes identically the critical
set is the graph of the branch and ``f`` is Morse-Bott there; otherwise its
lowest nonvanishing homogeneous part has degree ``m >= 3`` and some
direction ``v`` with ``g_m(v) != 0``, which forces the gradient-inequality
exponent to be at least ``(m - 1) / m``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, LojaError, NotCritical, SignatureMismatch
from .poly import Poly
from .sphere import sphere_directions
from .splitting import KernelSplit, SplitChart, SplitOptions


class VerdictKind(str, enum.Enum):
    MORSE = "Morse"
    MORSE_BOTT = "MorseBott"
    NOT_MORSE_BOTT = "NotMorseBott"
    CONSTANT = "Constant"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class MorseBottVerdict:
    kind: VerdictKind
    kernel_dim: int
    critical_dim: int | None = None
    order: int | None = None
    direction: tuple[float, ...] | None = None
    exponent_bound: float | None = None
    max_order_checked: int | None = None
    diagnostics: dict = field(default_factory=dict)
    reduced: Poly | None = None

    def __post_init__(self):
        if self.kind is VerdictKind.NOT_MORSE_BOTT:
            assert self.order is not None and self.order >= 3
        if self.kind is VerdictKind.MORSE_BOTT:
            assert self.critical_dim == self.kernel_dim

    def label(self) -> str:
        if self.kind is VerdictKind.MORSE_BOTT:
            return f"MorseBott({self.critical_dim})"
        if self.kind is VerdictKind.NOT_MORSE_BOTT:
            return f"NotMorseBott({self.order})"
        if self.kind is VerdictKind.INCONCLUSIVE:
            return f"Inconclusive({self.max_order_checked})"
        return self.kind.value

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "kernel_dim": self.kernel_dim,
            "critical_dim": self.critical_dim,
            "order": self.order,
            "direction": list(self.direction) if self.direction is not None else None,
            "exponent_bound": self.exponent_bound,
            "max_order_checked": self.max_order_checked,
            "reduced_polynomial": self.reduced.to_text() if self.reduced is not None else None,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class ClassifyOptions:
    kernel_tol: float = 1e-8
    max_order: int = 8
    grad_tol: float = 1e-8
    vanish_tol: float = 1e-9
    ill_conditioned_gap: float = 1e3
    sphere_samples_per_dim: int = 512
    ascent_steps: int = 20
    branch_check_tol: float = 1e-10
    branch_check_radius: float = 0.5
    split: SplitOptions = SplitOptions()


def kernel_split(H, tol: float = 1e-8, origin=None) -> KernelSplit:
    """Eigen-split of a symmetric matrix into kernel and complement.

    Eigenvalues with ``|lambda| < tol * max |lambda|`` go to the kernel.
    ``A0`` is ``H`` restricted to the complement.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[0] != H.shape[1]:
        raise InputError("H must be square")
    if not np.array_equal(H, H.T):
        if np.max(np.abs(H - H.T)) > 1e-12 * max(1.0, np.max(np.abs(H))):
            raise InputError("H is not symmetric")
        H = 0.5 * (H + H.T)
    d = H.shape[0]
    lam, V = np.linalg.eigh(H)
    top = np.max(np.abs(lam)) if d else 0.0
    in_kernel = np.abs(lam) < tol * top if top > 0 else np.ones(d, dtype=bool)
    K = V[:, in_kernel]
    Z = V[:, ~in_kernel]
    A0 = Z.T @ H @ Z
    A0 = 0.5 * (A0 + A0.T)
    kept, dropped = np.abs(lam[~in_kernel]), np.abs(lam[in_kernel])
    if dropped.size == 0 or np.max(dropped) == 0.0:
        gap = math.inf
    elif kept.size == 0:
        gap = 0.0
    else:
        gap = float(np.min(kept) / np.max(dropped))
    return KernelSplit(dim=d, kernel_basis=K, complement_basis=Z, A0=A0, rank_gap=gap,
                       eigenvalues=lam, tol=tol,
                       origin=np.zeros(d) if origin is None else np.asarray(origin, float).copy())


def lowest_order(g: Poly, samples_per_dim: int = 512, ascent_steps: int = 20):
    """Lowest nonvanishing order ``m`` of ``g`` and a unit direction maximizing ``|g_m|``.

    Returns ``None`` when ``g`` is the zero polynomial.
    """
    if g.is_zero():
        return None
    m = g.low_degree
    gm = g.homogeneous_part(m)
    c = g.dim
    dirs = sphere_directions(c, samples_per_dim * c)
    vals = np.abs(gm.eval_many(dirs))
    v = np.array(dirs[int(np.argmax(vals))], dtype=float)
    best = float(vals.max())
    if c > 1 and ascent_steps > 0:
        step = 0.5 / math.sqrt(len(dirs))
        for _ in range(ascent_steps):
            val = gm.eval(v)
            gr = gm.grad_at(v) * math.copysign(1.0, val)
            tang = gr - (gr @ v) * v
            tn = np.linalg.norm(tang)
            if tn == 0.0:
                break
            while step > 1e-14:
                cand = v + step * tang / tn
                cand /= np.linalg.norm(cand)
                cv = abs(gm.eval(cand))
                if cv > best:
                    v, best = cand, cv
                    step *= 1.5
                    break
                step *= 0.5
            else:
                break
    return m, v


def reduced_polynomial(F: Poly, k: int, max_order: int) -> tuple[Poly, list[Poly], bool]:
    """Lyapunov-Schmidt elimination on a polynomial in split coordinates.

    ``F`` has its first ``k`` variables on the Hessian complement and the
    remaining ``c`` on the kernel, with no terms of degree below two and the
    quadratic part confined to the complement block.  The branch
    ``z = psi(xi)`` solves ``A z + N(z, xi) = 0`` and is computed by
    fixed-point iteration on power series truncated at ``max_order``.

    Returns ``(g, psi, exact)`` where ``exact`` means the branch equation was
    affine in ``z`` with constant linear part, so one substitution suffices.
    """
    d = F.dim
    c = d - k
    xi_vars = [Poly.variable(j, c, prune=F.prune) for j in range(c)]
    if k == 0:
        return F.truncate(max_order), [], True
    A = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            A[i, j] = F.coeff(e) * (2.0 if i == j else 1.0)
    Ainv = np.linalg.inv(A)
    N = []
    for i in range(k):
        lin = Poly(d, {tuple(1 if t == j else 0 for t in range(d)): A[i, j] for j in range(k)})
        N.append((F.diff(i) - lin).drop_below_degree(2))
    exact = all(all(sum(e[:k]) == 0 for e, _ in n) for n in N)
    psi = [Poly(c, {}, prune=F.prune) for _ in range(k)]
    for _ in range(max_order + 1):
        subs = psi + xi_vars
        Nv = [n.compose(subs, max_order) for n in N]
        new = [sum((Nv[j] * (-Ainv[i, j]) for j in range(k)), Poly(c, {}, prune=F.prune))
               for i in range(k)]
        if new == psi:
            break
        psi = new
    g = F.compose(psi + xi_vars, max_order)
    return g, psi, exact


def _critical_model(f: Poly, x0, split: KernelSplit) -> tuple[Poly, dict]:
    """``f`` in split coordinates about ``x0`` minus terms forced to vanish."""
    F = f.compose_affine(split.basis(), x0)
    k = split.rank
    kept, dropped = {}, {"constant": 0.0, "linear": 0.0, "kernel_quadratic": 0.0}
    for e, c in F:
        deg = sum(e)
        if deg == 0:
            dropped["constant"] = abs(c)
        elif deg == 1:
            dropped["linear"] = max(dropped["linear"], abs(c))
        elif deg == 2 and sum(e[:k]) < 2:
            dropped["kernel_quadratic"] = max(dropped["kernel_quadratic"], abs(c))
        else:
            kept[e] = c
    return Poly(F.dim, kept, prune=f.prune), dropped


def classify(f: Poly, x0=None, max_order: int | None = None,
             options: ClassifyOptions | None = None) -> MorseBottVerdict:
    """Classify the critical point ``x0`` of ``f``."""
    opts = options or ClassifyOptions()
    max_order = opts.max_order if max_order is None else max_order
    x0 = np.zeros(f.dim) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != f.dim:
        raise InputError(f"point has {x0.shape[0]} coordinates, polynomial has dim {f.dim}")
    scale = max(1.0, f.max_abs_coeff())
    gnorm = float(np.linalg.norm(f.grad_at(x0)))
    if gnorm > opts.grad_tol * scale:
        raise NotCritical(f"|grad f(x0)| = {gnorm:.6g} exceeds {opts.grad_tol * scale:.3g}")
    diag = {"grad_norm_at_x0": gnorm, "kernel_tol": opts.kernel_tol, "vanish_tol": opts.vanish_tol,
            "max_order": max_order}
    if (f - f.eval(x0)).translate(x0).chop(opts.vanish_tol * scale).is_zero():
        return MorseBottVerdict(VerdictKind.CONSTANT, kernel_dim=f.dim, diagnostics=diag)

    H = f.hessian(x0)
    split = kernel_split(H, opts.kernel_tol, origin=x0)
    c, k = split.kernel_dim, split.rank
    diag.update(rank_gap=split.rank_gap,
                ill_conditioned=bool(split.is_ill_conditioned(opts.ill_conditioned_gap)),
                eigenvalues=[float(v) for v in split.eigenvalues])
    if c == 0:
        return MorseBottVerdict(VerdictKind.MORSE, kernel_dim=0, diagnostics=diag)

    F, dropped = _critical_model(f, x0, split)
    diag["dropped_low_order"] = dropped
    g_full, psi, exact = reduced_polynomial(F, k, max_order + 1)
    diag["elimination"] = "exact" if exact else "series"
    cut = opts.vanish_tol * max(F.max_abs_coeff(), 1e-300)
    diag["remainder_indicator"] = sum(abs(v) for _, v in g_full.homogeneous_part(max_order + 1))
    g = g_full.truncate(max_order).chop(cut)
    low = g.truncate(2)
    diag["discarded_quadratic_part"] = low.max_abs_coeff()
    g = g.drop_below_degree(3)

    if g.is_zero():
        check = _branch_check(f, split, opts)
        diag["branch_check"] = check
        if check["ok"]:
            return MorseBottVerdict(VerdictKind.MORSE_BOTT, kernel_dim=c, critical_dim=c,
                                    max_order_checked=max_order, diagnostics=diag, reduced=g)
        return MorseBottVerdict(VerdictKind.INCONCLUSIVE, kernel_dim=c,
                                max_order_checked=max_order, diagnostics=diag, reduced=g)

    m, v = lowest_order(g, opts.sphere_samples_per_dim, opts.ascent_steps)
    diag["g_m_at_direction"] = g.homogeneous_part(m).eval(v)
    return MorseBottVerdict(VerdictKind.NOT_MORSE_BOTT, kernel_dim=c, order=m,
                            direction=tuple(float(t) for t in v), exponent_bound=(m - 1) / m,
                            max_order_checked=max_order, diagnostics=diag, reduced=g)


def _branch_check(f: Poly, split: KernelSplit, opts: ClassifyOptions) -> dict:
    """Solve the branch numerically at a few kernel points and measure ``|grad f|`` there."""
    try:
        chart = SplitChart(f, split, opts.split)
    except LojaError as exc:
        return {"ok": False, "error": str(exc)}
    radius = min(chart.trust_radius, opts.branch_check_radius)
    c = split.kernel_dim
    dirs = sphere_directions(c, 8) if c > 1 else np.array([[1.0], [-1.0]])
    worst, npts = 0.0, 0
    tol = opts.branch_check_tol * max(1.0, f.max_abs_coeff())
    for frac in (0.5, 1.0):
        for u in dirs:
            xi = frac * radius * u
            try:
                br = chart.solve_branch(xi)
            except LojaError as exc:
                return {"ok": False, "error": f"{type(exc).__name__}: {exc}", "radius": radius}
            x = chart.to_original(br.psi, xi)
            worst = max(worst, float(np.linalg.norm(f.grad_at(x))))
            npts += 1
    return {"ok": worst <= tol, "max_grad_norm": worst, "tolerance": tol,
            "radius": radius, "points": npts}


def normal_form(p: int, n: int, c: int) -> Poly:
    """``sum_{i<=p} y_i^2 - sum_{p<i<=p+n} y_i^2`` in ``p + n + c`` variables."""
    d = p + n + c
    if d < 1:
        raise InputError("signature must have p + n + c >= 1")
    terms = {}
    for i in range(p + n):
        e = [0] * d
        e[i] = 2
        terms[tuple(e)] = 1.0 if i < p else -1.0
    return Poly(d, terms)


def blowup_check(signature: tuple[int, int, int], f: Poly, samples: int = 1000,
                 seed: int = 0, radius: float = 0.5) -> float:
    """Maximum residual of the polar-coordinate identities for a Morse-Bott normal form.

    For ``n = 0``: ``f(s u, y) = s^2``; for ``p = 0``: ``f(t v, y) = -t^2``; for
    ``p, n >= 1``: ``f(s u, t v, y) = s^2 - t^2`` and, with
    ``s = (t1 + t2)/2``, ``t = (t1 - t2)/2``, ``f = t1 t2``.
    """
    p, n, c = (int(s) for s in signature)
    if min(p, n, c) < 0:
        raise SignatureMismatch(f"invalid signature {signature}")
    if f.dim != p + n + c:
        raise SignatureMismatch(f"signature {signature} needs dim {p + n + c}, polynomial has {f.dim}")
    if f != normal_form(p, n, c):
        raise SignatureMismatch(f"polynomial is not the normal form of signature {signature}")
    rng = np.random.default_rng(seed)

    def unit(k):
        g = rng.standard_normal((samples, k))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    y = rng.uniform(-radius, radius, (samples, c))
    residuals = []
    if p + n == 0:
        residuals.append(np.abs(f.eval_many(y)))
    elif n == 0:
        s = rng.uniform(0.0, radius, samples)
        X = np.hstack([s[:, None] * unit(p), y])
        residuals.append(np.abs(f.eval_many(X) - s ** 2))
    elif p == 0:
        t = rng.uniform(0.0, radius, samples)
        X = np.hstack([t[:, None] * unit(n), y])
        residuals.append(np.abs(f.eval_many(X) + t ** 2))
    else:
        u, v = unit(p), unit(n)
        s = rng.uniform(0.0, radius, samples)
        t = rng.uniform(0.0, radius, samples)
        X = np.hstack([s[:, None] * u, t[:, None] * v, y])
        residuals.append(np.abs(f.eval_many(X) - (s ** 2 - t ** 2)))
        t1 = rng.uniform(0.0, radius, samples)
        t2 = rng.uniform(-1.0, 1.0, samples) * t1
        s2, tt = 0.5 * (t1 + t2), 0.5 * (t1 - t2)
        X = np.hstack([s2[:, None] * u, tt[:, None] * v, y])
        residuals.append(np.abs(f.eval_many(X) - t1 * t2))
    return float(max(r.max() for r in residuals))


def signatures(max_pn: int = 3, max_c: int = 2):
    """All ``(p, n, c)`` with ``p + n <= max_pn``, ``c <= max_c`` and ``p + n + c >= 1``."""
    for p, n, c in itertools.product(range(max_pn + 1), range(max_pn + 1), range(max_c + 1)):
        if p + n <= max_pn and p + n + c >= 1:
            yield p, n, c
