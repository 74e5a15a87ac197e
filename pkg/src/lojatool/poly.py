"""Sparse multivariate polynomials with real coefficients.

A :class:`Poly` maps exponent multi-indices (tuples of nonnegative ints) to
nonzero float coefficients.  Term bookkeeping is exact; only coefficient
arithmetic rounds.  Coefficients whose magnitude falls below the prune
threshold after an operation are dropped so rounding dust cannot accumulate.
"""

from __future__ import annotations

import math
from collections import defaultdict
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE_TOL = 1e-14

Exps = tuple[int, ...]


def grlex_key(exps: Exps) -> tuple:
    """Sort key giving graded-lexicographic order, highest degree first."""
    return (-sum(exps), tuple(-e for e in exps))


class DimensionMismatch(ValueError):
    pass


class Poly:
    """Immutable sparse polynomial in ``dim`` variables ``x1..xd``.

    Parameters
    ----------
    dim : int
        Number of variables.
    terms : mapping, optional
        ``{exponent tuple: coefficient}``.  Zero (and sub-threshold)
        coefficients are dropped.
    prune : float
        Magnitude below which coefficients are discarded.  Inherited by every
        polynomial derived from this one.
    """

    __slots__ = ("_dim", "_terms", "_prune", "_cache")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], float] | None = None,
                 *, prune: float = PRUNE_TOL):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        self._dim = int(dim)
        self._prune = float(prune)
        clean = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self._dim:
                raise DimensionMismatch(f"multi-index {exps} does not have length {self._dim}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            coef = float(coef)
            if coef != 0.0 and abs(coef) >= self._prune:
                clean[exps] = coef
        self._terms = dict(sorted(clean.items(), key=lambda kv: grlex_key(kv[0])))
        self._cache = {}

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, dim: int, value: float, **kw) -> "Poly":
        return cls(dim, {(0,) * dim: value}, **kw)

    @classmethod
    def variable(cls, index: int, dim: int, **kw) -> "Poly":
        """The coordinate function ``x_{index+1}`` (``index`` is 0-based)."""
        if not 0 <= index < dim:
            raise ValueError(f"variable index {index} out of range for dim {dim}")
        exps = [0] * dim
        exps[index] = 1
        return cls(dim, {tuple(exps): 1.0}, **kw)

    @classmethod
    def monomial(cls, exps: Sequence[int], coef: float = 1.0, **kw) -> "Poly":
        return cls(len(exps), {tuple(exps): coef}, **kw)

    @classmethod
    def quadratic_form(cls, A, **kw) -> "Poly":
        """``1/2 x^T A x`` for a symmetric matrix ``A``."""
        A = np.asarray(A, dtype=float)
        d = A.shape[0]
        terms: dict = defaultdict(float)
        for i in range(d):
            for j in range(d):
                e = [0] * d
                e[i] += 1
                e[j] += 1
                terms[tuple(e)] += 0.5 * A[i, j]
        return cls(d, terms, **kw)

    def _new(self, terms, dim: int | None = None) -> "Poly":
        return Poly(self._dim if dim is None else dim, terms, prune=self._prune)

    # -- basic properties -------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def prune(self) -> float:
        return self._prune

    @property
    def terms(self) -> Mapping[Exps, float]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Maximum total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    @property
    def low_degree(self) -> int:
        """Minimum total degree over terms; ``-1`` for the zero polynomial."""
        return min((sum(e) for e in self._terms), default=-1)

    def coeff(self, exps: Sequence[int]) -> float:
        """Coefficient of ``x^exps``, i.e. ``d^exps p(0) / exps!``."""
        exps = tuple(exps)
        if len(exps) != self._dim:
            raise DimensionMismatch(f"multi-index {exps} does not have length {self._dim}")
        return self._terms.get(exps, 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other._dim != self._dim:
                raise DimensionMismatch(f"dimension mismatch: {self._dim} vs {other._dim}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Poly.constant(self._dim, float(other), prune=self._prune)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0.0) + c
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._new({e: float(other) * c for e, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.mul(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * (1.0 / float(other))
        return NotImplemented

    def mul(self, other: "Poly", max_degree: int | None = None) -> "Poly":
        """Product, optionally truncated to total degree ``<= max_degree``."""
        other = self._coerce(other)
        out: dict = defaultdict(float)
        for e1, c1 in self._terms.items():
            d1 = sum(e1)
            for e2, c2 in other._terms.items():
                if max_degree is not None and d1 + sum(e2) > max_degree:
                    continue
                out[tuple(a + b for a, b in zip(e1, e2))] += c1 * c2
        return self._new(out)

    def pow(self, n: int, max_degree: int | None = None) -> "Poly":
        if int(n) != n or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Poly.constant(self._dim, 1.0, prune=self._prune)
        base = self
        n = int(n)
        while n:
            if n & 1:
                result = result.mul(base, max_degree)
            n >>= 1
            if n:
                base = base.mul(base, max_degree)
        return result

    def __pow__(self, n: int):
        return self.pow(n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self._dim == other._dim and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self._dim, tuple(self._terms.items())))

    # -- structure --------------------------------------------------------

    def homogeneous_part(self, k: int) -> "Poly":
        return self._new({e: c for e, c in self._terms.items() if sum(e) == k})

    def truncate(self, max_degree: int) -> "Poly":
        return self._new({e: c for e, c in self._terms.items() if sum(e) <= max_degree})

    def drop_below_degree(self, k: int) -> "Poly":
        """Remove every term of total degree ``< k``."""
        return self._new({e: c for e, c in self._terms.items() if sum(e) >= k})

    def chop(self, tol: float) -> "Poly":
        """Drop coefficients with magnitude ``<= tol``."""
        return self._new({e: c for e, c in self._terms.items() if abs(c) > tol})

    def embed(self, new_dim: int, offset: int = 0) -> "Poly":
        """Reinterpret as a polynomial in ``new_dim`` variables.

        Variable ``x_i`` becomes ``x_{i+offset}``.
        """
        if offset < 0 or offset + self._dim > new_dim:
            raise DimensionMismatch("embedding does not fit")
        pad_l, pad_r = (0,) * offset, (0,) * (new_dim - offset - self._dim)
        return self._new({pad_l + e + pad_r: c for e, c in self._terms.items()}, dim=new_dim)

    # -- calculus ---------------------------------------------------------

    def diff(self, i: int) -> "Poly":
        """Partial derivative with respect to ``x_{i+1}``."""
        key = ("diff", i)
        if key not in self._cache:
            if not 0 <= i < self._dim:
                raise ValueError(f"variable index {i} out of range")
            out = {}
            for e, c in self._terms.items():
                if e[i]:
                    ne = list(e)
                    ne[i] -= 1
                    out[tuple(ne)] = c * e[i]
            self._cache[key] = self._new(out)
        return self._cache[key]

    def grad(self) -> tuple["Poly", ...]:
        return tuple(self.diff(i) for i in range(self._dim))

    def hessian_polys(self) -> list[list["Poly"]]:
        """Second partials; entry ``[j][i]`` is the same object as ``[i][j]``."""
        rows = [[None] * self._dim for _ in range(self._dim)]
        for i in range(self._dim):
            for j in range(i, self._dim):
                rows[i][j] = rows[j][i] = self.diff(i).diff(j)
        return rows

    # -- evaluation -------------------------------------------------------

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self._dim:
            raise DimensionMismatch(f"point has {x.shape[0]} coordinates, polynomial has dim {self._dim}")
        return x

    def eval(self, x) -> float:
        """Value at a single point, summed with :func:`math.fsum`."""
        x = self._check_point(x)
        xs = [float(v) for v in x]
        return math.fsum(c * math.prod(v ** k for v, k in zip(xs, e) if k)
                         for e, c in self._terms.items())

    __call__ = eval

    def _arrays(self):
        if "arrays" not in self._cache:
            if self._terms:
                E = np.array(list(self._terms.keys()), dtype=np.int64)
                C = np.array(list(self._terms.values()), dtype=float)
            else:
                E = np.zeros((0, self._dim), dtype=np.int64)
                C = np.zeros(0)
            self._cache["arrays"] = (E, C)
        return self._cache["arrays"]

    def eval_many(self, X) -> np.ndarray:
        """Vectorized evaluation at the rows of ``X`` (shape ``(n, dim)``).

        Uses numpy pairwise summation rather than fsum.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self._dim:
            raise DimensionMismatch(f"points have {X.shape[1]} coordinates, polynomial has dim {self._dim}")
        E, C = self._arrays()
        if C.size == 0:
            return np.zeros(X.shape[0])
        mons = np.ones((X.shape[0], C.size))
        for i in range(self._dim):
            col = E[:, i]
            if col.any():
                mons *= X[:, i:i + 1] ** col[None, :]
        return (mons * C[None, :]).sum(axis=1)

    def grad_at(self, x) -> np.ndarray:
        x = self._check_point(x)
        return np.array([g.eval(x) for g in self.grad()])

    def grad_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([g.eval_many(X) for g in self.grad()], axis=-1)

    def hessian(self, x) -> np.ndarray:
        """Matrix of second partials at ``x``; symmetric by construction."""
        x = self._check_point(x)
        H = np.zeros((self._dim, self._dim))
        for i in range(self._dim):
            for j in range(i, self._dim):
                H[i, j] = H[j, i] = self.diff(i).diff(j).eval(x)
        return H

    # -- substitution -----------------------------------------------------

    def compose(self, subs: Sequence["Poly"], max_degree: int | None = None) -> "Poly":
        """Substitute ``x_i := subs[i]``; the result lives in ``subs[0].dim`` variables."""
        if len(subs) != self._dim:
            raise DimensionMismatch(f"need {self._dim} substitutions, got {len(subs)}")
        new_dim = subs[0].dim
        if any(s.dim != new_dim for s in subs):
            raise DimensionMismatch("substituted polynomials must share a dimension")
        prune = self._prune
        one = Poly.constant(new_dim, 1.0, prune=prune)
        powers: list[dict[int, Poly]] = [{0: one, 1: s} for s in subs]

        def power(i: int, k: int) -> Poly:
            table = powers[i]
            if k not in table:
                table[k] = power(i, k - 1).mul(subs[i], max_degree)
            return table[k]

        out: dict = defaultdict(float)
        for e, c in self._terms.items():
            term = Poly.constant(new_dim, c, prune=0.0)
            for i, k in enumerate(e):
                if k:
                    term = term.mul(power(i, k), max_degree)
                    if term.is_zero():
                        break
            for te, tc in term._terms.items():
                out[te] += tc
        return Poly(new_dim, out, prune=prune)

    def compose_affine(self, L, b=None) -> "Poly":
        """The polynomial ``x -> p(L x + b)``."""
        L = np.asarray(L, dtype=float)
        if L.ndim != 2 or L.shape[0] != self._dim:
            raise DimensionMismatch(f"L must have {self._dim} rows, got shape {L.shape}")
        new_dim = L.shape[1]
        b = np.zeros(self._dim) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if b.shape[0] != self._dim:
            raise DimensionMismatch("offset has wrong length")
        subs = []
        for i in range(self._dim):
            terms = {}
            for j in range(new_dim):
                e = [0] * new_dim
                e[j] = 1
                terms[tuple(e)] = L[i, j]
            terms[(0,) * new_dim] = b[i]
            subs.append(Poly(new_dim, terms, prune=0.0))
        return self.compose(subs)

    def translate(self, x0) -> "Poly":
        """``x -> p(x + x0)``."""
        return self.compose_affine(np.eye(self._dim), x0)

    def restrict_direction(self, v) -> "Poly":
        """Univariate polynomial ``t -> p(t v)``."""
        v = self._check_point(v)
        if not np.any(v):
            raise ValueError("direction must be nonzero")
        out: dict = defaultdict(float)
        for e, c in self._terms.items():
            out[(sum(e),)] += c * math.prod(float(vi) ** k for vi, k in zip(v, e) if k)
        return Poly(1, out, prune=self._prune)

    # -- text -------------------------------------------------------------

    def to_text(self) -> str:
        """Canonical text in the ``x1^2*x2 + 3*x2^4 - 0.5*x1`` grammar."""
        if not self._terms:
            return "0"
        parts = []
        for e, c in self._terms.items():
            factors = [f"x{i + 1}" if k == 1 else f"x{i + 1}^{k}" for i, k in enumerate(e) if k]
            mag = abs(c)
            if factors:
                body = "*".join(factors) if mag == 1.0 else repr(mag) + "*" + "*".join(factors)
            else:
                body = repr(mag)
            sign = "-" if c < 0 else "+"
            if not parts:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"Poly(dim={self._dim}, {self.to_text()!r})"


def zero(dim: int, **kw) -> Poly:
    return Poly(dim, {}, **kw)


def variables(dim: int, **kw) -> list[Poly]:
    return [Poly.variable(i, dim, **kw) for i in range(dim)]


def grad(p: Poly) -> tuple[Poly, ...]:
    return p.grad()


def hessian(p: Poly, x) -> np.ndarray:
    return p.hessian(x)


def taylor_coeff(p: Poly, alpha: Sequence[int]) -> float:
    return p.coeff(alpha)


def restrict_direction(p: Poly, v) -> Poly:
    return p.restrict_direction(v)


def compose_affine(p: Poly, L, b=None) -> Poly:
    return p.compose_affine(L, b)


def eval_poly(p: Poly, x) -> float:
    return p.eval(x)


def from_terms(dim: int, items: Iterable[tuple[Sequence[int], float]], **kw) -> Poly:
    out: dict = defaultdict(float)
    for e, c in items:
        out[tuple(e)] += c
    return Poly(dim, out, **kw)
