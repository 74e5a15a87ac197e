"""Pointwise realization of the splitting lemma at a degenerate critical point.

Coordinates are split as ``x = x0 + Z z + K xi`` where the columns of ``K``
span the Hessian kernel and those of ``Z`` its orthogonal complement.  In
these coordinates:

* the critical branch ``psi(xi)`` solves ``D_z f(psi(xi), xi) = 0``;
* ``B(w, xi) = 2 int_0^1 (1-t) D_zz f(t w + psi(xi), xi) dt`` is the
  integral-remainder quadratic form, so that
  ``f(w + psi, xi) = f(psi, xi) + 1/2 <w, B w>``;
* ``R = factor_quadratic(A, B)`` satisfies ``R^T A R = B`` and ``R^T A = A R``;
* with ``z = R(w, xi) w`` the normal form ``f = g(xi) + 1/2 <z, A z>`` holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_sylvester

from .errors import (EmptyKernel, InputError, InversionFailure, LeftTrustRegion,
                     NoConvergence, OutsideNeighborhood, SingularA)
from .poly import Poly


@dataclass(frozen=True, eq=False)
class KernelSplit:
    """Orthonormal splitting ``R^d = X0 (+) K`` with ``K = ker H``."""

    dim: int
    kernel_basis: np.ndarray       # (d, c)
    complement_basis: np.ndarray   # (d, d - c)
    A0: np.ndarray                 # Z^T H Z, size d - c
    rank_gap: float
    eigenvalues: np.ndarray
    tol: float
    origin: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.origin is None:
            object.__setattr__(self, "origin", np.zeros(self.dim))

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]

    @property
    def rank(self) -> int:
        return self.complement_basis.shape[1]

    def is_ill_conditioned(self, threshold: float = 1e3) -> bool:
        return self.rank_gap < threshold

    def basis(self) -> np.ndarray:
        """``[Z | K]``: maps split coordinates ``(z, xi)`` to ``x - x0``."""
        return np.hstack([self.complement_basis, self.kernel_basis])


@dataclass(frozen=True)
class SplitOptions:
    newton_tol: float = 1e-12
    max_iter: int = 50
    quad_nodes: int = 16
    trust_radius: float | None = None
    trust_radius_cap: float = 1.0
    neighborhood_radius: float = 0.5
    factor_tol: float = 1e-10
    inversion_tol: float = 1e-14
    inversion_max_iter: int = 100


@dataclass(frozen=True, eq=False)
class BranchSolution:
    xi: np.ndarray
    psi: np.ndarray
    newton_iters: int
    residual_norm: float


@lru_cache(maxsize=8)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    t, wt = 0.5 * (x + 1.0), 0.5 * w
    t.setflags(write=False)
    wt.setflags(write=False)
    return t, wt


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def factor_residuals(A, B, R) -> tuple[float, float]:
    """``(|R^T A R - B|, |R^T A - A R|)`` in the spectral norm."""
    A, B, R = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, R))
    if A.size == 0:
        return 0.0, 0.0
    return (float(np.linalg.norm(R.T @ A @ R - B, 2)), float(np.linalg.norm(R.T @ A - A @ R, 2)))


def factor_quadratic(A, B, *, tol: float = 1e-10, neighborhood_radius: float = 0.5,
                     max_iter: int = 50) -> np.ndarray:
    """Solve ``R^T A R = B`` for ``R`` with ``A R`` symmetric, ``R`` near the identity.

    Newton's method on ``P -> P^T A P`` started at the identity.  Restricted
    to operators with ``P^T A = A P`` the derivative in direction ``Q`` is
    ``A (Q P + P Q)``, so each step solves the Sylvester equation
    ``P Q + Q P = A^{-1} (B - P^T A P)``.  At ``P = I`` this reduces to
    ``Q = A^{-1} C / 2``.  Iterates are re-projected onto ``{R : A R = (A R)^T}``.

    Raises
    ------
    SingularA
        ``A`` is (numerically) singular.
    OutsideNeighborhood
        ``B`` is too far from ``A`` or the iteration fails to converge.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise InputError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    normA = np.linalg.norm(A, 2)
    svals = np.linalg.svd(A, compute_uv=False)
    if normA == 0.0 or svals[-1] <= 1e-14 * normA:
        raise SingularA("A is singular")
    if np.linalg.norm(B - A, 2) / normA > neighborhood_radius:
        raise OutsideNeighborhood(
            f"|B - A|/|A| = {np.linalg.norm(B - A, 2) / normA:.3g} exceeds {neighborhood_radius}")
    Ainv = np.linalg.inv(A)
    B = _sym(B)
    P = np.eye(n)

    def residuals(P):
        return factor_residuals(A, B, P)

    best = residuals(P)
    for _ in range(max_iter):
        if max(best) <= 1e-3 * tol * normA:
            break
        C = _sym(B - P.T @ A @ P)
        Q = solve_sylvester(P, P, Ainv @ C)
        P_new = Ainv @ _sym(A @ (P + Q))
        if not np.all(np.isfinite(P_new)):
            raise OutsideNeighborhood("Newton iteration produced non-finite values")
        res = residuals(P_new)
        if max(res) >= max(best):
            break  # stagnated at rounding level, or diverging
        P, best = P_new, res
    if max(best) > tol * normA:
        raise OutsideNeighborhood(f"factorization residual {max(best):.3g} above {tol * normA:.3g}")
    return P


class SplitChart:
    """A polynomial expressed in split coordinates ``(z, xi)`` about ``split.origin``.

    The chart owns the derivative polynomials needed by the branch solver
    and quadrature so repeated pointwise queries stay cheap.
    """

    def __init__(self, f: Poly, split: KernelSplit, options: SplitOptions | None = None):
        if f.dim != split.dim:
            raise InputError(f"polynomial dim {f.dim} does not match split dim {split.dim}")
        self.f = f
        self.split = split
        self.options = options or SplitOptions()
        self.k = split.rank
        self.c = split.kernel_dim
        self.Q = split.basis()
        self.F = f.compose_affine(self.Q, split.origin)
        self._gz = [self.F.diff(i) for i in range(self.k)]
        self._hzz = [[self._gz[i].diff(j) for j in range(self.k)] for i in range(self.k)]
        self.A = np.array(split.A0, dtype=float).reshape(self.k, self.k)
        self.trust_radius = (self.options.trust_radius if self.options.trust_radius is not None
                             else self._heuristic_trust_radius())

    # -- coordinates ----------------------------------------------------

    def to_original(self, z, xi) -> np.ndarray:
        u = np.concatenate([np.asarray(z, float).reshape(-1), np.asarray(xi, float).reshape(-1)])
        return self.split.origin + self.Q @ u

    def _xi(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float).reshape(-1)
        if xi.shape[0] != self.c:
            raise InputError(f"kernel coordinates must have length {self.c}, got {xi.shape[0]}")
        return xi

    def complement_gradient(self, z, xi) -> np.ndarray:
        u = np.concatenate([z, xi])
        return np.array([g.eval(u) for g in self._gz])

    def complement_hessian(self, z, xi) -> np.ndarray:
        u = np.concatenate([z, xi])
        H = np.empty((self.k, self.k))
        for i in range(self.k):
            for j in range(i, self.k):
                H[i, j] = H[j, i] = self._hzz[i][j].eval(u)
        return H

    def _heuristic_trust_radius(self) -> float:
        """Half the radius where the complement Hessian may drift by ``1/|A0^{-1}|``.

        With ``M(R)`` a coefficient bound on ``|D_zz f(u) - D_zz f(0)|`` over
        ``|u| <= R``, the contraction radius is the largest ``R`` with
        ``|A0^{-1}| M(R) <= 1``.
        """
        cap = self.options.trust_radius_cap
        if self.k == 0:
            return cap
        inv_norm = np.linalg.norm(np.linalg.inv(self.A), 2)
        entries = []
        for i in range(self.k):
            for j in range(self.k):
                entries.append([(sum(e), abs(c)) for e, c in self._hzz[i][j] if sum(e) >= 1])
        if not any(entries):
            return cap

        def drift(R):
            return math.sqrt(sum(sum(c * R ** d for d, c in ent) ** 2 for ent in entries))

        lo, hi = 1e-12, 2.0 * cap
        if inv_norm * drift(hi) <= 1.0:
            return cap
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if inv_norm * drift(mid) <= 1.0:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1 + 1e-12:
                break
        return min(cap, 0.5 * lo)

    # -- critical branch -------------------------------------------------

    def _branch(self, xi: np.ndarray) -> BranchSolution:
        opts = self.options
        tol = opts.newton_tol * max(1.0, np.linalg.norm(self.A, 2) if self.k else 1.0)
        z = np.zeros(self.k)
        if self.k == 0:
            return BranchSolution(xi, z, 0, 0.0)
        res = self.complement_gradient(z, xi)
        r = np.linalg.norm(res)
        for it in range(opts.max_iter + 1):
            if r <= tol:
                return BranchSolution(xi, z, it, float(r))
            if it == opts.max_iter:
                break
            J = self.complement_hessian(z, xi)
            try:
                step = np.linalg.solve(J, -res)
            except np.linalg.LinAlgError as exc:
                raise NoConvergence(f"singular complement Hessian at iterate {it}") from exc
            lam = 1.0
            for _ in range(30):
                z_try = z + lam * step
                res_try = self.complement_gradient(z_try, xi)
                r_try = np.linalg.norm(res_try)
                if r_try < r:
                    break
                lam *= 0.5
            else:
                raise NoConvergence(f"branch residual stalled at {r:.3g} (tolerance {tol:.3g})")
            z, res, r = z_try, res_try, r_try
            if np.linalg.norm(z) > self.trust_radius:
                raise LeftTrustRegion(
                    f"branch iterate |z| = {np.linalg.norm(z):.3g} left trust radius {self.trust_radius:.3g}")
        raise NoConvergence(f"branch Newton did not converge in {opts.max_iter} iterations (residual {r:.3g})")

    def solve_branch(self, xi) -> BranchSolution:
        if self.c == 0:
            raise EmptyKernel("empty kernel: the branch is the single point x0")
        xi = self._xi(xi)
        if np.linalg.norm(xi) > self.trust_radius:
            raise LeftTrustRegion(f"|xi| = {np.linalg.norm(xi):.3g} exceeds trust radius {self.trust_radius:.3g}")
        return self._branch(xi)

    def branch_many(self, XI: np.ndarray, z0: np.ndarray | None = None,
                    max_norm: float = np.inf, tol: float | None = None,
                    step_tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized undamped Newton for many kernel points; returns ``(psi, converged)``.

        A point is converged once its residual is below ``tol`` (default
        ``newton_tol`` scaled by ``|A|``) or its Newton step is below
        ``step_tol * |z|``; pass ``tol=0`` with a small ``step_tol`` to iterate
        down to roundoff.
        """
        XI = np.asarray(XI, dtype=float).reshape(-1, self.c)
        n = XI.shape[0]
        Z = np.zeros((n, self.k)) if z0 is None else np.array(z0, dtype=float)
        if self.k == 0:
            return Z, np.ones(n, dtype=bool)
        if tol is None:
            tol = self.options.newton_tol * max(1.0, np.linalg.norm(self.A, 2))
        done = np.zeros(n, dtype=bool)
        alive = np.ones(n, dtype=bool)
        for _ in range(self.options.max_iter):
            idx = np.flatnonzero(alive & ~done)
            if idx.size == 0:
                break
            U = np.hstack([Z[idx], XI[idx]])
            G = np.stack([g.eval_many(U) for g in self._gz], axis=-1)
            rn = np.linalg.norm(G, axis=1)
            ok = rn <= tol
            done[idx[ok]] = True
            idx, U, G = idx[~ok], U[~ok], G[~ok]
            if idx.size == 0:
                break
            H = np.empty((idx.size, self.k, self.k))
            for i in range(self.k):
                for j in range(i, self.k):
                    H[:, i, j] = H[:, j, i] = self._hzz[i][j].eval_many(U)
            try:
                step = np.linalg.solve(H, -G[..., None])[..., 0]
            except np.linalg.LinAlgError:
                step = np.stack([np.linalg.lstsq(h, -g, rcond=None)[0] for h, g in zip(H, G)])
            Z[idx] += step
            small = np.linalg.norm(step, axis=1) <= step_tol * np.linalg.norm(Z[idx], axis=1)
            done[idx[small]] = True
            bad = ~np.all(np.isfinite(Z[idx]), axis=1) | (np.linalg.norm(Z[idx], axis=1) > max_norm)
            alive[idx[bad]] = False
        return Z, done & alive

    def reduced_value(self, xi) -> float:
        """``g(xi) = f(psi(xi), xi)``."""
        br = self.solve_branch(xi)
        return self.f.eval(self.to_original(br.psi, br.xi))

    # -- remainder form and normal form ------------------------------------

    def remainder_form(self, w, xi, nodes: int | None = None, *, return_asymmetry: bool = False):
        xi = self._xi(xi)
        w = np.asarray(w, dtype=float).reshape(-1)
        if w.shape[0] != self.k:
            raise InputError(f"complement coordinates must have length {self.k}")
        psi = self._branch(xi).psi
        t, wt = gauss_legendre_unit(nodes or self.options.quad_nodes)
        U = np.hstack([t[:, None] * w[None, :] + psi[None, :], np.tile(xi, (t.size, 1))])
        B = np.empty((self.k, self.k))
        for i in range(self.k):
            for j in range(self.k):
                B[i, j] = 2.0 * np.sum(wt * (1.0 - t) * self._hzz[i][j].eval_many(U))
        asym = float(np.max(np.abs(B - B.T))) if self.k else 0.0
        B = _sym(B)
        return (B, asym) if return_asymmetry else B

    def factor(self, B) -> np.ndarray:
        o = self.options
        return factor_quadratic(self.A, B, tol=o.factor_tol, neighborhood_radius=o.neighborhood_radius)

    def _R(self, w, xi) -> np.ndarray:
        return self.factor(self.remainder_form(w, xi))

    def invert(self, z, xi) -> np.ndarray:
        """Find ``w`` with ``R(w, xi) w = z``: fixed point first, Newton as fallback."""
        z = np.asarray(z, dtype=float).reshape(-1)
        opts = self.options
        scale = max(np.linalg.norm(z), 1e-300)
        w = z.copy()
        prev = np.inf
        for _ in range(opts.inversion_max_iter):
            R = self._R(w, xi)
            err = np.linalg.norm(R @ w - z)
            if err <= opts.inversion_tol * scale:
                return w
            if err >= prev:
                break
            prev = err
            w = np.linalg.solve(R, z)
        # Newton on G(w) = R(w) w - z with a central-difference Jacobian
        for _ in range(opts.max_iter):
            G = self._R(w, xi) @ w - z
            if np.linalg.norm(G) <= opts.inversion_tol * scale * 10:
                return w
            h = 1e-7 * (1.0 + np.linalg.norm(w))
            J = np.empty((self.k, self.k))
            for j in range(self.k):
                e = np.zeros(self.k)
                e[j] = h
                J[:, j] = (self._R(w + e, xi) @ (w + e) - self._R(w - e, xi) @ (w - e)) / (2 * h)
            w = w - np.linalg.solve(J, G)
        G = self._R(w, xi) @ w - z
        if np.linalg.norm(G) <= 1e-12 * scale:
            return w
        raise InversionFailure(f"could not invert w -> R(w, xi) w (residual {np.linalg.norm(G):.3g})")

    def normal_form_point(self, z, xi) -> np.ndarray:
        """``Phi(z, xi)`` in original coordinates."""
        xi = self._xi(xi)
        psi = self._branch(xi).psi
        w = self.invert(z, xi) if self.k else np.zeros(0)
        return self.to_original(w + psi, xi)

    def factor_residual_at(self, w, xi) -> float:
        """Largest factorization residual of ``R(w, xi)``, relative to ``|A|``."""
        if self.k == 0:
            return 0.0
        B = self.remainder_form(w, xi)
        R = self.factor(B)
        return float(max(factor_residuals(self.A, B, R)) / np.linalg.norm(self.A, 2))

    def normal_form_residual(self, z, xi) -> float:
        xi = self._xi(xi)
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.shape[0] != self.k:
            raise InputError(f"complement coordinates must have length {self.k}")
        psi = self._branch(xi).psi
        g = self.f.eval(self.to_original(psi, xi))
        if self.k == 0:
            return 0.0
        w = self.invert(z, xi)
        lhs = self.f.eval(self.to_original(w + psi, xi))
        quad = 0.5 * float(z @ self.A @ z)
        return abs(math.fsum([lhs, -g, -quad]))

    def grid_axes(self) -> list[tuple[str, int]]:
        """Two coordinate axes for a residual table: first ``z`` and first ``xi`` when both exist."""
        axes = []
        if self.k:
            axes.append(("z", 0))
        if self.c:
            axes.append(("xi", 0))
        if len(axes) < 2:
            if self.k > 1:
                axes.append(("z", 1))
            elif self.c > 1:
                axes.append(("xi", 1))
        return axes

    def residual_grid(self, n: int = 5, fraction: float = 0.5) -> tuple[float, list[dict]]:
        """Normal-form and factorization residuals on an ``n x n`` grid.

        The grid spans ``[-h, h]`` on each of :meth:`grid_axes` with
        ``h = fraction * trust_radius``; other coordinates are zero.
        Returns ``(h, rows)``.
        """
        if n < 1:
            raise InputError("grid size must be positive")
        h = fraction * self.trust_radius
        axes = self.grid_axes()
        ticks = np.linspace(-h, h, n) if n > 1 else np.zeros(1)
        rows = []
        for vals in np.array(np.meshgrid(*[ticks] * len(axes), indexing="ij")).reshape(len(axes), -1).T:
            z, xi = np.zeros(self.k), np.zeros(self.c)
            for (name, i), v in zip(axes, vals):
                (z if name == "z" else xi)[i] = v
            res = self.normal_form_residual(z, xi)
            w = self.invert(z, xi) if self.k else np.zeros(0)
            rows.append({"z": z.tolist(), "xi": xi.tolist(), "residual": res,
                         "factor_residual": self.factor_residual_at(w, xi)})
        return h, rows


# -- functional API -------------------------------------------------------

def solve_branch(f: Poly, split: KernelSplit, xi, options: SplitOptions | None = None) -> BranchSolution:
    return SplitChart(f, split, options).solve_branch(xi)


def reduced_value(f: Poly, split: KernelSplit, xi, options: SplitOptions | None = None) -> float:
    return SplitChart(f, split, options).reduced_value(xi)


def remainder_form(f: Poly, split: KernelSplit, w, xi=(), nodes: int = 16,
                   options: SplitOptions | None = None) -> np.ndarray:
    return SplitChart(f, split, options).remainder_form(w, xi, nodes)


def normal_form_residual(f: Poly, split: KernelSplit, z, xi=(),
                         options: SplitOptions | None = None) -> float:
    return SplitChart(f, split, options).normal_form_residual(z, xi)
