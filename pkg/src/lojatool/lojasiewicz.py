"""Gradient-inequality exponents: exact, guaranteed, and sampled.

The inequality in question is ``|grad f(x)| >= C |f(x) - f(x0)|^theta`` near a
critical point ``x0``.  :func:`estimate_sampling` recovers the sharp
``theta`` as the slope of the lower envelope of ``log |grad f|`` plotted
against ``log |f|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AllSamplesVanish, InputError, LojaError, TooFewBins
from .morse_bott import kernel_split
from .poly import Poly
from .sphere import sphere_directions
from .splitting import SplitChart, SplitOptions


@dataclass(frozen=True, eq=False)
class ExponentEstimate:
    theta_hat: float
    method: str  # "sampling" | "flow" | "exact_monomial"
    fit_residual: float = 0.0
    n_samples: int = 0
    radii_range: tuple[float, float] | None = None
    constant_hat: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.theta_hat < 1.0:
            raise ValueError(f"theta_hat must lie in [0, 1), got {self.theta_hat}")
        if self.fit_residual < 0:
            raise ValueError("fit_residual must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat,
            "method": self.method,
            "fit_residual": self.fit_residual,
            "n_samples": self.n_samples,
            "radii_range": list(self.radii_range) if self.radii_range else None,
            "constant_hat": self.constant_hat,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class SamplingOptions:
    r_min: float = 1e-4
    r_max: float = 1e-1
    n_shells: int = 24
    dirs_per_shell: int = 256
    n_bins: int = 20
    floor: float = 1e-300
    kernel_tol: float = 1e-8
    branch_samples: bool = True
    branch_shells: int = 192
    refine_passes: int = 3
    flat_tol: float = 1e-10
    low_theta_flag: float = 0.45
    theta_max: float = 0.999


@dataclass(frozen=True, eq=False)
class InequalityReport:
    passed: bool
    min_margin: float
    worst_point: tuple[float, ...]
    theta: float
    constant: float
    n_samples: int
    atol: float

    def to_dict(self) -> dict:
        return {"passed": self.passed, "min_margin": self.min_margin,
                "worst_point": list(self.worst_point), "theta": self.theta,
                "constant": self.constant, "n_samples": self.n_samples, "atol": self.atol}


def monomial_exponent(n: Sequence[int]) -> tuple[Fraction, int]:
    """Exponent ``1 - 1/N`` of the monomial ``y^n``, ``N = sum(n) >= 2``."""
    n = [int(k) for k in n]
    if any(k < 0 for k in n):
        raise InputError("multi-index entries must be nonnegative")
    N = sum(n)
    if N < 2:
        raise InputError(f"total degree N = {N} < 2: the monomial is not critical at 0")
    return 1 - Fraction(1, N), N


def quadratic_constant(A) -> float:
    """Constant ``C`` with ``|Ax| >= C |x^T A x / 2|^{1/2}``.

    ``C = lam * sqrt(2 / Lam)`` with ``lam`` the smallest nonzero and ``Lam``
    the largest singular value of ``A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise InputError("quadratic_constant needs a nonzero matrix")
    nonzero = s[s > 1e-12 * s[0]]
    return float(nonzero[-1] * np.sqrt(2.0 / s[0]))


def direct_sum_extend(f: Poly, A) -> Poly:
    """``f(x) + 1/2 y^T A y`` in ``dim f + dim A`` variables."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.any(A):
        raise InputError("direct_sum_extend needs a nonzero block")
    e = A.shape[0]
    d = f.dim
    return f.embed(d + e, 0) + Poly.quadratic_form(A, prune=f.prune).embed(d + e, d)


# -- sampling --------------------------------------------------------------

@dataclass(eq=False)
class _Family:
    points: np.ndarray      # (curves, shells, d)
    values: np.ndarray      # (curves, shells), f - f(x0)
    grad_norms: np.ndarray  # (curves, shells)
    is_branch: bool


def _evaluate(f: Poly, P: np.ndarray, f0: float, is_branch: bool) -> _Family:
    flat = P.reshape(-1, f.dim)
    ok = np.all(np.isfinite(flat), axis=1)
    vals = np.full(flat.shape[0], np.nan)
    gn = np.full(flat.shape[0], np.nan)
    vals[ok] = f.eval_many(flat[ok]) - f0
    gn[ok] = np.linalg.norm(f.grad_many(flat[ok]), axis=1)
    return _Family(P, vals.reshape(P.shape[:2]), gn.reshape(P.shape[:2]), is_branch)


def _sample(f: Poly, x0: np.ndarray, opts: SamplingOptions, diag: dict) -> list[_Family]:
    d = f.dim
    f0 = f.eval(x0)
    radii = np.geomspace(opts.r_min, opts.r_max, opts.n_shells)
    U = np.asarray(sphere_directions(d, opts.dirs_per_shell))
    fams = [_evaluate(f, x0[None, None, :] + U[:, None, :] * radii[None, :, None], f0, False)]
    if opts.branch_samples:
        split = kernel_split(f.hessian(x0), opts.kernel_tol, origin=x0)
        c = split.kernel_dim
        diag["kernel_dim"] = c
        if 0 < c < d:
            # the branch is sampled more finely: it carries the envelope alone
            bradii = np.geomspace(opts.r_min, opts.r_max, opts.branch_shells)
            bp = _branch_family(f, split, bradii, opts)
            if bp is not None:
                fams.append(_evaluate(f, bp, f0, True))
    return fams


def _branch_family(f: Poly, split, radii, opts: SamplingOptions):
    """Points ``x0 + Z psi(r v) + K r v`` along the critical branch."""
    try:
        chart = SplitChart(f, split, SplitOptions(trust_radius=np.inf))
    except LojaError:
        return None
    c = split.kernel_dim
    V = np.asarray(sphere_directions(c, opts.dirs_per_shell if c > 1 else 2))
    out = np.full((V.shape[0], radii.size, f.dim), np.nan)
    z_prev = None
    for s, r in enumerate(radii):
        XI = r * V
        Z, conv = chart.branch_many(XI, z0=z_prev, max_norm=10.0 * opts.r_max + 1.0,
                                    tol=0.0, step_tol=1e-15)
        pts = split.origin[None, :] + np.hstack([Z, XI]) @ chart.Q.T
        out[conv, s, :] = pts[conv]
        z_prev = np.where(conv[:, None], Z, 0.0)
    return out


def _ends(logf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Innermost and outermost finite value on each curve (NaN if none)."""
    ok = np.isfinite(logf)
    n = logf.shape[1]
    has = ok.any(axis=1)
    first = np.argmax(ok, axis=1)
    last = n - 1 - np.argmax(ok[:, ::-1], axis=1)
    rows = np.arange(logf.shape[0])
    inner = np.where(has, logf[rows, first], np.nan)
    outer = np.where(has, logf[rows, last], np.nan)
    return inner, outer


def _initial_window(inner: np.ndarray, outer: np.ndarray, branch: np.ndarray,
                    flat_tol: float) -> tuple[float, float]:
    """Starting range of ``log |f|`` for the envelope fit.

    Branch curves that rise above roundoff (relative ``flat_tol`` against the
    rays) carry the envelope, so the window spans from their largest innermost
    value to their largest outermost value.  A flat branch lies on a critical
    manifold and is ignored; the window then comes from the rays alone, with
    the same rule so that every curve reaching the lower end is present.
    """
    ray_top = np.nanmax(np.where(branch, np.nan, outer))
    live = branch & np.isfinite(outer) & (outer > ray_top + np.log(flat_tol))
    use = live if live.any() else ~branch
    return float(np.nanmax(inner[use])), float(np.nanmax(outer[use]))


def lower_envelope_fit(logf: np.ndarray, logg: np.ndarray, lo: float, hi: float,
                       n_bins: int, return_index: bool = False):
    """OLS line through per-bin minima of ``logg`` over bins of ``logf`` in ``[lo, hi]``.

    Returns ``(slope, intercept, rms_residual, nonempty_bins)``, followed by
    the indices of the bin minima when ``return_index`` is set.
    """
    logf = np.asarray(logf, dtype=float)
    logg = np.asarray(logg, dtype=float)
    edges = np.linspace(lo, hi, n_bins + 1)
    sel = np.flatnonzero((logf >= lo) & (logf <= hi))
    which = np.clip(np.searchsorted(edges, logf[sel], side="right") - 1, 0, n_bins - 1)
    idx = []
    for b in range(n_bins):
        cand = sel[which == b]
        if cand.size:
            idx.append(cand[np.argmin(logg[cand])])
    idx = np.array(idx, dtype=int)
    if idx.size < 3:
        out = (np.nan, np.nan, np.nan, int(idx.size))
    else:
        xs, ys = logf[idx], logg[idx]
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        out = (float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))), int(idx.size))
    return out + (idx,) if return_index else out


def estimate_sampling(f: Poly, x0=None, options: SamplingOptions | None = None) -> ExponentEstimate:
    """Estimate the sharp exponent at ``x0`` from a ladder of spherical shells.

    Samples are taken on rays ``x0 + r u`` and, when the Hessian has a proper
    kernel, along the critical branch over ``r v`` for kernel directions
    ``v``; the branch is where the inequality is tightest.
    """
    opts = options or SamplingOptions()
    x0 = np.zeros(f.dim) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != f.dim:
        raise InputError(f"point has {x0.shape[0]} coordinates, polynomial has dim {f.dim}")
    diag: dict = {}
    fams = _sample(f, x0, opts, diag)
    logfs, loggs = [], []
    for fam in fams:
        absf = np.abs(fam.values)
        valid = (np.isfinite(absf) & (absf > opts.floor)
                 & np.isfinite(fam.grad_norms) & (fam.grad_norms > opts.floor))
        with np.errstate(divide="ignore", invalid="ignore"):
            logfs.append(np.where(valid, np.log(absf), np.nan))
            loggs.append(np.where(valid, np.log(fam.grad_norms), np.nan))
    lf = np.concatenate([a.ravel() for a in logfs])
    lg = np.concatenate([a.ravel() for a in loggs])
    curve = np.concatenate([np.repeat(np.arange(a.shape[0]) + sum(x.shape[0] for x in logfs[:i]), a.shape[1])
                            for i, a in enumerate(logfs)])
    ends = [_ends(a) for a in logfs]
    inner = np.concatenate([e[0] for e in ends])
    outer = np.concatenate([e[1] for e in ends])
    branch = np.concatenate([np.full(a.shape[0], fam.is_branch) for a, fam in zip(logfs, fams)])
    keep = np.isfinite(lf)
    lf, lg, curve = lf[keep], lg[keep], curve[keep]
    if lf.size == 0:
        raise AllSamplesVanish("f vanishes (or its gradient does) at every sample")
    lo, hi = _initial_window(inner, outer, branch, opts.flat_tol)
    window = "complete"
    if not hi - lo > np.log(10.0):
        lo, hi = float(lf.min()), float(lf.max())
        window = "full"
    slope, intercept, resid, nb, idx = lower_envelope_fit(lf, lg, lo, hi, opts.n_bins, True)
    if window == "complete":
        # pull the upper end down to where the curves carrying the envelope
        # are still sampled; past that point the minimum is taken over a
        # thinning subset and the slope is biased upward
        for _ in range(opts.refine_passes):
            if nb < 3:
                break
            new_hi = float(np.nanmin(outer[np.unique(curve[idx])]))
            if not new_hi - lo > np.log(10.0) or new_hi >= hi - 1e-12 * abs(hi):
                break
            trial = lower_envelope_fit(lf, lg, lo, new_hi, opts.n_bins, True)
            if trial[3] < 3:
                break
            hi = new_hi
            slope, intercept, resid, nb, idx = trial
    if nb < 3:
        raise TooFewBins(f"only {nb} nonempty bins in the log|f| window")
    diag.update(window=window, log_f_window=[lo, hi], bins_used=nb, raw_slope=slope,
                n_branch_curves=int(branch.sum()))
    if lf.max() >= 0.0:
        diag["f_exceeds_one"] = True
    theta = float(np.clip(slope, 0.0, opts.theta_max))
    if theta < opts.low_theta_flag:
        diag["below_one_half"] = True
    return ExponentEstimate(theta_hat=theta, method="sampling", fit_residual=resid,
                            n_samples=int(lf.size), radii_range=(opts.r_min, opts.r_max),
                            constant_hat=float(np.exp(intercept)), diagnostics=diag)


def default_sample_points(f: Poly, x0=None, options: SamplingOptions | None = None) -> np.ndarray:
    opts = options or SamplingOptions()
    x0 = np.zeros(f.dim) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    pts = np.concatenate([fam.points.reshape(-1, f.dim) for fam in _sample(f, x0, opts, {})])
    return pts[np.all(np.isfinite(pts), axis=1)]


def verify_inequality(f: Poly, x0, theta: float, C: float, samples=None,
                      options: SamplingOptions | None = None, atol: float = 1e-12) -> InequalityReport:
    """Check ``|grad f(x)| >= C |f(x) - f(x0)|^theta`` on sample points.

    ``samples`` is an ``(n, d)`` array; by default the shell ladder used by
    :func:`estimate_sampling`.  Passes iff the minimum margin is ``>= -atol``.
    """
    x0 = np.zeros(f.dim) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    X = default_sample_points(f, x0, options) if samples is None else np.asarray(samples, dtype=float)
    X = X.reshape(-1, f.dim)
    vals = np.abs(f.eval_many(X) - f.eval(x0))
    gn = np.linalg.norm(f.grad_many(X), axis=1)
    margin = gn - C * vals ** theta
    j = int(np.argmin(margin))
    mm = float(margin[j])
    return InequalityReport(passed=bool(mm >= -atol), min_margin=mm,
                            worst_point=tuple(float(v) for v in X[j]), theta=float(theta),
                            constant=float(C), n_samples=int(X.shape[0]), atol=atol)
