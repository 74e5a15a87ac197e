"""Negative gradient flow ``dx/dt = -grad f(x)`` and its convergence rate.

Trajectories come from an adaptive embedded Runge-Kutta pair
(:func:`scipy.integrate.solve_ivp`, ``RK45``).  The decay of ``f`` along a
trajectory is either exponential (exponent one half) or a power law, and the
distance to the limit is bounded by the envelope :func:`psi_bound`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InputError, InsufficientDecay, NotConverged, StepFailure
from .lojasiewicz import ExponentEstimate
from .poly import Poly
from .splitting import gauss_legendre_unit

THETA_HALF_TOL = 1e-12
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class FlowOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    grad_floor: float = 1e-10
    method: str = "RK45"
    max_step: float = np.inf
    monotone_tol: float = 1e-9
    fit_min_samples: int = 20
    fit_drop: float = 10.0
    value_floor: float = 1e-300


@dataclass(frozen=True, eq=False)
class FlowTrajectory:
    """Accepted steps of one gradient-flow solve.  Arrays are read-only."""

    times: np.ndarray
    states: np.ndarray
    f_values: np.ndarray
    grad_norms: np.ndarray
    terminated_by: Literal["time_limit", "gradient_floor", "step_failure"]
    options: FlowOptions = field(default_factory=FlowOptions)
    interpolant: object = None  # dense output of the solver, t -> x(t)

    def __post_init__(self):
        for a in (self.times, self.states, self.f_values, self.grad_norms):
            a.setflags(write=False)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return self.times.size

    def to_csv(self, fh=None) -> str | None:
        """Write ``t,x1..xd,f,gradnorm`` rows at 17 significant digits.

        Returns the text when ``fh`` is None.
        """
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)] + ["f", "gradnorm"])
        for t, x, fv, g in zip(self.times, self.states, self.f_values, self.grad_norms):
            w.writerow([_g17(t)] + [_g17(v) for v in x] + [_g17(fv), _g17(g)])
        return out.getvalue() if fh is None else None


def _g17(v: float) -> str:
    return "%.17g" % v


def default_start(x0, radius: float = 0.1) -> np.ndarray:
    """``x0 + radius * u`` with ``u`` proportional to ``(1, 1/sqrt 2, ..., 1/sqrt d)``.

    The direction is off every coordinate plane, so the orbit is not confined
    to an invariant subspace of a coordinate-aligned example.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    u = 1.0 / np.sqrt(np.arange(1.0, x0.size + 1.0))
    return x0 + radius * u / np.linalg.norm(u)


def attracting_start(f: Poly, x0, radius: float = 0.1, verdict=None,
                     options=None) -> np.ndarray:
    """A start point near ``x0`` whose orbit is expected to flow into ``x0``.

    For a NotMorseBott verdict the point lies on the critical branch over
    ``radius * v`` in kernel coordinates, with the certificate direction
    ``v`` oriented so that the leading form of the reduced function is
    positive there; the orbit then approaches ``x0`` along the direction in
    which the reduced function is flattest relative to its size.  Otherwise
    it is :func:`default_start` projected onto the span of Hessian
    eigenvectors with nonnegative eigenvalues, which avoids the unstable
    directions of a saddle.
    """
    from .morse_bott import ClassifyOptions, VerdictKind, kernel_split
    from .splitting import SplitChart

    opts = options or ClassifyOptions()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    H = f.hessian(x0)
    if verdict is not None and verdict.kind is VerdictKind.NOT_MORSE_BOTT:
        v = np.asarray(verdict.direction, dtype=float)
        gm = verdict.reduced.homogeneous_part(verdict.order)
        if gm.eval(v) < 0:
            v = -v
        if gm.eval(v) > 0:
            split = kernel_split(H, opts.kernel_tol, origin=x0)
            chart = SplitChart(f, split, opts.split)
            xi = min(radius, 0.5 * chart.trust_radius) * v
            return chart.to_original(chart.solve_branch(xi).psi, xi)
    lam, V = np.linalg.eigh(H)
    top = np.max(np.abs(lam)) if lam.size else 0.0
    keep = lam >= -opts.kernel_tol * top
    if not np.any(keep):
        return default_start(x0, radius)
    W = V[:, keep]
    u = W @ (W.T @ (default_start(np.zeros_like(x0), 1.0)))
    if np.linalg.norm(u) < 1e-12:
        u = W[:, 0]
    return x0 + radius * u / np.linalg.norm(u)


def integrate(f: Poly, x0, t_end: float, opts: FlowOptions | None = None) -> FlowTrajectory:
    """Integrate the negative gradient flow of ``f`` from ``x0`` up to ``t_end``.

    Stops early once ``|grad f| < grad_floor``.  One row per accepted step.

    Raises
    ------
    StepFailure
        The integrator gave up (step size underflow), or ``f`` increased along
        the trajectory by more than the monotonicity tolerance.
    """
    opts = opts or FlowOptions()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (f.dim,):
        raise InputError(f"point has {x0.size} coordinates, polynomial has dim {f.dim}")
    if not t_end > 0:
        raise InputError("t_end must be positive")
    g0 = np.linalg.norm(f.grad_at(x0))
    if g0 < opts.grad_floor:
        # already at rest: a stationary two-point trajectory
        X = np.vstack([x0, x0])
        fv = np.full(2, f.eval(x0))
        return FlowTrajectory(np.array([0.0, float(t_end)]), X, fv, np.full(2, g0),
                              "gradient_floor", opts, lambda t: np.multiply.outer(x0, np.ones_like(t)))

    grads = f.grad()

    def rhs(t, x):
        return -np.array([g.eval(x) for g in grads])

    def floor_event(t, x):
        return np.linalg.norm(rhs(t, x)) - opts.grad_floor

    floor_event.terminal = True
    floor_event.direction = -1

    sol = solve_ivp(rhs, (0.0, float(t_end)), x0, method=opts.method, rtol=opts.rtol,
                    atol=opts.atol, max_step=opts.max_step, events=floor_event,
                    dense_output=True)
    if sol.status == -1:
        raise StepFailure(f"integrator failed: {sol.message}")
    times = sol.t
    X = sol.y.T
    fv = f.eval_many(X)
    gn = np.linalg.norm(f.grad_many(X), axis=1)
    rise = np.max(np.diff(fv), initial=0.0)
    if rise > opts.monotone_tol * (1.0 + abs(fv[0])):
        raise StepFailure(f"f increased by {rise:.3g} along the flow")
    how = "gradient_floor" if sol.status == 1 else "time_limit"
    return FlowTrajectory(times, X, fv, gn, how, opts, sol.sol)


def dissipation_defect(f: Poly, traj: FlowTrajectory, nodes: int = 8) -> np.ndarray:
    """Per-step ``(f_i - f_{i+1}) - int |grad f(u)|^2 dt`` (zero for the exact flow).

    The integral is Gauss-Legendre in time over the solver's dense output.
    """
    if len(traj) < 2:
        return np.zeros(0)
    s, w = gauss_legendre_unit(nodes)
    t = traj.times
    dt = np.diff(t)
    T = t[:-1, None] + s[None, :] * dt[:, None]
    U = np.asarray(traj.interpolant(T.ravel())).T
    g2 = np.sum(f.grad_many(U) ** 2, axis=1).reshape(T.shape)
    return -np.diff(traj.f_values) - dt * (g2 @ w)


# -- decay fits ------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    kind: Literal["exponential", "power"]
    rate: float | None
    beta: float | None
    residual: float
    window: tuple[float, float]
    n_samples: int
    other_residual: float
    time_offset: float = 0.0

    def __post_init__(self):
        if self.kind == "exponential" and not (self.rate is not None and self.rate > 0):
            raise ValueError("exponential fit needs a positive rate")
        if self.kind == "power" and not (self.beta is not None and self.beta > 0):
            raise ValueError("power fit needs a positive beta")
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate, "beta": self.beta,
                "residual": self.residual, "window": list(self.window),
                "n_samples": self.n_samples, "other_residual": self.other_residual,
                "time_offset": self.time_offset}


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    r = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(r ** 2)))


def _time_offset(t: np.ndarray, e: np.ndarray, g2: np.ndarray) -> float:
    """Offset ``t0`` of a power law ``e = A (t + t0)^-beta`` seen along the flow.

    Since ``de/dt = -|grad f|^2``, the ratio ``e / |grad f|^2`` equals
    ``(t + t0) / beta``; a line through it gives ``t0``.  The offset is clipped
    so that ``t + t0`` stays positive and does not exceed the window span
    (a flat ratio, i.e. exponential decay, would send it to infinity).
    """
    ok = g2 > 0
    if ok.sum() < 2:
        return 0.0
    slope, intercept = np.polyfit(t[ok], e[ok] / g2[ok], 1)
    if not slope > 0:
        return 0.0
    span = t[-1] - t[0]
    return float(np.clip(intercept / slope, -t[0] * (1.0 - 1e-9), span))


def limit_value(traj: FlowTrajectory) -> float:
    """Estimate ``lim f`` along the flow from its final state.

    The final value overshoots the limit by some ``delta``.  Along either
    decay regime ``(f - f_end + delta) / |grad f|^2`` is affine in ``t``, so
    ``(a, b, delta)`` solve a linear least-squares problem.  Without this, a
    slow power-law tail fitted against ``f_end`` bends down sharply at the end.
    """
    f_end = float(traj.f_values[-1])
    g2 = traj.grad_norms[:-1] ** 2
    ok = g2 > 0
    if ok.sum() < 4:
        return f_end
    t, g2 = traj.times[:-1][ok], g2[ok]
    y = (traj.f_values[:-1][ok] - f_end) / g2
    M = np.column_stack([t, np.ones_like(t), -1.0 / g2])
    scale = np.linalg.norm(M, axis=0)
    coef = np.linalg.lstsq(M / scale, y, rcond=None)[0] / scale
    delta = float(coef[2])
    return f_end - delta if 0.0 <= delta <= float(traj.f_values[0]) - f_end else f_end


def fit_decay(traj: FlowTrajectory, f_inf: float = 0.0) -> DecayFit:
    """Choose between ``f ~ exp(-rate t)`` and ``f ~ (t + t0)^-beta`` on the tail.

    The window starts when ``f - f_inf`` first drops below a tenth of its
    initial value.  It ends at termination, at the first step where ``f``
    fails to decrease, or where the excess sinks into the rounding noise of
    ``f``, whichever comes first.  Both models are fitted by least
    squares in log coordinates; the smaller RMS residual wins.  The offset
    ``t0`` of the power model is not a free parameter of that fit: it is read
    off from ``(f - f_inf) / |grad f|^2``, which is affine in ``t`` for a power
    law, and is clipped to the window span.

    Raises
    ------
    InsufficientDecay
        ``f`` never dropped tenfold, or fewer than ``fit_min_samples``
        positive values lie in the window.
    """
    opts = traj.options
    e = traj.f_values - f_inf
    if e.size < 2 or not e[0] > opts.value_floor:
        raise InsufficientDecay("f has no positive excess over its limit")
    below = np.flatnonzero(e <= e[0] / opts.fit_drop)
    if below.size == 0:
        raise InsufficientDecay(f"f did not drop by a factor {opts.fit_drop:g}")
    i0 = below[0]
    # past the first step where f fails to decrease the integrator no longer
    # resolves the decay (the exact flow decreases f strictly)
    stall = np.flatnonzero(np.diff(e[i0:]) >= 0)
    i1 = i0 + stall[0] + 1 if stall.size else e.size
    # below this excess the rounding of f itself exceeds 1e-4 relative error
    noisy = np.flatnonzero(e[i0:i1] <= 1e4 * EPS * np.maximum(np.abs(traj.f_values[i0:i1]), abs(f_inf)))
    i1 = i0 + noisy[0] if noisy.size else i1
    t, ew, g2 = traj.times[i0:i1], e[i0:i1], traj.grad_norms[i0:i1] ** 2
    keep = ew > opts.value_floor
    t, ew, g2 = t[keep], ew[keep], g2[keep]
    if t.size < opts.fit_min_samples:
        raise InsufficientDecay(f"only {t.size} samples in the fitting window")
    logf = np.log(ew)
    s_exp, _, r_exp = _ols(t, logf)
    t0 = _time_offset(t, ew, g2)
    s_pow, _, r_pow = _ols(np.log(t + t0), logf)
    window = (float(t[0]), float(t[-1]))
    if r_exp <= r_pow and s_exp < 0:
        return DecayFit("exponential", -s_exp, None, r_exp, window, int(t.size), r_pow)
    if s_pow < 0:
        return DecayFit("power", None, -s_pow, r_pow, window, int(t.size), r_exp, t0)
    raise InsufficientDecay("neither model shows decay on the window")


def exponent_from_flow(fit: DecayFit, theta_max: float = 0.999) -> ExponentEstimate:
    """Exponent implied by the decay regime.

    Exponential decay gives one half; ``f ~ t^-beta`` gives
    ``(beta + 1) / (2 beta)``.  Values at or above 1 are out of range: the
    estimate is clamped to ``theta_max`` and flagged invalid.
    """
    diag: dict = {"decay": fit.to_dict()}
    if fit.kind == "exponential":
        theta = 0.5
    else:
        theta = (fit.beta + 1.0) / (2.0 * fit.beta)
        diag["theta_raw"] = theta
        if theta >= 1.0:
            diag["invalid"] = "implied exponent is not below 1"
            theta = theta_max
    return ExponentEstimate(theta_hat=float(theta), method="flow", fit_residual=fit.residual,
                            n_samples=fit.n_samples, diagnostics=diag)


# -- rate envelope ---------------------------------------------------------

def psi_branch(theta: float) -> str:
    return "exponential" if abs(theta - 0.5) < THETA_HALF_TOL else "power"


def psi_bound(t, c: float, theta: float, gamma: float, a: float):
    """Distance envelope for a flow obeying the gradient inequality with ``(c, theta)``.

    For ``theta = 1/2`` (within ``1e-12``)::

        (2/c) sqrt(gamma - a) exp(-c^2 t / 2)

    and for ``1/2 < theta < 1``::

        (c^2 (2 theta - 1) t + (gamma - a)^(1 - 2 theta))^(-(1 - theta)/(2 theta - 1)) / (c (1 - theta))
    """
    if not c > 0:
        raise InputError("c must be positive")
    if not 0.5 - THETA_HALF_TOL < theta < 1.0:
        raise InputError("theta must lie in [1/2, 1)")
    if not gamma > a:
        raise InputError("gamma must exceed a")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError("t must be nonnegative")
    span = gamma - a
    if psi_branch(theta) == "exponential":
        out = (2.0 / c) * np.sqrt(span) * np.exp(-c * c * t / 2.0)
    else:
        q = 2.0 * theta - 1.0
        base = c * c * q * t + span ** (1.0 - 2.0 * theta)
        out = base ** (-(1.0 - theta) / q) / (c * (1.0 - theta))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class BoundReport:
    passed: bool
    max_excess: float
    tolerance: float
    worst_time: float
    branch: str
    c: float
    theta: float
    gamma: float
    a: float
    n_steps: int
    distances: np.ndarray
    psi: np.ndarray
    limit_residual: float
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_excess": self.max_excess,
                "tolerance": self.tolerance, "worst_time": self.worst_time,
                "branch": self.branch, "c": self.c, "theta": self.theta,
                "gamma": self.gamma, "a": self.a, "n_steps": self.n_steps,
                "limit_residual": self.limit_residual, "notes": self.notes}


def check_bound(traj: FlowTrajectory, c: float, theta: float, gamma: float | None = None,
                a: float | None = None) -> BoundReport:
    """Compare ``|u(t) - u_inf|`` with :func:`psi_bound` at every accepted step.

    ``u_inf`` is the final state.  By default ``gamma`` is the largest and
    ``a`` the final value of ``f`` on the trajectory.  Passes iff the largest
    excess is at most ``1e-9 (1 + |x0|)``.

    Raises
    ------
    NotConverged
        The trajectory did not end at the gradient floor.
    """
    if traj.terminated_by != "gradient_floor":
        raise NotConverged(f"trajectory ended by {traj.terminated_by}, not at the gradient floor")
    notes = {
        "u_inf": "final state",
        "gamma": "given" if gamma is not None else "max f on trajectory",
        "a": "given" if a is not None else "f at final state",
        # the interior estimate is the identity in finite dimensions
        "interior_estimate_C1": 1.0,
    }
    gamma = float(np.max(traj.f_values)) if gamma is None else float(gamma)
    a = float(traj.f_values[-1]) if a is None else float(a)
    u_inf = traj.final_state
    dist = np.linalg.norm(traj.states - u_inf[None, :], axis=1)
    psi = np.asarray(psi_bound(traj.times, c, theta, gamma, a), dtype=float)
    excess = dist - psi
    j = int(np.argmax(excess))
    tol = 1e-9 * (1.0 + float(np.linalg.norm(traj.states[0])))
    return BoundReport(passed=bool(excess[j] <= tol), max_excess=float(excess[j]), tolerance=tol,
                       worst_time=float(traj.times[j]), branch=psi_branch(theta), c=float(c),
                       theta=float(theta), gamma=gamma, a=a, n_steps=len(traj),
                       distances=dist, psi=psi, limit_residual=float(traj.grad_norms[-1]),
                       notes=notes)


def orbit_constant(traj: FlowTrajectory, theta: float, f_inf: float | None = None) -> float:
    """Smallest ``|grad f| / |f - f_inf|^theta`` over the stored states.

    ``f_inf`` defaults to the final value; the final state itself is skipped.
    """
    f_inf = float(traj.f_values[-1]) if f_inf is None else float(f_inf)
    e = np.abs(traj.f_values[:-1] - f_inf)
    g = traj.grad_norms[:-1]
    ok = e > 0
    if not np.any(ok):
        raise InsufficientDecay("f is constant along the trajectory")
    return float(np.min(g[ok] / e[ok] ** theta))
