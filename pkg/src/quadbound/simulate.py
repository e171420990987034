"""Trajectory integration and the empirical boundedness probe.

The integrator is an embedded Runge-Kutta 5(4) pair with Dormand-Prince
coefficients (FSAL exploited) and a PI step-size controller.  Numerical
events are reported as trajectory statuses, never exceptions: crossing the
divergence threshold flags Diverged, and a step underflowing the minimum
step flags StepFailure.

The probe integrates a batch of initial conditions (uniform in a ball plus
the 2n axis points, which catch coordinate-aligned escape directions) and
summarizes them: ultimate boundedness itself quantifies over all initial
conditions and all time, so the probe's verdict is explicitly an empirical
estimate, never a proof.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .system import QuadraticSystem, shift

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# b5 - b4: weights of the embedded error estimate
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class TrajectoryStatus(enum.Enum):
    COMPLETED = "Completed"
    DIVERGED = "Diverged"
    STEP_FAILURE = "StepFailure"


@dataclass
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    t_final: float = 50.0
    max_step: float = np.inf
    min_step: float = 1e-14
    divergence_threshold: float = 1e6


@dataclass
class Trajectory:
    times: np.ndarray          # strictly increasing, times[0] = 0
    states: np.ndarray         # (len(times), n)
    status: TrajectoryStatus
    diverged_at: float | None = None

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def _initial_step(f, x0, f0, rtol, atol, t_final, max_step):
    scale = atol + rtol * np.abs(x0)
    d0 = float(np.sqrt(np.mean((x0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = f(x0 + h0 * f0)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_final, max_step)


def integrate(sys: QuadraticSystem, x0, opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate dx/dt = c + L x + phi(x) from x0 up to opts.t_final.

    Deterministic: identical inputs produce bit-identical trajectories.
    """
    opts = opts or IntegratorOptions()
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.n,):
        raise DimensionMismatch(f"x0 must have shape ({sys.n},), got {x.shape}")
    c, L, Q = sys.c, sys.L, sys.Q

    def f(v):
        return c + L @ v + (Q @ v) @ v

    t = 0.0
    ts = [0.0]
    xs = [x.copy()]
    status = TrajectoryStatus.COMPLETED
    diverged_at = None

    if float(np.linalg.norm(x)) > opts.divergence_threshold:
        return Trajectory(np.array(ts), np.array(xs), TrajectoryStatus.DIVERGED, 0.0)

    k = np.empty((7, sys.n))
    k1 = f(x)
    h = _initial_step(f, x, k1, opts.rtol, opts.atol, opts.t_final, opts.max_step)
    err_prev = 1e-4
    while t < opts.t_final * (1.0 - 1e-15):
        h = min(h, opts.max_step)
        if opts.t_final - t <= 1.1 * h:
            h = opts.t_final - t  # stretch into the endpoint, no sliver step
        if h < opts.min_step:
            status = TrajectoryStatus.STEP_FAILURE
            break
        k[0] = k1
        for s in range(5):
            k[s + 1] = f(x + h * (_DP_A[s] @ k[: s + 1]))
        x_new = x + h * (_DP_B5 @ k[:6])
        k[6] = f(x_new)
        err_vec = h * (_DP_E @ k)
        if not np.all(np.isfinite(x_new)):
            err = 1e10
        else:
            sc = opts.atol + opts.rtol * np.maximum(np.abs(x), np.abs(x_new))
            err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
            if not np.isfinite(err):
                err = 1e10
        if err <= 1.0:
            t += h
            x = x_new
            k1 = k[6]
            ts.append(t)
            xs.append(x.copy())
            if float(np.linalg.norm(x)) > opts.divergence_threshold:
                status = TrajectoryStatus.DIVERGED
                diverged_at = t
                break
            fac = 0.9 * (err + 1e-16) ** -0.17 * err_prev**0.04
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            h *= min(1.0, max(0.2, 0.9 * err**-0.2))
    return Trajectory(np.array(ts), np.array(xs), status, diverged_at)


class ProbeVerdict(enum.Enum):
    ALL_CONVERGED = "AllConverged"
    DIVERGENCE_FOUND = "DivergenceFound"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class BoundednessProbe:
    verdict: ProbeVerdict
    trials: int
    beta_est: float | None = None    # empirical ultimate bound (settled-window max)
    t_est: float | None = None       # empirical entry time into that bound
    divergent_x0: np.ndarray | None = None
    statuses: list = None


def probe_boundedness(
    sys: QuadraticSystem,
    trials: int = 20,
    radius: float = 10.0,
    opts: IntegratorOptions | None = None,
    seed: int = 0,
    settle_fraction: float = 0.01,
) -> BoundednessProbe:
    """Empirical boundedness probe from random and axis initial conditions.

    AllConverged requires every trajectory to complete with its norm over
    the final 20% of the horizon below ``settle_fraction`` of the
    divergence threshold.  Any Diverged trial short-circuits to
    DivergenceFound (its x0 reproduces the divergence deterministically);
    anything else is Inconclusive.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    opts = opts or IntegratorOptions()
    rng = np.random.default_rng(seed)
    n = sys.n
    starts = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = radius
        starts.append(e.copy())
        starts.append(-e)
    for _ in range(trials):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        starts.append(radius * rng.uniform() ** (1.0 / n) * d)

    settle_bound = settle_fraction * opts.divergence_threshold
    beta = 0.0
    entry_times = []
    statuses = []
    for x0 in starts:
        traj = integrate(sys, x0, opts)
        statuses.append(traj.status)
        if traj.status is TrajectoryStatus.DIVERGED:
            return BoundednessProbe(
                ProbeVerdict.DIVERGENCE_FOUND, trials=len(starts),
                divergent_x0=np.asarray(x0), statuses=statuses,
            )
        if traj.status is TrajectoryStatus.STEP_FAILURE:
            return BoundednessProbe(
                ProbeVerdict.INCONCLUSIVE, trials=len(starts), statuses=statuses,
            )
        norms = traj.norms()
        window = traj.times >= 0.8 * opts.t_final
        wmax = float(norms[window].max())
        if wmax > settle_bound:
            return BoundednessProbe(
                ProbeVerdict.INCONCLUSIVE, trials=len(starts), statuses=statuses,
            )
        beta = max(beta, wmax)
        entry_times.append((traj.times, norms))

    # earliest time after which each trajectory stays within the estimated bound
    t_est = 0.0
    for times, norms in entry_times:
        tail_max = np.maximum.accumulate(norms[::-1])[::-1]
        inside = tail_max <= beta * (1.0 + 1e-12) + 1e-300
        first = int(np.argmax(inside)) if inside.any() else len(times) - 1
        t_est = max(t_est, float(times[first]))
    return BoundednessProbe(
        ProbeVerdict.ALL_CONVERGED, trials=len(starts),
        beta_est=beta, t_est=t_est, statuses=statuses,
    )


def energy_rate_check(sys: QuadraticSystem, m, traj: Trajectory) -> float:
    """Max relative mismatch between finite differences of the shifted
    energy K(y) = ||x - m||^2 and its analytic rate along a trajectory.

    The analytic rate of K is twice the half-energy rate returned by
    :func:`quadbound.system.energy_rate`.  Centered differences use the
    trajectory's own (non-uniform) sample times, so pass a trajectory
    integrated with a small ``max_step`` when tight agreement is needed.
    The quadratic terms contribute exactly nothing to K's evolution, which
    is what this check exercises.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (sys.n,):
        raise DimensionMismatch(f"m must have shape ({sys.n},), got {m.shape}")
    if len(traj.times) < 3:
        return 0.0
    sh = shift(sys, m)
    Y = traj.states - m
    K = np.sum(Y * Y, axis=1)
    t = traj.times
    dt1 = t[1:-1] - t[:-2]
    dt2 = t[2:] - t[1:-1]
    fd = (dt1 * (K[2:] - K[1:-1]) / dt2 + dt2 * (K[1:-1] - K[:-2]) / dt1) / (dt1 + dt2)
    Ymid = Y[1:-1]
    rate = 2.0 * (Ymid @ sh.d + np.einsum("pi,ij,pj->p", Ymid, sh.A_s, Ymid))
    resid = np.abs(fd - rate) / np.maximum(1.0, np.abs(rate))
    # a step much shorter than its neighbors turns the difference quotient
    # into an amplifier of local integration error, not of K's derivative
    keep = np.minimum(dt1, dt2) >= 1e-3 * max(float(dt1.max()), float(dt2.max()))
    if not keep.any():
        return 0.0
    return float(resid[keep].max())
