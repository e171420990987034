"""Quartic Lyapunov certificates over the lifted monomials (x1, x2, x3, x3^2).

A certificate is a pair of symmetric 4x4 matrices (M_v, M_d) and a decay
rate alpha such that, for a given 3-state system,

    V(x)     = z(x)^T M_v z(x)  > 0   for x != 0,
    dV/dt    = -z(x)^T M_d z(x)       (an exact polynomial identity),
    N        = -M_d + alpha M_v  <= 0,

which together make the origin globally exponentially stable with rate
alpha (hence the system is bounded even when no shifted quadratic energy
works).  Only verification of a given certificate is supported; the lift
is fixed to the single family above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotThreeDimensional
from .system import QuadraticSystem, eval_rhs, new_system
from .trapping import jacobi_eigh


@dataclass(frozen=True)
class QuarticCertificate:
    M_v: np.ndarray
    M_d: np.ndarray
    alpha: float

    @property
    def N(self) -> np.ndarray:
        return -self.M_d + self.alpha * self.M_v


@dataclass
class CertificateReport:
    """All values recomputed from (system, certificate); nothing echoed."""

    mv_eigs: np.ndarray
    n_eigs: np.ndarray
    max_derivative_residual: float
    positivity_ok: bool
    identity_ok: bool
    n_negative_ok: bool
    decay_ok: bool

    @property
    def passed(self) -> bool:
        return self.positivity_ok and self.identity_ok and self.n_negative_ok and self.decay_ok


def make_certificate(M_v, M_d, alpha: float) -> QuarticCertificate:
    M_v = np.asarray(M_v, dtype=float)
    M_d = np.asarray(M_d, dtype=float)
    if M_v.shape != (4, 4) or M_d.shape != (4, 4):
        raise DimensionMismatch("certificate matrices must be 4x4")
    asym = max(np.abs(M_v - M_v.T).max(), np.abs(M_d - M_d.T).max())
    if asym > 1e-12 * max(1.0, np.abs(M_v).max(), np.abs(M_d).max()):
        raise DimensionMismatch(f"certificate matrices must be symmetric (asymmetry {asym:.3e})")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    M_v = 0.5 * (M_v + M_v.T)
    M_d = 0.5 * (M_d + M_d.T)
    M_v.flags.writeable = False
    M_d.flags.writeable = False
    return QuarticCertificate(M_v=M_v, M_d=M_d, alpha=float(alpha))


def builtin_counterexample() -> tuple[QuadraticSystem, QuarticCertificate]:
    """The 3-state system that is bounded yet admits no trapping region.

    dx/dt = L x + (x2 x3, -x1 x3, 0) with the L below; the certificate
    proves global exponential stability of the origin with rate 0.1.
    """
    L = np.array([[-2.0, 1.0, 0.0], [-1.0, 0.5, 3.0], [0.0, -3.0, -3.0]])
    Q = np.zeros((3, 3, 3))
    Q[0, 1, 2] = Q[0, 2, 1] = 0.5
    Q[1, 0, 2] = Q[1, 2, 0] = -0.5
    sys = new_system(3, np.zeros(3), L, Q)
    M_v = np.array([
        [136.0, 0.0, 0.0, 6.0],
        [0.0, 100.0, 25.0, 0.0],
        [0.0, 25.0, 70.0, 0.0],
        [6.0, 0.0, 0.0, 1.0],
    ])
    M_d = np.array([
        [544.0, -36.0, 25.0, 73.0],
        [-36.0, 50.0, -27.5, -6.0],
        [25.0, -27.5, 270.0, 0.0],
        [73.0, -6.0, 0.0, 12.0],
    ])
    return sys, make_certificate(M_v, M_d, 0.1)


def lift(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise DimensionMismatch(f"lift expects a 3-vector, got shape {x.shape}")
    return np.array([x[0], x[1], x[2], x[2] ** 2])


def lift_jacobian(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 2.0 * x[2]],
    ])


def lyapunov_value(cert: QuarticCertificate, x) -> float:
    z = lift(x)
    return float(z @ cert.M_v @ z)


def lyapunov_rate(sys: QuadraticSystem, cert: QuarticCertificate, x) -> float:
    """dV/dt along the flow, via the chain rule through the lift.

    The z4 = x3^2 coordinate contributes 2 x3 xdot3; no finite differencing
    is involved.
    """
    if sys.n != 3:
        raise NotThreeDimensional("the quartic lift is defined for 3-state systems only")
    x = np.asarray(x, dtype=float)
    z = lift(x)
    zdot = lift_jacobian(x) @ eval_rhs(sys, x)
    return float(2.0 * z @ cert.M_v @ zdot)


def verify_certificate(
    sys: QuadraticSystem,
    cert: QuarticCertificate,
    samples: int = 1000,
    tol: float = 1e-8,
    trajectories: int = 5,
    seed: int = 0,
    box: float = 10.0,
) -> CertificateReport:
    """Recompute and check all four certificate conditions.

    (i)   M_v positive definite;
    (ii)  |dV/dt + z^T M_d z| <= tol * max(1, ||z||^2) at ``samples`` random
          points in [-box, box]^3 (a degree-4 identity holding at random
          points to roundoff is overwhelming evidence; symbolic expansion
          is deliberately not relied on here);
    (iii) N = -M_d + alpha M_v has no eigenvalue above tol;
    (iv)  V(x(t)) <= V(x0) e^(-alpha t) (1 + 1e-6) along ``trajectories``
          simulated runs (the slack absorbs integrator error).
    """
    if sys.n != 3:
        raise NotThreeDimensional("the quartic lift is defined for 3-state systems only")
    mv_eigs, _ = jacobi_eigh(cert.M_v)
    n_eigs, _ = jacobi_eigh(cert.N)
    positivity_ok = bool(mv_eigs[0] > 0.0)
    n_negative_ok = bool(n_eigs[-1] <= tol)

    rng = np.random.default_rng(seed)
    X = rng.uniform(-box, box, size=(samples, 3))
    worst = 0.0
    for x in X:
        z = lift(x)
        r = abs(lyapunov_rate(sys, cert, x) + z @ cert.M_d @ z) / max(1.0, float(z @ z))
        worst = max(worst, r)
    identity_ok = bool(worst <= tol)

    decay_ok = True
    from .simulate import IntegratorOptions, TrajectoryStatus, integrate

    opts = IntegratorOptions(rtol=1e-10, atol=1e-12, t_final=30.0)
    for _ in range(trajectories):
        x0 = rng.standard_normal(3)
        x0 *= rng.uniform(0.5, 5.0) / np.linalg.norm(x0)
        traj = integrate(sys, x0, opts)
        if traj.status is not TrajectoryStatus.COMPLETED:
            decay_ok = False
            break
        v0 = lyapunov_value(cert, x0)
        bound = v0 * np.exp(-cert.alpha * traj.times) * (1.0 + 1e-6)
        vals = np.array([lyapunov_value(cert, x) for x in traj.states])
        if np.any(vals > bound + 1e-12):
            decay_ok = False
            break

    return CertificateReport(
        mv_eigs=mv_eigs,
        n_eigs=n_eigs,
        max_derivative_residual=worst,
        positivity_ok=positivity_ok,
        identity_ok=identity_ok,
        n_negative_ok=n_negative_ok,
        decay_ok=decay_ok,
    )
