"""Quadratic systems with an energy-preserving (lossless) nonlinearity.

A system is

    dx/dt = c + L x + phi(x),      phi_i(x) = x^T Q_i x,

where every ``Q_i`` is symmetric and the family satisfies the lossless
index constraint

    Q_i[j,k] + Q_j[i,k] + Q_k[i,j] = 0   for all i, j, k,

which is equivalent to x . phi(x) = 0 for every x.  Systems are immutable
after construction; every operation here is a pure function of its inputs,
so instances are safe to share across concurrent analyses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDimension,
    NotEnergyPreserving,
    NotSymmetric,
    QuadboundError,
)

# Structural tolerances (absolute, double precision leaves ample headroom).
SYMMETRY_TOL = 1e-12
ENERGY_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class QuadraticSystem:
    """Validated quadratic system.

    Attributes:
        n: state dimension.
        c: constant forcing, shape (n,).
        L: linear dynamics, shape (n, n).
        Q: stacked symmetric quadratic forms, shape (n, n, n); ``Q[i]`` is
            the form feeding state equation i.
    """

    n: int
    c: np.ndarray
    L: np.ndarray
    Q: np.ndarray

    def phi(self, x: np.ndarray) -> np.ndarray:
        return eval_nonlinearity(self, x)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return eval_rhs(self, x)


@dataclass(frozen=True)
class ShiftedSystem:
    """System rewritten in y = x - m coordinates.

    The nonlinearity is unchanged by a shift (``base.Q`` still applies);
    only the constant and linear parts move:

        d = c + L m + phi(m)
        A = L + 2 [m^T Q_1; ...; m^T Q_n]
        A_s = (A + A^T)/2 = (L + L^T)/2 - sum_i m_i Q_i
    """

    base: QuadraticSystem
    m: np.ndarray
    d: np.ndarray
    A: np.ndarray
    A_s: np.ndarray


def _as_vector(x, n: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatch(f"{name} must have shape ({n},), got {x.shape}")
    return x


def energy_residual_tensor(Q: np.ndarray) -> np.ndarray:
    """Residual R[i,j,k] = Q[i,j,k] + Q[j,i,k] + Q[k,i,j] of the lossless constraint."""
    return Q + np.transpose(Q, (1, 0, 2)) + np.transpose(Q, (1, 2, 0))


def max_asymmetry(Q: np.ndarray) -> float:
    return float(np.abs(Q - np.transpose(Q, (0, 2, 1))).max()) if Q.size else 0.0


def worst_energy_triple(Q: np.ndarray):
    """Largest-magnitude violation of the lossless constraint.

    Returns ((i, j, k), residual) with 1-based indices.
    """
    R = energy_residual_tensor(Q)
    flat = int(np.abs(R).argmax())
    i, j, k = np.unravel_index(flat, R.shape)
    return (int(i) + 1, int(j) + 1, int(k) + 1), float(R[i, j, k])


def new_system(n: int, c, L, Q) -> QuadraticSystem:
    """Validate and build a quadratic system.

    Q entries with asymmetry below ``SYMMETRY_TOL`` are symmetrized exactly;
    anything larger is rejected rather than silently averaged, since an
    asymmetric input encodes the same quadratic but usually hides a bug.

    Raises:
        DimensionMismatch: shapes inconsistent with ``n``.
        NotSymmetric: some Q_i has asymmetry above tolerance.
        NotEnergyPreserving: the index constraint residual exceeds tolerance;
            the message reports the worst (i, j, k) triple.
        InvalidDimension: n < 2 (a lossless quadratic term is trivial for n=1).
    """
    n = int(n)
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    c = _as_vector(c, n, "c")
    L = np.asarray(L, dtype=float)
    if L.shape != (n, n):
        raise DimensionMismatch(f"L must have shape ({n},{n}), got {L.shape}")
    Qarr = np.asarray(Q, dtype=float)
    if Qarr.shape != (n, n, n):
        raise DimensionMismatch(
            f"Q must be {n} matrices of shape ({n},{n}), got array shape {Qarr.shape}"
        )
    if not (np.isfinite(c).all() and np.isfinite(L).all() and np.isfinite(Qarr).all()):
        raise QuadboundError("system data contains non-finite entries")
    asym = max_asymmetry(Qarr)
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"Q asymmetry {asym:.3e} exceeds tolerance {SYMMETRY_TOL:.0e}")
    Qarr = 0.5 * (Qarr + np.transpose(Qarr, (0, 2, 1)))
    triple, res = worst_energy_triple(Qarr)
    if abs(res) > ENERGY_TOL:
        raise NotEnergyPreserving(
            f"energy-preserving constraint violated: residual {res:.6g} at (i,j,k)={triple}",
            triple=triple,
            residual=res,
        )
    return QuadraticSystem(n=n, c=_freeze(c), L=_freeze(L), Q=_freeze(Qarr))


def eval_nonlinearity(sys: QuadraticSystem, x) -> np.ndarray:
    """phi(x), component i equal to x^T Q_i x."""
    x = _as_vector(x, sys.n, "x")
    return (sys.Q @ x) @ x


def eval_rhs(sys: QuadraticSystem, x) -> np.ndarray:
    """Full right-hand side c + L x + phi(x)."""
    x = _as_vector(x, sys.n, "x")
    return sys.c + sys.L @ x + (sys.Q @ x) @ x


def phi_batch(sys: QuadraticSystem, X: np.ndarray) -> np.ndarray:
    """phi evaluated at each row of X, shape (N, n) -> (N, n)."""
    X = np.asarray(X, dtype=float)
    return np.einsum("pj,ijk,pk->pi", X, sys.Q, X, optimize=True)


def symmetric_linear_part(sys: QuadraticSystem, m) -> np.ndarray:
    """A_s(m) = (L + L^T)/2 - sum_i m_i Q_i."""
    m = _as_vector(m, sys.n, "m")
    return 0.5 * (sys.L + sys.L.T) - np.tensordot(m, sys.Q, axes=1)


def shift(sys: QuadraticSystem, m) -> ShiftedSystem:
    """Shift coordinates by m, populating d(m), A(m) and A_s(m)."""
    m = _as_vector(m, sys.n, "m")
    d = sys.c + sys.L @ m + (sys.Q @ m) @ m
    A = sys.L + 2.0 * (sys.Q @ m)
    A_s = symmetric_linear_part(sys, m)
    return ShiftedSystem(base=sys, m=_freeze(m), d=_freeze(d), A=_freeze(A), A_s=_freeze(A_s))


def energy_rate(shifted: ShiftedSystem, y) -> float:
    """Time derivative of the half-energy (1/2)||y||^2 along the shifted flow.

    Differentiating K(y) = y^T y gives dK/dt = 2 d^T y + 2 y^T A_s y (the
    nonlinearity drops out because y . phi(y) = 0).  This function returns
    the half-energy rate d^T y + y^T A_s y, i.e. d/dt [ (1/2)||y||^2 ];
    callers comparing against finite differences of K itself must double it.
    """
    y = _as_vector(y, shifted.base.n, "y")
    return float(shifted.d @ y + y @ shifted.A_s @ y)


def rotate_system(sys: QuadraticSystem, R) -> QuadraticSystem:
    """Transport the system through the coordinate change xhat = R x.

    For orthogonal R the rotated system is chat = R c, Lhat = R L R^T and
    Qhat_i = sum_j R[i,j] * R Q_j R^T, which keeps the lossless structure.
    """
    R = np.asarray(R, dtype=float)
    n = sys.n
    if R.shape != (n, n):
        raise DimensionMismatch(f"R must have shape ({n},{n}), got {R.shape}")
    c_hat = R @ sys.c
    L_hat = R @ sys.L @ R.T
    RQR = np.matmul(np.matmul(R, sys.Q), R.T)  # stack of R Q_j R^T
    Q_hat = np.tensordot(R, RQR, axes=([1], [0]))
    return new_system(n, c_hat, L_hat, Q_hat)


def random_system(n: int, seed: int, scale: float = 1.0) -> QuadraticSystem:
    """Sample a random valid system with entries of magnitude ~ scale.

    c and L are uniform in [-scale, scale].  The quadratic family is drawn
    symmetric and then projected orthogonally onto the lossless constraint
    set: with S fully symmetrized over index rotations,

        Q_i[j,k] <- Qt_i[j,k] - (Qt_i[j,k] + Qt_j[i,k] + Qt_k[i,j]) / 3,

    which zeroes the constraint residual exactly up to roundoff.
    """
    n = int(n)
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    rng = np.random.default_rng(seed)
    c = rng.uniform(-scale, scale, size=n)
    L = rng.uniform(-scale, scale, size=(n, n))
    Qt = rng.uniform(-scale, scale, size=(n, n, n))
    Qt = 0.5 * (Qt + np.transpose(Qt, (0, 2, 1)))
    T = energy_residual_tensor(Qt) / 3.0
    Q = Qt - T
    return new_system(n, c, L, Q)


def lorenz_system(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> QuadraticSystem:
    """Lorenz equations encoded in the lossless-quadratic form.

    phi = (0, -x1 x3, x1 x2) is energy-preserving; the classical parameters
    give a chaotic but bounded system (the standard positive control for the
    trapping-region certificate, with shift m = (0, 0, sigma + rho)).
    """
    L = np.array([[-sigma, sigma, 0.0], [rho, -1.0, 0.0], [0.0, 0.0, -beta]])
    Q = np.zeros((3, 3, 3))
    Q[1, 0, 2] = Q[1, 2, 0] = -0.5
    Q[2, 0, 1] = Q[2, 1, 0] = 0.5
    return new_system(3, np.zeros(3), L, Q)
