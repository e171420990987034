"""Two-state canonical form and the closed-form boundedness split.

Any lossless quadratic pair in two states is parameterized by q = (q1, q2):

    Q1 = [[0, q1/2], [q1/2, q2]],   Q2 = [[-q1, -q2/2], [-q2/2, 0]],

so phi(x) = (q . x) [[0, 1], [-1, 0]] x.  Rotating coordinates by the
unique R in SO(2) with R q = ||q|| e1 brings the system to the canonical
form with nonlinearity q0 (x1 x2, -x1^2).  In that frame the shifted
symmetric linear part has constant lower-right entry l22, which yields the
split: the semidefinite shift condition is feasible iff l22 <= 0, and for
l22 > 0 an explicit initial point escapes at least linearly in time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    InconsistentParameterization,
    NotApplicable,
    TrivialNonlinearity,
    WrongDimension,
)
from .system import QuadraticSystem, new_system, rotate_system

_SKEW = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TwoDClass(enum.Enum):
    LMI_FEASIBLE = "LmiFeasible"
    UNBOUNDED_CERTIFIED = "UnboundedCertified"


@dataclass(frozen=True)
class Canonical2D:
    """Canonical-frame data: rotated constant, linear entries, nonlinearity size."""

    c_hat: np.ndarray
    l11: float
    l12: float
    l21: float
    l22: float
    q0: float
    R: np.ndarray

    @property
    def L_hat(self) -> np.ndarray:
        return np.array([[self.l11, self.l12], [self.l21, self.l22]])

    def as_system(self) -> QuadraticSystem:
        return canonical_system(self.c_hat, self.L_hat, self.q0)


@dataclass(frozen=True)
class TwoDVerdict:
    """Classification of a 2-state system.

    Exactly one of ``witness_m`` / ``escape_x0`` is set, matching the sign
    of the canonical l22.  Both are expressed in the coordinates of the
    *input* system (a proper rotation transports the shift and the initial
    point as ordinary vectors, so R^T maps canonical-frame data back).
    """

    classification: TwoDClass
    lmi_feasible: bool
    witness_m: np.ndarray | None
    escape_x0: np.ndarray | None
    canonical: Canonical2D


def _require_2d(sys: QuadraticSystem):
    if sys.n != 2:
        raise WrongDimension(f"operation requires n=2, got n={sys.n}")


def extract_q(sys: QuadraticSystem) -> np.ndarray:
    """Recover (q1, q2) from the Q matrices, cross-checking both encodings."""
    _require_2d(sys)
    Q1, Q2 = sys.Q[0], sys.Q[1]
    q1 = 2.0 * Q1[0, 1]
    q2 = Q1[1, 1]
    tol = 1e-12 * max(1.0, abs(q1), abs(q2))
    mismatch = max(
        abs(q1 - (-Q2[0, 0])),
        abs(q2 - (-2.0 * Q2[0, 1])),
        abs(Q1[0, 0]),
        abs(Q2[1, 1]),
    )
    if mismatch > tol:
        raise InconsistentParameterization(
            f"Q matrices deviate from the lossless 2D family by {mismatch:.3e}"
        )
    return np.array([q1, q2])


def q_matrices(q) -> np.ndarray:
    """The Q stack corresponding to parameter vector q = (q1, q2)."""
    q1, q2 = float(q[0]), float(q[1])
    Q = np.zeros((2, 2, 2))
    Q[0] = [[0.0, 0.5 * q1], [0.5 * q1, q2]]
    Q[1] = [[-q1, -0.5 * q2], [-0.5 * q2, 0.0]]
    return Q


def canonical_system(c, L, q0: float) -> QuadraticSystem:
    """Build a 2-state system already in canonical form (q = (q0, 0))."""
    return new_system(2, c, L, q_matrices([q0, 0.0]))


def to_canonical(sys: QuadraticSystem) -> Canonical2D:
    """Rotate a 2-state system so the nonlinearity parameter lands on +e1.

    The rotation is the unique proper one (no reflection: a reflection flips
    the sign of the skew form).  Raises TrivialNonlinearity when ||q|| is
    negligible relative to ||L||, since the form divides by q0.
    """
    q = extract_q(sys)
    q0 = float(np.linalg.norm(q))
    if q0 <= 1e-12 * max(1.0, float(np.linalg.norm(sys.L))):
        raise TrivialNonlinearity("||q|| ~ 0: treat the system as linear instead")
    ca, sa = q[0] / q0, q[1] / q0
    R = np.array([[ca, sa], [-sa, ca]])
    rotated = rotate_system(sys, R)
    L_hat = rotated.L
    return Canonical2D(
        c_hat=rotated.c,
        l11=float(L_hat[0, 0]),
        l12=float(L_hat[0, 1]),
        l21=float(L_hat[1, 0]),
        l22=float(L_hat[1, 1]),
        q0=q0,
        R=R,
    )


def lmi_feasible_2d(canon: Canonical2D, eps: float = 1.0):
    """Constructive witness for A_s(m) <= 0 in the canonical frame.

    For l22 <= 0 the shift m = ((l12 + l21)/q0, -(l11 + eps)/q0) gives
    A_s(m) = diag(-eps, l22) <= 0.  For l22 > 0 no shift works (the
    lower-right entry of A_s(m) equals l22 for every m): returns None.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if canon.l22 > 0:
        return None
    return np.array([(canon.l12 + canon.l21) / canon.q0, -(canon.l11 + eps) / canon.q0])


def escape_certificate(canon: Canonical2D) -> np.ndarray:
    """Initial point whose second coordinate decreases at least linearly.

    Requires l22 > 0.  With k = c2 + l21^2/(4 q0) + 1, starting at
    x(0) = (0, -k/l22 - 1) keeps dx2/dt <= -1, so x2(t) <= x2(0) - t and
    the trajectory is unbounded.
    """
    if canon.l22 <= 0:
        raise NotApplicable(f"escape construction needs l22 > 0, got {canon.l22:g}")
    k = float(canon.c_hat[1]) + canon.l21**2 / (4.0 * canon.q0) + 1.0
    return np.array([0.0, -k / canon.l22 - 1.0])


def classify_2d(sys: QuadraticSystem, eps: float = 1.0) -> TwoDVerdict:
    """Apply the l22 sign split: feasible shift witness or escape point."""
    canon = to_canonical(sys)
    if canon.l22 <= 0:
        m_hat = lmi_feasible_2d(canon, eps)
        return TwoDVerdict(
            classification=TwoDClass.LMI_FEASIBLE,
            lmi_feasible=True,
            witness_m=canon.R.T @ m_hat,
            escape_x0=None,
            canonical=canon,
        )
    return TwoDVerdict(
        classification=TwoDClass.UNBOUNDED_CERTIFIED,
        lmi_feasible=False,
        witness_m=None,
        escape_x0=canon.R.T @ escape_certificate(canon),
        canonical=canon,
    )
