"""Effective-nonlinearity test via candidate invariant vanishing subspaces.

The nonlinearity is *not* effective when some proper linear subspace V
satisfies both

    (1) phi(x) = 0 for all x in V, and
    (2) c + L x stays in V for all x in V,

in which case trajectories started in V follow the affine dynamics forever.
Deciding this for arbitrary dimension is a variety-decomposition problem;
here a deterministic candidate generator (coordinate subspaces, real
invariant subspaces of L, polished one-dimensional vanishing directions,
common null spaces, and vanishing pair spans) is scanned with exact
verification of each candidate.  An Effective verdict is only issued when
the generator is exhaustive for the instance (n <= 3 and random sampling
of the vanishing set stays inside the candidates); otherwise the verdict
is Unknown with the full scan report.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .system import QuadraticSystem, phi_batch

VERIFY_TOL = 1e-10   # witness verification
DISCOVER_TOL = 1e-8  # accepting a polished root as a candidate direction


@dataclass(frozen=True)
class Subspace:
    """Proper subspace given by an orthonormal basis, columns of ``basis``."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project_residual(self, v: np.ndarray) -> float:
        """Distance from v to the subspace."""
        B = self.basis
        return float(np.linalg.norm(v - B @ (B.T @ v)))


def subspace_from_vectors(vectors, n: int) -> Subspace | None:
    """Orthonormalize a spanning set; None if rank is 0 or not proper."""
    M = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    if M.shape[0] != n:
        raise DimensionMismatch(f"basis vectors must have length {n}")
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int((s > 1e-12 * max(1.0, s[0] if s.size else 0.0)).sum())
    if rank == 0 or rank >= n:
        return None
    return Subspace(basis=u[:, :rank].copy())


def _same_subspace(a: Subspace, b: Subspace, tol: float = 1e-8) -> bool:
    if a.dim != b.dim:
        return False
    B1, B2 = a.basis, b.basis
    # sin of the largest principal angle
    return float(np.linalg.norm(B2 - B1 @ (B1.T @ B2), 2)) < tol


def _q_scale(sys: QuadraticSystem) -> float:
    return max(1.0, float(np.abs(sys.Q).max()))


def phi_vanishes_on(sys: QuadraticSystem, V: Subspace) -> bool:
    """Condition 1: the quadratic terms vanish identically on V.

    For symmetric forms, zero restriction is equivalent to the bilinear
    restriction vanishing, so it suffices that b_p^T Q_i b_q = 0 for every
    basis pair.
    """
    B = V.basis
    if B.shape[0] != sys.n:
        raise DimensionMismatch("subspace lives in a different dimension")
    rest = np.einsum("ap,iab,bq->ipq", B, sys.Q, B, optimize=True)
    return float(np.abs(rest).max()) <= VERIFY_TOL * _q_scale(sys)


def affine_invariant_on(sys: QuadraticSystem, V: Subspace) -> bool:
    """Condition 2: c in V and L maps V into V."""
    B = V.basis
    if B.shape[0] != sys.n:
        raise DimensionMismatch("subspace lives in a different dimension")
    tol = VERIFY_TOL * max(1.0, float(np.linalg.norm(sys.c)), float(np.linalg.norm(sys.L)))
    if V.project_residual(sys.c) > tol:
        return False
    for j in range(V.dim):
        if V.project_residual(sys.L @ B[:, j]) > tol:
            return False
    return True


def is_ineffectiveness_witness(sys: QuadraticSystem, V: Subspace) -> bool:
    return phi_vanishes_on(sys, V) and affine_invariant_on(sys, V)


@dataclass(frozen=True)
class CandidateCheck:
    """Scan record for one candidate subspace."""

    subspace: Subspace
    source: str
    vanishes: bool
    invariant: bool
    reason: str                      # "" for a witness, else the failed condition
    failing_vector: np.ndarray | None = None
    failing_image: np.ndarray | None = None

    @property
    def is_witness(self) -> bool:
        return self.vanishes and self.invariant


class EffResult(enum.Enum):
    EFFECTIVE = "Effective"
    INEFFECTIVE = "Ineffective"
    UNKNOWN = "Unknown"


@dataclass
class EffectivenessVerdict:
    result: EffResult
    witness: Subspace | None
    candidates_checked: list[CandidateCheck] = field(default_factory=list)
    note: str = ""


def _coordinate_candidates(n: int):
    from itertools import combinations

    eye = np.eye(n)
    for k in range(1, n):
        for idx in combinations(range(n), k):
            yield Subspace(basis=eye[:, list(idx)].copy()), "coordinate"


def _invariant_candidates(sys: QuadraticSystem):
    """Real invariant subspaces of L: clustered eigenspaces and their sums."""
    from itertools import combinations

    n = sys.n
    w, V = np.linalg.eig(sys.L)
    scale = max(1.0, float(np.abs(w).max()))
    atoms = []
    used = np.zeros(len(w), dtype=bool)
    order = sorted(range(len(w)), key=lambda j: (round(w[j].real, 10), round(abs(w[j].imag), 10)))
    for idx in order:
        if used[idx]:
            continue
        lam = w[idx]
        cluster = [j for j in range(len(w)) if not used[j]
                   and abs(w[j] - lam) <= 1e-8 * scale]
        conj = [j for j in range(len(w)) if not used[j]
                and abs(w[j] - lam.conjugate()) <= 1e-8 * scale]
        members = sorted(set(cluster + (conj if abs(lam.imag) > 1e-10 * scale else [])))
        for j in members:
            used[j] = True
        vecs = []
        for j in members:
            vecs.append(V[:, j].real)
            if abs(w[j].imag) > 1e-10 * scale:
                vecs.append(V[:, j].imag)
        sub = subspace_from_vectors(vecs, n)
        if sub is not None:
            atoms.append(sub)
    for r in range(1, len(atoms) + 1):
        for combo in combinations(range(len(atoms)), r):
            vecs = [atoms[i].basis[:, j] for i in combo for j in range(atoms[i].dim)]
            sub = subspace_from_vectors(vecs, n)
            if sub is not None:
                yield sub, "L-invariant"


def _sphere_grid(n: int, count: int) -> np.ndarray:
    if n == 2:
        th = np.linspace(0.0, np.pi, count, endpoint=False)
        return np.column_stack([np.cos(th), np.sin(th)])
    if n == 3:
        # Fibonacci sphere
        k = np.arange(count)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        zc = 1.0 - 2.0 * (k + 0.5) / count
        r = np.sqrt(np.maximum(0.0, 1.0 - zc * zc))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), zc])
    rng = np.random.default_rng(2024)
    pts = rng.standard_normal((count, n))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _polish_direction(sys: QuadraticSystem, v: np.ndarray, iters: int = 30) -> np.ndarray:
    """Gauss-Newton on phi(v) = 0 constrained to the unit sphere."""
    v = v / np.linalg.norm(v)
    for _ in range(iters):
        r = (sys.Q @ v) @ v
        if np.abs(r).max() < 1e-15 * _q_scale(sys):
            break
        J = 2.0 * (sys.Q @ v)
        d, *_ = np.linalg.lstsq(J, -r, rcond=None)
        d -= (d @ v) * v
        step = v + d
        nrm = np.linalg.norm(step)
        if nrm < 1e-12:
            break
        v = step / nrm
    return v


def _grid_directions(sys: QuadraticSystem, cap: int | None = None):
    """1D vanishing directions from a sphere grid plus root polishing."""
    n = sys.n
    if np.abs(sys.Q).max() <= 1e-14:
        return []  # phi == 0: every direction vanishes, nothing to single out
    pts = _sphere_grid(n, 360 * n)
    resid = np.abs(phi_batch(sys, pts)).max(axis=1)
    qs = _q_scale(sys)
    # polish from every grid point in the lowest residual decile plus all
    # near-roots; cheap at desk scale and keeps discovery deterministic
    cut = max(float(np.quantile(resid, 0.1)), DISCOVER_TOL * qs)
    seeds = pts[resid <= cut]
    cap = cap if cap is not None else 8 * n
    out: list[Subspace] = []
    for v in seeds:
        root = _polish_direction(sys, v)
        if np.abs((sys.Q @ root) @ root).max() > DISCOVER_TOL * qs:
            continue
        cand = Subspace(basis=root.reshape(-1, 1))
        if any(_same_subspace(cand, s) for s in out):
            continue
        out.append(cand)
        if len(out) >= cap:
            break
    return out


def _common_nullspace(sys: QuadraticSystem):
    n = sys.n
    stacked = sys.Q.reshape(n * n, n)
    _, s, vt = np.linalg.svd(stacked)
    smax = s[0] if s.size else 0.0
    null = [vt[j] for j in range(n) if (j >= len(s) or s[j] <= 1e-10 * max(1.0, smax))]
    if null:
        sub = subspace_from_vectors(null, n)
        if sub is not None:
            return [sub]
    return []


def generate_candidates(sys: QuadraticSystem) -> list[tuple[Subspace, str]]:
    """Deterministic candidate list, deduplicated by principal angle.

    Sources, in order: coordinate subspaces (n <= 4), real invariant
    subspaces of L (these target condition 2 exactly), polished 1D
    vanishing directions from a sphere grid, the common null space of the
    quadratic forms, and spans of vanishing-direction pairs that still
    vanish (catches rotated vanishing planes for n = 3).
    """
    cands: list[tuple[Subspace, str]] = []

    def push(sub: Subspace, source: str):
        for existing, _ in cands:
            if _same_subspace(existing, sub):
                return
        cands.append((sub, source))

    if sys.n <= 4:
        for sub, src in _coordinate_candidates(sys.n):
            push(sub, src)
    for sub, src in _invariant_candidates(sys):
        push(sub, src)
    grid = _grid_directions(sys)
    for sub in grid:
        push(sub, "grid-direction")
    for sub in _common_nullspace(sys):
        push(sub, "common-nullspace")
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            v1, v2 = grid[i].basis[:, 0], grid[j].basis[:, 0]
            if abs(abs(v1 @ v2) - 1.0) < 1e-10:
                continue
            span = subspace_from_vectors([v1, v2], sys.n)
            if span is not None and phi_vanishes_on(sys, span):
                push(span, "vanishing-span")
    return cands


def _check_candidate(sys: QuadraticSystem, sub: Subspace, source: str) -> CandidateCheck:
    vanishes = phi_vanishes_on(sys, sub)
    if not vanishes:
        return CandidateCheck(sub, source, False, False, "condition 1 (phi does not vanish)")
    B = sub.basis
    tol = VERIFY_TOL * max(1.0, float(np.linalg.norm(sys.c)), float(np.linalg.norm(sys.L)))
    if sub.project_residual(sys.c) > tol:
        return CandidateCheck(
            sub, source, True, False, "condition 2 (c leaves the subspace)",
            failing_vector=np.zeros(sys.n), failing_image=sys.c.copy(),
        )
    for j in range(sub.dim):
        img = sys.L @ B[:, j]
        if sub.project_residual(img) > tol:
            return CandidateCheck(
                sub, source, True, False, "condition 2 (L image leaves the subspace)",
                failing_vector=B[:, j].copy(), failing_image=img,
            )
    return CandidateCheck(sub, source, True, True, "")


def check_effective(sys: QuadraticSystem, samples: int = 10000, seed: int = 0) -> EffectivenessVerdict:
    """Scan candidates; first witness wins, else certify or report Unknown.

    Effective is declared only for n <= 3 and when ``samples`` random unit
    directions contain no vanishing direction outside the candidate set
    (within a 1e-6 subspace angle), i.e. the sampled vanishing variety
    decomposes into the candidates found.
    """
    checks = []
    witness = None
    for sub, source in generate_candidates(sys):
        rec = _check_candidate(sys, sub, source)
        checks.append(rec)
        if rec.is_witness and witness is None:
            witness = sub
    if witness is not None:
        return EffectivenessVerdict(EffResult.INEFFECTIVE, witness, checks)

    if sys.n > 3:
        return EffectivenessVerdict(
            EffResult.UNKNOWN, None, checks,
            note=f"candidate generator not certified exhaustive for n={sys.n}",
        )
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((samples, sys.n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    resid = np.abs(phi_batch(sys, pts)).max(axis=1)
    vanishing = pts[resid < DISCOVER_TOL * _q_scale(sys)]
    subs = [c.subspace for c in checks]
    for v in vanishing:
        if not any(s.project_residual(v) <= 1e-6 for s in subs):
            return EffectivenessVerdict(
                EffResult.UNKNOWN, None, checks,
                note="sampled vanishing direction outside every candidate",
            )
    return EffectivenessVerdict(EffResult.EFFECTIVE, None, checks)
