"""Trapping-region program: minimize the largest eigenvalue of A_s(m).

The optimal value

    a* = min_m  lambda_max( (L + L^T)/2 - sum_i m_i Q_i )

certifies boundedness when a* < 0 (a shifted energy ball is then forward
invariant and globally attracting) and rules out any trapping region when
a* >= 0.

For a valid lossless family the objective is bounded below: for any unit
direction u, u^T (sum_i u_i Q_i) u = u . phi(u) = 0, hence

    lambda_max(A_s(t u)) >= u^T S0 u >= lambda_min(S0),   S0 = (L + L^T)/2,

so a* always lies in the bracket [lambda_min(S0), lambda_max(S0)].  The
solver bisects this bracket with an inner strict-feasibility search
(damped Newton on the barrier -logdet(aI - A_s(m)), warm-started across
bisection steps) and cross-checks the result with a spectral subgradient
descent using Polyak steps and random restarts.  Disagreement beyond 1e-5
is surfaced as a solver warning; the reported optimum is the better of the
two witnesses, preferring the barrier's (well-centered) shift on ties.

All functions are pure; concurrent solves on different systems share no
state.  Subgradient restarts are merged deterministically by
(value, lexicographic m).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MaxIterations, NotSymmetric, UnboundedBelow
from .system import QuadraticSystem, symmetric_linear_part

_JACOBI_MAX_N = 64


def jacobi_eigh(S: np.ndarray, *, tol: float = 1e-13, max_sweeps: int = 50):
    """Full eigendecomposition of a dense symmetric matrix by cyclic Jacobi.

    Rotations sweep the strict upper triangle row by row until the
    off-diagonal Frobenius mass falls below ``tol * max(1, ||S||_F)``.
    Returns (eigenvalues ascending, eigenvectors as columns).
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {S.shape}")
    n = S.shape[0]
    if n > _JACOBI_MAX_N:
        raise DimensionMismatch(f"jacobi_eigh supports n <= {_JACOBI_MAX_N}, got {n}")
    asym = float(np.abs(S - S.T).max()) if n else 0.0
    if asym > 1e-12 * max(1.0, float(np.abs(S).max())):
        raise NotSymmetric(f"matrix asymmetry {asym:.3e} too large for a symmetric solver")

    A = 0.5 * (S + S.T)
    V = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(A)))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                cth = 1.0 / np.hypot(1.0, t)
                sth = t * cth
                # A <- J^T A J on rows/cols p, q
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = cth * Ap - sth * Aq
                A[:, q] = sth * Ap + cth * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = cth * Ap - sth * Aq
                A[q, :] = sth * Ap + cth * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = cth * Vp - sth * Vq
                V[:, q] = sth * Vp + cth * Vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = V[:, order]
    # deterministic eigenvector signs: largest-magnitude component positive
    for j in range(n):
        k = int(np.abs(V[:, j]).argmax())
        if V[k, j] < 0:
            V[:, j] = -V[:, j]
    return w, V


def lambda_max_sym(S: np.ndarray):
    """Largest eigenvalue of a symmetric matrix and a unit eigenvector.

    Backed by the cyclic Jacobi sweep above; the residual ||S v - lam v||
    stays below 1e-10 * max(1, ||S||).
    """
    w, V = jacobi_eigh(S)
    return float(w[-1]), V[:, -1].copy()


class TrapStatus(enum.Enum):
    BOUNDED_CERTIFIED = "BoundedCertified"
    NO_TRAPPING_REGION = "NoTrappingRegion"
    MARGINAL = "Marginal"


@dataclass
class SolverOptions:
    tol: float = 1e-8            # outer tolerance on a*
    max_bisect: int = 200
    newton_tol: float = 1e-10    # inner gradient-norm tolerance
    max_newton: int = 500        # Newton budget per feasibility search
    restarts: int = 8            # subgradient random restarts
    subgrad_iters: int = 250
    subgrad_polish_iters: int = 400
    seed: int = 0


@dataclass
class TrapResult:
    a_star: float
    m_star: np.ndarray
    status: TrapStatus
    solver_info: dict = field(default_factory=dict)


def _As(S0: np.ndarray, Q: np.ndarray, m: np.ndarray) -> np.ndarray:
    return S0 - np.tensordot(m, Q, axes=1)


def _lam_max(S0, Q, m) -> float:
    return float(np.linalg.eigvalsh(_As(S0, Q, m))[-1])


def _feasibility_search(S0, Q, a, m0, *, newton_budget, newton_tol, scale):
    """Hunt for m with lambda_max(A_s(m)) < a.

    Method-of-centers descent on the level-set barrier -logdet(sI - A_s(m))
    with the level s sliding toward the target, taking self-concordant
    damped Newton steps (t = 1/(1 + decrement), always interior, no line
    search) and exiting as soon as the target is undercut.  Returns
    (m, certified): m is a witness or None; certified=True means a
    near-analytic-center determinant bound proved a* > a, so absence is
    not merely a budget outcome.
    """
    n = S0.shape[0]
    eye = np.eye(n)
    m = np.array(m0, dtype=float)
    As_m = _As(S0, Q, m)
    w = np.linalg.eigvalsh(As_m)
    h = float(w[-1])
    if h < a:
        return m, False
    used = 0
    for _round in range(60):
        s = h + max(0.3 * (h - a), 1e-9 * scale)
        h_round_start = h
        centered = False
        for _it in range(30):
            if used >= newton_budget:
                return None, False
            used += 1
            F = s * eye - As_m
            W = np.linalg.inv(F)
            WQ = np.matmul(W, Q)  # stack of W Q_i
            g = -np.einsum("iaa->i", WQ)
            H = np.einsum("iab,jba->ij", WQ, WQ)
            ridge = 1e-13 * max(1.0, float(np.trace(H)) / n)
            try:
                d = np.linalg.solve(H + ridge * eye, -g)
            except np.linalg.LinAlgError:
                d = -g
            dec2 = float(max(d @ (H @ d), 0.0))
            dec = np.sqrt(dec2)
            # ridged d underestimates the true Newton decrement; inflate 2x
            # (+eps) before certifying so the bound below stays conservative
            dec_cert = 2.0 * dec + 1e-8
            if dec_cert < 0.9:
                # Near the analytic center of {A_s < sI} the barrier value is
                # within omega*(lam) = -lam - log(1 - lam) of its minimum, so
                # the maximal determinant is bounded and a* is pinned below:
                #   (s - a*)^n <= e^{omega*(lam)} (s - h) (s - lam_min)^{n-1}
                # (h, lam_min and the decrement all belong to this iterate)
                slack = -dec_cert - np.log1p(-dec_cert)
                gap = s - h
                D = s - float(w[0])
                if gap > 0 and D > 0:
                    lower = s - (np.exp(slack) * gap * D ** (n - 1)) ** (1.0 / n)
                    if lower > a:
                        return None, True
            if float(np.abs(g).max()) <= max(newton_tol, 1e-14 * scale) or dec2 <= 1e-24:
                centered = True
                break
            t = 1.0 if dec <= 0.25 else 1.0 / (1.0 + dec)
            for _ in range(10):  # roundoff guard; theory keeps the step interior
                m_t = m + t * d
                As_t = _As(S0, Q, m_t)
                w_t = np.linalg.eigvalsh(As_t)
                if float(w_t[-1]) < s:
                    break
                t *= 0.5
            else:
                break
            m, As_m, w = m_t, As_t, w_t
            h = float(w[-1])
            if h < a:
                return m, False
        if h_round_start - h <= max(1e-13 * scale, 1e-9 * (h - a)):
            return None, False  # level sliding has stalled short of the target
    return None, False


def _subgradient_min(S0, Q, m0, iters, *, gap_tol=1e-8):
    """Polyak-step subgradient descent on lambda_max(A_s(m)) from m0.

    A shrinking-level schedule drives the Polyak target; minimizers of
    lambda_max typically sit where eigenvalues coalesce, so convergence on
    ill-conditioned instances is slow and the caller treats this method as
    a cross-check, not the primary answer.
    """
    m = np.array(m0, dtype=float)
    w, U = np.linalg.eigh(_As(S0, Q, m))
    h = float(w[-1])
    u = U[:, -1]
    best_h, best_m = h, m.copy()
    delta = 0.1 * max(1.0, abs(h))
    stall = 0
    for _ in range(iters):
        g = -((Q @ u) @ u)  # d lambda_max / d m_i = -u^T Q_i u (simple eigenvalue)
        gn2 = float(g @ g)
        if gn2 < 1e-30:
            break
        step = (h - (best_h - delta)) / gn2
        if float(w[-1] - w[-2]) < gap_tol:
            # numerically coalesced top pair: clamp to a small trust region
            step = min(step, 1e-3 * (1.0 + float(np.linalg.norm(m))) / np.sqrt(gn2))
        m = m - step * g
        w, U = np.linalg.eigh(_As(S0, Q, m))
        h = float(w[-1])
        u = U[:, -1]
        if h < best_h - 1e-15 * max(1.0, abs(best_h)):
            best_h, best_m = h, m.copy()
            stall = 0
        else:
            stall += 1
            if stall >= 10:
                # shrink the Polyak target level and restart from the best
                # point; the geometric schedule reaches ~1e-7 relative in a
                # few hundred iterations even at nonsmooth minima
                delta *= 0.5
                stall = 0
                m = best_m.copy()
                w, U = np.linalg.eigh(_As(S0, Q, m))
                h = float(w[-1])
                u = U[:, -1]
                if delta < 1e-12 * max(1.0, abs(best_h)):
                    break
    return best_h, best_m


def subgradient_lambda_max(sys: QuadraticSystem, m) -> np.ndarray:
    """Analytic subgradient of m -> lambda_max(A_s(m)) (valid when simple)."""
    m = np.asarray(m, dtype=float)
    _, u = lambda_max_sym(symmetric_linear_part(sys, m))
    return -((sys.Q @ u) @ u)


def solve(sys: QuadraticSystem, opts: SolverOptions | None = None) -> TrapResult:
    """Solve the trapping-region program for ``sys``.

    Returns a TrapResult whose ``a_star`` is witness-backed:
    lambda_max(A_s(m_star)) equals a_star to the reported tolerance.
    ``solver_info`` carries iteration counts, the final bisection gap, the
    barrier/subgradient values and any cross-check warnings.
    """
    opts = opts or SolverOptions()
    n = sys.n
    S0 = 0.5 * (sys.L + sys.L.T)
    Q = sys.Q
    qnorm = float(np.sqrt((Q**2).sum()))
    info: dict = {"method": "bisection-barrier+subgradient", "warnings": []}

    if qnorm <= 1e-14 * max(1.0, float(np.linalg.norm(S0))):
        # No quadratic coupling: A_s(m) = S0 for every m.
        a, _ = lambda_max_sym(S0)
        m0 = np.zeros(n)
        info.update(method="constant (zero quadratic terms)", bisections=0,
                    newton_steps=0, subgrad_iters=0, final_gap=0.0,
                    barrier_value=a, subgradient_value=a, disagreement=0.0)
        info["marginal"] = abs(a) <= 1e-8
        status = TrapStatus.BOUNDED_CERTIFIED if a < 0 else TrapStatus.NO_TRAPPING_REGION
        return TrapResult(a_star=a, m_star=m0, status=status, solver_info=info)

    evs = np.linalg.eigvalsh(S0)
    proven_floor = float(evs[0])  # lambda_max(A_s(m)) >= m^ S0 m^ >= this, all m
    a_lo = proven_floor
    a_hi = float(evs[-1])
    scale = max(1.0, abs(a_lo), abs(a_hi))
    m_best = np.zeros(n)
    h_best = a_hi

    bisections = 0
    certified = 0
    while a_hi - a_lo > opts.tol:
        if bisections >= opts.max_bisect:
            raise MaxIterations(
                f"bisection did not reach tol {opts.tol:g} in {opts.max_bisect} steps "
                f"(gap {a_hi - a_lo:.3e})"
            )
        bisections += 1
        a_mid = 0.5 * (a_lo + a_hi)
        m_found, cert = _feasibility_search(
            S0, Q, a_mid, m_best,
            newton_budget=opts.max_newton, newton_tol=opts.newton_tol, scale=scale,
        )
        if m_found is not None:
            h = _lam_max(S0, Q, m_found)
            if h < h_best:
                h_best, m_best = h, m_found
            a_hi = min(a_hi, h)
        else:
            a_lo = a_mid
            certified += int(cert)
    bar_a, bar_m = h_best, m_best

    # Independent cross-check: spectral subgradient descent, random restarts.
    rng = np.random.default_rng(opts.seed)
    radius = (1.0 + float(np.linalg.norm(S0))) / max(qnorm / n, 1e-12)
    multipliers = [0.0, 0.1, 0.3, 1.0, 1.0, 3.0, 3.0, 10.0]
    sub_a, sub_m = np.inf, np.zeros(n)
    total_sub_iters = 0
    for r in range(opts.restarts):
        mult = multipliers[r % len(multipliers)]
        m0 = mult * radius * rng.standard_normal(n)
        h_r, m_r = _subgradient_min(S0, Q, m0, opts.subgrad_iters)
        total_sub_iters += opts.subgrad_iters
        if h_r < sub_a or (h_r == sub_a and tuple(m_r) < tuple(sub_m)):
            sub_a, sub_m = h_r, m_r
    # final polish from the overall best restart
    if np.isfinite(sub_a) and opts.subgrad_polish_iters > 0:
        h_p, m_p = _subgradient_min(S0, Q, sub_m, opts.subgrad_polish_iters)
        total_sub_iters += opts.subgrad_polish_iters
        if h_p < sub_a:
            sub_a, sub_m = h_p, m_p

    disagreement = abs(bar_a - sub_a)
    if disagreement > 1e-5 * scale:
        info["warnings"].append(
            f"barrier and subgradient optima disagree by {disagreement:.3e} "
            f"(barrier {bar_a:.9g}, subgradient {sub_a:.9g})"
        )

    # Better of the two; ties go to the barrier's well-centered shift.
    if sub_a < bar_a - 1e-7 * scale:
        m_star = sub_m
    else:
        m_star = bar_m

    a_star, _ = lambda_max_sym(_As(S0, Q, m_star))
    if a_star < proven_floor - 1e-6 * scale:
        # Provably impossible for a validated lossless family; reaching this
        # line means the input violates the constraint badly.
        raise UnboundedBelow(
            f"witness value {a_star:.6g} undercuts the proven bound {proven_floor:.6g}"
        )
    if a_star < a_lo - 1e-12 * scale:
        # A stalled inner search declared a level infeasible that the
        # cross-check later undercut; the witness value stands, only the
        # bisection gap loses its meaning.
        info["warnings"].append(
            f"bisection floor {a_lo:.9g} was not certified and is undercut "
            f"by the final witness {a_star:.9g}"
        )
        a_lo = a_star
    info.update(
        bisections=bisections,
        certified_infeasible=certified,
        final_gap=max(a_hi - a_lo, 0.0),
        barrier_value=bar_a,
        subgradient_value=sub_a,
        disagreement=disagreement,
        subgrad_iters=total_sub_iters,
    )
    info["marginal"] = abs(a_star) <= 1e-8
    status = TrapStatus.BOUNDED_CERTIFIED if a_star < 0 else TrapStatus.NO_TRAPPING_REGION
    return TrapResult(a_star=a_star, m_star=m_star, status=status, solver_info=info)


def feasibility_at(sys: QuadraticSystem, a: float, opts: SolverOptions | None = None):
    """Search for m with lambda_max(A_s(m)) < a.

    Returns the witness or None.  Absence is a solver outcome within the
    iteration budget, not a proof of infeasibility; the certificate of
    infeasibility is a* > a from :func:`solve`.  At a = 0 this answers the
    shifted-negative-semidefiniteness question directly.
    """
    opts = opts or SolverOptions()
    S0 = 0.5 * (sys.L + sys.L.T)
    evs = np.linalg.eigvalsh(S0)
    scale = max(1.0, abs(float(evs[0])), abs(float(evs[-1])))
    target = a - 1e-13 * max(1.0, abs(a))
    m, _ = _feasibility_search(
        S0, sys.Q, target, np.zeros(sys.n),
        newton_budget=opts.max_newton, newton_tol=opts.newton_tol, scale=scale,
    )
    if m is None:
        return None
    val, _ = lambda_max_sym(symmetric_linear_part(sys, m))
    return m if val < a else None


def verdict(sys: QuadraticSystem, opts: SolverOptions | None = None) -> TrapStatus:
    """Three-way classification of the trapping-region program."""
    opts = opts or SolverOptions()
    res = solve(sys, opts)
    if res.a_star < -opts.tol:
        return TrapStatus.BOUNDED_CERTIFIED
    if res.a_star > opts.tol:
        return TrapStatus.NO_TRAPPING_REGION
    return TrapStatus.MARGINAL
