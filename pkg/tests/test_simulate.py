import numpy as np
import pytest

import quadbound as qb


@pytest.fixture(scope="module")
def linear_decay():
    return qb.new_system(2, [0, 0], -np.eye(2), np.zeros((2, 2, 2)))


def test_linear_closed_form(linear_decay):
    traj = qb.integrate(linear_decay, [1.0, 1.0], qb.IntegratorOptions(t_final=1.0))
    assert traj.status is qb.TrajectoryStatus.COMPLETED
    assert traj.times[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(traj.states[-1] - np.exp(-1.0)).max() < 1e-7


def test_scipy_cross_check():
    scipy_integrate = pytest.importorskip("scipy.integrate")
    sys = qb.random_system(3, seed=31, scale=0.5)
    x0 = np.array([0.4, -0.7, 0.9])
    mine = qb.integrate(sys, x0, qb.IntegratorOptions(rtol=1e-10, atol=1e-12, t_final=8.0))
    ref = scipy_integrate.solve_ivp(
        lambda _t, x: qb.eval_rhs(sys, x), (0.0, 8.0), x0,
        method="RK45", rtol=1e-10, atol=1e-12,
    )
    assert ref.success
    assert np.abs(mine.states[-1] - ref.y[:, -1]).max() < 1e-6


def test_fifth_order_convergence(linear_decay):
    # fixed-step mode (huge tolerances, max_step governs): halving the step
    # must shrink the endpoint error like h^5, within a factor of 4
    errs = []
    for h in (0.1, 0.05):
        opts = qb.IntegratorOptions(rtol=1.0, atol=1.0, t_final=1.0, max_step=h)
        traj = qb.integrate(linear_decay, [1.0, 1.0], opts)
        errs.append(np.abs(traj.states[-1] - np.exp(-1.0)).max())
    ratio = errs[0] / errs[1]
    assert 32.0 / 4.0 <= ratio <= 32.0 * 4.0


def test_determinism(counterexample):
    sys, _ = counterexample
    a = qb.integrate(sys, [1.0, 1.0, 1.0], qb.IntegratorOptions(t_final=5.0))
    b = qb.integrate(sys, [1.0, 1.0, 1.0], qb.IntegratorOptions(t_final=5.0))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_times_strictly_increasing(lorenz):
    traj = qb.integrate(lorenz, [1.0, 1.0, 1.0], qb.IntegratorOptions(t_final=5.0))
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj.times) == len(traj.states)


def test_diverged_invariant():
    sys = qb.canonical_system([0, 0], [[-1.0, 0.0], [0.0, 1.0]], 1.0)
    opts = qb.IntegratorOptions(t_final=100.0, divergence_threshold=1e4)
    traj = qb.integrate(sys, [0.0, -3.0], opts)
    assert traj.status is qb.TrajectoryStatus.DIVERGED
    assert traj.diverged_at is not None
    assert np.linalg.norm(traj.states[-1]) > 1e4
    assert traj.diverged_at == pytest.approx(traj.times[-1])


def test_step_failure_on_min_step():
    sys = qb.lorenz_system()
    opts = qb.IntegratorOptions(t_final=10.0, min_step=10.0)
    traj = qb.integrate(sys, [1.0, 1.0, 1.0], opts)
    assert traj.status is qb.TrajectoryStatus.STEP_FAILURE


def test_counterexample_converges(counterexample):
    sys, _ = counterexample
    traj = qb.integrate(sys, [1.0, 1.0, 1.0], qb.IntegratorOptions(t_final=10.0))
    norms = traj.norms()
    assert norms[-1] < 1e-3
    # decreasing after the initial transient, modulo the spiral ripple of the
    # complex eigenpair: no future norm exceeds the current one by > 10%
    tail = norms[traj.times > 2.0]
    future_max = np.maximum.accumulate(tail[::-1])[::-1]
    assert np.all(future_max <= 1.10 * tail)


def test_probe_counterexample(counterexample):
    sys, _ = counterexample
    probe = qb.probe_boundedness(sys, trials=20, radius=10.0,
                                 opts=qb.IntegratorOptions(t_final=50.0), seed=4)
    assert probe.verdict is qb.ProbeVerdict.ALL_CONVERGED
    assert probe.beta_est <= 1e-3
    assert probe.trials == 26  # 20 sampled + 2n axis points


def test_probe_lorenz_bounded(lorenz):
    probe = qb.probe_boundedness(lorenz, trials=4, radius=10.0,
                                 opts=qb.IntegratorOptions(t_final=30.0), seed=4)
    assert probe.verdict is qb.ProbeVerdict.ALL_CONVERGED
    assert 1.0 < probe.beta_est < 100.0  # chaotic attractor: finite, nonzero
    assert probe.t_est is not None


def test_probe_divergence_found():
    sys = qb.canonical_system([0, 0], [[-1.0, 0.0], [0.0, 1.0]], 1.0)
    opts = qb.IntegratorOptions(t_final=20.0, divergence_threshold=1e4)
    probe = qb.probe_boundedness(sys, trials=5, radius=10.0, opts=opts, seed=4)
    assert probe.verdict is qb.ProbeVerdict.DIVERGENCE_FOUND
    assert probe.divergent_x0 is not None
    # the reported initial condition reproduces the divergence
    again = qb.integrate(sys, probe.divergent_x0, opts)
    assert again.status is qb.TrajectoryStatus.DIVERGED


def test_probe_rejects_zero_trials(lorenz):
    with pytest.raises(ValueError):
        qb.probe_boundedness(lorenz, trials=0)


def test_energy_rate_check_counterexample(counterexample):
    sys, _ = counterexample
    opts = qb.IntegratorOptions(rtol=1e-10, atol=1e-12, t_final=5.0, max_step=5e-4)
    traj = qb.integrate(sys, [1.0, 1.0, 1.0], opts)
    resid = qb.energy_rate_check(sys, np.zeros(3), traj)
    assert resid <= 1e-5


def test_energy_rate_check_linear(linear_decay):
    opts = qb.IntegratorOptions(rtol=1e-10, atol=1e-12, t_final=5.0, max_step=0.001)
    traj = qb.integrate(linear_decay, [2.0, -1.0], opts)
    resid = qb.energy_rate_check(linear_decay, np.array([0.5, 0.5]), traj)
    assert resid <= 1e-5


def test_energy_rate_check_random(rng):
    # the quadratic terms contribute nothing to the energy rate for any m
    for seed in range(5):
        sys = qb.random_system(3, seed=seed, scale=0.5)
        opts = qb.IntegratorOptions(rtol=1e-10, atol=1e-12, t_final=3.0, max_step=0.001,
                                    divergence_threshold=50.0)
        traj = qb.integrate(sys, rng.uniform(-1, 1, 3), opts)
        m = rng.uniform(-2, 2, 3)
        assert qb.energy_rate_check(sys, m, traj) <= 1e-4


def test_refutation_triple(counterexample):
    # the exact combination that breaks the necessity claim: no trapping
    # region, yet a verified certificate and converging trajectories
    sys, cert = counterexample
    assert qb.solve(sys).status is qb.TrapStatus.NO_TRAPPING_REGION
    assert qb.verify_certificate(sys, cert, samples=200, seed=3).passed
    probe = qb.probe_boundedness(sys, trials=5, radius=10.0,
                                 opts=qb.IntegratorOptions(t_final=30.0), seed=3)
    assert probe.verdict is qb.ProbeVerdict.ALL_CONVERGED


def test_certified_bound_holds_from_large_radius(lorenz):
    # sufficiency direction, empirically: a* < 0 keeps trajectories from
    # ||x0|| <= 100 inside a fixed ball over the final window
    assert qb.solve(lorenz).status is qb.TrapStatus.BOUNDED_CERTIFIED
    probe = qb.probe_boundedness(lorenz, trials=20, radius=100.0,
                                 opts=qb.IntegratorOptions(t_final=50.0), seed=11)
    assert probe.verdict is qb.ProbeVerdict.ALL_CONVERGED
    assert probe.beta_est < 100.0


def test_bounded_certificate_implies_no_divergence():
    # consistency web: a* < 0 systems never produce a Diverged probe
    found = 0
    opts = qb.SolverOptions(tol=1e-6, subgrad_iters=100, restarts=4)
    for seed in range(40):
        sys = qb.random_system(3, seed=seed, scale=0.7)
        res = qb.solve(sys, opts)
        if res.a_star < -0.05:
            found += 1
            probe = qb.probe_boundedness(
                sys, trials=4, radius=20.0,
                opts=qb.IntegratorOptions(t_final=20.0), seed=seed,
            )
            assert probe.verdict is not qb.ProbeVerdict.DIVERGENCE_FOUND
            if found >= 3:
                break
    assert found >= 1
