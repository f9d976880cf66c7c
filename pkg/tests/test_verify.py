"""Equivalence reports, moment integration, trajectory comparison."""

import dataclasses

import numpy as np
import pytest
from scipy.linalg import expm, solve_continuous_lyapunov

from conftest import random_symmetric
from hamlink import (
    DivergenceError,
    FeedbackRealization,
    LinearDynamics,
    LqssParams,
    TwoPortLqss,
    ValidationError,
    check_equivalence,
    closed_loop_dynamics,
    compare_moment_trajectories,
    demo_problem,
    direct_dynamics,
    feedback_closed_loop,
    jmat,
    simulate_moments,
    synthesize,
    system_dynamics,
)
from hamlink.lqss import DirectInteraction


def golden_pair():
    di = demo_problem().interaction
    fr = synthesize(di.sys_a.r, di.sys_b.r, di.r_ab)
    return di, fr


def perturbed(fr, field, rng, rel=1e-3):
    mat = getattr(fr, field)
    noise = rng.normal(size=mat.shape)
    bumped = mat + rel * max(1.0, np.max(np.abs(mat))) * noise
    return dataclasses.replace(fr, **{field: bumped})


class TestCheckEquivalence:
    def test_clean_realization_passes(self):
        di, fr = golden_pair()
        report = check_equivalence(di, fr)
        assert report.passed
        assert report.drift_residual <= 1e-12
        assert report.skew_drift_residual <= 1e-12
        assert report.noise_residual == 0.0
        assert report.coupling_residual <= 1e-12
        assert all(report.flags.values())
        assert report.sigma_unit_margin == pytest.approx(np.sqrt(2.0), rel=1e-12)
        assert report.moment_residual is None

    def test_every_matrix_perturbation_is_detected(self):
        di, fr = golden_pair()
        rng = np.random.default_rng(301)
        for field in ("c_a", "c_b", "x", "sigma", "r_a", "r_b"):
            report = check_equivalence(di, perturbed(fr, field, rng))
            assert not report.passed, field
            worst = max(
                report.drift_residual,
                report.skew_drift_residual,
                report.coupling_residual,
            )
            assert worst > 1e-5, (field, worst)

    def test_perturbation_trips_matching_flags(self):
        di, fr = golden_pair()
        rng = np.random.default_rng(302)
        rep_x = check_equivalence(di, perturbed(fr, "x", rng))
        assert not rep_x.flags["x_sharp_skew"]
        rep_ra = check_equivalence(di, perturbed(fr, "r_a", rng))
        assert not rep_ra.flags["r_a_symmetric"]
        bad_sigma = dataclasses.replace(fr, sigma=1.001 * fr.sigma)
        rep_s = check_equivalence(di, bad_sigma)
        assert not rep_s.flags["sigma_symplectic"]

    def test_drift_residual_ignores_sign_convention(self):
        # flipping the sign of both loop couplings leaves everything invariant
        di, fr = golden_pair()
        flipped = dataclasses.replace(fr, c_a=-fr.c_a, c_b=-fr.c_b)
        report = check_equivalence(di, flipped)
        assert report.passed

    def test_dimension_mismatch_rejected(self):
        di, fr = golden_pair()
        small = demo_problem().interaction
        wrong = dataclasses.replace(
            fr,
            c_a=fr.c_b.copy(),
            r_a=np.zeros((6, 6)),
        )
        with pytest.raises(ValidationError, match="modes"):
            check_equivalence(small, wrong)

    def test_failing_names_are_check_keys(self):
        di, fr = golden_pair()
        rng = np.random.default_rng(303)
        report = check_equivalence(di, perturbed(fr, "sigma", rng))
        assert "drift_residual" in report.failing()
        assert set(report.failing()) <= set(report.checks)


class TestHandSolvableSingleMode:
    # one mode each side, coupling alpha*I: small enough to check by hand
    def test_identity_coupling_drift_blocks(self):
        alpha = 0.7
        zero = np.zeros((2, 2))
        closed_system = LqssParams(
            n=1, r=zero, c=np.zeros((0, 2)), d=np.zeros((0, 0))
        )
        di = DirectInteraction(
            sys_a=closed_system, sys_b=closed_system, r_ab=alpha * np.eye(2)
        )
        fr = synthesize(zero, zero, di.r_ab)
        assert fr.m == 1
        dyn = direct_dynamics(di)
        j = jmat(1)
        assert np.allclose(dyn.a[:2, 2:], alpha * j, atol=1e-14)
        assert np.allclose(dyn.a[2:, :2], alpha * j, atol=1e-14)
        assert np.allclose(dyn.a[:2, :2], 0.0)
        closed = closed_loop_dynamics(di, fr)
        assert np.allclose(closed.a, dyn.a, atol=1e-12)
        # default gains put the rotation entirely in the second coupling
        assert np.allclose(fr.c_a, np.eye(2), atol=1e-12)
        assert np.allclose(
            fr.c_b, alpha * np.array([[1.0, -1.0], [1.0, 1.0]]), atol=1e-12
        )
        assert np.allclose(fr.x, -jmat(1), atol=1e-12)
        assert check_equivalence(di, fr).passed


class TestClosedLoopDynamics:
    def test_matches_container_assembly(self):
        di, fr = golden_pair()
        loose = closed_loop_dynamics(di, fr)
        sys_a = TwoPortLqss(
            n=di.sys_a.n, r=fr.r_a, c_bar=di.sys_a.c, d_bar=di.sys_a.d, c=fr.c_a
        )
        sys_b = TwoPortLqss(
            n=di.sys_b.n, r=fr.r_b, c_bar=di.sys_b.c, d_bar=di.sys_b.d, c=fr.c_b
        )
        strict = feedback_closed_loop(sys_a, sys_b, fr.sigma)
        assert np.array_equal(loose.a, strict.a)
        assert np.array_equal(loose.b_ext, strict.b_ext)

    def test_accepts_corrupted_matrices(self):
        di, fr = golden_pair()
        rng = np.random.default_rng(311)
        dyn = closed_loop_dynamics(di, perturbed(fr, "r_a", rng))
        assert np.all(np.isfinite(dyn.a))


def damped_mode(kappa):
    params = LqssParams(
        n=1,
        r=np.zeros((2, 2)),
        c=np.sqrt(kappa) * np.eye(2),
        d=np.eye(2),
    )
    return system_dynamics(params)


def rotating_mode(omega):
    params = LqssParams(
        n=1,
        r=omega * np.eye(2),
        c=np.zeros((0, 2)),
        d=np.zeros((0, 0)),
    )
    return system_dynamics(params)


class TestSimulateMoments:
    def test_mean_matches_matrix_exponential(self):
        dyn = rotating_mode(1.3)
        mean0 = np.array([1.0, -0.5])
        traj = simulate_moments(dyn, t_final=2.0, dt=1e-3, mean0=mean0)
        for idx in (500, 1000, 2000):
            t = traj.times[idx]
            exact = expm(dyn.a * t) @ mean0
            assert np.max(np.abs(traj.means[idx] - exact)) <= 1e-10

    def test_undamped_mean_rotates(self):
        # drift of a lone oscillator with unit energy matrix is exactly J,
        # so the mean traces the hand closed form (cos t, sin t) rotation
        params = LqssParams(
            n=1, r=np.eye(2), c=np.zeros((0, 2)), d=np.zeros((0, 0))
        )
        dyn = system_dynamics(params)
        assert np.array_equal(dyn.a, jmat(1))
        mean0 = np.array([1.0, 0.0])
        traj = simulate_moments(dyn, t_final=2.0, dt=1e-3, mean0=mean0)
        for idx in (700, 2000):
            t = traj.times[idx]
            exact = np.array([np.cos(t), -np.sin(t)])
            assert np.max(np.abs(traj.means[idx] - exact)) <= 1e-10

    def test_covariance_reaches_lyapunov_steady_state(self):
        kappa = 4.0
        dyn = damped_mode(kappa)
        q = 0.5 * dyn.b_ext @ dyn.b_ext.T
        steady = solve_continuous_lyapunov(dyn.a, -q)
        cov0 = 5.0 * np.eye(2)
        traj = simulate_moments(dyn, t_final=20.0 / kappa, dt=1e-3, cov0=cov0)
        assert np.max(np.abs(traj.covariances[-1] - steady)) <= 1e-6
        assert np.max(np.abs(steady - 0.5 * np.eye(2))) <= 1e-12

    def test_fourth_order_convergence(self):
        dyn = rotating_mode(2.0)
        mean0 = np.array([1.0, 0.0])
        exact = expm(dyn.a * 1.0) @ mean0

        def error(dt):
            traj = simulate_moments(dyn, t_final=1.0, dt=dt, mean0=mean0)
            return np.max(np.abs(traj.means[-1] - exact))

        ratio = error(0.05) / error(0.025)
        assert 12.0 < ratio < 20.0

    def test_covariance_stays_symmetric(self):
        rng = np.random.default_rng(321)
        di, fr = golden_pair()
        dyn = direct_dynamics(di)
        cov0 = 0.5 * np.eye(dyn.dim) + 0.1 * random_symmetric(rng, dyn.dim)
        traj = simulate_moments(dyn, t_final=0.5, dt=1e-3, cov0=cov0)
        for cov in traj.covariances[:: len(traj.covariances) // 7]:
            assert np.array_equal(cov, cov.T)

    def test_default_initial_conditions(self):
        dyn = damped_mode(1.0)
        traj = simulate_moments(dyn, t_final=0.1, dt=0.01)
        assert np.array_equal(traj.means[0], np.zeros(2))
        assert np.array_equal(traj.covariances[0], 0.5 * np.eye(2))

    def test_grid_rounds_step_count(self):
        dyn = damped_mode(1.0)
        traj = simulate_moments(dyn, t_final=1.0, dt=0.3)
        assert len(traj.times) == 4
        assert traj.times[-1] == pytest.approx(0.9)

    def test_divergence_raises_with_time(self):
        unstable = LinearDynamics(
            a=5.0 * np.eye(2),
            b_ext=np.zeros((2, 0)),
            c_ext=np.zeros((0, 2)),
            d_ext=np.zeros((0, 0)),
        )
        with pytest.raises(DivergenceError) as info:
            simulate_moments(
                unstable, t_final=400.0, dt=0.5, mean0=np.array([1.0, 1.0])
            )
        assert 0.0 < info.value.time <= 400.0
        assert "diverged" in str(info.value)

    def test_rejects_bad_steps(self):
        dyn = damped_mode(1.0)
        with pytest.raises(ValidationError):
            simulate_moments(dyn, t_final=-1.0, dt=0.1)
        with pytest.raises(ValidationError):
            simulate_moments(dyn, t_final=1.0, dt=0.0)

    def test_rejects_bad_initial_moments(self):
        dyn = damped_mode(1.0)
        with pytest.raises(ValidationError, match="mean0"):
            simulate_moments(dyn, 1.0, 0.1, mean0=np.ones(3))
        with pytest.raises(ValidationError, match="cov0"):
            simulate_moments(dyn, 1.0, 0.1, cov0=np.ones((3, 3)))
        skewed = np.array([[1.0, 1.0], [0.0, 1.0]])
        with pytest.raises(ValidationError, match="symmetric"):
            simulate_moments(dyn, 1.0, 0.1, cov0=skewed)


class TestCompareTrajectories:
    def test_identical_dynamics_agree_exactly(self):
        dyn = damped_mode(2.0)
        assert compare_moment_trajectories(dyn, dyn, 1.0, 0.01) == 0.0

    def test_direct_versus_closed_loop(self):
        di, fr = golden_pair()
        residual = compare_moment_trajectories(
            direct_dynamics(di),
            closed_loop_dynamics(di, fr),
            t_final=1.0,
            dt=1e-3,
        )
        assert residual <= 1e-10

    def test_detects_perturbed_realization(self):
        di, fr = golden_pair()
        rng = np.random.default_rng(331)
        residual = compare_moment_trajectories(
            direct_dynamics(di),
            closed_loop_dynamics(di, perturbed(fr, "sigma", rng)),
            t_final=1.0,
            dt=1e-3,
        )
        assert residual > 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="dimensions"):
            compare_moment_trajectories(
                damped_mode(1.0), direct_dynamics(demo_problem().interaction), 1.0, 0.1
            )


class TestReportWithMoments:
    def test_moment_residual_enters_verdict(self):
        di, fr = golden_pair()
        report = check_equivalence(di, fr)
        annotated = dataclasses.replace(
            report, moment_residual=1e-3, moment_tol=1e-6
        )
        assert not annotated.passed
        assert annotated.failing() == ["moment_residual"]
        good = dataclasses.replace(
            report, moment_residual=1e-9, moment_tol=1e-6
        )
        assert good.passed
