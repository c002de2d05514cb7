"""Trajectory runner, Monte-Carlo aggregation, verifiers, reproducibility."""

import dataclasses
import math

import numpy as np
import pytest

from sgdlab.compressor import RandK
from sgdlab.estimator import CDGD, DIANA, LSVRG, FullGradient, SGDStar, UniformSGD
from sgdlab.harness import (
    ExperimentConfig,
    TrajectoryError,
    run_monte_carlo,
    run_trajectory,
    tail_mean,
    thread_count,
    verify_assumption,
    verify_bound,
)
from sgdlab.problem import compute_constants, random_quadratic

HET = random_quadratic(20, 5, eig_lo=1.0, eig_hi=3.0, shift_scale=1.0, seed=71)
HET_CONST = compute_constants(HET)


def test_gd_trajectory_dominated_by_geometric_decay():
    prob = random_quadratic(1, 6, eig_lo=1.0, eig_hi=10.0, shift_scale=1.0, seed=2)
    cfg = ExperimentConfig(
        problem=prob, estimator=FullGradient(), steps=400, trials=1, base_seed=3, record_every=1
    )
    resolved = cfg.resolve()
    dist, _ = run_trajectory(resolved, 0)
    cons = resolved.constants
    rate = 1.0 - resolved.gamma * cons.mu
    bound = dist[0] * rate ** np.arange(401)
    assert np.all(dist <= bound * (1 + 1e-12))


def test_sgd_star_fixed_point_at_optimum():
    cfg = ExperimentConfig(
        problem=HET,
        estimator=SGDStar(),
        steps=50,
        trials=1,
        base_seed=4,
        record_every=1,
        x0_radius=0.0,  # start exactly at x*
    )
    dist, sig = run_trajectory(cfg.resolve(), 0)
    assert np.all(dist == 0.0) and np.all(sig == 0.0)


def test_zero_steps_records_only_initial_point():
    cfg = ExperimentConfig(problem=HET, estimator=UniformSGD(), steps=0, trials=3, base_seed=5)
    stats = run_monte_carlo(cfg)
    assert list(stats.ks) == [0]
    assert stats.mean_dist_sq[0] == pytest.approx(1.0, rel=1e-12)  # unit radius start


def test_single_trial_stats_equal_trajectory():
    cfg = ExperimentConfig(
        problem=HET, estimator=LSVRG(p=0.1), steps=200, trials=1, base_seed=6, record_every=10
    )
    resolved = cfg.resolve()
    stats = run_monte_carlo(resolved)
    dist, sig = run_trajectory(resolved, 0)
    np.testing.assert_array_equal(stats.mean_dist_sq, dist)
    np.testing.assert_array_equal(stats.mean_sigma_sq, sig)
    assert stats.std_V[0] == 0.0


def test_bitwise_reproducibility_and_parallel_independence(monkeypatch):
    cfg = ExperimentConfig(
        problem=HET, estimator=LSVRG(p=0.05), steps=300, trials=12, base_seed=99, record_every=25
    )
    monkeypatch.setenv("SGDLAB_THREADS", "1")
    serial = run_monte_carlo(cfg)
    serial2 = run_monte_carlo(cfg)
    monkeypatch.setenv("SGDLAB_THREADS", "3")
    parallel = run_monte_carlo(cfg)
    for a, b in ((serial, serial2), (serial, parallel)):
        np.testing.assert_array_equal(a.mean_dist_sq, b.mean_dist_sq)
        np.testing.assert_array_equal(a.mean_sigma_sq, b.mean_sigma_sq)
        np.testing.assert_array_equal(a.mean_V, b.mean_V)
        np.testing.assert_array_equal(a.std_V, b.std_V)
        np.testing.assert_array_equal(a.bound_V, b.bound_V)


def test_lyapunov_consistency():
    cfg = ExperimentConfig(
        problem=HET, estimator=DIANA(compressor=RandK(k=1)), steps=150, trials=8, base_seed=13,
        record_every=10,
    )
    stats = run_monte_carlo(cfg)
    recombined = stats.mean_dist_sq + stats.M * stats.gamma**2 * stats.mean_sigma_sq
    np.testing.assert_allclose(stats.mean_V, recombined, rtol=1e-12)


def test_verify_bound_deterministic_gd_tight_slack():
    prob = random_quadratic(1, 4, eig_lo=1.0, eig_hi=8.0, shift_scale=1.0, seed=8)
    cfg = ExperimentConfig(
        problem=prob, estimator=FullGradient(), steps=500, trials=1, base_seed=9, record_every=1
    )
    stats = run_monte_carlo(cfg)
    assert verify_bound(stats, slack_rel=1e-12, slack_stat=0.0).passed


def test_verify_bound_trivial_from_optimum():
    cfg = ExperimentConfig(
        problem=HET, estimator=SGDStar(), steps=100, trials=4, base_seed=10, x0_radius=0.0
    )
    stats = run_monte_carlo(cfg)
    assert np.all(stats.mean_V == 0.0)
    assert verify_bound(stats).passed


def test_verify_bound_flags_violations():
    cfg = ExperimentConfig(problem=HET, estimator=FullGradient(), steps=20, trials=1, base_seed=11)
    stats = run_monte_carlo(cfg)
    stats.mean_V = stats.mean_V + 10.0 * stats.bound_V + 1.0  # inflate past any slack
    report = verify_bound(stats)
    assert not report.passed
    assert any("bound[k=" in c.name for c in report.checks if not c.passed)


def test_verify_assumption_exact_margins_for_gd():
    report = verify_assumption(HET, HET_CONST, FullGradient(), num_points=30, seed=12)
    assert report.passed
    assert all(c.exact for c in report.checks)
    # the GD inequality ||grad f||^2 <= 2L (f - f*) is tight somewhere: margins
    # must be nonnegative but not uniformly huge
    margins = np.array([c.margin for c in report.checks])
    assert np.all(margins >= 0.0)


def test_verify_assumption_includes_sigma_recursion():
    report = verify_assumption(HET, HET_CONST, LSVRG(p=0.2), num_points=20, seed=14)
    assert report.passed
    names = {c.name.split("[")[0] for c in report.checks}
    assert names == {"second_moment", "sigma_recursion"}


def test_verify_assumption_rejects_corrupted_certificate():
    est = UniformSGD()
    bad = est.certificate(HET, HET_CONST).scaled_A(0.5)
    # a certificate that halves A on a problem with aligned curvature must fail
    prob = random_quadratic(2, 2, eig_lo=1.0, eig_hi=4.0, shift_scale=1.0, seed=90)
    cons = compute_constants(prob)
    report = verify_assumption(
        prob, cons, est, num_points=100, seed=15, certificate=est.certificate(prob, cons).scaled_A(0.5)
    )
    assert not report.passed


def test_variance_reduction_signature():
    """VR methods drive the tail to ~0; plain SGD and CDGD plateau at the floor."""
    d0 = 1.0  # unit start radius
    for est in (SGDStar(), LSVRG(p=0.05), DIANA(compressor=RandK(k=1))):
        cfg = ExperimentConfig(problem=HET, estimator=est, steps=10, trials=24, base_seed=16)
        resolved = cfg.resolve()
        rate = min(
            resolved.gamma * resolved.constants.mu,
            resolved.certificate.rho - resolved.certificate.B / resolved.M
            if resolved.certificate.has_sigma
            else math.inf,
        )
        K = math.ceil(20.0 / rate)
        cfg = dataclasses.replace(cfg, steps=K)
        stats = run_monte_carlo(cfg)
        assert tail_mean(stats.mean_dist_sq) <= 1e-8 * d0, est.name

    for est in (UniformSGD(), CDGD(compressor=RandK(k=1))):
        cfg = ExperimentConfig(problem=HET, estimator=est, steps=400, trials=64, base_seed=17)
        resolved = cfg.resolve()
        assert resolved.curve.floor > 0
        stats = run_monte_carlo(cfg)
        tail = tail_mean(stats.mean_dist_sq)
        assert tail >= 0.1 * resolved.curve.floor, est.name
        assert verify_bound(stats).passed, est.name


def test_overflow_raises_diagnostic_error():
    cfg = ExperimentConfig(problem=HET, estimator=FullGradient(), steps=500, trials=1, base_seed=18)
    resolved = dataclasses.replace(cfg.resolve(), gamma=50.0)  # far beyond stability
    with pytest.raises(TrajectoryError, match="iteration"):
        run_trajectory(resolved, 0)


def test_thread_count_parsing(monkeypatch):
    monkeypatch.setenv("SGDLAB_THREADS", "5")
    assert thread_count() == 5
    monkeypatch.setenv("SGDLAB_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.delenv("SGDLAB_THREADS")
    assert thread_count() >= 1
    monkeypatch.setenv("SGDLAB_THREADS", "abc")
    with pytest.raises(ValueError, match="integer"):
        thread_count()
    monkeypatch.setenv("SGDLAB_THREADS", "-2")
    with pytest.raises(ValueError, match=">= 0"):
        thread_count()


def test_tail_mean_window():
    vals = np.arange(100, dtype=float)
    assert tail_mean(vals) == pytest.approx(np.mean(np.arange(90, 100)))
    assert tail_mean(np.array([3.0])) == 3.0


def test_config_validation_errors():
    with pytest.raises(ValueError, match="trials"):
        ExperimentConfig(problem=HET, estimator=FullGradient(), trials=0).validate()
    with pytest.raises(ValueError, match="x0_mode"):
        ExperimentConfig(problem=HET, estimator=FullGradient(), x0_mode="nope").validate()
    with pytest.raises(ValueError, match="gamma"):
        ExperimentConfig(problem=HET, estimator=FullGradient(), gamma="fast").validate()


def test_logistic_problem_end_to_end():
    from sgdlab.problem import random_logistic

    prob = random_logistic(12, 4, ridge=0.4, seed=33)
    cons = compute_constants(prob)
    report = verify_assumption(prob, cons, LSVRG(p=0.1), num_points=25, seed=34)
    assert report.passed
    cfg = ExperimentConfig(
        problem=prob, estimator=LSVRG(p=0.1), steps=600, trials=32, base_seed=35,
        record_every=5,
    )
    stats = run_monte_carlo(cfg)
    assert verify_bound(stats).passed
    assert stats.mean_dist_sq[-1] < 1e-3 * stats.mean_dist_sq[0]


def test_min_curvature_start_mode():
    prob = random_quadratic(1, 5, eig_lo=1.0, eig_hi=9.0, shift_scale=0.5, seed=19)
    cfg = ExperimentConfig(
        problem=prob, estimator=FullGradient(), steps=3, trials=1, base_seed=20,
        x0_mode="min_curvature",
    )
    resolved = cfg.resolve()
    cons = resolved.constants
    # starting along the softest eigendirection: GD contracts at exactly 1 - gamma*mu
    dist, _ = run_trajectory(resolved, 0)
    rate = (1.0 - resolved.gamma * cons.mu) ** 2
    np.testing.assert_allclose(dist[1:] / dist[:-1], rate, rtol=1e-10)
