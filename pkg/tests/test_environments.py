"""Reward environments: synthetic benchmark and small-cell network model."""

import math

import numpy as np
import pytest

from linbai.bai import ConfidenceConfig
from linbai.environments import (
    LinearEnvironment,
    ServiceNetwork,
    ServicePlacementScenario,
    build_demand,
    build_service_env,
    build_synthetic,
    cloud_delay,
    dbm_to_watt,
    estimate_gain,
    heterogeneous_view,
    normalized_demand,
    sbs_delay,
    uplink_rate,
)
from linbai.protocol import SyncPolicy, run_distlingape


class TestSampleReward:
    def test_noiseless_is_exact(self):
        env = LinearEnvironment(np.array([2.0, -1.0]), noise_scale=0.0)
        rng = np.random.default_rng(0)
        assert env.sample_reward(np.array([3.0, 1.0]), rng) == 5.0

    def test_benchmark_best_arm_mean(self):
        arms, env = build_synthetic(5, 0.01)
        assert env.mean_reward(arms.context(0)) == 2.0
        assert env.noise_scale == 1.0

    def test_empirical_moments(self):
        arms, env = build_synthetic(3, 0.2)
        rng = np.random.default_rng(42)
        n = 100_000
        draws = np.array([env.sample_reward(arms.context(2), rng) for _ in range(n)])
        mean = env.mean_reward(arms.context(2))
        assert abs(draws.mean() - mean) < 3.0 * env.noise_scale / math.sqrt(n)
        assert draws.std() == pytest.approx(env.noise_scale, rel=0.02)

    def test_per_arm_noise_override(self):
        env = LinearEnvironment(np.ones(2), noise_scale=1.0, noise_scales=np.array([0.0, 5.0]))
        rng = np.random.default_rng(1)
        x = np.array([1.0, 1.0])
        assert env.sample_reward(x, rng, arm=0) == 2.0
        assert env.sample_reward(x, rng, arm=1) != 2.0


class TestBuildSynthetic:
    def test_right_angle_duplicates_second_arm(self):
        arms, _ = build_synthetic(2, math.pi / 2)
        np.testing.assert_allclose(arms.context(2), [0.0, 1.0], atol=1e-15)

    def test_small_angle_competitor(self):
        arms, _ = build_synthetic(5, 0.01)
        assert arms.n_arms == 6
        np.testing.assert_allclose(
            arms.context(5),
            [math.cos(0.01), math.sin(0.01), 0.0, 0.0, 0.0],
            atol=1e-15,
        )
        assert arms.context(5)[0] == pytest.approx(0.9999500004166653)
        assert arms.context(5)[1] == pytest.approx(0.009999833334166664)

    def test_first_arm_optimal_for_acute_angles(self):
        for phi in (0.001, 0.01, 0.3, 1.0, math.pi / 2 - 1e-6):
            arms, env = build_synthetic(4, phi)
            means = arms.contexts @ env.theta_star
            assert int(np.argmax(means)) == 0

    def test_rejects_degenerate_dimension(self):
        with pytest.raises(ValueError):
            build_synthetic(1, 0.01)


class TestUplinkRate:
    def test_zero_gain(self):
        assert uplink_rate(10e6, 0.01, 0.0, 1e-12, 4e-14) == 0.0

    def test_snr_one_gives_log_two(self):
        W, P, I, s2 = 10e6, 0.01, 1e-12, 4e-14
        h = (I + s2) / P
        assert uplink_rate(W, P, h, I, s2) == pytest.approx(W * math.log(2.0))
        assert uplink_rate(W, P, h, I, s2, base="log2") == pytest.approx(W)

    def test_table_values_match_scalar_oracle(self):
        rng = np.random.default_rng(3)
        s = ServicePlacementScenario()
        h = rng.exponential() * s.pathloss_sbs * (1.0 / 150.0) ** s.pathloss_exponent
        got = uplink_rate(s.bandwidth_hz, s.tx_power_w, h, s.interference_w, s.noise_power_w)
        snr = s.tx_power_w * h / (s.interference_w + s.noise_power_w)
        assert got == pytest.approx(s.bandwidth_hz * math.log(1.0 + snr), rel=1e-12)

    def test_rejects_degenerate_power(self):
        with pytest.raises(ValueError):
            uplink_rate(10e6, 0.01, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            uplink_rate(0.0, 0.01, 1.0, 1e-12, 1e-14)


class TestDelays:
    def test_zero_task_size_leaves_round_trip(self):
        assert sbs_delay(0.0, 1e6, 5e-3, 2e9, 100) == 5e-3
        assert cloud_delay(0.0, 1e6, 1e9, 30e-3, 5e9, 100) == 30e-3

    def test_deterministic_fixture(self):
        # 1 Mb at 1 Mb/s + 5 ms RTT + 10 ms processing = 1.015 s
        rate = 1e6
        task = 1e6
        cpu = 100 * task / 10e-3
        assert sbs_delay(task, rate, 5e-3, cpu, 100) == pytest.approx(1.015)

    def test_cloud_exceeds_sbs_in_expectation_at_table_midpoints(self):
        # Midpoint fixture: a user 100 m from its small cell, whose center
        # sits 400 m from the macro station. The weaker macro channel makes
        # the cloud's uplink the dominant term.
        s = ServicePlacementScenario()
        rng = np.random.default_rng(7)
        n = 10_000
        dist_sbs, dist_mbs = 100.0, math.hypot(400.0, 100.0)
        gain_sbs = s.pathloss_sbs * (s.ref_distance_m / dist_sbs) ** s.pathloss_exponent
        gain_mbs = s.pathloss_mbs * (s.ref_distance_m / dist_mbs) ** s.pathloss_exponent
        task = rng.uniform(*s.task_size_bits, n)
        rate_s = uplink_rate(s.bandwidth_hz, s.tx_power_w, rng.exponential(1.0, n) * gain_sbs,
                             s.interference_w, s.noise_power_w)
        rate_c = uplink_rate(s.bandwidth_hz, s.tx_power_w, rng.exponential(1.0, n) * gain_mbs,
                             s.interference_w, s.noise_power_w)
        d_s = sbs_delay(task, rate_s, rng.uniform(*s.rtt_sbs_s, n), rng.uniform(*s.cpu_sbs_hz, n), s.cycles_per_bit)
        d_c = cloud_delay(task, rate_c, rng.uniform(*s.backhaul_rate_bps, n), rng.uniform(*s.rtt_cloud_s, n),
                          rng.uniform(*s.cpu_cloud_hz, n), s.cycles_per_bit)
        assert (d_s > 0).all() and (d_c > 0).all()
        assert (d_c - d_s).mean() > 0
        # Scalar-calculator spot check of the cloud formula at fixed draws.
        got = cloud_delay(6e6, 2.5e6, 2e9, 0.03, 5e9, s.cycles_per_bit)
        assert got == pytest.approx(6e6 / 2.5e6 + 6e6 / 2e9 + 0.03 + 100 * 6e6 / 5e9, rel=1e-12)

    def test_positive_delays(self):
        s = ServicePlacementScenario()
        rng = np.random.default_rng(11)
        network = ServiceNetwork(s, rng)
        assert (network.sbs_distance >= s.ref_distance_m).all()
        assert (network.sbs_distance <= s.cell_radius_m + 1e-9).all()
        est = estimate_gain(network, rng, n_draws=500)
        assert math.isfinite(est.mean)


class TestEstimateGain:
    def scenario(self, **kw):
        base = dict(task_size_bits=(0.0, 0.0))  # isolate RTT terms
        base.update(kw)
        return ServicePlacementScenario(**base)

    def test_symmetric_parameters_give_zero_gain(self):
        s = self.scenario(rtt_cloud_s=(2e-3, 7e-3))
        network = ServiceNetwork(s, np.random.default_rng(0))
        est = estimate_gain(network, np.random.default_rng(1), n_draws=20_000)
        assert abs(est.mean) < 3.0 * est.stderr

    def test_rtt_gap_recovered(self):
        s = self.scenario()
        network = ServiceNetwork(s, np.random.default_rng(0))
        est = estimate_gain(network, np.random.default_rng(1), n_draws=20_000)
        # Uniform[20,40]ms vs Uniform[2,7]ms round trips: mean gap 25.5 ms.
        assert est.mean == pytest.approx(25.5e-3, abs=3.0 * est.stderr)

    def test_full_scenario_gains_positive(self):
        inst = build_service_env(ServicePlacementScenario(), seed=0, n_gain_draws=4000)
        assert (inst.gains > 0).all()
        assert (inst.gain_stderr > 0).all()


class TestBuildDemand:
    def test_zero_sigma_is_exact_zipf(self):
        rng = np.random.default_rng(0)
        D = build_demand(5, 3, zipf_s=0.8, lognorm_sigma=0.0, rng=rng, scale=10.0)
        ranks = np.arange(1, 6) ** -0.8
        expected = 10.0 * ranks / ranks.sum()
        for p in range(3):
            np.testing.assert_allclose(D[:, p], expected, rtol=1e-12)
        assert (np.diff(D[:, 0]) < 0).all()

    def test_zero_exponent_is_uniform(self):
        rng = np.random.default_rng(0)
        D = build_demand(4, 2, zipf_s=0.0, lognorm_sigma=0.0, rng=rng, scale=8.0)
        np.testing.assert_allclose(D, 2.0)

    def test_seeded_matrix_deterministic_and_rank_ordered(self):
        D1 = build_demand(10, 8, 0.8, 0.3, np.random.default_rng(5), scale=75.0)
        D2 = build_demand(10, 8, 0.8, 0.3, np.random.default_rng(5), scale=75.0)
        np.testing.assert_array_equal(D1, D2)
        assert (D1 > 0).all()
        assert D1.mean(axis=1).argmax() == 0
        assert normalized_demand(D1).max() == 1.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            build_demand(0, 3, 0.8, 0.3, np.random.default_rng(0))


class TestBuildServiceEnv:
    def test_seeded_instance_has_unique_noiseless_argmax(self):
        inst = build_service_env(ServicePlacementScenario(), seed=0, n_gain_draws=4000)
        means = inst.arms.contexts @ inst.env.theta_star
        assert (means == means.max()).sum() == 1
        assert inst.arms.dim == 8 and inst.arms.n_arms == 10
        assert inst.env.noise_scale == pytest.approx(np.abs(inst.gains).max() * inst.scenario.demand_noise)
        assert np.linalg.norm(inst.omega) == pytest.approx(1.0)
        assert (inst.omega > 0).all()

    def test_reproducible_build(self):
        a = build_service_env(ServicePlacementScenario(), seed=3, n_gain_draws=1000)
        b = build_service_env(ServicePlacementScenario(), seed=3, n_gain_draws=1000)
        np.testing.assert_array_equal(a.arms.contexts, b.arms.contexts)
        np.testing.assert_array_equal(a.omega, b.omega)

    def test_demand_noise_mode_scales_per_arm(self):
        inst = build_service_env(ServicePlacementScenario(), seed=0, n_gain_draws=1000,
                                 noise_mode="demand")
        np.testing.assert_allclose(
            inst.env.noise_scales, np.abs(inst.gains) * inst.scenario.demand_noise
        )

    def test_rejects_unknown_noise_mode(self):
        with pytest.raises(ValueError):
            build_service_env(ServicePlacementScenario(), seed=0, noise_mode="both")


class TestHeterogeneousView:
    def test_unit_scales_are_identity(self):
        arms, _ = build_synthetic(3, 0.3)
        views = heterogeneous_view(arms, np.ones(4))
        for v in views:
            np.testing.assert_array_equal(v.contexts, arms.contexts)

    def test_doubling_scales_expected_rewards(self):
        arms, env = build_synthetic(3, 0.3)
        view = heterogeneous_view(arms, [2.0])[0]
        means = arms.contexts @ env.theta_star
        np.testing.assert_allclose(view.contexts @ env.theta_star, 2.0 * means)
        assert np.argmax(view.contexts @ env.theta_star) == np.argmax(means)

    def test_mixed_scales_noiseless_run_same_best_arm(self):
        arms, env = build_synthetic(3, 0.4)
        noiseless = LinearEnvironment(env.theta_star, 0.0)
        conf = ConfidenceConfig(R=1.0, S=2.0, lam=1.0, delta_m=0.05, epsilon=0.0, n_agents=3)
        base = run_distlingape(noiseless, arms, conf, SyncPolicy(threshold=1.0), seed=0)
        views = heterogeneous_view(arms, [0.5, 1.0, 2.5])
        scaled = run_distlingape(noiseless, views, conf, SyncPolicy(threshold=1.0), seed=0)
        assert base.best_arm == scaled.best_arm == 0
        assert scaled.correct

    def test_rejects_nonpositive_scale(self):
        arms, _ = build_synthetic(2, 0.3)
        with pytest.raises(ValueError):
            heterogeneous_view(arms, [1.0, 0.0])


class TestUnits:
    def test_dbm_conversion(self):
        assert dbm_to_watt(0.0) == pytest.approx(1e-3)
        assert dbm_to_watt(10.0) == pytest.approx(1e-2)
        assert dbm_to_watt(-104.0) == pytest.approx(10 ** (-10.4) * 1e-3)

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            ServicePlacementScenario(rtt_sbs_s=(7e-3, 2e-3))
        with pytest.raises(ValueError):
            ServicePlacementScenario(rate_log_base="ln")
        with pytest.raises(ValueError):
            ServicePlacementScenario(n_cells=0)
