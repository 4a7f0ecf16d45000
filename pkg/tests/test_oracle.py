"""Throughput estimators, profile model, and CSV interfaces."""

import logging

import numpy as np
import pytest

from slicebench import oracle, phy
from slicebench.errors import ConfigError, DomainError
from slicebench.oracle import (
    HybridWeight,
    McsProfile,
    ThroughputTrace,
    hybrid_throughput,
    practical_throughput,
    synthesize_profile,
    t_mcs,
    theoretical_throughput,
)

CFG = phy.RadioConfig()


def hand_t_mcs(prbs: int, mcs: int, bler: float) -> float:
    """Independent spelled-out evaluation of the rate formula (Mbps)."""
    entry = phy.mcs_params(mcs)
    value = (
        (prbs / 106)
        * 12
        * 14
        * 2000
        * entry.qm
        * (entry.code_rate_x1024 / 1024)
        * 1
        * (104 / 140)
        * (1 - 0.14)
        * (1 - bler)
    )
    return value / 1e6


class TestTmcs:
    def test_top_mcs_full_grid(self):
        got = t_mcs(106, 28, 0.0, CFG)
        assert got == pytest.approx(hand_t_mcs(106, 28, 0.0), rel=1e-9)
        assert got == pytest.approx(1.192347, rel=1e-9)

    def test_bottom_mcs_full_grid(self):
        got = t_mcs(106, 6, 0.0, CFG)
        assert got == pytest.approx(hand_t_mcs(106, 6, 0.0), rel=1e-9)
        # 672000 * (449/1024) * (104/140) * 0.86 = 188243.25 bit/s
        assert got == pytest.approx(0.18824325, rel=1e-9)

    def test_half_allocation_halves(self):
        assert t_mcs(53, 28, 0.0, CFG) == pytest.approx(t_mcs(106, 28, 0.0, CFG) / 2, rel=1e-12)

    def test_linear_in_prbs_and_bler(self):
        base = t_mcs(106, 20, 0.0, CFG)
        for prbs in (0, 1, 27, 53, 106):
            assert t_mcs(prbs, 20, 0.0, CFG) == pytest.approx(base * prbs / 106, rel=1e-12)
        for bler in (0.0, 0.1, 0.5, 1.0):
            assert t_mcs(106, 20, bler, CFG) == pytest.approx(base * (1 - bler), rel=1e-12)

    def test_grid_scaled_mode(self):
        assert t_mcs(106, 28, 0.0, CFG, grid_scaled=True) == pytest.approx(
            106 * t_mcs(106, 28, 0.0, CFG), rel=1e-12
        )

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            t_mcs(107, 28, 0.0, CFG)
        with pytest.raises(DomainError):
            t_mcs(-1, 28, 0.0, CFG)
        with pytest.raises(DomainError):
            t_mcs(106, 5, 0.0, CFG)
        with pytest.raises(DomainError):
            t_mcs(106, 28, 1.5, CFG)


def point_mass_profile(mcs: int, prx: float = -10.0) -> McsProfile:
    dist = np.zeros((1, oracle.N_MCS))
    dist[0, mcs - phy.MCS_MIN] = 1.0
    return McsProfile(prx_grid=np.array([prx]), dist=dist)


class TestTheoretical:
    def test_point_mass_equals_t_mcs(self):
        prof = point_mass_profile(28)
        zero_bler = np.zeros(oracle.N_MCS)
        assert theoretical_throughput(-10.0, 106, prof, CFG, zero_bler) == t_mcs(
            106, 28, 0.0, CFG
        )

    def test_uniform_two_mcs_average(self):
        dist = np.zeros((1, oracle.N_MCS))
        dist[0, 0] = 0.5  # MCS 6
        dist[0, -1] = 0.5  # MCS 28
        prof = McsProfile(prx_grid=np.array([-10.0]), dist=dist)
        got = theoretical_throughput(-10.0, 106, prof, CFG, np.zeros(oracle.N_MCS))
        # (0.18824325 + 1.192347) / 2, frozen from the hand evaluations above
        assert got == pytest.approx(0.690295125, rel=1e-9)

    def test_matches_brute_force_sum(self):
        rng = np.random.default_rng(3)
        weights = np.zeros(oracle.N_MCS)
        weights[[2, 9, 17]] = (0.2, 0.3, 0.5)
        prof = McsProfile(prx_grid=np.array([-12.0]), dist=weights[None, :])
        bler = rng.uniform(0.0, 0.3, oracle.N_MCS)
        for prbs in (1, 53, 106):
            brute = sum(
                float(w) * t_mcs(prbs, phy.MCS_MIN + j, bler[j], CFG)
                for j, w in enumerate(weights)
            )
            got = theoretical_throughput(-12.0, prbs, prof, CFG, bler)
            assert got == pytest.approx(brute, abs=1e-12, rel=1e-12)

    def test_monotone_in_prbs(self):
        prof = oracle.default_profile(CFG)
        for prx in (-23.0, -15.0, -7.0):
            values = [theoretical_throughput(prx, p, prof, CFG) for p in range(0, 107)]
            assert all(a <= b for a, b in zip(values, values[1:]))

    def test_bounded_by_max_mcs(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            w = rng.dirichlet(np.ones(oracle.N_MCS))
            prof = McsProfile(prx_grid=np.array([-9.0]), dist=w[None, :])
            got = theoretical_throughput(-9.0, 70, prof, CFG, np.zeros(oracle.N_MCS))
            assert got <= t_mcs(70, 28, 0.0, CFG) * (1 + 1e-12)

    def test_nearest_grid_point_lookup(self):
        dist = np.zeros((2, oracle.N_MCS))
        dist[0, 0] = 1.0
        dist[1, -1] = 1.0
        prof = McsProfile(prx_grid=np.array([-20.0, -10.0]), dist=dist)
        zero = np.zeros(oracle.N_MCS)
        low = theoretical_throughput(-19.0, 106, prof, CFG, zero)
        high = theoretical_throughput(-11.0, 106, prof, CFG, zero)
        assert low == t_mcs(106, 6, 0.0, CFG)
        assert high == t_mcs(106, 28, 0.0, CFG)
        # tie breaks to the lower grid point
        tie = theoretical_throughput(-15.0, 106, prof, CFG, zero)
        assert tie == low
        # extrapolation clamps to the nearest edge
        assert theoretical_throughput(-40.0, 106, prof, CFG, zero) == low
        assert theoretical_throughput(0.0, 106, prof, CFG, zero) == high


class TestPractical:
    def test_single_point_proportional(self):
        trace = ThroughputTrace(np.array([-10.0]), np.array([20.0]))
        assert practical_throughput(-10.0, 53, trace) == pytest.approx(10.0, rel=1e-12)

    def test_linear_midpoint(self):
        trace = ThroughputTrace(np.array([-12.0, -10.0]), np.array([18.0, 20.0]))
        assert practical_throughput(-11.0, 106, trace) == pytest.approx(19.0, rel=1e-12)

    def test_clamps_to_edges(self):
        trace = ThroughputTrace(np.array([-12.0, -10.0]), np.array([18.0, 20.0]))
        assert practical_throughput(-30.0, 53, trace) == pytest.approx(9.0, rel=1e-12)
        assert practical_throughput(0.0, 106, trace) == pytest.approx(20.0, rel=1e-12)

    def test_reproduces_grid_points_at_full_allocation(self):
        trace = oracle.default_trace(CFG)
        for prx, mbps in zip(trace.prx_grid, trace.mbps_at_full):
            assert practical_throughput(float(prx), 106, trace) == mbps

    def test_non_monotone_trace_warns_but_loads(self, caplog):
        with caplog.at_level(logging.WARNING, logger="slicebench.oracle"):
            ThroughputTrace(np.array([-12.0, -11.0, -10.0]), np.array([18.0, 17.0, 20.0]))
        assert any("not monotone" in r.message for r in caplog.records)


class TestHybrid:
    def setup_method(self):
        self.profile = oracle.default_profile(CFG)
        self.trace = oracle.default_trace(CFG, self.profile)

    def test_endpoints_bit_identical(self):
        for prx in (-23.0, -15.5, -7.0):
            for prbs in (0, 53, 106):
                assert hybrid_throughput(
                    prx, prbs, self.trace, self.profile, HybridWeight(1.0), CFG
                ) == practical_throughput(prx, prbs, self.trace)
                assert hybrid_throughput(
                    prx, prbs, self.trace, self.profile, HybridWeight(0.0), CFG
                ) == theoretical_throughput(prx, prbs, self.profile, CFG)

    def test_half_is_arithmetic_mean(self):
        p = practical_throughput(-13.0, 70, self.trace)
        t = theoretical_throughput(-13.0, 70, self.profile, CFG)
        got = hybrid_throughput(-13.0, 70, self.trace, self.profile, HybridWeight(0.5), CFG)
        assert got == pytest.approx((p + t) / 2, abs=1e-12)

    def test_affine_between_components(self):
        p = practical_throughput(-13.0, 70, self.trace)
        t = theoretical_throughput(-13.0, 70, self.profile, CFG)
        lo, hi = min(p, t), max(p, t)
        for lam in np.linspace(0.0, 1.0, 11):
            got = hybrid_throughput(-13.0, 70, self.trace, self.profile, float(lam), CFG)
            assert lo - 1e-12 <= got <= hi + 1e-12

    def test_weight_validation(self):
        with pytest.raises(ConfigError):
            HybridWeight(1.5)
        with pytest.raises(ConfigError):
            HybridWeight(-0.1)


class TestSynthesizeProfile:
    def test_rows_are_simplex(self):
        prof = synthesize_profile(oracle.default_prx_grid(CFG), 1.375, 1.5)
        sums = prof.dist.sum(axis=1)
        assert np.all(np.abs(sums - 1.0) <= 1e-9)
        assert np.all(prof.dist >= 0.0)

    def test_tiny_spread_gives_point_mass(self):
        prof = synthesize_profile(np.array([-23.0, -15.0]), slope=1.0, spread=1e-6)
        # mu at the second point is 6 + 8 = 14 -> all mass on MCS 14
        assert prof.dist[1, 14 - phy.MCS_MIN] == pytest.approx(1.0, abs=1e-12)

    def test_mode_at_top_mcs_when_mean_saturates(self):
        grid = oracle.default_prx_grid(CFG)
        prof = synthesize_profile(grid, slope=(28 - 6) / 16.0, spread=2.0)
        assert int(np.argmax(prof.dist[-1])) == 28 - phy.MCS_MIN

    def test_spread_validation(self):
        with pytest.raises(DomainError):
            synthesize_profile(np.array([-10.0]), slope=1.0, spread=0.0)


class TestCsvInterfaces:
    def test_profile_roundtrip(self, tmp_path):
        prof = oracle.default_profile(CFG)
        path = tmp_path / "profile.csv"
        prof.to_csv(str(path))
        loaded = McsProfile.from_csv(str(path))
        assert np.array_equal(loaded.prx_grid, prof.prx_grid)
        assert np.array_equal(loaded.dist, prof.dist)

    def test_profile_header_validation(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prx,mcs,p\n-10,6,1.0\n")
        with pytest.raises(ConfigError, match="header"):
            McsProfile.from_csv(str(path))

    def test_profile_simplex_validation(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prx_db,mcs,probability\n-10,6,0.5\n-10,7,0.4\n")
        with pytest.raises(ConfigError, match="sum to 1"):
            McsProfile.from_csv(str(path))

    def test_trace_roundtrip(self, tmp_path):
        trace = oracle.default_trace(CFG)
        path = tmp_path / "trace.csv"
        trace.to_csv(str(path))
        loaded = ThroughputTrace.from_csv(str(path))
        assert np.array_equal(loaded.prx_grid, trace.prx_grid)
        assert np.array_equal(loaded.mbps_at_full, trace.mbps_at_full)

    def test_trace_header_validation(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prx_db,mbps\n-10,20\n")
        with pytest.raises(ConfigError, match="header"):
            ThroughputTrace.from_csv(str(path))

    def test_bler_override(self, tmp_path):
        path = tmp_path / "bler.csv"
        path.write_text("mcs,bler\n6,0.2\n28,0.05\n")
        bler = oracle.load_bler_csv(str(path))
        assert bler[0] == 0.2
        assert bler[-1] == 0.05
        assert bler[1] == oracle.DEFAULT_BLER

    def test_bler_validation(self, tmp_path):
        path = tmp_path / "bler.csv"
        path.write_text("mcs,bler\n5,0.2\n")
        with pytest.raises(ConfigError, match="unsupported"):
            oracle.load_bler_csv(str(path))
        path.write_text("mcs,bler\n6,1.2\n")
        with pytest.raises(ConfigError):
            oracle.load_bler_csv(str(path))

    def test_empty_inputs_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("prx_db,mcs,probability\n")
        with pytest.raises(ConfigError, match="no data"):
            McsProfile.from_csv(str(path))
        path.write_text("prx_db,mbps_full_allocation\n")
        with pytest.raises(ConfigError, match="no data"):
            ThroughputTrace.from_csv(str(path))


def test_default_trace_tracks_theoretical():
    prof = oracle.default_profile(CFG)
    trace = oracle.default_trace(CFG, prof, efficiency=0.85)
    for prx in prof.prx_grid:
        theo = theoretical_throughput(float(prx), 106, prof, CFG)
        assert trace.interpolate(float(prx)) == pytest.approx(0.85 * theo, rel=1e-12)
