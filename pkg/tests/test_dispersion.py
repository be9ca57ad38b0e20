import cmath
import math

import numpy as np
import pytest

from inhchan.dispersion import (
    MAX_EXCESS_DELAY_S,
    CoherenceLevel,
    TapSet,
    angular_spread,
    asa_from_taps,
    coherence_bandwidth,
    mean_delay,
    rms_delay_spread,
    zsa_from_taps,
)

NS = 1e-9


def brute_mean_delay(delays, powers):
    num = sum(t * p for t, p in zip(delays, powers))
    return num / sum(powers)


def brute_rms_spread(delays, powers):
    tm = brute_mean_delay(delays, powers)
    num = sum((t - tm) ** 2 * p for t, p in zip(delays, powers))
    return math.sqrt(num / sum(powers))


def brute_angular_spread(angles, powers):
    acc = sum(p * cmath.exp(1j * math.radians(a)) for a, p in zip(angles, powers))
    r = abs(acc) / sum(powers)
    return math.degrees(math.sqrt(-2.0 * math.log(min(r, 1.0))))


def random_tap_set(rng, with_angles=True, max_taps=50):
    n = rng.integers(1, max_taps + 1)
    kwargs = {}
    if with_angles:
        kwargs = dict(azimuth_deg=rng.uniform(-180.0, 180.0, n),
                      zenith_deg=rng.uniform(-32.5, 32.5, n))
    return TapSet(delays_s=rng.uniform(0.0, 800.0) * NS * rng.random(n),
                  powers=rng.lognormal(0.0, 1.0, n), **kwargs)


class TestDelayMoments:
    def test_single_tap(self):
        taps = TapSet(delays_s=[5 * NS], powers=[1.0])
        assert mean_delay(taps) == pytest.approx(5 * NS)
        assert rms_delay_spread(taps) == pytest.approx(0.0, abs=1e-18)

    def test_equal_power_pair(self):
        taps = TapSet(delays_s=[0.0, 100 * NS], powers=[1.0, 1.0])
        assert mean_delay(taps) == pytest.approx(50 * NS)
        assert rms_delay_spread(taps) == pytest.approx(50 * NS)

    def test_weighted_pair(self):
        taps = TapSet(delays_s=[0.0, 100 * NS], powers=[1.0, 3.0])
        assert mean_delay(taps) == pytest.approx(75 * NS)
        # sqrt(E[tau^2] - tau_m^2) = sqrt(7500 - 5625) ns
        assert rms_delay_spread(taps) == pytest.approx(math.sqrt(1875) * NS, rel=1e-12)

    def test_empty_rejected(self):
        taps = TapSet(delays_s=[], powers=[])
        with pytest.raises(ValueError):
            mean_delay(taps)
        with pytest.raises(ValueError):
            rms_delay_spread(taps)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            taps = random_tap_set(rng, with_angles=False)
            assert mean_delay(taps) == pytest.approx(
                brute_mean_delay(taps.delays_s, taps.powers), rel=1e-12)
            assert rms_delay_spread(taps) == pytest.approx(
                brute_rms_spread(taps.delays_s, taps.powers), rel=1e-10, abs=1e-20)

    def test_second_moment_identity(self):
        # Independent computation path: sqrt(E[tau^2] - mean^2).
        rng = np.random.default_rng(8)
        for _ in range(100):
            taps = random_tap_set(rng, with_angles=False)
            w = taps.powers / taps.powers.sum()
            alt = math.sqrt(max(0.0, float(w @ taps.delays_s ** 2) - mean_delay(taps) ** 2))
            assert rms_delay_spread(taps) == pytest.approx(alt, rel=1e-9, abs=1e-18)

    def test_power_scale_and_permutation_invariance(self):
        rng = np.random.default_rng(9)
        taps = random_tap_set(rng, with_angles=False, max_taps=20)
        scaled = TapSet(delays_s=taps.delays_s, powers=taps.powers * 73.5)
        perm = rng.permutation(len(taps))
        shuffled = TapSet(delays_s=taps.delays_s[perm], powers=taps.powers[perm])
        for other in (scaled, shuffled):
            assert mean_delay(other) == pytest.approx(mean_delay(taps), rel=1e-12)
            assert rms_delay_spread(other) == pytest.approx(rms_delay_spread(taps), rel=1e-12)

    def test_time_shift_covariance(self):
        rng = np.random.default_rng(10)
        taps = random_tap_set(rng, with_angles=False, max_taps=20)
        delta = 250 * NS
        shifted = TapSet(delays_s=taps.delays_s + delta, powers=taps.powers)
        assert mean_delay(shifted) == pytest.approx(mean_delay(taps) + delta, rel=1e-12)
        assert rms_delay_spread(shifted) == pytest.approx(
            rms_delay_spread(taps), rel=1e-9, abs=1e-18)


class TestTapSetValidation:
    def test_rejects_non_positive_power(self):
        with pytest.raises(ValueError):
            TapSet(delays_s=[1 * NS], powers=[0.0])

    def test_rejects_negative_delay(self):
        with pytest.raises(ValueError):
            TapSet(delays_s=[-1 * NS], powers=[1.0])

    def test_rejects_delay_beyond_max_excess(self):
        with pytest.raises(ValueError):
            TapSet(delays_s=[MAX_EXCESS_DELAY_S * 1.01], powers=[1.0])

    def test_rejects_mismatched_angles(self):
        with pytest.raises(ValueError):
            TapSet(delays_s=[1 * NS, 2 * NS], powers=[1.0, 1.0], azimuth_deg=[0.0])


class TestCoherenceBandwidth:
    def test_matches_published_0_8_mhz_row(self):
        tau = 10.0 ** -7.60
        assert coherence_bandwidth(tau, CoherenceLevel.R90) == pytest.approx(0.796e6, rel=1e-3)
        assert coherence_bandwidth(tau, CoherenceLevel.R50) == pytest.approx(7.96e6, rel=1e-3)

    def test_reciprocal_scaling(self):
        b1 = coherence_bandwidth(25 * NS, CoherenceLevel.R90)
        b2 = coherence_bandwidth(50 * NS, CoherenceLevel.R90)
        assert b1 == pytest.approx(2.0 * b2, rel=1e-12)

    def test_level_ratio_exact(self):
        tau = 33.3 * NS
        assert coherence_bandwidth(tau, CoherenceLevel.R50) == pytest.approx(
            10.0 * coherence_bandwidth(tau, CoherenceLevel.R90), rel=1e-12)

    def test_rejects_non_positive_spread(self):
        with pytest.raises(ValueError):
            coherence_bandwidth(0.0, CoherenceLevel.R50)


class TestAngularSpread:
    def test_single_component_zero(self):
        assert angular_spread([123.0], [2.0]) == pytest.approx(0.0, abs=1e-6)

    def test_symmetric_pair_closed_form(self):
        # r = cos(30 deg), AS = sqrt(-2 ln r) = 0.5364 rad = 30.73 deg.
        expected = math.degrees(math.sqrt(-2.0 * math.log(math.cos(math.radians(30)))))
        assert expected == pytest.approx(30.73, abs=0.005)
        assert angular_spread([30.0, -30.0], [1.0, 1.0]) == pytest.approx(expected, rel=1e-12)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(11)
        angles = rng.uniform(-60.0, 60.0, 10)
        powers = rng.lognormal(0.0, 0.5, 10)
        base = angular_spread(angles, powers)
        for shift in (17.0, -123.4, 360.0):
            assert angular_spread(angles + shift, powers) == pytest.approx(base, rel=1e-9)

    def test_power_scale_invariance(self):
        rng = np.random.default_rng(12)
        angles = rng.uniform(-90.0, 90.0, 8)
        powers = rng.lognormal(0.0, 0.5, 8)
        assert angular_spread(angles, powers * 1e6) == pytest.approx(
            angular_spread(angles, powers), rel=1e-12)

    def test_monotone_in_two_tap_half_angle(self):
        spreads = [angular_spread([phi, -phi], [1.0, 1.0]) for phi in np.linspace(1.0, 89.0, 45)]
        assert all(a < b for a, b in zip(spreads, spreads[1:]))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = rng.integers(1, 40)
            angles = rng.uniform(-180.0, 180.0, n)
            powers = rng.lognormal(0.0, 1.0, n)
            assert angular_spread(angles, powers) == pytest.approx(
                brute_angular_spread(angles, powers), rel=1e-10, abs=1e-5)

    def test_isotropic_rejected(self):
        with pytest.raises(ValueError, match="isotropic"):
            angular_spread([0.0, 90.0, 180.0, 270.0], [1.0, 1.0, 1.0, 1.0])

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            angular_spread([0.0, 10.0], [1.0])


class TestTapSetSpreads:
    def test_single_tap_zero_both(self):
        taps = TapSet(delays_s=[5 * NS], powers=[1.0], azimuth_deg=[45.0], zenith_deg=[10.0])
        assert asa_from_taps(taps) == pytest.approx(0.0, abs=1e-6)
        assert zsa_from_taps(taps) == pytest.approx(0.0, abs=1e-6)

    def test_azimuth_pair_zenith_flat(self):
        taps = TapSet(delays_s=[0.0, 10 * NS], powers=[1.0, 1.0],
                      azimuth_deg=[30.0, -30.0], zenith_deg=[0.0, 0.0])
        assert asa_from_taps(taps) == pytest.approx(30.73, abs=0.005)
        assert zsa_from_taps(taps) == pytest.approx(0.0, abs=1e-9)

    def test_power_rescale_leaves_spreads(self):
        rng = np.random.default_rng(14)
        taps = random_tap_set(rng)
        scaled = TapSet(delays_s=taps.delays_s, powers=taps.powers * 3.7,
                        azimuth_deg=taps.azimuth_deg, zenith_deg=taps.zenith_deg)
        assert asa_from_taps(scaled) == pytest.approx(asa_from_taps(taps), rel=1e-12)
        assert zsa_from_taps(scaled) == pytest.approx(zsa_from_taps(taps), rel=1e-12)

    def test_missing_angles_rejected(self):
        taps = TapSet(delays_s=[1 * NS], powers=[1.0])
        with pytest.raises(ValueError):
            asa_from_taps(taps)
        with pytest.raises(ValueError):
            zsa_from_taps(taps)
