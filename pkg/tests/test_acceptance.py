"""Acceptance gate: one check per shipped claim, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.

Two checks are expected to fail and are left red on purpose; both trace to
published numbers, not to code behavior (details in README and the test
failure messages):

* C2: the 14.5 GHz NLOS bc90 entry (0.7 MHz) sits 11.2% from
  1/(50*10^-7.59) = 0.778 MHz, beyond the 10% consistency bound that all
  eleven other entries meet.
* C4: recovering PLE within +-0.10 from 650 samples needs sigma_S below
  5.6 dB (0.10 >= 2 standard errors); the NLOS tables carry 6.6-7.3 dB,
  so the per-seed joint pass probability is ~0.87-0.92 and a >=95/100 seed
  pass rate is statistically unreachable. The LOS groups pass.
"""

import hashlib
import math

import numpy as np
import pytest

import cmath

from inhchan.cli import main as cli_main
from inhchan.dispersion import TapSet, angular_spread, mean_delay, rms_delay_spread
from inhchan.estimator import fit_distance_sigma, fit_path_loss_xy, pearson
from inhchan.lspgen import (
    DropGenerator,
    GeneratorConfig,
    MultibandSampler,
    calibrate_zsa_mixture,
    sample_lsp,
)
from inhchan.params import (
    BAND_ORDER,
    ChannelState,
    FrequencyBand,
    ParamRegistry,
    builtin_table,
    cross_corr_matrix,
    interfreq_corr_matrix,
)
from inhchan.propagation import ConstantShadow, PathLossModel, fspl_db, path_loss_db

LOS, NLOS = ChannelState.LOS, ChannelState.NLOS
ALL_COMBOS = [(band, state) for band in BAND_ORDER for state in ChannelState]


def report(criterion, ok, detail):
    print(f"[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")


class TestC1FsplConsistency:
    def test_los_intercepts_within_1db_of_free_space(self):
        gaps = {}
        for band in BAND_ORDER:
            table = builtin_table(band, LOS)
            gaps[band.label] = abs(table.pl0_db - fspl_db(band.hz, 1.0))
        ok = all(gap <= 1.0 for gap in gaps.values())
        report("C1", ok, "LOS intercept vs FSPL(1 m) gaps [dB]: "
               + ", ".join(f"{k}: {v:.3f}" for k, v in gaps.items()))
        assert ok, gaps


class TestC2CoherenceBandwidthConsistency:
    @pytest.mark.parametrize("band,state", ALL_COMBOS,
                             ids=[f"{b.label}-{s.value}" for b, s in ALL_COMBOS])
    @pytest.mark.parametrize("name,divisor", [("bc50", 5.0), ("bc90", 50.0)])
    def test_entry_within_10_percent_of_formula(self, band, state, name, divisor):
        table = builtin_table(band, state)
        stored = getattr(table, f"{name}_hz")
        implied = 1.0 / (divisor * 10.0 ** table.ds_mu)
        deviation = abs(stored - implied) / stored
        ok = deviation <= 0.10
        report("C2", ok,
               f"{band.label} GHz {state.value} {name}: stored {stored / 1e6:.4g} MHz "
               f"vs formula {implied / 1e6:.4g} MHz, deviation {deviation:.4f}")
        assert ok, (
            f"{band.label} GHz {state.value} {name} deviates {deviation:.2%} from "
            f"1/({divisor:g}*10^{table.ds_mu}); the published value itself is "
            "inconsistent with the published delay-spread mean (the deviation is "
            "10.0% even when normalized by the formula value, so no reading of "
            "'within 10%' admits it)")


class TestC3DispersionOracles:
    def test_moments_match_brute_force_on_1000_tap_sets(self):
        # Near-zero spreads (single-tap draws) have no meaningful relative
        # error; those fall back to an absolute micro-degree floor.
        rng = np.random.default_rng(2026)
        worst_rel = 0.0
        degenerate = 0
        for _ in range(1000):
            n = int(rng.integers(1, 51))
            delays = rng.uniform(0.0, 900e-9, n)
            powers = rng.lognormal(0.0, 1.2, n)
            angles = rng.uniform(-180.0, 180.0, n)
            taps = TapSet(delays_s=delays, powers=powers)

            mean_brute = sum(t * p for t, p in zip(delays, powers)) / sum(powers)
            sq = sum((t - mean_brute) ** 2 * p for t, p in zip(delays, powers))
            rms_brute = math.sqrt(sq / sum(powers))
            resultant = abs(sum(p * cmath.exp(1j * math.radians(a))
                                for a, p in zip(angles, powers))) / sum(powers)
            as_brute = math.degrees(math.sqrt(-2.0 * math.log(min(resultant, 1.0))))

            for got, want, zero_floor in (
                    (mean_delay(taps), mean_brute, 1e-20),
                    (rms_delay_spread(taps), rms_brute, 1e-16),
                    (angular_spread(angles, powers), as_brute, 1e-5)):
                if abs(want) <= zero_floor:
                    degenerate += 1
                    assert abs(got - want) <= zero_floor
                else:
                    rel = abs(got - want) / abs(want)
                    worst_rel = max(worst_rel, rel)
                    assert rel <= 1e-10
        report("C3", True, f"1000 random tap sets: worst relative error "
               f"{worst_rel:.2e} (bound 1e-10), {degenerate} zero-spread cases "
               f"checked at the 1e-5 deg floor")


class TestC4RegressionRoundTrip:
    TOL_PL0, TOL_PLE, TOL_SIGMA = 1.0, 0.10, 0.5

    @pytest.mark.parametrize("band,state", ALL_COMBOS,
                             ids=[f"{b.label}-{s.value}" for b, s in ALL_COMBOS])
    def test_95_of_100_seeds_recover_table(self, band, state):
        table = builtin_table(band, state)
        passes = 0
        for seed in range(100):
            rng = np.random.default_rng([2604, BAND_ORDER.index(band),
                                          0 if state is LOS else 1, seed])
            d = 50.0 ** rng.random(650)
            pl = (table.pl0_db + 10.0 * table.ple * np.log10(d)
                  + rng.normal(0.0, table.sigma_s_db, 650))
            fit = fit_path_loss_xy(d, pl)
            passes += (abs(fit.pl0_db - table.pl0_db) <= self.TOL_PL0
                       and abs(fit.ple - table.ple) <= self.TOL_PLE
                       and abs(fit.sigma_s_db - table.sigma_s_db) <= self.TOL_SIGMA)
        ok = passes >= 95
        report("C4", ok, f"{band.label} GHz {state.value}: {passes}/100 seeds "
               f"within (+-{self.TOL_PL0} dB, +-{self.TOL_PLE}, +-{self.TOL_SIGMA} dB)")
        assert ok, (
            f"{band.label} GHz {state.value}: {passes}/100 seeds recovered all three "
            f"parameters; with sigma_S = {table.sigma_s_db} dB and n = 650 the PLE "
            f"standard error is {table.sigma_s_db / (math.sqrt(650) * 4.905):.4f}, "
            "so the +-0.10 bound is below 2 standard errors and a 95% joint pass "
            "rate is not attainable for the NLOS sigmas")


class TestC5CorrelationReproduction:
    N = 100_000
    TOL = 0.02

    @pytest.mark.parametrize("band,state", ALL_COMBOS,
                             ids=[f"{b.label}-{s.value}" for b, s in ALL_COMBOS])
    def test_within_band_entries(self, band, state):
        table = builtin_table(band, state)
        corr = cross_corr_matrix(band, state)
        rng = np.random.default_rng([2605, BAND_ORDER.index(band),
                                     0 if state is LOS else 1])
        samples = sample_lsp(table, corr, ConstantShadow(table.sigma_s_db), 10.0,
                             rng, size=self.N)
        columns = {"SF": samples.sf_db, "DS": samples.ds_log10s}
        if table.has_angular:
            columns["ASA"] = samples.asa_log10deg
            columns["ZSA"] = samples.zsa_log10deg
        worst = 0.0
        for i, a in enumerate(corr.labels):
            for j, b in enumerate(corr.labels):
                if j <= i:
                    continue
                err = abs(pearson(columns[a], columns[b]) - corr.values[i, j])
                worst = max(worst, err)
        ok = worst <= self.TOL
        report("C5", ok, f"{band.label} GHz {state.value} within-band: "
               f"max |error| {worst:.4f} over {self.N} samples")
        assert ok

    @pytest.mark.parametrize("state", [LOS, NLOS], ids=lambda s: s.value)
    def test_inter_band_matrices(self, state):
        tables = {b: builtin_table(b, state) for b in BAND_ORDER}
        per_band = {b: cross_corr_matrix(b, state) for b in BAND_ORDER}
        config = GeneratorConfig(bands=tuple(BAND_ORDER), state=state, n_drops=1,
                                 seed=0)
        sampler = MultibandSampler(tables, per_band,
                                   interfreq_corr_matrix("DS", state),
                                   interfreq_corr_matrix("SF", state), config)
        rng = np.random.default_rng([2606, 0 if state is LOS else 1])
        samples = sampler.sample(10.0, rng, size=self.N)
        worst = 0.0
        spot = {}
        for param, column in (("DS", lambda s: s.ds_log10s), ("SF", lambda s: s.sf_db)):
            matrix = interfreq_corr_matrix(param, state)
            for i, a in enumerate(BAND_ORDER):
                for j, b in enumerate(BAND_ORDER):
                    if j <= i:
                        continue
                    r = pearson(column(samples[a]), column(samples[b]))
                    err = abs(r - matrix.values[i, j])
                    worst = max(worst, err)
                    spot[f"{param} {a.label}-{b.label}"] = r
        ok = worst <= self.TOL
        report("C5", ok, f"{state.value} inter-band: max |error| {worst:.4f}; "
               f"SF 6.9-8.3 = {spot.get('SF 6.9-8.3'):.3f}")
        assert ok


class TestC6ZsaMixtureCalibration:
    def test_14_5_los_mixture(self):
        table = builtin_table(FrequencyBand.B14_5, LOS)
        mixture = calibrate_zsa_mixture(table)
        closed_form_ok = abs(mixture.component_sigma - 0.0267) <= 1e-4
        values = mixture.sample(np.random.default_rng(2607), 100_000)
        mean_ok = abs(float(np.mean(values)) - 1.04) <= 0.005
        sigma_ok = abs(float(np.std(values, ddof=1)) - 0.06) <= 0.005
        ok = closed_form_ok and mean_ok and sigma_ok
        report("C6", ok,
               f"component sigma {mixture.component_sigma:.5f} (closed form), "
               f"sampled pooled mean {np.mean(values):.4f} vs 1.04, "
               f"sampled pooled sigma {np.std(values, ddof=1):.4f} vs 0.06")
        assert ok


class TestC7TwoSlopeFloor:
    def test_no_violations_over_1e4_nlos_drops(self):
        config = GeneratorConfig(bands=tuple(BAND_ORDER), state=NLOS,
                                 n_drops=10_000, seed=2608)
        registry = ParamRegistry()
        los_models = {band: PathLossModel(registry.table(band, LOS).pl0_db,
                                          registry.table(band, LOS).ple)
                      for band in BAND_ORDER}
        generator = DropGenerator(config, registry)
        violations = 0
        for drop_id in range(config.n_drops):
            drop = generator.drop(drop_id)
            for band in BAND_ORDER:
                real = drop.bands[band]
                floor = path_loss_db(los_models[band], drop.distance_m)
                violations += (real.pl_db - real.lsp.sf_db) < floor - 1e-9
        ok = violations == 0
        report("C7", ok, f"{violations} floor violations over "
               f"{config.n_drops} drops x {len(BAND_ORDER)} bands")
        assert ok


class TestC8Determinism:
    def test_byte_identical_across_runs_and_worker_counts(self, tmp_path):
        base = ["generate", "--bands", "6.9,8.3,14.5", "--state", "NLOS",
                "--drops", "500", "--seed", "4242"]
        digests = []
        for name, extra in (("a", ["--workers", "1"]), ("b", ["--workers", "1"]),
                            ("c", ["--workers", "4"])):
            out = tmp_path / f"{name}.csv"
            assert cli_main(base + extra + ["-o", str(out)]) == 0
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        ok = len(set(digests)) == 1
        report("C8", ok, f"sha256 over two runs and two worker counts: "
               f"{digests[0][:16]}... ({'all equal' if ok else 'MISMATCH'})")
        assert ok


class TestC9DistanceSigmaRecovery:
    def test_recovers_coefficient_within_0_15(self):
        rng = np.random.default_rng(2609)
        d = 50.0 ** (1.0 - rng.random(10_000))
        residuals = rng.normal(0.0, 6.5 * np.log10(d))
        estimate = fit_distance_sigma(residuals, d)
        ok = abs(estimate - 6.5) <= 0.15
        report("C9", ok, f"recovered {estimate:.3f} vs 6.5 (+-0.15)")
        assert ok
