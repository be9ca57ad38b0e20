"""Command-line surface: tables | generate | fit | validate | plotdata.

Exit codes are a stable contract: 0 success, 1 usage or input validation,
2 I/O failure, 3 validation-suite failure. A JSON config file can mirror
any long flag of a subcommand via `--config`; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import estimator, lspgen, recordio
from .dispersion import TapSet, angular_spread, rms_delay_spread
from .params import (
    BAND_ORDER,
    ChannelState,
    FrequencyBand,
    ParamRegistry,
    table_audit,
)
from .propagation import ConstantShadow, PathLossModel, path_loss_db
from .recordio import RecordRow, RecordSchemaError, format_sig

PROG = "inhchan"

_STATES = (ChannelState.LOS, ChannelState.NLOS)

FIT_FIELDS = ("band_ghz", "state", "n", "pl0_db", "ple", "sigma_s_db",
              "sigma_dist_db_per_decade", "ds_mu", "ds_sigma",
              "asa_mu", "asa_sigma", "zsa_mu", "zsa_sigma",
              "r_asa_ds", "r_asa_sf", "r_ds_sf", "r_zsa_sf", "r_zsa_ds", "r_zsa_asa")

TABLE_FIELDS = ("band_ghz", "state", "pl0_db", "ple", "sigma_s_db",
                "ds_mu_log10s", "ds_sigma_log10s", "bc50_hz", "bc90_hz",
                "asa_mu_log10deg", "asa_sigma_log10deg",
                "zsa_mu_log10deg", "zsa_sigma_log10deg")

PLOT_KINDS = ("pl_vs_d", "sf_qq", "ds_qq", "asa_qq", "zsa_qq", "spread_vs_d")

# Round-trip tolerances for the validation suite at its default sample count
# (10000). Normal-theory margins of at least four standard errors for the
# widest-sigma table, so a correct implementation fails a check with
# negligible probability.
VALIDATE_TOL = {
    "pl0_db": 0.75,
    "ple": 0.075,
    "sigma_s_db": 0.30,
    "moment_mu": 0.015,
    "moment_sigma_rel": 0.03,
    "corr": 0.04,
    "mixture_mu": 0.01,
    "mixture_sigma": 0.01,
}


class UsageError(Exception):
    """Bad flags or invalid input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _band_list(text: str) -> List[FrequencyBand]:
    bands = []
    for token in text.split(","):
        token = token.strip()
        if token:
            bands.append(FrequencyBand.from_label(token))
    if not bands:
        raise UsageError("no bands given")
    return bands


def _out_stream(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _apply_config_defaults(argv: List[str]) -> List[str]:
    """Merge `--config FILE` values into argv as trailing flags.

    Only keys whose flags are absent from argv are appended, so explicit
    flags win on conflict.
    """
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return argv
    try:
        with open(path, "r", encoding="utf-8") as stream:
            values = json.load(stream)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object of flag values")
    merged = list(argv)
    aliases = {"out": ("-o",)}
    for key, value in values.items():
        if key == "config":
            continue
        flag = "--" + key.replace("_", "-")
        spellings = (flag,) + aliases.get(key, ())
        if any(tok == s or tok.startswith(s + "=")
               for tok in argv for s in spellings):
            continue
        if isinstance(value, bool):
            if value:
                merged.append(flag)
        elif isinstance(value, list):
            merged.extend([flag, ",".join(str(v) for v in value)])
        else:
            merged.extend([flag, str(value)])
    return merged


# ---------------------------------------------------------------------------
# tables


def cmd_tables(args) -> int:
    bands = _band_list(args.band) if args.band else list(BAND_ORDER)
    states = [ChannelState.from_label(args.state)] if args.state else list(_STATES)
    registry = _registry_from(args)
    stream, close = _out_stream(args.out)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        if args.what == "params":
            writer.writerow(TABLE_FIELDS)
            for band in bands:
                for state in states:
                    t = registry.table(band, state)
                    writer.writerow([
                        band.label, state.value, format_sig(t.pl0_db), format_sig(t.ple),
                        format_sig(t.sigma_s_db), format_sig(t.ds_mu), format_sig(t.ds_sigma),
                        format_sig(t.bc50_hz), format_sig(t.bc90_hz),
                        format_sig(t.asa_mu), format_sig(t.asa_sigma),
                        format_sig(t.zsa_mu), format_sig(t.zsa_sigma)])
        elif args.what == "corr":
            writer.writerow(("band_ghz", "state", "axis_a", "axis_b", "r"))
            for band in bands:
                for state in states:
                    m = registry.cross_corr(band, state)
                    for i, a in enumerate(m.labels):
                        for j, b in enumerate(m.labels):
                            if j > i:
                                writer.writerow([band.label, state.value, a, b,
                                                 format_sig(m.values[i, j])])
        else:  # interfreq
            writer.writerow(("param", "state", "band_a_ghz", "band_b_ghz", "r"))
            for param in ("DS", "SF"):
                for state in states:
                    m = registry.interfreq(param, state)
                    for i, a in enumerate(m.labels):
                        for j, b in enumerate(m.labels):
                            if j > i:
                                writer.writerow([param, state.value, a, b,
                                                 format_sig(m.values[i, j])])
    finally:
        if close:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# generate


def _registry_from(args) -> ParamRegistry:
    overrides = None
    if getattr(args, "table_override", None):
        try:
            overrides = recordio.load_table_overrides(args.table_override)
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad table override file: {exc}") from None
    return ParamRegistry(overrides)


def _chunk_rows(payload) -> List[RecordRow]:
    config, overrides, start, stop = payload
    gen = lspgen.DropGenerator(config, ParamRegistry(overrides))
    rows: List[RecordRow] = []
    for drop_id in range(start, stop):
        rows.extend(recordio.rows_from_drop(gen.drop(drop_id)))
    return rows


def cmd_generate(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required; generation never draws silent entropy")
    try:
        config = lspgen.GeneratorConfig(
            bands=tuple(_band_list(args.bands)),
            state=ChannelState.from_label(args.state),
            n_drops=args.drops, seed=args.seed,
            d_min_m=args.dmin, d_max_m=args.dmax,
            zsa_mixture=args.zsa_mixture, sigma_min_db=args.sigma_min,
            angular_interfreq_corr=args.angular_xcorr)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    overrides = None
    if args.table_override:
        try:
            overrides = recordio.load_table_overrides(args.table_override)
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad table override file: {exc}") from None

    workers = max(1, args.workers)
    stream, close = _out_stream(args.out)
    try:
        if workers == 1:
            gen = lspgen.DropGenerator(config, ParamRegistry(overrides))
            rows = (row for drop_id in range(config.n_drops)
                    for row in recordio.rows_from_drop(gen.drop(drop_id)))
            recordio.write_records(rows, stream, fmt=args.format)
        else:
            bounds = np.linspace(0, config.n_drops, workers + 1).astype(int)
            payloads = [(config, overrides, int(a), int(b))
                        for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(_chunk_rows, payloads))
            rows = [row for chunk in chunks for row in chunk]
            recordio.write_records(rows, stream, fmt=args.format)
    finally:
        if close:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# fit


@dataclass
class _Group:
    d: np.ndarray
    pl: np.ndarray
    sf: Optional[np.ndarray]
    ds: np.ndarray
    asa: Optional[np.ndarray]
    zsa: Optional[np.ndarray]


def _groups_from_rows(rows: List[RecordRow]):
    rows = [r for r in rows
            if r.d_m > 0 and math.isfinite(r.pl_db) and math.isfinite(r.sf_db)]
    keys = sorted({(r.band, r.state) for r in rows},
                  key=lambda k: (k[0].hz, k[1].value))
    for band, state in keys:
        sel = [r for r in rows if r.band is band and r.state is state]
        angular = all(r.asa_log10deg is not None and r.zsa_log10deg is not None
                      for r in sel)
        yield band, state, _Group(
            d=np.array([r.d_m for r in sel]),
            pl=np.array([r.pl_db for r in sel]),
            sf=np.array([r.sf_db for r in sel]),
            ds=np.array([r.ds_log10s for r in sel]),
            asa=np.array([r.asa_log10deg for r in sel]) if angular else None,
            zsa=np.array([r.zsa_log10deg for r in sel]) if angular else None)


def _groups_from_raw(records) -> list:
    rows = []
    for rec in records:
        taps = estimator.threshold_pdp(rec.pdp)
        if taps.delays_s.size < 2:
            print(f"warning: record {rec.record_id}: fewer than 2 taps above "
                  "threshold, skipped", file=sys.stderr)
            continue
        linear = 10.0 ** (taps.powers_db / 10.0)
        spread = rms_delay_spread(TapSet(delays_s=taps.delays_s, powers=linear))
        if spread <= 0:
            print(f"warning: record {rec.record_id}: degenerate delay spread, skipped",
                  file=sys.stderr)
            continue
        if rec.beams is not None:
            omni = estimator.synth_omni_power(rec.beams)
        else:
            omni = float(np.sum(linear))
        pl = rec.tx_ref_db - 10.0 * math.log10(omni)
        asa = zsa = None
        if rec.beams is not None and len(rec.beams) >= 2:
            try:
                asa_deg = angular_spread(rec.beams.azimuth_deg, rec.beams.powers)
                zsa_deg = angular_spread(rec.beams.zenith_deg, rec.beams.powers)
            except ValueError:
                asa_deg = zsa_deg = 0.0
            if asa_deg > 0 and zsa_deg > 0:
                asa = math.log10(asa_deg)
                zsa = math.log10(zsa_deg)
        rows.append((rec.band, rec.state, rec.d_m, pl, math.log10(spread), asa, zsa))

    keys = sorted({(band, state) for band, state, *_ in rows},
                  key=lambda k: (k[0].hz, k[1].value))
    out = []
    for band, state in keys:
        sel = [r for r in rows if r[0] is band and r[1] is state]
        angular = all(r[5] is not None and r[6] is not None for r in sel)
        out.append((band, state, _Group(
            d=np.array([r[2] for r in sel]),
            pl=np.array([r[3] for r in sel]),
            sf=None,
            ds=np.array([r[4] for r in sel]),
            asa=np.array([r[5] for r in sel]) if angular else None,
            zsa=np.array([r[6] for r in sel]) if angular else None)))
    return out


def _fit_group_row(band: FrequencyBand, state: ChannelState, g: _Group):
    fit = estimator.fit_path_loss_xy(g.d, g.pl)
    shadow = g.sf if g.sf is not None else fit.residuals_db
    row = {"band_ghz": band.label, "state": state.value, "n": str(g.d.size),
           "pl0_db": format_sig(fit.pl0_db), "ple": format_sig(fit.ple),
           "sigma_s_db": format_sig(fit.sigma_s_db)}
    beyond = g.d > 1.0
    if beyond.sum() >= 3:
        row["sigma_dist_db_per_decade"] = format_sig(
            estimator.fit_distance_sigma(shadow[beyond], g.d[beyond]))
    ds_fit = estimator.fit_lognormal(10.0 ** g.ds)
    row["ds_mu"] = format_sig(ds_fit.mu)
    row["ds_sigma"] = format_sig(ds_fit.sigma)
    columns = {"SF": shadow, "DS": g.ds}
    if g.asa is not None and g.zsa is not None:
        asa_fit = estimator.fit_lognormal(10.0 ** g.asa)
        zsa_fit = estimator.fit_lognormal(10.0 ** g.zsa)
        row.update(asa_mu=format_sig(asa_fit.mu), asa_sigma=format_sig(asa_fit.sigma),
                   zsa_mu=format_sig(zsa_fit.mu), zsa_sigma=format_sig(zsa_fit.sigma))
        columns.update(ASA=g.asa, ZSA=g.zsa)
    for name_a, name_b in (("ASA", "DS"), ("ASA", "SF"), ("DS", "SF"),
                           ("ZSA", "SF"), ("ZSA", "DS"), ("ZSA", "ASA")):
        if name_a in columns and name_b in columns:
            key = f"r_{name_a.lower()}_{name_b.lower()}"
            row[key] = format_sig(estimator.pearson(columns[name_a], columns[name_b]))
    return [row.get(field, "") for field in FIT_FIELDS]


def cmd_fit(args) -> int:
    if recordio.is_raw_record_file(args.input):
        groups = _groups_from_raw(recordio.read_raw_records(args.input))
    else:
        rows = recordio.read_records(args.input)
        groups = list(_groups_from_rows(rows))

    out_rows = []
    for band, state, group in groups:
        if group.d.size < 3:
            print(f"warning: group {band.label} GHz {state.value} has "
                  f"{group.d.size} usable samples (< 3), skipped", file=sys.stderr)
            continue
        try:
            out_rows.append(_fit_group_row(band, state, group))
        except ValueError as exc:
            print(f"warning: group {band.label} GHz {state.value} skipped: {exc}",
                  file=sys.stderr)

    stream, close = _out_stream(args.out)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(FIT_FIELDS)
        writer.writerows(out_rows)
    finally:
        if close:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# validate


def _check(checks, name, ok, detail):
    checks.append((name, bool(ok), detail))


def _validate_tables(checks, registry):
    for band in BAND_ORDER:
        for state in _STATES:
            for audit in table_audit(registry.table(band, state), band, state):
                _check(checks, f"{audit.check}[{band.label},{state.value}]",
                       audit.passed,
                       f"deviation {audit.deviation:.4f} vs limit {audit.limit:g} "
                       f"({audit.message})")


def _validate_regression(checks, registry, n, seed):
    for gi, (band, state) in enumerate(
            (b, s) for b in BAND_ORDER for s in _STATES):
        t = registry.table(band, state)
        rng = np.random.default_rng([seed, 1, gi])
        u = rng.random(n)
        dist = 1.0 * (50.0 ** u)
        x = 10.0 * np.log10(dist)
        pl = t.pl0_db + t.ple * x + rng.normal(0.0, t.sigma_s_db, n)
        fit = estimator.fit_path_loss_xy(dist, pl)
        ok = (abs(fit.pl0_db - t.pl0_db) <= VALIDATE_TOL["pl0_db"]
              and abs(fit.ple - t.ple) <= VALIDATE_TOL["ple"]
              and abs(fit.sigma_s_db - t.sigma_s_db) <= VALIDATE_TOL["sigma_s_db"])
        _check(checks, f"pl_round_trip[{band.label},{state.value}]", ok,
               f"pl0 {fit.pl0_db:.2f}/{t.pl0_db} ple {fit.ple:.3f}/{t.ple} "
               f"sigma {fit.sigma_s_db:.2f}/{t.sigma_s_db}")


def _validate_marginals_and_corr(checks, registry, n, seed):
    for gi, (band, state) in enumerate(
            (b, s) for b in BAND_ORDER for s in _STATES):
        t = registry.table(band, state)
        corr = registry.cross_corr(band, state)
        rng = np.random.default_rng([seed, 2, gi])
        shadow = ConstantShadow(t.sigma_s_db)
        samples = lspgen.sample_lsp(t, corr, shadow, 10.0, rng, size=n)
        columns = {"SF": samples.sf_db, "DS": samples.ds_log10s}
        moments = [("DS", samples.ds_log10s, t.ds_mu, t.ds_sigma)]
        if t.has_angular:
            columns["ASA"] = samples.asa_log10deg
            columns["ZSA"] = samples.zsa_log10deg
            moments.append(("ASA", samples.asa_log10deg, t.asa_mu, t.asa_sigma))
            moments.append(("ZSA", samples.zsa_log10deg, t.zsa_mu, t.zsa_sigma))
        ok = True
        details = []
        for name, col, mu, sigma in moments:
            m, s = float(np.mean(col)), float(np.std(col, ddof=1))
            if abs(m - mu) > VALIDATE_TOL["moment_mu"] or \
                    abs(s - sigma) > VALIDATE_TOL["moment_sigma_rel"] * sigma:
                ok = False
            details.append(f"{name} mu {m:.3f}/{mu} sigma {s:.3f}/{sigma}")
        _check(checks, f"marginals[{band.label},{state.value}]", ok, "; ".join(details))

        ok = True
        worst = 0.0
        for i, a in enumerate(corr.labels):
            for j, b in enumerate(corr.labels):
                if j <= i:
                    continue
                r = estimator.pearson(columns[a], columns[b])
                err = abs(r - corr.values[i, j])
                worst = max(worst, err)
                if err > VALIDATE_TOL["corr"]:
                    ok = False
        _check(checks, f"cross_corr[{band.label},{state.value}]", ok,
               f"max |error| {worst:.4f} vs {VALIDATE_TOL['corr']}")


def _validate_interfreq(checks, registry, n, seed):
    for si, state in enumerate(_STATES):
        tables = {b: registry.table(b, state) for b in BAND_ORDER}
        per_band = {b: registry.cross_corr(b, state) for b in BAND_ORDER}
        config = lspgen.GeneratorConfig(bands=tuple(BAND_ORDER), state=state,
                                        n_drops=1, seed=0)
        sampler = lspgen.MultibandSampler(
            tables, per_band, registry.interfreq("DS", state),
            registry.interfreq("SF", state), config)
        rng = np.random.default_rng([seed, 3, si])
        samples = sampler.sample(10.0, rng, size=n)
        ok = True
        worst = 0.0
        for param, getter in (("DS", lambda s: s.ds_log10s), ("SF", lambda s: s.sf_db)):
            matrix = registry.interfreq(param, state)
            for i, a in enumerate(BAND_ORDER):
                for j, b in enumerate(BAND_ORDER):
                    if j <= i:
                        continue
                    r = estimator.pearson(getter(samples[a]), getter(samples[b]))
                    err = abs(r - matrix.values[i, j])
                    worst = max(worst, err)
                    if err > VALIDATE_TOL["corr"]:
                        ok = False
        _check(checks, f"interfreq_corr[{state.value}]", ok,
               f"max |error| {worst:.4f} vs {VALIDATE_TOL['corr']}")


def _validate_mixture(checks, registry, n, seed):
    for si, state in enumerate(_STATES):
        table = registry.table(FrequencyBand.B14_5, state)
        try:
            mixture = lspgen.calibrate_zsa_mixture(table)
        except lspgen.MixtureCalibrationError as exc:
            _check(checks, f"zsa_mixture[14.5,{state.value}]", False, str(exc))
            continue
        rng = np.random.default_rng([seed, 4, si])
        values = mixture.sample(rng, n)
        mu, sigma = float(np.mean(values)), float(np.std(values, ddof=1))
        ok = (abs(mu - table.zsa_mu) <= VALIDATE_TOL["mixture_mu"]
              and abs(sigma - table.zsa_sigma) <= VALIDATE_TOL["mixture_sigma"])
        _check(checks, f"zsa_mixture[14.5,{state.value}]", ok,
               f"pooled mu {mu:.4f}/{table.zsa_mu} sigma {sigma:.4f}/{table.zsa_sigma}")


def _validate_two_slope(checks, registry, n, seed):
    config = lspgen.GeneratorConfig(bands=tuple(BAND_ORDER),
                                    state=ChannelState.NLOS, n_drops=n, seed=seed)
    gen = lspgen.DropGenerator(config, registry)
    violations = {band: 0 for band in BAND_ORDER}
    for drop_id in range(n):
        drop = gen.drop(drop_id)
        for band in BAND_ORDER:
            los_t = registry.table(band, ChannelState.LOS)
            los_curve = path_loss_db(PathLossModel(los_t.pl0_db, los_t.ple),
                                     drop.distance_m)
            real = drop.bands[band]
            if real.pl_db - real.lsp.sf_db < los_curve - 1e-9:
                violations[band] += 1
    ok = all(v == 0 for v in violations.values())
    _check(checks, "two_slope_floor[NLOS]", ok,
           f"violations per band {[violations[b] for b in BAND_ORDER]} over {n} drops")


def _validate_determinism(checks, registry_overrides, seed):
    import io

    config = lspgen.GeneratorConfig(bands=tuple(BAND_ORDER),
                                    state=ChannelState.NLOS, n_drops=200, seed=seed)
    outputs = []
    for _ in range(2):
        gen = lspgen.DropGenerator(config, ParamRegistry(registry_overrides))
        buffer = io.StringIO()
        rows = (row for drop_id in range(config.n_drops)
                for row in recordio.rows_from_drop(gen.drop(drop_id)))
        recordio.write_records(rows, buffer, fmt="csv")
        outputs.append(buffer.getvalue())
    _check(checks, "determinism[generate]", outputs[0] == outputs[1],
           "two identical runs produce byte-identical records")


def cmd_validate(args) -> int:
    overrides = None
    if args.table_override:
        try:
            overrides = recordio.load_table_overrides(args.table_override)
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad table override file: {exc}") from None
    registry = ParamRegistry(overrides)
    n, seed = args.drops, args.seed

    checks = []
    _validate_tables(checks, registry)
    _validate_regression(checks, registry, n, seed)
    _validate_marginals_and_corr(checks, registry, n, seed)
    _validate_interfreq(checks, registry, n, seed)
    _validate_mixture(checks, registry, n, seed)
    _validate_two_slope(checks, registry, n, seed)
    _validate_determinism(checks, overrides, seed)

    failures = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return 0 if failures == 0 else 3


# ---------------------------------------------------------------------------
# plotdata


def _filtered_rows(args) -> List[RecordRow]:
    rows = recordio.read_records(args.input)
    if args.band:
        band = FrequencyBand.from_label(args.band)
        rows = [r for r in rows if r.band is band]
    if args.state:
        state = ChannelState.from_label(args.state)
        rows = [r for r in rows if r.state is state]
    if not rows:
        raise UsageError("no records left after filtering")
    if len({r.band for r in rows}) > 1:
        raise UsageError("input mixes bands; select one with --band")
    return rows


def _write_xy(stream, header, xs, ys):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for x, y in zip(xs, ys):
        writer.writerow([format_sig(float(x)), format_sig(float(y))])


def cmd_plotdata(args) -> int:
    rows = _filtered_rows(args)
    fig_path = None
    if not args.no_fig:
        if args.fig:
            fig_path = args.fig
        elif args.out != "-":
            fig_path = os.path.splitext(args.out)[0] + ".png"

    d = np.array([r.d_m for r in rows])
    stream, close = _out_stream(args.out)
    try:
        if args.kind == "pl_vs_d":
            pl = np.array([r.pl_db for r in rows])
            fit = estimator.fit_path_loss_xy(d, pl)
            line_d = np.geomspace(d.min(), d.max(), 50)
            line_pl = fit.pl0_db + 10.0 * fit.ple * np.log10(line_d)
            _write_xy(stream, ("d_m", "pl_db"),
                      np.concatenate([d, line_d]), np.concatenate([pl, line_pl]))
            if fig_path:
                from . import plots

                plots.render_pl_vs_d(d, pl, line_d, line_pl, fig_path)
        elif args.kind.endswith("_qq"):
            column = {"sf_qq": lambda r: r.sf_db, "ds_qq": lambda r: r.ds_log10s,
                      "asa_qq": lambda r: r.asa_log10deg,
                      "zsa_qq": lambda r: r.zsa_log10deg}[args.kind]
            values = [column(r) for r in rows]
            if any(v is None for v in values):
                raise UsageError(f"{args.kind}: records lack the required column")
            quantiles, ordered = estimator.probability_plot_points(np.array(values))
            _write_xy(stream, ("theoretical_quantile", "ordered_value"),
                      quantiles, ordered)
            if fig_path:
                from . import plots

                plots.render_qq(quantiles, ordered, fig_path,
                                ylabel=args.kind.replace("_qq", ""))
        elif args.kind == "spread_vs_d":
            column = {"ds": lambda r: r.ds_log10s, "asa": lambda r: r.asa_log10deg,
                      "zsa": lambda r: r.zsa_log10deg}[args.spread]
            values = [column(r) for r in rows]
            if any(v is None for v in values):
                raise UsageError("spread_vs_d: records lack the requested spread column")
            _write_xy(stream, ("d_m", f"{args.spread}_log10"), d, np.array(values))
            if fig_path:
                from . import plots

                plots.render_spread_vs_d(d, values, fig_path,
                                         ylabel=f"log10 {args.spread}")
        else:
            raise UsageError(f"unknown plot kind {args.kind!r}")
    finally:
        if close:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", help="export built-in parameter tables as CSV")
    p.add_argument("--what", choices=("params", "corr", "interfreq"), default="params")
    p.add_argument("--band", help="band filter in GHz, e.g. 14.5")
    p.add_argument("--state", help="LOS or NLOS")
    p.add_argument("--table-override", help="JSON file of table field overrides")
    p.add_argument("--config", help="JSON file mirroring flags")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("generate", help="simulate drop records")
    p.add_argument("--bands", default="6.9,8.3,14.5", help="comma-separated GHz list")
    p.add_argument("--state", required=True, help="LOS or NLOS")
    p.add_argument("--drops", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dmin", type=float, default=1.0)
    p.add_argument("--dmax", type=float, default=50.0)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--zsa-mixture", action="store_true",
                   help="sample 14.5 GHz zenith spread from the two-mode mixture")
    p.add_argument("--sigma-min", type=float, default=0.5,
                   help="floor for the distance-scaled shadow sigma, dB")
    p.add_argument("--angular-xcorr", type=float, default=0.0,
                   help="inter-band correlation applied to ASA/ZSA (unmeasured)")
    p.add_argument("--table-override", help="JSON file of table field overrides")
    p.add_argument("--config", help="JSON file mirroring flags")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit the channel models to a record file")
    p.add_argument("input")
    p.add_argument("--config", help="JSON file mirroring flags")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="self-consistency and round-trip suite")
    p.add_argument("--drops", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=74521)
    p.add_argument("--table-override", help="JSON file of table field overrides")
    p.add_argument("--config", help="JSON file mirroring flags")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plotdata", help="emit plot-ready CSV (and a PNG) from records")
    p.add_argument("input")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--band", help="band filter in GHz")
    p.add_argument("--state", help="LOS or NLOS filter")
    p.add_argument("--spread", choices=("ds", "asa", "zsa"), default="ds",
                   help="which spread to plot for spread_vs_d")
    p.add_argument("--fig", help="figure path; defaults to the output with .png")
    p.add_argument("--no-fig", action="store_true", help="skip figure rendering")
    p.add_argument("--config", help="JSON file mirroring flags")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_plotdata)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except RecordSchemaError as exc:
        print(f"{PROG}: schema error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
