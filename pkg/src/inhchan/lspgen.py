"""Stochastic generation of correlated large-scale parameters.

Builds a joint Gaussian model over (band x LSP) axes from the measured
within-band and inter-band correlations, repairs or completes it to a
positive semidefinite matrix, and draws per-drop realizations with
reproducible per-drop random substreams. Also houses the two-mode zenith
spread mixture and synthetic tap-set fixtures for estimator round trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, NamedTuple, Optional, Tuple

import numpy as np

from .dispersion import DELAY_RESOLUTION_S, MAX_EXCESS_DELAY_S, TapSet
from .params import (
    BAND_ORDER,
    NLOS_SHADOW_SLOPE_DB_PER_DECADE,
    ChannelState,
    CorrelationMatrix,
    FrequencyBand,
    ParamRegistry,
    ParamTable,
)
from .propagation import (
    ConstantShadow,
    DistanceScaledShadow,
    PathLossModel,
    ShadowModel,
    effective_nlos_pl_db,
    path_loss_db,
    shadow_sigma_db,
)

PSD_TOLERANCE = -1e-10


@dataclass(frozen=True)
class LspVector:
    """One realization of the large-scale parameters at a single location/band."""

    sf_db: float
    ds_log10s: float
    asa_log10deg: Optional[float] = None
    zsa_log10deg: Optional[float] = None


@dataclass(frozen=True)
class LspSamples:
    """Vectorized batch of LSP realizations (arrays share one length)."""

    sf_db: np.ndarray
    ds_log10s: np.ndarray
    asa_log10deg: Optional[np.ndarray] = None
    zsa_log10deg: Optional[np.ndarray] = None

    def row(self, i: int) -> LspVector:
        return LspVector(
            sf_db=float(self.sf_db[i]),
            ds_log10s=float(self.ds_log10s[i]),
            asa_log10deg=None if self.asa_log10deg is None else float(self.asa_log10deg[i]),
            zsa_log10deg=None if self.zsa_log10deg is None else float(self.zsa_log10deg[i]),
        )


class RepairResult(NamedTuple):
    matrix: CorrelationMatrix
    max_abs_change: float
    iterations: int


def nearest_correlation(corr: CorrelationMatrix, max_iter: int = 100) -> RepairResult:
    """Repair a correlation matrix to positive semidefiniteness.

    Returns the input unchanged when its smallest eigenvalue is already
    above tolerance; otherwise iterates eigenvalue clipping at zero followed
    by diagonal renormalization until the spectrum clears the tolerance.
    """
    original = np.asarray(corr.values, dtype=float)
    x = original.copy()
    for iteration in range(max_iter + 1):
        w, v = np.linalg.eigh(x)
        if w.min() >= PSD_TOLERANCE:
            repaired = CorrelationMatrix(labels=corr.labels, values=x)
            return RepairResult(repaired, float(np.abs(x - original).max()), iteration)
        x = (v * np.clip(w, 0.0, None)) @ v.T
        d = np.sqrt(np.diag(x))
        x = x / np.outer(d, d)
        x = (x + x.T) / 2.0
        np.fill_diagonal(x, 1.0)
        np.clip(x, -1.0, 1.0, out=x)
    raise RuntimeError(f"correlation repair failed to converge in {max_iter} iterations")


def complete_correlation(target: np.ndarray, fixed: np.ndarray,
                         max_iter: int = 5000) -> Tuple[np.ndarray, bool]:
    """PSD completion of a partially specified correlation matrix.

    ``fixed`` marks entries (including the diagonal) that must be preserved
    exactly; the rest of ``target`` provides the starting guess for the free
    entries. Alternating projections between the PSD cone (with Dykstra
    correction) and the affine set of pinned entries. Returns the completed
    matrix and whether the PSD tolerance was reached.
    """
    y = np.array(target, dtype=float)
    correction = np.zeros_like(y)
    for _ in range(max_iter):
        r = y - correction
        w, v = np.linalg.eigh((r + r.T) / 2.0)
        x = (v * np.clip(w, 0.0, None)) @ v.T
        correction = x - r
        y = x.copy()
        y[fixed] = target[fixed]
        y = (y + y.T) / 2.0
        if np.linalg.eigvalsh(y).min() >= PSD_TOLERANCE:
            return y, True
    return y, False


def joint_axes(bands) -> list:
    """Axis list [(band, lsp_name), ...] for a joint matrix over the given bands."""
    axes = []
    for band in bands:
        names = ("SF", "DS", "ASA", "ZSA") if band.has_angular else ("SF", "DS")
        axes.extend((band, name) for name in names)
    return axes


def build_joint_correlation(per_band_corr: Dict[FrequencyBand, CorrelationMatrix],
                            interfreq_ds: CorrelationMatrix,
                            interfreq_sf: CorrelationMatrix,
                            bands,
                            angular_interfreq_corr: float = 0.0) -> CorrelationMatrix:
    """Joint correlation over (band x LSP) axes.

    Within-band blocks and same-parameter cross-band entries are pinned to
    the measured values (ASA/ZSA cross-band to the configured constant; no
    inter-band angular measurements exist). The remaining cross-band
    cross-parameter entries are unmeasured: they are seeded with a
    consistency heuristic, the average inter-band correlation of the two
    parameters times their average within-band correlation, and the matrix
    is then PSD-completed holding the pinned entries exact. Zeros in the
    free positions are not jointly feasible with the measured values (for
    NLOS the resulting matrix is far from PSD and any repair would drag the
    pinned inter-band entries down), hence the completion.
    """
    bands = sorted(bands, key=lambda b: b.hz)
    axes = joint_axes(bands)
    n = len(axes)
    target = np.eye(n)
    fixed = np.eye(n, dtype=bool)

    def interfreq_value(name: str, band_a: FrequencyBand, band_b: FrequencyBand) -> float:
        if name == "SF":
            return interfreq_sf.entry(band_a.label, band_b.label)
        if name == "DS":
            return interfreq_ds.entry(band_a.label, band_b.label)
        return angular_interfreq_corr

    def within_value(band: FrequencyBand, pa: str, pb: str) -> Optional[float]:
        m = per_band_corr[band]
        if pa in m.labels and pb in m.labels:
            return m.entry(pa, pb)
        return None

    for i, (band_i, par_i) in enumerate(axes):
        for j, (band_j, par_j) in enumerate(axes):
            if i == j:
                continue
            if band_i is band_j:
                target[i, j] = per_band_corr[band_i].entry(par_i, par_j)
                fixed[i, j] = True
            elif par_i == par_j:
                target[i, j] = interfreq_value(par_i, band_i, band_j)
                fixed[i, j] = True
            else:
                withins = [w for w in (within_value(band_i, par_i, par_j),
                                       within_value(band_j, par_i, par_j)) if w is not None]
                r_avg = 0.5 * (interfreq_value(par_i, band_i, band_j)
                               + interfreq_value(par_j, band_i, band_j))
                target[i, j] = r_avg * (float(np.mean(withins)) if withins else 0.0)

    completed, ok = complete_correlation(target, fixed)
    labels = tuple(f"{band.label}:{name}" for band, name in axes)
    if not ok:
        # Infeasible pinned entries (possible with user overrides): fall back
        # to the plain clip repair, which keeps PSD but may move them.
        result = nearest_correlation(CorrelationMatrix(labels=labels, values=completed))
        return result.matrix
    return CorrelationMatrix(labels=labels, values=np.clip(completed, -1.0, 1.0))


def _correlation_factor(values: np.ndarray) -> np.ndarray:
    """Factor L with L @ L.T equal to the matrix, tolerant of a zero eigenvalue."""
    try:
        return np.linalg.cholesky(values)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(values)
        if w.min() < PSD_TOLERANCE:
            raise ValueError("correlation matrix is not positive semidefinite; "
                             "repair it before factorization") from None
        return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class ZsaMixture:
    """Two-mode zenith-spread mixture in log10(deg) with a shared component sigma."""

    weight1: float
    mode1_mu: float
    mode2_mu: float
    component_sigma: float

    @property
    def pooled_mu(self) -> float:
        return self.weight1 * self.mode1_mu + (1.0 - self.weight1) * self.mode2_mu

    @property
    def between_variance(self) -> float:
        mu = self.pooled_mu
        return (self.weight1 * (self.mode1_mu - mu) ** 2
                + (1.0 - self.weight1) * (self.mode2_mu - mu) ** 2)

    @property
    def pooled_sigma(self) -> float:
        return math.sqrt(self.component_sigma ** 2 + self.between_variance)

    def map(self, z, u):
        """Map standard-normal z and uniform u draws to mixture values."""
        z = np.asarray(z, dtype=float)
        u = np.asarray(u, dtype=float)
        mode_mu = np.where(u < self.weight1, self.mode1_mu, self.mode2_mu)
        return mode_mu + self.component_sigma * z

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal(size)
        u = rng.random(size)
        return self.map(z, u)


class MixtureCalibrationError(ValueError):
    """Mixture moment matching is inconsistent with the table's pooled moments."""


# Fixed mixture structure: two thirds of locations around 10 deg, the rest
# around 13 deg, log-domain mode means.
ZSA_MODE1_MU = math.log10(10.0)
ZSA_MODE2_MU = math.log10(13.0)
ZSA_MODE1_WEIGHT = 2.0 / 3.0
ZSA_POOLED_MU_TOLERANCE = 0.02


def calibrate_zsa_mixture(table: ParamTable) -> ZsaMixture:
    """Moment-match the two-mode zenith spread mixture to a table.

    The mode means and weights are fixed; the shared component sigma is
    chosen so the mixture reproduces the table's pooled variance. Raises
    MixtureCalibrationError when the fixed modes cannot reproduce the
    table's pooled mean, in which case callers fall back to the single
    log-normal.
    """
    if table.zsa_mu is None:
        raise ValueError("table carries no zenith spread moments")
    pooled_mu = ZSA_MODE1_WEIGHT * ZSA_MODE1_MU + (1.0 - ZSA_MODE1_WEIGHT) * ZSA_MODE2_MU
    if abs(pooled_mu - table.zsa_mu) > ZSA_POOLED_MU_TOLERANCE:
        raise MixtureCalibrationError(
            f"mixture pooled mean {pooled_mu:.4f} is inconsistent with the table "
            f"value {table.zsa_mu} (tolerance {ZSA_POOLED_MU_TOLERANCE})")
    between_var = (ZSA_MODE1_WEIGHT * (ZSA_MODE1_MU - pooled_mu) ** 2
                   + (1.0 - ZSA_MODE1_WEIGHT) * (ZSA_MODE2_MU - pooled_mu) ** 2)
    component_sigma = math.sqrt(max(0.0, table.zsa_sigma ** 2 - between_var))
    return ZsaMixture(weight1=ZSA_MODE1_WEIGHT, mode1_mu=ZSA_MODE1_MU,
                      mode2_mu=ZSA_MODE2_MU, component_sigma=component_sigma)


def default_shadow_model(table: ParamTable, state: ChannelState,
                         sigma_min_db: float = 0.5) -> ShadowModel:
    """State-appropriate shadow model: constant sigma for LOS, log-distance scaled for NLOS."""
    if state is ChannelState.LOS:
        return ConstantShadow(table.sigma_s_db)
    return DistanceScaledShadow(NLOS_SHADOW_SLOPE_DB_PER_DECADE, sigma_min_db)


def _map_lsps(table: ParamTable, sigma_eff_db: float, y: np.ndarray,
              mixture: Optional[ZsaMixture] = None,
              mixture_u: Optional[np.ndarray] = None) -> LspSamples:
    """Map correlated standard-normal columns to physical LSP marginals."""
    axes = table.lsp_axes
    sf = sigma_eff_db * y[:, axes.index("SF")]
    ds = table.ds_mu + table.ds_sigma * y[:, axes.index("DS")]
    asa = zsa = None
    if table.has_angular:
        asa = table.asa_mu + table.asa_sigma * y[:, axes.index("ASA")]
        z_zsa = y[:, axes.index("ZSA")]
        if mixture is not None:
            zsa = mixture.map(z_zsa, mixture_u)
        else:
            zsa = table.zsa_mu + table.zsa_sigma * z_zsa
    return LspSamples(sf_db=sf, ds_log10s=ds, asa_log10deg=asa, zsa_log10deg=zsa)


def sample_lsp(table: ParamTable, corr: CorrelationMatrix, shadow: ShadowModel,
               distance_m: float, rng: np.random.Generator, size: Optional[int] = None):
    """Draw correlated LSP realizations for one band.

    A standard-normal vector is correlated through a factor of ``corr`` and
    mapped component-wise onto the table marginals; the shadow component is
    scaled by the model sigma at ``distance_m``. Returns an LspVector, or an
    LspSamples batch when ``size`` is given.
    """
    if tuple(corr.labels) != table.lsp_axes:
        raise ValueError(f"correlation axes {corr.labels} do not match table axes {table.lsp_axes}")
    if np.linalg.eigvalsh(corr.values).min() < PSD_TOLERANCE:
        raise ValueError("correlation matrix is not positive semidefinite; repair it first")
    factor = _correlation_factor(corr.values)
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, corr.size))
    y = z @ factor.T
    sigma_eff = shadow_sigma_db(shadow, distance_m)
    samples = _map_lsps(table, sigma_eff, y)
    return samples.row(0) if size is None else samples


class MultibandSampler:
    """Joint sampler over several bands with the completed (band x LSP) correlation.

    Precomputes the joint matrix, its factor and any mixture calibrations
    once; ``sample`` then maps fresh draws, so per-drop use stays cheap.
    """

    def __init__(self, tables: Dict[FrequencyBand, ParamTable],
                 per_band_corr: Dict[FrequencyBand, CorrelationMatrix],
                 interfreq_ds: CorrelationMatrix, interfreq_sf: CorrelationMatrix,
                 config: "GeneratorConfig"):
        self.config = config
        self.bands = sorted(tables, key=lambda b: b.hz)
        self.tables = tables
        self.joint = build_joint_correlation(
            per_band_corr, interfreq_ds, interfreq_sf, self.bands,
            angular_interfreq_corr=config.angular_interfreq_corr)
        self._factor = _correlation_factor(self.joint.values)
        self.axes = joint_axes(self.bands)
        self._slices = {}
        start = 0
        for band in self.bands:
            width = 4 if band.has_angular else 2
            self._slices[band] = slice(start, start + width)
            start += width
        self.mixtures: Dict[FrequencyBand, Optional[ZsaMixture]] = {}
        for band in self.bands:
            mixture = None
            if config.zsa_mixture and tables[band].has_angular:
                try:
                    mixture = calibrate_zsa_mixture(tables[band])
                except MixtureCalibrationError:
                    mixture = None
            self.mixtures[band] = mixture

    def sample(self, distance_m: float, rng: np.random.Generator,
               size: Optional[int] = None,
               shadows: Optional[Dict[FrequencyBand, ShadowModel]] = None):
        """Draw per-band LSPs at one distance; dict of LspVector or LspSamples."""
        if shadows is None:
            shadows = {band: default_shadow_model(self.tables[band], self.config.state,
                                                  self.config.sigma_min_db)
                       for band in self.bands}
        n = 1 if size is None else int(size)
        z = rng.standard_normal((n, len(self.axes)))
        y = z @ self._factor.T
        out = {}
        for band in self.bands:
            mixture = self.mixtures[band]
            mixture_u = rng.random(n) if mixture is not None else None
            sigma_eff = shadow_sigma_db(shadows[band], distance_m)
            samples = _map_lsps(self.tables[band], sigma_eff, y[:, self._slices[band]],
                                mixture=mixture, mixture_u=mixture_u)
            out[band] = samples.row(0) if size is None else samples
        return out


@dataclass(frozen=True)
class GeneratorConfig:
    """Configuration of one simulation run. The seed is mandatory by design."""

    bands: tuple
    state: ChannelState
    n_drops: int
    seed: int
    d_min_m: float = 1.0
    d_max_m: float = 50.0
    zsa_mixture: bool = False
    sigma_min_db: float = 0.5
    angular_interfreq_corr: float = 0.0

    def __post_init__(self):
        bands = tuple(sorted(set(self.bands), key=lambda b: b.hz))
        if not bands:
            raise ValueError("at least one band is required")
        if len(bands) != len(tuple(self.bands)):
            raise ValueError("duplicate bands in config")
        object.__setattr__(self, "bands", bands)
        if self.n_drops < 1:
            raise ValueError(f"n_drops must be at least 1, got {self.n_drops}")
        if not (1.0 <= self.d_min_m < self.d_max_m):
            raise ValueError(f"distance range must satisfy 1 <= d_min < d_max, "
                             f"got [{self.d_min_m}, {self.d_max_m}]")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.sigma_min_db <= 0:
            raise ValueError("sigma_min_db must be positive")
        if abs(self.angular_interfreq_corr) > 1.0:
            raise ValueError("angular inter-band correlation must lie in [-1, 1]")


@dataclass(frozen=True)
class BandRealization:
    """Per-band outcome of one drop: the LSP vector, composed path loss, bc90."""

    lsp: LspVector
    pl_db: float
    bc90_hz: float


@dataclass(frozen=True)
class DropRecord:
    """One simulated location with one realization per requested band."""

    drop_id: int
    distance_m: float
    state: ChannelState
    bands: Dict[FrequencyBand, BandRealization] = field(default_factory=dict)


def drop_rng(seed: int, drop_id: int) -> np.random.Generator:
    """Random substream for one drop, keyed by (seed, drop_id)."""
    return np.random.default_rng([seed, drop_id])


class DropGenerator:
    """Precomputed machinery for generating drops from a config and registry."""

    def __init__(self, config: GeneratorConfig, registry: Optional[ParamRegistry] = None):
        self.config = config
        registry = registry or ParamRegistry()
        self.tables = {band: registry.table(band, config.state) for band in config.bands}
        self.los_tables = {band: registry.table(band, ChannelState.LOS)
                           for band in config.bands}
        per_band_corr = {band: registry.cross_corr(band, config.state)
                         for band in config.bands}
        self.sampler = MultibandSampler(
            self.tables, per_band_corr,
            registry.interfreq("DS", config.state), registry.interfreq("SF", config.state),
            config)
        self.los_models = {band: PathLossModel(self.los_tables[band].pl0_db,
                                               self.los_tables[band].ple)
                           for band in config.bands}
        self.state_models = {band: PathLossModel(self.tables[band].pl0_db,
                                                 self.tables[band].ple)
                             for band in config.bands}

    def _shadow_for(self, band: FrequencyBand, distance_m: float) -> ShadowModel:
        # Shadow sigma follows the state of the branch that wins the two-slope
        # max: close-in NLOS locations sit on the LOS branch and take its
        # constant sigma.
        if self.config.state is ChannelState.LOS:
            return ConstantShadow(self.tables[band].sigma_s_db)
        los_pl = path_loss_db(self.los_models[band], distance_m)
        nlos_pl = path_loss_db(self.state_models[band], distance_m)
        if nlos_pl >= los_pl:
            return DistanceScaledShadow(NLOS_SHADOW_SLOPE_DB_PER_DECADE,
                                        self.config.sigma_min_db)
        return ConstantShadow(self.los_tables[band].sigma_s_db)

    def drop(self, drop_id: int) -> DropRecord:
        """Generate one drop; depends only on (config, drop_id)."""
        cfg = self.config
        rng = drop_rng(cfg.seed, drop_id)
        u = rng.random()
        distance = cfg.d_min_m * (cfg.d_max_m / cfg.d_min_m) ** u
        shadows = {band: self._shadow_for(band, distance) for band in cfg.bands}
        lsps = self.sampler.sample(distance, rng, shadows=shadows)
        bands = {}
        for band in cfg.bands:
            lsp = lsps[band]
            if cfg.state is ChannelState.LOS:
                base = path_loss_db(self.state_models[band], distance)
            else:
                base = effective_nlos_pl_db(self.los_models[band],
                                            self.state_models[band], distance)
            bands[band] = BandRealization(
                lsp=lsp,
                pl_db=base + lsp.sf_db,
                bc90_hz=1.0 / (50.0 * 10.0 ** lsp.ds_log10s))
        return DropRecord(drop_id=drop_id, distance_m=distance, state=cfg.state,
                          bands=bands)


def sample_multiband(tables: Dict[FrequencyBand, ParamTable],
                     per_band_corr: Dict[FrequencyBand, CorrelationMatrix],
                     interfreq_ds: CorrelationMatrix, interfreq_sf: CorrelationMatrix,
                     config: GeneratorConfig, distance_m: float,
                     rng: np.random.Generator, size: Optional[int] = None):
    """One-shot joint multi-band draw; see MultibandSampler for repeated use."""
    sampler = MultibandSampler(tables, per_band_corr, interfreq_ds, interfreq_sf, config)
    return sampler.sample(distance_m, rng, size=size)


def generate_drops(config: GeneratorConfig,
                   registry: Optional[ParamRegistry] = None) -> Iterator[DropRecord]:
    """Stream of drop records; order-independent, keyed per drop by (seed, drop_id)."""
    gen = DropGenerator(config, registry)
    for drop_id in range(config.n_drops):
        yield gen.drop(drop_id)


def synth_tap_set(target_ds_s: float, target_asa_deg: float, target_zsa_deg: float,
                  n_taps: int, grid_s: float = DELAY_RESOLUTION_S,
                  rng: Optional[np.random.Generator] = None):
    """Tap set with prescribed delay and angle spreads, for estimator fixtures.

    With ``n_taps == 2`` the construction is deterministic and exact up to
    delay-grid quantization: equal powers at the mean delay +- target_ds,
    azimuths at +-acos(exp(-as^2/2)) which inverts the two-tap circular
    spread, zeniths likewise. Larger ``n_taps`` draws an exponential-decay
    delay profile with mean target_ds and wrapped-normal angles whose
    spread parameters equal the targets, converging as n_taps grows.
    """
    if target_ds_s <= 0:
        raise ValueError(f"target delay spread must be positive, got {target_ds_s}")
    if target_asa_deg < 0 or target_zsa_deg < 0:
        raise ValueError("angle spread targets must be non-negative")
    if n_taps < 2:
        raise ValueError(f"at least two taps are required, got {n_taps}")
    if grid_s <= 0:
        raise ValueError(f"delay grid must be positive, got {grid_s}")

    def snap(delays):
        return np.round(np.asarray(delays, dtype=float) / grid_s) * grid_s

    if n_taps == 2:
        if target_asa_deg >= 90.0 or target_zsa_deg >= 90.0:
            raise ValueError("two-tap construction requires angle spread targets below 90 deg")

        def half_angle(spread_deg):
            spread_rad = math.radians(spread_deg)
            return math.degrees(math.acos(math.exp(-spread_rad ** 2 / 2.0)))

        tau_m = target_ds_s
        delays = snap([tau_m - target_ds_s, tau_m + target_ds_s])
        phi_az = half_angle(target_asa_deg)
        phi_zen = half_angle(target_zsa_deg)
        return TapSet(delays_s=delays, powers=np.ones(2),
                      azimuth_deg=np.array([phi_az, -phi_az]),
                      zenith_deg=np.array([phi_zen, -phi_zen]))

    rng = rng if rng is not None else np.random.default_rng()
    delays = rng.exponential(target_ds_s, n_taps)
    delays = snap(np.clip(delays, 0.0, MAX_EXCESS_DELAY_S))
    azimuth = rng.normal(0.0, math.radians(target_asa_deg), n_taps)
    zenith = rng.normal(0.0, math.radians(target_zsa_deg), n_taps)
    wrap = lambda a: (a + 180.0) % 360.0 - 180.0
    return TapSet(delays_s=delays, powers=np.ones(n_taps),
                  azimuth_deg=wrap(np.degrees(azimuth)),
                  zenith_deg=wrap(np.degrees(zenith)))
