"""Built-in indoor-office model coefficients and correlation structures.

One parameter table per (band, LOS state) holding the measured path loss,
shadow fading, delay spread, coherence bandwidth and angle spread moments,
plus the within-band and inter-band cross-correlation matrices. The 6.9 GHz
campaign ran omnidirectional only, so that band carries no angular fields
and its within-band correlation matrix is 2x2.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .propagation import fspl_db

# Shadow fading sigma growth with log-distance measured in NLOS conditions, dB per decade.
NLOS_SHADOW_SLOPE_DB_PER_DECADE = 6.5

# Axis naming used everywhere a correlation matrix indexes large-scale parameters.
LSP_AXES_FULL = ("SF", "DS", "ASA", "ZSA")
LSP_AXES_OMNI = ("SF", "DS")


class FrequencyBand(Enum):
    """The three measured carrier frequencies; value is the center frequency in Hz."""

    B6_9 = 6.9e9
    B8_3 = 8.3e9
    B14_5 = 14.5e9

    @property
    def hz(self) -> float:
        return self.value

    @property
    def label(self) -> str:
        """Band name in GHz as used on the wire, e.g. '6.9'."""
        return f"{self.value / 1e9:g}"

    @property
    def has_angular(self) -> bool:
        """Whether phased-array (angle spread) statistics exist for this band."""
        return self is not FrequencyBand.B6_9

    @classmethod
    def from_label(cls, label: str) -> "FrequencyBand":
        for band in cls:
            if band.label == label:
                return band
        raise ValueError(f"unknown band {label!r}; expected one of "
                         f"{[b.label for b in cls]}")


BAND_ORDER = (FrequencyBand.B6_9, FrequencyBand.B8_3, FrequencyBand.B14_5)


class ChannelState(Enum):
    LOS = "LOS"
    NLOS = "NLOS"

    @classmethod
    def from_label(cls, label: str) -> "ChannelState":
        try:
            return cls[label]
        except KeyError:
            raise ValueError(f"unknown channel state {label!r}; expected LOS or NLOS") from None


@dataclass(frozen=True)
class ParamTable:
    """Model coefficients for one (band, state).

    Units: pl0 dB, sigma_s dB, delay-spread moments in log10(s), coherence
    bandwidths in Hz, angle-spread moments in log10(deg). Angular moments are
    present only for bands measured with phased arrays.
    """

    pl0_db: float
    ple: float
    sigma_s_db: float
    ds_mu: float
    ds_sigma: float
    bc50_hz: float
    bc90_hz: float
    asa_mu: Optional[float] = None
    asa_sigma: Optional[float] = None
    zsa_mu: Optional[float] = None
    zsa_sigma: Optional[float] = None

    def __post_init__(self):
        if self.sigma_s_db <= 0:
            raise ValueError(f"sigma_s must be positive, got {self.sigma_s_db}")
        if self.ds_sigma <= 0:
            raise ValueError(f"ds_sigma must be positive, got {self.ds_sigma}")
        if not self.bc50_hz > self.bc90_hz > 0:
            raise ValueError(
                f"coherence bandwidths must satisfy bc50 > bc90 > 0, "
                f"got {self.bc50_hz} / {self.bc90_hz}")
        angular = (self.asa_mu, self.asa_sigma, self.zsa_mu, self.zsa_sigma)
        if any(v is None for v in angular) != all(v is None for v in angular):
            raise ValueError("angular moments must be present together or absent together")

    @property
    def has_angular(self) -> bool:
        return self.asa_mu is not None

    @property
    def lsp_axes(self) -> tuple:
        return LSP_AXES_FULL if self.has_angular else LSP_AXES_OMNI


@dataclass(frozen=True)
class CorrelationMatrix:
    """Square symmetric unit-diagonal matrix over named axes."""

    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        n = len(self.labels)
        if vals.shape != (n, n):
            raise ValueError(f"matrix shape {vals.shape} does not match {n} labels")
        if not np.allclose(vals, vals.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(vals), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(vals) > 1.0 + 1e-12):
            raise ValueError("correlation entries must lie in [-1, 1]")
        vals.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.labels)

    def entry(self, a, b) -> float:
        return float(self.values[self.labels.index(a), self.labels.index(b)])


# Measured coefficients keyed by (band, state). Delay-spread means and sigmas
# are stored at two-decimal precision, which is what makes the coherence
# bandwidth self-consistency checks meaningful.
_TABLES = {
    (FrequencyBand.B6_9, ChannelState.LOS): ParamTable(
        pl0_db=48.3, ple=1.5, sigma_s_db=2.9,
        ds_mu=-7.92, ds_sigma=0.34, bc50_hz=16.5e6, bc90_hz=1.7e6),
    (FrequencyBand.B6_9, ChannelState.NLOS): ParamTable(
        pl0_db=42.6, ple=3.2, sigma_s_db=6.6,
        ds_mu=-7.60, ds_sigma=0.23, bc50_hz=8.0e6, bc90_hz=0.8e6),
    (FrequencyBand.B8_3, ChannelState.LOS): ParamTable(
        pl0_db=51.1, ple=1.4, sigma_s_db=2.6,
        ds_mu=-7.88, ds_sigma=0.34, bc50_hz=15.0e6, bc90_hz=1.5e6,
        asa_mu=1.71, asa_sigma=0.13, zsa_mu=1.24, zsa_sigma=0.03),
    (FrequencyBand.B8_3, ChannelState.NLOS): ParamTable(
        pl0_db=45.0, ple=3.2, sigma_s_db=6.6,
        ds_mu=-7.58, ds_sigma=0.21, bc50_hz=7.6e6, bc90_hz=0.7e6,
        asa_mu=1.84, asa_sigma=0.13, zsa_mu=1.22, zsa_sigma=0.03),
    (FrequencyBand.B14_5, ChannelState.LOS): ParamTable(
        pl0_db=56.6, ple=1.5, sigma_s_db=2.3,
        ds_mu=-7.94, ds_sigma=0.34, bc50_hz=17.3e6, bc90_hz=1.7e6,
        asa_mu=1.55, asa_sigma=0.15, zsa_mu=1.04, zsa_sigma=0.06),
    (FrequencyBand.B14_5, ChannelState.NLOS): ParamTable(
        pl0_db=51.4, ple=3.4, sigma_s_db=7.3,
        ds_mu=-7.59, ds_sigma=0.22, bc50_hz=7.8e6, bc90_hz=0.7e6,
        asa_mu=1.77, asa_sigma=0.15, zsa_mu=1.03, zsa_sigma=0.07),
}

# Within-band cross-correlations as (asa_ds, asa_sf, ds_sf, zsa_sf, zsa_ds, zsa_asa);
# 6.9 GHz carries only ds_sf.
_XCORR = {
    (FrequencyBand.B6_9, ChannelState.LOS): {"ds_sf": -0.72},
    (FrequencyBand.B6_9, ChannelState.NLOS): {"ds_sf": -0.55},
    (FrequencyBand.B8_3, ChannelState.LOS): {
        "asa_ds": 0.58, "asa_sf": -0.66, "ds_sf": -0.54,
        "zsa_sf": -0.27, "zsa_ds": 0.11, "zsa_asa": 0.24},
    (FrequencyBand.B8_3, ChannelState.NLOS): {
        "asa_ds": 0.39, "asa_sf": -0.42, "ds_sf": -0.51,
        "zsa_sf": -0.38, "zsa_ds": -0.05, "zsa_asa": 0.18},
    (FrequencyBand.B14_5, ChannelState.LOS): {
        "asa_ds": 0.80, "asa_sf": -0.47, "ds_sf": -0.39,
        "zsa_sf": 0.05, "zsa_ds": 0.09, "zsa_asa": 0.01},
    (FrequencyBand.B14_5, ChannelState.NLOS): {
        "asa_ds": 0.44, "asa_sf": -0.34, "ds_sf": -0.30,
        "zsa_sf": -0.32, "zsa_ds": -0.06, "zsa_asa": 0.12},
}

# Inter-band cross-correlations as (6.9-8.3, 6.9-14.5, 8.3-14.5).
_INTERFREQ = {
    ("DS", ChannelState.LOS): (0.37, 0.41, 0.43),
    ("DS", ChannelState.NLOS): (0.70, 0.70, 0.71),
    ("SF", ChannelState.LOS): (-0.08, 0.05, 0.00),
    ("SF", ChannelState.NLOS): (0.91, 0.86, 0.90),
}


def builtin_table(band: FrequencyBand, state: ChannelState) -> ParamTable:
    """The built-in coefficients for one (band, state). Pure lookup."""
    return _TABLES[(band, state)]


def cross_corr_matrix(band: FrequencyBand, state: ChannelState) -> CorrelationMatrix:
    """Within-band cross-correlations over the available LSP axes.

    Axis order is fixed as (SF, DS, ASA, ZSA), reduced to (SF, DS) for
    the omnidirectional-only band.
    """
    pairs = _XCORR[(band, state)]
    if band.has_angular:
        labels = LSP_AXES_FULL
        m = np.eye(4)
        m[0, 1] = m[1, 0] = pairs["ds_sf"]
        m[0, 2] = m[2, 0] = pairs["asa_sf"]
        m[0, 3] = m[3, 0] = pairs["zsa_sf"]
        m[1, 2] = m[2, 1] = pairs["asa_ds"]
        m[1, 3] = m[3, 1] = pairs["zsa_ds"]
        m[2, 3] = m[3, 2] = pairs["zsa_asa"]
    else:
        labels = LSP_AXES_OMNI
        m = np.array([[1.0, pairs["ds_sf"]], [pairs["ds_sf"], 1.0]])
    return CorrelationMatrix(labels=labels, values=m)


def interfreq_corr_matrix(param: str, state: ChannelState) -> CorrelationMatrix:
    """3x3 inter-band correlation of one parameter ('DS' or 'SF') over band labels."""
    if param not in ("DS", "SF"):
        raise ValueError(f"inter-band correlations exist for DS and SF only, got {param!r}")
    r12, r13, r23 = _INTERFREQ[(param, state)]
    m = np.array([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]])
    return CorrelationMatrix(labels=tuple(b.label for b in BAND_ORDER), values=m)


@dataclass(frozen=True)
class AuditCheck:
    """One self-consistency check with its measured deviation."""

    check: str
    message: str
    deviation: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.limit


# Finding type kept for the flagged-only view returned by validate_table.
ValidationFinding = AuditCheck

# Coherence bandwidth divisors for the two frequency-correlation levels.
_BC_CHECKS = (("bc50", 5.0), ("bc90", 50.0))

FSPL_GAP_LIMIT_DB = 1.0
BC_RELATIVE_LIMIT = 0.10


def table_audit(table: ParamTable, band: FrequencyBand, state: ChannelState):
    """All closed-form self-consistency checks for one table.

    The two coherence bandwidths are compared to 1/(K * 10^ds_mu) at 10%
    relative tolerance, and for LOS the intercept to free-space path loss
    at 1 m within 1 dB.
    """
    checks = []
    for name, k in _BC_CHECKS:
        stored = getattr(table, f"{name}_hz")
        implied = 1.0 / (k * 10.0 ** table.ds_mu)
        deviation = abs(stored - implied) / stored
        checks.append(AuditCheck(
            check=f"{name}_consistency",
            message=(f"{band.label} GHz {state.value} {name}: stored "
                     f"{stored / 1e6:.4g} MHz vs 1/({k:g}*10^{table.ds_mu}) = "
                     f"{implied / 1e6:.4g} MHz"),
            deviation=deviation, limit=BC_RELATIVE_LIMIT))
    if state is ChannelState.LOS:
        gap = abs(table.pl0_db - fspl_db(band.hz, 1.0))
        checks.append(AuditCheck(
            check="fspl_intercept",
            message=(f"{band.label} GHz LOS intercept {table.pl0_db} dB vs "
                     f"FSPL(1 m) = {fspl_db(band.hz, 1.0):.2f} dB"),
            deviation=gap, limit=FSPL_GAP_LIMIT_DB))
    return checks


def validate_table(table: ParamTable, band: FrequencyBand, state: ChannelState):
    """Flagged self-consistency findings; an empty list means consistent."""
    return [check for check in table_audit(table, band, state) if not check.passed]


class ParamRegistry:
    """Lookup front end over the built-in tables, optionally with overrides.

    ``overrides`` maps (band, state) to a dict of ParamTable field names to
    replacement values; everything else stays at the built-in value.
    """

    def __init__(self, overrides=None):
        self._tables = {}
        overrides = overrides or {}
        for key, base in _TABLES.items():
            fields = overrides.get(key)
            self._tables[key] = dataclasses.replace(base, **fields) if fields else base

    def table(self, band: FrequencyBand, state: ChannelState) -> ParamTable:
        return self._tables[(band, state)]

    def cross_corr(self, band: FrequencyBand, state: ChannelState) -> CorrelationMatrix:
        return cross_corr_matrix(band, state)

    def interfreq(self, param: str, state: ChannelState) -> CorrelationMatrix:
        return interfreq_corr_matrix(param, state)
