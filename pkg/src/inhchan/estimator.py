"""Model estimation from measurement-style records.

The reverse path of the generator: threshold power delay profiles,
synthesize omnidirectional receive power from beam sets, regress the
log-distance path loss model, fit log-normal moments and the
distance-scaled shadow sigma, and produce correlation and probability-plot
statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .dispersion import MAX_EXCESS_DELAY_S, TapSet
from .params import ChannelState, FrequencyBand

# Taps below the mean noise floor plus this margin are discarded.
PDP_THRESHOLD_MARGIN_DB = 15.0


@dataclass
class Pdp:
    """Power delay profile: tap delays in s, tap powers in dB, mean noise floor in dB."""

    delays_s: np.ndarray
    powers_db: np.ndarray
    noise_floor_mean_db: float

    def __post_init__(self):
        self.delays_s = np.asarray(self.delays_s, dtype=float)
        self.powers_db = np.asarray(self.powers_db, dtype=float)
        if self.delays_s.shape != self.powers_db.shape or self.delays_s.ndim != 1:
            raise ValueError("delays and powers must be 1-d arrays of equal length")
        if self.delays_s.size and np.any(np.diff(self.delays_s) <= 0):
            raise ValueError("PDP delays must be strictly increasing")
        if self.delays_s.size and self.delays_s[-1] > MAX_EXCESS_DELAY_S:
            raise ValueError(f"PDP delays exceed the {MAX_EXCESS_DELAY_S * 1e6:g} us "
                             "maximum measurable excess delay")


def threshold_pdp(pdp: Pdp) -> Pdp:
    """Keep exactly the taps at or above the noise floor plus the 15 dB margin."""
    keep = pdp.powers_db >= pdp.noise_floor_mean_db + PDP_THRESHOLD_MARGIN_DB
    return Pdp(delays_s=pdp.delays_s[keep], powers_db=pdp.powers_db[keep],
               noise_floor_mean_db=pdp.noise_floor_mean_db)


@dataclass
class BeamSet:
    """Non-overlapping receive beams: boresight angles in deg, linear powers."""

    azimuth_deg: np.ndarray
    zenith_deg: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        self.azimuth_deg = np.asarray(self.azimuth_deg, dtype=float)
        self.zenith_deg = np.asarray(self.zenith_deg, dtype=float)
        self.powers = np.asarray(self.powers, dtype=float)
        n = self.powers.size
        if n == 0:
            raise ValueError("beam set must be non-empty")
        if self.azimuth_deg.shape != (n,) or self.zenith_deg.shape != (n,):
            raise ValueError("beam angles and powers must have equal length")
        if np.any(self.powers <= 0):
            raise ValueError("beam powers must be positive")
        boresights = set(zip(self.azimuth_deg.tolist(), self.zenith_deg.tolist()))
        if len(boresights) != n:
            raise ValueError("beam boresights must be pairwise distinct")

    def __len__(self) -> int:
        return self.powers.size


def synth_omni_power(beams: BeamSet) -> float:
    """Omnidirectional receive power synthesized as the linear sum over beams."""
    return float(np.sum(beams.powers))


@dataclass(frozen=True)
class PathLossSample:
    """One omnidirectional path loss observation."""

    distance_m: float
    path_loss_db: float
    state: ChannelState
    band: FrequencyBand

    def __post_init__(self):
        if self.distance_m < 1.0:
            raise ValueError(f"distance must be at least 1 m, got {self.distance_m}")
        if not np.isfinite(self.path_loss_db):
            raise ValueError("path loss must be finite")


@dataclass
class FitResult:
    """Least-squares fit of the log-distance model plus its residuals."""

    pl0_db: float
    ple: float
    sigma_s_db: float
    residuals_db: np.ndarray
    n: int


def fit_path_loss_xy(distances_m, losses_db) -> FitResult:
    """OLS of path loss on log10(distance): intercept is pl0, slope/10 is ple."""
    d = np.asarray(distances_m, dtype=float)
    y = np.asarray(losses_db, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise ValueError("distances and losses must be 1-d arrays of equal length")
    if d.size < 3:
        raise ValueError(f"at least 3 samples are required for a fit, got {d.size}")
    if np.any(d <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("distances must be positive and losses finite")
    x = np.log10(d)
    if np.ptp(x) == 0:
        raise ValueError("all distances are identical; the regression is rank-deficient")
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - design @ coef
    sigma = float(np.sqrt(np.sum(residuals ** 2) / (d.size - 2)))
    return FitResult(pl0_db=float(coef[0]), ple=float(coef[1]) / 10.0,
                     sigma_s_db=sigma, residuals_db=residuals, n=d.size)


def fit_path_loss(samples: Sequence[PathLossSample]) -> FitResult:
    """Fit the log-distance model to a list of path loss samples."""
    return fit_path_loss_xy([s.distance_m for s in samples],
                            [s.path_loss_db for s in samples])


@dataclass(frozen=True)
class LogNormalFit:
    """Sample moments of log10(values)."""

    mu: float
    sigma: float


def fit_lognormal(values) -> LogNormalFit:
    """Sample mean and (n-1) standard deviation of log10 of positive values."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("at least two values are required")
    if np.any(v <= 0):
        raise ValueError("log-normal moments require strictly positive values")
    logs = np.log10(v)
    return LogNormalFit(mu=float(np.mean(logs)), sigma=float(np.std(logs, ddof=1)))


def fit_distance_sigma(residuals_db, distances_m) -> float:
    """ML coefficient of the distance-scaled shadow model S ~ N(0, a*log10(d)).

    Closed form from the likelihood stationary point:
    a = sqrt(mean((s_i / log10 d_i)^2)).
    """
    s = np.asarray(residuals_db, dtype=float)
    d = np.asarray(distances_m, dtype=float)
    if s.shape != d.shape or s.ndim != 1 or s.size == 0:
        raise ValueError("residuals and distances must be non-empty 1-d arrays of equal length")
    if np.any(d <= 1.0):
        raise ValueError("the distance-scaled model requires d > 1 m everywhere")
    scale = np.log10(d)
    return float(np.sqrt(np.mean((s / scale) ** 2)))


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    if xa.size < 3:
        raise ValueError(f"at least 3 pairs are required, got {xa.size}")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = np.sqrt(np.sum(dx ** 2))
    sy = np.sqrt(np.sum(dy ** 2))
    if sx == 0 or sy == 0:
        raise ValueError("correlation is undefined for zero-variance input")
    return float(np.sum(dx * dy) / (sx * sy))


def probability_plot_points(values):
    """Normal probability plot coordinates.

    Returns (theoretical_quantiles, ordered_values): the values sorted
    ascending, paired with standard-normal quantiles at (i - 0.5)/n.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("at least two values are required")
    ordered = np.sort(v)
    ranks = (np.arange(1, v.size + 1) - 0.5) / v.size
    return ndtri(ranks), ordered


def taps_from_measurement(pdp: Pdp, beams: Optional[BeamSet] = None) -> TapSet:
    """Thresholded PDP as a tap set, angles taken from the strongest beam.

    No sub-beam angle estimation is attempted: every retained tap is
    assigned the boresight of the maximum-power beam when beams are
    present.
    """
    kept = threshold_pdp(pdp)
    powers = 10.0 ** (kept.powers_db / 10.0)
    azimuth = zenith = None
    if beams is not None and kept.delays_s.size:
        strongest = int(np.argmax(beams.powers))
        azimuth = np.full(kept.delays_s.size, beams.azimuth_deg[strongest])
        zenith = np.full(kept.delays_s.size, beams.zenith_deg[strongest])
    return TapSet(delays_s=kept.delays_s, powers=powers,
                  azimuth_deg=azimuth, zenith_deg=zenith)
