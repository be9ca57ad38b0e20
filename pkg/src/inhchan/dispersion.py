"""Delay- and angle-domain dispersion metrics over multipath tap sets.

Power-weighted delay moments, coherence bandwidth, and the circular
angle-spread statistic applied to azimuth and zenith coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

# Sounder grid constants reused throughout: delay bin width and the largest
# excess delay the correlator can observe.
DELAY_RESOLUTION_S = 2.5e-9
MAX_EXCESS_DELAY_S = 8e-6

# Resultant magnitudes below this are treated as isotropic, where the
# spread statistic blows up.
_MIN_RESULTANT = 1e-12


@dataclass
class TapSet:
    """Multipath components: delays in s, linear powers, optional angles in deg."""

    delays_s: np.ndarray
    powers: np.ndarray
    azimuth_deg: Optional[np.ndarray] = None
    zenith_deg: Optional[np.ndarray] = None

    def __post_init__(self):
        self.delays_s = np.asarray(self.delays_s, dtype=float)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.delays_s.shape != self.powers.shape or self.delays_s.ndim != 1:
            raise ValueError("delays and powers must be 1-d arrays of equal length")
        if np.any(self.powers <= 0):
            raise ValueError("tap powers must be positive")
        if np.any(self.delays_s < 0):
            raise ValueError("tap delays must be non-negative")
        if np.any(self.delays_s > MAX_EXCESS_DELAY_S):
            raise ValueError(f"tap delays exceed the {MAX_EXCESS_DELAY_S * 1e6:g} us "
                             "maximum measurable excess delay")
        for name in ("azimuth_deg", "zenith_deg"):
            angles = getattr(self, name)
            if angles is not None:
                angles = np.asarray(angles, dtype=float)
                if angles.shape != self.delays_s.shape:
                    raise ValueError(f"{name} must match the number of taps")
                setattr(self, name, angles)

    def __len__(self) -> int:
        return self.delays_s.size


class CoherenceLevel(Enum):
    """Frequency-correlation level; value is the divisor K in 1/(K*tau_rms)."""

    R50 = 5.0
    R90 = 50.0


def _require_taps(taps: TapSet):
    if len(taps) == 0:
        raise ValueError("delay moments are undefined for an empty tap set")


def mean_delay(taps: TapSet) -> float:
    """Power-weighted mean delay in seconds."""
    _require_taps(taps)
    return float(np.sum(taps.delays_s * taps.powers) / np.sum(taps.powers))


def rms_delay_spread(taps: TapSet) -> float:
    """Power-weighted RMS delay spread (second central moment) in seconds."""
    _require_taps(taps)
    tm = mean_delay(taps)
    var = np.sum((taps.delays_s - tm) ** 2 * taps.powers) / np.sum(taps.powers)
    return float(np.sqrt(var))


def coherence_bandwidth(tau_rms_s: float, level: CoherenceLevel) -> float:
    """Coherence bandwidth 1/(K*tau_rms) in Hz for the given correlation level."""
    if tau_rms_s <= 0:
        raise ValueError(f"tau_rms must be positive, got {tau_rms_s}")
    return 1.0 / (level.value * tau_rms_s)


def angular_spread(angles_deg, powers) -> float:
    """Circular spread sqrt(-2*ln r) of power over angle, returned in degrees.

    r is the power-weighted resultant magnitude of the unit phasors at each
    angle, so the statistic is invariant to a common rotation and to power
    scaling. Near-isotropic inputs (r ~ 0) raise rather than clamp.
    """
    angles = np.asarray(angles_deg, dtype=float)
    p = np.asarray(powers, dtype=float)
    if angles.shape != p.shape or angles.ndim != 1 or angles.size == 0:
        raise ValueError("angles and powers must be non-empty 1-d arrays of equal length")
    if np.any(p <= 0):
        raise ValueError("powers must be positive")
    resultant = np.abs(np.sum(p * np.exp(1j * np.deg2rad(angles)))) / np.sum(p)
    if resultant < _MIN_RESULTANT:
        raise ValueError("angular spread undefined: power is spread near-isotropically")
    # Within a few ulps of 1 the log is pure rounding noise that the square
    # root amplifies; a resultant this close to 1 is a single direction.
    if resultant >= 1.0 - 1e-15:
        return 0.0
    return float(np.degrees(np.sqrt(-2.0 * np.log(resultant))))


def asa_from_taps(taps: TapSet) -> float:
    """Azimuth angle spread of the tap set in degrees."""
    if taps.azimuth_deg is None:
        raise ValueError("tap set carries no azimuth angles")
    return angular_spread(taps.azimuth_deg, taps.powers)


def zsa_from_taps(taps: TapSet) -> float:
    """Zenith angle spread of the tap set in degrees.

    Zenith angles are signed offsets about boresight, where the circular
    statistic is well conditioned within the array field of view.
    """
    if taps.zenith_deg is None:
        raise ValueError("tap set carries no zenith angles")
    return angular_spread(taps.zenith_deg, taps.powers)
