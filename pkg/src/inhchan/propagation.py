"""Deterministic path loss and shadow fading math.

Log-distance path loss anchored at 1 m, the free-space reference used for
sanity checks, the two-slope NLOS floor, and the two shadow-sigma models
(constant and distance-scaled).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

SPEED_OF_LIGHT_M_S = 299_792_458.0

REFERENCE_DISTANCE_M = 1.0


def fspl_db(frequency_hz: float, distance_m: float) -> float:
    """Free-space path loss 20*log10(4*pi*d*f/c) in dB."""
    if frequency_hz <= 0:
        raise ValueError(f"frequency must be positive, got {frequency_hz}")
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * frequency_hz / SPEED_OF_LIGHT_M_S)


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance model: PL(d) = pl0 + 10*ple*log10(d/d0) + S."""

    pl0_db: float
    ple: float
    d0_m: float = REFERENCE_DISTANCE_M

    def __post_init__(self):
        if self.ple <= 0:
            raise ValueError(f"path loss exponent must be positive, got {self.ple}")
        if self.d0_m != REFERENCE_DISTANCE_M:
            raise ValueError("reference distance is fixed at 1 m")


def path_loss_db(model: PathLossModel, distance_m: float, shadow_db: float = 0.0) -> float:
    """Evaluate the log-distance model at ``distance_m`` with an additive shadow term."""
    if distance_m < model.d0_m:
        raise ValueError(
            f"model not defined inside the reference distance: d={distance_m} < {model.d0_m}"
        )
    return model.pl0_db + 10.0 * model.ple * math.log10(distance_m / model.d0_m) + shadow_db


def effective_nlos_pl_db(los: PathLossModel, nlos: PathLossModel, distance_m: float) -> float:
    """Two-slope NLOS path loss: max of the LOS and NLOS distance laws.

    Shadow fading is applied by the caller after the max.
    """
    if los.d0_m != nlos.d0_m:
        raise ValueError("LOS and NLOS models must share the reference distance")
    return max(path_loss_db(los, distance_m), path_loss_db(nlos, distance_m))


@dataclass(frozen=True)
class ConstantShadow:
    """Distance-independent shadow fading sigma."""

    sigma_db: float

    def __post_init__(self):
        if self.sigma_db <= 0:
            raise ValueError(f"shadow sigma must be positive, got {self.sigma_db}")


@dataclass(frozen=True)
class DistanceScaledShadow:
    """Shadow sigma growing with log-distance: sigma(d) = coeff * log10(d).

    The raw law vanishes at 1 m which would make close-in shadowing
    deterministic, so the result is floored at ``sigma_min_db``.
    """

    coeff_db_per_decade: float
    sigma_min_db: float = 0.5

    def __post_init__(self):
        if self.coeff_db_per_decade <= 0:
            raise ValueError(f"shadow coefficient must be positive, got {self.coeff_db_per_decade}")
        if self.sigma_min_db <= 0:
            raise ValueError(f"sigma floor must be positive, got {self.sigma_min_db}")


ShadowModel = Union[ConstantShadow, DistanceScaledShadow]


def shadow_sigma_db(shadow: ShadowModel, distance_m: float) -> float:
    """Shadow fading standard deviation at ``distance_m`` in dB."""
    if distance_m < 1.0:
        raise ValueError(f"shadow models are defined for d >= 1 m, got {distance_m}")
    if isinstance(shadow, ConstantShadow):
        return shadow.sigma_db
    if isinstance(shadow, DistanceScaledShadow):
        return max(shadow.coeff_db_per_decade * math.log10(distance_m), shadow.sigma_min_db)
    raise TypeError(f"unknown shadow model: {shadow!r}")
