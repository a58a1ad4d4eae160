"""Hard and soft range classification for pathology observations.

The hard range is the laboratory-reported normal interval [low, high].
The soft range shrinks it by a margin at each end (default 2.5% of the
interval width), so borderline-normal results can be treated as abnormal.
Both intervals are closed: a value exactly on a bound is inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .cohort import PathologyObservation, ReferenceRange

SOFT_MARGIN_DEFAULT = 0.025


class HardStatus(Enum):
    BELOW = -1
    IN_RANGE = 0
    ABOVE = 1


class SoftStatus(Enum):
    OUT_SOFT_LOW = -1
    IN_SOFT = 0
    OUT_SOFT_HIGH = 1


@dataclass(frozen=True)
class RangeStatus:
    hard: HardStatus
    soft: SoftStatus

    @property
    def hard_out(self) -> bool:
        return self.hard is not HardStatus.IN_RANGE

    @property
    def soft_out(self) -> bool:
        return self.soft is not SoftStatus.IN_SOFT


def soft_bounds(range_: ReferenceRange, margin: float = SOFT_MARGIN_DEFAULT) -> tuple[float, float]:
    """Shrink a reference range by margin * width at each end.

    For any margin < 0.5 the result never inverts: soft_low < soft_high.
    """
    m = margin * range_.width
    return range_.low + m, range_.high - m


def classify_value(value: float, range_: ReferenceRange, margin: float = SOFT_MARGIN_DEFAULT) -> RangeStatus:
    if value < range_.low:
        hard = HardStatus.BELOW
    elif value > range_.high:
        hard = HardStatus.ABOVE
    else:
        hard = HardStatus.IN_RANGE
    soft_low, soft_high = soft_bounds(range_, margin)
    if value < soft_low:
        soft = SoftStatus.OUT_SOFT_LOW
    elif value > soft_high:
        soft = SoftStatus.OUT_SOFT_HIGH
    else:
        soft = SoftStatus.IN_SOFT
    return RangeStatus(hard=hard, soft=soft)


def classify(obs: PathologyObservation, margin: float = SOFT_MARGIN_DEFAULT) -> RangeStatus:
    """Classify one observation against its own laboratory range."""
    return classify_value(obs.value, obs.range, margin)
