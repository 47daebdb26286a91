"""Activity taxonomy, time discretization, and passenger feature encoding.

Everything downstream (trace ingestion, the synthetic generator, the neural
models, the evaluation harness) shares the definitions in this module: the six
activity codes, the 36-unit time axis covering the last 180 minutes before a
scheduled departure, and the five normalized static features per passenger.

All types are immutable after construction and all functions are pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError


class ActivityType(enum.IntEnum):
    """The six passenger states, one assigned per time unit.

    Code assignment is fixed so that serialized sequences, confusion
    orderings, and tie-breaks are stable.
    """

    NOT_AT_AIRPORT = 0
    MANDATORY = 1      # check-in / security / customs queues and service
    EATING = 2
    SHOPPING = 3
    WAITING = 4        # gate-side waiting areas
    OTHER = 5

    @property
    def canonical_name(self) -> str:
        return CANONICAL_NAMES[int(self)]


CANONICAL_NAMES = ("NotAtAirport", "Mandatory", "Eating", "Shopping", "Waiting", "Other")
N_ACTIVITIES = len(CANONICAL_NAMES)

#: Activities a passenger can pick during the discretionary phase of a visit.
DISCRETIONARY = (ActivityType.MANDATORY, ActivityType.EATING,
                 ActivityType.SHOPPING, ActivityType.OTHER)

FEATURE_NAMES = ("arrival_time", "earliness", "destination", "carrier", "brand")
N_FEATURES = len(FEATURE_NAMES)


def activity_code_table() -> list[str]:
    """``code,name`` CSV lines emitted in every report header for audit."""
    return [f"{int(a)},{a.canonical_name}" for a in ActivityType]


@dataclass(frozen=True)
class TimeAxis:
    """Discretization of the pre-departure horizon into equal units.

    Unit ``k`` spans the minutes-before-departure interval
    ``(horizon - unit*(k+1), horizon - unit*k]``: unit 0 is the earliest,
    unit ``n_units - 1`` touches departure.
    """

    horizon_minutes: int = 180
    unit_minutes: int = 5

    def __post_init__(self):
        if self.horizon_minutes <= 0 or self.unit_minutes <= 0:
            raise ValidationError("time axis lengths must be positive")
        if self.horizon_minutes % self.unit_minutes != 0:
            raise ValidationError(
                f"horizon ({self.horizon_minutes} min) is not a multiple of the "
                f"unit ({self.unit_minutes} min)")

    @property
    def n_units(self) -> int:
        return self.horizon_minutes // self.unit_minutes

    def minutes_before_hi(self, k: int) -> int:
        """Upper (earlier) edge of unit k, in minutes before departure."""
        return self.horizon_minutes - self.unit_minutes * k

    def minutes_before_lo(self, k: int) -> int:
        return self.horizon_minutes - self.unit_minutes * (k + 1)


DEFAULT_AXIS = TimeAxis()


def unit_index(minutes_before: float, axis: TimeAxis = DEFAULT_AXIS) -> int:
    """Map a minutes-before-departure instant to its unit index.

    Defined on ``(0, horizon]``; the horizon boundary maps to unit 0.
    """
    if not (0.0 < minutes_before <= axis.horizon_minutes):
        raise DomainError(
            f"minutes_before must lie in (0, {axis.horizon_minutes}], got {minutes_before!r}")
    k = int((axis.horizon_minutes - minutes_before) // axis.unit_minutes)
    return min(max(k, 0), axis.n_units - 1)


def critical_period_units(axis: TimeAxis = DEFAULT_AXIS,
                          lo_minutes: float = 30.0,
                          hi_minutes: float = 100.0) -> frozenset[int]:
    """Units whose upper span edge falls inside ``[lo_minutes, hi_minutes]``.

    With the default axis and bounds this is ``{16..30}``: the 100-to-30-minute
    window where passengers are most dispersed across activities. Both boundary
    units are included.
    """
    if lo_minutes > hi_minutes:
        raise DomainError("lo_minutes must not exceed hi_minutes")
    return frozenset(
        k for k in range(axis.n_units)
        if lo_minutes <= axis.minutes_before_hi(k) <= hi_minutes)


def one_hot(code: int) -> np.ndarray:
    """Length-6 indicator vector for an activity code."""
    c = int(code)
    if not 0 <= c < N_ACTIVITIES:
        raise DomainError(f"invalid activity code {code!r}")
    v = np.zeros(N_ACTIVITIES)
    v[c] = 1.0
    return v


def one_hot_matrix(codes: np.ndarray) -> np.ndarray:
    """Row-wise one-hot encoding of an integer code array (any shape -> +1 axis)."""
    codes = np.asarray(codes)
    if codes.size and (codes.min() < 0 or codes.max() >= N_ACTIVITIES):
        raise DomainError("invalid activity code in array")
    out = np.zeros(codes.shape + (N_ACTIVITIES,))
    np.put_along_axis(out, codes[..., None].astype(np.int64), 1.0, axis=-1)
    return out


@dataclass(frozen=True)
class PassengerFeatures:
    """The five static inputs: two normalized reals and three dummies."""

    arrival_time: float   # hour of day / 24
    earliness: float      # minutes before scheduled departure / horizon, clipped to 1
    destination: float    # 1 short-range, 0 medium-range
    carrier: float        # 1 traditional, 0 low-cost
    brand: float          # 1 brand-A device, 0 other

    def __post_init__(self):
        for name in ("arrival_time", "earliness"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or not np.isfinite(v):
                raise ValidationError(f"{name} must lie in [0, 1], got {v!r}")
        for name in ("destination", "carrier", "brand"):
            if getattr(self, name) not in (0.0, 1.0):
                raise ValidationError(f"{name} must be 0 or 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.arrival_time, self.earliness,
                         self.destination, self.carrier, self.brand])


@dataclass(frozen=True)
class RawPassengerInfo:
    """Unnormalized per-passenger facts, as recovered from traces and flights."""

    arrival_ts: float               # epoch seconds of first detection
    scheduled_departure_ts: float   # epoch seconds
    destination_range: int          # 1 short-range, 0 medium-range
    carrier_type: int               # 1 traditional, 0 low-cost
    device_brand: int               # 1 brand-A, 0 other


def normalize_features(raw: RawPassengerInfo,
                       axis: TimeAxis = DEFAULT_AXIS) -> PassengerFeatures:
    """Normalize raw passenger facts into model inputs.

    Arrival hour is scaled by 24; earliness is scaled by the horizon and
    clipped at 1 (arrivals earlier than the horizon carry no extra signal
    inside the modeled window).
    """
    if raw.arrival_ts > raw.scheduled_departure_ts:
        raise ValidationError("arrival is after the scheduled departure")
    hour_of_day = (raw.arrival_ts % 86400.0) / 3600.0
    minutes_before = (raw.scheduled_departure_ts - raw.arrival_ts) / 60.0
    return PassengerFeatures(
        arrival_time=hour_of_day / 24.0,
        earliness=min(minutes_before, float(axis.horizon_minutes)) / axis.horizon_minutes,
        destination=float(raw.destination_range),
        carrier=float(raw.carrier_type),
        brand=float(raw.device_brand),
    )


def validate_sequence_codes(units: np.ndarray, axis: TimeAxis = DEFAULT_AXIS) -> None:
    """Check one activity-code vector against the sequence invariants.

    Length must equal the axis, codes must be valid, and NOT_AT_AIRPORT may
    only form a leading run: once a passenger is detected, leaving the
    airport again is not representable.
    """
    units = np.asarray(units)
    if units.shape != (axis.n_units,):
        raise ValidationError(f"sequence must have {axis.n_units} units, got shape {units.shape}")
    if units.size and (units.min() < 0 or units.max() >= N_ACTIVITIES):
        raise ValidationError("sequence contains an invalid activity code")
    present = units != ActivityType.NOT_AT_AIRPORT
    if present.any():
        first = int(np.argmax(present))
        if (units[first:] == ActivityType.NOT_AT_AIRPORT).any():
            raise ValidationError("NOT_AT_AIRPORT reappears after first detection")


class ActivitySequence:
    """A 36-unit activity-code vector for one passenger, validated and frozen."""

    __slots__ = ("units", "flight_departure", "passenger_id")

    def __init__(self, units, flight_departure: float, passenger_id: str,
                 axis: TimeAxis = DEFAULT_AXIS):
        units = np.asarray(units, dtype=np.int64).copy()
        validate_sequence_codes(units, axis)
        units.flags.writeable = False
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "flight_departure", float(flight_departure))
        object.__setattr__(self, "passenger_id", str(passenger_id))

    def __setattr__(self, name, value):
        raise AttributeError("ActivitySequence is immutable")

    def __eq__(self, other):
        return (isinstance(other, ActivitySequence)
                and self.passenger_id == other.passenger_id
                and self.flight_departure == other.flight_departure
                and np.array_equal(self.units, other.units))

    def __repr__(self):
        return (f"ActivitySequence(passenger_id={self.passenger_id!r}, "
                f"units={self.units.tolist()})")
