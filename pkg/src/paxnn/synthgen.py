"""Seeded synthetic passenger populations.

The generator stands in for unavailable terminal tracking data. Each
passenger follows a simple story on the 36-unit grid: not at the airport
until their drawn earliness, a mandatory check-in run, a semi-Markov
discretionary phase (mandatory errands, eating, shopping, other) whose odds
shift with remaining time and weakly with the passenger dummies, a security
run triggered at a drawn minutes-before threshold, an optional detour, and
a gate-side waiting run through departure.

Earliness dominates behavior by construction: it alone decides when the
sequence leaves NOT_AT_AIRPORT, so feature-ablation experiments on this
data reproduce the expected ordering (dropping earliness hurts far more
than dropping any dummy).

Every passenger draws from an independent RNG stream keyed by
(master seed, passenger index): populations are byte-identical however
generation is ordered or parallelized.

Round-trip mode emits stays/flights/area-map CSVs that re-ingest into the
exact same dataset: stays are unit-aligned (except the arrival instant) and
sequences are produced by the same reconstruction code ingestion uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activity_model import (DEFAULT_AXIS, ActivityType, N_ACTIVITIES, TimeAxis,
                             RawPassengerInfo, normalize_features, unit_index)
from .errors import ValidationError
from .ingestion import (AreaMap, Dataset, FlightRecord, StayRecord,
                        assemble_dataset)

#: epoch seconds of a midnight, so hour-of-day arithmetic stays exact
DAY_ANCHOR = 1_704_067_200

#: discretionary choice set, in transition-matrix column order
CHOICES = (int(ActivityType.MANDATORY), int(ActivityType.EATING),
           int(ActivityType.SHOPPING), int(ActivityType.OTHER))

SYNTH_AREAS = {
    # area_id: (activity_code, is_boarding_gate, is_pre_security)
    "CHECKIN": (int(ActivityType.MANDATORY), False, True),
    "SECURITY": (int(ActivityType.MANDATORY), False, False),
    "FOOD_COURT": (int(ActivityType.EATING), False, False),
    "SHOPS": (int(ActivityType.SHOPPING), False, False),
    "LOUNGE": (int(ActivityType.OTHER), False, False),
    "GATES": (int(ActivityType.WAITING), True, False),
}
_AREA_FOR_CODE = {int(ActivityType.EATING): "FOOD_COURT",
                  int(ActivityType.SHOPPING): "SHOPS",
                  int(ActivityType.OTHER): "LOUNGE",
                  int(ActivityType.WAITING): "GATES"}


def synth_area_map() -> AreaMap:
    return AreaMap(SYNTH_AREAS)


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs of the synthetic population; defaults give the standard corpus."""

    n_passengers: int = 5805
    seed: int = 42
    # earliness (minutes before departure at first detection), clipped [15, 180]
    earliness_mean: float = 80.0
    earliness_std: float = 30.0
    arrival_hour_min: float = 4.5
    arrival_hour_max: float = 21.5
    # dummy marginals
    p_short_range: float = 0.80
    p_traditional: float = 0.55
    p_brand: float = 0.50
    # discretionary semi-Markov: one weight row per remaining-time band,
    # columns (Mandatory, Eating, Shopping, Other)
    band_edges_minutes: tuple = (90.0, 45.0)
    transition_weights: tuple = (
        (0.30, 0.25, 0.25, 0.20),   # plenty of time remaining
        (0.20, 0.30, 0.30, 0.20),   # mid window
        (0.30, 0.20, 0.25, 0.25),   # clock running down
    )
    dwell_mean_units: float = 2.5
    checkin_dwell_mean_units: float = 2.0
    # switch to security, in minutes before departure
    security_trigger_mean: float = 45.0
    security_trigger_std: float = 10.0
    security_trigger_clip: tuple = (20.0, 120.0)
    security_dwell_mean_units: float = 1.5
    # optional detour between security and the gate
    post_security_other_prob: float = 0.10
    post_security_other_dwell_units: float = 1.5
    # units before departure that are always gate-side waiting
    min_waiting_units: int = 2
    # log-odds couplings of the dummies into discretionary choice
    effect_brand_eating: float = 0.25
    effect_carrier_shopping: float = 0.20
    effect_destination_other: float = 0.15
    effect_mealtime_eating: float = 0.30
    # minutes added to the security trigger when brand is 1 (coupled preset)
    effect_brand_security_shift: float = 0.0

    def __post_init__(self):
        if self.n_passengers < 0:
            raise ValidationError("n_passengers must be non-negative")
        for name in ("p_short_range", "p_traditional", "p_brand",
                     "post_security_other_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        if not 0 < self.earliness_mean <= 180.0:
            raise ValidationError(
                f"earliness_mean must lie in (0, 180], got {self.earliness_mean}")
        if self.earliness_std < 0 or self.security_trigger_std < 0:
            raise ValidationError("distribution std must be non-negative")
        w = np.asarray(self.transition_weights, dtype=np.float64)
        if w.shape != (len(self.band_edges_minutes) + 1, len(CHOICES)):
            raise ValidationError(
                f"transition_weights must be {len(self.band_edges_minutes) + 1}x"
                f"{len(CHOICES)}, got {w.shape}")
        if (w < 0).any() or (w.sum(axis=1) <= 0).any():
            raise ValidationError("transition weights must be >= 0 with positive row sums")
        for name in ("dwell_mean_units", "checkin_dwell_mean_units",
                     "security_dwell_mean_units", "post_security_other_dwell_units"):
            if getattr(self, name) < 1.0:
                raise ValidationError(f"{name} must be >= 1 unit")
        if self.min_waiting_units < 0:
            raise ValidationError("min_waiting_units must be >= 0")
        if not self.arrival_hour_min <= self.arrival_hour_max:
            raise ValidationError("arrival_hour_min must not exceed arrival_hour_max")


def default_params(**overrides) -> GeneratorParams:
    return GeneratorParams(**overrides)


def long_dependency_params(**overrides) -> GeneratorParams:
    """High-churn variant: frequent transitions, an uncertain security time,
    and a busy tail, so multi-step rollouts have room to compound errors."""
    base = dict(
        earliness_mean=110.0, earliness_std=25.0,
        dwell_mean_units=1.7,
        transition_weights=(
            (0.22, 0.27, 0.27, 0.24),
            (0.22, 0.28, 0.28, 0.22),
            (0.25, 0.24, 0.26, 0.25),
        ),
        security_trigger_mean=55.0, security_trigger_std=18.0,
        security_trigger_clip=(15.0, 110.0),
        security_dwell_mean_units=1.6,
        post_security_other_prob=0.65,
        post_security_other_dwell_units=5.0,
        min_waiting_units=0,
    )
    base.update(overrides)
    return GeneratorParams(**base)


def coupled_params(**overrides) -> GeneratorParams:
    """Strong brand-to-eating coupling: history alone cannot tell early on
    which branch a passenger prefers, so static inputs carry real signal."""
    base = dict(
        earliness_mean=95.0, earliness_std=25.0,
        dwell_mean_units=1.5,
        transition_weights=(
            (0.10, 0.40, 0.40, 0.10),
            (0.10, 0.40, 0.40, 0.10),
            (0.15, 0.35, 0.35, 0.15),
        ),
        effect_brand_eating=2.2,
        effect_brand_security_shift=-22.0,
        security_trigger_std=8.0,
        p_brand=0.5,
    )
    base.update(overrides)
    return GeneratorParams(**base)


def _band_index(params, remaining_minutes):
    for i, edge in enumerate(params.band_edges_minutes):
        if remaining_minutes > edge:
            return i
    return len(params.band_edges_minutes)


def _mealtime(hour_of_day):
    return 11.5 <= hour_of_day <= 14.0 or 18.0 <= hour_of_day <= 20.5


def _choice_probs(params, remaining_minutes, dep_ts, dest, carrier, brand):
    w = np.asarray(params.transition_weights[_band_index(params, remaining_minutes)],
                   dtype=np.float64).copy()
    clock_hour = ((dep_ts - remaining_minutes * 60.0) % 86400.0) / 3600.0
    logit = np.zeros(len(CHOICES))
    logit[1] += params.effect_brand_eating * brand
    logit[1] += params.effect_mealtime_eating * (1.0 if _mealtime(clock_hour) else 0.0)
    logit[2] += params.effect_carrier_shopping * carrier
    logit[3] += params.effect_destination_other * dest
    w *= np.exp(logit)
    return w / w.sum()


def _geometric(rng, mean_units):
    return int(rng.geometric(1.0 / mean_units))


def _plan_units(params, rng, earliness_min, security_min, dep_ts,
                dest, carrier, brand, axis):
    n = axis.n_units
    codes = np.zeros(n, dtype=np.int64)
    k0 = unit_index(earliness_min, axis)
    ks = max(unit_index(security_min, axis), k0)
    pos = min(k0 + _geometric(rng, params.checkin_dwell_mean_units), ks)
    codes[k0:pos] = ActivityType.MANDATORY
    while pos < ks:
        probs = _choice_probs(params, axis.minutes_before_hi(pos), dep_ts,
                              dest, carrier, brand)
        act = CHOICES[int(rng.choice(len(CHOICES), p=probs))]
        end = min(pos + _geometric(rng, params.dwell_mean_units), ks)
        codes[pos:end] = act
        pos = end
    tail = max(n - 1 - params.min_waiting_units, ks)
    end = min(ks + _geometric(rng, params.security_dwell_mean_units), tail)
    codes[ks:end] = ActivityType.MANDATORY
    pos = max(end, ks)
    if pos < tail and rng.random() < params.post_security_other_prob:
        end = min(pos + _geometric(rng, params.post_security_other_dwell_units), tail)
        codes[pos:end] = ActivityType.OTHER
        pos = end
    codes[pos:] = ActivityType.WAITING
    return codes, k0


def _runs(codes, start):
    """Run-length encode codes[start:] as (code, first_unit, last_unit)."""
    out = []
    k = start
    while k < len(codes):
        j = k
        while j + 1 < len(codes) and codes[j + 1] == codes[k]:
            j += 1
        out.append((int(codes[k]), k, j))
        k = j + 1
    return out


def generate_passenger(params: GeneratorParams, index: int,
                       axis: TimeAxis = DEFAULT_AXIS):
    """Build one passenger: (stays, flight, features array, codes).

    Uses an RNG stream keyed by (seed, index); independent of every other
    passenger.
    """
    rng = np.random.default_rng([params.seed, index])
    e = float(np.clip(rng.normal(params.earliness_mean, params.earliness_std),
                      15.0, float(axis.horizon_minutes)))
    e_sec = int(round(e * 60.0))
    arrival_hour = rng.uniform(params.arrival_hour_min, params.arrival_hour_max)
    arrival_ts = DAY_ANCHOR + int(round(arrival_hour * 3600.0))
    dep_ts = arrival_ts + e_sec
    dest = int(rng.random() < params.p_short_range)
    carrier = int(rng.random() < params.p_traditional)
    brand = int(rng.random() < params.p_brand)
    lo, hi = params.security_trigger_clip
    trigger_mean = (params.security_trigger_mean
                    + params.effect_brand_security_shift * brand)
    s = float(np.clip(rng.normal(trigger_mean, params.security_trigger_std), lo, hi))
    s = min(s, e_sec / 60.0 - axis.unit_minutes)
    s = max(s, 1.0)

    codes, k0 = _plan_units(params, rng, e_sec / 60.0, s, dep_ts,
                            dest, carrier, brand, axis)

    device = f"p{index:05d}"
    grid_start = dep_ts - axis.horizon_minutes * 60.0
    unit_s = axis.unit_minutes * 60.0
    stays = []
    mandatory_seen = False
    for code, first, last in _runs(codes, k0):
        if code == ActivityType.MANDATORY:
            area = "SECURITY" if mandatory_seen else "CHECKIN"
            mandatory_seen = True
        else:
            area = _AREA_FOR_CODE[code]
        enter = dep_ts - e_sec if first == k0 else grid_start + first * unit_s
        exit_ = dep_ts if last == axis.n_units - 1 else grid_start + (last + 1) * unit_s
        stays.append(StayRecord(device, area, float(enter), float(exit_)))
    flight = FlightRecord(device, f"FL{index:04d}", float(dep_ts),
                          dest, carrier, brand)
    raw = RawPassengerInfo(float(arrival_ts), float(dep_ts), dest, carrier, brand)
    feats = normalize_features(raw, axis).as_array()
    return stays, flight, feats, codes


def generate_population(params: GeneratorParams,
                        axis: TimeAxis = DEFAULT_AXIS) -> Dataset:
    """Deterministic synthetic Dataset; sequences come from the same
    reconstruction code ingestion uses, applied to the emitted stays."""
    area_map = synth_area_map()
    kept = {}
    flights = {}
    for i in range(params.n_passengers):
        stays, flight, _, _ = generate_passenger(params, i, axis)
        kept[flight.device_id] = stays
        flights[flight.device_id] = flight
    ds = assemble_dataset(kept, flights, area_map, axis,
                          provenance={"generator_seed": str(params.seed),
                                      "n_passengers": str(params.n_passengers)})
    return ds


def write_trace_files(params: GeneratorParams, stays_path, flights_path,
                      area_map_path, axis: TimeAxis = DEFAULT_AXIS) -> None:
    """Round-trip mode: emit the CSVs ingestion consumes."""
    with open(area_map_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("area_id,activity_code,is_boarding_gate,is_pre_security\n")
        for area in sorted(SYNTH_AREAS):
            code, gate, presec = SYNTH_AREAS[area]
            fh.write(f"{area},{code},{int(gate)},{int(presec)}\n")
    with open(stays_path, "w", encoding="utf-8", newline="") as sf, \
            open(flights_path, "w", encoding="utf-8", newline="") as ff:
        sf.write("device_id,area_id,enter_ts,exit_ts\n")
        ff.write("device_id,flight_id,scheduled_departure,"
                 "destination_range,carrier_type,device_brand\n")
        for i in range(params.n_passengers):
            stays, flight, _, _ = generate_passenger(params, i, axis)
            for s in stays:
                sf.write(f"{s.device_id},{s.area_id},{s.enter_ts:.0f},{s.exit_ts:.0f}\n")
            ff.write(f"{flight.device_id},{flight.flight_id},"
                     f"{flight.scheduled_departure:.0f},{flight.destination_range},"
                     f"{flight.carrier_type},{flight.device_brand}\n")


def population_summary(ds: Dataset) -> np.ndarray:
    """Per-unit activity frequency table, (n_units, 6) row-stochastic."""
    if ds.n == 0:
        raise ValidationError("cannot summarize an empty dataset")
    out = np.zeros((ds.axis.n_units, N_ACTIVITIES))
    for k in range(ds.axis.n_units):
        out[k] = np.bincount(ds.sequences[:, k], minlength=N_ACTIVITIES)
    return out / ds.n


# ----------------------------------------------------- learnable grammar

def grammar_next(code: int) -> int:
    """Deterministic cyclic rule over the five in-airport activities."""
    return code % 5 + 1


def grammar_forecast(code: int, steps: int) -> list[int]:
    out = []
    for _ in range(steps):
        code = grammar_next(code)
        out.append(code)
    return out


def grammar_population(n: int, seed: int = 7,
                       axis: TimeAxis = DEFAULT_AXIS) -> Dataset:
    """Sequences that follow the cyclic rule exactly from unit 0.

    A sanity corpus: a sequence model must drive its 1-step test
    misclassification to ~0 here, and multi-horizon forecasts must equal
    iterates of the rule.
    """
    rng = np.random.default_rng(seed)
    seqs = np.empty((n, axis.n_units), dtype=np.int64)
    seqs[:, 0] = rng.integers(1, 6, size=n)
    for t in range(1, axis.n_units):
        seqs[:, t] = (seqs[:, t - 1] % 5) + 1
    feats = np.empty((n, 5))
    feats[:, 0] = rng.uniform(0.2, 0.9, size=n)
    feats[:, 1] = 1.0
    feats[:, 2:] = rng.integers(0, 2, size=(n, 3)).astype(np.float64)
    ids = [f"g{i:05d}" for i in range(n)]
    return Dataset(feats, seqs, ids,
                   provenance={"generator": "grammar", "seed": str(seed)})
