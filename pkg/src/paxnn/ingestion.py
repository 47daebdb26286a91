"""Stay-trace ingestion: file parsing, trace filtering, sequence
reconstruction, and the train/test split.

Input files are plain CSV:

* stays:     ``device_id,area_id,enter_ts,exit_ts``        (epoch seconds, UTC)
* flights:   ``device_id,flight_id,scheduled_departure,destination_range,carrier_type,device_brand``
* area map:  ``area_id,activity_code,is_boarding_gate,is_pre_security``
* datasets:  ``passenger_id,f1..f5,u0..u35``               (features then unit codes)

Devices are discarded for one of three reasons, checked in a fixed order so
discard statistics are stable: (i) they cannot be tied to a flight at a
boarding gate, (iii) tracking starts only in a post-security area, (ii) the
trace has a hole longer than the configured number of time units.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, replace

import numpy as np

from .activity_model import (DEFAULT_AXIS, N_ACTIVITIES, N_FEATURES,
                             ActivitySequence, ActivityType, PassengerFeatures,
                             RawPassengerInfo, TimeAxis, normalize_features)
from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)

STAYS_HEADER = "device_id,area_id,enter_ts,exit_ts"
FLIGHTS_HEADER = ("device_id,flight_id,scheduled_departure,"
                  "destination_range,carrier_type,device_brand")
AREA_MAP_HEADER = "area_id,activity_code,is_boarding_gate,is_pre_security"
DISCARD_HEADER = "device_id,rule"

#: discard rule identifiers, in the order they are checked
RULE_NO_GATE = "i"
RULE_GAP = "ii"
RULE_POST_SECURITY = "iii"


@dataclass(frozen=True)
class StayRecord:
    """One contiguous presence interval of a device in one area."""

    device_id: str
    area_id: str
    enter_ts: float
    exit_ts: float

    def __post_init__(self):
        if not self.enter_ts < self.exit_ts:
            raise ValidationError(
                f"stay must have enter < exit, got [{self.enter_ts}, {self.exit_ts}]")


@dataclass(frozen=True)
class FlightRecord:
    device_id: str
    flight_id: str
    scheduled_departure: float
    destination_range: int   # 1 short-range, 0 medium-range
    carrier_type: int        # 1 traditional, 0 low-cost
    device_brand: int        # 1 brand-A, 0 other
    arrival_hour: float | None = None   # derived from the first stay when linked


class AreaMap:
    """area_id -> activity code plus the two per-area flags."""

    def __init__(self, entries: dict, allow_unmapped: bool = False):
        # entries: area_id -> (activity_code, is_boarding_gate, is_pre_security)
        for area, (code, _, _) in entries.items():
            if not 1 <= int(code) < N_ACTIVITIES:
                raise ValidationError(
                    f"area {area!r} maps to code {code}; physical areas must map "
                    f"to codes 1..{N_ACTIVITIES - 1}")
        self._entries = dict(entries)
        self.allow_unmapped = allow_unmapped

    def activity(self, area_id: str) -> int:
        entry = self._entries.get(area_id)
        if entry is None:
            if self.allow_unmapped:
                return int(ActivityType.OTHER)
            raise ValidationError(f"area {area_id!r} is not in the area map")
        return int(entry[0])

    def is_boarding_gate(self, area_id: str) -> bool:
        entry = self._entries.get(area_id)
        return bool(entry[1]) if entry else False

    def is_pre_security(self, area_id: str) -> bool:
        entry = self._entries.get(area_id)
        return bool(entry[2]) if entry else False

    def area_ids(self):
        return sorted(self._entries)


class Dataset:
    """Aligned feature and sequence arrays for a passenger population.

    ``features`` is (N, 5) float64 in feature-name order, ``sequences`` is
    (N, 36) int64 activity codes. Rows are kept sorted-stable by passenger id
    at construction sites so identical content yields identical files.
    """

    def __init__(self, features, sequences, passenger_ids, departures=None,
                 provenance=None, split_tag="full", axis: TimeAxis = DEFAULT_AXIS):
        self.features = np.ascontiguousarray(features, dtype=np.float64)
        self.sequences = np.ascontiguousarray(sequences, dtype=np.int64)
        self.passenger_ids = tuple(str(p) for p in passenger_ids)
        n = len(self.passenger_ids)
        if self.features.shape != (n, N_FEATURES) or self.sequences.shape != (n, axis.n_units):
            raise ValidationError(
                f"inconsistent dataset shapes: {self.features.shape}, "
                f"{self.sequences.shape} for {n} passengers")
        if len(set(self.passenger_ids)) != n:
            raise ValidationError("duplicate passenger_id in dataset")
        if n:
            seq = self.sequences
            if seq.min() < 0 or seq.max() >= N_ACTIVITIES:
                raise ValidationError("dataset contains an invalid activity code")
            present = seq != ActivityType.NOT_AT_AIRPORT
            returned = np.logical_and(np.maximum.accumulate(present, axis=1), ~present)
            if returned.any():
                bad = self.passenger_ids[int(np.argmax(returned.any(axis=1)))]
                raise ValidationError(
                    f"sequence for {bad!r} returns to NOT_AT_AIRPORT after detection")
        if departures is None:
            departures = np.full(n, np.nan)
        self.departures = np.asarray(departures, dtype=np.float64)
        self.provenance = dict(provenance or {})
        self.split_tag = str(split_tag)
        self.axis = axis

    @property
    def n(self) -> int:
        return len(self.passenger_ids)

    def pairs(self):
        """Typed per-passenger view: (PassengerFeatures, ActivitySequence)."""
        for i, pid in enumerate(self.passenger_ids):
            f = self.features[i]
            yield (PassengerFeatures(f[0], f[1], f[2], f[3], f[4]),
                   ActivitySequence(self.sequences[i], float(self.departures[i]),
                                    pid, self.axis))

    def subset(self, indices, split_tag: str) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.features[indices], self.sequences[indices],
                       [self.passenger_ids[i] for i in indices],
                       departures=self.departures[indices],
                       provenance=self.provenance, split_tag=split_tag,
                       axis=self.axis)

    def canonical_rows(self) -> list[str]:
        rows = []
        for i, pid in enumerate(self.passenger_ids):
            feats = ",".join(f"{v:.17g}" for v in self.features[i])
            units = ",".join(str(int(c)) for c in self.sequences[i])
            rows.append(f"{pid},{feats},{units}")
        return rows

    def content_hash(self) -> str:
        """Order-independent digest of the passenger rows."""
        h = hashlib.sha256()
        for row in sorted(self.canonical_rows()):
            h.update(row.encode())
            h.update(b"\n")
        return h.hexdigest()

    def __eq__(self, other):
        return (isinstance(other, Dataset)
                and self.passenger_ids == other.passenger_ids
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.sequences, other.sequences))


# ----------------------------------------------------------------- parsing

def _read_rows(path, header):
    """(line_number, row) pairs after the header; ``#`` lines (provenance
    stamps) are skipped, the first real line must match the header exactly."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc}")
    numbered = [(i, line) for i, line in enumerate(raw, start=1)
                if line and not line.startswith("#")]
    if not numbered:
        raise ParseError(f"{path}: empty file, expected header {header!r}")
    if numbered[0][1] != header:
        raise ParseError(f"{path}: bad header {numbered[0][1]!r}, expected {header!r}")
    out = []
    for lineno, line in numbered[1:]:
        out.append((lineno, next(csv.reader([line]))))
    return out


def load_stays(path) -> list[StayRecord]:
    rows = _read_rows(path, STAYS_HEADER)
    records, bad = [], []
    for i, row in rows:
        if len(row) != 4:
            bad.append((i, f"expected 4 fields, got {len(row)}"))
            continue
        try:
            enter, exit_ = float(row[2]), float(row[3])
        except ValueError:
            bad.append((i, "non-numeric timestamp"))
            continue
        if not enter < exit_:
            bad.append((i, f"enter_ts {row[2]} not before exit_ts {row[3]}"))
            continue
        records.append(StayRecord(row[0], row[1], enter, exit_))
    if bad:
        raise ParseError(f"{path}: {len(bad)} malformed stay rows", bad)
    return records


def load_flights(path) -> dict[str, FlightRecord]:
    rows = _read_rows(path, FLIGHTS_HEADER)
    flights, bad = {}, []
    for i, row in rows:
        if len(row) != 6:
            bad.append((i, f"expected 6 fields, got {len(row)}"))
            continue
        try:
            dep = float(row[2])
            dummies = [int(v) for v in row[3:6]]
        except ValueError:
            bad.append((i, "non-numeric field"))
            continue
        if any(d not in (0, 1) for d in dummies):
            bad.append((i, "dummy fields must be 0 or 1"))
            continue
        if row[0] in flights:
            bad.append((i, f"duplicate flight for device {row[0]!r}"))
            continue
        flights[row[0]] = FlightRecord(row[0], row[1], dep, *dummies)
    if bad:
        raise ParseError(f"{path}: {len(bad)} malformed flight rows", bad)
    return flights


def load_area_map(path, allow_unmapped: bool = False) -> AreaMap:
    rows = _read_rows(path, AREA_MAP_HEADER)
    entries, bad = {}, []
    for i, row in rows:
        if len(row) != 4:
            bad.append((i, f"expected 4 fields, got {len(row)}"))
            continue
        try:
            code, gate, presec = int(row[1]), int(row[2]), int(row[3])
        except ValueError:
            bad.append((i, "non-numeric field"))
            continue
        if not 1 <= code < N_ACTIVITIES:
            bad.append((i, f"activity_code must be 1..{N_ACTIVITIES - 1}, got {code}"))
            continue
        entries[row[0]] = (code, bool(gate), bool(presec))
    if bad:
        raise ParseError(f"{path}: {len(bad)} malformed area rows", bad)
    return AreaMap(entries, allow_unmapped=allow_unmapped)


def write_discard_log(path, discards) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(DISCARD_HEADER + "\n")
        for device_id, rule in discards:
            fh.write(f"{device_id},{rule}\n")


def write_dataset(path, ds: Dataset) -> None:
    cols = [f"f{i + 1}" for i in range(N_FEATURES)]
    cols += [f"u{k}" for k in range(ds.axis.n_units)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("passenger_id," + ",".join(cols) + "\n")
        for row in ds.canonical_rows():
            fh.write(row + "\n")


def read_dataset(path, axis: TimeAxis = DEFAULT_AXIS, split_tag="full") -> Dataset:
    expected = (["passenger_id"] + [f"f{i + 1}" for i in range(N_FEATURES)]
                + [f"u{k}" for k in range(axis.n_units)])
    rows = _read_rows(path, ",".join(expected))
    n_cols = len(expected)
    ids, feats, seqs, bad = [], [], [], []
    for i, row in rows:
        if len(row) != n_cols:
            bad.append((i, f"expected {n_cols} fields, got {len(row)}"))
            continue
        try:
            feats.append([float(v) for v in row[1:1 + N_FEATURES]])
            seqs.append([int(v) for v in row[1 + N_FEATURES:]])
        except ValueError:
            bad.append((i, "non-numeric field"))
            continue
        ids.append(row[0])
    if bad:
        raise ParseError(f"{path}: {len(bad)} malformed dataset rows", bad)
    return Dataset(np.array(feats).reshape(len(ids), N_FEATURES),
                   np.array(seqs, dtype=np.int64).reshape(len(ids), axis.n_units),
                   ids, provenance={"source": str(path)}, split_tag=split_tag,
                   axis=axis)


# --------------------------------------------------------------- filtering

def group_stays(stays) -> dict[str, list[StayRecord]]:
    grouped: dict[str, list[StayRecord]] = {}
    for s in stays:
        grouped.setdefault(s.device_id, []).append(s)
    for device in grouped:
        grouped[device].sort(key=lambda s: (s.enter_ts, s.exit_ts, s.area_id))
    return grouped


def filter_traces(stays_by_device: dict, flights: dict, area_map: AreaMap,
                  gap_threshold_units: int = 2, axis: TimeAxis = DEFAULT_AXIS):
    """Apply the three discard rules; returns (kept devices, discard log).

    A device failing several rules is logged once, under the first failing
    rule in the order i, iii, ii. Devices present only in the flights table
    (no stays at all) fall under rule i.
    """
    max_gap = gap_threshold_units * axis.unit_minutes * 60.0
    kept: dict[str, list[StayRecord]] = {}
    discards: list[tuple[str, str]] = []
    devices = sorted(set(stays_by_device) | set(flights))
    for device in devices:
        stays = stays_by_device.get(device, [])
        if device not in flights or not any(
                area_map.is_boarding_gate(s.area_id) for s in stays):
            discards.append((device, RULE_NO_GATE))
            continue
        if not area_map.is_pre_security(stays[0].area_id):
            discards.append((device, RULE_POST_SECURITY))
            continue
        gap = any(b.enter_ts - a.exit_ts > max_gap
                  for a, b in zip(stays, stays[1:]))
        if gap:
            discards.append((device, RULE_GAP))
            continue
        kept[device] = stays
    return kept, discards


# ----------------------------------------------------------- reconstruction

def reconstruct_sequence(stays, flight: FlightRecord, area_map: AreaMap,
                         axis: TimeAxis = DEFAULT_AXIS) -> ActivitySequence:
    """Label every unit with the longest-occupancy activity.

    Per unit, each stay contributes its overlap seconds to the stay's
    activity; the label is the activity with the largest total, ties going
    to the lower code. Units before the first observed presence are
    NOT_AT_AIRPORT, units after the last are WAITING (boarded or gate-side),
    and an interior unit with no presence keeps the previous unit's label
    (short holes are transit, not departure).
    """
    dep = flight.scheduled_departure
    grid_start = dep - axis.horizon_minutes * 60.0
    unit_s = axis.unit_minutes * 60.0
    n = axis.n_units
    occupancy = np.zeros((n, N_ACTIVITIES))
    for stay in sorted(stays, key=lambda s: (s.enter_ts, s.exit_ts, s.area_id)):
        if stay.exit_ts > dep:
            log.warning("stay of %s in %s extends past departure; truncated",
                        stay.device_id, stay.area_id)
        lo = max(stay.enter_ts, grid_start)
        hi = min(stay.exit_ts, dep)
        if hi <= lo:
            continue
        act = area_map.activity(stay.area_id)
        k = int((lo - grid_start) // unit_s)
        k = min(max(k, 0), n - 1)
        while k < n:
            u_lo = grid_start + k * unit_s
            if u_lo >= hi:
                break
            overlap = min(hi, u_lo + unit_s) - max(lo, u_lo)
            if overlap > 0:
                occupancy[k, act] += overlap
            k += 1
    covered = occupancy.sum(axis=1) > 0
    if not covered.any():
        raise ValidationError(
            f"device {flight.device_id!r}: no stay overlaps the horizon")
    first = int(np.argmax(covered))
    last = n - 1 - int(np.argmax(covered[::-1]))
    codes = np.empty(n, dtype=np.int64)
    codes[:first] = ActivityType.NOT_AT_AIRPORT
    codes[last + 1:] = ActivityType.WAITING
    for k in range(first, last + 1):
        if covered[k]:
            codes[k] = int(np.argmax(occupancy[k]))
        else:
            codes[k] = codes[k - 1]
    return ActivitySequence(codes, flight.scheduled_departure,
                            flight.device_id, axis)


def assemble_dataset(kept: dict, flights: dict, area_map: AreaMap,
                     axis: TimeAxis = DEFAULT_AXIS, provenance=None) -> Dataset:
    """Reconstruct every kept device into a (features, sequence) row."""
    ids, feats, seqs, deps = [], [], [], []
    for device in sorted(kept):
        stays = kept[device]
        flight = flights[device]
        codes = reconstruct_sequence(stays, flight, area_map, axis).units
        raw = RawPassengerInfo(
            arrival_ts=stays[0].enter_ts,
            scheduled_departure_ts=flight.scheduled_departure,
            destination_range=flight.destination_range,
            carrier_type=flight.carrier_type,
            device_brand=flight.device_brand)
        pf = normalize_features(raw, axis)
        flights[device] = replace(flight, arrival_hour=pf.arrival_time * 24.0)
        ids.append(device)
        feats.append(pf.as_array())
        seqs.append(codes)
        deps.append(flight.scheduled_departure)
    return Dataset(np.array(feats).reshape(len(ids), N_FEATURES),
                   np.array(seqs, dtype=np.int64).reshape(len(ids), axis.n_units),
                   ids, departures=np.array(deps), provenance=provenance,
                   axis=axis)


def ingest_traces(stays_path, flights_path, area_map_path,
                  gap_threshold_units: int = 2, allow_unmapped: bool = False,
                  axis: TimeAxis = DEFAULT_AXIS):
    """Full pipeline: load, filter, reconstruct. Returns (Dataset, discards)."""
    stays = load_stays(stays_path)
    flights = load_flights(flights_path)
    area_map = load_area_map(area_map_path, allow_unmapped=allow_unmapped)
    kept, discards = filter_traces(group_stays(stays), flights, area_map,
                                   gap_threshold_units, axis)
    ds = assemble_dataset(kept, flights, area_map, axis,
                          provenance={"stays": str(stays_path),
                                      "flights": str(flights_path),
                                      "area_map": str(area_map_path)})
    return ds, discards


# ------------------------------------------------------------------- split

def split_dataset(ds: Dataset, train_fraction: float = 0.70, seed: int = 0):
    """Seeded random partition into (train, test).

    The shuffle runs over rows sorted by passenger id, so the partition is a
    function of dataset content and seed only, never of input row order.
    Train size is round(train_fraction * N).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if ds.n < 2:
        raise ValidationError("need at least 2 passengers to split")
    canonical = np.argsort(np.array(ds.passenger_ids))
    perm = np.random.default_rng(seed).permutation(ds.n)
    shuffled = canonical[perm]
    n_train = int(np.floor(train_fraction * ds.n + 0.5))
    n_train = min(max(n_train, 1), ds.n - 1)
    train_ix = np.sort(shuffled[:n_train])
    test_ix = np.sort(shuffled[n_train:])
    return ds.subset(train_ix, "train"), ds.subset(test_ix, "test")
