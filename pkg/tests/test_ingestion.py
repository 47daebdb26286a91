import numpy as np
import pytest

from paxnn import ingestion as ing
from paxnn.activity_model import DEFAULT_AXIS, ActivityType
from paxnn.errors import ParseError, ValidationError

DEP = 1_704_067_200 + 12 * 3600  # noon on the anchor day
GRID = DEP - 180 * 60


def _area_map(allow_unmapped=False):
    return ing.AreaMap({
        "CHECKIN": (1, False, True),
        "SECURITY": (1, False, False),
        "CAFE": (2, False, False),
        "SHOPS": (3, False, False),
        "GATE": (4, True, False),
        "LOUNGE": (5, False, False),
    }, allow_unmapped=allow_unmapped)


def _flight(device="d1", dep=DEP):
    return ing.FlightRecord(device, "FL1", float(dep), 1, 0, 1)


def _stay(area, start_min, end_min, device="d1"):
    """Stay expressed in minutes after the horizon start."""
    return ing.StayRecord(device, area, GRID + start_min * 60.0,
                          GRID + end_min * 60.0)


# ------------------------------------------------------------------ parsing

class TestLoadStays:
    def test_well_formed(self, tmp_path):
        p = tmp_path / "stays.csv"
        p.write_text("device_id,area_id,enter_ts,exit_ts\n"
                     "a,X,100,200\nb,Y,150,300\na,Z,200,250\n")
        records = ing.load_stays(p)
        assert len(records) == 3
        assert records[0].device_id == "a"
        assert records[1].exit_ts == 300.0

    def test_zero_length_stay_cites_line(self, tmp_path):
        p = tmp_path / "stays.csv"
        p.write_text("device_id,area_id,enter_ts,exit_ts\n"
                     "a,X,100,200\nb,Y,300,300\n")
        with pytest.raises(ParseError) as err:
            ing.load_stays(p)
        assert err.value.lines[0][0] == 3

    def test_empty_with_header(self, tmp_path):
        p = tmp_path / "stays.csv"
        p.write_text("device_id,area_id,enter_ts,exit_ts\n")
        assert ing.load_stays(p) == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            ing.load_stays(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        p = tmp_path / "stays.csv"
        p.write_text("device,area,enter,exit\n")
        with pytest.raises(ParseError):
            ing.load_stays(p)

    def test_comment_lines_skipped(self, tmp_path):
        p = tmp_path / "stays.csv"
        p.write_text("# input_hash.config=abc\n"
                     "device_id,area_id,enter_ts,exit_ts\na,X,1,2\n")
        assert len(ing.load_stays(p)) == 1

    def test_all_bad_rows_collected(self, tmp_path):
        p = tmp_path / "stays.csv"
        p.write_text("device_id,area_id,enter_ts,exit_ts\n"
                     "a,X,oops,2\nb,Y,5,4\nc,Z,1,2\n")
        with pytest.raises(ParseError) as err:
            ing.load_stays(p)
        assert [n for n, _ in err.value.lines] == [2, 3]


class TestLoadFlights:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "flights.csv"
        p.write_text("device_id,flight_id,scheduled_departure,"
                     "destination_range,carrier_type,device_brand\n"
                     "a,FL9,1000,1,0,1\n")
        flights = ing.load_flights(p)
        assert flights["a"].flight_id == "FL9"
        assert flights["a"].destination_range == 1

    def test_duplicate_device(self, tmp_path):
        p = tmp_path / "flights.csv"
        p.write_text("device_id,flight_id,scheduled_departure,"
                     "destination_range,carrier_type,device_brand\n"
                     "a,FL1,1000,1,0,1\na,FL2,2000,0,1,0\n")
        with pytest.raises(ParseError):
            ing.load_flights(p)

    def test_bad_dummy(self, tmp_path):
        p = tmp_path / "flights.csv"
        p.write_text("device_id,flight_id,scheduled_departure,"
                     "destination_range,carrier_type,device_brand\n"
                     "a,FL1,1000,2,0,1\n")
        with pytest.raises(ParseError):
            ing.load_flights(p)


class TestLoadAreaMap:
    def test_flags(self, tmp_path):
        p = tmp_path / "areas.csv"
        p.write_text("area_id,activity_code,is_boarding_gate,is_pre_security\n"
                     "GATE,4,1,0\nCHECKIN,1,0,1\n")
        m = ing.load_area_map(p)
        assert m.is_boarding_gate("GATE")
        assert m.is_pre_security("CHECKIN")
        assert m.activity("GATE") == 4

    def test_rejects_not_at_airport_code(self, tmp_path):
        p = tmp_path / "areas.csv"
        p.write_text("area_id,activity_code,is_boarding_gate,is_pre_security\n"
                     "VOID,0,0,0\n")
        with pytest.raises(ParseError):
            ing.load_area_map(p)

    def test_unmapped_area(self):
        m = _area_map()
        with pytest.raises(ValidationError):
            m.activity("MYSTERY")
        assert _area_map(allow_unmapped=True).activity("MYSTERY") == 5


# ---------------------------------------------------------------- filtering

class TestFilterTraces:
    def test_clean_device_kept(self):
        stays = {"d1": [_stay("CHECKIN", 10, 30), _stay("GATE", 30, 180)]}
        kept, discards = ing.filter_traces(stays, {"d1": _flight()}, _area_map())
        assert "d1" in kept and discards == []

    def test_rule_i_no_flight(self):
        stays = {"d1": [_stay("CHECKIN", 10, 30), _stay("GATE", 30, 180)]}
        kept, discards = ing.filter_traces(stays, {}, _area_map())
        assert discards == [("d1", "i")]

    def test_rule_i_no_gate_stay(self):
        stays = {"d1": [_stay("CHECKIN", 10, 30), _stay("CAFE", 30, 180)]}
        kept, discards = ing.filter_traces(stays, {"d1": _flight()}, _area_map())
        assert discards == [("d1", "i")]

    def test_rule_i_flight_without_stays(self):
        kept, discards = ing.filter_traces({}, {"ghost": _flight("ghost")},
                                           _area_map())
        assert discards == [("ghost", "i")]

    def test_rule_iii_post_security_start(self):
        stays = {"d1": [_stay("SHOPS", 10, 30), _stay("GATE", 30, 180)]}
        kept, discards = ing.filter_traces(stays, {"d1": _flight()}, _area_map())
        assert discards == [("d1", "iii")]

    def test_rule_ii_gap(self):
        # 25-minute hole with a 2-unit (10 min) threshold
        stays = {"d1": [_stay("CHECKIN", 10, 30), _stay("GATE", 55, 180)]}
        kept, discards = ing.filter_traces(stays, {"d1": _flight()}, _area_map(),
                                           gap_threshold_units=2)
        assert discards == [("d1", "ii")]
        # same hole tolerated at a 5-unit threshold
        kept, discards = ing.filter_traces(stays, {"d1": _flight()}, _area_map(),
                                           gap_threshold_units=5)
        assert "d1" in kept

    def test_gap_interval_oracle(self, rng):
        # rule ii fires exactly when some inter-stay hole exceeds the budget
        for _ in range(50):
            bounds = np.sort(rng.choice(np.arange(0, 180, dtype=float), size=6,
                                        replace=False))
            stays = [_stay("CHECKIN", bounds[0], bounds[1]),
                     _stay("CAFE", bounds[2], bounds[3]),
                     _stay("GATE", bounds[4], 180)]
            holes = [bounds[2] - bounds[1], bounds[4] - bounds[3]]
            _, discards = ing.filter_traces({"d1": stays}, {"d1": _flight()},
                                            _area_map(), gap_threshold_units=2)
            expect = [("d1", "ii")] if max(holes) > 10 else []
            assert discards == expect

    def test_rule_precedence(self):
        # post-security start AND a gap: rule iii wins; no flight beats all
        stays = {"d1": [_stay("SHOPS", 10, 20), _stay("GATE", 60, 180)]}
        _, discards = ing.filter_traces(stays, {"d1": _flight()}, _area_map())
        assert discards == [("d1", "iii")]
        _, discards = ing.filter_traces(stays, {}, _area_map())
        assert discards == [("d1", "i")]

    def test_idempotent(self):
        stays = {
            "a": [_stay("CHECKIN", 10, 30, "a"), _stay("GATE", 30, 180, "a")],
            "b": [_stay("SHOPS", 10, 30, "b"), _stay("GATE", 30, 180, "b")],
        }
        flights = {"a": _flight("a"), "b": _flight("b")}
        kept, discards = ing.filter_traces(stays, flights, _area_map())
        kept_flights = {d: flights[d] for d in kept}
        kept2, discards2 = ing.filter_traces(kept, kept_flights, _area_map())
        assert kept2.keys() == kept.keys()
        assert discards2 == []

    def test_each_discard_logged_once(self):
        stays = {f"d{i}": [_stay("SHOPS", 10, 30, f"d{i}")] for i in range(5)}
        _, discards = ing.filter_traces(stays, {}, _area_map())
        assert len(discards) == 5
        assert len({d for d, _ in discards}) == 5


# ------------------------------------------------------------ reconstruction

def _raster_oracle(stays, flight, area_map, axis=DEFAULT_AXIS):
    """Minute-level brute force: paint every minute, then apply the same
    labeling policy (before-first absent, after-last waiting, interior holes
    carry the previous label, ties to the lower code)."""
    dep = flight.scheduled_departure
    grid = dep - axis.horizon_minutes * 60.0
    occ = np.zeros((axis.n_units, 6))
    for s in stays:
        act = area_map.activity(s.area_id)
        lo, hi = max(s.enter_ts, grid), min(s.exit_ts, dep)
        m = lo
        while m < hi - 1e-9:
            k = int((m - grid) // (axis.unit_minutes * 60.0))
            occ[k, act] += 60.0
            m += 60.0
    covered = occ.sum(axis=1) > 0
    first = int(np.argmax(covered))
    last = axis.n_units - 1 - int(np.argmax(covered[::-1]))
    codes = np.empty(axis.n_units, dtype=np.int64)
    codes[:first] = 0
    codes[last + 1:] = int(ActivityType.WAITING)
    for k in range(first, last + 1):
        codes[k] = int(np.argmax(occ[k])) if covered[k] else codes[k - 1]
    return codes


class TestReconstruct:
    def test_single_waiting_stay(self):
        stays = [_stay("GATE", 100, 180)]
        codes = ing.reconstruct_sequence(stays, _flight(), _area_map()).units
        assert (codes[:20] == 0).all()
        assert (codes[20:] == ActivityType.WAITING).all()

    def test_longest_duration_within_unit(self):
        # unit 0 spans minutes 0..5 of the grid: 2 min eating then 3 min shopping
        stays = [_stay("CAFE", 0, 2), _stay("SHOPS", 2, 5),
                 _stay("GATE", 5, 180)]
        codes = ing.reconstruct_sequence(stays, _flight(), _area_map()).units
        assert codes[0] == ActivityType.SHOPPING

    def test_duration_tie_lower_code(self):
        stays = [_stay("SHOPS", 0, 2.5), _stay("CAFE", 2.5, 5),
                 _stay("GATE", 5, 180)]
        codes = ing.reconstruct_sequence(stays, _flight(), _area_map()).units
        assert codes[0] == ActivityType.EATING

    def test_truncated_at_departure(self, caplog):
        stays = [_stay("GATE", 100, 200)]   # extends 20 min past departure
        with caplog.at_level("WARNING"):
            codes = ing.reconstruct_sequence(stays, _flight(), _area_map()).units
        assert "truncated" in caplog.text
        assert codes[35] == ActivityType.WAITING

    def test_interior_hole_carries_previous(self):
        stays = [_stay("CAFE", 0, 5), _stay("GATE", 10, 180)]
        codes = ing.reconstruct_sequence(stays, _flight(), _area_map()).units
        assert codes[0] == ActivityType.EATING
        assert codes[1] == ActivityType.EATING   # the hole
        assert codes[2] == ActivityType.WAITING

    def test_no_overlap_rejected(self):
        stays = [ing.StayRecord("d1", "GATE", GRID - 5000.0, GRID - 100.0)]
        with pytest.raises(ValidationError):
            ing.reconstruct_sequence(stays, _flight(), _area_map())

    def test_matches_raster_oracle_randomized(self, rng):
        areas = ["CHECKIN", "SECURITY", "CAFE", "SHOPS", "GATE", "LOUNGE"]
        area_map = _area_map()
        flight = _flight()
        for _ in range(200):
            n_stays = int(rng.integers(1, 10))
            stays = []
            for _ in range(n_stays):
                a, b = np.sort(rng.choice(np.arange(-20, 195, dtype=float),
                                          size=2, replace=False))
                stays.append(_stay(str(rng.choice(areas)), a, b))
            if not any(s.enter_ts < DEP and s.exit_ts > GRID for s in stays):
                continue
            got = ing.reconstruct_sequence(stays, flight, area_map).units
            want = _raster_oracle(stays, flight, area_map)
            assert np.array_equal(got, want)


# ------------------------------------------------------------------- split

class TestSplit:
    def _dataset(self, n=10, seed=0):
        rng = np.random.default_rng(seed)
        feats = rng.uniform(0, 1, (n, 5))
        feats[:, 2:] = (feats[:, 2:] > 0.5).astype(float)
        seqs = np.zeros((n, 36), dtype=np.int64)
        seqs[:, 18:] = 4
        return ing.Dataset(feats, seqs, [f"p{i}" for i in range(n)])

    def test_sizes(self):
        train, test = ing.split_dataset(self._dataset(10), 0.7, seed=1)
        assert (train.n, test.n) == (7, 3)
        assert train.split_tag == "train" and test.split_tag == "test"

    def test_deterministic(self):
        ds = self._dataset(50)
        a = ing.split_dataset(ds, 0.7, seed=5)
        b = ing.split_dataset(ds, 0.7, seed=5)
        assert a[0].passenger_ids == b[0].passenger_ids
        c = ing.split_dataset(ds, 0.7, seed=6)
        assert a[0].passenger_ids != c[0].passenger_ids

    def test_partition(self):
        ds = self._dataset(23)
        train, test = ing.split_dataset(ds, 0.7, seed=2)
        ids = set(train.passenger_ids) | set(test.passenger_ids)
        assert ids == set(ds.passenger_ids)
        assert not set(train.passenger_ids) & set(test.passenger_ids)

    def test_order_independent(self):
        ds = self._dataset(40)
        perm = np.random.default_rng(9).permutation(40)
        shuffled = ds.subset(perm, "full")
        a = ing.split_dataset(ds, 0.7, seed=3)
        b = ing.split_dataset(shuffled, 0.7, seed=3)
        assert set(a[0].passenger_ids) == set(b[0].passenger_ids)

    def test_too_small(self):
        with pytest.raises(ValidationError):
            ing.split_dataset(self._dataset(1), 0.7, seed=0)
        with pytest.raises(ValidationError):
            ing.split_dataset(self._dataset(10), 1.2, seed=0)


class TestDataset:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            ing.Dataset(np.zeros((2, 5)), np.zeros((2, 36), dtype=int),
                        ["a", "a"])

    def test_return_to_absent_rejected(self):
        seqs = np.zeros((1, 36), dtype=np.int64)
        seqs[0, 10:20] = 1
        seqs[0, 20] = 0
        with pytest.raises(ValidationError):
            ing.Dataset(np.zeros((1, 5)), seqs, ["a"])

    def test_content_hash_order_independent(self):
        rng = np.random.default_rng(3)
        feats = rng.uniform(0, 1, (6, 5))
        feats[:, 2:] = 0.0
        seqs = np.zeros((6, 36), dtype=np.int64)
        ds = ing.Dataset(feats, seqs, [f"p{i}" for i in range(6)])
        perm = ds.subset([3, 1, 5, 0, 2, 4], "full")
        assert ds.content_hash() == perm.content_hash()

    def test_csv_round_trip_exact(self, tmp_path, small_population):
        path = tmp_path / "ds.csv"
        ing.write_dataset(path, small_population)
        back = ing.read_dataset(path)
        assert back == small_population
        ing.write_dataset(tmp_path / "ds2.csv", back)
        assert (tmp_path / "ds.csv").read_text() == (tmp_path / "ds2.csv").read_text()

    def test_typed_pairs_view(self, small_population):
        pairs = list(small_population.pairs())
        assert len(pairs) == small_population.n
        feats, seq = pairs[0]
        assert seq.passenger_id == small_population.passenger_ids[0]
        assert np.array_equal(seq.units, small_population.sequences[0])
        assert feats.as_array().tolist() == small_population.features[0].tolist()

    def test_discard_log_format(self, tmp_path):
        path = tmp_path / "discards.csv"
        ing.write_discard_log(path, [("d1", "i"), ("d2", "iii")])
        assert path.read_text() == "device_id,rule\nd1,i\nd2,iii\n"
