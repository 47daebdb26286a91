import numpy as np
import pytest

from paxnn import activity_model as am
from paxnn.errors import DomainError, ValidationError


class TestUnitIndex:
    def test_boundaries(self):
        assert am.unit_index(180) == 0
        assert am.unit_index(2.5) == 35
        assert am.unit_index(100) == 16

    def test_enumerated_bins(self):
        # every unit's span (lo, hi] maps back to that unit
        axis = am.DEFAULT_AXIS
        for k in range(36):
            hi = axis.minutes_before_hi(k)
            lo = axis.minutes_before_lo(k)
            assert am.unit_index(hi) == k
            assert am.unit_index(lo + 0.01) == k
            assert am.unit_index(lo + 2.5) == k

    def test_monotone_and_image(self):
        ms = np.linspace(0.001, 180.0, 4001)
        ks = [am.unit_index(m) for m in ms]
        assert all(a >= b for a, b in zip(ks, ks[1:]))
        assert set(ks) == set(range(36))

    @pytest.mark.parametrize("m", [0.0, -1.0, 180.0001, 500])
    def test_domain(self, m):
        with pytest.raises(DomainError):
            am.unit_index(m)


class TestCriticalPeriod:
    def test_default_window(self):
        units = am.critical_period_units()
        assert units == frozenset(range(16, 31))
        assert 16 in units and 30 in units and 31 not in units
        assert len(units) == 15

    def test_override(self):
        assert am.critical_period_units(lo_minutes=0, hi_minutes=180) == \
            frozenset(range(36))
        with pytest.raises(DomainError):
            am.critical_period_units(lo_minutes=50, hi_minutes=40)


class TestOneHot:
    def test_endpoints(self):
        assert am.one_hot(0).tolist() == [1, 0, 0, 0, 0, 0]
        assert am.one_hot(5).tolist() == [0, 0, 0, 0, 0, 1]

    def test_bijection(self):
        seen = set()
        for a in am.ActivityType:
            v = am.one_hot(a)
            assert v.sum() == 1.0
            assert int(np.argmax(v)) == int(a)
            seen.add(tuple(v))
        assert len(seen) == 6

    def test_invalid(self):
        with pytest.raises(DomainError):
            am.one_hot(6)
        with pytest.raises(DomainError):
            am.one_hot(-1)

    def test_matrix_matches_vector(self, rng):
        codes = rng.integers(0, 6, size=(4, 7))
        m = am.one_hot_matrix(codes)
        for i in range(4):
            for j in range(7):
                assert np.array_equal(m[i, j], am.one_hot(codes[i, j]))


class TestFeatures:
    def test_normalization(self):
        raw = am.RawPassengerInfo(arrival_ts=12 * 3600.0,
                                  scheduled_departure_ts=13.5 * 3600.0,
                                  destination_range=1, carrier_type=0,
                                  device_brand=1)
        f = am.normalize_features(raw)
        assert f.earliness == 0.5
        assert f.arrival_time == 0.5
        assert (f.destination, f.carrier, f.brand) == (1.0, 0.0, 1.0)

    def test_hour_scaling(self):
        raw = am.RawPassengerInfo(6 * 3600.0, 7 * 3600.0, 0, 0, 0)
        assert am.normalize_features(raw).arrival_time == 0.25

    def test_earliness_clipped(self):
        raw = am.RawPassengerInfo(0.0, 240 * 60.0, 0, 0, 0)
        assert am.normalize_features(raw).earliness == 1.0

    def test_arrival_after_departure(self):
        raw = am.RawPassengerInfo(100.0, 50.0, 0, 0, 0)
        with pytest.raises(ValidationError):
            am.normalize_features(raw)

    def test_random_outputs_valid(self, rng):
        for _ in range(100):
            dep = float(rng.integers(0, 10 ** 9))
            before = float(rng.uniform(0, 400)) * 60.0
            raw = am.RawPassengerInfo(dep - before, dep,
                                      int(rng.integers(2)), int(rng.integers(2)),
                                      int(rng.integers(2)))
            f = am.normalize_features(raw)
            assert 0.0 <= f.arrival_time <= 1.0
            assert 0.0 <= f.earliness <= 1.0

    def test_field_invariants(self):
        with pytest.raises(ValidationError):
            am.PassengerFeatures(1.5, 0.5, 1.0, 0.0, 0.0)
        with pytest.raises(ValidationError):
            am.PassengerFeatures(0.5, 0.5, 0.3, 0.0, 0.0)


class TestSequences:
    def test_leading_absent_ok(self):
        units = [0] * 10 + [1] * 5 + [2] * 19 + [4, 4]
        am.validate_sequence_codes(np.array(units))

    def test_no_return(self):
        units = [0] * 10 + [1] * 5 + [0] + [4] * 20
        with pytest.raises(ValidationError):
            am.validate_sequence_codes(np.array(units))

    def test_length(self):
        with pytest.raises(ValidationError):
            am.validate_sequence_codes(np.zeros(35, dtype=int))

    def test_immutability(self):
        seq = am.ActivitySequence(np.zeros(36, dtype=int), 1000.0, "p1")
        with pytest.raises(AttributeError):
            seq.passenger_id = "p2"
        with pytest.raises(ValueError):
            seq.units[0] = 3


def test_axis_consistency():
    axis = am.TimeAxis()
    assert axis.n_units * axis.unit_minutes == axis.horizon_minutes
    assert axis.n_units == 36
    with pytest.raises(ValidationError):
        am.TimeAxis(horizon_minutes=100, unit_minutes=7)


def test_code_table():
    table = am.activity_code_table()
    assert table[0] == "0,NotAtAirport"
    assert table[5] == "5,Other"
    assert len(table) == 6
