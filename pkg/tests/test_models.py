import numpy as np
import pytest

from paxnn import models, neural_core as nc, synthgen
from paxnn.errors import ConfigError, DomainError, ValidationError
from paxnn.ingestion import Dataset
from paxnn.seeding import derive_seed

from conftest import random_direct_set, random_lstm

FAST = models.TrainConfig(batch_size=64, fnn_epochs=25, lstm_epochs=3,
                          learning_rate=0.05, lstm_hidden=16)


def _threshold_dataset(n=300, seed=0):
    """Activity at every unit is a deterministic threshold on earliness:
    linearly separable for the unit classifiers."""
    rng = np.random.default_rng(seed)
    feats = rng.uniform(0, 1, (n, 5))
    feats[:, 2:] = (feats[:, 2:] > 0.5).astype(float)
    seqs = np.zeros((n, 36), dtype=np.int64)
    seqs[feats[:, 1] > 0.5, 18:] = int(synthgen.ActivityType.WAITING)
    seqs[feats[:, 1] <= 0.5, 30:] = int(synthgen.ActivityType.WAITING)
    return Dataset(feats, seqs, [f"p{i}" for i in range(n)])


class TestFnn:
    def test_separable_unit_learned(self):
        ds = _threshold_dataset()
        model = models.train_fnn_set(ds, FAST, seed=5)
        k = 20   # labels at unit 20 are a clean threshold on earliness
        preds = np.argmax(model.predict_proba(ds.features, k), axis=1)
        assert np.mean(preds == ds.sequences[:, k]) >= 0.95

    def test_constant_label_unit_confident(self):
        ds = _threshold_dataset()
        cfg = models.TrainConfig(batch_size=64, fnn_epochs=60, learning_rate=0.1)
        model = models.train_fnn_set(ds, cfg, seed=5)
        probs = model.predict_proba(ds.features, 0)   # unit 0 is always absent
        assert probs[:, 0].min() >= 0.99

    def test_deterministic_serialization(self, small_split):
        train, _ = small_split
        a = models.train_fnn_set(train, FAST, seed=9)
        b = models.train_fnn_set(train, FAST, seed=9)
        assert nc.dumps_params(a.nets[7]) == nc.dumps_params(b.nets[7])

    def test_unit_training_independent_of_siblings(self, small_split):
        # a unit's weights equal a standalone training with the same lineage
        train, _ = small_split
        full = models.train_fnn_set(train, FAST, seed=9)
        k = 13
        seed_k = full.seed_lineage[f"unit{k:02d}"]
        alone = models.train_fnn_unit(train.features, train.sequences[:, k],
                                      FAST.fnn_hidden, FAST, seed_k)
        assert all(np.array_equal(alone[key], full.nets[k][key]) for key in alone)

    def test_jobs_do_not_change_weights(self, small_split):
        train, _ = small_split
        a = models.train_fnn_set(train, FAST, seed=4, jobs=1)
        b = models.train_fnn_set(train, FAST, seed=4, jobs=2)
        for na, nb in zip(a.nets, b.nets):
            assert all(np.array_equal(na[k], nb[k]) for k in na)

    def test_predict_contract(self, small_split):
        train, _ = small_split
        model = models.train_fnn_set(train, FAST, seed=2)
        f = train.features[0]
        p1 = models.predict_fnn(model, f, 10)
        p2 = models.predict_fnn(model, f, 10)
        assert np.array_equal(p1, p2)
        assert abs(p1.sum() - 1.0) < 1e-9
        with pytest.raises(DomainError):
            models.predict_fnn(model, f, 36)

    def test_empty_dataset_rejected(self):
        ds = synthgen.generate_population(synthgen.default_params(n_passengers=0))
        with pytest.raises(ValidationError):
            models.train_fnn_set(ds, FAST, seed=0)


class TestLstm:
    def test_deterministic(self, grammar_split):
        train, _ = grammar_split
        cfg = models.TrainConfig(lstm_hidden=12, lstm_epochs=2, batch_size=64,
                                 learning_rate=0.05)
        a = models.train_lstm(train, 1, cfg, seed=3)
        b = models.train_lstm(train, 1, cfg, seed=3)
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_bad_horizon(self, grammar_split):
        train, _ = grammar_split
        with pytest.raises(DomainError):
            models.train_lstm(train, 36, FAST, seed=0)

    def test_predict_next_contract(self):
        m = random_lstm()
        probs = models.predict_next(m, [0, 0, 1, 2])
        assert abs(probs.sum() - 1.0) < 1e-9
        with pytest.raises(DomainError):
            models.predict_next(m, [])
        with pytest.raises(DomainError):
            models.predict_next(m, list(range(36)))

    def test_prefix_extension_changes_prediction(self, grammar_lstm, grammar_split):
        _, test = grammar_split
        seq = test.sequences[0]
        p1 = models.predict_next(grammar_lstm, seq[:5])
        p2 = models.predict_next(grammar_lstm, seq[:6])
        assert np.argmax(p1) != np.argmax(p2)   # the cycle advances


class TestForecasting:
    def test_recursive_zero_steps(self):
        assert models.forecast_recursive(random_lstm(), [1, 2], 0) == []

    def test_recursive_needs_one_step_model(self):
        m = random_lstm()
        m.horizon = 3
        with pytest.raises(DomainError):
            models.forecast_recursive(m, [1], 2)

    def test_overflow_past_horizon(self):
        with pytest.raises(DomainError):
            models.forecast_recursive(random_lstm(), list(range(1, 3)) * 16, 5)

    def test_strategies_coincide_at_one_step(self, rng):
        direct = random_direct_set(seed=11)
        for _ in range(25):
            prefix = rng.integers(0, 6, size=int(rng.integers(1, 30)))
            r = models.forecast_recursive(direct.models[1], prefix, 1)
            d = models.forecast_direct(direct, prefix, 1)
            assert r == d

    def test_direct_element_isolation(self, rng):
        direct = random_direct_set(seed=13)
        prefix = rng.integers(0, 6, size=8)
        before = models.forecast_direct(direct, prefix, 4)
        # corrupt model 2; elements 1, 3, 4 must not move
        direct.models[2].params["wo"] = direct.models[2].params["wo"] * -1.5
        after = models.forecast_direct(direct, prefix, 4)
        assert [before[0], before[2], before[3]] == [after[0], after[2], after[3]]

    def test_direct_missing_horizon(self):
        direct = random_direct_set(horizons=3)
        with pytest.raises(DomainError):
            models.forecast_direct(direct, [1, 2], 5)

    def test_grammar_rule_followed(self, grammar_lstm, grammar_split):
        _, test = grammar_split
        hits = 0
        for i in range(10):
            seq = test.sequences[i]
            fc = models.forecast_recursive(grammar_lstm, seq[:8], 6)
            hits += fc == synthgen.grammar_forecast(int(seq[7]), 6)
        assert hits >= 9   # the small model should have the cycle down


class TestCombined:
    def test_gradcheck_tiny(self, rng):
        params = nc.init_combined(5, 6, 6, 8, 6, seed=1)
        feats = rng.uniform(0, 1, (10, 5))
        codes = rng.integers(0, 6, (10, 36))
        rep = nc.grad_check(
            lambda p: nc.combined_loss_and_grads(p, feats, codes)[0],
            lambda p: nc.combined_loss_and_grads(p, feats, codes)[1], params)
        assert rep.max_rel_err < 1e-4

    def test_static_branch_structurally_isolated(self, rng):
        params = nc.init_combined(5, 6, 6, 8, 6, seed=2)
        params["fw"][:, 8:] = 0.0   # sever the static half of the fusion
        m = models.CombinedModel(params=params, hidden=8, static_hidden=6)
        prefix = rng.integers(0, 6, 7)
        p1 = models.predict_combined(m, rng.uniform(0, 1, 5), prefix)
        p2 = models.predict_combined(m, rng.uniform(0, 1, 5), prefix)
        assert np.array_equal(p1, p2)

    def test_train_runs_and_is_deterministic(self, small_split):
        train, _ = small_split
        cfg = models.TrainConfig(lstm_hidden=8, lstm_epochs=1, batch_size=128,
                                 learning_rate=0.05)
        a = models.train_combined(train, cfg, seed=3)
        b = models.train_combined(train, cfg, seed=3)
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


class TestCombinedOnCoupledData:
    def test_static_inputs_beat_history_alone(self):
        # the coupled preset ties the brand dummy to security timing and
        # meal choice: information the observed prefix cannot reveal early
        ds = synthgen.generate_population(
            synthgen.coupled_params(n_passengers=2500, seed=5))
        from paxnn.ingestion import split_dataset
        from paxnn import evaluation as ev
        train, test = split_dataset(ds, 0.7, seed=derive_seed(42, "split"))
        cfg = models.TrainConfig(batch_size=128, learning_rate=0.05, lstm_epochs=6)
        lstm = models.train_lstm(train, 1, cfg, derive_seed(42, "direct/h1"))
        comb = models.train_combined(train, cfg, derive_seed(42, "combined"))
        lstm_rep = ev.misclassification_curve(ev.DirectLstmPredictor(lstm), test)
        comb_rep = ev.misclassification_curve(ev.CombinedPredictor(comb), test)
        assert comb_rep.critical_mean < lstm_rep.critical_mean - 0.005


class TestMajority:
    def test_pure_unit(self):
        ds = _threshold_dataset()
        m = models.majority_baseline(ds)
        assert m.predict(0) == 0
        assert m.predict(35) == int(synthgen.ActivityType.WAITING)

    def test_tie_takes_lower_code(self):
        seqs = np.zeros((4, 36), dtype=np.int64)
        seqs[:2, 20:] = 2
        seqs[2:, 20:] = 3
        ds = Dataset(np.zeros((4, 5)), seqs, list("abcd"))
        m = models.majority_baseline(ds)
        assert m.predict(25) == 2

    def test_exhaustive_optimality(self, small_split):
        train, _ = small_split
        m = models.majority_baseline(train)
        for k in range(36):
            errs = [np.mean(train.sequences[:, k] != c) for c in range(6)]
            assert errs[m.predict(k)] <= min(errs) + 1e-12


class TestSweep:
    def test_single_size(self, small_split):
        train, test = small_split
        rows = models.hidden_size_sweep(train, test, [4], FAST, seed=3)
        assert len(rows) == 1 and rows[0][0] == 4

    def test_row_count_and_selection(self, small_split):
        train, test = small_split
        rows = models.hidden_size_sweep(train, test, [2, 6], FAST, seed=3)
        assert [r[0] for r in rows] == [2, 6]
        assert all(0.0 <= r[1] <= 1.0 for r in rows)

    def test_empty_sizes(self, small_split):
        train, test = small_split
        with pytest.raises(ValidationError):
            models.hidden_size_sweep(train, test, [], FAST, seed=3)


class TestBundles:
    @pytest.mark.parametrize("builder", [
        lambda s: models.FnnSet(nets=[nc.init_fnn(5, 6, 6, seed=k) for k in range(36)],
                                hidden=6, feature_indices=(0, 1, 2, 3, 4)),
        lambda s: random_lstm(seed=2),
        lambda s: random_direct_set(seed=2, horizons=3),
        lambda s: models.CombinedModel(params=nc.init_combined(5, 6, 6, 8, 6, 1),
                                       hidden=8, static_hidden=6),
        lambda s: models.MajorityBaseline(modal=np.arange(36, dtype=np.int64) % 6),
    ])
    def test_round_trip(self, tmp_path, builder):
        model = builder(None)
        models.save_bundle(tmp_path / "b", model, {"note": "x"})
        back = models.load_bundle(tmp_path / "b")
        assert type(back) is type(model)
        if isinstance(model, models.FnnSet):
            for na, nb in zip(model.nets, back.nets):
                assert all(np.array_equal(na[k], nb[k]) for k in na)
        elif isinstance(model, models.DirectLstmSet):
            assert back.horizons() == model.horizons()
            for h in model.horizons():
                assert all(np.array_equal(model.models[h].params[k],
                                          back.models[h].params[k])
                           for k in model.models[h].params)
        elif isinstance(model, models.MajorityBaseline):
            assert np.array_equal(model.modal, back.modal)
        else:
            assert all(np.array_equal(model.params[k], back.params[k])
                       for k in model.params)

    def test_manifest_contents(self, tmp_path):
        models.save_bundle(tmp_path / "b", random_lstm(), {"data_sha256": "abc"})
        meta = models.read_manifest(tmp_path / "b")
        assert meta["architecture"] == "lstm"
        assert meta["data_sha256"] == "abc"
        assert meta["horizon"] == "1"

    def test_missing_bundle(self, tmp_path):
        with pytest.raises(ConfigError):
            models.load_bundle(tmp_path / "nothing")

    def test_manifest_deterministic_bytes(self, tmp_path):
        m = random_lstm(seed=7)
        models.save_bundle(tmp_path / "b1", m, {"z": "1", "a": "2"})
        models.save_bundle(tmp_path / "b2", m, {"a": "2", "z": "1"})
        read = lambda d: (tmp_path / d / "manifest").read_text()
        assert read("b1") == read("b2")


class TestSeeding:
    def test_derive_seed_stable(self):
        assert derive_seed(42, "fnn/unit07") == derive_seed(42, "fnn/unit07")
        assert derive_seed(42, "a") != derive_seed(42, "b")
        assert derive_seed(1, "a") != derive_seed(2, "a")
