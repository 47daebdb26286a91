"""The model zoo: per-unit FNN set, next-step LSTM with recursive and
direct multi-step forecasting, the combined static+dynamic network, the
majority baseline, and the random-input benchmark model.

Every ``train_*`` function is a pure function of (dataset content, config,
seed): shuffle orders and initializations derive from the seed lineage in
:mod:`paxnn.seeding`, so retraining reproduces identical weights and the
independent jobs (36 time-unit classifiers, one LSTM per horizon) can run
in any order or degree of parallelism.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import neural_core as nc
from .activity_model import (DEFAULT_AXIS, N_ACTIVITIES, N_FEATURES,
                             critical_period_units)
from .errors import ConfigError, DomainError, TrainingError, ValidationError
from .ingestion import Dataset
from .neural_core import backend
from .parallel import run_jobs
from .seeding import derive_seed

ARCHITECTURES = ("fnn", "lstm", "direct", "combined", "majority")

MANIFEST_NAME = "manifest"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all trainings; every field is overridable
    from the run configuration file."""

    fnn_hidden: int = 6
    lstm_hidden: int = 200
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    fnn_epochs: int = 30
    lstm_epochs: int = 60
    direct_horizons: int = 6

    def __post_init__(self):
        if self.fnn_hidden < 1 or self.lstm_hidden < 1:
            raise ConfigError("hidden sizes must be positive")
        if self.batch_size < 1 or self.fnn_epochs < 1 or self.lstm_epochs < 1:
            raise ConfigError("batch size and epoch counts must be positive")
        if not 1 <= self.direct_horizons <= DEFAULT_AXIS.n_units - 1:
            raise ConfigError("direct_horizons out of range")


def _shuffle_orders(n, epochs, seed):
    rng = np.random.default_rng(seed)
    return np.vstack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)


def _check_trained(params, what):
    for name, a in params.items():
        if not np.all(np.isfinite(a)):
            raise TrainingError(f"{what}: non-finite parameters in block {name!r}")


# ===================================================================== FNN

@dataclass
class FnnSet:
    """36 independent classifiers, one per time unit, identical topology."""

    nets: list                      # one param dict per unit
    hidden: int
    feature_indices: tuple          # columns of the 5-feature matrix used
    seed_lineage: dict = field(default_factory=dict)

    @property
    def n_units(self):
        return len(self.nets)

    def predict_proba(self, feats: np.ndarray, k: int) -> np.ndarray:
        if not 0 <= k < self.n_units:
            raise DomainError(f"unit {k} out of range 0..{self.n_units - 1}")
        x = np.atleast_2d(feats)[:, list(self.feature_indices)]
        return nc.softmax(nc.fnn_logits(self.nets[k], x))


def train_fnn_unit(features: np.ndarray, labels: np.ndarray, hidden: int,
                   cfg: TrainConfig, seed: int) -> dict:
    """One unit classifier; the whole SGDM loop runs in the active backend."""
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    params = nc.init_fnn(x.shape[1], hidden, N_ACTIVITIES, derive_seed(seed, "init"))
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    order = _shuffle_orders(x.shape[0], cfg.fnn_epochs, derive_seed(seed, "shuffle"))
    backend.kernels().fnn_train(
        x, y, order, cfg.batch_size, cfg.learning_rate, cfg.momentum,
        params["w1"], params["b1"], params["w2"], params["b2"],
        vel["w1"], vel["b1"], vel["w2"], vel["b2"])
    _check_trained(params, "fnn unit")
    return params


def _fnn_unit_job(args):
    return train_fnn_unit(*args)


def train_fnn_set(train: Dataset, cfg: TrainConfig, seed: int,
                  feature_indices=None, features_override=None,
                  hidden=None, jobs: int = 1) -> FnnSet:
    """Train the per-unit classifier set.

    ``feature_indices`` selects input columns (ablation runs pass 4 of 5);
    ``features_override`` substitutes the whole feature matrix (the random
    benchmark passes noise).
    """
    if train.n == 0:
        raise ValidationError("cannot train on an empty dataset")
    if feature_indices is None:
        feature_indices = tuple(range(N_FEATURES))
    feats = train.features if features_override is None else features_override
    feats = feats[:, list(feature_indices)]
    hidden = cfg.fnn_hidden if hidden is None else int(hidden)
    lineage = {f"unit{k:02d}": derive_seed(seed, f"fnn/unit{k:02d}")
               for k in range(train.axis.n_units)}
    args = [(feats, train.sequences[:, k], hidden, cfg, lineage[f"unit{k:02d}"])
            for k in range(train.axis.n_units)]
    nets = run_jobs(_fnn_unit_job, args, jobs)
    return FnnSet(nets=nets, hidden=hidden, feature_indices=tuple(feature_indices),
                  seed_lineage=lineage)


def predict_fnn(model: FnnSet, features, k: int) -> np.ndarray:
    """Probability vector for one passenger at one unit."""
    f = features.as_array() if hasattr(features, "as_array") else np.asarray(features)
    return model.predict_proba(f.reshape(1, -1), k)[0]


def random_feature_matrix(n: int, seed: int) -> np.ndarray:
    """The i.i.d. uniform(0,1) inputs of the noise benchmark."""
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, N_FEATURES))


# ==================================================================== LSTM

@dataclass
class LstmNextStep:
    """Sequence model predicting the activity ``horizon`` units ahead."""

    params: dict
    hidden: int
    horizon: int
    seed_lineage: dict = field(default_factory=dict)


@dataclass
class DirectLstmSet:
    """Independently trained models, one per forecast horizon."""

    models: dict                    # horizon -> LstmNextStep

    def horizons(self):
        return sorted(self.models)


def train_lstm(train: Dataset, horizon: int, cfg: TrainConfig, seed: int,
               hidden=None) -> LstmNextStep:
    if train.n == 0:
        raise ValidationError("cannot train on an empty dataset")
    n_units = train.axis.n_units
    if not 1 <= horizon < n_units:
        raise DomainError(f"horizon must lie in [1, {n_units - 1}], got {horizon}")
    hidden = cfg.lstm_hidden if hidden is None else int(hidden)
    params = nc.init_lstm(N_ACTIVITIES, hidden, N_ACTIVITIES,
                          derive_seed(seed, "init"))
    state = nc.SgdmState(cfg.learning_rate, cfg.momentum)
    rng = np.random.default_rng(derive_seed(seed, "shuffle"))
    codes = train.sequences
    for _ in range(cfg.lstm_epochs):
        perm = rng.permutation(train.n)
        for s in range(0, train.n, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            _, grads = nc.lstm_loss_and_grads(params, codes[idx], horizon)
            nc.sgdm_update(params, grads, state)
    _check_trained(params, f"lstm h={horizon}")
    return LstmNextStep(params=params, hidden=hidden, horizon=horizon,
                        seed_lineage={"train": derive_seed(seed, "init")})


def _direct_job(args):
    train, h, cfg, seed, hidden = args
    return train_lstm(train, h, cfg, seed, hidden=hidden)


def train_direct_set(train: Dataset, cfg: TrainConfig, seed: int,
                     horizons=None, hidden=None, jobs: int = 1,
                     base: LstmNextStep | None = None) -> DirectLstmSet:
    """One fresh model per horizon; ``base`` reuses an already trained
    1-step model (it has the same seed lineage, so the result is identical
    to retraining)."""
    horizons = list(horizons or range(1, cfg.direct_horizons + 1))
    args = [(train, h, cfg, derive_seed(seed, f"direct/h{h}"), hidden)
            for h in horizons if not (base is not None and h == base.horizon)]
    trained = run_jobs(_direct_job, args, jobs)
    models = {m.horizon: m for m in trained}
    if base is not None and base.horizon in horizons:
        models[base.horizon] = base
    return DirectLstmSet(models=models)


def predict_next(model: LstmNextStep, prefix) -> np.ndarray:
    """Distribution over the activity ``horizon`` units past the prefix end."""
    prefix = np.asarray(prefix, dtype=np.int64).reshape(1, -1)
    n_units = DEFAULT_AXIS.n_units
    if not 1 <= prefix.shape[1] <= n_units - 1:
        raise DomainError(
            f"prefix length must lie in [1, {n_units - 1}], got {prefix.shape[1]}")
    hs, _ = nc.lstm_hidden_states(model.params, prefix)
    return nc.softmax(nc.lstm_readout(model.params, hs[-1]))[0]


def forecast_recursive(model: LstmNextStep, prefix, steps: int) -> list[int]:
    """Roll the 1-step model forward, feeding each argmax back as input."""
    if model.horizon != 1:
        raise DomainError("recursive forecasting requires the 1-step model")
    prefix = list(int(c) for c in prefix)
    if steps < 0 or len(prefix) + steps > DEFAULT_AXIS.n_units:
        raise DomainError("forecast would run past the horizon")
    out = []
    for _ in range(steps):
        probs = predict_next(model, prefix)
        nxt = int(np.argmax(probs))
        out.append(nxt)
        prefix.append(nxt)
    return out


def forecast_direct(direct: DirectLstmSet, prefix, steps: int) -> list[int]:
    """Element j comes from the horizon-(j+1) model on the same prefix."""
    missing = [h for h in range(1, steps + 1) if h not in direct.models]
    if missing:
        raise DomainError(f"direct set lacks horizon models {missing}")
    if steps < 0 or len(list(prefix)) + steps > DEFAULT_AXIS.n_units:
        raise DomainError("forecast would run past the horizon")
    return [int(np.argmax(predict_next(direct.models[h], prefix)))
            for h in range(1, steps + 1)]


# ================================================================ combined

@dataclass
class CombinedModel:
    """Static tanh branch + LSTM branch fused before the softmax readout."""

    params: dict
    hidden: int
    static_hidden: int
    horizon: int = 1
    seed_lineage: dict = field(default_factory=dict)


def train_combined(train: Dataset, cfg: TrainConfig, seed: int,
                   hidden=None, static_hidden=None) -> CombinedModel:
    if train.n == 0:
        raise ValidationError("cannot train on an empty dataset")
    hidden = cfg.lstm_hidden if hidden is None else int(hidden)
    static_hidden = cfg.fnn_hidden if static_hidden is None else int(static_hidden)
    params = nc.init_combined(N_FEATURES, static_hidden, N_ACTIVITIES, hidden,
                              N_ACTIVITIES, derive_seed(seed, "init"))
    state = nc.SgdmState(cfg.learning_rate, cfg.momentum)
    rng = np.random.default_rng(derive_seed(seed, "shuffle"))
    for _ in range(cfg.lstm_epochs):
        perm = rng.permutation(train.n)
        for s in range(0, train.n, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            _, grads = nc.combined_loss_and_grads(
                params, train.features[idx], train.sequences[idx])
            nc.sgdm_update(params, grads, state)
    _check_trained(params, "combined")
    return CombinedModel(params=params, hidden=hidden, static_hidden=static_hidden,
                         seed_lineage={"train": derive_seed(seed, "init")})


def predict_combined(model: CombinedModel, features, prefix) -> np.ndarray:
    f = features.as_array() if hasattr(features, "as_array") else np.asarray(features)
    prefix = np.asarray(prefix, dtype=np.int64).reshape(1, -1)
    if prefix.shape[1] < 1:
        raise DomainError("prefix must contain at least one unit")
    hs, _ = nc.lstm_hidden_states(model.params, prefix)
    s = nc.combined_static_hidden(model.params, f.reshape(1, -1))
    return nc.softmax(nc.combined_logits_from_states(model.params, hs[-1], s))[0]


# ================================================================ baseline

@dataclass
class MajorityBaseline:
    """Per-unit modal activity of the training split (ties to lower code)."""

    modal: np.ndarray               # (n_units,) int64

    def predict(self, k: int) -> int:
        return int(self.modal[k])


def majority_baseline(train: Dataset) -> MajorityBaseline:
    if train.n == 0:
        raise ValidationError("cannot fit a baseline on an empty dataset")
    modal = np.empty(train.axis.n_units, dtype=np.int64)
    for k in range(train.axis.n_units):
        counts = np.bincount(train.sequences[:, k], minlength=N_ACTIVITIES)
        modal[k] = int(np.argmax(counts))
    return MajorityBaseline(modal=modal)


# ============================================================ hidden sweep

def hidden_size_sweep(train: Dataset, test: Dataset, sizes, cfg: TrainConfig,
                      seed: int, jobs: int = 1) -> list[tuple[int, float]]:
    """Critical-period misclassification per hidden size; selection is the
    argmin row."""
    sizes = list(sizes)
    if not sizes:
        raise ValidationError("sizes list must not be empty")
    crit = sorted(critical_period_units(train.axis))
    rows = []
    for size in sizes:
        model = train_fnn_set(train, cfg, derive_seed(seed, f"sweep/h{size}"),
                              hidden=size, jobs=jobs)
        errs = [float(np.mean(
            np.argmax(model.predict_proba(test.features, k), axis=1)
            != test.sequences[:, k])) for k in crit]
        rows.append((int(size), float(np.mean(errs))))
    return rows


# ================================================================= bundles

def _manifest_lines(meta: dict) -> str:
    return "".join(f"{k}={meta[k]}\n" for k in sorted(meta))


def save_bundle(path, model, extra_meta=None) -> list[str]:
    """Write a model directory: ``manifest`` plus one parameter file per
    network. Returns the file names written (for output tracking)."""
    os.makedirs(path, exist_ok=True)
    meta = dict(extra_meta or {})
    written = []

    def put(name, params):
        nc.write_params(os.path.join(path, name), params)
        written.append(name)

    if isinstance(model, FnnSet):
        meta.update(architecture="fnn", hidden=model.hidden,
                    feature_indices=",".join(map(str, model.feature_indices)),
                    n_units=model.n_units)
        for k, net in enumerate(model.nets):
            put(f"net_{k:02d}.params", net)
    elif isinstance(model, DirectLstmSet):
        any_m = model.models[model.horizons()[0]]
        meta.update(architecture="direct", hidden=any_m.hidden,
                    horizons=",".join(map(str, model.horizons())))
        for h in model.horizons():
            put(f"h{h}.params", model.models[h].params)
    elif isinstance(model, LstmNextStep):
        meta.update(architecture="lstm", hidden=model.hidden, horizon=model.horizon)
        put("lstm.params", model.params)
    elif isinstance(model, CombinedModel):
        meta.update(architecture="combined", hidden=model.hidden,
                    static_hidden=model.static_hidden)
        put("combined.params", model.params)
    elif isinstance(model, MajorityBaseline):
        meta.update(architecture="majority")
        put("majority.params", {"modal": model.modal.astype(np.float64)})
    else:
        raise ConfigError(f"cannot bundle object of type {type(model).__name__}")
    with open(os.path.join(path, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write(_manifest_lines(meta))
    written.append(MANIFEST_NAME)
    return written


def read_manifest(path) -> dict:
    meta = {}
    try:
        fh = open(os.path.join(path, MANIFEST_NAME), "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"no model bundle at {path}: {exc}")
    with fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                k, _, v = line.partition("=")
                meta[k] = v
    return meta


def load_bundle(path):
    meta = read_manifest(path)
    arch = meta.get("architecture")
    if arch == "fnn":
        n_units = int(meta["n_units"])
        nets = [nc.read_params(os.path.join(path, f"net_{k:02d}.params"))
                for k in range(n_units)]
        idx = tuple(int(v) for v in meta["feature_indices"].split(","))
        return FnnSet(nets=nets, hidden=int(meta["hidden"]), feature_indices=idx)
    if arch == "direct":
        models = {}
        for h in (int(v) for v in meta["horizons"].split(",")):
            params = nc.read_params(os.path.join(path, f"h{h}.params"))
            models[h] = LstmNextStep(params=params, hidden=int(meta["hidden"]),
                                     horizon=h)
        return DirectLstmSet(models=models)
    if arch == "lstm":
        params = nc.read_params(os.path.join(path, "lstm.params"))
        return LstmNextStep(params=params, hidden=int(meta["hidden"]),
                            horizon=int(meta["horizon"]))
    if arch == "combined":
        params = nc.read_params(os.path.join(path, "combined.params"))
        return CombinedModel(params=params, hidden=int(meta["hidden"]),
                             static_hidden=int(meta["static_hidden"]))
    if arch == "majority":
        params = nc.read_params(os.path.join(path, "majority.params"))
        return MajorityBaseline(modal=params["modal"].astype(np.int64))
    raise ConfigError(f"unknown architecture {arch!r} in bundle {path}; "
                      f"valid: {', '.join(ARCHITECTURES)}")
