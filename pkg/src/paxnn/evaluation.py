"""Evaluation harness: per-unit misclassification curves, critical-period
means, the input-ablation study, and the recursive-vs-direct strategy
comparison, plus report serialization (CSV and a small self-contained SVG).

Leakage control: the harness slices what a predictor may see. At unit ``k``
a predictor declaring ``horizon_units = h >= 1`` receives exactly the
observed prefix of units ``0..k-h``; static predictors (``h == 0``) receive
no history at all. Units where the allowed prefix would be empty are marked
absent (NaN) and excluded from every mean.

Sequence predictors keep an incremental state cache: evaluating the 36
units of a curve costs one forward pass over the test set, not 36.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import neural_core as nc
from .activity_model import (DEFAULT_AXIS, N_FEATURES, TimeAxis,
                             activity_code_table, critical_period_units)
from .errors import DomainError, ParseError, ValidationError
from .ingestion import Dataset
from .models import (DirectLstmSet, FnnSet, LstmNextStep, CombinedModel,
                     MajorityBaseline, TrainConfig, random_feature_matrix,
                     train_fnn_set)
from .seeding import derive_seed

REPORT_HEADER = "unit,minutes_before_hi,minutes_before_lo,rate"
ABLATION_HEADER = "removed,critical_mean"
STRATEGY_HEADER = ("horizon_min,recursive,direct,difference,recursive_tail,"
                   "direct_tail,final_unit_recursive,final_unit_direct")

#: ablation rows in output order: the full model, one row per removed
#: feature, then the all-noise benchmark
ABLATION_ROWS = ("base", "arrival_time", "earliness", "destination",
                 "carrier", "brand", "random")

TAIL_UNITS = 6


# ------------------------------------------------------------- predictors

class _PrefixCache:
    """Incremental LSTM state over growing observed prefixes."""

    def __init__(self, params):
        self.params = params
        self.length = 0
        self.h = None
        self.c = None

    def advance(self, prefixes: np.ndarray):
        n, length = prefixes.shape
        hidden = self.params["wh"].shape[0]
        if self.h is None or self.h.shape[0] != n or length < self.length:
            self.h = np.zeros((n, hidden))
            self.c = np.zeros((n, hidden))
            self.length = 0
        while self.length < length:
            col = np.ascontiguousarray(prefixes[:, self.length])
            self.h, self.c = nc.lstm_cell_batch(self.params, col, self.h, self.c)
            self.length += 1
        return self.h, self.c


class FnnPredictor:
    """Static per-unit classifier; optionally evaluated on substitute
    features (the random-numbers benchmark)."""

    horizon_units = 0

    def __init__(self, model: FnnSet, features_override=None, name="fnn"):
        self.model = model
        self.features_override = features_override
        self.name = name

    def predict_units(self, features, prefixes, k):
        feats = self.features_override if self.features_override is not None else features
        return np.argmax(self.model.predict_proba(feats, k), axis=1)


class MajorityPredictor:
    horizon_units = 0
    name = "majority"

    def __init__(self, model: MajorityBaseline):
        self.model = model

    def predict_units(self, features, prefixes, k):
        return np.full(features.shape[0], self.model.predict(k), dtype=np.int64)


class DirectLstmPredictor:
    """Teacher-forced evaluation of one fixed-horizon sequence model."""

    def __init__(self, model: LstmNextStep, name=None):
        self.model = model
        self.horizon_units = model.horizon
        self.name = name or f"lstm_h{model.horizon}"
        self._cache = _PrefixCache(model.params)

    def predict_units(self, features, prefixes, k):
        h, _ = self._cache.advance(prefixes)
        return np.argmax(nc.lstm_readout(self.model.params, h), axis=1)


class RecursiveLstmPredictor:
    """The 1-step model rolled ``steps`` units ahead, feeding back argmaxes."""

    def __init__(self, model: LstmNextStep, steps: int, shared_cache=None):
        if model.horizon != 1:
            raise DomainError("recursive forecasting requires the 1-step model")
        self.model = model
        self.horizon_units = int(steps)
        self.name = f"lstm_recursive_h{steps}"
        self._cache = shared_cache if shared_cache is not None else _PrefixCache(model.params)

    def predict_units(self, features, prefixes, k):
        h, c = self._cache.advance(prefixes)
        preds = np.argmax(nc.lstm_readout(self.model.params, h), axis=1)
        for _ in range(self.horizon_units - 1):
            h, c = nc.lstm_cell_batch(self.model.params, preds, h, c)
            preds = np.argmax(nc.lstm_readout(self.model.params, h), axis=1)
        return preds


class SelfRolloutLstmPredictor:
    """Alternative prefix mode: after the first observed unit, the model
    only ever sees its own predictions (full self-rollout)."""

    horizon_units = 1

    def __init__(self, model: LstmNextStep):
        if model.horizon != 1:
            raise DomainError("self-rollout requires the 1-step model")
        self.model = model
        self.name = "lstm_selfrollout"
        self._h = None
        self._c = None
        self._len = 0
        self._preds = None

    def predict_units(self, features, prefixes, k):
        n, length = prefixes.shape
        hidden = self.model.params["wh"].shape[0]
        if self._h is None or self._h.shape[0] != n or length < self._len:
            self._h = np.zeros((n, hidden))
            self._c = np.zeros((n, hidden))
            self._len = 0
            self._preds = None
        while self._len < length:
            col = (np.ascontiguousarray(prefixes[:, 0]) if self._len == 0
                   else self._preds)
            self._h, self._c = nc.lstm_cell_batch(self.model.params, col,
                                                  self._h, self._c)
            self._preds = np.argmax(
                nc.lstm_readout(self.model.params, self._h), axis=1)
            self._len += 1
        return self._preds


class CombinedPredictor:
    horizon_units = 1

    def __init__(self, model: CombinedModel):
        self.model = model
        self.name = "combined"
        self._cache = _PrefixCache(model.params)
        self._static = None

    def predict_units(self, features, prefixes, k):
        h, _ = self._cache.advance(prefixes)
        if self._static is None or self._static.shape[0] != features.shape[0]:
            self._static = nc.combined_static_hidden(self.model.params, features)
        logits = nc.combined_logits_from_states(self.model.params, h, self._static)
        return np.argmax(logits, axis=1)


# ----------------------------------------------------------------- report

@dataclass
class EvaluationReport:
    curve: np.ndarray                 # (n_units,) rates, NaN where absent
    critical_mean: float
    model: str
    horizon_minutes: int
    test_size: int
    config_echo: dict = field(default_factory=dict)
    seed_lineage: dict = field(default_factory=dict)
    input_hashes: dict = field(default_factory=dict)
    axis: TimeAxis = DEFAULT_AXIS

    def __post_init__(self):
        self.curve = np.asarray(self.curve, dtype=np.float64)
        if self.curve.shape != (self.axis.n_units,):
            raise ValidationError(f"curve must have {self.axis.n_units} entries")
        finite = self.curve[~np.isnan(self.curve)]
        if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
            raise ValidationError("misclassification rates must lie in [0, 1]")

    def __eq__(self, other):
        return (isinstance(other, EvaluationReport)
                and np.array_equal(self.curve, other.curve, equal_nan=True)
                and self.critical_mean == other.critical_mean
                and self.model == other.model
                and self.horizon_minutes == other.horizon_minutes
                and self.test_size == other.test_size
                and self.config_echo == other.config_echo
                and self.seed_lineage == other.seed_lineage
                and self.input_hashes == other.input_hashes)


def critical_period_mean(report_or_curve, axis: TimeAxis = DEFAULT_AXIS,
                         lo_minutes: float = 30.0,
                         hi_minutes: float = 100.0) -> float:
    """Arithmetic mean of the curve over the critical units; absent units
    are an error, not silently skipped."""
    if isinstance(report_or_curve, EvaluationReport):
        curve, axis = report_or_curve.curve, report_or_curve.axis
    else:
        curve = np.asarray(report_or_curve, dtype=np.float64)
    units = sorted(critical_period_units(axis, lo_minutes, hi_minutes))
    vals = curve[units]
    if np.isnan(vals).any():
        raise DomainError("curve is undefined on part of the critical period")
    return float(np.mean(vals))


def misclassification_curve(predictor, test: Dataset, horizon=None,
                            config_echo=None, seed_lineage=None,
                            input_hashes=None, critical_lo: float = 30.0,
                            critical_hi: float = 100.0) -> EvaluationReport:
    """Teacher-forced per-unit error rates for one predictor.

    ``horizon`` defaults to the predictor's own ``horizon_units``; passing
    it explicitly just asserts the caller and the predictor agree.
    """
    if test.n == 0:
        raise ValidationError("cannot evaluate on an empty test set")
    h = predictor.horizon_units
    if horizon is not None and int(horizon) != h:
        raise DomainError(f"predictor horizon {h} != requested {horizon}")
    axis = test.axis
    curve = np.full(axis.n_units, np.nan)
    seqs = test.sequences
    for k in range(axis.n_units):
        if h >= 1:
            prefix_len = k - h + 1
            if prefix_len < 1:
                continue
            prefixes = seqs[:, :prefix_len]
        else:
            prefixes = seqs[:, :0]
        preds = np.asarray(predictor.predict_units(test.features, prefixes, k))
        curve[k] = float(np.mean(preds != seqs[:, k]))
    return EvaluationReport(
        curve=curve,
        critical_mean=critical_period_mean(curve, axis, critical_lo, critical_hi),
        model=getattr(predictor, "name", type(predictor).__name__),
        horizon_minutes=h * axis.unit_minutes,
        test_size=test.n,
        config_echo=dict(config_echo or {}),
        seed_lineage=dict(seed_lineage or {}),
        input_hashes=dict(input_hashes or {}),
        axis=axis)


def tail_rate(report: EvaluationReport, units: int = TAIL_UNITS) -> float:
    """Mean rate over the final units: where rollout errors pile up."""
    vals = report.curve[-units:]
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        raise DomainError("curve is undefined on the tail")
    return float(np.mean(vals))


# ----------------------------------------------------------------- studies

def random_input_benchmark(train: Dataset, test: Dataset, cfg: TrainConfig,
                           seed: int, jobs: int = 1, critical_lo: float = 30.0,
                           critical_hi: float = 100.0) -> EvaluationReport:
    """The noise floor: the classifier set trained and evaluated on i.i.d.
    uniform inputs. With nothing to learn from, it can only regress to the
    per-unit class priors."""
    noise_train = random_feature_matrix(train.n, derive_seed(seed, "random/train"))
    noise_test = random_feature_matrix(test.n, derive_seed(seed, "random/test"))
    model = train_fnn_set(train, cfg, derive_seed(seed, "random"),
                          features_override=noise_train, jobs=jobs)
    pred = FnnPredictor(model, features_override=noise_test, name="fnn_random")
    return misclassification_curve(pred, test, critical_lo=critical_lo,
                                   critical_hi=critical_hi)


def ablation_study(train: Dataset, test: Dataset, cfg: TrainConfig, seed: int,
                   jobs: int = 1, critical_lo: float = 30.0,
                   critical_hi: float = 100.0) -> list[tuple[str, float]]:
    """Critical-period rate of the full model, of each leave-one-feature-out
    model, and of the all-noise benchmark."""
    from .activity_model import FEATURE_NAMES
    rows = []
    for label in ABLATION_ROWS:
        if label == "base":
            model = train_fnn_set(train, cfg, derive_seed(seed, "ablate/base"),
                                  jobs=jobs)
            pred = FnnPredictor(model, name="fnn_base")
        elif label == "random":
            rows.append((label, random_input_benchmark(
                train, test, cfg, derive_seed(seed, "ablate"), jobs=jobs,
                critical_lo=critical_lo, critical_hi=critical_hi).critical_mean))
            continue
        else:
            keep = tuple(i for i, f in enumerate(FEATURE_NAMES) if f != label)
            model = train_fnn_set(train, cfg, derive_seed(seed, f"ablate/{label}"),
                                  feature_indices=keep, jobs=jobs)
            pred = FnnPredictor(model, name=f"fnn_without_{label}")
        report = misclassification_curve(pred, test, critical_lo=critical_lo,
                                         critical_hi=critical_hi)
        rows.append((label, report.critical_mean))
    return rows


def strategy_comparison(base_lstm: LstmNextStep, direct: DirectLstmSet,
                        test: Dataset, critical_lo: float = 30.0,
                        critical_hi: float = 100.0) -> list[dict]:
    """Per-horizon critical-period and tail rates for both multi-step
    strategies. ``difference`` is direct minus recursive: negative values
    mean the direct strategy wins."""
    if base_lstm.horizon != 1:
        raise DomainError("strategy comparison needs the 1-step base model")
    horizons = direct.horizons()
    missing = [h for h in range(1, max(horizons) + 1) if h not in direct.models]
    if missing:
        raise DomainError(f"direct set lacks horizons {missing}")
    shared = _PrefixCache(base_lstm.params)
    rows = []
    for h in horizons:
        rec_rep = misclassification_curve(
            RecursiveLstmPredictor(base_lstm, h, shared_cache=shared), test,
            critical_lo=critical_lo, critical_hi=critical_hi)
        dir_rep = misclassification_curve(
            DirectLstmPredictor(direct.models[h]), test,
            critical_lo=critical_lo, critical_hi=critical_hi)
        rows.append({
            "horizon_min": h * test.axis.unit_minutes,
            "recursive": rec_rep.critical_mean,
            "direct": dir_rep.critical_mean,
            "difference": dir_rep.critical_mean - rec_rep.critical_mean,
            "recursive_tail": tail_rate(rec_rep),
            "direct_tail": tail_rate(dir_rep),
            "final_unit_recursive": float(rec_rep.curve[-1]),
            "final_unit_direct": float(dir_rep.curve[-1]),
        })
    return rows


# --------------------------------------------------------------------- IO

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _meta_comment_lines(report: EvaluationReport) -> list[str]:
    lines = [f"# model={report.model}",
             f"# horizon_minutes={report.horizon_minutes}",
             f"# test_size={report.test_size}"]
    lines += [f"# config.{k}={report.config_echo[k]}" for k in sorted(report.config_echo)]
    lines += [f"# seed.{k}={report.seed_lineage[k]}" for k in sorted(report.seed_lineage)]
    lines += [f"# input_hash.{k}={report.input_hashes[k]}" for k in sorted(report.input_hashes)]
    lines.append("# code,name")
    lines += [f"# {row}" for row in activity_code_table()]
    return lines


def write_report_csv(path, report: EvaluationReport) -> None:
    axis = report.axis
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in _meta_comment_lines(report):
            fh.write(line + "\n")
        fh.write(REPORT_HEADER + "\n")
        for k in range(axis.n_units):
            rate = "" if np.isnan(report.curve[k]) else _fmt(report.curve[k])
            fh.write(f"{k},{axis.minutes_before_hi(k)},{axis.minutes_before_lo(k)},{rate}\n")
        fh.write(f"critical_mean,{_fmt(report.critical_mean)}\n")


def read_report_csv(path, axis: TimeAxis = DEFAULT_AXIS) -> EvaluationReport:
    meta = {"model": "", "horizon_minutes": "0", "test_size": "0"}
    config_echo, seeds, hashes = {}, {}, {}
    curve = np.full(axis.n_units, np.nan)
    critical = None
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition("=")
                if not sep:
                    continue   # the code,name audit table
                if key.startswith("config."):
                    config_echo[key[7:]] = value
                elif key.startswith("seed."):
                    seeds[key[5:]] = value
                elif key.startswith("input_hash."):
                    hashes[key[11:]] = value
                else:
                    meta[key] = value
                continue
            if line == REPORT_HEADER:
                continue
            parts = line.split(",")
            if parts[0] == "critical_mean":
                critical = float(parts[1])
            else:
                k = int(parts[0])
                curve[k] = float(parts[3]) if parts[3] != "" else np.nan
    if critical is None:
        raise ParseError(f"{path}: missing critical_mean footer")
    return EvaluationReport(curve=curve, critical_mean=critical,
                            model=meta["model"],
                            horizon_minutes=int(meta["horizon_minutes"]),
                            test_size=int(meta["test_size"]),
                            config_echo=config_echo, seed_lineage=seeds,
                            input_hashes=hashes, axis=axis)


def write_ablation_csv(path, rows, extra_comments=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for c in extra_comments:
            fh.write(f"# {c}\n")
        fh.write(ABLATION_HEADER + "\n")
        for label, rate in rows:
            fh.write(f"{label},{_fmt(rate)}\n")


def write_strategy_csv(path, rows, extra_comments=()) -> None:
    cols = STRATEGY_HEADER.split(",")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for c in extra_comments:
            fh.write(f"# {c}\n")
        fh.write(STRATEGY_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in cols) + "\n")


def write_hidden_sweep_csv(path, rows, extra_comments=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for c in extra_comments:
            fh.write(f"# {c}\n")
        fh.write("hidden_size,critical_mean\n")
        for size, rate in rows:
            fh.write(f"{size},{_fmt(rate)}\n")


# -------------------------------------------------------------------- SVG

def write_curve_svg(path, report: EvaluationReport, width=640, height=400) -> None:
    """Self-contained line chart: minutes before departure vs. rate."""
    axis = report.axis
    mleft, mright, mtop, mbot = 60, 20, 30, 50
    plot_w = width - mleft - mright
    plot_h = height - mtop - mbot

    def sx(minutes_before):
        return mleft + plot_w * (axis.horizon_minutes - minutes_before) / axis.horizon_minutes

    def sy(rate):
        return mtop + plot_h * (1.0 - rate)

    pts = []
    for k in range(axis.n_units):
        if not np.isnan(report.curve[k]):
            pts.append(f"{sx(axis.minutes_before_hi(k)):.2f},{sy(report.curve[k]):.2f}")
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-size="14">'
        f'{report.model} (test n={report.test_size})</text>',
        f'<line x1="{mleft}" y1="{mtop + plot_h}" x2="{mleft + plot_w}" '
        f'y2="{mtop + plot_h}" stroke="black"/>',
        f'<line x1="{mleft}" y1="{mtop}" x2="{mleft}" y2="{mtop + plot_h}" stroke="black"/>',
    ]
    for m in range(0, axis.horizon_minutes + 1, 30):
        x = sx(m)
        lines.append(f'<line x1="{x:.2f}" y1="{mtop + plot_h}" x2="{x:.2f}" '
                     f'y2="{mtop + plot_h + 5}" stroke="black"/>')
        lines.append(f'<text x="{x:.2f}" y="{mtop + plot_h + 20}" text-anchor="middle" '
                     f'font-size="11">{m}</text>')
    for r in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(r)
        lines.append(f'<line x1="{mleft - 5}" y1="{y:.2f}" x2="{mleft}" y2="{y:.2f}" '
                     f'stroke="black"/>')
        lines.append(f'<text x="{mleft - 8}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-size="11">{r:g}</text>')
    lines.append(f'<text x="{mleft + plot_w / 2:.0f}" y="{height - 12}" '
                 f'text-anchor="middle" font-size="12">minutes before departure</text>')
    lines.append(f'<polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" '
                 f'points="{" ".join(pts)}"/>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
