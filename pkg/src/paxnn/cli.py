"""Command-line pipeline: generate, ingest, train, evaluate, ablate,
compare, reproduce.

All commands read one configuration file, accept ``--seed`` (master seed
override), ``--out`` (output directory override), and ``--jobs`` (worker
count for the independent trainings). Outputs embed the sha256 of their
inputs plus the full effective configuration, so reruns with unchanged
inputs produce byte-identical files whatever the job count.

On any validation, parse, config, or training error the command prints a
structured message to stderr, removes files it had started writing, and
exits with status 2.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import evaluation as ev
from . import models, synthgen
from .config import RunConfig, config_help_text, file_sha256, load_config
from .errors import ConfigError, PaxnnError
from .ingestion import (ingest_traces, read_dataset, split_dataset,
                        write_dataset, write_discard_log)
from .seeding import derive_seed

TRAIN_ARCHITECTURES = ("fnn", "lstm", "direct", "combined", "majority")


class OutputTracker:
    """Remembers files created by one command so a failure can remove the
    partial outputs instead of leaving a half-written run behind."""

    def __init__(self):
        self.paths = []

    def register(self, path):
        self.paths.append(str(path))
        parent = os.path.dirname(str(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        return path

    def cleanup(self):
        for p in self.paths:
            if os.path.isfile(p):
                try:
                    os.remove(p)
                except OSError:
                    pass


def _prepend_comments(path, comments):
    with open(path, "r", encoding="utf-8") as fh:
        body = fh.read()
    with open(path, "w", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(body)


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.set("train", "master_seed", args.seed)
    if args.out is not None:
        cfg.set("io", "out", args.out)
    return cfg


def _dataset_paths(cfg):
    return {key: cfg.path(key) for key in
            ("stays", "flights", "area_map", "dataset", "discards",
             "bundles", "reports", "ablation", "strategy", "hidden_sweep")}


# ---------------------------------------------------------------- commands

def cmd_generate(cfg: RunConfig, jobs: int, track: OutputTracker) -> None:
    paths = _dataset_paths(cfg)
    params = cfg.generator_params()
    for key in ("stays", "flights", "area_map", "dataset"):
        track.register(paths[key])
    synthgen.write_trace_files(params, paths["stays"], paths["flights"],
                               paths["area_map"])
    ds = synthgen.generate_population(params)
    write_dataset(paths["dataset"], ds)
    stamp = [f"input_hash.config={cfg.content_hash()}",
             f"seed.generator={params.seed}"]
    for key in ("stays", "flights", "area_map", "dataset"):
        _prepend_comments(paths[key], stamp)
    print(f"generated {ds.n} passengers -> {paths['dataset']}")


def cmd_ingest(cfg: RunConfig, jobs: int, track: OutputTracker) -> None:
    paths = _dataset_paths(cfg)
    ds, discards = ingest_traces(
        paths["stays"], paths["flights"], paths["area_map"],
        gap_threshold_units=cfg.get_int("ingest", "gap_threshold_units"),
        allow_unmapped=cfg.get_bool("ingest", "allow_unmapped_areas"))
    track.register(paths["dataset"])
    track.register(paths["discards"])
    write_dataset(paths["dataset"], ds)
    write_discard_log(paths["discards"], discards)
    stamp = [f"input_hash.config={cfg.content_hash()}"]
    stamp += [f"input_hash.{k}={file_sha256(paths[k])}"
              for k in ("stays", "flights", "area_map")]
    _prepend_comments(paths["dataset"], stamp)
    _prepend_comments(paths["discards"], stamp)
    print(f"ingested {ds.n} passengers, discarded {len(discards)} devices "
          f"-> {paths['dataset']}")


def _load_split(cfg):
    path = cfg.path("dataset")
    ds = read_dataset(path)
    train, test = split_dataset(ds, cfg.get_float("train", "train_fraction"),
                                seed=derive_seed(cfg.master_seed(), "split"))
    return ds, train, test, file_sha256(path)


def _bundle_meta(cfg, data_hash, seeds):
    meta = {f"config.{k}": v for k, v in cfg.echo().items()}
    meta["data_sha256"] = data_hash
    meta["seed.master"] = str(cfg.master_seed())
    for name, value in seeds.items():
        meta[f"seed.{name}"] = str(value)
    return meta


def _train_one(cfg, arch, train, jobs):
    tc = cfg.train_config()
    master = cfg.master_seed()
    if arch == "fnn":
        return models.train_fnn_set(train, tc, derive_seed(master, "fnn"), jobs=jobs)
    if arch == "lstm":
        return models.train_lstm(train, 1, tc, derive_seed(master, "direct/h1"))
    if arch == "direct":
        return models.train_direct_set(train, tc, master, jobs=jobs)
    if arch == "combined":
        return models.train_combined(train, tc, derive_seed(master, "combined"))
    if arch == "majority":
        return models.majority_baseline(train)
    raise ConfigError(f"unknown architecture {arch!r}; valid: "
                      f"{', '.join(TRAIN_ARCHITECTURES)}")


def cmd_train(cfg: RunConfig, jobs: int, track: OutputTracker,
              architecture=None) -> None:
    arch = architecture or cfg.get("train", "architecture")
    if arch not in TRAIN_ARCHITECTURES:
        raise ConfigError(f"unknown architecture {arch!r}; valid: "
                          f"{', '.join(TRAIN_ARCHITECTURES)}")
    _, train, _, data_hash = _load_split(cfg)
    model = _train_one(cfg, arch, train, jobs)
    bundle_dir = os.path.join(cfg.path("bundles"), arch)
    meta = _bundle_meta(cfg, data_hash, {"train_split": derive_seed(cfg.master_seed(), "split")})
    for name in models.save_bundle(bundle_dir, model, meta):
        track.paths.append(os.path.join(bundle_dir, name))
    print(f"trained {arch} on {train.n} passengers -> {bundle_dir}")


def _report_meta(cfg, data_hash, bundle_dir=None):
    hashes = {"dataset": data_hash, "config": cfg.content_hash()}
    if bundle_dir:
        hashes["bundle_manifest"] = file_sha256(
            os.path.join(bundle_dir, models.MANIFEST_NAME))
    seeds = {"master": str(cfg.master_seed())}
    return cfg.echo(), seeds, hashes


def _critical_bounds(cfg):
    return (cfg.get_float("eval", "critical_lo_minutes"),
            cfg.get_float("eval", "critical_hi_minutes"))


def _predictor_for(cfg, arch, model):
    if arch == "fnn":
        return ev.FnnPredictor(model)
    if arch == "majority":
        return ev.MajorityPredictor(model)
    if arch == "combined":
        return ev.CombinedPredictor(model)
    if arch == "lstm":
        if cfg.get("eval", "prefix_mode") == "predicted":
            return ev.SelfRolloutLstmPredictor(model)
        return ev.DirectLstmPredictor(model)
    raise ConfigError(f"cmd_evaluate supports fnn|lstm|combined|majority, got {arch!r}")


def cmd_evaluate(cfg: RunConfig, jobs: int, track: OutputTracker,
                 architecture=None) -> None:
    arch = architecture or cfg.get("train", "architecture")
    bundle_dir = os.path.join(cfg.path("bundles"), arch)
    model = models.load_bundle(bundle_dir)
    _, _, test, data_hash = _load_split(cfg)
    echo, seeds, hashes = _report_meta(cfg, data_hash, bundle_dir)
    lo, hi = _critical_bounds(cfg)
    report = ev.misclassification_curve(_predictor_for(cfg, arch, model), test,
                                        config_echo=echo, seed_lineage=seeds,
                                        input_hashes=hashes,
                                        critical_lo=lo, critical_hi=hi)
    out = os.path.join(cfg.path("reports"), f"{arch}.csv")
    track.register(out)
    ev.write_report_csv(out, report)
    if cfg.get_bool("eval", "svg"):
        svg = os.path.join(cfg.path("reports"), f"{arch}.svg")
        track.register(svg)
        ev.write_curve_svg(svg, report)
    print(f"evaluated {arch}: critical-period rate "
          f"{report.critical_mean:.4f} -> {out}")


def cmd_ablate(cfg: RunConfig, jobs: int, track: OutputTracker) -> None:
    _, train, test, data_hash = _load_split(cfg)
    lo, hi = _critical_bounds(cfg)
    rows = ev.ablation_study(train, test, cfg.train_config(),
                             derive_seed(cfg.master_seed(), "ablate"), jobs=jobs,
                             critical_lo=lo, critical_hi=hi)
    out = cfg.path("ablation")
    track.register(out)
    ev.write_ablation_csv(out, rows, extra_comments=[
        f"input_hash.dataset={data_hash}",
        f"input_hash.config={cfg.content_hash()}",
        f"seed.master={cfg.master_seed()}"])
    print(f"ablation study ({len(rows)} rows) -> {out}")


def cmd_compare(cfg: RunConfig, jobs: int, track: OutputTracker) -> None:
    direct_dir = os.path.join(cfg.path("bundles"), "direct")
    direct = models.load_bundle(direct_dir)
    if not isinstance(direct, models.DirectLstmSet):
        raise ConfigError(f"{direct_dir} does not hold a direct-strategy bundle")
    base = direct.models.get(1)
    if base is None:
        raise ConfigError("direct bundle lacks the 1-step base model")
    _, _, test, data_hash = _load_split(cfg)
    lo, hi = _critical_bounds(cfg)
    rows = ev.strategy_comparison(base, direct, test, critical_lo=lo,
                                  critical_hi=hi)
    out = cfg.path("strategy")
    track.register(out)
    ev.write_strategy_csv(out, rows, extra_comments=[
        f"input_hash.dataset={data_hash}",
        f"input_hash.bundle_manifest={file_sha256(os.path.join(direct_dir, models.MANIFEST_NAME))}",
        f"input_hash.config={cfg.content_hash()}",
        f"seed.master={cfg.master_seed()}"])
    print(f"strategy comparison ({len(rows)} horizons) -> {out}")


def cmd_sweep(cfg: RunConfig, jobs: int, track: OutputTracker) -> None:
    _, train, test, data_hash = _load_split(cfg)
    sizes = cfg.get_int_list("train", "sweep_sizes")
    rows = models.hidden_size_sweep(train, test, sizes, cfg.train_config(),
                                    derive_seed(cfg.master_seed(), "sweep"),
                                    jobs=jobs)
    out = cfg.path("hidden_sweep")
    track.register(out)
    ev.write_hidden_sweep_csv(out, rows, extra_comments=[
        f"input_hash.dataset={data_hash}",
        f"input_hash.config={cfg.content_hash()}",
        f"seed.master={cfg.master_seed()}"])
    best = min(rows, key=lambda r: r[1])
    print(f"hidden-size sweep (best {best[0]} @ {best[1]:.4f}) -> {out}")


def cmd_reproduce(cfg: RunConfig, jobs: int, track: OutputTracker) -> None:
    """The full experiment sequence on one synthetic population."""
    cmd_generate(cfg, jobs, track)
    cmd_ingest(cfg, jobs, track)
    for arch in ("fnn", "majority", "direct"):
        cmd_train(cfg, jobs, track, architecture=arch)
    # the 1-step report comes from the direct bundle's base model
    direct_dir = os.path.join(cfg.path("bundles"), "direct")
    direct = models.load_bundle(direct_dir)
    lstm_dir = os.path.join(cfg.path("bundles"), "lstm")
    _, _, _, data_hash = _load_split(cfg)
    meta = _bundle_meta(cfg, data_hash,
                        {"train_split": derive_seed(cfg.master_seed(), "split")})
    for name in models.save_bundle(lstm_dir, direct.models[1], meta):
        track.paths.append(os.path.join(lstm_dir, name))
    for arch in ("fnn", "lstm", "majority"):
        cmd_evaluate(cfg, jobs, track, architecture=arch)
    cmd_sweep(cfg, jobs, track)
    cmd_ablate(cfg, jobs, track)
    cmd_compare(cfg, jobs, track)
    print("reproduce complete")


COMMANDS = {
    "generate": (cmd_generate, "draw a synthetic population and write its files"),
    "ingest": (cmd_ingest, "parse and filter trace files into a dataset"),
    "train": (cmd_train, "train the configured architecture"),
    "evaluate": (cmd_evaluate, "write a misclassification report for a bundle"),
    "ablate": (cmd_ablate, "leave-one-feature-out study plus noise benchmark"),
    "compare": (cmd_compare, "recursive vs direct multi-step strategy table"),
    "sweep": (cmd_sweep, "hidden-size selection sweep for the unit classifiers"),
    "reproduce": (cmd_reproduce, "run the whole pipeline end to end"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paxnn",
        description="Passenger activity sequences from WiFi stay traces, and "
                    "neural models predicting future activity choices.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=config_help_text())
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, doc) in COMMANDS.items():
        p = sub.add_parser(name, help=doc, description=doc,
                           formatter_class=argparse.RawDescriptionHelpFormatter,
                           epilog=config_help_text())
        p.add_argument("--config", help="configuration file (defaults apply if omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override [train] master_seed")
        p.add_argument("--out", default=None, help="override [io] out directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for independent trainings")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    track = OutputTracker()
    try:
        cfg = _load_run_config(args)
        COMMANDS[args.command][0](cfg, max(args.jobs, 1), track)
    except PaxnnError as exc:
        track.cleanup()
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
