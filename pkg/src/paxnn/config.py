"""Run configuration: a flat ``key = value`` file with ``[section]``
headers, UTF-8, ``#`` comments. Every key has a documented default and
unknown sections or keys are rejected outright.

The same parsed object drives every CLI command; reports and manifests
carry the full effective configuration (defaults merged with the file) so
an output is always traceable to the exact settings that produced it.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import os

from .errors import ConfigError
from .models import TrainConfig
from .synthgen import (GeneratorParams, coupled_params, default_params,
                       long_dependency_params)

_PROFILES = {"default": default_params, "long_dependency": long_dependency_params,
             "coupled": coupled_params}

#: section -> key -> (default, help)
SCHEMA = {
    "generator": {
        "profile": ("default", "population preset: default|long_dependency|coupled"),
        "n_passengers": ("5805", "population size"),
        "seed": ("", "generator seed; empty = use the master seed"),
        "earliness_mean": ("", "minutes before departure at first detection (mean)"),
        "earliness_std": ("", "earliness standard deviation"),
        "arrival_hour_min": ("", "earliest arrival hour of day"),
        "arrival_hour_max": ("", "latest arrival hour of day"),
        "p_short_range": ("", "share of short-range destinations"),
        "p_traditional": ("", "share of traditional carriers"),
        "p_brand": ("", "share of brand-A devices"),
        "security_trigger_mean": ("", "minutes-before at which passengers head to security"),
        "security_trigger_std": ("", "security trigger std"),
        "dwell_mean_units": ("", "mean discretionary dwell, in time units"),
        "post_security_other_prob": ("", "chance of a detour between security and gate"),
        "effect_brand_eating": ("", "brand dummy log-odds on eating"),
        "effect_carrier_shopping": ("", "carrier dummy log-odds on shopping"),
        "effect_destination_other": ("", "destination dummy log-odds on other"),
        "effect_mealtime_eating": ("", "meal-hour log-odds on eating"),
    },
    "ingest": {
        "gap_threshold_units": ("2", "max tolerated hole between stays, in time units"),
        "allow_unmapped_areas": ("false", "map unknown areas to Other instead of failing"),
    },
    "train": {
        "architecture": ("lstm", "what cmd_train builds: fnn|lstm|direct|combined|majority"),
        "master_seed": ("42", "root of the seed lineage (overridden by --seed)"),
        "train_fraction": ("0.7", "share of passengers used for calibration"),
        "fnn_hidden": ("6", "hidden size of each per-unit classifier"),
        "lstm_hidden": ("200", "hidden size of the sequence models"),
        "learning_rate": ("0.01", "SGDM learning rate"),
        "momentum": ("0.9", "SGDM momentum"),
        "batch_size": ("64", "minibatch size"),
        "fnn_epochs": ("30", "epochs per unit classifier"),
        "lstm_epochs": ("60", "epochs per sequence model"),
        "direct_horizons": ("6", "number of fixed-horizon models in the direct set"),
        "sweep_sizes": ("2,4,6,8,12", "hidden sizes tried by the selection sweep"),
    },
    "eval": {
        "critical_lo_minutes": ("30", "lower edge of the critical window"),
        "critical_hi_minutes": ("100", "upper edge of the critical window"),
        "svg": ("false", "also write an SVG chart per report"),
        "prefix_mode": ("observed", "history fed to sequence models: observed|predicted"),
    },
    "io": {
        "out": ("out", "output directory (overridden by --out)"),
        "stays": ("stays.csv", "stay records file"),
        "flights": ("flights.csv", "flight link file"),
        "area_map": ("area_map.csv", "area-to-activity map file"),
        "dataset": ("dataset.csv", "assembled dataset file"),
        "discards": ("discards.csv", "discard log file"),
        "bundles": ("bundles", "model bundle directory"),
        "reports": ("reports", "evaluation report directory"),
        "ablation": ("ablation.csv", "ablation study table"),
        "strategy": ("strategy.csv", "strategy comparison table"),
        "hidden_sweep": ("hidden_sweep.csv", "hidden-size sweep table"),
    },
}

_GENERATOR_FLOAT_KEYS = (
    "earliness_mean", "earliness_std", "arrival_hour_min", "arrival_hour_max",
    "p_short_range", "p_traditional", "p_brand", "security_trigger_mean",
    "security_trigger_std", "dwell_mean_units", "post_security_other_prob",
    "effect_brand_eating", "effect_carrier_shopping", "effect_destination_other",
    "effect_mealtime_eating",
)


class RunConfig:
    def __init__(self, values: dict | None = None, source: str = "<defaults>"):
        self._values = {s: dict((k, d) for k, (d, _) in keys.items())
                        for s, keys in SCHEMA.items()}
        for section, keys in (values or {}).items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, val in keys.items():
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown config key {key!r} in [{section}] "
                                      f"(valid: {', '.join(sorted(SCHEMA[section]))})")
                self._values[section][key] = str(val).strip()
        self.source = source

    # -- typed getters -------------------------------------------------
    def get(self, section, key) -> str:
        return self._values[section][key]

    def get_int(self, section, key) -> int:
        try:
            return int(self.get(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer, "
                              f"got {self.get(section, key)!r}")

    def get_float(self, section, key) -> float:
        try:
            return float(self.get(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a number, "
                              f"got {self.get(section, key)!r}")

    def get_bool(self, section, key) -> bool:
        v = self.get(section, key).lower()
        if v in ("true", "1", "yes", "on"):
            return True
        if v in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key} must be a boolean, got {v!r}")

    def get_int_list(self, section, key) -> list[int]:
        raw = self.get(section, key)
        try:
            return [int(v) for v in raw.split(",") if v.strip() != ""]
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be comma-separated integers")

    def set(self, section, key, value) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        self._values[section][key] = str(value)

    # -- derived objects -----------------------------------------------
    def master_seed(self) -> int:
        return self.get_int("train", "master_seed")

    def generator_params(self) -> GeneratorParams:
        profile = self.get("generator", "profile")
        if profile not in _PROFILES:
            raise ConfigError(f"[generator] profile must be one of "
                              f"{sorted(_PROFILES)}, got {profile!r}")
        params = _PROFILES[profile]()
        overrides = {"n_passengers": self.get_int("generator", "n_passengers")}
        seed_raw = self.get("generator", "seed")
        overrides["seed"] = int(seed_raw) if seed_raw != "" else self.master_seed()
        for key in _GENERATOR_FLOAT_KEYS:
            raw = self.get("generator", key)
            if raw != "":
                overrides[key] = float(raw)
        return dataclasses.replace(params, **overrides)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            fnn_hidden=self.get_int("train", "fnn_hidden"),
            lstm_hidden=self.get_int("train", "lstm_hidden"),
            learning_rate=self.get_float("train", "learning_rate"),
            momentum=self.get_float("train", "momentum"),
            batch_size=self.get_int("train", "batch_size"),
            fnn_epochs=self.get_int("train", "fnn_epochs"),
            lstm_epochs=self.get_int("train", "lstm_epochs"),
            direct_horizons=self.get_int("train", "direct_horizons"),
        )

    def path(self, key: str, out_override: str | None = None) -> str:
        """Resolve an [io] path; relative entries live under the out dir."""
        out = out_override or self.get("io", "out")
        raw = self.get("io", key)
        return raw if os.path.isabs(raw) else os.path.join(out, raw)

    # -- echo / hashing --------------------------------------------------
    def echo(self) -> dict[str, str]:
        """Flattened effective configuration, ``section.key -> value``.

        [io] is excluded: file locations do not influence results, and
        leaving them out keeps outputs byte-identical across output
        directories.
        """
        flat = {}
        for section in sorted(self._values):
            if section == "io":
                continue
            for key in sorted(self._values[section]):
                flat[f"{section}.{key}"] = self._values[section][key]
        return flat

    def content_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in self.echo().items())
        return hashlib.sha256(text.encode()).hexdigest()


def config_help_text() -> str:
    lines = ["configuration keys (defaults in parentheses):"]
    for section in SCHEMA:
        lines.append(f"  [{section}]")
        for key, (default, doc) in SCHEMA[section].items():
            shown = default if default != "" else "<profile default>"
            lines.append(f"    {key} ({shown}): {doc}")
    return "\n".join(lines)


def load_config(path) -> RunConfig:
    parser = configparser.RawConfigParser(comment_prefixes=("#",),
                                          inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}")
    values = {s: dict(parser.items(s)) for s in parser.sections()}
    return RunConfig(values, source=str(path))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
