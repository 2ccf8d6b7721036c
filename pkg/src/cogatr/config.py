"""Experiment config files: flat INI-style sections of key=value pairs.

Sections and keys mirror the ExperimentConfig fields; every key is
optional and falls back to the built-in default. Values set on the
command line with --set section.key=value are applied after file load.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path
from typing import Callable, Sequence

from .cognition import ProcessingVariant
from .errors import ConfigError
from .harness import ExperimentConfig, PolicyDefaults
from .scene import RadarBand


def _parse_float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_parse_float(t) for t in items)


def _parse_variant(text: str) -> ProcessingVariant:
    try:
        return ProcessingVariant(text.strip().upper())
    except ValueError:
        names = ", ".join(v.value for v in ProcessingVariant)
        raise ValueError(f"expected one of: {names}")


def _parse_optional_int(text: str) -> int | None:
    if text.strip().lower() in ("auto", "none", ""):
        return None
    return _parse_int(text)


# section -> key -> value parser
SCHEMA: dict[str, dict[str, Callable]] = {
    "band": {
        "center_frequency_hz": _parse_float,
        "bandwidth_hz": _parse_float,
        "num_frequency_samples": _parse_int,
    },
    "experiment": {
        "elevations_deg": _parse_float_list,
        "beta_deg": _parse_float,
        "train_azimuth_step_deg": _parse_float,
        "test_trials_per_class": _parse_int,
        "snr_db": _parse_float,
        "snr_grid_db": _parse_float_list,
        "delta_theta_grid_deg": _parse_float_list,
        "baseline_delta_theta_deg": _parse_float,
        "master_seed": _parse_int,
    },
    "policy": {
        "delta_theta_deg": _parse_float,
        "max_perspectives": _parse_int,
        "profiles_per_perspective": _parse_optional_int,
        "majority_fraction": _parse_float,
        "variant": _parse_variant,
    },
}


def is_known_key(dotted: str) -> bool:
    section, _, key = dotted.partition(".")
    return section in SCHEMA and key in SCHEMA[section]


def parse_override(item: str) -> tuple[str, str]:
    """Split one --set item into (section.key, raw value)."""
    key, sep, value = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    if not is_known_key(key):
        raise ConfigError(f"unknown config key {key!r}")
    return key, value.strip()


def _read_file(path: str | Path) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    except configparser.Error as e:
        raise ConfigError(f"malformed config file {path}: {e}")

    values: dict[str, str] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key} in {path}")
            values[f"{section}.{key}"] = raw
    return values


def build_config(values: dict[str, str]) -> ExperimentConfig:
    parsed: dict[str, object] = {}
    for dotted, raw in values.items():
        section, _, key = dotted.partition(".")
        try:
            parsed[dotted] = SCHEMA[section][key](raw)
        except ValueError as e:
            raise ConfigError(f"config key {dotted}: bad value {raw!r} ({e})")

    def get(dotted: str, default):
        return parsed.get(dotted, default)

    band_defaults = ExperimentConfig().band
    try:
        band = RadarBand(
            center_frequency_hz=get(
                "band.center_frequency_hz", band_defaults.center_frequency_hz
            ),
            bandwidth_hz=get("band.bandwidth_hz", band_defaults.bandwidth_hz),
            num_frequency_samples=get(
                "band.num_frequency_samples", band_defaults.num_frequency_samples
            ),
        )
    except ValueError as e:
        raise ConfigError(f"config section [band]: {e}")

    pol_defaults = PolicyDefaults()
    policy = PolicyDefaults(
        delta_theta_deg=get("policy.delta_theta_deg", pol_defaults.delta_theta_deg),
        max_perspectives=get("policy.max_perspectives", pol_defaults.max_perspectives),
        profiles_per_perspective=get(
            "policy.profiles_per_perspective", pol_defaults.profiles_per_perspective
        ),
        majority_fraction=get(
            "policy.majority_fraction", pol_defaults.majority_fraction
        ),
        variant=get("policy.variant", pol_defaults.variant),
    )

    exp_defaults = ExperimentConfig()
    cfg = ExperimentConfig(
        band=band,
        elevations_deg=get("experiment.elevations_deg", exp_defaults.elevations_deg),
        beta_deg=get("experiment.beta_deg", exp_defaults.beta_deg),
        train_azimuth_step_deg=get(
            "experiment.train_azimuth_step_deg", exp_defaults.train_azimuth_step_deg
        ),
        test_trials_per_class=get(
            "experiment.test_trials_per_class", exp_defaults.test_trials_per_class
        ),
        snr_db=get("experiment.snr_db", exp_defaults.snr_db),
        snr_grid_db=get("experiment.snr_grid_db", exp_defaults.snr_grid_db),
        delta_theta_grid_deg=get(
            "experiment.delta_theta_grid_deg", exp_defaults.delta_theta_grid_deg
        ),
        baseline_delta_theta_deg=get(
            "experiment.baseline_delta_theta_deg", exp_defaults.baseline_delta_theta_deg
        ),
        policy=policy,
        master_seed=get("experiment.master_seed", exp_defaults.master_seed),
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    values = _read_file(path)
    for item in overrides:
        key, raw = parse_override(item)
        values[key] = raw
    return build_config(values)
