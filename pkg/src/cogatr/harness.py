"""Experiment harness: dataset generation, training, and Monte Carlo sweeps.

Every trial is fully determined by the master seed plus its (class, index)
tag, so sweeps are reproducible byte-for-byte regardless of worker count,
and the same trial draws pair up across variants and sweep points.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .classifier import TemplateBank, train
from .cognition import (
    CognitivePolicy,
    ProcessingVariant,
    TrialOutcome,
    run_fixed_trial,
    run_trial,
)
from .dsp import Domain, features_from_kspace
from .errors import ConfigError
from .scene import (
    CLASSES,
    DatasetRecord,
    Geometry,
    RadarBand,
    TargetModel,
    dataset_to_lines,
    make_target,
    read_dataset,
    synthesize_kspace,
)

VARIANTS = (
    ProcessingVariant.TIME_ONLY,
    ProcessingVariant.TIME_FREQ_SIMULTANEOUS,
    ProcessingVariant.TIME_THEN_FREQ,
)

CSV_HEADER = (
    "variant,delta_theta_deg,snr_db,pcc_percent,"
    "unclassified_percent,median_perspectives,trials"
)

# Test start azimuths must stay at least this far from any training azimuth.
MIN_TEST_AZIMUTH_OFFSET_DEG = 0.1

# Seed-stream tags keeping independent random purposes apart.
_AZIMUTH_STREAM = 11
_NOISE_STREAM = 12


@dataclass(frozen=True)
class PolicyDefaults:
    delta_theta_deg: float = 3.6
    max_perspectives: int = 10
    # None picks the per-variant default (2 for TIME_ONLY, else 1).
    profiles_per_perspective: int | None = None
    majority_fraction: float = 0.5
    variant: ProcessingVariant = ProcessingVariant.TIME_FREQ_SIMULTANEOUS


@dataclass(frozen=True)
class ExperimentConfig:
    band: RadarBand = RadarBand(1.0e9, 5.0e8, 64)
    elevations_deg: tuple[float, ...] = (11.7,)
    beta_deg: float = 30.0
    classes: tuple[str, ...] = CLASSES
    train_azimuth_step_deg: float = 2.5
    test_trials_per_class: int = 1000
    snr_db: float = 10.0  # evaluation SNR for the delta-theta sweep
    snr_grid_db: tuple[float, ...] = (-20.0, -10.0, 0.0, 10.0, 20.0, 30.0, math.inf)
    delta_theta_grid_deg: tuple[float, ...] = (0.0, 0.9, 1.8, 3.6, 5.0, 7.2, 10.0)
    baseline_delta_theta_deg: float = 5.0
    policy: PolicyDefaults = PolicyDefaults()
    master_seed: int = 4242

    def validate(self) -> None:
        if self.classes != CLASSES:
            raise ConfigError("experiment.classes: the four class labels are fixed")
        if not self.elevations_deg:
            raise ConfigError("experiment.elevations_deg: must be non-empty")
        for e in self.elevations_deg:
            if not 10.0 <= e <= 15.0:
                raise ConfigError(
                    f"experiment.elevations_deg: {e} outside [10, 15]"
                )
        if not 0.0 <= self.beta_deg < 60.0:
            raise ConfigError(f"experiment.beta_deg: {self.beta_deg} outside [0, 60)")
        step = self.train_azimuth_step_deg
        if step <= 0:
            raise ConfigError("experiment.train_azimuth_step_deg: must be positive")
        ratio = 360.0 / step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError(
                f"experiment.train_azimuth_step_deg: {step} does not divide 360 evenly"
            )
        from .classifier import SECTOR_WIDTH_DEG

        if SECTOR_WIDTH_DEG / step < 2.0 - 1e-9:
            raise ConfigError(
                "experiment.train_azimuth_step_deg: "
                f"{step} leaves fewer than 2 training samples per sector"
            )
        if self.test_trials_per_class < 1:
            raise ConfigError("experiment.test_trials_per_class: must be >= 1")
        if not self.snr_grid_db:
            raise ConfigError("experiment.snr_grid_db: must be non-empty")
        if not self.delta_theta_grid_deg:
            raise ConfigError("experiment.delta_theta_grid_deg: must be non-empty")
        if any(d < 0 for d in self.delta_theta_grid_deg):
            raise ConfigError("experiment.delta_theta_grid_deg: entries must be >= 0")

    def train_azimuths(self) -> np.ndarray:
        n = int(round(360.0 / self.train_azimuth_step_deg))
        return self.train_azimuth_step_deg * np.arange(n)


@dataclass(frozen=True)
class SweepRow:
    variant: str
    delta_theta_deg: float
    snr_db: float
    pcc_percent: float
    unclassified_percent: float
    median_perspectives: float
    trials: int

    @property
    def misclassified_percent(self) -> float:
        return 100.0 - self.pcc_percent - self.unclassified_percent


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def rows_to_csv_text(rows: Sequence[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.variant,
                    _fmt(r.delta_theta_deg),
                    _fmt(r.snr_db),
                    _fmt(r.pcc_percent),
                    _fmt(r.unclassified_percent),
                    _fmt(r.median_perspectives),
                    str(r.trials),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file and rename, so failures leave no partial file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    atomic_write_text(path, rows_to_csv_text(rows))


# ---------------------------------------------------------------------------
# Dataset generation and training
# ---------------------------------------------------------------------------


def build_targets(cfg: ExperimentConfig) -> dict[str, TargetModel]:
    return {label: make_target(label, cfg.master_seed) for label in CLASSES}


def training_records(cfg: ExperimentConfig) -> Iterator[DatasetRecord]:
    """Noiseless looks on the training grid: class, then elevation, then azimuth."""
    targets = build_targets(cfg)
    azimuths = cfg.train_azimuths()
    for label in CLASSES:
        target = targets[label]
        for elev in cfg.elevations_deg:
            for az in azimuths:
                geom = Geometry(
                    tx_azimuth_deg=float(az),
                    bistatic_angle_deg=cfg.beta_deg,
                    elevation_deg=elev,
                )
                yield DatasetRecord(
                    class_label=label,
                    target_seed=cfg.master_seed,
                    geometry=geom,
                    snr_db=math.inf,
                    kspace=synthesize_kspace(target, geom, cfg.band),
                )


def generate_dataset(cfg: ExperimentConfig, path: str | Path) -> int:
    """Write the training dataset file; returns the number of records."""
    cfg.validate()
    records = list(training_records(cfg))
    atomic_write_text(
        path, "\n".join(dataset_to_lines(cfg.band, records)) + "\n"
    )
    return len(records)


BanksByElevation = dict[float, dict[Domain, TemplateBank]]


def train_banks_from_records(
    band: RadarBand, records: Sequence[DatasetRecord]
) -> BanksByElevation:
    """One (RANGE, FREQUENCY) bank pair per elevation present in the records."""
    by_elevation: dict[float, list[DatasetRecord]] = {}
    for rec in records:
        by_elevation.setdefault(rec.geometry.elevation_deg, []).append(rec)
    banks: BanksByElevation = {}
    for elev, recs in sorted(by_elevation.items()):
        banks[elev] = {}
        for domain in (Domain.RANGE, Domain.FREQUENCY):
            samples = [
                (
                    features_from_kspace(rec.kspace, domain),
                    rec.class_label,
                    rec.geometry.tx_azimuth_deg,
                )
                for rec in recs
            ]
            banks[elev][domain] = train(samples, band=band)
    return banks


def train_banks(cfg: ExperimentConfig) -> BanksByElevation:
    cfg.validate()
    return train_banks_from_records(cfg.band, list(training_records(cfg)))


def train_banks_from_file(path: str | Path) -> tuple[RadarBand, BanksByElevation]:
    band, records = read_dataset(path)
    return band, train_banks_from_records(band, records)


# ---------------------------------------------------------------------------
# Trial scheduling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialSpec:
    class_label: str
    start_azimuth_deg: float
    elevation_deg: float
    noise_entropy: tuple[int, ...]


@dataclass(frozen=True)
class PointSpec:
    """One sweep point: the policy, the SNR, and optional fixed-length mode."""

    policy: CognitivePolicy
    snr_db: float
    fixed_perspectives: int | None = None


@dataclass(frozen=True)
class TrialContext:
    band: RadarBand
    beta_deg: float
    target_seed: int
    banks_by_elevation: BanksByElevation


def make_policy(
    cfg: ExperimentConfig,
    variant: ProcessingVariant,
    delta_theta_deg: float | None = None,
    max_perspectives: int | None = None,
) -> CognitivePolicy:
    n = cfg.policy.profiles_per_perspective
    if n is None:
        n = variant.default_profiles_per_perspective()
    return CognitivePolicy(
        delta_theta_deg=(
            cfg.policy.delta_theta_deg if delta_theta_deg is None else delta_theta_deg
        ),
        variant=variant,
        max_perspectives=(
            cfg.policy.max_perspectives if max_perspectives is None else max_perspectives
        ),
        profiles_per_perspective=n,
        majority_fraction=cfg.policy.majority_fraction,
    )


def draw_test_azimuth(rng: np.random.Generator, train_step_deg: float) -> float:
    """Uniform start azimuth kept clear of every training grid azimuth."""
    for _ in range(1000):
        az = float(rng.uniform(0.0, 360.0))
        within = az % train_step_deg
        if min(within, train_step_deg - within) >= MIN_TEST_AZIMUTH_OFFSET_DEG:
            return az
    raise RuntimeError("failed to draw a test azimuth clear of the training grid")


def trial_specs(cfg: ExperimentConfig) -> list[TrialSpec]:
    specs = []
    for ci, label in enumerate(CLASSES):
        for t in range(cfg.test_trials_per_class):
            rng = np.random.default_rng([cfg.master_seed, _AZIMUTH_STREAM, ci, t])
            specs.append(
                TrialSpec(
                    class_label=label,
                    start_azimuth_deg=draw_test_azimuth(rng, cfg.train_azimuth_step_deg),
                    elevation_deg=cfg.elevations_deg[t % len(cfg.elevations_deg)],
                    noise_entropy=(cfg.master_seed, _NOISE_STREAM, ci, t),
                )
            )
    return specs


def build_context(cfg: ExperimentConfig, banks: BanksByElevation | None = None) -> TrialContext:
    cfg.validate()
    return TrialContext(
        band=cfg.band,
        beta_deg=cfg.beta_deg,
        target_seed=cfg.master_seed,
        banks_by_elevation=banks if banks is not None else train_banks(cfg),
    )


# Worker-side state: the context is shipped once per worker, targets are
# regenerated on demand from (label, seed) instead of being pickled.
_CTX: TrialContext | None = None
_TARGET_CACHE: dict[str, TargetModel] = {}


def _init_worker(ctx: TrialContext) -> None:
    global _CTX
    _CTX = ctx
    _TARGET_CACHE.clear()


def _get_target(label: str) -> TargetModel:
    target = _TARGET_CACHE.get(label)
    if target is None:
        target = make_target(label, _CTX.target_seed)
        _TARGET_CACHE[label] = target
    return target


def _run_task(task: tuple[PointSpec, TrialSpec]) -> TrialOutcome:
    point, spec = task
    geom = Geometry(
        tx_azimuth_deg=spec.start_azimuth_deg,
        bistatic_angle_deg=_CTX.beta_deg,
        elevation_deg=spec.elevation_deg,
    )
    banks = _CTX.banks_by_elevation[spec.elevation_deg]
    target = _get_target(spec.class_label)
    if point.fixed_perspectives is not None:
        return run_fixed_trial(
            target,
            geom,
            _CTX.band,
            banks,
            point.policy,
            point.snr_db,
            spec.noise_entropy,
            point.fixed_perspectives,
        )
    return run_trial(
        target, geom, _CTX.band, banks, point.policy, point.snr_db, spec.noise_entropy
    )


def resolve_workers(requested: int | None, num_tasks: int) -> int:
    cap = os.environ.get("COGATR_THREADS")
    workers = requested if requested is not None else (os.cpu_count() or 1)
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError:
            raise ConfigError(f"COGATR_THREADS: {cap!r} is not a positive integer")
        if cap_val < 1:
            raise ConfigError(f"COGATR_THREADS: {cap!r} is not a positive integer")
        workers = min(workers, cap_val)
    return max(1, min(workers, num_tasks))


def run_tasks(
    ctx: TrialContext,
    tasks: Sequence[tuple[PointSpec, TrialSpec]],
    workers: int | None = None,
) -> list[TrialOutcome]:
    """Run trials serially or on a process pool; output order == task order."""
    n_workers = resolve_workers(workers, len(tasks))
    if n_workers <= 1:
        _init_worker(ctx)
        return [_run_task(t) for t in tasks]
    chunksize = max(1, len(tasks) // (n_workers * 8))
    with ProcessPoolExecutor(
        max_workers=n_workers, initializer=_init_worker, initargs=(ctx,)
    ) as pool:
        return list(pool.map(_run_task, tasks, chunksize=chunksize))


def aggregate(
    outcomes: Sequence[TrialOutcome],
    variant: ProcessingVariant,
    delta_theta_deg: float,
    snr_db: float,
) -> SweepRow:
    n = len(outcomes)
    return SweepRow(
        variant=variant.value,
        delta_theta_deg=delta_theta_deg,
        snr_db=snr_db,
        pcc_percent=100.0 * sum(o.correct for o in outcomes) / n,
        unclassified_percent=100.0 * sum(o.declared_class is None for o in outcomes) / n,
        median_perspectives=float(np.median([o.perspectives_used for o in outcomes])),
        trials=n,
    )


def _run_points(
    ctx: TrialContext,
    points: Sequence[PointSpec],
    specs: Sequence[TrialSpec],
    workers: int | None,
) -> list[list[TrialOutcome]]:
    tasks = [(point, spec) for point in points for spec in specs]
    flat = run_tasks(ctx, tasks, workers)
    per_point = len(specs)
    return [flat[i * per_point : (i + 1) * per_point] for i in range(len(points))]


# ---------------------------------------------------------------------------
# The sweep studies
# ---------------------------------------------------------------------------


def run_sweep_dtheta(
    cfg: ExperimentConfig,
    workers: int | None = None,
    banks: BanksByElevation | None = None,
) -> list[SweepRow]:
    """Accuracy vs azimuth step, one row per (variant, delta-theta)."""
    ctx = build_context(cfg, banks)
    specs = trial_specs(cfg)
    points = [
        PointSpec(policy=make_policy(cfg, variant, delta_theta_deg=d), snr_db=cfg.snr_db)
        for variant in VARIANTS
        for d in cfg.delta_theta_grid_deg
    ]
    grouped = _run_points(ctx, points, specs, workers)
    return [
        aggregate(outcomes, p.policy.variant, p.policy.delta_theta_deg, p.snr_db)
        for p, outcomes in zip(points, grouped)
    ]


def run_sweep_snr(
    cfg: ExperimentConfig,
    workers: int | None = None,
    banks: BanksByElevation | None = None,
) -> list[SweepRow]:
    """Accuracy vs SNR at the policy azimuth step, all three variants."""
    ctx = build_context(cfg, banks)
    specs = trial_specs(cfg)
    points = [
        PointSpec(policy=make_policy(cfg, variant), snr_db=snr)
        for variant in VARIANTS
        for snr in cfg.snr_grid_db
    ]
    grouped = _run_points(ctx, points, specs, workers)
    return [
        aggregate(outcomes, p.policy.variant, p.policy.delta_theta_deg, p.snr_db)
        for p, outcomes in zip(points, grouped)
    ]


def fixed_two_perspective_baseline(
    cfg: ExperimentConfig,
    delta_theta_deg: float,
    workers: int | None = None,
    banks: BanksByElevation | None = None,
) -> SweepRow:
    """Always fuse exactly two perspectives, no confidence gating."""
    ctx = build_context(cfg, banks)
    specs = trial_specs(cfg)
    point = PointSpec(
        policy=make_policy(cfg, cfg.policy.variant, delta_theta_deg=delta_theta_deg),
        snr_db=cfg.snr_db,
        fixed_perspectives=2,
    )
    outcomes = run_tasks(ctx, [(point, s) for s in specs], workers)
    return aggregate(outcomes, point.policy.variant, delta_theta_deg, point.snr_db)


def evaluate_point(
    cfg: ExperimentConfig,
    workers: int | None = None,
    banks: BanksByElevation | None = None,
) -> SweepRow:
    """Single sweep point at the configured policy defaults and SNR."""
    ctx = build_context(cfg, banks)
    specs = trial_specs(cfg)
    point = PointSpec(policy=make_policy(cfg, cfg.policy.variant), snr_db=cfg.snr_db)
    outcomes = run_tasks(ctx, [(point, s) for s in specs], workers)
    return aggregate(
        outcomes, point.policy.variant, point.policy.delta_theta_deg, point.snr_db
    )
