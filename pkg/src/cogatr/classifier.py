"""Sectored naive-Gaussian decision maker.

Each class is represented by 25 azimuth-sector mean templates per domain;
all classes and sectors share one pooled diagonal covariance, so scoring
reduces to a variance-weighted nearest-template search. Aspect is unknown
at test time, hence the max over sectors inside each class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dsp import Domain, FeatureVector
from .errors import DimensionMismatch, EmptyCell, MixedDomain
from .scene import CLASSES, RadarBand

NUM_SECTORS = 25
SECTOR_WIDTH_DEG = 360.0 / NUM_SECTORS  # 14.4
VARIANCE_FLOOR = 1e-12

BANK_FORMAT = "cogatr-bank-v1"


def sector_of(azimuth_deg: float) -> int:
    """Azimuth sector index in [0, 25); left-closed 14.4 degree bins."""
    az = azimuth_deg % 360.0
    return min(int(az / SECTOR_WIDTH_DEG), NUM_SECTORS - 1)


@dataclass(frozen=True, eq=False)
class TemplateBank:
    domain: Domain
    means: np.ndarray  # (num classes, NUM_SECTORS, N_f)
    shared_variance: np.ndarray  # (N_f,)
    training_counts: np.ndarray  # (num classes, NUM_SECTORS) int
    band: RadarBand | None = None

    @property
    def feature_length(self) -> int:
        return self.means.shape[-1]

    def mean_for(self, class_label: str, sector: int) -> np.ndarray:
        return self.means[CLASSES.index(class_label), sector]


@dataclass(frozen=True)
class ClassScores:
    per_class_log_likelihood: dict[str, float]
    best_class: str
    best_sector: int


def train(
    samples: Iterable[tuple[FeatureVector, str, float]],
    band: RadarBand | None = None,
    variance_floor: float = VARIANCE_FLOOR,
) -> TemplateBank:
    """Fit per-cell means and the pooled shared diagonal variance.

    samples: (feature, class_label, true_azimuth_deg) triples. Every
    (class, sector) cell must receive at least one sample.
    """
    samples = list(samples)
    if not samples:
        raise EmptyCell([(c, s) for c in CLASSES for s in range(NUM_SECTORS)])

    domain = samples[0][0].domain
    n_f = samples[0][0].values.size
    cells: dict[tuple[int, int], list[np.ndarray]] = {}
    for feature, class_label, azimuth_deg in samples:
        if feature.domain is not domain:
            raise MixedDomain(
                f"got {feature.domain.value} feature in a {domain.value} batch"
            )
        if feature.values.size != n_f:
            raise DimensionMismatch(
                f"feature length {feature.values.size}, expected {n_f}"
            )
        key = (CLASSES.index(class_label), sector_of(azimuth_deg))
        cells.setdefault(key, []).append(feature.values)

    missing = [
        (CLASSES[c], s)
        for c in range(len(CLASSES))
        for s in range(NUM_SECTORS)
        if (c, s) not in cells
    ]
    if missing:
        raise EmptyCell(missing)

    means = np.zeros((len(CLASSES), NUM_SECTORS, n_f))
    counts = np.zeros((len(CLASSES), NUM_SECTORS), dtype=int)
    residual_sq = np.zeros(n_f)
    for (c, s), members in cells.items():
        stack = np.array(members)
        counts[c, s] = stack.shape[0]
        means[c, s] = stack.mean(axis=0)
        residual_sq += ((stack - means[c, s]) ** 2).sum(axis=0)

    dof = int(counts.sum()) - len(cells)
    if dof > 0:
        variance = residual_sq / dof
    else:
        variance = np.zeros(n_f)
    variance = np.maximum(variance, variance_floor)

    return TemplateBank(
        domain=domain,
        means=means,
        shared_variance=variance,
        training_counts=counts,
        band=band,
    )


def cell_distances(bank: TemplateBank, values: np.ndarray) -> np.ndarray:
    """Variance-weighted squared distance to every (class, sector) template."""
    diff = values[None, None, :] - bank.means
    return (diff**2 / bank.shared_variance).sum(axis=-1)


def score(bank: TemplateBank, feature: FeatureVector) -> ClassScores:
    """Log-likelihood per class (constants dropped) and the winning cell.

    Shared covariance makes the class log-likelihood -d^2/2 of the nearest
    sector template; ties resolve in fixed class order.
    """
    if feature.domain is not bank.domain:
        raise DimensionMismatch(
            f"feature domain {feature.domain.value} does not match "
            f"bank domain {bank.domain.value}"
        )
    if feature.values.size != bank.feature_length:
        raise DimensionMismatch(
            f"feature length {feature.values.size}, bank expects {bank.feature_length}"
        )
    d2 = cell_distances(bank, feature.values)  # (classes, sectors)
    per_class_min = d2.min(axis=1)
    log_likelihood = -0.5 * per_class_min
    best_idx = int(np.argmax(log_likelihood))  # first max: canonical class order
    return ClassScores(
        per_class_log_likelihood={
            c: float(log_likelihood[i]) for i, c in enumerate(CLASSES)
        },
        best_class=CLASSES[best_idx],
        best_sector=int(np.argmin(d2[best_idx])),
    )


# ---------------------------------------------------------------------------
# Bank persistence ("cogatr-bank-v1", decimal text, round-trip bit-stable)
# ---------------------------------------------------------------------------


def bank_to_json(bank: TemplateBank) -> str:
    payload: dict = {
        "format": BANK_FORMAT,
        "domain": bank.domain.value,
        "n_f": bank.feature_length,
        "means": {
            f"{c}/{s}": [float(v) for v in bank.means[ci, s]]
            for ci, c in enumerate(CLASSES)
            for s in range(NUM_SECTORS)
        },
        "shared_variance": [float(v) for v in bank.shared_variance],
        "training_counts": {
            f"{c}/{s}": int(bank.training_counts[ci, s])
            for ci, c in enumerate(CLASSES)
            for s in range(NUM_SECTORS)
        },
    }
    if bank.band is not None:
        payload["band"] = {
            "center_frequency_hz": bank.band.center_frequency_hz,
            "bandwidth_hz": bank.band.bandwidth_hz,
            "num_frequency_samples": bank.band.num_frequency_samples,
        }
    return json.dumps(payload)


def bank_from_json(text: str) -> TemplateBank:
    payload = json.loads(text)
    if payload.get("format") != BANK_FORMAT:
        raise ValueError(f"unsupported bank format {payload.get('format')!r}")
    n_f = payload["n_f"]
    means = np.zeros((len(CLASSES), NUM_SECTORS, n_f))
    counts = np.zeros((len(CLASSES), NUM_SECTORS), dtype=int)
    for ci, c in enumerate(CLASSES):
        for s in range(NUM_SECTORS):
            means[ci, s] = payload["means"][f"{c}/{s}"]
            counts[ci, s] = payload["training_counts"][f"{c}/{s}"]
    band = None
    if "band" in payload:
        band = RadarBand(**payload["band"])
    return TemplateBank(
        domain=Domain(payload["domain"]),
        means=means,
        shared_variance=np.array(payload["shared_variance"]),
        training_counts=counts,
        band=band,
    )


def save_bank(bank: TemplateBank, path: str | Path) -> None:
    Path(path).write_text(bank_to_json(bank) + "\n")


def load_bank(path: str | Path) -> TemplateBank:
    return bank_from_json(Path(path).read_text())
