"""Surrogate scene model: targets, bistatic geometry, and k-space synthesis.

Targets are class-parameterized clouds of point scatterers with Gaussian
angular directivity, regenerated bit-identically from (class_label, seed).
A look is a frequency sweep of the far-field scattered return for one
transmitter/receiver geometry, optionally perturbed by circular complex
Gaussian receiver noise at a requested per-sample SNR.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegenerateSignal, GeometryError

SPEED_OF_LIGHT_M_S = 299_792_458.0

CLASSES = ("APC", "MBT", "MSL", "STR")

DATASET_FORMAT = "cogatr-ds-v1"

SeedLike = int | Sequence[int]


@dataclass(frozen=True)
class RadarBand:
    """A stepped-frequency sweep: uniform grid of num_frequency_samples
    frequencies with spacing bandwidth/num covering the band around center."""

    center_frequency_hz: float
    bandwidth_hz: float
    num_frequency_samples: int

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.center_frequency_hz <= self.bandwidth_hz / 2:
            raise ValueError("center frequency must exceed half the bandwidth")
        if self.num_frequency_samples < 2:
            raise ValueError("need at least 2 frequency samples")

    def frequencies(self) -> np.ndarray:
        step = self.bandwidth_hz / self.num_frequency_samples
        start = self.center_frequency_hz - self.bandwidth_hz / 2.0
        return start + step * np.arange(self.num_frequency_samples)

    @property
    def range_bin_spacing_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / (2.0 * self.bandwidth_hz)


@dataclass(frozen=True)
class Geometry:
    """One bistatic acquisition geometry.

    The receiver trails the transmitter in azimuth by the bistatic angle;
    both sit at the same elevation. Azimuths are normalized to [0, 360).
    """

    tx_azimuth_deg: float
    bistatic_angle_deg: float
    elevation_deg: float

    def __post_init__(self):
        if not 0.0 <= self.bistatic_angle_deg < 60.0:
            raise GeometryError(
                f"bistatic angle {self.bistatic_angle_deg} deg out of range [0, 60)"
            )
        if not 10.0 <= self.elevation_deg <= 15.0:
            raise GeometryError(
                f"elevation {self.elevation_deg} deg out of range [10, 15]"
            )
        object.__setattr__(self, "tx_azimuth_deg", self.tx_azimuth_deg % 360.0)

    @property
    def rx_azimuth_deg(self) -> float:
        return (self.tx_azimuth_deg + self.bistatic_angle_deg) % 360.0

    @property
    def bisector_azimuth_deg(self) -> float:
        return (self.tx_azimuth_deg + self.bistatic_angle_deg / 2.0) % 360.0

    def advanced(self, delta_azimuth_deg: float) -> "Geometry":
        return Geometry(
            tx_azimuth_deg=(self.tx_azimuth_deg + delta_azimuth_deg) % 360.0,
            bistatic_angle_deg=self.bistatic_angle_deg,
            elevation_deg=self.elevation_deg,
        )


@dataclass(frozen=True, eq=False)
class Scatterer:
    """A point scatterer with a Gaussian directivity pattern in azimuth."""

    position_m: np.ndarray  # (3,) x, y, z
    base_amplitude: float
    directivity_center_deg: float
    directivity_width_deg: float

    def __post_init__(self):
        if self.base_amplitude < 0:
            raise ValueError("base_amplitude must be nonnegative")
        if self.directivity_width_deg <= 0:
            raise ValueError("directivity_width_deg must be positive")


@dataclass(frozen=True, eq=False)
class TargetModel:
    """A class-labeled scatterer layout, regenerable from (class_label, seed)."""

    class_label: str
    scatterers: tuple[Scatterer, ...]
    seed: int

    def __post_init__(self):
        if not self.scatterers:
            raise ValueError("scatterer list must be non-empty")

    @cached_property
    def _positions(self) -> np.ndarray:
        return np.array([s.position_m for s in self.scatterers])

    @cached_property
    def _amplitudes(self) -> np.ndarray:
        return np.array([s.base_amplitude for s in self.scatterers])

    @cached_property
    def _centers_deg(self) -> np.ndarray:
        return np.array([s.directivity_center_deg for s in self.scatterers])

    @cached_property
    def _widths_deg(self) -> np.ndarray:
        return np.array([s.directivity_width_deg for s in self.scatterers])


@dataclass(frozen=True, eq=False)
class Look:
    """One acquisition: geometry plus the (possibly noisy) k-space sweep."""

    geometry: Geometry
    kspace: np.ndarray
    snr_db: float


@dataclass(frozen=True)
class _ClassProfile:
    count_range: tuple[int, int]  # inclusive, total scatterers incl. pair members
    box_m: tuple[float, float, float]  # full extents, centered at origin
    amplitude_range: tuple[float, float]
    width_range_deg: tuple[float, float]
    num_vertical_pairs: int
    pair_spacing_m: tuple[float, float]  # vertical separation range of a pair
    num_persistent: int  # lone wide-directivity scatterers near the box ends
    num_glints: int  # very narrow flashes; variance generators, faint in means


# Layout recipes. Separability comes from shape (extent, count, directivity,
# vertical structure), not absolute amplitude, because features are
# normalized downstream. Vertical pairs share (x, y), so their interference
# ripple across the sweep depends only on elevation and survives azimuth
# averaging; the class-specific spacing sets the ripple rate. APC carries
# persistent edge scatterers instead of pairs and the longest hull: its
# templates are the flattest in frequency and leak the most energy into the
# empty middle ranges, so pure-noise returns resolve to one consistent class
# instead of deadlocking the vote. Glints flash in and out within a sector,
# feeding the shared variance while leaving the mean templates almost alone.
_CLASS_PROFILES = {
    "APC": _ClassProfile((12, 16), (12.0, 3.0, 2.6), (0.5, 1.5), (8.0, 22.0), 0, (0.0, 0.0), 3, 2),
    "MBT": _ClassProfile((18, 24), (9.5, 3.5, 3.2), (0.5, 1.5), (15.0, 50.0), 2, (1.1, 1.4), 0, 2),
    "MSL": _ClassProfile((14, 18), (7.5, 3.2, 3.8), (0.3, 1.8), (20.0, 70.0), 2, (2.0, 2.4), 0, 2),
    "STR": _ClassProfile((8, 12), (5.0, 2.2, 3.4), (0.8, 1.2), (30.0, 90.0), 2, (2.9, 3.3), 0, 2),
}

# Hard cap on every class bounding box (vehicle scale).
MAX_BOX_M = (12.0, 4.0, 4.0)


def class_box_m(class_label: str) -> tuple[float, float, float]:
    return _CLASS_PROFILES[class_label].box_m


def wrap_angle_deg(delta_deg):
    """Wrap an angle difference into [-180, 180)."""
    return (delta_deg + 180.0) % 360.0 - 180.0


def los_unit_vector(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Unit vector from the scene origin toward a platform at (az, el)."""
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    return np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )


def make_target(class_label: str, seed: int) -> TargetModel:
    """Generate the deterministic scatterer layout for one target instance.

    The stream is keyed by (class index, seed), so equal inputs regenerate
    bit-identical layouts and different classes never share a layout.
    Layouts mix near-isotropic vertical pairs (stable spectral ripple) with
    directive random scatterers (aspect-dependent clutter of the class).
    """
    if class_label not in _CLASS_PROFILES:
        raise ValueError(f"unknown class label {class_label!r}")
    profile = _CLASS_PROFILES[class_label]
    rng = np.random.default_rng([CLASSES.index(class_label), int(seed)])

    lo, hi = profile.count_range
    count = int(rng.integers(lo, hi + 1))
    half = np.array(profile.box_m) / 2.0
    scatterers: list[Scatterer] = []

    for _ in range(profile.num_vertical_pairs):
        spacing = float(rng.uniform(*profile.pair_spacing_m))
        x, y = rng.uniform(-half[:2] * 0.8, half[:2] * 0.8)
        z_slack = half[2] - spacing / 2.0
        z0 = float(rng.uniform(-z_slack, z_slack)) if z_slack > 0 else 0.0
        for dz in (-spacing / 2.0, spacing / 2.0):
            scatterers.append(
                Scatterer(
                    position_m=np.array([x, y, z0 + dz]),
                    base_amplitude=float(rng.uniform(1.0, 1.6)),
                    directivity_center_deg=float(rng.uniform(0.0, 360.0)),
                    directivity_width_deg=float(rng.uniform(140.0, 240.0)),
                )
            )

    for i in range(profile.num_persistent):
        pos = rng.uniform(-half * 0.6, half * 0.6)
        pos[0] = (1 if i % 2 == 0 else -1) * float(rng.uniform(0.7, 0.95)) * half[0]
        scatterers.append(
            Scatterer(
                position_m=pos,
                base_amplitude=float(rng.uniform(1.0, 1.6)),
                directivity_center_deg=float(rng.uniform(0.0, 360.0)),
                directivity_width_deg=float(rng.uniform(140.0, 240.0)),
            )
        )

    for _ in range(profile.num_glints):
        scatterers.append(
            Scatterer(
                position_m=rng.uniform(-half, half),
                base_amplitude=float(rng.uniform(1.5, 2.5)),
                directivity_center_deg=float(rng.uniform(0.0, 360.0)),
                directivity_width_deg=float(rng.uniform(3.0, 8.0)),
            )
        )

    n_random = count - len(scatterers)
    positions = rng.uniform(-half, half, size=(n_random, 3))
    amplitudes = rng.uniform(*profile.amplitude_range, size=n_random)
    centers = rng.uniform(0.0, 360.0, size=n_random)
    widths = rng.uniform(*profile.width_range_deg, size=n_random)
    for i in range(n_random):
        scatterers.append(
            Scatterer(
                position_m=positions[i].copy(),
                base_amplitude=float(amplitudes[i]),
                directivity_center_deg=float(centers[i]),
                directivity_width_deg=float(widths[i]),
            )
        )

    return TargetModel(
        class_label=class_label, scatterers=tuple(scatterers), seed=int(seed)
    )


def scatterer_amplitudes(target: TargetModel, geom: Geometry) -> np.ndarray:
    """Aspect-dependent amplitude of every scatterer for one geometry."""
    delta = wrap_angle_deg(geom.bisector_azimuth_deg - target._centers_deg)
    return target._amplitudes * np.exp(-(delta**2) / (2.0 * target._widths_deg**2))


def synthesize_kspace(
    target: TargetModel, geom: Geometry, band: RadarBand
) -> np.ndarray:
    """Noiseless frequency-swept return of a target for one geometry.

    Far-field sum over scatterers: each contributes its aspect-dependent
    amplitude with phase exp(-j 2 pi f (u_tx + u_rx) . x / c).
    """
    u_sum = los_unit_vector(geom.tx_azimuth_deg, geom.elevation_deg) + los_unit_vector(
        geom.rx_azimuth_deg, geom.elevation_deg
    )
    delays_s = (target._positions @ u_sum) / SPEED_OF_LIGHT_M_S
    amps = scatterer_amplitudes(target, geom)
    phase = np.exp(-2j * np.pi * np.outer(band.frequencies(), delays_s))
    return phase @ amps.astype(complex)


def add_noise(kspace: np.ndarray, snr_db: float, noise_seed: SeedLike) -> np.ndarray:
    """Add circular complex Gaussian noise at the requested per-sample SNR.

    Noise variance is set from the mean squared magnitude of the input, so
    the requested SNR holds per look. snr_db = +inf returns the input as is.
    """
    x = np.asarray(kspace, dtype=complex)
    if x.size == 0:
        raise ValueError("kspace must be non-empty")
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    signal_power = float(np.mean(np.abs(x) ** 2))
    if signal_power == 0.0:
        raise DegenerateSignal("zero-power signal: SNR is undefined")
    sigma2 = signal_power / (10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(noise_seed)
    noise = math.sqrt(sigma2 / 2.0) * (
        rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
    )
    return x + noise


def acquire_look(
    target: TargetModel,
    geom: Geometry,
    band: RadarBand,
    snr_db: float,
    noise_seed: SeedLike,
) -> Look:
    """Synthesize one noisy (or noiseless) look."""
    kspace = add_noise(synthesize_kspace(target, geom, band), snr_db, noise_seed)
    return Look(geometry=geom, kspace=kspace, snr_db=snr_db)


# ---------------------------------------------------------------------------
# Dataset file format (newline-delimited JSON, version "cogatr-ds-v1")
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    class_label: str
    target_seed: int
    geometry: Geometry
    snr_db: float
    kspace: np.ndarray


def _header_line(band: RadarBand) -> str:
    return json.dumps(
        {
            "format": DATASET_FORMAT,
            "center_frequency_hz": band.center_frequency_hz,
            "bandwidth_hz": band.bandwidth_hz,
            "num_frequency_samples": band.num_frequency_samples,
        }
    )


def _record_line(rec: DatasetRecord) -> str:
    return json.dumps(
        {
            "class": rec.class_label,
            "target_seed": rec.target_seed,
            "tx_az_deg": rec.geometry.tx_azimuth_deg,
            "beta_deg": rec.geometry.bistatic_angle_deg,
            "elev_deg": rec.geometry.elevation_deg,
            "snr_db": rec.snr_db,
            "kspace_re": [float(v) for v in rec.kspace.real],
            "kspace_im": [float(v) for v in rec.kspace.imag],
        }
    )


def dataset_to_lines(band: RadarBand, records: Iterable[DatasetRecord]) -> Iterator[str]:
    yield _header_line(band)
    for rec in records:
        yield _record_line(rec)


def write_dataset(path: str | Path, band: RadarBand, records: Iterable[DatasetRecord]) -> None:
    text = "\n".join(dataset_to_lines(band, records)) + "\n"
    Path(path).write_text(text)


def read_dataset(path: str | Path) -> tuple[RadarBand, list[DatasetRecord]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    if header.get("format") != DATASET_FORMAT:
        raise ValueError(f"{path}: unsupported dataset format {header.get('format')!r}")
    band = RadarBand(
        center_frequency_hz=header["center_frequency_hz"],
        bandwidth_hz=header["bandwidth_hz"],
        num_frequency_samples=header["num_frequency_samples"],
    )
    records = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = json.loads(line)
        kspace = np.array(obj["kspace_re"]) + 1j * np.array(obj["kspace_im"])
        if kspace.size != band.num_frequency_samples:
            raise ValueError(f"{path}:{i}: kspace length {kspace.size} != band size")
        records.append(
            DatasetRecord(
                class_label=obj["class"],
                target_seed=obj["target_seed"],
                geometry=Geometry(
                    tx_azimuth_deg=obj["tx_az_deg"],
                    bistatic_angle_deg=obj["beta_deg"],
                    elevation_deg=obj["elev_deg"],
                ),
                snr_db=obj["snr_db"],
                kspace=kspace,
            )
        )
    return band, records
