"""Range/frequency domain processing: unitary DFT and feature extraction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateSignal
from .scene import SPEED_OF_LIGHT_M_S, Look


class Domain(Enum):
    RANGE = "RANGE"
    FREQUENCY = "FREQUENCY"


@dataclass(frozen=True, eq=False)
class RangeProfile:
    samples: np.ndarray
    bin_spacing_m: float | None = None


@dataclass(frozen=True, eq=False)
class FeatureVector:
    domain: Domain
    values: np.ndarray


def dft(kspace: np.ndarray, bandwidth_hz: float | None = None) -> RangeProfile:
    """Unitary DFT (1/sqrt(N) scaling) of a k-space sweep.

    When the sweep bandwidth is supplied, the profile carries its range bin
    spacing c / (2 B).
    """
    x = np.asarray(kspace, dtype=complex)
    if x.size == 0:
        raise ValueError("kspace must be non-empty")
    spacing = None
    if bandwidth_hz is not None:
        spacing = SPEED_OF_LIGHT_M_S / (2.0 * bandwidth_hz)
    return RangeProfile(samples=np.fft.fft(x, norm="ortho"), bin_spacing_m=spacing)


def features_from_kspace(kspace: np.ndarray, domain: Domain) -> FeatureVector:
    """L2-normalized magnitude features in the requested domain."""
    x = np.asarray(kspace, dtype=complex)
    if x.size == 0:
        raise ValueError("kspace must be non-empty")
    if domain is Domain.RANGE:
        mags = np.abs(np.fft.fft(x, norm="ortho"))
    else:
        mags = np.abs(x)
    norm = float(np.linalg.norm(mags))
    if norm == 0.0:
        raise DegenerateSignal("all-zero signal has no features")
    return FeatureVector(domain=domain, values=mags / norm)


def extract_features(look: Look, domain: Domain) -> FeatureVector:
    return features_from_kspace(look.kspace, domain)
