"""The perspective-requesting classification loop.

A trial starts from one geometry, classifies the profiles it acquires
there, and keeps stepping the transmitter azimuth until the cumulative
vote tally clears a strict majority or the perspective budget runs out.
Three processing variants differ in which feature domains vote and when.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .classifier import ClassScores, TemplateBank, score
from .dsp import Domain, FeatureVector, features_from_kspace
from .errors import MissingBank, NoVotes
from .scene import CLASSES, Geometry, RadarBand, TargetModel, add_noise, synthesize_kspace


class ProcessingVariant(Enum):
    TIME_ONLY = "TIME_ONLY"
    TIME_FREQ_SIMULTANEOUS = "TIME_FREQ_SIMULTANEOUS"
    TIME_THEN_FREQ = "TIME_THEN_FREQ"

    @property
    def domains(self) -> tuple[Domain, ...]:
        if self is ProcessingVariant.TIME_ONLY:
            return (Domain.RANGE,)
        return (Domain.RANGE, Domain.FREQUENCY)

    def default_profiles_per_perspective(self) -> int:
        # Single-channel processing gets two profiles so every variant casts
        # two votes per (fully processed) perspective.
        return 2 if self is ProcessingVariant.TIME_ONLY else 1


class Confidence(Enum):
    CONFIDENT = "CONFIDENT"
    NOT_CONFIDENT = "NOT_CONFIDENT"


class Terminal(Enum):
    CLASSIFIED = "CLASSIFIED"
    UNCLASSIFIED = "UNCLASSIFIED"
    IN_PROGRESS = "IN_PROGRESS"


# A declaration needs a real vote majority; a lone vote is never treated as
# one, so single-vote phases always continue gathering evidence.
MIN_VOTES_FOR_DECLARATION = 2


@dataclass(frozen=True)
class CognitivePolicy:
    delta_theta_deg: float
    variant: ProcessingVariant
    max_perspectives: int = 10
    profiles_per_perspective: int = 1
    majority_fraction: float = 0.5

    def __post_init__(self):
        if self.delta_theta_deg < 0:
            raise ValueError("delta_theta_deg must be >= 0")
        if self.max_perspectives < 1:
            raise ValueError("max_perspectives must be >= 1")
        if self.profiles_per_perspective < 1:
            raise ValueError("profiles_per_perspective must be >= 1")
        if not 0.0 < self.majority_fraction <= 1.0:
            raise ValueError("majority_fraction must be in (0, 1]")


@dataclass(frozen=True)
class TrialState:
    votes: dict[str, int]
    total_votes: int
    perspectives_used: int
    current_tx_azimuth_deg: float
    confidence: Confidence
    terminal: Terminal

    @staticmethod
    def initial(tx_azimuth_deg: float) -> "TrialState":
        return TrialState(
            votes={c: 0 for c in CLASSES},
            total_votes=0,
            perspectives_used=0,
            current_tx_azimuth_deg=tx_azimuth_deg % 360.0,
            confidence=Confidence.NOT_CONFIDENT,
            terminal=Terminal.IN_PROGRESS,
        )


@dataclass(frozen=True)
class TrialOutcome:
    declared_class: str | None  # None when the trial ends unclassified
    confidence: Confidence
    perspectives_used: int
    true_class: str
    correct: bool
    # Max-vote class at exhaustion; what a forced NOT-CONFIDENT declaration
    # would have said. Equals declared_class for classified trials.
    fallback_class: str | None = None


def _tally(state: TrialState, winners: Sequence[str]) -> TrialState:
    votes = dict(state.votes)
    for w in winners:
        votes[w] = votes.get(w, 0) + 1
    return replace(state, votes=votes, total_votes=state.total_votes + len(winners))


def cast_votes(
    state: TrialState,
    features: Sequence[FeatureVector],
    banks: Mapping[Domain, TemplateBank],
) -> TrialState:
    """Each feature votes for its maximum-likelihood class."""
    winners = []
    for feature in features:
        if feature.domain not in banks:
            raise MissingBank(f"no template bank for domain {feature.domain.value}")
        winners.append(score(banks[feature.domain], feature).best_class)
    return _tally(state, winners)


def check_confidence(state: TrialState, policy: CognitivePolicy) -> Confidence:
    """Strict vote majority: max class votes > majority_fraction * total."""
    if state.total_votes == 0:
        raise NoVotes("confidence is undefined before any votes are cast")
    if max(state.votes.values()) > policy.majority_fraction * state.total_votes:
        return Confidence.CONFIDENT
    return Confidence.NOT_CONFIDENT


def _declarable(state: TrialState, policy: CognitivePolicy) -> bool:
    if state.total_votes < MIN_VOTES_FOR_DECLARATION:
        return False
    return check_confidence(state, policy) is Confidence.CONFIDENT


def _leading_class(votes: Mapping[str, int], ll_sums: Mapping[str, float]) -> str:
    """Max votes, ties by cumulative log-likelihood, then class order."""
    best = None
    best_key = None
    for c in CLASSES:
        key = (votes.get(c, 0), ll_sums.get(c, 0.0))
        if best_key is None or key > best_key:
            best, best_key = c, key
    return best


@dataclass
class _LoopBook:
    """Mutable bookkeeping for one trial."""

    state: TrialState
    ll_sums: dict[str, float] = field(default_factory=lambda: {c: 0.0 for c in CLASSES})

    def apply(self, scores: Sequence[ClassScores]) -> None:
        self.state = _tally(self.state, [s.best_class for s in scores])
        for s in scores:
            for c, ll in s.per_class_log_likelihood.items():
                self.ll_sums[c] += ll


def _score_profiles(
    profiles: Sequence[np.ndarray],
    domains: Sequence[Domain],
    banks: Mapping[Domain, TemplateBank],
) -> list[ClassScores]:
    out = []
    for domain in domains:
        if domain not in banks:
            raise MissingBank(f"no template bank for domain {domain.value}")
        for kspace in profiles:
            out.append(score(banks[domain], features_from_kspace(kspace, domain)))
    return out


def _acquire_profiles(
    target: TargetModel,
    geom: Geometry,
    band: RadarBand,
    snr_db: float,
    noise_seed: Sequence[int],
    perspective: int,
    count: int,
) -> list[np.ndarray]:
    base = synthesize_kspace(target, geom, band)
    return [
        add_noise(base, snr_db, [*noise_seed, perspective, i]) for i in range(count)
    ]


def run_trial(
    target: TargetModel,
    start_geom: Geometry,
    band: RadarBand,
    banks: Mapping[Domain, TemplateBank],
    policy: CognitivePolicy,
    snr_db: float,
    noise_seed: int | Sequence[int],
) -> TrialOutcome:
    """Run one cognitive trial; see _run_trial_detailed for the mechanics."""
    outcome, _ = _run_trial_detailed(
        target, start_geom, band, banks, policy, snr_db, noise_seed
    )
    return outcome


def _run_trial_detailed(
    target: TargetModel,
    start_geom: Geometry,
    band: RadarBand,
    banks: Mapping[Domain, TemplateBank],
    policy: CognitivePolicy,
    snr_db: float,
    noise_seed: int | Sequence[int],
) -> tuple[TrialOutcome, TrialState]:
    """One trial: acquire, vote, and either declare or request a new angle.

    Per perspective:
      TIME_ONLY             range votes from every profile, then one check.
      TIME_FREQ_SIMULTANEOUS  range and frequency votes together, one check.
      TIME_THEN_FREQ        range votes, check; only on failure add frequency
                            votes for the same profiles and check again.
    Declaration requires a strict majority of the cumulative votes (and at
    least MIN_VOTES_FOR_DECLARATION votes). Exhausting the budget without a
    majority ends the trial unclassified.
    """
    seed = [int(noise_seed)] if isinstance(noise_seed, int) else [int(v) for v in noise_seed]
    book = _LoopBook(state=TrialState.initial(start_geom.tx_azimuth_deg))
    variant = policy.variant

    for perspective in range(policy.max_perspectives):
        geom = start_geom.advanced(perspective * policy.delta_theta_deg)
        book.state = replace(
            book.state,
            perspectives_used=perspective + 1,
            current_tx_azimuth_deg=geom.tx_azimuth_deg,
        )
        profiles = _acquire_profiles(
            target, geom, band, snr_db, seed, perspective, policy.profiles_per_perspective
        )

        if variant is ProcessingVariant.TIME_THEN_FREQ:
            book.apply(_score_profiles(profiles, [Domain.RANGE], banks))
            if not _declarable(book.state, policy):
                book.apply(_score_profiles(profiles, [Domain.FREQUENCY], banks))
        else:
            book.apply(_score_profiles(profiles, variant.domains, banks))

        if _declarable(book.state, policy):
            book.state = replace(
                book.state,
                confidence=Confidence.CONFIDENT,
                terminal=Terminal.CLASSIFIED,
            )
            declared = _leading_class(book.state.votes, book.ll_sums)
            outcome = TrialOutcome(
                declared_class=declared,
                confidence=Confidence.CONFIDENT,
                perspectives_used=book.state.perspectives_used,
                true_class=target.class_label,
                correct=declared == target.class_label,
                fallback_class=declared,
            )
            return outcome, book.state

    book.state = replace(
        book.state, confidence=Confidence.NOT_CONFIDENT, terminal=Terminal.UNCLASSIFIED
    )
    fallback = _leading_class(book.state.votes, book.ll_sums)
    outcome = TrialOutcome(
        declared_class=None,
        confidence=Confidence.NOT_CONFIDENT,
        perspectives_used=book.state.perspectives_used,
        true_class=target.class_label,
        correct=False,
        fallback_class=fallback,
    )
    return outcome, book.state


def run_fixed_trial(
    target: TargetModel,
    start_geom: Geometry,
    band: RadarBand,
    banks: Mapping[Domain, TemplateBank],
    policy: CognitivePolicy,
    snr_db: float,
    noise_seed: int | Sequence[int],
    num_perspectives: int,
) -> TrialOutcome:
    """Fuse votes from exactly num_perspectives perspectives, no gating.

    The declared class is the cumulative-vote leader; the reported
    confidence is what the majority rule says about the final tally.
    """
    if num_perspectives < 1:
        raise ValueError("num_perspectives must be >= 1")
    seed = [int(noise_seed)] if isinstance(noise_seed, int) else [int(v) for v in noise_seed]
    book = _LoopBook(state=TrialState.initial(start_geom.tx_azimuth_deg))

    for perspective in range(num_perspectives):
        geom = start_geom.advanced(perspective * policy.delta_theta_deg)
        book.state = replace(
            book.state,
            perspectives_used=perspective + 1,
            current_tx_azimuth_deg=geom.tx_azimuth_deg,
        )
        profiles = _acquire_profiles(
            target, geom, band, snr_db, seed, perspective, policy.profiles_per_perspective
        )
        book.apply(_score_profiles(profiles, policy.variant.domains, banks))

    declared = _leading_class(book.state.votes, book.ll_sums)
    confidence = check_confidence(book.state, policy)
    return TrialOutcome(
        declared_class=declared,
        confidence=confidence,
        perspectives_used=num_perspectives,
        true_class=target.class_label,
        correct=declared == target.class_label,
        fallback_class=declared,
    )
