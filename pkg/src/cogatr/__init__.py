"""cogatr: cognitive angular-diversity radar target classification simulator."""

from .classifier import (
    ClassScores,
    TemplateBank,
    load_bank,
    save_bank,
    score,
    sector_of,
    train,
)
from .cognition import (
    CognitivePolicy,
    Confidence,
    ProcessingVariant,
    TrialOutcome,
    TrialState,
    cast_votes,
    check_confidence,
    run_fixed_trial,
    run_trial,
)
from .dsp import Domain, FeatureVector, RangeProfile, dft, extract_features
from .errors import (
    CogatrError,
    ConfigError,
    DegenerateSignal,
    DimensionMismatch,
    EmptyCell,
    GeometryError,
    MissingBank,
    MixedDomain,
    NoVotes,
    UsageError,
)
from .harness import (
    ExperimentConfig,
    PolicyDefaults,
    SweepRow,
    evaluate_point,
    fixed_two_perspective_baseline,
    generate_dataset,
    run_sweep_dtheta,
    run_sweep_snr,
    train_banks,
)
from .scene import (
    CLASSES,
    Geometry,
    Look,
    RadarBand,
    Scatterer,
    TargetModel,
    add_noise,
    make_target,
    synthesize_kspace,
)

__version__ = "0.1.0"
