"""Privacy-sensitivity scoring toolkit.

Annotates text corpora with 1..5 privacy ratings through a teacher LLM,
measures agreement against human ratings with Krippendorff's alpha,
evaluates ordinal classifiers, and quantifies the privacy reduction of
de-identification systems via masking experiments.
"""

__version__ = "0.1.0"

from .scale import NUM_CLASSES, PrivacyRating, as_rating
from .corpus import (
    DatasetStats,
    TextRecord,
    compute_stats,
    ingest,
    normalize_text,
    read_records,
    sample_excluding,
    split,
    text_hash,
    write_records,
)
from .annotate import (
    AnnotationResult,
    TeacherConfig,
    annotate_batch,
    build_prompt,
    parse_rating,
)
from .agreement import (
    AlphaResult,
    PairwiseAgreement,
    RatingMatrix,
    alpha_vs_reference,
    krippendorff_alpha,
    pairwise_alpha_suite,
)
from .metrics import (
    ConfusionMatrix,
    MetricReport,
    evaluate,
    majority_baseline,
    random_baseline,
)
from .scorer import (
    BaselineScorer,
    RemoteScorer,
    Scorer,
    TrainConfig,
    featurize,
    remote_score,
    train_baseline,
)
from .deid import (
    DeidReport,
    EntitySpan,
    StandoffDoc,
    apply_mask,
    evaluate_conditions,
    random_mask,
)

__all__ = [
    "__version__",
    "NUM_CLASSES",
    "PrivacyRating",
    "as_rating",
    "DatasetStats",
    "TextRecord",
    "compute_stats",
    "ingest",
    "normalize_text",
    "read_records",
    "sample_excluding",
    "split",
    "text_hash",
    "write_records",
    "AnnotationResult",
    "TeacherConfig",
    "annotate_batch",
    "build_prompt",
    "parse_rating",
    "AlphaResult",
    "PairwiseAgreement",
    "RatingMatrix",
    "alpha_vs_reference",
    "krippendorff_alpha",
    "pairwise_alpha_suite",
    "ConfusionMatrix",
    "MetricReport",
    "evaluate",
    "majority_baseline",
    "random_baseline",
    "BaselineScorer",
    "RemoteScorer",
    "Scorer",
    "TrainConfig",
    "featurize",
    "remote_score",
    "train_baseline",
    "DeidReport",
    "EntitySpan",
    "StandoffDoc",
    "apply_mask",
    "evaluate_conditions",
    "random_mask",
]
