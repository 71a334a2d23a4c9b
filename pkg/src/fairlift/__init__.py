"""Fairness auditing for treatment-assignment policies on randomized experiments.

The toolkit estimates individual treatment effects with a two-model learner,
distills blackbox predictors into interaction-aware additive models, scores
treatment/outcome fairness and the no-worse-off metric through mock
experiments, and explores improvement levers (per-group thresholds,
sensitive-shape removal) over the fairness/economics tradeoff surface.
"""

from .data import (
    CollegeConfig,
    ExperimentDataset,
    FeatureSchema,
    SyntheticConfig,
    generate_college,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    with_group,
)
from .distill import DistillResult, distill, fidelity
from .fairness import (
    BLOOD_DONATION_VALUES,
    REFERRAL_VALUES,
    ConstantPolicy,
    FairnessReport,
    ThresholdPolicy,
    UndefinedMetricError,
    ValueModel,
    evaluate_policy,
    mock_evaluate,
    nwo,
    of,
    p_rule,
    tf,
)
from .gam import (
    AdditiveModel,
    GamHyperparams,
    Shape1D,
    Shape2D,
    export_shapes,
    fit_gam,
    import_shapes,
    predict_gam,
    variance_attribution,
)
from .improve import (
    AdjustedScore,
    ParetoSet,
    PolicyManifold,
    ShapeAdjustment,
    college_shade_metrics,
    pareto,
    shape_removal_curve,
    sweep_thresholds,
)
from .interactions import InteractionQuery, average_score, pairwise_score, rank_pairs
from .models import (
    LinearPredictor,
    MLPPredictor,
    Predictor,
    TLearner,
    auc,
    fit_tlearner,
    ite,
    load_model,
    save_model,
)

__version__ = "0.1.0"
