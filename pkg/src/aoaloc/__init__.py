"""Cooperative source localization from angle-of-arrival measurements.

Sequential Bayesian (LMMSE) aggregation for line-of-sight scenes, randomized
outlier suppression for non-line-of-sight scenes, and exact reference
benchmarks (ML estimators, Cramer-Rao bounds, bootstrap-failure analytics).
"""

from .bounds import CenterBound, FisherInfo, center_bound, crlb_trace, fisher_information
from .errors import (
    AllRunsPruned,
    DegenerateBootstrap,
    DegenerateRange,
    InfeasibleBearing,
    InvalidAlpha,
    LocalizationError,
    NoViablePair,
    ParseError,
    SingularCovariance,
    SingularInformation,
    SourceOutsideField,
    ValidationError,
)
from .geometry import (
    CartesianEstimate,
    Point2,
    PolarEstimate,
    ReceiverPose,
    Sym2,
    angular_error,
    cart_to_polar,
    polar_to_cart,
    true_bearing,
    wrap_angle,
)
from .ml import MlEstimate, MlSettings, ml_los_estimate, ml_robust_estimate, robust_loglik
from .models import (
    AoaMeasurement,
    AoaModel,
    CauchyLOS,
    GaussianLOS,
    LaplacianLOS,
    NarrowbandMixture,
    RangeMeasurement,
    UniformNLOS,
    Wideband,
    loglik_aoa,
    sample_aoa,
    sample_rss_range,
)
from .nlos import (
    RunResult,
    SuppressionConfig,
    bootstrap_failure_prob,
    choose_num_seeds,
    compute_theta_max,
    failure_prob_bounds,
    robust_localize,
    suppression_candidates,
    suppression_run,
)
from .sequential import (
    LocalizationResult,
    SequentialConfig,
    bootstrap_estimate,
    fuse_range_update,
    lmmse_aoa_update,
    multi_bootstrap_localize,
    select_bootstrap_pair,
    sequential_localize,
)
from .sim import (
    CampaignSpec,
    CellMetrics,
    RingScenario,
    TraceResult,
    TrialRecord,
    Wall,
    build_ring_scenario,
    failure_rate,
    ray_trace,
    ring_receivers,
    run_monte_carlo,
    sample_measurements,
)

__version__ = "0.1.0"
