"""Model-free generalized fiducial prediction: focal sets, belief/plausibility,
conformal prediction sets and the maximum-entropy precise approximation."""

from .baselines import (
    BinomialGFInterval,
    LomaxPredictive,
    binomial_gf_interval,
    binomial_gf_sample,
    lomax_cdf,
    lomax_fit,
)
from .core import (
    AssumptionViolatedError,
    InvalidInputError,
    NonconformityMeasure,
    Sample,
    ScoreVector,
    compute_scores,
    pvalue_pmf_given_bag,
    rank_of_candidate,
    transducer,
)
from .imprecise import ImpreciseValue, belief, credal_check, evaluate, plausibility
from .precise import (
    MEDistribution,
    TiePathologyError,
    TruncationRequiredError,
    cp_analogue_sample,
    med_from_partition,
    med_probability,
    med_sample,
)
from .regions import (
    FocalPartition,
    IntervalSet,
    cp_set,
    focal_partition,
    focal_partition_identity,
    focal_partition_numeric,
    intervalset_algebra,
    prediction_set,
)

__version__ = "0.1.0"
