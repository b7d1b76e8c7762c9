"""Statistical tests used to compare citation distributions across journals and fields."""

from .basic import Descriptives, StatsError, correlation_matrix, descriptives, midranks, pearson, spearman
from .omnibus import (
    GroupSample,
    OmnibusResult,
    anova_oneway,
    kruskal_wallis,
    ks_normality,
    levene,
    lilliefors_pvalue,
)
from .posthoc import PairwiseComparison, dunnett_c, pairwise_csv, tukey_hsd
from .srange import srange_cdf, studentized_range_quantile

__all__ = [
    "Descriptives",
    "GroupSample",
    "OmnibusResult",
    "PairwiseComparison",
    "StatsError",
    "anova_oneway",
    "correlation_matrix",
    "descriptives",
    "dunnett_c",
    "kruskal_wallis",
    "ks_normality",
    "levene",
    "lilliefors_pvalue",
    "midranks",
    "pairwise_csv",
    "pearson",
    "spearman",
    "srange_cdf",
    "studentized_range_quantile",
    "tukey_hsd",
]
