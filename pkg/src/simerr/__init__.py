"""Simultaneous Monte Carlo error for sample means and quantiles."""

from .covariance import (
    AsymptoticCovariance,
    CovMode,
    CovModeConfig,
    assemble_asymptotic_covariance,
    batch_means_covariance,
    estimate_asymptotic_covariance,
    sample_covariance_iid,
)
from .estimation import (
    DensityAtQuantiles,
    EstimandSpec,
    JointEstimate,
    SampleMatrix,
    build_s_process,
    compute_means,
    compute_quantiles,
    estimate_density_at_quantiles,
    joint_estimate,
)
from .fileio import Report, ingest, read_report, write_report
from .harness import (
    CoverageReport,
    CoverageStudyConfig,
    SamplerKind,
    run_coverage_study,
    summarize_coverage,
)
from .mvn import MvnProblem, MvnResult, cholesky_reordered, mvn_rectangle_probability, std_normal_quantile
from .region import (
    ConfidenceRegion,
    RegionMethod,
    bonferroni_region,
    simultaneous_region,
    all_regions,
    uncorrected_region,
)
from .pipeline import AnalysisConfig, analyze, analyze_samples, parse_targets
from .samplers import (
    EightSchoolsData,
    MhConfig,
    MixtureSpec,
    gibbs_eight_schools,
    load_eight_schools,
    mixture_truth,
    sample_mixture_iid,
    sample_mixture_mh,
)

__version__ = "0.1.0"
