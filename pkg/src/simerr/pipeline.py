"""End-to-end analysis: draws in, estimate + covariance + three regions out."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .covariance import CovMode, CovModeConfig, estimate_asymptotic_covariance
from .estimation import EstimandSpec, SampleMatrix, joint_estimate
from .exceptions import SimErrWarning, SpecError
from .fileio import Report, ingest, write_intervals_csv, write_report
from .mvn import DEFAULT_ABS_TOL
from .region import DEFAULT_COV_TOL, all_regions


@dataclass
class AnalysisConfig:
    input: Path
    spec: EstimandSpec
    format: str | None = None
    mode: CovModeConfig = field(default_factory=CovModeConfig)
    alpha: float = 0.10
    burn_in: int = 0
    seed: int = 0
    header: bool = True
    out: Path | None = None
    svg: Path | None = None
    csv: Path | None = None
    cov_tol: float = DEFAULT_COV_TOL
    abs_tol: float = DEFAULT_ABS_TOL

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise SpecError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not str(self.input):
            raise SpecError("input path is empty")


def parse_targets(means: str | None, quantiles: str | None) -> EstimandSpec:
    """Build a spec from ``"x,y"`` and ``"x:0.1,x:0.9"`` style strings."""
    mean_targets = tuple(s.strip() for s in (means or "").split(",") if s.strip())
    quantile_targets = []
    for item in (quantiles or "").split(","):
        item = item.strip()
        if not item:
            continue
        col, sep, q = item.rpartition(":")
        if not sep or not col:
            raise SpecError(f"quantile target {item!r} must look like column:level")
        try:
            quantile_targets.append((col, float(q)))
        except ValueError:
            raise SpecError(f"quantile level {q!r} in {item!r} is not a number") from None
    return EstimandSpec(mean_targets, tuple(quantile_targets))


def analyze_samples(
    samples: SampleMatrix,
    spec: EstimandSpec,
    mode: CovModeConfig | None = None,
    alpha: float = 0.10,
    seed: int = 0,
    cov_tol: float = DEFAULT_COV_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    source: dict | None = None,
) -> Report:
    mode = mode or CovModeConfig()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SimErrWarning)
        est = joint_estimate(samples, spec)
        acov = estimate_asymptotic_covariance(samples, spec, est, mode)
        regions = all_regions(est, acov, alpha, cov_tol=cov_tol, seed=seed, abs_tol=abs_tol)
    messages = []
    for w in caught:
        if issubclass(w.category, SimErrWarning):
            messages.append(f"{w.category.__name__}: {w.message}")
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    names = samples.names()
    mean_cols, quant_cols = spec.resolve(samples)
    labels = spec.labels(samples)
    targets = [{"kind": "mean", "column": names[j], "q": None, "label": labels[i]}
               for i, j in enumerate(mean_cols)]
    targets += [
        {"kind": "quantile", "column": names[j], "q": q, "label": labels[spec.p1 + i]}
        for i, (j, (_, q)) in enumerate(zip(quant_cols, spec.quantile_targets))
    ]
    b, a = acov.batch if acov.batch else (None, None)
    diagnostics = {
        "alpha": alpha,
        "seed": seed,
        "cov_tol": cov_tol,
        "mvn_abs_tol": abs_tol,
        "mode": mode.mode.value,
        "batch_size": b,
        "n_batches": a,
        "bandwidths": [] if acov.densities is None else acov.densities.bandwidths.tolist(),
        "densities": [] if acov.densities is None else acov.densities.values.tolist(),
        "mvn_error": {k.value: r.coverage_error for k, r in regions.items()},
        "warnings": messages,
    }
    return Report(
        source=source or {},
        n=samples.n,
        column_names=list(names),
        targets=targets,
        estimate=est.nu_hat.tolist(),
        covariance={
            "sigma_hat": acov.sigma_hat.tolist(),
            "lambda_inv_diag": np.diag(acov.lambda_inv).tolist(),
            "assembled": acov.assembled.tolist(),
            "standard_errors": acov.standard_errors.tolist(),
        },
        regions={k.value: r for k, r in regions.items()},
        diagnostics=diagnostics,
    )


def analyze(config: AnalysisConfig) -> Report:
    """Ingest, analyze and write the report (plus optional CSV table and SVG)."""
    samples = ingest(config.input, config.format, config.burn_in, config.header)
    source = {
        "path": Path(config.input).name,
        "format": (config.format or Path(config.input).suffix.lstrip(".") or "csv").lower(),
        "burn_in": config.burn_in,
    }
    report = analyze_samples(
        samples, config.spec, config.mode, config.alpha, config.seed,
        config.cov_tol, config.abs_tol, source,
    )
    if config.out is not None:
        write_report(report, config.out)
    if config.csv is not None:
        write_intervals_csv(report, config.csv)
    if config.svg is not None:
        from .plotting import plot_density_bands

        plot_density_bands(samples, report, config.svg)
    return report
