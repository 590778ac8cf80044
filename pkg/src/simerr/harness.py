"""Repeated-experiment coverage study for the mixture example.

Each replication draws a fresh sample, estimates the mean and two quantiles,
builds the uncorrected, simultaneous and Bonferroni regions at every alpha,
and records whether each region contains the exact target vector. The
resulting replications x cells binary matrix is itself summarized with
simultaneous intervals for the cell coverage probabilities.

Seed splitting: replication r uses ``SeedSequence(master_seed).spawn(R)[r]``
(equivalently spawn_key ``(r,)``); its first child seeds the sampler and the
second seeds the MVN integrator. Results do not depend on worker count.
"""

from __future__ import annotations

import enum
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .covariance import CovMode, CovModeConfig, estimate_asymptotic_covariance, sample_covariance_iid
from .estimation import EstimandSpec, joint_estimate
from .exceptions import (
    DegenerateVarianceWarning,
    RegionError,
    SimErrError,
    StudyAbortedError,
)
from .mvn import DEFAULT_ABS_TOL
from .region import (
    DEFAULT_COV_TOL,
    ConfidenceRegion,
    RegionMethod,
    all_regions,
    calibrate,
    standardize_arrays,
    uncorrected_z,
)
from .samplers import MhConfig, MixtureSpec, mixture_truth, sample_mixture_iid, sample_mixture_mh

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.01
METHOD_TAGS = {
    RegionMethod.UNCORRECTED: "LB",
    RegionMethod.SIMULTANEOUS: "SI",
    RegionMethod.BONFERRONI: "UB",
}


class SamplerKind(str, enum.Enum):
    IID_MIXTURE = "iid"
    MH_MIXTURE = "mh"


@dataclass(frozen=True)
class CoverageStudyConfig:
    sampler: SamplerKind = SamplerKind.IID_MIXTURE
    replications: int = 500
    n_per_rep: int = 10_000
    alphas: tuple[float, ...] = (0.10, 0.20)
    master_seed: int = 0
    cov_mode: CovModeConfig | None = None
    quantile_levels: tuple[float, ...] = (0.1, 0.9)
    burn_in: int = 0
    cov_tol: float = DEFAULT_COV_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    mixture: MixtureSpec = field(default_factory=MixtureSpec)

    def __post_init__(self):
        object.__setattr__(self, "sampler", SamplerKind(self.sampler))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "quantile_levels", tuple(float(q) for q in self.quantile_levels))
        if self.replications < 2:
            raise ValueError("a coverage study needs at least 2 replications")
        if not all(0.0 < a < 1.0 for a in self.alphas) or not self.alphas:
            raise ValueError(f"alphas must lie in (0, 1), got {self.alphas}")
        if self.cov_mode is None:
            mode = CovMode.IID if self.sampler is SamplerKind.IID_MIXTURE else CovMode.MCMC
            object.__setattr__(self, "cov_mode", CovModeConfig(mode))

    @classmethod
    def paper_scale(cls, sampler=SamplerKind.IID_MIXTURE, master_seed: int = 0):
        """Full-size study: 2000 replications of 10^4 draws."""
        return cls(sampler=sampler, replications=2000, n_per_rep=10_000, master_seed=master_seed)

    def cells(self) -> list[tuple[RegionMethod, float]]:
        return [(m, a) for m in RegionMethod for a in self.alphas]

    def cell_labels(self) -> list[str]:
        return [f"{METHOD_TAGS[m]}@{1 - a:g}" for m, a in self.cells()]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sampler"] = self.sampler.value
        d["cov_mode"] = {"mode": self.cov_mode.mode.value, "batch_size": self.cov_mode.batch_size}
        d["alphas"] = list(self.alphas)
        d["quantile_levels"] = list(self.quantile_levels)
        d["mixture"] = {k: list(v) for k, v in asdict(self.mixture).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageStudyConfig":
        d = dict(d)
        d["cov_mode"] = CovModeConfig(**d["cov_mode"])
        d["mixture"] = MixtureSpec(**d["mixture"])
        d["alphas"] = tuple(d["alphas"])
        d["quantile_levels"] = tuple(d["quantile_levels"])
        return cls(**d)


@dataclass(eq=False)
class CoverageReport:
    config: CoverageStudyConfig
    outcomes: np.ndarray
    truth: tuple[float, ...]
    replication_ids: tuple[int, ...]
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def cell_labels(self) -> list[str]:
        return self.config.cell_labels()

    @property
    def hits(self) -> np.ndarray:
        return self.outcomes.sum(axis=0)

    @property
    def coverage(self) -> np.ndarray:
        return self.outcomes.mean(axis=0)

    def cell(self, method: RegionMethod, alpha: float) -> int:
        return self.config.cells().index((RegionMethod(method), float(alpha)))

    def to_dict(self) -> dict:
        return {
            "schema": "1",
            "kind": "coverage-study",
            "config": self.config.to_dict(),
            "seed_rule": "SeedSequence(master_seed).spawn(replications)[r]; child 0 sampler, child 1 MVN",
            "truth": list(self.truth),
            "cells": self.cell_labels,
            "hits": [int(h) for h in self.hits],
            "coverage": [float(c) for c in self.coverage],
            "replications_used": int(self.outcomes.shape[0]),
            "replication_ids": list(self.replication_ids),
            "failures": [{"replication": r, "error": msg} for r, msg in self.failures],
            "outcomes": self.outcomes.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageReport":
        cfg = CoverageStudyConfig.from_dict(d["config"])
        outcomes = np.asarray(d["outcomes"], dtype=int).reshape(-1, len(cfg.cells()))
        return cls(
            config=cfg,
            outcomes=outcomes,
            truth=tuple(d["truth"]),
            replication_ids=tuple(d["replication_ids"]),
            failures=tuple((f["replication"], f["error"]) for f in d["failures"]),
        )


def replication_seeds(master_seed: int, r: int) -> tuple[np.random.SeedSequence, int]:
    ss = np.random.SeedSequence(master_seed, spawn_key=(r,))
    sampler_ss, mvn_ss = ss.spawn(2)
    return sampler_ss, int(mvn_ss.generate_state(1)[0])


def _draw(config: CoverageStudyConfig, seed):
    n_total = config.n_per_rep + config.burn_in
    if config.sampler is SamplerKind.IID_MIXTURE:
        samples = sample_mixture_iid(config.mixture, n_total, seed)
    else:
        samples = sample_mixture_mh(config.mixture, MhConfig(n_draws=n_total, seed=seed))
    return samples.drop_leading(config.burn_in) if config.burn_in else samples


def run_replication(config: CoverageStudyConfig, r: int, truth) -> np.ndarray:
    """Binary hit vector over ``config.cells()`` for replication ``r``."""
    sampler_seed, mvn_seed = replication_seeds(config.master_seed, r)
    samples = _draw(config, sampler_seed)
    spec = EstimandSpec(("x",), tuple(("x", q) for q in config.quantile_levels))
    est = joint_estimate(samples, spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        acov = estimate_asymptotic_covariance(samples, spec, est, config.cov_mode)
        regions = {
            a: all_regions(est, acov, a, config.cov_tol, mvn_seed, config.abs_tol)
            for a in config.alphas
        }
    return np.array([regions[a][m].contains(truth) for m, a in config.cells()], dtype=int)


def _worker(args):
    config, r, truth = args
    try:
        return r, run_replication(config, r, truth), None
    except SimErrError as exc:
        return r, None, f"{type(exc).__name__}: {exc}"


def run_coverage_study(config: CoverageStudyConfig, workers: int | None = 1) -> CoverageReport:
    """Run every replication and collect the binary outcome matrix.

    ``workers`` > 1 uses a process pool; ``None`` means one per CPU.
    """
    mean, qs = mixture_truth(config.mixture, config.quantile_levels)
    truth = (mean, *(float(q) for q in qs))
    jobs = [(config, r, truth) for r in range(config.replications)]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_worker(job) for job in jobs]
    results.sort(key=lambda t: t[0])
    rows = [(r, row) for r, row, err in results if row is not None]
    failures = tuple((r, err) for r, _, err in results if err is not None)
    if failures:
        log.warning("%d of %d replications failed and were excluded", len(failures), len(jobs))
    if len(failures) > MAX_FAILURE_FRACTION * config.replications:
        raise StudyAbortedError(
            f"{len(failures)} of {config.replications} replications failed "
            f"(limit {MAX_FAILURE_FRACTION:.0%}); first: {failures[0][1]}"
        )
    outcomes = np.array([row for _, row in rows], dtype=int).reshape(-1, len(config.cells()))
    return CoverageReport(
        config=config,
        outcomes=outcomes,
        truth=truth,
        replication_ids=tuple(r for r, _ in rows),
        failures=failures,
    )


def _distinct_up_to_sign(x: np.ndarray) -> list[int]:
    """Indices of columns that are not copies or complements of earlier ones."""
    keep: list[int] = []
    for j in range(x.shape[1]):
        col = x[:, j]
        if not any(np.array_equal(col, x[:, k]) or np.array_equal(col, 1 - x[:, k]) for k in keep):
            keep.append(j)
    return keep


def summarize_coverage(
    report: CoverageReport,
    meta_alpha: float = 0.05,
    seed: int = 0,
    cov_tol: float = DEFAULT_COV_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> ConfidenceRegion:
    """Simultaneous intervals for the cell coverage probabilities.

    The outcome rows are IID, so the estimate is the vector of column means and
    its covariance is the sample covariance. Columns with no variation get a
    zero-width interval and a degenerate flag; columns that duplicate (or
    complement) another column share its standardized coordinate.
    """
    x = np.asarray(report.outcomes, dtype=float)
    n, p = x.shape
    if n < 2:
        raise RegionError("coverage summary needs at least 2 replications")
    means = x.mean(axis=0)
    var = np.diag(sample_covariance_iid(x))
    degenerate = ~(var > 0)
    labels = tuple(report.cell_labels)
    if degenerate.any():
        warnings.warn(
            "no variation in cell(s) "
            + ", ".join(l for l, d in zip(labels, degenerate) if d)
            + "; their intervals collapse to points",
            DegenerateVarianceWarning,
            stacklevel=2,
        )
    live = np.flatnonzero(~degenerate)
    se = np.zeros(p)
    if live.size:
        keep = [int(live[k]) for k in _distinct_up_to_sign(x[:, live].astype(int))]
        cov = sample_covariance_iid(x[:, keep])
        std = standardize_arrays(means[keep], cov, n, [labels[k] for k in keep])
        core = calibrate(std, meta_alpha, cov_tol, seed, abs_tol)
        z, coverage, err, met, steps = (
            core.z, core.achieved_coverage, core.coverage_error, core.tolerance_met,
            core.bisection_steps,
        )
        se[live] = np.sqrt(var[live] / n)
    else:
        z, coverage, err, met, steps = uncorrected_z(meta_alpha), 1.0, 0.0, True, 0
    return ConfidenceRegion(
        method=RegionMethod.SIMULTANEOUS,
        alpha=meta_alpha,
        z=z,
        estimate=means,
        half_widths=z * se,
        achieved_coverage=coverage,
        coverage_error=err,
        tolerance_met=met,
        labels=labels,
        degenerate=degenerate,
        bisection_steps=steps,
    )
