"""Presets that rerun the worked examples and write reports and figures.

* ``mixture``: IID and random-walk MH draws from the three-component mixture at
  n = 1000 and n = 50000; mean and 0.10/0.90 quantiles with 90% regions.
* ``coverage``: IID and MH coverage studies (desk scale by default) with their
  coverage charts.
* ``schools``: eight-schools Gibbs runs at n = 10^4 and 10^5 (burn-in 10^3),
  0.10/0.90 posterior quantiles of every theta with 90% simultaneous bands.
"""

from __future__ import annotations

import logging
import time
import warnings
from pathlib import Path

from .covariance import CovMode, CovModeConfig
from .estimation import EstimandSpec
from .exceptions import SimErrWarning
from .fileio import dumps, write_intervals_csv, write_report
from .harness import CoverageReport, CoverageStudyConfig, SamplerKind, run_coverage_study, summarize_coverage
from .pipeline import analyze_samples
from .region import ConfidenceRegion
from .samplers import (
    MhConfig,
    MixtureSpec,
    gibbs_eight_schools,
    load_eight_schools,
    sample_mixture_iid,
    sample_mixture_mh,
)

log = logging.getLogger(__name__)

SCHOOLS_BURN_IN = 1000
MIXTURE_SPEC = EstimandSpec(("x",), (("x", 0.1), ("x", 0.9)))


def coverage_payload(report: CoverageReport, summary: ConfidenceRegion, notes) -> dict:
    payload = report.to_dict()
    payload["meta_alpha"] = summary.alpha
    payload["summary"] = summary.to_dict()
    payload["warnings"] = list(notes)
    return payload


def run_study(config: CoverageStudyConfig, workers: int = 1, meta_alpha: float = 0.05, seed: int = 0):
    """Coverage study plus its summary; returns (report, summary, warning messages)."""
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SimErrWarning)
        report = run_coverage_study(config, workers=workers)
        summary = summarize_coverage(report, meta_alpha=meta_alpha, seed=seed)
    log.info("coverage study finished in %.1f s", time.perf_counter() - start)
    notes = [f"{w.category.__name__}: {w.message}" for w in caught
             if issubclass(w.category, SimErrWarning)]
    if report.failures:
        notes.append(f"{len(report.failures)} replication(s) failed and were excluded")
    return report, summary, notes


def _mixture(out: Path, seed: int, quick: bool) -> list[str]:
    from .plotting import plot_density_bands

    notes = []
    sizes = (1000, 5000) if quick else (1000, 50_000)
    spec = MixtureSpec()
    for kind in ("iid", "mh"):
        for n in sizes:
            if kind == "iid":
                samples = sample_mixture_iid(spec, n, seed)
                mode = CovModeConfig(CovMode.IID)
            else:
                samples = sample_mixture_mh(spec, MhConfig(n_draws=n, seed=seed))
                mode = CovModeConfig(CovMode.MCMC)
            report = analyze_samples(samples, MIXTURE_SPEC, mode, alpha=0.10, seed=seed,
                                     source={"sampler": kind, "n": n, "seed": seed})
            stem = out / f"mixture_{kind}_{n}"
            write_report(report, stem.with_suffix(".json"))
            write_intervals_csv(report, stem.with_suffix(".csv"))
            plot_density_bands(samples, report, stem.with_suffix(".svg"))
            notes += report.warnings
    return notes


def _coverage(out: Path, seed: int, workers: int, replications: int, quick: bool) -> list[str]:
    from .plotting import plot_coverage_chart

    notes = []
    for sampler in (SamplerKind.IID_MIXTURE, SamplerKind.MH_MIXTURE):
        config = CoverageStudyConfig(
            sampler=sampler,
            replications=20 if quick else replications,
            n_per_rep=2000 if quick else 10_000,
            master_seed=seed,
        )
        report, summary, study_notes = run_study(config, workers, 0.05, seed)
        stem = out / f"coverage_{sampler.value}"
        stem.with_suffix(".json").write_text(
            dumps(coverage_payload(report, summary, study_notes)), encoding="utf-8"
        )
        plot_coverage_chart(summary, stem.with_suffix(".svg"))
        notes += study_notes
    return notes


def schools_spec() -> EstimandSpec:
    quantiles = []
    for j in range(1, 9):
        quantiles += [(f"theta{j}", 0.1), (f"theta{j}", 0.9)]
    return EstimandSpec((), tuple(quantiles))


def schools_report(n: int, seed: int, burn_in: int = SCHOOLS_BURN_IN):
    """Gibbs draws (after burn-in) and their analysis with batch means."""
    data = load_eight_schools()
    samples = gibbs_eight_schools(data, n + burn_in, seed).drop_leading(burn_in)
    report = analyze_samples(
        samples, schools_spec(), CovModeConfig(CovMode.MCMC), alpha=0.10, seed=seed,
        source={"sampler": "gibbs-eight-schools", "n": n, "burn_in": burn_in, "seed": seed},
    )
    return samples, report


def _schools(out: Path, seed: int, quick: bool) -> list[str]:
    from .plotting import plot_credible_panels

    notes = []
    for n in ((2000, 20_000) if quick else (10_000, 100_000)):
        samples, report = schools_report(n, seed)
        stem = out / f"schools_{n}"
        write_report(report, stem.with_suffix(".json"))
        write_intervals_csv(report, stem.with_suffix(".csv"))
        plot_credible_panels(samples, report, stem.with_suffix(".svg"))
        notes += report.warnings
    return notes


def run_presets(
    preset: str, out, seed: int = 2024, workers: int = 1, replications: int = 500,
    quick: bool = False,
) -> list[str]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    notes: list[str] = []
    if preset in ("mixture", "all"):
        notes += _mixture(out, seed, quick)
    if preset in ("coverage", "all"):
        notes += _coverage(out, seed, workers, replications, quick)
    if preset in ("schools", "all"):
        notes += _schools(out, seed, quick)
    return notes
