"""Hyperrectangular confidence regions for the joint estimate.

Every region has the form  nu_hat_i +/- z * sqrt(assembled_ii / n)  and the
three methods differ only in the multiplier z:

* uncorrected: z = z_{1-alpha/2}; undercovers jointly once p > 1.
* bonferroni:  z = z_{1-alpha/(2p)}; overcovers.
* simultaneous: z* between the two, found by bisection so that the
  plug-in normal law puts mass 1-alpha on the region.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .covariance import AsymptoticCovariance
from .estimation import JointEstimate
from .exceptions import FactorizationError, RegionError, ToleranceWarning
from .mvn import (
    DEFAULT_ABS_TOL,
    MvnProblem,
    MvnResult,
    cholesky_reordered,
    mvn_rectangle_probability,
    std_normal_quantile,
)

DEFAULT_COV_TOL = 1e-3
BRACKET_TOL = 1e-6


class RegionMethod(str, enum.Enum):
    UNCORRECTED = "uncorrected"
    SIMULTANEOUS = "simultaneous"
    BONFERRONI = "bonferroni"


@dataclass(frozen=True)
class ConfidenceRegion:
    method: RegionMethod
    alpha: float
    z: float
    estimate: tuple[float, ...]
    half_widths: tuple[float, ...]
    achieved_coverage: float
    coverage_error: float
    tolerance_met: bool = True
    labels: tuple[str, ...] = ()
    degenerate: tuple[bool, ...] = ()
    bisection_steps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", RegionMethod(self.method))
        for name in ("estimate", "half_widths"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
        deg = tuple(bool(v) for v in self.degenerate) or (False,) * len(self.estimate)
        object.__setattr__(self, "degenerate", deg)

    @property
    def p(self) -> int:
        return len(self.estimate)

    @property
    def lower(self) -> tuple[float, ...]:
        return tuple(e - h for e, h in zip(self.estimate, self.half_widths))

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(e + h for e, h in zip(self.estimate, self.half_widths))

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    def contains(self, values) -> bool:
        """True when every coordinate of ``values`` lies inside its interval."""
        values = np.asarray(values, dtype=float)
        return bool(np.all((values >= self.lower) & (values <= self.upper)))

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "alpha": self.alpha,
            "z": self.z,
            "labels": list(self.labels),
            "estimate": list(self.estimate),
            "half_widths": list(self.half_widths),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "achieved_coverage": self.achieved_coverage,
            "coverage_error": self.coverage_error,
            "tolerance_met": self.tolerance_met,
            "degenerate": list(self.degenerate),
            "bisection_steps": self.bisection_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConfidenceRegion":
        return cls(
            method=d["method"],
            alpha=d["alpha"],
            z=d["z"],
            estimate=d["estimate"],
            half_widths=d["half_widths"],
            achieved_coverage=d["achieved_coverage"],
            coverage_error=d["coverage_error"],
            tolerance_met=d["tolerance_met"],
            labels=d.get("labels", ()),
            degenerate=d.get("degenerate", ()),
            bisection_steps=d.get("bisection_steps", 0),
        )


@dataclass
class _Standardized:
    """Region problem reduced to a correlation matrix and unit half-widths."""

    nu: np.ndarray
    se: np.ndarray
    corr: np.ndarray
    labels: tuple[str, ...] = field(default_factory=tuple)

    @property
    def p(self) -> int:
        return self.nu.size


def _standardize(estimate: JointEstimate, acov: AsymptoticCovariance) -> _Standardized:
    nu = np.asarray(estimate.nu_hat, dtype=float)
    cov = np.asarray(acov.assembled, dtype=float)
    if cov.shape != (nu.size, nu.size):
        raise RegionError(f"covariance shape {cov.shape} does not match p={nu.size}")
    return standardize_arrays(nu, cov, acov.n, tuple(estimate.spec.labels()))


def standardize_arrays(nu, cov, n, labels=()) -> _Standardized:
    nu = np.asarray(nu, dtype=float)
    cov = np.asarray(cov, dtype=float)
    var = np.diag(cov)
    if np.any(~(var > 0)) or not np.all(np.isfinite(cov)):
        raise RegionError("asymptotic covariance must have strictly positive finite diagonal")
    sd = np.sqrt(var)
    corr = cov / np.outer(sd, sd)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    try:
        cholesky_reordered(corr, np.full(nu.size, -1.0), np.full(nu.size, 1.0))
    except FactorizationError as exc:
        raise RegionError(f"asymptotic covariance is not positive definite: {exc}") from exc
    return _Standardized(nu=nu, se=sd / math.sqrt(n), corr=corr, labels=tuple(labels))


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise RegionError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _coverage(std: _Standardized, z: float, abs_tol: float, seed: int) -> MvnResult:
    p = std.p
    problem = MvnProblem(np.zeros(p), std.corr, np.full(p, -z), np.full(p, z))
    res = mvn_rectangle_probability(problem, abs_tol=abs_tol, seed=seed)
    if not res.tolerance_met:
        warnings.warn(
            f"MVN probability error {res.error_estimate:.2g} exceeds tolerance {abs_tol:.2g} "
            f"at z={z:.6g}",
            ToleranceWarning,
            stacklevel=3,
        )
    return res


def _build(std, method, alpha, z, cov: MvnResult, steps=0) -> ConfidenceRegion:
    return ConfidenceRegion(
        method=method,
        alpha=alpha,
        z=float(z),
        estimate=std.nu,
        half_widths=z * std.se,
        achieved_coverage=cov.probability,
        coverage_error=cov.error_estimate,
        tolerance_met=cov.tolerance_met,
        labels=std.labels,
        bisection_steps=steps,
    )


def uncorrected_z(alpha: float) -> float:
    return std_normal_quantile(1.0 - alpha / 2.0)


def bonferroni_z(alpha: float, p: int) -> float:
    return std_normal_quantile(1.0 - alpha / (2.0 * p))


def region_at(
    std: _Standardized,
    method: RegionMethod,
    alpha: float,
    z: float,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int = 0,
) -> ConfidenceRegion:
    return _build(std, method, alpha, z, _coverage(std, z, abs_tol, seed))


def uncorrected_region(
    estimate: JointEstimate,
    acov: AsymptoticCovariance,
    alpha: float,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int = 0,
) -> ConfidenceRegion:
    alpha = _check_alpha(alpha)
    std = _standardize(estimate, acov)
    return region_at(std, RegionMethod.UNCORRECTED, alpha, uncorrected_z(alpha), abs_tol, seed)


def bonferroni_region(
    estimate: JointEstimate,
    acov: AsymptoticCovariance,
    alpha: float,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int = 0,
) -> ConfidenceRegion:
    alpha = _check_alpha(alpha)
    std = _standardize(estimate, acov)
    return region_at(std, RegionMethod.BONFERRONI, alpha, bonferroni_z(alpha, std.p), abs_tol, seed)


def calibrate(
    std: _Standardized,
    alpha: float,
    cov_tol: float = DEFAULT_COV_TOL,
    seed: int = 0,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> ConfidenceRegion:
    """Bisection for the multiplier whose region has plug-in coverage 1-alpha.

    All evaluations share ``seed`` so the estimated coverage is a fixed,
    monotone function of z and the search cannot stall on integration noise.
    """
    alpha = _check_alpha(alpha)
    if cov_tol < 2 * abs_tol:
        raise RegionError(f"cov_tol {cov_tol} must be at least twice abs_tol {abs_tol}")
    target = 1.0 - alpha
    lo = uncorrected_z(alpha)
    hi = bonferroni_z(alpha, std.p)
    res = _coverage(std, lo, abs_tol, seed)
    if std.p == 1 or res.probability >= target - cov_tol:
        return _build(std, RegionMethod.SIMULTANEOUS, alpha, lo, res)
    steps = 0
    z = lo
    while hi - lo >= BRACKET_TOL:
        z = 0.5 * (lo + hi)
        res = _coverage(std, z, abs_tol, seed)
        steps += 1
        if abs(res.probability - target) <= cov_tol:
            break
        if res.probability < target:
            lo = z
        else:
            hi = z
    return _build(std, RegionMethod.SIMULTANEOUS, alpha, z, res, steps)


def simultaneous_region(
    estimate: JointEstimate,
    acov: AsymptoticCovariance,
    alpha: float,
    cov_tol: float = DEFAULT_COV_TOL,
    seed: int = 0,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> ConfidenceRegion:
    return calibrate(_standardize(estimate, acov), alpha, cov_tol, seed, abs_tol)


def all_regions(
    estimate: JointEstimate,
    acov: AsymptoticCovariance,
    alpha: float,
    cov_tol: float = DEFAULT_COV_TOL,
    seed: int = 0,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> dict[RegionMethod, ConfidenceRegion]:
    """Uncorrected, simultaneous and Bonferroni regions sharing one standardization."""
    alpha = _check_alpha(alpha)
    std = _standardize(estimate, acov)
    return {
        RegionMethod.UNCORRECTED: region_at(
            std, RegionMethod.UNCORRECTED, alpha, uncorrected_z(alpha), abs_tol, seed
        ),
        RegionMethod.SIMULTANEOUS: calibrate(std, alpha, cov_tol, seed, abs_tol),
        RegionMethod.BONFERRONI: region_at(
            std, RegionMethod.BONFERRONI, alpha, bonferroni_z(alpha, std.p), abs_tol, seed
        ),
    }
