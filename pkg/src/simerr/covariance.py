"""Estimators for the long-run covariance of the mean/indicator process and
the plug-in asymptotic covariance of the joint estimate.

IID output uses the ordinary sample covariance. Markov chain output uses
non-overlapping batch means; trailing rows that do not fill a batch are
dropped so batch boundaries stay aligned with the first draw.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .estimation import (
    DensityAtQuantiles,
    EstimandSpec,
    JointEstimate,
    SampleMatrix,
    build_s_process,
    estimate_density_at_quantiles,
)
from .exceptions import (
    BatchConfigError,
    BatchMeansWarning,
    DegenerateDensityError,
    InsufficientDataError,
    NumericError,
)


class CovMode(str, enum.Enum):
    IID = "iid"
    MCMC = "mcmc"


@dataclass(frozen=True)
class CovModeConfig:
    """``batch_size=None`` means AUTO, i.e. floor(sqrt(n))."""

    mode: CovMode = CovMode.IID
    batch_size: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", CovMode(self.mode))
        if self.batch_size is not None:
            b = int(self.batch_size)
            if b < 1:
                raise BatchConfigError(f"batch size must be positive, got {b}")
            object.__setattr__(self, "batch_size", b)

    def resolve(self, n: int) -> tuple[int, int]:
        """(batch size, number of batches) for an n-row process."""
        b = math.isqrt(n) if self.batch_size is None else self.batch_size
        a = n // b if b > 0 else 0
        if a < 2:
            raise BatchConfigError(
                f"batch size {b} leaves {a} batch(es) from n={n}; need at least 2"
            )
        return b, a


@dataclass(frozen=True, eq=False)
class AsymptoticCovariance:
    sigma_hat: np.ndarray
    lambda_inv: np.ndarray
    assembled: np.ndarray
    n: int
    densities: DensityAtQuantiles | None = None
    batch: tuple[int, int] | None = None

    @property
    def p(self) -> int:
        return self.assembled.shape[0]

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.assembled) / self.n)

    def correlation(self) -> np.ndarray:
        sd = np.sqrt(np.diag(self.assembled))
        return self.assembled / np.outer(sd, sd)


def _centered_crossprod(x: np.ndarray) -> np.ndarray:
    """Sum over rows of (x_j - xbar)(x_j - xbar)'.

    Each entry is a contiguous 1-D pairwise sum, so the result does not depend
    on BLAS threading.
    """
    x = np.asarray(x, dtype=float)
    cols = [np.ascontiguousarray(x[:, i]) for i in range(x.shape[1])]
    centered = [c - c.sum() / c.size for c in cols]
    p = len(cols)
    out = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            out[i, j] = out[j, i] = (centered[i] * centered[j]).sum()
    return out


def sample_covariance_iid(s_process: np.ndarray) -> np.ndarray:
    s = np.asarray(s_process, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    n = s.shape[0]
    if n < 2:
        raise InsufficientDataError(f"sample covariance needs n >= 2, got {n}")
    return _centered_crossprod(s) / (n - 1)


def batch_means_covariance(
    s_process: np.ndarray, config: CovModeConfig | None = None
) -> np.ndarray:
    """Batch means estimate b/(a-1) * sum_k (Sbar_k - Sbar)(Sbar_k - Sbar)'."""
    config = config or CovModeConfig(CovMode.MCMC)
    s = np.asarray(s_process, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    n, p = s.shape
    b, a = config.resolve(n)
    if a <= p:
        warnings.warn(
            f"{a} batches for {p} estimands: batch means covariance is rank deficient; "
            "use a longer run or an explicit smaller batch size",
            BatchMeansWarning,
            stacklevel=2,
        )
    elif p > a / 20:
        warnings.warn(
            f"{p} estimands with only {a} batches; batch means may be biased downward",
            BatchMeansWarning,
            stacklevel=2,
        )
    batch_means = s[: a * b].reshape(a, b, p).mean(axis=1)
    return b * _centered_crossprod(batch_means) / (a - 1)


def assemble_asymptotic_covariance(
    sigma_hat: np.ndarray,
    densities: DensityAtQuantiles | None,
    spec: EstimandSpec,
    n: int,
) -> AsymptoticCovariance:
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    p = spec.p
    if sigma_hat.shape != (p, p):
        raise NumericError(f"sigma_hat has shape {sigma_hat.shape}, expected {(p, p)}")
    f = np.empty(0) if densities is None else np.asarray(densities.values, dtype=float)
    if f.size != spec.p2:
        raise NumericError(f"{f.size} density values for {spec.p2} quantile targets")
    if np.any(~(f > 0)):
        raise DegenerateDensityError("density values must be strictly positive")
    scale = np.concatenate([np.ones(spec.p1), 1.0 / f])
    assembled = sigma_hat * np.outer(scale, scale)
    assembled = 0.5 * (assembled + assembled.T)
    if not np.all(np.isfinite(assembled)):
        raise NumericError("asymptotic covariance has non-finite entries")
    return AsymptoticCovariance(
        sigma_hat=sigma_hat,
        lambda_inv=np.diag(scale),
        assembled=assembled,
        n=int(n),
        densities=densities,
    )


def estimate_asymptotic_covariance(
    samples: SampleMatrix,
    spec: EstimandSpec,
    estimate: JointEstimate,
    config: CovModeConfig | None = None,
) -> AsymptoticCovariance:
    """S-process, Sigma estimate, kernel densities and assembly in one call."""
    config = config or CovModeConfig()
    s = build_s_process(samples, spec, estimate)
    if config.mode is CovMode.IID:
        sigma = sample_covariance_iid(s)
        batch = None
    else:
        sigma = batch_means_covariance(s, config)
        batch = config.resolve(samples.n)
    dens = estimate_density_at_quantiles(samples, spec, estimate) if spec.p2 else None
    acov = assemble_asymptotic_covariance(sigma, dens, spec, samples.n)
    return AsymptoticCovariance(
        sigma_hat=acov.sigma_hat,
        lambda_inv=acov.lambda_inv,
        assembled=acov.assembled,
        n=acov.n,
        densities=dens,
        batch=batch,
    )
