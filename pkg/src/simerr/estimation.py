"""Joint point estimates of means and quantiles, plus the pieces the
asymptotic covariance needs: the mean/indicator process and kernel density
values at the estimated quantiles.

Quantiles are order statistics, not interpolated: the estimate of the
q-quantile of a column with n values is its ceil(n*q)-th smallest value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .exceptions import DegenerateDensityError, InsufficientDataError, SpecError

Selector = Union[int, str]

# densities at or below this are treated as a point mass
DENSITY_FLOOR = float(np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """n draws (rows) of a d-dimensional simulation output (columns)."""

    data: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise SpecError("sample data must be a 2-D array")
        if data.shape[0] < 2:
            raise InsufficientDataError(f"need at least 2 draws, got {data.shape[0]}")
        if not np.all(np.isfinite(data)):
            bad = int(np.argwhere(~np.isfinite(data))[0, 0])
            raise SpecError(f"non-finite value in draw {bad}")
        object.__setattr__(self, "data", data)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != data.shape[1]:
                raise SpecError(
                    f"{len(names)} column names for {data.shape[1]} columns"
                )
            if len(set(names)) != len(names):
                raise SpecError("column names must be unique")
            object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.column_names is not None:
            return self.column_names
        return tuple(f"c{j + 1}" for j in range(self.d))

    def column_index(self, selector: Selector) -> int:
        if isinstance(selector, (int, np.integer)) and not isinstance(selector, bool):
            j = int(selector)
            if not 0 <= j < self.d:
                raise SpecError(f"column index {j} out of range for {self.d} columns")
            return j
        names = self.names()
        if selector in names:
            return names.index(selector)
        raise SpecError(f"unknown column {selector!r}; available: {', '.join(names)}")

    def column(self, selector: Selector) -> np.ndarray:
        return np.ascontiguousarray(self.data[:, self.column_index(selector)])

    def drop_leading(self, k: int) -> "SampleMatrix":
        return SampleMatrix(self.data[k:], self.column_names)


@dataclass(frozen=True)
class EstimandSpec:
    """Which column means and which column quantiles to estimate.

    The estimate vector lists every mean target first, in declaration order,
    followed by every quantile target in declaration order.
    """

    mean_targets: tuple[Selector, ...] = ()
    quantile_targets: tuple[tuple[Selector, float], ...] = ()

    def __post_init__(self):
        means = tuple(self.mean_targets)
        quants = tuple((sel, float(q)) for sel, q in self.quantile_targets)
        if len(means) + len(quants) < 1:
            raise SpecError("at least one mean or quantile target is required")
        for sel, q in quants:
            if not 0.0 < q < 1.0:
                raise SpecError(f"quantile level {q} for {sel!r} must lie strictly in (0, 1)")
        object.__setattr__(self, "mean_targets", means)
        object.__setattr__(self, "quantile_targets", quants)

    @property
    def p1(self) -> int:
        return len(self.mean_targets)

    @property
    def p2(self) -> int:
        return len(self.quantile_targets)

    @property
    def p(self) -> int:
        return self.p1 + self.p2

    def resolve(self, samples: SampleMatrix) -> tuple[list[int], list[int]]:
        """Column indices of the mean targets and of the quantile targets."""
        mean_cols = [samples.column_index(s) for s in self.mean_targets]
        quant_cols = [samples.column_index(s) for s, _ in self.quantile_targets]
        return mean_cols, quant_cols

    def labels(self, samples: SampleMatrix | None = None) -> list[str]:
        def name(sel):
            if samples is not None:
                return samples.names()[samples.column_index(sel)]
            return str(sel)

        out = [f"mean({name(s)})" for s in self.mean_targets]
        out += [f"q{q:g}({name(s)})" for s, q in self.quantile_targets]
        return out


@dataclass(frozen=True, eq=False)
class JointEstimate:
    nu_hat: np.ndarray
    n: int
    spec: EstimandSpec

    @property
    def means(self) -> np.ndarray:
        return self.nu_hat[: self.spec.p1]

    @property
    def quantiles(self) -> np.ndarray:
        return self.nu_hat[self.spec.p1 :]


@dataclass(frozen=True, eq=False)
class DensityAtQuantiles:
    values: np.ndarray
    bandwidths: np.ndarray = field(default_factory=lambda: np.empty(0))


def order_statistic_rank(n: int, q: float) -> int:
    """1-based rank ceil(n*q), guarded against floating error in the product.

    ``10 * 0.3`` evaluates to 3.0000000000000004; the intended rank is 3.
    """
    prod = n * q
    nearest = round(prod)
    if abs(prod - nearest) <= 1e-9 * max(1.0, prod):
        k = int(nearest)
    else:
        k = math.ceil(prod)
    return min(max(k, 1), n)


def compute_means(samples: SampleMatrix, spec: EstimandSpec) -> np.ndarray:
    mean_cols, _ = spec.resolve(samples)
    # contiguous 1-D sums use numpy's pairwise summation
    return np.array([samples.column(j).sum() / samples.n for j in mean_cols])


def compute_quantiles(samples: SampleMatrix, spec: EstimandSpec) -> np.ndarray:
    _, quant_cols = spec.resolve(samples)
    n = samples.n
    out = np.empty(len(quant_cols))
    for i, (j, (_, q)) in enumerate(zip(quant_cols, spec.quantile_targets)):
        k = order_statistic_rank(n, q) - 1
        out[i] = np.partition(samples.column(j), k)[k]
    return out


def joint_estimate(samples: SampleMatrix, spec: EstimandSpec) -> JointEstimate:
    nu = np.concatenate([compute_means(samples, spec), compute_quantiles(samples, spec)])
    return JointEstimate(nu_hat=nu, n=samples.n, spec=spec)


def build_s_process(
    samples: SampleMatrix, spec: EstimandSpec, estimate: JointEstimate
) -> np.ndarray:
    """Rows (g(X_j), I(h(X_j) > quantile estimate)) for j = 1..n."""
    if estimate.nu_hat.shape != (spec.p,) or estimate.n != samples.n:
        raise SpecError(
            f"estimate has length {estimate.nu_hat.size} over n={estimate.n}; "
            f"spec needs length {spec.p} over n={samples.n}"
        )
    mean_cols, quant_cols = spec.resolve(samples)
    s = np.empty((samples.n, spec.p))
    for i, j in enumerate(mean_cols):
        s[:, i] = samples.data[:, j]
    for i, j in enumerate(quant_cols):
        s[:, spec.p1 + i] = samples.data[:, j] > estimate.quantiles[i]
    return s


def silverman_bandwidth(x: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5); falls back to sd when the IQR is 0."""
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0.0:
        spread = sd
    return 0.9 * spread * n ** (-0.2)


def gaussian_kde_at(x: np.ndarray, point: float, bandwidth: float) -> float:
    u = (point - x) / bandwidth
    return float(np.exp(-0.5 * u * u).sum() / (x.size * bandwidth * math.sqrt(2 * math.pi)))


def estimate_density_at_quantiles(
    samples: SampleMatrix, spec: EstimandSpec, estimate: JointEstimate
) -> DensityAtQuantiles:
    """Gaussian-kernel density of each quantile column at its estimated quantile.

    Raises DegenerateDensityError when a column has no spread or the estimate
    falls below DENSITY_FLOOR, since the quantile variance is then unbounded.
    """
    if spec.p2 < 1:
        raise SpecError("density estimation needs at least one quantile target")
    _, quant_cols = spec.resolve(samples)
    values = np.empty(spec.p2)
    bws = np.empty(spec.p2)
    for i, j in enumerate(quant_cols):
        col = samples.column(j)
        bw = silverman_bandwidth(col)
        label = spec.labels(samples)[spec.p1 + i]
        if not bw > 0.0 or not math.isfinite(bw):
            raise DegenerateDensityError(f"{label}: column has no spread (bandwidth {bw})")
        f = gaussian_kde_at(col, estimate.quantiles[i], bw)
        if not f > DENSITY_FLOOR or not math.isfinite(f):
            raise DegenerateDensityError(f"{label}: density estimate {f:.3g} at quantile")
        values[i] = f
        bws[i] = bw
    return DensityAtQuantiles(values=values, bandwidths=bws)
