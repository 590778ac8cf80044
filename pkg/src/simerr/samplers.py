"""Reference samplers and exact targets for the worked examples.

* a three-component normal mixture, sampled IID or by random-walk
  Metropolis-Hastings, with its mean and quantiles computed from the
  closed-form CDF;
* the eight-schools hierarchical normal model, sampled by a deterministic
  scan Gibbs sampler.

Every sampler takes an explicit seed (an int or ``numpy.random.SeedSequence``)
and uses its own ``numpy.random.Generator``; nothing touches global RNG state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .estimation import SampleMatrix


@dataclass(frozen=True)
class MixtureSpec:
    weights: tuple[float, ...] = (0.3, 0.5, 0.2)
    means: tuple[float, ...] = (1.0, 5.0, 11.0)
    variances: tuple[float, ...] = (2.5, 4.0, 3.0)

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        m = tuple(float(v) for v in self.means)
        v = tuple(float(x) for x in self.variances)
        if not len(w) == len(m) == len(v) or not w:
            raise ValueError("weights, means and variances must have equal nonzero length")
        if any(x < 0 for x in w) or not math.isclose(sum(w), 1.0, abs_tol=1e-12):
            raise ValueError(f"weights must be nonnegative and sum to 1, got {w}")
        if any(x <= 0 for x in v):
            raise ValueError("component variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @property
    def sds(self) -> tuple[float, ...]:
        return tuple(math.sqrt(v) for v in self.variances)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, m, s in zip(self.weights, self.means, self.sds):
            out += w * np.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, m, s in zip(self.weights, self.means, self.sds):
            out += w * ndtr((x - m) / s)
        return out

    def mean(self) -> float:
        return math.fsum(w * m for w, m in zip(self.weights, self.means))


def _bisect_cdf(spec: MixtureSpec, q: float, tol: float = 1e-12) -> float:
    lo = min(m - 40 * s for m, s in zip(spec.means, spec.sds))
    hi = max(m + 40 * s for m, s in zip(spec.means, spec.sds))
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if spec.cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mixture_truth(
    spec: MixtureSpec | None = None, quantile_targets: Sequence[float] = (0.1, 0.9)
) -> tuple[float, np.ndarray]:
    """Exact mean and quantiles (by bisection on the mixture CDF)."""
    spec = spec or MixtureSpec()
    qs = np.array([_bisect_cdf(spec, float(q)) for q in quantile_targets])
    return spec.mean(), qs


def draw_mixture(spec: MixtureSpec, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """IID draws and the component label of each draw."""
    rng = np.random.default_rng(seed)
    comp = rng.choice(len(spec.weights), size=n, p=spec.weights)
    z = rng.standard_normal(n)
    x = np.asarray(spec.means)[comp] + np.asarray(spec.sds)[comp] * z
    return x, comp


def sample_mixture_iid(spec: MixtureSpec, n: int, seed) -> SampleMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    x, _ = draw_mixture(spec, n, seed)
    return SampleMatrix(x[:, None], ("x",))


@dataclass(frozen=True)
class MhConfig:
    n_draws: int
    seed: int = 0
    proposal_sd: float = 3.0
    initial_state: float = 5.0

    def __post_init__(self):
        if not self.proposal_sd > 0:
            raise ValueError("proposal_sd must be positive")
        if self.n_draws < 1:
            raise ValueError("n_draws must be positive")


def mh_acceptance_probability(spec: MixtureSpec, current: float, proposal: float) -> float:
    """min(1, pi(proposal) / pi(current)) for a symmetric random-walk proposal."""
    pc = float(spec.pdf(current))
    pp = float(spec.pdf(proposal))
    if pc <= 0.0:
        return 1.0 if pp > 0.0 else 0.0
    return min(1.0, pp / pc)


def mh_chain(spec: MixtureSpec, config: MhConfig) -> tuple[np.ndarray, float]:
    """Random-walk chain and its empirical acceptance rate.

    The first element is ``config.initial_state``; the chain has
    ``config.n_draws`` elements in total.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_draws
    steps = rng.normal(0.0, config.proposal_sd, size=n - 1).tolist()
    log_u = np.log(rng.random(n - 1)).tolist()
    # inline density: scalar math is much faster than numpy here
    comps = [
        (w / (s * math.sqrt(2 * math.pi)), m, 1.0 / s)
        for w, m, s in zip(spec.weights, spec.means, spec.sds)
    ]

    def dens(x: float) -> float:
        return sum(c * math.exp(-0.5 * ((x - m) * r) ** 2) for c, m, r in comps)

    out = [0.0] * n
    x = float(config.initial_state)
    px = dens(x)
    out[0] = x
    accepted = 0
    for t in range(n - 1):
        y = x + steps[t]
        py = dens(y)
        # accept with probability min(1, py/px)
        if py > 0.0 and (px <= 0.0 or py >= px or log_u[t] < math.log(py / px)):
            x, px = y, py
            accepted += 1
        out[t + 1] = x
    rate = accepted / (n - 1) if n > 1 else 0.0
    return np.array(out), rate


def sample_mixture_mh(spec: MixtureSpec, config: MhConfig) -> SampleMatrix:
    chain, _ = mh_chain(spec, config)
    return SampleMatrix(chain[:, None], ("x",))


@dataclass(frozen=True, eq=False)
class EightSchoolsData:
    y: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if y.shape != (8,) or sigma.shape != (8,):
            raise ValueError("eight-schools data needs exactly 8 effects and 8 sds")
        if np.any(sigma <= 0):
            raise ValueError("school standard deviations must be positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_json(cls, path) -> "EightSchoolsData":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(raw["y"], raw["sigma"])


def load_eight_schools() -> EightSchoolsData:
    """Rubin (1981) SAT coaching data bundled with the package."""
    raw = json.loads(
        resources.files("simerr").joinpath("data/eight_schools.json").read_text("utf-8")
    )
    return EightSchoolsData(raw["y"], raw["sigma"])


SCHOOL_COLUMNS = tuple(f"theta{j}" for j in range(1, 9)) + ("mu", "tau")


def theta_conditional(y, sigma, mu: float, tau2: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance of theta_j given mu, tau^2 and the data."""
    s2 = np.asarray(sigma) ** 2
    mean = (np.asarray(y) * tau2 + mu * s2) / (tau2 + s2)
    var = 1.0 / (1.0 / s2 + 1.0 / tau2)
    return mean, var


def sample_theta(y, sigma, mu, tau2, z):
    mean, var = theta_conditional(y, sigma, mu, tau2)
    return mean + np.sqrt(var) * z


def sample_mu(theta, tau2, z):
    """mu | theta, tau ~ N(mean(theta), tau^2 / J) under a flat prior on mu."""
    theta = np.asarray(theta)
    return theta.mean() + math.sqrt(tau2 / theta.size) * z


def sample_tau2(theta, mu, chi2):
    """tau^2 | theta, mu ~ Scaled-Inv-chi^2(J-1, sum((theta-mu)^2)/(J-1)).

    ``chi2`` is a chi-square(J-1) variate; the draw is S / chi2.
    """
    s = float(np.sum((np.asarray(theta) - mu) ** 2))
    return s / chi2


def gibbs_eight_schools(
    data: EightSchoolsData,
    n: int,
    seed,
    initial: dict | None = None,
    tau_fixed: float | None = None,
) -> SampleMatrix:
    """Deterministic scan Gibbs sampler: theta, then mu, then tau.

    Columns are theta1..theta8, mu, tau; row 0 is the first post-update state.
    ``tau_fixed`` pins tau (skipping its update), which turns the sampler into
    a two-block Gibbs sampler for the conditional posterior given tau.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    J = data.y.size
    initial = initial or {}
    theta = np.asarray(initial.get("theta", data.y), dtype=float).copy()
    mu = float(initial.get("mu", data.y.mean()))
    tau = float(tau_fixed if tau_fixed is not None else initial.get("tau", data.y.std(ddof=1)))
    tau2 = tau * tau
    z_theta = rng.standard_normal((n, J))
    z_mu = rng.standard_normal(n)
    chi2 = rng.chisquare(J - 1, size=n)
    out = np.empty((n, J + 2))
    for t in range(n):
        theta = sample_theta(data.y, data.sigma, mu, tau2, z_theta[t])
        mu = sample_mu(theta, tau2, z_mu[t])
        if tau_fixed is None:
            tau2 = sample_tau2(theta, mu, chi2[t])
            while not (tau2 > 0.0 and math.isfinite(tau2)):
                # only reachable through underflow of the sum of squares
                tau2 = sample_tau2(theta, mu, rng.chisquare(J - 1))
                if not tau2 > 0.0:
                    tau2 = float(np.finfo(float).tiny)
        out[t, :J] = theta
        out[t, J] = mu
        out[t, J + 1] = math.sqrt(tau2)
    return SampleMatrix(out, SCHOOL_COLUMNS)
