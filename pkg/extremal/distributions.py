"""
Heavy-tailed families used throughout extremal: Pareto, Cauchy, Weibull and Frechet

Naming follows the study's tables:

    P(alpha, beta)         Pareto, shape alpha, scale beta, support [beta, inf)
    C(theta, gamma)        Cauchy, location theta, scale gamma
    W(k, lambda)           Weibull, shape k, scale lambda
    F(alpha, beta, sigma)  Frechet, location alpha, shape beta, scale sigma

Densities, survival functions and quantiles come from scipy.stats; sampling is
inverse-CDF on uniforms so a given generator state always yields the same draws.
"""
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from functional import seq
from scipy import optimize, stats

from extremal.errors import (
    DataError,
    DegenerateError,
    InsufficientTailDataError,
    NotRegularlyVaryingError,
    OptimizationError,
    ParameterDomainError,
)

logger = logging.getLogger("extremal")

SeedLike = Union[None, int, np.random.Generator]

MAX_ITERATIONS = 200
GRADIENT_TOLERANCE = 1e-8
MIN_FIT_SIZE = 10

# open unit interval, keeps isf finite for families unbounded on both sides
_U_LOW = np.finfo(float).tiny
_U_HIGH = 1.0 - np.finfo(float).epsneg


class Family(str, Enum):
    PARETO = "pareto"
    CAUCHY = "cauchy"
    WEIBULL = "weibull"
    FRECHET = "frechet"

    @classmethod
    def parse(cls, value: Union[str, "Family"]) -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower()
        if key in _LETTERS:
            return _LETTERS[key]
        try:
            return cls(key)
        except ValueError:
            raise ParameterDomainError(
                f"unknown family {value!r}, expected one of {[f.value for f in cls]}"
            )


_LETTERS = {
    "p": Family.PARETO,
    "c": Family.CAUCHY,
    "w": Family.WEIBULL,
    "f": Family.FRECHET,
}

PARAM_NAMES: Dict[Family, Tuple[str, ...]] = {
    Family.PARETO: ("shape", "scale"),
    Family.CAUCHY: ("location", "scale"),
    Family.WEIBULL: ("shape", "scale"),
    Family.FRECHET: ("location", "shape", "scale"),
}

_POSITIVE = {"shape", "scale"}

_NOTATION = re.compile(r"^\s*([PCWFpcwf])\s*\(([^()]*)\)\s*$")


@dataclass(frozen=True)
class DistributionSpec:
    family: Family
    params: Tuple[float, ...]

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        names = PARAM_NAMES[family]
        if len(self.params) != len(names):
            raise ParameterDomainError(
                f"{family.value} takes parameters {names}, got {tuple(self.params)}"
            )
        params = tuple(float(p) for p in self.params)
        for name, value in zip(names, params):
            if not math.isfinite(value):
                raise ParameterDomainError(f"{family.value} {name} must be finite, got {value}")
            if name in _POSITIVE and value <= 0:
                raise ParameterDomainError(
                    f"{family.value} {name} must be strictly positive, got {value}"
                )
        object.__setattr__(self, "params", params)

    @classmethod
    def pareto(cls, shape: float, scale: float = 1.0) -> "DistributionSpec":
        return cls(Family.PARETO, (shape, scale))

    @classmethod
    def cauchy(cls, location: float = 0.0, scale: float = 1.0) -> "DistributionSpec":
        return cls(Family.CAUCHY, (location, scale))

    @classmethod
    def weibull(cls, shape: float, scale: float = 1.0) -> "DistributionSpec":
        return cls(Family.WEIBULL, (shape, scale))

    @classmethod
    def frechet(cls, location: float, shape: float, scale: float) -> "DistributionSpec":
        return cls(Family.FRECHET, (location, shape, scale))

    def param(self, name: str) -> float:
        return self.params[PARAM_NAMES[self.family].index(name)]

    @property
    def named_params(self) -> Dict[str, float]:
        return dict(zip(PARAM_NAMES[self.family], self.params))

    @property
    def n_params(self) -> int:
        return len(self.params)

    def frozen(self):
        """scipy frozen distribution with the same law"""
        p = self.named_params
        if self.family is Family.PARETO:
            return stats.pareto(b=p["shape"], scale=p["scale"])
        if self.family is Family.CAUCHY:
            return stats.cauchy(loc=p["location"], scale=p["scale"])
        if self.family is Family.WEIBULL:
            return stats.weibull_min(c=p["shape"], scale=p["scale"])
        return stats.invweibull(c=p["shape"], loc=p["location"], scale=p["scale"])

    def notation(self) -> str:
        letter = self.family.value[0].upper()
        return f"{letter}({','.join(f'{v:g}' for v in self.params)})"

    def as_dict(self) -> Dict:
        return {"family": self.family.value, "params": self.named_params}

    def __str__(self):
        return self.notation()


@dataclass(frozen=True)
class TailIndex:
    value: Optional[float] = None

    @property
    def present(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class BalanceWeights:
    p: float = 1.0
    q: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ParameterDomainError(f"balance weights must lie in [0, 1], got p={self.p}, q={self.q}")
        if abs(self.p + self.q - 1.0) > 1e-12:
            raise ParameterDomainError(f"balance weights must sum to 1, got p={self.p}, q={self.q}")

    def swapped(self) -> "BalanceWeights":
        return BalanceWeights(p=self.q, q=self.p)


@dataclass(frozen=True)
class FitResult:
    spec: DistributionSpec
    log_likelihood: float
    aic: float
    bic: float
    sample_size: int
    iterations: int = 0

    @classmethod
    def from_log_likelihood(
        cls, spec: DistributionSpec, log_likelihood: float, sample_size: int, iterations: int = 0
    ) -> "FitResult":
        k = spec.n_params
        return cls(
            spec=spec,
            log_likelihood=log_likelihood,
            aic=2 * k - 2 * log_likelihood,
            bic=k * math.log(sample_size) - 2 * log_likelihood,
            sample_size=sample_size,
            iterations=iterations,
        )

    def as_dict(self) -> Dict:
        return {
            "model": self.spec.notation(),
            "family": self.spec.family.value,
            "params": self.spec.named_params,
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "bic": self.bic,
            "sample_size": self.sample_size,
        }


@dataclass
class ModelComparison:
    fits: Dict[str, FitResult] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def best_aic(self) -> Optional[str]:
        if not self.fits:
            return None
        return min(self.fits, key=lambda f: self.fits[f].aic)

    @property
    def best_bic(self) -> Optional[str]:
        if not self.fits:
            return None
        return min(self.fits, key=lambda f: self.fits[f].bic)

    @property
    def best_model(self) -> Optional[str]:
        # the tables mark AIC and BIC winners separately; AIC decides the model column
        best = self.best_aic
        return self.fits[best].spec.notation() if best else None


def parse_spec(value: Union[str, Mapping, DistributionSpec]) -> DistributionSpec:
    """
    Accepts "P(3,1)" style notation, {"family": ..., "params": {...}} mappings
    (params as a mapping by name or a positional list) or a spec.
    """
    if isinstance(value, DistributionSpec):
        return value
    if isinstance(value, str):
        m = _NOTATION.match(value)
        if not m:
            raise ParameterDomainError(f"cannot parse distribution {value!r}, expected e.g. 'P(3,1)'")
        try:
            params = tuple(float(p) for p in m.group(2).split(","))
        except ValueError:
            raise ParameterDomainError(f"non-numeric parameter in {value!r}")
        return DistributionSpec(Family.parse(m.group(1)), params)
    if isinstance(value, Mapping):
        family = Family.parse(value["family"])
        params = value.get("params", {})
        if isinstance(params, Mapping):
            missing = [n for n in PARAM_NAMES[family] if n not in params]
            if missing:
                raise ParameterDomainError(f"{family.value} is missing parameters {missing}")
            params = tuple(params[n] for n in PARAM_NAMES[family])
        return DistributionSpec(family, tuple(params))
    raise ParameterDomainError(f"cannot build a distribution from {value!r}")


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def quantile(spec: DistributionSpec, p):
    return spec.frozen().ppf(p)


def survival(spec: DistributionSpec, x):
    return spec.frozen().sf(x)


def log_survival(spec: DistributionSpec, x):
    return spec.frozen().logsf(x)


def inverse_survival(spec: DistributionSpec, u):
    """x with P(X > x) = u; accurate far out in the upper tail"""
    return spec.frozen().isf(np.clip(u, _U_LOW, _U_HIGH))


def sample(spec: DistributionSpec, n: int, seed: SeedLike = None) -> np.ndarray:
    if n < 1:
        raise ParameterDomainError(f"sample size must be positive, got {n}")
    rng = as_generator(seed)
    return inverse_survival(spec, rng.random(int(n)))


def log_likelihood(spec: DistributionSpec, data) -> float:
    with np.errstate(divide="ignore"):
        return float(np.sum(spec.frozen().logpdf(np.asarray(data, dtype=float))))


def tail_index(spec: DistributionSpec) -> TailIndex:
    if spec.family is Family.PARETO or spec.family is Family.FRECHET:
        return TailIndex(spec.param("shape"))
    if spec.family is Family.CAUCHY:
        return TailIndex(1.0)
    return TailIndex(None)


def balance(spec: DistributionSpec) -> BalanceWeights:
    if spec.family is Family.CAUCHY:
        return BalanceWeights(0.5, 0.5)
    if spec.family is Family.WEIBULL:
        raise NotRegularlyVaryingError(f"{spec} has no regularly varying tail")
    return BalanceWeights(1.0, 0.0)


def hill_estimator(data, k: int) -> float:
    """
    Hill estimate of the tail index from the k largest observations,
    alpha = 1 / mean(log(x_(i) / x_(k+1))), i = 1..k
    """
    x = np.sort(np.asarray(data, dtype=float))[::-1]
    if not 1 <= k < len(x):
        raise DataError(f"hill estimator needs 1 <= k < n, got k={k}, n={len(x)}")
    if x[k] <= 0:
        raise InsufficientTailDataError(f"order statistic x_(k+1) = {x[k]} is not positive")
    mean_log_excess = np.mean(np.log(x[:k] / x[k]))
    if mean_log_excess <= 0:
        raise DegenerateError("top order statistics are tied, tail index undefined")
    return float(1.0 / mean_log_excess)


def _clean_sample(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if len(x) < MIN_FIT_SIZE:
        raise DataError(f"fitting needs at least {MIN_FIT_SIZE} observations, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise DataError("sample contains non-finite values")
    return x


def _require_positive(x: np.ndarray, family: Family):
    if np.any(x <= 0):
        raise ParameterDomainError(
            f"{family.value} support is the positive half-line, sample minimum is {x.min()}"
        )


def _fit_pareto(x: np.ndarray) -> Tuple[DistributionSpec, int]:
    _require_positive(x, Family.PARETO)
    scale = float(x.min())
    log_excess = float(np.sum(np.log(x / scale)))
    if log_excess <= 0:
        raise DegenerateError("all observations are equal, pareto shape is undefined")
    return DistributionSpec.pareto(len(x) / log_excess, scale), 0


def _fit_weibull(x: np.ndarray) -> Tuple[DistributionSpec, int]:
    _require_positive(x, Family.WEIBULL)
    logs = np.log(x)
    top = logs.max()
    centered = logs - top
    mean_log = logs.mean()
    if np.ptp(logs) == 0:
        raise DegenerateError("all observations are equal, weibull shape is undefined")

    # profile score in the shape k, increasing in k
    def score(k):
        w = np.exp(k * centered)
        return np.sum(w * logs) / np.sum(w) - 1.0 / k - mean_log

    def score_prime(k):
        w = np.exp(k * centered)
        sw = np.sum(w)
        m1 = np.sum(w * logs) / sw
        m2 = np.sum(w * logs ** 2) / sw
        return m2 - m1 ** 2 + 1.0 / k ** 2

    start = math.pi / (math.sqrt(6.0) * float(np.std(logs)))
    iterations = 0
    try:
        k, info = optimize.newton(
            score,
            start,
            fprime=score_prime,
            tol=GRADIENT_TOLERANCE,
            maxiter=MAX_ITERATIONS,
            full_output=True,
        )
        iterations = info.iterations
        converged = info.converged and k > 0 and abs(score(k)) < 1e-6
    except (RuntimeError, OverflowError, ZeroDivisionError):
        converged = False
    if not converged:
        logger.debug("weibull newton iteration failed, falling back to bracketing")
        lo, hi = start, start
        while score(lo) > 0 and lo > 1e-8:
            lo /= 2.0
        while score(hi) < 0 and hi < 1e8:
            hi *= 2.0
        if score(lo) > 0 or score(hi) < 0:
            raise OptimizationError("could not bracket the weibull shape", last_iterate=(lo, hi))
        try:
            k, info = optimize.brentq(
                score, lo, hi, xtol=GRADIENT_TOLERANCE, maxiter=MAX_ITERATIONS, full_output=True
            )
        except RuntimeError as e:
            raise OptimizationError(f"weibull shape did not converge: {e}", last_iterate=(lo, hi))
        iterations += info.iterations
    w = np.exp(k * centered)
    scale = math.exp(top + math.log(np.mean(w)) / k)
    return DistributionSpec.weibull(float(k), scale), iterations


def _fit_cauchy(x: np.ndarray) -> Tuple[DistributionSpec, int]:
    n = len(x)
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    spread = (q3 - q1) / 2.0
    if spread <= 0:
        spread = float(np.mean(np.abs(x - median))) or 1.0

    # parameters (location, log scale), mean negative log-likelihood
    def objective(theta):
        z = (x - theta[0]) / math.exp(theta[1])
        return theta[1] + math.log(math.pi) + np.mean(np.log1p(z * z))

    def gradient(theta):
        z = (x - theta[0]) / math.exp(theta[1])
        r = 1.0 + z * z
        g_loc = -np.mean(2.0 * z / r) / math.exp(theta[1])
        g_log_scale = 1.0 - np.mean(2.0 * z * z / r)
        return np.array([g_loc, g_log_scale])

    def hessian(theta):
        s = math.exp(theta[1])
        z = (x - theta[0]) / s
        r = 1.0 + z * z
        h_ll = np.mean(2.0 * (1.0 - z * z) / r ** 2) / s ** 2
        h_ls = np.mean(4.0 * z / r ** 2) / s
        h_ss = np.mean(4.0 * z * z / r ** 2)
        return np.array([[h_ll, h_ls], [h_ls, h_ss]])

    result = optimize.minimize(
        objective,
        np.array([median, math.log(spread)]),
        jac=gradient,
        hess=hessian,
        method="trust-exact",
        options={"gtol": GRADIENT_TOLERANCE, "maxiter": MAX_ITERATIONS},
    )
    if not result.success and np.linalg.norm(gradient(result.x)) > GRADIENT_TOLERANCE * 10:
        raise OptimizationError(
            f"cauchy likelihood did not converge after {result.nit} iterations: {result.message}",
            last_iterate=tuple(result.x),
        )
    logger.debug("cauchy fit on %d points converged in %d iterations", n, result.nit)
    return DistributionSpec.cauchy(float(result.x[0]), math.exp(result.x[1])), int(result.nit)


def _fit_frechet(x: np.ndarray) -> Tuple[DistributionSpec, int]:
    shape, location, scale = stats.invweibull.fit(x)
    if not all(math.isfinite(v) for v in (shape, location, scale)) or shape <= 0 or scale <= 0:
        raise OptimizationError(
            "frechet likelihood did not converge", last_iterate=(location, shape, scale)
        )
    return DistributionSpec.frechet(location, shape, scale), 0


_FITTERS = {
    Family.PARETO: _fit_pareto,
    Family.CAUCHY: _fit_cauchy,
    Family.WEIBULL: _fit_weibull,
    Family.FRECHET: _fit_frechet,
}


def fit_mle(data, family: Union[str, Family]) -> FitResult:
    family = Family.parse(family)
    x = _clean_sample(data)
    spec, iterations = _FITTERS[family](x)
    ll = log_likelihood(spec, x)
    if not math.isfinite(ll):
        raise OptimizationError(f"{family.value} fit produced log-likelihood {ll}", last_iterate=spec.params)
    return FitResult.from_log_likelihood(spec, ll, len(x), iterations)


DEFAULT_FAMILIES = (Family.PARETO, Family.CAUCHY, Family.WEIBULL)


def compare_models(data, families: Iterable[Union[str, Family]] = DEFAULT_FAMILIES) -> ModelComparison:
    comparison = ModelComparison()
    for family in seq(families).map(Family.parse):
        try:
            comparison.fits[family.value] = fit_mle(data, family)
        except (ParameterDomainError, OptimizationError, DegenerateError) as e:
            logger.info("%s fit skipped: %s", family.value, e)
            comparison.failures[family.value] = f"{type(e).__name__}: {e}"
    return comparison


def ks_distance(spec: DistributionSpec, data: Sequence[float]) -> float:
    return float(stats.kstest(np.asarray(data, dtype=float), spec.frozen().cdf).statistic)
