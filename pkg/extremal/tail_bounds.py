"""
Tail constants and log-tail slopes of linear combinations l'X of independent
regularly varying variables, plus the empirical log-survival slope they are
checked against.

Slowly varying factors L(.) are treated as constants: every slope here is a pure
power-law exponent and the L terms end up in free intercepts.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from functional import seq
from scipy import stats

from extremal.distributions import (
    BalanceWeights,
    DistributionSpec,
    balance,
    parse_spec,
    sample,
    tail_index,
)
from extremal.errors import (
    DataError,
    InsufficientTailDataError,
    NotRegularlyVaryingError,
    ParameterDomainError,
)
from extremal.util import derive_rng

logger = logging.getLogger("extremal")

MIN_SAMPLE_SIZE = 100
MIN_EXCEEDANCES = 20
DEFAULT_TAIL_FRACTION = 0.02
DEFAULT_GRID_POINTS = 50
# survival estimates resting on fewer points are left out of the grid fit
MIN_GRID_COUNT = 10


@dataclass(frozen=True)
class Term:
    coefficient: float
    spec: DistributionSpec
    balance: Optional[BalanceWeights] = None

    def __post_init__(self):
        object.__setattr__(self, "spec", parse_spec(self.spec))
        object.__setattr__(self, "coefficient", float(self.coefficient))
        if not math.isfinite(self.coefficient):
            raise ParameterDomainError(f"coefficient must be finite, got {self.coefficient}")
        if self.balance is None and tail_index(self.spec).present:
            object.__setattr__(self, "balance", balance(self.spec))

    def as_dict(self) -> Dict:
        d = {"coefficient": self.coefficient, "spec": self.spec.notation()}
        if self.balance is not None:
            d["balance"] = {"p": self.balance.p, "q": self.balance.q}
        return d


@dataclass(frozen=True)
class LinearCombinationSpec:
    terms: Tuple[Term, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ParameterDomainError("a linear combination needs at least one term")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, pairs: Sequence[Tuple[float, Union[str, DistributionSpec]]]) -> "LinearCombinationSpec":
        """LinearCombinationSpec.of([(1, "P(2.414,1)"), (1 / 3, "C(0,1)")])"""
        return cls(tuple(Term(c, s) for c, s in pairs))

    @classmethod
    def from_dict(cls, d: Mapping) -> "LinearCombinationSpec":
        terms = []
        for t in d["terms"]:
            weights = t.get("balance")
            terms.append(
                Term(
                    t["coefficient"],
                    parse_spec(t["spec"]),
                    BalanceWeights(weights["p"], weights["q"]) if weights else None,
                )
            )
        return cls(tuple(terms))

    def as_dict(self) -> Dict:
        return {"terms": [t.as_dict() for t in self.terms]}

    @property
    def coefficients(self) -> List[float]:
        return [t.coefficient for t in self.terms]

    def __len__(self):
        return len(self.terms)


@dataclass(frozen=True)
class TailSlopeReport:
    slope_dominant: float
    slope_sum: float
    slope_moment: float
    empirical_slope: Optional[float] = None
    empirical_intercept: Optional[float] = None
    threshold: Optional[float] = None

    def as_dict(self) -> Dict:
        return {
            "slope_dominant": self.slope_dominant,
            "slope_sum": self.slope_sum,
            "slope_moment": self.slope_moment,
            "empirical_slope": self.empirical_slope,
            "empirical_intercept": self.empirical_intercept,
            "threshold": self.threshold,
        }


def linear_combination_tail_constant(
    coeffs: Sequence[float], alpha: float, weights: BalanceWeights
) -> Tuple[float, float]:
    """
    (sum p (rho)_+^alpha + q (rho)_-^alpha, sum |rho|^alpha), the constants of
    P(sum rho_n X_n > x) ~ c+ P(|X| > x) and P(|sum rho_n X_n| > x) ~ c P(|X| > x)
    """
    coeffs = [float(c) for c in coeffs]
    if not coeffs:
        raise ParameterDomainError("tail constant needs at least one coefficient")
    if not alpha > 0:
        raise ParameterDomainError(f"tail index must be positive, got {alpha}")
    positive = 0.0
    absolute = 0.0
    for rho in coeffs:
        positive += weights.p * max(rho, 0.0) ** alpha + weights.q * max(-rho, 0.0) ** alpha
        absolute += abs(rho) ** alpha
    return positive, absolute


def _tail_indices(spec: LinearCombinationSpec) -> List[float]:
    indices = []
    for t in spec.terms:
        a = tail_index(t.spec)
        if not a.present:
            raise NotRegularlyVaryingError(f"{t.spec} has no tail index, the tail slopes are undefined")
        indices.append(a.value)
    return indices


def dominant_term(spec: LinearCombinationSpec) -> Term:
    """the term with the minimal tail index, the first one on ties"""
    alphas = _tail_indices(spec)
    term = spec.terms[int(np.argmin(alphas))]
    if term.coefficient == 0:
        raise ParameterDomainError(f"the heaviest term {term.spec} has a zero coefficient")
    return term


def slope_dominant(spec: LinearCombinationSpec) -> float:
    return -tail_index(dominant_term(spec).spec).value


def sum_bound_scale(spec: LinearCombinationSpec) -> float:
    """n * l*, l* = min |l_i|, the scale the summation bound is written in"""
    return len(spec) * min(abs(c) for c in spec.coefficients)


def slope_sum_bound(spec: LinearCombinationSpec) -> float:
    return -sum(_tail_indices(spec))


def slope_moment_bound(spec: LinearCombinationSpec) -> float:
    # magnitude convention: the bound is quoted as a negative slope
    alphas = _tail_indices(spec)
    first = sum(alphas)
    second = sum(a * a for a in alphas)
    return -abs(first - 0.5 * second) / len(alphas)


def _log_tail_fit(x: np.ndarray, tail_fraction: float, grid_points: Optional[int]):
    x = np.asarray(x, dtype=float).ravel()
    x = x[np.isfinite(x)]
    n = len(x)
    if n < MIN_SAMPLE_SIZE:
        raise DataError(f"log-tail slope needs at least {MIN_SAMPLE_SIZE} observations, got {n}")
    if not 0 < tail_fraction < 0.5:
        raise ParameterDomainError(f"tail fraction must lie in (0, 0.5), got {tail_fraction}")
    ordered = np.sort(x)
    threshold = float(np.quantile(ordered, 1.0 - tail_fraction))
    tail = np.unique(ordered[ordered > threshold])
    tail = tail[tail > 0]
    if len(tail) < MIN_EXCEEDANCES:
        raise InsufficientTailDataError(
            f"{len(tail)} distinct positive exceedances of {threshold:g}, need {MIN_EXCEEDANCES}"
        )
    counts = n - np.searchsorted(ordered, tail, side="right")
    # the largest point has empirical survival 0
    points, counts = tail[counts > 0], counts[counts > 0]
    if grid_points:
        supported = points[counts >= MIN_GRID_COUNT]
        if len(supported) >= 2 and supported[-1] > points[0]:
            points = np.geomspace(points[0], supported[-1], grid_points)
            counts = n - np.searchsorted(ordered, points, side="right")
    fit = stats.linregress(np.log(points), np.log(counts / n))
    logger.debug(
        "log-tail fit over %d points above %g: slope %g", len(points), threshold, fit.slope
    )
    return float(fit.slope), float(fit.intercept), threshold


def empirical_log_tail_slope(
    sample_values: Sequence[float],
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    grid_points: Optional[int] = DEFAULT_GRID_POINTS,
) -> Tuple[float, float]:
    """
    Least-squares slope and intercept of ln P(X > x) against ln x above the
    (1 - tail_fraction) sample quantile, with P estimated by strict counts.

    By default the empirical survival is read off at `grid_points` geometrically
    spaced points, which weighs every decade of the tail alike; grid_points=None
    regresses over every distinct order statistic instead.
    """
    slope, intercept, _ = _log_tail_fit(sample_values, tail_fraction, grid_points)
    return slope, intercept


def slope_report(
    spec: LinearCombinationSpec,
    sample_values: Optional[Sequence[float]] = None,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    grid_points: Optional[int] = DEFAULT_GRID_POINTS,
) -> TailSlopeReport:
    empirical = (None, None, None)
    if sample_values is not None:
        empirical = _log_tail_fit(sample_values, tail_fraction, grid_points)
    return TailSlopeReport(
        slope_dominant=slope_dominant(spec),
        slope_sum=slope_sum_bound(spec),
        slope_moment=slope_moment_bound(spec),
        empirical_slope=empirical[0],
        empirical_intercept=empirical[1],
        threshold=empirical[2],
    )


def bound_curves(
    spec: LinearCombinationSpec, x_grid: Sequence[float], intercept: float = 0.0
) -> List[Dict[str, float]]:
    """
    Right-hand sides of the three log-tail statements on a grid of x > 0, the
    slowly varying terms folded into `intercept`. Rows are plot-ready.
    """
    x = np.asarray(x_grid, dtype=float)
    if np.any(x <= 0):
        raise ParameterDomainError("bound curves are evaluated at positive x only")
    term = dominant_term(spec)
    l_star = abs(term.coefficient)
    weight = term.balance.p if term.coefficient > 0 else term.balance.q
    dominant_offset = math.log(weight) if weight > 0 else -math.inf
    scale = sum_bound_scale(spec)
    norm = math.sqrt(sum(c * c for c in spec.coefficients))
    a, b, c = slope_dominant(spec), slope_sum_bound(spec), slope_moment_bound(spec)
    rows = []
    for value in x:
        rows.append(
            {
                "x": float(value),
                "dominant": a * math.log(value / l_star) + dominant_offset + intercept,
                "sum_bound": b * math.log(value / scale) + intercept,
                "moment_bound": c * math.log(value / norm) + math.log(len(spec)) + intercept,
            }
        )
    return rows


def sample_linear_combination(spec: LinearCombinationSpec, n: int, seed: int) -> np.ndarray:
    """n draws of l'X, term i drawn from its own sub-stream of `seed`"""
    # pyfunctional wraps an ndarray result of reduce in a Sequence; unwrap it
    return np.asarray(
        seq(spec.terms)
        .enumerate()
        .map(lambda it: it[1].coefficient * sample(it[1].spec, n, derive_rng(seed, "term", it[0])))
        .reduce(lambda acc, draws: acc + draws)
        .to_list(),
        dtype=float,
    )
