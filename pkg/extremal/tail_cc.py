"""
Tail cross-correlation between threshold exceedances of two series

    tau(k) = [P(Y_{t+k} > y_n | X_t > x_n) - P(Y_{t+k} > y_n)] / [1 - P(X_t > x_n)]

x_n, y_n are empirical quantiles of the full series; every probability is a strict
exceedance count over the same pairs t = 0 .. n-k-1, so the numerator is exactly
zero when the exceedance sets do not overlap more than chance.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from functional import seq

from extremal.distributions import BalanceWeights
from extremal.errors import (
    ConfigurationError,
    DataError,
    DegenerateError,
    ExtremalError,
    ParameterDomainError,
    ShapeError,
    UndefinedConditionalError,
)
from extremal.linear_process import CoefficientScheme, CoupledProcessConfig, coefficients, generate_coupled

logger = logging.getLogger("extremal")

MIN_PAIRS = 20


@dataclass(frozen=True)
class TailCCParams:
    lag: int = 1
    qx: float = 0.9
    qy: float = 0.9

    def __post_init__(self):
        if self.lag < 0:
            raise ParameterDomainError(f"lag must be non-negative, got {self.lag}")
        for name, q in (("qx", self.qx), ("qy", self.qy)):
            if not 0 < q < 1:
                raise ParameterDomainError(f"{name} must lie in (0, 1), got {q}")

    @property
    def identical(self) -> bool:
        return self.qx == self.qy


@dataclass(frozen=True)
class TailCCEstimate:
    tau: float
    threshold_x: float
    threshold_y: float
    n_exceed_x: int
    n_exceed_y: int
    n_joint: int
    n_pairs: int
    standard_error: float
    params: TailCCParams = field(default_factory=TailCCParams)

    def as_dict(self) -> Dict:
        return {
            "lag": self.params.lag,
            "qx": self.params.qx,
            "qy": self.params.qy,
            "tau": self.tau,
            "standard_error": self.standard_error,
            "threshold_x": self.threshold_x,
            "threshold_y": self.threshold_y,
            "n_exceed_x": self.n_exceed_x,
            "n_exceed_y": self.n_exceed_y,
            "n_joint": self.n_joint,
            "n_pairs": self.n_pairs,
        }


def tail_cross_correlation(x: Sequence[float], y: Sequence[float], params: TailCCParams) -> TailCCEstimate:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"series must be one-dimensional and of equal length, got {x.shape} and {y.shape}")
    n = len(x)
    k = params.lag
    if n < k + MIN_PAIRS:
        raise DataError(f"lag {k} needs at least {k + MIN_PAIRS} observations, got {n}")
    threshold_x = float(np.quantile(x, params.qx))
    threshold_y = float(np.quantile(y, params.qy))
    n_pairs = n - k
    exceed_x = x[:n_pairs] > threshold_x
    exceed_y = y[k:] > threshold_y
    n_exceed_x = int(np.count_nonzero(exceed_x))
    n_exceed_y = int(np.count_nonzero(exceed_y))
    n_joint = int(np.count_nonzero(exceed_x & exceed_y))
    if n_exceed_x == 0:
        raise UndefinedConditionalError(f"no exceedance of x threshold {threshold_x:g} at lag {k}")
    if n_exceed_x == n_pairs:
        raise UndefinedConditionalError(f"every x exceeds {threshold_x:g}, denominator vanishes")
    conditional = n_joint / n_exceed_x
    denominator = 1 - n_exceed_x / n_pairs
    tau = (conditional - n_exceed_y / n_pairs) / denominator
    standard_error = math.sqrt(conditional * (1 - conditional) / n_exceed_x) / denominator
    return TailCCEstimate(
        tau=tau,
        threshold_x=threshold_x,
        threshold_y=threshold_y,
        n_exceed_x=n_exceed_x,
        n_exceed_y=n_exceed_y,
        n_joint=n_joint,
        n_pairs=n_pairs,
        standard_error=standard_error,
        params=params,
    )


def quantile_label(qx: float, qy: float) -> str:
    return f"({qx:g},{qy:g})"


@dataclass
class TailCCProfile:
    lags: List[int]
    quantile_pairs: List[Tuple[float, float]]
    cells: Dict[Tuple[int, Tuple[float, float]], TailCCEstimate] = field(default_factory=dict)
    missing: Dict[Tuple[int, Tuple[float, float]], str] = field(default_factory=dict)

    def tau(self, lag: int, pair: Tuple[float, float]) -> Optional[float]:
        cell = self.cells.get((lag, tuple(pair)))
        return cell.tau if cell else None

    def rows(self) -> List[Dict]:
        """one row per quantile pair, one column per lag, None for a missing cell"""
        return [
            dict(
                [("quantiles", quantile_label(*pair))]
                + [(f"lag_{lag}", self.tau(lag, pair)) for lag in self.lags]
            )
            for pair in self.quantile_pairs
        ]

    def long_rows(self) -> List[Dict]:
        return [self.cells[key].as_dict() for key in sorted(self.cells)]


def tail_cc_profile(
    x: Sequence[float],
    y: Sequence[float],
    lags: Sequence[int],
    quantile_pairs: Sequence[Tuple[float, float]],
) -> TailCCProfile:
    pairs = [(float(qx), float(qy)) for qx, qy in quantile_pairs]
    profile = TailCCProfile(lags=[int(k) for k in lags], quantile_pairs=pairs)
    for pair in pairs:
        for lag in profile.lags:
            try:
                profile.cells[(lag, pair)] = tail_cross_correlation(x, y, TailCCParams(lag, *pair))
            except ShapeError:
                raise
            except ExtremalError as e:
                warnings.warn(f"tail cross-correlation at lag {lag}, quantiles {pair} missing: {e}")
                profile.missing[(lag, pair)] = str(e)
    return profile


@dataclass(frozen=True)
class RatioPrediction:
    lag_index: int
    predicted_ratio: float
    alpha_used: float

    def as_dict(self) -> Dict:
        return {"i": self.lag_index, "predicted_ratio": self.predicted_ratio, "alpha": self.alpha_used}


def predicted_ratio(b_scheme: CoefficientScheme, i: int, alpha: float) -> RatioPrediction:
    """tau(i+1) / tau(i) ~ |b_{i+2} / b_{i+1}|^alpha, alpha the perturbation's tail index"""
    if not alpha > 0:
        raise ParameterDomainError(f"tail index must be positive, got {alpha}")
    denominator = b_scheme.coefficient(i + 1)
    if denominator == 0:
        raise DegenerateError(f"b_{i + 1} = 0, the successive ratio is undefined")
    ratio = abs(b_scheme.coefficient(i + 2) / denominator) ** alpha
    return RatioPrediction(lag_index=i, predicted_ratio=ratio, alpha_used=alpha)


def empirical_ratios(estimates: Sequence[TailCCEstimate]) -> List[Optional[float]]:
    """successive tau(i+1) / tau(i), None where tau(i) is zero"""
    taus = [e.tau for e in estimates]
    return [b / a if a != 0 else None for a, b in zip(taus, taus[1:])]


class Regime(str, Enum):
    IID_IDENTICAL = "iid-identical"
    NONIID_IDENTICAL = "noniid-identical"
    IID_DISTINCT = "iid-distinct"
    NONIID_DISTINCT = "noniid-distinct"

    @property
    def iid(self) -> bool:
        return self in (Regime.IID_IDENTICAL, Regime.IID_DISTINCT)

    @property
    def identical(self) -> bool:
        return self in (Regime.IID_IDENTICAL, Regime.NONIID_IDENTICAL)


@dataclass(frozen=True)
class ConditionReport:
    regime: Regime
    i: int
    lhs: float
    rhs: float
    satisfied: bool
    coefficient_ratio: float
    coefficient_ratio_below_one: bool

    def as_dict(self) -> Dict:
        return {
            "regime": self.regime.value,
            "i": self.i,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
            "coefficient_ratio": self.coefficient_ratio,
            "coefficient_ratio_below_one": self.coefficient_ratio_below_one,
        }


def quantile_ratio_term(x: float, y: float, alpha: float) -> float:
    """(x / y)^-alpha, the slowly varying ratio L(x)/L(y) taken as 1"""
    if x <= 0 or y <= 0:
        raise ParameterDomainError(f"thresholds must be positive, got x={x}, y={y}")
    return (x / y) ** (-alpha)


def monotonicity_conditions(
    b_scheme: CoefficientScheme,
    a_scheme: CoefficientScheme,
    alpha0: float,
    weights: BalanceWeights,
    i: int,
    regime: Regime,
    quantile_ratio: Optional[float] = None,
) -> ConditionReport:
    """
    Evaluates the sufficient condition for tau(i+1) <= tau(i) of the given regime.

        iid-identical     |b_{i+2}| / |b_{i+1}| < 1
        noniid-*          (|b_{i+2}|^a0 - |b_{i+1}|^a0) / [p (a_1)_+^a0 + q (a_1)_-^a0]
        iid-distinct      (|b_{i+2}|^a0 - |b_{i+1}|^a0) / sum_j [p (b_j)_+^a0 + q (b_j)_-^a0]

    compared with 1 for identical quantiles and with `quantile_ratio`, the
    (x/y)^-alpha L(x)/L(y) term at the realized thresholds, for distinct ones.
    """
    regime = Regime(regime)
    if not alpha0 > 0:
        raise ParameterDomainError(f"tail index must be positive, got {alpha0}")
    b1 = b_scheme.coefficient(i + 1)
    b2 = b_scheme.coefficient(i + 2)
    if b1 == 0:
        raise DegenerateError(f"b_{i + 1} = 0, the coefficient ratio is undefined")
    coefficient_ratio = abs(b2) / abs(b1)

    if regime.identical:
        rhs = 1.0
    else:
        if quantile_ratio is None:
            raise ConfigurationError(f"regime {regime.value} needs the quantile ratio term")
        rhs = float(quantile_ratio)

    if regime is Regime.IID_IDENTICAL:
        lhs = coefficient_ratio
    else:
        numerator = abs(b2) ** alpha0 - abs(b1) ** alpha0
        if regime is Regime.IID_DISTINCT:
            bs = coefficients(b_scheme, b_scheme.default_truncation)
            denominator = float(
                np.sum(weights.p * np.maximum(bs, 0) ** alpha0 + weights.q * np.maximum(-bs, 0) ** alpha0)
            )
        else:
            a1 = a_scheme.coefficient(1)
            denominator = weights.p * max(a1, 0.0) ** alpha0 + weights.q * max(-a1, 0.0) ** alpha0
        if denominator == 0:
            raise DegenerateError("tail constant in the condition's denominator is zero")
        lhs = numerator / denominator

    return ConditionReport(
        regime=regime,
        i=i,
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs < rhs,
        coefficient_ratio=coefficient_ratio,
        coefficient_ratio_below_one=coefficient_ratio < 1,
    )


def ensemble_profile(
    config: CoupledProcessConfig, indices: Sequence[int], params: TailCCParams
) -> List[TailCCEstimate]:
    """tau between X*_i and Y*_i of the simulated ensembles, one estimate per index i"""
    return (
        seq(indices)
        .map(lambda i: generate_coupled(config.at_index(int(i))))
        .map(lambda s: tail_cross_correlation(s.x_star, s.y_star, params))
        .to_list()
    )
