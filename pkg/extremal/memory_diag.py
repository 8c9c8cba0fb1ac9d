"""
Long-memory diagnostics: rescaled-range Hurst exponent, GPH log-periodogram
regression and the short/long classification of coefficient schemes.

Diagnostics run on level series as given, no differencing.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from extremal.errors import DataError, DegenerateError, ParameterDomainError
from extremal.linear_process import CoefficientScheme, SchemeKind
from extremal.util import geometric_grid

logger = logging.getLogger("extremal")

MIN_HURST_LENGTH = 64
MIN_GPH_LENGTH = 128
MIN_WINDOW = 8
WINDOW_POINTS = 10
DEFAULT_BANDWIDTH_EXPONENT = 0.5
MIN_R_SQUARED = 0.9
# the gamma-ratio form of the expected R/S overflows beyond this window size
_ANIS_LLOYD_SWITCH = 340


class Memory(str, Enum):
    SHORT = "short"
    LONG = "long"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GPHEstimate:
    d: float
    standard_error: float
    bandwidth: int

    def as_dict(self) -> Dict:
        return {"d": self.d, "standard_error": self.standard_error, "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class MemoryReport:
    hurst: float
    gph_d: float
    gph_standard_error: float
    gph_bandwidth: int
    classification: Memory
    advisory: Optional[str] = None

    def as_dict(self) -> Dict:
        return {
            "hurst": self.hurst,
            "gph_d": self.gph_d,
            "gph_standard_error": self.gph_standard_error,
            "gph_bandwidth": self.gph_bandwidth,
            "classification": self.classification.value,
            "advisory": self.advisory,
        }


def _as_series(series: Sequence[float], minimum: int, what: str) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if len(x) < minimum:
        raise DataError(f"{what} needs at least {minimum} observations, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{what} got non-finite observations")
    return x


def expected_rescaled_range(n: int) -> float:
    """Anis-Lloyd expected R/S of n independent gaussian observations"""
    if n < 2:
        raise ParameterDomainError(f"expected R/S needs a window of at least 2, got {n}")
    i = np.arange(1, n)
    tail_sum = float(np.sum(np.sqrt((n - i) / i)))
    if n <= _ANIS_LLOYD_SWITCH:
        front = math.exp(special.gammaln((n - 1) / 2) - special.gammaln(n / 2)) / math.sqrt(math.pi)
    else:
        front = 1.0 / math.sqrt(n * math.pi / 2)
    return (n - 0.5) / n * front * tail_sum


def rescaled_range(series: np.ndarray, window: int) -> Optional[float]:
    """R/S averaged over the disjoint blocks of length `window`, None if every block is flat"""
    blocks = series[: (len(series) // window) * window].reshape(-1, window)
    deviations = np.cumsum(blocks - blocks.mean(axis=1, keepdims=True), axis=1)
    ranges = deviations.max(axis=1) - deviations.min(axis=1)
    scales = blocks.std(axis=1)
    usable = scales > 0
    if not np.any(usable):
        return None
    return float(np.mean(ranges[usable] / scales[usable]))


def rs_curve(series: Sequence[float], min_window: int = MIN_WINDOW, points: int = WINDOW_POINTS) -> List[Tuple[int, float]]:
    x = _as_series(series, MIN_HURST_LENGTH, "hurst_rs")
    if np.ptp(x) == 0:
        raise DegenerateError("constant series has zero variance, R/S is undefined")
    curve = []
    for w in geometric_grid(min_window, len(x) // 2, points):
        rs = rescaled_range(x, w)
        if rs is not None and rs > 0:
            curve.append((w, rs))
    return curve


def hurst_rs(
    series: Sequence[float],
    corrected: bool = True,
    min_window: int = MIN_WINDOW,
    points: int = WINDOW_POINTS,
) -> float:
    """
    Hurst exponent from the log-log slope of R/S against window size over a
    geometric window grid. With `corrected` the expected R/S of white noise is
    subtracted first, H = 0.5 + slope(log R/S - log E[R/S]).
    """
    curve = rs_curve(series, min_window, points)
    if len(curve) < 2:
        raise DegenerateError("fewer than two windows with positive R/S")
    windows = np.array([w for w, _ in curve], dtype=float)
    log_rs = np.log([rs for _, rs in curve])
    if corrected:
        log_rs = log_rs - np.log([expected_rescaled_range(int(w)) for w in windows])
    slope = float(stats.linregress(np.log(windows), log_rs).slope)
    return 0.5 + slope if corrected else slope


def gph(series: Sequence[float], bandwidth_exponent: float = DEFAULT_BANDWIDTH_EXPONENT) -> GPHEstimate:
    x = _as_series(series, MIN_GPH_LENGTH, "gph")
    if not 0 < bandwidth_exponent < 1:
        raise ParameterDomainError(f"bandwidth exponent must lie in (0, 1), got {bandwidth_exponent}")
    n = len(x)
    m = int(math.floor(n ** bandwidth_exponent))
    m = min(max(m, 2), (n - 1) // 2)
    spectrum = np.fft.fft(x - x.mean())
    periodogram = np.abs(spectrum[1 : m + 1]) ** 2 / (2 * math.pi * n)
    if not np.all(periodogram > 0):
        raise DegenerateError("periodogram vanishes at a Fourier frequency")
    omega = 2 * math.pi * np.arange(1, m + 1) / n
    regressor = np.log(4 * np.sin(omega / 2) ** 2)
    slope = float(stats.linregress(regressor, np.log(periodogram)).slope)
    spread = float(np.sum((regressor - regressor.mean()) ** 2))
    logger.debug("gph bandwidth %d of %d, slope %g", m, n, slope)
    return GPHEstimate(d=-slope, standard_error=math.sqrt(math.pi ** 2 / 6 / spread), bandwidth=m)


def _r_squared(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(y) == 0:
        return 1.0
    return float(stats.linregress(x, y).rvalue ** 2)


def classify_scheme(scheme: CoefficientScheme) -> Memory:
    if scheme.kind is SchemeKind.EXPONENTIAL:
        return Memory.SHORT
    if scheme.kind is SchemeKind.POWER_LAW:
        return Memory.LONG
    b = np.abs(np.asarray(scheme.values, dtype=float))
    j = np.arange(len(b))
    keep = (j >= 1) & (b > 0)
    # finite support is the extreme short-memory case
    if np.count_nonzero(keep) < 3:
        return Memory.SHORT
    j, log_b = j[keep].astype(float), np.log(b[keep])
    exponential_fit = _r_squared(j, log_b)
    power_fit = _r_squared(np.log(j), log_b)
    if max(exponential_fit, power_fit) < MIN_R_SQUARED:
        return Memory.UNKNOWN
    return Memory.SHORT if exponential_fit >= power_fit else Memory.LONG


def scheme_advisory(scheme: CoefficientScheme) -> Optional[str]:
    if scheme.kind is SchemeKind.POWER_LAW and scheme.beta >= 1:
        return (
            f"power-law coefficients with beta = {scheme.beta:g} >= 1 are absolutely summable; "
            "labelled long memory by their power-law decay only"
        )
    return None


def classify_estimate(estimate: GPHEstimate) -> Memory:
    """long when d is significantly positive at the 5% level, short when indistinguishable from 0"""
    z = estimate.d / estimate.standard_error
    if z > 1.96:
        return Memory.LONG
    if z >= -1.96:
        return Memory.SHORT
    return Memory.UNKNOWN


def memory_report(
    series: Sequence[float],
    bandwidth_exponent: float = DEFAULT_BANDWIDTH_EXPONENT,
    scheme: Optional[CoefficientScheme] = None,
) -> MemoryReport:
    estimate = gph(series, bandwidth_exponent)
    if scheme is not None:
        classification, advisory = classify_scheme(scheme), scheme_advisory(scheme)
    else:
        classification, advisory = classify_estimate(estimate), None
    return MemoryReport(
        hurst=hurst_rs(series),
        gph_d=estimate.d,
        gph_standard_error=estimate.standard_error,
        gph_bandwidth=estimate.bandwidth,
        classification=classification,
        advisory=advisory,
    )
