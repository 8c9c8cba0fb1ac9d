"""
Distributional structure diagnostics

dip_statistic / dip_test
    Hartigan's dip, the distance between the empirical CDF and the closest
    unimodal CDF, computed with the greatest convex minorant / least concave
    majorant cycling of the published algorithm. p-values come from a uniform
    bootstrap.

detect_changepoints
    binary segmentation on the two-sample Kolmogorov-Smirnov statistic, each
    accepted split must be significant after a Bonferroni correction over the
    candidate split positions of its segment.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from extremal.errors import DataError, ParameterDomainError
from extremal.util import derive_rng

logger = logging.getLogger("extremal")

MIN_DIP_SIZE = 4
DEFAULT_BOOTSTRAP = 2000
DEFAULT_MIN_SEGMENT = 100
DEFAULT_MAX_CHANGEPOINTS = 5
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class DipResult:
    statistic: float
    p_value: float
    n_bootstrap: int

    def as_dict(self) -> Dict:
        return {"dip": self.statistic, "p_value": self.p_value, "n_bootstrap": self.n_bootstrap}


@dataclass(frozen=True)
class ChangePointResult:
    locations: List[int]
    discovery_order: List[int]
    n_segments: int
    statistic_per_split: List[float] = field(default_factory=list)
    p_values: List[float] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "locations": self.locations,
            "discovery_order": self.discovery_order,
            "n_segments": self.n_segments,
            "statistic_per_split": self.statistic_per_split,
            "p_values": self.p_values,
        }


def _sorted_sample(sample: Sequence[float], minimum: int, what: str) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if len(x) < minimum:
        raise DataError(f"{what} needs at least {minimum} observations, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{what} got non-finite observations")
    return np.sort(x)


def _dip_sorted(values: np.ndarray) -> float:
    n = len(values)
    # 1-based working arrays, slot 0 unused
    x = np.concatenate(([0.0], values)).tolist()
    dip = 1.0
    if n < 2 or x[n] == x[1]:
        return dip / (2 * n)

    mn = [0] * (n + 1)
    mn[1] = 1
    for j in range(2, n + 1):
        mn[j] = j - 1
        while True:
            mnj = mn[j]
            mnmnj = mn[mnj]
            if mnj == 1 or (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj):
                break
            mn[j] = mnmnj

    mj = [0] * (n + 1)
    mj[n] = n
    for k in range(n - 1, 0, -1):
        mj[k] = k + 1
        while True:
            mjk = mj[k]
            mjmjk = mj[mjk]
            if mjk == n or (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk):
                break
            mj[k] = mjmjk

    gcm = [0] * (n + 2)
    lcm = [0] * (n + 2)
    low, high = 1, n
    while True:
        # change points of the convex minorant from high down to low
        gcm[1] = high
        i = 1
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = l_gcm = i
        ix = ig - 1

        # change points of the concave majorant from low up to high
        lcm[1] = low
        i = 1
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = l_lcm = i
        iv = 2

        d = 0.0
        if l_gcm != 2 or l_lcm != 2:
            while True:
                gcmix = gcm[ix]
                lcmiv = lcm[iv]
                if gcmix > lcmiv:
                    gcmi1 = gcm[ix + 1]
                    dx = (lcmiv - gcmi1 + 1) - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) / (x[gcmix] - x[gcmi1])
                    iv += 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv - 1
                else:
                    lcmiv1 = lcm[iv - 1]
                    dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) - (gcmix - lcmiv1 - 1)
                    ix -= 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv
                if ix < 1:
                    ix = 1
                if iv > l_lcm:
                    iv = l_lcm
                if gcm[ix] == lcm[iv]:
                    break
        else:
            d = 1.0

        if d < dip:
            break

        dip_l = 0.0
        for j in range(ig, l_gcm):
            max_t = 1.0
            jb, je = gcm[j + 1], gcm[j]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (jj - jb + 1) - (x[jj] - x[jb]) * c
                    if max_t < t:
                        max_t = t
            if dip_l < max_t:
                dip_l = max_t

        dip_u = 0.0
        for j in range(ih, l_lcm):
            max_t = 1.0
            jb, je = lcm[j], lcm[j + 1]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (x[jj] - x[jb]) * c - (jj - jb - 1)
                    if max_t < t:
                        max_t = t
            if dip_u < max_t:
                dip_u = max_t

        dip = max(dip, dip_u, dip_l)

        # without this the modal interval can cycle forever
        if low == gcm[ig] and high == lcm[ih]:
            break
        low, high = gcm[ig], lcm[ih]

    return dip / (2 * n)


def dip_statistic(sample: Sequence[float]) -> float:
    """
    ```python
    >>> dip_statistic([1, 2, 3, 4])
    0.125
    ```
    """
    return _dip_sorted(_sorted_sample(sample, MIN_DIP_SIZE, "dip statistic"))


def dip_test(sample: Sequence[float], n_bootstrap: int = DEFAULT_BOOTSTRAP, seed: Optional[int] = None) -> DipResult:
    """p-value: share of uniform samples of the same size with a strictly larger dip"""
    if n_bootstrap < 1:
        raise ParameterDomainError(f"bootstrap size must be positive, got {n_bootstrap}")
    x = _sorted_sample(sample, MIN_DIP_SIZE, "dip test")
    observed = _dip_sorted(x)
    rng = derive_rng(seed, "dip_bootstrap")
    exceed = 0
    for _ in range(n_bootstrap):
        if _dip_sorted(np.sort(rng.random(len(x)))) > observed:
            exceed += 1
    logger.debug("dip %g exceeded by %d of %d uniform samples", observed, exceed, n_bootstrap)
    return DipResult(statistic=observed, p_value=exceed / n_bootstrap, n_bootstrap=n_bootstrap)


def ks_split_statistics(x: np.ndarray, min_segment: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two-sample KS statistic of x[:k] against x[k:] for every k in
    [min_segment, len(x) - min_segment]; returns (splits, statistics).
    """
    m = len(x)
    splits = np.arange(min_segment, m - min_segment + 1)
    order = np.argsort(x, kind="stable")
    ordered = x[order]
    # evaluate the CDFs at the last element of each tie group
    group_ends = np.append(ordered[1:] != ordered[:-1], True)
    ranks = np.arange(1, m + 1)[group_ends]
    statistics = np.empty(len(splits))
    for s, k in enumerate(splits):
        left = np.cumsum(order < k)[group_ends]
        statistics[s] = np.max(np.abs(left / k - (ranks - left) / (m - k)))
    return splits, statistics


@dataclass
class _Candidate:
    start: int
    end: int
    location: Optional[int] = None
    statistic: float = 0.0
    p_value: float = 1.0
    significant: bool = False


def _evaluate(x: np.ndarray, start: int, end: int, min_segment: int, alpha: float) -> _Candidate:
    candidate = _Candidate(start, end)
    segment = x[start:end]
    if len(segment) < 2 * min_segment or np.ptp(segment) == 0:
        return candidate
    splits, statistics = ks_split_statistics(segment, min_segment)
    best = int(np.argmax(statistics))
    k = int(splits[best])
    p_value = float(stats.ks_2samp(segment[:k], segment[k:]).pvalue)
    candidate.location = start + k
    candidate.statistic = float(statistics[best])
    candidate.p_value = p_value
    candidate.significant = p_value < alpha / len(splits)
    return candidate


def detect_changepoints(
    series: Sequence[float],
    max_changepoints: int = DEFAULT_MAX_CHANGEPOINTS,
    min_segment: int = DEFAULT_MIN_SEGMENT,
    alpha: float = DEFAULT_ALPHA,
) -> ChangePointResult:
    """
    A location k splits the series into x[:k] and x[k:], in 1-based terms the
    segments 1..k and k+1..n. The strongest significant split over all current
    segments is accepted first.
    """
    if max_changepoints < 1:
        raise ParameterDomainError(f"max_changepoints must be positive, got {max_changepoints}")
    if min_segment < 1:
        raise ParameterDomainError(f"min_segment must be positive, got {min_segment}")
    if not 0 < alpha < 1:
        raise ParameterDomainError(f"significance level must lie in (0, 1), got {alpha}")
    x = np.asarray(series, dtype=float).ravel()
    if len(x) < 2 * min_segment:
        raise DataError(f"change-point search needs at least {2 * min_segment} observations, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise DataError("change-point search got non-finite observations")

    candidates = [_evaluate(x, 0, len(x), min_segment, alpha)]
    found: List[_Candidate] = []
    while len(found) < max_changepoints:
        significant = [c for c in candidates if c.significant]
        if not significant:
            break
        best = max(significant, key=lambda c: c.statistic)
        found.append(best)
        logger.debug("change point at %d, ks %g, p %g", best.location, best.statistic, best.p_value)
        candidates.remove(best)
        candidates.append(_evaluate(x, best.start, best.location, min_segment, alpha))
        candidates.append(_evaluate(x, best.location, best.end, min_segment, alpha))

    discovery = [c.location for c in found]
    return ChangePointResult(
        locations=sorted(discovery),
        discovery_order=discovery,
        n_segments=len(discovery) + 1,
        statistic_per_split=[c.statistic for c in found],
        p_values=[c.p_value for c in found],
    )


def segments(result: ChangePointResult, n: int) -> List[Tuple[int, int]]:
    """1-based inclusive (start, end) ranges, e.g. [(1, 463), (464, 841), ...]"""
    bounds = [0] + [loc for loc in result.locations] + [n]
    if any(b >= a_next for b, a_next in zip(bounds, bounds[1:])):
        raise DataError(f"change points {result.locations} do not fit a series of length {n}")
    return [(start + 1, end) for start, end in zip(bounds, bounds[1:])]
