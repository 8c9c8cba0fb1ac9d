"""
Coupled linear processes with heavy-tailed innovations

    X*_i = sum_{j != i} a_j eps1_{i-j} + a_i eps*_0
    Y*_i = sum_{j != i} b_j eps2_{i-j} + b_i eps*_0

The time-zero innovation of both series is replaced by one shared draw eps*_0.
A CoupledSeries holds `horizon` independent realizations of the pair at a fixed
index i, each realization with its own eps*_0, which is the ensemble the memory
tables are computed on.

Innovations are keyed by their absolute index m = i - j, every index gets its own
random sub-stream derived from the master seed. Pairs generated at different
indices i therefore see the same underlying innovation path.
"""
import logging
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from extremal.distributions import DistributionSpec, Family, inverse_survival, parse_spec
from extremal.errors import ConfigurationError, ParameterDomainError
from extremal.util import derive_rng

logger = logging.getLogger("extremal")

EXPONENTIAL_TRUNCATION = 200
POWER_LAW_TRUNCATION = 2000
STUDY_WINDOW = 5

X_STREAM = "innovations_x"
Y_STREAM = "innovations_y"
PERTURBATION_STREAM = "perturbation"


class SchemeKind(str, Enum):
    EXPONENTIAL = "exponential"
    POWER_LAW = "power_law"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class CoefficientScheme:
    kind: SchemeKind
    phi: Optional[float] = None
    beta: Optional[float] = None
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.kind is SchemeKind.EXPONENTIAL:
            if self.phi is None or not abs(self.phi) < 1:
                raise ParameterDomainError(f"exponential scheme needs |phi| < 1, got {self.phi}")
        elif self.kind is SchemeKind.POWER_LAW:
            if self.beta is None or not self.beta > 0:
                raise ParameterDomainError(f"power-law scheme needs beta > 0, got {self.beta}")
        else:
            values = tuple(float(v) for v in self.values)
            if not values:
                raise ParameterDomainError("explicit scheme needs at least one coefficient")
            if not np.all(np.isfinite(values)):
                raise ParameterDomainError(f"explicit coefficients must be finite, got {values}")
            object.__setattr__(self, "values", values)

    @classmethod
    def exponential(cls, phi: float) -> "CoefficientScheme":
        return cls(SchemeKind.EXPONENTIAL, phi=float(phi))

    @classmethod
    def power_law(cls, beta: float) -> "CoefficientScheme":
        return cls(SchemeKind.POWER_LAW, beta=float(beta))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "CoefficientScheme":
        return cls(SchemeKind.EXPLICIT, values=tuple(values))

    @classmethod
    def from_dict(cls, d: Mapping) -> "CoefficientScheme":
        kind = SchemeKind(d["kind"])
        if kind is SchemeKind.EXPONENTIAL:
            return cls.exponential(d["phi"])
        if kind is SchemeKind.POWER_LAW:
            return cls.power_law(d["beta"])
        return cls.explicit(d["values"])

    def as_dict(self) -> Dict:
        if self.kind is SchemeKind.EXPONENTIAL:
            return {"kind": self.kind.value, "phi": self.phi}
        if self.kind is SchemeKind.POWER_LAW:
            return {"kind": self.kind.value, "beta": self.beta}
        return {"kind": self.kind.value, "values": list(self.values)}

    def coefficient(self, j: int) -> float:
        # one-sided: nothing before lag zero
        if j < 0:
            return 0.0
        if self.kind is SchemeKind.EXPONENTIAL:
            return self.phi ** j
        if self.kind is SchemeKind.POWER_LAW:
            return 1.0 if j == 0 else float(j) ** (-self.beta)
        return self.values[j] if j < len(self.values) else 0.0

    @property
    def default_truncation(self) -> int:
        if self.kind is SchemeKind.EXPONENTIAL:
            return EXPONENTIAL_TRUNCATION
        if self.kind is SchemeKind.POWER_LAW:
            return POWER_LAW_TRUNCATION
        return len(self.values)


def coefficients(scheme: CoefficientScheme, count: int) -> np.ndarray:
    if count < 1:
        raise ParameterDomainError(f"coefficient count must be positive, got {count}")
    j = np.arange(count, dtype=float)
    if scheme.kind is SchemeKind.EXPONENTIAL:
        return scheme.phi ** j
    if scheme.kind is SchemeKind.POWER_LAW:
        out = np.ones(count)
        out[1:] = j[1:] ** (-scheme.beta)
        return out
    out = np.zeros(count)
    k = min(count, len(scheme.values))
    out[:k] = scheme.values[:k]
    return out


class PlanKind(str, Enum):
    IID = "iid"
    PER_INDEX = "per_index"
    SCHEDULE = "schedule"


@dataclass(frozen=True)
class InnovationPlan:
    """
    Law of every innovation eps_m of one series.

    IID: one spec for all m
    PER_INDEX: specs[m - first_index], an explicit finite list
    SCHEDULE: the study's "P(.,1)" / "C(0,.)" schedules,
        pareto:  eps_m ~ P(top - m + 1, fixed)
        cauchy:  eps_m ~ C(fixed, top - m + 1)
      indices m <= 0 follow the same formula
    """

    kind: PlanKind
    spec: Optional[DistributionSpec] = None
    specs: Tuple[DistributionSpec, ...] = ()
    first_index: int = 1
    family: Optional[Family] = None
    top: int = STUDY_WINDOW
    fixed: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PlanKind(self.kind))
        if self.kind is PlanKind.IID and self.spec is None:
            raise ConfigurationError("iid innovation plan needs a distribution")
        if self.kind is PlanKind.PER_INDEX and not self.specs:
            raise ConfigurationError("per-index innovation plan needs at least one distribution")
        if self.kind is PlanKind.SCHEDULE:
            family = Family.parse(self.family)
            if family not in (Family.PARETO, Family.CAUCHY):
                raise ConfigurationError(
                    f"schedules are defined for pareto and cauchy innovations, got {family.value}"
                )
            object.__setattr__(self, "family", family)

    @classmethod
    def iid(cls, spec) -> "InnovationPlan":
        return cls(PlanKind.IID, spec=parse_spec(spec))

    @classmethod
    def per_index(cls, specs: Sequence, first_index: int = 1) -> "InnovationPlan":
        return cls(
            PlanKind.PER_INDEX,
            specs=tuple(parse_spec(s) for s in specs),
            first_index=int(first_index),
        )

    @classmethod
    def schedule(cls, family, top: int = STUDY_WINDOW, fixed: Optional[float] = None) -> "InnovationPlan":
        family = Family.parse(family)
        if fixed is None:
            fixed = 1.0 if family is Family.PARETO else 0.0
        return cls(PlanKind.SCHEDULE, family=family, top=int(top), fixed=float(fixed))

    @classmethod
    def from_dict(cls, d: Mapping) -> "InnovationPlan":
        kind = PlanKind(d["kind"])
        if kind is PlanKind.IID:
            return cls.iid(d["spec"])
        if kind is PlanKind.PER_INDEX:
            return cls.per_index(d["specs"], d.get("first_index", 1))
        return cls.schedule(d["family"], d.get("top", STUDY_WINDOW), d.get("fixed"))

    def as_dict(self) -> Dict:
        if self.kind is PlanKind.IID:
            return {"kind": self.kind.value, "spec": self.spec.notation()}
        if self.kind is PlanKind.PER_INDEX:
            return {
                "kind": self.kind.value,
                "specs": [s.notation() for s in self.specs],
                "first_index": self.first_index,
            }
        return {"kind": self.kind.value, "family": self.family.value, "top": self.top, "fixed": self.fixed}

    def label(self) -> str:
        if self.kind is PlanKind.IID:
            return self.spec.notation()
        if self.kind is PlanKind.SCHEDULE:
            return "P(.,1)" if self.family is Family.PARETO else "C(0,.)"
        return "[" + ", ".join(s.notation() for s in self.specs) + "]"

    def spec_for(self, m: int) -> DistributionSpec:
        """law of the innovation with absolute index m"""
        if self.kind is PlanKind.IID:
            return self.spec
        if self.kind is PlanKind.PER_INDEX:
            pos = m - self.first_index
            if not 0 <= pos < len(self.specs):
                raise ConfigurationError(
                    f"per-index plan covers innovations {self.first_index}.."
                    f"{self.first_index + len(self.specs) - 1}, index {m} is needed"
                )
            return self.specs[pos]
        level = self.top - m + 1
        if level <= 0:
            raise ConfigurationError(
                f"schedule with top {self.top} is undefined for innovation index {m}"
            )
        if self.family is Family.PARETO:
            return DistributionSpec.pareto(level, self.fixed)
        return DistributionSpec.cauchy(self.fixed, level)

    def extrapolates(self, indices: Sequence[int]) -> bool:
        return self.kind is PlanKind.SCHEDULE and any(m <= 0 for m in indices)


@dataclass(frozen=True)
class CoupledProcessConfig:
    a_scheme: CoefficientScheme
    b_scheme: CoefficientScheme
    innovations_x: InnovationPlan
    innovations_y: InnovationPlan
    perturbation: DistributionSpec
    horizon: int
    seed: int
    index: int = 0
    truncation_order: Optional[int] = None
    window: Optional[int] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if self.truncation_order is not None and self.truncation_order < 1:
            raise ConfigurationError(f"truncation order must be positive, got {self.truncation_order}")
        if self.index < 0:
            raise ConfigurationError(f"index must be non-negative, got {self.index}")
        if self.window is not None:
            if self.window < 1:
                raise ConfigurationError(f"window must be positive, got {self.window}")
            if not 1 <= self.index <= self.window + 1:
                raise ConfigurationError(
                    f"windowed process is defined for indices 1..{self.window + 1}, got {self.index}"
                )

    @classmethod
    def from_dict(cls, d: Mapping, seed: Optional[int] = None) -> "CoupledProcessConfig":
        seed = d.get("seed") if seed is None else seed
        if seed is None:
            raise ConfigurationError("process config needs a seed")
        return cls(
            a_scheme=CoefficientScheme.from_dict(d["a_scheme"]),
            b_scheme=CoefficientScheme.from_dict(d["b_scheme"]),
            innovations_x=InnovationPlan.from_dict(d["innovations_x"]),
            innovations_y=InnovationPlan.from_dict(d["innovations_y"]),
            perturbation=parse_spec(d["perturbation"]),
            horizon=int(d["horizon"]),
            seed=int(seed),
            index=int(d.get("index", 0)),
            truncation_order=d.get("truncation_order"),
            window=d.get("window"),
        )

    def as_dict(self) -> Dict:
        return {
            "a_scheme": self.a_scheme.as_dict(),
            "b_scheme": self.b_scheme.as_dict(),
            "innovations_x": self.innovations_x.as_dict(),
            "innovations_y": self.innovations_y.as_dict(),
            "perturbation": self.perturbation.notation(),
            "horizon": self.horizon,
            "seed": self.seed,
            "index": self.index,
            "truncation_order": self.truncation_order,
            "window": self.window,
        }

    def at_index(self, index: int) -> "CoupledProcessConfig":
        return replace(self, index=index)

    def lags(self, scheme: CoefficientScheme) -> List[int]:
        """lags j entering the innovation sum, the coupled lag j = index excluded"""
        if self.window is not None:
            lags = range(max(0, self.index - self.window), self.index)
        else:
            lags = range(self.truncation_order or scheme.default_truncation)
        return [j for j in lags if j != self.index]


@dataclass
class CoupledSeries:
    x_star: np.ndarray
    y_star: np.ndarray
    shared_perturbation_draws: np.ndarray
    config: Optional[CoupledProcessConfig] = field(default=None, repr=False)

    def __len__(self):
        return len(self.x_star)


def innovation_spec(plan: InnovationPlan, m: int) -> DistributionSpec:
    return plan.spec_for(m)


def innovation_draws(seed: int, stream: str, plan: InnovationPlan, m: int, n: int) -> np.ndarray:
    """the n realizations of innovation eps_m of one stream"""
    u = derive_rng(seed, stream, m).random(n)
    return inverse_survival(plan.spec_for(m), u)


def draw_innovation_block(
    plan: InnovationPlan, index: int, lags: Sequence[int], n: int, seed: int, stream: str
) -> np.ndarray:
    """
    (len(lags), n) matrix, row r holds the n draws of eps_{index - lags[r]}
    """
    indices = [index - j for j in lags]
    # resolve every law first so a short plan fails before any drawing
    for m in indices:
        plan.spec_for(m)
    block = np.empty((len(indices), n))
    for r, m in enumerate(indices):
        block[r] = innovation_draws(seed, stream, plan, m, n)
    return block


def perturbation_draws(config: CoupledProcessConfig) -> np.ndarray:
    u = derive_rng(config.seed, PERTURBATION_STREAM).random(config.horizon)
    return inverse_survival(config.perturbation, u)


def _moving_sum(
    config: CoupledProcessConfig,
    scheme: CoefficientScheme,
    plan: InnovationPlan,
    stream: str,
    shared: np.ndarray,
) -> np.ndarray:
    lags = config.lags(scheme)
    indices = [config.index - j for j in lags]
    if plan.extrapolates(indices):
        warnings.warn(
            f"{stream}: schedule {plan.label()} extrapolated to innovation indices <= 0"
        )
    for m in indices:
        plan.spec_for(m)
    total = np.zeros(config.horizon)
    # lag order, the shared term last
    for j, m in zip(lags, indices):
        c = scheme.coefficient(j)
        if c == 0.0:
            continue
        total += c * innovation_draws(config.seed, stream, plan, m, config.horizon)
    return total + scheme.coefficient(config.index) * shared


def generate_coupled(config: CoupledProcessConfig) -> CoupledSeries:
    shared = perturbation_draws(config)
    x = _moving_sum(config, config.a_scheme, config.innovations_x, X_STREAM, shared)
    y = _moving_sum(config, config.b_scheme, config.innovations_y, Y_STREAM, shared)
    logger.debug(
        "generated %d coupled realizations at index %d (window %s)",
        config.horizon,
        config.index,
        config.window,
    )
    return CoupledSeries(x_star=x, y_star=y, shared_perturbation_draws=shared, config=config)
