"""
Hurst-exponent grids over windowed coupled processes

    Y*_i = sum_{j=i-5}^{i-1} b_j eps2_{i-j} + b_i eps*_0,  i in 1..6

A grid crosses the coefficient scheme values (phi or beta) with innovation
plans, perturbations and indices; each cell is the Hurst exponent of the Y*
ensemble averaged over replications. Replication r uses the same master seed
for every cell, so cells differ only by their parameters.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from functional import seq

from extremal.distributions import DistributionSpec, parse_spec
from extremal.errors import ConfigurationError, ExtremalError
from extremal.linear_process import (
    STUDY_WINDOW,
    CoefficientScheme,
    CoupledProcessConfig,
    InnovationPlan,
    SchemeKind,
    generate_coupled,
)
from extremal.memory_diag import hurst_rs, scheme_advisory
from extremal.util import require_non_empty, stream_key

logger = logging.getLogger("extremal")

DEFAULT_HORIZON = 2000
DEFAULT_REPLICATIONS = 20


def replication_seed(base_seed: int, replication: int) -> int:
    state = np.random.SeedSequence([int(base_seed), stream_key("replication"), int(replication)])
    return int(state.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SimulationGrid:
    scheme_kind: SchemeKind
    scheme_values: Tuple[float, ...]
    innovation_families: Tuple[InnovationPlan, ...]
    perturbations: Tuple[DistributionSpec, ...]
    indices: Tuple[int, ...]
    replications: int
    base_seed: int
    horizon: int = DEFAULT_HORIZON
    window: int = STUDY_WINDOW
    truncation_order: Optional[int] = None
    name: str = "grid"

    def __post_init__(self):
        object.__setattr__(self, "scheme_kind", SchemeKind(self.scheme_kind))
        if self.scheme_kind is SchemeKind.EXPLICIT:
            raise ConfigurationError("simulation grids sweep exponential or power-law schemes")
        for axis in ("scheme_values", "innovation_families", "perturbations", "indices"):
            object.__setattr__(self, axis, tuple(require_non_empty(axis, getattr(self, axis))))
        if self.replications < 1:
            raise ConfigurationError(f"replications must be positive, got {self.replications}")

    @classmethod
    def from_dict(cls, d: Mapping, seed: Optional[int] = None) -> "SimulationGrid":
        seed = d.get("base_seed") if seed is None else seed
        if seed is None:
            raise ConfigurationError("simulation grid needs a base seed")
        return cls(
            scheme_kind=SchemeKind(d["scheme"]),
            scheme_values=tuple(float(v) for v in d.get("scheme_values", [])),
            innovation_families=tuple(InnovationPlan.from_dict(p) for p in d.get("innovations", [])),
            perturbations=tuple(parse_spec(p) for p in d.get("perturbations", [])),
            indices=tuple(int(i) for i in d.get("indices", [])),
            replications=int(d.get("replications", DEFAULT_REPLICATIONS)),
            base_seed=int(seed),
            horizon=int(d.get("horizon", DEFAULT_HORIZON)),
            window=int(d.get("window", STUDY_WINDOW)),
            truncation_order=d.get("truncation_order"),
            name=d.get("name", "grid"),
        )

    @property
    def scheme_label(self) -> str:
        return "phi" if self.scheme_kind is SchemeKind.EXPONENTIAL else "beta"

    def scheme(self, value: float) -> CoefficientScheme:
        if self.scheme_kind is SchemeKind.EXPONENTIAL:
            return CoefficientScheme.exponential(value)
        return CoefficientScheme.power_law(value)

    def process_config(
        self, value: float, plan: InnovationPlan, perturbation: DistributionSpec, index: int, replication: int
    ) -> CoupledProcessConfig:
        scheme = self.scheme(value)
        return CoupledProcessConfig(
            a_scheme=scheme,
            b_scheme=scheme,
            innovations_x=plan,
            innovations_y=plan,
            perturbation=perturbation,
            horizon=self.horizon,
            seed=replication_seed(self.base_seed, replication),
            index=index,
            truncation_order=self.truncation_order,
            window=self.window,
        )

    def cells(self) -> List[Tuple[InnovationPlan, float, int, DistributionSpec]]:
        """cells in table order: innovation block, scheme value, index, perturbation"""
        return [
            (plan, value, index, perturbation)
            for plan in self.innovation_families
            for value in self.scheme_values
            for index in self.indices
            for perturbation in self.perturbations
        ]


@dataclass
class CellResult:
    innovation: str
    scheme_value: float
    index: int
    perturbation: str
    hurst: Optional[float] = None
    hurst_values: List[float] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def hurst_sd(self) -> Optional[float]:
        if len(self.hurst_values) < 2:
            return None
        return float(np.std(self.hurst_values, ddof=1))


def _replication_hursts(grid: SimulationGrid, cell) -> List[float]:
    plan, value, index, perturbation = cell
    return [
        hurst_rs(generate_coupled(grid.process_config(value, plan, perturbation, index, r)).y_star)
        for r in range(grid.replications)
    ]


def _run_cell(args) -> CellResult:
    grid, cell = args
    plan, value, index, perturbation = cell
    result = CellResult(plan.label(), value, index, perturbation.notation())
    try:
        result.hurst_values = _replication_hursts(grid, cell)
        result.hurst = float(np.mean(result.hurst_values))
    except ExtremalError as e:
        logger.warning("cell %s %g i=%d %s failed: %s", result.innovation, value, index, result.perturbation, e)
        result.error = f"{type(e).__name__}: {e}"
    return result


@dataclass
class SimulationResult:
    grid: SimulationGrid
    cells: List[CellResult]

    def long_rows(self) -> List[Dict]:
        label = self.grid.scheme_label
        return [
            {
                "innovation": c.innovation,
                label: c.scheme_value,
                "i": c.index,
                "perturbation": c.perturbation,
                "hurst": c.hurst,
                "hurst_sd": c.hurst_sd,
                "replications": len(c.hurst_values),
                "error": c.error,
            }
            for c in self.cells
        ]

    def table_rows(self) -> List[Dict]:
        """wide layout, one row per (innovation, scheme value, i), one column per perturbation"""
        label = self.grid.scheme_label
        rows: Dict[Tuple[str, float, int], Dict] = {}
        for c in self.cells:
            key = (c.innovation, c.scheme_value, c.index)
            row = rows.setdefault(key, {"innovation": c.innovation, label: c.scheme_value, "i": c.index})
            row[c.perturbation] = c.hurst
        return list(rows.values())

    def advisories(self) -> List[str]:
        return (
            seq(self.grid.scheme_values)
            .map(lambda v: scheme_advisory(self.grid.scheme(v)))
            .filter(lambda note: note is not None)
            .to_list()
        )


def run_simulation_grid(grid: SimulationGrid, workers: int = 1) -> SimulationResult:
    cells = grid.cells()
    logger.info("simulating %d cells x %d replications (%s)", len(cells), grid.replications, grid.name)
    jobs = [(grid, cell) for cell in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]
    return SimulationResult(grid=grid, cells=results)


@dataclass(frozen=True)
class BandComparison:
    iid_values: List[float]
    non_iid_hurst: float
    band_low: float
    band_high: float

    @property
    def inside(self) -> bool:
        return self.band_low <= self.non_iid_hurst <= self.band_high

    def as_dict(self) -> Dict:
        return {
            "non_iid_hurst": self.non_iid_hurst,
            "band_low": self.band_low,
            "band_high": self.band_high,
            "inside": self.inside,
        }

    def rows(self) -> List[Dict]:
        return [{"replication": r, "iid_hurst": h} for r, h in enumerate(self.iid_values)]


def band_comparison(
    grid: SimulationGrid,
    value: float,
    index: int,
    perturbation: DistributionSpec,
    iid_plan: InnovationPlan,
    non_iid_plan: InnovationPlan,
) -> BandComparison:
    """
    Hurst values of the iid cell across replications against the mean Hurst
    value of the non-iid cell, the non-iid value should sit inside the iid band.
    """
    iid_values = _replication_hursts(grid, (iid_plan, value, index, perturbation))
    non_iid = float(np.mean(_replication_hursts(grid, (non_iid_plan, value, index, perturbation))))
    return BandComparison(
        iid_values=iid_values,
        non_iid_hurst=non_iid,
        band_low=float(min(iid_values)),
        band_high=float(max(iid_values)),
    )
