import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from functional import seq

from extremal.db import get_default_config
from extremal.distributions import compare_models
from extremal.errors import ConfigurationError, DataError, ExtremalError
from extremal.ingest import PriceTable
from extremal.linear_process import CoefficientScheme
from extremal.memory_diag import memory_report
from extremal.report import Report
from extremal.structure_tests import ChangePointResult, detect_changepoints, dip_test, segments
from extremal.tail_cc import tail_cc_profile
from extremal.util import at_most_one_is_not_none, validate_config
from extremal.version import __version__

MIN_COLUMN_LENGTH = 500


@dataclass
class PipelineState:
    """what every section sees: the table, its own config block, the master seed and the report being assembled"""

    table: PriceTable
    config: Dict
    seed: Optional[int]
    report: Report
    changepoints: Dict[str, ChangePointResult] = field(default_factory=dict)

    def settings(self, section: str) -> Dict:
        return self.config.get(section, {})


PipelineComponent = Callable[[PipelineState], None]


def dip_section(state: PipelineState) -> None:
    n_bootstrap = state.settings("dip").get("n_bootstrap", 2000)
    rows = []
    for name in state.table.names:
        result = dip_test(state.table.column(name), n_bootstrap=n_bootstrap, seed=state.seed)
        rows.append({"column": name, **result.as_dict()})
    state.report.add_table("dip", rows)


def changepoint_section(state: PipelineState) -> None:
    settings = state.settings("changepoint")
    rows = []
    for name in state.table.names:
        result = detect_changepoints(
            state.table.column(name),
            max_changepoints=settings.get("max_changepoints", 5),
            min_segment=settings.get("min_segment", 100),
            alpha=settings.get("alpha", 0.05),
        )
        state.changepoints[name] = result
        for order, (location, statistic, p_value) in enumerate(
            zip(result.discovery_order, result.statistic_per_split, result.p_values), start=1
        ):
            rows.append(
                {"column": name, "order": order, "location": location, "ks": statistic, "p_value": p_value}
            )
    state.report.add_table("changepoint", rows)


def _fit_ranges(state: PipelineState, name: str) -> List[Tuple[int, int]]:
    n = len(state.table)
    configured = state.settings("fit").get("segments")
    if configured:
        return [(int(start), int(end)) for start, end in configured]
    if name in state.changepoints:
        return segments(state.changepoints[name], n)
    return [(1, n)]


def fit_section(state: PipelineState) -> None:
    """per-segment fits, segments from the change points when that section ran first"""
    families = state.settings("fit").get("families", ["pareto", "cauchy", "weibull"])
    rows = []
    for name in state.table.names:
        x = state.table.column(name)
        for start, end in _fit_ranges(state, name):
            if not 1 <= start <= end <= len(x):
                raise DataError(f"segment {start}-{end} does not fit column {name!r} of length {len(x)}")
            comparison = compare_models(x[start - 1 : end], families)
            base = {"column": name, "segment": f"{start}-{end}", "start": start, "end": end}
            for family, fit in comparison.fits.items():
                rows.append(
                    {
                        **base,
                        "family": family,
                        "model": fit.spec.notation(),
                        "log_likelihood": fit.log_likelihood,
                        "aic": fit.aic,
                        "bic": fit.bic,
                        "best_aic": family == comparison.best_aic,
                        "best_bic": family == comparison.best_bic,
                        "best_model": comparison.best_model,
                    }
                )
            for family, reason in comparison.failures.items():
                rows.append({**base, "family": family, "error": reason})
    state.report.add_table("fit", rows)


def memory_section(state: PipelineState) -> None:
    settings = state.settings("memory")
    scheme = settings.get("scheme")
    scheme = CoefficientScheme.from_dict(scheme) if scheme else None
    exponent = settings.get("bandwidth_exponent", 0.5)
    rows = [
        {"column": name, **memory_report(state.table.column(name), exponent, scheme).as_dict()}
        for name in state.table.names
    ]
    state.report.add_table("memory", rows)


def _tailcc_pairs(state: PipelineState) -> List[Tuple[str, str]]:
    pairs = state.settings("tailcc").get("pairs")
    if pairs:
        return [(a, b) for a, b in pairs]
    return list(itertools.combinations(state.table.names, 2))


def tailcc_section(state: PipelineState) -> None:
    if len(state.table.names) < 2:
        raise DataError("tail cross-correlation needs at least two columns")
    settings = state.settings("tailcc")
    rows = []
    for x_name, y_name in _tailcc_pairs(state):
        profile = tail_cc_profile(
            state.table.column(x_name),
            state.table.column(y_name),
            settings.get("lags", [1, 3, 5, 7, 30, 100]),
            settings.get("quantile_pairs", [[0.95, 0.95]]),
        )
        rows += [{"x": x_name, "y": y_name, **row} for row in profile.rows()]
    state.report.add_table("tailcc", rows)


def histogram_section(state: PipelineState) -> None:
    bins = state.settings("histogram").get("bins", 50)
    rows = []
    for name in state.table.names:
        counts, edges = np.histogram(state.table.column(name), bins=bins)
        rows += [
            {"column": name, "bin_left": left, "bin_right": right, "count": int(count)}
            for left, right, count in zip(edges[:-1], edges[1:], counts)
        ]
    state.report.add_table("histogram", rows)


class EmpiricalPipeline:
    """
    The empirical study as a pipeline of named report sections. Each section
    reads the price table and writes its own part of the report; a section that
    fails records its error and the remaining sections still run.

    ```python
        from extremal import EmpiricalPipeline
        from extremal.ingest import ingest_csv

        table = ingest_csv("prices.csv", columns=["BTC", "ETH", "SOL"])
        pipeline = EmpiricalPipeline()
        pipeline.remove_pipe("histogram")
        report = pipeline(table, seed=7)
        report.write("out/")
    ```
    """

    def __init__(self, config: Optional[Mapping] = None, name: str = "pipeline"):
        self.logger = logging.getLogger("extremal")
        self.name = name
        self.config = dict(config) if config else get_default_config("pipeline")
        validate_config(self.config, "pipeline")
        self.pipeline: List[Tuple[str, PipelineComponent]] = [
            ("dip", dip_section),
            ("changepoint", changepoint_section),
            ("fit", fit_section),
            ("memory", memory_section),
            ("tailcc", tailcc_section),
            ("histogram", histogram_section),
        ]
        wanted = self.config.get("sections")
        if wanted is not None:
            self.pipeline = [step for step in self.pipeline if step[0] in wanted]

    @property
    def pipe_names(self):
        return [x[0] for x in self.pipeline]

    def add_pipe(
        self,
        component: PipelineComponent,
        name: str = None,
        before: str = None,
        after: str = None,
        first: bool = None,
        last: bool = None,
    ):
        """
        Add a section to the pipeline
        A section takes one argument, the PipelineState, and adds its tables to state.report

        Optionally, you can either specify a section to add it before or after,
        or add it first or last in the pipeline, or define a custom name.
        If no name is set and no name attribute is present on your component, the function/class name is used.
        """
        if not at_most_one_is_not_none(before, after, first, last):
            raise ValueError("Only one of before, after, first, last can be set")
        if name is None:
            name = getattr(component, "name", None) or component.__name__

        if name in self.pipe_names:
            raise ValueError(
                f"Component {component} has name collision with existing pipeline component. "
                f"current pipeline: {self.pipe_names}"
            )
        pipeline_step = (name, component)

        if last or all(x is None for x in (before, after, first, last)):
            self.pipeline.append(pipeline_step)
        elif first:
            self.pipeline.insert(0, pipeline_step)
        elif before:
            if before not in self.pipe_names:
                raise ValueError(
                    f"can't insert component before {before}; no component of that name in pipeline"
                )
            self.pipeline.insert(self.pipe_names.index(before), pipeline_step)
        elif after:
            if after not in self.pipe_names:
                raise ValueError(
                    f"can't insert component after {after}; no component of that name in pipeline"
                )
            self.pipeline.insert(self.pipe_names.index(after) + 1, pipeline_step)
        else:
            warnings.warn(
                f"Weird values passed to add_pipe, appending {name} to the end of the pipeline"
            )
            self.pipeline.append(pipeline_step)

    def remove_pipe(self, name):
        self.pipeline = [p for p in self.pipeline if p[0] != name]

    def __call__(self, table: PriceTable, seed: Optional[int] = None) -> Report:
        short = seq(table.names).filter(lambda c: len(table.column(c)) < MIN_COLUMN_LENGTH).to_list()
        if short:
            raise DataError(f"columns {short} are shorter than {MIN_COLUMN_LENGTH} observations")
        if seed is None and "dip" in self.pipe_names:
            raise ConfigurationError("the dip section draws bootstrap samples, pass a seed")
        report = Report(self.name, "pipeline", self.config, seed)
        state = PipelineState(table=table, config=self.config, seed=seed, report=report)
        for name, component in self.pipeline:
            self.logger.info("pipeline section %s", name)
            try:
                component(state)
            except ExtremalError as e:
                report.add_error(name, e)
        return report


def run_empirical_pipeline(table: PriceTable, config: Optional[Mapping] = None, seed: Optional[int] = None) -> Report:
    """
    Run every configured section over `table`. A seed is required while the dip
    section is in the pipeline; configs without it may pass seed=None.
    """
    return EmpiricalPipeline(config)(table, seed=seed)
