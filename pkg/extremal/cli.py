"""
extremal command line

    extremal simulate --grid short_iid --seed 7 --out reports/
    extremal tailcc --input prices.csv --out reports/
    extremal pipeline --input prices.csv --seed 7

Every subcommand starts from its packaged default config, merges --config on
top, then the flags. The resolved config goes into the report.
"""
import argparse
import copy
import logging
import sys
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np

from extremal import (
    EmpiricalPipeline,
    PipelineState,
    changepoint_section,
    dip_section,
    fit_section,
    memory_section,
    tailcc_section,
)
from extremal.db import get_default_config, get_simulation_grids, load_json
from extremal.distributions import balance, parse_spec, tail_index
from extremal.errors import EXIT_NUMERICAL, EXIT_OK, ConfigurationError, ExtremalError, exit_code_for
from extremal.ingest import PriceTable, ingest_csv
from extremal.linear_process import CoupledProcessConfig, InnovationPlan, PlanKind
from extremal.report import Report
from extremal.simulation import SimulationGrid, band_comparison, run_simulation_grid
from extremal.tail_bounds import (
    LinearCombinationSpec,
    bound_curves,
    dominant_term,
    linear_combination_tail_constant,
    sample_linear_combination,
    slope_report,
)
from extremal.tail_cc import (
    Regime,
    TailCCParams,
    empirical_ratios,
    ensemble_profile,
    monotonicity_conditions,
    predicted_ratio,
    quantile_label,
    quantile_ratio_term,
)
from extremal.util import apply_overrides, validate_config
from extremal.version import __version__

logger = logging.getLogger("extremal")


def _merge(base: Dict, override: Mapping) -> Dict:
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def resolve_config(command: str, config_path: Optional[str], overrides: Mapping[str, Any]) -> Dict:
    config = get_default_config(command)
    if config_path:
        try:
            _merge(config, load_json(config_path))
        except (ValueError, TypeError) as e:
            raise ConfigurationError(str(e))
    apply_overrides(config, overrides)
    validate_config(config, command)
    return config


def _require_seed(seed: Optional[int], command: str) -> int:
    if seed is None:
        raise ConfigurationError(f"{command} is stochastic, pass --seed")
    return seed


def _load_table(config: Mapping) -> PriceTable:
    source = config.get("input") or {}
    if not source.get("path"):
        raise ConfigurationError("input.path is required, pass --input")
    return ingest_csv(source["path"], source.get("columns"), source.get("timestamp_column"))


def _section_config(config: Mapping, section: str, keys: List[str]) -> Dict:
    return {section: {k: config[k] for k in keys if k in config}}


def _run_section(
    name: str, command: str, config: Dict, seed: Optional[int], section: Callable, keys: List[str]
) -> Report:
    report = Report(name, command, config, seed)
    table = _load_table(config)
    section(PipelineState(table=table, config=_section_config(config, command, keys), seed=seed, report=report))
    return report


def run_simulate(config: Dict, seed: Optional[int], name: str) -> Report:
    seed = _require_seed(seed, "simulate")
    library = get_simulation_grids()
    report = Report(name, "simulate", config, seed)

    def grid_from(value) -> SimulationGrid:
        if isinstance(value, str):
            if value not in library["grids"]:
                raise ConfigurationError(f"unknown grid {value!r}, known: {sorted(library['grids'])}")
            value = library["grids"][value]
        value = dict(value)
        for key in ("replications", "horizon"):
            if config.get(key) is not None:
                value[key] = config[key]
        return SimulationGrid.from_dict(value, seed)

    if config.get("grid") is None and config.get("band") is None:
        raise ConfigurationError("simulate needs a grid, a band or both")

    if config.get("grid") is not None:
        grid = grid_from(config["grid"])
        result = run_simulation_grid(grid, workers=config.get("workers", 1))
        report.add_table("hurst", result.table_rows())
        report.add_table("cells", result.long_rows())
        advisories = result.advisories()
        if advisories:
            report.add_scalars("advisories", {f"note_{i}": a for i, a in enumerate(advisories, start=1)})

    band = config.get("band")
    if band is not None:
        if isinstance(band, str):
            if band not in library["bands"]:
                raise ConfigurationError(f"unknown band {band!r}, known: {sorted(library['bands'])}")
            band = library["bands"][band]
        if "grid" in band:
            band_grid = grid_from(band["grid"])
        elif isinstance(config.get("grid"), (str, dict)):
            band_grid = grid_from(config["grid"])
        else:
            raise ConfigurationError("band needs a grid to take its scheme and replications from")
        comparison = band_comparison(
            band_grid,
            float(band["scheme_value"]),
            int(band["index"]),
            parse_spec(band["perturbation"]),
            InnovationPlan.from_dict(band["iid"]),
            InnovationPlan.from_dict(band["non_iid"]),
        )
        report.add_table("band", comparison.rows())
        report.add_scalars("band_summary", comparison.as_dict())
    return report


def _regime(process: CoupledProcessConfig, params: TailCCParams) -> Regime:
    iid = process.innovations_x.kind is PlanKind.IID and process.innovations_y.kind is PlanKind.IID
    if params.identical:
        return Regime.IID_IDENTICAL if iid else Regime.NONIID_IDENTICAL
    return Regime.IID_DISTINCT if iid else Regime.NONIID_DISTINCT


def run_simulated_tailcc(config: Dict, seed: Optional[int], name: str) -> Report:
    seed = _require_seed(seed, "tailcc on simulated data")
    process = CoupledProcessConfig.from_dict(config["process"], seed)
    indices = [int(i) for i in config.get("indices", [1, 2, 3])]
    if len(indices) < 2:
        raise ConfigurationError("an ensemble profile needs at least two indices")
    alpha = config.get("alpha")
    if alpha is None:
        alpha = tail_index(process.perturbation).value
    if alpha is None:
        raise ConfigurationError("perturbation has no tail index, set alpha explicitly")
    weights = balance(process.perturbation)

    report = Report(name, "tailcc", config, seed)
    profile_rows, ratio_rows, condition_rows = [], [], []
    for qx, qy in config["quantile_pairs"]:
        # ensemble realizations are independent, the ordering in i is read at lag 0
        params = TailCCParams(0, qx, qy)
        label = quantile_label(qx, qy)
        estimates = ensemble_profile(process, indices, params)
        profile_rows += [{"quantiles": label, "i": i, **e.as_dict()} for i, e in zip(indices, estimates)]
        for i, estimate, ratio in zip(indices, estimates, empirical_ratios(estimates)):
            row = {"quantiles": label, "i": i, "empirical_ratio": ratio}
            try:
                row["predicted_ratio"] = predicted_ratio(process.b_scheme, i, alpha).predicted_ratio
            except ExtremalError as e:
                row["error"] = f"{type(e).__name__}: {e}"
            ratio_rows.append(row)

            regime = _regime(process, params)
            quantile_ratio = None
            if not regime.identical:
                quantile_ratio = quantile_ratio_term(estimate.threshold_x, estimate.threshold_y, alpha)
            try:
                condition = monotonicity_conditions(
                    process.b_scheme, process.a_scheme, alpha, weights, i, regime, quantile_ratio
                )
                condition_rows.append({"quantiles": label, **condition.as_dict()})
            except ExtremalError as e:
                condition_rows.append({"quantiles": label, "i": i, "error": f"{type(e).__name__}: {e}"})
    report.add_table("profile", profile_rows)
    report.add_table("ratios", ratio_rows)
    report.add_table("conditions", condition_rows)
    return report


def run_tailcc(config: Dict, seed: Optional[int], name: str) -> Report:
    if config.get("source") == "simulated":
        return run_simulated_tailcc(config, seed, name)
    return _run_section(name, "tailcc", config, seed, tailcc_section, ["pairs", "lags", "quantile_pairs"])


def run_memory(config: Dict, seed: Optional[int], name: str) -> Report:
    return _run_section(name, "memory", config, seed, memory_section, ["bandwidth_exponent", "scheme"])


def run_fit(config: Dict, seed: Optional[int], name: str) -> Report:
    return _run_section(name, "fit", config, seed, fit_section, ["families", "segments"])


def run_dip(config: Dict, seed: Optional[int], name: str) -> Report:
    seed = _require_seed(seed, "dip")
    return _run_section(name, "dip", config, seed, dip_section, ["n_bootstrap"])


def run_changepoint(config: Dict, seed: Optional[int], name: str) -> Report:
    return _run_section(
        name, "changepoint", config, seed, changepoint_section, ["max_changepoints", "min_segment", "alpha"]
    )


def run_bounds(config: Dict, seed: Optional[int], name: str) -> Report:
    spec = LinearCombinationSpec.from_dict(config)
    sample_size = config.get("sample_size")
    draws = None
    if sample_size:
        draws = sample_linear_combination(spec, int(sample_size), _require_seed(seed, "bounds with a sample"))
    slopes = slope_report(spec, draws, config.get("tail_fraction", 0.02))

    report = Report(name, "bounds", config, seed)
    report.add_table("terms", spec.as_dict()["terms"])
    report.add_scalars("slopes", slopes.as_dict())

    term = dominant_term(spec)
    alpha = tail_index(term.spec).value
    tied = [t.coefficient for t in spec.terms if tail_index(t.spec).value == alpha]
    positive, absolute = linear_combination_tail_constant(tied, alpha, term.balance)
    report.add_scalars("tail_constant", {"alpha": alpha, "positive": positive, "absolute": absolute})

    if draws is not None:
        low, high = slopes.threshold, float(np.max(draws))
    else:
        low, high = 1.0, 1000.0
    if low > 0 and high > low:
        x_grid = np.geomspace(low, high, int(config.get("curve_points", 50)))
        intercept = slopes.empirical_intercept if slopes.empirical_intercept is not None else 0.0
        report.add_table("curves", bound_curves(spec, x_grid, intercept))
    return report


def run_pipeline(config: Dict, seed: Optional[int], name: str) -> Report:
    seed = _require_seed(seed, "pipeline")
    table = _load_table(config)
    report = EmpiricalPipeline(config, name=name)(table, seed=seed)
    for section, error in report.errors.items():
        logger.warning("section %s recorded %s", section, error["error"])
    return report


RUNNERS: Dict[str, Callable[[Dict, Optional[int], str], Report]] = {
    "simulate": run_simulate,
    "tailcc": run_tailcc,
    "memory": run_memory,
    "fit": run_fit,
    "dip": run_dip,
    "changepoint": run_changepoint,
    "bounds": run_bounds,
    "pipeline": run_pipeline,
}


def required_failures(report: Report, config: Mapping) -> List[str]:
    """configured pipeline sections whose error the report recorded"""
    required = config.get("sections") or []
    return [name for name in report.errors if name in required]


def _csv_list(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extremal", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"extremal {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="json config merged over the packaged defaults")
    common.add_argument("--seed", type=int, help="master seed, required for stochastic commands")
    common.add_argument("--out", help="directory for <name>.report.json and the section csv files")
    common.add_argument("--name", help="report name, defaults to the command")
    common.add_argument("--debug", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", dest="input.path", help="price csv")
    data.add_argument("--columns", dest="input.columns", type=_csv_list, help="comma separated price columns")
    data.add_argument("--timestamp-column", dest="input.timestamp_column")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Hurst tables of the windowed coupled process")
    p.add_argument("--grid", dest="grid", help="packaged grid name, e.g. short_iid")
    p.add_argument("--band", dest="band", help="packaged band name, e.g. long_band")
    p.add_argument("--replications", dest="replications", type=int)
    p.add_argument("--horizon", dest="horizon", type=int)
    p.add_argument("--workers", dest="workers", type=int)

    p = sub.add_parser("tailcc", parents=[common, data], help="tail cross-correlation profiles")
    p.add_argument("--source", dest="source", choices=["csv", "simulated"])
    p.add_argument("--lags", dest="lags", type=lambda v: [int(x) for x in _csv_list(v)])

    p = sub.add_parser("memory", parents=[common, data], help="Hurst and GPH estimates")
    p.add_argument("--bandwidth-exponent", dest="bandwidth_exponent", type=float)

    p = sub.add_parser("fit", parents=[common, data], help="maximum likelihood fits with AIC/BIC")
    p.add_argument("--families", dest="families", type=_csv_list)

    p = sub.add_parser("dip", parents=[common, data], help="Hartigan dip test")
    p.add_argument("--n-bootstrap", dest="n_bootstrap", type=int)

    p = sub.add_parser("changepoint", parents=[common, data], help="binary segmentation change points")
    p.add_argument("--max-changepoints", dest="max_changepoints", type=int)
    p.add_argument("--min-segment", dest="min_segment", type=int)
    p.add_argument("--alpha", dest="alpha", type=float)

    p = sub.add_parser("bounds", parents=[common], help="log-tail slope bounds of a linear combination")
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--tail-fraction", dest="tail_fraction", type=float)

    sub.add_parser("pipeline", parents=[common, data], help="the full empirical report")
    return parser


_NOT_OVERRIDES = {"command", "config", "seed", "out", "name", "debug"}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO)
    logging.captureWarnings(True)
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_OVERRIDES}
    name = args.name or args.command
    try:
        config = resolve_config(args.command, args.config, overrides)
        report = RUNNERS[args.command](config, args.seed, name)
        if args.out:
            report.write(args.out)
    except ExtremalError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return exit_code_for(e)
    except Exception as e:
        logger.exception("%s failed", args.command)
        return exit_code_for(e)
    print(report.render())
    failed = required_failures(report, config)
    if failed:
        logger.error("required sections failed: %s", ", ".join(failed))
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
