import json
import os

import numpy as np
import pytest

from extremal import cli
from extremal.cli import main, resolve_config
from extremal.db import get_reference_values
from extremal.errors import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, ConfigurationError


def write_prices(path, columns, n=600):
    rng = np.random.default_rng(12)
    values = {c: rng.pareto(3, n) + 1 for c in columns}
    lines = ["timestamp," + ",".join(columns)]
    for t in range(n):
        lines.append(f"{t}," + ",".join(repr(float(values[c][t])) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def write_config(path, config):
    path.write_text(json.dumps(config), encoding="utf-8")
    return str(path)


def read_report(outdir, name):
    with open(os.path.join(outdir, f"{name}.report.json")) as h:
        return json.load(h)


def test_bounds_reproduces_the_worked_example(tmp_path, capsys):
    assert main(["bounds", "--out", str(tmp_path)]) == EXIT_OK
    slopes = read_report(tmp_path, "bounds")["sections"]["slopes"]["values"]
    expected = get_reference_values()["bounds"][0]
    assert slopes["slope_dominant"] == expected["slope_dominant"]
    assert slopes["slope_sum"] == pytest.approx(expected["slope_sum"])
    assert slopes["empirical_slope"] is None
    assert "[slopes]" in capsys.readouterr().out


def test_bounds_with_a_sample(tmp_path):
    assert main(["bounds", "--sample-size", "100000", "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
    report = read_report(tmp_path, "bounds")
    assert report["sections"]["slopes"]["values"]["empirical_slope"] < 0
    assert report["sections"]["tail_constant"]["values"]["alpha"] == 1
    assert os.path.exists(tmp_path / "bounds.curves.csv")


def test_bounds_sample_needs_a_seed():
    assert main(["bounds", "--sample-size", "1000"]) == EXIT_CONFIG


def test_simulate_writes_identical_files(tmp_path):
    argv = ["simulate", "--grid", "short_iid", "--replications", "1", "--horizon", "200", "--seed", "7"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "b")]) == EXIT_OK
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["simulate.cells.csv", "simulate.hurst.csv", "simulate.report.json"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = read_report(tmp_path / "a", "simulate")
    assert report["seed"] == 7
    assert report["config"]["replications"] == 1


def test_simulate_needs_a_seed():
    assert main(["simulate", "--grid", "short_iid"]) == EXIT_CONFIG


def test_unknown_grid():
    assert main(["simulate", "--grid", "no_such_grid", "--seed", "1"]) == EXIT_CONFIG


def test_simulated_tailcc(tmp_path):
    config = write_config(
        tmp_path / "tailcc.json",
        {
            "source": "simulated",
            "quantile_pairs": [[0.95, 0.95], [0.85, 0.95]],
            "process": {"horizon": 20000, "truncation_order": 20},
        },
    )
    assert main(["tailcc", "--config", config, "--seed", "5", "--out", str(tmp_path)]) == EXIT_OK
    sections = read_report(tmp_path, "tailcc")["sections"]
    assert len(sections["profile"]["rows"]) == 2 * 3
    for row in sections["ratios"]["rows"]:
        assert row["predicted_ratio"] == pytest.approx(0.125)
    regimes = {row["regime"] for row in sections["conditions"]["rows"]}
    assert regimes == {"iid-identical", "iid-distinct"}


def test_tailcc_on_a_csv(tmp_path):
    prices = write_prices(tmp_path / "prices.csv", ["BTC", "ETH", "SOL"])
    assert main(["tailcc", "--input", prices, "--lags", "1,3", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_report(tmp_path, "tailcc")["sections"]["tailcc"]["rows"]
    assert {(r["x"], r["y"]) for r in rows} == {("BTC", "ETH"), ("BTC", "SOL"), ("ETH", "SOL")}
    assert set(rows[0]) == {"x", "y", "quantiles", "lag_1", "lag_3"}


def test_memory_and_fit(tmp_path):
    prices = write_prices(tmp_path / "prices.csv", ["BTC"])
    assert main(["memory", "--input", prices, "--out", str(tmp_path)]) == EXIT_OK
    assert main(["fit", "--input", prices, "--families", "pareto,weibull", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_report(tmp_path, "fit")["sections"]["fit"]["rows"]
    assert {r["family"] for r in rows} == {"pareto", "weibull"}


def test_dip_and_changepoint(tmp_path):
    prices = write_prices(tmp_path / "prices.csv", ["BTC"])
    assert main(["dip", "--input", prices, "--n-bootstrap", "20"]) == EXIT_CONFIG
    assert main(["dip", "--input", prices, "--n-bootstrap", "20", "--seed", "2", "--out", str(tmp_path)]) == EXIT_OK
    assert read_report(tmp_path, "dip")["sections"]["dip"]["rows"][0]["n_bootstrap"] == 20
    assert main(["changepoint", "--input", prices, "--min-segment", "50"]) == EXIT_OK


def test_pipeline(tmp_path):
    prices = write_prices(tmp_path / "prices.csv", ["BTC", "ETH"])
    config = write_config(tmp_path / "pipeline.json", {"dip": {"n_bootstrap": 20}})
    argv = ["pipeline", "--input", prices, "--config", config, "--seed", "1", "--name", "run", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    report = read_report(tmp_path, "run")
    assert report["command"] == "pipeline"
    assert set(report["sections"]) == {"dip", "changepoint", "fit", "memory", "tailcc", "histogram"}


def test_missing_input():
    assert main(["memory"]) == EXIT_CONFIG


def test_unreadable_input(tmp_path):
    assert main(["memory", "--input", str(tmp_path / "absent.csv")]) == EXIT_DATA


def test_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("timestamp,BTC\n1,100\n2,n/a\n", encoding="utf-8")
    assert main(["fit", "--input", str(path)]) == EXIT_DATA


def test_constant_series_is_a_numerical_failure(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("timestamp,BTC\n" + "".join(f"{t},100\n" for t in range(300)), encoding="utf-8")
    assert main(["memory", "--input", str(path)]) == EXIT_NUMERICAL


def test_invalid_config_file(tmp_path):
    assert main(["bounds", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    config = write_config(tmp_path / "bounds.json", {"terms": []})
    assert main(["bounds", "--config", config]) == EXIT_CONFIG


def test_resolve_config_layers(tmp_path):
    config = write_config(tmp_path / "changepoint.json", {"min_segment": 50, "alpha": 0.01})
    resolved = resolve_config("changepoint", config, {"alpha": 0.1, "max_changepoints": None})
    assert resolved["min_segment"] == 50
    assert resolved["alpha"] == 0.1
    assert resolved["max_changepoints"] == 5
    with pytest.raises(ConfigurationError):
        resolve_config("changepoint", None, {"alpha": 2})


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "extremal" in capsys.readouterr().out


def test_failing_required_section(tmp_path):
    prices = write_prices(tmp_path / "prices.csv", ["BTC"])
    config = write_config(tmp_path / "pipeline.json", {"sections": ["tailcc", "histogram"]})
    argv = ["pipeline", "--input", prices, "--config", config, "--seed", "1", "--out", str(tmp_path)]
    assert main(argv) == EXIT_NUMERICAL
    report = read_report(tmp_path, "pipeline")
    assert report["sections"]["tailcc"]["values"]["error"] == "DataError"
    assert "histogram" in report["sections"]


def test_pipeline_without_failures(tmp_path):
    prices = write_prices(tmp_path / "prices.csv", ["BTC"])
    config = write_config(tmp_path / "pipeline.json", {"sections": ["histogram"]})
    assert main(["pipeline", "--input", prices, "--config", config, "--seed", "1"]) == EXIT_OK


def test_unwritable_output(tmp_path):
    blocked = tmp_path / "blocked"
    blocked.write_text("", encoding="utf-8")
    prices = write_prices(tmp_path / "prices.csv", ["BTC"])
    assert main(["memory", "--input", prices, "--out", str(blocked)]) == EXIT_DATA


def test_unexpected_error_is_a_numerical_failure(monkeypatch):
    def broken(config, seed, name):
        raise FloatingPointError("overflow")

    monkeypatch.setitem(cli.RUNNERS, "bounds", broken)
    assert main(["bounds"]) == EXIT_NUMERICAL
