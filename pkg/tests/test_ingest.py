import numpy as np
import pandas as pd
import pytest

from extremal.errors import DataError
from extremal.ingest import PriceTable, ingest_csv


def write(tmp_path, text, name="prices.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_three_rows(tmp_path):
    path = write(tmp_path, "timestamp,BTC,ETH\n1,100.5,20\n2,101,21\n3,99,20.5\n")
    table = ingest_csv(path)
    assert len(table) == 3
    assert table.names == ["BTC", "ETH"]
    assert table.column("BTC").tolist() == [100.5, 101, 99]
    assert table.timestamps.tolist() == [1, 2, 3]


def test_iso_timestamps_and_column_selection(tmp_path):
    path = write(
        tmp_path,
        "price,date,SOL\n1.5,2021-01-01,30\n1.6,2021-01-02,31\n1.7,2021-01-03,29\n",
    )
    table = ingest_csv(path, columns=["SOL"], timestamp_column="date")
    assert table.names == ["SOL"]
    assert isinstance(table.timestamps, pd.DatetimeIndex)


def test_non_numeric_value_reports_its_line(tmp_path):
    path = write(tmp_path, "timestamp,BTC\n1,100\n2,abc\n3,99\n")
    with pytest.raises(DataError, match="line 3") as e:
        ingest_csv(path)
    assert e.value.line == 3


def test_missing_column(tmp_path):
    path = write(tmp_path, "timestamp,BTC\n1,100\n2,101\n")
    with pytest.raises(DataError, match="ETH"):
        ingest_csv(path, columns=["BTC", "ETH"])


def test_timestamps_must_increase(tmp_path):
    path = write(tmp_path, "timestamp,BTC\n1,100\n3,101\n2,102\n")
    with pytest.raises(DataError) as e:
        ingest_csv(path)
    assert e.value.line == 4


def test_unparseable_timestamp(tmp_path):
    path = write(tmp_path, "timestamp,BTC\n2021-01-01,100\nyesterday,101\n")
    with pytest.raises(DataError) as e:
        ingest_csv(path)
    assert e.value.line == 3


def test_unreadable_inputs(tmp_path):
    with pytest.raises(DataError):
        ingest_csv(tmp_path / "absent.csv")
    with pytest.raises(DataError):
        ingest_csv(write(tmp_path, "timestamp,BTC\n", "header_only.csv"))
    with pytest.raises(DataError):
        ingest_csv(write(tmp_path, "timestamp\n1\n", "single_column.csv"))


def test_from_columns():
    table = PriceTable.from_columns({"A": [1, 2, 3], "B": [3, 2, 1]})
    assert np.array_equal(table.column("B"), [3.0, 2.0, 1.0])
    assert len(table) == 3
    with pytest.raises(DataError):
        table.column("C")
    with pytest.raises(DataError):
        PriceTable.from_columns({"A": [1, 2, 3], "B": [1, 2]})
    with pytest.raises(DataError):
        PriceTable.from_columns({"A": [1, 2]}, timestamps=[2, 1])
