import numpy as np
import pytest

from infer.errors import CsvFormatError
from infer.model import ChangeReport
from toolkits.csv_io import (emit_report, load_csv, read_changes, read_matrix, read_metadata,
                             write_changes)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_rows(tmp_path):
    Y = load_csv(write(tmp_path, "1,2,3,4\n5,6,7,8\n9,10,11,12\n"))
    assert Y.shape == (3, 4)
    assert Y.values[1, 2] == 7.0


def test_load_columns(tmp_path):
    Y = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n7,8\n"), orientation="columns")
    assert Y.shape == (2, 4)
    np.testing.assert_array_equal(Y.values[0], [1, 3, 5, 7])


def test_load_with_header_and_blank_lines(tmp_path):
    Y = load_csv(write(tmp_path, "a,b,c\n1,2,3\n\n4,5,6\n"))
    np.testing.assert_array_equal(Y.values, [[1, 2, 3], [4, 5, 6]])


def test_standardize(tmp_path):
    Y = load_csv(write(tmp_path, "1,2,3,4\n10,10,10,10\n"), standardize=True)
    assert Y.values[0].mean() == pytest.approx(0.0)
    assert Y.values[0].std(ddof=1) == pytest.approx(1.0)
    np.testing.assert_array_equal(Y.values[1], 0.0)


def test_non_numeric_cell_reports_position(tmp_path):
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, "1,2,3\n4,abc,6\n"))
    assert exc.value.line == 2
    assert exc.value.column == 2


def test_non_finite_cell_rejected(tmp_path):
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, "1,2,3\n4,inf,6\n"))
    assert exc.value.line == 2


def test_ragged_rows(tmp_path):
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, "1,2,3\n4,5\n"))
    assert exc.value.line == 2
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, "1,2,3\n4,5,6,7\n", name="long.csv"))
    assert exc.value.line == 2


def test_row_of_empty_fields_is_reported(tmp_path):
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, "1,2,3\n,,\n4,5,6\n"))
    assert exc.value.line == 2
    assert exc.value.column == 1
    # also when it would otherwise be taken for a header
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, ",,\n1,2,3\n4,5,6\n", name="lead.csv"))
    assert exc.value.line == 1
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, "1,2,3\n4,,6\n", name="gap.csv"))
    assert (exc.value.line, exc.value.column) == (2, 2)


def test_empty_file(tmp_path):
    with pytest.raises(CsvFormatError) as exc:
        load_csv(write(tmp_path, ""))
    assert exc.value.line == 1


def test_bad_orientation(tmp_path):
    with pytest.raises(ValueError):
        load_csv(write(tmp_path, "1,2,3\n"), orientation="diagonal")


def make_report(cpt0=(4,), cpt1=(7,)):
    rng = np.random.default_rng(0)
    g0 = np.zeros(10)
    g1 = np.zeros(10)
    for n in cpt0:
        g0[n - 1] = 2.5
    for n in cpt1:
        g1[n - 1] = -1.0 / 3.0
    return ChangeReport(cpt0=list(cpt0), cpt1=list(cpt1), S_hat=rng.normal(size=(2, 10)),
                        M_hat=rng.normal(size=(3, 2)), psi_hat=rng.uniform(size=3),
                        g0_hat=g0, g1_hat=g1, cutoff0=0.1, cutoff1=float("inf") if not cpt1 else 0.1,
                        metadata={"seed": 3, "K": 2, "prune": False})


def test_emit_report_writes_every_file(tmp_path):
    report = make_report()
    paths = emit_report(report, tmp_path / "out")
    for key in ("changes", "sources", "mixing", "noise", "g_series", "metadata"):
        assert paths[key].exists()

    np.testing.assert_allclose(read_matrix(paths["sources"]), report.S_hat, rtol=0, atol=1e-10)
    np.testing.assert_allclose(read_matrix(paths["mixing"]), report.M_hat, rtol=0, atol=1e-10)
    np.testing.assert_allclose(read_matrix(paths["noise"]).ravel(), report.psi_hat, rtol=0, atol=1e-10)
    assert read_changes(paths["changes"]) == ([4], [7])

    lines = paths["changes"].read_text().splitlines()
    assert lines[0] == "index,type,g_value"
    assert lines[1].startswith("4,AO,2.5")

    meta = read_metadata(paths["metadata"])
    assert meta["seed"] == "3"
    assert meta["n_ao"] == "1" and meta["n_ls"] == "1"
    assert meta["prune"] == "False"


def test_infinite_cutoff_and_empty_changes(tmp_path):
    paths = emit_report(make_report(cpt0=(), cpt1=()), tmp_path)
    assert paths["changes"].read_text().splitlines() == ["index,type,g_value"]
    assert read_changes(paths["changes"]) == ([], [])
    assert read_metadata(paths["metadata"])["cutoff1"] == "inf"


def test_changes_sorted_by_index(tmp_path):
    path = write_changes(tmp_path / "c.csv", [9], [2, 5])
    kinds = [line.split(",")[1] for line in path.read_text().splitlines()[1:]]
    assert kinds == ["LS", "LS", "AO"]


def test_read_changes_rejects_unknown_type(tmp_path):
    path = write(tmp_path, "index,type\n3,AO\n5,XX\n", name="bad.csv")
    with pytest.raises(CsvFormatError) as exc:
        read_changes(path)
    assert exc.value.line == 3
