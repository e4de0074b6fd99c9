import csv
import io
import json

import pytest

from tdm.cli import ConfigError, RunConfig, main, read_records, resolve_threads, write_records
from tdm.seriesx import CumulantRecord, extract_alpha


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_expand_csv(capsys):
    code, out, _ = run(capsys, "expand", "--v", "3", "--kmax", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 27
    row = next(r for r in rows if r["kappa"] == "1;1;2")
    assert row["alpha"] == "848" and row["source"] == "ENGINE"


def test_expand_text(capsys):
    code, out, _ = run(capsys, "expand", "--v", "1", "--kmax", "4")
    assert code == 0
    assert [line.split()[2] for line in out.splitlines()] == ["1", "2", "6", "22"]


@pytest.mark.parametrize(
    "argv",
    [
        ("expand", "--v", "0", "--kmax", "2"),
        ("expand", "--v", "9", "--kmax", "2"),
        ("expand", "--v", "2", "--kmax", "0"),
        ("mc", "--beta", "2", "--samples", "10"),
        ("mc", "--beta", "3"),
        ("gen",),
        ("frobnicate",),
        ("verify", "--v", "2"),
    ],
)
def test_config_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert len(err.strip().splitlines()) == 1 and err.startswith("tdm: error:")


def test_json_schema_and_roundtrip(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert main(["expand", "--v", "5", "--kmax", "3", "--format", "json", "-o", str(path)]) == 0
    data = json.loads(path.read_text())
    top = next(d for d in data if d["kappa"] == [3, 3, 3, 3, 3])
    assert top == {"v": 5, "kappa": [3, 3, 3, 3, 3], "alpha": "3599012231119872", "beta_exponent": -4, "source": "ENGINE"}
    with open(path) as fh:
        back = read_records(fh)
    assert back == extract_alpha(5, 3)


def test_csv_roundtrip():
    recs = extract_alpha(2, 3)
    buf = io.StringIO()
    write_records(recs, "csv", buf)
    buf.seek(0)
    assert read_records(buf, "csv") == recs


def test_json_rejects_inconsistent_beta_exponent():
    bad = io.StringIO('[{"v": 2, "kappa": [1, 1], "alpha": "4", "beta_exponent": 0, "source": "ENGINE"}]')
    with pytest.raises(ValueError):
        read_records(bad)


def test_export_converts(tmp_path, capsys):
    path = tmp_path / "r.csv"
    main(["expand", "--v", "2", "--kmax", "2", "--format", "csv", "-o", str(path)])
    code, out, _ = run(capsys, "export", "--input", str(path), "--format", "json")
    assert code == 0
    assert read_records(io.StringIO(out)) == extract_alpha(2, 2)


def test_export_table_and_closed(capsys):
    code, out, _ = run(capsys, "export", "--table")
    recs = read_records(io.StringIO(out))
    assert code == 0 and len(recs) == 53 and all(r.source == "TABLE" for r in recs)
    code, out, _ = run(capsys, "export", "--closed", "2", "--kmax", "2", "--format", "csv")
    assert code == 0 and "2,1;2,24,CLOSED_FORM" in out


def test_export_missing_file(capsys):
    code, _, err = run(capsys, "export", "--input", "/nonexistent/x.json")
    assert code == 2 and "cannot read" in err


def test_expand_is_byte_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    main(["expand", "--v", "3", "--kmax", "2", "--format", "json", "-o", str(p1)])
    main(["expand", "--v", "3", "--kmax", "2", "--format", "json", "-o", str(p2)])
    assert p1.read_bytes() == p2.read_bytes()


def test_mc_deterministic_across_threads(tmp_path, monkeypatch):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["mc", "--beta", "2", "--N", "20", "--samples", "200", "--seed", "3", "--format", "csv"]
    assert main(args + ["--threads", "1", "-o", str(p1)]) == 0
    monkeypatch.setenv("TDM_THREADS", "3")
    assert main(args + ["--threads", "1", "-o", str(p2)]) == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_mc_json_fields(capsys):
    code, out, _ = run(capsys, "mc", "--beta", "1", "--N", "20", "--samples", "150", "--seed", "1", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    r11 = next(r for r in rows if r["kappa"] == [1, 1])
    assert r11["target"] == 4.0  # doubled for beta = 1
    assert set(r11) == {"v", "kappa", "estimate", "stderr", "target", "z"}


def test_threads_env_override(monkeypatch):
    monkeypatch.setenv("TDM_THREADS", "5")
    assert resolve_threads(2) == 5
    monkeypatch.delenv("TDM_THREADS")
    assert resolve_threads(2) == 2
    assert resolve_threads(None) >= 1
    monkeypatch.setenv("TDM_THREADS", "many")
    with pytest.raises(ConfigError):
        resolve_threads(None)


def test_runconfig_validation():
    with pytest.raises(ConfigError):
        RunConfig("mc", beta=2, samples=99).validate()
    with pytest.raises(ConfigError):
        RunConfig("expand", v=8, vmax=7).validate()
    assert RunConfig("expand", v=7).validate().v == 7


def test_gen_outputs(capsys):
    code, out, _ = run(capsys, "gen", "--v", "1", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["v"] == 1 and d["beta_exponent"] == 0
    code, out, _ = run(capsys, "gen", "--v", "2", "--beta", "2")
    assert code == 0 and "beta" not in out


def test_records_sorted_lexicographically():
    recs = [CumulantRecord(2, (2, 1), 24), CumulantRecord(2, (1, 2), 24)]
    assert sorted(recs)[0].kappa == (1, 2)


def test_verify_default_and_corrupted(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "0 failed" in out
    code, out, _ = run(capsys, "verify", "--corrupt", "3:1,1,2=849")
    assert code == 1
    failing = [line for line in out.splitlines() if line.startswith("FAIL ")]
    assert len(failing) == 1 and "table v=3" in failing[0]


@pytest.mark.slow
def test_verify_v6_structure(capsys):
    code, out, _ = run(capsys, "verify", "--v", "6")
    assert code == 0
    line = next(line for line in out.splitlines() if "structure v=6" in line)
    assert line.startswith("PASS")
