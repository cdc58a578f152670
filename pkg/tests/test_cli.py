import json

import pytest

from hexsyn.cli import main


def test_layout_command(tmp_path, capsys):
    assert main(["layout", "--distance", "3", "--out", str(tmp_path / "l.json")]) == 0
    assert "23 qubits" in capsys.readouterr().out
    assert json.loads((tmp_path / "l.json").read_text())["format_version"] == 1


def test_pipeline(tmp_path, capsys):
    z, x = tmp_path / "z.bin", tmp_path / "x.txt"
    assert main(["sample", "--mode", "z", "--cycles", "3", "--p", "0.03", "--shots", "3000", "--out", str(z)]) == 0
    assert main(["sample", "--mode", "x", "--cycles", "3", "--p", "0.03", "--shots", "3000", "--seed", "1", "--out", str(x)]) == 0
    assert main(["analyze", "--data", str(z), "--out", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text().startswith("operator_id,cycle")
    assert main(["correlate", "--data", str(z), "--out-dir", str(tmp_path / "c"), "--resamples", "5"]) == 0
    assert main(["fit", "--data", str(z), str(x), "--variant", "uniform", "--out", str(tmp_path / "f.json")]) == 0
    fit = json.loads((tmp_path / "f.json").read_text())
    assert abs(fit["params"]["p"] - 0.03) < 0.005
    rep = tmp_path / "rep"
    assert main(["report", "--data", str(z), str(x), "--out-dir", str(rep), "--variant", "uniform", "--resamples", "3"]) == 0
    for name in ("run0_rates.csv", "run0_rates.png", "run0_correlations.png", "fit.json", "fit.png", "summary.json"):
        assert (rep / name).exists(), name


def test_circuit_exact_and_ingest(tmp_path, capsys):
    c = tmp_path / "z0.txt"
    assert main(["circuit", "--family", "gauge", "--operator", "Z0", "--input", "11", "--out", str(c)]) == 0
    capsys.readouterr()
    assert main(["exact", "--circuit", str(c), "--p", "0.03"]) == 0
    out = capsys.readouterr().out
    assert "3*p - 15/2*p^2" in out
    assert main(["exact", "--circuit", str(c), "--p", "0.03", "--engine", "dense"]) == 0
    raw = tmp_path / "raw.txt"
    raw.write_text("000\n110\n")
    assert main(["ingest", "--circuit", str(c), "--input", str(raw), "--device-map", "bit", "--out", str(tmp_path / "a.txt")]) == 0


def test_exit_codes(tmp_path, capsys):
    assert main(["analyze", "--data", str(tmp_path / "missing.bin")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--shots", "10"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    assert main(["circuit", "--family", "gauge"]) == 2
    assert main(["circuit", "--family", "gauge", "--operator", "Q9"]) == 1
