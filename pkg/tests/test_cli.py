import csv
import json
import math
import re

import pytest

from bellmd import chsh
from bellmd.cli import main

C06 = {"schema_version": 1, "grid": [8, 8], "layout": "default", "correlation": 0.6,
       "estimator": {"seed": 7}}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_analyze_c06(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, C06), "--out", str(out)]) == 0
    row = _rows(out / "report.csv")[0]
    assert float(row["S"]) == pytest.approx(2.4, abs=1e-12)
    assert float(row["mu_general"]) == pytest.approx(1.8, abs=1e-12)
    assert abs(float(row["mu_general"]) - float(row["mu_analytic"])) <= 1e-9
    assert float(row["slack"]) == pytest.approx(1.4, abs=1e-12)
    assert row["satisfied"] == "1" and row["consistent"] == "1"
    for key in ("ab", "abp", "apb", "apbp"):
        prior = _rows(out / f"prior_{key}.csv")
        assert len(prior) == 64
        assert math.fsum(float(r["mass"]) for r in prior) == pytest.approx(1.0, abs=1e-10)
    assert b"\r\n" not in (out / "report.csv").read_bytes()


@pytest.mark.parametrize("c, s, mu", [(0.0, 0.0, 0.0), (1 / math.sqrt(2), 2.8284, 2.1213)])
def test_analyze_examples(tmp_path, c, s, mu):
    out = tmp_path / "out"
    assert main(["analyze", "--config", _write(tmp_path, {**C06, "correlation": c}), "--out", str(out)]) == 0
    row = _rows(out / "report.csv")[0]
    assert float(row["S"]) == pytest.approx(s, abs=1e-4)
    assert float(row["mu_general"]) == pytest.approx(mu, abs=1e-4)


def test_analyze_explicit_probabilities(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", "configs/explicit_probs.json", "--out", str(out)]) == 0
    row = _rows(out / "report.csv")[0]
    assert row["mu_analytic"] == ""
    assert float(row["S"]) <= 2 + float(row["mu_general"])


def test_exit_code_config_error(tmp_path, capsys):
    assert main(["analyze", "--config", _write(tmp_path, {**C06, "grid": [7, 8]})]) == 2
    assert main(["analyze", "--config", str(tmp_path / "nope.json")]) == 2
    assert "config error" in capsys.readouterr().err


def test_exit_code_consistency(tmp_path, monkeypatch):
    monkeypatch.setattr(chsh, "mu_toy_analytic", lambda probs: 0.5)
    assert main(["analyze", "--config", _write(tmp_path, C06), "--out", str(tmp_path / "out")]) == 3


def test_simulate_small_n_fails_gates(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", "--config", _write(tmp_path, C06), "--out", str(out), "--n", "10"])
    assert code == 4
    err = capsys.readouterr().err
    assert "pre_hit_tv" in err and "arrival_reliable" in err
    rows = _rows(out / "mc_report.csv")
    assert any("InsufficientSamples" in r["key"] for r in rows)
    meta = {r["key"]: r["value"] for r in rows if r["statistic"] == "meta"}
    assert meta["seed"] == "7" and meta["n_trajectories"] == "10" and "PCG64" in meta["rng"]


def test_simulate_same_seed_byte_identical(tmp_path):
    cfg = _write(tmp_path, C06)
    for d in ("a", "b"):
        main(["simulate", "--config", cfg, "--out", str(tmp_path / d), "--n", "300"])
    a = (tmp_path / "a" / "mc_report.csv").read_bytes()
    assert a == (tmp_path / "b" / "mc_report.csv").read_bytes()
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--n", "300", "--seed", "8"])
    assert a != (tmp_path / "c" / "mc_report.csv").read_bytes()


def test_simulate_rejects_bad_n(tmp_path):
    assert main(["simulate", "--config", _write(tmp_path, C06), "--out", str(tmp_path), "--n", "0"]) == 2


def test_sweep_default(tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", "--out", str(out)]) == 0
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 101
    s = [float(r["S"]) for r in rows]
    slack = [float(r["slack"]) for r in rows]
    assert max(s) == pytest.approx(4.0) and float(rows[-1]["c"]) == 1.0
    assert min(slack) == pytest.approx(1.0)
    assert float(rows[50]["c"]) == 0.5 and float(rows[50]["S"]) == 2.0
    for r in rows:
        assert float(r["slack"]) == pytest.approx(2 - abs(float(r["c"])), abs=1e-12)


def test_sweep_symmetric(tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", "--out", str(out), "--c-min", "-1", "--c-max", "1", "--steps", "41"]) == 0
    s = [float(r["S"]) for r in _rows(out / "sweep.csv")]
    assert s == pytest.approx(s[::-1], abs=1e-12)


@pytest.mark.parametrize("args", [["--c-min", "0.5", "--c-max", "0.2"], ["--c-max", "1.5"], ["--steps", "1"]])
def test_sweep_bad_range(tmp_path, args):
    assert main(["sweep", "--out", str(tmp_path), *args]) == 2


def _levels(svg_text):
    return {(int(a), int(b)): float(c) for a, b, c in
            re.findall(r'data-l1="(\d+)" data-l2="(\d+)" data-mass="[^"]*" data-level="([^"]+)"', svg_text)}


def test_render_swapped_shading(tmp_path):
    out = tmp_path / "out"
    assert main(["render", "--config", _write(tmp_path, C06), "--out", str(out)]) == 0
    red = _levels((out / "prior_ab.svg").read_text())
    green = _levels((out / "prior_abp.svg").read_text())
    assert len(red) == 64
    assert red[(0, 0)] == 1.0 and green[(0, 0)] == 0.0
    assert red[(0, 1)] == 0.0 and green[(0, 1)] == 1.0
    assert len(set(red.values())) == 2
    assert (out / "prior_ab.svg").read_text().count("data-target=") == 4


def test_render_uniform_at_c0(tmp_path):
    out = tmp_path / "out"
    assert main(["render", "--config", _write(tmp_path, {**C06, "correlation": 0}), "--out", str(out)]) == 0
    assert set(_levels((out / "prior_ab.svg").read_text()).values()) == {0.5}
