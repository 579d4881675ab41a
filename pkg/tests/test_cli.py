import json
import math

import pytest

from unidisc.cli import load_schema, main

DC = {
    "subcommand": "discretize-check",
    "dictionary": {"family": "trig", "M": 2, "d": 1},
    "sampling": {"mode": "equispaced", "m": 5},
    "params": {"v": 2},
}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


def _run(tmp_path, cfg, out="out", *extra):
    return main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / out), *extra])


def _results(tmp_path, out="out"):
    return json.loads((tmp_path / out / "results.json").read_text())["results"]


def test_discretize_check_exact(tmp_path):
    assert _run(tmp_path, DC) == 0
    cert = _results(tmp_path)["certificate"]
    assert cert["holds"]
    assert cert["C1_global"] == pytest.approx(1, abs=1e-10)
    assert cert["C2_global"] == pytest.approx(1, abs=1e-10)
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert set(man) >= {"config_hash", "version", "seed", "wall_clock_seconds", "outputs"}
    assert man["outputs"] == ["points.csv", "results.json"]


def test_lowerbound_certificate(tmp_path):
    cfg = {"subcommand": "lowerbound", "dictionary": {"family": "sine", "N": 64}, "sampling": {"m": 2}}
    assert _run(tmp_path, cfg) == 0
    res = _results(tmp_path)
    assert res["certificate"] is not None
    assert res["certificate"]["discrete_mean"] < 0.5
    assert res["one_sided_check"]["holds"] is False
    assert res["threshold_m"] == pytest.approx(math.log(64) / math.log(2 * math.pi))


def test_v_exceeds_n_is_rejected(tmp_path, capsys):
    cfg = {"subcommand": "rip", "dictionary": {"family": "trig-contiguous", "N": 8},
           "sampling": {"m": 5}, "params": {"v": 9}}
    assert _run(tmp_path, cfg) == 2
    err = capsys.readouterr().err
    lines = (tmp_path / "cfg.json").read_text().splitlines()
    lineno = int(err.split(":")[2])
    assert '"v"' in lines[lineno - 1]
    assert not (tmp_path / "out").exists()


def test_unknown_key_is_rejected(tmp_path, capsys):
    cfg = dict(DC, params={"v": 2, "bogus": 1})
    assert _run(tmp_path, cfg) == 2
    err = capsys.readouterr().err
    lineno = int(err.split(":")[2])
    assert '"bogus"' in (tmp_path / "cfg.json").read_text().splitlines()[lineno - 1]
    assert not (tmp_path / "out").exists()


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "subcommand": "rip",\n  oops\n}\n')
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 2
    assert ":3:" in capsys.readouterr().err


def test_cap_exit_code(tmp_path):
    cfg = {"subcommand": "discretize-check", "dictionary": {"family": "trig-contiguous", "N": 30},
           "sampling": {"m": 40}, "params": {"v": 10}}
    assert _run(tmp_path, cfg, "out", "--cap", "1000") == 3
    assert not (tmp_path / "out").exists()


def test_rerun_is_byte_identical(tmp_path):
    cfg = {"subcommand": "recover", "dictionary": {"family": "trig-contiguous", "N": 8},
           "sampling": {"m": 40}, "params": {"v": 1, "n_targets": 5}, "seed": 3}
    assert _run(tmp_path, cfg, "a") == 0
    assert _run(tmp_path, cfg, "b") == 0
    for name in ("results.json", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    ma.pop("wall_clock_seconds"), mb.pop("wall_clock_seconds")
    assert ma == mb


def test_seed_flag_overrides(tmp_path):
    cfg = dict(DC, sampling={"mode": "iid-uniform", "m": 8})
    assert _run(tmp_path, cfg, "a", "--seed", "1") == 0
    assert _run(tmp_path, cfg, "b", "--seed", "2") == 0
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 1
    assert (tmp_path / "a" / "points.csv").read_text() != (tmp_path / "b" / "points.csv").read_text()


SMALL_RUNS = [
    {"subcommand": "rip", "dictionary": {"family": "trig", "M": 3}, "sampling": {"m": 12}, "params": {"v": 2}},
    {"subcommand": "sweep-m", "dictionary": {"family": "trig", "M": 2}, "sampling": {"m_sweep": [4, 8]},
     "params": {"v": 2, "trials": 10}},
    {"subcommand": "sweep-m", "dictionary": {"family": "trig", "M": 2}, "params": {"v": 1, "trials": 10}},
    {"subcommand": "lebesgue", "dictionary": {"family": "trig-contiguous", "N": 8},
     "sampling": {"m": 48}, "params": {"v": 1, "n_targets": 3}},
    {"subcommand": "ls-universal", "dictionary": {"family": "trig", "M": 2},
     "sampling": {"m": 20}, "params": {"v": 2, "deltas": [0.01]}},
    {"subcommand": "block-greedy", "dictionary": {"family": "trig", "d": 1},
     "sampling": {"m": 16}, "params": {"a": 0.5, "max_level": 4, "n_values": [2, 3]}},
    {"subcommand": "entropy", "dictionary": {"family": "trig-contiguous", "N": 8},
     "params": {"v": 2, "k_max": 3, "grid_size": 64}},
    {"subcommand": "recover", "dictionary": {"family": "hyperbolic-cross", "N": 2, "d": 2},
     "params": {"v": 1, "n_targets": 3}},
]


@pytest.mark.parametrize("cfg", SMALL_RUNS, ids=[c["subcommand"] for c in SMALL_RUNS])
def test_every_subcommand_runs(tmp_path, cfg):
    assert _run(tmp_path, cfg) == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    for name in man["outputs"]:
        assert (tmp_path / "out" / name).exists()


def test_schema_rejects_unknown_subcommand(tmp_path):
    assert _run(tmp_path, dict(DC, subcommand="nope")) == 2


def test_schema_is_published(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out) == load_schema()


# -- report ------------------------------------------------------------------


def test_report_empty_dir(tmp_path):
    assert main(["report", str(tmp_path)]) == 0
    assert (tmp_path / "summary.csv").read_text().splitlines() == ["table,group,run,x,y,low,high"]
    assert "No runs found" in (tmp_path / "summary.md").read_text()


def _two_sweeps(tmp_path):
    base = {"subcommand": "sweep-m", "dictionary": {"family": "trig", "M": 2}, "params": {"v": 2, "trials": 10}}
    _run(tmp_path, dict(base, sampling={"m_sweep": [4, 8]}), "res/s1")
    _run(tmp_path, dict(base, sampling={"m_sweep": [8, 16]}, seed=5), "res/s2")
    return tmp_path / "res"


def test_report_merges_sweeps(tmp_path):
    root = _two_sweeps(tmp_path)
    assert main(["report", str(root)]) == 0
    md = (root / "summary.md").read_text()
    assert md.count("## sweep:") == 1
    table = md.split("## sweep:")[1]
    assert "| m | s1 | s2 |" in table
    for m in ("| 4 |", "| 8 |", "| 16 |"):
        assert m in table


def test_report_is_deterministic(tmp_path):
    root = _two_sweeps(tmp_path)
    main(["report", str(root), "--out", str(tmp_path / "r1")])
    main(["report", str(root), "--out", str(tmp_path / "r2")])
    for name in ("summary.csv", "summary.md"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_report_skips_corrupt_manifest(tmp_path, capsys):
    root = _two_sweeps(tmp_path)
    bad = root / "broken"
    bad.mkdir()
    (bad / "manifest.json").write_text("{not json")
    assert main(["report", str(root)]) == 0
    assert "warning" in capsys.readouterr().err
    md = (root / "summary.md").read_text()
    assert "## Skipped" in md and "broken" in md
