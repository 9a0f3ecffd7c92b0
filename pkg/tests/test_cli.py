import csv
import io
import json
from pathlib import Path

import pytest

from edgelink.cli import (TASKS, _validated_params, build_parser, config_from_args, main, sweep,
                          window_point)

CONFIGS = sorted((Path(__file__).parents[1] / "configs").glob("*.json"))


def _run(tmp_path, argv, name="out.csv"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_spectrum_row_count(tmp_path):
    code, out = _run(tmp_path, ["spectrum", "--L", "35", "--eps", "-1.75", "--g", "0"])
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 1227
    assert [float(r["eigenvalue"]) for r in rows] == sorted(float(r["eigenvalue"]) for r in rows)


def test_unknown_parameter_is_invalid(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"task": "omega-sweep", "system": {"lx": 7},
                               "task_params": {"bogus": 1}}))
    code, out = _run(tmp_path, ["--config", str(cfg)])
    assert code == 2
    assert not out.exists()
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["error"] == "SpecError"


def test_unknown_config_key_is_invalid(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"task": "spectrum", "system": {"lx": 5}, "extra": 1}))
    assert _run(tmp_path, ["--config", str(cfg)])[0] == 2


def test_solver_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"task": "calibrate", "system": {"lx": 21},
                               "task_params": {"eps_tilde": 0.3}}))
    code, out = _run(tmp_path, ["--config", str(cfg)])
    assert code == 3
    assert not out.exists()
    assert json.loads(capsys.readouterr().err)["exit_code"] == 3


def test_bad_geometry_is_invalid(tmp_path):
    assert _run(tmp_path, ["spectrum", "--lx", "7", "--ly", "0"])[0] == 2


def test_argparse_rejects_unknown_flag():
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--nonsense"])
    assert exc.value.code == 2


def _sweep_cfg(tmp_path, workers):
    cfg = tmp_path / f"w{workers}.json"
    cfg.write_text(json.dumps({"task": "omega-sweep", "system": {"lx": 11},
                               "task_params": {"g2L": [0.1, 1.0], "n_eps": 3,
                                               "eps_center": -1.5},
                               "workers": workers}))
    return cfg


def test_sweep_output_is_deterministic(tmp_path):
    a = _run(tmp_path, ["--config", str(_sweep_cfg(tmp_path, 1))], "a.csv")[1].read_bytes()
    b = _run(tmp_path, ["--config", str(_sweep_cfg(tmp_path, 1))], "b.csv")[1].read_bytes()
    c = _run(tmp_path, ["--config", str(_sweep_cfg(tmp_path, 2))], "c.csv")[1].read_bytes()
    assert a == b == c
    rows = _rows(tmp_path / "a.csv")
    assert len(rows) == 6
    assert [float(r["g2L"]) for r in rows] == [0.1] * 3 + [1.0] * 3
    assert all(r["error"] == "" for r in rows)


def test_env_worker_fallback(monkeypatch):
    monkeypatch.setenv("EDGELINK_WORKERS", "3")
    assert config_from_args(build_parser().parse_args(["spectrum", "--L", "5"])).workers == 3
    args = build_parser().parse_args(["spectrum", "--L", "5", "--workers", "2"])
    assert config_from_args(args).workers == 2


def test_single_point_grid_equals_direct_call():
    base = {"L": 11, "j": 1.0, "blue_rows": "even", "eps_center": -1.5, "xtol": 1e-12}
    t = sweep(window_point, {"g2L": [0.3], "eps_tilde_frac": [0.25]}, base)
    direct = window_point(dict(base, g2L=0.3, eps_tilde_frac=0.25))
    row = dict(t.rows[0])
    assert row.pop("error") == ""
    assert row == direct


def test_csv_format(tmp_path):
    code, out = _run(tmp_path, ["omega-sweep", "--L", "11", "--config",
                                str(_sweep_cfg(tmp_path, 1))])
    assert code == 0
    text = out.read_text()
    assert "\r" not in text and text.endswith("\n")
    header = text.splitlines()[0].split(",")
    for col in ("g2L", "eps_tilde_frac", "omega_over_dE", "omega_lo", "omega_hi", "F_numeric",
                "error"):
        assert col in header


def test_json_output(tmp_path):
    code, out = _run(tmp_path, ["boundary-roots", "--L", "7", "--eps", "-1.6", "--g", "0.2",
                                "--format", "json"], "r.json")
    assert code == 0
    rows = json.loads(out.read_text())
    # levels with no weight on the corner site never couple and are omitted
    assert 0 < len(rows) <= 51
    assert sum(r["qubit_weight"] for r in rows) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("path", CONFIGS, ids=[p.stem for p in CONFIGS])
def test_shipped_configs_validate(path):
    cfg = config_from_args(build_parser().parse_args(["--config", str(path)]))
    assert cfg.task in TASKS
    _validated_params(cfg.task, cfg.task_params)
    assert cfg.out and cfg.out.endswith(".csv")
