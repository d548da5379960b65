import json
import subprocess
import sys
from pathlib import Path

import pytest

from maxcon import cli
from maxcon.config import RunConfig, load_config, parse_config
from maxcon.constants import CheckRecord, report_json
from maxcon.derham_grid import BoundarySpec, MaterialField, build_grid
from maxcon.dual_pair import DEFAULT_SEED
from maxcon.errors import ValidationError


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


def _strip_time(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return doc


# ----------------------------------------------------------------------------
# config


def test_config_defaults():
    cfg = parse_config({"grid": {"n": 4}})
    assert cfg.n == (4, 4, 4) and cfg.L == (1.0, 1.0, 1.0)
    assert cfg.bc == BoundarySpec.dirichlet()
    assert (cfg.tol, cfg.maxit, cfg.seed, cfg.dense_cap) == (1e-8, 10000, DEFAULT_SEED, 2000)
    assert cfg.material().is_identity
    assert cfg.json_out is None and cfg.csv_out is None


def test_config_full():
    cfg = parse_config({
        "grid": {"n": [2, 3, 4], "L": [1, 2, 3]},
        "bc": ["tangential", "normal", "normal", "normal", "normal", "tangential"],
        "eps": {"diag": [1, 2, 3]},
        "solver": {"tol": 1e-9, "maxit": 50, "seed": 7, "dense_cap": 100},
        "outputs": {"json": "a.json", "csv": "b.csv"},
    })
    assert cfg.grid.n == (2, 3, 4)
    assert cfg.bc.tangential_faces == ("x0", "z1")
    assert cfg.material().eps[0].tolist() == [1.0, 2.0, 3.0]
    assert cfg.settings.seed == 7 and cfg.settings.tol == 1e-9
    assert cfg.json_out == Path("a.json")
    assert cfg.with_seed(3).seed == 3 and cfg.with_seed(None).seed == 7


@pytest.mark.parametrize("doc", [
    {},
    {"grid": {"n": 4}, "extra": 1},
    {"grid": {"n": 4, "m": 2}},
    {"grid": {"n": 1}},
    {"grid": {"n": [2, 2]}},
    {"grid": {"n": 2.5}},
    {"grid": {"n": 4, "L": [1, 1, -1]}},
    {"grid": {"n": 4}, "bc": "robin"},
    {"grid": {"n": 4}, "eps": {"scalar": 1, "diag": [1, 1, 1]}},
    {"grid": {"n": 4}, "eps": {"scalar": -1}},
    {"grid": {"n": 4}, "eps": {"tensor": 1}},
    {"grid": {"n": 4}, "solver": {"tol": 2}},
    {"grid": {"n": 4}, "solver": {"maxit": 0}},
    {"grid": {"n": 4}, "solver": {"rtol": 1e-3}},
    {"grid": {"n": 4}, "solver": {"seed": True}},
    {"grid": {"n": 4}, "outputs": {"png": "x"}},
])
def test_config_rejections(doc):
    with pytest.raises(ValidationError):
        cfg = parse_config(doc)
        cfg.material()


def test_eps_file_resolved_relative_to_config(tmp_path):
    grid = build_grid((2, 2, 2))
    (tmp_path / "sub").mkdir()
    MaterialField.scalar(grid, 2.0).to_csv(tmp_path / "sub" / "eps.csv", grid)
    cfg = load_config(_write(tmp_path / "sub", {"grid": {"n": 2}, "eps": {"file": "eps.csv"}}))
    assert (cfg.material().eps == 2.0).all()


def test_load_config_errors(tmp_path):
    with pytest.raises(ValidationError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    with pytest.raises(ValidationError, match="invalid JSON"):
        load_config(_write(tmp_path, "{"))


# ----------------------------------------------------------------------------
# commands


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["constants", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for text in ("1e-08", "10000", str(DEFAULT_SEED), "2000", "dirichlet", "unknown keys rejected"):
        assert text in out


def test_constants_writes_report(tmp_path):
    cfg = _write(tmp_path, {"grid": {"n": 3}, "bc": "neumann"})
    out = tmp_path / "r.json"
    assert cli.main(["constants", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert "timestamp" in doc
    assert doc["bc"] == ["normal"] * 6
    assert all(c["pass"] in (True, None) for c in doc["checks"])


def test_constants_uses_outputs_json(tmp_path):
    out = tmp_path / "from_cfg.json"
    cfg = _write(tmp_path, {"grid": {"n": 2}, "outputs": {"json": str(out)}})
    assert cli.main(["constants", "--config", str(cfg)]) == 0
    assert out.exists()


def test_constants_deterministic_and_roundtrip(tmp_path):
    cfg = _write(tmp_path, {"grid": {"n": 3}, "eps": {"diag": [1, 2, 0.5]}})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["constants", "--config", str(cfg), "--seed", "7", "--out", str(a)]) == 0
    assert cli.main(["constants", "--config", str(cfg), "--seed", "7", "--out", str(b)]) == 0
    assert _strip_time(a.read_text()) == _strip_time(b.read_text())
    text = a.read_text()
    assert report_json(json.loads(text)) == text
    assert json.loads(text)["solver"]["seed"] == 7


def test_constants_config_errors(tmp_path, capsys):
    bad = _write(tmp_path, "{ not json")
    assert cli.main(["constants", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "configuration error" in err
    missing_eps = _write(tmp_path, {"grid": {"n": 2}, "eps": {"file": "nowhere.csv"}}, "m.json")
    assert cli.main(["constants", "--config", str(missing_eps)]) == 2
    assert cli.main(["constants"]) == 2


def test_constants_solver_failure(tmp_path):
    cfg = _write(tmp_path, {"grid": {"n": 3}, "solver": {"maxit": 1}})
    out = tmp_path / "r.json"
    assert cli.main(["constants", "--config", str(cfg), "--out", str(out)]) == 3
    assert json.loads(out.read_text())["error"]["type"] == "ConvergenceError"


def test_constants_check_failure(tmp_path, monkeypatch):
    real = cli.verify_all

    def broken(*args, **kwargs):
        rep = real(*args, **kwargs)
        rep.checks.append(CheckRecord("injected", 2.0, 1.0))
        return rep

    monkeypatch.setattr(cli, "verify_all", broken)
    cfg = _write(tmp_path, {"grid": {"n": 2}})
    assert cli.main(["constants", "--config", str(cfg), "--out", str(tmp_path / "r.json")]) == 1


def test_converge_table(tmp_path):
    cfg = _write(tmp_path, {"grid": {"n": 2}})
    out = tmp_path / "t.csv"
    assert cli.main(["converge", "--config", str(cfg), "--levels", "2,4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,h,c_p,c_m_rot,c_m_full"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["2", "4", "richardson"]
    c2, c4, lim = (float(ln.split(",")[2]) for ln in lines[1:])
    assert c2 > c4 > lim


def test_converge_single_level_has_no_footer(tmp_path, capsys):
    cfg = _write(tmp_path, {"grid": {"n": 3}})
    assert cli.main(["converge", "--config", str(cfg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[1].startswith("3,")


@pytest.mark.parametrize("levels", ["8,4", "4,4", "a,b", ","])
def test_converge_bad_levels(tmp_path, levels):
    cfg = _write(tmp_path, {"grid": {"n": 2}})
    assert cli.main(["converge", "--config", str(cfg), "--levels", levels]) == 2


def test_richardson_exact_for_quadratic_error():
    h = [0.5, 0.25]
    vals = [1.0 + 3 * x * x for x in h]
    assert cli.richardson(h, vals) == pytest.approx(1.0)


def test_helmholtz_command(tmp_path):
    cfg = _write(tmp_path, {"grid": {"n": 3}, "bc": ["tangential", "tangential"] + ["normal"] * 4})
    out = tmp_path / "h.json"
    assert cli.main(["helmholtz", "--config", str(cfg), "--out", str(out), "--fields", "3"]) == 0
    doc = json.loads(out.read_text())
    assert doc["harmonic_dimension"] == 1
    assert doc["residuals"]["reconstruction"] <= 1e-7
    assert doc["residuals"]["orthogonality"] <= 1e-7


def test_selftest_passes(capsys):
    assert cli.main(["selftest", "--pairs", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    assert all(ln.startswith("PASS") for ln in lines[:-1])


def test_selftest_fault_injection(capsys):
    assert cli.main(["selftest", "--pairs", "2", "--inject-fault"]) == 1
    out = capsys.readouterr().out
    failing = [ln for ln in out.splitlines() if ln.startswith("FAIL")]
    assert len(failing) == 1 and "derham.exact_sequence" in failing[0]
    assert "seed=" in failing[0]


def test_selftest_deterministic(capsys, tmp_path):
    assert cli.main(["selftest", "--pairs", "4", "--seed", "7", "--out", str(tmp_path / "a.txt")]) == 0
    first = capsys.readouterr().out
    assert cli.main(["selftest", "--pairs", "4", "--seed", "7"]) == 0
    assert capsys.readouterr().out == first == (tmp_path / "a.txt").read_text()


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, {"grid": {"n": 2}})
    proc = subprocess.run([sys.executable, "-m", "maxcon", "constants", "--config", str(cfg)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["constants"]["c_p"] == pytest.approx(1 / 24**0.5, rel=1e-9)


def test_runconfig_with_n():
    cfg = RunConfig(n=(2, 2, 2))
    assert cfg.with_n(5).n == (5, 5, 5)
