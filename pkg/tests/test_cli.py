import json
import os

import pytest

from semispec.cli import dumps, run
from semispec.config import parse_config
from semispec.errors import ConfigError, ParseError
from semispec.potentials import Interval, Rectangle

AIRY = """
[problem]
potential = x
domain = interval 0 1
regime = airy
hs = 0.02, 0.01, 0.005
"""

QUICK = """
[problem]
potential = x^2
domain = interval -1 2
hs = 0.08 0.05
[pseudo]
nx = 4
ny = 3
nu_samples = 21
[decay]
samples = 41
[gl]
Rs = 4 16
"""


def _write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


# -- config ------------------------------------------------------------------

def test_parse_interval_and_rectangle():
    c = parse_config(AIRY)
    assert c.domain == Interval(0, 1) and c.hs == (0.02, 0.01, 0.005) and c.regime == "airy"
    r = parse_config("[problem]\npotential = x^2 + y\ndomain = rectangle -1 1 0 2\n")
    assert r.domain == Rectangle((-1, 1), (0, 2)) and r.dim == 2


def test_bracketed_and_space_separated_lists():
    a = parse_config("[problem]\npotential=x\ndomain=interval 0 1\nhs=[0.02, 0.01]\n")
    b = parse_config("[problem]\npotential=x\ndomain=interval 0 1\nhs=0.02 0.01\n")
    assert a.hs == b.hs == (0.02, 0.01)


@pytest.mark.parametrize("text,message", [
    ("[problem]\npotential=x\ndomain=interval 0 1\nhs=[]\n", "hs empty"),
    ("[problem]\npotential=x\ndomain=interval 1 0\n", "not ordered"),
    ("[problem]\npotential=x\ndomain=interval 0 1\nhs=0.01 0.02\n", "decreasing"),
    ("[problem]\npotential=x\ndomain=interval 0 1\nhs=-0.01\n", "positive"),
    ("[problem]\npotential=x\ndomain=disk 0 1\n", "domain"),
    ("[problem]\npotential=x\ndomain=interval 0 1\nregime=weird\n", "regime"),
    ("[problem]\npotential=x\ndomain=interval 0 1\n[extra]\na=1\n", "unknown section"),
    ("[problem]\npotential=x\ndomain=interval 0 1\ncolour=red\n", "unknown key"),
    ("[solver]\ndense_cap=3\n", "missing"),
    ("[problem]\npotential=x\ndomain=interval 0 1\n[solver]\nshifts=-1+0j\n", "non-negative"),
])
def test_config_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_potential_errors_surface_as_parse_errors():
    with pytest.raises(ParseError):
        parse_config("[problem]\npotential=x +\ndomain=interval 0 1\n")
    with pytest.raises(ParseError):
        parse_config("[problem]\npotential=x + y\ndomain=interval 0 1\n")


def test_hash_ignores_layout_but_not_values():
    a = parse_config(AIRY).hash
    b = parse_config("# comment\n" + AIRY.replace("hs = 0.02, 0.01, 0.005", "hs=0.02  0.01 0.005  # same"))
    c = parse_config(AIRY.replace("0.005", "0.004"))
    assert a == b.hash and a != c.hash


def test_dumps_uses_17_digits():
    assert dumps(0.1) == "0.10000000000000001"
    assert json.loads(dumps({"a": [1.5, None, True], "z": 1 + 2j})) == {"a": [1.5, None, True], "z": [1.0, 2.0]}


# -- cli ---------------------------------------------------------------------

def test_hs_empty_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "[problem]\npotential = x\ndomain = interval 0 1\nhs = []\n")
    assert run(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    err = _err(capsys)
    assert err["message"] == "hs empty" and err["exit_code"] == 1


def test_missing_config_file(tmp_path, capsys):
    assert run(["sweep", "--config", str(tmp_path / "nope.ini")]) == 1
    assert _err(capsys)["error"] == "config"


def test_regime_violation_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "[problem]\npotential = x^2\ndomain = interval -1 1\nregime = airy\nhs = 0.05\n")
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert _err(capsys)["error"] == "regime"


def test_infeasible_resolution_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "[problem]\npotential = x\ndomain = interval 0 1\n[spectrum]\nh = 1e-7\n")
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    err = _err(capsys)
    assert err["error"] == "infeasible_resolution" and err["smallest_feasible_h"] > 1e-7


def test_sweep_acceptance_config(tmp_path, capsys):
    cfg = _write(tmp_path, AIRY)
    out = tmp_path / "o"
    assert run(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    h = parse_config(AIRY).hash
    lines = (out / f"sweep_{h}.csv").read_text().splitlines()
    assert len(lines) == 1 + 3
    report = json.loads((out / f"sweep_{h}.json").read_text())
    assert report["verdict"]["pass"] and report["config_hash"] == h
    assert (out / f"sweep_{h}.meta.json").exists()


def test_reruns_are_byte_identical(tmp_path):
    cfg = _write(tmp_path, QUICK)
    h = parse_config(QUICK).hash
    blobs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        for sub in ("sweep", "spectrum"):
            assert run([sub, "--config", str(cfg), "--out", str(out), "--threads", str(2 * k + 1)]) == 0
        files = sorted(p for p in out.iterdir() if not p.name.endswith(".meta.json"))
        assert files and all(h in p.name for p in files)
        blobs.append({p.name: p.read_bytes() for p in files})
    assert blobs[0] == blobs[1]


def test_pseudo_and_decay(tmp_path):
    cfg = _write(tmp_path, QUICK)
    h = parse_config(QUICK).hash
    assert run(["pseudo", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    field_lines = (tmp_path / f"pseudo_{h}.csv").read_text().splitlines()
    assert field_lines[0] == "re,im,resolvent_norm" and len(field_lines) == 1 + 12
    strip = json.loads((tmp_path / f"pseudo_{h}.json").read_text())
    assert strip["strip_sup"] > 0
    assert run(["decay", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    decay = json.loads((tmp_path / f"decay_{h}.json").read_text())
    assert decay["curve_below_envelope"]
    assert (tmp_path / f"decay_{h}.csv").read_text().startswith("t,norm,envelope\n")


def test_gl_subcommand(tmp_path, capsys):
    text = "[problem]\npotential = x\ndomain = interval -1 1\n[gl]\nRs = 4 16\n"
    cfg = _write(tmp_path, text)
    assert run(["gl", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    h = parse_config(text).hash
    assert len((tmp_path / f"gl_{h}.csv").read_text().splitlines()) == 1 + 2
    # a critical point of the applied potential is outside the GL model's scope
    assert run(["gl", "--config", str(_write(tmp_path, QUICK, "q.ini")), "--out", str(tmp_path)]) == 2


def test_models_validate_table(tmp_path, capsys):
    cfg = _write(tmp_path, "[problem]\npotential = x\ndomain = interval 0 1\n[models]\nn = 200\n")
    code = run(["models", "validate", "--config", str(cfg), "--out", str(tmp_path)])
    # n = 200 is far too coarse for the oracle tolerances
    assert code == 3
    rows = (tmp_path / f"models_validate_{parse_config(cfg.read_text()).hash}.csv").read_text().splitlines()
    assert rows[0].startswith("model,index,oracle_re")
    assert len(rows) == 1 + 3 + 5 + 5 + 3


def test_threads_env_fallback(tmp_path, monkeypatch):
    cfg = _write(tmp_path, QUICK)
    h = parse_config(QUICK).hash
    monkeypatch.setenv("SEMISPEC_THREADS", "2")
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / f"spectrum_{h}.meta.json").read_text())["threads"] == 2
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path), "--threads", "0"]) == 0
    assert json.loads((tmp_path / f"spectrum_{h}.meta.json").read_text())["threads"] == (os.cpu_count() or 1)


def test_dense_cap_flag_routes_to_shift_invert(tmp_path):
    cfg = _write(tmp_path, QUICK)
    h = parse_config(QUICK).hash
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path), "--dense-cap", "10"]) == 0
    spec = json.loads((tmp_path / f"spectrum_{h}.json").read_text())["spectrum"]
    assert spec["method"].startswith("ShiftInvert")
