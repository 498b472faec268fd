import json

import pytest
import yaml

from fracpx.cli import DEFAULTS, EXIT_INVALID, EXIT_OK, EXIT_VERDICT, main, resolve_config

FAST = {"domain": {"h": 0.125}, "sweep": {"start": 0, "stop": 10, "num": 3}, "verify": {"samples": 10}}


def write_config(tmp_path, extra=None):
    cfg = json.loads(json.dumps(FAST))
    for k, v in (extra or {}).items():
        if isinstance(v, dict):
            cfg.setdefault(k, {}).update(v)
        else:
            cfg[k] = v
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def read(out, name="report.json"):
    return json.loads((out / name).read_text())


@pytest.mark.parametrize("command", ["solve", "continuation", "sweep", "verify", "norms"])
def test_commands_succeed(tmp_path, command):
    out = tmp_path / command
    assert main([command, "--config", str(write_config(tmp_path)), "--out", str(out)]) == EXIT_OK
    report = read(out)
    assert report["status"] == "ok" and report["command"] == command
    assert read(out, "manifest.json")["config"]["domain"]["h"] == 0.125


def test_solve_outputs(tmp_path):
    out = tmp_path / "o"
    main(["solve", "--config", str(write_config(tmp_path)), "--out", str(out)])
    rows = (out / "solution.csv").read_text().splitlines()
    assert rows[0] == "x0,value" and len(rows) == 9
    report = read(out)
    assert report["converged"] and report["residual"] <= report["tol"]
    assert report["metadata"]["truncation"]


def test_sweep_csv(tmp_path):
    out = tmp_path / "o"
    main(["sweep", "--config", str(write_config(tmp_path)), "--out", str(out)])
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("lambda,") and len(lines) == 4


def test_degree_presets(tmp_path):
    path = write_config(tmp_path, {"degree": {"map": "zsquared"}})
    assert main(["degree", "--config", str(path), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert read(tmp_path / "a")["degree"] == 2
    path = write_config(tmp_path, {"degree": {"map": "identity", "region": [[0, 1], [-1, 1]]}})
    assert main(["degree", "--config", str(path), "--out", str(tmp_path / "b")]) == EXIT_VERDICT
    assert read(tmp_path / "b")["status"] == "refused"


def test_degree_homotopy(tmp_path):
    path = write_config(tmp_path, {"domain": {"h": 1 / 3}, "degree": {"map": "homotopy"}})
    assert main(["degree", "--config", str(path), "--out", str(tmp_path / "h")]) == EXIT_OK
    assert set(read(tmp_path / "h")["degrees"].values()) == {1}


@pytest.mark.parametrize("extra", [
    {"exponents": {"r": {"kind": "constant", "value": 2.5}}},
    {"domain": {"s": 1.2}},
    {"bogus": 1},
    {"solver": {"strategy": "newton"}},
])
def test_invalid_configs(tmp_path, extra):
    out = tmp_path / "bad"
    assert main(["solve", "--config", str(write_config(tmp_path, extra)), "--out", str(out)]) == EXIT_INVALID
    assert read(out)["status"] == "invalid"


def test_unparseable_config(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("domain: [1, 2\n")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path / "x")]) == EXIT_INVALID


def test_env_overrides_sit_between_file_and_flags(tmp_path):
    path = write_config(tmp_path, {"lambda": 3.0})
    env = {"FRACPX_LAMBDA": "7", "FRACPX_SEED": "5", "FRACPX_STRATEGY": "picard"}
    cfg = resolve_config("solve", str(path), env=env, seed=9)
    assert cfg.raw["lambda"] == 7.0
    assert cfg.seed == 9
    assert cfg.raw["solver"]["strategy"] == "picard"
    assert resolve_config("continuation", None, env={}).raw["solver"]["strategy"] == "continuation"
    assert resolve_config("solve", None, env={}).raw["lambda"] == DEFAULTS["lambda"]


def test_manifest_reproduces_report(tmp_path):
    first, second = tmp_path / "1", tmp_path / "2"
    main(["solve", "--config", str(write_config(tmp_path)), "--out", str(first), "--seed", "4"])
    main(["solve", "--config", str(first / "manifest.json"), "--out", str(second)])
    assert (first / "report.json").read_bytes() == (second / "report.json").read_bytes()


def test_bad_seed(tmp_path):
    assert main(["solve", "--seed", "-1", "--out", str(tmp_path)]) == EXIT_INVALID


def test_exponent_literals_in_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("solver:\n  tol: 1e-10\n  max_iter: '50'\n")
    raw = resolve_config("solve", str(path), env={}).raw
    assert raw["solver"]["tol"] == 1e-10 and raw["solver"]["max_iter"] == 50
    path.write_text("solver:\n  tol: small\n")
    with pytest.raises(ValueError):
        resolve_config("solve", str(path), env={})


def test_lambda_zero_solution_is_zero(tmp_path):
    out = tmp_path / "z"
    assert main(["solve", "--config", str(write_config(tmp_path, {"lambda": 0.0})), "--out", str(out)]) == EXIT_OK
    values = [float(line.split(",")[-1]) for line in (out / "solution.csv").read_text().splitlines()[1:]]
    assert max(abs(v) for v in values) <= read(out)["tol"]
