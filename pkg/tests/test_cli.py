import json
import os

import numpy as np
import pytest

from frackpz.cli import ConfigError, load_config, main

MINIMAL = """
# minimal subcritical interval run
params.N = 1
params.s = 0.75
params.q = 1.2
params.lambda = 0.0
domain.kind = interval
domain.a = -1
domain.b = 1
grid_n = 64
source.kind = constant
source.value = 1.0
solver = monotone
output_dir = {out}
"""

BALL = """
params.N = 2
params.s = 0.75
params.q = 1.4
params.lambda = 0.01
params.m = inf
domain.kind = ball
domain.radius = 1.0
grid_n = 64
source.kind = constant
solver = auto
output_dir = {out}
"""


def write_cfg(tmp_path, text, name="run.cfg", **kw):
    p = tmp_path / name
    p.write_text(text.format(**kw))
    return str(p)


class TestConfigParsing:
    def test_text_and_json_equivalent(self, tmp_path):
        ctext = write_cfg(tmp_path, MINIMAL, out=str(tmp_path / "o"))
        cfg1 = load_config(ctext)
        jdoc = {
            "params": {"N": 1, "s": 0.75, "q": 1.2, "lambda": 0.0},
            "domain": {"kind": "interval", "a": -1, "b": 1},
            "grid_n": 64,
            "source": {"kind": "constant", "value": 1.0},
            "solver": "monotone",
            "output_dir": str(tmp_path / "o"),
        }
        jpath = tmp_path / "run.json"
        jpath.write_text(json.dumps(jdoc))
        cfg2 = load_config(str(jpath))
        assert cfg1.params == cfg2.params
        assert cfg1.source == cfg2.source
        assert cfg1.solver == cfg2.solver

    def test_malformed_line_reports_lineno(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("params.s = 0.75\nthis line has no equals sign\n")
        with pytest.raises(ConfigError, match="line 2"):
            load_config(str(p))

    def test_invalid_params_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad2.cfg"
        p.write_text("params.s = 0.3\nparams.q = 1.2\n")
        rc = main(["info", "--config", str(p)])
        assert rc == 1
        assert "config error" in capsys.readouterr().err

    def test_grid_override(self, tmp_path):
        ctext = write_cfg(tmp_path, MINIMAL, out=str(tmp_path / "o"))
        cfg = load_config(ctext, overrides={"grid_n": 96})
        assert cfg.grid_n == 96
        assert cfg.params.domain.grid_n == 96


class TestCommands:
    def test_info(self, tmp_path, capsys):
        ctext = write_cfg(tmp_path, MINIMAL, out=str(tmp_path / "o"))
        rc = main(["info", "--config", ctext])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["regime"] == "SUBCRITICAL_LOW"
        assert doc["solver"] == "monotone"

    def test_solve_minimal_zero_lambda(self, tmp_path):
        out = tmp_path / "out"
        ctext = write_cfg(tmp_path, MINIMAL, out=str(out))
        rc = main(["solve", "--config", ctext])
        assert rc == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["converged"] is True
        sol = (out / "solution.csv").read_text().splitlines()
        assert sol[0] == "x,u,grad_u,residual"
        u_vals = [float(line.split(",")[1]) for line in sol[1:]]
        assert max(abs(v) for v in u_vals) == 0.0

    def test_solve_subcritical_ball(self, tmp_path):
        out = tmp_path / "out"
        ctext = write_cfg(tmp_path, BALL, out=str(out))
        rc = main(["solve", "--config", ctext])
        assert rc == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["regime"] == "SUBCRITICAL"
        assert rep["converged"] is True

    def test_nonconvergent_exit_code(self, tmp_path):
        out = tmp_path / "out"
        text = BALL.replace("params.lambda = 0.01", "params.lambda = 50.0")
        ctext = write_cfg(tmp_path, text, out=str(out))
        rc = main(["solve", "--config", ctext])
        assert rc == 2

    def test_verify_bootstrap(self, tmp_path):
        out = tmp_path / "out"
        ctext = write_cfg(tmp_path, BALL, out=str(out))
        rc = main(["verify", "bootstrap", "--config", ctext])
        assert rc == 0
        doc = json.loads((out / "verify_bootstrap.json").read_text())
        assert doc["pass"] is True

    def test_verify_unknown_target(self, tmp_path):
        ctext = write_cfg(tmp_path, BALL, out=str(tmp_path / "o"))
        assert main(["verify", "nonsense", "--config", ctext]) == 1

    def test_verify_supersolution_exit_codes(self, tmp_path):
        out = tmp_path / "out"
        ctext = write_cfg(tmp_path, BALL, out=str(out))
        assert main(["verify", "supersolution", "--config", ctext]) == 0
        text = BALL.replace("params.lambda = 0.01", "params.lambda = 30.0")
        cbad = write_cfg(tmp_path, text, name="bad.cfg", out=str(out))
        assert main(["verify", "supersolution", "--config", cbad]) == 3

    def test_sweep_zero_range(self, tmp_path):
        out = tmp_path / "out"
        text = MINIMAL + "sweep.lambda_min = 0\nsweep.lambda_max = 0\nsweep.count = 3\n"
        ctext = write_cfg(tmp_path, text, out=str(out))
        rc = main(["sweep", "--config", ctext, "--jobs", "2"])
        assert rc == 0
        rows = (out / "sweep.csv").read_text().splitlines()
        assert rows[0] == "lambda,converged,iterations,final_residual,sup_norm"
        assert len(rows) == 4
        assert all(r.split(",")[1] == "1" for r in rows[1:])


class TestDeterminism:
    def test_byte_identical_outputs(self, tmp_path):
        # one config file, two runs into different directories via --out
        ctext = write_cfg(tmp_path, BALL, out=str(tmp_path / "unused"))
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            rc = main(["solve", "--config", ctext, "--seed", "42",
                       "--out", str(out)])
            assert rc == 0
            outs.append((out / "report.json").read_bytes()
                        + (out / "solution.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_env_out_override(self, tmp_path, monkeypatch):
        out = tmp_path / "envout"
        monkeypatch.setenv("FRACKPZ_OUT", str(out))
        ctext = write_cfg(tmp_path, MINIMAL, out=str(tmp_path / "ignored"))
        rc = main(["solve", "--config", ctext])
        assert rc == 0
        assert (out / "report.json").exists()
        assert not (tmp_path / "ignored").exists()
