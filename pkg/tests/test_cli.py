import csv
import json
import math

import numpy as np
import pytest

from phaseosc import cli
from phaseosc.cli import ConfigError, apply_overrides, main, validate_config
from phaseosc.ode import IntegrationError
from phaseosc.portrait import REGION_COLOURS

PI = math.pi
MINUS_SINE = {"two_harmonic": {"q": -1, "r": 0, "alpha": 0, "beta": 0}}
COUNTEREXAMPLE = {"even_cosine": [0, -0.5, -0.5, -0.25, 10]}


def run(tmp_path, command, cfg, *extra, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command, "--config", str(path), "--out", str(out), *extra])
    return code, out


def system(N, coupling, **kw):
    return {"system": {"N": N, "coupling": coupling, **kw}}


def read_json(out, name):
    return json.loads((out / name).read_text())


class TestConfig:
    def test_overrides(self):
        cfg = apply_overrides({"system": {"N": 3}}, ["--system.omega", "0.5", "--run.T", "2", "--output.directory", "x"])
        assert cfg == {"system": {"N": 3, "omega": 0.5}, "run": {"T": 2}, "output": {"directory": "x"}}

    @pytest.mark.parametrize("bad", [["--system.N"], ["system.N", "3"], ["--system.N.x", "3"]])
    def test_bad_overrides(self, bad):
        with pytest.raises(ConfigError):
            apply_overrides({"system": {"N": 3}}, bad)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="system"):
            validate_config({"system": {"N": 3, "coupling": MINUS_SINE, "gamma": 1}})

    def test_valid(self):
        validate_config({**system(4, COUNTEREXAMPLE), "run": {"T": 3, "seeds": [[0, 1, 2, 3]]},
                         "output": {"formats": ["csv"]}})


class TestSimulate:
    def test_sync_seed(self, tmp_path):
        cfg = {**system(3, MINUS_SINE, omega=0.4), "run": {"T": 5, "n_samples": 11, "seeds": [[0.3, 0.3, 0.3]]}}
        code, out = run(tmp_path, "simulate", cfg)
        assert code == 0
        rows = list(csv.reader((out / "trajectory_0.csv").open()))
        assert rows[0] == ["t", "theta_1", "theta_2", "theta_3"] and len(rows) == 12
        for row in rows[1:]:
            assert row[1] == row[2] == row[3]
        assert "</svg>" in (out / "portrait.svg").read_text()

    def test_n4_region_colouring(self, tmp_path):
        cfg = {**system(4, COUNTEREXAMPLE), "run": {"T": 5, "n_samples": 400, "seeds": [[0, 0.5, 2.0, 4.5]]}}
        code, out = run(tmp_path, "simulate", cfg)
        assert code == 0
        svg = (out / "portrait.svg").read_text()
        assert sum(c in svg for c in REGION_COLOURS) >= 2
        labels = {row[-1] for row in csv.reader((out / "portrait.csv").open()) if row[0] == "trajectory"}
        assert len(labels) >= 2

    def test_missing_coupling(self, tmp_path):
        code, out = run(tmp_path, "simulate", {"system": {"N": 3}, "run": {"seeds": [[0, 1, 2]]}})
        assert code == 2 and not out.exists()

    def test_needs_seeds(self, tmp_path):
        code, out = run(tmp_path, "simulate", system(3, MINUS_SINE))
        assert code == 2 and not out.exists()

    def test_seed_length(self, tmp_path):
        code, _ = run(tmp_path, "simulate", {**system(3, MINUS_SINE), "run": {"seeds": [[0, 1]]}})
        assert code == 2

    def test_numerical_failure(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise IntegrationError("step size underflow", 1.5)

        monkeypatch.setattr(cli, "integrate", boom)
        code, out = run(tmp_path, "simulate", {**system(3, MINUS_SINE), "run": {"seeds": [[0, 1, 2]]}})
        assert code == 3 and not out.exists()

    def test_unattainable_tolerance(self, tmp_path):
        cfg = {**system(3, MINUS_SINE), "run": {"seeds": [[0, 1, 2]], "rel_tol": 1e-300}}
        assert run(tmp_path, "simulate", cfg)[0] == 2

    def test_format_flag_and_override(self, tmp_path):
        cfg = {**system(3, MINUS_SINE), "run": {"T": 1, "n_samples": 3, "seeds": [[0, 1, 2]]}}
        code, out = run(tmp_path, "simulate", cfg, "--format", "json", "--system.omega", "2.0")
        assert code == 0
        assert sorted(p.name for p in out.iterdir()) == ["simulate.json"]
        assert run(tmp_path, "simulate", cfg, "--format", "png", name="bad")[0] == 2

    def test_deterministic(self, tmp_path):
        cfg = {**system(3, MINUS_SINE), "run": {"T": 3, "n_samples": 21, "seeds": [[0, 1, 2.5]]}}
        _, a = run(tmp_path, "simulate", cfg, name="a")
        _, b = run(tmp_path, "simulate", cfg, name="b")
        for f in sorted(a.iterdir()):
            assert f.read_bytes() == (b / f.name).read_bytes()


class TestStability:
    def test_n3_splay(self, tmp_path):
        code, out = run(tmp_path, "stability", system(3, MINUS_SINE))
        assert code == 0
        rep = read_json(out, "stability.json")
        ev = sorted((complex(*z) for z in rep["splay"]["eigenvalues"]), key=abs)
        assert np.allclose(ev, [0, 0.5, 0.5], atol=1e-12)
        assert rep["sync"]["stable"] and rep["splay"]["class"] == "source"

    def test_n4_hopf(self, tmp_path):
        code, out = run(tmp_path, "stability", system(4, {"two_harmonic": {"q": -1, "r": 0.3, "alpha": PI / 2, "beta": 0.2}}))
        assert code == 0 and read_json(out, "stability.json")["splay"]["hopf"]

    def test_sync_threshold(self, tmp_path):
        a, b = 0.4, 0.3
        r = math.cos(a) / (2 * math.cos(b))
        code, out = run(tmp_path, "stability", system(3, {"two_harmonic": {"q": -1, "r": r, "alpha": a, "beta": b}}))
        sync = read_json(out, "stability.json")["sync"]
        assert code == 0 and sync["at_threshold"] and abs(sync["eigenvalue"]) < 1e-9


class TestScan:
    def test_n3(self, tmp_path):
        cfg = {**system(3, MINUS_SINE), "scan": {"beta": 0.0, "alpha_points": 8, "detect_alpha_points": 0}}
        code, out = run(tmp_path, "scan", cfg)
        assert code == 0
        sync = np.array([[float(x) for x in row[2:]] for row in list(csv.reader((out / "curve_sync_steady.csv").open()))[1:]])
        assert np.min(np.hypot(sync[:, 0], sync[:, 1] - 0.5)) < 1e-12
        sn = np.array([[float(x) for x in row[2:]] for row in list(csv.reader((out / "curve_two_cluster_sn_p1.csv").open()))[1:]])
        at = sn[np.abs(sn[:, 0] - PI / 2) < 1e-12]
        assert at[0, 1] == pytest.approx(0.5550, abs=1e-4)
        assert (out / "scan.svg").exists()

    def test_n4_flat_beta(self, tmp_path):
        cfg = {**system(4, MINUS_SINE), "scan": {"beta": PI / 2, "alpha_points": 8, "detect_alpha_points": 0}}
        code, out = run(tmp_path, "scan", cfg)
        block = next(c for c in read_json(out, "scan.json")["curves"] if c["kind"] == "splay_block")
        assert code == 0 and block["degenerate"] and "cos beta = 0" in block["note"]

    def test_n5_rejected(self, tmp_path):
        code, out = run(tmp_path, "scan", system(5, MINUS_SINE))
        assert code == 2 and not out.exists()


class TestReversal:
    def test_n3(self, tmp_path):
        code, out = run(tmp_path, "reversal", {**system(3, {"even_cosine": [0, 1, 1]}), "run": {"seeds": [[0, 1, 2.5]]}})
        assert code == 0
        rep = read_json(out, "reversal.json")
        assert all(rep["splay_in_q"].values())
        assert any(abs(e["psi"][0] - 2 * PI / 3) < 1e-9 for e in rep["q30_equilibria"])
        # V level curves are drawn in their own colour
        assert 'stroke="#3a78c8"' in (out / "reversal.svg").read_text()

    def test_n4_cos(self, tmp_path):
        cfg = {**system(4, {"even_cosine": [0, 1]}), "reversal": {"q43_grid": 8}}
        code, out = run(tmp_path, "reversal", cfg, "--format", "json")
        rep = read_json(out, "reversal.json")
        assert code == 0 and all(rep["splay_in_q"].values())
        for item in rep["L-"]:
            s = abs(math.sin(item["phi"]))
            assert sorted(z[1] for z in item["eigenvalues"]) == pytest.approx([-2 * s, 2 * s], abs=1e-12)
            assert all(abs(z[0]) < 1e-15 for z in item["eigenvalues"])

    def test_odd_rejected(self, tmp_path):
        assert run(tmp_path, "reversal", system(3, MINUS_SINE))[0] == 2


class TestIntegrability:
    def test_counterexample(self, tmp_path):
        code, out = run(tmp_path, "integrability", system(4, COUNTEREXAMPLE))
        assert code == 0 and read_json(out, "integrability.json")["sink_source_pairs"]
        assert (out / "integrability.svg").exists()

    def test_two_harmonics(self, tmp_path):
        code, out = run(tmp_path, "integrability", system(4, {"even_cosine": [0, -2, -2, 0, 0]}))
        rep = read_json(out, "integrability.json")
        assert code == 0 and not rep["sink_source_pairs"] and rep["all_in_rc"]

    def test_odd_rejected(self, tmp_path):
        assert run(tmp_path, "integrability", system(4, MINUS_SINE))[0] == 2

    def test_wrong_n(self, tmp_path):
        assert run(tmp_path, "integrability", system(3, COUNTEREXAMPLE))[0] == 2


def test_bad_config_path(tmp_path):
    assert main(["stability", "--config", str(tmp_path / "none.json")]) == 2


def test_unknown_command(tmp_path):
    assert main(["fly", "--config", "x.json"]) == 2
