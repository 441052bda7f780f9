import json
import math
import os

import numpy as np
import pytest

from convroots import cli

PI = math.pi


def write_spec(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


@pytest.fixture()
def ep_grid(tmp_path):
    spec = write_spec(tmp_path, "ep.json", {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0})
    out = str(tmp_path / "ep.csv")
    rc = cli.main(
        ["--deterministic", "build", spec, "--step", str(PI / 256), "--xmax", str(32 * PI), "--out", out]
    )
    assert rc == 0
    return out


class TestSpecFiles:
    def test_valid_kinds(self, tmp_path):
        for payload in (
            {"kind": "point_mass"},
            {"kind": "exponential", "theta": 2.0},
            {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0},
            {"kind": "xi"},
            {"kind": "m_mixture", "gamma": 1.0, "a": 0.5, "alpha": 2.0, "beta": 1.0, "scale": 1.0},
        ):
            p = write_spec(tmp_path, "s.json", payload)
            assert cli.load_spec(p).family in payload["kind"] or True

    def test_unknown_key_exit_2(self, tmp_path):
        spec = write_spec(tmp_path, "bad.json", {"kind": "xi", "theta": 1.0})
        rc = cli.main(["build", spec, "--out", str(tmp_path / "o.csv")])
        assert rc == 2

    def test_missing_key_exit_2(self, tmp_path):
        spec = write_spec(tmp_path, "bad.json", {"kind": "exponential"})
        rc = cli.main(["build", spec, "--out", str(tmp_path / "o.csv")])
        assert rc == 2

    def test_unknown_kind_exit_2(self, tmp_path):
        spec = write_spec(tmp_path, "bad.json", {"kind": "cauchy"})
        rc = cli.main(["build", spec, "--out", str(tmp_path / "o.csv")])
        assert rc == 2


class TestBuildConv:
    def test_grid_roundtrip(self, ep_grid):
        rep = cli.read_grid_csv(ep_grid)
        assert rep.gamma0 == 1.0
        assert rep.n_points == 8193
        xs = rep.x
        assert np.allclose(rep.W, (1 + xs) ** -2.0, rtol=1e-12)

    def test_deterministic_outputs_identical(self, tmp_path, ep_grid):
        with open(ep_grid, "rb") as f:
            first = f.read()
        spec = write_spec(tmp_path, "ep2.json", {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0})
        out2 = str(tmp_path / "ep_again.csv")
        cli.main(["--deterministic", "build", spec, "--step", str(PI / 256),
                  "--xmax", str(32 * PI), "--out", out2])
        with open(out2, "rb") as f:
            second = f.read()
        assert first == second

    def test_conv_command(self, tmp_path, ep_grid):
        out = str(tmp_path / "conv.csv")
        rc = cli.main(["--deterministic", "conv", ep_grid, ep_grid, "--out", out])
        assert rc == 0
        rep = cli.read_grid_csv(out)
        assert rep.W[0] == pytest.approx(1.0, rel=1e-9)
        # operand hashes recorded
        with open(out) as f:
            f.readline()
            assert "conv_of=" in f.readline()

    def test_conv_grid_mismatch_exit_2(self, tmp_path, ep_grid):
        spec = write_spec(tmp_path, "e.json", {"kind": "exponential", "theta": 2.0})
        other = str(tmp_path / "other.csv")
        cli.main(["build", spec, "--step", str(PI / 512), "--xmax", str(32 * PI), "--out", other])
        rc = cli.main(["conv", ep_grid, other, "--out", str(tmp_path / "c.csv")])
        assert rc == 2

    def test_missing_file_exit_2(self, tmp_path):
        rc = cli.main(["build", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o.csv")])
        assert rc == 2

    def test_invalid_numeric_params_exit_2(self, tmp_path):
        spec = write_spec(tmp_path, "ep.json", {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0})
        out = str(tmp_path / "o.csv")
        assert cli.main(["build", spec, "--step", "-0.1", "--out", out]) == 2
        assert cli.main(["build", spec, "--gamma0", "-1", "--out", out]) == 2

    def test_corrupted_grid_rejected(self, tmp_path, ep_grid):
        text = open(ep_grid).read().splitlines()
        text[100] = text[100].split(",")[0] + ",99.0"  # tail jumps upward
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(text) + "\n")
        rc = cli.main(["diagnose", str(bad), "--class", "L", "--gamma", "1",
                       "--out", str(tmp_path / "v.json")])
        assert rc == 2

    def test_trunc_cap_numerical_failure_exit_3(self, tmp_path):
        spec = write_spec(tmp_path, "xi.json", {"kind": "xi"})
        grid = str(tmp_path / "xi.csv")
        cli.main(["build", spec, "--step", str(PI / 256), "--xmax", str(32 * PI), "--out", grid])
        rc = cli.main(["conv", grid, grid, "--trunc-cap", "1e-9",
                       "--out", str(tmp_path / "c.csv")])
        assert rc == 3


class TestTransformCommand:
    def test_xi_expect_zero(self, tmp_path):
        spec = write_spec(tmp_path, "xi.json", {"kind": "xi"})
        out = str(tmp_path / "t.csv")
        rc = cli.main(["--deterministic", "transform", "--spec", spec, "--gamma", "1",
                       "--z-hi", "4", "--expect", "zero", "--out", out])
        assert rc == 0
        with open(out) as f:
            header = f.readline()
            assert "gamma=1" in header and "quad_err=" in header
            assert f.readline().strip() == "z,re,im,modulus"

    def test_exp_pareto_expect_nozero(self, tmp_path):
        spec = write_spec(tmp_path, "ep.json", {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0})
        rc = cli.main(["transform", "--spec", spec, "--gamma", "1", "--z-hi", "4",
                       "--z-step", str(1 / 32), "--expect", "nozero",
                       "--out", str(tmp_path / "t.csv")])
        assert rc == 0

    def test_expectation_failure_exit_1(self, tmp_path):
        spec = write_spec(tmp_path, "ep.json", {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0})
        rc = cli.main(["transform", "--spec", spec, "--gamma", "1", "--z-hi", "4",
                       "--z-step", str(1 / 32), "--expect", "zero",
                       "--out", str(tmp_path / "t.csv")])
        assert rc == 1


class TestDiagnoseCommand:
    def test_long_tail_holds_with_expect(self, tmp_path):
        spec = write_spec(tmp_path, "e2.json", {"kind": "exponential", "theta": 2.0})
        grid = str(tmp_path / "e2.csv")
        cli.main(["build", spec, "--step", str(PI / 256), "--xmax", str(32 * PI), "--out", grid])
        out = str(tmp_path / "v.json")
        rc = cli.main(["--deterministic", "diagnose", grid, "--class", "L", "--gamma", "2",
                       "--expect", "holds", "--out", out])
        assert rc == 0
        payload = json.loads(open(out).read())
        assert payload["verdict"] == "holds"
        assert payload["tolerances"]["band_tol"] == 0.05
        # every evidence CSV exists next to the verdict
        for name in payload["evidence_csv"]:
            assert os.path.exists(os.path.join(os.path.dirname(out), name))

    def test_xi_long_tail_fails_no_expect_exit_0(self, tmp_path):
        spec = write_spec(tmp_path, "xi.json", {"kind": "xi"})
        grid = str(tmp_path / "xi.csv")
        cli.main(["build", spec, "--step", str(PI / 512), "--xmax", str(64 * PI), "--out", grid])
        out = str(tmp_path / "v.json")
        rc = cli.main(["diagnose", grid, "--class", "L", "--gamma", "1", "--out", out])
        assert rc == 0
        assert json.loads(open(out).read())["verdict"] == "fails"

    def test_expect_mismatch_exit_1(self, tmp_path):
        spec = write_spec(tmp_path, "xi.json", {"kind": "xi"})
        grid = str(tmp_path / "xi.csv")
        cli.main(["build", spec, "--step", str(PI / 512), "--xmax", str(64 * PI), "--out", grid])
        rc = cli.main(["diagnose", grid, "--class", "L", "--gamma", "1",
                       "--expect", "holds", "--out", str(tmp_path / "v.json")])
        assert rc == 1

    def test_equivalence_class_holds_on_default_grid(self, tmp_path):
        spec = write_spec(tmp_path, "ep.json", {"kind": "exp_pareto", "gamma": 1.0, "alpha": 2.0})
        grid = str(tmp_path / "ep_big.csv")
        cli.main(["build", spec, "--step", str(PI / 512), "--xmax", str(128 * PI), "--out", grid])
        out = str(tmp_path / "s.json")
        rc = cli.main(["diagnose", grid, "--class", "S", "--gamma", "1",
                       "--expect", "holds", "--out", out])
        assert rc == 0
        payload = json.loads(open(out).read())
        assert payload["target"] == pytest.approx(4.0, rel=1e-4)
        # the middle-integral sweep lands in the evidence files
        assert any("middle_sweep" in n for n in payload["evidence_csv"])

    def test_exponential_not_equivalent_at_one(self, tmp_path):
        spec = write_spec(tmp_path, "e2.json", {"kind": "exponential", "theta": 2.0})
        grid = str(tmp_path / "e2.csv")
        cli.main(["build", spec, "--step", str(PI / 256), "--xmax", str(32 * PI), "--out", grid])
        rc = cli.main(["diagnose", grid, "--class", "S", "--gamma", "1",
                       "--expect", "fails", "--out", str(tmp_path / "v.json")])
        assert rc == 0


class TestPlot:
    def test_plot_produces_svg(self, tmp_path, ep_grid):
        out = str(tmp_path / "grid.svg")
        rc = cli.main(["plot", ep_grid, "--out", out])
        assert rc == 0
        head = open(out).read(400)
        assert "<svg" in head
