import json
import math

import pytest

from bellkey import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestAngleParser:
    @pytest.mark.parametrize(
        "text, value",
        [
            ("pi/3", math.pi / 3),
            ("-pi/2", -math.pi / 2),
            ("3pi/4", 3 * math.pi / 4),
            ("5*π/6", 5 * math.pi / 6),
            ("1.047", 1.047),
            ("(pi - 0.01)/2", (math.pi - 0.01) / 2),
            ("pi/2-0.01", math.pi / 2 - 0.01),
        ],
    )
    def test_values(self, text, value):
        assert cli.parse_angle(text) == pytest.approx(value, abs=1e-15)

    @pytest.mark.parametrize("text", ["", "pi/", "foo", "1/0", "2**3", "(pi"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            cli.parse_angle(text)


class TestBound:
    def test_triangle(self, capsys):
        code, out, _ = run(capsys, "bound", "--theta", "pi/3", "--phi", "pi/3", "--omega", "pi")
        assert code == 0
        assert "local_formula 0.625" in out
        assert "quantum       -0.649519052838" in out
        assert "condition     true" in out

    def test_chsh_negative_angle(self, capsys):
        code, out, _ = run(capsys, "bound", "--theta", "-pi/2", "--phi", "3pi/4", "--omega", "pi/4")
        assert code == 0
        assert "quantum       1" in out
        assert "0.353553390593" in out

    def test_malformed_angle(self, capsys):
        code, _, err = run(capsys, "bound", "--theta", "pi//3", "--phi", "0", "--omega", "0")
        assert code == 2

    def test_missing_flag(self, capsys):
        assert run(capsys, "bound", "--theta", "1")[0] == 2


class TestOtherCommands:
    def test_sweep_resolution_guard(self, capsys):
        assert run(capsys, "sweep", "--figure", "1", "--resolution", "1")[0] == 2

    def test_sweep_writes_csv(self, capsys, tmp_path):
        out = tmp_path / "fig.csv"
        code, stdout, _ = run(capsys, "sweep", "--figure", "2", "--resolution", "241", "--out", str(out))
        assert code == 0
        assert out.read_text().startswith("axis1,axis2,chsh_max,condition_flag,rate")
        assert stdout.count("pass") == 2

    def test_verify_sos(self, capsys):
        code, out, _ = run(capsys, "verify-sos", "--theta", "pi/3", "--phi", "pi/3", "--omega", "pi", "--oracle")
        assert code == 0 and "FAIL" not in out

    def test_verify_sos_refuses_non_selftest(self, capsys):
        assert run(capsys, "verify-sos", "--theta", "pi/2", "--phi", "pi/2", "--omega", "pi")[0] == 1

    def test_rates(self, capsys):
        code, out, _ = run(capsys, "rates", "--theta", "pi/3", "--phi", "pi/3", "--omega", "pi")
        assert code == 0 and "global_rate    2" in out

    def test_boundary_point(self, capsys):
        code, out, _ = run(capsys, "boundary", "1", "1", "1", "-1")
        assert code == 0 and ",outside," in out

    def test_boundary_batch(self, capsys, tmp_path):
        src = tmp_path / "in.csv"
        src.write_text("c00,c01,c10,c11\n1,0.5,0.5,-0.5\n")
        code, out, _ = run(capsys, "boundary", "--input", str(src))
        assert code == 0 and "boundary,11+,true" in out

    def test_tangent(self, capsys):
        code, out, _ = run(capsys, "tangent", "0.5", "-0.5", "0.8660254037844386", "0.8660254037844386")
        assert code == 0 and "params        1.57079632679" in out

    def test_tangent_interior(self, capsys):
        assert run(capsys, "tangent", "0", "0", "0", "0")[0] == 1

    def test_simulate_deterministic(self, capsys, tmp_path):
        argv = ["simulate", "--theta", "pi/3", "--phi", "pi/2-0.01", "--omega", "5pi/6", "--rounds", "20000", "--seed", "4"]
        code, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert code == 0 and a == b
        report = json.loads(a)
        assert report["rounds"] == 20000 and report["seed"] == 4

    def test_simulate_local_aborts(self, capsys, tmp_path):
        tallies = tmp_path / "t.csv"
        code, out, _ = run(
            capsys, "simulate", "--theta", "pi/3", "--phi", "pi/2-0.01", "--omega", "5pi/6",
            "--rounds", "200000", "--behaviour", "local", "--tallies", str(tallies),
        )
        assert json.loads(out)["aborted"] is True
        assert len(tallies.read_text().splitlines()) == 17

    def test_simulate_zero_rounds(self, capsys):
        assert run(capsys, "simulate", "--theta", "1", "--phi", "1", "--omega", "1", "--rounds", "0")[0] == 2

    @pytest.mark.parametrize("prop", ["3", "5"])
    def test_reproduce(self, capsys, prop):
        code, out, _ = run(capsys, "reproduce", prop)
        assert code == 0 and "verdict      pass" in out

    def test_reproduce_unknown(self, capsys):
        assert run(capsys, "reproduce", "7")[0] == 2


class TestConfig:
    def test_config_supplies_angles(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('theta = "pi/3"\nphi = "pi/3"\nomega = "pi"\n')
        code, out, _ = run(capsys, "bound", "--config", str(cfg))
        assert code == 0 and "condition     true" in out

    def test_command_line_overrides_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('theta = "pi/3"\nphi = "pi/3"\nomega = "pi"\n')
        _, out, _ = run(capsys, "bound", "--config", str(cfg), "--phi", "pi/2")
        assert "condition     false" in out

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("bogus = 1\n")
        assert run(capsys, "bound", "--config", str(cfg), "--theta", "1", "--phi", "1", "--omega", "1")[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "bound", "--config", str(tmp_path / "none.toml"))[0] == 2
