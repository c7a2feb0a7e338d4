import csv
import math

import pytest

from mcphase import cli
from mcphase.gatelib import parse_circuit
from mcphase.synth import verify

SYNTHETIC = """\
[spins]
A = 500.0
B = 0.0
C = -300.0

[couplings]
A-B = 50.0
B-C = 0.0
A-C = 20.0
"""


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report_fields(text):
    return dict(line[2:].split(" = ") for line in text.splitlines() if line.startswith("# ") and " = " in line)


@pytest.fixture
def circuit_file(tmp_path, capsys):
    def make(pattern, phi, *passes):
        args = ["decompose", "--s", pattern, "--phi", phi]
        for p in passes:
            args += ["--pass", p]
        code, out, _ = run(capsys, *args)
        assert code == 0
        path = tmp_path / f"{pattern}.circ"
        path.write_text(out)
        return path
    return make


class TestDecompose:
    def test_two_qubit(self, capsys):
        code, out, _ = run(capsys, "decompose", "--n", "2", "--s", "11", "--phi", "pi/2")
        assert code == 0
        fields = report_fields(out)
        assert fields["recursion_depth"] == "2" and fields["verified"] == "yes"
        assert float(fields["deviation_exact"]) < 1e-10

    def test_single_qubit_base_case(self, capsys):
        code, out, _ = run(capsys, "decompose", "--n", "1", "--s", "1", "--phi", "pi")
        assert code == 0
        gates = [line for line in out.splitlines() if line and not line.startswith(("#", "QUBITS"))]
        assert [g.split()[0] for g in gates] == ["ZROT", "GPHASE"]

    @pytest.mark.parametrize("argv", [
        ["--n", "2", "--s", "2", "--phi", "1"],
        ["--n", "3", "--s", "11", "--phi", "1"],
        ["--s", "11", "--phi", "one"],
        ["--s", "11"],
    ])
    def test_usage_errors(self, capsys, argv):
        code, _, _ = run(capsys, "decompose", *argv)
        assert code == cli.EXIT_USAGE

    @pytest.mark.parametrize("passes", [(), ("expand",), ("expand", "rewrite"), ("expand", "rewrite", "strip")])
    def test_round_trip_identical_numbers(self, capsys, passes):
        args = ["decompose", "--s", "0110", "--phi", "-2.2"]
        for p in passes:
            args += ["--pass", p]
        code, out, _ = run(capsys, *args)
        assert code == 0
        mode = "up_to_global_phase" if "strip" in passes else "exact"
        again = verify(parse_circuit(out), 4, "0110", -2.2, mode)
        fields = report_fields(out)
        assert f"{again.deviation_exact:.3e}" == fields["deviation_exact"]
        assert f"{again.deviation_phase:.3e}" == fields["deviation_up_to_global_phase"]

    def test_writes_to_out_dir(self, capsys, tmp_path):
        code, out, _ = run(capsys, "--out", str(tmp_path), "decompose", "--s", "101", "--phi", "45deg")
        assert code == 0
        assert (tmp_path / "decompose.txt").read_text() == out


class TestCompile:
    def test_phase_gate_on_carbons(self, capsys, circuit_file):
        path = circuit_file("11", "0.9")
        code, out, _ = run(capsys, "compile", str(path), "--map", "C1,C2")
        assert code == 0
        body = [line for line in out.splitlines() if not line.startswith("#")]
        assert sum(line.startswith("jdelay pair=1,2") for line in body) == 1
        assert body[-1] == "gphase angle=0.225"
        verify_line = [line for line in out.splitlines() if line.startswith("# verify:")][0]
        assert float(verify_line.split("max_deviation=")[1].split()[0]) < 1e-8

    def test_physical_delays_with_decoupled_proton(self, capsys, circuit_file):
        path = circuit_file("11", "0.9")
        code, out, _ = run(capsys, "compile", str(path), "--map", "C1,C2", "--decouple", "H3", "--physical-delays")
        assert code == 0
        assert "jdelay" not in out and "delay t=" in out
        assert "# note: op 0: coupling delay" in out

    def test_weak_coupling_pair_compiles(self, capsys, circuit_file):
        path = circuit_file("11", "0.9")
        code, _, _ = run(capsys, "compile", str(path), "--map", "C1,H3")
        assert code == 0

    def test_zero_coupling_is_compile_error(self, capsys, circuit_file, tmp_path):
        system = tmp_path / "synthetic.ini"
        system.write_text(SYNTHETIC)
        path = circuit_file("11", "0.9")
        code, _, err = run(capsys, "--system", str(system), "compile", str(path), "--map", "B,C")
        assert code == cli.EXIT_COMPILE
        assert "op 0" in err

    def test_global_phase_only(self, capsys, tmp_path):
        path = tmp_path / "gp.circ"
        path.write_text("QUBITS 2\nGPHASE angle=0.5\n")
        code, out, _ = run(capsys, "compile", str(path), "--map", "C1,C2")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "gphase angle=0.5"
        assert len(lines) == 2 and "global_phase_absorbed=0.5" in lines[1]

    def test_line_selective_fails_verification(self, capsys, circuit_file):
        path = circuit_file("111", "0.9", "expand")
        code, _, _ = run(capsys, "compile", str(path), "--line-selective")
        assert code == cli.EXIT_VERIFY

    def test_missing_circuit_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "compile", str(tmp_path / "absent.circ"))
        assert code == cli.EXIT_UNREADABLE

    def test_bad_map_is_usage_error(self, capsys, circuit_file):
        path = circuit_file("11", "0.9")
        code, _, _ = run(capsys, "compile", str(path), "--map", "C1,C1")
        assert code in (cli.EXIT_USAGE, cli.EXIT_COMPILE)


class TestSimulate:
    def test_phase2_sweep(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--experiment", "phase2",
                           "--angles", "pi/4,pi/2,3*pi/4,pi", "--out", str(tmp_path))
        assert code == 0
        assert "slope = 2.000000" in out
        with open(tmp_path / "phase2.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 16
        assert len({r["angle_rad"] for r in rows}) == 4 and len({r["peak_id"] for r in rows}) == 4

    @pytest.mark.parametrize("mode", ["exact", "line_selective"])
    def test_phase3_sweep(self, capsys, tmp_path, mode):
        angles = ",".join(f"{d}deg" for d in (0, 25.2, 38.2, 90, 141.8, 154.7))
        code, out, _ = run(capsys, "simulate", "--experiment", "phase3", "--angles", angles,
                           "--ccnot-mode", mode, "--out", str(tmp_path))
        assert code == 0
        slope = float(out.split("slope = ")[1].split()[0])
        assert abs(abs(slope) - 2) < 1e-6

    def test_sweep_range(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--experiment", "nocomp2", "--sweep", "0:pi:5", "--out", str(tmp_path))
        assert code == 0
        assert "n_points = 5" in out

    def test_preparation_experiment(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", "--experiment", "rho2prep", "--out", str(tmp_path))
        assert code == 0 and "scale" in out

    def test_empty_angles(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--experiment", "phase2", "--out", str(tmp_path))
        assert code == cli.EXIT_USAGE

    def test_unknown_experiment(self, capsys):
        code, _, _ = run(capsys, "simulate", "--experiment", "phase9", "--angles", "1")
        assert code == cli.EXIT_USAGE

    def test_unreadable_system(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--experiment", "phase2", "--angles", "1,2,3",
                         "--system", str(tmp_path / "none.ini"), "--out", str(tmp_path))
        assert code == cli.EXIT_UNREADABLE

    def test_flags_before_and_after_command(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["--experiment", "phase2", "--angles", "pi/4,pi/2,pi"]
        assert run(capsys, "--out", str(a), "simulate", *args)[0] == 0
        assert run(capsys, "simulate", *args, "--out", str(b))[0] == 0
        assert (a / "phase2.csv").read_bytes() == (b / "phase2.csv").read_bytes()

    def test_svg(self, capsys, tmp_path):
        pytest.importorskip("matplotlib")
        code, _, _ = run(capsys, "simulate", "--experiment", "phase2", "--angles", "pi/4,pi/2,pi",
                         "--out", str(tmp_path), "--format", "csv", "--format", "svg")
        assert code == 0
        assert (tmp_path / "phase2.svg").read_text().lstrip().startswith("<?xml")

    def test_run_config_validation(self):
        with pytest.raises(cli.UsageError):
            cli.RunConfig("phase2", [])
        with pytest.raises(cli.UsageError):
            cli.RunConfig("phase2", [1.0], formats=("png",))
        cli.RunConfig("pps2")


class TestFit:
    def test_fit_round_trip(self, capsys, tmp_path):
        run(capsys, "simulate", "--experiment", "phase2", "--angles", "pi/4,pi/2,3*pi/4,pi", "--out", str(tmp_path))
        code, out, _ = run(capsys, "fit", str(tmp_path / "phase2.csv"))
        assert code == 0
        assert "peak = C1:1" in out and "slope = 2.000000" in out

    def test_named_peak(self, capsys, tmp_path):
        run(capsys, "simulate", "--experiment", "phase2", "--angles", "pi/4,pi/2,3*pi/4,pi", "--out", str(tmp_path))
        code, out, _ = run(capsys, "fit", str(tmp_path / "phase2.csv"), "--peak", "C2:1")
        assert code == 0 and "peak = C2:1" in out

    def test_unknown_peak(self, capsys, tmp_path):
        run(capsys, "simulate", "--experiment", "phase2", "--angles", "pi/4,pi/2,pi", "--out", str(tmp_path))
        assert run(capsys, "fit", str(tmp_path / "phase2.csv"), "--peak", "X:9")[0] == cli.EXIT_USAGE

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "fit", str(tmp_path / "nope.csv"))[0] == cli.EXIT_UNREADABLE


@pytest.mark.parametrize("text,expected", [
    ("0:pi:3", [0.0, math.pi / 2, math.pi]),
    ("0:90deg:2", [0.0, math.pi / 2]),
])
def test_parse_sweep(text, expected):
    assert cli.parse_sweep(text) == pytest.approx(expected)


@pytest.mark.parametrize("bad", ["0:1", "0:1:0", "a:b:3"])
def test_parse_sweep_errors(bad):
    with pytest.raises(cli.UsageError):
        cli.parse_sweep(bad)
