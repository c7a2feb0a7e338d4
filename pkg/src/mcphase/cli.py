"""Command-line front end: ``mcphase decompose|compile|simulate|fit``.

Exit codes: 0 success, 1 missing optional dependency, 2 usage error,
3 verification failure, 4 compile failure, 5 unreadable input file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bench
from .angles import parse_angle, parse_angle_list
from .gatelib import format_circuit, parse_circuit
from .nmrpulse import CompileError, SpinSystem, compile_circuit, compiled_deviation
from .synth import (
    decompose_controlled_phase,
    expand_controlled_zrot,
    rewrite_negative_controls,
    strip_global_phase,
    verify,
)

log = logging.getLogger("mcphase")

EXIT_OK = 0
EXIT_MISSING_DEP = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3
EXIT_COMPILE = 4
EXIT_UNREADABLE = 5

COMPILE_TOL = 1e-8
PASSES = {
    "expand": expand_controlled_zrot,
    "rewrite": rewrite_negative_controls,
    "strip": strip_global_phase,
}


class UsageError(Exception):
    pass


class UnreadableFile(Exception):
    pass


class MissingDependency(Exception):
    pass


@dataclass
class RunConfig:
    """Everything ``simulate`` needs; built from the command line."""

    experiment: str
    angles: list[float] = field(default_factory=list)
    system_path: Path | None = None
    qubit_map: list[str] | None = None
    ccnot_mode: str = "exact"
    out_dir: Path = Path(".")
    formats: tuple[str, ...] = ("csv",)

    def __post_init__(self):
        if self.experiment not in bench.EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}; choose from {sorted(bench.EXPERIMENTS)}")
        if bench.EXPERIMENTS[self.experiment].run is not None and not self.angles:
            raise UsageError(f"experiment {self.experiment!r} needs a non-empty angle list")
        if self.ccnot_mode not in bench.CCNOT_MODES:
            raise UsageError(f"ccnot mode must be one of {bench.CCNOT_MODES}")
        bad = set(self.formats) - {"csv", "svg"}
        if bad:
            raise UsageError(f"unknown output format(s): {sorted(bad)}")


def load_system(path) -> SpinSystem:
    if path is None:
        return SpinSystem.tce()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UnreadableFile(f"cannot read spin-system file {path}: {exc.strerror}") from exc
    try:
        return SpinSystem.loads(text)
    except Exception as exc:
        raise UnreadableFile(f"cannot parse spin-system file {path}: {exc}") from exc


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc.strerror}") from exc


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_sweep(text: str) -> list[float]:
    """``start:stop:num`` -> ``num`` evenly spaced angles, both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"sweep must look like start:stop:num, got {text!r}")
    try:
        start, stop = parse_angle(parts[0]), parse_angle(parts[1])
        num = int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad sweep {text!r}: {exc}") from None
    if num < 1:
        raise UsageError("sweep needs at least one point")
    return [float(a) for a in np.linspace(start, stop, num)]


# -- commands -----------------------------------------------------------------------


def cmd_decompose(args) -> int:
    s = args.s
    if not s or set(s) - {"0", "1"}:
        raise UsageError(f"pattern must be a non-empty bit string, got {s!r}")
    n = args.n if args.n is not None else len(s)
    if n != len(s):
        raise UsageError(f"--n {n} does not match the pattern length {len(s)}")
    c = decompose_controlled_phase(n, s, args.phi)
    for name in args.passes:
        c = PASSES[name](c)
    mode = "up_to_global_phase" if "strip" in args.passes else "exact"
    report = verify(c, n, s, args.phi, mode)
    text = format_circuit(c) + "\n" + "".join(f"# {line}\n" for line in report.as_text().splitlines())
    _emit(text, args, "decompose.txt")
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_compile(args) -> int:
    system = load_system(args.system)
    if args.decouple:
        system = system.decouple(*args.decouple.split(","))
    try:
        circuit = parse_circuit(_read_text(args.circuit))
    except ValueError as exc:
        raise UsageError(f"cannot parse circuit {args.circuit}: {exc}") from None
    qubit_map = args.map.split(",") if args.map else None
    try:
        seq = compile_circuit(circuit, system, qubit_map, physical_delays=args.physical_delays,
                              exact_mcx=not args.line_selective)
    except CompileError as exc:
        print(f"compile error: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    exact, phase_dev = compiled_deviation(seq, circuit, qubit_map)
    lines = [seq.to_text().rstrip("\n")] if len(seq) or seq.global_phase else []
    lines += [f"# note: {note}" for note in seq.notes]
    lines.append(f"# verify: max_deviation={exact:.3e} up_to_global_phase={phase_dev:.3e} "
                 f"global_phase_absorbed={seq.global_phase!r}")
    _emit("\n".join(lines) + "\n", args, "sequence.txt")
    return EXIT_OK if exact <= COMPILE_TOL else EXIT_VERIFY


def cmd_simulate(args) -> int:
    angles = list(args.angles or [])
    if args.sweep:
        angles += parse_sweep(args.sweep)
    config = RunConfig(
        experiment=args.experiment,
        angles=angles,
        system_path=Path(args.system) if args.system else None,
        ccnot_mode=args.ccnot_mode,
        out_dir=Path(args.out) if args.out else Path("."),
        formats=tuple(args.format),
    )
    return run_simulation(config)


def run_simulation(config: RunConfig) -> int:
    system = load_system(config.system_path) if config.system_path else None
    run = bench.run_sweep(config.experiment, config.angles, config.ccnot_mode, system)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = config.out_dir / f"{config.experiment}.csv"
    csv_path.write_text(bench.sweep_csv(run))
    print(f"wrote {csv_path}")
    for note in run.notes:
        print(note)
    if run.fit is not None:
        print(f"tracked_peak = {run.tracked_peak}")
        print(run.fit.as_text(), end="")
    if "svg" in config.formats and run.spectra:
        svg_path = config.out_dir / f"{config.experiment}.svg"
        write_svg(run, svg_path)
        print(f"wrote {svg_path}")
    return EXIT_OK


def write_svg(run: bench.SweepRun, path: Path) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise MissingDependency("svg output needs matplotlib (pip install 'artifact[plot]')") from exc
    ids = sorted({pid for spec in run.spectra for pid in spec.ids})
    fig, ax = plt.subplots(figsize=(6, 4))
    for pid in ids:
        pts = [(a, s.relative_phase(pid)) for a, s in zip(run.angles, run.spectra) if pid in s]
        ax.plot([a for a, _ in pts], np.unwrap([p for _, p in pts]), marker="o", label=pid)
    ax.set_xlabel("sweep angle (rad)")
    ax.set_ylabel("phase relative to reference (rad)")
    ax.set_title(run.experiment)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_fit(args) -> int:
    with _open_csv(args.csv) as rows:
        missing = {"angle_rad", "peak_id", "phase_ref_rad"} - set(rows.fieldnames or ())
        if missing:
            raise UsageError(f"{args.csv} lacks columns {sorted(missing)}")
        table: dict[str, list] = {}
        for row in rows:
            table.setdefault(row["peak_id"], []).append((float(row["angle_rad"]), float(row["phase_ref_rad"])))
    if not table:
        raise UsageError(f"{args.csv} has no data rows")
    peak = args.peak or _varying_peak(table)
    if peak not in table:
        raise UsageError(f"peak {peak!r} not in {sorted(table)}")
    try:
        result = bench.fit_phase_slope(table[peak])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(f"peak = {peak}\n" + result.as_text(), args, "fit.txt")
    return EXIT_OK


class _open_csv:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        try:
            self.fh = open(self.path, newline="")
        except OSError as exc:
            raise UnreadableFile(f"cannot read {self.path}: {exc.strerror}") from exc
        return csv.DictReader(self.fh)

    def __exit__(self, *exc):
        self.fh.close()


def _varying_peak(table) -> str:
    """First peak (file order) whose relative phase moves across the sweep."""
    for pid, pts in table.items():
        if np.ptp(np.unwrap([p for _, p in pts])) > 1e-9:
            return pid
    return next(iter(table))


def _emit(text: str, args, filename: str) -> None:
    print(text, end="")
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text)


# -- parser -------------------------------------------------------------------------


def _global_flags(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--system", default=default, metavar="FILE",
                        help="spin-system INI file (default: packaged trichloroethylene)")
    parser.add_argument("--out", default=default, metavar="DIR", help="output directory")
    parser.add_argument("--format", action="append", choices=("csv", "svg"),
                        default=argparse.SUPPRESS if suppress else None,
                        help="output format; repeat for several (csv is always written by simulate)")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcphase", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="synthesize and verify a controlled phase gate")
    p.add_argument("--n", type=int, help="number of qubits (default: pattern length)")
    p.add_argument("--s", required=True, help="bit pattern receiving the phase, e.g. 011")
    p.add_argument("--phi", type=_angle, required=True, help="phase, e.g. pi/2 or 45deg")
    p.add_argument("--pass", dest="passes", action="append", default=[], choices=sorted(PASSES),
                   help="post-synthesis pass, applied in the order given")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("compile", parents=[common], help="compile a circuit file to a pulse sequence")
    p.add_argument("circuit", help="circuit in the text format printed by decompose")
    p.add_argument("--map", help="comma-separated spin labels for qubits 0, 1, ...")
    p.add_argument("--decouple", help="comma-separated spins to decouple")
    p.add_argument("--physical-delays", action="store_true",
                   help="realize coupling evolutions as refocused free precession")
    p.add_argument("--line-selective", action="store_true",
                   help="leave multi-controlled NOTs as bare line-selective pi pulses")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", parents=[common], help="run a benchmark experiment sweep")
    p.add_argument("--experiment", required=True, choices=sorted(bench.EXPERIMENTS))
    p.add_argument("--angles", type=_angle_list, help="comma-separated sweep angles, e.g. pi/4,pi/2")
    p.add_argument("--sweep", help="start:stop:num evenly spaced angles")
    p.add_argument("--ccnot-mode", choices=bench.CCNOT_MODES, default="exact")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="fit a phase slope to a sweep CSV")
    p.add_argument("csv", help="CSV written by simulate")
    p.add_argument("--peak", help="peak id to fit (default: first peak whose phase varies)")
    p.set_defaults(func=cmd_fit)
    return parser


def _angle_list(text: str) -> list[float]:
    try:
        return parse_angle_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.format = args.format or ["csv"]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mcphase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnreadableFile as exc:
        print(f"mcphase: error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except MissingDependency as exc:
        print(f"mcphase: error: {exc}", file=sys.stderr)
        return EXIT_MISSING_DEP


if __name__ == "__main__":
    sys.exit(main())
