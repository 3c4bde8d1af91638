#!/usr/bin/env python3
import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass
from datetime import UTC, datetime, timedelta
from html import escape
from itertools import product
from pathlib import Path
from string import Template
from typing import Any, NoReturn, Optional, Sequence

import yaml

from seaqtsim import _log as log
from seaqtsim.errors import Error
from seaqtsim.runner import RunConfig, Runner, SweepSummary, fermi_times

EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def sub(s: Any) -> str:
    """
    Replace variables in the given string by their environment variable value.

    :param s: String to substitute in.
    :return: Resulting string.
    """
    return Template(str(s)).safe_substitute(**os.environ)


def _resolve(value: Any) -> Any:
    # Substituted scalars are parsed again so that $VARIABLES may hold numbers.
    if isinstance(value, str) and "$" in value:
        return yaml.safe_load(sub(value))
    if isinstance(value, list):
        return [_resolve(v) for v in value]

    return value


@dataclass
class SuiteCase:
    """
    A sweep to execute as part of a suite.
    """

    config: RunConfig

    def __str__(self) -> str:
        c = self.config
        return (
            f"Sweep({c.dynamics} d_eps={c.deps[0]:g} r={c.bloch_modulus:g} "
            f"{c.frame} {c.rotation})"
        )

    def output_dir(self, root: Path = Path(".")) -> Path:
        """
        Return the output directory for this sweep.
        It returns a relative path by default.

        :param root: Directory in which all results are stored.
        :return: Given directory extended by the sweep properties.
        """
        c = self.config
        return root.joinpath(
            c.dynamics,
            f"deps_{c.deps[0]:g}",
            f"r_{c.bloch_modulus:g}",
            f"{c.frame}_{c.rotation}",
        )

    def run(self, root: Path) -> Optional[SweepSummary]:
        """
        Run the sweep.

        :param root: Directory in which all results are stored.
        :return: Summary, or None if the sweep failed.
        """
        runner = Runner(self.config, self.output_dir(root))
        try:
            return runner.sweep_tau()
        except Error as ex:
            log.error("🚨", ex.message)
            return None


@dataclass
class Suite:
    """
    A suite of sweeps, the product of all listed values.
    """

    dynamics: Optional[list[str]] = None
    # Numbers may be given as strings holding $VARIABLES.
    deps: Optional[list[float | str]] = None
    bloch_modulus: Optional[list[float | str]] = None
    frame: Optional[list[str]] = None
    rotation: Optional[list[str]] = None

    def all(self, default: RunConfig) -> list[SuiteCase]:
        """
        Get a list of all sweeps that are covered by this suite.

        :param default: Default values to use for the suite.
        :return: List of sweeps in the suite.
        """
        return [
            SuiteCase(
                dataclasses.replace(
                    default,
                    dynamics=sub(dynamics),
                    deps=[float(sub(d_eps))],
                    bloch_modulus=float(sub(r)),
                    frame=sub(frame),
                    rotation=sub(rotation),
                )
            )
            for dynamics, d_eps, r, frame, rotation in product(
                self.dynamics or [default.dynamics],
                self.deps or [default.deps[0]],
                self.bloch_modulus or [default.bloch_modulus],
                self.frame or [default.frame],
                self.rotation or [default.rotation],
            )
        ]


class Suites:
    """
    Complete suite configuration with defaults and a list of suites to execute.
    """

    def __init__(self, name: str, data: Any, output: Path):
        """
        Initialize the suites from configuration data.

        :param name: Name of the config.
        :param data: Configuration from YAML.
        :param output: Path to store results in.
        """
        if not isinstance(data, dict) or "suites" not in data:
            raise ValueError(f"suite {name!r} has no 'suites' list")

        defaults = {k: _resolve(v) for k, v in (data.get("default") or {}).items()}
        self.name = name
        self.default = RunConfig.from_mapping(defaults)
        try:
            self.suites = [Suite(**s) for s in data["suites"]]
        except TypeError as e:
            raise ValueError(f"suite {name!r}: {e}") from None
        self.ts = datetime.now().astimezone()
        self.output = output.joinpath(name, self.ts.isoformat(timespec="seconds"))
        self.index = self.output.joinpath("index.html")
        os.makedirs(self.output, mode=0o0775, exist_ok=True)

    @staticmethod
    def from_file(path: Path, output: Path) -> "Suites":
        """
        Load suites from a YAML file named after the suite.

        :param path: Suite file.
        :param output: Path to store results in.
        :return: Suites.
        """
        with open(path, "rb") as f:
            name, _ = os.path.splitext(os.path.basename(path))
            return Suites(name=name, data=yaml.safe_load(f), output=output)

    def all(self) -> list[SuiteCase]:
        """
        Get a list of all sweeps that are covered by this suite.

        :return: List of sweeps in the suite.
        """
        return [case for suite in self.suites for case in suite.all(self.default)]

    def run(self) -> bool:
        """
        Run all sweeps in sequence.

        :return: True if every sweep succeeded.
        """
        self.__start_html()

        success = True
        for case in self.all():
            start = datetime.now(UTC)
            log.info("▶️", str(case))
            summary = case.run(self.output)
            duration = datetime.now(UTC) - start
            log.info(self.__result_icon(summary is not None), str(case))
            log.info("⏱️", f"Sweep took {duration}")

            self.__case_html(case, summary, duration)
            success = success and summary is not None

        log.info(
            "✅",
            "Suite completed. Results are stored in "
            f"file://{os.path.realpath(self.output)}",
        )
        self.__end_html()
        return success

    def __start_html(self) -> None:
        log.info("🌐", f"Suite overview: file://{os.path.realpath(self.index)}")

        with open(self.index, "w", encoding="utf-8") as fh:
            fh.write(
                "<!DOCTYPE html>"
                "<html lang=en-gb>"
                "<head>"
                f"<title>Suite {escape(repr(self.name))} ({self.ts})</title>"
                "<meta charset=utf-8>"
                "<style>"
                "  body {font-family: sans-serif; }"
                "  table, th, td { border: 1px solid gray; border-collapse: collapse; }"
                "  td { padding: 0.2em }"
                "</style>"
                "</head>"
                "<body>"
                f"<h1>Suite: {escape(self.name)}</h1>"
                f"<p>Started at {self.ts}</p>"
                "<h2>Results</h2>"
                "<table>"
                "<tr>"
                "<th>🧪</th><th>Dynamics</th><th>δε (μV)</th><th>r</th>"
                "<th>Frame</th><th>Rotation</th><th>Max fidelity</th>"
                "<th>τ_ent (ns)</th><th>Loss (ns)</th><th>📝</th><th>⏱️</th>"
                "</tr>"
            )

    def __end_html(self) -> None:
        log.info("🌐", f"Suite overview: file://{os.path.realpath(self.index)}")
        with open(self.index, "a", encoding="utf-8") as fh:
            fh.write("</table></body></html>")

    def __case_html(
        self, case: SuiteCase, summary: Optional[SweepSummary], duration: timedelta
    ) -> None:
        duration = timedelta(
            days=duration.days, seconds=duration.seconds, microseconds=0
        )

        fidelity = tau_ent = loss = ""
        if summary is not None:
            fidelity = f"{summary.max_fidelity:.4f}"
            tau_ent = f"{summary.tau_concurrence:g}"
            loss = "–" if summary.loss_time is None else f"{summary.loss_time:g}"

        c = case.config
        with open(self.index, "a", encoding="utf-8") as fh:
            fh.write(
                "<tr>"
                f"<td>{self.__result_icon(summary is not None)}</td>"
                f"<td>{escape(c.dynamics)}</td>"
                f"<td>{c.deps[0]:g}</td>"
                f"<td>{c.bloch_modulus:g}</td>"
                f"<td>{escape(c.frame)}</td>"
                f"<td>{escape(c.rotation)}</td>"
                f"<td>{fidelity}</td>"
                f"<td>{tau_ent}</td>"
                f"<td>{loss}</td>"
                f'<td><a href="{case.output_dir()}/sweep_tau.csv">📃</a></td>'
                f"<td>{duration}</td>"
                "</tr>"
            )

    @staticmethod
    def __result_icon(value: bool) -> str:
        return "✅" if value else "❌"


class ArgumentParser(argparse.ArgumentParser):
    """
    Argument parser exiting with the usage exit code on errors.
    """

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_flags() -> ArgumentParser:
    # Defaults are None so that unset flags do not override the config file.
    parser = ArgumentParser(add_help=False)
    parser.add_argument(
        "--config", type=Path, help="Flat JSON or YAML file with default flag values"
    )
    parser.add_argument(
        "--dynamics",
        choices=["seaqt", "lindblad", "vonneumann"],
        help="Equation of motion",
    )
    parser.add_argument("--tau", type=float, help="Gate duration in ns (single-run)")
    parser.add_argument("--tau-max", type=float, help="Longest swept duration in ns")
    parser.add_argument("--tau-steps", type=int, help="Number of swept durations")
    parser.add_argument(
        "--deps",
        type=float,
        action="append",
        help="Detuning in uV, repeatable (sweep-eps)",
    )
    parser.add_argument("--calibration", type=str, help="Calibration table file")
    parser.add_argument("--seed", type=int, help="Seed of the random states")
    parser.add_argument("--n", type=int, help="Number of random states")
    parser.add_argument("--out", type=str, help="Directory to store output in")
    parser.add_argument(
        "--plot", action="store_const", const=True, help="Also write SVG plots"
    )
    parser.add_argument("--t-end", type=float, help="Stress horizon in ns")
    parser.add_argument(
        "--method", choices=["ginibre", "haar", "mixture"], help="Random state method"
    )
    parser.add_argument("--bloch-modulus", type=float, help="Initial Bloch modulus")
    parser.add_argument(
        "--frame", choices=["rotating", "full"], help="Free-evolution Hamiltonian"
    )
    parser.add_argument(
        "--rotation", choices=["instantaneous", "finite"], help="Rotation mode"
    )
    parser.add_argument("--dt-max", type=float, help="Largest integration step in ns")
    parser.add_argument(
        "--sample-interval", type=float, help="Trajectory sampling interval in ns"
    )
    parser.add_argument("--j12-mhz", type=float, help="Coupling J12/2π in MHz")
    parser.add_argument(
        "-d", "--debug", action="store_const", const=True, help="Enable debug logging"
    )
    return parser


def build_parser() -> ArgumentParser:
    """
    Create the command-line parser.

    :return: Parser with one subcommand per operation.
    """
    common = _common_flags()
    parser = ArgumentParser(prog="seaqtsim", description="Simulate a CPHASE gate")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, description in [
        ("single-run", "Run one gate duration and dump the full trajectory"),
        ("sweep-tau", "Sweep the gate duration"),
        ("sweep-eps", "Sweep the gate duration for several detunings"),
        ("stress-positivity", "Integrate random states and check positivity"),
        ("fermi", "Print the transition time and default dissipative time"),
    ]:
        commands.add_parser(name, parents=[common], help=description)

    suite = commands.add_parser("suite", parents=[common], help="Run a suite file")
    suite.add_argument("file", type=Path, help="Suite file")

    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge the built-in defaults, the config file and the flags.

    :param args: Parsed arguments.
    :return: Run configuration.
    """
    values: dict[str, Any] = {}
    if args.config is not None:
        values.update(RunConfig.load(args.config))

    names = {f.name for f in dataclasses.fields(RunConfig)}
    values.update(
        {k: v for k, v in vars(args).items() if k in names and v is not None}
    )

    return RunConfig.from_mapping(values)


def _execute(args: argparse.Namespace) -> int:
    if args.debug:
        os.environ["LOG_LEVEL"] = "debug"

    cfg = load_config(args)

    if args.command == "fermi":
        t_ij, tau_d = fermi_times(cfg)
        print(f"t_ij = {t_ij:.2f} ns")
        print(f"tau_D = {tau_d:.2f} ns")
        return 0

    if args.command == "suite":
        suites = Suites.from_file(args.file, Path(cfg.out))
        log.setup(suites.output)
        return 0 if suites.run() else EXIT_NUMERICAL

    runner = Runner(cfg)
    log.setup(runner.output_dir)

    match args.command:
        case "single-run":
            runner.single_run()
        case "sweep-tau":
            runner.sweep_tau()
        case "sweep-eps":
            runner.sweep_eps()
        case "stress-positivity":
            if not runner.stress().passed:
                return EXIT_NUMERICAL

    return 0


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    :param argv: Arguments without the program name, sys.argv if None.
    :return: Exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        return _execute(args)
    except (ValueError, yaml.YAMLError) as e:
        parser.print_usage(sys.stderr)
        log.error("🚨", str(e))
        return EXIT_USAGE
    except Error as e:
        log.error("🚨", e.message)
        return EXIT_NUMERICAL
    except OSError as e:
        log.error("💾", str(e))
        return EXIT_IO
    except KeyboardInterrupt:
        log.error("🚨", "exiting on request")
        return EXIT_USAGE


def main() -> None:
    """
    Main function of the CLI.
    """
    sys.exit(cli_main())
