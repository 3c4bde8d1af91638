"""
Tests for the command line, its configuration layering and the suite runner.
"""

from pathlib import Path

import numpy as np
import pytest

from seaqtsim import runner
from seaqtsim.cli import (
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_USAGE,
    Suite,
    Suites,
    build_parser,
    cli_main,
    load_config,
)
from seaqtsim.errors import SweepError
from seaqtsim.harness import StateMethod, StressCase, StressReport
from seaqtsim.runner import RunConfig

FAST = ["--dynamics", "vonneumann", "--tau-max", "20", "--tau-steps", "3"]


def data_lines(path: Path) -> list[str]:
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


# ═══════════════════════════════════════════════════════════════════
# Arguments and configuration
# ═══════════════════════════════════════════════════════════════════


class TestArguments:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["unknown"],
            ["sweep-tau", "--unknown"],
            ["sweep-tau", "--dynamics", "classical"],
            ["sweep-tau", "--tau-steps", "many"],
            ["stress-positivity", "--method", "uniform"],
        ],
    )
    def test_usage(self, argv: list[str]) -> None:
        assert cli_main(argv) == EXIT_USAGE

    def test_help(self) -> None:
        assert cli_main(["--help"]) == 0

    def test_invalid_values(self, tmp_path: Path) -> None:
        out = ["--out", str(tmp_path)]
        assert cli_main(["sweep-tau", "--tau-steps", "0"] + out) == EXIT_USAGE
        assert cli_main(["stress-positivity", "--n", "0"] + out) == EXIT_USAGE
        assert cli_main(["sweep-tau", "--bloch-modulus", "2"] + out) == EXIT_USAGE


class TestConfig:
    def test_defaults(self) -> None:
        cfg = load_config(build_parser().parse_args(["sweep-tau"]))
        assert cfg == RunConfig()

    def test_precedence(self, tmp_path: Path) -> None:
        path = tmp_path / "config.yaml"
        path.write_text("tau_steps: 7\ntau_max: 70\ndeps: [100]\n")

        args = build_parser().parse_args(
            ["sweep-tau", "--config", str(path), "--tau-max", "35"]
        )
        cfg = load_config(args)

        assert cfg.tau_steps == 7
        assert cfg.tau_max == 35.0
        assert cfg.deps == [100]
        assert cfg.dynamics == "seaqt"
        assert cfg.taus == pytest.approx([0, 35 / 6, 70 / 6, 17.5, 70 / 3, 175 / 6, 35])

    def test_json_config(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text('{"seed": 42, "method": "haar"}')

        args = build_parser().parse_args(["stress-positivity", "--config", str(path)])
        cfg = load_config(args)

        assert cfg.seed == 42
        assert cfg.method == "haar"

    @pytest.mark.parametrize(
        "content",
        [
            "tau_stepz: 7\n",
            "- 1\n- 2\n",
            "dynamics: classical\n",
            "a: [\n",
            "tau: abc\n",
            "deps: 80\n",
            "deps: [80, low]\n",
            "tau_steps: 2.5\n",
            "n: true\n",
            "plot: 1\n",
            "dynamics: 3\n",
        ],
    )
    def test_bad_config(self, tmp_path: Path, content: str) -> None:
        path = tmp_path / "config.yaml"
        path.write_text(content)

        argv = ["sweep-tau", "--config", str(path), "--out", str(tmp_path)]
        assert cli_main(argv) == EXIT_USAGE

    def test_numbers_are_coerced(self) -> None:
        cfg = RunConfig.from_mapping({"tau": 100, "tau_steps": 5.0, "deps": [80]})

        assert isinstance(cfg.tau, float)
        assert isinstance(cfg.tau_steps, int)
        assert cfg.deps == [80.0] and isinstance(cfg.deps[0], float)
        assert cfg.sample_interval is None

    @pytest.mark.parametrize(
        "data", [{"tau": "abc"}, {"deps": 80}, {"seed": None}, {"out": 5}]
    )
    def test_wrong_types(self, data: dict[str, object]) -> None:
        with pytest.raises(ValueError):
            RunConfig.from_mapping(data)

    def test_protocol(self) -> None:
        cfg = RunConfig(dynamics="lindblad", deps=[100.0], frame="full")
        pcfg = cfg.protocol()

        assert pcfg.params.d_eps == 100.0
        assert pcfg.dynamics.value == "lindblad"
        assert pcfg.frame.value == "full"


# ═══════════════════════════════════════════════════════════════════
# Commands
# ═══════════════════════════════════════════════════════════════════


class TestCommands:
    def test_fermi(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert cli_main(["fermi", "--j12-mhz", "5"]) == 0

        out = capsys.readouterr().out
        assert "t_ij = 31.83 ns" in out
        assert "tau_D = 95.49 ns" in out

    def test_fermi_calibrated(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert cli_main(["fermi"]) == 0

        out = capsys.readouterr().out
        assert "t_ij = 44.21 ns" in out
        assert "tau_D = 132.63 ns" in out

    def test_sweep_tau(self, tmp_path: Path) -> None:
        assert cli_main(["sweep-tau", "--out", str(tmp_path), "--plot"] + FAST) == 0

        lines = data_lines(tmp_path / "sweep_tau.csv")
        assert lines[0].startswith("tau_ns,d_eps_uV,")
        assert [line.split(",")[0] for line in lines[1:]] == ["0", "10", "20"]
        for name in ("fidelity.svg", "concurrence.svg", "entropy.svg", "seaqtsim.log"):
            assert (tmp_path / name).exists()

    def test_sweep_eps(self, tmp_path: Path) -> None:
        argv = ["sweep-eps", "--out", str(tmp_path), "--deps", "80", "--deps", "100"]
        assert cli_main(argv + FAST) == 0

        lines = data_lines(tmp_path / "sweep_eps.csv")
        assert [line.split(",")[1] for line in lines[1:]] == ["80"] * 3 + ["100"] * 3

    def test_single_run(self, tmp_path: Path) -> None:
        argv = ["single-run", "--out", str(tmp_path), "--tau", "20"]
        assert cli_main(argv + ["--sample-interval", "5", "--plot"]) == 0

        lines = data_lines(tmp_path / "trajectory.csv")
        assert lines[0].startswith("time_ns,")
        assert [line.split(",")[0] for line in lines[1:]] == [
            "0",
            "5",
            "10",
            "15",
            "20",
        ]
        assert len(data_lines(tmp_path / "terms.csv")) == 33
        assert (tmp_path / "entropy.svg").exists()

    def test_stress(self, tmp_path: Path) -> None:
        argv = ["stress-positivity", "--out", str(tmp_path), "--n", "2"]
        assert cli_main(argv + ["--t-end", "20", "--seed", "5", "--plot"]) == 0

        text = (tmp_path / "stress.csv").read_text()
        assert text.startswith("# generator=numpy.random.Philox seed=5 method=ginibre")
        for name in ("eigenvalues.svg", "concurrence.svg", "purity.svg"):
            assert (tmp_path / name).exists()

    def test_stress_failure(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        case = StressCase(
            index=0,
            initial_purity=0.5,
            times=np.array([0.0]),
            eigenvalues=np.array([[-1e-3, 0.2, 0.3, 0.501]]),
            concurrences=np.zeros(1),
            min_eigenvalue=-1e-3,
        )
        report = StressReport((case,), seed=0, method=StateMethod.GINIBRE)
        monkeypatch.setattr(runner, "positivity_stress", lambda *a, **kw: report)

        argv = ["stress-positivity", "--out", str(tmp_path), "--n", "1"]
        assert cli_main(argv) == EXIT_NUMERICAL

    def test_numerical_failure(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        def fail(*args: object) -> None:
            raise SweepError("eigenvalue -1e-3", 10.0, 80.0)

        monkeypatch.setattr(runner, "sweep_tau", fail)

        assert cli_main(["sweep-tau", "--out", str(tmp_path)]) == EXIT_NUMERICAL

    def test_missing_calibration(self, tmp_path: Path) -> None:
        argv = ["sweep-tau", "--out", str(tmp_path / "out")]
        argv += ["--calibration", str(tmp_path / "missing.yaml")]
        assert cli_main(argv + FAST) == EXIT_IO

    def test_calibration_file(self, tmp_path: Path) -> None:
        path = tmp_path / "calibration.yaml"
        path.write_text("- {d_eps: 0, j12: 0.02}\n- {d_eps: 100, j12: 0.04}\n")

        argv = ["sweep-tau", "--out", str(tmp_path), "--calibration", str(path)]
        assert cli_main(argv + FAST + ["--deps", "50"]) == 0
        lines = data_lines(tmp_path / "sweep_tau.csv")
        assert all(line.split(",")[1] == "50" for line in lines[1:])


# ═══════════════════════════════════════════════════════════════════
# Suites
# ═══════════════════════════════════════════════════════════════════


class TestSuites:
    def test_product(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("DETUNING", "100")
        suite = Suite(dynamics=["seaqt", "lindblad"], deps=["${DETUNING}", 80.0])
        cases = suite.all(RunConfig(tau_max=50.0))

        assert len(cases) == 4
        assert cases[0].config.deps == [100.0]
        assert cases[0].output_dir() == Path(
            "seaqt/deps_100/r_0.95/rotating_instantaneous"
        )
        assert cases[-1].config.dynamics == "lindblad"
        assert all(c.config.tau_max == 50.0 for c in cases)

    def test_run(self, tmp_path: Path) -> None:
        path = tmp_path / "tiny.yaml"
        path.write_text(
            "default:\n"
            "  dynamics: vonneumann\n"
            "  tau_max: 20\n"
            "  tau_steps: 3\n"
            "suites:\n"
            "  - deps: [80, 100]\n"
        )

        out = tmp_path / "results"
        assert cli_main(["suite", str(path), "--out", str(out)]) == 0

        [index] = list(out.glob("tiny/*/index.html"))
        html = index.read_text(encoding="utf-8")
        assert html.count("<td>✅</td>") == 2
        assert html.endswith("</table></body></html>")
        assert (index.parent / "vonneumann/deps_80/r_0.95").is_dir()

    def test_default_variables(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv("TAU_MAX", "70")
        data = {"default": {"tau_max": "$TAU_MAX", "deps": [80]}, "suites": []}

        suites = Suites("variables", data, tmp_path)
        assert suites.default.tau_max == 70.0

    @pytest.mark.parametrize(
        "data", [None, {"default": {}}, {"suites": [{"colour": ["red"]}]}]
    )
    def test_invalid(self, tmp_path: Path, data: object) -> None:
        with pytest.raises(ValueError):
            Suites("broken", data, tmp_path)
