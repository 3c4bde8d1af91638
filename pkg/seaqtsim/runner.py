import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from seaqtsim import _log as log
from seaqtsim.dynamics import RhsKind, mhz, seaqt_terms
from seaqtsim.harness import StateMethod, StressReport, positivity_stress
from seaqtsim.output import PlotKind, emit_csv, emit_plot, emit_terms_csv
from seaqtsim.protocol import (
    DEFAULT_CALIBRATION,
    CalibrationEntry,
    Frame,
    ProtocolConfig,
    RotationMode,
    SweepRecord,
    calibrate,
    default_dissipative_time,
    entanglement_loss_time,
    evolution_hamiltonian,
    fermi_transition_time,
    max_entanglement_times,
    run_cphase,
    steady_state_residual,
    sweep_deps,
    sweep_tau,
    trajectory_records,
)

FLOAT_FIELDS = (
    "tau",
    "tau_max",
    "t_end",
    "bloch_modulus",
    "dt_max",
    "sample_interval",
    "j12_mhz",
)
INT_FIELDS = ("tau_steps", "seed", "n")
OPTIONAL_FIELDS = ("sample_interval", "j12_mhz")


def _number(name: str, value: Any, kind: type) -> Any:
    # YAML booleans are ints, and integral floats are accepted as counts.
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    if kind is int and not float(value).is_integer():
        raise ValueError(f"{name} must be an integer, got {value!r}")

    return kind(value)


@dataclass
class RunConfig:
    """
    Settings of one command. Keys mirror the command-line flags.
    """

    dynamics: str = RhsKind.SEAQT.value
    tau: float = 200.0
    tau_max: float = 1400.0
    tau_steps: int = 200
    deps: list[float] = field(default_factory=lambda: [80.0])
    calibration: Optional[str] = None
    seed: int = 0
    n: int = 1000
    out: str = "results"
    plot: bool = False
    t_end: float = 1500.0
    method: str = StateMethod.GINIBRE.value
    bloch_modulus: float = 0.95
    frame: str = Frame.ROTATING.value
    rotation: str = RotationMode.INSTANTANEOUS.value
    dt_max: float = 0.5
    sample_interval: Optional[float] = None
    j12_mhz: Optional[float] = None

    def __post_init__(self) -> None:
        for name in FLOAT_FIELDS:
            value = getattr(self, name)
            if value is not None or name not in OPTIONAL_FIELDS:
                setattr(self, name, _number(name, value, float))
        for name in INT_FIELDS:
            setattr(self, name, _number(name, getattr(self, name), int))
        if not isinstance(self.deps, (list, tuple)):
            raise ValueError(f"deps must be a list of detunings, got {self.deps!r}")
        self.deps = [_number("deps", d, float) for d in self.deps]
        for name in ("dynamics", "method", "frame", "rotation", "out"):
            if not isinstance(getattr(self, name), str):
                raise ValueError(f"{name} must be a string: {getattr(self, name)!r}")
        if self.calibration is not None and not isinstance(self.calibration, str):
            raise ValueError(f"calibration must be a path: {self.calibration!r}")
        if not isinstance(self.plot, bool):
            raise ValueError(f"plot must be true or false: {self.plot!r}")

        # Enumerations raise ValueError on unknown names.
        RhsKind(self.dynamics)
        StateMethod(self.method)
        Frame(self.frame)
        RotationMode(self.rotation)

        if self.tau < 0 or self.tau_max < 0:
            raise ValueError("gate durations must be non-negative")
        if self.tau_steps < 1:
            raise ValueError(f"tau_steps must be positive: {self.tau_steps}")
        if not self.deps:
            raise ValueError("at least one detuning is required")
        if self.n < 1:
            raise ValueError(f"n must be positive: {self.n}")
        if self.j12_mhz is not None and self.j12_mhz <= 0:
            raise ValueError(f"j12_mhz must be positive: {self.j12_mhz}")

    @staticmethod
    def from_mapping(data: dict[str, Any]) -> "RunConfig":
        """
        Create a configuration from a mapping, rejecting unknown keys.

        :param data: Keys and values.
        :return: Validated configuration.
        """
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")

        return RunConfig(**data)

    @staticmethod
    def load(path: str | Path) -> dict[str, Any]:
        """
        Read a flat JSON or YAML configuration file.

        :param path: Path to the file.
        :return: Keys and values.
        """
        with open(path, "rb") as f:
            data = yaml.safe_load(f)

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: configuration must be a mapping")

        return data

    @property
    def taus(self) -> list[float]:
        """
        Evenly spaced gate durations from 0 to tau_max.
        """
        return [float(t) for t in np.linspace(0.0, self.tau_max, self.tau_steps)]

    def calibration_table(self) -> tuple[CalibrationEntry, ...]:
        """
        Calibration table from the configured file or the defaults.

        :return: Calibration entries.
        """
        if self.calibration is None:
            return DEFAULT_CALIBRATION

        return tuple(CalibrationEntry.from_file(self.calibration))

    def protocol(self, d_eps: Optional[float] = None) -> ProtocolConfig:
        """
        Protocol configuration calibrated for a detuning.

        :param d_eps: Detuning (μV), the first configured one if not given.
        :return: Protocol configuration.
        """
        d_eps = self.deps[0] if d_eps is None else d_eps
        params = calibrate(d_eps, self.calibration_table())

        return ProtocolConfig(
            bloch_modulus=self.bloch_modulus,
            rotation_mode=RotationMode(self.rotation),
            frame=Frame(self.frame),
            dynamics=RhsKind(self.dynamics),
            params=params,
            dt_max=self.dt_max,
            sample_interval=self.sample_interval,
        )

    def comments(self) -> list[str]:
        """
        Settings recorded in CSV headers.

        :return: Comment lines.
        """
        return [
            f"dynamics={self.dynamics} frame={self.frame} rotation={self.rotation} "
            f"bloch_modulus={self.bloch_modulus:g} dt_max={self.dt_max:g}"
        ]


@dataclass(frozen=True)
class SweepSummary:
    """
    Entanglement times extracted from a duration sweep.
    """

    max_fidelity: float
    tau_concurrence: float
    tau_fidelity: float
    loss_time: Optional[float]

    @staticmethod
    def of(records: list[SweepRecord]) -> "SweepSummary":
        """
        Summarize the records of one detuning.

        :param records: Records ascending in τ.
        :return: Summary.
        """
        tau_c, tau_f = max_entanglement_times(records)
        return SweepSummary(
            max_fidelity=max(r.metrics.fidelity for r in records),
            tau_concurrence=tau_c,
            tau_fidelity=tau_f,
            loss_time=entanglement_loss_time(records),
        )

    def log(self, d_eps: float) -> None:
        """
        Log the summary.

        :param d_eps: Detuning (μV) the summary belongs to.
        """
        loss = "never" if self.loss_time is None else f"{self.loss_time:g} ns"
        log.info(
            "📈",
            f"d_eps={d_eps:g} uV: max concurrence at {self.tau_concurrence:g} ns, "
            f"max fidelity {self.max_fidelity:.4f} at {self.tau_fidelity:g} ns, "
            f"entanglement lost at {loss}",
        )


class Runner:
    """
    Runner executes commands and stores their results.
    It also acts as runtime configuration for the command.
    """

    def __init__(self, cfg: RunConfig, output_dir: Optional[str | Path] = None):
        self.cfg = cfg
        self.output_dir = Path(output_dir if output_dir is not None else cfg.out)
        os.makedirs(self.output_dir, mode=0o0775, exist_ok=True)

    def path(self, name: str) -> Path:
        """
        Location of an output file.

        :param name: File name.
        :return: Path inside the output directory.
        """
        return self.output_dir.joinpath(name)

    def single_run(self) -> None:
        """
        Run the sequence for one gate duration and dump its full trajectory.
        """
        pcfg = self.cfg.protocol()
        log.info(
            "▶️",
            f"Running {pcfg.dynamics.value} for tau={self.cfg.tau:g} ns "
            f"at d_eps={pcfg.params.d_eps:g} uV",
        )

        final, traj = run_cphase(self.cfg.tau, pcfg)
        log.info("🔻", f"Spectral floor {traj.spectral_floor:.3e}")

        records = trajectory_records(traj, pcfg)
        emit_csv(records, self.path("trajectory.csv"), self.cfg.comments())

        symplectic, dissipative = seaqt_terms(
            final, evolution_hamiltonian(pcfg), pcfg.params
        )
        log.info(
            "⚖️",
            f"Final terms: |symplectic|={np.linalg.norm(symplectic):.3e}/ns, "
            f"|dissipative|={np.linalg.norm(dissipative):.3e}/ns",
        )
        emit_terms_csv(symplectic, dissipative, self.path("terms.csv"))

        residual, rate = steady_state_residual(final, pcfg)
        log.info("🏁", f"Residual |drho/dt|={residual:.3e}/ns, dS/dt={rate:.3e}/ns")

        if self.cfg.plot:
            emit_plot(records, self.path("fidelity.svg"), PlotKind.FIDELITY)
            emit_plot(records, self.path("concurrence.svg"), PlotKind.CONCURRENCE)
            emit_plot(records, self.path("entropy.svg"), PlotKind.ENTROPY)

    def sweep_tau(self) -> SweepSummary:
        """
        Sweep the gate duration at the first configured detuning.

        :return: Entanglement summary of the sweep.
        """
        pcfg = self.cfg.protocol()
        records = sweep_tau(pcfg, self.cfg.taus)
        emit_csv(records, self.path("sweep_tau.csv"), self.cfg.comments())

        summary = SweepSummary.of(records)
        summary.log(pcfg.params.d_eps)

        if self.cfg.plot:
            emit_plot(records, self.path("fidelity.svg"), PlotKind.FIDELITY)
            emit_plot(records, self.path("concurrence.svg"), PlotKind.CONCURRENCE)
            emit_plot(records, self.path("entropy.svg"), PlotKind.ENTROPY)

        return summary

    def sweep_eps(self) -> dict[float, SweepSummary]:
        """
        Sweep the gate duration for every configured detuning.

        :return: Entanglement summary per detuning.
        """
        grid = sweep_deps(
            self.cfg.protocol(),
            self.cfg.deps,
            self.cfg.taus,
            self.cfg.calibration_table(),
        )
        emit_csv(grid.records, self.path("sweep_eps.csv"), self.cfg.comments())

        summaries = {}
        for d_eps, row in zip(grid.d_eps, grid.rows):
            summaries[d_eps] = SweepSummary.of(list(row))
            summaries[d_eps].log(d_eps)

        if self.cfg.plot:
            emit_plot(grid.records, self.path("fidelity.svg"), PlotKind.FIDELITY)
            emit_plot(grid.records, self.path("concurrence.svg"), PlotKind.CONCURRENCE)
            emit_plot(grid.records, self.path("entropy.svg"), PlotKind.ENTROPY)

        return summaries

    def stress(self) -> StressReport:
        """
        Run the positivity stress test.

        :return: Stress report.
        """
        report = positivity_stress(
            self.cfg.n,
            self.cfg.protocol(),
            self.cfg.t_end,
            seed=self.cfg.seed,
            method=StateMethod(self.cfg.method),
        )
        emit_csv(report, self.path("stress.csv"), self.cfg.comments())

        for failure in report.failures:
            log.error("🚨", failure)

        if self.cfg.plot:
            emit_plot(report, self.path("eigenvalues.svg"), PlotKind.EIGENVALUES)
            emit_plot(
                report, self.path("concurrence.svg"), PlotKind.STRESS_CONCURRENCE
            )
            emit_plot(report, self.path("purity.svg"), PlotKind.PURITY)

        return report


def fermi_times(cfg: RunConfig) -> tuple[float, float]:
    """
    Transition time and default dissipative time for the configured coupling,
    the calibrated one if no coupling is given.

    :param cfg: Run configuration.
    :return: t_ij and τ_D (ns).
    """
    if cfg.j12_mhz is not None:
        j12 = mhz(cfg.j12_mhz)
    else:
        j12 = calibrate(cfg.deps[0], cfg.calibration_table()).j12

    return fermi_transition_time(j12), default_dissipative_time(j12)
