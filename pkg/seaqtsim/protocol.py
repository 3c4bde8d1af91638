"""
The CPHASE gate sequence and the drivers sweeping it over gate duration and
detuning.

A run prepares both qubits with a Bloch vector of modulus r, applies a π/2
rotation around x, evolves for τ/2, applies a π rotation around x as a
decoupling pulse and evolves for another τ/2.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import yaml

from seaqtsim import _log as log
from seaqtsim._util import parallel_map
from seaqtsim.dynamics import (
    GateParams,
    RhsKind,
    Trajectory,
    hamiltonian_full,
    hamiltonian_rot,
    integrate,
    mhz,
    rhs,
)
from seaqtsim.errors import Error, SweepError
from seaqtsim.linalg import I2, PAULIS, SIGMA_X, Matrix, RealArray, dagger, kron
from seaqtsim.metrics import MetricsRecord, entropy_rate_trace

# τ_D / t_ij observed over the calibrated detunings.
DISSIPATIVE_TIME_SCALE = 3.0


class RotationMode(Enum):
    """
    How the x rotations of the sequence are applied.
    """

    INSTANTANEOUS = "instantaneous"
    FINITE_TIME = "finite"


class Frame(Enum):
    """
    Hamiltonian of the free-evolution segments.
    """

    ROTATING = "rotating"
    FULL = "full"


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Configuration of a CPHASE run.
    """

    bloch_modulus: float = 0.95
    bloch_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    rotation_mode: RotationMode = RotationMode.INSTANTANEOUS
    frame: Frame = Frame.ROTATING
    dynamics: RhsKind = RhsKind.SEAQT
    params: GateParams = field(default_factory=GateParams)
    dt_max: float = 0.5
    sample_interval: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 <= self.bloch_modulus <= 1:
            raise ValueError(f"Bloch modulus must be in [0, 1]: {self.bloch_modulus}")
        if len(self.bloch_direction) != 3 or not any(self.bloch_direction):
            raise ValueError(f"invalid Bloch direction: {self.bloch_direction}")
        if self.rotation_mode is RotationMode.FINITE_TIME and not (
            self.params.dbz1 > 0 and self.params.dbz2 > 0
        ):
            raise ValueError("finite-time rotations require positive field gradients")
        if self.dt_max <= 0:
            raise ValueError(f"maximum step must be positive: {self.dt_max}")
        if self.sample_interval is not None and self.sample_interval <= 0:
            raise ValueError(
                f"sample interval must be positive: {self.sample_interval}"
            )


@dataclass(frozen=True)
class CalibrationEntry:
    """
    Gate parameters measured at one detuning.
    """

    # μV
    d_eps: float
    # rad/ns
    j12: float
    # ns, 3/J12 if not given
    tau_d: Optional[float] = None
    # 1/ns
    gamma_lambda: float = 0.0

    def __post_init__(self) -> None:
        if self.j12 <= 0:
            raise ValueError(f"coupling must be positive: {self.j12}")
        if self.tau_d is not None and self.tau_d <= 0:
            raise ValueError(f"dissipative time must be positive: {self.tau_d}")
        if self.gamma_lambda < 0:
            raise ValueError(f"decay rate must be non-negative: {self.gamma_lambda}")

    @property
    def dissipative_time(self) -> float:
        """
        Dissipative time, defaulting to the Fermi scaling of the coupling.
        """
        if self.tau_d is None:
            return default_dissipative_time(self.j12)

        return self.tau_d

    @staticmethod
    def from_file(path: str) -> list["CalibrationEntry"]:
        """
        Load a calibration table from a YAML or JSON file.

        :param path: Path to a file holding a list of entries.
        :return: Calibration table.
        """
        with open(path, "rb") as f:
            data = yaml.safe_load(f)

        if not isinstance(data, list):
            raise ValueError(f"{path}: calibration must be a list of entries")

        return [CalibrationEntry(**entry) for entry in data]


# Fitted defaults, not measured data.
DEFAULT_CALIBRATION: tuple[CalibrationEntry, ...] = (
    CalibrationEntry(d_eps=-20.0, j12=mhz(2.0), gamma_lambda=0.0021),
    CalibrationEntry(d_eps=80.0, j12=mhz(3.6), gamma_lambda=0.0038),
    CalibrationEntry(d_eps=100.0, j12=mhz(4.0), gamma_lambda=0.0042),
)


@dataclass(frozen=True)
class SweepRecord:
    """
    Metrics of the final state of one sweep cell.
    """

    tau: float
    d_eps: float
    metrics: MetricsRecord


@dataclass(frozen=True)
class SampleRecord:
    """
    Metrics of one trajectory sample.
    """

    time: float
    d_eps: float
    metrics: MetricsRecord


@dataclass(frozen=True)
class SweepGrid:
    """
    Records of a detuning sweep, one row per δε in input order.
    """

    d_eps: tuple[float, ...]
    taus: tuple[float, ...]
    rows: tuple[tuple[SweepRecord, ...], ...]

    @property
    def records(self) -> list[SweepRecord]:
        """
        All records, row by row.
        """
        return [record for row in self.rows for record in row]

    def row(self, d_eps: float) -> tuple[SweepRecord, ...]:
        """
        Get the records of one detuning.

        :param d_eps: Detuning (μV).
        :return: Records in τ order.
        """
        return self.rows[self.d_eps.index(d_eps)]

    def entropy_series(self, d_eps: float) -> RealArray:
        """
        Final-state entropy over τ for one detuning.

        :param d_eps: Detuning (μV).
        :return: S/k_B per τ.
        """
        return np.array([r.metrics.entropy for r in self.row(d_eps)])

    def entropy_rate_series(self, d_eps: float) -> RealArray:
        """
        Final-state entropy-generation rate over τ for one detuning.

        :param d_eps: Detuning (μV).
        :return: (dS/dt)/k_B per τ.
        """
        return np.array([r.metrics.entropy_rate for r in self.row(d_eps)])


def initial_state(cfg: ProtocolConfig) -> Matrix:
    """
    Product state ρ_q⊗ρ_q with ρ_q = (I + r n·σ)/2 in the {|S⟩, |T0⟩} basis.

    :param cfg: Protocol configuration.
    :return: 4×4 density matrix.
    """
    n = np.asarray(cfg.bloch_direction, dtype=np.float64)
    n = n / np.linalg.norm(n)

    rho_q = 0.5 * I2
    for component, sigma in zip(n, PAULIS[1:]):
        rho_q = rho_q + 0.5 * cfg.bloch_modulus * component * sigma

    return kron(rho_q, rho_q)


def x_rotation(angle: float) -> Matrix:
    """
    Single-qubit rotation exp(-i·angle·σx/2).

    :param angle: Rotation angle (rad).
    :return: 2×2 unitary.
    """
    return math.cos(angle / 2) * I2 - 1j * math.sin(angle / 2) * SIGMA_X


def apply_x_rotation(rho: Matrix, angle: float) -> Matrix:
    """
    Rotate both qubits around x by the same angle.

    :param rho: Density matrix.
    :param angle: Rotation angle (rad).
    :return: (U⊗U) ρ (U⊗U)†.
    """
    u = x_rotation(angle)
    uu = kron(u, u)
    return uu @ rho @ dagger(uu)


def evolution_hamiltonian(cfg: ProtocolConfig) -> Matrix:
    """
    Hamiltonian of the free-evolution segments.

    :param cfg: Protocol configuration.
    :return: 4×4 Hamiltonian.
    """
    if cfg.frame is Frame.FULL:
        return hamiltonian_full(cfg.params)

    return hamiltonian_rot(cfg.params)


def _rotate(traj: Trajectory, angle: float, cfg: ProtocolConfig) -> Trajectory:
    t0 = float(traj.times[-1])
    if cfg.rotation_mode is RotationMode.INSTANTANEOUS:
        return traj.extend(Trajectory.single(t0, apply_x_rotation(traj.final, angle)))

    p = replace(cfg.params, j1=0.0, j2=0.0)
    duration = angle / ((p.dbz1 + p.dbz2) / 2)
    segment = integrate(
        cfg.dynamics,
        traj.final,
        hamiltonian_full(p),
        p,
        (t0, t0 + duration),
        cfg.dt_max,
        cfg.sample_interval,
    )
    return traj.extend(segment)


def _evolve(
    traj: Trajectory, duration: float, h: Matrix, cfg: ProtocolConfig
) -> Trajectory:
    t0 = float(traj.times[-1])
    segment = integrate(
        cfg.dynamics,
        traj.final,
        h,
        cfg.params,
        (t0, t0 + duration),
        cfg.dt_max,
        cfg.sample_interval,
    )
    return traj.extend(segment)


def run_cphase(tau: float, cfg: ProtocolConfig) -> tuple[Matrix, Trajectory]:
    """
    Run the CPHASE sequence for a gate duration.

    :param tau: Gate duration (ns), split in two halves around the π pulse.
    :param cfg: Protocol configuration.
    :return: Final state and the stitched trajectory.
    """
    if tau < 0:
        raise ValueError(f"gate duration must be non-negative: {tau}")

    h = evolution_hamiltonian(cfg)

    traj = Trajectory.single(0.0, initial_state(cfg))
    traj = _rotate(traj, math.pi / 2, cfg)
    traj = _evolve(traj, tau / 2, h, cfg)
    traj = _rotate(traj, math.pi, cfg)
    traj = _evolve(traj, tau / 2, h, cfg)

    return traj.final, traj


def steady_state_residual(rho: Matrix, cfg: ProtocolConfig) -> tuple[float, float]:
    """
    Distance of a state from the end of its relaxation under the free-evolution
    dynamics.

    :param rho: Density matrix.
    :param cfg: Protocol configuration.
    :return: ‖dρ/dt‖_F and the entropy-generation rate, both per ns.
    """
    drho = rhs(cfg.dynamics, rho, evolution_hamiltonian(cfg), cfg.params)
    return float(np.linalg.norm(drho)), entropy_rate_trace(rho, drho)


def fermi_transition_time(j12: float) -> float:
    """
    Transition time t_ij = 1/J12 at which the golden-rule probability J12·t
    reaches one.

    :param j12: Coupling (rad/ns).
    :return: Transition time (ns).
    """
    if j12 <= 0:
        raise ValueError(f"coupling must be positive: {j12}")

    return 1 / j12


def transition_probability(j12: float, t: float) -> float:
    """
    Golden-rule transition probability J12·t.

    :param j12: Coupling (rad/ns).
    :param t: Time (ns).
    :return: Probability, valid while below one.
    """
    if j12 <= 0:
        raise ValueError(f"coupling must be positive: {j12}")

    return j12 * t


def decay_rate(j12: float) -> float:
    """
    Golden-rule transition rate, the time derivative of the probability.

    :param j12: Coupling (rad/ns).
    :return: Rate (1/ns).
    """
    if j12 <= 0:
        raise ValueError(f"coupling must be positive: {j12}")

    return j12


def default_dissipative_time(
    j12: float, scale: float = DISSIPATIVE_TIME_SCALE
) -> float:
    """
    Dissipative time as a multiple of the transition time.

    :param j12: Coupling (rad/ns).
    :param scale: τ_D / t_ij.
    :return: τ_D (ns).
    """
    return scale * fermi_transition_time(j12)


def calibrate(
    d_eps: float,
    table: Sequence[CalibrationEntry] = DEFAULT_CALIBRATION,
    base: Optional[GateParams] = None,
) -> GateParams:
    """
    Interpolate the gate parameters for a detuning.
    Values beyond the table clamp to its end entries.

    :param d_eps: Detuning (μV).
    :param table: Calibration entries with distinct detunings.
    :param base: Parameters not covered by the table.
    :return: Gate parameters labeled with the detuning.
    """
    if not table:
        raise ValueError("calibration table is empty")

    nodes = sorted(table, key=lambda e: e.d_eps)
    x = np.array([e.d_eps for e in nodes])
    if np.any(np.diff(x) == 0):
        raise ValueError(f"calibration detunings are not distinct: {list(x)}")

    def interp(values: list[float]) -> float:
        return float(np.interp(d_eps, x, values))

    tau_d = interp([e.dissipative_time for e in nodes])
    return replace(
        base or GateParams(),
        j12=interp([e.j12 for e in nodes]),
        tau_d1=tau_d,
        tau_d2=tau_d,
        gamma=interp([e.gamma_lambda for e in nodes]),
        phase_damping=1.0,
        d_eps=d_eps,
    )


def _sweep_cell(cell: tuple[float, ProtocolConfig]) -> SweepRecord:
    tau, cfg = cell
    try:
        final, _ = run_cphase(tau, cfg)
        metrics = MetricsRecord.evaluate(
            final, evolution_hamiltonian(cfg), cfg.params, cfg.dynamics
        )
    except Error as e:
        raise SweepError(e.message, tau, cfg.params.d_eps) from e

    log.debug(
        "🔹",
        f"tau={tau:g} ns: C={metrics.concurrence:.4f} F={metrics.fidelity:.4f}",
    )
    return SweepRecord(tau=tau, d_eps=cfg.params.d_eps, metrics=metrics)


def _check_taus(taus: Sequence[float]) -> None:
    negative = [t for t in taus if t < 0]
    if negative:
        raise ValueError(f"gate durations must be non-negative: {negative}")


def sweep_tau(cfg: ProtocolConfig, taus: Sequence[float]) -> list[SweepRecord]:
    """
    Evaluate the final state of the sequence for every gate duration.

    :param cfg: Protocol configuration.
    :param taus: Gate durations (ns).
    :return: One record per duration, in input order.
    :raises SweepError: if a cell fails, naming the cell.
    """
    _check_taus(taus)

    log.info(
        "🔁",
        f"Sweeping {len(taus)} durations with {cfg.dynamics.value} "
        f"at d_eps={cfg.params.d_eps:g} uV",
    )
    records = parallel_map(_sweep_cell, [(tau, cfg) for tau in taus])
    log.info("✅", f"Swept {len(records)} durations")

    return records


def sweep_deps(
    cfg: ProtocolConfig,
    d_eps_list: Sequence[float],
    taus: Sequence[float],
    table: Sequence[CalibrationEntry] = DEFAULT_CALIBRATION,
) -> SweepGrid:
    """
    Sweep gate duration for every detuning, calibrating each detuning's
    parameters from the table.

    :param cfg: Protocol configuration, its parameters used as the base.
    :param d_eps_list: Detunings (μV).
    :param taus: Gate durations (ns).
    :param table: Calibration table.
    :return: Grid of records.
    :raises SweepError: if a cell fails, naming the cell.
    """
    _check_taus(taus)

    configs = [
        replace(cfg, params=calibrate(d_eps, table, cfg.params)) for d_eps in d_eps_list
    ]
    cells = [(tau, c) for c in configs for tau in taus]

    log.info(
        "🔁",
        f"Sweeping {len(d_eps_list)} detunings x {len(taus)} durations "
        f"with {cfg.dynamics.value}",
    )
    records = parallel_map(_sweep_cell, cells)
    log.info("✅", f"Swept {len(records)} cells")

    n = len(taus)
    return SweepGrid(
        d_eps=tuple(d_eps_list),
        taus=tuple(taus),
        rows=tuple(tuple(records[i * n : (i + 1) * n]) for i in range(len(configs))),
    )


def max_entanglement_times(records: Sequence[SweepRecord]) -> tuple[float, float]:
    """
    Gate durations of maximum concurrence and maximum fidelity.
    Ties resolve to the shortest duration.

    :param records: Records of one detuning.
    :return: τ of maximum concurrence and τ of maximum fidelity (ns).
    """
    if not records:
        raise ValueError("no records")

    by_concurrence = max(records, key=lambda r: (r.metrics.concurrence, -r.tau))
    by_fidelity = max(records, key=lambda r: (r.metrics.fidelity, -r.tau))
    return by_concurrence.tau, by_fidelity.tau


def entanglement_loss_time(records: Sequence[SweepRecord]) -> Optional[float]:
    """
    First gate duration from which the concurrence stays zero.

    :param records: Records of one detuning, ascending in τ.
    :return: Duration (ns), or None if the last record is still entangled.
    """
    if not records:
        raise ValueError("no records")

    entangled = [i for i, r in enumerate(records) if r.metrics.concurrence > 0]
    if not entangled:
        return records[0].tau

    last = entangled[-1]
    if last == len(records) - 1:
        return None

    return records[last + 1].tau


def trajectory_records(traj: Trajectory, cfg: ProtocolConfig) -> list[SampleRecord]:
    """
    Evaluate the metrics of every trajectory sample.
    Entropy rates use the free-evolution Hamiltonian.

    :param traj: Trajectory of a run.
    :param cfg: Protocol configuration of the run.
    :return: One record per sample.
    """
    h = evolution_hamiltonian(cfg)
    return [
        SampleRecord(
            time=float(t),
            d_eps=cfg.params.d_eps,
            metrics=MetricsRecord.evaluate(rho, h, cfg.params, cfg.dynamics),
        )
        for t, rho in zip(traj.times, traj.states)
    ]
