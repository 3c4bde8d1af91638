"""
Hamiltonians and equations of motion of the two-qubit CPHASE gate.

Working units: ħ = 1, time in ns, angular frequencies in rad/ns.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from seaqtsim import _log as log
from seaqtsim.errors import DegenerateConstraintError, PositivityViolationError
from seaqtsim.linalg import (
    I2,
    I4,
    SIGMA_X,
    SIGMA_Z,
    Matrix,
    RealArray,
    b_log,
    hermitize,
    hs_inner,
    kron,
    local_observable,
    mat_sqrt_psd,
    partial_trace,
    range_projector,
    support_rank,
)

# Gram determinants below this make the {I, H} constraint set degenerate.
GRAM_TOLERANCE = 1e-24

# Integration aborts when an eigenvalue drops below -POSITIVITY_TOLERANCE.
POSITIVITY_TOLERANCE = 1e-8

STEPS_PER_PERIOD = 50


def mhz(f: float) -> float:
    """
    Convert a frequency quoted as f/2π in MHz to rad/ns.

    :param f: Frequency in MHz.
    :return: Angular frequency in rad/ns.
    """
    return 2 * math.pi * f * 1e-3


class RhsKind(Enum):
    """
    Equation of motion used for an integration.
    """

    SEAQT = "seaqt"
    LINDBLAD = "lindblad"
    VON_NEUMANN = "vonneumann"


class Constraints(Enum):
    """
    Constraint operators of the SEAQT dissipation.
    """

    # Trace and energy.
    FULL = "full"
    # Trace only, used when the energy column is degenerate.
    TRACE = "trace"


@dataclass(frozen=True)
class GateParams:
    """
    Physical configuration of the gate.
    Frequencies are angular (rad/ns), times in ns.
    """

    j1: float = mhz(280)
    j2: float = mhz(320)
    j12: float = mhz(3.6)
    dbz1: float = mhz(30)
    dbz2: float = mhz(30)
    tau_d1: float = 3 / mhz(3.6)
    tau_d2: float = 3 / mhz(3.6)
    gamma: float = 0.0038
    phase_damping: float = 1.0
    d_eps: float = 80.0

    def __post_init__(self) -> None:
        if not (self.tau_d1 > 0 and self.tau_d2 > 0):
            raise ValueError(
                f"dissipative times must be positive: {self.tau_d1}, {self.tau_d2}"
            )
        if self.gamma < 0:
            raise ValueError(f"decay rate must be non-negative: {self.gamma}")
        if self.phase_damping < 0:
            raise ValueError(
                f"phase damping must be non-negative: {self.phase_damping}"
            )

    @property
    def dissipation_rates(self) -> tuple[float, float]:
        """
        SEAQT relaxation rates 1/τ_D per qubit (0 for infinite τ_D).
        """
        return 1 / self.tau_d1, 1 / self.tau_d2

    @property
    def dephasing_rate(self) -> float:
        """
        Product γλ of the Lindblad dephasing channel.
        """
        return self.gamma * self.phase_damping


@dataclass
class Trajectory:
    """
    Samples of an integrated state together with per-sample diagnostics.
    """

    times: RealArray
    states: Matrix
    min_eigenvalues: RealArray
    trace_errors: RealArray
    hermiticity_errors: RealArray
    # Minimum eigenvalue over every step, including steps not stored.
    spectral_floor: float = field(default=math.inf)

    def __post_init__(self) -> None:
        if self.spectral_floor == math.inf and len(self.min_eigenvalues):
            self.spectral_floor = float(np.min(self.min_eigenvalues))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> Matrix:
        """
        Last stored state.
        """
        return self.states[-1]

    @staticmethod
    def single(time: float, rho: Matrix) -> "Trajectory":
        """
        Create a trajectory holding one sample.

        :param time: Sample time (ns).
        :param rho: State.
        :return: Trajectory.
        """
        min_eig = float(np.linalg.eigvalsh(hermitize(rho))[0])
        return Trajectory(
            times=np.array([time], dtype=np.float64),
            states=np.array([rho], dtype=np.complex128),
            min_eigenvalues=np.array([min_eig]),
            trace_errors=np.array([abs(np.trace(rho).real - 1)]),
            hermiticity_errors=np.array([np.linalg.norm(rho - rho.conj().T)]),
        )

    def extend(self, other: "Trajectory") -> "Trajectory":
        """
        Append a later trajectory.
        When both share a sample time, the sample of the appended one wins.

        :param other: Trajectory starting at or after this one's end.
        :return: Stitched trajectory.
        """
        keep = len(self)
        if other.times[0] < self.times[-1]:
            raise ValueError(
                f"trajectory starts at {other.times[0]} before {self.times[-1]}"
            )
        if other.times[0] == self.times[-1]:
            keep -= 1

        return Trajectory(
            times=np.concatenate([self.times[:keep], other.times]),
            states=np.concatenate([self.states[:keep], other.states]),
            min_eigenvalues=np.concatenate(
                [self.min_eigenvalues[:keep], other.min_eigenvalues]
            ),
            trace_errors=np.concatenate([self.trace_errors[:keep], other.trace_errors]),
            hermiticity_errors=np.concatenate(
                [self.hermiticity_errors[:keep], other.hermiticity_errors]
            ),
            spectral_floor=min(self.spectral_floor, other.spectral_floor),
        )


def hamiltonian_full(p: GateParams) -> Matrix:
    """
    Full CPHASE Hamiltonian with Zeeman, coupling and decoupling terms.

    :param p: Gate parameters.
    :return: 4×4 Hamiltonian.
    """
    zz = SIGMA_Z - I2
    return 0.5 * (
        p.j1 * kron(SIGMA_Z, I2)
        + p.j2 * kron(I2, SIGMA_Z)
        + (p.j12 / 2) * kron(zz, zz)
        + p.dbz1 * kron(SIGMA_X, I2)
        + p.dbz2 * kron(I2, SIGMA_X)
    )


def hamiltonian_rot(p: GateParams) -> Matrix:
    """
    Rotating-frame Hamiltonian, only the entangling coupling term.

    :param p: Gate parameters.
    :return: diag(0, 0, 0, J12).
    """
    zz = SIGMA_Z - I2
    return (p.j12 / 4) * kron(zz, zz)


def gram_ratio(top: Sequence[Matrix | float], lower: RealArray) -> Matrix | float:
    # Determinant of [top; lower] over the Gram block lower[:, 1:], expanded
    # along the first row so that it may hold operators.
    denominator = float(np.linalg.det(lower[:, 1:]))
    if lower.shape[0] > 1 and abs(denominator) < GRAM_TOLERANCE:
        raise DegenerateConstraintError(
            f"Gram determinant {denominator:.3e} below {GRAM_TOLERANCE:g}", denominator
        )

    numerator: Matrix | float = 0.0
    for k, entry in enumerate(top):
        minor = float(np.linalg.det(np.delete(lower, k, axis=1)))
        numerator = numerator + (-1) ** k * minor * entry

    return numerator / denominator


@dataclass(frozen=True)
class LocalPerception:
    rho_j: Matrix
    b_log: Matrix
    constraints: list[Matrix]

    @staticmethod
    def of(
        rho: Matrix,
        h: Matrix,
        which: int,
        constraints: Constraints,
        rank: Optional[int] = None,
    ) -> "LocalPerception":
        rho_1 = partial_trace(rho, keep=1)
        rho_2 = partial_trace(rho, keep=2)
        rho_j, rho_other = (rho_1, rho_2) if which == 1 else (rho_2, rho_1)

        ops = [local_observable(I4, rho_other, which)]
        if constraints is Constraints.FULL:
            ops.append(local_observable(h, rho_other, which))

        return LocalPerception(
            rho_j=rho_j,
            b_log=local_observable(b_log(rho, rank), rho_other, which),
            constraints=ops,
        )

    def bordered_gram(self) -> RealArray:
        # Rows (C_k, B ln ρ), (C_k, C_1), ... for every constraint C_k.
        columns = [self.b_log] + self.constraints
        return np.array(
            [
                [hs_inner(c, col, self.rho_j) for col in columns]
                for c in self.constraints
            ]
        )


def dissipation_operator(
    rho: Matrix,
    h: Matrix,
    which: int,
    constraints: Constraints = Constraints.FULL,
    rank: Optional[int] = None,
) -> tuple[Matrix, Matrix]:
    """
    SEAQT dissipation operator of one qubit.

    D̃_J is the ratio of the determinant bordered by √ρ_J (B ln ρ)^J, √ρ_J (I)^J
    and √ρ_J (H)^J over the Gram determinant of the constraints; D_J is its
    Hermitized √ρ_J-weighted form.

    :param rho: Two-qubit density matrix.
    :param h: Hamiltonian.
    :param which: Qubit (1 or 2).
    :param constraints: Constraint set, TRACE drops the energy row and column.
    :param rank: Dimension of the range of ρ, detected from ρ if not given.
    :return: Pair (D_J, D̃_J).
    :raises DegenerateConstraintError: if the Gram determinant vanishes.
    """
    local = LocalPerception.of(rho, h, which, constraints, rank)
    sqrt_rho = mat_sqrt_psd(local.rho_j, tol=POSITIVITY_TOLERANCE)

    top = [sqrt_rho @ op for op in [local.b_log] + local.constraints]
    ratio = gram_ratio(top, local.bordered_gram())
    d_tilde = np.asarray(ratio, dtype=np.complex128)

    weighted = sqrt_rho @ d_tilde
    return hermitize(weighted), d_tilde


def dissipation_with_fallback(
    rho: Matrix, h: Matrix, which: int, rank: Optional[int] = None
) -> Matrix:
    """
    D_J of one qubit, dropping the energy constraint if it is degenerate.

    :param rho: Two-qubit density matrix.
    :param h: Hamiltonian.
    :param which: Qubit (1 or 2).
    :param rank: Dimension of the range of ρ.
    :return: D_J.
    """
    try:
        d, _ = dissipation_operator(rho, h, which, rank=rank)
    except DegenerateConstraintError as e:
        log.debug("🪢", f"qubit {which}: {e.message}, using trace constraint only")
        d, _ = dissipation_operator(rho, h, which, Constraints.TRACE, rank)

    return d


def confine_to_range(x: Matrix, rho: Matrix, h: Matrix, rank: int) -> Matrix:
    """
    Restrict a rate to the range of a rank-deficient ρ.

    The rate is compressed to B x B. The trace and energy this removes are put
    back along ½{ρ, I} and ½{ρ, H}, which vanish on the kernel, using the same
    ρ-weighted Gram system as the constraints of the dissipation.

    :param x: Traceless, energy-conserving rate.
    :param rho: Density matrix.
    :param h: Hamiltonian.
    :param rank: Dimension of the range of ρ.
    :return: Rate whose kernel block is zero.
    """
    if rank >= rho.shape[0]:
        return x

    b = range_projector(rho, rank)
    out = b @ x @ b

    ops = [I4, h]
    gram = np.array([[hs_inner(f, g, rho) for g in ops] for f in ops])
    lost = np.array([np.trace(out).real, np.trace(h @ out).real])
    if abs(np.linalg.det(gram)) < GRAM_TOLERANCE:
        ops, coeffs = ops[:1], lost[:1] / gram[0, 0]
    else:
        coeffs = np.linalg.solve(gram, lost)

    for c, op in zip(coeffs, ops):
        out = out - c * 0.5 * (rho @ op + op @ rho)

    return out


def von_neumann_rhs(rho: Matrix, h: Matrix) -> Matrix:
    """
    Unitary term -i[H, ρ].

    :param rho: Density matrix.
    :param h: Hamiltonian.
    :return: dρ/dt.
    """
    return -1j * (h @ rho - rho @ h)


def seaqt_terms(
    rho: Matrix, h: Matrix, p: GateParams, rank: Optional[int] = None
) -> tuple[Matrix, Matrix]:
    """
    Symplectic and dissipative terms of the SEAQT equation of motion.

    For a rank-deficient ρ the dissipative term is confined to the range of ρ,
    so the kernel stays a kernel.

    :param rho: Density matrix.
    :param h: Hamiltonian.
    :param p: Gate parameters (τ_D per qubit).
    :param rank: Dimension of the range of ρ, detected from ρ if not given.
    :return: Pair (-i[H, ρ], -(D_1⊗ρ_2)/τ_D1 - (ρ_1⊗D_2)/τ_D2).
    """
    rate_1, rate_2 = p.dissipation_rates
    dissipative = np.zeros((4, 4), dtype=np.complex128)
    if rate_1 == 0 and rate_2 == 0:
        return von_neumann_rhs(rho, h), dissipative

    if rank is None:
        rank = support_rank(rho)

    if rate_1 > 0:
        d_1 = dissipation_with_fallback(rho, h, 1, rank)
        dissipative -= rate_1 * kron(d_1, partial_trace(rho, keep=2))

    if rate_2 > 0:
        d_2 = dissipation_with_fallback(rho, h, 2, rank)
        dissipative -= rate_2 * kron(partial_trace(rho, keep=1), d_2)

    return von_neumann_rhs(rho, h), confine_to_range(dissipative, rho, h, rank)


def seaqt_rhs(
    rho: Matrix, h: Matrix, p: GateParams, rank: Optional[int] = None
) -> Matrix:
    """
    Right-hand side of the SEAQT equation of motion.

    :param rho: Density matrix.
    :param h: Hamiltonian.
    :param p: Gate parameters (τ_D per qubit).
    :param rank: Dimension of the range of ρ, detected from ρ if not given.
    :return: dρ/dt.
    """
    symplectic, dissipative = seaqt_terms(rho, h, p, rank)
    return symplectic + dissipative


def lindblad_operators(p: GateParams) -> tuple[Matrix, Matrix]:
    """
    Phase-damping Lindblad operators L1 = I⊗√λσz, L2 = √λσz⊗I.

    :param p: Gate parameters.
    :return: Pair (L1, L2).
    """
    l_phase = math.sqrt(p.phase_damping) * SIGMA_Z
    return kron(I2, l_phase), kron(l_phase, I2)


def lindblad_rhs(rho: Matrix, h: Matrix, p: GateParams) -> Matrix:
    """
    Right-hand side of the Lindblad dephasing equation.

    :param rho: Density matrix.
    :param h: Hamiltonian.
    :param p: Gate parameters (γ and λ).
    :return: dρ/dt.
    """
    out = von_neumann_rhs(rho, h)
    if p.gamma == 0:
        return out

    for op in lindblad_operators(p):
        op_dag = op.conj().T
        op_sq = op_dag @ op
        out = out + (p.gamma / 2) * (2 * op @ rho @ op_dag - op_sq @ rho - rho @ op_sq)

    return out


def rhs(
    kind: RhsKind, rho: Matrix, h: Matrix, p: GateParams, rank: Optional[int] = None
) -> Matrix:
    """
    Evaluate the selected equation of motion.

    :param kind: Equation of motion.
    :param rho: Density matrix.
    :param h: Hamiltonian.
    :param p: Gate parameters.
    :param rank: Dimension of the range of ρ, used by SEAQT only.
    :return: dρ/dt.
    """
    match kind:
        case RhsKind.SEAQT:
            return seaqt_rhs(rho, h, p, rank)
        case RhsKind.LINDBLAD:
            return lindblad_rhs(rho, h, p)
        case RhsKind.VON_NEUMANN:
            return von_neumann_rhs(rho, h)

    raise ValueError(f"unknown equation of motion: {kind}")


def fast_period(kind: RhsKind, h: Matrix, p: GateParams) -> float:
    """
    Shortest time scale of an integration: 2π over the largest frequency among
    the Hamiltonian's eigenvalue spread and the active relaxation rates.

    :param kind: Equation of motion.
    :param h: Hamiltonian.
    :param p: Gate parameters.
    :return: Period in ns, infinite if nothing evolves.
    """
    energies = np.linalg.eigvalsh(hermitize(h))
    scales = [float(energies[-1] - energies[0])]

    if kind is RhsKind.SEAQT:
        scales.extend(p.dissipation_rates)
    elif kind is RhsKind.LINDBLAD:
        scales.append(4 * p.dephasing_rate)

    scale = max(scales)
    return 2 * math.pi / scale if scale > 0 else math.inf


def _rk4_step(f: Callable[[Matrix], Matrix], rho: Matrix, step: float) -> Matrix:
    k1 = f(rho)
    k2 = f(rho + 0.5 * step * k1)
    k3 = f(rho + 0.5 * step * k2)
    k4 = f(rho + step * k3)
    return rho + (step / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    kind: RhsKind,
    rho0: Matrix,
    h: Matrix,
    p: GateParams,
    t_span: tuple[float, float],
    dt_max: float,
    sample_interval: Optional[float] = None,
) -> Trajectory:
    """
    Integrate an equation of motion with classical fixed-step RK4.

    The step is min(dt_max, T_fast/50), shortened so the span holds a whole
    number of steps. After every step the state is re-Hermitized and its trace
    renormalized. The range rank of the initial state holds for the whole span.

    :param kind: Equation of motion.
    :param rho0: Initial density matrix.
    :param h: Hamiltonian.
    :param p: Gate parameters.
    :param t_span: Start and end time (ns).
    :param dt_max: Largest allowed step (ns).
    :param sample_interval: Store one sample per interval (ns); every step if None.
    :return: Trajectory including both end points.
    :raises PositivityViolationError: if an eigenvalue drops below -1e-8.
    """
    t0, t1 = t_span
    if t1 < t0:
        raise ValueError(f"time span must be increasing: {t_span}")
    if dt_max <= 0:
        raise ValueError(f"maximum step must be positive: {dt_max}")

    start = hermitize(np.asarray(rho0, dtype=np.complex128))
    first = Trajectory.single(t0, start)
    if first.min_eigenvalues[0] < -POSITIVITY_TOLERANCE:
        raise PositivityViolationError(
            "initial state is not positive", t0, np.linalg.eigvalsh(start)
        )
    if t1 == t0:
        return first

    target = min(dt_max, fast_period(kind, h, p) / STEPS_PER_PERIOD)
    n_steps = max(1, math.ceil((t1 - t0) / target - 1e-9))
    step = (t1 - t0) / n_steps
    stride = 1 if sample_interval is None else max(1, round(sample_interval / step))

    log.debug(
        "🧮",
        f"{kind.value}: {n_steps} steps of {step:.4g} ns over [{t0:g}, {t1:g}] ns",
    )

    rank = support_rank(start)
    if rank < start.shape[0] and kind is RhsKind.SEAQT:
        log.debug("🧭", f"rank-{rank} initial state, dissipation confined to range")

    def f(rho: Matrix) -> Matrix:
        return rhs(kind, rho, h, p, rank)

    times = [t0]
    states = [start]
    min_eigs = [float(first.min_eigenvalues[0])]
    trace_errs = [float(first.trace_errors[0])]
    herm_errs = [float(first.hermiticity_errors[0])]
    floor = min_eigs[0]

    rho = start
    for n in range(1, n_steps + 1):
        t = t0 + n * step
        raw = _rk4_step(f, rho, step)
        herm_err = float(np.linalg.norm(raw - raw.conj().T))
        rho = hermitize(raw)
        trace = float(np.trace(rho).real)
        rho = rho / trace

        spectrum = np.linalg.eigvalsh(rho)
        floor = min(floor, float(spectrum[0]))
        if spectrum[0] < -POSITIVITY_TOLERANCE:
            raise PositivityViolationError(
                f"eigenvalue {spectrum[0]:.3e} at t={t:g} ns", t, spectrum
            )

        if n % stride == 0 or n == n_steps:
            times.append(t)
            states.append(rho)
            min_eigs.append(float(spectrum[0]))
            trace_errs.append(abs(trace - 1))
            herm_errs.append(herm_err)

    return Trajectory(
        times=np.array(times, dtype=np.float64),
        states=np.array(states, dtype=np.complex128),
        min_eigenvalues=np.array(min_eigs),
        trace_errors=np.array(trace_errs),
        hermiticity_errors=np.array(herm_errs),
        spectral_floor=floor,
    )
