"""
Randomized positivity stress testing: random initial states are integrated
over a long horizon and every sampled eigenvalue is checked against zero.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from seaqtsim import _log as log
from seaqtsim._util import parallel_map
from seaqtsim.dynamics import integrate
from seaqtsim.errors import Error, PositivityViolationError
from seaqtsim.linalg import Matrix, RealArray, dagger, hermitize
from seaqtsim.metrics import concurrence, purity
from seaqtsim.protocol import ProtocolConfig, evolution_hamiltonian

# Counter-based bit generator, recorded in the CSV header.
GENERATOR_NAME = "numpy.random.Philox"

# Pass criterion on every sampled eigenvalue.
STRESS_TOLERANCE = 1e-9

DIMENSION = 4


class StateMethod(Enum):
    """
    Distribution of random initial states.
    """

    GINIBRE = "ginibre"
    HAAR = "haar"
    MIXTURE = "mixture"


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """
    Create a counter-based random generator.

    :param seed: 64-bit seed or spawned seed sequence.
    :return: Generator.
    """
    return np.random.Generator(np.random.Philox(seed))


def _ginibre(rng: np.random.Generator, n: int = DIMENSION) -> Matrix:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def haar_unitary(rng: np.random.Generator, n: int = DIMENSION) -> Matrix:
    """
    Haar-random unitary from the QR decomposition of a Ginibre matrix with
    the phases of R's diagonal divided out.

    :param rng: Random generator.
    :param n: Dimension.
    :return: n×n unitary.
    """
    q, r = np.linalg.qr(_ginibre(rng, n))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density_matrix(rng: np.random.Generator, method: StateMethod) -> Matrix:
    """
    Draw a random two-qubit density matrix.

    GINIBRE returns GG†/Tr(GG†), HAAR a Haar-random pure state and MIXTURE
    mixes 1 to 4 Haar-random pure states with uniform simplex weights.

    :param rng: Random generator.
    :param method: Distribution.
    :return: Unit-trace positive 4×4 matrix.
    """
    match method:
        case StateMethod.GINIBRE:
            g = _ginibre(rng)
            rho = g @ dagger(g)
        case StateMethod.HAAR:
            psi = haar_unitary(rng)[:, 0]
            rho = np.outer(psi, psi.conj())
        case StateMethod.MIXTURE:
            k = int(rng.integers(1, DIMENSION + 1))
            weights = rng.dirichlet(np.ones(k))
            vectors = haar_unitary(rng)[:, :k]
            rho = (vectors * weights) @ dagger(vectors)
        case _:
            raise ValueError(f"unknown state method: {method}")

    rho = hermitize(rho)
    return rho / np.trace(rho).real


@dataclass(frozen=True)
class StressCase:
    """
    Result of one random initial state.
    """

    index: int
    initial_purity: float
    times: RealArray
    # One row of ascending eigenvalues per sample.
    eigenvalues: RealArray
    concurrences: RealArray
    # Minimum eigenvalue over every integration step.
    min_eigenvalue: float
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        """
        True if the case integrated without a negative eigenvalue.
        """
        return self.error is None and self.min_eigenvalue >= -STRESS_TOLERANCE


@dataclass(frozen=True)
class StressReport:
    """
    Results of a positivity stress run.
    """

    cases: tuple[StressCase, ...]
    seed: int
    method: StateMethod
    generator: str = GENERATOR_NAME

    def __post_init__(self) -> None:
        if not self.cases:
            raise ValueError("stress report without cases")

    @property
    def failures(self) -> list[str]:
        """
        One entry per failed case.
        """
        return [
            f"case {case.index}: "
            + (case.error or f"min eigenvalue {case.min_eigenvalue:.3e}")
            for case in self.cases
            if not case.passed
        ]

    @property
    def n_cases(self) -> int:
        """
        Number of integrated states.
        """
        return len(self.cases)

    @property
    def global_min_eigenvalue(self) -> float:
        """
        Minimum eigenvalue over all cases and steps.
        """
        return min(case.min_eigenvalue for case in self.cases)

    @property
    def passed(self) -> bool:
        """
        True if no case failed.
        """
        return not self.failures

    @property
    def initial_purities(self) -> RealArray:
        """
        Purity of every initial state.
        """
        return np.array([case.initial_purity for case in self.cases])


def _stress_case(
    task: tuple[int, Matrix, ProtocolConfig, float, float],
) -> StressCase:
    index, rho0, cfg, t_end, sample_interval = task
    initial_purity = purity(rho0)

    try:
        traj = integrate(
            cfg.dynamics,
            rho0,
            evolution_hamiltonian(cfg),
            cfg.params,
            (0.0, t_end),
            cfg.dt_max,
            sample_interval,
        )
    except Error as e:
        log.debug("❌", f"Case {index}: {e.message}")
        floor = -np.inf
        if isinstance(e, PositivityViolationError) and e.spectrum:
            floor = min(e.spectrum)

        return StressCase(
            index=index,
            initial_purity=initial_purity,
            times=np.empty(0),
            eigenvalues=np.empty((0, DIMENSION)),
            concurrences=np.empty(0),
            min_eigenvalue=floor,
            error=e.message,
        )

    log.debug("🔹", f"Case {index}: spectral floor {traj.spectral_floor:.3e}")
    return StressCase(
        index=index,
        initial_purity=initial_purity,
        times=traj.times,
        eigenvalues=np.linalg.eigvalsh(traj.states),
        concurrences=np.array([concurrence(rho) for rho in traj.states]),
        min_eigenvalue=traj.spectral_floor,
    )


def positivity_stress(
    n: int,
    cfg: ProtocolConfig,
    t_end: float = 1500.0,
    *,
    seed: int = 0,
    method: StateMethod = StateMethod.GINIBRE,
    sample_interval: float = 2.0,
    states: Optional[Sequence[Matrix]] = None,
) -> StressReport:
    """
    Integrate random initial states and check every eigenvalue stays
    non-negative. Each case draws from its own stream spawned from the seed.

    :param n: Number of cases.
    :param cfg: Protocol configuration providing dynamics and Hamiltonian.
    :param t_end: Horizon (ns).
    :param seed: Seed of the random streams.
    :param method: Distribution of the initial states.
    :param sample_interval: Sampling interval of the stored trajectories (ns).
    :param states: Explicit initial states, used instead of random draws.
    :return: Report, failures recorded per case.
    """
    if n < 1:
        raise ValueError(f"number of cases must be positive: {n}")
    if t_end <= 0:
        raise ValueError(f"horizon must be positive: {t_end}")

    if states is None:
        streams = np.random.SeedSequence(seed).spawn(n)
        initial = [random_density_matrix(make_rng(s), method) for s in streams]
    else:
        if len(states) != n:
            raise ValueError(f"expected {n} initial states, got {len(states)}")
        initial = [np.asarray(rho, dtype=np.complex128) for rho in states]

    log.info(
        "🎲",
        f"Integrating {n} {method.value} states with {cfg.dynamics.value} "
        f"to {t_end:g} ns",
    )
    tasks = [(i, rho, cfg, t_end, sample_interval) for i, rho in enumerate(initial)]
    report = StressReport(
        cases=tuple(parallel_map(_stress_case, tasks)), seed=seed, method=method
    )

    if report.passed:
        log.info(
            "✅",
            f"All {n} cases positive, minimum eigenvalue "
            f"{report.global_min_eigenvalue:.3e}",
        )
    else:
        log.warning("❌", f"{len(report.failures)} of {n} cases failed")

    return report
