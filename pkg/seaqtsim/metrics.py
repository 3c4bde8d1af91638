"""
State functionals: entropy, entropy-generation rate, concurrence, Bell-state
fidelity and purity. Entropies are reported as S/k_B (natural logarithm).
"""

import math
from dataclasses import dataclass

import numpy as np

from seaqtsim import _log as log
from seaqtsim.dynamics import (
    POSITIVITY_TOLERANCE,
    Constraints,
    GateParams,
    LocalPerception,
    RhsKind,
    gram_ratio,
    rhs,
)
from seaqtsim.errors import DegenerateConstraintError, MetricsRangeError
from seaqtsim.linalg import (
    RANGE_CUTOFF,
    SIGMA_Y,
    Matrix,
    b_log,
    hermitize,
    hs_inner,
    kron,
    mat_sqrt_psd,
    support_rank,
)

LN4 = math.log(4)

# Slack allowed on range checks of emitted records.
RANGE_SLACK = 1e-9

_SPIN_FLIP = kron(SIGMA_Y, SIGMA_Y)


def _bell_target() -> Matrix:
    # exp[iπ(I⊗σy + σy⊗I)/8] = u⊗u with u = exp(iπσy/8), a real rotation.
    c, s = math.cos(math.pi / 8), math.sin(math.pi / 8)
    u = np.array([[c, s], [-s, c]], dtype=np.complex128)
    psi_minus = np.array([1, 0, 0, -1], dtype=np.complex128) / math.sqrt(2)
    return np.kron(u, u) @ psi_minus


# Generalized Bell state in the {|SS⟩, |ST0⟩, |T0S⟩, |T0T0⟩} basis.
PHI_ENT: Matrix = _bell_target()


@dataclass(frozen=True)
class MetricsRecord:
    """
    Metrics of one state.
    """

    entropy: float
    entropy_rate: float
    concurrence: float
    fidelity: float
    purity: float
    min_eigenvalue: float
    concurrence_margin: float = 0.0

    @staticmethod
    def evaluate(
        rho: Matrix, h: Matrix, p: GateParams, kind: RhsKind
    ) -> "MetricsRecord":
        """
        Evaluate all metrics of a state.

        :param rho: Density matrix.
        :param h: Hamiltonian of the active evolution.
        :param p: Gate parameters.
        :param kind: Active equation of motion, used for the entropy rate.
        :return: Metrics record.
        """
        margin = concurrence_margin(rho)
        return MetricsRecord(
            entropy=entropy(rho),
            entropy_rate=entropy_rate_trace(rho, rhs(kind, rho, h, p)),
            concurrence=max(0.0, margin),
            fidelity=fidelity_bell(rho),
            purity=purity(rho),
            min_eigenvalue=float(np.linalg.eigvalsh(hermitize(rho))[0]),
            concurrence_margin=margin,
        )

    def validate(self) -> None:
        """
        Check the value ranges of the record.

        :raises MetricsRangeError: if a value is out of range.
        """
        checks = [
            ("entropy", self.entropy, 0.0, LN4),
            ("concurrence", self.concurrence, 0.0, 1.0),
            ("fidelity", self.fidelity, 0.0, 1.0),
            ("purity", self.purity, 0.25, 1.0),
        ]
        for name, value, low, high in checks:
            if not (low - RANGE_SLACK <= value <= high + RANGE_SLACK):
                raise MetricsRangeError(
                    f"{name} {value!r} outside [{low:g}, {high:g}]"
                )


def entropy(rho: Matrix) -> float:
    """
    Von Neumann entropy S/k_B = -Σ λ ln λ over the range of ρ.

    :param rho: Density matrix.
    :return: Dimensionless entropy.
    """
    values = np.linalg.eigvalsh(hermitize(rho))
    values = values[values > RANGE_CUTOFF]
    return float(-np.sum(values * np.log(values)))


def entropy_rate_trace(rho: Matrix, drho: Matrix) -> float:
    """
    Entropy-generation rate (dS/dt)/k_B = -Tr[dρ/dt · B ln ρ].

    :param rho: Density matrix.
    :param drho: dρ/dt of the active equation at ρ.
    :return: Rate per ns.
    """
    return float(-np.real(np.trace(drho @ b_log(rho, support_rank(rho)))))


def _gram_entropy_rate(
    rho: Matrix, h: Matrix, which: int, constraints: Constraints
) -> float:
    local = LocalPerception.of(rho, h, which, constraints)
    ops = [local.b_log] + local.constraints
    top = [hs_inner(local.b_log, op, local.rho_j) for op in ops]
    return float(gram_ratio(top, local.bordered_gram()))  # type: ignore[arg-type]


def entropy_rate_gram(rho: Matrix, h: Matrix, p: GateParams) -> float:
    """
    SEAQT entropy-generation rate from the Gram-determinant ratios, weighted by
    1/τ_D and summed over both qubits.

    :param rho: Density matrix.
    :param h: Hamiltonian.
    :param p: Gate parameters.
    :return: Rate per ns.
    """
    total = 0.0
    for which, rate in zip((1, 2), p.dissipation_rates):
        if rate == 0:
            continue

        try:
            ratio = _gram_entropy_rate(rho, h, which, Constraints.FULL)
        except DegenerateConstraintError as e:
            log.debug(
                "🪢", f"qubit {which}: {e.message}, using trace constraint only"
            )
            ratio = _gram_entropy_rate(rho, h, which, Constraints.TRACE)

        total += rate * ratio

    return total


def concurrence_margin(rho: Matrix) -> float:
    """
    Unclamped λ4 - λ3 - λ2 - λ1 over the ascending eigenvalues of
    R = √(√ρ ρ̃ √ρ) with ρ̃ = (σy⊗σy) ρ* (σy⊗σy).

    :param rho: Density matrix.
    :return: Margin, positive for entangled states.
    """
    sqrt_rho = mat_sqrt_psd(rho, tol=POSITIVITY_TOLERANCE)
    flipped = _SPIN_FLIP @ rho.conj() @ _SPIN_FLIP
    product = hermitize(sqrt_rho @ flipped @ sqrt_rho)
    r = mat_sqrt_psd(product, tol=POSITIVITY_TOLERANCE)

    lam = np.linalg.eigvalsh(r)
    return float(lam[3] - lam[2] - lam[1] - lam[0])


def concurrence(rho: Matrix) -> float:
    """
    Wootters concurrence max{0, λ4 - λ3 - λ2 - λ1}.

    :param rho: Density matrix.
    :return: Concurrence in [0, 1].
    """
    return max(0.0, concurrence_margin(rho))


def fidelity_bell(rho: Matrix) -> float:
    """
    Overlap ⟨Φ_ent|ρ|Φ_ent⟩ with the generalized Bell state.

    :param rho: Density matrix.
    :return: Fidelity in [0, 1].
    """
    return float(np.real(PHI_ENT.conj() @ rho @ PHI_ENT))


def purity(rho: Matrix) -> float:
    """
    Purity Tr ρ².

    :param rho: Density matrix.
    :return: Purity in [0.25, 1].
    """
    return float(np.real(np.trace(rho @ rho)))
