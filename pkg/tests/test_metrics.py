"""
Tests for entropy, entropy-generation rate, concurrence and fidelity.
"""

import math

import numpy as np
import pytest

from seaqtsim import dynamics, linalg
from seaqtsim.dynamics import (
    GateParams,
    RhsKind,
    dissipation_operator,
    hamiltonian_full,
    hamiltonian_rot,
    integrate,
    seaqt_rhs,
    von_neumann_rhs,
)
from seaqtsim.errors import MetricsRangeError, PositivityViolationError
from seaqtsim.harness import StateMethod, haar_unitary, random_density_matrix
from seaqtsim.linalg import I4, SIGMA_Y, kron, mat_sqrt_psd
from seaqtsim.metrics import (
    LN4,
    PHI_ENT,
    MetricsRecord,
    concurrence,
    concurrence_margin,
    entropy,
    entropy_rate_gram,
    entropy_rate_trace,
    fidelity_bell,
    purity,
)
from tests.helpers import bell_states, random_qubit_state


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


# ═══════════════════════════════════════════════════════════════════
# Entanglement
# ═══════════════════════════════════════════════════════════════════


class TestConcurrence:
    def test_bell_states(self) -> None:
        for psi in bell_states():
            assert concurrence(projector(psi)) == pytest.approx(1.0, abs=1e-6)

    def test_product_states(self, rng: np.random.Generator) -> None:
        for _ in range(100):
            rho = kron(random_qubit_state(rng), random_qubit_state(rng))
            assert concurrence(rho) == pytest.approx(0.0, abs=1e-7)

    def test_local_unitary_invariance(self, rng: np.random.Generator) -> None:
        for method in (StateMethod.GINIBRE, StateMethod.MIXTURE, StateMethod.HAAR):
            for _ in range(10):
                rho = random_density_matrix(rng, method)
                u = kron(haar_unitary(rng, 2), haar_unitary(rng, 2))
                rotated = u @ rho @ u.conj().T

                assert concurrence_margin(rotated) == pytest.approx(
                    concurrence_margin(rho), abs=1e-6
                )

    def test_spin_flip_eigenvalues(self, rng: np.random.Generator) -> None:
        # λ_i are the square roots of the eigenvalues of ρ·ρ̃, descending.
        flip = kron(SIGMA_Y, SIGMA_Y)
        for _ in range(20):
            rho = random_density_matrix(rng, StateMethod.GINIBRE)
            tilde = flip @ rho.conj() @ flip
            eigs = np.clip(np.linalg.eigvals(rho @ tilde).real, 0.0, None)
            lam = np.sort(np.sqrt(eigs))[::-1]

            assert concurrence_margin(rho) == pytest.approx(
                lam[0] - lam[1:].sum(), abs=1e-7
            )

    def test_roundoff_negative_state(self) -> None:
        bell = projector(bell_states()[0])
        rho = bell - 5e-9 * projector(bell_states()[1])
        rho = rho / np.trace(rho).real

        with pytest.raises(PositivityViolationError):
            mat_sqrt_psd(rho)
        assert concurrence(rho) == pytest.approx(1.0, abs=1e-4)

    def test_maximally_mixed_margin(self) -> None:
        assert concurrence_margin(I4 / 4) == pytest.approx(-0.5)
        assert concurrence(I4 / 4) == 0.0

    def test_werner_threshold(self) -> None:
        # p·|Φ+⟩⟨Φ+| + (1-p)·I/4 is entangled for p > 1/3 with C = (3p - 1)/2.
        bell = projector(bell_states()[0])
        for p in (0.2, 0.5, 0.8):
            rho = p * bell + (1 - p) * I4 / 4
            assert concurrence(rho) == pytest.approx(
                max(0.0, (3 * p - 1) / 2), abs=1e-7
            )


class TestFidelity:
    def test_target(self) -> None:
        np.testing.assert_allclose(PHI_ENT, 0.5 * np.array([1, -1, -1, -1]), atol=1e-15)
        assert fidelity_bell(projector(PHI_ENT)) == pytest.approx(1.0)

    def test_bell_states(self) -> None:
        fidelities = [fidelity_bell(projector(psi)) for psi in bell_states()]
        np.testing.assert_allclose(fidelities, [0.0, 0.5, 0.5, 0.0], atol=1e-15)

    def test_product_states_are_bounded(self, rng: np.random.Generator) -> None:
        for _ in range(100):
            rho = kron(random_qubit_state(rng), random_qubit_state(rng))
            assert fidelity_bell(rho) <= 0.5 + 1e-9


# ═══════════════════════════════════════════════════════════════════
# Entropy
# ═══════════════════════════════════════════════════════════════════


class TestEntropy:
    def test_bounds(self, rng: np.random.Generator) -> None:
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)

        assert entropy(I4 / 4) == pytest.approx(LN4)
        assert entropy(projector(psi)) == pytest.approx(0.0, abs=1e-12)

    def test_diagonal(self) -> None:
        p = np.array([0.5, 0.25, 0.25, 0.0])
        expected = -sum(x * math.log(x) for x in p if x > 0)
        assert entropy(np.diag(p).astype(np.complex128)) == pytest.approx(expected)

    def test_unitary_invariance(self, rng: np.random.Generator) -> None:
        for method in (StateMethod.GINIBRE, StateMethod.MIXTURE):
            for _ in range(10):
                rho = random_density_matrix(rng, method)
                u = haar_unitary(rng)

                assert entropy(u @ rho @ u.conj().T) == pytest.approx(
                    entropy(rho), abs=1e-12
                )

    def test_purity(self, mixed_state: np.ndarray) -> None:
        assert purity(I4 / 4) == pytest.approx(0.25)
        assert 0.25 <= purity(mixed_state) <= 1.0


class TestEntropyRate:
    def test_forms_agree(self, rng: np.random.Generator, params: GateParams) -> None:
        for h in (hamiltonian_rot(params), hamiltonian_full(params)):
            for _ in range(5):
                rho = random_density_matrix(rng, StateMethod.GINIBRE)
                trace_form = entropy_rate_trace(rho, seaqt_rhs(rho, h, params))

                assert trace_form > 0
                assert entropy_rate_gram(rho, h, params) == pytest.approx(
                    trace_form, rel=1e-6
                )

    def test_unitary_generates_nothing(
        self, mixed_state: np.ndarray, params: GateParams
    ) -> None:
        drho = von_neumann_rhs(mixed_state, hamiltonian_full(params))
        assert entropy_rate_trace(mixed_state, drho) == pytest.approx(0.0, abs=1e-12)

    def test_no_dissipation(self, mixed_state: np.ndarray) -> None:
        p = GateParams(tau_d1=math.inf, tau_d2=math.inf)
        assert entropy_rate_gram(mixed_state, hamiltonian_rot(p), p) == 0.0

    def test_matches_finite_difference(
        self, mixed_state: np.ndarray, params: GateParams
    ) -> None:
        h = hamiltonian_rot(params)
        traj = integrate(RhsKind.SEAQT, mixed_state, h, params, (0.0, 10.0), 0.02)

        mid = len(traj) // 2
        step = traj.times[mid + 1] - traj.times[mid]
        slope = (entropy(traj.states[mid + 1]) - entropy(traj.states[mid - 1])) / (
            2 * step
        )

        assert entropy_rate_gram(traj.states[mid], h, params) == pytest.approx(
            slope, rel=1e-5
        )

    def test_trace_form_matches_finite_difference(
        self, mixed_state: np.ndarray, params: GateParams
    ) -> None:
        h = hamiltonian_rot(params)
        traj = integrate(RhsKind.SEAQT, mixed_state, h, params, (0.0, 10.0), 0.02)

        mid = len(traj) // 2
        step = traj.times[mid + 1] - traj.times[mid]
        slope = (entropy(traj.states[mid + 1]) - entropy(traj.states[mid - 1])) / (
            2 * step
        )
        rho = traj.states[mid]

        assert entropy_rate_trace(rho, seaqt_rhs(rho, h, params)) == pytest.approx(
            slope, rel=1e-6
        )

    def test_gram_form_is_scale_free(
        self,
        monkeypatch: pytest.MonkeyPatch,
        mixed_state: np.ndarray,
        params: GateParams,
    ) -> None:
        # Tr[ρ_J {F, G}] without the 1/2 leaves every Gram ratio unchanged.
        h = hamiltonian_rot(params)
        before = [dissipation_operator(mixed_state, h, j)[0] for j in (1, 2)]

        monkeypatch.setattr(
            dynamics, "hs_inner", lambda f, g, rho_j: 2 * linalg.hs_inner(f, g, rho_j)
        )
        after = [dissipation_operator(mixed_state, h, j)[0] for j in (1, 2)]

        for d_before, d_after in zip(before, after):
            np.testing.assert_allclose(d_after, d_before, atol=1e-14)


# ═══════════════════════════════════════════════════════════════════
# Records
# ═══════════════════════════════════════════════════════════════════


class TestMetricsRecord:
    def test_maximally_mixed(self, params: GateParams) -> None:
        m = MetricsRecord.evaluate(
            I4 / 4, hamiltonian_rot(params), params, RhsKind.VON_NEUMANN
        )

        assert m.entropy == pytest.approx(LN4)
        assert m.entropy_rate == pytest.approx(0.0, abs=1e-14)
        assert m.concurrence == 0.0
        assert m.concurrence_margin == pytest.approx(-0.5)
        assert m.fidelity == pytest.approx(0.25)
        assert m.purity == pytest.approx(0.25)
        assert m.min_eigenvalue == pytest.approx(0.25)
        m.validate()

    def test_seaqt_rate(self, mixed_state: np.ndarray, params: GateParams) -> None:
        h = hamiltonian_rot(params)
        m = MetricsRecord.evaluate(mixed_state, h, params, RhsKind.SEAQT)

        assert m.entropy_rate == pytest.approx(
            entropy_rate_gram(mixed_state, h, params), rel=1e-6
        )

    @pytest.mark.parametrize(
        "overrides",
        [
            {"fidelity": 1.2},
            {"concurrence": -0.1},
            {"entropy": 2.0},
            {"purity": 0.1},
        ],
    )
    def test_validate(self, overrides: dict[str, float]) -> None:
        values = dict(
            entropy=0.5,
            entropy_rate=0.0,
            concurrence=0.2,
            fidelity=0.6,
            purity=0.7,
            min_eigenvalue=0.01,
        )
        values.update(overrides)

        with pytest.raises(MetricsRangeError):
            MetricsRecord(**values).validate()
