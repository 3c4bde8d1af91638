"""
Dense kernels for the 2×2 and 4×4 Hermitian operators of a two-qubit system.

Qubit 1 is always the left Kronecker factor.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import numpy.typing as npt

from seaqtsim.errors import PositivityViolationError

Matrix = npt.NDArray[np.complex128]
RealArray = npt.NDArray[np.float64]

# Eigenvalues at or below this are outside the range of ρ.
RANGE_CUTOFF = 1e-14

# Negative eigenvalues down to this are round-off and clamped to 0.
NEGATIVE_CLAMP = 1e-10

# Eigenvalues at or below this at the start of an integration segment span the
# kernel of ρ for the whole segment.
SUPPORT_TOLERANCE = 1e-9

HERMITIAN_TOLERANCE = 1e-12

I2: Matrix = np.eye(2, dtype=np.complex128)
I4: Matrix = np.eye(4, dtype=np.complex128)
SIGMA_X: Matrix = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y: Matrix = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z: Matrix = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# σ_μ for μ = 0..3
PAULIS: tuple[Matrix, Matrix, Matrix, Matrix] = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)


def dagger(a: Matrix) -> Matrix:
    """
    Return the adjoint of a matrix.

    :param a: Matrix.
    :return: Conjugate transpose.
    """
    return a.conj().T


def hermitize(a: Matrix) -> Matrix:
    """
    Project a matrix onto its Hermitian part, (A + A†)/2.

    :param a: Matrix.
    :return: Hermitian part.
    """
    return 0.5 * (a + dagger(a))


def is_hermitian(a: Matrix, atol: float = HERMITIAN_TOLERANCE) -> bool:
    """
    Check entries[i][j] = conj(entries[j][i]) within an absolute tolerance.

    :param a: Matrix to check.
    :param atol: Absolute tolerance.
    :return: True if the matrix is Hermitian.
    """
    return bool(np.allclose(a, dagger(a), rtol=0, atol=atol))


def _check_square(a: Matrix, *dims: int) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in dims:
        raise ValueError(
            f"expected a square matrix of dimension {' or '.join(map(str, dims))}, "
            f"got shape {a.shape}"
        )


def _check_qubit(which: int) -> None:
    if which not in (1, 2):
        raise ValueError(f"invalid qubit index: {which}")


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
    """

    eigenvalues: RealArray
    eigenvectors: Matrix

    def apply(self, fn: Callable[[RealArray], RealArray]) -> Matrix:
        """
        Evaluate a matrix function V diag(fn(λ)) V†.

        :param fn: Function applied element-wise to the eigenvalues.
        :return: Resulting matrix.
        """
        v = self.eigenvectors
        return hermitize((v * fn(self.eigenvalues)) @ dagger(v))

    def reconstruct(self) -> Matrix:
        """
        Rebuild the decomposed matrix.

        :return: V diag(λ) V†.
        """
        return self.apply(lambda x: x)


@dataclass(frozen=True)
class PauliDecomposition:
    """
    Coefficients a[μ][ν] = Tr[ρ (σ_μ⊗σ_ν)] of a two-qubit operator.
    """

    a: RealArray

    @property
    def bloch_1(self) -> RealArray:
        """
        Bloch vector of qubit 1.
        """
        return self.a[1:, 0]

    @property
    def bloch_2(self) -> RealArray:
        """
        Bloch vector of qubit 2.
        """
        return self.a[0, 1:]

    @property
    def correlations(self) -> RealArray:
        """
        Correlation block a[i][j] for i, j ∈ {1, 2, 3}.
        """
        return self.a[1:, 1:]

    def reconstruct(self) -> Matrix:
        """
        Rebuild the operator as (1/4) Σ a_{μν} σ_μ⊗σ_ν.

        :return: 4×4 matrix.
        """
        out = np.zeros((4, 4), dtype=np.complex128)
        for mu, s_mu in enumerate(PAULIS):
            for nu, s_nu in enumerate(PAULIS):
                out += self.a[mu, nu] * np.kron(s_mu, s_nu)

        return 0.25 * out


def kron(a: Matrix, b: Matrix) -> Matrix:
    """
    Kronecker product of two single-qubit operators.

    :param a: Operator on qubit 1.
    :param b: Operator on qubit 2.
    :return: 4×4 operator a⊗b.
    """
    _check_square(a, 2)
    _check_square(b, 2)

    return np.kron(a, b).astype(np.complex128)


def partial_trace(rho: Matrix, keep: int) -> Matrix:
    """
    Trace out one qubit of a two-qubit operator.

    :param rho: 4×4 operator.
    :param keep: Qubit (1 or 2) to keep.
    :return: 2×2 reduced operator.
    """
    _check_qubit(keep)
    _check_square(rho, 4)

    r = rho.reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ijkj->ik", r)

    return np.einsum("ijil->jl", r)


def herm_eig(a: Matrix) -> SpectralDecomposition:
    """
    Eigen-decomposition of a Hermitian matrix (symmetrized first).

    :param a: Hermitian matrix.
    :return: Decomposition with ascending eigenvalues.
    """
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")

    values, vectors = np.linalg.eigh(hermitize(a))
    return SpectralDecomposition(values.astype(np.float64), vectors)


def _clamped(values: RealArray, tol: float) -> RealArray:
    if values[0] < -tol:
        raise PositivityViolationError(
            f"eigenvalue {values[0]:.3e} below -{tol:g}", spectrum=list(values)
        )

    return np.clip(values, 0.0, None)


def mat_sqrt_psd(a: Matrix, tol: float = NEGATIVE_CLAMP) -> Matrix:
    """
    Square root of a positive-semidefinite matrix.
    Negative eigenvalues down to -tol are clamped to zero.

    :param a: PSD Hermitian matrix.
    :param tol: Largest tolerated negative eigenvalue magnitude.
    :return: Principal square root.
    """
    eig = herm_eig(a)
    return eig.apply(lambda values: np.sqrt(_clamped(values, tol)))


def b_log(rho: Matrix, rank: Optional[int] = None) -> Matrix:
    """
    Logarithm of ρ restricted to its range, B ln ρ.
    Eigenvalues at or below the range cutoff map to zero. With a rank, only
    the largest `rank` eigenvalues can belong to the range.

    :param rho: Density matrix.
    :param rank: Known dimension of the range.
    :return: B ln ρ.
    """
    eig = herm_eig(rho)

    def fn(values: RealArray) -> RealArray:
        out = np.zeros_like(values)
        support = values > RANGE_CUTOFF
        if rank is not None:
            support[: len(values) - rank] = False
        out[support] = np.log(values[support])
        return out

    return eig.apply(fn)


def support_rank(rho: Matrix, tol: float = SUPPORT_TOLERANCE) -> int:
    """
    Dimension of the range of ρ.

    :param rho: Density matrix.
    :param tol: Eigenvalues at or below this count as kernel.
    :return: Number of eigenvalues above tol.
    """
    return int(np.count_nonzero(np.linalg.eigvalsh(hermitize(rho)) > tol))


def range_projector(rho: Matrix, rank: int) -> Matrix:
    """
    Projector B onto the eigenvectors of the largest `rank` eigenvalues.

    :param rho: Density matrix.
    :param rank: Dimension of the range.
    :return: B.
    """
    v = herm_eig(rho).eigenvectors[:, rho.shape[0] - rank :]
    return v @ dagger(v)


def local_observable(f: Matrix, rho_other: Matrix, which: int) -> Matrix:
    """
    Local perception of a two-qubit observable by one qubit.
    (F)^1 = Tr_2[(I⊗ρ_2) F], (F)^2 = Tr_1[(ρ_1⊗I) F].

    :param f: 4×4 observable.
    :param rho_other: Reduced state of the other qubit.
    :param which: Qubit (1 or 2) perceiving the observable.
    :return: 2×2 Hermitian operator.
    """
    _check_qubit(which)
    _check_square(f, 4)
    _check_square(rho_other, 2)

    if which == 1:
        return hermitize(partial_trace(kron(I2, rho_other) @ f, keep=1))

    return hermitize(partial_trace(kron(rho_other, I2) @ f, keep=2))


def hs_inner(f: Matrix, g: Matrix, rho_j: Matrix) -> float:
    """
    State-weighted inner product Tr[ρ_J (FG + GF)/2] of local operators.

    :param f: Local operator.
    :param g: Local operator.
    :param rho_j: Reduced state weighting the product.
    :return: Real inner product.
    """
    return float(np.real(np.trace(rho_j @ (f @ g + g @ f))) / 2)


def pauli_decompose(rho: Matrix) -> PauliDecomposition:
    """
    Decompose a two-qubit operator in the product Pauli basis.

    :param rho: 4×4 Hermitian operator.
    :return: Coefficients a[μ][ν] = Tr[ρ (σ_μ⊗σ_ν)].
    """
    _check_square(rho, 4)

    a = np.empty((4, 4), dtype=np.float64)
    for mu, s_mu in enumerate(PAULIS):
        for nu, s_nu in enumerate(PAULIS):
            a[mu, nu] = np.real(np.trace(rho @ np.kron(s_mu, s_nu)))

    return PauliDecomposition(a)


def min_eigenvalue(a: Matrix) -> float:
    """
    Smallest eigenvalue of a Hermitian matrix.

    :param a: Hermitian matrix.
    :return: Minimum eigenvalue.
    """
    return float(np.linalg.eigvalsh(hermitize(a))[0])
