import numpy as np

from seaqtsim.linalg import Matrix


def random_qubit_state(rng: np.random.Generator) -> Matrix:
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def bell_states() -> list[Matrix]:
    s = 1 / np.sqrt(2)
    vectors = [
        [s, 0, 0, s],
        [s, 0, 0, -s],
        [0, s, s, 0],
        [0, s, -s, 0],
    ]
    return [np.array(v, dtype=np.complex128) for v in vectors]
