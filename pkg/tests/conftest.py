import numpy as np

from duplexqkd.quantum import PureState, TwoQubitDensity, mix


def random_pure_state(rng: np.random.Generator, num_qubits: int) -> PureState:
    """Haar-ish random pure state: complex gaussian amplitudes, normalized."""
    dim = 1 << num_qubits
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(amps / np.linalg.norm(amps))


def random_density(rng: np.random.Generator, max_components: int = 4) -> TwoQubitDensity:
    """Random two-qubit mixed state as a convex mixture of random pure states."""
    k = int(rng.integers(1, max_components + 1))
    weights = rng.random(k)
    weights /= weights.sum()
    return mix(
        [(float(w), TwoQubitDensity.from_pure(random_pure_state(rng, 2))) for w in weights]
    )


def random_product_state(rng: np.random.Generator) -> PureState:
    """Random two-qubit product (separable pure) state."""
    from duplexqkd.quantum import tensor

    return tensor(random_pure_state(rng, 1), random_pure_state(rng, 1))
