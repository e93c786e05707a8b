"""Exact state algebra for small polarization-qubit systems (1 to 4 qubits).

Everything downstream (protocol runners, attacks, estimators) is built on the
handful of primitives here: Bell-state construction, tensor composition,
projective single-qubit measurement with collapse, Bell-basis measurement,
Pauli application, two-qubit density matrices, and analytic correlators /
CHSH values.

Conventions, fixed once and relied on everywhere:

* Computational basis: |H> maps to index 0 and |V> to index 1.  Multi-qubit
  amplitudes are ordered lexicographically (|HH>, |HV>, |VH>, |VV>, ...),
  with qubit 0 the leftmost slot.
* A planar observable with angle t is cos(t)*sigma_z + sin(t)*sigma_x; its
  +1/-1 eigenvectors are (cos t/2, sin t/2) and (-sin t/2, cos t/2), both
  real.  Angle 0 is the sigma_z measurement, pi/2 the sigma_x measurement.
* Collapsing operations take one uniform sample ``u`` in [0, 1) and are pure
  functions of (state, arguments, u).  The +1 branch is taken when
  u < P(+1); Bell outcomes are laid out cumulatively in the order
  psi+, psi-, phi+, phi-.
* Global phase is never observable: state comparisons use
  :func:`equal_up_to_phase`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ATOL_ALGEBRA",
    "ATOL_ANALYTIC",
    "BELL_ORDER",
    "MAX_QUBITS",
    "Basis",
    "BellStateId",
    "CapacityError",
    "ChshSettings",
    "Outcome",
    "PauliOp",
    "PlanarObservable",
    "PureState",
    "TwoQubitDensity",
    "apply_pauli",
    "bell_measure",
    "bell_outcome_probabilities",
    "bell_state",
    "chsh_value",
    "correlator",
    "equal_up_to_phase",
    "identify_bell",
    "ket",
    "measure_qubit",
    "mix",
    "tensor",
]

MAX_QUBITS = 4

# Algebraic invariants (norms, traces, Hermiticity) hold to 1e-12; analytic
# equalities (phase overlaps, CHSH bounds) are checked at 1e-9.
ATOL_ALGEBRA = 1e-12
ATOL_ANALYTIC = 1e-9

#: Measurement outcome: always +1 or -1.
Outcome = int


class CapacityError(ValueError):
    """Raised when an operation would exceed the 4-qubit capacity."""


class BellStateId(Enum):
    """The four Bell states; enum values are the two-bit encodings used by
    the four-state protocol variant (psi+ = 00, psi- = 01, phi+ = 10,
    phi- = 11)."""

    PSI_PLUS = 0b00
    PSI_MINUS = 0b01
    PHI_PLUS = 0b10
    PHI_MINUS = 0b11

    @property
    def bits(self) -> int:
        return self.value


#: Canonical enumeration order; also the cumulative layout for sampling in
#: :func:`bell_measure`.
BELL_ORDER: tuple[BellStateId, ...] = (
    BellStateId.PSI_PLUS,
    BellStateId.PSI_MINUS,
    BellStateId.PHI_PLUS,
    BellStateId.PHI_MINUS,
)


class PauliOp(Enum):
    SIGMA0 = 0
    SIGMA1 = 1
    SIGMA2 = 2
    SIGMA3 = 3

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self]


_PAULI_MATRICES: dict[PauliOp, np.ndarray] = {
    PauliOp.SIGMA0: np.array([[1, 0], [0, 1]], dtype=complex),
    PauliOp.SIGMA1: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliOp.SIGMA2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliOp.SIGMA3: np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _PAULI_MATRICES.values():
    _m.setflags(write=False)


@dataclass(frozen=True)
class PlanarObservable:
    """A +-1-valued observable in the sigma_z / sigma_x plane.

    ``angle`` is stored reduced into [0, 2*pi).
    """

    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "angle", float(self.angle) % (2.0 * math.pi))

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, s], [s, -c]], dtype=complex)

    def eigenvectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Real unit eigenvectors ``(plus, minus)`` for eigenvalues +1, -1."""
        half = 0.5 * self.angle
        c, s = math.cos(half), math.sin(half)
        return np.array([c, s]), np.array([-s, c])


class Basis(Enum):
    """The two measurement bases of the base protocol.

    X is the sigma_x (diagonal polarization) measurement, Z the sigma_z
    (rectilinear) one.
    """

    X = "x"
    Z = "z"

    @property
    def angle(self) -> float:
        return 0.5 * math.pi if self is Basis.X else 0.0

    @property
    def observable(self) -> PlanarObservable:
        return _BASIS_OBSERVABLES[self]


_BASIS_OBSERVABLES: dict[Basis, PlanarObservable] = {
    Basis.X: PlanarObservable(0.5 * math.pi),
    Basis.Z: PlanarObservable(0.0),
}


@dataclass(frozen=True)
class ChshSettings:
    """Measurement angles for CHSH testing: Alice's pair (a1_1, a1_2) and
    Bob's pair (a2_1, a2_2), all in radians."""

    alice_angles: tuple[float, float]
    bob_angles: tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_angles", tuple(float(a) for a in self.alice_angles))
        object.__setattr__(self, "bob_angles", tuple(float(a) for a in self.bob_angles))
        if len(self.alice_angles) != 2 or len(self.bob_angles) != 2:
            raise ValueError("ChshSettings needs exactly two angles per party")


class PureState:
    """Normalized complex amplitude vector over 1..4 qubits.

    Instances are immutable; the amplitude array is read-only.  The squared
    norm is 1 within 1e-12 after construction and after every collapse.
    """

    __slots__ = ("amplitudes", "num_qubits")

    amplitudes: np.ndarray
    num_qubits: int

    def __init__(self, amplitudes) -> None:
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(amps.size).bit_length() - 1
        if amps.size != (1 << n) or not (1 <= n <= MAX_QUBITS):
            raise ValueError(
                f"amplitude vector of length {amps.size} does not describe "
                f"1..{MAX_QUBITS} qubits"
            )
        norm_sq = float((amps.real**2 + amps.imag**2).sum())
        if abs(norm_sq - 1.0) > ATOL_ALGEBRA:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm_sq!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "num_qubits", n)

    @classmethod
    def _wrap(cls, amps: np.ndarray, num_qubits: int) -> "PureState":
        # Internal fast path: caller guarantees normalization.
        self = object.__new__(cls)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "num_qubits", num_qubits)
        return self

    def __setattr__(self, name, value):  # pragma: no cover - defensive
        raise AttributeError("PureState is immutable")

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"PureState({self.num_qubits} qubits, {np.round(self.amplitudes, 6)!r})"


_KET_INDEX = {"H": 0, "V": 1}


def ket(label: str) -> PureState:
    """Computational-basis state from a polarization label, e.g. ``"H"`` or
    ``"HV"``."""
    if not label or any(ch not in _KET_INDEX for ch in label):
        raise ValueError(f"labels use only 'H' and 'V': {label!r}")
    n = len(label)
    if n > MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit capacity")
    index = 0
    for ch in label:
        index = (index << 1) | _KET_INDEX[ch]
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return PureState._wrap(amps, n)


_SQRT_HALF = 1.0 / math.sqrt(2.0)

_BELL_AMPLITUDES: dict[BellStateId, np.ndarray] = {
    BellStateId.PSI_PLUS: np.array([0, _SQRT_HALF, _SQRT_HALF, 0], dtype=complex),
    BellStateId.PSI_MINUS: np.array([0, _SQRT_HALF, -_SQRT_HALF, 0], dtype=complex),
    BellStateId.PHI_PLUS: np.array([_SQRT_HALF, 0, 0, _SQRT_HALF], dtype=complex),
    BellStateId.PHI_MINUS: np.array([_SQRT_HALF, 0, 0, -_SQRT_HALF], dtype=complex),
}
for _v in _BELL_AMPLITUDES.values():
    _v.setflags(write=False)


def bell_state(state_id: BellStateId) -> PureState:
    """The two-qubit Bell state, in the fixed |HH>,|HV>,|VH>,|VV> ordering.

    psi+- = (|HV> +- |VH>)/sqrt(2), phi+- = (|HH> +- |VV>)/sqrt(2).
    """
    return PureState._wrap(_BELL_AMPLITUDES[state_id], 2)


def tensor(a: PureState, b: PureState) -> PureState:
    """Kronecker product; b's qubits are appended after a's."""
    n = a.num_qubits + b.num_qubits
    if n > MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit capacity")
    return PureState._wrap(np.kron(a.amplitudes, b.amplitudes), n)


def _check_qubit(state: PureState, qubit: int) -> None:
    if not (0 <= qubit < state.num_qubits):
        raise IndexError(f"qubit {qubit} out of range for {state.num_qubits}-qubit state")


def measure_qubit(
    state: PureState, qubit: int, obs: PlanarObservable, rand: float
) -> tuple[Outcome, PureState]:
    """Projectively measure one qubit; returns (outcome, collapsed state).

    The outcome is sampled by the Born rule from the +-1 eigenprojectors of
    ``obs`` on the addressed qubit: +1 iff ``rand`` < P(+1).  The returned
    state keeps all qubits, with the measured one left in the eigenstate.

    Implemented with scalar arithmetic: at dimension <= 16 that beats
    vectorized numpy by an order of magnitude, and the protocol runners call
    this tens of thousands of times per session.
    """
    _check_qubit(state, qubit)
    if not (0.0 <= rand < 1.0):
        raise ValueError("rand must lie in [0, 1)")
    n = state.num_qubits
    amps = state.amplitudes.tolist()
    dim = 1 << n
    right = 1 << (n - 1 - qubit)  # stride of the addressed qubit's bit
    block = right << 1
    half = 0.5 * obs.angle
    c, s = math.cos(half), math.sin(half)
    pairs: list[tuple[int, int]] = []
    coeff_plus: list[complex] = []
    p_plus = 0.0
    for base in range(0, dim, block):
        for offset in range(base, base + right):
            pair = (offset, offset + right)
            cp = c * amps[offset] + s * amps[offset + right]
            pairs.append(pair)
            coeff_plus.append(cp)
            p_plus += cp.real * cp.real + cp.imag * cp.imag
    take_plus = rand < p_plus
    coeff_minus: list[complex] = []
    if not take_plus:
        p_minus = 0.0
        for i0, i1 in pairs:
            cm = -s * amps[i0] + c * amps[i1]
            coeff_minus.append(cm)
            p_minus += cm.real * cm.real + cm.imag * cm.imag
        if p_minus < _MIN_BRANCH:
            # rand fell past p_plus only through rounding; the minus branch
            # has zero probability, so take the plus branch after all.
            take_plus = True
    out = [0j] * dim
    if take_plus:
        outcome = +1
        scale = 1.0 / math.sqrt(p_plus)
        for (i0, i1), cp in zip(pairs, coeff_plus):
            q = cp * scale
            out[i0] = c * q
            out[i1] = s * q
    else:
        outcome = -1
        scale = 1.0 / math.sqrt(p_minus)
        for (i0, i1), cm in zip(pairs, coeff_minus):
            q = cm * scale
            out[i0] = -s * q
            out[i1] = c * q
    return outcome, PureState._wrap(np.asarray(out, dtype=complex), n)


# Probability below which a measurement branch is treated as impossible and
# never selected (protects renormalization from rounding of the Born sums).
_MIN_BRANCH = 1e-15


def apply_pauli(state: PureState, qubit: int, op: PauliOp) -> PureState:
    """Apply a Pauli unitary to one qubit.

    Global phase follows from the matrix convention and is not meaningful;
    compare results with :func:`equal_up_to_phase`.
    """
    _check_qubit(state, qubit)
    if op is PauliOp.SIGMA0:
        return state
    m = op.matrix
    a = state.amplitudes.reshape((1 << qubit, 2, -1))
    out = np.empty_like(a)
    out[:, 0, :] = m[0, 0] * a[:, 0, :] + m[0, 1] * a[:, 1, :]
    out[:, 1, :] = m[1, 0] * a[:, 0, :] + m[1, 1] * a[:, 1, :]
    return PureState._wrap(out.reshape(-1), state.num_qubits)


def _bell_coefficients(
    state: PureState, qubit_a: int, qubit_b: int
) -> tuple[list[list[complex]], list[float]]:
    """Overlap coefficients of the (qubit_a, qubit_b) pair with each Bell
    state: four residual-coefficient lists ordered like BELL_ORDER (indexed
    by the surviving qubits in their original order), plus the four Born
    probabilities."""
    n = state.num_qubits
    amps = state.amplitudes.tolist()
    sa = 1 << (n - 1 - qubit_a)
    sb = 1 << (n - 1 - qubit_b)
    both = sa | sb
    coeffs: list[list[complex]] = [[], [], [], []]
    probs = [0.0, 0.0, 0.0, 0.0]
    for rest in range(1 << n):
        if rest & both:
            continue
        a00 = amps[rest]
        a01 = amps[rest | sb]
        a10 = amps[rest | sa]
        a11 = amps[rest | both]
        for slot, c in enumerate(
            (
                (a01 + a10) * _SQRT_HALF,  # psi+
                (a01 - a10) * _SQRT_HALF,  # psi-
                (a00 + a11) * _SQRT_HALF,  # phi+
                (a00 - a11) * _SQRT_HALF,  # phi-
            )
        ):
            coeffs[slot].append(c)
            probs[slot] += c.real * c.real + c.imag * c.imag
    return coeffs, probs


def bell_outcome_probabilities(
    state: PureState, qubit_a: int, qubit_b: int
) -> dict[BellStateId, float]:
    """Born-rule probabilities of each Bell outcome on the addressed pair."""
    if qubit_a == qubit_b:
        raise IndexError("bell measurement needs two distinct qubits")
    _check_qubit(state, qubit_a)
    _check_qubit(state, qubit_b)
    _, probs = _bell_coefficients(state, qubit_a, qubit_b)
    return dict(zip(BELL_ORDER, probs))


def bell_measure(
    state: PureState, qubit_a: int, qubit_b: int, rand: float
) -> tuple[BellStateId, PureState | None]:
    """Project the addressed pair onto the Bell basis.

    Returns the sampled outcome and the renormalized residual state of the
    remaining qubits (None when the input had only the measured pair).  The
    residual keeps the surviving qubits in their original relative order.
    """
    if qubit_a == qubit_b:
        raise IndexError("bell measurement needs two distinct qubits")
    _check_qubit(state, qubit_a)
    _check_qubit(state, qubit_b)
    if not (0.0 <= rand < 1.0):
        raise ValueError("rand must lie in [0, 1)")
    coeffs, probs = _bell_coefficients(state, qubit_a, qubit_b)
    acc = 0.0
    chosen = -1
    for i, p in enumerate(probs):
        acc += p
        if rand < acc:
            chosen = i
            break
    if chosen < 0 or probs[chosen] < _MIN_BRANCH:
        # Cumulative sum fell short of rand (or hit a zero-probability slot)
        # through rounding; take the most likely outcome instead.
        chosen = max(range(4), key=probs.__getitem__)
    outcome = BELL_ORDER[chosen]
    if state.num_qubits == 2:
        return outcome, None
    scale = 1.0 / math.sqrt(probs[chosen])
    residual = np.asarray([c * scale for c in coeffs[chosen]], dtype=complex)
    return outcome, PureState._wrap(residual, state.num_qubits - 2)


def equal_up_to_phase(a: PureState, b: PureState, atol: float = ATOL_ANALYTIC) -> bool:
    """True when |<a|b>| = 1 within ``atol`` (identical physical states)."""
    if a.num_qubits != b.num_qubits:
        return False
    return abs(abs(a.overlap(b)) - 1.0) <= atol


def identify_bell(state: PureState) -> BellStateId | None:
    """Which Bell state a two-qubit state is, up to global phase; None if it
    is not one."""
    if state.num_qubits != 2:
        return None
    for b in BELL_ORDER:
        if abs(abs(_BELL_AMPLITUDES[b] @ state.amplitudes.conj()) - 1.0) <= ATOL_ANALYTIC:
            return b
    return None


class TwoQubitDensity:
    """4x4 Hermitian, unit-trace, positive-semidefinite density matrix."""

    __slots__ = ("matrix",)

    matrix: np.ndarray

    def __init__(self, matrix) -> None:
        m = np.array(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if abs(np.trace(m).real - 1.0) > ATOL_ALGEBRA or abs(np.trace(m).imag) > ATOL_ALGEBRA:
            raise ValueError("density matrix trace must be 1")
        if np.abs(m - m.conj().T).max() > ATOL_ALGEBRA:
            raise ValueError("density matrix must be Hermitian")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -1e-10:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min()}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):  # pragma: no cover - defensive
        raise AttributeError("TwoQubitDensity is immutable")

    @classmethod
    def from_pure(cls, state: PureState) -> "TwoQubitDensity":
        if state.num_qubits != 2:
            raise ValueError("density matrices are supported for 2-qubit states only")
        v = state.amplitudes
        return cls(np.outer(v, v.conj()))


def mix(components: list[tuple[float, TwoQubitDensity]]) -> TwoQubitDensity:
    """Convex combination of two-qubit density matrices."""
    if not components:
        raise ValueError("mix needs at least one component")
    total = 0.0
    acc = np.zeros((4, 4), dtype=complex)
    for weight, rho in components:
        w = float(weight)
        if w < 0.0:
            raise ValueError(f"negative mixture weight {w}")
        total += w
        acc += w * rho.matrix
    if abs(total - 1.0) > ATOL_ALGEBRA:
        raise ValueError(f"mixture weights sum to {total!r}, expected 1")
    return TwoQubitDensity(acc)


def correlator(rho: TwoQubitDensity, obs_a: PlanarObservable, obs_b: PlanarObservable) -> float:
    """Exact expectation value Tr[rho (A x B)] of the product observable."""
    m = np.kron(obs_a.matrix, obs_b.matrix)
    value = float(np.einsum("ij,ji->", rho.matrix, m).real)
    if abs(value) > 1.0 + ATOL_ALGEBRA:
        raise ArithmeticError(f"correlator {value} outside [-1, 1]")
    return value


def chsh_value(rho: TwoQubitDensity, settings: ChshSettings) -> float:
    """Analytic CHSH combination S = E(a1,b1) - E(a1,b2) + E(a2,b1) + E(a2,b2)."""
    a1, a2 = (PlanarObservable(a) for a in settings.alice_angles)
    b1, b2 = (PlanarObservable(b) for b in settings.bob_angles)
    return (
        correlator(rho, a1, b1)
        - correlator(rho, a1, b2)
        + correlator(rho, a2, b1)
        + correlator(rho, a2, b2)
    )
