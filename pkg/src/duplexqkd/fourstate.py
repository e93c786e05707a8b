"""Higher-rate variant: two bits per party per pair, carried by all four
Bell states.

Bob encodes two bits in his choice of Bell state and sends the halves
sequentially; Alice acknowledges receipt of the first before the second
moves.  She reads Bob's bits with a Bell measurement, then encodes her own
two bits by announcing the index of the Pauli operator that maps the state
Bob sent to her target state.  Bob applies the same permutation to the state
he knows he sent and recovers her bits with certainty; a listener who missed
the quantum channel learns nothing from the index alone.

Control rounds sacrifice the pair: Alice measures both halves in one basis
(disclosing basis and first outcome), Bob discloses his state, and the round
passes iff the outcome product equals the state's deterministic signature.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Union

from .analysis import EfficiencyQuery, cabello_efficiency
from .config import AttackKind, SimulationConfig
from .protocol import (
    BIT_BASIS,
    PairSystem,
    _EVE_LANE,
    _HONEST_LANE,
    _stream_key,
    correlation_signature,
    pair_stream,
)
from .quantum import Basis, BellStateId, Outcome, PauliOp

if TYPE_CHECKING:  # pragma: no cover
    from .attacks import Adversary, EveLog

__all__ = [
    "CLASSICAL_BITS_PER_RUN",
    "ModifiedControlDisclosure",
    "ModifiedEfficiency",
    "ModifiedMode",
    "ModifiedPairRecord",
    "OPERATION_INDEX_BITS",
    "PauliAnnouncement",
    "RECEIPT_BITS",
    "ReceiptAck",
    "StateDisclosure",
    "bits_to_state",
    "modified_efficiency",
    "pauli_for_target",
    "pauli_transition",
    "run_modified_pair",
    "run_modified_session",
    "state_to_bits",
]


class ModifiedMode(Enum):
    MESSAGE = "message"
    CONTROL = "control"


@dataclass(frozen=True, slots=True)
class ReceiptAck:
    """Alice confirms arrival of the first qubit (one classical bit)."""


@dataclass(frozen=True, slots=True)
class PauliAnnouncement:
    """Alice's encoding: the index of the Pauli mapping Bob's state to her
    target (two classical bits)."""

    op: PauliOp


@dataclass(frozen=True, slots=True)
class ModifiedControlDisclosure:
    basis: Basis
    outcome: Outcome


@dataclass(frozen=True, slots=True)
class StateDisclosure:
    state_id: BellStateId


ModifiedMessage = Union[ReceiptAck, PauliAnnouncement, ModifiedControlDisclosure, StateDisclosure]


_BITS_TO_STATE = {b.bits: b for b in BellStateId}

# A Pauli on qubit 0 permutes the Bell states; in the two-bit encoding each
# permutation is an XOR mask (verified against the matrix oracle in tests).
_PAULI_MASK = {
    PauliOp.SIGMA0: 0b00,
    PauliOp.SIGMA1: 0b10,
    PauliOp.SIGMA2: 0b11,
    PauliOp.SIGMA3: 0b01,
}
_MASK_TO_PAULI = {mask: op for op, mask in _PAULI_MASK.items()}


def state_to_bits(state: BellStateId) -> int:
    """Two-bit value of a Bell state (psi+ = 00, psi- = 01, phi+ = 10,
    phi- = 11)."""
    return state.bits


def bits_to_state(bits: int) -> BellStateId:
    if bits not in _BITS_TO_STATE:
        raise ValueError(f"two-bit value must lie in [0, 3], got {bits}")
    return _BITS_TO_STATE[bits]


def pauli_transition(state: BellStateId, op: PauliOp) -> BellStateId:
    """The Bell state (up to global phase) reached by applying ``op`` to the
    first qubit of ``state``."""
    return _BITS_TO_STATE[state.bits ^ _PAULI_MASK[op]]


def pauli_for_target(current: BellStateId, target: BellStateId) -> PauliOp:
    """The unique Pauli with pauli_transition(current, op) == target."""
    return _MASK_TO_PAULI[current.bits ^ target.bits]


@dataclass(frozen=True, slots=True)
class ModifiedPairRecord:
    """Transcript of one four-state round."""

    pair_index: int
    mode: ModifiedMode
    bob_state: BellStateId
    alice_bell_outcome: BellStateId | None
    alice_pauli: PauliOp | None
    alice_target: BellStateId | None
    bob_decoded: BellStateId | None
    control_basis: Basis | None
    outcomes: tuple[Outcome, ...]
    control_pass: bool | None
    announcements: tuple[ModifiedMessage, ...]
    eve_log: "EveLog | None"


def run_modified_pair(
    config: SimulationConfig,
    adversary: "Adversary | None",
    pair_index: int,
    *,
    alice_bits: int | None = None,
    bob_bits: int | None = None,
    _rng: random.Random | None = None,
    _eve_rng: random.Random | None = None,
) -> ModifiedPairRecord:
    """One four-state round; deterministic given (config, pair_index,
    payload bits, adversary type)."""
    rng = pair_stream(config.seed, pair_index, _HONEST_LANE) if _rng is None else _rng
    if adversary is not None:
        eve_rng = pair_stream(config.seed, pair_index, _EVE_LANE) if _eve_rng is None else _eve_rng
    else:
        eve_rng = None

    bob_state = bits_to_state(rng.getrandbits(2) if bob_bits is None else bob_bits)
    control = bool(rng.random() < config.control_probability)
    mode = ModifiedMode.CONTROL if control else ModifiedMode.MESSAGE

    system = PairSystem()
    system.add_pair(bob_state, "bob0", "bob1")

    if adversary is not None:
        adversary.begin_pair()
        first = adversary.relay_qubit(system, "bob0", 1, eve_rng)
    else:
        first = "bob0"

    announcements: list[ModifiedMessage] = []

    def announce(message: ModifiedMessage) -> None:
        announcements.append(message)
        if adversary is not None:
            adversary.hear(system, message, eve_rng)

    alice_bell_outcome = alice_pauli = alice_target = bob_decoded = None
    control_basis = control_pass = None

    if mode is ModifiedMode.MESSAGE:
        announce(ReceiptAck())
        second = adversary.relay_qubit(system, "bob1", 2, eve_rng) if adversary is not None else "bob1"
        alice_bell_outcome = system.bell_measure_pair(first, second, rng.random())
        alice_target = bits_to_state(rng.getrandbits(2) if alice_bits is None else alice_bits)
        alice_pauli = pauli_for_target(alice_bell_outcome, alice_target)
        announce(PauliAnnouncement(op=alice_pauli))
        bob_decoded = pauli_transition(bob_state, alice_pauli)
        outcomes: tuple[Outcome, ...] = ()
    else:
        control_basis = BIT_BASIS[rng.getrandbits(1)]
        outcome_1 = system.measure(first, control_basis.observable, rng.random())
        announce(ModifiedControlDisclosure(basis=control_basis, outcome=outcome_1))
        announce(StateDisclosure(state_id=bob_state))
        second = adversary.relay_qubit(system, "bob1", 2, eve_rng) if adversary is not None else "bob1"
        outcome_2 = system.measure(second, control_basis.observable, rng.random())
        outcomes = (outcome_1, outcome_2)
        control_pass = outcome_1 * outcome_2 == correlation_signature(bob_state, control_basis)

    eve_log = adversary.end_pair(system, eve_rng) if adversary is not None else None

    return ModifiedPairRecord(
        pair_index=pair_index,
        mode=mode,
        bob_state=bob_state,
        alice_bell_outcome=alice_bell_outcome,
        alice_pauli=alice_pauli,
        alice_target=alice_target,
        bob_decoded=bob_decoded,
        control_basis=control_basis,
        outcomes=outcomes,
        control_pass=control_pass,
        announcements=tuple(announcements),
        eve_log=eve_log,
    )


def run_modified_session(
    config: SimulationConfig, adversary: "Adversary | None" = None
) -> list[ModifiedPairRecord]:
    """Run ``config.pairs`` four-state rounds."""
    if adversary is None and config.attack.kind is not AttackKind.NONE:
        from .attacks import build_adversary

        adversary = build_adversary(config.attack)
    if adversary is not None:
        adversary.begin_session(config)
    rng = random.Random()
    eve_rng = random.Random() if adversary is not None else None
    records = []
    for i in range(config.pairs):
        rng.seed(_stream_key(config.seed, i, _HONEST_LANE))
        if eve_rng is not None:
            eve_rng.seed(_stream_key(config.seed, i, _EVE_LANE))
        records.append(run_modified_pair(config, adversary, i, _rng=rng, _eve_rng=eve_rng))
    return records


# Classical-bit accounting for one message round: Alice's receipt plus her
# two-bit operation index.
RECEIPT_BITS = 1
OPERATION_INDEX_BITS = 2
CLASSICAL_BITS_PER_RUN = RECEIPT_BITS + OPERATION_INDEX_BITS


@dataclass(frozen=True)
class ModifiedEfficiency:
    per_run: Fraction
    average: Fraction


def modified_efficiency() -> ModifiedEfficiency:
    """Exact secret-bit efficiency of the four-state variant.

    Per full-duplex run: four secret bits against two qubits plus the three
    classical bits.  The averaged figure alternates the directions: Alice's
    two bits need receipt and operation index (3 classical bits), Bob's two
    bits only the receipt.
    """
    per_run = cabello_efficiency(
        EfficiencyQuery(secret_bits=4, qubits_transmitted=2, classical_bits=CLASSICAL_BITS_PER_RUN)
    )
    alice_run = cabello_efficiency(
        EfficiencyQuery(secret_bits=2, qubits_transmitted=2, classical_bits=CLASSICAL_BITS_PER_RUN)
    )
    bob_run = cabello_efficiency(
        EfficiencyQuery(secret_bits=2, qubits_transmitted=2, classical_bits=RECEIPT_BITS)
    )
    return ModifiedEfficiency(per_run=per_run, average=(alice_run + bob_run) / 2)
