"""Pauli twirling of the noisy two-qubit gates.

Each two-qubit gate ``G`` is sandwiched as ``Q G P`` where ``P`` is a random
Pauli pair and ``Q = G P G^dag`` (sign dropped). The noiseless action is
unchanged sample by sample; averaged over ``P`` the gate noise becomes a
Pauli channel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .circuits import PAULI_MATRICES, Circuit, Gate, gate_unitary

PAULIS = "IXYZ"
PAULI_PAIRS = tuple(a + b for a in PAULIS for b in PAULIS)

# U3 angles reproducing each Pauli exactly (no global phase)
FRAME_ANGLES = {
    "I": (0.0, 0.0, 0.0),
    "X": (math.pi, 0.0, math.pi),
    "Y": (math.pi, math.pi / 2, math.pi / 2),
    "Z": (0.0, 0.0, math.pi),
}


@dataclass(frozen=True)
class TwoQubitPauli:
    left: str
    right: str
    sign: int = 1

    def __post_init__(self):
        if self.left not in PAULIS or self.right not in PAULIS:
            raise ValueError(f"invalid Pauli pair {self.left}{self.right}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def matrix(self) -> np.ndarray:
        return self.sign * np.kron(PAULI_MATRICES[self.left], PAULI_MATRICES[self.right])

    def __str__(self):
        return ("-" if self.sign < 0 else "+") + self.left + self.right


def frame_gate(q: int, letter: str) -> Gate:
    return Gate("U3", (q,), FRAME_ANGLES[letter], is_twirl_frame=True)


def _build_table() -> dict[tuple[str, str], TwoQubitPauli]:
    signed = [TwoQubitPauli(a, b, s) for a, b in itertools.product(PAULIS, PAULIS) for s in (1, -1)]
    table = {}
    for kind in ("CZ", "CNOT"):
        g = np.asarray(gate_unitary(Gate(kind, (0, 1))))
        for a, b in itertools.product(PAULIS, PAULIS):
            lhs = g @ TwoQubitPauli(a, b).matrix()
            hits = [q for q in signed if np.allclose(lhs, q.matrix() @ g, atol=1e-12)]
            if len(hits) != 1:
                raise AssertionError(f"{kind} does not map {a}{b} to a unique signed Pauli")
            table[kind, a + b] = hits[0]
    return table


_TABLE = _build_table()


def conjugate_pauli(gate_kind: str, p: TwoQubitPauli) -> TwoQubitPauli:
    """Signed Pauli ``Q`` with ``G P = Q G`` (i.e. ``Q = G P G^dag``)."""
    try:
        q = _TABLE[gate_kind, p.left + p.right]
    except KeyError:
        raise ValueError(f"no conjugation rule for gate {gate_kind!r}") from None
    return TwoQubitPauli(q.left, q.right, q.sign * p.sign)


def twirl_with_choices(circuit: Circuit, choices) -> Circuit:
    """Twirl using one explicit Pauli pair (e.g. ``"XZ"``) per two-qubit gate."""
    choices = list(choices)
    out: list[Gate] = []
    j = 0
    for g in circuit.gates:
        if not g.is_two_qubit:
            out.append(g)
            continue
        if g.kind not in ("CZ", "CNOT"):
            raise ValueError(f"cannot twirl gate kind {g.kind!r}")
        pair = choices[j]
        j += 1
        a, b = g.qubits
        q = conjugate_pauli(g.kind, TwoQubitPauli(pair[0], pair[1]))
        out += [frame_gate(a, pair[0]), frame_gate(b, pair[1]), g,
                frame_gate(a, q.left), frame_gate(b, q.right)]
    if j != len(choices):
        raise ValueError(f"{len(choices)} choices given for {j} two-qubit gates")
    return circuit.with_gates(out)


def twirl_circuit(circuit: Circuit, seed) -> Circuit:
    """One random twirl; ``seed`` may be an int or a tuple of ints."""
    n2 = circuit.num_two_qubit
    if n2 == 0:
        return circuit
    for g in circuit.gates:
        if g.is_two_qubit and g.kind not in ("CZ", "CNOT"):
            raise ValueError(f"cannot twirl gate kind {g.kind!r}")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, 16, size=n2)
    return twirl_with_choices(circuit, (PAULI_PAIRS[i] for i in picks))


def twirl_ensemble(circuit: Circuit, num_twirls: int, base_seed) -> list[Circuit]:
    if num_twirls < 1:
        raise ValueError("num_twirls must be >= 1")
    base = tuple(base_seed) if isinstance(base_seed, (tuple, list)) else (base_seed,)
    return [twirl_circuit(circuit, (*base, i)) for i in range(num_twirls)]
