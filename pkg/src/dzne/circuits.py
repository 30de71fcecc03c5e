"""Native-gate circuits, exact gate unitaries and the benchmark circuit builders.

Qubit 0 is the most significant tensor axis everywhere in the package, so the
bitstring ``"010101"`` means qubit 0 reads 0, qubit 1 reads 1, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

NATIVE_ARITY = {"X": 1, "U3": 1, "P": 1, "CZ": 2, "CNOT": 2}
NATIVE_NPARAMS = {"X": 0, "U3": 3, "P": 1, "CZ": 0, "CNOT": 0}
TWO_QUBIT_KINDS = ("CZ", "CNOT")


class NonNativeGateError(ValueError):
    """Raised when a circuit contains a gate outside the native set."""

    def __init__(self, index: int, gate: "Gate"):
        self.index = index
        self.gate = gate
        super().__init__(f"gate {index} ({gate}) is not a native gate")


@dataclass(frozen=True)
class Gate:
    """A single gate. ``kind`` is one of X, U3, P (phase), CZ, CNOT."""

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    is_twirl_frame: bool = False

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")

    @property
    def is_native(self) -> bool:
        return (
            self.kind in NATIVE_ARITY
            and len(self.qubits) == NATIVE_ARITY[self.kind]
            and len(self.params) == NATIVE_NPARAMS[self.kind]
        )

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def __str__(self):
        args = " ".join(str(q) for q in self.qubits)
        if self.params:
            args += "(" + ", ".join(f"{p:.6g}" for p in self.params) + ")"
        return f"{self.kind} {args}"


def x(q: int) -> Gate:
    return Gate("X", (q,))


def u3(q: int, theta: float, phi: float, lam: float) -> Gate:
    return Gate("U3", (q,), (theta, phi, lam))


def phase(q: int, angle: float) -> Gate:
    return Gate("P", (q,), (angle,))


def cz(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    label: str = ""

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise ValueError(f"{g} acts outside a {self.n_qubits}-qubit register")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def with_gates(self, gates: Iterable[Gate], label: str | None = None) -> "Circuit":
        return Circuit(self.n_qubits, tuple(gates), self.label if label is None else label)

    def count(self, kinds: Sequence[str] | None = None) -> int:
        if kinds is None:
            return len(self.gates)
        return sum(g.kind in kinds for g in self.gates)

    @property
    def num_two_qubit(self) -> int:
        return sum(g.is_two_qubit for g in self.gates)

    def two_qubit_depth(self) -> int:
        """Number of layers of two-qubit gates under as-soon-as-possible scheduling.

        Single-qubit gates do not occupy a layer.
        """
        level = [0] * self.n_qubits
        depth = 0
        for g in self.gates:
            if not g.is_two_qubit:
                continue
            a, b = g.qubits
            t = max(level[a], level[b]) + 1
            level[a] = level[b] = t
            depth = max(depth, t)
        return depth


@dataclass(frozen=True)
class PauliString:
    """Signed Pauli observable; ``letters[i]`` acts on qubit ``i``."""

    letters: str
    sign: int = 1

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or set(letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli string {self.letters!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    @property
    def is_diagonal(self) -> bool:
        return set(self.letters) <= {"I", "Z"}

    @classmethod
    def z_all(cls, n: int) -> "PauliString":
        return cls("Z" * n)

    @classmethod
    def z_at(cls, n: int, i: int) -> "PauliString":
        return cls("I" * i + "Z" + "I" * (n - i - 1))

    def __str__(self):
        return ("-" if self.sign < 0 else "") + self.letters


# ---------------------------------------------------------------------------
# unitaries

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


@lru_cache(maxsize=4096)
def _cached_unitary(kind: str, params: tuple[float, ...]) -> np.ndarray:
    if kind == "X":
        u = PAULI_MATRICES["X"].copy()
    elif kind == "U3":
        u = u3_matrix(*params)
    elif kind == "P":
        u = np.diag([1.0, np.exp(1j * params[0])]).astype(complex)
    elif kind == "CZ":
        u = np.diag([1, 1, 1, -1]).astype(complex)
    elif kind == "CNOT":
        u = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    else:  # pragma: no cover - guarded by gate_unitary
        raise KeyError(kind)
    u.setflags(write=False)
    return u


def gate_unitary(gate: Gate) -> np.ndarray:
    """Exact unitary of a native gate, ordered by ``gate.qubits`` (first = MSB).

    The returned array is shared and read-only.
    """
    if not gate.is_native:
        raise NonNativeGateError(-1, gate)
    return _cached_unitary(gate.kind, gate.params)


def inverse_gate(gate: Gate) -> Gate:
    if gate.kind in ("X", "CZ", "CNOT"):
        return gate
    if gate.kind == "P":
        return Gate("P", gate.qubits, (-gate.params[0],), gate.is_twirl_frame)
    if gate.kind == "U3":
        theta, phi, lam = gate.params
        return Gate("U3", gate.qubits, (-theta, -lam, -phi), gate.is_twirl_frame)
    raise NonNativeGateError(-1, gate)


def dagger(circuit: Circuit) -> Circuit:
    """Inverse circuit: gates reversed and individually inverted."""
    return circuit.with_gates(inverse_gate(g) for g in reversed(circuit.gates))


def validate_native(circuit: Circuit) -> None:
    """Raise :class:`NonNativeGateError` naming the first non-native gate."""
    for i, g in enumerate(circuit.gates):
        if not g.is_native:
            raise NonNativeGateError(i, g)


# ---------------------------------------------------------------------------
# builders


def disorder_angles(n: int, seed: int) -> np.ndarray:
    """Per-qubit disorder phases drawn uniformly from [-pi, pi]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-math.pi, math.pi, size=n)


def build_spin_chain(
    n: int,
    steps: int,
    theta1: float = 0.05 * math.pi,
    theta2: float = 0.0,
    theta3: float = 0.0,
    disorder_seed: int = 0,
) -> Circuit:
    """Floquet spin-dynamics chain with a two-qubit depth of ``2 * steps``.

    Odd qubits start in |1>. Each step applies CZ on even bonds and odd bonds,
    each CZ followed by U3 on both of its qubits, then one disorder phase per
    qubit. The disorder phases are drawn once and reused in every step.
    """
    if n < 2 or n % 2:
        raise ValueError(f"spin chain needs an even number of qubits >= 2, got {n}")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    angles = (theta1, theta2, theta3)
    phis = disorder_angles(n, disorder_seed)
    gates: list[Gate] = [x(q) for q in range(1, n, 2)]
    for _ in range(steps):
        for start in (0, 1):
            for a in range(start, n - 1, 2):
                gates.append(cz(a, a + 1))
                gates.append(u3(a, *angles))
                gates.append(u3(a + 1, *angles))
        gates.extend(phase(q, phis[q]) for q in range(n))
    return Circuit(n, tuple(gates), label=f"spin_chain(n={n}, steps={steps})")


def build_brickwork(n: int, total_2q: int, kind: str = "CZ") -> Circuit:
    """Alternating even/odd brick layers of bare two-qubit gates.

    Layers are filled in order until exactly ``total_2q`` gates are placed.
    """
    if n < 2:
        raise ValueError("brickwork needs at least two qubits")
    if total_2q < 0:
        raise ValueError("total_2q must be non-negative")
    if kind not in TWO_QUBIT_KINDS:
        raise ValueError(f"unsupported entangler {kind!r}")
    gates: list[Gate] = []
    layer = 0
    while len(gates) < total_2q:
        start = layer % 2
        pairs = list(range(start, n - 1, 2))
        if not pairs:  # n == 2 has no odd bonds
            pairs = [0]
        for a in pairs:
            if len(gates) == total_2q:
                break
            gates.append(Gate(kind, (a, a + 1)))
        layer += 1
    return Circuit(n, tuple(gates), label=f"brickwork(n={n}, {kind}x{total_2q})")


# ---------------------------------------------------------------------------
# text format


def to_text(circuit: Circuit) -> str:
    """Serialize to the line format ``KIND q0 [q1] [angles...] [frame]``."""
    lines = [f"qubits {circuit.n_qubits}"]
    if circuit.label:
        lines.append(f"label {circuit.label}")
    for g in circuit.gates:
        parts = [g.kind, *map(str, g.qubits), *map(repr, g.params)]
        if g.is_twirl_frame:
            parts.append("frame")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    n = None
    label = ""
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "qubits":
            n = int(rest)
            continue
        if head == "label":
            label = rest
            continue
        if head not in NATIVE_ARITY:
            raise ValueError(f"line {lineno}: unknown gate kind {head!r}")
        tokens = rest.split()
        frame = bool(tokens) and tokens[-1] == "frame"
        if frame:
            tokens = tokens[:-1]
        k = NATIVE_ARITY[head]
        if len(tokens) != k + NATIVE_NPARAMS[head]:
            raise ValueError(f"line {lineno}: wrong number of arguments for {head}")
        qubits = tuple(int(t) for t in tokens[:k])
        params = tuple(float(t) for t in tokens[k:])
        gates.append(Gate(head, qubits, params, frame))
    if n is None:
        raise ValueError("missing 'qubits N' header")
    return Circuit(n, tuple(gates), label)
