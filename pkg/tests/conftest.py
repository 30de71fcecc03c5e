from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.linalg import expm

from dzne.circuits import PAULI_MATRICES, Circuit, Gate, gate_unitary

settings.register_profile(
    "default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


# ---------------------------------------------------------------------------
# brute-force oracles: full 2^n matrices built with kron, no shared kernels


def embed(u: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full-register operator for ``u`` acting on ``qubits`` (first = MSB)."""
    k = len(qubits)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 0
        for q in qubits:
            sub_in = (sub_in << 1) | bits[q]
        for sub_out in range(2**k):
            amp = u[sub_out, sub_in]
            if amp == 0:
                continue
            nb = list(bits)
            for j, q in enumerate(qubits):
                nb[q] = (sub_out >> (k - 1 - j)) & 1
            row = 0
            for b in nb:
                row = (row << 1) | b
            out[row, col] += amp
    return out


def pauli_op(letters: str) -> np.ndarray:
    m = np.array([[1.0]], dtype=complex)
    for c in letters:
        m = np.kron(m, PAULI_MATRICES[c])
    return m


def depolarize_kraus(rho: np.ndarray, qubits, p: float, n: int) -> np.ndarray:
    """Uniform Pauli channel over the 4^k - 1 non-identity Paulis on ``qubits``."""
    k = len(qubits)
    terms = list(itertools.product("IXYZ", repeat=k))
    out = (1 - p) * rho
    for t in terms[1:]:
        op = embed(pauli_op("".join(t)), qubits, n)
        out = out + p / (4**k - 1) * op @ rho @ op.conj().T
    return out


def brute_force_simulate(circuit: Circuit, noise=None) -> np.ndarray:
    n = circuit.n_qubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    zz = np.kron(PAULI_MATRICES["Z"], PAULI_MATRICES["Z"])
    for g in circuit.gates:
        u = embed(np.asarray(gate_unitary(g)), g.qubits, n)
        rho = u @ rho @ u.conj().T
        if noise is None or g.is_twirl_frame:
            continue
        p = noise.depol_for(g.qubits)
        if p:
            rho = depolarize_kraus(rho, g.qubits, p, n)
        if g.is_two_qubit and noise.coherent_epsilon:
            v = embed(expm(-0.5j * noise.coherent_epsilon * zz), g.qubits, n)
            rho = v @ rho @ v.conj().T
    return rho


def random_native_circuit(rng: np.random.Generator, n: int, n_gates: int) -> Circuit:
    gates = []
    for _ in range(n_gates):
        kind = rng.choice(["X", "U3", "P", "CZ", "CNOT"])
        if kind in ("CZ", "CNOT"):
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate(kind, (int(a), int(b))))
        elif kind == "U3":
            gates.append(Gate("U3", (int(rng.integers(n)),), tuple(rng.uniform(-math.pi, math.pi, 3))))
        elif kind == "P":
            gates.append(Gate("P", (int(rng.integers(n)),), (float(rng.uniform(-math.pi, math.pi)),)))
        else:
            gates.append(Gate("X", (int(rng.integers(n)),)))
    return Circuit(n, tuple(gates))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
