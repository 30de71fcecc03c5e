import itertools

import numpy as np
import pytest
from scipy import stats
from scipy.linalg import expm

from dzne.circuits import Circuit, PauliString, build_spin_chain, cnot, cz, gate_unitary
from dzne.folding import apply_fold, plan_fold
from dzne.sim import NoiseModel, exact_expectation, simulate
from dzne.twirl import (
    FRAME_ANGLES,
    PAULI_PAIRS,
    TwoQubitPauli,
    conjugate_pauli,
    frame_gate,
    twirl_circuit,
    twirl_ensemble,
    twirl_with_choices,
)

from .conftest import depolarize_kraus, embed, pauli_op, random_native_circuit


def test_frames_are_exact_paulis():
    for letter in "IXYZ":
        u = np.asarray(gate_unitary(frame_gate(0, letter)))
        np.testing.assert_allclose(u, pauli_op(letter), atol=1e-15)


def test_conjugation_examples():
    assert conjugate_pauli("CZ", TwoQubitPauli("X", "I")) == TwoQubitPauli("X", "Z", 1)
    assert conjugate_pauli("CNOT", TwoQubitPauli("Z", "I")) == TwoQubitPauli("Z", "I", 1)
    for kind in ("CZ", "CNOT"):
        assert conjugate_pauli(kind, TwoQubitPauli("I", "I")) == TwoQubitPauli("I", "I", 1)


@pytest.mark.parametrize("kind", ["CZ", "CNOT"])
def test_conjugation_table_brute_force(kind):
    """All 32 signed Paulis: G P G^dag equals the table entry as a 4x4 matrix."""
    g = np.asarray(gate_unitary(cz(0, 1) if kind == "CZ" else cnot(0, 1)))
    for a, b in itertools.product("IXYZ", repeat=2):
        for sign in (1, -1):
            p = TwoQubitPauli(a, b, sign)
            q = conjugate_pauli(kind, p)
            np.testing.assert_allclose(g @ (sign * pauli_op(a + b)) @ g.conj().T,
                                       q.sign * pauli_op(q.left + q.right), atol=1e-12)


def test_unknown_gate_rejected():
    with pytest.raises(ValueError):
        conjugate_pauli("SWAP", TwoQubitPauli("X", "X"))


def test_no_two_qubit_gates_unchanged():
    c = Circuit(2, (frame_gate(0, "X"),))
    assert twirl_circuit(c, 1) is c


def test_single_cz_structure():
    c = Circuit(2, (cz(0, 1),))
    t = twirl_circuit(c, 3)
    assert len(t) == 5
    assert [g.is_twirl_frame for g in t.gates] == [True, True, False, True, True]
    assert twirl_circuit(c, 3) == t


def _all_z(rho, n):
    return [exact_expectation(rho, PauliString.z_at(n, q)) for q in range(n)]


def test_twirled_spin_chain_noiseless_equivalent():
    c = build_spin_chain(6, 3, theta1=0.3, theta2=0.2)
    ref = _all_z(simulate(c), 6)
    for seed in range(3):
        np.testing.assert_allclose(_all_z(simulate(twirl_circuit(c, seed)), 6), ref, atol=1e-9)


def test_ensemble_seeds():
    c = build_spin_chain(4, 2)
    assert twirl_ensemble(c, 1, 5) == [twirl_circuit(c, (5, 0))]
    ens = twirl_ensemble(c, 4, 5)
    assert len(set(ens)) == 4
    with pytest.raises(ValueError):
        twirl_ensemble(c, 0, 5)


def test_pauli_pairs_uniform():
    c = Circuit(2, (cz(0, 1),))
    counts = dict.fromkeys(PAULI_PAIRS, 0)
    inverse = {v: k for k, v in FRAME_ANGLES.items()}
    for i in range(100_000):
        rng = np.random.default_rng((7, i))
        counts[PAULI_PAIRS[int(rng.integers(0, 16))]] += 1
    # the same draw as twirl_circuit: check one explicitly
    t = twirl_circuit(c, (7, 0))
    first = inverse[t.gates[0].params] + inverse[t.gates[1].params]
    assert first == PAULI_PAIRS[int(np.random.default_rng((7, 0)).integers(0, 16))]
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


def _noisy_cz_channel(noise, pair):
    """Average over all 16 twirls of a single CZ: a 4x4 superoperator in Pauli basis."""
    ptm = np.zeros((16, 16))
    labels = [a + b for a in "IXYZ" for b in "IXYZ"]
    for j, lab in enumerate(labels):
        inp = pauli_op(lab) / 4
        for choice in [pair] if pair else PAULI_PAIRS:
            c = twirl_with_choices(Circuit(2, (cz(0, 1),)), [choice])
            out = _evolve(c, noise, inp)
            for i, lab2 in enumerate(labels):
                ptm[i, j] += np.real(np.trace(pauli_op(lab2) @ out)) / (1 if pair else 16)
    return ptm


def _evolve(circuit, noise, rho0):
    """Brute-force evolution of an arbitrary two-qubit input operator."""
    rho = rho0.astype(complex)
    v = expm(-0.5j * noise.coherent_epsilon * pauli_op("ZZ"))
    for g in circuit.gates:
        u = embed(np.asarray(gate_unitary(g)), g.qubits, 2)
        rho = u @ rho @ u.conj().T
        if g.is_twirl_frame:
            continue
        rho = depolarize_kraus(rho, g.qubits, noise.depol_2q, 2)
        rho = v @ rho @ v.conj().T
    return rho


def test_twirl_average_gives_pauli_channel():
    noise = NoiseModel(depol_2q=0.02, coherent_epsilon=0.3)
    g = np.asarray(gate_unitary(cz(0, 1)))
    ptm = _noisy_cz_channel(noise, None)
    # undo the ideal CZ: the remaining error channel must be diagonal
    labels = [a + b for a in "IXYZ" for b in "IXYZ"]
    ideal = np.array([[np.real(np.trace(pauli_op(a) @ g @ pauli_op(b) @ g.conj().T)) / 4
                       for b in labels] for a in labels])
    err = ptm @ ideal.T
    off = err - np.diag(np.diag(err))
    assert np.max(np.abs(off)) < 1e-9
    # the untwirled channel is not diagonal
    raw = _noisy_cz_channel(noise, "II") @ ideal.T
    assert np.max(np.abs(raw - np.diag(np.diag(raw)))) > 1e-3


def test_twirl_average_matches_channel_oracle():
    """Mean exact expectation over the 16 twirls equals the Pauli-twirled channel."""
    noise = NoiseModel(depol_2q=0.02, coherent_epsilon=0.4)
    prep = random_native_circuit(np.random.default_rng(3), 2, 6).gates
    prep = tuple(g for g in prep if not g.is_two_qubit)
    c = Circuit(2, prep + (cz(0, 1),))
    rho_in = simulate(Circuit(2, prep)).data
    ptm = _noisy_cz_channel(noise, None)
    labels = [a + b for a in "IXYZ" for b in "IXYZ"]
    vec = np.array([np.real(np.trace(pauli_op(lab) @ rho_in)) for lab in labels])
    out_vec = ptm @ vec
    for obs in ["ZI", "XZ", "YY", "IZ"]:
        vals = [exact_expectation(simulate(twirl_with_choices(c, [p]), noise), PauliString(obs))
                for p in PAULI_PAIRS]
        assert np.mean(vals) == pytest.approx(out_vec[labels.index(obs)], abs=1e-12)


@pytest.mark.parametrize("order", ["fold-then-twirl", "twirl-then-fold"])
def test_fold_twirl_compose(order):
    c = build_spin_chain(4, 3, theta1=0.4)
    ref = simulate(c)
    for seed in range(3):
        if order == "fold-then-twirl":
            out = twirl_circuit(apply_fold(c, plan_fold(c, 2.2, seed=seed)), seed)
        else:
            t = twirl_circuit(c, seed)
            out = apply_fold(t, plan_fold(t, 2.2, seed=seed))
        np.testing.assert_allclose(simulate(out).data, ref.data, atol=1e-9)
