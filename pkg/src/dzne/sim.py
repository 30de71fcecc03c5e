"""Density-matrix simulation of native circuits with depolarizing, coherent
ZZ and readout noise, plus exact and shot-sampled expectation values.

The density matrix is a dense ``2^n x 2^n`` array whose ``(2,) * 2n`` view has
row axes first (qubit 0 most significant), then column axes. Gates and
channels contract only the axes they touch.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .circuits import Circuit, Gate, PauliString, gate_unitary, validate_native

MAX_QUBITS = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SDG = np.diag([1, -1j]).astype(complex)
# rotate X / Y eigenbases onto Z before a computational-basis readout
BASIS_ROTATIONS = {"X": _H, "Y": _H @ _SDG}


@dataclass(frozen=True)
class NoiseModel:
    """Gate and readout noise.

    ``depol_2q`` is the default two-qubit depolarizing probability;
    ``pair_depol`` overrides it for specific (unordered) pairs. ``readout`` is
    one ``(p01, p10)`` tuple per qubit, where p01 is P(read 0 | true 1).
    An empty ``readout`` means perfect measurement.
    """

    depol_2q: float = 0.0
    depol_1q: float = 0.0
    coherent_epsilon: float = 0.0
    pair_depol: tuple[tuple[tuple[int, int], float], ...] = ()
    readout: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        pairs = tuple(
            sorted(((tuple(sorted(map(int, pq))), float(p)) for pq, p in _items(self.pair_depol)))
        )
        object.__setattr__(self, "pair_depol", pairs)
        object.__setattr__(
            self, "readout", tuple((float(a), float(b)) for a, b in self.readout)
        )
        probs = [self.depol_2q, self.depol_1q, *(p for _, p in pairs)]
        for p in probs:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"depolarizing probability {p} outside [0, 1]")
        for p01, p10 in self.readout:
            if not (0 <= p01 <= 1 and 0 <= p10 <= 1 and p01 + p10 <= 1):
                raise ValueError(f"invalid readout probabilities ({p01}, {p10})")

    @property
    def _pair_map(self) -> dict:
        return dict(self.pair_depol)

    def depol_for(self, qubits: Sequence[int]) -> float:
        if len(qubits) == 1:
            return self.depol_1q
        return self._pair_map.get(tuple(sorted(qubits)), self.depol_2q)

    def readout_arrays(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-qubit ``(p01, p10)`` arrays of length ``n`` (zeros if unset)."""
        if not self.readout:
            return np.zeros(n), np.zeros(n)
        if len(self.readout) != n:
            raise ValueError(f"readout model has {len(self.readout)} qubits, need {n}")
        arr = np.array(self.readout, dtype=float)
        return arr[:, 0], arr[:, 1]

    def without_gate_noise(self) -> "NoiseModel":
        return NoiseModel(readout=self.readout)

    def without_readout(self) -> "NoiseModel":
        return NoiseModel(
            self.depol_2q, self.depol_1q, self.coherent_epsilon, self.pair_depol
        )

    @property
    def has_readout_error(self) -> bool:
        return any(a or b for a, b in self.readout)

    @classmethod
    def uniform_readout(cls, n: int, p01: float, p10: float, **kwargs) -> "NoiseModel":
        return cls(readout=((p01, p10),) * n, **kwargs)


def _items(pairs):
    if isinstance(pairs, Mapping):
        return pairs.items()
    return pairs


class DensityMatrix:
    """Mutable ``2^n x 2^n`` density matrix.

    ``data`` is the C-contiguous matrix; ``tensor`` is the same memory viewed
    with shape ``(2,)*2n`` (row axes first, qubit 0 most significant).
    """

    def __init__(self, n_qubits: int, data: np.ndarray | None = None):
        if n_qubits > MAX_QUBITS:
            raise ValueError(
                f"{n_qubits} qubits exceeds the dense simulator limit of {MAX_QUBITS}"
            )
        self.n_qubits = n_qubits
        dim = 2**n_qubits
        if data is None:
            data = np.zeros((dim, dim), dtype=complex)
            data[0, 0] = 1.0
        data = np.asarray(data, dtype=complex)
        if data.shape not in ((dim, dim), (2,) * (2 * n_qubits)):
            raise ValueError(f"data of shape {data.shape} is not a {n_qubits}-qubit state")
        self.data = np.array(data.reshape(dim, dim), dtype=complex, order="C")

    @classmethod
    def basis_state(cls, bits: str) -> "DensityMatrix":
        n = len(bits)
        rho = cls(n, np.zeros((2**n, 2**n)))
        idx = int(bits, 2)
        rho.data[idx, idx] = 1.0
        return rho

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(n, np.eye(2**n) / 2**n)

    @classmethod
    def from_diagonal(cls, probs: np.ndarray) -> "DensityMatrix":
        probs = np.asarray(probs, dtype=float).ravel()
        n = int(round(math.log2(probs.size)))
        return cls(n, np.diag(probs))

    @property
    def matrix(self) -> np.ndarray:
        return self.data

    @property
    def tensor(self) -> np.ndarray:
        return self.data.reshape((2,) * (2 * self.n_qubits))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.data)).copy()

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.data)

    def trace(self) -> float:
        return float(np.real(np.trace(self.data)))

    def check(self, strict: bool = False, atol: float = 1e-10) -> None:
        """Assert unit trace and Hermiticity; ``strict`` also checks positivity."""
        m = self.data
        if abs(np.trace(m) - 1) > atol:
            raise AssertionError(f"trace {np.trace(m)} != 1")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise AssertionError("density matrix is not Hermitian")
        if strict:
            lo = np.linalg.eigvalsh(m).min()
            if lo < -1e-9:
                raise AssertionError(f"negative eigenvalue {lo}")

    def dump_diagonal_csv(self, path) -> None:
        """Debug helper: write the computational-basis populations to CSV."""
        n = self.n_qubits
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring", "probability"])
            for i, p in enumerate(self.diagonal()):
                w.writerow([format(i, f"0{n}b"), repr(float(p))])


# ---------------------------------------------------------------------------
# kernels


def _contiguous_block(qubits: Sequence[int], u: np.ndarray) -> tuple[int, np.ndarray] | None:
    """``(lowest qubit, u reordered to ascending qubits)`` if the qubits are adjacent."""
    lo = min(qubits)
    if sorted(qubits) != list(range(lo, lo + len(qubits))):
        return None
    if len(qubits) == 2 and qubits[0] > qubits[1]:
        u = u.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return lo, u


def _apply_matrix(t: np.ndarray, u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``u`` (2^k x 2^k) into tensor axes ``axes`` (left action)."""
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _apply_local(flat: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int,
                 lead: int = 1, trail: int = 1) -> np.ndarray:
    """Left-multiply ``u`` on ``qubits`` of an n-qubit index sandwiched by
    ``lead`` and ``trail`` spectator dimensions. Returns a new flat array."""
    k = len(qubits)
    block = _contiguous_block(qubits, u)
    if block is None:
        t = flat.reshape((lead,) + (2,) * n + (trail,))
        out = _apply_matrix(t, u, [1 + q for q in qubits])
        return np.ascontiguousarray(out).reshape(flat.shape)
    lo, ub = block
    kk = 2**k
    view = flat.reshape(lead * 2**lo, kk, 2 ** (n - lo - k) * trail)
    dtype = np.result_type(flat.dtype, ub.dtype)
    out = np.empty(view.shape, dtype=dtype)
    # slice-wise combination; native gates are sparse so most terms vanish
    for j in range(kk):
        acc = None
        for i in range(kk):
            c = ub[j, i]
            if c == 0:
                continue
            term = view[:, i, :] if c == 1 else c * view[:, i, :]
            acc = term if acc is None else acc + term
        out[:, j, :] = 0 if acc is None else acc
    return out.reshape(flat.shape)


def _check_qubits(rho: DensityMatrix, qubits: Sequence[int]) -> None:
    for q in qubits:
        if not 0 <= q < rho.n_qubits:
            raise IndexError(f"qubit {q} out of range for {rho.n_qubits} qubits")


def _apply_unitary(rho: DensityMatrix, u: np.ndarray, qubits: Sequence[int]) -> None:
    n, dim = rho.n_qubits, rho.data.shape[0]
    block = _contiguous_block(qubits, u)
    if block is None:
        m = _apply_local(rho.data, u, qubits, n, trail=dim)
        rho.data = _apply_local(m, u.conj(), qubits, n, lead=dim)
        return
    # U rho U^dag = (U (U rho)^dag)^dag, both products act on rows only
    lo, ub = block
    shape = (2**lo, 2 ** len(qubits), dim * 2 ** (n - lo - len(qubits)))
    m = np.matmul(ub, rho.data.reshape(shape)).reshape(dim, dim)
    m = np.ascontiguousarray(m.conj().T)
    m = np.matmul(ub, m.reshape(shape)).reshape(dim, dim)
    rho.data = np.ascontiguousarray(m.conj().T)


def apply_gate(rho: DensityMatrix, gate: Gate) -> DensityMatrix:
    """Apply ``rho -> U rho U^dagger`` on the gate's qubits, in place."""
    _check_qubits(rho, gate.qubits)
    _apply_unitary(rho, gate_unitary(gate), gate.qubits)
    return rho


def _fully_depolarize(rho: DensityMatrix, qubits: Sequence[int]) -> np.ndarray:
    """Matrix with the reduced state on ``qubits`` replaced by I / 2^k."""
    n = rho.n_qubits
    block = _contiguous_block(qubits, np.eye(2 ** len(qubits)))
    if block is not None:
        lo = block[0]
        a, kk, r = 2**lo, 2 ** len(qubits), 2 ** (n - lo - len(qubits))
        v = rho.data.reshape(a, kk, r, a, kk, r)
        red = np.trace(v, axis1=1, axis2=4)
        eye = np.eye(kk) / kk
        out = red[:, None, :, :, None, :] * eye[None, :, None, None, :, None]
        return out.reshape(rho.data.shape)
    t = rho.tensor
    for q in qubits:
        red = np.trace(t, axis1=q, axis2=n + q)
        red = np.expand_dims(red, axis=(q, n + q))
        shape = [1] * (2 * n)
        shape[q] = shape[n + q] = 2
        t = red * (np.eye(2) / 2).reshape(shape)
    return np.ascontiguousarray(t).reshape(rho.data.shape)


def apply_depolarizing(rho: DensityMatrix, qubits: Sequence[int], p: float) -> DensityMatrix:
    """Uniform depolarizing channel on ``k = len(qubits)`` qubits, in place.

    ``rho -> (1 - p) rho + p / (4^k - 1) * sum_{P != I} P rho P``. Evaluated as
    a mix of ``rho`` and its fully depolarized version, which is the same map.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    _check_qubits(rho, qubits)
    if p == 0.0:
        return rho
    dim = 4 ** len(qubits)
    mix = p * dim / (dim - 1)
    mixed = _fully_depolarize(rho, qubits)
    rho.data = (1.0 - mix) * rho.data + mix * mixed
    return rho


@lru_cache(maxsize=1024)
def _zz_diagonal(n: int, a: int, b: int, epsilon: float) -> np.ndarray:
    # diagonal of exp(-i eps/2 Z_a Z_b); eps reduced mod 2pi so eps = 2pi is exact
    eps = math.fmod(epsilon, 2 * math.pi)
    idx = np.arange(2**n)
    za = 1 - 2 * ((idx >> (n - 1 - a)) & 1)
    zb = 1 - 2 * ((idx >> (n - 1 - b)) & 1)
    d = np.exp(-0.5j * eps * za * zb)
    d.setflags(write=False)
    return d


def apply_coherent_error(rho: DensityMatrix, pair: Sequence[int], epsilon: float) -> DensityMatrix:
    """Systematic ZZ over-rotation ``exp(-i eps/2 Z(x)Z)`` on ``pair``, in place."""
    _check_qubits(rho, pair)
    if math.fmod(epsilon, 2 * math.pi) == 0.0:
        return rho
    d = _zz_diagonal(rho.n_qubits, pair[0], pair[1], float(epsilon))
    rho.data = rho.data * d[:, None] * d.conj()[None, :]
    return rho


# ---------------------------------------------------------------------------
# diagonal fast path: every gate a phased permutation keeps a diagonal state
# diagonal, so only populations need tracking


@lru_cache(maxsize=4096)
def _population_map(gate: Gate) -> np.ndarray | None:
    """``|U|^2`` if the gate is a phased permutation, else None."""
    u = gate_unitary(gate)
    mag = np.abs(u) ** 2
    mag[mag < 1e-24] = 0.0
    if not np.all(np.count_nonzero(mag, axis=1) == 1):
        return None
    mag = np.round(mag)
    if np.array_equal(mag, np.eye(len(u))):
        return np.empty(0)  # diagonal gate: populations untouched
    return mag


def _is_population_circuit(circuit: Circuit) -> bool:
    return all(_population_map(g) is not None for g in circuit.gates)


def _simulate_populations(circuit: Circuit, noise: NoiseModel) -> np.ndarray:
    n = circuit.n_qubits
    p = np.zeros(2**n)
    p[0] = 1.0
    for g in circuit.gates:
        m = _population_map(g)
        if m.size:
            p = _apply_local(p, m, g.qubits, n)
        if g.is_twirl_frame:
            continue
        prob = noise.depol_for(g.qubits)
        if prob:
            dim = 4 ** len(g.qubits)
            mix = prob * dim / (dim - 1)
            t = p.reshape((2,) * n)
            mixed = t.sum(axis=tuple(g.qubits), keepdims=True) / 2 ** len(g.qubits)
            p = ((1.0 - mix) * t + mix * mixed).reshape(-1)
        # ZZ over-rotation is diagonal: no effect on populations
    return p


def simulate(circuit: Circuit, noise: NoiseModel | None = None) -> DensityMatrix:
    """Evolve ``|0...0><0...0|`` through ``circuit`` under ``noise``.

    Each non-frame gate is followed by depolarizing noise on its qubits and,
    for two-qubit gates, the coherent ZZ error. Twirl frames are noiseless.
    """
    validate_native(circuit)
    noise = noise or NoiseModel()
    if circuit.n_qubits > MAX_QUBITS:
        raise ValueError(
            f"{circuit.n_qubits} qubits exceeds the dense simulator limit of {MAX_QUBITS}"
        )
    if _is_population_circuit(circuit):
        return DensityMatrix.from_diagonal(_simulate_populations(circuit, noise))
    return simulate_dense(circuit, noise)


def _fused_ops(circuit: Circuit, noise: NoiseModel) -> list[tuple]:
    """Merge noiseless single-qubit gates into the next two-qubit unitary.

    Returns ``("U", qubits, matrix)``, ``("D", qubits, p)`` and
    ``("Z", pair, eps)`` ops. Exact: pending gates on other qubits commute
    with everything emitted in between.
    """
    ops: list[tuple] = []
    pending: dict[int, np.ndarray] = {}
    for g in circuit.gates:
        u = gate_unitary(g)
        prob = 0.0 if g.is_twirl_frame else noise.depol_for(g.qubits)
        if len(g.qubits) == 1:
            q = g.qubits[0]
            acc = u @ pending.pop(q) if q in pending else u
            if prob:
                ops.append(("U", g.qubits, acc))
                ops.append(("D", g.qubits, prob))
            else:
                pending[q] = acc
            continue
        a, b = g.qubits
        if a in pending or b in pending:
            before = np.kron(pending.pop(a, np.eye(2)), pending.pop(b, np.eye(2)))
            u = u @ before
        ops.append(("U", g.qubits, u))
        if prob:
            ops.append(("D", g.qubits, prob))
        if noise.coherent_epsilon and not g.is_twirl_frame:
            ops.append(("Z", g.qubits, noise.coherent_epsilon))
    for q in sorted(pending):
        ops.append(("U", (q,), pending[q]))
    return ops


def simulate_dense(circuit: Circuit, noise: NoiseModel | None = None) -> DensityMatrix:
    """Like :func:`simulate` but never takes the population shortcut."""
    validate_native(circuit)
    noise = noise or NoiseModel()
    rho = DensityMatrix(circuit.n_qubits)
    for kind, qubits, arg in _fused_ops(circuit, noise):
        if kind == "U":
            _apply_unitary(rho, arg, qubits)
        elif kind == "D":
            apply_depolarizing(rho, qubits, arg)
        else:
            apply_coherent_error(rho, qubits, arg)
    return rho


def simulate_gatewise(circuit: Circuit, noise: NoiseModel | None = None) -> DensityMatrix:
    """Reference evolution: one gate, then its noise, at a time (no fusion)."""
    validate_native(circuit)
    noise = noise or NoiseModel()
    rho = DensityMatrix(circuit.n_qubits)
    for g in circuit.gates:
        apply_gate(rho, g)
        if g.is_twirl_frame:
            continue
        prob = noise.depol_for(g.qubits)
        if prob:
            apply_depolarizing(rho, g.qubits, prob)
        if g.is_two_qubit and noise.coherent_epsilon:
            apply_coherent_error(rho, g.qubits, noise.coherent_epsilon)
    return rho


# ---------------------------------------------------------------------------
# expectations


def _check_length(rho: DensityMatrix, obs: PauliString) -> None:
    if len(obs) != rho.n_qubits:
        raise ValueError(f"observable {obs} has length {len(obs)}, state has {rho.n_qubits} qubits")


def exact_expectation(rho: DensityMatrix, obs: PauliString) -> float:
    """``sign * tr(rho P)``."""
    from .circuits import PAULI_MATRICES

    _check_length(rho, obs)
    n = rho.n_qubits
    if obs.is_diagonal:
        diag = rho.diagonal().reshape((2,) * n)
        val = float(np.sum(diag * _parity_signs(n, obs.support)))
        return obs.sign * val
    dim = 2**n
    m = rho.data
    for q in obs.support:
        # tr(rho P) = tr(P rho): left-multiply each Pauli factor on the rows
        m = _apply_local(m, PAULI_MATRICES[obs.letters[q]], (q,), n, trail=dim)
    val = np.trace(m)
    return obs.sign * float(np.real(val))


@lru_cache(maxsize=256)
def _parity_signs(n: int, support: tuple[int, ...]) -> np.ndarray:
    """(+1/-1) tensor of shape (2,)*n: parity of the bits on ``support``."""
    out = np.ones((2,) * n)
    for q in support:
        shape = [1] * n
        shape[q] = 2
        out = out * np.array([1.0, -1.0]).reshape(shape)
    out.setflags(write=False)
    return out


def measurement_distribution(rho: DensityMatrix, obs: PauliString) -> np.ndarray:
    """Exact outcome probabilities after rotating ``obs`` onto the Z basis.

    Returns a flat array of length ``2^n`` indexed by the bitstring read as a
    binary number (qubit 0 most significant).
    """
    _check_length(rho, obs)
    if obs.is_diagonal:
        p = rho.diagonal()
    else:
        r = rho.copy()
        for q in obs.support:
            if obs.letters[q] in BASIS_ROTATIONS:
                _apply_unitary(r, BASIS_ROTATIONS[obs.letters[q]], (q,))
        p = r.diagonal()
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def apply_readout_channel(probs: np.ndarray, p01: Sequence[float], p10: Sequence[float]) -> np.ndarray:
    """Push an outcome distribution through independent per-qubit bit flips."""
    n = len(p01)
    out = np.asarray(probs, dtype=float)
    for q in range(n):
        if p01[q] or p10[q]:
            a = np.array([[1 - p10[q], p01[q]], [p10[q], 1 - p01[q]]])
            out = _apply_local(out, a, (q,), n)
    return out


def readout_expectation(rho: DensityMatrix, obs: PauliString, noise: NoiseModel) -> float:
    """Exact expectation including the readout confusion as a channel."""
    p01, p10 = noise.readout_arrays(rho.n_qubits)
    probs = apply_readout_channel(measurement_distribution(rho, obs), p01, p10)
    return distribution_expectation(probs, obs)


def distribution_expectation(probs: np.ndarray, obs: PauliString) -> float:
    n = len(obs)
    t = np.asarray(probs, dtype=float).reshape((2,) * n)
    return obs.sign * float(np.sum(t * _parity_signs(n, obs.support)))


# ---------------------------------------------------------------------------
# sampling


@dataclass
class Counts:
    shots: int
    table: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.table.values())
        if total != self.shots:
            raise ValueError(f"counts sum to {total}, expected {self.shots}")
        if any(c < 0 for c in self.table.values()):
            raise ValueError("negative count")

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.table)))

    def to_vector(self) -> np.ndarray:
        n = self.n_qubits
        vec = np.zeros(2**n)
        for b, c in self.table.items():
            vec[int(b, 2)] += c
        return vec


def _counts_from_indices(hist: np.ndarray, n: int, shots: int) -> Counts:
    nz = np.flatnonzero(hist)
    return Counts(shots, {format(int(i), f"0{n}b"): int(hist[i]) for i in nz})


def sample_distribution(
    probs: np.ndarray,
    shots: int,
    p01: Sequence[float],
    p10: Sequence[float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Histogram of ``shots`` draws from ``probs`` with per-shot readout flips."""
    n = len(p01)
    hist = rng.multinomial(shots, probs)
    p01 = np.asarray(p01, dtype=float)
    p10 = np.asarray(p10, dtype=float)
    if not (p01.any() or p10.any()):
        return hist
    idx = np.repeat(np.arange(probs.size), hist)
    weights = 1 << np.arange(n - 1, -1, -1)
    bits = (idx[:, None] & weights) > 0
    flip_p = np.where(bits, p01, p10)
    flips = rng.random(bits.shape) < flip_p
    out = ((bits ^ flips) * weights).sum(axis=1)
    return np.bincount(out, minlength=probs.size)


def sample_counts(
    rho: DensityMatrix,
    obs: PauliString,
    shots: int,
    readout: Sequence[tuple[float, float]] | None = None,
    seed=None,
) -> Counts:
    """Draw ``shots`` bitstrings in the measurement basis of ``obs``.

    ``readout`` holds one ``(p01, p10)`` pair per qubit; each measured bit is
    flipped independently. Deterministic for a given ``seed``.
    """
    return sample_from_distribution(measurement_distribution(rho, obs), rho.n_qubits, shots, readout, seed)


def sample_from_distribution(
    probs: np.ndarray,
    n: int,
    shots: int,
    readout: Sequence[tuple[float, float]] | None = None,
    seed=None,
) -> Counts:
    """Like :func:`sample_counts` but from precomputed outcome probabilities."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if readout:
        if len(readout) != n:
            raise ValueError("readout model does not match the number of qubits")
        arr = np.array(readout, dtype=float)
        p01, p10 = arr[:, 0], arr[:, 1]
        if np.any(arr < 0) or np.any(arr > 1) or np.any(p01 + p10 > 1):
            raise ValueError("invalid readout probabilities")
    else:
        p01 = p10 = np.zeros(n)
    rng = np.random.default_rng(seed)
    hist = sample_distribution(probs, shots, p01, p10, rng)
    return _counts_from_indices(hist, n, shots)


def expectation_from_counts(counts: Counts, obs: PauliString) -> tuple[float, float]:
    """Parity average over the observable's support and its binomial stderr."""
    if not counts.table:
        raise ValueError("empty counts")
    if counts.shots < 2:
        raise ValueError("need at least two shots for a standard error")
    support = obs.support
    total = 0
    for b, c in counts.table.items():
        odd = sum(b[q] == "1" for q in support) & 1
        total += -c if odd else c
    mean = obs.sign * total / counts.shots
    stderr = math.sqrt(max(0.0, 1.0 - mean * mean) / counts.shots)
    return mean, stderr
