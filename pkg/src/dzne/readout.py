"""Tensored readout-confusion calibration and inverse correction."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import Circuit, PauliString, x
from .sim import Counts, NoiseModel, sample_counts, simulate


@dataclass(frozen=True)
class ConfusionModel:
    """Per-qubit confusion ``A_i = [[1-p10, p01], [p10, 1-p01]]``.

    ``A[i][j]`` is the probability of reading ``i`` when the true bit is ``j``.
    """

    p01: tuple[float, ...]
    p10: tuple[float, ...]

    def __post_init__(self):
        p01 = tuple(float(v) for v in self.p01)
        p10 = tuple(float(v) for v in self.p10)
        if len(p01) != len(p10) or not p01:
            raise ValueError("p01 and p10 must be non-empty and the same length")
        for a, b in zip(p01, p10):
            if not (0 <= a <= 1 and 0 <= b <= 1):
                raise ValueError(f"invalid readout probabilities ({a}, {b})")
            if abs(1 - a - b) < 1e-12:
                raise ValueError("singular confusion matrix (p01 + p10 = 1)")
        object.__setattr__(self, "p01", p01)
        object.__setattr__(self, "p10", p10)

    @property
    def n_qubits(self) -> int:
        return len(self.p01)

    def matrix(self, q: int) -> np.ndarray:
        a, b = self.p01[q], self.p10[q]
        return np.array([[1 - b, a], [b, 1 - a]])

    def inverse(self, q: int) -> np.ndarray:
        a, b = self.p01[q], self.p10[q]
        return np.array([[1 - a, -a], [-b, 1 - b]]) / (1 - a - b)

    def amplification(self, support: Sequence[int] | None = None) -> float:
        qs = range(self.n_qubits) if support is None else support
        return math.prod(1.0 / abs(1 - self.p01[q] - self.p10[q]) for q in qs)

    def is_identity(self) -> bool:
        return not any(self.p01) and not any(self.p10)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["qubit", "p01", "p10"])
        for q in range(self.n_qubits):
            w.writerow([q, repr(self.p01[q]), repr(self.p10[q])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConfusionModel":
        rows = sorted(csv.DictReader(io.StringIO(text)), key=lambda r: int(r["qubit"]))
        if [int(r["qubit"]) for r in rows] != list(range(len(rows))):
            raise ValueError("confusion CSV must list qubits 0..n-1 once each")
        return cls(tuple(float(r["p01"]) for r in rows), tuple(float(r["p10"]) for r in rows))

    @classmethod
    def from_noise(cls, noise: NoiseModel, n: int) -> "ConfusionModel":
        p01, p10 = noise.readout_arrays(n)
        return cls(tuple(p01), tuple(p10))


def build_confusion(p01: Sequence[float], p10: Sequence[float]) -> ConfusionModel:
    return ConfusionModel(tuple(p01), tuple(p10))


def estimate_confusion(noise: NoiseModel, shots: int, seed, n: int | None = None) -> ConfusionModel:
    """Estimate flip rates from |0...0> and |1...1> calibration runs.

    Only the readout part of ``noise`` is used; the preparation is noiseless.
    """
    if shots < 100:
        raise ValueError("calibration needs at least 100 shots")
    if n is None:
        if not noise.readout:
            raise ValueError("qubit count unknown: pass n for a noise model without readout")
        n = len(noise.readout)
    readout = tuple(zip(*noise.readout_arrays(n)))
    obs = PauliString.z_all(n)
    base = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    est = []
    for k, circ in enumerate((Circuit(n), Circuit(n, tuple(x(q) for q in range(n))))):
        rho = simulate(circ)
        counts = sample_counts(rho, obs, shots, readout, seed=None if seed is None else (*base, k))
        ones = np.zeros(n)
        for b, c in counts.table.items():
            ones += c * (np.frombuffer(b.encode(), dtype=np.uint8) == ord("1"))
        frac = ones / shots
        est.append(frac if k == 0 else 1.0 - frac)
    p10, p01 = est
    return ConfusionModel(tuple(p01), tuple(p10))


@dataclass
class QuasiDistribution:
    """Bitstring weights after inverse-confusion correction; may be negative."""

    weights: dict[str, float]
    shots: int
    amplification: float = 1.0
    n_qubits: int = field(default=0)

    def __post_init__(self):
        if not self.n_qubits and self.weights:
            self.n_qubits = len(next(iter(self.weights)))
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"quasi-probabilities sum to {total}, expected 1")

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(2**self.n_qubits)
        for b, w in self.weights.items():
            vec[int(b, 2)] = w
        return vec


def correct_vector(vec: np.ndarray, model: ConfusionModel) -> np.ndarray:
    """Apply ``A_i^{-1}`` along every qubit axis of a length-``2^n`` vector."""
    n = model.n_qubits
    if vec.size != 2**n:
        raise ValueError(f"vector of length {vec.size} does not match {n} qubits")
    t = np.asarray(vec, dtype=float).reshape((2,) * n)
    for q in range(n):
        if model.p01[q] or model.p10[q]:
            t = np.moveaxis(np.tensordot(model.inverse(q), t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def correct_counts(counts: Counts, model: ConfusionModel) -> QuasiDistribution:
    n = counts.n_qubits
    if n != model.n_qubits:
        raise ValueError(f"counts have {n} qubits but the model has {model.n_qubits}")
    vec = correct_vector(counts.to_vector() / counts.shots, model)
    weights = {format(int(i), f"0{n}b"): float(vec[i]) for i in np.flatnonzero(vec)}
    # restore exact normalization lost to rounding
    drift = 1.0 - sum(weights.values())
    if weights and drift:
        k = max(weights, key=lambda b: abs(weights[b]))
        weights[k] += drift
    return QuasiDistribution(weights, counts.shots, model.amplification(), n)


def corrected_expectation(
    q: QuasiDistribution, obs: PauliString, model: ConfusionModel | None = None
) -> tuple[float, float]:
    """Parity average under the quasi-distribution.

    The stderr is the binomial stderr of the raw shots scaled by the inverse
    matrix amplification ``prod 1/(1-p01-p10)`` over the observable's support,
    a conservative bound.
    """
    support = obs.support
    mean = 0.0
    for b, w in q.weights.items():
        odd = sum(b[i] == "1" for i in support) & 1
        mean += -w if odd else w
    mean *= obs.sign
    amp = model.amplification(support) if model is not None else q.amplification
    raw = min(1.0, (mean / amp) ** 2)
    stderr = amp * math.sqrt((1.0 - raw) / q.shots)
    return mean, stderr
