"""Digital noise amplification by unitary folding.

A gate ``G`` folded ``c`` times becomes ``G (G^dag G)^c``. With ``d`` foldable
gates and ``s`` inserted ``G^dag G`` pairs the realized noise factor is
``1 + 2 s / d``; downstream code always uses that value, never the requested
one.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, dagger, inverse_gate, to_text

SCOPES = ("local", "global")
FOLDABLE = ("2q", "all")


def _foldable_indices(circuit: Circuit, foldable: str) -> list[int]:
    if foldable == "2q":
        return [i for i, g in enumerate(circuit.gates) if g.is_two_qubit]
    if foldable == "all":
        return [i for i, g in enumerate(circuit.gates) if not g.is_twirl_frame]
    raise ValueError(f"foldable must be one of {FOLDABLE}, got {foldable!r}")


def circuit_digest(circuit: Circuit) -> str:
    return hashlib.sha256(to_text(circuit).encode()).hexdigest()[:16]


def fold_count(d: int, lam: float) -> int:
    """Inserted pairs for ``d`` foldable gates, rounding halves away from zero."""
    # trim float noise like (1.15 - 1) * 20 / 2 = 1.4999999999999998
    x = round(d * (lam - 1.0) / 2.0, 9)
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class FoldingPlan:
    target_lambda: float
    scope: str
    foldable: str
    s_total: int
    per_gate_folds: dict[int, int]
    lambda_eff: float
    seed: int | tuple[int, ...] | None
    n_gates: int
    digest: str
    n_foldable: int = 0

    def to_dict(self) -> dict:
        return {
            "target_lambda": self.target_lambda,
            "scope": self.scope,
            "foldable": self.foldable,
            "s_total": self.s_total,
            "per_gate_folds": {str(k): v for k, v in sorted(self.per_gate_folds.items())},
            "lambda_eff": self.lambda_eff,
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "n_gates": self.n_gates,
            "digest": self.digest,
            "n_foldable": self.n_foldable,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FoldingPlan":
        seed = d["seed"]
        return cls(
            target_lambda=float(d["target_lambda"]),
            scope=d["scope"],
            foldable=d["foldable"],
            s_total=int(d["s_total"]),
            per_gate_folds={int(k): int(v) for k, v in d["per_gate_folds"].items()},
            lambda_eff=float(d["lambda_eff"]),
            seed=tuple(seed) if isinstance(seed, list) else seed,
            n_gates=int(d["n_gates"]),
            digest=d["digest"],
            n_foldable=int(d.get("n_foldable", 0)),
        )


def plan_fold(
    circuit: Circuit,
    lam: float,
    scope: str = "local",
    foldable: str = "2q",
    seed=None,
) -> FoldingPlan:
    """Decide how many times each foldable gate is folded to reach ``lam``.

    Every foldable gate gets ``k = s // d`` folds; ``s % d`` extra single folds
    go to a uniformly random subset (local scope) or to the last foldable gates
    (global scope).
    """
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")
    if lam < 1:
        raise ValueError(f"noise factor must be >= 1, got {lam}")
    idx = _foldable_indices(circuit, foldable)
    d = len(idx)
    if d == 0:
        if lam > 1:
            raise ValueError("circuit has no foldable gates; cannot amplify noise")
        s = 0
    else:
        s = fold_count(d, lam)
    folds = {i: 0 for i in idx}
    if s:
        k, m = divmod(s, d)
        for i in idx:
            folds[i] = k
        if m:
            if scope == "local":
                rng = np.random.default_rng(seed)
                extra = rng.choice(d, size=m, replace=False)
            else:
                extra = range(d - m, d)
            for j in extra:
                folds[idx[int(j)]] += 1
    return FoldingPlan(
        target_lambda=float(lam),
        scope=scope,
        foldable=foldable,
        s_total=s,
        per_gate_folds=folds,
        lambda_eff=1.0 + 2.0 * s / d if d else 1.0,
        seed=seed,
        n_gates=len(circuit.gates),
        digest=circuit_digest(circuit),
        n_foldable=d,
    )


def apply_fold(circuit: Circuit, plan: FoldingPlan) -> Circuit:
    """Build the folded circuit; its noiseless action equals the input's."""
    if plan.n_gates != len(circuit.gates) or plan.digest != circuit_digest(circuit):
        raise ValueError("folding plan was built for a different circuit")
    if plan.s_total == 0:
        return circuit
    label = f"{circuit.label} folded x{plan.lambda_eff:.4g}".strip()
    if plan.scope == "local":
        out = []
        for i, g in enumerate(circuit.gates):
            out.append(g)
            c = plan.per_gate_folds.get(i, 0)
            if c:
                inv = inverse_gate(g)
                out.extend([inv, g] * c)
        return circuit.with_gates(out, label)
    counts = list(plan.per_gate_folds.values())
    k = min(counts)
    gates = list(circuit.gates)
    inv = list(dagger(circuit).gates)
    out = gates + (inv + gates) * k
    extra = [i for i, c in plan.per_gate_folds.items() if c > k]
    if extra:
        suffix = gates[min(extra):]
        out += [inverse_gate(g) for g in reversed(suffix)] + suffix
    return circuit.with_gates(out, label)


@dataclass(frozen=True)
class FoldedSample:
    circuit: Circuit
    plan: FoldingPlan
    multiplicity: int = 1

    @property
    def lambda_eff(self) -> float:
        return self.plan.lambda_eff


def sample_fold_ensemble(
    circuit: Circuit,
    lam: float,
    num_samples: int,
    scope: str = "local",
    foldable: str = "2q",
    base_seed: int | tuple[int, ...] = 0,
) -> list[FoldedSample]:
    """Independently sampled partial folds with seeds ``(base_seed, index)``.

    When no random choice is involved (every gate folded equally) the ensemble
    collapses to one circuit whose multiplicity is ``num_samples``.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    base = tuple(base_seed) if isinstance(base_seed, (tuple, list)) else (base_seed,)
    first = plan_fold(circuit, lam, scope, foldable, seed=(*base, 0))
    d = first.n_foldable
    if scope == "global" or d == 0 or first.s_total % d == 0:
        return [FoldedSample(apply_fold(circuit, first), first, num_samples)]
    out = [FoldedSample(apply_fold(circuit, first), first)]
    for i in range(1, num_samples):
        plan = plan_fold(circuit, lam, scope, foldable, seed=(*base, i))
        out.append(FoldedSample(apply_fold(circuit, plan), plan))
    return out
