"""The staged mitigated estimator.

Stages, in execution order: fold each noise factor (B), twirl every folded
instance independently (D), execute all variants in plan order (E), turn
counts into expectations (G) after optional readout correction (H), average
over twirls and fold samples (F), and extrapolate (I). Readout calibration (C)
runs once per job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import __version__
from ..circuits import Circuit, PauliString, validate_native
from ..extrapolate import ExtrapolationError, ExtrapolationFit, NoisePoint, fit_model
from ..folding import FoldedSample, sample_fold_ensemble
from ..readout import ConfusionModel, correct_counts, correct_vector, corrected_expectation, estimate_confusion
from ..sim import (
    BASIS_ROTATIONS,
    NoiseModel,
    apply_readout_channel,
    distribution_expectation,
    expectation_from_counts,
    measurement_distribution,
    sample_from_distribution,
    simulate,
)
from ..twirl import twirl_circuit

# stream tags keep the seed families of different stages disjoint
_FOLD, _TWIRL, _SHOTS, _CALIB = 1, 2, 3, 4


@dataclass(frozen=True)
class EstimatorJob:
    """One estimation request. ``total_shots_per_factor=None`` means exact
    (infinite-shot) evaluation."""

    circuit: Circuit
    observables: tuple[PauliString, ...]
    noise_factors: tuple[float, ...] = (1.0, 3.0, 5.0)
    fold_samples: int = 1
    num_twirls: int = 0
    readout_mitigation: bool = False
    total_shots_per_factor: int | None = 8000
    extrapolation_models: tuple[str, ...] = ("linear",)
    seed: int = 0
    scope: str = "local"
    foldable: str = "2q"
    calibration_shots: int | None = None

    def __post_init__(self):
        obs = self.observables
        if isinstance(obs, PauliString):
            obs = (obs,)
        object.__setattr__(self, "observables", tuple(
            o if isinstance(o, PauliString) else PauliString(o) for o in obs))
        object.__setattr__(self, "noise_factors", tuple(float(v) for v in self.noise_factors))
        object.__setattr__(self, "extrapolation_models", tuple(self.extrapolation_models))
        if not self.observables:
            raise ValueError("job needs at least one observable")
        for o in self.observables:
            if len(o) != self.circuit.n_qubits:
                raise ValueError(f"observable {o} does not match {self.circuit.n_qubits} qubits")
        lams = self.noise_factors
        if not lams or lams[0] < 1 or any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError(f"noise factors must be >= 1 and strictly increasing, got {lams}")
        if self.fold_samples < 1:
            raise ValueError("fold_samples must be >= 1")
        if self.num_twirls < 0:
            raise ValueError("num_twirls must be >= 0")
        if self.total_shots_per_factor is not None and self.total_shots_per_factor < self.num_variants:
            raise ValueError(
                f"{self.total_shots_per_factor} shots cannot cover {self.num_variants} variants per factor"
            )
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def num_variants(self) -> int:
        return self.fold_samples * max(self.num_twirls, 1)

    @property
    def exact(self) -> bool:
        return self.total_shots_per_factor is None


@dataclass(frozen=True)
class Variant:
    index: int
    fold_sample: int
    twirl: int
    observable: int
    lambda_index: int
    shots: int | None
    seed: tuple[int, ...]


def allocate_shots(total_per_factor: int, fold_samples: int, num_twirls: int) -> list[int]:
    """Split a per-factor budget evenly; the first ``total % v`` variants get one more."""
    v = fold_samples * max(num_twirls, 1)
    if total_per_factor < v:
        raise ValueError(f"{total_per_factor} shots cannot cover {v} variants")
    base, r = divmod(total_per_factor, v)
    return [base + 1 if i < r else base for i in range(v)]


def build_execution_plan(job: EstimatorJob) -> list[Variant]:
    """Variants grouped by (fold sample, twirl); inside a group each observable
    runs its whole ascending noise-factor sweep back to back."""
    shots = (
        allocate_shots(job.total_shots_per_factor, job.fold_samples, job.num_twirls)
        if not job.exact else None
    )
    out = []
    t_count = max(job.num_twirls, 1)
    for s in range(job.fold_samples):
        for t in range(t_count):
            for o in range(len(job.observables)):
                for li in range(len(job.noise_factors)):
                    i = len(out)
                    out.append(Variant(i, s, t, o, li, None if shots is None else shots[s * t_count + t],
                                       (job.seed, _SHOTS, i)))
    return out


@dataclass
class ObservableResult:
    observable: str
    points: list[NoisePoint]
    fits: dict[str, ExtrapolationFit]
    fit_errors: dict[str, str]
    variant_values: list[dict]

    @property
    def zero_noise_value(self) -> float | None:
        """Value of the first requested model that fitted successfully."""
        for fit in self.fits.values():
            return fit.zero_noise_value
        return None

    @property
    def zero_noise_stderr(self) -> float | None:
        for fit in self.fits.values():
            return fit.zero_noise_stderr
        return None

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "points": [p.to_dict() for p in self.points],
            "fits": {k: v.to_dict() for k, v in self.fits.items()},
            "fit_errors": dict(self.fit_errors),
            "zero_noise_value": self.zero_noise_value,
            "zero_noise_stderr": self.zero_noise_stderr,
            "variants": self.variant_values,
        }


@dataclass
class MitigatedResult:
    observables: list[ObservableResult]
    provenance: dict = field(default_factory=dict)

    def __getitem__(self, i: int) -> ObservableResult:
        return self.observables[i]

    @property
    def has_fit_errors(self) -> bool:
        return any(r.fit_errors for r in self.observables)

    def to_dict(self) -> dict:
        return {"observables": [r.to_dict() for r in self.observables], "provenance": self.provenance}


def _basis_key(obs: PauliString) -> str:
    return "".join(c if c in BASIS_ROTATIONS else "Z" for c in obs.letters)


def _basis_observable(key: str) -> PauliString:
    return PauliString(key)


class SimulationCache:
    """Outcome distributions keyed by (circuit, gate noise, measurement basis).

    Density matrices are never kept; each circuit is simulated once and the
    distributions for every requested basis are stored.
    """

    def __init__(self):
        self._store: dict = {}
        self.simulations = 0

    def distributions(self, circuit: Circuit, noise: NoiseModel, bases: Sequence[str]) -> dict[str, np.ndarray]:
        gate_noise = noise.without_readout()
        key = (circuit, gate_noise)
        entry = self._store.setdefault(key, {})
        missing = [b for b in bases if b not in entry]
        if missing:
            rho = simulate(circuit, gate_noise)
            self.simulations += 1
            for b in missing:
                entry[b] = measurement_distribution(rho, _basis_observable(b))
        return {b: entry[b] for b in bases}

    def __len__(self):
        return len(self._store)


def _fold_ensembles(job: EstimatorJob) -> tuple[list[list[FoldedSample]], list[float]]:
    """Per noise factor: one folded sample per fold-sample slot, plus lambda_eff."""
    d = job.circuit.num_two_qubit if job.foldable == "2q" else sum(
        not g.is_twirl_frame for g in job.circuit.gates)
    ensembles, lam_eff = [], []
    for li, lam in enumerate(job.noise_factors):
        if d == 0:
            # nothing to fold: noise cannot be amplified, keep the requested label
            ensembles.append([None] * job.fold_samples)
            lam_eff.append(lam)
            continue
        ens = sample_fold_ensemble(job.circuit, lam, job.fold_samples, job.scope, job.foldable,
                                   base_seed=(job.seed, _FOLD, li))
        slots = [ens[0]] * job.fold_samples if len(ens) == 1 else list(ens)
        effs = {fs.lambda_eff for fs in slots}
        assert len(effs) == 1, "fold samples at one noise factor must share lambda_eff"
        ensembles.append(slots)
        lam_eff.append(effs.pop())
    return ensembles, lam_eff


def _confusion(job: EstimatorJob, noise: NoiseModel) -> ConfusionModel | None:
    if not job.readout_mitigation:
        return None
    n = job.circuit.n_qubits
    if job.calibration_shots and noise.has_readout_error:
        return estimate_confusion(noise, job.calibration_shots, (job.seed, _CALIB), n=n)
    return ConfusionModel.from_noise(noise, n)


def _combine(values: list[tuple[float, float, int | None]], exact: bool) -> tuple[float, float, int]:
    """Stage F: pool variant estimates at one noise factor.

    stderr^2 = (mean per-shot variance) / total shots
             + (between-variant variance) / number of variants.
    """
    means = np.array([v[0] for v in values])
    if exact:
        return float(means.mean()), 0.0, 0
    shots = np.array([v[2] for v in values], dtype=float)
    errs = np.array([v[1] for v in values])
    total = shots.sum()
    mean = float(np.sum(shots * means) / total)
    per_shot = float(np.sum(shots * errs**2 * shots) / total)
    var = per_shot / total
    if len(values) > 1:
        var += float(np.var(means, ddof=1)) / len(values)
    return mean, math.sqrt(var), int(total)


def run_mitigated_estimator(
    job: EstimatorJob, noise: NoiseModel, cache: SimulationCache | None = None
) -> MitigatedResult:
    validate_native(job.circuit)
    cache = cache if cache is not None else SimulationCache()
    n = job.circuit.n_qubits
    ensembles, lam_eff = _fold_ensembles(job)
    confusion = _confusion(job, noise)
    p01, p10 = noise.readout_arrays(n)
    readout = tuple(zip(p01, p10)) if noise.has_readout_error else None
    bases = sorted({_basis_key(o) for o in job.observables})

    plan = build_execution_plan(job)
    variant_circuits: dict[tuple[int, int, int], Circuit] = {}
    twirl_seeds: dict[tuple[int, int, int], list | None] = {}

    def circuit_for(li, s, t):
        key = (li, s, t)
        if key not in variant_circuits:
            fs = ensembles[li][s]
            c = job.circuit if fs is None else fs.circuit
            if job.num_twirls:
                seed = (job.seed, _TWIRL, li, s, t)
                c = twirl_circuit(c, seed)
                twirl_seeds[key] = list(seed)
            else:
                twirl_seeds[key] = None
            variant_circuits[key] = c
        return variant_circuits[key]

    per_point: dict[tuple[int, int], list[tuple[float, float, int | None]]] = {}
    records: dict[int, list[dict]] = {o: [] for o in range(len(job.observables))}
    for v in plan:
        obs = job.observables[v.observable]
        circ = circuit_for(v.lambda_index, v.fold_sample, v.twirl)
        probs = cache.distributions(circ, noise, bases)[_basis_key(obs)]
        if job.exact:
            p = apply_readout_channel(probs, p01, p10) if readout else probs
            if confusion is not None and not confusion.is_identity():
                p = correct_vector(p, confusion)
            mean, err = distribution_expectation(p, obs), 0.0
        else:
            counts = sample_from_distribution(probs, n, v.shots, readout, v.seed)
            if confusion is not None:
                mean, err = corrected_expectation(correct_counts(counts, confusion), obs, confusion)
            else:
                mean, err = expectation_from_counts(counts, obs)
        per_point.setdefault((v.observable, v.lambda_index), []).append((mean, err, v.shots))
        records[v.observable].append({
            "variant": v.index, "fold_sample": v.fold_sample, "twirl": v.twirl,
            "lambda_eff": lam_eff[v.lambda_index], "shots": v.shots,
            "mean": mean, "stderr": err, "shot_seed": list(v.seed),
        })

    results = []
    for o, obs in enumerate(job.observables):
        points = []
        for li in range(len(job.noise_factors)):
            mean, err, shots = _combine(per_point[o, li], job.exact)
            # extrapolation always sees the realized noise factor
            points.append(NoisePoint(lam_eff[li], float(np.clip(mean, -1.5, 1.5)), err, shots))
        fits, errors = {}, {}
        for model in job.extrapolation_models:
            try:
                fits[model] = fit_model(points, model)
            except ExtrapolationError as exc:
                errors[model] = str(exc)
        results.append(ObservableResult(str(obs), points, fits, errors, records[o]))

    prov = {
        "version": __version__,
        "seed": job.seed,
        "noise_factors": list(job.noise_factors),
        "lambda_eff": lam_eff,
        "fold_samples": job.fold_samples,
        "num_twirls": job.num_twirls,
        "readout_mitigation": job.readout_mitigation,
        "shots_per_variant": None if job.exact else allocate_shots(
            job.total_shots_per_factor, job.fold_samples, job.num_twirls),
        "total_shots_per_factor": job.total_shots_per_factor,
        "fold_plans": [
            [None if fs is None else fs.plan.to_dict() for fs in ens] for ens in ensembles
        ],
        "twirl_seeds": {f"{li},{s},{t}": seed for (li, s, t), seed in sorted(twirl_seeds.items())},
        "confusion": None if confusion is None else {"p01": list(confusion.p01), "p10": list(confusion.p10)},
        "noise": noise_to_dict(noise),
    }
    return MitigatedResult(results, prov)


def noise_to_dict(noise: NoiseModel) -> dict:
    return {
        "depol_2q": noise.depol_2q,
        "depol_1q": noise.depol_1q,
        "coherent_epsilon": noise.coherent_epsilon,
        "pair_depol": [[list(pq), p] for pq, p in noise.pair_depol],
        "readout": [list(r) for r in noise.readout],
    }


def ideal_expectations(circuit: Circuit, observables: Sequence[PauliString]) -> list[float]:
    """Noiseless exact expectations, used as the reference in every study."""
    from ..sim import exact_expectation

    rho = simulate(circuit)
    return [exact_expectation(rho, o) for o in observables]
