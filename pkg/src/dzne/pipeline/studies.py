"""Experiment harnesses: calibration sweep, partial-fold variance, shot
scaling, readout and twirling comparisons, and the conserved-charge benchmark.

Every cell derives its seeds from ``(master seed, cell coordinates)`` so the
output does not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ..circuits import PauliString, build_brickwork, build_spin_chain
from ..extrapolate import MODEL_LABELS, select_model
from ..folding import fold_count
from ..sim import NoiseModel
from .estimator import EstimatorJob, SimulationCache, ideal_expectations, run_mitigated_estimator

THETA1 = 0.05 * math.pi


def derive_seed(master: int, *coords: int) -> int:
    """Stable 32-bit seed for a cell of a sweep."""
    return int(np.random.SeedSequence([int(master), *map(int, coords)]).generate_state(1)[0])


def _zne_value(result, model: str) -> float:
    fit = result[0].fits.get(model)
    if fit is None or not math.isfinite(fit.zero_noise_value):
        return math.inf
    return fit.zero_noise_value


def _rmse(errors: Sequence[float]) -> float:
    e = np.asarray(errors, dtype=float)
    if not np.all(np.isfinite(e)):
        return math.inf
    return float(np.sqrt(np.mean(e**2)))


# ---------------------------------------------------------------------------
# calibration phase diagram


@dataclass(frozen=True)
class CalibrationCell:
    depth: int
    error_prob: float
    rmse: dict[str, float]
    label: str

    def row(self) -> dict:
        out = {"depth": self.depth, "error_prob": self.error_prob}
        out.update({f"rmse_{k}": v for k, v in self.rmse.items()})
        out["label"] = self.label
        return out


def run_calibration_sweep(
    n: int,
    depths: Sequence[int],
    error_probs: Sequence[float],
    noise_factors: Sequence[float],
    shots: int | None,
    repetitions: int,
    seed: int,
    models: Sequence[str] = ("L", "Q", "E"),
    preference_threshold: float = 0.001,
    nf_threshold: float = 0.4,
) -> list[CalibrationCell]:
    """RMSE of each extrapolator against the ideal ``<Z...Z>`` per (depth, error) cell.

    ``depth`` is the two-qubit depth, so each cell uses ``depth / 2`` Floquet
    steps. Disorder is redrawn for every repetition.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    for d in depths:
        if d < 0 or d % 2:
            raise ValueError(f"two-qubit depth must be a non-negative even number, got {d}")
    obs = [PauliString.z_all(n)]
    specs = {label: MODEL_LABELS.get(label, label) for label in models}
    circuits = {}
    for di, depth in enumerate(depths):
        for r in range(repetitions):
            c = build_spin_chain(n, depth // 2, theta1=THETA1, disorder_seed=derive_seed(seed, 0, di, r))
            circuits[di, r] = (c, ideal_expectations(c, obs)[0])
    cells = []
    for di, depth in enumerate(depths):
        for ei, p in enumerate(error_probs):
            noise = NoiseModel(depol_2q=p)
            errs = {label: [] for label in specs}
            for r in range(repetitions):
                c, ideal = circuits[di, r]
                job = EstimatorJob(c, obs, noise_factors, total_shots_per_factor=shots,
                                   extrapolation_models=tuple(specs.values()),
                                   seed=derive_seed(seed, 1, di, ei, r))
                res = run_mitigated_estimator(job, noise)
                for label, spec in specs.items():
                    errs[label].append(_zne_value(res, spec) - ideal)
            rmse = {label: _rmse(e) for label, e in errs.items()}
            label = select_model(list(rmse.items()), preference_threshold, nf_threshold)
            cells.append(CalibrationCell(depth, float(p), rmse, label))
    return cells


def label_counts(cells: Sequence[CalibrationCell]) -> dict[str, int]:
    out = {k: 0 for k in ("L", "Q", "E", "NF")}
    for c in cells:
        out[c.label] = out.get(c.label, 0) + 1
    return out


# ---------------------------------------------------------------------------
# partial folding


@dataclass(frozen=True)
class PartialFoldRow:
    total_2q: int
    num_samples: int
    mean: float
    std: float
    repetitions: int


def run_partial_fold_variance_study(
    seed: int,
    n: int = 6,
    total_2q: Sequence[int] = (15, 30),
    error_range: tuple[float, float] = (0.01, 0.10),
    noise_factors: Sequence[float] = (1.0, 1.1),
    sample_counts: Sequence[int] = (1, 2, 5, 10),
    repetitions: int = 100,
    shots: int | None = 8000,
) -> list[PartialFoldRow]:
    """Spread of the linearly extrapolated ``<Z...Z>`` of a CZ brickwork versus
    the number of partially folded samples per noise factor.

    Pair error rates are drawn once per (seed, circuit size); repetitions only
    change the fold and shot randomness.
    """
    obs = [PauliString.z_all(n)]
    rows = []
    for gi, g in enumerate(total_2q):
        folds = {fold_count(g, lam) for lam in noise_factors}
        if len(folds) < 2:
            raise ValueError(f"noise factors {tuple(noise_factors)} all round to the same fold "
                             f"count on {g} gates; nothing to extrapolate")
        circ = build_brickwork(n, g, "CZ")
        rng = np.random.default_rng(derive_seed(seed, 0, gi))
        pairs = {(a, a + 1): float(rng.uniform(*error_range)) for a in range(n - 1)}
        noise = NoiseModel(pair_depol=pairs)
        cache = SimulationCache()
        for si, k in enumerate(sample_counts):
            values = []
            for r in range(repetitions):
                job = EstimatorJob(circ, obs, noise_factors, fold_samples=k,
                                   total_shots_per_factor=shots, extrapolation_models=("linear",),
                                   seed=derive_seed(seed, 1, gi, si, r))
                values.append(_zne_value(run_mitigated_estimator(job, noise, cache), "linear"))
            v = np.asarray(values)
            rows.append(PartialFoldRow(g, k, float(v.mean()),
                                       float(v.std(ddof=1)) if len(v) > 1 else 0.0, repetitions))
    return rows


def variance_reduction_pvalue(std_few: float, std_many: float, reps: int) -> float:
    """One-sided F-test p-value for ``var(many) < var(few)``."""
    if std_many == 0:
        return 0.0 if std_few > 0 else 1.0
    f = (std_few / std_many) ** 2
    return float(stats.f.sf(f, reps - 1, reps - 1))


# ---------------------------------------------------------------------------
# shot scaling


@dataclass(frozen=True)
class ShotScalingRow:
    error_prob: float
    shots: int
    sigma: float
    mean: float
    a: float
    beta: float


def fit_power_law(shots: Sequence[int], sigma: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``log sigma = log a - beta log N``."""
    x = np.log(np.asarray(shots, dtype=float))
    y = np.asarray(sigma, dtype=float)
    if np.any(y <= 0):
        return 0.0, math.nan
    slope, intercept = np.polyfit(x, np.log(y), 1)
    return float(math.exp(intercept)), float(-slope)


def run_shot_scaling_study(
    seed: int,
    n: int = 6,
    steps: int = 5,
    error_probs: Sequence[float] = (0.001, 0.01, 0.02),
    shot_list: Sequence[int] = (1000, 10000, 100000),
    repetitions: int = 50,
    noise_factors: Sequence[float] = (1.0, 3.0, 5.0),
    exact: bool = False,
) -> list[ShotScalingRow]:
    """Ensemble spread of the linear zero-noise estimate versus shot count."""
    if len(shot_list) < 3 or max(shot_list) < 100 * min(shot_list):
        raise ValueError("need at least 3 shot counts spanning two decades")
    obs = [PauliString.z_all(n)]
    circ = build_spin_chain(n, steps, theta1=THETA1, disorder_seed=derive_seed(seed, 0))
    cache = SimulationCache()
    rows = []
    for ei, p in enumerate(error_probs):
        noise = NoiseModel(depol_2q=p)
        sig, means = [], []
        for ni, shots in enumerate(shot_list):
            vals = []
            # exact evaluation is deterministic: one run per cell, zero spread
            for r in range(1 if exact else repetitions):
                job = EstimatorJob(circ, obs, noise_factors,
                                   total_shots_per_factor=None if exact else shots,
                                   extrapolation_models=("linear",),
                                   seed=derive_seed(seed, 1, ei, ni, r))
                vals.append(_zne_value(run_mitigated_estimator(job, noise, cache), "linear"))
            v = np.asarray(vals)
            sig.append(0.0 if exact else float(v.std(ddof=1)))
            means.append(float(v.mean()))
        a, beta = fit_power_law(shot_list, sig)
        rows += [ShotScalingRow(float(p), int(s), sg, m, a, beta)
                 for s, sg, m in zip(shot_list, sig, means)]
    return rows


# ---------------------------------------------------------------------------
# readout mitigation and twirling on the spin chain


@dataclass(frozen=True)
class ReadoutRow:
    steps: int
    depth_2q: int
    ideal_mean: float
    err_zne: float
    err_zne_ro: float
    err_raw: float

    @property
    def gap(self) -> float:
        return self.err_zne - self.err_zne_ro


def run_readout_study(
    seed: int,
    n: int = 6,
    steps_list: Sequence[int] = tuple(range(1, 11)),
    depol: float = 0.01,
    p01: float = 0.02,
    p10: float = 0.01,
    noise_factors: Sequence[float] = (1.0, 3.0, 5.0),
    shots: int | None = 8000,
    repetitions: int = 5,
    model: str = "linear",
) -> list[ReadoutRow]:
    """Mean absolute error of dZNE with and without readout correction."""
    obs = [PauliString.z_all(n)]
    noise = NoiseModel(depol_2q=depol, readout=((p01, p10),) * n)
    rows = []
    for si, steps in enumerate(steps_list):
        ez, ezr, eraw, ideals = [], [], [], []
        for r in range(repetitions):
            c = build_spin_chain(n, steps, theta1=THETA1, disorder_seed=derive_seed(seed, 0, si, r))
            ideal = ideal_expectations(c, obs)[0]
            cache = SimulationCache()
            job_seed = derive_seed(seed, 1, si, r)
            res = {}
            for ro in (False, True):
                job = EstimatorJob(c, obs, noise_factors, readout_mitigation=ro,
                                   total_shots_per_factor=shots, extrapolation_models=(model,),
                                   seed=job_seed)
                res[ro] = run_mitigated_estimator(job, noise, cache)
            ez.append(abs(_zne_value(res[False], model) - ideal))
            ezr.append(abs(_zne_value(res[True], model) - ideal))
            eraw.append(abs(res[False][0].points[0].mean - ideal))
            ideals.append(ideal)
        rows.append(ReadoutRow(steps, 2 * steps, float(np.mean(ideals)), float(np.mean(ez)),
                               float(np.mean(ezr)), float(np.mean(eraw))))
    return rows


@dataclass(frozen=True)
class TwirlRow:
    num_twirls: int
    steps: int
    depth_2q: int
    rmse: float


def run_twirl_study(
    seed: int,
    n: int = 6,
    steps_list: Sequence[int] = tuple(range(1, 11)),
    depol: float = 0.01,
    epsilon: float = 0.15,
    noise_factors: Sequence[float] = (1.0, 3.0, 5.0),
    shots: int | None = 8000,
    repetitions: int = 3,
    twirl_counts: Sequence[int] = (0, 10, 50),
    model: str = "linear",
) -> list[TwirlRow]:
    """RMSE of dZNE over disorder draws, per depth and number of twirls (0 = off).

    Twirl seeds are shared across twirl counts, so the first ten twirls of the
    50-twirl run are the ten twirls of the 10-twirl run.
    """
    obs = [PauliString.z_all(n)]
    noise = NoiseModel(depol_2q=depol, coherent_epsilon=epsilon)
    rows = []
    for si, steps in enumerate(steps_list):
        circs = []
        for r in range(repetitions):
            c = build_spin_chain(n, steps, theta1=THETA1, disorder_seed=derive_seed(seed, 0, si, r))
            circs.append((c, ideal_expectations(c, obs)[0]))
        cache = SimulationCache()
        for k in twirl_counts:
            errs = []
            for r, (c, ideal) in enumerate(circs):
                job = EstimatorJob(c, obs, noise_factors, num_twirls=k,
                                   total_shots_per_factor=shots, extrapolation_models=(model,),
                                   seed=derive_seed(seed, 1, si, r))
                errs.append(_zne_value(run_mitigated_estimator(job, noise, cache), model) - ideal)
            rows.append(TwirlRow(k, steps, 2 * steps, _rmse(errs)))
    return rows


def overall_rmse(rows: Sequence[TwirlRow], num_twirls: int) -> float:
    """RMSE pooled over every depth for one twirl count."""
    sel = [r.rmse for r in rows if r.num_twirls == num_twirls]
    return float(np.sqrt(np.mean(np.square(sel))))


# ---------------------------------------------------------------------------
# conserved-charge benchmark


@dataclass(frozen=True)
class BenchmarkRow:
    depth_2q: int
    strategy: str
    noise_factors: str
    eps_avg: float
    eps_stderr: float


def _eps_avg(values, stderrs, ideal) -> tuple[float, float]:
    """RMSE across qubits and its delta-method stderr."""
    e = np.asarray(values) - np.asarray(ideal)
    eps = float(np.sqrt(np.mean(e**2)))
    if not math.isfinite(eps):
        return math.inf, math.inf
    if eps == 0:
        return 0.0, float(np.sqrt(np.mean(np.square(stderrs))))
    grad = e / (len(e) * eps)
    return eps, float(np.sqrt(np.sum((grad * np.asarray(stderrs)) ** 2)))


def run_benchmark(
    seed: int,
    n: int = 10,
    steps_list: Sequence[int] = (1, 5, 10, 15, 20, 25, 30, 35),
    noise_factor_sets: Sequence[Sequence[float]] = ((1.0, 3.0, 5.0), (1.0, 1.1, 1.2)),
    models: Sequence[str] = ("L", "Q", "E"),
    shots: int | None = 16384,
    depol: float = 0.005,
    epsilon: float = 0.05,
    p01: float = 0.02,
    p10: float = 0.01,
    num_twirls: int = 8,
) -> list[BenchmarkRow]:
    """Error of every strategy on a chain with all couplings switched off.

    With ``theta = 0`` each ``<Z_i>`` is conserved and equals +1 / -1 exactly,
    giving an ideal reference at any size.
    """
    obs = [PauliString.z_at(n, i) for i in range(n)]
    noise = NoiseModel(depol_2q=depol, coherent_epsilon=epsilon, readout=((p01, p10),) * n)
    rows = []
    for si, steps in enumerate(steps_list):
        circ = build_spin_chain(n, steps, theta1=0.0, disorder_seed=derive_seed(seed, 0, si))
        ideal = ideal_expectations(circ, obs)
        cache = SimulationCache()
        base = dict(total_shots_per_factor=shots, extrapolation_models=())
        raw = run_mitigated_estimator(
            EstimatorJob(circ, obs, (1.0,), seed=derive_seed(seed, 1, si), **base), noise, cache)
        rorc = run_mitigated_estimator(
            EstimatorJob(circ, obs, (1.0,), num_twirls=num_twirls, readout_mitigation=True,
                         seed=derive_seed(seed, 2, si), **base), noise, cache)
        for label, res in (("no-mit", raw), ("RO+RC", rorc)):
            eps, err = _eps_avg([r.points[0].mean for r in res.observables],
                                [r.points[0].stderr for r in res.observables], ideal)
            rows.append(BenchmarkRow(2 * steps, label, "1", eps, err))
        for fi, lams in enumerate(noise_factor_sets):
            specs = {m: MODEL_LABELS.get(m, m) for m in models}
            job = EstimatorJob(circ, obs, tuple(lams), num_twirls=num_twirls, readout_mitigation=True,
                               total_shots_per_factor=shots, extrapolation_models=tuple(specs.values()),
                               seed=derive_seed(seed, 3, si, fi))
            res = run_mitigated_estimator(job, noise, cache)
            for m, spec in specs.items():
                vals, errs = [], []
                for r in res.observables:
                    fit = r.fits.get(spec)
                    vals.append(fit.zero_noise_value if fit else math.inf)
                    errs.append(fit.zero_noise_stderr if fit else math.inf)
                eps, err = _eps_avg(vals, errs, ideal)
                rows.append(BenchmarkRow(2 * steps, f"RO+RC+{m}", ",".join(f"{v:g}" for v in lams), eps, err))
    return rows


def rows_as_dicts(rows) -> list[dict]:
    return [r.row() if hasattr(r, "row") else asdict(r) for r in rows]
