import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dzne.circuits import Circuit, PauliString, build_brickwork, build_spin_chain, to_text, x
from dzne.extrapolate import ExtrapolationError
from dzne.pipeline import (
    EstimatorJob,
    SimulationCache,
    allocate_shots,
    build_execution_plan,
    ideal_expectations,
    run_mitigated_estimator,
)
from dzne.pipeline import studies
from dzne.pipeline.cli import main
from dzne.sim import NoiseModel

ZZ6 = PauliString.z_all(6)


def chain(n=6, steps=3, theta1=0.3, seed=0):
    return build_spin_chain(n, steps, theta1=theta1, disorder_seed=seed)


# -- shot allocation and plan order -------------------------------------------


def test_allocate_shots_examples():
    assert allocate_shots(8000, 1, 0) == [8000]
    assert allocate_shots(8000, 3, 1) == [2667, 2667, 2666]
    assert allocate_shots(16384, 1, 16) == [1024] * 16
    with pytest.raises(ValueError):
        allocate_shots(3, 2, 2)


@given(total=st.integers(1, 10**6), samples=st.integers(1, 20), twirls=st.integers(0, 20))
def test_allocate_shots_conserves(total, samples, twirls):
    v = samples * max(twirls, 1)
    if total < v:
        return
    shots = allocate_shots(total, samples, twirls)
    assert len(shots) == v and sum(shots) == total
    assert max(shots) - min(shots) <= 1


def test_plan_single_sweep():
    job = EstimatorJob(chain(), (ZZ6,), (1, 3, 5))
    plan = build_execution_plan(job)
    assert [v.lambda_index for v in plan] == [0, 1, 2]
    assert [v.seed for v in plan] == [(0, 3, 0), (0, 3, 1), (0, 3, 2)]


def test_plan_groups_fold_samples():
    job = EstimatorJob(chain(), (ZZ6,), (1, 1.1), fold_samples=2)
    plan = build_execution_plan(job)
    assert [(v.fold_sample, job.noise_factors[v.lambda_index]) for v in plan] == [
        (0, 1.0), (0, 1.1), (1, 1.0), (1, 1.1)]


def test_plan_observable_sweeps_contiguous():
    obs = (ZZ6, PauliString.z_at(6, 0))
    job = EstimatorJob(chain(), obs, (1, 2, 3), fold_samples=2, num_twirls=3)
    plan = build_execution_plan(job)
    assert plan == build_execution_plan(job)
    for i in range(0, len(plan), 3):
        block = plan[i:i + 3]
        assert [v.lambda_index for v in block] == [0, 1, 2]
        assert len({(v.fold_sample, v.twirl, v.observable) for v in block}) == 1


@given(
    samples=st.integers(1, 4), twirls=st.integers(0, 4), n_lam=st.integers(1, 4),
    total=st.integers(16, 20000),
)
def test_plan_shot_conservation(samples, twirls, n_lam, total):
    lams = tuple(1 + 0.5 * i for i in range(n_lam))
    job = EstimatorJob(chain(4, 1), (PauliString("ZZZZ"),), lams, fold_samples=samples,
                       num_twirls=twirls, total_shots_per_factor=total)
    plan = build_execution_plan(job)
    assert sum(v.shots for v in plan) == total * n_lam
    assert len({v.seed for v in plan}) == len(plan)


def test_job_validation():
    c = chain()
    with pytest.raises(ValueError):
        EstimatorJob(c, (ZZ6,), (3, 1))
    with pytest.raises(ValueError):
        EstimatorJob(c, (ZZ6,), (0.5, 1))
    with pytest.raises(ValueError):
        EstimatorJob(c, (PauliString("ZZ"),))
    with pytest.raises(ValueError):
        EstimatorJob(c, (ZZ6,), fold_samples=4, num_twirls=4, total_shots_per_factor=10)


# -- estimator ---------------------------------------------------------------


def test_zero_noise_matches_ideal_within_shot_noise():
    c = chain(theta1=0.35)
    obs = (ZZ6, PauliString.z_at(6, 2), PauliString("XXIIII"))
    ideal = ideal_expectations(c, obs)
    hits, total = 0, 0
    for seed in range(5):
        job = EstimatorJob(c, obs, (1, 3, 5), seed=seed)
        res = run_mitigated_estimator(job, NoiseModel())
        for o, r in enumerate(res.observables):
            for p in r.points:
                total += 1
                hits += abs(p.mean - ideal[o]) < 3 * p.stderr
            total += 1
            hits += abs(r.zero_noise_value - ideal[o]) < 3 * r.zero_noise_stderr
    assert hits >= 0.95 * total


def test_exact_mode_zero_stderr_and_exact_value():
    c = chain()
    res = run_mitigated_estimator(EstimatorJob(c, (ZZ6,), total_shots_per_factor=None), NoiseModel())
    ideal = ideal_expectations(c, [ZZ6])[0]
    for p in res[0].points:
        assert p.stderr == 0
        assert p.mean == pytest.approx(ideal, abs=1e-12)
    assert res[0].zero_noise_stderr == 0


def test_estimator_is_deterministic():
    job = EstimatorJob(chain(), (ZZ6,), (1, 1.1, 1.2), fold_samples=3, num_twirls=2,
                       readout_mitigation=True, seed=11)
    noise = NoiseModel(depol_2q=0.02, coherent_epsilon=0.1, readout=((0.02, 0.01),) * 6)
    a = run_mitigated_estimator(job, noise).to_dict()
    b = run_mitigated_estimator(job, noise).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_uses_effective_noise_factor():
    c = build_brickwork(6, 30)
    job = EstimatorJob(c, (ZZ6,), (1, 1.1), total_shots_per_factor=None)
    res = run_mitigated_estimator(job, NoiseModel(depol_2q=0.01))
    assert [p.lambda_eff for p in res[0].points] == [1.0, pytest.approx(1 + 4 / 30)]
    assert res.provenance["lambda_eff"][1] == pytest.approx(1 + 4 / 30)


def test_linear_zne_improves_on_raw_under_depolarizing():
    c = chain(theta1=0.2)
    ideal = ideal_expectations(c, [ZZ6])[0]
    job = EstimatorJob(c, (ZZ6,), total_shots_per_factor=None)
    res = run_mitigated_estimator(job, NoiseModel(depol_2q=0.01))
    assert abs(res[0].zero_noise_value - ideal) < abs(res[0].points[0].mean - ideal)


def test_twirling_leaves_incoherent_noise_unchanged():
    c = chain(theta1=0.3)
    noise = NoiseModel(depol_2q=0.02)
    off = run_mitigated_estimator(EstimatorJob(c, (ZZ6,), total_shots_per_factor=None), noise)
    on = run_mitigated_estimator(
        EstimatorJob(c, (ZZ6,), num_twirls=4, total_shots_per_factor=None), noise)
    assert on[0].zero_noise_value == pytest.approx(off[0].zero_noise_value, abs=1e-9)
    sampled = run_mitigated_estimator(EstimatorJob(c, (ZZ6,), num_twirls=4, seed=3), noise)
    assert abs(sampled[0].zero_noise_value - off[0].zero_noise_value) < 3 * sampled[0].zero_noise_stderr


def test_readout_mitigation_exact_recovers_gate_noiseless_ideal():
    c = chain()
    noise = NoiseModel(readout=((0.03, 0.02),) * 6)
    ideal = ideal_expectations(c, [ZZ6])[0]
    job = EstimatorJob(c, (ZZ6,), (1, 3), readout_mitigation=True, total_shots_per_factor=None)
    res = run_mitigated_estimator(job, noise)
    for p in res[0].points:
        assert p.mean == pytest.approx(ideal, abs=1e-12)
    raw = run_mitigated_estimator(
        EstimatorJob(c, (ZZ6,), (1, 3), total_shots_per_factor=None), noise)
    assert abs(raw[0].points[0].mean - ideal) > 1e-3


def test_calibrated_confusion_recorded():
    c = chain(4, 1)
    noise = NoiseModel(readout=((0.05, 0.02),) * 4)
    job = EstimatorJob(c, (PauliString("ZZZZ"),), (1, 3), readout_mitigation=True,
                       calibration_shots=20000, seed=2)
    res = run_mitigated_estimator(job, noise)
    np.testing.assert_allclose(res.provenance["confusion"]["p01"], 0.05, atol=0.01)


def test_gate_free_circuit_keeps_requested_factors():
    c = Circuit(2, (x(0),))
    res = run_mitigated_estimator(
        EstimatorJob(c, (PauliString("ZI"),), (1, 3), total_shots_per_factor=None), NoiseModel(0.1))
    assert [p.lambda_eff for p in res[0].points] == [1.0, 3.0]
    assert res[0].zero_noise_value == pytest.approx(-1.0)


def test_underdetermined_fit_surfaced():
    job = EstimatorJob(chain(), (ZZ6,), (1, 3), extrapolation_models=("linear", "exponential"),
                       total_shots_per_factor=None)
    res = run_mitigated_estimator(job, NoiseModel(0.01))
    assert "linear" in res[0].fits
    assert "exponential" in res[0].fit_errors
    assert res.has_fit_errors


def test_cache_reuses_simulations():
    cache = SimulationCache()
    c = chain()
    job = EstimatorJob(c, (ZZ6, PauliString.z_at(6, 0)), (1, 3, 5))
    run_mitigated_estimator(job, NoiseModel(0.01), cache)
    first = cache.simulations
    assert first == 3
    run_mitigated_estimator(job, NoiseModel(0.01, readout=((0.02, 0.01),) * 6), cache)
    assert cache.simulations == first


def test_provenance_reproduces_seeds():
    job = EstimatorJob(chain(), (ZZ6,), (1, 1.2), fold_samples=2, num_twirls=2, seed=5)
    prov = run_mitigated_estimator(job, NoiseModel(0.01)).provenance
    assert prov["seed"] == 5
    assert prov["twirl_seeds"]["0,1,1"] == [5, 2, 0, 1, 1]
    assert len(prov["fold_plans"][1]) == 2
    assert sum(prov["shots_per_variant"]) == 8000


# -- studies (reduced sizes) ----------------------------------------------------------


def test_derive_seed_stable():
    assert studies.derive_seed(1, 2, 3) == studies.derive_seed(1, 2, 3)
    assert studies.derive_seed(1, 2, 3) != studies.derive_seed(1, 3, 2)


def test_fit_power_law_exact():
    a, beta = studies.fit_power_law([100, 1000, 10000], [0.3 / math.sqrt(s) for s in (100, 1000, 10000)])
    assert a == pytest.approx(0.3) and beta == pytest.approx(0.5)


def test_variance_reduction_pvalue():
    assert studies.variance_reduction_pvalue(0.2, 0.1, 100) < 1e-5
    assert studies.variance_reduction_pvalue(0.1, 0.1, 100) == pytest.approx(0.5)


def test_calibration_smoke():
    cells = studies.run_calibration_sweep(4, (0, 4), (0.001, 0.04), (1, 3, 5), 2000, 2, seed=1)
    assert len(cells) == 4
    assert cells[0].label == "L"
    assert all(v >= 0 for c in cells for v in c.rmse.values())
    again = studies.run_calibration_sweep(4, (0, 4), (0.001, 0.04), (1, 3, 5), 2000, 2, seed=1)
    assert cells == again
    with pytest.raises(ValueError):
        studies.run_calibration_sweep(4, (3,), (0.01,), (1, 3), 1000, 1, seed=1)


def test_shot_study_exact_mode_zero_sigma():
    rows = studies.run_shot_scaling_study(1, n=4, steps=2, error_probs=(0.01,),
                                          shot_list=(100, 1000, 10000), repetitions=3, exact=True)
    assert all(r.sigma == 0 for r in rows)


def test_partial_fold_smoke():
    rows = studies.run_partial_fold_variance_study(1, n=4, total_2q=(10,), sample_counts=(1, 3),
                                                   repetitions=4, shots=1000)
    assert [r.num_samples for r in rows] == [1, 3]
    assert all(r.std > 0 and math.isfinite(r.mean) for r in rows)
    # 6 gates at 1.1 rounds to zero folds: both points would sit at lambda_eff = 1
    with pytest.raises(ValueError, match="same fold count"):
        studies.run_partial_fold_variance_study(1, n=4, total_2q=(6,), repetitions=2)


def test_readout_and_twirl_smoke():
    ro = studies.run_readout_study(1, n=4, steps_list=(1, 2), repetitions=2, shots=2000)
    assert len(ro) == 2 and all(r.err_zne >= 0 for r in ro)
    tw = studies.run_twirl_study(1, n=4, steps_list=(1,), repetitions=2, shots=2000, twirl_counts=(0, 2))
    assert [r.num_twirls for r in tw] == [0, 2]


def test_benchmark_smoke():
    rows = studies.run_benchmark(1, n=4, steps_list=(1, 3), shots=4096, num_twirls=2)
    labels = {r.strategy for r in rows}
    assert {"no-mit", "RO+RC", "RO+RC+L", "RO+RC+Q", "RO+RC+E"} <= labels
    assert all(r.eps_avg >= 0 for r in rows)


# -- CLI --------------------------------------------------------------------


def test_cli_estimate_byte_identical(tmp_path):
    args = ["estimate", "--n", "4", "--steps", "2", "--depol-2q", "0.01", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = (tmp_path / d / "estimate.csv" for d in "ab")
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == "observable,ideal,kind,model,lambda_eff,value,stderr,flags"


def test_cli_harness_byte_identical(tmp_path):
    args = ["study-readout", "--seed", "4", "--n", "4", "--steps-list", "1,2", "--repetitions", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/study-readout.csv").read_bytes() == (tmp_path / "b/study-readout.csv").read_bytes()
    prov = json.loads((tmp_path / "a/study-readout.json").read_text())
    assert prov["config"]["seed"] == 4 and "version" in prov


def test_cli_circuit_file(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text(to_text(chain(4, 1)))
    assert main(["estimate", "--circuit", str(path), "--shots", "exact", "--out", str(tmp_path)]) == 0


def test_cli_exit_codes(tmp_path, capsys):
    out = ["--out", str(tmp_path)]
    assert main(["calibrate"] + out) == 2  # --seed is mandatory
    assert main(["estimate", "--noise-factors", "3,1"] + out) == 2
    assert main(["estimate", "--shots", "lots"] + out) == 2
    assert main(["estimate", "--circuit", str(tmp_path / "missing.txt")] + out) == 2
    assert main(["estimate", "--n", "4", "--steps", "1", "--noise-factors", "1",
                 "--models", "linear"] + out) == 3
    assert main(["estimate", "--config", str(tmp_path / "nope.ini")] + out) == 2


def test_cli_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[calibrate]\nseed = 7\nn = 4\ndepths = 0,2\nerror_probs = 0.01\n"
                   "noise_factors = 1,3,5\nshots = exact\nrepetitions = 1\n")
    assert main(["calibrate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["calibrate", "--config", str(cfg), "--depths", "0", "--out", str(tmp_path / "b")]) == 0
    rows_a = (tmp_path / "a/calibrate.csv").read_text().splitlines()
    rows_b = (tmp_path / "b/calibrate.csv").read_text().splitlines()
    assert rows_a[0] == "depth,error_prob,rmse_L,rmse_Q,rmse_E,label"
    assert len(rows_a) == 3 and len(rows_b) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[calibrate]\nseed = 1\ncolour = blue\n")
    assert main(["calibrate", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_extrapolation_error_type():
    assert issubclass(ExtrapolationError, ValueError)
