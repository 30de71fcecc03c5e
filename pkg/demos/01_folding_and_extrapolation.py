"""Fold a spin chain to several noise levels and extrapolate back to zero noise.

Run: python demos/01_folding_and_extrapolation.py
"""

from __future__ import annotations

import math

import numpy as np

from dzne.circuits import PauliString, build_spin_chain
from dzne.extrapolate import NoisePoint, fit_model
from dzne.folding import apply_fold, plan_fold
from dzne.sim import NoiseModel, exact_expectation, simulate

# six spins, four Floquet steps, coupling 0.05 pi
circ = build_spin_chain(6, 4, theta1=0.05 * math.pi, disorder_seed=7)
obs = PauliString.z_all(6)
noise = NoiseModel(depol_2q=0.01)

ideal = exact_expectation(simulate(circ), obs)
print(f"{circ.num_two_qubit} two-qubit gates, ideal <Z^6> = {ideal:.4f}")

# fold every gate (odd integers) or a random subset (anything in between)
points = []
for lam in (1, 1.4, 3, 5):
    plan = plan_fold(circ, lam, seed=1)
    folded = apply_fold(circ, plan)
    value = exact_expectation(simulate(folded, noise), obs)
    points.append(NoisePoint(plan.lambda_eff, value))
    print(f"lambda {lam:>4} -> lambda_eff {plan.lambda_eff:.3f}, "
          f"{folded.num_two_qubit:>3} gates, <Z^6> = {value:.4f}")

# the folded circuits are still the same unitary
folded = apply_fold(circ, plan_fold(circ, 3, seed=0))
print("noiseless folded == original:", np.allclose(simulate(folded).data, simulate(circ).data))

for model in ("linear", "poly2", "exponential"):
    fit = fit_model(points, model)
    print(f"{model:>12}: E* = {fit.zero_noise_value:.4f} "
          f"(error {fit.zero_noise_value - ideal:+.4f}) flags={sorted(fit.flags)}")
