"""A small calibration sweep: which extrapolator wins where?

Labels: L (linear), Q (quadratic), E (exponential), NF (nothing within 0.4).
The full-size sweep is ``dzne calibrate --seed 1``; this one takes seconds.

Run: python demos/03_calibration_sweep.py
"""

from __future__ import annotations

from dzne.pipeline.studies import label_counts, run_calibration_sweep

depths = (0, 8, 16, 24)
errors = (0.001, 0.01, 0.04)

for lams in ((1.0, 3.0, 5.0), (1.0, 1.1, 1.2)):
    cells = run_calibration_sweep(4, depths, errors, lams, shots=4000, repetitions=3, seed=5)
    grid = {(c.depth, c.error_prob): c.label for c in cells}
    print(f"noise factors {lams}")
    print("depth " + "".join(f"{p:>8}" for p in errors))
    for d in depths:
        print(f"{d:>5} " + "".join(f"{grid[d, p]:>8}" for p in errors))
    print("counts:", label_counts(cells), "\n")
