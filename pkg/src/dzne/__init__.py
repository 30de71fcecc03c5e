"""Digital zero-noise extrapolation on a small-scale noisy simulator."""

__version__ = "0.1.0"
