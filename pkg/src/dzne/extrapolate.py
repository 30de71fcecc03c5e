"""Zero-noise extrapolation fits and their diagnostics.

Three model families: linear, polynomial of fixed degree, and the
mono-exponential ``S + A exp(-lambda / L)``. All fits are weighted by
``1 / stderr^2`` unless some point has zero stderr (exact simulation), in which
case every point gets unit weight. Parameter covariances are propagated with
the sandwich ``B Sigma B^T`` so exact inputs give an exact zero stderr.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

LAMBDA_INDEPENDENT = "lambda_independent"
OUT_OF_RANGE = "out_of_range"
DEGENERATE_FIT = "degenerate_fit"

GAMMA_GRID = np.logspace(-3, 1, 60)
GOLDEN_RTOL = 1e-6
FLAT_RTOL = 1e-10

# short labels used by the calibration sweep
MODEL_LABELS = {"L": "linear", "Q": "poly2", "E": "exponential"}


class ExtrapolationError(ValueError):
    """Not enough distinct noise factors for the requested model."""


@dataclass(frozen=True)
class NoisePoint:
    lambda_eff: float
    mean: float
    stderr: float = 0.0
    shots: int = 0

    def __post_init__(self):
        if not self.lambda_eff >= 1.0:
            raise ValueError(f"lambda_eff must be >= 1, got {self.lambda_eff}")
        if not self.stderr >= 0.0:
            raise ValueError("stderr must be non-negative")
        if not -1.5 <= self.mean <= 1.5:
            raise ValueError(f"mean {self.mean} outside [-1.5, 1.5]")

    def to_dict(self) -> dict:
        return {"lambda_eff": self.lambda_eff, "mean": self.mean,
                "stderr": self.stderr, "shots": self.shots}


@dataclass(frozen=True)
class ExtrapolationFit:
    """A fitted model. ``params`` are ascending-power coefficients for the
    polynomial models and ``(S, A, L)`` for the exponential."""

    model: str
    params: tuple[float, ...]
    zero_noise_value: float
    zero_noise_stderr: float
    rss: float
    flags: frozenset[str] = field(default_factory=frozenset)
    fixed_shift: float | None = None

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.model == "exponential":
            s, a, length = self.params
            return s + a * np.exp(-lam / length)
        return np.polynomial.polynomial.polyval(lam, self.params)

    def with_flags(self, extra: Iterable[str]) -> "ExtrapolationFit":
        return ExtrapolationFit(self.model, self.params, self.zero_noise_value,
                                self.zero_noise_stderr, self.rss,
                                self.flags | frozenset(extra), self.fixed_shift)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": list(self.params),
            "zero_noise_value": self.zero_noise_value,
            "zero_noise_stderr": self.zero_noise_stderr,
            "rss": self.rss,
            "flags": sorted(self.flags),
            "fixed_shift": self.fixed_shift,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtrapolationFit":
        return cls(d["model"], tuple(d["params"]), d["zero_noise_value"],
                   d["zero_noise_stderr"], d["rss"], frozenset(d["flags"]),
                   d.get("fixed_shift"))


def _arrays(points: Sequence[NoisePoint]):
    lam = np.array([p.lambda_eff for p in points], dtype=float)
    y = np.array([p.mean for p in points], dtype=float)
    s = np.array([p.stderr for p in points], dtype=float)
    statistical = bool(np.all(s > 0))
    w = 1.0 / s**2 if statistical else np.ones_like(s)
    return lam, y, s, w, statistical


def _distinct(lam: np.ndarray) -> int:
    return len(np.unique(np.round(lam, 12)))


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray, s: np.ndarray):
    """Weighted least squares by QR. Returns (beta, cov, weighted rss)."""
    sw = np.sqrt(w)
    q, r = np.linalg.qr(x * sw[:, None])
    beta = np.linalg.solve(r, q.T @ (sw * y))
    # B maps data to coefficients: beta = B y
    b = np.linalg.solve(r, q.T * sw[None, :])
    cov = (b * s**2) @ b.T
    resid = y - x @ beta
    return beta, cov, float(np.sum(w * resid**2))


def fit_poly(points: Sequence[NoisePoint], degree: int) -> ExtrapolationFit:
    if degree < 1:
        raise ValueError("degree must be >= 1")
    lam, y, s, w, _ = _arrays(points)
    if _distinct(lam) < degree + 1:
        raise ExtrapolationError(
            f"degree {degree} fit needs {degree + 1} distinct noise factors, got {_distinct(lam)}"
        )
    x = np.vander(lam, degree + 1, increasing=True)
    beta, cov, rss = _wls(x, y, w, s)
    name = "linear" if degree == 1 else f"poly{degree}"
    return ExtrapolationFit(name, tuple(float(v) for v in beta), float(beta[0]),
                            math.sqrt(max(cov[0, 0], 0.0)), rss)


def fit_linear(points: Sequence[NoisePoint]) -> ExtrapolationFit:
    return fit_poly(points, 1)


def _exp_solve(gamma, lam, y, w, s, fixed_shift):
    e = np.exp(-gamma * lam)
    if fixed_shift is None:
        beta, _, rss = _wls(np.column_stack([np.ones_like(lam), e]), y, w, s)
        return float(beta[0]), float(beta[1]), rss
    beta, _, rss = _wls(e[:, None], y - fixed_shift, w, s)
    return float(fixed_shift), float(beta[0]), rss


def _golden(f, lo: float, hi: float, rtol: float) -> float:
    """Minimize ``f`` on ``[lo, hi]`` (log-spaced variable) by golden section."""
    g = (math.sqrt(5) - 1) / 2
    a, b = math.log(lo), math.log(hi)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while b - a > rtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(math.exp(d))
    return math.exp((a + b) / 2)


def fit_exponential(points: Sequence[NoisePoint], fixed_shift: float | None = None) -> ExtrapolationFit:
    """Fit ``S + A exp(-lambda / L)`` by variable projection over ``gamma = 1/L``.

    ``degenerate_fit`` is flagged when the decay rate is not identified: the
    rss is flat over the grid, the optimum sits on the grid edge, or (with
    statistical weights) no decay rate is rejected relative to the best one at
    95% confidence.
    """
    lam, y, s, w, statistical = _arrays(points)
    need = 2 if fixed_shift is not None else 3
    if _distinct(lam) < need:
        raise ExtrapolationError(f"exponential fit needs {need} distinct noise factors")

    def rss_at(gamma):
        return _exp_solve(gamma, lam, y, w, s, fixed_shift)[2]

    grid = np.array([rss_at(g) for g in GAMMA_GRID])
    i = int(np.argmin(grid))
    lo = GAMMA_GRID[max(i - 1, 0)]
    hi = GAMMA_GRID[min(i + 1, len(GAMMA_GRID) - 1)]
    gamma = _golden(rss_at, lo, hi, GOLDEN_RTOL * 1e-3)
    if rss_at(GAMMA_GRID[i]) < rss_at(gamma):
        gamma = float(GAMMA_GRID[i])
    shift, amp, rss = _exp_solve(gamma, lam, y, w, s, fixed_shift)

    flags = set()
    spread = grid.max() - grid.min()
    if spread <= FLAT_RTOL * max(grid.max(), 1e-300) or i in (0, len(GAMMA_GRID) - 1):
        flags.add(DEGENERATE_FIT)
    elif statistical and spread < stats.chi2.ppf(0.95, max(len(lam) - 1, 1)):
        flags.add(DEGENERATE_FIT)

    # delta-method covariance of (S, A, gamma) through the sandwich
    e = np.exp(-gamma * lam)
    cols = [e, -amp * lam * e]
    if fixed_shift is None:
        cols.insert(0, np.ones_like(lam))
    jac = np.column_stack(cols)
    info = jac.T @ (jac * w[:, None])
    b = np.linalg.pinv(info) @ (jac.T * w[None, :])
    cov = (b * s**2) @ b.T
    grad = np.zeros(jac.shape[1])
    grad[: 2 if fixed_shift is None else 1] = 1.0
    var = float(grad @ cov @ grad)
    stderr = math.sqrt(var) if np.isfinite(var) and var > 0 else 0.0
    return ExtrapolationFit("exponential", (shift, amp, 1.0 / gamma), shift + amp,
                            stderr, rss, frozenset(flags), fixed_shift)


def parse_model(spec: str) -> tuple[str, dict]:
    """Map ``linear | L | poly<k> | quadratic | Q | exponential[:shift] | E``."""
    s = spec.strip()
    if s in MODEL_LABELS:
        s = MODEL_LABELS[s]
    low = s.lower()
    if low == "linear":
        return "poly", {"degree": 1}
    if low == "quadratic":
        return "poly", {"degree": 2}
    if low.startswith("poly"):
        try:
            return "poly", {"degree": int(low[4:].lstrip(":"))}
        except ValueError:
            raise ValueError(f"bad polynomial model {spec!r}") from None
    if low.startswith("exponential"):
        rest = low[len("exponential"):].lstrip(":")
        return "exponential", {"fixed_shift": float(rest) if rest else None}
    raise ValueError(f"unknown extrapolation model {spec!r}")


def fit_model(points: Sequence[NoisePoint], spec: str) -> ExtrapolationFit:
    """Fit the named model and attach the stability flags."""
    kind, kw = parse_model(spec)
    fit = fit_poly(points, kw["degree"]) if kind == "poly" else fit_exponential(points, kw["fixed_shift"])
    return fit.with_flags(stability_diagnostics(points, fit))


def stability_diagnostics(points: Sequence[NoisePoint], fit: ExtrapolationFit) -> set[str]:
    """``lambda_independent`` if a constant describes the data (95% chi-square),
    ``out_of_range`` if the estimate leaves ``[-1, 1]`` by more than 3 stderr."""
    flags = set(fit.flags & {DEGENERATE_FIT})
    lam, y, s, _, statistical = _arrays(points)
    if len(y) >= 2:
        if statistical:
            w = 1.0 / s**2
            ybar = np.sum(w * y) / np.sum(w)
            if np.sum(w * (y - ybar) ** 2) < stats.chi2.ppf(0.95, len(y) - 1):
                flags.add(LAMBDA_INDEPENDENT)
        elif np.ptp(y) <= 1e-12:
            flags.add(LAMBDA_INDEPENDENT)
    if abs(fit.zero_noise_value) > 1.0 + 3.0 * fit.zero_noise_stderr:
        flags.add(OUT_OF_RANGE)
    return flags


def select_model(
    candidates: Sequence[tuple[str, float]],
    preference_threshold: float = 0.001,
    nf_threshold: float = 0.4,
    best_abs_error: float | None = None,
) -> str:
    """Pick the simplest adequate model; ``candidates`` go from simple to complex.

    Returns ``"NF"`` when even the best model misses by more than
    ``nf_threshold``. Non-finite RMSEs (failed fits) never win.
    """
    if not candidates:
        raise ValueError("no candidate models")
    errs = [float(r) if r is not None and np.isfinite(r) else math.inf for _, r in candidates]
    if best_abs_error is None:
        best_abs_error = min(errs)
    if not best_abs_error <= nf_threshold:
        return "NF"
    label, current = candidates[0][0], errs[0]
    for (name, _), err in zip(candidates[1:], errs[1:]):
        if current - err > preference_threshold:
            label, current = name, err
    return label
