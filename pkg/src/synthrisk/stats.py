"""Risk quantification: Wilson intervals, attack strength, normalized risk,
quality cuts, and the singling-out size-correction model.

All functions are pure and safe to call from any worker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm


@dataclass(frozen=True)
class RiskEstimate:
    """Success-rate estimate with a Wilson score confidence interval."""

    rate: float
    delta: float
    alpha: float
    n_attacks: float
    n_success: float

    @property
    def ci(self) -> tuple[float, float]:
        """Interval [rate - delta, rate + delta] clipped to [0, 1]."""
        return (max(0.0, self.rate - self.delta),
                min(1.0, self.rate + self.delta))


@dataclass(frozen=True)
class AttackStrength:
    """Excess success of the main attack over the uninformed baseline."""

    value: float
    delta: float
    failed: bool  # true iff the baseline matched or beat the main attack


@dataclass(frozen=True)
class PrivacyRisk:
    """Excess success on training vs control targets, normalized.

    `value` is the headline risk clamped to [0, 1]; `raw` keeps the
    unclamped value (which can be negative). `ci` is the first-order
    propagated interval around `raw`, clipped to [0, 1] for reporting.
    """

    value: float
    raw: float
    delta: float
    ci: tuple[float, float]
    excluded: bool = False
    exclusion_reason: str | None = None  # "failed_attack" | "control_rate_cut"


def wilson(n_success: float, n_attacks: float, alpha: float = 0.95) -> RiskEstimate:
    """Wilson score estimate of a Bernoulli success rate.

    rate  = (N_S + z^2/2) / (N_A + z^2)
    delta = z / (N_A + z^2) * sqrt(N_S (N_A - N_S) / N_A + z^2/4)

    where z is the two-sided normal quantile for confidence `alpha`.
    `n_success` may be fractional (rescaled success counts).
    """
    if n_attacks < 1:
        raise ValueError(f"n_attacks must be >= 1, got {n_attacks}")
    if not 0 <= n_success <= n_attacks:
        raise ValueError(
            f"n_success must be in [0, {n_attacks}], got {n_success}"
        )
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    z = float(norm.ppf(0.5 + alpha / 2.0))
    z2 = z * z
    rate = (float(n_success) + z2 / 2.0) / (n_attacks + z2)
    delta = (z / (n_attacks + z2)) * math.sqrt(
        n_success * (n_attacks - n_success) / n_attacks + z2 / 4.0
    )
    return RiskEstimate(rate, delta, alpha, float(n_attacks), float(n_success))


def strength(main: RiskEstimate, naive: RiskEstimate) -> AttackStrength:
    """Attack strength s = r_train - r_naive with propagated uncertainty.

    The attack has failed (results void of meaning) when the naive baseline
    is at least as successful as the main attack.
    """
    if main.alpha != naive.alpha:
        raise ValueError("estimates have different confidence levels")
    s = main.rate - naive.rate
    delta = math.hypot(main.delta, naive.delta)
    return AttackStrength(s, delta, failed=naive.rate >= main.rate)


def risk(main: RiskEstimate, control: RiskEstimate) -> PrivacyRisk:
    """Privacy risk R = (r_train - r_control) / (1 - r_control).

    The confidence interval is first-order error propagation of the two
    Wilson half-widths. Raises if r_control = 1 (risk undefined).
    """
    if control.rate >= 1.0:
        raise ValueError("risk is undefined when the control rate is 1")
    denom = 1.0 - control.rate
    raw = (main.rate - control.rate) / denom
    d_main = main.delta / denom
    d_control = (main.rate - 1.0) * control.delta / (denom * denom)
    delta = math.hypot(d_main, d_control)
    ci = (max(0.0, raw - delta), min(1.0, raw + delta))
    return PrivacyRisk(value=min(max(raw, 0.0), 1.0), raw=raw,
                       delta=delta, ci=ci)


def quality_cut(control: RiskEstimate, threshold: float = 0.9) -> bool:
    """True (exclude the setting) iff the control rate exceeds the threshold.

    When the control attack already succeeds almost always, the residual
    record-level risk is too small to measure at the configured number of
    attacks.
    """
    return control.rate > threshold


def so_success_curve(w: float, n) -> float | np.ndarray:
    """Probability that a predicate of weight at most `w` isolates one record
    in a population of size n, integrated over the weight:

        integral_0^w n u (1-u)^(n-1) du
          = 1/(n+1) - w (1-w)^n - (1-w)^(n+1) / (n+1)

    Accepts a scalar or array `n`; evaluated in log space for stability.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must be in [0, 1], got {w}")
    n = np.asarray(n, dtype=np.float64)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    if w == 1.0:
        out = 1.0 / (n + 1.0)
    else:
        log1mw = np.log1p(-w)
        pow_n = np.exp(n * log1mw)
        pow_n1 = np.exp((n + 1.0) * log1mw)
        out = 1.0 / (n + 1.0) - w * pow_n - pow_n1 / (n + 1.0)
    out = np.maximum(out, 0.0)  # guard tiny negative round-off
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CorrectionModel:
    """Fitted model S(n) = amplitude * so_success_curve(effective_weight, n)
    for the expected number of predicates singling out in a population of
    size n."""

    amplitude: float
    effective_weight: float
    fit_residual: float
    samples: tuple[tuple[int, float], ...] = field(repr=False)
    degenerate: bool = False

    def expected_successes(self, n: float) -> float:
        return self.amplitude * so_success_curve(self.effective_weight, n)


def _optimal_amplitude(g: np.ndarray, m: np.ndarray) -> float:
    gg = float(g @ g)
    if gg <= 0.0:
        return 0.0
    return max(0.0, float(g @ m) / gg)


def fit_correction_model(
    samples: Sequence[tuple[int, float]]
) -> CorrectionModel:
    """Least-squares fit of S(n) to (population size, success count) samples.

    The model is linear in the amplitude, so the fit scans a log grid over
    the effective weight with the closed-form optimal amplitude at each grid
    point, then refines the best point by bounded local descent. An all-zero
    sample set gives amplitude 0 with the model flagged as degenerate.
    """
    samples = tuple((int(n), float(m)) for n, m in samples)
    if len({n for n, _ in samples}) < 2:
        raise ValueError("need samples at >= 2 distinct population sizes")
    if any(m < 0 for _, m in samples):
        raise ValueError("success counts must be non-negative")
    ns = np.array([n for n, _ in samples], dtype=np.float64)
    ms = np.array([m for _, m in samples], dtype=np.float64)

    if np.all(ms == 0.0):
        return CorrectionModel(0.0, 0.0, 0.0, samples, degenerate=True)

    def sse(log_w: float) -> float:
        g = so_success_curve(math.exp(log_w), ns)
        a = _optimal_amplitude(g, ms)
        r = ms - a * g
        return float(r @ r)

    grid = np.log(np.geomspace(1e-8, 1.0, 161))
    errors = [sse(lw) for lw in grid]
    best = int(np.argmin(errors))
    lo = grid[max(0, best - 1)]
    hi = grid[min(len(grid) - 1, best + 1)]
    if hi > lo:
        res = minimize_scalar(sse, bounds=(lo, hi), method="bounded")
        log_w = float(res.x) if res.fun <= errors[best] else float(grid[best])
    else:
        log_w = float(grid[best])
    w = math.exp(log_w)
    g = so_success_curve(w, ns)
    a = _optimal_amplitude(g, ms)
    resid = ms - a * g
    rms = math.sqrt(float(resid @ resid) / len(samples))
    return CorrectionModel(a, w, rms, samples, degenerate=a == 0.0)


def scale_control_successes(
    m_control: float, model: CorrectionModel, n_train: int, n_control: int
) -> float:
    """Rescale control singling-out successes to the training-set size:

        m~ = m_control * S(n_train) / S(n_control)

    Exactly the identity when the sizes agree, and 0 when m_control is 0.
    Raises if S(n_control) = 0 (degenerate model).
    """
    if n_train < 1 or n_control < 1:
        raise ValueError("population sizes must be >= 1")
    if m_control == 0:
        return 0.0
    if n_train == n_control:
        return float(m_control)
    s_control = model.expected_successes(n_control)
    if s_control <= 0.0:
        raise ValueError(
            "correction model predicts no successes at the control size;"
            " cannot rescale"
        )
    return float(m_control) * model.expected_successes(n_train) / s_control
