"""Monte-Carlo simulation of fastener engagement for three removal strategies.

The compliant nut-runner engages whenever the commanded lateral offset is
within the capture radius of the extension preset; the vertical offset is
absorbed by force control.  Strategy noise models are calibrated by
bisection so campaign success rates can be pinned to benchmark targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

STRATEGIES = ("taught-in", "one-shot-vision", "visual-servo")

NOMINAL_CONTACT_FORCE = 10.0  # N, informational


class CalibrationError(RuntimeError):
    """Target success rate not reachable for the given capture radius."""


@dataclass(frozen=True)
class EngagementModel:
    capture_radius: float = 0.004       # m, long (6 in) extension preset
    base_attempt_time: float = 6.0      # s per engage/unscrew cycle
    move_time: float = 1.0              # s per approach move

    def __post_init__(self):
        if self.capture_radius <= 0:
            raise ValueError("capture radius must be positive")

    @staticmethod
    def preset(extension: str) -> "EngagementModel":
        # long extension has more play, hence the wider spiral capture
        if extension == "long":
            return EngagementModel(capture_radius=0.004)
        if extension == "short":
            return EngagementModel(capture_radius=0.0015)
        raise ValueError(f"unknown extension preset {extension!r}")


@dataclass(frozen=True)
class StrategyNoise:
    strategy: str
    lateral_sigma: float                # m, Gaussian per-axis lateral error
    lateral_bias: tuple = (0.0, 0.0)
    fp_rate: float = 0.0                # phantom attempts per true fastener
    duplicate_rate: float = 0.0         # repeat attempts on removed fasteners
    extra_attempt_time: float = 0.0     # s added per attempt (scan / servo cost)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.lateral_sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not (0 <= self.fp_rate <= 1 and 0 <= self.duplicate_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if self.strategy == "taught-in" and (self.fp_rate > 0 or self.duplicate_rate > 0):
            raise ValueError("taught-in strategy produces no false positives")


@dataclass(frozen=True)
class CampaignResult:
    attempts: int
    successes: int
    false_positive_attempts: int
    duplicate_attempts: int
    success_rate: float
    duration_minutes: float


def attempt_removal(true_position, commanded_position, eng: EngagementModel) -> bool:
    """Engage iff the lateral (xy) offset is within the capture radius (closed)."""
    d = np.asarray(commanded_position, dtype=float)[:2] - np.asarray(true_position, dtype=float)[:2]
    return float(np.hypot(d[0], d[1])) <= eng.capture_radius


def run_campaign(n_fasteners: int, noise: StrategyNoise, eng: EngagementModel,
                 rng_seed: int, attempt_log: list | None = None) -> CampaignResult:
    """Single-shot attempt per true fastener plus configured phantom work.

    attempt_log, when given, collects (index, kind, lateral_offset, success).
    """
    if n_fasteners < 1:
        raise ValueError("need at least one fastener")
    rng = np.random.default_rng(rng_seed)
    attempt_time = eng.base_attempt_time + eng.move_time + noise.extra_attempt_time
    successes = 0
    fp_attempts = 0
    dup_attempts = 0
    attempts = 0
    for i in range(n_fasteners):
        offset = rng.normal(0.0, noise.lateral_sigma, 2) + np.asarray(noise.lateral_bias)
        attempts += 1
        lateral = float(np.hypot(offset[0], offset[1]))
        hit = lateral <= eng.capture_radius
        if hit:
            successes += 1
        if attempt_log is not None:
            attempt_log.append((i, "fastener", lateral, hit))
        if rng.random() < noise.fp_rate:
            fp_attempts += 1
            if attempt_log is not None:
                attempt_log.append((i, "false-positive", math.inf, False))
        if rng.random() < noise.duplicate_rate:
            dup_attempts += 1
            if attempt_log is not None:
                attempt_log.append((i, "duplicate", lateral, False))
    total_attempts = attempts + fp_attempts + dup_attempts
    duration = total_attempts * attempt_time / 60.0
    return CampaignResult(
        attempts=total_attempts,
        successes=successes,
        false_positive_attempts=fp_attempts,
        duplicate_attempts=dup_attempts,
        success_rate=successes / n_fasteners,
        duration_minutes=duration,
    )


def success_probability(sigma: float, r_cap: float) -> float:
    """Closed-form Rayleigh engagement probability P(||N(0, s^2 I_2)|| <= r)."""
    if sigma == 0.0:
        return 1.0
    return 1.0 - math.exp(-(r_cap * r_cap) / (2.0 * sigma * sigma))


def calibrate_noise(target_rate: float, eng: EngagementModel, n: int = 204,
                    seeds: int = 40, tol_pts: float = 1.0,
                    sigma_hi: float = 0.05) -> float:
    """Bisect sigma so the Monte-Carlo success rate matches target within tol.

    Monotonicity (rate nonincreasing in sigma over matched seeds) makes the
    bisection sound; the Rayleigh closed form provides the bracket.
    """
    if not 0.0 < target_rate < 1.0:
        if target_rate == 1.0:
            return 0.0
        raise CalibrationError("target rate must lie in (0, 1]")

    def mc_rate(sigma: float) -> float:
        noise = StrategyNoise("taught-in", lateral_sigma=sigma)
        rates = [run_campaign(n, noise, eng, seed).success_rate for seed in range(seeds)]
        return float(np.mean(rates))

    lo, hi = 0.0, sigma_hi
    if mc_rate(hi) > target_rate:
        raise CalibrationError(
            f"target {target_rate} unreachable below sigma={sigma_hi} for r_cap={eng.capture_radius}"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        r = mc_rate(mid)
        if abs(r - target_rate) <= tol_pts / 100.0:
            return mid
        if r > target_rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def default_strategies(eng: EngagementModel, servo_residual_sigma: float | None = None):
    """Noise presets for the three strategies, calibrated to benchmark targets.

    Sigmas come from the Rayleigh closed form (cross-checked by the
    Monte-Carlo bisection in tests); time constants are tuned to the
    benchmark duration scale.
    """
    def sigma_for(rate: float) -> float:
        return eng.capture_radius / math.sqrt(2.0 * math.log(1.0 / (1.0 - rate)))

    taught = StrategyNoise("taught-in", lateral_sigma=sigma_for(0.9706))
    one_shot = StrategyNoise("one-shot-vision", lateral_sigma=sigma_for(0.5735),
                             fp_rate=0.08, duplicate_rate=0.04, extra_attempt_time=0.8)
    servo_sigma = servo_residual_sigma if servo_residual_sigma is not None else sigma_for(0.8284)
    servo = StrategyNoise("visual-servo", lateral_sigma=servo_sigma,
                          fp_rate=0.08, duplicate_rate=0.04, extra_attempt_time=2.9)
    return {"taught-in": taught, "one-shot-vision": one_shot, "visual-servo": servo}
