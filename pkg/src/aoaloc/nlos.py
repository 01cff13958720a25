"""Randomized outlier suppression and bootstrap-failure analytics.

The suppression algorithm greedily grows a set of mutually consistent
measurements from a random bootstrap pair: at each step the unprocessed
measurement most consistent with the current estimate is tentatively
aggregated and kept only if every aggregated measurement's angular error
stays below the clip threshold. Repeating from several random seeds and
keeping the most likely surviving candidate approaches the robust ML
estimator at linear per-run complexity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AllRunsPruned,
    DegenerateBootstrap,
    DegenerateRange,
    InvalidAlpha,
    NoViablePair,
)
from .geometry import CartesianEstimate, Point2, ReceiverPose, angular_error, true_bearing
from .ml import robust_loglik
from .models import AoaMeasurement, gaussian_truncation_norm
from .sequential import (
    _aggregate_one,
    bootstrap_estimate,
    qualifying_pairs,
    receivers_by_id,
)


@dataclass(frozen=True)
class SuppressionConfig:
    """Knobs for robust localization.

    theta_max and num_seeds override the values otherwise derived from
    alpha_max / target_pfail. field_radius, when set, prunes candidate
    estimates outside the disc of that radius centered at the origin.
    """

    alpha_max: float = 0.5
    target_pfail: float = 1e-3
    num_seeds: Optional[int] = None
    theta_max: Optional[float] = None
    field_radius: Optional[float] = None
    bootstrap_min_separation: float = 0.5
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.alpha_max < 1.0:
            raise ValueError(f"alpha_max must lie in (0, 1), got {self.alpha_max}")
        if not 0.0 < self.target_pfail <= 1.0:
            raise ValueError(f"target_pfail must lie in (0, 1], got {self.target_pfail}")
        if self.num_seeds is not None and self.num_seeds < 1:
            raise ValueError(f"num_seeds must be >= 1, got {self.num_seeds}")


@dataclass(frozen=True)
class RunResult:
    """One candidate localization from a single suppression run."""

    estimate: CartesianEstimate
    inliers: frozenset[tuple[int, int]]  # (receiver_id, path_index)
    ml_cost: float  # negative mixture log-likelihood; lower is better
    pruned: bool = False


def compute_theta_max(sigma: float, alpha: float) -> float:
    """Clip threshold separating plausible LOS errors from outliers.

    Crossing point of the clean and outlier mixture components:
    Theta^2 = 2 sigma^2 log(sqrt(pi) (1-alpha) / (sqrt(2) sigma alpha Z))
    with Z the Gaussian truncation normalizer. Values above pi behave as
    unbounded (no angular error can exceed pi); alpha -> 0 drives the
    threshold to infinity.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    z = gaussian_truncation_norm(sigma)
    arg = math.sqrt(math.pi) * (1.0 - alpha) / (math.sqrt(2.0) * sigma * alpha * z)
    if arg <= 1.0:
        return 0.0
    return sigma * math.sqrt(2.0 * math.log(arg))


def _thresholds(measurements, theta_max, alpha_max) -> list[float]:
    if theta_max is None:
        return [compute_theta_max(m.sigma, alpha_max) for m in measurements]
    if isinstance(theta_max, (int, float)):
        return [float(theta_max)] * len(measurements)
    thr = [float(t) for t in theta_max]
    if len(thr) != len(measurements):
        raise ValueError("need one threshold per measurement")
    return thr


def suppression_run(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    seed_pair: tuple[int, int],
    theta_max: float | Sequence[float],
    min_separation: float = 0.5,
    cost_alpha: float = 0.5,
) -> RunResult:
    """One pass of sequential aggregation with outlier suppression.

    `seed_pair` holds measurement indices from distinct receivers. At each
    step the remaining measurement with the smallest angular error to the
    current estimate is tentatively aggregated; the candidate is kept only if
    all aggregated measurements stay below their thresholds at the candidate
    location. A measurement is skipped outright (never a candidate) once its
    receiver already contributed a different path to the inlier set.
    """
    thresholds = _thresholds(measurements, theta_max, cost_alpha)
    by_id = receivers_by_id(receivers)
    i, j = int(seed_pair[0]), int(seed_pair[1])
    est = bootstrap_estimate(measurements[i], measurements[j], receivers, min_separation)
    inliers = [i, j]
    inlier_receivers = {measurements[i].receiver_id, measurements[j].receiver_id}
    remaining = [k for k in range(len(measurements)) if k not in (i, j)]

    def error_at(k: int, point: Point2) -> float:
        rec = by_id[measurements[k].receiver_id]
        try:
            return angular_error(measurements[k].angle_global, true_bearing(rec, point))
        except DegenerateRange:
            return math.pi

    while remaining:
        remaining = [k for k in remaining if measurements[k].receiver_id not in inlier_receivers]
        if not remaining:
            break
        k = min(
            remaining,
            key=lambda q: (
                error_at(q, est.mean),
                measurements[q].receiver_id,
                measurements[q].path_index,
            ),
        )
        remaining.remove(k)
        m = measurements[k]
        try:
            candidate = _aggregate_one(est, m, by_id[m.receiver_id])
        except DegenerateRange:
            continue
        if all(error_at(l, candidate.mean) < thresholds[l] for l in inliers + [k]):
            est = candidate
            inliers.append(k)
            inlier_receivers.add(m.receiver_id)

    cost = -robust_loglik(est.mean, measurements, by_id, cost_alpha)
    inlier_keys = frozenset(
        (measurements[k].receiver_id, measurements[k].path_index) for k in inliers
    )
    return RunResult(est, inlier_keys, cost, pruned=False)


def suppression_candidates(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    config: SuppressionConfig,
    feasibility: Callable[[Point2], bool] | None = None,
) -> list[RunResult]:
    """All randomized suppression runs, each flagged pruned/kept.

    Seed pairs are drawn without replacement from the qualifying pairs. A
    candidate is pruned when its estimate falls outside the configured field
    disc or fails the optional feasibility predicate.
    """
    if len(measurements) < 2:
        raise NoViablePair("need at least two measurements")
    thresholds = _thresholds(measurements, config.theta_max, config.alpha_max)
    pairs = qualifying_pairs(measurements, config.bootstrap_min_separation)
    if not pairs:
        raise NoViablePair("no qualifying seed pair")
    num = config.num_seeds
    if num is None:
        num = choose_num_seeds(len(measurements), config.alpha_max, config.target_pfail)
    rng = np.random.default_rng(config.seed)
    chosen = [pairs[t] for t in rng.permutation(len(pairs))[: min(num, len(pairs))]]
    results = []
    for pair in chosen:
        try:
            run = suppression_run(
                measurements,
                receivers,
                pair,
                thresholds,
                config.bootstrap_min_separation,
                cost_alpha=config.alpha_max,
            )
        except DegenerateBootstrap:
            continue
        pruned = False
        if config.field_radius is not None:
            if math.hypot(run.estimate.mean.x, run.estimate.mean.y) > config.field_radius:
                pruned = True
        if feasibility is not None and not feasibility(run.estimate.mean):
            pruned = True
        results.append(replace(run, pruned=pruned))
    return results


def robust_localize(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    config: SuppressionConfig,
    feasibility: Callable[[Point2], bool] | None = None,
) -> RunResult:
    """Best surviving suppression candidate by mixture likelihood."""
    candidates = suppression_candidates(measurements, receivers, config, feasibility)
    survivors = [r for r in candidates if not r.pruned]
    if not survivors:
        raise AllRunsPruned(f"all {len(candidates)} runs pruned or degenerate")
    return min(survivors, key=lambda r: r.ml_cost)


def _pair_counts(n: int, alpha: float) -> tuple[int, int]:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 <= alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in [0, 1), got {alpha}")
    total = math.comb(n, 2)
    num_los = math.floor((1.0 - alpha) * n + 1e-9)
    bad = total - math.comb(num_los, 2)
    return total, bad


def bootstrap_failure_prob(n: int, alpha: float, m: int) -> float:
    """Probability that every one of `m` distinct seed pairs contains at
    least one outlier receiver: C(K, m)/C(P, m), computed as the telescoping
    product prod_k (K-k)/(P-k); zero for m > K."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    total, bad = _pair_counts(n, alpha)
    if m > bad:
        return 0.0
    prob = 1.0
    for k in range(m):
        prob *= (bad - k) / (total - k)
    return prob


def failure_prob_bounds(n: int, alpha: float, m: int) -> tuple[float, float]:
    """Sandwich bounds ((K-m+1)/(P-m+1))^m <= exact <= (K/P)^m, for m <= K."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    total, bad = _pair_counts(n, alpha)
    if m > bad:
        raise ValueError(f"bounds hold only for m <= {bad}, got {m}")
    lower = ((bad - m + 1) / (total - m + 1)) ** m
    upper = (bad / total) ** m
    return lower, upper


def choose_num_seeds(n: int, alpha: float, target_pfail: float, mode: str = "exact") -> int:
    """Number of randomized seeds needed for a target bootstrap-failure rate.

    "exact" returns the smallest M with bootstrap_failure_prob <= target;
    "bound" applies the asymptotic form floor(log target / log(1-(1-alpha)^2))
    (clamped to at least 1).
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < target_pfail <= 1.0:
        raise ValueError(f"target_pfail must lie in (0, 1], got {target_pfail}")
    if mode == "bound":
        denom = math.log(1.0 - (1.0 - alpha) ** 2)
        return max(1, math.floor(math.log(target_pfail) / denom))
    if mode != "exact":
        raise ValueError(f"mode must be 'exact' or 'bound', got {mode!r}")
    total, bad = _pair_counts(n, alpha)
    prob = 1.0
    m = 0
    while True:
        factor = (bad - m) / (total - m) if m < bad else 0.0
        prob *= factor
        m += 1
        if prob <= target_pfail:
            return m
