"""Sequential LOS localization: bootstrap, LMMSE aggregation, range fusion.

The estimator keeps a source location estimate (SLE) with a 2x2 error
covariance (ECM). Aggregation transforms the running cartesian estimate into
the measuring receiver's polar frame, applies a scalar LMMSE bearing update
(or a joint range+bearing fusion), and transforms back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateBootstrap, DegenerateRange, NoViablePair, SingularCovariance
from .geometry import (
    CartesianEstimate,
    Point2,
    PolarEstimate,
    ReceiverPose,
    Sym2,
    angular_error,
    cart_to_polar,
    pol_to_cart_cov,
    polar_to_cart,
    true_bearing,
    wrap_angle,
)
from .models import AoaMeasurement, RangeMeasurement

# Effectively-infinite bearing variance for range-only fusion steps.
_HUGE_VARIANCE = 1e12


@dataclass(frozen=True)
class SequentialConfig:
    """Knobs for the sequential estimator.

    combine_order lists measurement indices to aggregate after the bootstrap
    pair; when None a seeded-random permutation is used. bootstrap_pair, when
    set, overrides the random qualifying-pair draw.
    """

    bootstrap_min_separation: float = 0.5
    combine_order: Optional[Sequence[int]] = None
    bootstrap_pair: Optional[tuple[int, int]] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.bootstrap_min_separation < 0.5 * math.pi:
            raise ValueError(
                f"bootstrap_min_separation must be in (0, pi/2), got {self.bootstrap_min_separation}"
            )


@dataclass(frozen=True)
class LocalizationResult:
    """One completed localization: estimate plus bookkeeping."""

    estimate: CartesianEstimate
    used_measurements: tuple[int, ...]  # receiver ids in aggregation order
    ml_cost: float  # sum of (bearing residual / sigma)^2 at the SLE; lower is better
    status: str = "ok"


def receivers_by_id(receivers: Sequence[ReceiverPose]) -> dict[int, ReceiverPose]:
    out: dict[int, ReceiverPose] = {}
    for rec in receivers:
        if rec.id in out:
            raise ValueError(f"duplicate receiver id {rec.id}")
        out[rec.id] = rec
    return out


def lmmse_aoa_update(
    prior: PolarEstimate, measured_bearing: float, measurement_variance: float
) -> PolarEstimate:
    """Scalar-bearing LMMSE update of a polar-frame estimate.

    `measured_bearing` is the AoA in the prior's polar frame (angle from the
    global +x axis); the innovation is wrapped. The posterior bearing variance
    strictly decreases for any finite measurement variance.
    """
    if not measurement_variance > 0:
        raise ValueError(f"measurement_variance must be > 0, got {measurement_variance}")
    cov = prior.cov
    denom = cov.a22 + measurement_variance
    innovation = wrap_angle(measured_bearing - prior.bearing)
    gain_r = cov.a12 / denom
    gain_t = cov.a22 / denom
    new_range = prior.range + gain_r * innovation
    new_bearing = wrap_angle(prior.bearing + gain_t * innovation)
    new_cov = Sym2(
        cov.a11 - cov.a12 * cov.a12 / denom,
        measurement_variance * cov.a12 / denom,
        cov.a22 * measurement_variance / denom,
    )
    # The linearized range update can leave its validity region under gross
    # outliers; clamp so downstream transforms stay defined.
    return PolarEstimate(max(new_range, 0.0), new_bearing, new_cov)


def fuse_range_update(prior: PolarEstimate, measurement: PolarEstimate) -> PolarEstimate:
    """Joint (range, bearing) fusion: K = prior_cov (prior_cov + meas_cov)^-1.

    Equivalent to adding information matrices; the bearing innovation is
    wrapped. Raises SingularCovariance when the innovation covariance is not
    invertible.
    """
    p = prior.cov
    m = measurement.cov
    s11 = p.a11 + m.a11
    s12 = p.a12 + m.a12
    s22 = p.a22 + m.a22
    det = s11 * s22 - s12 * s12
    if det < 1e-15:
        raise SingularCovariance(f"innovation covariance determinant {det} below 1e-15")
    # K = p @ inv(S)
    k11 = (p.a11 * s22 - p.a12 * s12) / det
    k12 = (-p.a11 * s12 + p.a12 * s11) / det
    k21 = (p.a12 * s22 - p.a22 * s12) / det
    k22 = (-p.a12 * s12 + p.a22 * s11) / det
    dr = measurement.range - prior.range
    dt = wrap_angle(measurement.bearing - prior.bearing)
    new_range = max(prior.range + k11 * dr + k12 * dt, 0.0)
    new_bearing = wrap_angle(prior.bearing + k21 * dr + k22 * dt)
    # posterior covariance (I - K) @ prior_cov, symmetrized
    c11 = (1.0 - k11) * p.a11 - k12 * p.a12
    c12 = (1.0 - k11) * p.a12 - k12 * p.a22
    c21 = -k21 * p.a11 + (1.0 - k22) * p.a12
    c22 = -k21 * p.a12 + (1.0 - k22) * p.a22
    return PolarEstimate(new_range, new_bearing, Sym2(c11, 0.5 * (c12 + c21), c22))


def pair_separation(angle_a: float, angle_b: float) -> float:
    """Angular distance of the difference (a - b) from the set {0, pi, -pi}."""
    d = abs(wrap_angle(angle_a - angle_b))
    return min(d, math.pi - d)


def _measurement_sort_key(measurements, idx):
    m = measurements[idx]
    return (m.receiver_id, m.path_index, idx)


def qualifying_pairs(
    measurements: Sequence[AoaMeasurement], min_separation: float
) -> list[tuple[int, int]]:
    """Index pairs from distinct receivers whose bearing difference is
    sufficiently far from 0 and pi, ordered by (receiver_id, path_index)."""
    order = sorted(range(len(measurements)), key=lambda i: _measurement_sort_key(measurements, i))
    pairs = []
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            i, j = order[a], order[b]
            if measurements[i].receiver_id == measurements[j].receiver_id:
                continue
            sep = pair_separation(measurements[i].angle_global, measurements[j].angle_global)
            if sep >= min_separation:
                pairs.append((i, j))
    return pairs


def select_bootstrap_pair(
    measurements: Sequence[AoaMeasurement], config: SequentialConfig | None = None
) -> tuple[int, int]:
    """Deterministic bootstrap pair: the first qualifying pair by lowest id."""
    config = config or SequentialConfig()
    if len(measurements) < 2:
        raise NoViablePair("need at least two measurements")
    pairs = qualifying_pairs(measurements, config.bootstrap_min_separation)
    if not pairs:
        raise NoViablePair(
            f"no pair separated by >= {config.bootstrap_min_separation} rad from 0/pi"
        )
    return pairs[0]


def bootstrap_estimate(
    m1: AoaMeasurement,
    m2: AoaMeasurement,
    receivers: Sequence[ReceiverPose],
    min_separation: float = 0.5,
) -> CartesianEstimate:
    """Triangulate two AoA measurements into an initial SLE and ECM.

    The range from receiver 1 follows the two-ray intersection formula; the
    ECM propagates the two (conditionally independent) bearing variances
    through the intersection Jacobian, assembled in receiver 1's polar frame
    and mapped to cartesian.
    """
    if m1.receiver_id == m2.receiver_id:
        raise ValueError("bootstrap measurements must come from distinct receivers")
    by_id = receivers_by_id(receivers)
    r1 = by_id[m1.receiver_id].position
    r2 = by_id[m2.receiver_id].position
    t1 = m1.angle_global
    t2 = m2.angle_global
    s = math.sin(t1 - t2)
    if abs(s) < math.sin(min_separation):
        raise DegenerateBootstrap(
            f"|sin(theta1 - theta2)| = {abs(s):.3g} below sin({min_separation})"
        )
    c = math.cos(t1 - t2)
    range1 = ((r2.y - r1.y) * math.cos(t2) - (r2.x - r1.x) * math.sin(t2)) / s
    range2 = -((r1.y - r2.y) * math.cos(t1) - (r1.x - r2.x) * math.sin(t1)) / s
    mean = Point2(r1.x + range1 * math.cos(t1), r1.y + range1 * math.sin(t1))
    var1 = m1.sigma**2
    var2 = m2.sigma**2
    # d(range1) = (-range1*c*dtheta1 + range2*dtheta2)/s, d(bearing1) = dtheta1
    g11 = -range1 * c / s
    g12 = range2 / s
    pol_cov = Sym2(g11 * g11 * var1 + g12 * g12 * var2, g11 * var1, var1)
    return CartesianEstimate(mean, pol_to_cart_cov(range1, t1, pol_cov))


def los_cost(
    point: Point2,
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose] | Mapping[int, ReceiverPose],
) -> float:
    """Sum of squared bearing residuals over sigma^2 at `point` (lower is better).

    A point coinciding with a receiver has no defined bearing there; that
    term gets the worst-case residual pi so degenerate estimates score badly
    instead of raising.
    """
    by_id = receivers if isinstance(receivers, Mapping) else receivers_by_id(receivers)
    total = 0.0
    for m in measurements:
        try:
            resid = angular_error(m.angle_global, true_bearing(by_id[m.receiver_id], point))
        except DegenerateRange:
            resid = math.pi
        total += (resid / m.sigma) ** 2
    return total


def _aggregate_one(
    est: CartesianEstimate,
    measurement: AoaMeasurement,
    receiver: ReceiverPose,
    range_measurement: RangeMeasurement | None = None,
) -> CartesianEstimate:
    """Fold one receiver's measurement(s) into the running cartesian estimate."""
    prior = cart_to_polar(receiver, est)
    if range_measurement is None:
        post = lmmse_aoa_update(prior, measurement.angle_global, measurement.sigma**2)
    else:
        obs = PolarEstimate(
            range_measurement.range,
            wrap_angle(measurement.angle_global),
            Sym2(range_measurement.variance, 0.0, measurement.sigma**2),
        )
        post = fuse_range_update(prior, obs)
    return polar_to_cart(receiver, post)


def _fuse_range_only(
    est: CartesianEstimate, range_measurement: RangeMeasurement, receiver: ReceiverPose
) -> CartesianEstimate:
    """Fuse a range measurement alone (bearing channel made uninformative)."""
    prior = cart_to_polar(receiver, est)
    obs = PolarEstimate(
        range_measurement.range,
        prior.bearing,
        Sym2(range_measurement.variance, 0.0, _HUGE_VARIANCE),
    )
    return polar_to_cart(receiver, fuse_range_update(prior, obs))


def _run_sequential(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    pair: tuple[int, int],
    order: Sequence[int],
    min_separation: float,
    ranges: Mapping[int, RangeMeasurement] | None,
) -> LocalizationResult:
    by_id = receivers_by_id(receivers)
    i, j = pair
    est = bootstrap_estimate(measurements[i], measurements[j], receivers, min_separation)
    if ranges:
        for k in (i, j):
            rid = measurements[k].receiver_id
            if rid in ranges:
                est = _fuse_range_only(est, ranges[rid], by_id[rid])
    for k in order:
        m = measurements[k]
        rng_meas = ranges.get(m.receiver_id) if ranges else None
        est = _aggregate_one(est, m, by_id[m.receiver_id], rng_meas)
    used = tuple(
        measurements[k].receiver_id for k in (*pair, *order)
    )
    return LocalizationResult(est, used, los_cost(est.mean, measurements, by_id))


def sequential_localize(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    config: SequentialConfig | None = None,
    ranges: Mapping[int, RangeMeasurement] | None = None,
) -> LocalizationResult:
    """Bootstrap from a qualifying pair, then aggregate the rest in order.

    The bootstrap pair is config.bootstrap_pair when set, else a seeded-random
    draw from the qualifying pairs; the combine order is config.combine_order
    or a seeded-random permutation of the remaining measurement indices.
    When `ranges` maps receiver ids to range measurements they are fused in
    (jointly with the bearing for non-bootstrap receivers, range-only for the
    bootstrap pair).
    """
    config = config or SequentialConfig()
    if len(measurements) < 2:
        raise NoViablePair("need at least two measurements")
    rng = np.random.default_rng(config.seed)
    if config.bootstrap_pair is not None:
        pair = (int(config.bootstrap_pair[0]), int(config.bootstrap_pair[1]))
    else:
        pairs = qualifying_pairs(measurements, config.bootstrap_min_separation)
        if not pairs:
            raise NoViablePair("no qualifying bootstrap pair")
        pair = pairs[int(rng.integers(len(pairs)))]
    remaining = [k for k in range(len(measurements)) if k not in pair]
    if config.combine_order is not None:
        order = [int(k) for k in config.combine_order]
        if sorted(order) != sorted(remaining):
            raise ValueError("combine_order must cover exactly the non-bootstrap indices")
    else:
        order = [remaining[p] for p in rng.permutation(len(remaining))]
    return _run_sequential(
        measurements, receivers, pair, order, config.bootstrap_min_separation, ranges
    )


def multi_bootstrap_localize(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    config: SequentialConfig | None = None,
    num_bootstraps: int = 1,
    ranges: Mapping[int, RangeMeasurement] | None = None,
) -> LocalizationResult:
    """Run the sequential estimator from distinct random bootstrap pairs and
    keep the result with the smallest ML cost.

    With num_bootstraps=1 this reproduces sequential_localize bit for bit for
    the same seed (identical random draws).
    """
    if num_bootstraps < 1:
        raise ValueError(f"num_bootstraps must be >= 1, got {num_bootstraps}")
    config = config or SequentialConfig()
    if len(measurements) < 2:
        raise NoViablePair("need at least two measurements")
    rng = np.random.default_rng(config.seed)
    pairs = qualifying_pairs(measurements, config.bootstrap_min_separation)
    if not pairs:
        raise NoViablePair("no qualifying bootstrap pair")
    used: set[tuple[int, int]] = set()
    best: LocalizationResult | None = None
    while len(used) < min(num_bootstraps, len(pairs)):
        while True:
            pair = pairs[int(rng.integers(len(pairs)))]
            if pair not in used:
                break
        used.add(pair)
        remaining = [k for k in range(len(measurements)) if k not in pair]
        order = [remaining[p] for p in rng.permutation(len(remaining))]
        result = _run_sequential(
            measurements, receivers, pair, order, config.bootstrap_min_separation, ranges
        )
        if best is None or result.ml_cost < best.ml_cost:
            best = result
    assert best is not None
    return best
