"""Scenario construction, 2-D ray tracing, and Monte-Carlo campaigns.

Campaigns are deterministic given a single seed: every trial derives its own
substream from (seed, cell index, trial index), so trials can run in any
order (or in parallel) and reduce to identical results.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bounds import crlb_trace
from .errors import LocalizationError, SourceOutsideField
from .geometry import Point2, ReceiverPose, true_bearing, wrap_angle
from .ml import MlSettings, ml_los_estimate, ml_robust_estimate
from .models import (
    AoaMeasurement,
    AoaModel,
    CauchyLOS,
    GaussianLOS,
    LaplacianLOS,
    NarrowbandMixture,
    RangeMeasurement,
    UniformNLOS,
    Wideband,
    local_angle,
    sample_aoa,
    sample_rss_range,
)
from .nlos import SuppressionConfig, robust_localize
from .sequential import (
    SequentialConfig,
    multi_bootstrap_localize,
    sequential_localize,
)

_EPS = 1e-9


# ---------------------------------------------------------------------------
# Ring scenarios


@dataclass(frozen=True)
class RingScenario:
    """N equispaced perimeter receivers facing the field center."""

    field_radius: float
    receivers: tuple[ReceiverPose, ...]
    source: Point2
    model: AoaModel
    outlier_mode: str = "exact_count"  # or "bernoulli"
    seed: int = 0


@dataclass(frozen=True)
class SampledMeasurements:
    """Measurements plus which receivers were planted as NLOS outliers."""

    measurements: tuple[AoaMeasurement, ...]
    nlos_ids: frozenset[int]


def ring_receivers(n: int, field_radius: float = 1.0) -> tuple[ReceiverPose, ...]:
    """Receivers on the perimeter at angles 2*pi*(k-1)/n, broadside inward."""
    out = []
    for k in range(n):
        phi = 2.0 * math.pi * k / n
        pos = Point2(field_radius * math.cos(phi), field_radius * math.sin(phi))
        out.append(ReceiverPose(id=k, position=pos, broadside=wrap_angle(phi + math.pi)))
    return tuple(out)


def build_ring_scenario(
    n: int,
    source: Point2,
    model: AoaModel,
    field_radius: float = 1.0,
    outlier_mode: str = "exact_count",
    seed: int = 0,
) -> RingScenario:
    if n < 3:
        raise ValueError(f"need n >= 3 receivers, got {n}")
    if outlier_mode not in ("exact_count", "bernoulli"):
        raise ValueError(f"outlier_mode must be exact_count or bernoulli, got {outlier_mode!r}")
    if math.hypot(source.x, source.y) >= field_radius:
        raise SourceOutsideField(
            f"source ({source.x}, {source.y}) not strictly inside disc of radius {field_radius}"
        )
    return RingScenario(field_radius, ring_receivers(n, field_radius), source, model, outlier_mode, seed)


def _estimation_sigma(model: AoaModel, estimation_sigma: Optional[float]) -> float:
    if estimation_sigma is not None:
        return estimation_sigma
    if isinstance(model, (GaussianLOS, LaplacianLOS, NarrowbandMixture, Wideband)):
        return model.sigma
    if isinstance(model, CauchyLOS):
        return model.gamma
    raise ValueError("estimation_sigma is required for models without a spread parameter")


def sample_measurements(
    scenario: RingScenario,
    rng: Optional[np.random.Generator] = None,
    estimation_sigma: Optional[float] = None,
) -> SampledMeasurements:
    """Draw one AoA measurement set for a ring scenario.

    For the narrowband mixture, exact_count mode plants exactly
    floor(alpha*N) uniform-NLOS receivers chosen by a seeded shuffle;
    bernoulli mode flips an alpha-coin per receiver. A Wideband model's
    blocked flag applies to every receiver.
    """
    rng = rng if rng is not None else np.random.default_rng(scenario.seed)
    model = scenario.model
    est_sigma = _estimation_sigma(model, estimation_sigma)
    n = len(scenario.receivers)

    nlos_ids: set[int] = set()
    if isinstance(model, NarrowbandMixture):
        if scenario.outlier_mode == "exact_count":
            count = math.floor(model.alpha * n + 1e-9)
            nlos_ids = {scenario.receivers[i].id for i in rng.permutation(n)[:count]}
        else:
            nlos_ids = {rec.id for rec in scenario.receivers if rng.random() < model.alpha}
    elif isinstance(model, UniformNLOS):
        nlos_ids = {rec.id for rec in scenario.receivers}
    elif isinstance(model, Wideband) and model.blocked:
        nlos_ids = {rec.id for rec in scenario.receivers}

    measurements = []
    for rec in scenario.receivers:
        bearing_local = local_angle(true_bearing(rec, scenario.source), rec.broadside)
        if isinstance(model, NarrowbandMixture):
            draw_model: AoaModel = (
                UniformNLOS() if rec.id in nlos_ids else GaussianLOS(model.sigma)
            )
        else:
            draw_model = model
        for path_index, local in enumerate(sample_aoa(rng, draw_model, bearing_local)):
            measurements.append(
                AoaMeasurement(
                    receiver_id=rec.id,
                    angle_global=wrap_angle(rec.broadside + local),
                    sigma=est_sigma,
                    path_index=path_index,
                )
            )
    return SampledMeasurements(tuple(measurements), frozenset(nlos_ids))


# ---------------------------------------------------------------------------
# Ray tracing


@dataclass(frozen=True)
class Wall:
    """Perfectly reflecting (specular) wall segment."""

    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a.distance_to(self.b) < _EPS:
            raise ValueError("wall endpoints must be distinct")


@dataclass(frozen=True)
class PathArrival:
    angle_global: float
    kind: str  # "los" | "reflection"


@dataclass(frozen=True)
class ReceiverTrace:
    receiver_id: int
    los_blocked: bool
    nominal_angles: tuple[PathArrival, ...]


@dataclass(frozen=True)
class TraceResult:
    entries: tuple[ReceiverTrace, ...]


def _intersection_params(p1: Point2, p2: Point2, q1: Point2, q2: Point2):
    """Parameters (t, u) with p1 + t(p2-p1) = q1 + u(q2-q1), or None if parallel."""
    rx, ry = p2.x - p1.x, p2.y - p1.y
    sx, sy = q2.x - q1.x, q2.y - q1.y
    denom = rx * sy - ry * sx
    if abs(denom) < 1e-15:
        return None
    qpx, qpy = q1.x - p1.x, q1.y - p1.y
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    return t, u


def segment_blocked(p: Point2, q: Point2, walls: Sequence[Wall]) -> bool:
    """True if the open segment p-q crosses any wall's interior."""
    for w in walls:
        params = _intersection_params(p, q, w.a, w.b)
        if params is None:
            continue
        t, u = params
        if _EPS < t < 1.0 - _EPS and _EPS < u < 1.0 - _EPS:
            return True
    return False


def mirror_point(source: Point2, wall: Wall) -> Point2:
    """Mirror image of `source` across the wall's supporting line."""
    vx, vy = wall.b.x - wall.a.x, wall.b.y - wall.a.y
    length = math.hypot(vx, vy)
    nx, ny = -vy / length, vx / length
    d = (source.x - wall.a.x) * nx + (source.y - wall.a.y) * ny
    return Point2(source.x - 2.0 * d * nx, source.y - 2.0 * d * ny)


def ray_trace(
    walls: Sequence[Wall], source: Point2, receivers: Sequence[ReceiverPose]
) -> TraceResult:
    """First-order (single bounce) specular trace from source to receivers.

    The LOS path is blocked iff the direct segment crosses a wall interior.
    For each wall, the virtual (mirror) source generates a reflection whose
    nominal direction at the receiver points toward the virtual source; the
    path is valid iff the virtual-source segment crosses that wall and both
    physical legs are unobstructed.
    """
    entries = []
    for rec in receivers:
        blocked = segment_blocked(source, rec.position, walls)
        arrivals = []
        if not blocked:
            arrivals.append(PathArrival(true_bearing(rec, source), "los"))
        for w in walls:
            virtual = mirror_point(source, w)
            if virtual.distance_to(source) < _EPS:
                continue  # source on the wall line
            params = _intersection_params(virtual, rec.position, w.a, w.b)
            if params is None:
                continue
            t, u = params
            if not (_EPS < t < 1.0 - _EPS and _EPS < u < 1.0 - _EPS):
                continue
            bounce = Point2(
                virtual.x + t * (rec.position.x - virtual.x),
                virtual.y + t * (rec.position.y - virtual.y),
            )
            if segment_blocked(source, bounce, walls) or segment_blocked(bounce, rec.position, walls):
                continue
            arrivals.append(PathArrival(true_bearing(rec, virtual), "reflection"))
        entries.append(ReceiverTrace(rec.id, blocked, tuple(arrivals)))
    return TraceResult(tuple(entries))


def _circular_mean(angles: Sequence[float]) -> float:
    return math.atan2(
        sum(math.sin(a) for a in angles), sum(math.cos(a) for a in angles)
    )


def narrowband_scene_measurements(
    trace: TraceResult,
    rng: np.random.Generator,
    noise_sigma: float,
    estimation_sigma: Optional[float] = None,
) -> list[AoaMeasurement]:
    """One superposed AoA per hearing receiver: the equal-weight angular mean
    of all arriving nominal directions plus Gaussian estimation noise.
    Receivers with no arriving path report nothing."""
    est_sigma = estimation_sigma if estimation_sigma is not None else noise_sigma
    out = []
    for entry in trace.entries:
        if not entry.nominal_angles:
            continue
        nominal = _circular_mean([p.angle_global for p in entry.nominal_angles])
        angle = wrap_angle(nominal + noise_sigma * rng.standard_normal())
        out.append(AoaMeasurement(entry.receiver_id, angle, est_sigma, 0))
    return out


def wideband_scene_measurements(
    trace: TraceResult,
    rng: np.random.Generator,
    noise_sigma: float,
    estimation_sigma: Optional[float] = None,
) -> list[AoaMeasurement]:
    """One AoA per resolved path, each with independent Gaussian noise."""
    est_sigma = estimation_sigma if estimation_sigma is not None else noise_sigma
    out = []
    for entry in trace.entries:
        for path_index, arrival in enumerate(entry.nominal_angles):
            angle = wrap_angle(arrival.angle_global + noise_sigma * rng.standard_normal())
            out.append(AoaMeasurement(entry.receiver_id, angle, est_sigma, path_index))
    return out


def demo_narrowband_scene() -> tuple[tuple[Wall, ...], tuple[ReceiverPose, ...], dict[str, Point2]]:
    """Four-receiver scene with one blocking wall and short reflector segments.

    Source locations by label:
      A, D: receiver 3 is LOS-blocked and hears a wall reflection only (an
            outlier), receiver 2 hears LOS plus a reflection (a strongly
            biased narrowband superposition); A sits farther from the two
            clean receivers with a shallower triangulation angle than D.
      B:    receiver 3 hears nothing; receivers 0-2 are clean LOS.
      C:    all four receivers are clean LOS.
    """
    receivers = (
        ReceiverPose(0, Point2(-8.0, -8.0), wrap_angle(math.atan2(8.0, 8.0))),
        ReceiverPose(1, Point2(8.0, -8.0), wrap_angle(math.atan2(8.0, -8.0))),
        ReceiverPose(2, Point2(8.0, 8.0), wrap_angle(math.atan2(-8.0, -8.0))),
        ReceiverPose(3, Point2(-8.0, 8.0), wrap_angle(math.atan2(-8.0, 8.0))),
    )
    walls = (
        Wall(Point2(-8.5, 5.0), Point2(-1.7, 5.0)),  # blocker
        Wall(Point2(12.0, 6.3), Point2(12.0, 6.7)),
        Wall(Point2(12.0, 4.05), Point2(12.0, 4.45)),
        Wall(Point2(12.0, 5.3), Point2(12.0, 5.7)),
        Wall(Point2(12.0, 6.8), Point2(12.0, 7.2)),
    )
    locations = {
        "A": Point2(0.0, 4.0),
        "B": Point2(2.0, -2.0),
        "C": Point2(7.0, 1.0),
        "D": Point2(1.0, 2.2),
    }
    return walls, receivers, locations


def demo_wideband_scene() -> tuple[tuple[Wall, ...], tuple[ReceiverPose, ...], Point2]:
    """Source between four receivers and one reflecting wall.

    Every receiver resolves the LOS path plus one wall reflection, so half of
    all wideband AoA estimates consistently point at the virtual source
    mirrored behind the wall (x > 4 is infeasible for a real source).
    """
    source = Point2(0.0, 0.0)
    receivers = (
        ReceiverPose(0, Point2(-8.0, 4.0), wrap_angle(math.atan2(-4.0, 8.0))),
        ReceiverPose(1, Point2(-8.0, -4.0), wrap_angle(math.atan2(4.0, 8.0))),
        ReceiverPose(2, Point2(-4.0, 8.0), wrap_angle(math.atan2(-8.0, 4.0))),
        ReceiverPose(3, Point2(-4.0, -8.0), wrap_angle(math.atan2(8.0, 4.0))),
    )
    walls = (Wall(Point2(4.0, -8.0), Point2(4.0, 8.0)),)
    return walls, receivers, source


# ---------------------------------------------------------------------------
# Monte-Carlo campaigns


@dataclass(frozen=True)
class CampaignSpec:
    """Grid of Monte-Carlo cells plus the algorithm under test.

    algorithm is one of: sequential, multi_bootstrap, robust, ml_los,
    ml_robust, ml_los_known (LOS-only oracle that drops planted outliers).
    with_range additionally fuses RSS range measurements into the sequential
    estimators.
    """

    algorithm: str = "sequential"
    n_values: tuple[int, ...] = (8,)
    sigmas_deg: tuple[float, ...] = (2.0,)
    alphas: tuple[float, ...] = (0.0,)
    trials: int = 1000
    seed: int = 0
    field_radius: float = 1.0
    outlier_mode: str = "exact_count"
    model_kind: str = "auto"  # auto | gaussian | narrowband | laplacian | cauchy
    num_bootstraps: int = 1
    num_seeds: Optional[int] = None
    threshold_alpha: Optional[float] = None
    target_pfail: float = 1e-3
    with_range: bool = False
    range_beta: float = 3.0
    range_snr_db: float = 12.0
    num_locations: int = 25
    location_radius_frac: float = 0.9
    compare_crlb: bool = False


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    n: int
    sigma_deg: float
    alpha: float
    algorithm: str
    err: float
    inlier_count: int
    ml_cost: float
    failed: int


@dataclass(frozen=True)
class CellMetrics:
    n: int
    sigma_deg: float
    alpha: float
    algorithm: str
    trial_count: int
    rms_error: float
    normalized_rms: float
    failure_rate: float
    avg_crlb_trace: float  # nan unless compare_crlb


_KNOWN_ALGORITHMS = (
    "sequential",
    "multi_bootstrap",
    "robust",
    "ml_los",
    "ml_robust",
    "ml_los_known",
)


def candidate_locations(spec: CampaignSpec) -> tuple[Point2, ...]:
    """Seeded uniform draw over the disc of radius frac*field_radius."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(0,)))
    out = []
    for _ in range(spec.num_locations):
        r = spec.field_radius * spec.location_radius_frac * math.sqrt(rng.random())
        phi = rng.uniform(-math.pi, math.pi)
        out.append(Point2(r * math.cos(phi), r * math.sin(phi)))
    return tuple(out)


def _cell_model(spec: CampaignSpec, sigma: float, alpha: float) -> AoaModel:
    kind = spec.model_kind
    if kind == "auto":
        kind = "narrowband" if alpha > 0 else "gaussian"
    if kind == "gaussian":
        return GaussianLOS(sigma)
    if kind == "narrowband":
        return NarrowbandMixture(sigma, alpha)
    if kind == "laplacian":
        return LaplacianLOS(sigma)
    if kind == "cauchy":
        return CauchyLOS(sigma)
    raise ValueError(f"unknown model_kind {spec.model_kind!r}")


def _run_trial(
    spec: CampaignSpec,
    cell_index: int,
    n: int,
    sigma_deg: float,
    alpha: float,
    locations: Sequence[Point2],
    receivers: tuple[ReceiverPose, ...],
    trial: int,
) -> TrialRecord:
    sigma = math.radians(sigma_deg)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(cell_index, trial)))
    source = locations[trial % len(locations)]
    scenario = RingScenario(
        spec.field_radius, receivers, source, _cell_model(spec, sigma, alpha), spec.outlier_mode
    )
    sample = sample_measurements(scenario, rng)
    measurements = sample.measurements
    alg_seed = int(rng.integers(0, 2**63 - 1))
    ranges = None
    if spec.with_range:
        ranges = {}
        for rec in receivers:
            true_range = rec.position.distance_to(source)
            ranges[rec.id] = sample_rss_range(
                rng, true_range, spec.range_beta, spec.range_snr_db, receiver_id=rec.id
            )

    err = math.nan
    cost = math.nan
    inliers = 0
    failed = 1
    try:
        if spec.algorithm in ("sequential", "multi_bootstrap"):
            cfg = SequentialConfig(seed=alg_seed)
            if spec.algorithm == "sequential":
                res = sequential_localize(measurements, receivers, cfg, ranges)
            else:
                res = multi_bootstrap_localize(
                    measurements, receivers, cfg, spec.num_bootstraps, ranges
                )
            point, inliers, cost = res.estimate.mean, len(res.used_measurements), res.ml_cost
        elif spec.algorithm == "robust":
            thr_alpha = spec.threshold_alpha if spec.threshold_alpha is not None else alpha
            if thr_alpha > 0:
                cfg_r = SuppressionConfig(
                    alpha_max=thr_alpha,
                    target_pfail=spec.target_pfail,
                    num_seeds=spec.num_seeds,
                    field_radius=spec.field_radius,
                    seed=alg_seed,
                )
            else:
                # no outliers expected: keep every measurement, cost alpha stays conservative
                cfg_r = SuppressionConfig(
                    alpha_max=0.5,
                    num_seeds=spec.num_seeds or spec.num_bootstraps,
                    theta_max=math.inf,
                    field_radius=spec.field_radius,
                    seed=alg_seed,
                )
            run = robust_localize(measurements, receivers, cfg_r)
            point, inliers, cost = run.estimate.mean, len(run.inliers), run.ml_cost
        elif spec.algorithm in ("ml_los", "ml_los_known", "ml_robust"):
            subset = measurements
            if spec.algorithm == "ml_los_known":
                subset = tuple(m for m in measurements if m.receiver_id not in sample.nlos_ids)
                if len(subset) < 2:
                    raise LocalizationError("fewer than two LOS measurements")
            if spec.algorithm == "ml_robust" and alpha > 0:
                settings = MlSettings(grid_extent=spec.field_radius, grid_step=spec.field_radius / 200.0, refine_iters=25, refine_tol=1e-6)
                est = ml_robust_estimate(subset, receivers, alpha, settings)
            else:
                settings = MlSettings(grid_extent=spec.field_radius, grid_step=spec.field_radius / 20.0)
                est = ml_los_estimate(subset, receivers, settings)
            point, inliers, cost = est.point, len(subset), -est.objective
        else:
            raise ValueError(f"unknown algorithm {spec.algorithm!r}")
        err = point.distance_to(source)
        failed = 0
    except LocalizationError:
        pass
    return TrialRecord(trial, n, sigma_deg, alpha, spec.algorithm, err, inliers, cost, failed)


def _run_cell_chunk(args) -> list[TrialRecord]:
    spec, cell_index, n, sigma_deg, alpha, locations, start, stop = args
    receivers = ring_receivers(n, spec.field_radius)
    return [
        _run_trial(spec, cell_index, n, sigma_deg, alpha, locations, receivers, t)
        for t in range(start, stop)
    ]


def run_monte_carlo(
    spec: CampaignSpec, workers: int = 1
) -> tuple[list[CellMetrics], list[TrialRecord]]:
    """Run the campaign grid; deterministic for a given spec regardless of
    worker count. Per-trial algorithm errors are tallied as failures, never
    aborting the campaign."""
    if spec.algorithm not in _KNOWN_ALGORITHMS:
        raise ValueError(f"unknown algorithm {spec.algorithm!r}")
    if spec.trials < 1:
        raise ValueError("trials must be >= 1")
    locations = candidate_locations(spec)
    cells = [
        (n, sd, al)
        for n in spec.n_values
        for sd in spec.sigmas_deg
        for al in spec.alphas
    ]
    metrics: list[CellMetrics] = []
    records: list[TrialRecord] = []
    for cell_index, (n, sigma_deg, alpha) in enumerate(cells, start=1):
        if workers > 1:
            bounds = np.linspace(0, spec.trials, workers + 1, dtype=int)
            chunks = [
                (spec, cell_index, n, sigma_deg, alpha, locations, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                cell_records = [r for chunk in pool.map(_run_cell_chunk, chunks) for r in chunk]
        else:
            cell_records = _run_cell_chunk(
                (spec, cell_index, n, sigma_deg, alpha, locations, 0, spec.trials)
            )
        records.extend(cell_records)
        ok_errors = [r.err for r in cell_records if not r.failed]
        rms = math.sqrt(sum(e * e for e in ok_errors) / len(ok_errors)) if ok_errors else math.nan
        fail_rate = sum(r.failed for r in cell_records) / len(cell_records)
        avg_crlb = math.nan
        if spec.compare_crlb:
            receivers = ring_receivers(n, spec.field_radius)
            sigma = math.radians(sigma_deg)
            avg_crlb = float(
                np.mean([crlb_trace(loc, receivers, sigma) for loc in locations])
            )
        metrics.append(
            CellMetrics(
                n=n,
                sigma_deg=sigma_deg,
                alpha=alpha,
                algorithm=spec.algorithm,
                trial_count=len(cell_records),
                rms_error=rms,
                normalized_rms=rms / spec.field_radius,
                failure_rate=fail_rate,
                avg_crlb_trace=avg_crlb,
            )
        )
    return metrics, records


def failure_rate(errors: Sequence[float], ml_std: float) -> float:
    """Fraction of trial errors farther than three reference std deviations."""
    if not ml_std > 0:
        raise ValueError(f"ml_std must be > 0, got {ml_std}")
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return 0.0
    return float(np.mean(errors > 3.0 * ml_std))


# ---------------------------------------------------------------------------
# CSV artifacts

TRIAL_HEADER = (
    "trial",
    "n",
    "sigma_deg",
    "alpha",
    "algorithm",
    "err",
    "inlier_count",
    "ml_cost",
    "failed",
)

METRICS_HEADER = (
    "n",
    "sigma_deg",
    "alpha",
    "algorithm",
    "trial_count",
    "rms_error",
    "normalized_rms",
    "failure_rate",
    "avg_crlb_trace",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_trial_records(path, records: Sequence[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.trial,
                    r.n,
                    _fmt(r.sigma_deg),
                    _fmt(r.alpha),
                    r.algorithm,
                    _fmt(r.err),
                    r.inlier_count,
                    _fmt(r.ml_cost),
                    r.failed,
                ]
            )


def read_trial_records(path) -> list[TrialRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRIAL_HEADER:
            raise ValueError(f"unexpected trial CSV header in {path}")
        for row in reader:
            out.append(
                TrialRecord(
                    trial=int(row["trial"]),
                    n=int(row["n"]),
                    sigma_deg=float(row["sigma_deg"]),
                    alpha=float(row["alpha"]),
                    algorithm=row["algorithm"],
                    err=float(row["err"]),
                    inlier_count=int(row["inlier_count"]),
                    ml_cost=float(row["ml_cost"]),
                    failed=int(row["failed"]),
                )
            )
    return out


def write_metrics(path, metrics: Sequence[CellMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for m in metrics:
            writer.writerow(
                [
                    m.n,
                    _fmt(m.sigma_deg),
                    _fmt(m.alpha),
                    m.algorithm,
                    m.trial_count,
                    _fmt(m.rms_error),
                    _fmt(m.normalized_rms),
                    _fmt(m.failure_rate),
                    _fmt(m.avg_crlb_trace),
                ]
            )


def read_metrics(path) -> list[CellMetrics]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_HEADER:
            raise ValueError(f"unexpected metrics CSV header in {path}")
        for row in reader:
            out.append(
                CellMetrics(
                    n=int(row["n"]),
                    sigma_deg=float(row["sigma_deg"]),
                    alpha=float(row["alpha"]),
                    algorithm=row["algorithm"],
                    trial_count=int(row["trial_count"]),
                    rms_error=float(row["rms_error"]),
                    normalized_rms=float(row["normalized_rms"]),
                    failure_rate=float(row["failure_rate"]),
                    avg_crlb_trace=float(row["avg_crlb_trace"]),
                )
            )
    return out
