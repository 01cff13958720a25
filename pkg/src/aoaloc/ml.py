"""Reference maximum-likelihood estimators used as benchmarks.

Both estimators seed a deterministic grid search over the field disc and
refine locally: Gauss-Newton on the weighted bearing residuals for the LOS
estimator, coordinate descent on the smooth outlier-mixture log-likelihood
for the robust estimator. Results are reproducible bit for bit for a given
settings record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidAlpha
from .geometry import Point2, ReceiverPose, angular_error, true_bearing, wrap_angle
from .models import AoaMeasurement, gaussian_truncation_norm
from .sequential import receivers_by_id


@dataclass(frozen=True)
class MlSettings:
    """Grid seeding and local-refinement knobs."""

    grid_extent: float = 1.0
    grid_step: float = 0.02
    refine_iters: int = 50
    refine_tol: float = 1e-9

    def __post_init__(self):
        if not self.grid_step > 0:
            raise ValueError(f"grid_step must be > 0, got {self.grid_step}")
        if not self.refine_tol > 0:
            raise ValueError(f"refine_tol must be > 0, got {self.refine_tol}")


@dataclass(frozen=True)
class MlEstimate:
    """Estimate plus convergence diagnostics.

    `objective` is the quantity the estimator maximized: negative weighted
    squared residual sum for the LOS estimator, mixture log-likelihood for
    the robust estimator.
    """

    point: Point2
    converged: bool
    objective: float


@lru_cache(maxsize=16)
def _grid_geometry(receivers: tuple[ReceiverPose, ...], extent: float, step: float):
    """Grid points inside the field disc plus per-receiver bearing/range maps."""
    axis = np.arange(-extent, extent + 0.5 * step, step)
    gx, gy = np.meshgrid(axis, axis)
    gx = gx.ravel()
    gy = gy.ravel()
    inside = gx * gx + gy * gy <= extent * extent + 1e-12
    gx = gx[inside]
    gy = gy[inside]
    bearings = {}
    ranges = {}
    for rec in receivers:
        dx = gx - rec.position.x
        dy = gy - rec.position.y
        bearings[rec.id] = np.arctan2(dy, dx)
        ranges[rec.id] = np.hypot(dx, dy)
    return gx, gy, bearings, ranges


def _wrap_array(d: np.ndarray) -> np.ndarray:
    # inputs are differences of wrapped angles, so |d| < 2*pi
    d = np.where(d > math.pi, d - 2.0 * math.pi, d)
    return np.where(d <= -math.pi, d + 2.0 * math.pi, d)


def _los_grid_cost(measurements, gx, gy, bearings) -> np.ndarray:
    cost = np.zeros_like(gx)
    for m in measurements:
        d = _wrap_array(m.angle_global - bearings[m.receiver_id])
        cost += (d / m.sigma) ** 2
    return cost


def ml_los_estimate(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    settings: MlSettings | None = None,
) -> MlEstimate:
    """LOS ML estimate: coarse grid over the field disc, then Gauss-Newton on
    the residual vector (measured - bearing)/sigma with the analytic Jacobian.

    If Gauss-Newton does not reach `refine_tol` within `refine_iters`, the
    best point seen (grid or iterate) is returned with converged=False.
    """
    if len(measurements) < 2:
        raise ValueError("need at least two measurements")
    settings = settings or MlSettings()
    recs = tuple(receivers)
    by_id = receivers_by_id(recs)
    gx, gy, grid_bearings, _ = _grid_geometry(recs, settings.grid_extent, settings.grid_step)
    grid_cost = _los_grid_cost(measurements, gx, gy, grid_bearings)
    best = int(np.argmin(grid_cost))
    x, y = float(gx[best]), float(gy[best])
    best_cost = float(grid_cost[best])

    def cost_at(px: float, py: float) -> float:
        p = Point2(px, py)
        return sum(
            (angular_error(m.angle_global, true_bearing(by_id[m.receiver_id], p)) / m.sigma) ** 2
            for m in measurements
        )

    converged = False
    cur_cost = best_cost
    for _ in range(settings.refine_iters):
        jtj11 = jtj12 = jtj22 = jtr1 = jtr2 = 0.0
        degenerate = False
        for m in measurements:
            rec = by_id[m.receiver_id]
            dx = x - rec.position.x
            dy = y - rec.position.y
            r = math.hypot(dx, dy)
            if r < 1e-12:
                degenerate = True
                break
            theta = math.atan2(dy, dx)
            resid = wrap_angle(m.angle_global - theta) / m.sigma
            j1 = math.sin(theta) / (m.sigma * r)
            j2 = -math.cos(theta) / (m.sigma * r)
            jtj11 += j1 * j1
            jtj12 += j1 * j2
            jtj22 += j2 * j2
            jtr1 += j1 * resid
            jtr2 += j2 * resid
        if degenerate:
            break
        det = jtj11 * jtj22 - jtj12 * jtj12
        if det <= 0 or not math.isfinite(det):
            break
        step_x = -(jtj22 * jtr1 - jtj12 * jtr2) / det
        step_y = -(-jtj12 * jtr1 + jtj11 * jtr2) / det
        # backtrack if the full step overshoots (possible at large spreads)
        scale = 1.0
        new_cost = cost_at(x + step_x, y + step_y)
        for _ in range(12):
            if new_cost <= cur_cost or math.hypot(scale * step_x, scale * step_y) < 1e-15:
                break
            scale *= 0.5
            new_cost = cost_at(x + scale * step_x, y + scale * step_y)
        x += scale * step_x
        y += scale * step_y
        cur_cost = new_cost
        if math.hypot(scale * step_x, scale * step_y) < settings.refine_tol:
            converged = True
            break
    if cur_cost <= best_cost:
        return MlEstimate(Point2(x, y), converged, -cur_cost)
    return MlEstimate(Point2(float(gx[best]), float(gy[best])), False, -best_cost)


def _mixture_constants(measurements, alpha):
    """Per-measurement log weights of the clean and outlier mixture parts."""
    log_clean = np.array(
        [
            math.log(1.0 - alpha)
            - math.log(math.sqrt(2.0 * math.pi) * m.sigma * gaussian_truncation_norm(m.sigma))
            for m in measurements
        ]
    )
    log_outlier = math.log(alpha / math.pi)
    return log_clean, log_outlier


def robust_loglik(
    point: Point2,
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    alpha: float,
) -> float:
    """Outlier-mixture log-likelihood of the AoA set at `point` (nats).

    Each term is log[(1-alpha) N_trunc(residual; sigma_k) + alpha/pi] with the
    residual wrapped.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    by_id = receivers if isinstance(receivers, dict) else receivers_by_id(receivers)
    log_clean, log_outlier = _mixture_constants(measurements, alpha)
    total = 0.0
    for lc, m in zip(log_clean, measurements):
        resid = angular_error(m.angle_global, true_bearing(by_id[m.receiver_id], point))
        total += np.logaddexp(lc - 0.5 * (resid / m.sigma) ** 2, log_outlier)
    return float(total)


def _robust_grid_loglik(measurements, alpha, gx, gy, bearings) -> np.ndarray:
    log_clean, log_outlier = _mixture_constants(measurements, alpha)
    total = np.full(gx.shape, len(measurements) * log_outlier)
    for lc, m in zip(log_clean, measurements):
        d = _wrap_array(m.angle_global - bearings[m.receiver_id])
        t = (lc - log_outlier) - 0.5 * (d / m.sigma) ** 2
        # grid points with a saturated clean component contribute exactly the
        # outlier floor; log1p(exp(t)) < 1e-13 there, skip the transcendentals
        mask = t > -30.0
        total[mask] += np.log1p(np.exp(t[mask]))
    return total


def ml_robust_estimate(
    measurements: Sequence[AoaMeasurement],
    receivers: Sequence[ReceiverPose],
    alpha: float,
    settings: MlSettings | None = None,
) -> MlEstimate:
    """Robust ML estimate: fine grid (step at most grid_extent/200) over the
    field disc, then coordinate descent on the smooth mixture log-likelihood.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if len(measurements) < 2:
        raise ValueError("need at least two measurements")
    settings = settings or MlSettings(grid_step=0.005, refine_iters=25, refine_tol=1e-6)
    recs = tuple(receivers)
    by_id = receivers_by_id(recs)
    step = min(settings.grid_step, settings.grid_extent / 200.0)
    gx, gy, grid_bearings, _ = _grid_geometry(recs, settings.grid_extent, step)
    grid_ll = _robust_grid_loglik(measurements, alpha, gx, gy, grid_bearings)
    best = int(np.argmax(grid_ll))
    x, y = float(gx[best]), float(gy[best])
    best_ll = float(grid_ll[best])

    def ll_at(px, py):
        return robust_loglik(Point2(px, py), measurements, by_id, alpha)

    converged = False
    for _ in range(settings.refine_iters):
        moved = 0.0
        res = minimize_scalar(
            lambda v: -ll_at(v, y),
            bounds=(x - 2.0 * step, x + 2.0 * step),
            method="bounded",
            options={"xatol": 0.25 * settings.refine_tol},
        )
        moved = max(moved, abs(res.x - x))
        x = float(res.x)
        res = minimize_scalar(
            lambda v: -ll_at(x, v),
            bounds=(y - 2.0 * step, y + 2.0 * step),
            method="bounded",
            options={"xatol": 0.25 * settings.refine_tol},
        )
        moved = max(moved, abs(res.x - y))
        y = float(res.x)
        if moved < settings.refine_tol:
            converged = True
            break
    final_ll = ll_at(x, y)
    if final_ll >= best_ll:
        return MlEstimate(Point2(x, y), converged, final_ll)
    return MlEstimate(Point2(float(gx[best]), float(gy[best])), False, best_ll)
