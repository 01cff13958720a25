"""Fisher information and Cramer-Rao lower bounds for AoA localization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateRange, SingularInformation
from .geometry import Point2, ReceiverPose, Sym2

_MIN_DET = 1e-15


@dataclass(frozen=True)
class FisherInfo:
    """Fisher information matrix over (x, y), units 1/field-units^2."""

    matrix: Sym2


def _sigma_list(sigmas, n: int) -> list[float]:
    if isinstance(sigmas, (int, float)):
        sigmas = [float(sigmas)] * n
    sigmas = [float(s) for s in sigmas]
    if len(sigmas) != n:
        raise ValueError(f"need one sigma per receiver ({n}), got {len(sigmas)}")
    if any(s <= 0 for s in sigmas):
        raise ValueError("sigmas must be > 0")
    return sigmas


def fisher_information(
    source: Point2, receivers: Sequence[ReceiverPose], sigmas: float | Sequence[float]
) -> FisherInfo:
    """FIM for Gaussian bearing errors: sum over receivers of the rank-1
    contribution (1/(sigma_k R_k)^2) * [sin; -cos][sin; -cos]^T at the true
    geometry."""
    sig = _sigma_list(sigmas, len(receivers))
    j11 = j12 = j22 = 0.0
    for rec, s in zip(receivers, sig):
        dx = source.x - rec.position.x
        dy = source.y - rec.position.y
        r2 = dx * dx + dy * dy
        if r2 < 1e-18:
            raise DegenerateRange(f"source coincides with receiver {rec.id}")
        theta = math.atan2(dy, dx)
        w = 1.0 / (s * s * r2)
        sin_t = math.sin(theta)
        cos_t = math.cos(theta)
        j11 += w * sin_t * sin_t
        j12 -= w * cos_t * sin_t
        j22 += w * cos_t * cos_t
    return FisherInfo(Sym2(j11, j12, j22))


def crlb_trace(
    source: Point2, receivers: Sequence[ReceiverPose], sigmas: float | Sequence[float]
) -> float:
    """Trace of the inverse FIM: lower bound on total localization variance."""
    j = fisher_information(source, receivers, sigmas).matrix
    det = j.det()
    if det <= _MIN_DET:
        raise SingularInformation(
            f"information determinant {det} <= {_MIN_DET}; need two distinct bearings"
        )
    return j.trace() / det


@dataclass(frozen=True)
class CenterBound:
    """Worst-case (center of disc) bound for N equispaced perimeter receivers.

    `exact` is N R^2 sigma^2 over the pairwise sin^2 bearing-difference sum;
    `printed_approx` is the looser closed form 2 R^2 sigma^2 / (pi^2 (N-1)).
    The approximation is a valid lower bound of the exact value but is not
    tight; benchmarks compare against `exact`.
    """

    exact: float
    printed_approx: float


def center_bound(n: int, disc_radius: float, sigma: float) -> CenterBound:
    """CRLB at the center of a disc ringed by n equispaced receivers."""
    if n < 3:
        raise ValueError(f"need n >= 3 receivers, got {n}")
    if disc_radius <= 0 or sigma <= 0:
        raise ValueError("disc_radius and sigma must be > 0")
    angles = [2.0 * math.pi * k / n for k in range(n)]
    pair_sum = 0.0
    for k in range(n):
        for l in range(k + 1, n):
            pair_sum += math.sin(angles[k] - angles[l]) ** 2
    exact = n * disc_radius**2 * sigma**2 / pair_sum
    printed = 2.0 * disc_radius**2 * sigma**2 / (math.pi**2 * (n - 1))
    return CenterBound(exact=exact, printed_approx=printed)
