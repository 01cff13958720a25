"""Generative AoA and range measurement models.

Local AoA angles are measured from the antenna broadside and are feasible on
[-pi/2, pi/2]. Gaussian and Laplacian spreads are truncated to that cone and
carry the location-independent normalizers (1 - 2Q(pi/(2*sigma)) for the
Gaussian, 1 - exp(-pi/(sqrt(2)*sigma)) for the Laplacian). The Cauchy spread
is truncated with its exact location-dependent normalizer so the rejection
sampler and the density agree at any bearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InfeasibleBearing
from .geometry import wrap_angle

HALF_PI = 0.5 * math.pi

_MAX_REJECTION_ITERS = 100_000


def q_function(t: float) -> float:
    """Standard normal tail probability Q(t) = P(N(0,1) > t)."""
    return 0.5 * math.erfc(t / math.sqrt(2.0))


@dataclass(frozen=True)
class GaussianLOS:
    """Truncated Gaussian LOS spread with standard deviation `sigma`."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class LaplacianLOS:
    """Truncated Laplacian LOS spread; sigma is the standard deviation."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class UniformNLOS:
    """Blocked LOS: the AoA is uniform over the feasible cone."""


@dataclass(frozen=True)
class NarrowbandMixture:
    """With probability `alpha` the AoA is uniform NLOS, else truncated Gaussian."""

    sigma: float
    alpha: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")


@dataclass(frozen=True)
class Wideband:
    """Receiver resolves `paths` arrivals: one LOS draw (uniform if blocked)
    followed by paths-1 uniform NLOS draws."""

    sigma: float
    paths: int = 2
    blocked: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.paths < 1:
            raise ValueError(f"paths must be >= 1, got {self.paths}")


@dataclass(frozen=True)
class CauchyLOS:
    """Truncated Cauchy LOS spread with shape parameter `gamma`."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


AoaModel = Union[GaussianLOS, LaplacianLOS, UniformNLOS, NarrowbandMixture, Wideband, CauchyLOS]


@dataclass(frozen=True)
class AoaMeasurement:
    """One estimated arrival angle in the global frame.

    `sigma` is the standard deviation of the LOS model assumed on the
    estimation side; consumers square it where a variance is needed.
    """

    receiver_id: int
    angle_global: float
    sigma: float
    path_index: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.path_index < 0:
            raise ValueError(f"path_index must be >= 0, got {self.path_index}")


@dataclass(frozen=True)
class RangeMeasurement:
    """RSS-derived source range with its measurement variance."""

    receiver_id: int
    range: float
    variance: float

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"range must be > 0, got {self.range}")
        if not self.variance > 0:
            raise ValueError(f"variance must be > 0, got {self.variance}")


def _check_feasible(angle: float, what: str) -> None:
    if not -HALF_PI <= angle <= HALF_PI:
        raise InfeasibleBearing(f"{what} {angle} outside [-pi/2, pi/2]")


def gaussian_truncation_norm(sigma: float) -> float:
    """Mass of N(0, sigma^2) on [-pi/2, pi/2]: 1 - 2Q(pi/(2*sigma))."""
    return 1.0 - 2.0 * q_function(HALF_PI / sigma)


def laplacian_truncation_norm(sigma: float) -> float:
    """Mass of a Laplace(0, sigma/sqrt(2)) on [-pi/2, pi/2]."""
    return 1.0 - math.exp(-math.pi / (math.sqrt(2.0) * sigma))


def _rejection_sample(rng: np.random.Generator, draw) -> float:
    for _ in range(_MAX_REJECTION_ITERS):
        x = draw(rng)
        if -HALF_PI <= x <= HALF_PI:
            return float(x)
    raise RuntimeError("rejection sampler failed to land in the feasible cone")


def _sample_trunc_gauss(rng, mu: float, sigma: float) -> float:
    return _rejection_sample(rng, lambda r: r.normal(mu, sigma))


def _sample_trunc_laplace(rng, mu: float, sigma: float) -> float:
    return _rejection_sample(rng, lambda r: r.laplace(mu, sigma / math.sqrt(2.0)))


def _sample_trunc_cauchy(rng, mu: float, gamma: float) -> float:
    return _rejection_sample(rng, lambda r: mu + gamma * r.standard_cauchy())


def _sample_uniform(rng) -> float:
    return float(rng.uniform(-HALF_PI, HALF_PI))


def sample_aoa(rng: np.random.Generator, model: AoaModel, true_local_bearing: float) -> list[float]:
    """Draw local AoA estimates for one receiver.

    Returns a single angle for all models except Wideband, which returns
    `paths` angles (LOS draw first when unblocked; the downstream algorithms
    never rely on that ordering).
    """
    _check_feasible(true_local_bearing, "true_local_bearing")
    if isinstance(model, GaussianLOS):
        return [_sample_trunc_gauss(rng, true_local_bearing, model.sigma)]
    if isinstance(model, LaplacianLOS):
        return [_sample_trunc_laplace(rng, true_local_bearing, model.sigma)]
    if isinstance(model, UniformNLOS):
        return [_sample_uniform(rng)]
    if isinstance(model, NarrowbandMixture):
        if rng.random() < model.alpha:
            return [_sample_uniform(rng)]
        return [_sample_trunc_gauss(rng, true_local_bearing, model.sigma)]
    if isinstance(model, Wideband):
        if model.blocked:
            first = _sample_uniform(rng)
        else:
            first = _sample_trunc_gauss(rng, true_local_bearing, model.sigma)
        return [first] + [_sample_uniform(rng) for _ in range(model.paths - 1)]
    if isinstance(model, CauchyLOS):
        return [_sample_trunc_cauchy(rng, true_local_bearing, model.gamma)]
    raise TypeError(f"unknown AoA model {model!r}")


def _gauss_logpdf(err: float, sigma: float) -> float:
    norm = math.sqrt(2.0 * math.pi) * sigma * gaussian_truncation_norm(sigma)
    return -0.5 * (err / sigma) ** 2 - math.log(norm)


def _laplace_logpdf(err: float, sigma: float) -> float:
    norm = math.sqrt(2.0) * sigma * laplacian_truncation_norm(sigma)
    return -math.sqrt(2.0) * abs(err) / sigma - math.log(norm)


def _cauchy_logpdf(err: float, gamma: float, true_local_bearing: float) -> float:
    mass = (
        math.atan((HALF_PI - true_local_bearing) / gamma)
        + math.atan((HALF_PI + true_local_bearing) / gamma)
    ) / math.pi
    return -math.log(math.pi * gamma * (1.0 + (err / gamma) ** 2)) - math.log(mass)


def loglik_aoa(model: AoaModel, measured_local: float, true_local_bearing: float) -> float:
    """Log-density (nats) of one measured local angle under `model`."""
    _check_feasible(measured_local, "measured_local")
    _check_feasible(true_local_bearing, "true_local_bearing")
    err = measured_local - true_local_bearing
    if isinstance(model, GaussianLOS):
        return _gauss_logpdf(err, model.sigma)
    if isinstance(model, LaplacianLOS):
        return _laplace_logpdf(err, model.sigma)
    if isinstance(model, UniformNLOS):
        return -math.log(math.pi)
    if isinstance(model, NarrowbandMixture):
        if model.alpha == 0.0:
            return _gauss_logpdf(err, model.sigma)
        gauss = math.exp(_gauss_logpdf(err, model.sigma))
        return math.log(model.alpha / math.pi + (1.0 - model.alpha) * gauss)
    if isinstance(model, Wideband):
        # Per-path marginal: any one of the L estimates is the LOS draw with
        # probability 1/L (uniform if blocked).
        if model.blocked:
            return -math.log(math.pi)
        if model.paths == 1:
            return _gauss_logpdf(err, model.sigma)
        w = 1.0 / model.paths
        gauss = math.exp(_gauss_logpdf(err, model.sigma))
        return math.log(w * gauss + (1.0 - w) / math.pi)
    if isinstance(model, CauchyLOS):
        return _cauchy_logpdf(err, model.gamma, true_local_bearing)
    raise TypeError(f"unknown AoA model {model!r}")


def local_angle(angle_global: float, broadside: float) -> float:
    """Global-frame angle expressed relative to a broadside direction."""
    return wrap_angle(angle_global - broadside)


def sample_rss_range(
    rng: np.random.Generator,
    true_range: float,
    beta: float,
    snr_db: float,
    receiver_id: int = 0,
) -> RangeMeasurement:
    """Draw a log-normal RSS range estimate R*exp(r/(beta*SNR)).

    `r` is standard normal and SNR is converted from dB to linear scale
    inside the exponent. The variance field carries the analytic variance of
    the log-normal measurement.
    """
    if not true_range > 0:
        raise ValueError(f"true_range must be > 0, got {true_range}")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    scale = 1.0 / (beta * 10.0 ** (snr_db / 10.0))
    measured = true_range * math.exp(scale * rng.standard_normal())
    s2 = scale * scale
    variance = true_range**2 * (math.exp(s2) - 1.0) * math.exp(s2)
    return RangeMeasurement(receiver_id=receiver_id, range=measured, variance=variance)
