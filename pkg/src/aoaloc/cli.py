"""Command-line front end: YAML config in, CSV artifacts out.

Angles cross this boundary in degrees; everything internal is radians. A
single seed governs an invocation (config `seed`, overridable with --seed);
repeated runs with the same config produce byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np
import yaml

from .bounds import crlb_trace
from .errors import LocalizationError, ParseError, ValidationError
from .geometry import Point2, ReceiverPose, true_bearing, wrap_angle
from .nlos import bootstrap_failure_prob, choose_num_seeds, failure_prob_bounds, _pair_counts
from .sim import (
    CampaignSpec,
    Wall,
    ray_trace,
    ring_receivers,
    run_monte_carlo,
    write_metrics,
    write_trial_records,
)

COMMANDS = ("simulate-los", "simulate-nlos", "crlb-map", "raytrace", "failure-prob", "choose-m")


@dataclass(frozen=True)
class CliConfig:
    command: str
    parameters: dict[str, Any]
    seed: int
    output_path: Optional[str]


def parse_config(text: str) -> CliConfig:
    """Parse and validate a YAML/JSON configuration document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed configuration document: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ParseError("configuration must be a key-value mapping")
    doc = dict(doc)
    if "command" not in doc:
        raise ParseError("configuration is missing required key 'command'")
    command = doc.pop("command")
    if command not in COMMANDS:
        raise ValidationError(f"command must be one of {COMMANDS}, got {command!r}")
    seed = doc.pop("seed", 0)
    if not isinstance(seed, int):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    output = doc.pop("output", None)
    if output is not None and not isinstance(output, str):
        raise ValidationError(f"output must be a path string, got {output!r}")
    _validate_parameters(command, doc)
    return CliConfig(command=command, parameters=doc, seed=seed, output_path=output)


def _as_int(params, key, default=None, minimum=None) -> int:
    value = params.get(key, default)
    if value is None:
        raise ValidationError(f"missing required key '{key}'")
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"'{key}' must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"'{key}' must be >= {minimum}, got {value}")
    return value


def _as_float(params, key, default=None, low=None, high=None, low_open=False, high_open=False):
    value = params.get(key, default)
    if value is None:
        raise ValidationError(f"missing required key '{key}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"'{key}' must be a number, got {value!r}")
    value = float(value)
    if low is not None and (value <= low if low_open else value < low):
        raise ValidationError(f"'{key}' must be {'>' if low_open else '>='} {low}, got {value}")
    if high is not None and (value >= high if high_open else value > high):
        raise ValidationError(f"'{key}' must be {'<' if high_open else '<='} {high}, got {value}")
    return value


def _as_float_list(params, key, default=None, **kwargs) -> tuple[float, ...]:
    value = params.get(key, default)
    if value is None:
        raise ValidationError(f"missing required key '{key}'")
    items = value if isinstance(value, (list, tuple)) else [value]
    return tuple(_as_float({key: v}, key, **kwargs) for v in items)


def _as_int_list(params, key, default=None, minimum=None) -> tuple[int, ...]:
    value = params.get(key, default)
    if value is None:
        raise ValidationError(f"missing required key '{key}'")
    items = value if isinstance(value, (list, tuple)) else [value]
    return tuple(_as_int({key: v}, key, minimum=minimum) for v in items)


def _validate_parameters(command: str, params: dict) -> None:
    """Eagerly validate the numeric ranges each command relies on."""
    if command in ("simulate-los", "simulate-nlos"):
        _as_int_list(params, "n", minimum=3)
        _as_float_list(params, "sigma_deg", low=0.0, low_open=True)
        _as_int(params, "trials", minimum=1)
    if command == "simulate-nlos":
        _as_float_list(params, "alpha", low=0.0, high=1.0, high_open=True)
        if "alpha_max" in params:
            _as_float(params, "alpha_max", low=0.0, high=1.0, low_open=True, high_open=True)
    if command == "crlb-map":
        _as_int(params, "n", minimum=3)
        _as_float(params, "sigma_deg", low=0.0, low_open=True)
        _as_float(params, "grid_step", default=0.05, low=0.0, low_open=True)
    if command == "raytrace":
        for key in ("walls", "source", "receivers"):
            if key not in params:
                raise ValidationError(f"missing required key '{key}'")
    if command in ("failure-prob", "choose-m"):
        _as_int(params, "n", minimum=2)
        _as_float_list(params, "alpha", low=0.0, high=1.0, high_open=True)
    if command == "choose-m":
        _as_float(params, "target_pfail", default=1e-3, low=0.0, high=1.0, low_open=True)


def _campaign_from_params(config: CliConfig, nlos: bool) -> CampaignSpec:
    p = config.parameters
    default_alg = "robust" if nlos else "sequential"
    algorithm = p.get("algorithm", default_alg)
    return CampaignSpec(
        algorithm=algorithm,
        n_values=_as_int_list(p, "n", minimum=3),
        sigmas_deg=_as_float_list(p, "sigma_deg", low=0.0, low_open=True),
        alphas=_as_float_list(p, "alpha", default=(0.0,), low=0.0, high=1.0, high_open=True)
        if nlos
        else (0.0,),
        trials=_as_int(p, "trials", minimum=1),
        seed=config.seed,
        field_radius=_as_float(p, "field_radius", default=1.0, low=0.0, low_open=True),
        outlier_mode=p.get("outlier_mode", "exact_count"),
        model_kind=p.get("model", "auto"),
        num_bootstraps=_as_int(p, "num_bootstraps", default=1, minimum=1),
        num_seeds=_as_int(p, "num_seeds", minimum=1) if "num_seeds" in p else None,
        threshold_alpha=_as_float(p, "alpha_max", low=0.0, high=1.0, low_open=True, high_open=True)
        if "alpha_max" in p
        else None,
        target_pfail=_as_float(p, "target_pfail", default=1e-3, low=0.0, high=1.0, low_open=True),
        with_range=bool(p.get("with_range", False)),
        range_beta=_as_float(p, "beta", default=3.0, low=0.0, low_open=True),
        range_snr_db=_as_float(p, "snr_db", default=12.0),
        compare_crlb=bool(p.get("compare_crlb", not nlos)),
    )


def _cmd_simulate(config: CliConfig, out_dir: Path, threads: int, nlos: bool) -> None:
    spec = _campaign_from_params(config, nlos=nlos)
    metrics, records = run_monte_carlo(spec, workers=threads)
    stem = "simulate_nlos" if nlos else "simulate_los"
    write_trial_records(out_dir / f"{stem}_trials.csv", records)
    write_metrics(out_dir / f"{stem}_metrics.csv", metrics)
    for m in metrics:
        print(
            f"n={m.n} sigma_deg={m.sigma_deg:g} alpha={m.alpha:g} "
            f"rms={m.rms_error:.6g} failure_rate={m.failure_rate:.4g}"
        )


def _cmd_crlb_map(config: CliConfig, out_dir: Path) -> None:
    p = config.parameters
    n = _as_int(p, "n", minimum=3)
    sigma = math.radians(_as_float(p, "sigma_deg", low=0.0, low_open=True))
    radius = _as_float(p, "field_radius", default=1.0, low=0.0, low_open=True)
    step = _as_float(p, "grid_step", default=0.05, low=0.0, low_open=True)
    receivers = ring_receivers(n, radius)
    rows = []
    axis = np.arange(-radius, radius + 0.5 * step, step)
    for y in axis:
        for x in axis:
            if x * x + y * y > radius * radius:
                continue
            rows.append((float(x), float(y), crlb_trace(Point2(float(x), float(y)), receivers, sigma)))
    path = out_dir / "crlb_map.csv"
    with open(path, "w") as fh:
        fh.write("x,y,crlb_trace\n")
        for x, y, v in rows:
            fh.write(f"{x:.12g},{y:.12g},{v:.12g}\n")
    print(f"wrote {len(rows)} grid points to {path}")


def _cmd_raytrace(config: CliConfig, out_dir: Path) -> None:
    p = config.parameters
    try:
        source = Point2(float(p["source"][0]), float(p["source"][1]))
        walls = tuple(
            Wall(Point2(float(w[0]), float(w[1])), Point2(float(w[2]), float(w[3])))
            for w in p["walls"]
        )
        positions = [Point2(float(r[0]), float(r[1])) for r in p["receivers"]]
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise ValidationError(f"malformed raytrace geometry: {exc}") from exc
    receivers = tuple(
        ReceiverPose(i, pos, wrap_angle(true_bearing(ReceiverPose(i, pos, 0.0), source)))
        for i, pos in enumerate(positions)
    )
    trace = ray_trace(walls, source, receivers)
    path = out_dir / "raytrace.csv"
    with open(path, "w") as fh:
        fh.write("receiver_id,los_blocked,kind,angle_deg\n")
        for entry in trace.entries:
            if not entry.nominal_angles:
                fh.write(f"{entry.receiver_id},{int(entry.los_blocked)},none,nan\n")
            for arrival in entry.nominal_angles:
                fh.write(
                    f"{entry.receiver_id},{int(entry.los_blocked)},{arrival.kind},"
                    f"{math.degrees(arrival.angle_global):.12g}\n"
                )
    print(f"wrote trace for {len(trace.entries)} receivers to {path}")


def _cmd_failure_prob(config: CliConfig, out_dir: Path) -> None:
    p = config.parameters
    n = _as_int(p, "n", minimum=2)
    alpha = _as_float_list(p, "alpha", low=0.0, high=1.0, high_open=True)[0]
    _, bad = _pair_counts(n, alpha)
    m_max = _as_int(p, "m_max", default=max(bad, 1), minimum=1)
    path = out_dir / "failure_prob.csv"
    with open(path, "w") as fh:
        fh.write("m,exact,lower,upper\n")
        for m in range(1, m_max + 1):
            exact = bootstrap_failure_prob(n, alpha, m)
            if m <= bad:
                lower, upper = failure_prob_bounds(n, alpha, m)
            else:
                lower = upper = 0.0
            fh.write(f"{m},{exact:.12g},{lower:.12g},{upper:.12g}\n")
    print(f"wrote {m_max} rows to {path}")


def _cmd_choose_m(config: CliConfig, out_dir: Path) -> None:
    p = config.parameters
    n = _as_int(p, "n", minimum=2)
    alphas = _as_float_list(p, "alpha", low=0.0, high=1.0, high_open=True)
    target = _as_float(p, "target_pfail", default=1e-3, low=0.0, high=1.0, low_open=True)
    path = out_dir / "choose_m.csv"
    with open(path, "w") as fh:
        fh.write("alpha,m_exact,m_bound\n")
        for alpha in alphas:
            if alpha <= 0.0:
                raise ValidationError(f"'alpha' must be > 0 for choose-m, got {alpha}")
            m_exact = choose_num_seeds(n, alpha, target, mode="exact")
            m_bound = choose_num_seeds(n, alpha, target, mode="bound")
            fh.write(f"{alpha:.12g},{m_exact},{m_bound}\n")
            print(f"alpha={alpha:g}: m_exact={m_exact} m_bound={m_bound}")


def run_command(
    config: CliConfig,
    out_override: Optional[str] = None,
    seed_override: Optional[int] = None,
    threads: int = 1,
) -> int:
    """Dispatch a validated config; returns the process exit status."""
    if seed_override is not None:
        config = CliConfig(config.command, config.parameters, seed_override, config.output_path)
    out_dir = Path(out_override or config.output_path or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if config.command == "simulate-los":
            _cmd_simulate(config, out_dir, threads, nlos=False)
        elif config.command == "simulate-nlos":
            _cmd_simulate(config, out_dir, threads, nlos=True)
        elif config.command == "crlb-map":
            _cmd_crlb_map(config, out_dir)
        elif config.command == "raytrace":
            _cmd_raytrace(config, out_dir)
        elif config.command == "failure-prob":
            _cmd_failure_prob(config, out_dir)
        elif config.command == "choose-m":
            _cmd_choose_m(config, out_dir)
        else:  # pragma: no cover - parse_config already rejects these
            raise ValidationError(f"unknown command {config.command!r}")
    except LocalizationError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="aoaloc", description="AoA cooperative localization simulator"
    )
    parser.add_argument("--config", required=True, help="YAML configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory for CSV artifacts")
    parser.add_argument("--threads", type=int, default=1, help="worker processes for campaigns")
    args = parser.parse_args(argv)
    try:
        config = parse_config(Path(args.config).read_text())
    except OSError as exc:
        json.dump({"error": "ConfigUnreadable", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except LocalizationError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return run_command(config, out_override=args.out, seed_override=args.seed, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
