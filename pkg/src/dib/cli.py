"""Experiment driver: config ingestion, s-sweeps, envelopes, file emission.

One JSON document describes an experiment (model kind, source, s-grid,
solver overrides).  The sweep produces one trade-off point per ``s`` value,
deterministically for a fixed seed, and emits a CSV table, a JSON sidecar
with full metadata, plot-data files, and a rendered figure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from dib import discrete, gaussian, oracles
from dib.gaussian_core import (
    GaussianSource,
    b_from_encoders,
    fisher_identity_residual,
    region_bound,
)
from dib.info_core import ConditionalPmf, DiscreteSource, EncoderSet, Pmf

LN2 = math.log(2.0)

CSV_COLUMNS = ("s", "delta", "r_sum", "unit", "iterations", "converged",
               "restart", "flags")


class ConfigError(ValueError):
    """Experiment configuration is malformed; message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    source: dict
    s_grid: tuple[float, ...]
    solver: dict = field(default_factory=dict)
    seed: int = 0
    unit: str = "nats"
    envelope: bool = True

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        model = raw.get("model")
        if model not in ("discrete", "gaussian"):
            raise ConfigError("field 'model' must be 'discrete' or 'gaussian'")
        source = raw.get("source")
        if not isinstance(source, dict):
            raise ConfigError("field 'source' must be an object")
        s_grid = raw.get("s_grid")
        if (not isinstance(s_grid, list) or not s_grid
                or any(not isinstance(s, (int, float)) or s <= 0 for s in s_grid)
                or sorted(s_grid) != s_grid):
            raise ConfigError(
                "field 's_grid' must be a non-empty ascending list of "
                "positive numbers"
            )
        unit = raw.get("unit", "nats")
        if unit not in ("nats", "bits"):
            raise ConfigError("field 'unit' must be 'nats' or 'bits'")
        solver = raw.get("solver", {})
        if not isinstance(solver, dict):
            raise ConfigError("field 'solver' must be an object")
        return ExperimentConfig(
            model=model,
            source=source,
            s_grid=tuple(float(s) for s in s_grid),
            solver=solver,
            seed=int(raw.get("seed", 0)),
            unit=unit,
            envelope=bool(raw.get("envelope", True)),
        )

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "source": self.source,
            "s_grid": list(self.s_grid),
            "solver": self.solver,
            "seed": self.seed,
            "unit": self.unit,
            "envelope": self.envelope,
        }


@dataclass
class CurveArtifact:
    rows: list          # dicts with s/delta/r_sum/... in nats
    envelope: list      # [(r, delta)] in nats
    metadata: dict
    solutions: list = field(default_factory=list)  # solver outputs, per row


# ---------------------------------------------------------------------------
# source parsing
# ---------------------------------------------------------------------------

def parse_discrete_source(spec: dict) -> tuple[DiscreteSource, tuple[int, ...] | None]:
    try:
        px = Pmf(np.asarray(spec["px"], dtype=float))
        channels = tuple(ConditionalPmf(np.asarray(c, dtype=float))
                         for c in spec["channels"])
        source = DiscreteSource(px, channels)
    except KeyError as exc:
        raise ConfigError(f"source: missing field {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"source: {exc}") from exc
    u_sizes = spec.get("u_sizes")
    if u_sizes is not None:
        u_sizes = tuple(int(u) for u in u_sizes)
    return source, u_sizes


def parse_gaussian_source(spec: dict) -> tuple[GaussianSource, tuple[int, ...] | None]:
    try:
        source = GaussianSource(
            np.asarray(spec["sigma_x"], dtype=float),
            tuple(np.asarray(h, dtype=float) for h in spec["h"]),
            tuple(np.asarray(n, dtype=float) for n in spec["sigma_n"]),
            complex_mode=bool(spec.get("complex_mode", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"source: missing field {exc}") from exc
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ConfigError(f"source: {exc}") from exc
    dims = spec.get("dims")
    if dims is not None:
        dims = tuple(int(d) for d in dims)
    return source, dims


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}"
        ) from exc
    if isinstance(raw, dict) and isinstance(raw.get("source"), dict) \
            and "path" in raw["source"] and len(raw["source"]) == 1:
        with open(raw["source"]["path"], "r", encoding="utf-8") as fh:
            raw["source"] = json.load(fh)
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def run_sweep(config: ExperimentConfig, keep_solutions: bool = False
              ) -> CurveArtifact:
    """One trade-off point per s value; envelope when requested."""
    if config.model == "discrete":
        source, u_sizes = parse_discrete_source(config.source)
        rows, solutions = _sweep_discrete(source, u_sizes, config)
    else:
        source, dims = parse_gaussian_source(config.source)
        rows, solutions = _sweep_gaussian(source, dims, config)

    envelope = upper_envelope([(r["r_sum"], r["delta"]) for r in rows]) \
        if config.envelope else []
    metadata = {
        "config": config.to_dict(),
        "seed": config.seed,
        "version": _version(),
        "model": config.model,
    }
    return CurveArtifact(rows=rows, envelope=envelope, metadata=metadata,
                         solutions=solutions if keep_solutions else [])


def _sweep_discrete(source, u_sizes, config):
    rows, solutions = [], []
    overrides = dict(config.solver)
    if u_sizes is not None:
        overrides.setdefault("u_sizes", u_sizes)
    for s in config.s_grid:
        cfg = _make_config(discrete.SolverConfig, s, config.seed, overrides)
        encoders, decoders, point = discrete.solve(source, cfg)
        rows.append(_row_from_point(point))
        solutions.append((source, encoders, decoders, point))
    return rows, solutions


def _sweep_gaussian(source, dims, config):
    rows, solutions = [], []
    overrides = dict(config.solver)
    if dims is not None:
        overrides.setdefault("dims", dims)
    for s in config.s_grid:
        cfg = _make_config(gaussian.GaussianSolverConfig, s, config.seed,
                           overrides)
        encoders, point = gaussian.solve(source, cfg)
        rows.append(_row_from_point(point))
        solutions.append((source, encoders, None, point))
    return rows, solutions


def _make_config(cls, s, seed, overrides):
    kwargs = {"s": float(s), "seed": seed}
    for key, value in overrides.items():
        if key in ("u_sizes", "dims"):
            value = tuple(int(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from exc


def _row_from_point(point) -> dict:
    flags = []
    if not point.converged:
        flags.append("non_converged")
    if point.diagnostics.get("bracket_floored"):
        flags.append("bracket_floored")
    return {
        "s": point.s,
        "delta": point.delta,
        "r_sum": point.r_sum,
        "iterations": point.iterations,
        "converged": point.converged,
        "restart": point.restart_index,
        "flags": ";".join(flags),
        "diagnostics": {
            k: v for k, v in point.diagnostics.items()
            if isinstance(v, (int, float, bool))
        },
    }


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------

def upper_envelope(points) -> list[tuple[float, float]]:
    """Upper concave envelope in the (rate, relevance) plane.

    Monotone-chain scan; collinear points are retained (they are achievable
    and useful for plotting), strictly dominated points are dropped.
    """
    pts = sorted((float(r), float(d)) for r, d in points)
    if not pts:
        raise ValueError("need at least one point")
    # for equal rates only the highest relevance can be on the envelope
    dedup = {}
    for r, d in pts:
        dedup[r] = max(dedup.get(r, -math.inf), d)
    pts = sorted(dedup.items())
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) > 0.0:
            hull.pop()
        hull.append(p)
    return hull


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _unit_scale(unit: str) -> float:
    return 1.0 / LN2 if unit == "bits" else 1.0


def emit(artifact: CurveArtifact, out_dir, unit: str = "nats",
         basename: str = "curve", figure: bool = True,
         oracle_curves: dict | None = None) -> dict:
    """Write CSV + JSON sidecar (+ plot data and figure); returns the paths."""
    import os

    scale = _unit_scale(unit)
    paths = {}
    try:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{basename}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in artifact.rows:
                fh.write(",".join([
                    _fmt(row["s"]),
                    _fmt(row["delta"] * scale),
                    _fmt(row["r_sum"] * scale),
                    unit,
                    str(row["iterations"]),
                    "true" if row["converged"] else "false",
                    str(row["restart"]),
                    row["flags"],
                ]) + "\n")
        paths["csv"] = csv_path

        sidecar = {
            "metadata": artifact.metadata,
            "unit": unit,
            "rows": [
                {k: v for k, v in row.items()}
                for row in artifact.rows
            ],
            "envelope": [[r, d] for r, d in artifact.envelope],
        }
        json_path = os.path.join(out_dir, f"{basename}.json")
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths["json"] = json_path

        dat_path = os.path.join(out_dir, f"{basename}_points.dat")
        with open(dat_path, "w", encoding="utf-8", newline="\n") as fh:
            for row in artifact.rows:
                fh.write(f"{_fmt(row['r_sum'] * scale)}\t"
                         f"{_fmt(row['delta'] * scale)}\n")
        paths["points"] = dat_path

        if artifact.envelope:
            env_path = os.path.join(out_dir, f"{basename}_envelope.dat")
            with open(env_path, "w", encoding="utf-8", newline="\n") as fh:
                for r, d in artifact.envelope:
                    fh.write(f"{_fmt(r * scale)}\t{_fmt(d * scale)}\n")
            paths["envelope"] = env_path

        if oracle_curves:
            for name, pts in oracle_curves.items():
                opath = os.path.join(out_dir, f"{basename}_{name}.csv")
                with open(opath, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write("r_sum,delta,unit\n")
                    if isinstance(pts, (int, float)):
                        fh.write(f"inf,{_fmt(pts * scale)},{unit}\n")
                    else:
                        for r, d in pts:
                            fh.write(f"{_fmt(r * scale)},{_fmt(d * scale)},"
                                     f"{unit}\n")
                paths[name] = opath

        if figure:
            from dib.plotting import render_curve_figure

            fig_path = os.path.join(out_dir, f"{basename}.png")
            scaled_rows = [
                {**row, "r_sum": row["r_sum"] * scale,
                 "delta": row["delta"] * scale}
                for row in artifact.rows
            ]
            scaled_env = [(r * scale, d * scale) for r, d in artifact.envelope]
            scaled_oracles = None
            if oracle_curves:
                scaled_oracles = {
                    name: (pts * scale if isinstance(pts, (int, float))
                           else [(r * scale, d * scale) for r, d in pts])
                    for name, pts in oracle_curves.items()
                }
            render_curve_figure(scaled_rows, scaled_env, fig_path, unit=unit,
                                oracle_curves=scaled_oracles)
            paths["figure"] = fig_path
    except OSError as exc:
        raise IOError(f"while writing to {out_dir}: {exc}") from exc
    return paths


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def verify_solutions(artifact: CurveArtifact) -> list[dict]:
    """Invariant checks on the solved points (needs keep_solutions=True)."""
    reports = []
    for row, solution in zip(artifact.rows, artifact.solutions):
        source, encoders, decoders, point = solution
        checks = {}
        trace = point.diagnostics.get("f_bar_trace") \
            or point.diagnostics.get("objective_trace") or []
        checks["descent"] = all(
            b <= a + 1e-7 for a, b in zip(trace, trace[1:])
        )
        checks["delta_consistency"] = point.diagnostics.get(
            "delta_gap", 0.0) < 1e-6
        if isinstance(source, DiscreteSource):
            checks.update(_verify_discrete(source, encoders, point))
        else:
            checks.update(_verify_gaussian(source, encoders, point))
        reports.append({"s": row["s"], "checks": checks,
                        "ok": all(checks.values())})
    return reports


def _verify_discrete(source, encoders, point):
    from dib.discrete import region_min, update_decoders, update_encoders

    checks = {}
    if point.s > 0:
        decoders = update_decoders(source, encoders)
        refreshed = update_encoders(source, encoders, decoders, point.s)
        residual = max(
            np.abs(new.rows - old.rows).sum(axis=1).max() / 2.0
            for new, old in zip(refreshed.encoders, encoders.encoders)
        )
        checks["fixed_point"] = bool(residual < 1e-4)
    joint = discrete.induce_joint(source, encoders)
    rates = [joint.mi_y_u(k) for k in range(joint.K)]
    checks["region_consistency"] = bool(
        region_min(source, encoders, rates, joint=joint)
        >= joint.mi_x_u_all() - 1e-6
    )
    return checks


def _verify_gaussian(source, encoders, point):
    checks = {}
    b = b_from_encoders(source, encoders)
    eigs = np.concatenate([np.linalg.eigvalsh(bk) for bk in b.b])
    checks["b_sandwich"] = bool(eigs.min() >= -1e-9 and eigs.max() <= 1 + 1e-9)
    residual = max(
        fisher_identity_residual(source, encoders, subset)
        for subset in ([], list(range(source.n_encoders)))
    )
    checks["fisher_identity"] = bool(residual < 1e-6)
    joint = gaussian.induce_gaussian_joint(source, encoders)
    rates = [joint.mi_y_u(k) for k in range(joint.K)]
    checks["region_achievability"] = bool(
        region_bound(source, b, rates) >= joint.mi_x_u_all() - 1e-6
    )
    return checks


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _version() -> str:
    from dib import __version__

    return __version__


def _oracle_curves(config: ExperimentConfig):
    """Reference curves to emit alongside the sweep, model permitting."""
    if config.model != "gaussian":
        return None
    source, _ = parse_gaussian_source(config.source)
    curves = {}
    bound_curve, limit = oracles.centralized_bounds(
        source, s_grid=config.s_grid, seed=config.seed
    )
    curves["centralized_bound"] = list(bound_curve.points)
    curves["joint_information"] = limit
    if source.x_dim == 1 and all(m == 1 for m in source.y_dims) \
            and source.n_encoders <= 2:
        rates = np.linspace(0.0, 2.5 * limit + 1e-9, 26)
        curves["scalar_grid_oracle"] = list(
            oracles.gaussian_scalar_curve(source, rates).points
        )
    return curves


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dib",
        description="Distributed information bottleneck sweeps",
    )
    parser.add_argument("--config", required=True, help="experiment JSON")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--unit", choices=("nats", "bits"), default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--no-envelope", action="store_true")
    parser.add_argument("--no-figure", action="store_true")
    parser.add_argument("--oracle", action="store_true",
                        help="also emit oracle curves")
    parser.add_argument("--verify", action="store_true",
                        help="run the invariant suite on the solutions")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.unit is not None:
            config = replace(config, unit=args.unit)
        if args.no_envelope:
            config = replace(config, envelope=False)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    artifact = run_sweep(config, keep_solutions=args.verify)
    oracle_curves = _oracle_curves(config) if args.oracle else None

    if args.verify:
        reports = verify_solutions(artifact)
        artifact.metadata["verify"] = reports
        for report in reports:
            status = "ok" if report["ok"] else "FAILED"
            detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}"
                               for k, v in report["checks"].items())
            print(f"verify s={report['s']:g}: {status} ({detail})")

    try:
        paths = emit(artifact, args.out, unit=config.unit,
                     figure=not args.no_figure, oracle_curves=oracle_curves)
    except IOError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2

    n_bad = sum(1 for row in artifact.rows if not row["converged"])
    print(f"wrote {paths['csv']} ({len(artifact.rows)} points, "
          f"{n_bad} non-converged)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
