"""Experiment runner: config-driven sweeps with CSV/JSON artifacts.

Configs are flat-section text files (configparser syntax) with typed
keys; the key list is documented in the README.  Outputs are CSV tables
plus a JSON sidecar carrying the schema version, a full config echo,
column documentation and wall-clock timings, so a run is reproducible
from its artifacts alone.  Closed-form paths re-emit byte-identical
files for a fixed config.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 acceptance
failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import bergmanweil as bw
from . import capacity as cap
from . import toeplitz as tp
from . import widths as wd
from .acceptance import run_acceptance
from .bergman import RadialWeight, kernel_diagonal, ma_density
from .errors import NumericError, ParameterError, WidthlabError

SCHEMA_VERSION = "1"

EXPERIMENT_KINDS = (
    "widths",
    "toeplitz-scan",
    "bergman-density",
    "capacity",
    "bw-approx",
    "verify",
)


class UsageError(ParameterError):
    """Config/flag problem: reported with the offending field path, exit 2."""


@dataclass
class ExperimentConfig:
    kind: str
    condenser: cap.Condenser | None = None
    weight: RadialWeight | None = None
    k: float = 0.0
    symbol: tp.SymbolSpec | None = None
    k_list: tuple[float, ...] = ()
    M: int = 64
    m_list: tuple[int, ...] = ()
    gamma: float = 0.5
    z: tuple[complex, ...] = ()
    sublevel_c: float | None = None
    shrink: float | None = None
    grid_spec: dict = field(default_factory=dict)
    out_dir: Path = Path("out")
    jobs: int = 1
    tolerances: dict = field(default_factory=dict)
    echo: dict = field(default_factory=dict)


@dataclass
class RunArtifact:
    paths: list[Path]
    schema_version: str
    config_echo: dict
    timings: dict


def _floats(raw: str, path: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError as exc:
        raise UsageError(f"{path}: expected numbers, got {raw!r}") from exc


def _ints(raw: str, path: str) -> tuple[int, ...]:
    out = []
    for tok in raw.replace(",", " ").split():
        if ":" in tok:  # inclusive range lo:hi[:step]
            parts = tok.split(":")
            try:
                lo, hi = int(parts[0]), int(parts[1])
                step = int(parts[2]) if len(parts) > 2 else 1
            except ValueError as exc:
                raise UsageError(f"{path}: bad range {tok!r}") from exc
            out.extend(range(lo, hi + 1, step))
        else:
            try:
                out.append(int(tok))
            except ValueError as exc:
                raise UsageError(f"{path}: expected integers, got {tok!r}") from exc
    return tuple(out)


def _complexes(raw: str, path: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(v) for v in raw.replace(",", " ").split())
    except ValueError as exc:
        raise UsageError(f"{path}: expected complex numbers, got {raw!r}") from exc


def _parse_condenser(cfg: configparser.ConfigParser) -> cap.Condenser | None:
    if not cfg.has_section("condenser"):
        return None
    sec = cfg["condenser"]
    family = sec.get("family", "reinhardt").strip()
    a = _floats(sec.get("a", ""), "condenser.a")
    b = _floats(sec.get("b", ""), "condenser.b")
    if not a or not b:
        raise UsageError("condenser.a and condenser.b are required")
    try:
        if family == "reinhardt":
            return cap.ReinhardtCondenser(a, b)
        if family == "polyhedral":
            p = tuple(int(v) for v in _ints(sec.get("p", ""), "condenser.p"))
            c_reg = None
            if sec.get("c_reg"):
                c_reg = _complexes(sec["c_reg"], "condenser.c_reg")
            return cap.PolyhedralCondenser(p, a, b, c_reg)
    except WidthlabError as exc:
        raise UsageError(f"condenser: {exc}") from exc
    raise UsageError(f"condenser.family: unknown family {family!r}")


def _parse_weight(cfg: configparser.ConfigParser) -> tuple[RadialWeight | None, float]:
    if not cfg.has_section("weight"):
        return None, 0.0
    sec = cfg["weight"]
    tau = _floats(sec.get("tau", "1.0"), "weight.tau")
    R = _floats(sec.get("R", "1.0"), "weight.R")
    k = float(sec.get("k", "0.0"))
    try:
        return RadialWeight(tau, R), k
    except WidthlabError as exc:
        raise UsageError(f"weight: {exc}") from exc


def _parse_symbol(cfg: configparser.ConfigParser) -> tp.SymbolSpec | None:
    if not cfg.has_section("symbol"):
        return None
    sec = cfg["symbol"]
    kind = sec.get("kind", "radial-disc").strip()
    outer = _floats(sec.get("outer", ""), "symbol.outer")
    inner = _floats(sec.get("inner", "0 " * len(outer)), "symbol.inner")
    try:
        return tp.SymbolSpec(kind, inner, outer)
    except WidthlabError as exc:
        raise UsageError(f"symbol: {exc}") from exc


def load_config(path: Path, kind: str, out_dir: Path | None, jobs: int) -> ExperimentConfig:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cfg.read(path)
    if not read:
        raise UsageError(f"config file {path} not found")
    exp = cfg["experiment"] if cfg.has_section("experiment") else {}
    cfg_kind = exp.get("kind", kind).strip()
    if cfg_kind != kind:
        raise UsageError(
            f"experiment.kind: config says {cfg_kind!r} but subcommand is {kind!r}"
        )
    sweep = cfg["sweep"] if cfg.has_section("sweep") else {}
    weight, k = _parse_weight(cfg)
    config = ExperimentConfig(
        kind=kind,
        condenser=_parse_condenser(cfg),
        weight=weight,
        k=k,
        symbol=_parse_symbol(cfg),
        k_list=_floats(sweep.get("k_list", ""), "sweep.k_list"),
        M=int(sweep.get("M", "64")),
        m_list=_ints(sweep.get("m_list", ""), "sweep.m_list"),
        gamma=float(sweep.get("gamma", "0.5")),
        z=_complexes(sweep.get("z", ""), "sweep.z"),
        sublevel_c=float(sweep["c"]) if sweep.get("c") else None,
        shrink=float(sweep["shrink"]) if sweep.get("shrink") else None,
        grid_spec=dict(cfg["grid"]) if cfg.has_section("grid") else {},
        out_dir=out_dir
        or Path(cfg.get("output", "directory", fallback="out")),
        jobs=jobs,
        tolerances={
            key: float(val) for key, val in cfg["tolerances"].items()
        }
        if cfg.has_section("tolerances")
        else {},
        echo={s: dict(cfg[s]) for s in cfg.sections()},
    )
    if config.M < 1:
        raise UsageError(f"sweep.M: must be >= 1, got {config.M}")
    return config


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_sidecar(path: Path, config: ExperimentConfig, columns: dict, timings: dict,
                  summary: dict | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "widthlab_version": __version__,
        "config_echo": config.echo,
        "columns": columns,
        "timings_seconds": timings,
    }
    if summary is not None:
        doc["summary"] = summary
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _condenser_summary(cond: cap.Condenser) -> dict:
    out = {"a": list(cond.a), "b": list(cond.b), "n": cond.n,
           "multiplicity": cond.multiplicity}
    if isinstance(cond, cap.PolyhedralCondenser):
        out["family"] = "polyhedral"
        out["p"] = list(cond.p)
        out["c_reg"] = [repr(c) for c in cond.c_reg]
    else:
        out["family"] = "reinhardt"
    return out


def run_widths(config: ExperimentConfig) -> RunArtifact:
    if config.condenser is None or not isinstance(config.condenser, cap.ReinhardtCondenser):
        raise UsageError("condenser: widths experiments require a reinhardt condenser")
    cond = config.condenser
    t0 = time.perf_counter()
    tables = [wd.embedding_widths(cond, k=config.k, w=config.weight, M=config.M)]
    if config.k == 0.0:
        lower, upper = wd.supnorm_bounds(cond, config.M, s=config.shrink)
        tables += [lower, upper]
    capacity = cap.product_capacity(cond)
    target = wd.target_slope(capacity, cond.n)
    est = wd.slope_estimate(tables[0], cond.n, target=target)
    elapsed = time.perf_counter() - t0

    config.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = config.out_dir / "widths.csv"
    rows = []
    for table in tables:
        for m, (dv, lg) in enumerate(zip(table.d, table.log_d), start=1):
            rows.append((m, dv, lg, table.kind))
    write_csv(csv_path, ["m", "d_m", "log_d_m", "kind"], rows)
    summary = {
        "condenser": _condenser_summary(cond),
        "capacity": capacity.value,
        "target_slope": target,
        "fitted_slope": est.slope,
        "relative_error": est.relative_error,
        "window": list(est.window),
        "residual": est.residual,
        "k": config.k,
    }
    json_path = config.out_dir / "widths.json"
    write_sidecar(
        json_path,
        config,
        {
            "m": "width index (1-based)",
            "d_m": "Kolmogorov number (0.0 once past double-precision underflow)",
            "log_d_m": "natural log of d_m (authoritative)",
            "kind": "hilbert-exact | supnorm-lower | supnorm-upper",
        },
        {"total": elapsed},
        summary,
    )
    return RunArtifact([csv_path, json_path], SCHEMA_VERSION, config.echo, {"total": elapsed})


def run_toeplitz_scan(config: ExperimentConfig) -> RunArtifact:
    if config.weight is None or config.symbol is None:
        raise UsageError("toeplitz-scan requires [weight] and [symbol] sections")
    if not config.k_list:
        raise UsageError("sweep.k_list: at least one scale is required")
    t0 = time.perf_counter()
    target = ma_density(config.weight, (0.0,) * config.weight.n) * config.symbol.lebesgue_measure()

    def one(k: float) -> dict:
        table = tp.spectrum(config.weight, k, config.symbol)
        count = table.count_above(config.gamma)
        return {"k": k, "count": count,
                "count_over_kn": count / k**config.weight.n}

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(one, config.k_list))
    else:
        rows = [one(k) for k in config.k_list]
    elapsed = time.perf_counter() - t0

    config.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = config.out_dir / "toeplitz_scan.csv"
    write_csv(
        csv_path,
        ["k", "count", "count_over_kn", "target"],
        [(r["k"], r["count"], r["count_over_kn"], target) for r in rows],
    )
    json_path = config.out_dir / "toeplitz_scan.json"
    write_sidecar(
        json_path,
        config,
        {
            "k": "semiclassical scale",
            "count": "number of eigenvalues above gamma",
            "count_over_kn": "count / k^n",
            "target": "Monge-Ampere mass of the symbol support",
        },
        {"total": elapsed},
        {"gamma": config.gamma, "target": target,
         "final_count_over_kn": rows[-1]["count_over_kn"]},
    )
    return RunArtifact([csv_path, json_path], SCHEMA_VERSION, config.echo, {"total": elapsed})


def run_bergman_density(config: ExperimentConfig) -> RunArtifact:
    if config.weight is None:
        raise UsageError("bergman-density requires a [weight] section")
    if not config.z:
        raise UsageError("sweep.z: an evaluation point is required")
    if not config.k_list:
        raise UsageError("sweep.k_list: at least one scale is required")
    w = config.weight
    z = config.z
    if len(z) != w.n:
        raise UsageError(f"sweep.z: point dimension {len(z)} != weight dimension {w.n}")
    t0 = time.perf_counter()
    density = ma_density(w, z)
    rows = []
    for k in config.k_list:
        kd = kernel_diagonal(w, k, z)
        log_ratio = kd.log_value - 2.0 * k * w.phi(z) - w.n * math.log(k) - math.log(density)
        rows.append((k, kd.value, kd.remainder_bound, math.exp(log_ratio)))
    elapsed = time.perf_counter() - t0

    config.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = config.out_dir / "bergman_density.csv"
    write_csv(csv_path, ["k", "kernel_diagonal", "remainder_bound", "density_ratio"], rows)
    json_path = config.out_dir / "bergman_density.json"
    write_sidecar(
        json_path,
        config,
        {
            "k": "semiclassical scale",
            "kernel_diagonal": "B_{k phi}(z, z)",
            "remainder_bound": "certified truncation remainder",
            "density_ratio": "k^-n B(z,z) e^{-2k phi(z)} / MA-density",
        },
        {"total": elapsed},
        {"z": [repr(v) for v in z], "ma_density": density,
         "final_ratio": rows[-1][3]},
    )
    return RunArtifact([csv_path, json_path], SCHEMA_VERSION, config.echo, {"total": elapsed})


def run_capacity(config: ExperimentConfig) -> RunArtifact:
    t0 = time.perf_counter()
    summary: dict = {}
    if config.condenser is not None:
        cv = cap.product_capacity(config.condenser)
        summary["closed_form"] = {
            "condenser": _condenser_summary(config.condenser),
            "capacity": cv.value,
            "metadata": cv.metadata,
        }
        if config.sublevel_c is not None:
            scaling = cap.sublevel_scale(config.condenser, config.sublevel_c)
            summary["sublevel"] = {
                "c": config.sublevel_c,
                "capacity": scaling.capacity.value,
                "scaled_b": list(scaling.condenser.b),
            }
    if config.grid_spec:
        spec = config.grid_spec
        if "file" in spec:
            grid = cap.load_grid(spec["file"])
        elif spec.get("builtin", "annulus") == "annulus":
            grid = cap.annulus_grid(
                a=float(spec.get("a", "1.0")),
                b=float(spec.get("b", "0.5")),
                nodes=int(spec.get("nodes", "1024")),
                pad=float(spec.get("pad", "0.05")),
            )
        elif spec["builtin"] == "square":
            grid = cap.square_domain_disc_grid(
                side=float(spec.get("side", "2.0")),
                b=float(spec.get("b", "0.5")),
                nodes=int(spec.get("nodes", "512")),
            )
        else:
            raise UsageError(f"grid.builtin: unknown builtin {spec['builtin']!r}")
        sol = cap.planar_capacity_fd(grid)
        summary["flux_integral"] = {
            "capacity": sol.capacity.value,
            "residual": sol.residual,
            "iterations": sol.iterations,
            "h": grid.h,
            "contours": {
                repr(lv): cap.flux_through_level(grid, lv)
                for lv in (-0.75, -0.5, -0.25)
            },
        }
    if not summary:
        raise UsageError("capacity experiments need a [condenser] or [grid] section")
    elapsed = time.perf_counter() - t0
    config.out_dir.mkdir(parents=True, exist_ok=True)
    json_path = config.out_dir / "capacity.json"
    write_sidecar(json_path, config, {}, {"total": elapsed}, summary)
    return RunArtifact([json_path], SCHEMA_VERSION, config.echo, {"total": elapsed})


def run_bw_approx(config: ExperimentConfig) -> RunArtifact:
    if config.condenser is None:
        raise UsageError("bw-approx requires a [condenser] section")
    m_list = config.m_list or tuple(range(1, config.M + 1))
    t0 = time.perf_counter()
    spec = bw.ApproximantSpec(config.condenser, max(m_list))
    measured = bw.measured_error_profile(spec, max(m_list))
    n = config.condenser.n
    rows = []
    for m in m_list:
        bound = bw.error_bound(spec, m)
        slope = -bound.log_value / m ** (1.0 / n) if m > 0 else float("nan")
        rows.append((m, float(measured[m]), bound.value, slope))
    bound_full = bw.error_bound(spec, max(m_list))
    elapsed = time.perf_counter() - t0

    config.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = config.out_dir / "bw_approx.csv"
    write_csv(csv_path, ["m", "measured_error", "lemma_bound", "bound_slope"], rows)
    json_path = config.out_dir / "bw_approx.json"
    write_sidecar(
        json_path,
        config,
        {
            "m": "retained staircase size",
            "measured_error": "worst tail over the Cauchy coefficient ball",
            "lemma_bound": "explicit truncation bound",
            "bound_slope": "-log(bound) / m^(1/n)",
        },
        {"total": elapsed},
        {
            "condenser": _condenser_summary(config.condenser),
            "hefer_constant": bound_full.constant,
            "decay_constant": bound_full.decay_constant,
            "rank_bound_at_max_m": spec.rank_bound,
        },
    )
    return RunArtifact([csv_path, json_path], SCHEMA_VERSION, config.echo, {"total": elapsed})


PROFILES = {
    "default": None,
    "closed-form": ("closed-form",),
}


def run_verify(profile: str, overrides: dict, out_dir: Path | None) -> int:
    if profile not in PROFILES:
        raise UsageError(f"--profile: unknown profile {profile!r}; "
                         f"choose from {sorted(PROFILES)}")
    results = run_acceptance(tags=PROFILES[profile], overrides=overrides or None)
    for res in results:
        print(res.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed (profile {profile!r})")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        report = [
            {"id": r.cid, "name": r.name, "tags": list(r.tags), "passed": r.passed,
             "detail": r.detail, "seconds": r.seconds}
            for r in results
        ]
        with open(out_dir / "verify.json", "w") as fh:
            json.dump({"schema_version": SCHEMA_VERSION, "profile": profile,
                       "results": report}, fh, indent=2)
            fh.write("\n")
    return 0 if passed == len(results) else 4


RUNNERS = {
    "widths": run_widths,
    "toeplitz-scan": run_toeplitz_scan,
    "bergman-density": run_bergman_density,
    "capacity": run_capacity,
    "bw-approx": run_bw_approx,
}


def run(config: ExperimentConfig) -> RunArtifact:
    """Dispatch one experiment config; deterministic outputs for fixed config."""
    if config.kind not in RUNNERS:
        raise UsageError(f"experiment.kind: unknown kind {config.kind!r}")
    return RUNNERS[config.kind](config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="widthlab",
        description="widths, Toeplitz spectra, Bergman kernels and capacities "
        "of explicit condensers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind)
        if kind != "verify":
            p.add_argument("--config", required=True, type=Path)
        else:
            p.add_argument("--config", type=Path, default=None,
                           help="optional config with a [tolerances] section")
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--profile", default="default")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            overrides = {}
            if args.config is not None:
                cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
                if not cfg.read(args.config):
                    raise UsageError(f"config file {args.config} not found")
                if cfg.has_section("tolerances"):
                    overrides = {k: float(v) for k, v in cfg["tolerances"].items()}
            return run_verify(args.profile, overrides, args.out)
        config = load_config(args.config, args.command, args.out, args.jobs)
        artifact = run(config)
        for path in artifact.paths:
            print(path)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc} {exc.details}", file=sys.stderr)
        return 3
    except WidthlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
