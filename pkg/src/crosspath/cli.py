"""Command-line drivers: analytic bounds, sphere-integral error sweeps, walks, first-step trials."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import RegionModel, avmpe_circle, bounds_plane, first_step_reference, prob_sphere
from .plane_geometry import StepParams
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    integrate_Ip_numeric,
    integrate_Is,
)
from .simulation import (
    FIRST_STEP_CHUNK,
    WalkConfig,
    estimate_first_step,
    hypothetical_bands,
    run_replicas,
)
from .sphere_geometry import SphereStepParams

log = logging.getLogger("crosspath")

EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3
CSV_FORMAT = ".12g"

SIM_COLUMNS = ["k", "indicator", "F_k", "lo_band_plo", "hi_band_plo", "lo_band_phi", "hi_band_phi", "p_star"]
TABLE1_COLUMNS = ["d1", "d2", "rho", "I_s", "closed_form", "percent_error", "error_estimate", "evaluations", "status"]


class UsageError(Exception):
    pass


def _num(v) -> str:
    return format(v, CSV_FORMAT)


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------- option handling

def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def merged_options(args: argparse.Namespace) -> dict:
    """Config-file values overridden by any flag given on the command line."""
    opts = _load_config(getattr(args, "config", None))
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        opts[key] = value
    return opts


def _require(opts: dict, *names: str) -> None:
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _seed(opts: dict) -> int:
    seed = opts.get("seed")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy) % 2**64
        log.warning("no --seed given; generated seed %d", seed)
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be in [0, 2^64)")
    return seed


def _region(opts: dict) -> RegionModel:
    _require(opts, "region", "radius")
    try:
        return RegionModel(opts["region"], float(opts["radius"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _walk_config(opts: dict, steps: int = 1) -> WalkConfig:
    region = _region(opts)
    _require(opts, "d1", "d2")
    try:
        return WalkConfig(
            region=region,
            d1=float(opts["d1"]),
            d2=float(opts["d2"]),
            steps=int(steps),
            seed=_seed(opts),
            tau=float(opts.get("tau", 1.0)),
            replicas=int(opts.get("replicas", 1)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _quad_spec(opts: dict) -> QuadratureSpec:
    try:
        return QuadratureSpec(
            relative_tolerance=float(opts.get("tolerance", 1e-10)),
            max_subdivisions=int(opts.get("max_subdivisions", 400)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _manifest(command: str, opts: dict, seed, started: float, outputs: list[str]) -> dict:
    return {
        "command": command,
        "config": {k: v for k, v in sorted(opts.items()) if k not in ("manifest",)},
        "seed": seed,
        "version": __version__,
        "duration_seconds": time.perf_counter() - started,
        "outputs": outputs,
    }


def _emit_manifest(manifest: dict, opts: dict, default: Path | None) -> None:
    target = opts.get("manifest") or default
    if target is None:
        sys.stderr.write(json.dumps({"manifest": manifest}, sort_keys=True) + "\n")
    else:
        _write(Path(target), dumps(manifest))


def _manifest_path(out: str | None) -> Path | None:
    if not out:
        return None
    p = Path(out)
    return p.with_name(p.stem + ".manifest.json")


# ---------------------------------------------------------------- commands

def analytic_report(region: RegionModel, p: StepParams) -> dict:
    if region.kind == "disk":
        b = bounds_plane(region, p)
        report = {"p_lo": b.p_lo, "p_hi": b.p_hi, "p_star": b.p_star, "avmpe": b.avmpe_percent}
        if b.degenerate:
            report["degenerate"] = True
        else:
            report["avmpe_circle"] = avmpe_circle(region.size, p)
        return report
    return {"p": prob_sphere(region.size, p)}


def cmd_analytic(opts: dict) -> int:
    started = time.perf_counter()
    region = _region(opts)
    _require(opts, "d1", "d2")
    try:
        p = StepParams(float(opts["d1"]), float(opts["d2"]))
        report = analytic_report(region, p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = dumps(report)
    sys.stdout.write(text)
    outputs = []
    if opts.get("out"):
        _write(Path(opts["out"]), text)
        outputs.append(opts["out"])
    _emit_manifest(_manifest("analytic", opts, None, started, outputs), opts, _manifest_path(opts.get("out")))
    return 0


def _table1_cell(args):
    d1, d2, rho, q = args
    try:
        p = SphereStepParams(d1, d2, rho)
    except ValueError as exc:
        return d1, d2, rho, None, f"skipped: {exc}"
    try:
        return d1, d2, rho, integrate_Is(p, q), "ok"
    except QuadratureError as exc:
        return d1, d2, rho, exc.result, "nonconverged"


def table1_rows(d1: float, d2s, rhos, q: QuadratureSpec, threads: int = 1) -> list[dict]:
    jobs = [(float(d1), float(d2), float(rho), q) for d2 in d2s for rho in rhos]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(_table1_cell, jobs))
    else:
        cells = [_table1_cell(j) for j in jobs]
    rows = []
    for d1, d2, rho, res, status in cells:
        closed = 2.0 * d1 * d2 / math.pi
        row = {"d1": d1, "d2": d2, "rho": rho, "closed_form": closed, "status": status,
               "I_s": None, "percent_error": None, "error_estimate": None, "evaluations": None}
        if res is not None:
            row.update(I_s=res.value, percent_error=100.0 * (closed / res.value - 1.0),
                       error_estimate=res.error_estimate, evaluations=res.evaluations)
        rows.append(row)
    return rows


def table1_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE1_COLUMNS)
    for row in rows:
        w.writerow(["" if row[c] is None else (row[c] if isinstance(row[c], (str, int)) else _num(row[c]))
                    for c in TABLE1_COLUMNS])
    return buf.getvalue()


def cmd_table1(opts: dict) -> int:
    started = time.perf_counter()
    _require(opts, "d1")
    d2s = opts.get("d2") or []
    rhos = opts.get("rho") or []
    if isinstance(d2s, (int, float)):
        d2s = [d2s]
    if isinstance(rhos, (int, float)):
        rhos = [rhos]
    q = _quad_spec(opts)
    rows = table1_rows(float(opts["d1"]), d2s, rhos, q, int(opts.get("threads", 1)))
    text = table1_csv(rows)
    outputs = []
    if opts.get("out"):
        _write(Path(opts["out"]), text)
        outputs.append(opts["out"])
        for row in rows:
            if row["percent_error"] is not None:
                print(f"d2={row['d2']:g} rho={row['rho']:g}: {row['percent_error']:.4g} %  [{row['status']}]")
            else:
                print(f"d2={row['d2']:g} rho={row['rho']:g}: {row['status']}")
    else:
        sys.stdout.write(text)
    for row in rows:
        if row["status"].startswith("skipped"):
            log.warning("cell d2=%g rho=%g %s", row["d2"], row["rho"], row["status"])
    _emit_manifest(_manifest("table1", opts, None, started, outputs), opts, _manifest_path(opts.get("out")))
    return EXIT_NONCONVERGENCE if any(r["status"] == "nonconverged" for r in rows) else 0


def series_csv(series, p_lo: float, p_hi: float, p_star: float) -> str:
    steps = len(series.indicators)
    lo = hypothetical_bands(p_lo, steps)
    hi = hypothetical_bands(p_hi, steps)
    buf = io.StringIO()
    buf.write(",".join(SIM_COLUMNS) + "\n")
    star = _num(p_star)
    for i in range(steps):
        buf.write(
            f"{i + 1},{int(series.indicators[i])},{_num(series.running_frequency[i])},"
            f"{_num(lo.lower[i])},{_num(lo.upper[i])},{_num(hi.lower[i])},{_num(hi.upper[i])},{star}\n"
        )
    return buf.getvalue()


def _replica_path(out: Path, i: int, n: int) -> Path:
    if n == 1 or i == 0:
        return out
    return out.with_name(f"{out.stem}.r{i:03d}{out.suffix}")


def cmd_simulate(opts: dict) -> int:
    started = time.perf_counter()
    _require(opts, "steps", "out")
    config = _walk_config(opts, steps=int(opts["steps"]))
    ref = first_step_reference(config.region, StepParams(config.d1, config.d2))
    series = run_replicas(config, int(opts.get("threads", 1)))

    out = Path(opts["out"])
    outputs = []
    for i, s in enumerate(series):
        path = _replica_path(out, i, len(series))
        _write(path, series_csv(s, ref.p_lo, ref.p_hi, ref.p_star))
        outputs.append(str(path))

    total = sum(s.crossings_total for s in series)
    n = config.steps * config.replicas
    freq = total / n
    summary = {
        "config": config.as_dict(),
        "seed": config.seed,
        "crossings_total": total,
        "frequency": freq,
        "stderr": math.sqrt(freq * (1 - freq) / n),
        "replica_frequencies": [float(s.running_frequency[-1]) for s in series],
        "p_lo": ref.p_lo,
        "p_hi": ref.p_hi,
        "p_star": ref.p_star,
        "series_files": [Path(o).name for o in outputs],
    }
    summary_path = out.with_suffix(".json")
    _write(summary_path, dumps(summary))
    outputs.append(str(summary_path))
    print(f"{total} crossings in {n} steps: F = {freq:.6g} (p_lo {ref.p_lo:.4g}, p* {ref.p_star:.4g}, p_hi {ref.p_hi:.4g})")
    _emit_manifest(_manifest("simulate", opts, config.seed, started, outputs), opts, _manifest_path(str(out)))
    return 0


def cmd_first_step(opts: dict) -> int:
    started = time.perf_counter()
    _require(opts, "trials")
    trials = int(opts["trials"])
    if trials < 1:
        raise UsageError("--trials must be at least 1")
    config = _walk_config(opts)
    ref = first_step_reference(config.region, StepParams(config.d1, config.d2))
    freq, stderr = estimate_first_step(config, trials, int(opts.get("threads", 1)))
    report = {"frequency": freq, "stderr": stderr, "trials": trials, "seed": config.seed,
              "config": config.as_dict(), "chunk_size": FIRST_STEP_CHUNK}
    if config.region.kind == "disk":
        report.update(p_lo=ref.p_lo, p_hi=ref.p_hi, p_star=ref.p_star)
    else:
        report["p_sphere"] = ref.p_star
    text = dumps(report)
    sys.stdout.write(text)
    outputs = []
    if opts.get("out"):
        _write(Path(opts["out"]), text)
        outputs.append(opts["out"])
    _emit_manifest(_manifest("first-step", opts, config.seed, started, outputs), opts, _manifest_path(opts.get("out")))
    return 0


def cmd_integrate(opts: dict) -> int:
    started = time.perf_counter()
    _require(opts, "which", "d1", "d2")
    q = _quad_spec(opts)
    try:
        if opts["which"] == "ip":
            p = StepParams(float(opts["d1"]), float(opts["d2"]))
            closed = 2 * p.d1 * p.d2 / math.pi
            res = integrate_Ip_numeric(p, q)
        else:
            _require(opts, "rho")
            p = SphereStepParams(float(opts["d1"]), float(opts["d2"]), float(opts["rho"]))
            closed = 2 * p.d1 * p.d2 / math.pi
            res = integrate_Is(p, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = {"integral": opts["which"], **res.as_dict(), "closed_form": closed,
              "relative_difference": res.value / closed - 1.0}
    text = dumps(report)
    sys.stdout.write(text)
    outputs = []
    if opts.get("out"):
        _write(Path(opts["out"]), text)
        outputs.append(opts["out"])
    _emit_manifest(_manifest("integrate", opts, None, started, outputs), opts, _manifest_path(opts.get("out")))
    return 0


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("--out", help="output file")
    p.add_argument("--manifest", help="where to write the run manifest")
    p.add_argument("--threads", type=int, help="worker count; never changes numeric output")


def _walk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--region", choices=["disk", "sphere"])
    p.add_argument("--radius", type=float, help="disk radius r or sphere radius rho")
    p.add_argument("--d1", type=float)
    p.add_argument("--d2", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crosspath", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form bounds (disk) or probability (sphere)")
    _walk_flags(p)
    _common(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("table1", help="percentage error of 2 d1 d2 / pi against the sphere integral")
    p.add_argument("--d1", type=float)
    p.add_argument("--d2", type=float, nargs="*")
    p.add_argument("--rho", type=float, nargs="*")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-subdivisions", type=int)
    _common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("simulate", help="long two-walker run with crossing series")
    _walk_flags(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float, help="transmission probability per crossing")
    p.add_argument("--replicas", type=int)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("first-step", help="Monte Carlo first-step crossing frequency")
    _walk_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float)
    _common(p)
    p.set_defaults(func=cmd_first_step)

    p = sub.add_parser("integrate", help="raw feasible-domain integrals")
    p.add_argument("which", choices=["ip", "is"])
    p.add_argument("--d1", type=float)
    p.add_argument("--d2", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-subdivisions", type=int)
    _common(p)
    p.set_defaults(func=cmd_integrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(merged_options(args))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog} {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except QuadratureError as exc:
        sys.stderr.write(f"non-convergence: {exc} (best value {exc.result.value!r})\n")
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
