"""Command-line front end.

Subcommands ``moments``, ``ccdf``, ``coverage``, ``metadist``, ``mc`` and
``compare`` read a JSON scenario file, evaluate one grid, and write CSV
(``--output``, default stdout). ``--summary`` writes a JSON record with the
canonical scenario and every resolved parameter, defaults included.
``compare`` writes JSON instead of CSV.

Exit status: 0 on success, 2 for invalid configuration or arguments, 3 for
numerical failures (the library error message is printed verbatim).
``MLT_THREADS`` sets the number of worker threads; rows are always emitted
in input grid order.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import pydantic

from . import __version__
from .config import NetworkFile, ShotNoiseFile, dump_scenario_file, load_scenario_file
from .errors import MltError
from .oracle import estimate_coverage_and_meta, estimate_shot_noise_ccdf
from .shotnoise_stats import moments, shot_noise_ccdf
from .sinr import coverage_probability, meta_distribution

__all__ = ["main", "build_parser", "ConfigError"]


class ConfigError(Exception):
    """Invalid scenario file or command-line value (exit status 2)."""


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def _grid(text: str, name: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{name}: cannot parse '{text}' as a comma-separated list of numbers") from exc
    if not vals:
        raise ConfigError(f"--{name}: empty grid")
    return vals


def _threads() -> int:
    raw = os.environ.get("MLT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MLT_THREADS must be a positive integer, got '{raw}'") from exc
    if n < 1:
        raise ConfigError(f"MLT_THREADS must be a positive integer, got '{raw}'")
    return n


def _ordered_map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _describe_validation(exc: pydantic.ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = [str(p) for p in err["loc"][2:]] if err["loc"][:1] == ("root",) else [str(p) for p in err["loc"]]
        lines.append(f"field '{'.'.join(loc) or '<root>'}': {err['msg']}")
    return "; ".join(lines)


def _load(path, kind=None):
    try:
        cfg = load_scenario_file(path)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except pydantic.ValidationError as exc:
        raise ConfigError(f"{path}: {_describe_validation(exc)}") from exc
    if kind is not None and cfg.kind != kind:
        raise ConfigError(f"{path}: field 'kind': this command needs a '{kind}' scenario, got '{cfg.kind}'")
    return cfg


def _resolve(args, cfg):
    """Merge command-line flags over the file's job section."""
    job = cfg.job
    p = {
        "tau": _grid(args.tau, "tau") if getattr(args, "tau", None) else list(job.tau),
        "zeta": _grid(args.zeta, "zeta") if getattr(args, "zeta", None) else list(job.zeta),
        "order": args.order if getattr(args, "order", None) is not None else job.order,
        "epsilon": args.epsilon if getattr(args, "epsilon", None) is not None else job.epsilon,
        "max_order": args.max_order if getattr(args, "max_order", None) is not None else job.max_order,
        "quadrature": job.quadrature.model_dump(),
        "outer": job.outer.model_dump(),
        "mc": dict(job.mc.model_dump()),
        "threads": _threads(),
    }
    if getattr(args, "trials", None) is not None:
        p["mc"]["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        p["mc"]["seed"] = args.seed
    if p["order"] < 1:
        raise ConfigError("--order must be >= 1")
    if not 0 < p["epsilon"] < 1:
        raise ConfigError("--epsilon must lie in (0, 1)")
    if p["max_order"] < 0:
        raise ConfigError("--max-order must be >= 0")
    try:
        q = job.quadrature.build()
        outer = job.outer.build()
        mc = type(job.mc)(**p["mc"]).build(p["threads"])
    except (ValueError, pydantic.ValidationError) as exc:
        raise ConfigError(str(exc)) from exc
    return p, q, outer, mc


def _cmd_moments(args, cfg, p, q, outer, mc, threads):
    vals = moments(cfg.build(), p["max_order"], q)
    return ["order", "value"], [[k, float(v)] for k, v in enumerate(vals)]


def _cmd_ccdf(args, cfg, p, q, outer, mc, threads):
    sc = cfg.build()
    res = _ordered_map(lambda t: shot_noise_ccdf(sc, t, p["order"], p["epsilon"], q), p["tau"], threads)
    return ["tau", "value", "lower", "upper", "delta"], [
        [r.tau, r.value, r.lower_bound, r.upper_bound, r.delta] for r in res
    ]


def _cmd_coverage(args, cfg, p, q, outer, mc, threads):
    net = cfg.build()
    vals = _ordered_map(lambda t: coverage_probability(net, t, outer, q), p["tau"], threads)
    return ["tau", "value"], [[t, v] for t, v in zip(p["tau"], vals)]


def _cmd_metadist(args, cfg, p, q, outer, mc, threads):
    net = cfg.build()
    jobs = [(t, z) for t in p["tau"] for z in p["zeta"]]
    vals = _ordered_map(lambda tz: meta_distribution(net, tz[0], tz[1], p["order"], outer, q), jobs, threads)
    return ["tau", "zeta", "value"], [[t, z, v] for (t, z), v in zip(jobs, vals)]


def _cmd_mc(args, cfg, p, q, outer, mc, threads):
    header = ["quantity", "tau", "zeta", "mean", "stderr", "trials"]
    rows = []
    if isinstance(cfg, ShotNoiseFile):
        for t, e in zip(p["tau"], estimate_shot_noise_ccdf(cfg.build(), p["tau"], mc)):
            rows.append(["ccdf", t, None, e.mean, e.std_error, e.trials])
        return header, rows
    net = cfg.build()
    meta_ok = net.signal_power.kind == "exponential"
    for t in p["tau"]:
        cov, meta = estimate_coverage_and_meta(net, t, p["zeta"], mc)
        rows.append(["coverage", t, None, cov.mean, cov.std_error, cov.trials])
        if meta_ok:
            for z, e in zip(p["zeta"], meta):
                rows.append(["meta", t, z, e.mean, e.std_error, e.trials])
    return header, rows


def _z(analytic, est):
    if est.std_error > 0:
        return (est.mean - analytic) / est.std_error
    return 0.0 if est.mean == analytic else math.copysign(math.inf, est.mean - analytic)


def _cmd_compare(args, cfg, p, q, outer, mc, threads):
    rows = []
    if isinstance(cfg, ShotNoiseFile):
        sc = cfg.build()
        est = estimate_shot_noise_ccdf(sc, p["tau"], mc)
        ana = _ordered_map(lambda t: shot_noise_ccdf(sc, t, p["order"], p["epsilon"], q), p["tau"], threads)
        for t, a, e in zip(p["tau"], ana, est):
            rows.append(
                {
                    "quantity": "ccdf",
                    "tau": t,
                    "analytic": a.value,
                    "lower": a.lower_bound,
                    "upper": a.upper_bound,
                    "mc_mean": e.mean,
                    "mc_stderr": e.std_error,
                    "z_score": _z(a.value, e),
                    "within_bounds": a.lower_bound <= e.mean <= a.upper_bound,
                }
            )
    else:
        net = cfg.build()
        ana = _ordered_map(lambda t: coverage_probability(net, t, outer, q), p["tau"], threads)
        for t, a in zip(p["tau"], ana):
            cov, _ = estimate_coverage_and_meta(net, t, [], mc)
            rows.append(
                {
                    "quantity": "coverage",
                    "tau": t,
                    "analytic": a,
                    "mc_mean": cov.mean,
                    "mc_stderr": cov.std_error,
                    "z_score": _z(a, cov),
                }
            )
    out = {"rows": rows, "max_abs_z_score": max(abs(r["z_score"]) for r in rows)}
    if len(rows) == 1:
        out.update({k: rows[0][k] for k in ("analytic", "mc_mean", "mc_stderr", "z_score")})
    return None, out


_COMMANDS = {
    "moments": (_cmd_moments, "shot_noise"),
    "ccdf": (_cmd_ccdf, "shot_noise"),
    "coverage": (_cmd_coverage, "network"),
    "metadist": (_cmd_metadist, "network"),
    "mc": (_cmd_mc, None),
    "compare": (_cmd_compare, None),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlt", description="Matrix Laplace transforms of Poisson shot noise.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON scenario file")
        sp.add_argument("--output", help="result file (default: stdout)")
        sp.add_argument("--summary", help="write a JSON summary with resolved parameters here")

    sp = sub.add_parser("moments", help="raw moments of the shot noise")
    common(sp)
    sp.add_argument("--max-order", type=int)
    sp = sub.add_parser("ccdf", help="Erlang-smoothed CCDF with sandwich bounds")
    common(sp)
    sp.add_argument("--tau", help="comma-separated thresholds")
    sp.add_argument("--order", type=int, help="Erlang order N")
    sp.add_argument("--epsilon", type=float)
    sp = sub.add_parser("coverage", help="SINR coverage probability")
    common(sp)
    sp.add_argument("--tau")
    sp = sub.add_parser("metadist", help="SINR meta-distribution (exponential signal power)")
    common(sp)
    sp.add_argument("--tau")
    sp.add_argument("--zeta")
    sp.add_argument("--order", type=int)
    sp = sub.add_parser("mc", help="Monte Carlo estimates")
    common(sp)
    sp.add_argument("--tau")
    sp.add_argument("--zeta")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp = sub.add_parser("compare", help="analytic versus Monte Carlo")
    common(sp)
    sp.add_argument("--tau")
    sp.add_argument("--order", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    return parser


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return buf.getvalue()


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, kind = _COMMANDS[args.command]
    try:
        cfg = _load(args.config, kind)
        p, q, outer, mc = _resolve(args, cfg)
        header, result = fn(args, cfg, p, q, outer, mc, p["threads"])
    except ConfigError as exc:
        print(f"mlt: config error: {exc}", file=sys.stderr)
        return 2
    except MltError as exc:
        print(f"mlt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"mlt: invalid argument: {exc}", file=sys.stderr)
        return 2
    if header is None:
        _write(args.output, json.dumps(result, indent=2) + "\n")
    else:
        _write(args.output, _csv_text(header, result))
    if args.summary:
        summary = {
            "command": args.command,
            "version": __version__,
            "scenario": json.loads(dump_scenario_file(cfg)),
            "parameters": p,
            "rows": len(result["rows"]) if header is None else len(result),
        }
        _write(args.summary, json.dumps(summary, indent=2) + "\n")
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
