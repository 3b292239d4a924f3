"""Command-line interface.

Exit codes: 0 success, 1 invalid configuration or failed verification,
2 any other runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys


from .config import SystemConfig, load_config, preset_names
from .errors import OrbitalError, ParseError, SchemaViolation
from .export import (
    export_cdf_csv,
    fmt,
    jsonl,
    padded_bounds,
    render_density,
    write_atoms_csv,
    write_jsonl,
    write_samples_csv,
    write_study_csv,
)
from .sampler import chaos_game_restart, empirical_measure, sample_orbital
from .series import truncate
from .verify import exercise_closed_interval_probe, exercise_escape_study, verify_report

log = logging.getLogger("orbital")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class VerificationFailed(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _resolution(text: str) -> tuple[int, ...]:
    parts = text.lower().replace("×", "x").split("x")
    return tuple(int(v) for v in parts)


def _box(text: str, dim: int):
    vals = _floats(text)
    if len(vals) != 2 * dim:
        raise ValueError(f"--box needs {2 * dim} numbers (lo,hi per axis)")
    return [(vals[2 * i], vals[2 * i + 1]) for i in range(dim)]


def _depth(cfg: SystemConfig, args) -> int:
    if getattr(args, "depth", None) is not None:
        return args.depth
    if getattr(args, "tol", None) is not None:
        return type(cfg.run)(tol=args.tol).resolve_depth(cfg.system.q)
    return cfg.run.resolve_depth(cfg.system.q)


def cmd_validate(cfg: SystemConfig, args) -> int:
    s = cfg.system
    print(json.dumps({"valid": True, "dimension": s.dim, "maps": s.ifs.n, "p": s.p, "q": s.q}))
    return EXIT_OK


def cmd_build(cfg: SystemConfig, args) -> int:
    depth = _depth(cfg, args)
    route = args.route or cfg.run.route
    kw = {"weight_floor": cfg.run.weight_floor} if route == "enum" else {"prune_tol": cfg.run.prune_tol}
    t = truncate(cfg.system, depth, route, **kw)
    write_atoms_csv(t.measure, args.out)
    meta = {
        "depth": t.depth,
        "tail_bound": t.tail_bound,
        "raw_mass": t.raw_mass,
        "pruned_mass": t.pruned_mass,
        "route": t.route,
        "atoms": len(t.measure),
        "p": cfg.system.p,
        "q": cfg.system.q,
    }
    write_jsonl([meta], args.meta or f"{args.out}.meta.jsonl")
    if args.cdf:
        export_cdf_csv(t.measure, args.cdf)
    sys.stdout.write(jsonl([meta]))
    return EXIT_OK


def _sample(cfg: SystemConfig, method, count, seed, stride, workers):
    if method == "chaos":
        return chaos_game_restart(cfg.system, cfg.mu0_spec, seed, count, stride=stride, workers=workers)
    return sample_orbital(cfg.system, cfg.mu0_spec, seed, count, workers=workers)


def _pick(value, default):
    return default if value is None else value


def cmd_sample(cfg: SystemConfig, args) -> int:
    run = cfg.run
    batch = _sample(
        cfg,
        _pick(args.method, run.method),
        _pick(args.count, run.count),
        _pick(args.seed, run.seed),
        _pick(args.stride, run.stride),
        _pick(args.workers, run.workers),
    )
    write_samples_csv(batch.points, args.out)
    sys.stdout.write(jsonl([{"count": batch.count, "seed": batch.seed, "method": batch.method, "generator_id": batch.generator_id}]))
    return EXIT_OK


def cmd_verify(cfg: SystemConfig, args) -> int:
    depth = _depth(cfg, args)
    checks = verify_report(
        cfg.system, depth, route=cfg.run.route, weight_floor=cfg.run.weight_floor, prune_tol=cfg.run.prune_tol
    )
    for c in checks:
        bound = "n/a (no certified bound)" if c.bound is None else fmt(c.bound)
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: value={fmt(c.value)} bound={bound} {c.detail}")
    if not all(c.passed for c in checks):
        raise VerificationFailed("one or more bounds not met")
    return EXIT_OK


def cmd_study(cfg: SystemConfig, args) -> int:
    ps = _floats(args.ps)
    rows = exercise_escape_study(ps, args.x, cfg.mu0_spec, depth=args.depth, n_atoms=cfg.run.mu0_atoms)
    write_study_csv([(r.p, r.mass) for r in rows], args.out)
    for r in rows:
        print(f"p={fmt(r.p)} mass={fmt(r.mass)} mass/p={fmt(r.ratio)} depth={r.depth}")
    if args.closed_out:
        closed = exercise_closed_interval_probe(ps, cfg.mu0_spec, depth=args.depth, n_atoms=cfg.run.mu0_atoms)
        write_study_csv([(r.p, r.w1_to_one) for r in closed], args.closed_out, header=("p", "w1_to_one"))
    return EXIT_OK


def cmd_render(cfg: SystemConfig, args) -> int:
    run = cfg.run
    if cfg.system.dim != 2:
        raise OrbitalError("render needs a two-dimensional system")
    source = args.source
    if source == "series":
        measure = truncate(cfg.system, _depth(cfg, args), run.route).measure
    else:
        batch = _sample(
            cfg,
            source,
            _pick(args.count, run.count),
            _pick(args.seed, run.seed),
            run.stride,
            _pick(args.workers, run.workers),
        )
        measure = empirical_measure(batch)
    if args.box:
        box = _box(args.box, 2)
    elif run.box:
        box = [tuple(b) for b in run.box]
    else:
        box = padded_bounds(measure, 0.02)
    res = _resolution(args.res) if args.res else (run.resolution or (256, 256))
    if len(res) == 1:
        res = (res[0], res[0])
    render_density(measure, box, res, args.scale or run.scale, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")

    parser = argparse.ArgumentParser(prog="orbital", description="Orbital measures of IFSs with condensation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a configuration")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build", parents=[common], help="truncated orbital measure to an atom CSV")
    p.add_argument("config")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--depth", type=int)
    g.add_argument("--tol", type=float)
    p.add_argument("--route", choices=["enum", "neumann"])
    p.add_argument("--out", required=True)
    p.add_argument("--meta", help="metadata JSON-lines path (default: OUT.meta.jsonl)")
    p.add_argument("--cdf", help="also write an x,cdf table (1-D only)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("sample", parents=[common], help="draw samples to CSV")
    p.add_argument("config")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["exact", "chaos"])
    p.add_argument("--stride", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", parents=[common], help="residual, uniqueness and additivity checks")
    p.add_argument("config")
    p.add_argument("--depth", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("study-exercise", parents=[common], help="mass of [0, x] as p -> 0")
    p.add_argument("config")
    p.add_argument("--ps", default="0.5,0.1,0.01,0.001")
    p.add_argument("--x", type=float, default=0.9)
    p.add_argument("--depth", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--closed-out", help="also write the W1-to-delta_1 table")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("render", parents=[common], help="density image (PGM) of a 2-D system")
    p.add_argument("config")
    p.add_argument("--res", help="WxH, e.g. 256x256")
    p.add_argument("--box", help="xmin,xmax,ymin,ymax")
    p.add_argument("--scale", choices=["linear", "log"])
    p.add_argument("--source", choices=["exact", "chaos", "series"], default="exact")
    p.add_argument("--depth", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("presets", parents=[common], help="list shipped configurations")
    p.set_defaults(func=None)
    return parser


def _report(args, exc: BaseException, code: int) -> int:
    if getattr(args, "json_errors", False):
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        violations = getattr(exc, "violations", None)
        if violations:
            payload["violations"] = [{"field": f, "reason": r} for f, r in violations]
        if isinstance(exc, ParseError):
            payload["line"], payload["column"] = exc.line, exc.column
        sys.stderr.write(json.dumps(payload) + "\n")
    else:
        sys.stderr.write(f"error: {exc}\n")
        for f, r in getattr(exc, "violations", None) or []:
            sys.stderr.write(f"  {f}: {r}\n")
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.func is None:
        print("\n".join(preset_names()))
        return EXIT_OK
    try:
        cfg = load_config(args.config)
    except (ParseError, SchemaViolation) as exc:
        return _report(args, exc, EXIT_INVALID)
    except (OSError, OrbitalError) as exc:
        return _report(args, exc, EXIT_RUNTIME)
    try:
        return args.func(cfg, args)
    except VerificationFailed as exc:
        return _report(args, exc, EXIT_INVALID)
    except (OSError, ValueError, MemoryError) as exc:
        return _report(args, exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
