"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 a hypothesis or check failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    BoneCheckFailed,
    HypothesisError,
    LeafPoint,
    PropagationError,
    bone_check,
    bone_persistence,
    bone_propagate,
    dimension_report,
    likely_limit_sample,
)
from .skew import attractor_sample, build_system
from .torus.anosov import NotHyperbolicError, make_anosov
from .torus.partition import SelectionError, build_partition, select_marked_rectangles
from .torus.periodic import repellor_words
from .fiber import FamilyError
from .verify import all_gates_pass, run_all, widen_if_needed

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
N_WORDS = 5
MAX_PERIOD = 4
N_LEAF_POINTS = 10
LIMIT_POINTS = 100
LIMIT_TRANSIENT = 200
LIMIT_TAIL = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--m", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--r0", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--mesh", type=float)
    common.add_argument("--grid", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default="out", help="output directory")
    p = _Parser(prog="bony", description="Bony attractors of skew products over toral automorphisms.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "verify": "check the hypothesis inequalities",
        "partition": "build and export the marked Markov partition",
        "bones": "certify bones over repellor periodic orbits and propagate them",
        "graph": "fiber census by slice diameter",
        "dimension": "dimension bound and box-counting estimate",
        "sample": "forward orbits of random points against slice covers",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return p


def resolve_config(args) -> io.Config:
    cfg = io.load_config(args.config) if args.config else io.Config()
    return cfg.replace(**{k: getattr(args, k) for k in ("m", "d", "eps", "r0", "seed", "mesh", "grid", "n")})


def _system(cfg: io.Config):
    return build_system(cfg.m, cfg.d, cfg.eps, cfg.r0)


def cmd_verify(cfg, args, files):
    S = _system(cfg)
    S, _ = widen_if_needed(S, seed=cfg.seed)
    results = run_all(S, seed=cfg.seed)
    ok = all_gates_pass(results)
    files["verify.json"] = io.dumps({"config": cfg.__dict__, "passed": ok, "weight_width": S.F.weight_width,
                                     "checks": [r.to_dict() for r in results]})
    files["verify.csv"] = io.csv_text(["name", "passed", "measured", "bound", "tolerance", "gate"],
                                      [[r.name, r.passed, r.measured, r.bound, r.tolerance, r.gate] for r in results])
    return EXIT_OK if ok else EXIT_FAILED


def cmd_partition(cfg, args, files):
    P = build_partition(make_anosov(cfg.m))
    code = EXIT_OK
    try:
        P = select_marked_rectangles(P, cfg.d)
    except SelectionError as exc:
        files["selection_error.txt"] = f"{exc}\n"
        code = EXIT_FAILED
    files["partition.json"] = io.dumps(io.partition_to_dict(P))
    files["partition.csv"] = io.csv_text(*io.partition_rows(P))
    return code


def cmd_bones(cfg, args, files):
    S = _system(cfg)
    r = S.F.r0 / 2
    certs, failures = [], []
    for w in repellor_words(S.P, N_WORDS, MAX_PERIOD):
        try:
            c = bone_check(S, w, r)
        except BoneCheckFailed as exc:
            failures.append({"word": list(w.labels), "clearance": exc.clearance})
            continue
        rec = c.to_dict()
        rec.update(bone_persistence(S, c, 10, cfg.mesh))
        certs.append((c, rec))
    propagated = []
    if certs:
        c0 = certs[0][0]
        for k in range(1, N_LEAF_POINTS + 1):
            t = 0.05 * k / N_LEAF_POINTS
            n0 = max(1, math.ceil(math.log(t / 1e-3) / (c0.q * math.log(S.A.lam))))
            try:
                pb = bone_propagate(S, c0, LeafPoint(c0.b, t), n0)
                propagated.append({"t": t, "n0": n0, "center": pb.center, "inner_radius": pb.inner_radius,
                                   "outer_radius": pb.outer_radius})
            except PropagationError as exc:
                failures.append({"t": t, "error": str(exc)})
    violations = sum(rec["cover_violations"] + rec["pullback_violations"] for _, rec in certs)
    files["bones.json"] = io.dumps({"config": cfg.__dict__, "certificates": [rec for _, rec in certs],
                                    "propagated": propagated, "failures": failures})
    return EXIT_OK if not failures and violations == 0 and certs else EXIT_FAILED


def cmd_graph(cfg, args, files):
    S = _system(cfg)
    tol = 10 * cfg.mesh
    half = attractor_sample(S, cfg.n // 2, cfg.grid, cfg.mesh, args.workers)
    full = attractor_sample(S, cfg.n, cfg.grid, cfg.mesh, args.workers)
    graph = (full.diam_outer < tol) & (full.diam_outer < half.diam_outer)
    classes = np.where(graph, "graph", "undetermined").reshape(cfg.grid, cfg.grid)
    files["slices.csv"] = io.csv_text(io.SLICE_HEADER, io.slice_rows(full))
    files["graph.json"] = io.dumps({
        "config": cfg.__dict__,
        "tolerance": tol,
        "graph": int(graph.sum()),
        "undetermined": int((~graph).sum()),
        "median_diam_outer": float(np.median(full.diam_outer)),
    })
    files["census.pgm"] = classes
    files["diameter.pgm"] = np.log(full.diam_outer).reshape(cfg.grid, cfg.grid)
    return EXIT_OK


def cmd_dimension(cfg, args, files):
    S = _system(cfg)
    if not S.contracts_in_average:
        files["dimension.json"] = io.dumps({"config": cfg.__dict__, "error": "fiber maps do not contract in average",
                                            "avg_log_lipschitz": S.avg_log_lipschitz})
        return EXIT_FAILED
    sample = attractor_sample(S, cfg.n, cfg.grid, cfg.mesh, args.workers)
    try:
        rep = dimension_report(S, sample, grid=cfg.grid, seed=cfg.seed)
    except HypothesisError as exc:
        files["dimension.json"] = io.dumps({"config": cfg.__dict__, "error": str(exc)})
        return EXIT_FAILED
    ok = rep.bound < cfg.d + 2 and rep.empirical_dim <= rep.bound + 0.2
    files["dimension.json"] = io.dumps({"config": cfg.__dict__, "report": rep.to_dict(),
                                        "avg_log_lipschitz": S.avg_log_lipschitz, "passed": ok})
    return EXIT_OK if ok else EXIT_FAILED


def cmd_sample(cfg, args, files):
    S = _system(cfg)
    rep = likely_limit_sample(S, LIMIT_TRANSIENT, LIMIT_TAIL, LIMIT_POINTS, cfg.seed, cfg.n, cfg.mesh)
    ok = rep.max_distance <= 2 * cfg.mesh and rep.nonempty_fraction == 1.0
    files["sample.json"] = io.dumps({"config": cfg.__dict__, "report": rep.to_dict(), "passed": ok})
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "verify": cmd_verify,
    "partition": cmd_partition,
    "bones": cmd_bones,
    "graph": cmd_graph,
    "dimension": cmd_dimension,
    "sample": cmd_sample,
}


def _write(out: Path, files: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, content in sorted(files.items()):
        if name.endswith(".pgm"):
            io.emit_image(content, out / name)
        else:
            (out / name).write_text(content)


def run(argv=None) -> int:
    parser = make_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        cfg = resolve_config(args)
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (io.ConfigError, OSError) as exc:
        print(f"bony: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    files: dict = {}
    try:
        code = COMMANDS[args.command](cfg, args, files)
    except SelectionError as exc:
        print(f"bony: {exc}", file=sys.stderr)
        files["selection_error.txt"] = f"{exc}\n"
        code = EXIT_FAILED
    except (NotHyperbolicError, FamilyError, ValueError) as exc:
        print(f"bony: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(Path(args.out), files)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
