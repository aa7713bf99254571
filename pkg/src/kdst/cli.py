"""Command-line entry point (``kdst``)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import graph as G
from .errors import ConfigError, KdstError
from .experiment import ExperimentSpec, run_experiment
from .generators import generate
from .lp import build_lp_gst, build_lp_kdst, build_lp_kdst_star
from .mps import write_mps
from .oracle import baseline_t_approx, exact_opt, verify
from .paths import build_gst_tree, enumerate_paths
from .report import load_rows, render_figures, summarize
from .rounding import (
    RoundingConfig,
    dst_iteration_count,
    iteration_count,
    prepare,
    prepared_from_values,
    run_rounding,
)
from .simplex import SolverConfig, solve


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def _emit(args, record: dict) -> None:
    if args.format == "csv":
        flat = {k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in record.items()}
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
        w.writeheader()
        w.writerow(flat)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _load(args) -> G.KdstInstance:
    mode = "split" if args.split_parallel else "collapse" if args.collapse_parallel else "reject"
    inst = G.read_instance(args.instance, parallel=mode)
    for w in inst.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return inst


def _rounding_config(args) -> RoundingConfig:
    return RoundingConfig(
        rng_seed=args.seed,
        repeat_constant=args.repeat_constant,
        max_restarts=args.max_restarts,
        threads=args.threads,
        path_cap=args.path_cap,
        iteration_override=getattr(args, "iterations", None),
    )


def _edges_json(inst: G.KdstInstance, edges) -> list[list]:
    return [[inst.graph.edges[e][0], inst.graph.edges[e][1]] for e in sorted(edges)]


def _solution_record(inst, H, tr=None, extra=None) -> dict:
    rep = verify(H, inst, lp_value=tr.lp_value if tr else None)
    rec = {
        "solution": sorted(int(e) for e in H),
        "edges": _edges_json(inst, H),
        "cost": rep.cost,
        "feasible": rep.feasible,
        "connectivity": rep.as_dict()["connectivity"],
    }
    if tr is not None:
        rec.update(lp_value=tr.lp_value, xhat_cost=tr.xhat_cost, iterations=tr.iterations,
                   restarts=tr.restarts, ratio_lp=rep.lp_ratio)
    if inst.warnings:
        rec["normalization_warnings"] = list(inst.warnings)
    rec.update(extra or {})
    return rec


def _run_rounding_cmd(args, inst, prep) -> int:
    cfg = _rounding_config(args)
    if args.algorithm == "dst":
        if inst.k != 1:
            raise ConfigError("dst needs k = 1")
        N = cfg.iteration_override or dst_iteration_count(cfg.repeat_constant, inst.depth_bound, inst.h)
    else:
        N = cfg.iteration_override or iteration_count(
            cfg.repeat_constant, inst.depth_bound, inst.k, inst.graph.vertex_count
        )
    H, tr = run_rounding(prep, N, cfg, raise_on_failure=False)
    if args.transcript:
        Path(args.transcript).write_text(json.dumps(tr.to_json(), indent=1, default=float))
    _emit(args, _solution_record(inst, H, tr))
    return 0 if tr.feasible else 3


def cmd_solve(args) -> int:
    inst = _load(args)
    cfg = _rounding_config(args)
    prep = prepare(inst, cfg)
    if args.dot:
        Path(args.dot).write_text(prep.tree.to_dot())
    return _run_rounding_cmd(args, inst, prep)


def cmd_round(args) -> int:
    inst = _load(args)
    data = json.loads(Path(args.solution).read_text())
    values = data.get("values", data)
    prep = prepared_from_values(inst, values, _rounding_config(args))
    return _run_rounding_cmd(args, inst, prep)


def cmd_lp(args) -> int:
    inst = _load(args)
    paths = enumerate_paths(inst, cap=args.path_cap)
    if args.variant == "star":
        lp = build_lp_kdst_star(inst, paths)
    elif args.variant == "plain":
        lp = build_lp_kdst(inst, paths)
    else:
        lp = build_lp_gst(build_gst_tree(paths, inst))
    sol = solve(lp, SolverConfig(backend=args.backend))
    if args.mps:
        Path(args.mps).write_text(write_mps(lp))
    if args.solution and sol.status == "optimal":
        Path(args.solution).write_text(json.dumps(
            {"status": sol.status, "objective": sol.objective_value, "values": sol.as_dict(lp)}, indent=1))
    _emit(args, {"variant": args.variant, "status": sol.status, "objective": sol.objective_value,
                 "variables": lp.num_vars, "rows": lp.num_rows, "paths": len(paths),
                 "iterations": sol.iterations})
    return 0 if sol.status == "optimal" else 2


def _read_solution(inst: G.KdstInstance, path) -> frozenset[int]:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        pairs = [tuple(int(t) for t in line.split()[:2]) for line in text.splitlines()
                 if line.strip() and not line.startswith("#")]
        return frozenset(inst.graph.edge_id(u, v) for u, v in pairs)
    if isinstance(data, dict) and "edges" in data:
        return frozenset(inst.graph.edge_id(u, v) for u, v in data["edges"])
    ids = data["solution"] if isinstance(data, dict) else data
    return G.validate_edge_set(ids, inst.graph)


def cmd_verify(args) -> int:
    inst = _load(args)
    try:
        H = _read_solution(inst, args.solution)
    except KeyError as exc:
        raise ConfigError(f"solution references an edge not in the instance: {exc}") from None
    rep = verify(H, inst)
    _emit(args, rep.as_dict())
    return 0 if rep.feasible else 2


def cmd_exact(args) -> int:
    inst = _load(args)
    res = exact_opt(inst, budget=args.budget, max_edges=args.max_edges)
    if res is None:
        print("error: branch-and-bound budget exhausted", file=sys.stderr)
        return 3
    _emit(args, _solution_record(inst, res.edges, extra={"nodes": res.nodes}))
    return 0


def cmd_baseline(args) -> int:
    inst = _load(args)
    _emit(args, _solution_record(inst, baseline_t_approx(inst)))
    return 0


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def cmd_generate(args) -> int:
    inst = generate(args.generator, _parse_params(args.param), args.seed)
    text = G.serialize_instance(inst)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.load(args.spec)
    if args.output:
        spec.output = args.output
    if args.threads > 1:
        spec.threads = args.threads
    path = run_experiment(spec)
    print(path)
    return 0


def cmd_report(args) -> int:
    rows = load_rows(args.csv)
    if args.summarize or not args.figures:
        sys.stdout.write(summarize(rows))
    if args.figures is not None:
        target = args.figures or Path(args.csv).parent
        for p in render_figures(rows, target):
            print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kdst", description="k-edge-connected directed Steiner tree on D-shallow instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--path-cap", type=int, default=2_000_000)
    p.add_argument("--repeat-constant", type=float, default=2.0)
    p.add_argument("--max-restarts", type=int, default=20)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def instance_cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("instance")
        grp = sp.add_mutually_exclusive_group()
        grp.add_argument("--split-parallel", action="store_true",
                         help="subdivide extra parallel edges with a zero-cost midpoint")
        grp.add_argument("--collapse-parallel", action="store_true",
                         help="keep only the cheapest of parallel edges")
        return sp

    sp = instance_cmd("solve", "run the full LP + rounding pipeline")
    sp.add_argument("--algorithm", choices=("kdst", "dst"), default="kdst")
    sp.add_argument("--iterations", type=int, default=None, help="override the number of rounding passes")
    sp.add_argument("--transcript")
    sp.add_argument("--dot", help="write the suffix tree as DOT")
    sp.set_defaults(func=cmd_solve)

    sp = instance_cmd("lp", "build and solve an LP, optionally exporting MPS")
    sp.add_argument("--variant", choices=("star", "plain", "gst"), default="star")
    sp.add_argument("--backend", choices=("simplex", "highs"), default="simplex")
    sp.add_argument("--mps")
    sp.add_argument("--solution", help="write the LP solution as JSON (input for 'round')")
    sp.set_defaults(func=cmd_lp)

    sp = instance_cmd("round", "rounding only, from a saved LP solution")
    sp.add_argument("--solution", required=True)
    sp.add_argument("--algorithm", choices=("kdst", "dst"), default="kdst")
    sp.add_argument("--iterations", type=int, default=None)
    sp.add_argument("--transcript")
    sp.set_defaults(func=cmd_round)

    sp = instance_cmd("verify", "check k edge-disjoint root paths per terminal")
    sp.add_argument("--solution", required=True)
    sp.set_defaults(func=cmd_verify)

    sp = instance_cmd("exact", "exact optimum by branch and bound")
    sp.add_argument("--budget", type=int, default=200_000)
    sp.add_argument("--max-edges", type=int, default=24)
    sp.set_defaults(func=cmd_exact)

    sp = instance_cmd("baseline", "union of per-terminal min-cost k-flows")
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("generate", help="write a generated instance")
    sp.add_argument("generator")
    sp.add_argument("--param", action="append", metavar="KEY=VALUE")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("experiment", help="run a batch described by a JSON spec")
    sp.add_argument("spec")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("report", help="summarize an experiment CSV and render figures")
    sp.add_argument("csv")
    sp.add_argument("--summarize", action="store_true")
    sp.add_argument("--figures", nargs="?", const="", default=None,
                    help="write PNG figures (default: next to the CSV)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KdstError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
