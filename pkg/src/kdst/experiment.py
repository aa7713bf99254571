"""Batch experiments: generate instances, run algorithms, write CSV + JSON."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, KdstError
from .generators import GENERATORS, generate, strongly_connected
from .graph import KdstInstance, cost as edge_cost
from .lp import build_lp_kdst
from .oracle import baseline_t_approx, exact_opt, max_flow_value
from .paths import enumerate_paths
from .rounding import (
    RoundingConfig,
    dst_iteration_count,
    iteration_count,
    prepare,
    run_rounding,
    run_steiner_subgraph,
)
from .simplex import solve

ALGORITHMS = ("kdst", "dst", "subgraph", "baseline", "exact")

CSV_COLUMNS = [
    "seed", "generator", "algorithm", "n", "m", "h", "k", "D", "paths",
    "lp_value", "lp_plain_value", "algorithm_cost", "baseline_cost", "exact_opt",
    "ratio_lp", "ratio_opt", "baseline_ratio_opt", "iterations", "restarts",
    "feasible", "status", "error", "wall_time",
]


@dataclass
class ExperimentSpec:
    generator: str
    seeds: list[int]
    algorithms: list[str]
    params: dict = field(default_factory=dict)
    rounding: dict = field(default_factory=dict)
    output: str = "results"
    threads: int = 1
    exact_budget: int = 200_000
    record_timing: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("experiment needs at least one seed")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if self.generator != "strongly-connected" and self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.generator == "strongly-connected" and set(self.algorithms) != {"subgraph"}:
            raise ConfigError("strongly-connected instances only support the subgraph algorithm")
        if "subgraph" in self.algorithms and self.generator != "strongly-connected":
            raise ConfigError("the subgraph algorithm needs the strongly-connected generator")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown experiment keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def rounding_config(self, seed: int) -> RoundingConfig:
        opts = dict(self.rounding)
        opts.setdefault("rng_seed", seed)
        try:
            return RoundingConfig(**opts)
        except TypeError as exc:
            raise ConfigError(f"bad rounding options: {exc}") from None


def _ratio(a, b):
    if a is None or b is None or b == 0:
        return None
    return a / b


def _instance_row(seed: int, spec: ExperimentSpec, inst: KdstInstance) -> dict:
    return {
        "seed": seed, "generator": spec.generator, "n": inst.graph.vertex_count,
        "m": inst.graph.edge_count, "h": inst.h, "k": inst.k, "D": inst.depth_bound,
    }


def _run_instance(seed: int, spec: ExperimentSpec) -> list[tuple[dict, dict]]:
    """All rows for one seed, each paired with its JSON transcript."""
    if spec.generator == "strongly-connected":
        return [_run_subgraph(seed, spec)]
    base = {"seed": seed, "generator": spec.generator}
    try:
        inst = generate(spec.generator, spec.params, seed)
    except KdstError as exc:
        return [({**base, "algorithm": a, "status": "error", "error": str(exc)}, {}) for a in spec.algorithms]

    shared = _instance_row(seed, spec, inst)
    cfg = spec.rounding_config(seed)
    ctx: dict = {}
    try:
        ps = enumerate_paths(inst, cap=cfg.path_cap)
        shared["paths"] = len(ps)
        prep = prepare(inst, cfg)
        ctx["prep"] = prep
        shared["lp_value"] = prep.lp_value
        shared["lp_plain_value"] = solve(build_lp_kdst(inst, ps)).objective_value
    except KdstError as exc:
        ctx["lp_error"] = str(exc)

    if "baseline" in spec.algorithms:
        try:
            shared["baseline_cost"] = edge_cost(baseline_t_approx(inst), inst.graph)
        except KdstError as exc:
            ctx["baseline_error"] = str(exc)
    if "exact" in spec.algorithms:
        try:
            res = exact_opt(inst, budget=spec.exact_budget)
            if res is None:
                ctx["exact_error"] = "budget exhausted"
            else:
                shared["exact_opt"] = res.cost
                ctx["exact_edges"] = sorted(res.edges)
        except KdstError as exc:
            ctx["exact_error"] = str(exc)
    shared["baseline_ratio_opt"] = _ratio(shared.get("baseline_cost"), shared.get("exact_opt"))

    out = []
    for algo in spec.algorithms:
        t0 = time.perf_counter()
        row = dict(shared, algorithm=algo, status="ok")
        transcript: dict = {"seed": seed, "algorithm": algo}
        try:
            if algo in ("kdst", "dst"):
                if "prep" not in ctx:
                    raise KdstError(ctx.get("lp_error", "LP unavailable"))
                if algo == "dst" and inst.k != 1:
                    raise ConfigError("dst needs k = 1")
                N = cfg.iteration_override or (
                    iteration_count(cfg.repeat_constant, inst.depth_bound, inst.k, inst.graph.vertex_count)
                    if algo == "kdst"
                    else dst_iteration_count(cfg.repeat_constant, inst.depth_bound, inst.h)
                )
                H, tr = run_rounding(ctx["prep"], N, cfg, raise_on_failure=False)
                row.update(algorithm_cost=edge_cost(H, inst.graph), iterations=N,
                           restarts=tr.restarts, feasible=tr.feasible)
                if not tr.feasible:
                    row["status"] = "restarts-exhausted"
                transcript.update(tr.to_json(), solution=sorted(H))
            elif algo == "baseline":
                if "baseline_cost" not in shared:
                    raise KdstError(ctx.get("baseline_error", "baseline failed"))
                row.update(algorithm_cost=shared["baseline_cost"], feasible=True)
            elif algo == "exact":
                if "exact_opt" not in shared:
                    raise KdstError(ctx.get("exact_error", "exact failed"))
                row.update(algorithm_cost=shared["exact_opt"], feasible=True)
                transcript["solution"] = ctx["exact_edges"]
        except KdstError as exc:
            row.update(status="error", error=str(exc))
        row["ratio_lp"] = _ratio(row.get("algorithm_cost"), row.get("lp_value"))
        row["ratio_opt"] = _ratio(row.get("algorithm_cost"), row.get("exact_opt"))
        if spec.record_timing:
            row["wall_time"] = time.perf_counter() - t0
        transcript["row"] = {k: row.get(k) for k in CSV_COLUMNS}
        out.append((row, transcript))
    return out


def _run_subgraph(seed: int, spec: ExperimentSpec) -> tuple[dict, dict]:
    row: dict = {"seed": seed, "generator": spec.generator, "algorithm": "subgraph", "status": "ok"}
    t0 = time.perf_counter()
    try:
        graph, terms, k, D = strongly_connected(**spec.params, seed=seed)
        row.update(n=graph.vertex_count, m=graph.edge_count, h=len(terms), k=k, D=D)
        res = run_steiner_subgraph(graph, terms, k, D, spec.rounding_config(seed))
        pairs = [(graph.edges[e][0], graph.edges[e][1]) for e in res.edges]
        lam = min(
            max_flow_value(graph.vertex_count, pairs, s, t, k)
            for s in terms for t in terms if s != t
        )
        row.update(
            algorithm_cost=edge_cost(res.edges, graph),
            lp_value=res.out_transcript.lp_value + res.in_transcript.lp_value,
            iterations=res.out_transcript.iterations + res.in_transcript.iterations,
            restarts=res.out_transcript.restarts + res.in_transcript.restarts,
            feasible=lam >= k,
        )
        row["ratio_lp"] = _ratio(row["algorithm_cost"], row["lp_value"])
        transcript = {"seed": seed, "algorithm": "subgraph", "hub": res.hub, "solution": sorted(res.edges),
                      "out": res.out_transcript.to_json(), "in": res.in_transcript.to_json()}
    except KdstError as exc:
        row.update(status="error", error=str(exc))
        transcript = {"seed": seed, "algorithm": "subgraph"}
    if spec.record_timing:
        row["wall_time"] = time.perf_counter() - t0
    transcript["row"] = {k: row.get(k) for k in CSV_COLUMNS}
    return row, transcript


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_experiment(spec: ExperimentSpec) -> Path:
    """Run every (seed, algorithm) pair; return the path of the aggregate CSV."""
    out_dir = Path(spec.output)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    if spec.threads > 1:
        with ThreadPoolExecutor(spec.threads) as pool:
            batches = list(pool.map(lambda s: _run_instance(s, spec), spec.seeds))
    else:
        batches = [_run_instance(s, spec) for s in spec.seeds]

    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for batch in batches:
            for row, transcript in batch:
                w.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
                name = f"seed{row['seed']}_{row['algorithm']}.json"
                with open(out_dir / "runs" / name, "w", encoding="utf-8") as jf:
                    json.dump(transcript, jf, indent=1, sort_keys=True, default=float)
    return csv_path
