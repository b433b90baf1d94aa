"""Command line: solve one instance, generate instance sets, run and verify benchmarks."""
from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .branching import RULES
from .engine import SELECTIONS, SearchConfig, solve
from .instances import GeneratorSpec, InstanceFormatError, generate, instance_path, load, save

log = logging.getLogger("mobb")

CSV_COLUMNS = ["family", "p", "n", "combo", "instance", "status", "nodes_created", "nodes_processed", "time_s"]
ORACLE_MAX_VARS = 25


class UsageError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    instances: list[str]
    selections: list[str] = field(default_factory=lambda: list(SELECTIONS))
    rules: list[str] = field(default_factory=lambda: list(RULES))
    time_limit: float = 3600.0
    node_limit: int | None = None
    repetitions: int = 1
    output: str = "results"
    generate: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.selections = [s.lower() for s in self.selections]
        self.rules = [r.lower() for r in self.rules]
        bad = [s for s in self.selections if s not in SELECTIONS] + [r for r in self.rules if r not in RULES]
        if bad:
            raise UsageError(f"unknown selection or rule: {', '.join(bad)}")
        if not self.selections or not self.rules:
            raise UsageError("plan needs at least one selection and one rule")
        if self.repetitions < 1:
            raise UsageError("repetitions must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentPlan":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UsageError(f"plan file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
        if not isinstance(data, dict):
            raise UsageError(f"{path}: plan must be a JSON object")
        known = {"instances", "selections", "rules", "time_limit", "node_limit", "repetitions", "output", "generate"}
        extra = set(data) - known
        if extra:
            raise UsageError(f"{path}: unknown plan keys {sorted(extra)}")
        inst = data.get("instances", [])
        data["instances"] = [inst] if isinstance(inst, str) else list(inst)
        # relative paths are taken relative to the plan file
        base = path.parent
        data["instances"] = [
            p if os.path.isabs(p) or p.startswith("{output}") else str(base / p) for p in data["instances"]
        ]
        if "output" in data and not os.path.isabs(data["output"]):
            data["output"] = str(base / data["output"])
        return cls(**data)

    def combos(self) -> list[tuple[str, str]]:
        return [(s, r) for s in self.selections for r in self.rules]


def _seed_override() -> int | None:
    raw = os.environ.get("MOBB_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MOBB_SEED must be an integer, got {raw!r}") from None


def materialize(plan: ExperimentPlan) -> list[Path]:
    """Generate any planned instances, then expand the instance globs (sorted, unique)."""
    override = _seed_override()
    for entry in plan.generate:
        entry = dict(entry)
        out = entry.pop("out", plan.output + "/instances")
        seeds = entry.pop("seeds", [0])
        if override is not None:
            seeds = [override + s for s in range(len(seeds))]
        for seed in seeds:
            spec = GeneratorSpec(seed=int(seed), **entry)
            target = instance_path(out, spec)
            if not target.exists():
                save(generate(spec), target)
    files: set[Path] = set()
    for pattern in plan.instances:
        pattern = pattern.replace("{output}", plan.output)
        files.update(Path(p) for p in glob.glob(pattern, recursive=True))
    if not files:
        raise UsageError("no instance files match " + ", ".join(plan.instances or ["<none>"]))
    return sorted(files)


def _solve_one(task: tuple[str, str, str, float, int | None]) -> dict:
    path, sel, rule, time_limit, node_limit = task
    config = SearchConfig(sel, rule, time_limit_seconds=time_limit, node_limit=node_limit)
    row = {"combo": config.label, "instance": Path(path).name, "family": "", "p": "", "n": ""}
    try:
        inst = load(path)
        row.update(family=inst.kind, p=inst.num_objectives, n=inst.num_vars)
        res = solve(inst, config)
        row.update(
            status=res.status, nodes_created=res.nodes_created,
            nodes_processed=res.nodes_processed, time_s=f"{res.wall_time_seconds:.6f}",
        )
    except Exception as exc:  # a failed run is recorded, the batch continues
        log.error("%s on %s failed: %s", config.label, path, exc)
        row.update(status="error", nodes_created="", nodes_processed="", time_s="")
    return row


def _map(tasks: list, jobs: int):
    if jobs <= 1:
        return [_solve_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_one, tasks))


@dataclass
class ResultRow:
    """Aggregate of one combo on one size class; means cover solved runs only."""

    family: str
    p: str
    n: str
    combo: str
    mean_nodes: float | None
    mean_time: float | None
    solved: int
    total: int


def aggregate(rows: list[dict]) -> list[ResultRow]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (str(row["family"]), str(row["p"]), str(row["n"]), row["combo"])
        groups.setdefault(key, []).append(row)
    out = []
    for (family, p, n, combo), runs in groups.items():
        solved = [r for r in runs if r["status"] == "Complete"]
        nodes = sum(float(r["nodes_created"]) for r in solved) / len(solved) if solved else None
        secs = sum(float(r["time_s"]) for r in solved) / len(solved) if solved else None
        out.append(ResultRow(family, p, n, combo, nodes, secs, len(solved), len(runs)))
    return sorted(out, key=lambda r: (r.family, r.p, r.n))


def summarize(rows: list[dict]) -> str:
    """Markdown tables per size class; a bracketed count marks combos with unsolved runs."""
    lines: list[str] = []
    current = None
    for r in aggregate(rows):
        if (r.family, r.p, r.n) != current:
            current = (r.family, r.p, r.n)
            if lines:
                lines.append("")
            lines += [f"## {r.family or 'unknown'} p={r.p} n={r.n}", "", "| combo | nodes | time (s) |", "|---|---|---|"]
        bracket = f" ({r.solved})" if r.solved < r.total else ""
        nodes = "-" if r.mean_nodes is None else f"{r.mean_nodes:.12g}"
        secs = "-" if r.mean_time is None else f"{r.mean_time:.12g}"
        lines.append(f"| {r.combo} | {nodes}{bracket} | {secs}{bracket} |")
    return "\n".join(lines) + "\n"


def run(plan: ExperimentPlan, jobs: int = 1) -> int:
    """Solve every (combo, instance, repetition); write results.csv and summary.md."""
    files = materialize(plan)
    tasks = [
        (str(f), s, r, plan.time_limit, plan.node_limit)
        for s, r in plan.combos() for f in files for _ in range(plan.repetitions)
    ]
    rows = _map(tasks, jobs)
    out = Path(plan.output)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    (out / "summary.md").write_text(summarize(rows), encoding="utf-8")
    print(f"{len(rows)} runs written to {out / 'results.csv'}")
    return 2 if any(r["status"] == "error" for r in rows) else 0


def verify(plan: ExperimentPlan) -> int:
    """Compare every combo's result to brute-force enumeration; exit 0 iff all pass."""
    from .oracle import brute_force_front

    files = materialize(plan)
    failures = 0
    for f in files:
        try:
            inst = load(f)
        except InstanceFormatError as exc:
            print(f"ERROR {f}: {exc}")
            failures += 1
            continue
        if inst.num_vars > ORACLE_MAX_VARS:
            log.warning("skipping %s: %d variables exceed the oracle budget", f, inst.num_vars)
            print(f"SKIP {f.name} (n={inst.num_vars} > {ORACLE_MAX_VARS})")
            continue
        truth = set(brute_force_front(inst).points)
        for sel, rule in plan.combos():
            config = SearchConfig(sel, rule, time_limit_seconds=plan.time_limit, node_limit=plan.node_limit)
            try:
                res = solve(inst, config)
                ok = res.status == "Complete" and res.images() == truth
                detail = f"{res.status}, {len(res.images())}/{len(truth)} points"
            except Exception as exc:
                ok, detail = False, f"error: {exc}"
            failures += not ok
            print(f"{'PASS' if ok else 'FAIL'} {config.label} {f.name} ({detail})")
    return 0 if failures == 0 else 2


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = load(args.file)
    config = SearchConfig(args.select, args.rule, time_limit_seconds=args.time_limit, node_limit=args.node_limit)
    res = solve(inst, config)
    if args.json:
        print(json.dumps({
            "status": res.status, "nodes_created": res.nodes_created,
            "nodes_processed": res.nodes_processed, "time_s": res.wall_time_seconds,
            "points": [{"y": list(sp.display_y), "x": list(sp.x)} for sp in sorted(res.nondominated_set, key=lambda s: s.display_y)],
        }))
    else:
        print(f"{config.label}: {res.status}, {res.nodes_created} nodes created, "
              f"{res.nodes_processed} processed, {res.wall_time_seconds:.3f} s")
        for y in res.display_images():
            print(" ".join(str(v) for v in y))
    return 0 if res.status == "Complete" else 3


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def _cmd_gen(args: argparse.Namespace) -> int:
    seeds = _parse_seeds(args.seeds)
    override = _seed_override()
    if override is not None:
        seeds = [override + i for i in range(len(seeds))]
    for seed in seeds:
        spec = GeneratorSpec(args.family, args.p, seed, n=args.n, machines=args.machines, jobs=args.gap_jobs)
        print(save(generate(spec), instance_path(args.out, spec)))
    return 0


def _plan_from_args(args: argparse.Namespace) -> ExperimentPlan:
    if args.plan:
        plan = ExperimentPlan.from_file(args.plan)
    else:
        plan = ExperimentPlan(
            instances=args.instances or [],
            selections=args.select.split(",") if args.select else list(SELECTIONS),
            rules=args.rule.split(",") if args.rule else list(RULES),
            output=args.out or "results",
        )
    if args.time_limit is not None:
        plan.time_limit = args.time_limit
    if args.node_limit is not None:
        plan.node_limit = args.node_limit
    if args.plan and args.out:
        plan.output = args.out
    return plan


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobb", description="Multi-objective integer branch and bound")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("file")
    p.add_argument("--select", default="hvg", choices=SELECTIONS)
    p.add_argument("--rule", default="hf", choices=RULES)
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_solve)

    g = sub.add_parser("gen", help="generate seeded instances")
    g.add_argument("--family", required=True, choices=("knapsack", "gap"))
    g.add_argument("--p", type=int, required=True, choices=(2, 3))
    g.add_argument("--n", type=int, help="number of variables (GAP: 27, 48 or 75)")
    g.add_argument("--machines", type=int)
    g.add_argument("--jobs", dest="gap_jobs", type=int, help="GAP jobs")
    g.add_argument("--seeds", default="1..10", help="e.g. 1..10 or 1,4,7")
    g.add_argument("--out", default="instances")
    g.set_defaults(func=_cmd_gen)

    for name, helptext in (("bench", "run the selection x rule matrix"), ("verify", "check results against enumeration")):
        b = sub.add_parser(name, help=helptext)
        b.add_argument("--plan")
        b.add_argument("--instances", nargs="*")
        b.add_argument("--select", help="comma separated subset of " + ",".join(SELECTIONS))
        b.add_argument("--rule", help="comma separated subset of " + ",".join(RULES))
        b.add_argument("--time-limit", type=float)
        b.add_argument("--node-limit", type=int)
        b.add_argument("--out")
        if name == "bench":
            b.add_argument("--jobs", type=int, default=1, help="parallel solves")
        b.set_defaults(func=_cmd_bench if name == "bench" else _cmd_verify)
    return parser


def _cmd_bench(args: argparse.Namespace) -> int:
    return run(_plan_from_args(args), jobs=args.jobs)


def _cmd_verify(args: argparse.Namespace) -> int:
    return verify(_plan_from_args(args))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, InstanceFormatError, ValueError, FileNotFoundError) as exc:
        print(f"mobb: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
