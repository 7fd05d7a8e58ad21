"""
pipeline.py

Per-instance solving, result tables, scheme files, verification and
transfer evaluation. cli_experiments.py is a thin argparse layer over
these functions.

Methods: SLI, TabuCol, Exact, LCG, TDMA, OSIA, OVIA-<b>, SSIA, SVIA-<b>

Results CSV columns:
dataset,method,instance_id,success,K,r,b,x,d_sym,wall_time_s,seed

Scheme files are Scheme JSON with one extra key, "graph", so that a
scheme can be re-certified without the dataset.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import csv
import dataclasses
import json
import pathlib
import time
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

# import from local modules
from coding.ia_verify import Scheme, certify, scheme_from_dict, scheme_to_dict, tdma_scheme
from coloring.coloring_algorithms import exact_chromatic, greedy_sli, tabucol
from graphs.generators import LabeledInstance
from graphs.graph_model import graph_from_dict, graph_to_dict
from learning.lcg_env import EnvConfig, Policy, k_selector, solve_fractional, solve_subspace_vector
from learning.policy_net import LearnedPolicy, load_checkpoint
from learning.ppo_train import evaluate_best_of_n
from utils.utils_logger import logger
from utils.utils_seeding import derive_seed

CSV_FIELDS = ["dataset", "method", "instance_id", "success", "K", "r", "b", "x", "d_sym", "wall_time_s", "seed"]
COLORING_METHODS = ("SLI", "TabuCol", "Exact", "LCG", "TDMA")

#####################################
# Records
#####################################


@dataclass(frozen=True)
class ExperimentRecord:
    dataset: str
    method: str
    instance_id: str
    success: bool
    K: int
    r: int
    b: int
    x: int
    d_sym: Fraction | None
    wall_time_s: float
    seed: int
    chi: int | None = None
    scheme_file: str | None = None

    @property
    def optimal(self) -> bool:
        """Colored with exactly chi colors (coloring methods only)."""
        return self.success and self.chi is not None and self.K == self.chi

    def to_row(self) -> dict:
        d = "" if self.d_sym is None else f"{self.d_sym.numerator}/{self.d_sym.denominator}"
        return {
            "dataset": self.dataset,
            "method": self.method,
            "instance_id": self.instance_id,
            "success": int(self.success),
            "K": self.K,
            "r": self.r,
            "b": self.b,
            "x": self.x,
            "d_sym": d,
            "wall_time_s": round(self.wall_time_s, 6),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SolveContext:
    """Everything a method needs besides the instance; built once by the CLI."""

    env_template: EnvConfig = field(default_factory=EnvConfig)
    policy: Policy | None = None
    best_of_n: int = 20
    tabucol_iters: int = 1000
    tabucol_tenure: int = 7
    exact_budget: int = 2_000_000
    k: int | None = None
    k_slack: int = 0
    r_max: int | None = None
    attempts: int = 1
    scheme_dir: pathlib.Path | None = None
    seed: int = 0


def parse_method(method: str) -> tuple[str, int]:
    """'OVIA-2' -> ('OVIA', 2); plain names get b = 1."""
    if "-" in method:
        name, b = method.split("-", 1)
        if name not in ("OVIA", "SVIA"):
            raise ValueError(f"only OVIA and SVIA take a split order, got {method!r}")
        return name, int(b)
    if method not in COLORING_METHODS + ("OSIA", "SSIA", "OVIA", "SVIA"):
        raise ValueError(f"unknown method {method!r}")
    return method, 1


#####################################
# Solving
#####################################


def _solve(record: LabeledInstance, name: str, b: int, ctx: SolveContext, seed: int) -> Scheme | None:
    g = record.graph
    adjacency = g.undirected_adjacency
    template = dataclasses.replace(ctx.env_template, seed=seed)

    if name == "SLI":
        return tdma_scheme(g, greedy_sli(adjacency))
    if name == "TabuCol":
        k = ctx.k or record.chi or greedy_sli(adjacency).num_colors
        coloring = tabucol(adjacency, max(k, 1), max_iters=ctx.tabucol_iters, tenure=ctx.tabucol_tenure, seed=seed)
        return None if coloring is None else tdma_scheme(g, coloring)
    if name in ("Exact", "TDMA"):
        result = exact_chromatic(adjacency, budget=ctx.exact_budget)
        return tdma_scheme(g, result.witness)
    if name == "LCG":
        if ctx.policy is None:
            raise ValueError("LCG needs a trained checkpoint")
        k = ctx.k if ctx.k is not None else record.chi
        if k is None:
            logger.warning(f"Instance {record.id} is unlabeled; LCG runs at the SLI bound.")
            k = greedy_sli(adjacency).num_colors
        cfg = dataclasses.replace(template, mode="coloring", K=max(k, 1), r=max(k, 1))
        return evaluate_best_of_n(ctx.policy, g, ctx.best_of_n, cfg, seed=seed).scheme

    if ctx.policy is None:
        raise ValueError(f"{name} needs a policy")
    if name == "OSIA":
        return k_selector(g, "local_coloring", ctx.policy, template, k_slack=ctx.k_slack, attempts=ctx.attempts)
    if name == "SSIA":
        return k_selector(g, "matrix_rank_reduction", ctx.policy, template, attempts=ctx.attempts, r_max=ctx.r_max)
    if name == "OVIA":
        return solve_fractional(g, b, ctx.policy, template, k_slack=ctx.k_slack, attempts=ctx.attempts)
    if name == "SVIA":
        return solve_subspace_vector(g, b, ctx.policy, template, attempts=ctx.attempts, r_max=ctx.r_max)
    raise ValueError(f"unknown method {name!r}")


def write_scheme_file(path: pathlib.Path, record: LabeledInstance, scheme: Scheme) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = scheme_to_dict(scheme)
    payload["graph"] = graph_to_dict(record.graph)
    path.write_text(json.dumps(payload))


def solve_instance(record: LabeledInstance, method: str, ctx: SolveContext, dataset: str, index: int = 0) -> ExperimentRecord:
    """Run one method on one instance. Only certified schemes count as success."""
    name, b = parse_method(method)
    seed = derive_seed(ctx.seed, index)
    start = time.perf_counter()
    scheme = _solve(record, name, b, ctx, seed)
    if scheme is not None and not scheme.certified:
        scheme = certify(record.graph, scheme)
    elapsed = time.perf_counter() - start

    if scheme is None or not scheme.certified:
        return ExperimentRecord(dataset, method, record.id, False, 0, 0, b, 0, None, elapsed, seed, record.chi)

    scheme_file = None
    if ctx.scheme_dir is not None:
        path = ctx.scheme_dir / f"{dataset}__{method}__{record.id}.json"
        write_scheme_file(path, record, scheme)
        scheme_file = str(path)
    return ExperimentRecord(
        dataset, method, record.id, True, scheme.K, scheme.r, scheme.b, scheme.x, scheme.d_sym, elapsed, seed, record.chi, scheme_file
    )


#####################################
# Tables
#####################################


@dataclass
class TableResult:
    records: list[ExperimentRecord]
    aggregates: dict[str, dict]


def aggregate(records: Sequence[ExperimentRecord]) -> dict[str, dict]:
    """Per method: success ratio, optimal ratio over labeled instances, coverage and DoF value counts."""
    out: dict[str, dict] = {}
    for method in sorted({r.method for r in records}):
        rows = [r for r in records if r.method == method]
        labeled = [r for r in rows if r.chi is not None]
        dof_counts = Counter(f"{r.d_sym.numerator}/{r.d_sym.denominator}" for r in rows if r.success)
        out[method] = {
            "instances": len(rows),
            "labeled": len(labeled),
            "coverage": len(labeled) / len(rows) if rows else 0.0,
            "success_ratio": sum(r.success for r in rows) / len(rows) if rows else 0.0,
            "optimal_ratio": sum(r.optimal for r in labeled) / len(labeled) if labeled else None,
            "dof_counts": dict(sorted(dof_counts.items(), key=lambda kv: Fraction(kv[0]), reverse=True)),
        }
    return out


def run_table(
    instances: Sequence[LabeledInstance], methods: Sequence[str], ctx: SolveContext, dataset: str
) -> TableResult:
    for method in methods:
        parse_method(method)
    records = []
    for method in methods:
        logger.info(f"Running {method} on {len(instances)} instances of {dataset}.")
        for index, inst in enumerate(instances):
            records.append(solve_instance(inst, method, ctx, dataset, index))
    records.sort(key=lambda r: (r.dataset, r.method, r.instance_id))
    aggregates = aggregate(records)
    for method, agg in aggregates.items():
        logger.info(f"{dataset} / {method}: optimal ratio {agg['optimal_ratio']}, success ratio {agg['success_ratio']:.3f}")
    return TableResult(records, aggregates)


def write_results_csv(path: pathlib.Path, records: Sequence[ExperimentRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted((r.to_row() for r in records), key=lambda row: (row["dataset"], row["method"], row["instance_id"]))
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    logger.info(f"Wrote {len(rows)} result rows to {path}")


def write_aggregates_json(path: pathlib.Path, aggregates: Mapping[str, dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(aggregates, indent=2, sort_keys=True))


#####################################
# Verification
#####################################


@dataclass(frozen=True)
class VerifyEntry:
    file: str
    certified: bool
    reason: str = ""


@dataclass
class VerifyReport:
    entries: list[VerifyEntry]

    @property
    def ok(self) -> bool:
        return all(e.certified for e in self.entries)

    @property
    def failures(self) -> list[VerifyEntry]:
        return [e for e in self.entries if not e.certified]


def verify_scheme_file(path: pathlib.Path) -> VerifyEntry:
    try:
        data = json.loads(path.read_text())
        g = graph_from_dict(data["graph"])
        stored = scheme_from_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as e:
        return VerifyEntry(path.name, False, f"parse error: {e}")
    if not stored.certified:
        return VerifyEntry(path.name, False, "stored as uncertified")
    rechecked = certify(g, dataclasses.replace(stored, certified=False))
    if not rechecked.certified:
        return VerifyEntry(path.name, False, "certification failed")
    return VerifyEntry(path.name, True)


def verify_all(scheme_dir: pathlib.Path) -> VerifyReport:
    """Re-certify every *.json file under scheme_dir."""
    entries = [verify_scheme_file(p) for p in sorted(scheme_dir.glob("*.json"))]
    report = VerifyReport(entries)
    logger.info(f"Verified {len(entries)} scheme files; {len(report.failures)} failed.")
    for e in report.failures:
        logger.warning(f"UNCERTIFIED {e.file}: {e.reason}")
    return report


#####################################
# Transfer
#####################################


@dataclass(frozen=True)
class TransferCell:
    train: str
    test: str
    ratio: float | None
    reason: str = ""


def transfer_eval(
    checkpoints: Mapping[str, pathlib.Path],
    datasets: Mapping[str, Sequence[LabeledInstance]],
    ctx: SolveContext,
) -> list[TransferCell]:
    """LCG optimal ratio of every train-family checkpoint on every test-family dataset."""
    cells = []
    for train_family, ckpt in sorted(checkpoints.items()):
        params, _ = load_checkpoint(ckpt)
        policy_ctx = dataclasses.replace(ctx, policy=LearnedPolicy(params))
        for test_family, instances in sorted(datasets.items()):
            matching = [r for r in instances if r.chi == params.A]
            if not matching:
                reason = f"no instances with chi = {params.A} (alphabet mismatch)"
                logger.warning(f"Skipping transfer cell {train_family} -> {test_family}: {reason}")
                cells.append(TransferCell(train_family, test_family, None, reason))
                continue
            table = run_table(matching, ["LCG"], policy_ctx, test_family)
            cells.append(TransferCell(train_family, test_family, table.aggregates["LCG"]["optimal_ratio"]))
    return cells
