"""
cli_experiments.py

Command-line surface for dataset generation, solving, training,
evaluation and verification.

Run from the project root:

    python -m experiments.cli_experiments gen --family er --size 15x15 --p 0.2 --count 100 --out data/er15.jsonl
    python -m experiments.cli_experiments label --in data/er15.jsonl --chi 5 --out data/er15_chi5.jsonl
    python -m experiments.cli_experiments baseline --algo tabucol --in data/er15_chi5.jsonl --out results/tabucol.csv
    python -m experiments.cli_experiments train --in data/er15_chi5.jsonl --iterations 1000
    python -m experiments.cli_experiments eval --in data/er15_chi5.jsonl --out results/lcg.csv
    python -m experiments.cli_experiments solve --mode fractional --b 2 --in data/wn8.jsonl --out results/ovia2.csv
    python -m experiments.cli_experiments table --in data/wn8.jsonl --methods TDMA OSIA OVIA-2 SSIA --out results/wn8.csv
    python -m experiments.cli_experiments transfer --checkpoint ER=data/er.ckpt --dataset GEO=data/geo.jsonl --out results/transfer.csv
    python -m experiments.cli_experiments verify --scheme-dir data/results/schemes

Defaults come from .env through utils_config. Every command takes one
--seed; all other randomness is derived from it.

Exit codes: 1 configuration or aborted run (e.g. diverged training), 2 input,
3 run, 4 output, 5 verification failed.
"""

#####################################
# Import Modules
#####################################

# import from standard library
import argparse
import csv
import pathlib
import sys
from collections.abc import Sequence

# import from local modules
import utils.utils_config as config
from experiments.db_sqlite_results import init_db, insert_records
from experiments.pipeline import (
    SolveContext,
    run_table,
    transfer_eval,
    verify_all,
    write_aggregates_json,
    write_results_csv,
)
from graphs.generators import (
    FAMILIES,
    GenSpec,
    LabeledInstance,
    conflict_graph_of,
    filter_by_chi,
    generate,
    label_dataset,
    read_dataset,
    write_dataset,
)
from learning.lcg_env import EnvConfig
from learning.policy_net import LearnedPolicy, load_checkpoint, reference_policies
from learning.ppo_train import TrainConfig, train
from utils.utils_logger import logger
from utils.utils_seeding import derive_seed

SOLVE_METHODS = {"color": "TDMA", "local": "OSIA", "fractional": "OVIA", "subspace": "SSIA", "svia": "SVIA"}
BASELINE_METHODS = {"sli": "SLI", "tabucol": "TabuCol", "exact": "Exact"}

#####################################
# Helpers
#####################################


def _parse_params(pairs: Sequence[str]) -> dict:
    params = {}
    for pair in pairs:
        key, _, value = pair.partition("=")
        if not value:
            raise ValueError(f"family parameter must look like key=value, got {pair!r}")
        try:
            params[key] = float(value)
        except ValueError:
            params[key] = value
    return params


def _family(name: str) -> str:
    """Case-insensitive family lookup: er -> ER, wirelessnet -> WirelessNet."""
    by_lower = {f.lower(): f for f in FAMILIES}
    try:
        return by_lower[name.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown family {name!r}; expected one of {FAMILIES}") from None


def _sizes(tokens: Sequence[str]) -> tuple[int, ...]:
    """Flatten size tokens: ["15", "15"], ["15x15"] and ["15X15"] all give (15, 15)."""
    sizes = []
    for token in tokens:
        for part in token.lower().split("x"):
            if not part.strip().isdigit():
                raise ValueError(f"size must look like N, N M or NxM, got {token!r}")
            sizes.append(int(part))
    return tuple(sizes)


def _parse_named_paths(pairs: Sequence[str]) -> dict[str, pathlib.Path]:
    out = {}
    for pair in pairs:
        name, _, path = pair.partition("=")
        if not path:
            raise ValueError(f"expected NAME=PATH, got {pair!r}")
        out[name] = pathlib.Path(path)
    return out


def _dataset_name(path: pathlib.Path) -> str:
    return path.stem


def _env_template(args: argparse.Namespace) -> EnvConfig:
    return EnvConfig(
        B=config.get_episode_budget(),
        alpha=config.get_cleanup_alpha(),
        beta=config.get_early_reward_beta(),
        seed=args.seed,
    )


def _policy(args: argparse.Namespace, required: bool = False):
    """Learned policy when a checkpoint is given, else the named reference policy."""
    references = reference_policies(rho=args.rho)
    checkpoint = getattr(args, "checkpoint", None)
    if checkpoint:
        params, _ = load_checkpoint(pathlib.Path(checkpoint))
        return LearnedPolicy(params, fallback=references["greedy_defer"])
    if required and args.policy is None:
        raise FileNotFoundError("a trained --checkpoint (or an explicit --policy) is required")
    return references[args.policy or "greedy_defer"]


def _context(args: argparse.Namespace, policy=None) -> SolveContext:
    scheme_dir = pathlib.Path(args.scheme_dir) if getattr(args, "scheme_dir", None) else config.get_results_path() / "schemes"
    return SolveContext(
        env_template=_env_template(args),
        policy=policy,
        best_of_n=getattr(args, "n", None) or config.get_best_of_n(),
        tabucol_iters=getattr(args, "iters", None) or config.get_tabucol_iters(),
        tabucol_tenure=config.get_tabucol_tenure(),
        exact_budget=config.get_exact_budget(),
        k=getattr(args, "k", None),
        k_slack=getattr(args, "k_slack", 0),
        r_max=getattr(args, "r", None),
        scheme_dir=scheme_dir,
        seed=args.seed,
    )


def _emit_table(args: argparse.Namespace, methods: list[str], ctx: SolveContext) -> None:
    in_path = pathlib.Path(args.input)
    dataset = _dataset_name(in_path)
    instances = read_dataset(in_path)
    table = run_table(instances, methods, ctx, dataset)
    out = pathlib.Path(args.out)
    write_results_csv(out, table.records)
    write_aggregates_json(out.with_suffix(".summary.json"), table.aggregates)
    db_path = config.get_sqlite_path()
    init_db(db_path)
    insert_records([r.to_row() for r in table.records], db_path)


#####################################
# Subcommands
#####################################


def cmd_gen(args: argparse.Namespace) -> None:
    params = _parse_params(args.param)
    if args.p is not None:
        params["p"] = args.p
    size = _sizes(args.size)
    instances = []
    for k in range(args.count):
        seed = derive_seed(args.seed, k)
        spec = GenSpec(args.family, size, params, demand_fraction=args.q, seed=seed)
        instances.append((f"{args.family}-{k:04d}", args.family, seed, generate(spec)))
    if args.label:
        records = label_dataset(instances, budget=config.get_exact_budget())
    else:
        records = [LabeledInstance(i, f, s, conflict_graph_of(inst), None) for i, f, s, inst in instances]
    write_dataset(pathlib.Path(args.out), records)


def cmd_label(args: argparse.Namespace) -> None:
    records = read_dataset(pathlib.Path(args.input))
    labeled = label_dataset([(r.id, r.family, r.seed, r.graph) for r in records], budget=args.budget or config.get_exact_budget())
    covered = sum(r.labeled for r in labeled)
    logger.info(f"Labeled {covered} of {len(labeled)} instances ({covered / max(len(labeled), 1):.1%} coverage).")
    if args.chi is not None:
        labeled = filter_by_chi(labeled, args.chi)
    write_dataset(pathlib.Path(args.out), labeled)


def cmd_baseline(args: argparse.Namespace) -> None:
    _emit_table(args, [BASELINE_METHODS[args.algo]], _context(args))


def cmd_solve(args: argparse.Namespace) -> None:
    method = SOLVE_METHODS[args.mode]
    if method in ("OVIA", "SVIA"):
        method = f"{method}-{args.b}"
    _emit_table(args, [method], _context(args, _policy(args)))


def cmd_eval(args: argparse.Namespace) -> None:
    _emit_table(args, ["LCG"], _context(args, _policy(args, required=True)))


def cmd_table(args: argparse.Namespace) -> None:
    policy = _policy(args, required="LCG" in args.methods)
    _emit_table(args, list(args.methods), _context(args, policy))


def cmd_train(args: argparse.Namespace) -> None:
    records = [r for r in read_dataset(pathlib.Path(args.input)) if r.labeled]
    chis = sorted({r.chi for r in records})
    if args.chi is not None:
        records = filter_by_chi(records, args.chi)
    elif len(chis) != 1:
        raise ValueError(f"dataset mixes chromatic numbers {chis}; pass --chi")
    if not records:
        raise ValueError("no labeled instances to train on")
    K = records[0].chi
    env_cfg = EnvConfig(mode="coloring", K=K, r=K, B=config.get_episode_budget(), alpha=config.get_cleanup_alpha(), beta=config.get_early_reward_beta(), seed=args.seed)
    cfg = TrainConfig(
        iterations=args.iterations or config.get_ppo_iterations(),
        lr=config.get_learning_rate(),
        grad_clip_norm=config.get_grad_clip_norm(),
        rollout_parallelism=config.get_rollout_parallelism(),
        hidden=config.get_hidden_dim(),
        seed=args.seed,
    )
    checkpoint = pathlib.Path(args.checkpoint) if args.checkpoint else config.get_checkpoint_path()
    result = train(
        [r.graph for r in records],
        env_cfg,
        cfg,
        checkpoint_path=checkpoint,
        curve_path=checkpoint.with_suffix(".curve.csv"),
        state_path=checkpoint.with_suffix(".state"),
        resume=args.resume,
    )
    logger.info(f"Training finished after {len(result.curve)} recorded iterations; checkpoint at {checkpoint}")


def cmd_transfer(args: argparse.Namespace) -> None:
    checkpoints = _parse_named_paths(args.checkpoint)
    datasets = {name: read_dataset(path) for name, path in _parse_named_paths(args.dataset).items()}
    cells = transfer_eval(checkpoints, datasets, _context(args))
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["train", "test", "optimal_ratio", "reason"])
        for c in cells:
            writer.writerow([c.train, c.test, "" if c.ratio is None else f"{c.ratio:.6f}", c.reason])


def cmd_verify(args: argparse.Namespace) -> None:
    scheme_dir = pathlib.Path(args.scheme_dir) if args.scheme_dir else config.get_results_path() / "schemes"
    report = verify_all(scheme_dir)
    if not report.ok:
        logger.error(f"{len(report.failures)} uncertified scheme files in {scheme_dir}")
        sys.exit(5)
    logger.info(f"SUCCESS: all {len(report.entries)} scheme files certified.")


#####################################
# Argument Parser
#####################################


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli_experiments", description="Topological interference management experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--policy", choices=["random", "greedy_defer"], default=None)
        p.add_argument("--rho", type=float, default=0.5)

    p = sub.add_parser("gen", help="generate a dataset manifest")
    common(p)
    p.add_argument("--family", type=_family, required=True, help=f"one of {FAMILIES}, any case")
    p.add_argument("--size", nargs="+", required=True, help="N, N M or NxM")
    p.add_argument("--param", action="append", default=[])
    p.add_argument("--p", type=float, default=None, help="shorthand for --param p=P")
    p.add_argument("--q", type=float, default=0.2)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--label", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("label", help="attach exact chromatic numbers")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--chi", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("baseline", help="classical coloring baselines")
    common(p)
    p.add_argument("--algo", choices=sorted(BASELINE_METHODS), required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme-dir", default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("train", help="PPO training on a labeled dataset")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--chi", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("solve", help="find IA schemes")
    common(p)
    p.add_argument("--mode", choices=sorted(SOLVE_METHODS), required=True)
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--k-slack", type=int, default=0)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme-dir", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="best-of-N evaluation of a policy")
    common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme-dir", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("table", help="run several methods over one dataset")
    common(p)
    p.add_argument("--methods", nargs="+", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k-slack", type=int, default=0)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme-dir", default=None)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("transfer", help="cross-family evaluation matrix")
    common(p)
    p.add_argument("--checkpoint", action="append", required=True, help="FAMILY=PATH")
    p.add_argument("--dataset", action="append", required=True, help="FAMILY=PATH")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("verify", help="re-certify every scheme file")
    common(p)
    p.add_argument("--scheme-dir", default=None)
    p.set_defaults(func=cmd_verify)

    return parser


#####################################
# Define Main Function
#####################################


def main(argv: Sequence[str] | None = None) -> None:
    logger.info("STEP 1. Parse arguments and read configuration.")
    try:
        args = build_parser().parse_args(argv)
        if args.seed is None:
            args.seed = config.get_default_seed()
        logger.info(f"Command {args.command} with seed {args.seed}")
    except SystemExit:
        raise
    except Exception as e:
        logger.error(f"ERROR: Failed to read configuration: {e}")
        sys.exit(1)

    logger.info(f"STEP 2. Run {args.command}.")
    try:
        args.func(args)
        logger.info(f"SUCCESS: {args.command} complete.")
    except KeyboardInterrupt:
        logger.warning(f"{args.command} interrupted by user.")
    except (FileNotFoundError, KeyError) as e:
        logger.error(f"ERROR: Missing input for {args.command}: {e}")
        sys.exit(2)
    except ValueError as e:
        logger.error(f"ERROR: {args.command} failed: {e}")
        sys.exit(3)
    except OSError as e:
        logger.error(f"ERROR: Could not write output for {args.command}: {e}")
        sys.exit(4)
    except RuntimeError as e:
        logger.exception(f"ERROR: {args.command} aborted: {e}")
        sys.exit(1)
    finally:
        logger.info("cli_experiments shutting down.")


#####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    main()
