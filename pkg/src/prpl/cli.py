"""Command-line interface: ``verify``, ``train``, and ``bench``.

Configuration precedence is flag > config file (flat JSON, ``--config``) >
``PRPL_SEED`` environment variable (seed only) > built-in default. Unknown
config-file keys are rejected. Exit codes: 0 success, 1 verification or
scaling-assertion failure, 2 usage/configuration error.

``verify`` writes one JSON line (or CSV row) per check; ``train`` writes
evaluation records as CSV and optionally a buffer snapshot; ``bench``
writes ns-per-op rows as CSV or JSON.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

from . import bench as bench_mod
from . import equivalence as eq
from .losses import LossSpec
from .replay import SchemeConfig
from .rng import Xoshiro256StarStar, derive_seed
from .toyrl import ChainMDP, TrainConfig, records_to_csv, run_training

DEFAULT_EXPONENTS = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0)

_CHECK_TOLERANCES = {
    "lap_pal": (eq.DEFAULT_ATOL, eq.DEFAULT_RTOL),
    "mse_l1": (1e-12, 1e-12),
    "per_equivalent_loss": (eq.DEFAULT_ATOL, eq.DEFAULT_RTOL),
}


class ConfigError(Exception):
    pass


# --- verify ---

VERIFY_DEFAULTS = {
    "datasets": 10000,
    "max_n": 1024,
    "seed": 0,
    "perturb_grad": 0.0,
    "workers": 1,
    "format": "json",
    "out": None,
}


def _perturbed(report, perturb):
    if perturb == 0.0:
        return report
    atol, rtol = _CHECK_TOLERANCES[report.check]
    return eq._make_report(report.check, report.params,
                           report.lhs_expected_grad + perturb,
                           report.rhs_expected_grad, atol, rtol)


def verify_dataset(seed, index, max_n, perturb=0.0, exponents=DEFAULT_EXPONENTS):
    """All checks for one randomized dataset; deterministic in (seed, index)."""
    rng = Xoshiro256StarStar(derive_seed(seed, index))
    pick = rng.uniform()
    if pick < 0.5:
        kappa = 1.0
    elif pick < 0.6:
        kappa = 0.01
    else:
        kappa = 10.0 ** (rng.uniform() * 2.0 - 2.0)
    alpha = rng.uniform()
    ds = eq.random_delta_set(rng, max_n=max_n, kappa=kappa)

    reports = [
        _perturbed(eq.check_lap_pal(ds, alpha, kappa), perturb),
        _perturbed(eq.check_mse_l1(ds), perturb),
    ]
    for tau in (1.0, 2.0):
        reports.append(_perturbed(
            eq.check_per_equivalent_loss(ds, tau, rng.uniform(), rng.uniform()),
            perturb))

    sweep = eq.variance_sweep(ds, LossSpec.mse(), exponents)
    reports.extend(sweep)
    best = min(r.prioritized_variance for r in sweep)
    at_l1 = next(r.prioritized_variance for r in sweep
                 if r.params["exponent"] == 0.0)
    reports.append(eq.VarianceReport(
        check="variance_min_at_l1",
        params={"n": ds.n},
        candidate="c=0",
        uniform_variance=best,
        prioritized_variance=at_l1,
        passed=at_l1 <= best + 1e-12 * (1.0 + abs(best)),
    ))
    return reports


def _verify_worker(args):
    seed, index, max_n, perturb = args
    return index, verify_dataset(seed, index, max_n, perturb)


def run_verify(datasets, max_n, seed, perturb=0.0, workers=1):
    """Reports for every dataset, in dataset order, plus overall pass flag."""
    tasks = [(seed, i, max_n, perturb) for i in range(datasets)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            indexed = list(pool.map(_verify_worker, tasks, chunksize=64))
        indexed.sort(key=lambda pair: pair[0])
        batches = [reports for _, reports in indexed]
    else:
        batches = [verify_dataset(seed, i, max_n, perturb)
                   for i in range(datasets)]
    reports = [r for batch in batches for r in batch]
    return reports, all(r.passed for r in reports)


def _cmd_verify(opts):
    reports, ok = run_verify(opts["datasets"], opts["max_n"], opts["seed"],
                             perturb=opts["perturb_grad"],
                             workers=opts["workers"])
    fmt = "jsonl" if opts["format"] == "json" else "csv"
    if opts["out"] is None:
        eq.write_reports(reports, sys.stdout, fmt)
    else:
        with open(opts["out"], "w") as fh:
            eq.write_reports(reports, fh, fmt)
    failed = sum(1 for r in reports if not r.passed)
    print(f"verify: {len(reports) - failed}/{len(reports)} checks passed",
          file=sys.stderr)
    return 0 if ok else 1


# --- train ---

TRAIN_DEFAULTS = {
    "scheme": "uniform",
    "loss": "mse",
    "alpha": None,
    "beta": 0.4,
    "epsilon": 1e-10,
    "kappa": None,
    "beta_anneal_end": None,
    "preset": "control",
    "steps": 20000,
    "batch_size": 8,
    "learning_rate": 0.1,
    "target_copy_period": 250,
    "buffer_capacity": 2048,
    "exploration_epsilon": 0.3,
    "eval_period": 1000,
    "n_states": 5,
    "slip": 0.1,
    "gamma": 0.99,
    "seed": 0,
    "out": None,
    "checkpoint": None,
}


def _resolve_scheme(opts):
    kind = opts["scheme"]
    atari = opts["preset"] == "atari"
    alpha = opts["alpha"]
    kappa = opts["kappa"]
    if kind == "uniform":
        return SchemeConfig.uniform()
    if kind == "per":
        anneal = None
        if opts["beta_anneal_end"] is not None:
            anneal = (opts["beta"], opts["beta_anneal_end"])
        return SchemeConfig.per(alpha=0.6 if alpha is None else alpha,
                                beta=opts["beta"], epsilon=opts["epsilon"],
                                beta_anneal=anneal)
    if kind == "lap":
        default_alpha = 0.6 if atari else 0.4
        default_kappa = 0.01 if atari else 1.0
        return SchemeConfig.lap(alpha=default_alpha if alpha is None else alpha,
                                kappa=default_kappa if kappa is None else kappa)
    raise ConfigError(f"unknown scheme {kind!r}")


def _resolve_loss(opts):
    kind = opts["loss"]
    atari = opts["preset"] == "atari"
    alpha = opts["alpha"]
    kappa = opts["kappa"]
    if kind == "mse":
        return LossSpec.mse()
    if kind == "l1":
        return LossSpec.l1()
    if kind == "huber":
        default_kappa = 0.01 if atari else 1.0
        return LossSpec.huber(default_kappa if kappa is None else kappa)
    if kind == "pal":
        default_alpha = 0.6 if atari else 0.4
        default_kappa = 0.01 if atari else 1.0
        return LossSpec.pal(default_alpha if alpha is None else alpha,
                            default_kappa if kappa is None else kappa)
    raise ConfigError(f"unknown loss {kind!r}")


def _cmd_train(opts):
    mdp = ChainMDP(n_states=opts["n_states"], slip_prob=opts["slip"],
                   gamma=opts["gamma"])
    config = TrainConfig(
        scheme=_resolve_scheme(opts),
        loss=_resolve_loss(opts),
        steps=opts["steps"],
        batch_size=opts["batch_size"],
        learning_rate=opts["learning_rate"],
        target_copy_period=opts["target_copy_period"],
        buffer_capacity=opts["buffer_capacity"],
        exploration_epsilon=opts["exploration_epsilon"],
        seed=opts["seed"],
        eval_period=opts["eval_period"],
    )
    result = run_training(mdp, config)
    if opts["out"] is None:
        records_to_csv(result.records, sys.stdout)
    else:
        with open(opts["out"], "w") as fh:
            records_to_csv(result.records, fh)
    if opts["checkpoint"] is not None:
        result.buffer.save(opts["checkpoint"])
    return 0


# --- bench ---

BENCH_DEFAULTS = {
    "capacities": ",".join(str(2 ** k) for k in range(10, 21)),
    "batch_size": 32,
    "iterations": 20,
    "repetitions": 5,
    "operations": "mixed",
    "structures": "sumtree,naive",
    "seed": 0,
    "format": "csv",
    "out": None,
    "assert_scaling": False,
}


def _parse_int_list(text):
    try:
        values = [int(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc
    if not values:
        raise ConfigError("empty list")
    return values


def _parse_name_list(text, allowed, what):
    names = [tok.strip() for tok in str(text).split(",") if tok.strip()]
    for name in names:
        if name not in allowed:
            raise ConfigError(f"unknown {what} {name!r}")
    if not names:
        raise ConfigError(f"empty {what} list")
    return names


def _cmd_bench(opts):
    capacities = _parse_int_list(opts["capacities"])
    operations = _parse_name_list(opts["operations"], bench_mod.OPERATIONS,
                                  "operation")
    structures = _parse_name_list(opts["structures"], bench_mod.STRUCTURES,
                                  "structure")
    if min(capacities) < opts["batch_size"]:
        raise ConfigError("capacity must be >= batch size")
    results = bench_mod.run_bench(
        capacities, batch_size=opts["batch_size"],
        iterations=opts["iterations"], operations=operations,
        structures=structures, repetitions=opts["repetitions"],
        seed=opts["seed"])
    if opts["format"] == "json":
        payload = json.dumps([asdict(r) for r in results], indent=2)
        if opts["out"] is None:
            print(payload)
        else:
            with open(opts["out"], "w") as fh:
                fh.write(payload + "\n")
    else:
        if opts["out"] is None:
            bench_mod.results_to_csv(results, sys.stdout)
        else:
            with open(opts["out"], "w") as fh:
                bench_mod.results_to_csv(results, fh)
    if opts["assert_scaling"]:
        if len(capacities) < 2 or set(structures) != set(bench_mod.STRUCTURES):
            raise ConfigError("--assert-scaling needs both structures and "
                              "at least two capacities")
        checks = bench_mod.check_scaling(results, min(capacities),
                                         max(capacities),
                                         operation=operations[0])
        ok = True
        for name, passed, detail in checks:
            print(f"scaling {name}: {'pass' if passed else 'FAIL'} "
                  f"({detail})", file=sys.stderr)
            ok = ok and passed
        if not ok:
            return 1
    return 0


# --- plumbing ---

def _merge_options(defaults, file_config, flags):
    opts = dict(defaults)
    unknown = set(file_config) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    opts.update(file_config)
    for key, value in flags.items():
        if value is not None:
            opts[key] = value
    # PRPL_SEED is the fallback when neither flag nor file set a seed.
    if "seed" in defaults and flags.get("seed") is None \
            and "seed" not in file_config:
        env_seed = os.environ.get("PRPL_SEED")
        if env_seed is not None:
            opts["seed"] = int(env_seed)
    return opts


def _load_config_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    return data


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prpl",
        description="prioritized replay toolkit: verification, toy training, "
                    "benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the equivalence/variance checks")
    p.add_argument("--datasets", type=int)
    p.add_argument("--max-n", dest="max_n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--perturb-grad", dest="perturb_grad", type=float,
                   help="add this to every equivalence lhs (fault injection)")
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("train", help="tabular Q-learning on the chain MDP")
    p.add_argument("--scheme", choices=("uniform", "per", "lap"))
    p.add_argument("--loss", choices=("mse", "huber", "pal", "l1"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta-anneal-end", dest="beta_anneal_end", type=int)
    p.add_argument("--preset", choices=("control", "atari"))
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--target-copy-period", dest="target_copy_period", type=int)
    p.add_argument("--buffer-capacity", dest="buffer_capacity", type=int)
    p.add_argument("--exploration-epsilon", dest="exploration_epsilon",
                   type=float)
    p.add_argument("--eval-period", dest="eval_period", type=int)
    p.add_argument("--n-states", dest="n_states", type=int)
    p.add_argument("--slip", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--checkpoint")
    p.add_argument("--config")

    p = sub.add_parser("bench", help="sum-tree vs naive sampler scaling")
    p.add_argument("--capacities")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--operations")
    p.add_argument("--structures")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.add_argument("--assert-scaling", dest="assert_scaling",
                   action="store_true", default=None)
    p.add_argument("--config")
    return parser


_COMMANDS = {
    "verify": (VERIFY_DEFAULTS, _cmd_verify),
    "train": (TRAIN_DEFAULTS, _cmd_train),
    "bench": (BENCH_DEFAULTS, _cmd_bench),
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults, runner = _COMMANDS[args.command]
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config")}
    try:
        file_config = _load_config_file(args.config) if args.config else {}
        opts = _merge_options(defaults, file_config, flags)
        return runner(opts)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
