"""Command-line front end: workload generation, fitting, rounding, eval, sweeps.

Exit codes: 0 success, 2 usage error, 3 data/schema error, 4 infeasible
configuration. All randomness derives from --seed via named sub-streams, so
reruns with identical flags reproduce outputs byte for byte (timing fields
aside).
"""

from __future__ import annotations

import os

# RAP_THREADS caps internal parallelism; it must land in the BLAS thread-count
# variables before numpy is first imported, hence before the imports below.
_threads = os.environ.get("RAP_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import engine, evaluation, projection, queries, rounding, schema
from .privacy import BudgetError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4


def _load_data(args) -> schema.DiscreteDataset:
    sch = schema.Schema.load(args.schema) if getattr(args, "schema", None) else None
    return schema.load_csv(args.data, sch)


def _add_data_args(p, schema_required=False):
    p.add_argument("--data", required=True, help="input CSV (header row, categorical cells)")
    p.add_argument(
        "--schema",
        required=schema_required,
        help="schema JSON; omit to infer categories from the data",
    )


def _parse_delta(text: str) -> float | None:
    if text == "auto":
        return None
    return float(text)


def _normalization(args) -> projection.Normalization:
    return projection.Normalization(mode=args.normalization)


def _fit_config(args) -> engine.FitConfig:
    base = engine.FitConfig()
    if getattr(args, "config", None):
        base = engine.fit_config_json_overrides(
            json.loads(Path(args.config).read_text(encoding="utf-8"))
        )
    proj = replace(
        base.projection,
        normalization=_normalization(args),
        max_steps=args.max_steps if args.max_steps is not None else base.projection.max_steps,
        learning_rate=(
            args.learning_rate if args.learning_rate is not None else base.projection.learning_rate
        ),
        trace_path=args.trace if args.trace is not None else base.projection.trace_path,
    )
    return replace(
        base,
        epsilon=args.epsilon if args.epsilon is not None else base.epsilon,
        delta=_parse_delta(args.delta) if args.delta is not None else base.delta,
        rounds=args.T if args.T is not None else base.rounds,
        queries_per_round=args.K if args.K is not None else base.queries_per_round,
        n_synth=args.n_prime if args.n_prime is not None else base.n_synth,
        seed=args.seed if args.seed is not None else base.seed,
        no_noise=args.no_noise or base.no_noise,
        crypto_noise=args.crypto_noise or base.crypto_noise,
        projection=proj,
    )


def _echo_config(config: engine.FitConfig, delta: float) -> None:
    print(
        f"config: epsilon={config.epsilon} delta={delta} T={config.rounds} "
        f"K={config.queries_per_round} n_prime={config.n_synth} seed={config.seed} "
        f"no_noise={config.no_noise} normalization={config.projection.normalization.mode}"
    )


def cmd_workload(args) -> int:
    data = _load_data(args)
    kind = args.kind.replace("-", "_")
    print(f"config: k={args.k} marginals={args.marginals} seed={args.seed} kind={kind}")
    wl = queries.random_workload(data.schema, args.k, args.marginals, args.seed, kind=kind)
    out = Path(args.out)
    wl.save(out)
    data.schema.save(out.with_suffix(".schema.json"))
    if args.dump_compiled:
        out.with_suffix(".compiled.json").write_text(
            json.dumps(wl.compiled_json_dict()) + "\n", encoding="utf-8"
        )
    print(f"workload: m={wl.m} marginals={len(wl.marginals)} -> {out}")
    for s, size in zip(wl.marginals, wl.marginal_sizes()):
        print(f"  S={list(s)}: {size} queries")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = _load_data(args)
    wl = queries.Workload.load(data.schema, args.workload)
    config = _fit_config(args)
    _echo_config(config, engine.resolve_delta(config, data.n))
    result = engine.fit(data, wl, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "result.json").write_text(result.to_json(), encoding="utf-8")
    engine.save_relaxed_csv(result.relaxed, out_dir / "relaxed.csv")
    data.schema.save(out_dir / "schema.json")
    summary = result.budget.summary()
    print(
        f"fit: selected={len(result.selected)} rho_spent={summary['rho_spent']:.6g} "
        f"private={summary['private']} -> {out_dir}"
    )
    return EXIT_OK


def cmd_round(args) -> int:
    print(f"config: oversample={args.oversample} seed={args.seed}")
    sch = schema.Schema.load(args.schema)
    relaxed = engine.load_relaxed_csv(args.relaxed, sch)
    synth = rounding.randomized_round(
        relaxed, rounding.RoundingConfig(oversample=args.oversample, seed=args.seed)
    )
    schema.save_csv(synth, args.out)
    print(f"round: {relaxed.n} rows x {args.oversample} -> {synth.n} rows -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    data = _load_data(args)
    wl = queries.Workload.load(data.schema, args.workload)
    if args.synth_format == "relaxed":
        synth = engine.load_relaxed_csv(args.synth, data.schema)
    else:
        synth = schema.load_csv(args.synth, data.schema)
    report = evaluation.max_error(wl, data, synth)
    Path(args.out).write_text(
        json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(
        f"eval: max_error={report.max_error:.6g} mean_error={report.mean_error:.6g} "
        f"naive_baseline={report.naive_baseline:.6g} m={report.m} -> {args.out}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _load_data(args)
    config = _fit_config(args)
    axis = args.axis.replace("-", "_").replace("n_prime", "n_synth")
    values = [float(v) if axis == "epsilon" else int(v) for v in args.values.split(",")]
    spec = evaluation.SweepSpec(
        axis=axis,
        values=tuple(values),
        seeds=tuple(range(args.seeds)),
        workload_k=args.k,
        workload_marginals=args.marginals,
        workload_seed=args.workload_seed,
        kind=args.kind.replace("-", "_"),
        grid_rounds=tuple(int(v) for v in args.grid_T.split(",")) if args.grid_T else None,
        grid_queries_per_round=(
            tuple(int(v) for v in args.grid_K.split(",")) if args.grid_K else None
        ),
    )
    rows = evaluation.run_sweep(data, spec, config)
    evaluation.sweep_rows_to_csv(rows, args.out)
    best = evaluation.best_of_grid(rows)
    best_path = Path(args.out).with_suffix(".best.csv")
    evaluation.sweep_rows_to_csv(best, best_path, extra_columns=("selection",))
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"sweep: {len(rows)} rows ({failed} failed) -> {args.out}; best-of-grid -> {best_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privsynth",
        description="Differentially private synthetic data preserving marginal queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("workload", help="sample a marginal workload and write it as JSON")
    _add_data_args(p)
    p.add_argument("--k", type=int, required=True, help="marginal arity")
    p.add_argument("--marginals", type=int, required=True, help="number of feature subsets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=["product", "one-out-of-k"], default="product")
    p.add_argument("--out", default="workload.json")
    p.add_argument(
        "--dump-compiled", action="store_true",
        help="also write the compiled one-hot column sets as JSON",
    )
    p.set_defaults(func=cmd_workload)

    p = sub.add_parser("fit", help="fit a relaxed synthetic dataset to a workload")
    _add_data_args(p)
    p.add_argument("--workload", required=True)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", default=None, help='float or "auto" for 1/n^2')
    p.add_argument("--T", type=int, default=None, help="rounds (1 = answer all queries up front)")
    p.add_argument("--K", type=int, default=None, help="queries selected per round when T > 1")
    p.add_argument("--n-prime", dest="n_prime", type=int, default=None, help="synthetic rows")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-noise", action="store_true", help="noiseless test mode (NOT private)")
    p.add_argument(
        "--crypto-noise", action="store_true", help="OS-entropy noise source (not reproducible)"
    )
    p.add_argument(
        "--normalization", choices=list(projection.NORMALIZATION_MODES), default="sparsemax"
    )
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--trace", default=None, help="write per-step loss CSV here")
    p.add_argument("--out-dir", default="fit_out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("round", help="randomized-round a relaxed matrix to a labeled CSV")
    p.add_argument("--relaxed", required=True, help="relaxed matrix CSV from fit")
    p.add_argument("--schema", required=True, help="schema JSON written by fit")
    p.add_argument("--oversample", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="synthetic.csv")
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("eval", help="error report of synthetic data against the real data")
    _add_data_args(p)
    p.add_argument("--workload", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--synth-format", choices=["labels", "relaxed"], default="labels")
    p.add_argument("--out", default="error_report.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a fit per axis value x seed x grid point")
    _add_data_args(p)
    p.add_argument(
        "--axis", choices=["epsilon", "workload", "n-prime", "oversample"], required=True
    )
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds (0..seeds-1)")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--marginals", type=int, default=8)
    p.add_argument("--workload-seed", type=int, default=0)
    p.add_argument("--kind", choices=["product", "one-out-of-k"], default="product")
    p.add_argument("--grid-T", default=None, help="comma-separated rounds grid")
    p.add_argument("--grid-K", default=None, help="comma-separated queries-per-round grid")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--n-prime", dest="n_prime", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--crypto-noise", action="store_true")
    p.add_argument(
        "--normalization", choices=list(projection.NORMALIZATION_MODES), default="sparsemax"
    )
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--trace", default=None)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except schema.SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except engine.InfeasibleConfigError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (queries.WorkloadError, rounding.RoundingError, BudgetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
