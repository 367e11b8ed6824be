"""End-to-end synthetic data fitting: budget split, selection, projection.

Two branches, chosen by the `rounds` parameter:

* rounds == 1: every workload query is answered once with the Gaussian
  mechanism at rho/m, and a single projection fits a relaxed dataset to the
  full noisy answer vector from a seeded random start.

* rounds > 1: per round, `queries_per_round` selections are made
  sequentially. Each selection scores the not-yet-answered pool by the gap
  between its true answers and the answers conjectured from the current
  relaxed dataset, picks a winner by Gumbel noisy-max at rho/(2*T*K), and
  answers the winner with the Gaussian mechanism at the same share. The round
  ends with one projection over everything selected so far, warm-started from
  the previous round's dataset. Selection and answering each consume
  rho/(2*T*K), so T*K full rounds spend exactly rho.

Within a round the relaxed dataset is fixed, so conjectured pool answers are
computed once per round and the K selections index into them. If the pool
empties early, remaining rounds are skipped and unspent budget stays unspent.
Everything is deterministic given the seed (noise streams are derived per
component), so rerunning a fit reproduces its result byte for byte.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .privacy import NoiseSource, PrivacyBudget, gaussian_mechanism, report_noisy_max
from .projection import (
    ProjectionConfig,
    projection_config_from_json,
    projection_config_json,
    random_init,
    relaxed_projection,
)
from .queries import Workload, eval_compiled, eval_discrete, eval_relaxed
from .schema import DiscreteDataset, RelaxedDataset, SchemaError


class InfeasibleConfigError(ValueError):
    """Round/selection counts cannot be satisfied by the workload."""


@dataclass(frozen=True)
class FitConfig:
    epsilon: float = 1.0
    delta: float | None = None  # None resolves to 1/n^2 at fit time
    rounds: int = 1
    queries_per_round: int | None = None  # required when rounds > 1
    n_synth: int = 1000
    seed: int = 0
    no_noise: bool = False
    crypto_noise: bool = False
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    # Diagnostics: snapshot the relaxed dataset after every round. Off by
    # default; the copies are pure overhead outside of tests.
    keep_round_datasets: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise InfeasibleConfigError("rounds must be >= 1")
        if self.rounds > 1 and (self.queries_per_round is None or self.queries_per_round < 1):
            raise InfeasibleConfigError("queries_per_round must be >= 1 when rounds > 1")
        if self.n_synth < 1:
            raise InfeasibleConfigError("n_synth must be >= 1")


@dataclass
class FitResult:
    relaxed: RelaxedDataset
    selected: list[int]  # workload indices in selection order
    noisy_answers: list[float]  # aligned with `selected`
    rounds: list[dict]  # per-round loss / max-error / step trace
    budget: PrivacyBudget
    config: FitConfig
    resolved_delta: float
    timing: dict = field(default_factory=dict)
    round_datasets: list[RelaxedDataset] = field(default_factory=list)

    def to_json_dict(self, include_timing: bool = True) -> dict:
        cfg = {
            "epsilon": self.config.epsilon,
            "delta": self.resolved_delta,
            "rounds": self.config.rounds,
            "queries_per_round": self.config.queries_per_round,
            "n_synth": self.config.n_synth,
            "seed": self.config.seed,
            "no_noise": self.config.no_noise,
            "crypto_noise": self.config.crypto_noise,
            "projection": projection_config_json(self.config.projection),
        }
        out = {
            "config": cfg,
            "budget": self.budget.summary(),
            "ledger": self.budget.ledger_json(),
            "selected": list(self.selected),
            "noisy_answers": [float(a) for a in self.noisy_answers],
            "rounds": self.rounds,
            "n_synth_rows": self.relaxed.n,
        }
        if include_timing:
            out["timing"] = self.timing
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_json_dict(include_timing), sort_keys=True, indent=2) + "\n"


def resolve_delta(config: FitConfig, n: int) -> float:
    """Apply the default delta = 1/n^2 when none was given."""
    return 1.0 / (n * n) if config.delta is None else config.delta


def conjectured_answers(pool, workload: Workload, relaxed: RelaxedDataset) -> np.ndarray:
    """Relaxed answers for the pool's queries, in pool order."""
    m = workload.m
    for i in pool:
        if not 0 <= i < m:
            raise IndexError(f"query index {i} out of range for workload of size {m}")
    return eval_compiled([workload.queries[i] for i in pool], relaxed)


def fit(data: DiscreteDataset, workload: Workload, config: FitConfig) -> FitResult:
    """Run the full mechanism and return the fitted relaxed dataset."""
    if workload.m == 0:
        raise InfeasibleConfigError("workload is empty")
    if data.schema != workload.schema:
        raise SchemaError("dataset and workload schemas differ")
    t_rounds, k_per = config.rounds, config.queries_per_round
    if t_rounds > 1 and t_rounds * k_per > workload.m:
        raise InfeasibleConfigError(
            f"rounds*queries_per_round = {t_rounds * k_per} exceeds workload size {workload.m}"
        )

    started = time.perf_counter()
    n = data.n
    delta = resolve_delta(config, n)
    if config.no_noise:
        budget = PrivacyBudget.non_private()
        rho = math.inf
    else:
        budget = PrivacyBudget.from_eps_delta(config.epsilon, delta)
        rho = budget.rho_total

    init_rng = NoiseSource(config.seed, "init")
    gauss_rng = NoiseSource(config.seed, "gaussian", crypto=config.crypto_noise)
    gumbel_rng = NoiseSource(config.seed, "gumbel", crypto=config.crypto_noise)

    true_answers = eval_discrete(workload, data)
    current = random_init(
        workload.schema, config.n_synth, init_rng, config.projection.normalization
    )

    selected: list[int] = []
    noisy: list[float] = []
    round_trace: list[dict] = []
    round_datasets: list[RelaxedDataset] = []
    proj_seconds = 0.0

    if t_rounds == 1:
        share = math.inf if config.no_noise else rho / workload.m
        answers = gaussian_mechanism(true_answers, n, share, gauss_rng)
        for i in range(workload.m):
            budget.spend(f"gaussian[q={i}]", 0.0 if config.no_noise else share)
        selected = list(range(workload.m))
        noisy = [float(a) for a in np.atleast_1d(answers)]
        t0 = time.perf_counter()
        proj = relaxed_projection(workload.queries, answers, current, config.projection)
        proj_seconds += time.perf_counter() - t0
        current = proj.dataset
        round_trace.append(_round_record(1, proj, workload, current, true_answers, selected))
        if config.keep_round_datasets:
            round_datasets.append(current)
    else:
        share = math.inf if config.no_noise else rho / (2.0 * t_rounds * k_per)
        ledger_share = 0.0 if config.no_noise else share
        pool = list(range(workload.m))
        for t in range(1, t_rounds + 1):
            if not pool:
                break  # pool exhausted: skip remaining rounds, budget stays unspent
            pool_true = true_answers[pool]
            pool_conj = conjectured_answers(pool, workload, current)
            for j in range(k_per):
                if not pool:
                    break
                win = report_noisy_max(pool_true, pool_conj, n, share, gumbel_rng)
                qidx = pool.pop(win)
                pool_true = np.delete(pool_true, win)
                pool_conj = np.delete(pool_conj, win)
                budget.spend(f"noisy_max[round={t},pick={j}]", ledger_share)
                answer = gaussian_mechanism(true_answers[qidx], n, share, gauss_rng)
                budget.spend(f"gaussian[q={qidx}]", ledger_share)
                selected.append(qidx)
                noisy.append(float(answer))
            t0 = time.perf_counter()
            proj = relaxed_projection(
                [workload.queries[i] for i in selected],
                np.asarray(noisy),
                current,
                config.projection,
            )
            proj_seconds += time.perf_counter() - t0
            current = proj.dataset
            round_trace.append(_round_record(t, proj, workload, current, true_answers, selected))
            if config.keep_round_datasets:
                round_datasets.append(current)

    result = FitResult(
        relaxed=current,
        selected=selected,
        noisy_answers=noisy,
        rounds=round_trace,
        budget=budget,
        config=config,
        resolved_delta=delta,
        timing={
            "wall_ms": (time.perf_counter() - started) * 1000.0,
            "projection_ms": proj_seconds * 1000.0,
        },
        round_datasets=round_datasets,
    )
    return result


def _round_record(t, proj, workload, current, true_answers, selected) -> dict:
    # Max error over the full workload is a diagnostic computed from the
    # private data; it belongs in evaluation reports, not in released output.
    errors = np.abs(eval_relaxed(workload, current) - true_answers)
    return {
        "round": t,
        "selected_total": len(selected),
        "projection_initial_loss": proj.losses[0],
        "projection_loss": proj.best_loss,
        "projection_steps": proj.steps,
        "max_error": float(errors.max()),
    }


def save_relaxed_csv(relaxed: RelaxedDataset, path) -> None:
    """Write the relaxed matrix as headerless CSV with full float precision."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in relaxed.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_relaxed_csv(path, schema) -> RelaxedDataset:
    data = np.loadtxt(Path(path), delimiter=",", ndmin=2, dtype=np.float64)
    return RelaxedDataset(schema, data)


def fit_config_json_overrides(obj: dict) -> FitConfig:
    """Build a FitConfig from a plain dict (config-file support for the CLI)."""
    proj = projection_config_from_json(obj.get("projection", {}))
    return FitConfig(
        epsilon=obj.get("epsilon", 1.0),
        delta=obj.get("delta"),
        rounds=obj.get("rounds", 1),
        queries_per_round=obj.get("queries_per_round"),
        n_synth=obj.get("n_synth", 1000),
        seed=obj.get("seed", 0),
        no_noise=obj.get("no_noise", False),
        crypto_noise=obj.get("crypto_noise", False),
        projection=proj,
    )
