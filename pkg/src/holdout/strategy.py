"""Strategy verbs built from the kernel primitives: screen, tune, stack.

Every trial inside a strategy consumes the same rotation folds, talks to
the shared scorer directly, and never sees test-role data; the registry's
assessment state is untouched by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import learners
from .errors import ConfigError
from .frame import DataFrame
from .learn import _fold_seed, _train_on_prepared, feature_matrix, fit, predict_values
from .prepare import (
    apply,
    encode_target,
    encode_target_with_classes,
    fit_transformer,
    infer_task,
)
from .registry import ProvenanceRegistry, resolve
from .rotate import CVResult, _materialize
from .scoring import PRIMARY_METRIC


@dataclass(frozen=True)
class Leaderboard:
    """Algorithms ranked by mean cross-validated primary metric, descending;
    metric ties break by algorithm name."""

    rows: tuple[tuple[str, dict], ...]
    best: str
    metric: str


@dataclass(frozen=True)
class TuningResult:
    """Hyperparameter trials with their mean cross-validated metrics; best
    attains the maximum primary metric, ties going to the earliest trial."""

    trials: tuple[tuple[dict, dict], ...]
    best: dict
    metric: str


class StackedModel:
    """Base models plus a meta learner trained on out-of-fold predictions.

    Obeys the same assess-once lifecycle as Model: assessment increments
    `assess_count` and spends the holdout.
    """

    def __init__(self, base, meta, base_algorithms, task, target, source_split_id,
                 classes=None, guards_bypassed=False):
        self.base = tuple(base)
        self.meta = meta
        self.base_algorithms = tuple(base_algorithms)
        self.task = task
        self.target = target
        self.source_split_id = source_split_id
        self.classes = classes
        self.fitted = True
        self.assess_count = 0
        self.guards_bypassed = guards_bypassed

    @property
    def source_columns(self) -> tuple[str, ...]:
        return self.base[0].transformer.source_columns

    def _predict_values(self, df: DataFrame) -> np.ndarray:
        columns = {
            f"base_{algo}": predict_values(model, df)
            for algo, model in zip(self.base_algorithms, self.base)
        }
        X = np.column_stack(list(columns.values()))
        out = np.asarray(self.meta.predict(X), dtype=np.float64)
        if self.task == "classification":
            out = np.clip(out, 0.0, 1.0)
        return out

    def __repr__(self) -> str:
        return (
            f"StackedModel(base={list(self.base_algorithms)}, "
            f"assess_count={self.assess_count})"
        )


def _check_rotation(c, verb: str):
    if not isinstance(c, CVResult):
        raise TypeError(f"{verb} expects a CVResult; build one with cv() first")


def screen(
    c: CVResult,
    target: str | None = None,
    algorithms: Sequence[str] = (),
    seed: int = 0,
    hyperparameters: Mapping[str, Mapping] | None = None,
    registry: ProvenanceRegistry | None = None,
) -> Leaderboard:
    """Cross-validated comparison of algorithms on identical folds.

    Returns a Leaderboard ordered by the task's primary metric. Screening
    happens entirely in the iterate zone: the registry's assessed flags are
    unchanged afterwards.
    """
    _check_rotation(c, "screen")
    reg = resolve(registry)
    algorithms = list(algorithms)
    if not algorithms:
        raise ConfigError("screen requires at least one algorithm")
    for algo in algorithms:
        if algo not in learners.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}")
    per_algo = dict(hyperparameters or {})
    results = []
    metric = None
    for algo in algorithms:
        model = fit(
            c,
            target,
            algorithm=algo,
            seed=seed,
            hyperparameters=per_algo.get(algo),
            registry=reg,
        )
        metric = metric or PRIMARY_METRIC[model.task]
        results.append((algo, dict(model.scores_)))
    ranked = sorted(results, key=lambda row: (-row[1][metric], row[0]))
    return Leaderboard(rows=tuple(ranked), best=ranked[0][0], metric=metric)


def _grid_trials(space: Mapping[str, Sequence], budget: int) -> list[dict]:
    # Lexicographic: sorted parameter names, values in their given order.
    names = sorted(space)
    combos = itertools.product(*(list(space[n]) for n in names))
    out = []
    for combo in combos:
        if len(out) >= budget:
            break
        out.append(dict(zip(names, combo)))
    return out


def _random_trials(space: Mapping[str, Sequence], budget: int, seed: int) -> list[dict]:
    rng = np.random.Generator(np.random.Philox(seed))
    names = sorted(space)
    out = []
    for _ in range(budget):
        trial = {}
        for n in names:
            values = list(space[n])
            trial[n] = values[int(rng.integers(0, len(values)))]
        out.append(trial)
    return out


def tune(
    c: CVResult,
    target: str | None = None,
    algorithm: str = "logistic",
    space: Mapping[str, Sequence] | None = None,
    budget: int = 10,
    method: str = "grid",
    seed: int = 0,
    registry: ProvenanceRegistry | None = None,
) -> TuningResult:
    """Hyperparameter search over identical folds.

    Grid enumerates the cross-product of the space in lexicographic order,
    capped at `budget`; random draws `budget` seeded samples. Every trial
    is a full cross-validated fit.
    """
    _check_rotation(c, "tune")
    reg = resolve(registry)
    if not space:
        raise ConfigError("tune requires a nonempty search space")
    if any(len(list(v)) == 0 for v in space.values()):
        raise ConfigError("every search dimension needs at least one value")
    if budget < 1:
        raise ConfigError(f"budget must be at least 1, got {budget}")
    if method == "grid":
        trial_params = _grid_trials(space, budget)
    elif method == "random":
        trial_params = _random_trials(space, budget, seed)
    else:
        raise ConfigError(f"tune method must be 'grid' or 'random', got {method!r}")

    trials = []
    metric = None
    for params in trial_params:
        model = fit(
            c, target, algorithm=algorithm, seed=seed, hyperparameters=params,
            registry=reg,
        )
        metric = metric or PRIMARY_METRIC[model.task]
        trials.append((params, dict(model.scores_)))
    best_index = max(
        range(len(trials)), key=lambda i: (trials[i][1][metric], -i)
    )
    return TuningResult(
        trials=tuple(trials), best=dict(trials[best_index][0]), metric=metric
    )


def stack(
    c: CVResult,
    target: str | None = None,
    base_algorithms: Sequence[str] = (),
    meta_algorithm: str = "logistic",
    seed: int = 0,
    hyperparameters: Mapping[str, Mapping] | None = None,
    registry: ProvenanceRegistry | None = None,
) -> StackedModel:
    """Out-of-fold stacking: the meta learner trains only on predictions a
    base model made for rows its fold excluded from training.

    Final base models are refit on the full dev set; the meta learner keeps
    the out-of-fold fit.
    """
    _check_rotation(c, "stack")
    reg = resolve(registry)
    base_algorithms = list(base_algorithms)
    if len(base_algorithms) < 2:
        raise ConfigError("stack requires at least 2 base algorithms")
    for algo in base_algorithms + [meta_algorithm]:
        if algo not in learners.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}")
    per_algo = dict(hyperparameters or {})
    target = target or c.target

    dev = c._dev_frame
    n_dev = dev.row_count
    task = infer_task(dev.column(target))
    classes = None
    if task == "classification":
        _, classes = encode_target(dev.column(target), task)

    oof = np.full((n_dev, len(base_algorithms)), np.nan)
    for a, algo in enumerate(base_algorithms):
        hp = learners.resolve_hyperparameters(algo, per_algo.get(algo))
        for fold_index, (train_idx, valid_idx) in enumerate(c.folds):
            fold_train = _materialize(c, train_idx)
            fold_valid = _materialize(c, valid_idx)
            prepared = fit_transformer(fold_train, target, None, task=task)
            state = _train_on_prepared(
                prepared, algo, hp, _fold_seed(seed, fold_index)
            )
            X_valid = feature_matrix(
                apply(prepared.state, fold_valid), prepared.state.feature_names
            )
            oof[list(valid_idx), a] = state.predict(X_valid)

    covered = ~np.isnan(oof).any(axis=1)
    y_dev = np.asarray(
        encode_target_with_classes(dev.column(target), classes), dtype=np.float64
    )
    meta_hp = learners.resolve_hyperparameters(meta_algorithm, None)
    meta_state = learners.train(
        meta_algorithm, oof[covered], y_dev[covered], meta_hp, seed, task
    )

    base_models = [
        fit(
            c,
            target,
            algorithm=algo,
            seed=seed,
            hyperparameters=per_algo.get(algo),
            registry=reg,
        )
        for algo in base_algorithms
    ]
    return StackedModel(
        base=base_models,
        meta=meta_state,
        base_algorithms=base_algorithms,
        task=task,
        target=target,
        source_split_id=c.source_split_id,
        classes=classes,
        guards_bypassed=not reg.guards_on,
    )
