"""The fit and predict verbs.

fit is the only way a Model comes into existence, so predict-before-fit is
unrepresentable. Fitting a rotation schedule runs preparation per fold:
each fold's transformer sees only that fold's training rows, validation
rows are transformed with train-fitted statistics, and the returned model
is refit on the full dev set with a dev-fitted transformer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import learners
from .errors import ConfigError, GuardError, PartitionError, SchemaError
from .frame import DataFrame
from .prepare import (
    PreparedData,
    Transformer,
    apply,
    encode_target,
    encode_target_with_classes,
    fit_transformer,
    infer_task,
)
from .registry import ProvenanceRegistry, resolve
from .rotate import CVResult, _materialize
from .scoring import CV_METRICS, score

MODEL_FORMAT_VERSION = 1

FIT_ROLES = ("train", "valid", "dev")


@dataclass(frozen=True)
class Predictions:
    """One numeric column: class-1 probabilities or point predictions."""

    values: tuple[float, ...]
    row_count: int


class Model:
    """A fitted learner with lifecycle state.

    `fitted` is true from construction. `assess_count` increments only via
    assess; the assess guard requires it to be zero. `scores_` holds mean
    cross-validated metrics when the model was fit from a rotation schedule.
    """

    def __init__(
        self,
        algorithm: str,
        task: str,
        state,
        transformer: Transformer,
        target: str,
        classes,
        hyperparameters: dict,
        seed: int,
        source_split_id: str | None,
        scores_: dict | None = None,
        guards_bypassed: bool = False,
        fold_transformers_: tuple = (),
    ):
        self.algorithm = algorithm
        self.task = task
        self.state = state
        self.transformer = transformer
        self.target = target
        self.classes = classes
        self.hyperparameters = dict(hyperparameters)
        self.seed = seed
        self.source_split_id = source_split_id
        self.scores_ = scores_
        self.fitted = True
        self.assess_count = 0
        self.guards_bypassed = guards_bypassed
        self.fold_transformers_ = fold_transformers_

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.transformer.feature_names

    def __repr__(self) -> str:
        return (
            f"Model(algorithm={self.algorithm!r}, task={self.task!r}, "
            f"fitted={self.fitted}, assess_count={self.assess_count})"
        )


def _fold_seed(seed: int, fold_index: int) -> int:
    # Stable per-fold stream: determinism must not depend on fold schedule.
    return int(np.random.SeedSequence([int(seed), fold_index]).generate_state(1)[0])


def feature_matrix(prepared_frame: DataFrame, feature_names) -> np.ndarray:
    cols = [prepared_frame.column(n) for n in feature_names]
    return np.array(cols, dtype=np.float64).T if cols else np.empty((prepared_frame.row_count, 0))


def _train_on_prepared(prepared: PreparedData, algorithm: str, hp: dict, seed: int):
    X = feature_matrix(prepared.data, prepared.state.feature_names)
    y = np.asarray(prepared.data.column(prepared.target), dtype=np.float64)
    if X.shape[1] == 0:
        raise ConfigError("no feature columns left after preparation")
    state = learners.train(algorithm, X, y, hp, seed, prepared.task)
    return state


def _resolve_algorithm(algorithm: str | None, task: str) -> str:
    if algorithm is None:
        return "logistic" if task == "classification" else "linear"
    return algorithm


def fit(
    data,
    target: str | None = None,
    algorithm: str | None = None,
    seed: int = 0,
    hyperparameters: Mapping | None = None,
    recipe=None,
    registry: ProvenanceRegistry | None = None,
) -> Model:
    """Train a model on registered non-test data.

    Accepts a tagged DataFrame (train/valid/dev role), a CVResult, or
    PreparedData from an explicit prepare call. Rotation input yields a
    model whose `scores_` are honest per-fold cross-validation means and
    whose parameters come from a final refit on all dev rows. Unregistered
    frames are rejected while guards are on.
    """
    reg = resolve(registry)
    if isinstance(data, DataFrame):
        return _fit_frame(data, target, algorithm, seed, hyperparameters, recipe, reg)
    if isinstance(data, CVResult):
        return _fit_rotation(data, target, algorithm, seed, hyperparameters, recipe, reg)
    if isinstance(data, PreparedData):
        return _fit_prepared(data, algorithm, seed, hyperparameters, reg)
    raise TypeError(
        "fit expects a DataFrame, CVResult, or PreparedData, got "
        f"{type(data).__name__}"
    )


def _guard_frame(df: DataFrame, reg: ProvenanceRegistry, verb: str):
    """Resolve provenance for a guarded verb; returns (record, bypassed)."""
    if not reg.guards_on:
        return reg.lookup_quiet(df), True
    record = reg.lookup(df)
    if record is None:
        raise PartitionError(
            f"{verb} requires data registered by split; call split() first"
        )
    if record.role not in FIT_ROLES:
        raise GuardError(
            f"{verb} rejects test-role data: partition role 'test' is not in "
            "{'train', 'valid', 'dev'}; test data is reserved for assess"
        )
    return record, False


def _fit_frame(df, target, algorithm, seed, hyperparameters, recipe, reg) -> Model:
    if target is None:
        raise ConfigError("fit requires a target column name")
    record, bypassed = _guard_frame(df, reg, "fit")
    prepared = fit_transformer(df, target, recipe)
    algorithm = _resolve_algorithm(algorithm, prepared.task)
    hp = learners.resolve_hyperparameters(algorithm, hyperparameters)
    state = _train_on_prepared(prepared, algorithm, hp, seed)
    return Model(
        algorithm=algorithm,
        task=prepared.task,
        state=state,
        transformer=prepared.state,
        target=target,
        classes=prepared.classes,
        hyperparameters=hp,
        seed=seed,
        source_split_id=record.split_id if record else None,
        scores_=None,
        guards_bypassed=bypassed,
    )


def _fit_prepared(prepared: PreparedData, algorithm, seed, hyperparameters, reg) -> Model:
    # Explicit mode: preparation already happened behind prepare's own guard.
    algorithm = _resolve_algorithm(algorithm, prepared.task)
    hp = learners.resolve_hyperparameters(algorithm, hyperparameters)
    state = _train_on_prepared(prepared, algorithm, hp, seed)
    record = reg.lookup_quiet(prepared.data)
    return Model(
        algorithm=algorithm,
        task=prepared.task,
        state=state,
        transformer=prepared.state,
        target=prepared.target,
        classes=prepared.classes,
        hyperparameters=hp,
        seed=seed,
        source_split_id=record.split_id if record else None,
        scores_=None,
        guards_bypassed=not reg.guards_on,
    )


def _fit_rotation(c, target, algorithm, seed, hyperparameters, recipe, reg) -> Model:
    target = target or c.target
    if target != c.target:
        raise ConfigError(
            f"rotation was built for target {c.target!r}, not {target!r}"
        )
    bypassed = not reg.guards_on
    if reg.guards_on and not reg.has_split(c.source_split_id):
        raise PartitionError(
            "rotation's source split is not registered in this session; "
            "call split() again"
        )
    dev = c._dev_frame
    task = infer_task(dev.column(target))
    global_classes = None
    if task == "classification":
        # Class mapping comes from all dev rows so every fold encodes
        # consistently even when a fold-train slice misses a class.
        _, global_classes = encode_target(dev.column(target), task)
    algorithm = _resolve_algorithm(algorithm, task)
    hp = learners.resolve_hyperparameters(algorithm, hyperparameters)

    fold_metrics: list[dict[str, float]] = []
    fold_transformers: list[Transformer] = []
    for fold_index, (train_idx, valid_idx) in enumerate(c.folds):
        fold_train = _materialize(c, train_idx)
        fold_valid = _materialize(c, valid_idx)
        prepared = fit_transformer(fold_train, target, recipe, task=task)
        fold_seed = _fold_seed(seed, fold_index)
        state = _train_on_prepared(prepared, algorithm, hp, fold_seed)

        valid_features = apply(prepared.state, fold_valid)
        X_valid = feature_matrix(valid_features, prepared.state.feature_names)
        y_valid = encode_target_with_classes(
            fold_valid.column(target), global_classes
        )
        preds = state.predict(X_valid)
        fold_metrics.append(score(task, y_valid, preds, CV_METRICS[task]))
        fold_transformers.append(prepared.state)

    mean_scores = {
        name: float(np.mean([m[name] for m in fold_metrics]))
        for name in fold_metrics[0]
    }

    # Deployable model: refit on every non-test row with dev-fitted state.
    prepared_dev = fit_transformer(dev, target, recipe, task=task)
    final_state = _train_on_prepared(prepared_dev, algorithm, hp, seed)
    return Model(
        algorithm=algorithm,
        task=task,
        state=final_state,
        transformer=prepared_dev.state,
        target=target,
        classes=global_classes,
        hyperparameters=hp,
        seed=seed,
        source_split_id=c.source_split_id,
        scores_=mean_scores,
        guards_bypassed=bypassed,
        fold_transformers_=tuple(fold_transformers),
    )


def predict(m, df: DataFrame) -> Predictions:
    """Apply a fitted model to any frame covering its fitted features.

    The only guard is that the model is fitted; predictions carry no
    provenance and feed no guarded verb.
    """
    from .strategy import StackedModel  # circular at import time only

    if not isinstance(m, (Model, StackedModel)):
        raise TypeError(f"predict requires a fitted Model, got {type(m).__name__}")
    if not isinstance(df, DataFrame):
        raise TypeError("predict expects a DataFrame")
    values = predict_values(m, df)
    return Predictions(values=tuple(float(v) for v in values), row_count=df.row_count)


def predict_values(m, df: DataFrame) -> np.ndarray:
    """Raw numeric predictions shared by predict, the scorer and strategies."""
    from .strategy import StackedModel

    if isinstance(m, StackedModel):
        return m._predict_values(df)
    features = apply(m.transformer, df)
    X = feature_matrix(features, m.transformer.feature_names)
    out = np.asarray(m.state.predict(X), dtype=np.float64)
    if m.task == "classification":
        out = np.clip(out, 0.0, 1.0)
    return out


def model_to_dict(m: Model) -> dict:
    """Serialize a fitted model, lifecycle flags included.

    Deserialization restores `assess_count` from the document but never
    touches the session registry: the per-holdout assessed flag lives only
    in the registry and a reloaded model cannot reopen a spent holdout
    within the same session.
    """
    if not isinstance(m, Model):
        raise TypeError("model_to_dict expects a Model")
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "algorithm": m.algorithm,
        "task": m.task,
        "target": m.target,
        "classes": list(m.classes) if m.classes is not None else None,
        "hyperparameters": m.hyperparameters,
        "seed": m.seed,
        "source_split_id": m.source_split_id,
        "scores_": m.scores_,
        "assess_count": m.assess_count,
        "guards_bypassed": m.guards_bypassed,
        "transformer": m.transformer.to_dict(),
        "learner": m.state.to_dict(),
    }


def model_from_dict(d: dict) -> Model:
    version = d.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ConfigError(f"unsupported model document version {version!r}")
    classes = tuple(d["classes"]) if d.get("classes") is not None else None
    m = Model(
        algorithm=d["algorithm"],
        task=d["task"],
        state=learners.state_from_dict(d["algorithm"], d["learner"]),
        transformer=Transformer.from_dict(d["transformer"]),
        target=d["target"],
        classes=classes,
        hyperparameters=d["hyperparameters"],
        seed=d["seed"],
        source_split_id=d.get("source_split_id"),
        scores_=d.get("scores_"),
        guards_bypassed=bool(d.get("guards_bypassed", False)),
    )
    m.assess_count = int(d.get("assess_count", 0))
    return m


def model_to_json(m: Model) -> str:
    return json.dumps(model_to_dict(m), sort_keys=True)


def model_from_json(text: str) -> Model:
    return model_from_dict(json.loads(text))


def encode_eval_target(m, df: DataFrame) -> np.ndarray:
    if m.target not in df.column_names:
        raise SchemaError(f"frame lacks the target column {m.target!r}")
    return np.asarray(
        encode_target_with_classes(df.column(m.target), m.classes), dtype=np.float64
    )
