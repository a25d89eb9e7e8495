"""The judgment verbs: repeatable evaluation, terminal assessment, explanation.

evaluate and assess are independent: both delegate to the shared scorer,
neither calls the other. evaluate works on any registered non-test frame
and may run as often as wanted; assess spends a test holdout exactly once
per session and returns Evidence, a type nothing else in the API accepts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import AlreadyAssessedModel, GuardError, PartitionError
from .frame import DataFrame, fingerprint
from .learn import Model, encode_eval_target, predict_values
from .registry import ProvenanceRegistry, resolve
from .scoring import PRIMARY_METRIC, score


@dataclass(frozen=True)
class Metrics:
    """Formative measurement on non-test data. Terminal: feeds no verb."""

    values: Mapping[str, float]
    partition_role: str
    guards_bypassed: bool = False

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def to_dict(self) -> dict:
        return {
            "kind": "metrics",
            "values": dict(self.values),
            "partition_role": self.partition_role,
            "guards_bypassed": self.guards_bypassed,
        }


@dataclass(frozen=True)
class Evidence:
    """Summative measurement on a spent test holdout.

    Nominally distinct from Metrics: the two types are never substitutable
    anywhere in the API, and the holdout fingerprint records which budget
    was spent.
    """

    values: Mapping[str, float]
    holdout_fingerprint: str
    guards_bypassed: bool = False

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def to_dict(self) -> dict:
        return {
            "kind": "evidence",
            "values": dict(self.values),
            "holdout_fingerprint": self.holdout_fingerprint,
            "guards_bypassed": self.guards_bypassed,
        }


@dataclass(frozen=True)
class Explanation:
    """Feature importances. Terminal: feeds no verb."""

    values: Mapping[str, float]
    method: str = "permutation"
    guards_bypassed: bool = field(default=False, compare=False)

    def __post_init__(self):
        bad = {k: v for k, v in self.values.items() if not math.isfinite(v)}
        if bad:
            raise ValueError(f"non-finite importances: {bad}")

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def to_dict(self) -> dict:
        return {"kind": "explanation", "method": self.method, "values": dict(self.values)}


def _require_model(m, verb: str):
    from .strategy import StackedModel

    if not isinstance(m, (Model, StackedModel)):
        raise TypeError(f"{verb} requires a fitted Model, got {type(m).__name__}")


def _model_source_columns(m) -> tuple[str, ...]:
    from .strategy import StackedModel

    return m.source_columns if isinstance(m, StackedModel) else m.transformer.source_columns


def _require_feature_columns(m, df: DataFrame) -> None:
    from .errors import SchemaError

    missing = [c for c in _model_source_columns(m) if c not in df.column_names]
    if missing:
        raise SchemaError(f"frame lacks fitted columns: {missing}")


def evaluate(
    m, df: DataFrame, metrics=None, registry: ProvenanceRegistry | None = None
) -> Metrics:
    """Score a fitted model on a registered train/valid/dev frame.

    Evaluating on training data is legal (train-vs-valid comparison is a
    standard overfitting diagnosis); test-role data is rejected because the
    iterate loop must never see test feedback.
    """
    _require_model(m, "evaluate")
    if not isinstance(df, DataFrame):
        raise TypeError("evaluate expects a DataFrame")
    reg = resolve(registry)
    role = "unknown"
    bypassed = not reg.guards_on
    if reg.guards_on:
        record = reg.lookup(df)
        if record is None:
            raise PartitionError(
                "evaluate requires data registered by split; call split() first"
            )
        if record.role == "test":
            raise GuardError(
                "evaluate rejects test-role data: test data is reserved for assess"
            )
        role = record.role
    else:
        record = reg.lookup_quiet(df)
        if record is not None:
            role = record.role
    y_true = encode_eval_target(m, df)
    preds = predict_values(m, df)
    values = score(m.task, y_true, preds, metrics)
    return Metrics(values=values, partition_role=role, guards_bypassed=bypassed)


def assess(
    m, test: DataFrame, metrics=None, registry: ProvenanceRegistry | None = None
) -> Evidence:
    """Spend a test holdout: terminal judgment, once per holdout per session.

    The guard demands, atomically: the model has never been assessed, the
    frame resolves to a registered test partition, that partition's lineage
    matches the model's split, and the holdout's assessed flag is still
    clear. Success flips both the model counter and the registry flag.
    """
    _require_model(m, "assess")
    if not isinstance(test, DataFrame):
        raise TypeError("assess expects a DataFrame")
    reg = resolve(registry)
    bypassed = not reg.guards_on
    # Input validation precedes the claim so a schema problem cannot spend
    # the holdout; model execution stays behind the guard.
    y_true = encode_eval_target(m, test)
    _require_feature_columns(m, test)
    if reg.guards_on:
        if m.assess_count > 0:
            raise AlreadyAssessedModel(
                "this model has already been assessed; assessment is terminal: "
                "once per holdout"
            )
        reg.claim_assessment(test, m.source_split_id)
    else:
        # Escape hatch: no checks, but spend the budget where it exists so
        # switching guards back on keeps the session's history honest.
        record = reg.lookup_quiet(test)
        if record is not None and record.role == "test":
            reg.mark_assessed(fingerprint(test))
    m.assess_count += 1
    preds = predict_values(m, test)
    values = score(m.task, y_true, preds, metrics)
    return Evidence(
        values=values,
        holdout_fingerprint=fingerprint(test).hex(),
        guards_bypassed=bypassed,
    )


def explain(
    m,
    df: DataFrame | None = None,
    repeats: int = 10,
    seed: int = 0,
    registry: ProvenanceRegistry | None = None,
) -> Explanation:
    """Feature importances for a fitted model.

    With a frame: permutation importance, the mean drop in the task's
    primary metric when one source column is shuffled (seeded, `repeats`
    rounds). Without a frame: intrinsic importances (absolute coefficients
    for the linear family, total split gain for trees and forests).
    Available before and after assessment.
    """
    _require_model(m, "explain")
    if df is None:
        return _intrinsic_explanation(m)
    if not isinstance(df, DataFrame):
        raise TypeError("explain expects a DataFrame or None")
    reg = resolve(registry)
    bypassed = not reg.guards_on
    if reg.guards_on:
        record = reg.lookup(df)
        if record is None:
            raise PartitionError(
                "explain requires data registered by split; call split() first"
            )
        if record.role == "test":
            raise GuardError(
                "explain rejects test-role data: test data is reserved for assess"
            )
    primary = PRIMARY_METRIC[m.task]
    y_true = encode_eval_target(m, df)
    baseline = score(m.task, y_true, predict_values(m, df), [primary])[primary]
    rng = np.random.Generator(np.random.Philox(seed))
    columns = df.columns()
    importances = {}
    feature_cols = [c for c in _model_source_columns(m) if c in df.column_names]
    for col in feature_cols:
        drops = []
        original = list(columns[col])
        for _ in range(repeats):
            perm = rng.permutation(len(original))
            shuffled = dict(columns)
            shuffled[col] = [original[i] for i in perm]
            permuted_df = DataFrame(shuffled, partition_tag=df.partition_tag)
            permuted_score = score(
                m.task, y_true, predict_values(m, permuted_df), [primary]
            )[primary]
            drops.append(baseline - permuted_score)
        importances[col] = float(np.mean(drops))
    return Explanation(values=importances, method="permutation", guards_bypassed=bypassed)


def _intrinsic_explanation(m) -> Explanation:
    from .errors import ConfigError
    from .strategy import StackedModel

    if isinstance(m, StackedModel):
        raise ConfigError(
            "stacked models have no intrinsic importances; pass a data frame"
        )
    names = m.transformer.feature_names
    if m.algorithm in ("logistic", "linear"):
        weights = m.state.weights
        values = {n: abs(float(w)) for n, w in zip(names, weights)}
    elif m.algorithm in ("decision_tree", "random_forest"):
        gains = m.state.feature_gains()
        values = {n: float(gains.get(i, 0.0)) for i, n in enumerate(names)}
    else:
        raise ConfigError(
            f"{m.algorithm!r} has no intrinsic importances; pass a data frame "
            "for permutation importance"
        )
    return Explanation(values=values, method="intrinsic")
