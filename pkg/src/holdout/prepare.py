"""Model-dependent data preparation fitted strictly on the frame it is given.

A Transformer captures fit-time statistics (means, stddevs, category lists)
and can later be applied to any frame with a compatible schema using only
those statistics. Fitting per fold inside the training loop is what keeps
validation rows out of the statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .errors import ConfigError, GuardError, PartitionError, SchemaError
from .frame import DataFrame
from .registry import ProvenanceRegistry, resolve

STEP_KINDS = ("impute_mean", "one_hot", "standardize")
DEFAULT_RECIPE = ("impute_mean", "one_hot", "standardize")
ONE_HOT_SEPARATOR = "="
CLASSIFICATION_MAX_CLASSES = 20


@dataclass(frozen=True)
class Step:
    """One fitted preparation step.

    params maps column name to the fitted state: a mean for impute_mean,
    a (mean, stddev) pair for standardize, an ordered category list for
    one_hot.
    """

    kind: str
    params: Mapping[str, Any]

    def to_dict(self) -> dict:
        params = {
            col: list(v) if isinstance(v, (tuple, list)) else v
            for col, v in self.params.items()
        }
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "Step":
        params = {
            col: tuple(v) if isinstance(v, list) else v
            for col, v in d["params"].items()
        }
        return cls(kind=d["kind"], params=params)


@dataclass(frozen=True)
class Transformer:
    """Ordered fitted steps plus the feature schema they expect and produce."""

    steps: tuple[Step, ...]
    source_columns: tuple[str, ...]
    feature_names: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "source_columns": list(self.source_columns),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transformer":
        return cls(
            steps=tuple(Step.from_dict(s) for s in d["steps"]),
            source_columns=tuple(d["source_columns"]),
            feature_names=tuple(d["feature_names"]),
        )


@dataclass(frozen=True)
class PreparedData:
    """All-numeric, missing-free frame plus the Transformer that made it.

    The target column is present in `data` (encoded 0/1 for classification)
    but never contributes to any transformation statistic.
    """

    data: DataFrame
    state: Transformer
    target: str
    task: str
    classes: tuple | None = None


def _is_text_column(values) -> bool:
    return any(isinstance(v, str) for v in values)


def _column_kinds(names, working: dict) -> dict[str, str]:
    kinds = {}
    for name in names:
        values = working[name]
        if _is_text_column(values):
            if any(not isinstance(v, str) and v is not None for v in values):
                raise ConfigError(
                    f"column {name!r} mixes text and numeric values; "
                    "cannot prepare it coherently"
                )
            kinds[name] = "categorical"
        else:
            kinds[name] = "numeric"
    return kinds


def _mean(values) -> float:
    present = [float(v) for v in values if v is not None]
    return sum(present) / len(present) if present else 0.0


def _mean_std(values) -> tuple[float, float]:
    present = [float(v) for v in values if v is not None]
    if not present:
        return 0.0, 0.0
    m = sum(present) / len(present)
    var = sum((v - m) ** 2 for v in present) / len(present)  # population variance
    return m, math.sqrt(var)


def normalize_recipe(recipe) -> list[tuple[str, list[str] | None]]:
    """Accept step names or (name, columns) pairs; None columns means
    'every applicable column at that stage'."""
    if recipe is None:
        recipe = DEFAULT_RECIPE
    out = []
    for entry in recipe:
        if isinstance(entry, str):
            name, cols = entry, None
        elif isinstance(entry, Mapping):
            name = entry.get("step")
            cols = entry.get("columns")
        else:
            name, cols = entry
        if name not in STEP_KINDS:
            raise ConfigError(f"unknown preparation step {name!r}")
        if cols is not None:
            cols = [str(c) for c in cols]
        out.append((name, cols))
    if not out:
        raise ConfigError("recipe must contain at least one step")
    return out


def _fit_steps(df: DataFrame, target: str, recipe) -> tuple[Transformer, dict]:
    """Fit every step in order on the working copy and apply it in place.

    Returns the fitted Transformer and the transformed feature columns.
    Bool cells coerce to 0/1 floats before any step runs.
    """
    source = [n for n in df.column_names if n != target]
    working: dict[str, list] = {}
    order: list[str] = []
    for name in source:
        working[name] = [
            float(v) if isinstance(v, bool) else v for v in df.column(name)
        ]
        order.append(name)

    fitted: list[Step] = []
    for step_name, wanted in normalize_recipe(recipe):
        kinds = _column_kinds(order, working)
        if step_name == "one_hot":
            applicable = [n for n in order if kinds[n] == "categorical"]
        else:
            applicable = [n for n in order if kinds[n] == "numeric"]
        if wanted is not None:
            missing = [c for c in wanted if c not in order]
            if missing:
                raise ConfigError(f"step {step_name!r} names absent columns: {missing}")
            bad = [c for c in wanted if c not in applicable]
            if bad:
                raise ConfigError(
                    f"step {step_name!r} does not apply to columns {bad}"
                )
            applicable = [n for n in order if n in wanted]
        params: dict[str, Any] = {}
        if step_name == "impute_mean":
            for col in applicable:
                params[col] = _mean(working[col])
        elif step_name == "standardize":
            for col in applicable:
                params[col] = _mean_std(working[col])
        elif step_name == "one_hot":
            for col in applicable:
                seen: list[str] = []
                for v in working[col]:
                    if v is not None and v not in seen:
                        seen.append(v)  # category order: first appearance
                params[col] = tuple(seen)
        step = Step(kind=step_name, params=params)
        fitted.append(step)
        order = _apply_step(step, order, working)

    return (
        Transformer(steps=tuple(fitted), source_columns=tuple(source), feature_names=tuple(order)),
        {name: working[name] for name in order},
    )


def _apply_step(step: Step, order: list[str], working: dict) -> list[str]:
    if step.kind == "impute_mean":
        for col, mean in step.params.items():
            if col in working:
                working[col] = [mean if v is None else float(v) for v in working[col]]
        return order
    if step.kind == "standardize":
        for col, (mean, std) in step.params.items():
            if col not in working:
                continue
            if std == 0.0:
                working[col] = [
                    None if v is None else 0.0 for v in working[col]
                ]
            else:
                working[col] = [
                    None if v is None else (float(v) - mean) / std
                    for v in working[col]
                ]
        return order
    # one_hot: replace each source column with its indicator block in place;
    # unseen and missing values encode as all zeros.
    new_order: list[str] = []
    for name in order:
        if name not in step.params:
            new_order.append(name)
            continue
        categories = step.params[name]
        values = working.pop(name)
        for cat in categories:
            col_name = f"{name}{ONE_HOT_SEPARATOR}{cat}"
            working[col_name] = [1.0 if v == cat else 0.0 for v in values]
            new_order.append(col_name)
    return new_order


def infer_task(values) -> str:
    distinct = {v for v in values if v is not None}
    if any(isinstance(v, str) for v in distinct):
        return "classification"
    if all(isinstance(v, bool) for v in distinct) and distinct:
        return "classification"
    return "classification" if 0 < len(distinct) <= CLASSIFICATION_MAX_CLASSES else "regression"


def encode_target(values, task: str) -> tuple[list[float], tuple | None]:
    """Regression targets pass through raw; classification targets map their
    two classes (sorted by repr) onto 0.0/1.0."""
    if any(v is None for v in values):
        raise ConfigError("target column has missing values")
    if task == "regression":
        return [float(v) for v in values], None
    classes = sorted({v for v in values}, key=repr)
    if len(classes) == 1:
        # Degenerate single-class frame: encode everything as class 0.
        return [0.0] * len(values), (classes[0], classes[0])
    if len(classes) != 2:
        raise ConfigError(
            f"classification supports exactly 2 classes, got {len(classes)}"
        )
    lookup = {classes[0]: 0.0, classes[1]: 1.0}
    return [lookup[v] for v in values], tuple(classes)


def encode_target_with_classes(values, classes: tuple | None) -> list[float]:
    """Encode a target column using a previously fitted class mapping."""
    if classes is None:
        if any(v is None for v in values):
            raise ConfigError("target column has missing values")
        return [float(v) for v in values]
    lookup = {classes[0]: 0.0, classes[1]: 1.0}
    out = []
    for v in values:
        if v not in lookup:
            raise SchemaError(f"target value {v!r} was not seen at fit time")
        out.append(lookup[v])
    return out


def fit_transformer(
    df: DataFrame, target: str, recipe=None, task: str | None = None
) -> PreparedData:
    """Fit a recipe on a frame without any registry guard (interior use)."""
    if target not in df.column_names:
        raise SchemaError(f"target column {target!r} not in frame")
    if len(df.column_names) < 2:
        raise ConfigError("frame has no feature columns besides the target")
    transformer, features = _fit_steps(df, target, recipe)
    task = task or infer_task(df.column(target))
    encoded, classes = encode_target(df.column(target), task)
    _validate_numeric(features)
    columns = [(name, features[name]) for name in transformer.feature_names]
    columns.append((target, encoded))
    data = DataFrame(columns, partition_tag=df.partition_tag)
    return PreparedData(
        data=data, state=transformer, target=target, task=task, classes=classes
    )


def _validate_numeric(features: dict) -> None:
    for name, values in features.items():
        for v in values:
            if v is None:
                raise ConfigError(
                    f"recipe leaves missing values in column {name!r}; "
                    "add an impute_mean step"
                )
            if isinstance(v, str):
                raise ConfigError(
                    f"recipe leaves categorical column {name!r} unencoded; "
                    "add a one_hot step"
                )


def prepare(
    df: DataFrame,
    target: str,
    recipe: Sequence | None = None,
    registry: ProvenanceRegistry | None = None,
) -> PreparedData:
    """Fit a preparation recipe on a registered non-test frame.

    The default recipe imputes numeric missing values with the column mean,
    one-hot encodes categoricals in first-appearance order, then
    standardizes numerics with the population stddev.
    """
    if not isinstance(df, DataFrame):
        raise TypeError("prepare expects a DataFrame")
    reg = resolve(registry)
    if reg.guards_on:
        record = reg.lookup(df)
        if record is None:
            raise PartitionError(
                "prepare requires data registered by split; call split() first"
            )
        if record.role == "test":
            raise GuardError(
                "prepare rejects test-role data: partition role 'test' is not "
                "in {'train', 'valid', 'dev'}"
            )
    return fit_transformer(df, target, recipe)


def apply(t: Transformer, df: DataFrame) -> DataFrame:
    """Transform a frame using fit-time statistics only.

    The frame must contain every fitted source column; extra columns are
    ignored. Missing numerics impute with the fit-time mean, categories
    unseen at fit time one-hot to all zeros, and the output is deterministic:
    two calls give byte-identical frames.
    """
    if not isinstance(t, Transformer):
        raise TypeError("apply expects a Transformer")
    if not isinstance(df, DataFrame):
        raise TypeError("apply expects a DataFrame")
    missing = [c for c in t.source_columns if c not in df.column_names]
    if missing:
        raise SchemaError(f"frame lacks fitted columns: {missing}")
    working = {
        name: [float(v) if isinstance(v, bool) else v for v in df.column(name)]
        for name in t.source_columns
    }
    order = list(t.source_columns)
    for step in t.steps:
        order = _apply_step(step, order, working)
    # Any survivor of the fitted pipeline that is still missing had no
    # impute step; fail the same way fitting would.
    _validate_numeric({name: working[name] for name in order})
    return DataFrame(
        [(name, working[name]) for name in order], partition_tag=df.partition_tag
    )
