import json

import pytest
from click.testing import CliRunner

from holdout import ConfigError, ParseError, RunReport, run_workflow
from holdout.cli import main
from holdout.workflow import parse_workflow

from conftest import make_classification_frame


def write_csv(path, df):
    cols = df.columns()
    names = list(cols)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(df.row_count):
            fh.write(",".join(str(cols[n][i]) for n in names) + "\n")


@pytest.fixture
def data_csv(tmp_path):
    p = tmp_path / "data.csv"
    write_csv(p, make_classification_frame(100, seed=6))
    return p


def workflow_text(data_path, extra="", mode_block="model:\n  algorithm: logistic\n  seed: 42\n"):
    return (
        "data:\n"
        f"  path: {data_path}\n"
        "  target: y\n"
        "split:\n"
        "  kind: random\n"
        "  ratios: [0.6, 0.2, 0.2]\n"
        "  seed: 42\n"
        "cv:\n"
        "  kind: kfold\n"
        "  k: 3\n"
        "  seed: 42\n"
        f"{mode_block}"
        "report:\n"
        "  metrics: [accuracy, roc_auc]\n"
        f"{extra}"
    )


@pytest.fixture
def workflow_file(tmp_path, data_csv):
    p = tmp_path / "wf.yaml"
    p.write_text(workflow_text(data_csv))
    return p


class TestParsing:
    def test_valid_spec(self, data_csv):
        spec = parse_workflow(workflow_text(data_csv))
        assert spec.mode == "model"
        assert spec.guards == "on"
        assert spec.assess_repeats == 1

    def test_yaml_syntax_error_is_line_anchored(self):
        with pytest.raises(ParseError, match="line"):
            parse_workflow("data:\n  path: [unclosed\n")

    def test_missing_data_block(self):
        with pytest.raises(ConfigError, match="data"):
            parse_workflow("split:\n  kind: random\nmodel:\n  algorithm: logistic\n")

    def test_two_mode_blocks_rejected(self, data_csv):
        text = workflow_text(data_csv) + "screen:\n  algorithms: [logistic]\n"
        with pytest.raises(ConfigError, match="exactly one"):
            parse_workflow(text)

    def test_no_mode_block_rejected(self, data_csv):
        text = (
            "data:\n"
            f"  path: {data_csv}\n"
            "  target: y\n"
            "split:\n"
            "  kind: random\n"
        )
        with pytest.raises(ConfigError, match="exactly one"):
            parse_workflow(text)

    def test_unknown_top_level_key_cites_line(self, data_csv):
        with pytest.raises(ConfigError, match="unknown workflow keys"):
            parse_workflow(workflow_text(data_csv) + "notes: hi\n")

    def test_strategy_requires_cv(self, data_csv):
        text = (
            "data:\n"
            f"  path: {data_csv}\n"
            "  target: y\n"
            "split:\n"
            "  kind: random\n"
            "screen:\n"
            "  algorithms: [logistic, knn]\n"
        )
        with pytest.raises(ConfigError, match="requires a 'cv'"):
            parse_workflow(text)

    def test_guards_yaml_boolean_spelling(self, data_csv):
        spec = parse_workflow(workflow_text(data_csv, extra="guards: off\n"))
        assert spec.guards == "off"

    def test_bad_split_kind_cites_line(self, data_csv):
        text = workflow_text(data_csv).replace("kind: random", "kind: sideways", 1)
        with pytest.raises(ConfigError, match=r"line \d+"):
            parse_workflow(text)


class TestExecution:
    def test_full_run_report(self, workflow_file):
        report = run_workflow(workflow_file)
        assert report.cv_scores is not None
        assert set(report.valid_metrics["values"]) == {"accuracy", "roc_auc"}
        assert report.evidence is not None
        assert report.evidence["kind"] == "evidence"
        verbs = [v for v, _ in report.guard_events]
        assert verbs == ["load", "split", "cv", "fit", "evaluate", "assess"]
        assert report.guards_bypassed is False

    def test_report_json_roundtrip(self, workflow_file):
        report = run_workflow(workflow_file)
        clone = RunReport.from_json(report.to_json())
        assert clone == report

    def test_determinism_across_runs(self, workflow_file):
        a = run_workflow(workflow_file)
        b = run_workflow(workflow_file)
        assert a.to_json() == b.to_json()
        assert (
            a.evidence["holdout_fingerprint"] == b.evidence["holdout_fingerprint"]
        )

    def test_double_assess_raises_holdout_spent(self, tmp_path, data_csv):
        from holdout import HoldoutSpent

        p = tmp_path / "double.yaml"
        p.write_text(workflow_text(data_csv, extra="assess: 2\n"))
        with pytest.raises(HoldoutSpent):
            run_workflow(p)

    def test_guards_off_double_assess_completes(self, tmp_path, data_csv):
        p = tmp_path / "double_off.yaml"
        p.write_text(workflow_text(data_csv, extra="assess: 2\nguards: off\n"))
        report = run_workflow(p)
        assert report.guards_bypassed is True
        assert [v for v, _ in report.guard_events].count("assess") == 2
        assert report.evidence["guards_bypassed"] is True

    def test_no_assess(self, tmp_path, data_csv):
        p = tmp_path / "no_assess.yaml"
        p.write_text(workflow_text(data_csv, extra="assess: false\n"))
        report = run_workflow(p)
        assert report.evidence is None

    def test_screen_workflow(self, tmp_path, data_csv):
        p = tmp_path / "screen.yaml"
        p.write_text(
            workflow_text(
                data_csv,
                mode_block="screen:\n  algorithms: [logistic, decision_tree]\n  seed: 1\n",
            )
        )
        report = run_workflow(p)
        assert report.leaderboard is not None
        assert report.leaderboard["best"] in ("logistic", "decision_tree")
        assert report.evidence is not None

    def test_tune_workflow(self, tmp_path, data_csv):
        p = tmp_path / "tune.yaml"
        p.write_text(
            workflow_text(
                data_csv,
                mode_block=(
                    "tune:\n"
                    "  algorithm: decision_tree\n"
                    "  method: grid\n"
                    "  space:\n"
                    "    max_depth: [2, 4]\n"
                    "  budget: 4\n"
                    "  seed: 1\n"
                ),
            )
        )
        report = run_workflow(p)
        assert report.tuning is not None
        assert report.tuning["best"]["max_depth"] in (2, 4)

    def test_stack_workflow(self, tmp_path, data_csv):
        p = tmp_path / "stack.yaml"
        p.write_text(
            workflow_text(
                data_csv,
                mode_block="stack:\n  base: [logistic, knn]\n  meta: logistic\n  seed: 1\n",
            )
        )
        report = run_workflow(p)
        assert report.evidence is not None

    def test_temporal_workflow(self, tmp_path):
        from holdout import DataFrame

        df = DataFrame(
            {
                "t": [float(i) for i in range(60)],
                "x": [float(i % 7) for i in range(60)],
                "y": [i % 2 for i in range(60)],
            }
        )
        csv = tmp_path / "temporal.csv"
        write_csv(csv, df)
        wf = tmp_path / "temporal.yaml"
        wf.write_text(
            "data:\n"
            f"  path: {csv}\n"
            "  target: y\n"
            "split:\n"
            "  kind: temporal\n"
            "  time_col: t\n"
            "  embargo: 2\n"
            "cv:\n"
            "  kind: temporal\n"
            "  k: 3\n"
            "  window: sliding\n"
            "  min_train: 8\n"
            "model:\n"
            "  algorithm: decision_tree\n"
        )
        report = run_workflow(wf)
        assert report.evidence is not None

    def test_group_workflow(self, tmp_path):
        from holdout import DataFrame

        groups = [g for g in "abcdefghij" for _ in range(4)]
        df = DataFrame(
            {
                "g": groups,
                "x": [float(i % 9) for i in range(40)],
                "y": [i % 2 for i in range(40)],
            }
        )
        csv = tmp_path / "grouped.csv"
        write_csv(csv, df)
        wf = tmp_path / "grouped.yaml"
        wf.write_text(
            "data:\n"
            f"  path: {csv}\n"
            "  target: y\n"
            "  schema_hints: {g: text}\n"
            "split:\n"
            "  kind: group\n"
            "  group_col: g\n"
            "  seed: 3\n"
            "cv:\n"
            "  kind: group\n"
            "  k: 2\n"
            "model:\n"
            "  algorithm: knn\n"
        )
        report = run_workflow(wf)
        assert report.evidence is not None


class TestCli:
    def test_run_exit_zero_and_json(self, workflow_file):
        result = CliRunner().invoke(main, ["run", str(workflow_file)])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["evidence"]["kind"] == "evidence"

    def test_spec_error_exit_2(self, tmp_path, data_csv):
        bad = tmp_path / "bad.yaml"
        bad.write_text(workflow_text(data_csv) + "frobnicate: 1\n")
        result = CliRunner().invoke(main, ["run", str(bad)])
        assert result.exit_code == 2

    def test_guard_error_exit_3_with_name(self, tmp_path, data_csv):
        double = tmp_path / "double.yaml"
        double.write_text(workflow_text(data_csv, extra="assess: 2\n"))
        runner = CliRunner()
        result = runner.invoke(main, ["run", str(double)])
        assert result.exit_code == 3
        assert "HoldoutSpent" in result.stderr

    def test_data_error_exit_4(self, tmp_path):
        wf = tmp_path / "missing.yaml"
        wf.write_text(workflow_text(tmp_path / "nope.csv"))
        result = CliRunner().invoke(main, ["run", str(wf)])
        assert result.exit_code == 4

    def test_global_guards_override(self, tmp_path, data_csv):
        double = tmp_path / "double.yaml"
        double.write_text(workflow_text(data_csv, extra="assess: 2\n"))
        result = CliRunner().invoke(main, ["--guards", "off", "run", str(double)])
        assert result.exit_code == 0
        assert json.loads(result.output)["guards_bypassed"] is True

    def test_registry_dump(self, workflow_file):
        runner = CliRunner()
        result = runner.invoke(main, ["--registry-dump", "run", str(workflow_file)])
        assert result.exit_code == 0
        dump = json.loads(result.stderr)
        roles = sorted(entry["role"] for entry in dump.values())
        assert roles == ["dev", "test", "train", "valid"]
        assert sum(entry["assessed"] for entry in dump.values()) == 1

    def test_conformance_command(self):
        result = CliRunner().invoke(main, ["conformance"])
        assert result.exit_code == 0
        assert json.loads(result.output)["passed"] is True

    def test_demo_replicate_floor_exit_2(self):
        result = CliRunner().invoke(
            main, ["demo", "seed_selection", "--replicates", "5"]
        )
        assert result.exit_code == 2

    def test_demo_unknown_kind_rejected(self):
        result = CliRunner().invoke(main, ["demo", "nonsense"])
        assert result.exit_code == 2  # click usage error


def test_custom_recipe_in_workflow(tmp_path, data_csv):
    wf = tmp_path / "recipe.yaml"
    wf.write_text(
        workflow_text(
            data_csv,
            mode_block=(
                "model:\n"
                "  algorithm: decision_tree\n"
                "  seed: 1\n"
                "  recipe:\n"
                "    - impute_mean\n"
                "    - step: standardize\n"
                "      columns: [x0, x1]\n"
            ),
        )
    )
    report = run_workflow(wf)
    assert report.evidence is not None


def test_unknown_recipe_step_exit_2(tmp_path, data_csv):
    wf = tmp_path / "badrecipe.yaml"
    wf.write_text(
        workflow_text(
            data_csv,
            mode_block=(
                "model:\n"
                "  algorithm: logistic\n"
                "  recipe: [winsorize]\n"
            ),
        )
    )
    result = CliRunner().invoke(main, ["run", str(wf)])
    assert result.exit_code == 2
