"""Integration tests for the mindblend command line.

Placed in integration/ so cli.py is included in coverage measurement.
Each test drives cli.py in a subprocess against files in tmp_path.
"""

import os
import subprocess
import sys
import textwrap
from pathlib import Path

import pytest

from mindblend.config import load_fusion
from mindblend.ensemble import Transform

# ─── PATHS ───────────────────────────────────────────────────────────────────

# tests/integration/ → tests/ → project root
PROJECT_ROOT = Path(__file__).parent.parent.parent
CLI_PATH = str(PROJECT_ROOT / "cli.py")

TWO_LEARNER_CONFIG = textwrap.dedent("""\
    seed: 1
    paths:
      news: news.tsv
      behaviors: behaviors.tsv
    learners:
      - name: x
        kind: external
        path: x.tsv
      - name: y
        kind: external
        path: y.tsv
    fusion:
      members: [x, y]
""")


def run_cli(*args: str, cwd: Path) -> subprocess.CompletedProcess:
    env = {k: v for k, v in os.environ.items() if k != "MINDBLEND_CONFIG_PATH"}
    return subprocess.run(
        [sys.executable, CLI_PATH, *args],
        capture_output=True,
        text=True,
        cwd=str(cwd),
        env=env,
    )


def make_fixture(directory: Path, *extra: str) -> Path:
    result = run_cli("fixture", "--out", str(directory), "--seed", "42", *extra, cwd=directory)
    assert result.returncode == 0, result.stderr
    return directory / "mindblend.yaml"


def score_and_combine(directory: Path, *extra: str) -> bytes:
    config = str(directory / "mindblend.yaml")
    for learner in ("tfidf", "collab"):
        result = run_cli("score", "-c", config, "--learner", learner, *extra, cwd=directory)
        assert result.returncode == 0, result.stderr
    result = run_cli("combine", "-c", config, *extra, cwd=directory)
    assert result.returncode == 0, result.stderr
    return (directory / "runs" / "prediction.txt").read_bytes()


@pytest.fixture
def two_learners(tmp_path: Path) -> Path:
    """One impression, two candidates, two external score files."""
    (tmp_path / "news.tsv").write_text(
        "A\tnews\tnewsus\tFirst headline\t\nB\tnews\tnewsus\tSecond headline\t\n", encoding="utf-8"
    )
    (tmp_path / "behaviors.tsv").write_text(
        "1\tU1\t11/11/2019 9:05:58 AM\t\tA-1 B-0\n", encoding="utf-8"
    )
    (tmp_path / "x.tsv").write_text("1\tA\t0.9\n1\tB\t0.1\n", encoding="utf-8")
    (tmp_path / "y.tsv").write_text("1\tA\t0.6\n1\tB\t0.4\n", encoding="utf-8")
    (tmp_path / "mindblend.yaml").write_text(TWO_LEARNER_CONFIG, encoding="utf-8")
    return tmp_path


# ─── END TO END ──────────────────────────────────────────────────────────────


class TestPipeline:
    def test_fixture_score_combine_evaluate(self, tmp_path: Path) -> None:
        config = str(make_fixture(tmp_path))
        prediction = score_and_combine(tmp_path).decode("utf-8").splitlines()
        assert len(prediction) == 50
        assert prediction[0].startswith("1 [")

        result = run_cli("evaluate", "-c", config, cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        for label in ("AUC", "MRR", "nDCG@5", "nDCG@10"):
            assert label in result.stdout
        assert (tmp_path / "runs" / "report.yaml").exists()

    def test_byte_identical_across_runs(self, tmp_path: Path) -> None:
        first, second = tmp_path / "a", tmp_path / "b"
        first.mkdir()
        second.mkdir()
        make_fixture(first)
        make_fixture(second)
        assert (first / "behaviors.tsv").read_bytes() == (second / "behaviors.tsv").read_bytes()
        assert score_and_combine(first) == score_and_combine(second)
        for directory in (first, second):
            result = run_cli("evaluate", "-c", str(directory / "mindblend.yaml"), cwd=directory)
            assert result.returncode == 0, result.stderr
        for report in ("report.txt", "report.yaml"):
            assert (first / "runs" / report).read_bytes() == (second / "runs" / report).read_bytes()

    def test_byte_identical_across_workers(self, tmp_path: Path) -> None:
        make_fixture(tmp_path)
        serial = score_and_combine(tmp_path, "--workers", "1")
        threaded = score_and_combine(tmp_path, "--workers", "4")
        assert serial == threaded

    def test_run_prints_comparison(self, tmp_path: Path) -> None:
        config = str(make_fixture(tmp_path))
        result = run_cli("run", "-c", config, cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        assert result.stdout.lstrip().startswith("Model")
        assert "Combined" in result.stdout
        assert (tmp_path / "runs" / "comparison.yaml").exists()

    def test_validate_clean_fixture(self, tmp_path: Path) -> None:
        config = str(make_fixture(tmp_path))
        result = run_cli("validate", "-c", config, cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        assert "impressions=50" in result.stdout
        assert "missing_ids=0" in result.stdout


class TestCombine:
    def test_two_candidate_example(self, two_learners: Path) -> None:
        for learner in ("x", "y"):
            assert run_cli("score", "--learner", learner, cwd=two_learners).returncode == 0
        result = run_cli("combine", "--weights", "0.5,0.5", cwd=two_learners)
        assert result.returncode == 0, result.stderr
        assert (two_learners / "runs" / "prediction.txt").read_text() == "1 [1,2]\n"

    def test_weights_count_mismatch(self, two_learners: Path) -> None:
        result = run_cli("combine", "--weights", "1", cwd=two_learners)
        assert result.returncode == 2

    def test_negative_weight(self, two_learners: Path) -> None:
        result = run_cli("combine", "--weights", "1,-1", cwd=two_learners)
        assert result.returncode == 2

    def test_missing_score_file(self, two_learners: Path) -> None:
        result = run_cli("combine", cwd=two_learners)
        assert result.returncode == 1
        assert "x.tsv" in result.stderr


class TestSweep:
    def test_half_step_grid(self, two_learners: Path) -> None:
        for learner in ("x", "y"):
            assert run_cli("score", "--learner", learner, cwd=two_learners).returncode == 0
        result = run_cli("sweep", "--members", "x,y", "--step", "0.5", cwd=two_learners)
        assert result.returncode == 0, result.stderr
        grid = (two_learners / "runs" / "sweep.txt").read_text().splitlines()
        assert len(grid) == 1 + 3 + 1
        assert grid[-1].startswith("best:")
        assert (two_learners / "runs" / "fusion.yaml").exists()

    def test_fusion_file_feeds_combine(self, two_learners: Path) -> None:
        for learner in ("x", "y"):
            run_cli("score", "--learner", learner, cwd=two_learners)
        run_cli("sweep", "--members", "x,y", "--step", "0.5", cwd=two_learners)
        fusion = str(two_learners / "runs" / "fusion.yaml")
        result = run_cli("combine", "--fusion", fusion, cwd=two_learners)
        assert result.returncode == 0, result.stderr

    def test_transform_from_config(self, two_learners: Path) -> None:
        config = TWO_LEARNER_CONFIG.replace("fusion:\n", "fusion:\n  transform: borda\n")
        (two_learners / "mindblend.yaml").write_text(config, encoding="utf-8")
        for learner in ("x", "y"):
            run_cli("score", "--learner", learner, cwd=two_learners)
        result = run_cli("sweep", "--members", "x,y", "--step", "0.5", cwd=two_learners)
        assert result.returncode == 0, result.stderr
        assert load_fusion(two_learners / "runs" / "fusion.yaml").transform == Transform.BORDA

    def test_transform_flag_overrides_config(self, two_learners: Path) -> None:
        config = TWO_LEARNER_CONFIG.replace("fusion:\n", "fusion:\n  transform: borda\n")
        (two_learners / "mindblend.yaml").write_text(config, encoding="utf-8")
        for learner in ("x", "y"):
            run_cli("score", "--learner", learner, cwd=two_learners)
        result = run_cli(
            "sweep", "--members", "x,y", "--step", "0.5", "--transform", "minmax_score",
            cwd=two_learners,
        )
        assert result.returncode == 0, result.stderr
        fusion = load_fusion(two_learners / "runs" / "fusion.yaml")
        assert fusion.transform == Transform.MINMAX_SCORE

    def test_unsupported_objective(self, two_learners: Path) -> None:
        result = run_cli("sweep", "--members", "x,y", "--objective", "ndcg7", cwd=two_learners)
        assert result.returncode == 2

    def test_bad_step(self, two_learners: Path) -> None:
        result = run_cli("sweep", "--members", "x,y", "--step", "0.3", cwd=two_learners)
        assert result.returncode == 2

    def test_single_member(self, two_learners: Path) -> None:
        result = run_cli("sweep", "--members", "x", cwd=two_learners)
        assert result.returncode == 2


# ─── EVALUATE ────────────────────────────────────────────────────────────────


class TestEvaluate:
    def test_configured_metric_set(self, two_learners: Path) -> None:
        with (two_learners / "mindblend.yaml").open("a", encoding="utf-8") as fh:
            fh.write("metrics: [auc]\n")
        run_cli("score", "--learner", "x", cwd=two_learners)
        result = run_cli("evaluate", "--learner", "x", cwd=two_learners)
        assert result.returncode == 0, result.stderr
        assert "AUC" in result.stdout
        for label in ("MRR", "nDCG@5", "nDCG@10"):
            assert label not in result.stdout
        report = (two_learners / "runs" / "report.txt").read_text(encoding="utf-8")
        assert "MRR" not in report


# ─── ERRORS ──────────────────────────────────────────────────────────────────


class TestErrors:
    def test_unknown_learner_lists_configured(self, two_learners: Path) -> None:
        result = run_cli("score", "--learner", "lstm", cwd=two_learners)
        assert result.returncode == 2
        assert "lstm" in result.stderr
        assert "x, y" in result.stderr

    def test_truncated_prediction(self, tmp_path: Path) -> None:
        config = str(make_fixture(tmp_path))
        score_and_combine(tmp_path)
        prediction = tmp_path / "runs" / "prediction.txt"
        lines = prediction.read_text().splitlines(keepends=True)
        truncated = tmp_path / "truncated.txt"
        truncated.write_text("".join(lines[:-1]))
        result = run_cli("evaluate", "-c", config, "--input", str(truncated), cwd=tmp_path)
        assert result.returncode == 1
        assert "line 50" in result.stderr

    def test_missing_config(self, tmp_path: Path) -> None:
        result = run_cli("score", "-c", str(tmp_path / "nope.yaml"), "--learner", "x", cwd=tmp_path)
        assert result.returncode == 2

    def test_missing_news(self, two_learners: Path) -> None:
        (two_learners / "news.tsv").unlink()
        result = run_cli("run", cwd=two_learners)
        assert result.returncode == 1

    def test_malformed_behaviors(self, two_learners: Path) -> None:
        (two_learners / "behaviors.tsv").write_text("1\tU1\tA-1\n", encoding="utf-8")
        result = run_cli("score", "--learner", "x", cwd=two_learners)
        assert result.returncode == 1

    def test_no_command(self, tmp_path: Path) -> None:
        assert run_cli(cwd=tmp_path).returncode == 2


class TestInit:
    def test_creates_config(self, tmp_path: Path) -> None:
        result = run_cli("init", "--path", str(tmp_path), cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        assert "learners:" in (tmp_path / "mindblend.yaml").read_text()

    def test_refuses_overwrite(self, tmp_path: Path) -> None:
        run_cli("init", "--path", str(tmp_path), cwd=tmp_path)
        result = run_cli("init", "--path", str(tmp_path), cwd=tmp_path)
        assert result.returncode == 2
        assert run_cli("init", "--path", str(tmp_path), "--force", cwd=tmp_path).returncode == 0
