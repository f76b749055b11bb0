"""
mindblend.pipeline — experiment runner tying config, data, learners, fusion and metrics.

Usage:
    from mindblend.config import get_config
    from mindblend.pipeline import Experiment

    exp = Experiment(get_config())
    result = exp.score("tfidf")       # ScoreResult
    exp.combine()                     # CombineResult, prediction.txt written
    exp.evaluate(exp.output_dir / "prediction.txt")
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import yaml

from exceptions import MindBlendFileNotFoundError, MissingConfigError, UsageError
from logger import get_logger
from mindblend.config import RunConfig, dump_fusion
from mindblend.dataset import (
    BehaviorSet,
    Catalog,
    click_counts,
    history_counts,
    parse_behaviors,
    parse_news,
    validate,
    with_placeholders,
)
from mindblend.ensemble import (
    FusionSpec,
    RankedList,
    SweepResult,
    Transform,
    fuse_all,
    simplex_grid,
    sweep_weights,
)
from mindblend.io import atomic_write
from mindblend.learners import (
    EmbeddingLearner,
    ExternalLearner,
    Learner,
    LearnerKind,
    LearnerReport,
    LearnerSpec,
    PopularityLearner,
    RandomLearner,
    ScoreTable,
    TfidfLearner,
    load_external_scores,
)
from mindblend.metrics import Metric, MetricReport, evaluate
from mindblend.predictions import looks_like_predictions, read_predictions, write_predictions
from mindblend.text import EmbeddingTable, TfidfModel, fit_tfidf, load_embeddings

logger = get_logger(__name__)

PREDICTION_FILE = "prediction.txt"
COMBINED_ROW = "Combined"


# ─── RESULT TYPES ─────────────────────────────────────────────────────────────


@dataclass
class ScoreResult:
    table: ScoreTable
    report: LearnerReport
    path: Optional[Path] = None

    def __repr__(self) -> str:
        return (
            f"ScoreResult({self.table.learner}, pairs={len(self.table)}, "
            f"substitutions={sum(self.report.substitutions.values())})"
        )


@dataclass
class CombineResult:
    spec: FusionSpec
    ranked: list[RankedList]
    path: Optional[Path] = None

    def __repr__(self) -> str:
        return f"CombineResult(members={list(self.spec.names)}, impressions={len(self.ranked)})"


@dataclass
class EvaluateResult:
    report: MetricReport
    source: Path
    paths: list[Path] = field(default_factory=list)

    def __repr__(self) -> str:
        return f"EvaluateResult({self.source.name}, impressions={self.report.total})"


@dataclass
class ComparisonResult:
    """Member-vs-combined metric table."""
    rows: list[tuple[str, MetricReport]]
    paths: list[Path] = field(default_factory=list)
    metrics: tuple[Metric, ...] = tuple(Metric)

    def __repr__(self) -> str:
        return f"ComparisonResult(rows={[name for name, _ in self.rows]})"

    def to_text(self) -> str:
        width = max([len("Model")] + [len(name) for name, _ in self.rows])
        header = f"{'Model':<{width}}" + "".join(f" {m.label:>8}" for m in self.metrics)
        lines = [header, "-" * len(header)]
        for name, report in self.rows:
            cells = []
            for metric in self.metrics:
                value = report.mean(metric)
                cells.append(f" {value:>8.4f}" if value is not None else f" {'n/a':>8}")
            lines.append(f"{name:<{width}}" + "".join(cells))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {
            "models": [
                {"model": name, **{m.label: report.mean(m) for m in self.metrics}}
                for name, report in self.rows
            ]
        }


# ─── EXPERIMENT ───────────────────────────────────────────────────────────────


class Experiment:
    """One experiment directory: lazily loaded inputs plus the operations on them."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self._lock = threading.Lock()
        self._catalog: Optional[Catalog] = None
        self._behaviors: Optional[BehaviorSet] = None
        self._tfidf: Optional[TfidfModel] = None
        self._embeddings: dict[Path, EmbeddingTable] = {}
        self._popularity: Optional[Mapping[str, int]] = None

    @property
    def output_dir(self) -> Path:
        return self.config.output_dir

    # ── inputs ──

    def _required(self, path: Optional[Path], key: str) -> Path:
        if path is None:
            raise MissingConfigError(key)
        if not path.exists():
            raise MindBlendFileNotFoundError(str(path))
        return path

    @property
    def behaviors(self) -> BehaviorSet:
        if self._behaviors is None:
            path = self._required(self.config.paths.behaviors, "paths.behaviors")
            self._behaviors = parse_behaviors(path)
        return self._behaviors

    @property
    def catalog(self) -> Catalog:
        """News catalog extended with placeholders for ids the behaviors reference."""
        if self._catalog is None:
            catalog = parse_news(self._required(self.config.paths.news, "paths.news"))
            report = validate(catalog, self.behaviors)
            logger.info("Dataset: %s", report.summary())
            self._catalog = with_placeholders(catalog, self.behaviors)
        return self._catalog

    @property
    def tfidf(self) -> TfidfModel:
        with self._lock:
            if self._tfidf is None:
                self._tfidf = fit_tfidf(self.catalog)
            return self._tfidf

    def embeddings(self, path: Path) -> EmbeddingTable:
        with self._lock:
            if path not in self._embeddings:
                self._embeddings[path] = load_embeddings(self._required(path, "embeddings"))
            return self._embeddings[path]

    @property
    def popularity(self) -> Mapping[str, int]:
        """Click counts from the training behaviors, else history counts of the evaluation set."""
        if self._popularity is None:
            train = self.config.paths.train_behaviors
            if train is not None:
                path = self._required(train, "paths.train_behaviors")
                self._popularity = click_counts(parse_behaviors(path))
            else:
                logger.info("No train_behaviors configured; popularity uses history counts")
                self._popularity = history_counts(self.behaviors)
        return self._popularity

    # ── learners ──

    def build_learner(self, spec: LearnerSpec) -> Learner:
        if spec.kind == LearnerKind.TFIDF:
            return TfidfLearner(spec.name, self.tfidf, spec.aggregation)
        if spec.kind == LearnerKind.EMBEDDING:
            assert spec.path is not None
            return EmbeddingLearner(spec.name, self.embeddings(spec.path), spec.aggregation)
        if spec.kind == LearnerKind.EXTERNAL:
            assert spec.path is not None
            table = load_external_scores(
                self._required(spec.path, spec.name), self.behaviors, learner=spec.name
            )
            return ExternalLearner(spec.name, table)
        if spec.kind == LearnerKind.POPULARITY:
            return PopularityLearner(spec.name, self.popularity)
        return RandomLearner(spec.name, self.config.seed_for(spec))

    def score(self, name: str, write: bool = True) -> ScoreResult:
        """Score every impression with one configured learner.

        Raises:
            UnknownLearnerError: name not configured.
        """
        spec = self.config.learner(name)
        learner = self.build_learner(spec)
        table = learner.score_all(self.behaviors, workers=self.config.workers)
        report = learner.report(self.behaviors)
        path = table.write(self.config.score_path(name)) if write else None
        logger.info("Scored %d pairs with '%s'", len(table), name)
        return ScoreResult(table=table, report=report, path=path)

    def load_scores(self, names: Sequence[str]) -> dict[str, ScoreTable]:
        """Read score files written by `score` for each named member."""
        tables: dict[str, ScoreTable] = {}
        for name in names:
            path = self.config.score_path(name)
            if not path.exists():
                raise MindBlendFileNotFoundError(str(path))
            tables[name] = load_external_scores(path, self.behaviors, learner=name)
        return tables

    # ── fusion ──

    def combine(
        self,
        spec: Optional[FusionSpec] = None,
        write: bool = True,
        tables: Optional[Mapping[str, ScoreTable]] = None,
    ) -> CombineResult:
        """Fuse member scores; members missing from tables are read from their score files."""
        spec = spec or self.config.fusion
        if spec is None:
            raise UsageError("No fusion spec configured")
        given = dict(tables or {})
        tables = {**given, **self.load_scores([n for n in spec.names if n not in given])}
        ranked = fuse_all(tables, self.behaviors, spec, workers=self.config.workers)
        path = None
        if write:
            path = write_predictions(ranked, self.behaviors, self.output_dir / PREDICTION_FILE)
        return CombineResult(spec=spec, ranked=ranked, path=path)

    def sweep(
        self,
        members: Sequence[str],
        objective: Optional[Metric] = None,
        step: Optional[float] = None,
        transform: Optional[Transform] = None,
        write: bool = True,
    ) -> SweepResult:
        """Grid-search fusion weights; transform defaults to the configured fusion's."""
        objective = objective or self.config.objective
        step = step if step is not None else self.config.step
        if transform is None:
            fusion = self.config.fusion
            transform = fusion.transform if fusion is not None else Transform.RECIPROCAL_RANK
        if len(members) < 2:
            raise UsageError("Weight sweep needs at least two members")
        simplex_grid(len(members), step)
        result = sweep_weights(
            self.load_scores(members),
            members,
            self.behaviors,
            objective,
            step=step,
            transform=transform,
            workers=self.config.workers,
        )
        if write:
            atomic_write(result.to_text(), self.output_dir / "sweep.txt")
            atomic_write(dump_fusion(result.spec), self.output_dir / "fusion.yaml")
        return result

    # ── evaluation ──

    def evaluate(self, source: Path | str, write: bool = True) -> EvaluateResult:
        """Evaluate a prediction file or a score file against the behaviors."""
        source = Path(source)
        if not source.exists():
            raise MindBlendFileNotFoundError(str(source))
        predictions: list[RankedList] | ScoreTable
        if looks_like_predictions(source):
            predictions = read_predictions(source, self.behaviors)
        else:
            predictions = load_external_scores(source, self.behaviors)
        report = evaluate(predictions, self.behaviors, workers=self.config.workers)
        report = report.select(self.config.metrics)
        paths: list[Path] = []
        if write:
            paths = _write_report(report, self.output_dir, "report", title=source.name)
        return EvaluateResult(report=report, source=source, paths=paths)

    def run(self, write: bool = True) -> ComparisonResult:
        """Score every configured learner, fuse, and compare members with the combination."""
        rows: list[tuple[str, MetricReport]] = []
        scored: dict[str, ScoreTable] = {}
        for name in self.config.learner_names:
            table = scored[name] = self.score(name, write=write).table
            rows.append((name, evaluate(table, self.behaviors, workers=self.config.workers)))
        if self.config.fusion is not None:
            combined = self.combine(self.config.fusion, write=write, tables=scored)
            report = evaluate(combined.ranked, self.behaviors, workers=self.config.workers)
            rows.append((COMBINED_ROW, report))
        result = ComparisonResult(rows=rows, metrics=self.config.metrics)
        if write:
            result.paths = [
                atomic_write(result.to_text(), self.output_dir / "comparison.txt"),
                atomic_write(
                    yaml.safe_dump(result.to_dict(), sort_keys=False),
                    self.output_dir / "comparison.yaml",
                ),
            ]
        return result


def _write_report(report: MetricReport, out_dir: Path, stem: str, title: str = "") -> list[Path]:
    return [
        atomic_write(report.to_text(title), out_dir / f"{stem}.txt"),
        atomic_write(yaml.safe_dump(report.to_dict(), sort_keys=False), out_dir / f"{stem}.yaml"),
    ]
