"""
mindblend.learners — base learners producing per-candidate scores.

Every learner emits exactly one finite score per (impression, candidate).
Missing data never aborts a run: a candidate unknown to the learner scores 0
and an unknown history article is skipped; both are logged and counted in the
LearnerReport.

Content learners build a user profile from the click history:
    mean  — L2-normalized mean of the (normalized) history vectors,
            score = cosine(profile, candidate)
    max   — score = max over history of cosine(history article, candidate)
Empty history (cold start) scores every candidate 0.
"""

from __future__ import annotations

import hashlib
import math
import threading
from abc import ABC, abstractmethod
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from exceptions import CoverageError, InvalidConfigError, ParseError
from logger import get_logger
from mindblend.dataset import BehaviorSet, Impression
from mindblend.io import atomic_write, read_text, split_lines
from mindblend.text import EmbeddingTable, SparseVector, TfidfModel, cosine, mean_vector

logger = get_logger(__name__)

MAX_REPORTED_GAPS = 10


class LearnerKind(str, Enum):
    TFIDF = "tfidf"
    EMBEDDING = "embedding"
    EXTERNAL = "external"
    POPULARITY = "popularity"
    RANDOM = "random"


class Aggregation(str, Enum):
    MEAN = "mean"
    MAX = "max"


# ─── SCORE TABLE ──────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Per-(impression, candidate) scores produced by one learner."""
    learner: str
    entries: Mapping[tuple[str, str], float]
    order: tuple[tuple[str, str], ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreTable):
            return NotImplemented
        return self.learner == other.learner and dict(self.entries) == dict(other.entries)

    def __hash__(self) -> int:
        return hash((self.learner, len(self.entries)))

    @classmethod
    def from_scores(
        cls, learner: str, behaviors: BehaviorSet, scores: Sequence[Sequence[float]]
    ) -> "ScoreTable":
        """Assemble from per-impression score arrays aligned to candidate order."""
        entries: dict[tuple[str, str], float] = {}
        order: list[tuple[str, str]] = []
        for imp, row in zip(behaviors, scores):
            for article_id, score in zip(imp.candidate_ids, row):
                key = (imp.impression_id, article_id)
                entries[key] = float(score)
                order.append(key)
        return cls(learner=learner, entries=entries, order=tuple(order))

    def gaps(self, behaviors: BehaviorSet) -> list[tuple[str, str]]:
        return [pair for pair in behaviors.pairs() if pair not in self.entries]

    def check_coverage(self, behaviors: BehaviorSet) -> None:
        """Raise CoverageError unless every candidate pair is scored and nothing else is."""
        missing = self.gaps(behaviors)
        if missing:
            raise CoverageError(
                f"Score table '{self.learner}' misses {len(missing)} candidate pair(s)", missing
            )
        expected = set(behaviors.pairs())
        extra = [pair for pair in self.entries if pair not in expected]
        if extra:
            raise CoverageError(
                f"Score table '{self.learner}' has {len(extra)} pair(s) not in behaviors", extra
            )

    def scores_for(self, impression: Impression) -> np.ndarray:
        """Scores in the impression's candidate order."""
        try:
            return np.array(
                [self.entries[(impression.impression_id, a)] for a in impression.candidate_ids],
                dtype=np.float64,
            )
        except KeyError as exc:
            gap = exc.args[0]
            raise CoverageError(f"Score table '{self.learner}' has a gap", [gap]) from exc

    def to_tsv(self) -> str:
        keys = self.order or tuple(self.entries)
        return "".join(f"{i}\t{a}\t{self.entries[(i, a)]!r}\n" for i, a in keys)

    def write(self, path: Path) -> Path:
        return atomic_write(self.to_tsv(), path)


def load_external_scores(
    path: Path | str, behaviors: BehaviorSet, learner: Optional[str] = None
) -> ScoreTable:
    """Load "impression_id<TAB>article_id<TAB>score" lines, checked for coverage.

    Raises:
        ParseError: malformed line, non-finite score or duplicate pair.
        CoverageError: a candidate pair is missing, or a pair is not in behaviors.
    """
    path = Path(path)
    text, replaced = read_text(path)
    if replaced:
        logger.warning("Invalid UTF-8 bytes replaced in %s", path)

    entries: dict[tuple[str, str], float] = {}
    for line_no, line in enumerate(split_lines(text), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ParseError(
                str(path), line_no, f"expected 3 tab-separated columns, got {len(cols)}"
            )
        impression_id, article_id, raw = (c.strip() for c in cols)
        try:
            score = float(raw)
        except ValueError as exc:
            raise ParseError(str(path), line_no, f"score {raw!r} is not a number") from exc
        if not math.isfinite(score):
            raise ParseError(str(path), line_no, f"score {raw!r} is not finite")
        key = (impression_id, article_id)
        if key in entries:
            raise ParseError(str(path), line_no, f"duplicate pair {impression_id}/{article_id}")
        entries[key] = score

    order = tuple(pair for pair in behaviors.pairs() if pair in entries)
    table = ScoreTable(learner=learner or path.stem, entries=entries, order=order)
    table.check_coverage(behaviors)
    logger.info("Loaded %d external scores from %s", len(entries), path)
    return table


# ─── LEARNER SPEC & REPORT ────────────────────────────────────────────────────


@dataclass(frozen=True)
class LearnerSpec:
    """Configured base learner."""
    name: str
    kind: LearnerKind
    path: Optional[Path] = None
    seed: Optional[int] = None
    aggregation: Aggregation = Aggregation.MEAN

    def __post_init__(self) -> None:
        if not self.name:
            raise InvalidConfigError("Learner name must be non-empty")
        if self.kind in (LearnerKind.EMBEDDING, LearnerKind.EXTERNAL) and self.path is None:
            raise InvalidConfigError(
                f"Learner '{self.name}' of kind '{self.kind.value}' needs a path",
                context={"learner": self.name},
            )

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], base: Path) -> "LearnerSpec":
        try:
            kind = LearnerKind(str(raw.get("kind", "")))
        except ValueError as exc:
            raise InvalidConfigError(
                f"Unknown learner kind {raw.get('kind')!r}",
                context={"allowed": [k.value for k in LearnerKind]},
            ) from exc
        try:
            aggregation = Aggregation(str(raw.get("aggregation", "mean")))
        except ValueError as exc:
            raise InvalidConfigError(
                f"Unknown aggregation {raw.get('aggregation')!r}",
                context={"allowed": [a.value for a in Aggregation]},
            ) from exc
        path = raw.get("path")
        seed = raw.get("seed")
        return cls(
            name=str(raw.get("name", "")),
            kind=kind,
            path=(base / str(path)) if path else None,
            seed=int(seed) if seed is not None else None,
            aggregation=aggregation,
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind.value}
        if self.path is not None:
            out["path"] = str(self.path)
        if self.seed is not None:
            out["seed"] = self.seed
        if self.kind in (LearnerKind.TFIDF, LearnerKind.EMBEDDING):
            out["aggregation"] = self.aggregation.value
        return out


@dataclass
class LearnerReport:
    """Substitution counts for one scoring run."""
    learner: str
    impressions: int = 0
    candidates: int = 0
    substitutions: Counter[str] = field(default_factory=Counter)

    def to_text(self) -> str:
        lines = [
            f"learner: {self.learner}",
            f"impressions scored: {self.impressions}",
            f"candidates scored: {self.candidates}",
        ]
        if self.substitutions:
            for reason in sorted(self.substitutions):
                lines.append(f"substituted ({reason}): {self.substitutions[reason]}")
        else:
            lines.append("substitutions: 0")
        return "\n".join(lines) + "\n"


# ─── SCORING FUNCTIONS ────────────────────────────────────────────────────────


def _profile_scores(
    history: Sequence[Any],
    candidates: Sequence[Any],
    aggregation: Aggregation,
    mean_of: Any,
) -> np.ndarray:
    """Shared mean-profile / max-similarity scoring over already-resolved vectors."""
    n = len(candidates)
    if not history:
        return np.zeros(n, dtype=np.float64)
    if aggregation == Aggregation.MAX:
        return np.array(
            [max(cosine(h, c) for h in history) if c is not None else 0.0 for c in candidates],
            dtype=np.float64,
        )
    profile = mean_of(history)
    return np.array(
        [cosine(profile, c) if c is not None else 0.0 for c in candidates], dtype=np.float64
    )


def score_tfidf(
    model: TfidfModel,
    impression: Impression,
    aggregation: Aggregation = Aggregation.MEAN,
    substitutions: Optional[Counter[str]] = None,
) -> np.ndarray:
    """Cosine between the history profile and each candidate's TF-IDF vector."""
    history: list[SparseVector] = []
    for article_id in impression.history:
        vec = model.vector(article_id)
        if vec is None:
            logger.warning("History article %s unknown to TF-IDF model", article_id)
            if substitutions is not None:
                substitutions["missing_history"] += 1
            continue
        history.append(vec)

    candidates: list[Optional[SparseVector]] = []
    for article_id in impression.candidate_ids:
        vec = model.vector(article_id)
        if vec is None:
            logger.warning("Candidate %s unknown to TF-IDF model; scored 0", article_id)
            if substitutions is not None:
                substitutions["missing_candidate"] += 1
        candidates.append(vec)

    return _profile_scores(
        history, candidates, aggregation, lambda hs: mean_vector(hs, model.dim)
    )


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else vec


def score_embedding(
    table: EmbeddingTable,
    impression: Impression,
    aggregation: Aggregation = Aggregation.MEAN,
    substitutions: Optional[Counter[str]] = None,
) -> np.ndarray:
    """Same profile scheme as score_tfidf, over precomputed dense vectors."""
    zero = np.zeros(table.dim, dtype=np.float64)
    history: list[np.ndarray] = []
    for article_id in impression.history:
        vec = table.get(article_id)
        if vec is None:
            logger.warning("History article %s has no embedding; zero vector used", article_id)
            if substitutions is not None:
                substitutions["missing_history"] += 1
            vec = zero
        history.append(_unit(vec))

    candidates: list[np.ndarray] = []
    for article_id in impression.candidate_ids:
        vec = table.get(article_id)
        if vec is None:
            logger.warning("Candidate %s has no embedding; zero vector used", article_id)
            if substitutions is not None:
                substitutions["missing_candidate"] += 1
            vec = zero
        candidates.append(vec)

    return _profile_scores(
        history, candidates, aggregation, lambda hs: np.mean(np.stack(hs), axis=0)
    )


def score_popularity(clicks: Mapping[str, int], impression: Impression) -> np.ndarray:
    """Global click count of each candidate; 0 for unseen articles."""
    return np.array([float(clicks.get(a, 0)) for a in impression.candidate_ids], dtype=np.float64)


def _keyed_uniform(seed: int, impression_id: str, article_id: str) -> float:
    digest = hashlib.blake2b(
        f"{seed}\t{impression_id}\t{article_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2**64


def score_random(seed: int, impression: Impression) -> np.ndarray:
    """Deterministic uniform [0, 1) scores keyed by (seed, impression, article)."""
    return np.array(
        [_keyed_uniform(seed, impression.impression_id, a) for a in impression.candidate_ids],
        dtype=np.float64,
    )


# ─── LEARNER OBJECTS ──────────────────────────────────────────────────────────


class Learner(ABC):
    """Uniform contract: one finite score per candidate of an impression."""

    def __init__(self, name: str) -> None:
        self.name = name
        self._lock = threading.Lock()
        self._substitutions: Counter[str] = Counter()

    @abstractmethod
    def _score(self, impression: Impression, substitutions: Counter[str]) -> np.ndarray:
        ...

    def score(self, impression: Impression) -> np.ndarray:
        local: Counter[str] = Counter()
        scores = self._score(impression, local)
        if local:
            with self._lock:
                self._substitutions.update(local)
        return scores

    def score_all(self, behaviors: BehaviorSet, workers: int = 1) -> ScoreTable:
        """Score every impression; output order follows the behaviors file."""
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(self.score, behaviors))
        else:
            rows = [self.score(imp) for imp in behaviors]
        return ScoreTable.from_scores(self.name, behaviors, rows)

    def report(self, behaviors: BehaviorSet) -> LearnerReport:
        with self._lock:
            subs = Counter(self._substitutions)
        return LearnerReport(
            learner=self.name,
            impressions=len(behaviors),
            candidates=sum(len(imp.candidates) for imp in behaviors),
            substitutions=subs,
        )


class TfidfLearner(Learner):
    def __init__(self, name: str, model: TfidfModel, aggregation: Aggregation = Aggregation.MEAN):
        super().__init__(name)
        self.model = model
        self.aggregation = aggregation

    def _score(self, impression: Impression, substitutions: Counter[str]) -> np.ndarray:
        return score_tfidf(self.model, impression, self.aggregation, substitutions)


class EmbeddingLearner(Learner):
    def __init__(
        self, name: str, table: EmbeddingTable, aggregation: Aggregation = Aggregation.MEAN
    ):
        super().__init__(name)
        self.table = table
        self.aggregation = aggregation

    def _score(self, impression: Impression, substitutions: Counter[str]) -> np.ndarray:
        return score_embedding(self.table, impression, self.aggregation, substitutions)


class ExternalLearner(Learner):
    """Scores ingested from a precomputed file (neural recommenders trained elsewhere)."""

    def __init__(self, name: str, table: ScoreTable):
        super().__init__(name)
        self.table = table

    def _score(self, impression: Impression, substitutions: Counter[str]) -> np.ndarray:
        return self.table.scores_for(impression)


class PopularityLearner(Learner):
    def __init__(self, name: str, clicks: Mapping[str, int]):
        super().__init__(name)
        self.clicks = clicks

    def _score(self, impression: Impression, substitutions: Counter[str]) -> np.ndarray:
        return score_popularity(self.clicks, impression)


class RandomLearner(Learner):
    def __init__(self, name: str, seed: int):
        super().__init__(name)
        self.seed = seed

    def _score(self, impression: Impression, substitutions: Counter[str]) -> np.ndarray:
        return score_random(self.seed, impression)
