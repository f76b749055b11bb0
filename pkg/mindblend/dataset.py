"""
mindblend.dataset — MIND-format news and behaviors files.

news.tsv (one article per line, >=5 tab-separated columns):
    id  category  subcategory  title  abstract  [url  entities ...ignored]

behaviors.tsv (one impression per line):
    impression_id  user_id  time  history  impressions
    history      space-separated article ids, may be empty (cold start)
    impressions  space-separated "<article_id>-<label>" tokens, label 1=clicked, 0=not

All parsed types are frozen and safe to share between worker threads.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import IntEnum
from pathlib import Path
from typing import Iterator, Mapping, Optional

import numpy as np

from exceptions import DatasetValidationError, ParseError, UsageError
from logger import get_logger
from mindblend import issues
from mindblend.io import atomic_write, read_text, split_lines
from mindblend.issues import Issue

logger = get_logger(__name__)

NEWS_MIN_COLUMNS = 5
BEHAVIOR_COLUMNS = 5
TIME_FORMAT = "%m/%d/%Y %I:%M:%S %p"


# ─── DOMAIN TYPES ─────────────────────────────────────────────────────────────


class Label(IntEnum):
    NOT_CLICKED = 0
    CLICKED = 1


@dataclass(frozen=True)
class NewsArticle:
    """One catalog entry."""
    id: str
    category: str
    subcategory: str
    title: str
    abstract: str = ""

    @property
    def text(self) -> str:
        """Headline and abstract concatenated; the document content learners see."""
        return f"{self.title} {self.abstract}"


@dataclass(frozen=True)
class Impression:
    """One behavior row: a labelled candidate list shown to a user."""
    impression_id: str
    user_id: str
    time_text: str
    timestamp: Optional[datetime]
    history: tuple[str, ...]
    candidates: tuple[tuple[str, Label], ...]

    @property
    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(article_id for article_id, _ in self.candidates)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(int(label) for _, label in self.candidates)

    @property
    def clicked(self) -> tuple[str, ...]:
        return tuple(a for a, label in self.candidates if label == Label.CLICKED)

    @property
    def not_clicked(self) -> tuple[str, ...]:
        return tuple(a for a, label in self.candidates if label == Label.NOT_CLICKED)


@dataclass(frozen=True)
class Catalog:
    """Article id → NewsArticle, in file order."""
    articles: Mapping[str, NewsArticle] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.articles)

    def __contains__(self, article_id: object) -> bool:
        return article_id in self.articles

    def __iter__(self) -> Iterator[NewsArticle]:
        return iter(self.articles.values())

    def __getitem__(self, article_id: str) -> NewsArticle:
        return self.articles[article_id]

    def get(self, article_id: str) -> Optional[NewsArticle]:
        return self.articles.get(article_id)


@dataclass(frozen=True)
class BehaviorSet:
    """Impressions in file order plus the path they came from."""
    impressions: tuple[Impression, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.impressions)

    def __iter__(self) -> Iterator[Impression]:
        return iter(self.impressions)

    def __getitem__(self, index: int) -> Impression:
        return self.impressions[index]

    def __eq__(self, other: object) -> bool:
        # provenance is not part of the value
        if not isinstance(other, BehaviorSet):
            return NotImplemented
        return self.impressions == other.impressions

    def __hash__(self) -> int:
        return hash(self.impressions)

    @property
    def impression_ids(self) -> tuple[str, ...]:
        return tuple(imp.impression_id for imp in self.impressions)

    def pairs(self) -> Iterator[tuple[str, str]]:
        """Every (impression_id, article_id) candidate pair in file order."""
        for imp in self.impressions:
            for article_id in imp.candidate_ids:
                yield imp.impression_id, article_id


@dataclass
class ValidationReport:
    """Report-only outcome of validate()."""
    issues: list[Issue] = field(default_factory=list)
    missing_ids: list[str] = field(default_factory=list)
    no_click: list[str] = field(default_factory=list)
    degenerate_auc: list[str] = field(default_factory=list)
    articles: int = 0
    impressions: int = 0
    candidates: int = 0
    clicks: int = 0

    @property
    def is_clean(self) -> bool:
        return not self.issues

    def summary(self) -> str:
        return (
            f"articles={self.articles} impressions={self.impressions} "
            f"candidates={self.candidates} clicks={self.clicks} "
            f"missing_ids={len(self.missing_ids)} no_click={len(self.no_click)} "
            f"degenerate_auc={len(self.degenerate_auc)}"
        )


# ─── PARSERS ──────────────────────────────────────────────────────────────────


def _load_lines(path: Path) -> list[str]:
    text, replaced = read_text(path)
    if replaced:
        logger.warning("Invalid UTF-8 bytes replaced in %s", path)
    return split_lines(text)


def parse_news(path: Path | str) -> Catalog:
    """Parse a MIND news file into a Catalog.

    Extra trailing columns (url, entity lists of real MIND) are ignored.

    Raises:
        ParseError: line with fewer than 5 columns.
        DatasetValidationError: duplicate id or empty id/title.
    """
    path = Path(path)
    articles: dict[str, NewsArticle] = {}
    for line_no, line in enumerate(_load_lines(path), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < NEWS_MIN_COLUMNS:
            raise ParseError(
                str(path), line_no,
                f"expected at least {NEWS_MIN_COLUMNS} tab-separated columns, got {len(cols)}",
            )
        article = NewsArticle(
            id=cols[0].strip(),
            category=cols[1],
            subcategory=cols[2],
            title=cols[3],
            abstract=cols[4],
        )
        if not article.id:
            raise DatasetValidationError(
                "Empty article id", context={"path": str(path), "line": line_no}
            )
        if not article.title.strip():
            raise DatasetValidationError(
                f"Empty title for article '{article.id}'",
                context={"path": str(path), "line": line_no},
            )
        if article.id in articles:
            raise DatasetValidationError(
                f"Duplicate article id '{article.id}'",
                context={"path": str(path), "line": line_no},
            )
        articles[article.id] = article
    logger.debug("Parsed %d articles from %s", len(articles), path)
    return Catalog(articles=articles)


def _parse_timestamp(text: str, path: Path, line_no: int) -> Optional[datetime]:
    try:
        return datetime.strptime(text.strip(), TIME_FORMAT)
    except ValueError:
        # no learner consumes time
        logger.warning("Unparseable timestamp %r at %s:%d", text, path, line_no)
        return None


def _parse_candidate(token: str, path: Path, line_no: int) -> tuple[str, Label]:
    article_id, sep, suffix = token.rpartition("-")
    if not sep or not article_id or suffix not in ("0", "1"):
        raise ParseError(
            str(path), line_no, f"candidate token {token!r} lacks a -0/-1 click suffix"
        )
    return article_id, Label(int(suffix))


def parse_behaviors(path: Path | str) -> BehaviorSet:
    """Parse a MIND behaviors file into a BehaviorSet.

    Raises:
        ParseError: wrong column count or malformed candidate token.
        DatasetValidationError: empty impressions column, duplicate impression id,
            or a candidate listed twice in one impression.
    """
    path = Path(path)
    impressions: list[Impression] = []
    seen: set[str] = set()
    for line_no, line in enumerate(_load_lines(path), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < BEHAVIOR_COLUMNS:
            raise ParseError(
                str(path), line_no,
                f"expected {BEHAVIOR_COLUMNS} tab-separated columns, got {len(cols)}",
            )
        impression_id, user_id, time_text, history_col, impressions_col = cols[:BEHAVIOR_COLUMNS]
        impression_id = impression_id.strip()
        tokens = impressions_col.split()
        if not tokens:
            raise DatasetValidationError(
                f"Impression '{impression_id}' has no candidates",
                context={"path": str(path), "line": line_no},
            )
        candidates = tuple(_parse_candidate(t, path, line_no) for t in tokens)
        ids = [a for a, _ in candidates]
        if len(set(ids)) != len(ids):
            dup = next(a for a, n in Counter(ids).items() if n > 1)
            raise DatasetValidationError(
                f"Candidate '{dup}' listed twice in impression '{impression_id}'",
                context={"path": str(path), "line": line_no},
            )
        if impression_id in seen:
            raise DatasetValidationError(
                f"Duplicate impression id '{impression_id}'",
                context={"path": str(path), "line": line_no},
            )
        seen.add(impression_id)
        impressions.append(
            Impression(
                impression_id=impression_id,
                user_id=user_id.strip(),
                time_text=time_text,
                timestamp=_parse_timestamp(time_text, path, line_no),
                history=tuple(history_col.split()),
                candidates=candidates,
            )
        )
    logger.debug("Parsed %d impressions from %s", len(impressions), path)
    return BehaviorSet(impressions=tuple(impressions), source=str(path))


# ─── SERIALIZERS ──────────────────────────────────────────────────────────────


def serialize_news(catalog: Catalog) -> str:
    """Render a catalog in the 5-column news format."""
    return "".join(
        f"{a.id}\t{a.category}\t{a.subcategory}\t{a.title}\t{a.abstract}\n" for a in catalog
    )


def serialize_behaviors(behaviors: BehaviorSet) -> str:
    """Render a behavior set in the behaviors format; inverse of parse_behaviors."""
    lines = []
    for imp in behaviors:
        candidates = " ".join(f"{a}-{int(label)}" for a, label in imp.candidates)
        lines.append(
            f"{imp.impression_id}\t{imp.user_id}\t{imp.time_text}\t"
            f"{' '.join(imp.history)}\t{candidates}\n"
        )
    return "".join(lines)


def write_news(catalog: Catalog, path: Path) -> Path:
    return atomic_write(serialize_news(catalog), path)


def write_behaviors(behaviors: BehaviorSet, path: Path) -> Path:
    return atomic_write(serialize_behaviors(behaviors), path)


# ─── VALIDATION ───────────────────────────────────────────────────────────────


def validate(catalog: Catalog, behaviors: BehaviorSet) -> ValidationReport:
    """Cross-check behaviors against the catalog. Never raises."""
    report = ValidationReport(articles=len(catalog), impressions=len(behaviors))
    missing_seen: set[str] = set()

    for imp in behaviors:
        for role, ids in (("history", imp.history), ("candidate", imp.candidate_ids)):
            for article_id in ids:
                if article_id in catalog:
                    continue
                report.issues.append(issues.missing_article(imp.impression_id, article_id, role))
                if article_id not in missing_seen:
                    missing_seen.add(article_id)
                    report.missing_ids.append(article_id)

        n_clicked = len(imp.clicked)
        n_total = len(imp.candidates)
        report.candidates += n_total
        report.clicks += n_clicked
        if n_clicked == 0:
            report.no_click.append(imp.impression_id)
            report.issues.append(issues.no_click(imp.impression_id))
        if n_clicked == 0 or n_clicked == n_total:
            report.degenerate_auc.append(imp.impression_id)
            report.issues.append(issues.degenerate_auc(imp.impression_id, n_clicked, n_total))

    return report


def with_placeholders(catalog: Catalog, behaviors: BehaviorSet) -> Catalog:
    """Return catalog extended with empty-text articles for every missing referenced id."""
    articles = dict(catalog.articles)
    added = 0
    for imp in behaviors:
        for article_id in (*imp.history, *imp.candidate_ids):
            if article_id in articles:
                continue
            articles[article_id] = NewsArticle(
                id=article_id, category="", subcategory="", title="", abstract=""
            )
            logger.warning("%s", issues.placeholder(article_id))
            added += 1
    if not added:
        return catalog
    logger.warning("Synthesized %d placeholder article(s)", added)
    return Catalog(articles=articles)


# ─── SUBSETTING & STATISTICS ──────────────────────────────────────────────────


def subsample(behaviors: BehaviorSet, n: int, seed: int) -> BehaviorSet:
    """Deterministic order-preserving random subset of n impressions.

    Raises:
        UsageError: n negative or larger than the set.
    """
    size = len(behaviors)
    if n < 0 or n > size:
        raise UsageError(
            f"Cannot subsample {n} impressions", context={"n": n, "size": size}
        )
    if n == size:
        return BehaviorSet(impressions=behaviors.impressions, source=behaviors.source)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(size, size=n, replace=False))
    return BehaviorSet(
        impressions=tuple(behaviors.impressions[int(i)] for i in keep),
        source=behaviors.source,
    )


def click_counts(behaviors: BehaviorSet) -> Counter[str]:
    """Labelled clicks per article."""
    counts: Counter[str] = Counter()
    for imp in behaviors:
        counts.update(imp.clicked)
    return counts


def history_counts(behaviors: BehaviorSet) -> Counter[str]:
    """History occurrences per article, counted once per user.

    A user's history is repeated on each of their impressions, so counting
    every row would weight active users by their impression count.
    """
    counts: Counter[str] = Counter()
    seen_users: set[str] = set()
    for imp in behaviors:
        if imp.user_id in seen_users:
            continue
        seen_users.add(imp.user_id)
        counts.update(imp.history)
    return counts
