"""
mindblend.fixture — synthetic MIND-format datasets with planted structure.

Two independent click signals are planted:
    content        each user prefers one category; clicked articles tend to
                   share that category (and its vocabulary) with the history
    collaborative  users belong to cohorts; each cohort favours a fixed set of
                   articles across all categories

A content learner (tfidf) sees only the first signal; the generated
collaborative score file sees only the second. Each is informative on its
own and their combination beats both.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Optional

import numpy as np

from exceptions import UsageError
from logger import get_logger
from mindblend.dataset import (
    BehaviorSet,
    Catalog,
    Impression,
    Label,
    NewsArticle,
    serialize_behaviors,
    serialize_news,
)
from mindblend.io import atomic_write
from mindblend.learners import ScoreTable
from mindblend.text import EmbeddingTable, serialize_embeddings

logger = get_logger(__name__)

CATEGORY_TERMS: dict[str, list[str]] = {
    "sports": ["match", "coach", "league", "goal", "season", "playoff",
               "striker", "stadium", "champion", "injury", "transfer", "derby"],
    "finance": ["market", "stocks", "earnings", "inflation", "bank", "investor",
                "dividend", "bond", "rates", "merger", "revenue", "crypto"],
    "health": ["diet", "sleep", "vitamin", "doctor", "heart", "fitness",
               "protein", "vaccine", "calorie", "therapy", "belly", "habits"],
    "travel": ["flight", "island", "hotel", "beach", "passport", "cruise",
               "airport", "resort", "itinerary", "luggage", "mountain", "village"],
    "music": ["album", "concert", "singer", "guitar", "lyrics", "festival",
              "chart", "band", "tour", "vinyl", "producer", "ballad"],
    "science": ["planet", "fossil", "telescope", "genome", "climate", "quantum",
                "species", "laboratory", "asteroid", "molecule", "glacier", "orbit"],
}
COMMON_TERMS = ["the", "a", "new", "why", "how", "best", "after", "report", "this", "week"]

EMBEDDING_DIM = 16
COLD_START_RATE = 0.05
BASE_CLICK = 0.05
CONTENT_LIFT = 0.35
COHORT_LIFT = 0.35
COLLAB_NOISE = 0.5


@dataclass(frozen=True)
class FixtureSizes:
    users: int = 10
    articles: int = 20
    impressions: int = 50
    candidates: int = 8
    cohorts: int = 3

    def __post_init__(self) -> None:
        for name in ("users", "articles", "impressions", "candidates", "cohorts"):
            if getattr(self, name) < 1:
                raise UsageError(f"Fixture size '{name}' must be positive")
        if self.candidates < 2:
            raise UsageError("Fixture impressions need at least 2 candidates")
        if self.candidates > self.articles:
            raise UsageError(
                "Candidates per impression cannot exceed the article count",
                context={"candidates": self.candidates, "articles": self.articles},
            )


@dataclass(frozen=True, eq=False)
class Fixture:
    catalog: Catalog
    behaviors: BehaviorSet
    collab_scores: ScoreTable
    embeddings: EmbeddingTable


def _time_text(moment: datetime) -> str:
    hour = moment.hour % 12 or 12
    suffix = "AM" if moment.hour < 12 else "PM"
    return (
        f"{moment.month}/{moment.day}/{moment.year} "
        f"{hour}:{moment.minute:02d}:{moment.second:02d} {suffix}"
    )


def _sentence(rng: np.random.Generator, bank: list[str], words: int) -> list[str]:
    chosen = list(rng.choice(bank, size=words, replace=True))
    chosen.insert(int(rng.integers(0, words + 1)), str(rng.choice(COMMON_TERMS)))
    return [str(w) for w in chosen]


def generate_fixture(sizes: FixtureSizes, seed: int) -> Fixture:
    """Build a deterministic planted dataset for the given sizes and seed."""
    rng = np.random.default_rng(seed)
    n_categories = max(2, min(len(CATEGORY_TERMS), sizes.articles // 5))
    categories = list(CATEGORY_TERMS)[:n_categories]

    # catalog
    articles: dict[str, NewsArticle] = {}
    category_of: dict[str, str] = {}
    by_category: dict[str, list[str]] = {c: [] for c in categories}
    for i in range(sizes.articles):
        category = categories[i % n_categories]
        article_id = f"N{10001 + i}"
        bank = CATEGORY_TERMS[category]
        title = _sentence(rng, bank, 3)
        title[0] = title[0].capitalize()
        abstract = _sentence(rng, bank, 6)
        articles[article_id] = NewsArticle(
            id=article_id,
            category=category,
            subcategory=f"{category}{bank[i % len(bank)]}",
            title=" ".join(title),
            abstract=" ".join(abstract).capitalize() + ".",
        )
        category_of[article_id] = category
        by_category[category].append(article_id)
    article_ids = list(articles)

    # dense vectors: category centroid plus noise
    centroids = {c: rng.normal(0.0, 1.0, EMBEDDING_DIM) for c in categories}
    vectors = {
        a: np.round(centroids[category_of[a]] + rng.normal(0.0, 0.6, EMBEDDING_DIM), 6)
        for a in article_ids
    }

    # users: preferred category + cohort; cohorts favour a quarter of the catalog
    user_ids = [f"U{20001 + u}" for u in range(sizes.users)]
    preference = {u: categories[int(rng.integers(0, n_categories))] for u in user_ids}
    cohort_of = {u: int(rng.integers(0, sizes.cohorts)) for u in user_ids}
    n_fav = max(1, sizes.articles // 4)
    favourites = [
        set(str(a) for a in rng.choice(article_ids, size=n_fav, replace=False))
        for _ in range(sizes.cohorts)
    ]
    histories: dict[str, tuple[str, ...]] = {}
    for u in user_ids:
        pool = by_category[preference[u]]
        if rng.random() < COLD_START_RATE:
            histories[u] = ()
            continue
        length = int(min(len(pool), rng.integers(2, 7)))
        histories[u] = tuple(str(a) for a in rng.choice(pool, size=length, replace=False))

    # impressions
    start = datetime(2019, 11, 11, 9, 5, 58)
    impressions: list[Impression] = []
    collab: dict[tuple[str, str], float] = {}
    order: list[tuple[str, str]] = []
    for i in range(sizes.impressions):
        user = user_ids[i] if i < sizes.users else user_ids[int(rng.integers(0, sizes.users))]
        impression_id = str(i + 1)
        shown = [str(a) for a in rng.choice(article_ids, size=sizes.candidates, replace=False)]
        content = np.array([category_of[a] == preference[user] for a in shown], dtype=float)
        cohort = np.array([a in favourites[cohort_of[user]] for a in shown], dtype=float)
        p = BASE_CLICK + CONTENT_LIFT * content + COHORT_LIFT * cohort
        clicks = rng.random(sizes.candidates) < p
        if not clicks.any():
            clicks[int(np.argmax(p + rng.random(sizes.candidates) * 1e-3))] = True
        if clicks.all():
            clicks[int(np.argmin(p + rng.random(sizes.candidates) * 1e-3))] = False

        moment = start + timedelta(minutes=int(i * 7 + rng.integers(0, 7)))
        time_text = _time_text(moment)
        impressions.append(
            Impression(
                impression_id=impression_id,
                user_id=user,
                time_text=time_text,
                timestamp=datetime.strptime(time_text, "%m/%d/%Y %I:%M:%S %p"),
                history=histories[user],
                candidates=tuple(
                    (a, Label.CLICKED if c else Label.NOT_CLICKED) for a, c in zip(shown, clicks)
                ),
            )
        )
        noise = rng.normal(0.0, COLLAB_NOISE, sizes.candidates)
        for a, fav, eps in zip(shown, cohort, noise):
            key = (impression_id, a)
            collab[key] = round(float(fav + eps), 6)
            order.append(key)

    logger.info(
        "Generated fixture: %d users, %d articles, %d impressions (seed=%d)",
        sizes.users, sizes.articles, sizes.impressions, seed,
    )
    return Fixture(
        catalog=Catalog(articles=articles),
        behaviors=BehaviorSet(impressions=tuple(impressions), source="<fixture>"),
        collab_scores=ScoreTable(learner="collab", entries=collab, order=tuple(order)),
        embeddings=EmbeddingTable(dim=EMBEDDING_DIM, vectors=vectors),
    )


FIXTURE_CONFIG = """\
# Generated by `mindblend fixture` (seed {seed}).
seed: {seed}
workers: 1
output_dir: runs

paths:
  news: news.tsv
  behaviors: behaviors.tsv
  embeddings: embeddings.txt

learners:
  - name: tfidf
    kind: tfidf
  - name: tfidf_max
    kind: tfidf
    aggregation: max
  - name: embedding
    kind: embedding
    path: embeddings.txt
  - name: collab
    kind: external
    path: collab_scores.tsv
  - name: popularity
    kind: popularity
  - name: random
    kind: random

fusion:
  transform: reciprocal_rank
  members:
    - name: tfidf
      weight: 0.5
    - name: collab
      weight: 0.5

sweep:
  objective: auc
  step: 0.1
"""


def write_fixture(fixture: Fixture, out_dir: Path, seed: Optional[int] = None) -> list[Path]:
    """Write news, behaviors, embeddings, collaborative scores and a run config."""
    out_dir = Path(out_dir)
    written = [
        atomic_write(serialize_news(fixture.catalog), out_dir / "news.tsv"),
        atomic_write(serialize_behaviors(fixture.behaviors), out_dir / "behaviors.tsv"),
        atomic_write(serialize_embeddings(fixture.embeddings), out_dir / "embeddings.txt"),
        fixture.collab_scores.write(out_dir / "collab_scores.tsv"),
    ]
    if seed is not None:
        written.append(atomic_write(FIXTURE_CONFIG.format(seed=seed), out_dir / "mindblend.yaml"))
    return written
