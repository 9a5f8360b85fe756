"""News ingestion and retrieval.

Articles arrive as JSON lines with a headline, body, publication time, and
keyword list. Ingestion keeps only clean English text, assigns a category
from keyword tables, stamps monotone ids, and drops duplicates. Retrieval
serves recent items, optionally by category or exact keyword, and every
served summary must clear the output filter.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import re
import time
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .normtext import _data_dir, _read_lines, normalize
from .safety import SensitiveLexicon, check_response

log = logging.getLogger(__name__)

NEWS_CATEGORIES = ("politics", "sports", "sci_tech", "business")
DEFAULT_CATEGORY = "business"

ENGLISH_WORD_RATIO = 0.9
FUNCTION_WORD_DENSITY = 0.15

# Characters allowed to survive ingestion; everything else is deleted.
_CLEAN = re.compile(r"[^A-Za-z0-9\s.,!?':;%$()\-]")
_WS = re.compile(r"\s+")

_ABBREVIATIONS = frozenset(
    ["mr", "mrs", "ms", "dr", "st", "jr", "sr", "vs", "etc", "eg", "ie", "inc", "ltd", "co", "gen", "gov", "sen", "rep", "prof", "dept", "approx", "no"]
)
_SENTENCE_BREAK = re.compile(r"[.!?]+(?=\s)")


@dataclass(frozen=True)
class Article:
    id: str
    headline: str
    body: str
    published_at: datetime
    keywords: tuple[str, ...]
    category: str
    fingerprint: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "headline": self.headline,
            "body": self.body,
            "published_at": self.published_at.isoformat(),
            "keywords": list(self.keywords),
            "category": self.category,
            "fingerprint": self.fingerprint,
        }


def _load_word_list() -> frozenset[str]:
    return frozenset(_read_lines(_data_dir() / "lexicons" / "english_words.txt"))


_ENGLISH_WORDS: frozenset[str] | None = None


def _english_words() -> frozenset[str]:
    global _ENGLISH_WORDS
    if _ENGLISH_WORDS is None:
        _ENGLISH_WORDS = _load_word_list()
    return _ENGLISH_WORDS


def is_english(text: str) -> bool:
    """Heuristic language check: nearly all words must be plain ascii
    letters, and common English words must appear at a natural density."""
    words = [w.strip(".,!?':;%$()-") for w in text.split()]
    words = [w for w in words if w]
    if not words:
        return False
    ascii_words = sum(1 for w in words if w.isascii() and any(c.isalpha() for c in w))
    if ascii_words / len(words) < ENGLISH_WORD_RATIO:
        return False
    vocabulary = _english_words()
    common = sum(1 for w in words if w.lower() in vocabulary)
    return common / len(words) >= FUNCTION_WORD_DENSITY


def _load_category_tables() -> dict[str, frozenset[str]]:
    base = _data_dir() / "news_categories"
    tables = {}
    for category in NEWS_CATEGORIES:
        tables[category] = frozenset(_read_lines(base / f"{category}.txt"))
    return tables


_CATEGORY_TABLES: dict[str, frozenset[str]] | None = None


def _category_tables() -> dict[str, frozenset[str]]:
    global _CATEGORY_TABLES
    if _CATEGORY_TABLES is None:
        _CATEGORY_TABLES = _load_category_tables()
    return _CATEGORY_TABLES


def categorize(headline: str, body: str, keywords: tuple[str, ...]) -> str:
    """Category with the most keyword-table hits; business when nothing hits."""
    tokens = normalize(f"{headline} {' '.join(keywords)} {body}").tokens
    tables = _category_tables()
    best_category = DEFAULT_CATEGORY
    best_hits = 0
    for category in NEWS_CATEGORIES:
        hits = sum(1 for t in tokens if t in tables[category])
        if hits > best_hits:
            best_category, best_hits = category, hits
    return best_category


def _clean_text(text: str) -> str:
    return _WS.sub(" ", _CLEAN.sub("", text)).strip()


def _parse_timestamp(raw: str) -> datetime:
    value = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


def _fingerprint(headline: str, body: str) -> str:
    basis = normalize(headline).normalized + "\n" + normalize(body).normalized
    return hashlib.sha1(basis.encode("utf-8")).hexdigest()


def split_sentences(text: str) -> list[str]:
    """Split on sentence punctuation, but never after a known abbreviation."""
    sentences: list[str] = []
    start = 0
    for match in _SENTENCE_BREAK.finditer(text):
        preceding = text[start : match.start()]
        last_word = preceding.rsplit(None, 1)[-1].lower() if preceding.split() else ""
        if last_word.strip(".,") in _ABBREVIATIONS:
            continue
        sentences.append(text[start : match.end()].strip())
        start = match.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return [s for s in sentences if s]


def summarize(article: Article, style: str = "long") -> str:
    """First sentence of the body, or the first three for the long style."""
    if style not in ("long", "short"):
        raise ValueError(f"unknown summary style {style!r}")
    sentences = split_sentences(article.body)
    if not sentences:
        return article.headline
    count = 3 if style == "long" else 1
    return " ".join(sentences[:count])


def ingest_articles(
    path: str | Path,
    now_ms: int | None = None,
    existing_fingerprints: set[str] | None = None,
) -> list[Article]:
    """Parse a JSONL feed into clean, deduplicated, categorized articles.

    Rejects records that are malformed, not recognizably English, or whose
    headline does not survive character cleanup. Ids embed the ingestion
    timestamp plus a sequence number, so later ingests sort after earlier
    ones.
    """
    path = Path(path)
    stamp = now_ms if now_ms is not None else time.time_ns() // 1_000_000
    seen: set[str] = set(existing_fingerprints or ())
    articles: list[Article] = []
    seq = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                log.warning("%s:%d: skipping unparseable line", path, lineno)
                continue
            if not isinstance(record, dict):
                log.warning("%s:%d: skipping non-object record", path, lineno)
                continue
            headline = record.get("headline")
            body = record.get("body")
            published = record.get("published_at")
            keywords_raw = record.get("keywords", [])
            if not isinstance(headline, str) or not isinstance(body, str) or not isinstance(published, str):
                log.warning("%s:%d: skipping record with missing fields", path, lineno)
                continue
            if not isinstance(keywords_raw, list) or not all(isinstance(k, str) for k in keywords_raw):
                log.warning("%s:%d: skipping record with bad keywords", path, lineno)
                continue
            try:
                published_at = _parse_timestamp(published)
            except ValueError:
                log.warning("%s:%d: skipping record with bad timestamp", path, lineno)
                continue
            clean_headline = _clean_text(headline)
            clean_body = _clean_text(body)
            if not clean_headline or not clean_body:
                continue
            # Heavily non-ascii text loses too much in cleanup to trust.
            if len(clean_headline) < 0.9 * len(_WS.sub(" ", headline).strip()):
                continue
            if not is_english(f"{clean_headline} {clean_body}"):
                continue
            fingerprint = _fingerprint(clean_headline, clean_body)
            if fingerprint in seen:
                log.info("%s:%d: duplicate article skipped", path, lineno)
                continue
            seen.add(fingerprint)
            keywords = tuple(
                dict.fromkeys(normalize(k).normalized for k in keywords_raw if normalize(k).normalized)
            )
            articles.append(
                Article(
                    id=f"n{stamp:013d}{seq:06d}",
                    headline=clean_headline,
                    body=clean_body,
                    published_at=published_at,
                    keywords=keywords,
                    category=categorize(clean_headline, clean_body, keywords),
                    fingerprint=fingerprint,
                )
            )
            seq += 1
    return articles


class NewsIndex:
    """In-memory store of ingested articles with recency-aware pickers."""

    def __init__(self, articles: list[Article] | None = None) -> None:
        self.articles: list[Article] = []
        self._fingerprints: set[str] = set()
        self._ids: set[str] = set()
        for article in articles or []:
            self.add(article)

    def add(self, article: Article) -> bool:
        if article.fingerprint in self._fingerprints or article.id in self._ids:
            return False
        self.articles.append(article)
        self._fingerprints.add(article.fingerprint)
        self._ids.add(article.id)
        return True

    def ingest_file(self, path: str | Path, now_ms: int | None = None) -> int:
        added = 0
        for article in ingest_articles(path, now_ms=now_ms, existing_fingerprints=set(self._fingerprints)):
            if self.add(article):
                added += 1
        return added

    @property
    def fingerprints(self) -> frozenset[str]:
        return frozenset(self._fingerprints)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        ordered = sorted(self.articles, key=lambda a: a.id)
        with path.open("w", encoding="utf-8") as fh:
            for article in ordered:
                fh.write(json.dumps(article.to_dict(), ensure_ascii=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NewsIndex":
        path = Path(path)
        articles = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                articles.append(
                    Article(
                        id=record["id"],
                        headline=record["headline"],
                        body=record["body"],
                        published_at=_parse_timestamp(record["published_at"]),
                        keywords=tuple(record["keywords"]),
                        category=record["category"],
                        fingerprint=record["fingerprint"],
                    )
                )
        return cls(articles)

    def recent(self, now: datetime | None = None, window_days: int = 30) -> list[Article]:
        now = now or datetime.now(timezone.utc)
        cutoff = now - timedelta(days=window_days)
        pool = [a for a in self.articles if cutoff <= a.published_at <= now]
        pool.sort(key=lambda a: (a.published_at, a.id), reverse=True)
        return pool

    def _serve(
        self,
        pool: list[Article],
        style: str,
        retries: int,
        lexicon: SensitiveLexicon | None,
    ) -> tuple[str, Article] | None:
        for article in pool[: retries]:
            text = f"{article.headline}. {summarize(article, style=style)}"
            verdict = check_response(text, lexicon=lexicon)
            if not verdict.blocked:
                return text, article
            log.info("news item %s blocked by output filter (%s)", article.id, verdict.category)
        return None

    def random_news(
        self,
        rng: random.Random,
        category: str | None = None,
        now: datetime | None = None,
        window_days: int = 30,
        retries: int = 20,
        lexicon: SensitiveLexicon | None = None,
    ) -> tuple[str, Article] | None:
        """A recent article with its long summary, or None when nothing
        recent clears the filter."""
        if category is not None and category not in NEWS_CATEGORIES:
            raise ValueError(f"unknown news category {category!r}")
        pool = self.recent(now=now, window_days=window_days)
        if category is not None:
            pool = [a for a in pool if a.category == category]
        rng.shuffle(pool)
        return self._serve(pool, "long", retries, lexicon)

    def keyword_news(
        self,
        keyword: str,
        rng: random.Random,
        now: datetime | None = None,
        window_days: int = 30,
        retries: int = 20,
        lexicon: SensitiveLexicon | None = None,
    ) -> tuple[str, Article] | None:
        """Most recent articles whose keyword list contains the exact
        normalized keyword; no substring matching, so close lookalike
        keywords never cross-match."""
        needle = normalize(keyword).normalized
        if not needle:
            return None
        pool = [a for a in self.recent(now=now, window_days=window_days) if needle in a.keywords]
        return self._serve(pool, "long", retries, lexicon)
