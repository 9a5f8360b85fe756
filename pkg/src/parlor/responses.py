"""Response pooling and ranking.

Several generators each offer a candidate reply for the turn. A priority
table keyed on (intent, topic) picks by rule when it has a row; otherwise a
weighted quality polynomial scores every candidate and the best one wins.
"""
from __future__ import annotations

import csv
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .normtext import INTENTS, TOPICS, _data_dir, load_lexicons, normalize

log = logging.getLogger(__name__)

GENERATOR_KINDS = ("ckt", "mini_ckt", "news", "knowledge_qa_stub", "chitchat_stub", "joke")

# Tie-break order for the polynomial ranker: structured sources beat stubs.
_KIND_RANK = {kind: i for i, kind in enumerate(GENERATOR_KINDS)}

METRIC_NAMES = ("comprehensible", "interesting", "engaging", "erroneous", "on_topic")

_PRONOUNCEABLE = re.compile(r"[^A-Za-z0-9\s.,!?':;%\-]")
_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")


@dataclass(frozen=True)
class Generator:
    """A named response source; produce() returns text or None to abstain."""

    name: str
    kind: str
    produce: Callable[[], str | None]

    def __post_init__(self) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")


@dataclass
class CandidateResponse:
    generator: str
    kind: str
    text: str
    metrics: dict[str, float] = field(default_factory=dict)
    score: float | None = None


def gather(generators: Sequence[Generator], timeout: float = 1.0) -> list[CandidateResponse]:
    """Run every generator concurrently and collect non-empty offerings.

    A generator that raises or exceeds the timeout is logged and dropped;
    the rest still count. Results come back ordered by generator name so
    downstream ranking is reproducible.
    """
    if not generators:
        return []
    candidates: list[CandidateResponse] = []
    with ThreadPoolExecutor(max_workers=len(generators)) as pool:
        futures = [(gen, pool.submit(gen.produce)) for gen in generators]
        for gen, future in futures:
            try:
                text = future.result(timeout=timeout)
            except FutureTimeout:
                log.warning("generator %s timed out after %.2fs", gen.name, timeout)
                future.cancel()
                continue
            except Exception:
                log.exception("generator %s failed", gen.name)
                continue
            if text is None or not text.strip():
                continue
            candidates.append(CandidateResponse(generator=gen.name, kind=gen.kind, text=text.strip()))
    candidates.sort(key=lambda c: c.generator)
    return candidates


class PriorityTable:
    """Rule table mapping (intent, topic) to an ordered generator preference."""

    def __init__(self, rows: dict[tuple[str, str], tuple[str, ...]]) -> None:
        self.rows = dict(rows)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "PriorityTable":
        path = Path(path) if path else _data_dir() / "priority_table.tsv"
        rows: dict[tuple[str, str], tuple[str, ...]] = {}
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter="\t")
            for lineno, row in enumerate(reader, start=1):
                if not row or row[0].startswith("#"):
                    continue
                if len(row) != 3:
                    raise ValueError(f"{path}:{lineno}: expected intent, topic, generators")
                intent, topic, names = (cell.strip() for cell in row)
                if intent not in INTENTS:
                    raise ValueError(f"{path}:{lineno}: unknown intent {intent!r}")
                if topic not in TOPICS:
                    raise ValueError(f"{path}:{lineno}: unknown topic {topic!r}")
                ordered = tuple(n.strip() for n in names.split(",") if n.strip())
                if not ordered:
                    raise ValueError(f"{path}:{lineno}: empty generator list")
                rows[(intent, topic)] = ordered
        return cls(rows)

    def lookup(self, intent: str, topic: str) -> tuple[str, ...] | None:
        return self.rows.get((intent, topic))


def rank_rule_based(
    candidates: Sequence[CandidateResponse], intent: str, topic: str, table: PriorityTable
) -> CandidateResponse | None:
    """Pick the first table-preferred generator that actually produced text."""
    preference = table.lookup(intent, topic)
    if preference is None:
        return None
    by_name = {c.generator: c for c in candidates}
    for name in preference:
        candidate = by_name.get(name)
        if candidate is not None:
            return candidate
    return None


def score_metrics(candidate: CandidateResponse, topic_keywords: frozenset[str]) -> dict[str, float]:
    """Fill the candidate's quality metrics, each in [0, 1].

    on_topic counts distinct topic keyword hits, saturating at three.
    The others are cheap text heuristics: word shape for comprehensible,
    vocabulary spread for interesting, a question for engaging, and unfilled
    templates or near-empty text for erroneous.
    """
    text = candidate.text
    nt = normalize(text)
    tokens = nt.tokens
    wordlike = sum(1 for t in tokens if t.isalpha() or t.isdigit())
    comprehensible = wordlike / len(tokens) if tokens else 0.0
    lexicons = load_lexicons()
    content = {t for t in tokens if t not in lexicons.ignore}
    interesting = min(1.0, len(content) / 8.0)
    engaging = 1.0 if "?" in text else 0.4
    erroneous = 1.0 if (len(tokens) < 2 or "{" in text or "}" in text) else 0.0
    hits = len(content & topic_keywords)
    on_topic = min(1.0, hits / 3.0)
    metrics = {
        "comprehensible": comprehensible,
        "interesting": interesting,
        "engaging": engaging,
        "erroneous": erroneous,
        "on_topic": on_topic,
    }
    candidate.metrics = metrics
    return metrics


def rank_polynomial(
    candidates: Sequence[CandidateResponse], weights: dict[str, float]
) -> CandidateResponse | None:
    """Score each candidate with the weighted metric sum and take the best.

    Ties go to the more structured generator kind, then to the earlier name,
    so a rescaling of all positive weights never changes the winner.
    """
    if weights.get("erroneous", 0.0) > 0.0:
        raise ValueError("the erroneous weight must not be positive")
    best: CandidateResponse | None = None
    best_key: tuple[float, int, str] | None = None
    for candidate in candidates:
        if not candidate.metrics:
            raise ValueError(f"candidate from {candidate.generator} has no metrics")
        score = sum(weights.get(name, 0.0) * candidate.metrics.get(name, 0.0) for name in METRIC_NAMES)
        candidate.score = score
        key = (-score, _KIND_RANK.get(candidate.kind, len(_KIND_RANK)), candidate.generator)
        if best_key is None or key < best_key:
            best, best_key = candidate, key
    return best


def build_response(text: str, max_chars: int = 600) -> str:
    """Shape final output: drop unpronounceable characters, then truncate
    long replies at a sentence boundary under the character budget."""
    cleaned = _PRONOUNCEABLE.sub("", text)
    cleaned = re.sub(r"\s+", " ", cleaned).strip()
    if len(cleaned) <= max_chars:
        return cleaned
    window = cleaned[:max_chars]
    ends = [m.end() for m in _SENTENCE_END.finditer(window)]
    if ends:
        return window[: ends[-1]].rstrip()
    cut = window.rfind(" ")
    if cut > 0:
        return window[:cut].rstrip()
    return window


def load_qa_table(path: str | Path | None = None) -> dict[str, str]:
    """Question-answer lookups keyed by the normalized question text."""
    path = Path(path) if path else _data_dir() / "qa_table.tsv"
    table: dict[str, str] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected question and answer")
            question, answer = row
            key = normalize(question).normalized
            if not key or not answer.strip():
                raise ValueError(f"{path}:{lineno}: empty question or answer")
            table[key] = answer.strip()
    return table


class KnowledgeQa:
    """Tiny factual responder backed by the shipped question table."""

    def __init__(self, table: dict[str, str] | None = None) -> None:
        self.table = table if table is not None else load_qa_table()

    def answer(self, normalized_question: str) -> str | None:
        return self.table.get(normalized_question)


CHITCHAT_LINES = (
    "That is a fun way to put it. What else has been on your mind?",
    "I hear you. Tell me more about that?",
    "Fair enough! What would you like to chat about next?",
    "That sounds like quite a day. How are you feeling about it?",
    "I like the way you think. What got you interested in that?",
    "Good point. Want to keep going on this or switch gears?",
)


class Chitchat:
    """Fallback small talk so the engine always has something to say."""

    def __init__(self, lines: Sequence[str] = CHITCHAT_LINES) -> None:
        if not lines:
            raise ValueError("chitchat needs at least one line")
        self.lines = tuple(lines)

    def line(self, rng: random.Random) -> str:
        return rng.choice(self.lines)
