"""Shared fixtures: engines with fixed seeds, clocks, and news corpora."""
from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from parlor.config import EngineConfig
from parlor.dialog import Engine
from parlor.news import NewsIndex, ingest_articles
from parlor.store import MemoryStore

FIXED_NOW = datetime(2026, 8, 15, 10, 30, tzinfo=timezone.utc)


class Clock:
    """Injectable, advanceable time source."""

    def __init__(self, start: datetime = FIXED_NOW) -> None:
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **kwargs) -> None:
        self.now = self.now + timedelta(**kwargs)


@pytest.fixture
def clock() -> Clock:
    return Clock()


@pytest.fixture
def engine_factory(clock):
    def make(seed: int = 1337, store=None, news=None, now_fn=None, config: EngineConfig | None = None) -> Engine:
        return Engine(
            config=config or EngineConfig(seed=seed),
            store=store if store is not None else MemoryStore(),
            news=news if news is not None else NewsIndex(),
            now_fn=now_fn or clock,
        )

    return make


def write_news_fixture(path: Path, count: int, now: datetime, rng: random.Random) -> Path:
    """A mixed-quality article feed: mostly good, some junk to reject."""
    topics = [
        ("sports", "baseball", "The home team won the baseball game last night. Fans cheered for hours. The championship race is now wide open."),
        ("sports", "tennis", "The tennis final stretched to five sets. Both players showed great stamina. The trophy ceremony ran late."),
        ("sci_tech", "software", "A new software release improves battery life. Engineers spent a year on the update. Users report faster startup times."),
        ("business", "market", "The market closed higher today. Analysts credit strong retail earnings. Several firms raised their outlook."),
        ("politics", "election", "The city council election results arrived late. Turnout was higher than expected. The winners take office next month."),
    ]
    lines = []
    for i in range(count):
        category, keyword, body = topics[i % len(topics)]
        age_days = rng.randint(0, 45)
        published = now - timedelta(days=age_days, hours=rng.randint(0, 23))
        lines.append(
            json.dumps(
                {
                    "headline": f"{keyword.title()} update number {i} keeps readers talking",
                    "body": body + f" Report number {i} has the details.",
                    "published_at": published.isoformat(),
                    "keywords": [keyword, category],
                }
            )
        )
    # Junk records the ingester must reject or dedupe.
    lines.append("{not json at all")
    lines.append(json.dumps({"headline": "no body here", "published_at": now.isoformat()}))
    lines.append(
        json.dumps(
            {
                "headline": "Fremde Worte ohne englische Struktur hier",
                "body": "Dieser Absatz enthaelt keine englischen Funktionsworte irgendeiner Art.",
                "published_at": now.isoformat(),
                "keywords": ["auslandsnachrichten"],
            }
        )
    )
    if lines:
        first = json.loads(lines[0])
        lines.append(json.dumps(first))  # duplicate content
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def news_feed(tmp_path):
    def make(count: int = 20, now: datetime = FIXED_NOW, seed: int = 5) -> Path:
        return write_news_fixture(tmp_path / "feed.jsonl", count, now, random.Random(seed))

    return make
