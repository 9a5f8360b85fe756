"""Tests for news ingestion, categorization, and retrieval."""
import json
import random
import re
from datetime import timedelta

import pytest

from parlor.news import (
    NEWS_CATEGORIES,
    Article,
    NewsIndex,
    _fingerprint,
    categorize,
    ingest_articles,
    is_english,
    split_sentences,
    summarize,
)
from parlor.safety import check_response
from tests.conftest import FIXED_NOW

ID_SHAPE = re.compile(r"^n\d{13}\d{6}$")


def article(id, headline, body, published_at, keywords=(), category="business") -> Article:
    return Article(
        id=id,
        headline=headline,
        body=body,
        published_at=published_at,
        keywords=tuple(keywords),
        category=category,
        fingerprint=_fingerprint(headline, body),
    )


def test_is_english_accepts_plain_text():
    assert is_english("The committee approved the budget after a long debate on Tuesday.")


def test_is_english_rejects_german_and_gibberish():
    assert not is_english("Dieser Absatz enthaelt keine englischen Funktionsworte irgendeiner Art.")
    assert not is_english("zzqx blarg fnord klaatu verada nikto splorch")
    assert not is_english("")
    assert not is_english("今日は良い天気ですねと言いました")


def test_categorize_by_keyword_tables():
    assert categorize("Pitcher throws shutout", "The baseball team won the playoff game.", ("baseball",)) == "sports"
    assert categorize("Council votes held", "The election results and the senate hearing dominated.", ()) == "politics"
    assert categorize("Quarterly numbers", "Nothing notable happened anywhere.", ()) == "business"


def test_split_sentences_guards_abbreviations():
    text = "Dr. Smith arrived early. He left at noon. The end"
    sentences = split_sentences(text)
    assert sentences == ["Dr. Smith arrived early.", "He left at noon.", "The end"]


def test_split_sentences_handles_stacked_punctuation():
    assert split_sentences("What?! Really. Yes.") == ["What?!", "Really.", "Yes."]


def test_summarize_styles():
    body = "First point here. Second point there. Third one too. Fourth is hidden."
    item = article("n1", "Headline", body, FIXED_NOW)
    assert summarize(item, style="long") == "First point here. Second point there. Third one too."
    assert summarize(item, style="short") == "First point here."
    with pytest.raises(ValueError, match="summary style"):
        summarize(item, style="haiku")


def test_summarize_empty_body_falls_back_to_headline():
    item = article("n1", "Just a headline", "", FIXED_NOW)
    assert summarize(item) == "Just a headline"


def test_ingest_accepts_good_and_rejects_junk(news_feed):
    feed = news_feed(count=20)
    articles = ingest_articles(feed, now_ms=1_700_000_000_000)
    # 20 clean records; the trailing junk (bad JSON, missing body, German
    # text, duplicate) is dropped.
    assert len(articles) == 20
    for item in articles:
        assert ID_SHAPE.match(item.id)
        assert item.headline == item.headline.strip()
        assert not re.search(r"[^A-Za-z0-9\s.,!?':;%$()\-]", item.headline)
        assert not re.search(r"[^A-Za-z0-9\s.,!?':;%$()\-]", item.body)
        assert item.category in NEWS_CATEGORIES
        assert all(k == k.lower() for k in item.keywords)
    ids = [a.id for a in articles]
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)


def test_ingest_rejects_headline_losing_too_much(tmp_path):
    feed = tmp_path / "feed.jsonl"
    feed.write_text(
        json.dumps(
            {
                "headline": "★★★★★★ Breaking",
                "body": "The quiet story behind the market is that sales improved again this quarter.",
                "published_at": FIXED_NOW.isoformat(),
            }
        )
        + "\n"
    )
    assert ingest_articles(feed, now_ms=1) == []


def test_ingest_handles_zulu_timestamps(tmp_path):
    feed = tmp_path / "feed.jsonl"
    feed.write_text(
        json.dumps(
            {
                "headline": "Shipping lanes reopen after the storm",
                "body": "Ports resumed loading on Monday. Crews worked through the weekend to clear debris.",
                "published_at": "2026-08-10T12:00:00Z",
                "keywords": ["Shipping"],
            }
        )
        + "\n"
    )
    articles = ingest_articles(feed, now_ms=1)
    assert len(articles) == 1
    assert articles[0].published_at.tzinfo is not None
    assert articles[0].keywords == ("shipping",)


def test_ingest_batches_keep_monotone_ids(news_feed):
    feed = news_feed(count=5)
    first = ingest_articles(feed, now_ms=1_000)
    second = ingest_articles(feed, now_ms=2_000)
    assert max(a.id for a in first) < min(a.id for a in second)


def test_index_add_dedupes_by_fingerprint_and_id():
    index = NewsIndex()
    a = article("n1", "Same story", "Same body here.", FIXED_NOW)
    assert index.add(a)
    assert not index.add(article("n2", "Same story", "Same body here.", FIXED_NOW))
    assert not index.add(article("n1", "Other story", "Fresh body text.", FIXED_NOW))
    assert len(index.articles) == 1


def test_index_ingest_file_skips_known_fingerprints(news_feed):
    index = NewsIndex()
    feed = news_feed(count=10)
    assert index.ingest_file(feed, now_ms=1_000) == 10
    assert index.ingest_file(feed, now_ms=2_000) == 0


def test_index_save_load_round_trip(tmp_path, news_feed):
    index = NewsIndex()
    index.ingest_file(news_feed(count=10), now_ms=1_000)
    path = tmp_path / "news.jsonl"
    index.save(path)
    loaded = NewsIndex.load(path)
    assert [a.to_dict() for a in loaded.articles] == [a.to_dict() for a in sorted(index.articles, key=lambda a: a.id)]


def test_recent_window_excludes_old_and_future():
    index = NewsIndex()
    fresh = article("n2", "Fresh story", "Body text.", FIXED_NOW - timedelta(days=1))
    edge = article("n3", "Edge story", "Other text.", FIXED_NOW - timedelta(days=29))
    stale = article("n1", "Stale story", "Old text.", FIXED_NOW - timedelta(days=31))
    future = article("n4", "Future story", "Tomorrow text.", FIXED_NOW + timedelta(days=1))
    for a in (fresh, edge, stale, future):
        index.add(a)
    pool = index.recent(now=FIXED_NOW, window_days=30)
    assert [a.id for a in pool] == ["n2", "n3"]


def test_random_news_serves_recent_with_summary(news_feed):
    index = NewsIndex()
    index.ingest_file(news_feed(count=20), now_ms=1_000)
    cutoff = FIXED_NOW - timedelta(days=30)
    for seed in range(10):
        served = index.random_news(random.Random(seed), now=FIXED_NOW)
        assert served is not None
        text, item = served
        assert cutoff <= item.published_at <= FIXED_NOW
        assert text.startswith(item.headline)
        assert not check_response(text).blocked


def test_random_news_category_filter(news_feed):
    index = NewsIndex()
    index.ingest_file(news_feed(count=20), now_ms=1_000)
    for seed in range(6):
        served = index.random_news(random.Random(seed), category="sports", now=FIXED_NOW)
        if served is None:
            continue
        assert served[1].category == "sports"
    with pytest.raises(ValueError, match="unknown news category"):
        index.random_news(random.Random(0), category="weather")


def test_random_news_empty_index():
    assert NewsIndex().random_news(random.Random(0), now=FIXED_NOW) is None


def test_keyword_news_requires_exact_keyword(news_feed):
    index = NewsIndex()
    index.ingest_file(news_feed(count=20), now_ms=1_000)
    served = index.keyword_news("baseball", random.Random(0), now=FIXED_NOW)
    assert served is not None
    assert "baseball" in served[1].keywords
    assert index.keyword_news("base", random.Random(0), now=FIXED_NOW) is None
    assert index.keyword_news("", random.Random(0), now=FIXED_NOW) is None
    normalized = index.keyword_news("Baseball!", random.Random(0), now=FIXED_NOW)
    assert normalized is not None and "baseball" in normalized[1].keywords


def test_served_news_skips_filtered_articles():
    index = NewsIndex()
    blocked_new = article(
        "n9", "Markets watch", "You should buy a bond today. Rates moved again.", FIXED_NOW - timedelta(days=1), ["markets"]
    )
    clean_old = article(
        "n1", "Harvest festival", "The town gathered for the harvest festival. Everyone enjoyed the music.", FIXED_NOW - timedelta(days=9), ["markets"]
    )
    index.add(blocked_new)
    index.add(clean_old)
    served = index.keyword_news("markets", random.Random(0), now=FIXED_NOW)
    assert served is not None
    assert served[1].id == "n1"


def test_served_news_returns_none_when_all_blocked():
    index = NewsIndex()
    index.add(
        article("n9", "Markets watch", "You should buy a bond today.", FIXED_NOW - timedelta(days=1), ["markets"])
    )
    assert index.keyword_news("markets", random.Random(0), now=FIXED_NOW) is None
