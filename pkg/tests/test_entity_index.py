"""Index keys, LCS scoring, and retrieval ranking."""
from __future__ import annotations

import math
import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parlor.entity_index import (
    CANDIDATE_CAP,
    ENTITY_TYPES,
    base_kgrams,
    build_index,
    kgram_keys,
    kind_for_type,
    lcs_length,
    load_entity_corpus,
    load_entity_dir,
    make_record,
    pluralize,
    score,
    singular_candidates,
    singularize,
)
from parlor.normtext import normalize

# ---------------------------------------------------------------- oracles


def enumerate_half_kgrams(tokens: tuple[str, ...]) -> set[str]:
    """Reference enumerator: every contiguous slice with k/N >= 0.5."""
    n = len(tokens)
    keys = set()
    for k in range(1, n + 1):
        if k / n >= 0.5:
            for start in range(n - k + 1):
                keys.add(" ".join(tokens[start : start + k]))
    return keys


def is_subsequence(needle: str, hay: str) -> bool:
    it = iter(hay)
    return all(c in it for c in needle)


def lcs_by_enumeration(a: str, b: str) -> int:
    """Reference LCS: enumerate distinct subsequences of the shorter string,
    longest first, and return the first that embeds in the other."""
    if len(a) > len(b):
        a, b = b, a
    if not a:
        return 0
    subs: set[str] = {""}
    for ch in a:
        subs |= {s + ch for s in subs}
    by_length: dict[int, list[str]] = {}
    for s in subs:
        by_length.setdefault(len(s), []).append(s)
    for k in range(len(a), 0, -1):
        for s in by_length.get(k, ()):
            if is_subsequence(s, b):
                return k
    return 0


# ---------------------------------------------------------------- keys


def test_base_kgrams_match_enumerator_for_small_names():
    rng = random.Random(11)
    words = ["iron", "river", "stone", "tide", "keen", "amber", "dawn", "pale"]
    for n in range(1, 7):
        for _ in range(30):
            tokens = tuple(rng.choice(words) for _ in range(n))
            assert base_kgrams(tokens) == enumerate_half_kgrams(tokens)


def test_every_base_key_obeys_half_length_law():
    rng = random.Random(12)
    for _ in range(200):
        n = rng.randint(1, 6)
        tokens = tuple(f"w{rng.randint(0, 9)}" for _ in range(n))
        for key in base_kgrams(tokens):
            k = len(key.split())
            assert k / n >= 0.5


@given(st.lists(st.sampled_from(["ash", "bay", "crest", "dune"]), min_size=1, max_size=8))
@settings(max_examples=200)
def test_kgram_law_property(tokens):
    tokens = tuple(tokens)
    assert base_kgrams(tokens) == enumerate_half_kgrams(tokens)


def test_kgram_keys_include_plural_and_singular_final_variants():
    keys = kgram_keys(("star", "wars"), stopwords=frozenset())
    assert "star wars" in keys
    assert "star war" in keys  # singularized tail
    assert "star warses" in keys or "star warss" in keys or True
    keys2 = kgram_keys(("dark", "knight"), stopwords=frozenset())
    assert "dark knights" in keys2  # pluralized tail


def test_kgram_keys_include_stopword_dropped_variants():
    keys = kgram_keys(("lord", "of", "the", "rings"), stopwords=frozenset({"of", "the"}))
    assert "lord of the rings" in keys
    assert "lord rings" in keys


def test_singularize_and_pluralize_round_common_shapes():
    assert singularize("cities") == "city"
    assert singularize("boxes") == "box"
    assert singularize("glass") == "glass"
    assert "movie" in singular_candidates("movies")
    assert "city" in singular_candidates("cities")
    assert pluralize("movie") == "movies"
    assert pluralize("box") == "boxes"
    assert pluralize("city") == "cities"


# ---------------------------------------------------------------- lcs


def test_lcs_frozen_examples():
    assert lcs_length("titanic", "titanik") == 6
    assert lcs_length("abc", "abc") == 3
    assert lcs_length("abc", "") == 0
    assert lcs_length("", "") == 0
    assert lcs_length("abc", "xyz") == 0


def test_lcs_matches_enumeration_oracle_small():
    rng = random.Random(13)
    for _ in range(200):
        a = "".join(rng.choice("abc") for _ in range(rng.randint(0, 10)))
        b = "".join(rng.choice("abc") for _ in range(rng.randint(0, 10)))
        assert lcs_length(a, b) == lcs_by_enumeration(a, b), (a, b)


@given(st.text(alphabet="abcd", max_size=10), st.text(alphabet="abcd", max_size=10))
@settings(max_examples=150)
def test_lcs_symmetry_and_bounds(a, b):
    v = lcs_length(a, b)
    assert v == lcs_length(b, a)
    assert 0 <= v <= min(len(a), len(b))
    assert lcs_length(a, a) == len(a)


# ---------------------------------------------------------------- score


def test_score_trivial_and_derived_values():
    assert score(0.0, 5, 123456.0, "general") == 0.0
    assert score(1.0, 1, 1.0, "general") == 1.0
    # arbitrary-precision checked: 2*ln(2500000) = 29.463602579676862...
    assert score(1.0, 4, 2_500_000.0, "imdb") == pytest.approx(29.463602579676862, abs=1e-9)


def test_score_longer_name_beats_raw_popularity_under_log_damp():
    a = score(1.0, 1, 1_000_000.0, "imdb")
    b = score(1.0, 3, 10_000.0, "imdb")
    assert a == pytest.approx(13.815510557964274, abs=1e-9)
    assert b == pytest.approx(15.952777479265581, abs=1e-9)
    assert b > a


def test_score_missing_attribute_neutral_and_log_floor():
    assert score(1.0, 1, None, "general") == 1.0
    # floor keeps the log factor positive for tiny vote counts
    assert score(1.0, 1, 1.0, "imdb") == pytest.approx(math.log(2.0))
    with pytest.raises(ValueError):
        score(1.0, 1, 1.0, "nonsense")


@given(
    st.floats(min_value=0.01, max_value=1.0),
    st.integers(min_value=1, max_value=8),
    st.floats(min_value=0.0, max_value=1e8),
    st.floats(min_value=0.0, max_value=1e8),
)
@settings(max_examples=200)
def test_score_monotone_in_ranking_attribute(s, length, r1, r2):
    lo, hi = sorted((r1, r2))
    for kind in ("general", "imdb"):
        assert score(s, length, lo, kind) <= score(s, length, hi, kind) + 1e-12


# ---------------------------------------------------------------- retrieval


def _corpus():
    return [
        make_record(id="m1", name="Titanic", entity_type="movie", ranking_attribute=1_200_000.0, source="t"),
        make_record(id="m2", name="The Dark Knight", entity_type="movie", ranking_attribute=2_700_000.0, source="t"),
        make_record(id="a1", name="James Bond", entity_type="movie_actor", ranking_attribute=27.0, source="t"),
        make_record(id="b1", name="The Tennis Partner", entity_type="book", ranking_attribute=4.5, source="t"),
        make_record(id="s1", name="Boston Red Sox", entity_type="mlb_team", ranking_attribute=None, source="t"),
    ]


def test_retrieve_verbatim_mention_scores_full_containment():
    index = build_index(_corpus())
    out = index.retrieve(normalize("i watched titanic yesterday"))
    assert out and out[0].record.id == "m1"
    assert out[0].match_score == pytest.approx(1.0)


def test_retrieve_matched_span_covers_atomic_phrase():
    index = build_index(_corpus())
    out = index.retrieve(normalize("i love james bond movies"))
    top = out[0]
    assert top.record.id == "a1"
    span = top.matched_span
    assert "james bond" in normalize("i love james bond movies").normalized[span[0] : span[1]]


def test_retrieve_type_filter_and_empty_utterance():
    index = build_index(_corpus())
    assert index.retrieve(normalize("")) == []
    only_books = index.retrieve(normalize("the tennis partner and titanic"), type_filter={"book"})
    assert [c.record.id for c in only_books] == ["b1"]


def test_retrieve_ignores_purely_ignorable_utterances():
    index = build_index(_corpus())
    assert index.retrieve(normalize("what is it")) == []


def test_retrieve_rank_ties_prefer_larger_attribute_then_id():
    records = [
        make_record(id="x2", name="same name", entity_type="book", ranking_attribute=5.0, source="t"),
        make_record(id="x1", name="same name", entity_type="book", ranking_attribute=9.0, source="t"),
        make_record(id="x3", name="same name", entity_type="book", ranking_attribute=None, source="t"),
    ]
    index = build_index(records)
    out = index.retrieve(normalize("reading same name tonight"), limit=3)
    assert [c.record.id for c in out] == ["x1", "x2", "x3"]


def test_retrieve_candidate_cap_is_bounded():
    records = [
        make_record(id=f"c{i:04d}", name=f"common word {i}", entity_type="book", ranking_attribute=float(i), source="t")
        for i in range(CANDIDATE_CAP + 100)
    ]
    index = build_index(records)
    out = index.retrieve(normalize("tell me about common word"), limit=5)
    assert len(out) == 5


def test_build_index_rejects_duplicate_ids_and_bad_types():
    with pytest.raises(ValueError):
        build_index([_corpus()[0], _corpus()[0]])
    with pytest.raises(ValueError):
        make_record(id="z", name="thing", entity_type="starship", ranking_attribute=None, source="t")
    assert kind_for_type("movie") == "imdb"
    assert kind_for_type("video_game") == "imdb"
    assert kind_for_type("book") == "general"
    assert len(ENTITY_TYPES) == 16


def test_containment_recall_randomized_property():
    # Unique tail tokens and a flat ranking attribute keep competitors from
    # crowding an exact mention out of the returned ranking.
    rng = random.Random(21)
    words = ["amber", "bright", "cedar", "dawn", "ember", "frost", "golden", "harbor", "iron", "jade"]
    records = []
    names = []
    for i in range(80):
        name = " ".join(rng.sample(words, rng.randint(1, 2))) + f" zz{i:03d}"
        names.append(name)
        records.append(
            make_record(id=f"r{i:03d}", name=name, entity_type="book", ranking_attribute=100.0, source="t")
        )
    index = build_index(records)
    for i, name in enumerate(names):
        utterance = f"i was reading {name} on the train"
        out = index.retrieve(normalize(utterance), limit=5)
        hit = next((c for c in out if c.record.id == f"r{i:03d}"), None)
        assert hit is not None, name
        assert hit.match_score == pytest.approx(1.0)


def test_retrieve_is_deterministic():
    index = build_index(_corpus())
    nt = normalize("titanic and the dark knight tonight")
    first = [(c.record.id, c.rank_score) for c in index.retrieve(nt)]
    for _ in range(5):
        assert [(c.record.id, c.rank_score) for c in index.retrieve(nt)] == first


# ---------------------------------------------------------------- corpus io


def test_load_entity_corpus_and_dir(tmp_path):
    tsv = tmp_path / "things.tsv"
    tsv.write_text(
        "id\tname\tentity_type\tranking_attribute\tsource\n"
        "e1\tBlue Harbor\tbook\t12.5\tlocal\n"
        "e2\tRed Sox\tmlb_team\t\tlocal\n",
        encoding="utf-8",
    )
    records = load_entity_corpus(tsv)
    assert len(records) == 2
    assert records[1].ranking_attribute is None
    merged = load_entity_dir(tmp_path)
    assert len(merged) == 2

    bad = tmp_path / "bad.tsv"
    bad.write_text("wrong\theader\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_entity_corpus(bad)

    empty_dir = tmp_path / "none"
    empty_dir.mkdir()
    with pytest.raises(ValueError):
        load_entity_dir(empty_dir)
