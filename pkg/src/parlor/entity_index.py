"""Inverted k-gram index over entity names with LCS-based match scoring.

Index keys are the contiguous k-grams of a normalized entity name whose
token count k is at least half the name's token count N, so any mention
that keeps half the name (plus simple plural and stop-word variants)
still lands on a key. Candidates from key lookups are then scored by
character-level longest-common-subsequence against the whole utterance.
"""
from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .normtext import NormalizedText, load_lexicons, normalize

log = logging.getLogger(__name__)

ENTITY_TYPES = frozenset(
    {
        "movie",
        "movie_actor",
        "book",
        "book_author",
        "music",
        "music_artist",
        "video_game",
        "nfl_player",
        "nfl_team",
        "soccer_player",
        "soccer_club",
        "nba_player",
        "nba_team",
        "mlb_player",
        "mlb_team",
        "tennis_player",
    }
)

# Types whose popularity figures span several orders of magnitude (vote
# counts), damped with log instead of sqrt.
IMDB_KINDS = frozenset({"movie", "video_game"})

CANDIDATE_CAP = 256

_CORPUS_COLUMNS = ["id", "name", "entity_type", "ranking_attribute", "source"]


@dataclass(frozen=True)
class EntityRecord:
    id: str
    name: str
    entity_type: str
    ranking_attribute: float | None
    source: str
    norm_name: str
    norm_tokens: tuple[str, ...]

    @property
    def token_count(self) -> int:
        return len(self.norm_tokens)


@dataclass(frozen=True)
class MatchCandidate:
    record: EntityRecord
    match_score: float
    rank_score: float
    matched_span: tuple[int, int]
    key_hits: int


def make_record(
    id: str,
    name: str,
    entity_type: str,
    ranking_attribute: float | None = None,
    source: str = "",
) -> EntityRecord:
    if entity_type not in ENTITY_TYPES:
        raise ValueError(f"unknown entity_type {entity_type!r} for entity {id}")
    nt = normalize(name)
    if not nt.tokens:
        raise ValueError(f"entity {id} has an empty normalized name")
    return EntityRecord(
        id=id,
        name=name,
        entity_type=entity_type,
        ranking_attribute=ranking_attribute,
        source=source,
        norm_name=nt.normalized,
        norm_tokens=nt.tokens,
    )


def singular_candidates(word: str) -> set[str]:
    """Plausible singular spellings; -ies is ambiguous (city/cities vs
    movie/movies) so both resolutions are offered."""
    out: set[str] = set()
    if word.endswith("ies") and len(word) > 4:
        out.add(word[:-3] + "y")
        out.add(word[:-1])
    for suffix in ("ses", "xes", "zes", "ches", "shes"):
        if word.endswith(suffix):
            out.add(word[:-2])
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        out.add(word[:-1])
    return out


def singularize(word: str) -> str:
    """Single best-guess singular: -ies resolves to -y, -es endings shed the
    suffix, trailing -s drops. Ambiguous words keep every spelling in
    singular_candidates; this picks one for display purposes."""
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    for suffix in ("ses", "xes", "zes", "ches", "shes"):
        if word.endswith(suffix):
            return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        return word[:-1]
    return word


def pluralize(word: str) -> str:
    if word.endswith("y") and len(word) > 2 and word[-2] not in "aeiou":
        return word[:-1] + "ies"
    if word.endswith(("s", "x", "z", "ch", "sh")):
        return word + "es"
    return word + "s"


def base_kgrams(tokens: tuple[str, ...] | list[str]) -> set[str]:
    """All contiguous k-grams with k/N >= 0.5."""
    n = len(tokens)
    if n == 0:
        return set()
    out: set[str] = set()
    min_k = math.ceil(n / 2)
    for k in range(min_k, n + 1):
        for start in range(n - k + 1):
            out.add(" ".join(tokens[start:start + k]))
    return out


def _final_token_variants(key: str) -> set[str]:
    head, _, last = key.rpartition(" ")
    variants = set()
    for alt in singular_candidates(last) | {pluralize(last)}:
        if alt != last:
            variants.add(f"{head} {alt}" if head else alt)
    return variants


def kgram_keys(
    tokens: tuple[str, ...] | list[str],
    stopwords: frozenset[str] | None = None,
) -> set[str]:
    """Index keys for one entity name: base k-grams plus plural/singular
    variants of each key's final token plus stop-word-dropped variants."""
    if stopwords is None:
        stopwords = _default_stopwords()
    keys = base_kgrams(tokens)
    variants: set[str] = set()
    for key in keys:
        variants |= _final_token_variants(key)
        kept = [t for t in key.split() if t not in stopwords]
        if kept and len(kept) < len(key.split()):
            variants.add(" ".join(kept))
    return keys | variants


_STOPWORDS_CACHE: frozenset[str] | None = None


def _default_stopwords() -> frozenset[str]:
    global _STOPWORDS_CACHE
    if _STOPWORDS_CACHE is None:
        from .normtext import _data_dir, _read_lines

        _STOPWORDS_CACHE = frozenset(_read_lines(_data_dir() / "lexicons" / "stopwords.txt"))
    return _STOPWORDS_CACHE


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence of two strings."""
    if not a or not b:
        return 0
    if a in b:
        return len(a)
    if b in a:
        return len(b)
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        append = cur.append
        for j, cb in enumerate(b, 1):
            if ca == cb:
                v = prev[j - 1] + 1
            else:
                left = cur[j - 1]
                up = prev[j]
                v = up if up >= left else left
            append(v)
        prev = cur
    return prev[-1]


def score(match_score: float, token_count: int, ranking_attribute: float | None, kind: str) -> float:
    """Heuristic rank: containment score scaled by name length and popularity.

    kind "imdb" uses a natural-log damp on the popularity figure (floored at
    2 so the log stays positive); anything else uses a square root, with a
    missing figure counting as 1.
    """
    if kind == "imdb":
        r_eff = max(ranking_attribute if ranking_attribute is not None else 1.0, 2.0)
        return match_score * math.sqrt(token_count) * math.log(r_eff)
    if kind != "general":
        raise ValueError(f"unknown ranking kind {kind!r}")
    r_eff = ranking_attribute if ranking_attribute is not None else 1.0
    return match_score * math.sqrt(token_count) * math.sqrt(r_eff)


def kind_for_type(entity_type: str) -> str:
    return "imdb" if entity_type in IMDB_KINDS else "general"


class SearchIndex:
    """k-gram inverted index mapping keys to entity ids."""

    def __init__(self) -> None:
        self.records: dict[str, EntityRecord] = {}
        self.key_map: dict[str, set[str]] = {}

    def __len__(self) -> int:
        return len(self.records)

    @property
    def key_count(self) -> int:
        return len(self.key_map)

    def add(self, record: EntityRecord) -> None:
        if record.id in self.records:
            raise ValueError(f"duplicate entity id {record.id!r}")
        self.records[record.id] = record
        for key in kgram_keys(record.norm_tokens):
            self.key_map.setdefault(key, set()).add(record.id)

    def retrieve(
        self,
        nt: NormalizedText,
        limit: int = 5,
        type_filter: frozenset[str] | set[str] | None = None,
    ) -> list[MatchCandidate]:
        """Rank entities mentioned in an utterance.

        Looks up every k-gram of the utterance's non-ignorable tokens, caps
        the candidate set at the entities with the most key hits, then scores
        each by LCS containment and the popularity heuristic.
        """
        positions = [i for i, ignorable in enumerate(nt.ignorable_mask) if not ignorable]
        if not positions:
            return []
        filtered = [nt.tokens[i] for i in positions]

        hits: Counter[str] = Counter()
        # For each candidate, the original-token extent of every key hit.
        extents: dict[str, tuple[int, int]] = {}
        key_map = self.key_map
        m = len(filtered)
        for k in range(1, m + 1):
            for start in range(m - k + 1):
                key = " ".join(filtered[start:start + k])
                ids = key_map.get(key)
                if not ids:
                    continue
                lo = positions[start]
                hi = positions[start + k - 1]
                for entity_id in ids:
                    hits[entity_id] += 1
                    if entity_id in extents:
                        old_lo, old_hi = extents[entity_id]
                        extents[entity_id] = (min(old_lo, lo), max(old_hi, hi))
                    else:
                        extents[entity_id] = (lo, hi)

        if not hits:
            return []
        capped = sorted(hits.items(), key=lambda kv: (-kv[1], kv[0]))[:CANDIDATE_CAP]

        # Character offsets of each token within the normalized utterance.
        offsets: list[tuple[int, int]] = []
        pos = 0
        for tok in nt.tokens:
            offsets.append((pos, pos + len(tok)))
            pos += len(tok) + 1

        utterance = nt.normalized
        candidates: list[MatchCandidate] = []
        for entity_id, hit_count in capped:
            record = self.records[entity_id]
            if type_filter is not None and record.entity_type not in type_filter:
                continue
            s = lcs_length(record.norm_name, utterance) / len(record.norm_name)
            h = score(s, record.token_count, record.ranking_attribute, kind_for_type(record.entity_type))
            lo, hi = extents[entity_id]
            candidates.append(
                MatchCandidate(
                    record=record,
                    match_score=s,
                    rank_score=h,
                    matched_span=(offsets[lo][0], offsets[hi][1]),
                    key_hits=hit_count,
                )
            )

        def sort_key(c: MatchCandidate) -> tuple:
            r = c.record.ranking_attribute
            return (-c.rank_score, -(r if r is not None else -1.0), c.record.id)

        candidates.sort(key=sort_key)
        return candidates[:limit]


def build_index(records: list[EntityRecord]) -> SearchIndex:
    """Index a corpus; content is order-independent, duplicate ids rejected."""
    index = SearchIndex()
    for record in sorted(records, key=lambda r: r.id):
        index.add(record)
    return index


def load_entity_corpus(path: str | Path) -> list[EntityRecord]:
    """Read one TSV corpus file: id, name, entity_type, ranking_attribute, source."""
    path = Path(path)
    records: list[EntityRecord] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header != _CORPUS_COLUMNS:
            raise ValueError(f"{path}: expected header {_CORPUS_COLUMNS}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(_CORPUS_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(_CORPUS_COLUMNS)} columns, got {len(row)}")
            entity_id, name, entity_type, attr, source = row
            ranking = float(attr) if attr.strip() else None
            records.append(make_record(entity_id, name, entity_type, ranking, source))
    return records


def load_entity_dir(directory: str | Path) -> list[EntityRecord]:
    """Read and merge every *.tsv corpus in a directory."""
    directory = Path(directory)
    records: list[EntityRecord] = []
    seen: set[str] = set()
    for path in sorted(directory.glob("*.tsv")):
        for record in load_entity_corpus(path):
            if record.id in seen:
                raise ValueError(f"duplicate entity id {record.id!r} in {path}")
            seen.add(record.id)
            records.append(record)
    if not records:
        raise ValueError(f"no entity corpora found in {directory}")
    return records
