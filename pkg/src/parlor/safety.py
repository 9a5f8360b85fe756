"""Sensitive-utterance filtering with masking, whitelists, and exemptions.

The scan runs over normalized text. Character spans covered by a retrieved
entity mention or a whitelisted phrase are exempt, and factual questions
about a flagged term pass through so they can be answered instead of
deflected. Responses the engine produces are screened with the same
blacklist but without the factual-question exemption.
"""
from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .entity_index import MatchCandidate
from .normtext import NormalizedText, UtteranceFeatures, _data_dir, _looks_like_question, normalize

log = logging.getLogger(__name__)

CATEGORIES = (
    "alcohol",
    "disability",
    "finance",
    "law",
    "emergency",
    "medicine",
    "politics",
    "psychology",
    "religion",
    "sex",
    "society",
    "violence",
    "offensive",
)

EXEMPTIONS = ("whitelist", "factual_question", "atomic_entity", "covid")

_FACTUAL_LEADS = frozenset({"what", "who", "when", "where", "which"})
_COPULA_AUX = frozenset(
    "is are was were am be do does did can could will would has have had may might".split()
)
_OPINION_BLOCKERS = ("do you think", "should i")


@dataclass(frozen=True)
class Verdict:
    blocked: bool
    category: str | None = None
    trigger: str | None = None
    exemption: str | None = None


def _compile_phrases(phrases: tuple[str, ...]) -> re.Pattern[str] | None:
    if not phrases:
        return None
    ordered = sorted({p for p in phrases if p}, key=len, reverse=True)
    return re.compile(r"\b(?:" + "|".join(re.escape(p) for p in ordered) + r")\b")


@dataclass(frozen=True)
class SensitiveLexicon:
    categories: dict[str, tuple[str, ...]]
    whitelist: tuple[str, ...]
    covid_whitelist: tuple[str, ...]

    def __post_init__(self) -> None:
        patterns = {name: _compile_phrases(phrases) for name, phrases in self.categories.items()}
        object.__setattr__(self, "_patterns", patterns)
        object.__setattr__(self, "_whitelist_re", _compile_phrases(self.whitelist))
        object.__setattr__(self, "_covid_re", _compile_phrases(self.covid_whitelist))

    def category_matches(self, text: str) -> list[tuple[int, int, str, str]]:
        """Every blacklist hit in the text as (start, end, category, trigger)."""
        found: list[tuple[int, int, str, str]] = []
        for category in sorted(self.categories):
            pattern = self._patterns[category]
            if pattern is None:
                continue
            for m in pattern.finditer(text):
                found.append((m.start(), m.end(), category, m.group(0)))
        found.sort(key=lambda t: (t[0], -(t[1] - t[0]), t[2]))
        return found

    def exempt_spans(self, text: str) -> list[tuple[int, int, str]]:
        """Whitelisted spans as (start, end, exemption_kind)."""
        spans: list[tuple[int, int, str]] = []
        if self._covid_re is not None:
            spans.extend((m.start(), m.end(), "covid") for m in self._covid_re.finditer(text))
        if self._whitelist_re is not None:
            spans.extend((m.start(), m.end(), "whitelist") for m in self._whitelist_re.finditer(text))
        return spans


def _normalize_phrases(lines: list[str]) -> tuple[str, ...]:
    out = []
    for line in lines:
        norm = normalize(line).normalized
        if norm:
            out.append(norm)
    return tuple(dict.fromkeys(out))


@lru_cache(maxsize=4)
def load_sensitive_lexicon(data_dir: str | None = None) -> SensitiveLexicon:
    from .normtext import _read_lines

    base = Path(data_dir) if data_dir else _data_dir()
    categories: dict[str, tuple[str, ...]] = {}
    for path in sorted((base / "sensitive").glob("*.txt")):
        categories[path.stem] = _normalize_phrases(_read_lines(path))
    missing = set(CATEGORIES) - set(categories)
    if missing:
        raise ValueError(f"missing sensitive category files: {sorted(missing)}")
    return SensitiveLexicon(
        categories=categories,
        whitelist=_normalize_phrases(_read_lines(base / "lexicons" / "whitelist.txt")),
        covid_whitelist=_normalize_phrases(_read_lines(base / "lexicons" / "covid_whitelist.txt")),
    )


def is_factual_question(nt: NormalizedText) -> bool:
    """True for information-seeking questions like "what is X".

    Only callable on question utterances. Opinion and advice framings
    ("do you think", "should i", "why") are not factual.
    """
    if not _looks_like_question(nt):
        raise ValueError("is_factual_question called on a non-question utterance")
    tokens = nt.tokens
    if not tokens:
        return False
    padded = f" {nt.normalized} "
    if tokens[0] == "why" or any(f" {p} " in padded for p in _OPINION_BLOCKERS):
        return False
    if tokens[0] in _FACTUAL_LEADS and len(tokens) > 1 and tokens[1] in _COPULA_AUX:
        return True
    if tokens[0] == "how" and len(tokens) > 2 and tokens[1] in {"many", "much"} and tokens[2] in _COPULA_AUX:
        return True
    return False


def _overlaps(start: int, end: int, spans: list[tuple[int, int]]) -> bool:
    return any(start < s_end and s_start < end for s_start, s_end in spans)


def check_utterance(
    nt: NormalizedText,
    entities: list[MatchCandidate] | None = None,
    features: UtteranceFeatures | None = None,
    lexicon: SensitiveLexicon | None = None,
) -> Verdict:
    """Screen a user utterance against the sensitive-category blacklists.

    Entity mention spans are masked first, whitelisted phrases next, and a
    factual question about a flagged term is let through for answering.
    The first hit that survives all three exemptions blocks the utterance.
    """
    lexicon = lexicon or load_sensitive_lexicon()
    text = nt.normalized
    entity_spans = [c.matched_span for c in entities or []]
    exempt = lexicon.exempt_spans(text)

    factual: bool | None = None
    first_exempt: Verdict | None = None
    for start, end, category, trigger in lexicon.category_matches(text):
        exemption: str | None = None
        if _overlaps(start, end, entity_spans):
            exemption = "atomic_entity"
        else:
            for s_start, s_end, kind in exempt:
                if start < s_end and s_start < end:
                    exemption = kind
                    break
        if exemption is None and _looks_like_question(nt):
            if factual is None:
                factual = is_factual_question(nt)
            if factual:
                exemption = "factual_question"
        if exemption is None:
            return Verdict(blocked=True, category=category, trigger=trigger)
        if first_exempt is None:
            first_exempt = Verdict(blocked=False, category=category, trigger=trigger, exemption=exemption)
    return first_exempt or Verdict(blocked=False)


def check_response(text: str, lexicon: SensitiveLexicon | None = None) -> Verdict:
    """Screen engine output: same blacklist scan, whitelist honored, but no
    factual-question or entity exemptions."""
    lexicon = lexicon or load_sensitive_lexicon()
    nt = normalize(text)
    norm = nt.normalized
    exempt = [(s, e) for s, e, _ in lexicon.exempt_spans(norm)]
    for start, end, category, trigger in lexicon.category_matches(norm):
        if not _overlaps(start, end, exempt):
            return Verdict(blocked=True, category=category, trigger=trigger)
    return Verdict(blocked=False)


@dataclass(frozen=True)
class Joke:
    setup: str
    punchline: str


class JokeBook:
    """De-escalation jokes served after repeated offensive turns."""

    def __init__(self, jokes: list[Joke], offense_threshold: int = 2) -> None:
        self.jokes = list(jokes)
        self.offense_threshold = offense_threshold

    @classmethod
    def load(
        cls,
        path: str | Path | None = None,
        lexicon: SensitiveLexicon | None = None,
        offense_threshold: int = 2,
    ) -> "JokeBook":
        path = Path(path) if path else _data_dir() / "jokes.tsv"
        jokes: list[Joke] = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected setup<TAB>punchline")
            joke = Joke(setup=parts[0], punchline=parts[1])
            for side in (joke.setup, joke.punchline):
                verdict = check_response(side, lexicon)
                if verdict.blocked:
                    raise ValueError(
                        f"{path}:{lineno}: joke trips the {verdict.category} filter on {verdict.trigger!r}"
                    )
            jokes.append(joke)
        if not jokes:
            raise ValueError(f"{path}: no jokes loaded")
        return cls(jokes, offense_threshold=offense_threshold)

    def pick_joke(
        self,
        offense_count: int,
        rng: random.Random,
        recent: tuple[int, ...] | list[int] = (),
    ) -> tuple[int, Joke] | None:
        """A joke once offense_count reaches the threshold, else None.

        recent holds indices of jokes already told this session; they are
        avoided until the book runs out of fresh ones.
        """
        if offense_count < self.offense_threshold:
            return None
        fresh = [i for i in range(len(self.jokes)) if i not in set(recent)]
        pool = fresh or list(range(len(self.jokes)))
        idx = rng.choice(pool)
        return idx, self.jokes[idx]
