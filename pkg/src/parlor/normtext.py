"""Text normalization, tokenization, and shallow utterance classification.

Everything downstream (entity keys, sensitive-phrase scans, template state
machines) assumes utterances and knowledge-base names pass through the same
normalize() so that string comparisons stay consistent on both sides.
"""
from __future__ import annotations

import logging
import math
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

log = logging.getLogger(__name__)

INTENTS = (
    "YES",
    "NO",
    "QUESTION",
    "STOP",
    "STATEMENT",
    "GREETING",
    "REQUEST",
    "OPINION",
    "COMPLIMENT",
    "COMPLAINT",
    "UNKNOWN",
)

TOPICS = (
    "MOVIE",
    "BOOK",
    "MUSIC",
    "SPORT",
    "TECH",
    "PETS",
    "FAMILY",
    "NEWS",
    "TRAVEL",
    "FOOD",
    "GENERAL",
)

# Topics that resolve keyword-count ties, highest priority first. NEWS leads
# so an explicit news request wins over the subject it mentions.
_TOPIC_TIE_ORDER = ("NEWS",) + tuple(t for t in TOPICS if t != "NEWS")

_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen"
).split()
_TENS = ("", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety")

_ROMAN_NUMERALS = {
    "i": 1, "ii": 2, "iii": 3, "iv": 4, "v": 5, "vi": 6, "vii": 7,
    "viii": 8, "ix": 9, "x": 10, "xi": 11, "xii": 12, "xiii": 13,
    "xiv": 14, "xv": 15, "xvi": 16, "xvii": 17, "xviii": 18, "xix": 19,
    "xx": 20,
}

_ABBREVIATIONS = {
    "mr": "mister",
    "mrs": "missus",
    "dr": "doctor",
    "st": "saint",
    "jr": "junior",
    "sr": "senior",
}
# Expanded without the trailing period too, except "st" which is too
# ambiguous on its own (street vs saint).
_BARE_ABBREVIATIONS = {k: v for k, v in _ABBREVIATIONS.items() if k != "st"}

_ABBREV_RE = re.compile(r"\b(" + "|".join(_ABBREVIATIONS) + r")\.")
_DIGIT_COMMA_RE = re.compile(r"(?<=\d),(?=\d)")
_NON_ALNUM_RE = re.compile(r"[^a-z0-9 ]")

_GREETING_WORDS = frozenset({"hello", "hi", "hey", "greetings", "howdy"})
_GREETING_PHRASES = ("good morning", "good afternoon", "good evening", "good day")
_STOP_FIRST_TOKENS = frozenset({"stop", "goodbye", "bye", "exit", "quit"})
_WH_WORDS = frozenset({"what", "who", "whom", "whose", "which", "when", "where", "why", "how"})
_AUX_WORDS = frozenset(
    "do does did is are was were am can could will would shall should may might have has had".split()
)
_REQUEST_PREFIXES = ("tell me", "show me", "give me", "lets talk", "let me hear", "talk to me")
_OPINION_MARKERS = ("i think", "i feel", "i believe", "in my opinion")
_NAME_PATTERNS = (("my", "name", "is"), ("call", "me"), ("i", "am"), ("im",), ("this", "is"))
_NAME_JUNK = frozenset(
    {
        "really", "just", "also", "very", "quite", "rather", "actually",
        "yes", "no", "yeah", "nope", "ok", "okay", "sure", "fine", "maybe",
        "hello", "hi", "hey", "stop", "goodbye", "bye", "telling", "sorry",
    }
)


def _data_dir() -> Path:
    return Path(str(resources.files("parlor"))) / "data"


def _read_lines(path: Path) -> list[str]:
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


@dataclass(frozen=True)
class Lexicons:
    """Word lists backing normalization and classification."""

    ignore: frozenset[str]
    sentiment: dict[str, float]
    negations: frozenset[str]
    affirmations: tuple[str, ...]
    refusals: tuple[str, ...]
    stop_phrases: frozenset[str]
    topic_keywords: dict[str, tuple[str, ...]]


@lru_cache(maxsize=4)
def load_lexicons(lexicon_dir: str | None = None) -> Lexicons:
    base = Path(lexicon_dir) if lexicon_dir else _data_dir()
    lex = base / "lexicons"
    sentiment: dict[str, float] = {}
    for line in _read_lines(lex / "sentiment.tsv"):
        word, weight = line.split("\t")
        sentiment[word] = float(weight)
    topic_keywords: dict[str, tuple[str, ...]] = {}
    for path in sorted((base / "topics").glob("*.txt")):
        topic_keywords[path.stem.upper()] = tuple(_read_lines(path))
    return Lexicons(
        ignore=frozenset(_read_lines(lex / "ignore.txt")),
        sentiment=sentiment,
        negations=frozenset(_read_lines(lex / "negations.txt")),
        affirmations=tuple(_read_lines(lex / "affirmations.txt")),
        refusals=tuple(_read_lines(lex / "refusals.txt")),
        stop_phrases=frozenset(_read_lines(lex / "stop_phrases.txt")),
        topic_keywords=topic_keywords,
    )


@dataclass(frozen=True)
class NormalizedText:
    raw: str
    normalized: str
    tokens: tuple[str, ...]
    ignorable_mask: tuple[bool, ...]


@dataclass(frozen=True)
class Token:
    text: str
    ignorable: bool


@dataclass(frozen=True)
class UtteranceFeatures:
    sentiment: float
    intent: str
    topic: str
    is_question: bool


def _number_words(n: int) -> str:
    if n < 20:
        return _ONES[n]
    if n < 100:
        tens, rest = divmod(n, 10)
        return _TENS[tens] if not rest else f"{_TENS[tens]} {_ONES[rest]}"
    if n < 1000:
        hundreds, rest = divmod(n, 100)
        head = f"{_ONES[hundreds]} hundred"
        return head if not rest else f"{head} {_number_words(rest)}"
    thousands, rest = divmod(n, 1000)
    head = f"{_number_words(thousands)} thousand"
    return head if not rest else f"{head} {_number_words(rest)}"


def normalize(text: str, lexicons: Lexicons | None = None) -> NormalizedText:
    """Lowercase, strip punctuation, spell out numerals, expand abbreviations.

    The output alphabet is lowercase letters, digits, and single spaces;
    digits survive only for numbers too large for the spell-out table.
    Running normalize on its own output is a no-op.
    """
    lexicons = lexicons or load_lexicons()
    s = unicodedata.normalize("NFKD", text)
    s = "".join(ch for ch in s if not unicodedata.combining(ch))
    s = s.lower()
    s = _ABBREV_RE.sub(lambda m: _ABBREVIATIONS[m.group(1)], s)
    s = _DIGIT_COMMA_RE.sub("", s)
    s = s.replace("'", "")
    s = _NON_ALNUM_RE.sub(" ", s)

    out: list[str] = []
    for tok in s.split():
        if tok in _BARE_ABBREVIATIONS:
            out.append(_BARE_ABBREVIATIONS[tok])
        elif tok.isdigit() and len(tok) <= 4:
            out.extend(_number_words(int(tok)).split())
        elif tok in _ROMAN_NUMERALS and (
            # Single letters double as common words ("i", "x"), so they only
            # count as numerals right after a content word (as in "rocky v").
            len(tok) > 1 or (out and out[-1] not in lexicons.ignore)
        ):
            out.extend(_number_words(_ROMAN_NUMERALS[tok]).split())
        else:
            out.append(tok)

    tokens = tuple(out)
    mask = tuple(tok in lexicons.ignore for tok in tokens)
    return NormalizedText(raw=text, normalized=" ".join(tokens), tokens=tokens, ignorable_mask=mask)


def tokenize(nt: NormalizedText) -> list[Token]:
    """View of the normalized tokens paired with their ignorable flags."""
    return [Token(text, ignorable) for text, ignorable in zip(nt.tokens, nt.ignorable_mask)]


def classify_sentiment(nt: NormalizedText, lexicons: Lexicons | None = None) -> float:
    """Lexicon-sum sentiment in [-1, 1]; a negation within the three tokens
    before a polar word flips that word's contribution."""
    lexicons = lexicons or load_lexicons()
    raw = 0.0
    for i, tok in enumerate(nt.tokens):
        weight = lexicons.sentiment.get(tok)
        if weight is None:
            continue
        window = nt.tokens[max(0, i - 3):i]
        if any(w in lexicons.negations for w in window):
            weight = -weight
        raw += weight
    return math.tanh(raw / 4.0)


def _looks_like_question(nt: NormalizedText) -> bool:
    if nt.raw.rstrip().endswith("?"):
        return True
    if not nt.tokens:
        return False
    first = nt.tokens[0]
    if first in _WH_WORDS:
        return True
    return first in _AUX_WORDS and len(nt.tokens) >= 2


def _starts_with_phrase(normalized: str, phrases: tuple[str, ...] | frozenset[str]) -> bool:
    return any(normalized == p or normalized.startswith(p + " ") for p in phrases)


def _topic_from_keywords(nt: NormalizedText, lexicons: Lexicons) -> str | None:
    padded = f" {nt.normalized} "
    counts: dict[str, int] = {}
    for topic, keywords in lexicons.topic_keywords.items():
        hits = sum(1 for kw in keywords if f" {kw} " in padded)
        if hits:
            counts[topic] = hits
    if not counts:
        return None
    best = max(counts.values())
    for topic in _TOPIC_TIE_ORDER:
        if counts.get(topic) == best:
            return topic
    return None


def classify_intent_topic(
    nt: NormalizedText,
    history: list[str] | tuple[str, ...] = (),
    lexicons: Lexicons | None = None,
) -> UtteranceFeatures:
    """Rule-cascade intent plus keyword-table topic.

    history is the sequence of prior turn topics, most recent last; it backs
    the topic when no keyword fires. No keyword and no history means GENERAL.
    """
    lexicons = lexicons or load_lexicons()
    sentiment = classify_sentiment(nt, lexicons)
    is_question = _looks_like_question(nt)
    norm = nt.normalized

    if not nt.tokens:
        intent = "UNKNOWN"
    elif norm in lexicons.stop_phrases or nt.tokens[0] in _STOP_FIRST_TOKENS:
        intent = "STOP"
    elif (nt.tokens[0] in _GREETING_WORDS or _starts_with_phrase(norm, _GREETING_PHRASES)) and len(nt.tokens) <= 4:
        intent = "GREETING"
    elif _starts_with_phrase(norm, lexicons.affirmations):
        intent = "YES"
    elif _starts_with_phrase(norm, lexicons.refusals):
        intent = "NO"
    elif is_question:
        intent = "QUESTION"
    elif _starts_with_phrase(norm, _REQUEST_PREFIXES):
        intent = "REQUEST"
    elif any(f" {m} " in f" {norm} " for m in _OPINION_MARKERS):
        intent = "OPINION"
    elif "thank" in nt.tokens or "thanks" in nt.tokens:
        intent = "COMPLIMENT"
    elif "you" in nt.tokens and sentiment > 0.3:
        intent = "COMPLIMENT"
    elif "you" in nt.tokens and sentiment < -0.3:
        intent = "COMPLAINT"
    else:
        intent = "STATEMENT"

    topic = _topic_from_keywords(nt, lexicons)
    if topic is None:
        topic = history[-1] if history else "GENERAL"
    return UtteranceFeatures(sentiment=sentiment, intent=intent, topic=topic, is_question=is_question)


def extract_user_name(nt: NormalizedText) -> str | None:
    """Pull a self-introduced name out of an utterance, or None.

    Matches "my name is X", "call me X", "i am X", or a bare one-token reply.
    """
    tokens = nt.tokens
    if len(tokens) == 1 and not nt.ignorable_mask[0] and tokens[0] not in _NAME_JUNK:
        return tokens[0]
    for pattern in _NAME_PATTERNS:
        size = len(pattern)
        for start in range(len(tokens) - size):
            if tokens[start:start + size] != pattern:
                continue
            run: list[str] = []
            lexicons = load_lexicons()
            for tok, ignorable in zip(tokens[start + size:], nt.ignorable_mask[start + size:]):
                if ignorable or tok in lexicons.negations or tok in _NAME_JUNK:
                    break
                run.append(tok)
                if len(run) == 3:
                    break
            if run:
                return " ".join(run)
    return None


def greeting_for_time(hour: int) -> str:
    """Time-of-day salutation: morning 5-11, afternoon 12-16, evening else."""
    if not 0 <= hour <= 23:
        raise ValueError(f"hour out of range: {hour}")
    if 5 <= hour <= 11:
        return "good morning"
    if 12 <= hour <= 16:
        return "good afternoon"
    return "good evening"
