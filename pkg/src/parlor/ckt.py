"""Conversational knowledge templates: the movie flow and mini flows.

The movie template walks a shuffled stack of attribute questions about one
film, then pivots to a related film through a shared actor or director.
Mini templates are data-driven scripted dialogs loaded from YAML, one per
topic, with an optional hook that chains into another flow based on what
the user answered last.
"""
from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .entity_index import MatchCandidate
from .normtext import NormalizedText, UtteranceFeatures, _data_dir, _read_lines, normalize

log = logging.getLogger(__name__)

MOVIE_ATTRIBUTES = ("ACTOR", "DIRECTOR", "PLOT", "REVIEW", "RATING", "AWARD", "TRIVIA")

GENERIC_KIND = "GENERIC"

_MOVIE_COLUMNS = ["title", "year", "actors", "director", "genres", "plot", "rating", "votes", "awards", "trivia"]

_SEED_POOL_SIZE = 10

# Question the template asks before revealing each attribute.
ATTRIBUTE_QUESTIONS: dict[str, tuple[str, ...]] = {
    "ACTOR": (
        "Do you know who stars in {title}?",
        "Can you name any of the actors in {title}?",
    ),
    "DIRECTOR": (
        "Do you know who directed {title}?",
        "Any idea who the director of {title} is?",
    ),
    "PLOT": (
        "Want to hear what {title} is about?",
        "Should I give you the gist of {title}?",
    ),
    "REVIEW": (
        "Curious what people think of {title}?",
        "Want to hear how audiences received {title}?",
    ),
    "RATING": (
        "Want to know how {title} is rated?",
        "Care to guess the rating of {title}?",
    ),
    "AWARD": (
        "Should I tell you about the awards {title} picked up?",
        "Do you know if {title} won anything big?",
    ),
    "TRIVIA": (
        "Want a little trivia about {title}?",
        "Should I share a behind-the-scenes tidbit about {title}?",
    ),
}

ATTRIBUTE_ANSWERS: dict[str, tuple[str, ...]] = {
    "ACTOR": (
        "The stars of {title} include {actors}.",
        "{title} features {actors}.",
    ),
    "DIRECTOR": (
        "{title} was directed by {director}.",
        "The director of {title} is {director}.",
    ),
    "PLOT": (
        "Here is the gist of {title}: {plot}",
        "In short, {plot}",
    ),
    "REVIEW": (
        "Audiences rate {title} about {rating} out of ten across {votes} votes, so it holds up well.",
        "With {votes} votes averaging {rating} out of ten, {title} clearly left a mark.",
    ),
    "RATING": (
        "{title} sits at {rating} out of ten.",
        "It scores {rating} out of ten.",
    ),
    "AWARD": (
        "As for awards: {awards}.",
        "On the trophy shelf, {awards}.",
    ),
    "TRIVIA": (
        "Here is a fun one: {trivia}",
        "A bit of trivia: {trivia}",
    ),
}

GENERIC_QUESTIONS = (
    "What do you usually enjoy most in a movie, the story or the spectacle?",
    "Do you prefer watching movies at home or in a theater?",
    "Is there a film you can rewatch over and over?",
    "Do you usually pick movies by genre or by who is in them?",
    "What was the last movie that really surprised you?",
)

GENERIC_ACKS = (
    "Good to know!",
    "Interesting!",
    "I see!",
    "Nice, thanks for sharing!",
)

INTRO_PHRASES = (
    "{title} is a fine pick. It came out in {year}.",
    "Ah, {title}, from {year}. A memorable one.",
)

BRIDGE_PHRASES = (
    "Speaking of {link}, that reminds me of {next_title}. Have you seen it?",
    "That makes me think of {next_title}, also connected to {link}. Do you know it?",
)

BRIDGE_FALLBACK_PHRASES = (
    "Let me think of another movie. How about {next_title}? Have you seen it?",
    "Here is another one worth talking about: {next_title}. Do you know it?",
)


@dataclass(frozen=True)
class MovieRecord:
    title: str
    year: int
    actors: tuple[str, ...]
    director: str
    genres: tuple[str, ...]
    plot: str
    rating: float
    votes: int
    awards: str
    trivia: tuple[str, ...]
    norm_title: str


@dataclass(frozen=True)
class QuestionRef:
    """A question the engine has on the table: an attribute name or GENERIC."""

    kind: str
    text: str


@dataclass
class MovieCktState:
    movie_current: str | None = None
    stack_topic: list[str] = field(default_factory=list)
    question_last: QuestionRef | None = None
    change_flag: bool = False


class MovieDb:
    def __init__(self, records: list[MovieRecord]) -> None:
        if not records:
            raise ValueError("movie database is empty")
        self.records = list(records)
        self.by_norm_title: dict[str, MovieRecord] = {}
        for record in records:
            if record.norm_title in self.by_norm_title:
                raise ValueError(f"duplicate movie title {record.title!r}")
            self.by_norm_title[record.norm_title] = record
        self.seed_pool = sorted(records, key=lambda r: (-r.votes, r.norm_title))[:_SEED_POOL_SIZE]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "MovieDb":
        path = Path(path) if path else _data_dir() / "movies.tsv"
        records: list[MovieRecord] = []
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter="\t")
            header = next(reader, None)
            if header != _MOVIE_COLUMNS:
                raise ValueError(f"{path}: expected header {_MOVIE_COLUMNS}, got {header}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(_MOVIE_COLUMNS):
                    raise ValueError(f"{path}:{lineno}: expected {len(_MOVIE_COLUMNS)} columns")
                title, year, actors, director, genres, plot, rating, votes, awards, trivia = row
                records.append(
                    MovieRecord(
                        title=title,
                        year=int(year),
                        actors=tuple(a.strip() for a in actors.split("|") if a.strip()),
                        director=director,
                        genres=tuple(g.strip() for g in genres.split("|") if g.strip()),
                        plot=plot,
                        rating=float(rating),
                        votes=int(votes),
                        awards=awards,
                        trivia=tuple(t.strip() for t in trivia.split("|") if t.strip()),
                        norm_title=normalize(title).normalized,
                    )
                )
        return cls(records)


def _copy_state(state: MovieCktState) -> MovieCktState:
    return MovieCktState(
        movie_current=state.movie_current,
        stack_topic=list(state.stack_topic),
        question_last=state.question_last,
        change_flag=state.change_flag,
    )


class MovieCkt:
    """Attribute-stack conversation about one movie at a time."""

    def __init__(self, db: MovieDb) -> None:
        self.db = db

    def _format_answer(self, question: QuestionRef, movie: MovieRecord, rng: random.Random) -> str:
        if question.kind == GENERIC_KIND:
            return rng.choice(GENERIC_ACKS)
        template = rng.choice(ATTRIBUTE_ANSWERS[question.kind])
        answer = template.format(
            title=movie.title,
            actors=", ".join(movie.actors),
            director=movie.director,
            plot=movie.plot,
            rating=movie.rating,
            votes=f"{movie.votes:,}",
            awards=movie.awards,
            trivia=rng.choice(movie.trivia) if movie.trivia else "the production had a story of its own",
        ).rstrip()
        # Plot and trivia fields arrive as bare fragments; the follow-up
        # question is appended right after, so close the sentence here.
        if not answer.endswith((".", "!", "?")):
            answer += "."
        return answer

    def _format_question(self, attribute: str, movie: MovieRecord, rng: random.Random) -> QuestionRef:
        text = rng.choice(ATTRIBUTE_QUESTIONS[attribute]).format(title=movie.title)
        return QuestionRef(kind=attribute, text=text)

    def _mentioned_movie(self, entities: list[MatchCandidate] | None) -> MovieRecord | None:
        for candidate in entities or []:
            if candidate.record.entity_type != "movie":
                continue
            movie = self.db.by_norm_title.get(candidate.record.norm_name)
            if movie is not None:
                return movie
        return None

    def get_next_movie(self, current: MovieRecord, rng: random.Random) -> tuple[MovieRecord, str]:
        """Pick a related movie (shared actor, director, then genre) and a
        bridge phrase that names the link. Highest vote count wins ties first."""
        current_actors = set(current.actors)
        related: list[tuple[MovieRecord, str]] = []
        for movie in self.db.records:
            if movie.norm_title == current.norm_title:
                continue
            shared = current_actors & set(movie.actors)
            if shared:
                # Prefer the link named first in the current movie's billing.
                link = next(a for a in current.actors if a in shared)
                related.append((movie, link))
            elif movie.director == current.director:
                related.append((movie, current.director))
        fallback = False
        if not related:
            related = [
                (movie, "")
                for movie in self.db.records
                if movie.norm_title != current.norm_title and set(movie.genres) & set(current.genres)
            ]
        if not related:
            fallback = True
            related = [(movie, "") for movie in self.db.records if movie.norm_title != current.norm_title]
        best_votes = max(movie.votes for movie, _ in related)
        top = [(movie, link) for movie, link in related if movie.votes == best_votes]
        movie, link = rng.choice(top)
        if link:
            bridge = rng.choice(BRIDGE_PHRASES).format(link=link, next_title=movie.title)
        elif not fallback and movie.genres:
            shared_genres = set(movie.genres) & set(current.genres)
            genre = sorted(shared_genres)[0].lower() if shared_genres else movie.genres[0].lower()
            bridge = rng.choice(BRIDGE_PHRASES).format(link=f"another {genre} film", next_title=movie.title)
        else:
            bridge = rng.choice(BRIDGE_FALLBACK_PHRASES).format(next_title=movie.title)
        return movie, bridge

    def respond(
        self,
        state: MovieCktState,
        features: UtteranceFeatures,
        entities: list[MatchCandidate] | None,
        rng: random.Random,
    ) -> tuple[str, MovieCktState]:
        """One turn of the movie conversation; returns (text, new state)."""
        state = _copy_state(state)

        mentioned = self._mentioned_movie(entities)
        if mentioned is not None and mentioned.norm_title != state.movie_current:
            # The user named a concrete film: restart the flow on it.
            state.movie_current = None
            state.change_flag = False

        if state.movie_current is None:
            movie = mentioned or rng.choice(self.db.seed_pool)
            state.movie_current = movie.norm_title
            stack = list(MOVIE_ATTRIBUTES)
            rng.shuffle(stack)
            state.stack_topic = stack
            intro = rng.choice(INTRO_PHRASES).format(title=movie.title, year=movie.year)
            question = self._format_question(state.stack_topic.pop(), movie, rng)
            state.question_last = question
            state.change_flag = False
            return f"{intro} {question.text}", state

        movie = self.db.by_norm_title[state.movie_current]

        if state.change_flag:
            parts = []
            if features.intent == "YES" and state.question_last is not None:
                parts.append(self._format_answer(state.question_last, movie, rng))
            next_movie, bridge = self.get_next_movie(movie, rng)
            parts.append(bridge)
            state.movie_current = next_movie.norm_title
            stack = list(MOVIE_ATTRIBUTES)
            rng.shuffle(stack)
            state.stack_topic = stack
            state.question_last = QuestionRef(kind=GENERIC_KIND, text=bridge)
            state.change_flag = False
            return " ".join(parts), state

        if state.question_last is None:
            # Nothing pending; open a fresh question instead of staying quiet.
            if state.stack_topic:
                question = self._format_question(state.stack_topic.pop(), movie, rng)
            else:
                question = QuestionRef(kind=GENERIC_KIND, text=rng.choice(GENERIC_QUESTIONS))
            state.question_last = question
            return question.text, state

        answer_text = self._format_answer(state.question_last, movie, rng)
        if not state.stack_topic:
            take_generic = True
        elif state.question_last.kind == GENERIC_KIND:
            # Never follow a generic question with another one while
            # attribute questions are still waiting; this bounds how long a
            # full attribute sweep can take.
            take_generic = False
        else:
            take_generic = rng.random() < 0.5
        if take_generic:
            followup = QuestionRef(kind=GENERIC_KIND, text=rng.choice(GENERIC_QUESTIONS))
        else:
            followup = self._format_question(state.stack_topic.pop(), movie, rng)
        state.question_last = followup
        return f"{answer_text} {followup.text}", state


@dataclass(frozen=True)
class EntityHook:
    extractor: str
    chain_to: str


@dataclass(frozen=True)
class MiniCktSpec:
    topic: str
    dialogs: tuple[tuple[str, ...], ...]
    entity_hook: EntityHook | None = None


@dataclass
class MiniCktState:
    topic: str
    dialog_index: int = 0
    exhausted: bool = False


def _load_extractor_table(name: str, data_dir: Path) -> frozenset[str]:
    path = data_dir / "lexicons" / f"{name}.txt"
    if not path.exists():
        raise ValueError(f"entity_hook extractor {name!r} has no keyword table at {path}")
    return frozenset(_read_lines(path))


def load_ckt_specs(directory: str | Path | None = None, data_dir: Path | None = None) -> dict[str, MiniCktSpec]:
    """Load every mini template spec in a directory, keyed by topic.

    Each file must carry a topic, a non-empty list of dialogs where every
    dialog is a non-empty list of variant strings, and optionally an
    entity_hook with a keyword extractor and a chain target.
    """
    directory = Path(directory) if directory else _data_dir() / "ckts"
    data_dir = data_dir or _data_dir()
    specs: dict[str, MiniCktSpec] = {}
    for path in sorted(directory.glob("*.y*ml")):
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ValueError(f"{path}: unreadable spec: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: spec must be a mapping")
        topic = doc.get("topic")
        if not isinstance(topic, str) or not topic.strip():
            raise ValueError(f"{path}: field 'topic' must be a non-empty string")
        topic = topic.strip().lower()
        if topic in specs:
            raise ValueError(f"{path}: duplicate topic {topic!r}")
        dialogs_raw = doc.get("dialogs")
        if not isinstance(dialogs_raw, list) or not dialogs_raw:
            raise ValueError(f"{path}: field 'dialogs' must be a non-empty list")
        dialogs: list[tuple[str, ...]] = []
        for i, dialog in enumerate(dialogs_raw):
            if not isinstance(dialog, list) or not dialog:
                raise ValueError(f"{path}: dialogs[{i}] must be a non-empty list of variants")
            for variant in dialog:
                if not isinstance(variant, str) or not variant.strip():
                    raise ValueError(f"{path}: dialogs[{i}] has an empty variant")
            dialogs.append(tuple(dialog))
        hook = None
        hook_raw = doc.get("entity_hook")
        if hook_raw is not None:
            if not isinstance(hook_raw, dict):
                raise ValueError(f"{path}: field 'entity_hook' must be a mapping")
            extractor = hook_raw.get("extractor")
            chain_to = hook_raw.get("chain_to")
            if not isinstance(extractor, str) or not isinstance(chain_to, str):
                raise ValueError(f"{path}: entity_hook needs string 'extractor' and 'chain_to'")
            _load_extractor_table(extractor, data_dir)
            hook = EntityHook(extractor=extractor, chain_to=chain_to)
        specs[topic] = MiniCktSpec(topic=topic, dialogs=tuple(dialogs), entity_hook=hook)
    if not specs:
        raise ValueError(f"no mini template specs found in {directory}")
    return specs


class MiniCktLibrary:
    """Registry of mini templates plus the chaining hook machinery."""

    def __init__(self, specs: dict[str, MiniCktSpec], data_dir: Path | None = None) -> None:
        self.specs = dict(specs)
        self._data_dir = data_dir or _data_dir()
        self._extractors: dict[str, frozenset[str]] = {}
        for spec in specs.values():
            if spec.entity_hook and spec.entity_hook.extractor not in self._extractors:
                self._extractors[spec.entity_hook.extractor] = _load_extractor_table(
                    spec.entity_hook.extractor, self._data_dir
                )

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "MiniCktLibrary":
        return cls(load_ckt_specs(directory))

    def resolve_topic(self, topic: str, aliases: dict[str, str] | None = None) -> MiniCktSpec | None:
        key = topic.strip().lower()
        if aliases and key in aliases:
            key = aliases[key]
        return self.specs.get(key)

    def _extract(self, hook: EntityHook, nt: NormalizedText) -> str | None:
        table = self._extractors[hook.extractor]
        for token in nt.tokens:
            if token in table:
                return token
        return None

    def respond(
        self,
        state: MiniCktState,
        nt: NormalizedText,
        features: UtteranceFeatures,
        rng: random.Random,
    ) -> tuple[str | None, MiniCktState, str | None]:
        """One scripted turn: (text, new state, chain_to).

        Questions are not handled here (text None signals the caller to use
        its question-answering route). After the final dialog the state is
        exhausted; if the hook fires on the user's answer, chain_to names
        the follow-on template.
        """
        spec = self.specs.get(state.topic)
        if spec is None:
            raise KeyError(f"no mini template for topic {state.topic!r}")
        state = MiniCktState(topic=state.topic, dialog_index=state.dialog_index, exhausted=state.exhausted)

        if features.is_question:
            return None, state, None

        if state.dialog_index >= len(spec.dialogs):
            state.exhausted = True
            chain_to = None
            if spec.entity_hook is not None:
                value = self._extract(spec.entity_hook, nt)
                if value is not None:
                    target = spec.entity_hook.chain_to.replace("{value}", value)
                    if target in self.specs:
                        chain_to = target
            return None, state, chain_to

        text = rng.choice(spec.dialogs[state.dialog_index])
        state.dialog_index += 1
        return text, state, None
