"""The dialog manager: one engine, many sessions.

Each turn runs the same pipeline: normalize, classify, retrieve entities,
filter for sensitive content, advance the topic loop, collect candidate
responses from the generators, rank, filter the winner, persist, reply.

The topic loop rotates through seven conversation topics, spending a fixed
number of topic-driven turns on each before moving on. Questions, blocked
utterances, and off-loop topics never consume the budget. Boredom (two
terse, flat user turns in a row) empties the budget immediately.
"""
from __future__ import annotations

import logging
import random
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .ckt import (
    GENERIC_KIND,
    MiniCktLibrary,
    MiniCktState,
    MovieCkt,
    MovieCktState,
    MovieDb,
    QuestionRef,
)
from .config import EngineConfig
from .entity_index import MatchCandidate, SearchIndex, build_index, load_entity_dir
from .news import NewsIndex
from .normtext import (
    NormalizedText,
    UtteranceFeatures,
    _data_dir,
    classify_intent_topic,
    classify_sentiment,
    extract_user_name,
    greeting_for_time,
    load_lexicons,
    normalize,
)
from .responses import (
    CandidateResponse,
    Chitchat,
    Generator,
    KnowledgeQa,
    PriorityTable,
    build_response,
    gather,
    rank_polynomial,
    rank_rule_based,
    score_metrics,
)
from .safety import JokeBook, Verdict, check_response, check_utterance, load_sensitive_lexicon
from .store import MemoryStore, Store

log = logging.getLogger(__name__)

LOOP_TOPICS = ("MOVIE", "BOOK", "MUSIC", "SPORT", "TECH", "PETS", "FAMILY")
PREDEFINED_TOPICS = LOOP_TOPICS + ("TRAVEL", "FOOD")
SWITCHABLE_TOPICS = PREDEFINED_TOPICS + ("NEWS",)

# Entity types that signal the user is talking about films.
_MOVIE_ENTITY_TYPES = {"movie", "movie_actor"}

DEFLECTIONS: dict[str, str] = {
    "finance": "Money matters are best left to a professional, so I will stay out of that one.",
    "medicine": "I am not the right one to talk health with, so I will leave that to your doctor.",
    "law": "Legal territory is outside my lane, so I would rather not guess.",
    "politics": "I try to stay out of politics, it never ends well for a chatbot.",
    "emergency": "If something urgent is happening, please reach real emergency services right away.",
    "offensive": "I would rather keep things friendly.",
}
DEFLECTION_DEFAULT = "That is a bit outside what I am comfortable chatting about."

REDIRECTS = (
    "How about we get back to {topic}?",
    "Let us stick to {topic} for now, shall we?",
)

NAME_ASKS = (
    "I do not think we have met before. What is your name?",
    "I would love to know what to call you. What is your name?",
)

NAME_RETRY = "Nice to hear from you! I still did not catch your name, what should I call you?"
NAME_GIVE_UP = "No name, no problem, I will just call you friend."

FAREWELLS = (
    "Goodbye{name}! It was lovely chatting with you.",
    "Talk to you later{name}! Take care.",
)

WELCOME_BACK = "Welcome back, {name}!"
MEET_ACK = "Nice to meet you, {name}!"

STUCK_LINE = "Let us switch gears. What has been the highlight of your week?"

QUESTION_SHRUG = (
    "Good question! I do not have a solid answer, but I would love to hear your take.",
    "You have me there. What do you think the answer is?",
)


@dataclass
class SessionState:
    session_id: str
    device_id: str | None = None
    user_name: str | None = None
    turn_index: int = 0
    started: bool = False
    awaiting_name: bool = False
    closed: bool = False
    topic_current: str = "GENERAL"
    topic_stack: list[str] = field(default_factory=list)
    topic_turns_left: int = 0
    consecutive_offense: int = 0
    recent_jokes: list[int] = field(default_factory=list)
    movie: MovieCktState = field(default_factory=MovieCktState)
    movie_user_led: bool = False
    mini_progress: dict[str, dict] = field(default_factory=dict)
    active_spec: str | None = None
    recent_token_counts: list[int] = field(default_factory=list)
    recent_sentiments: list[float] = field(default_factory=list)
    last_active: float = 0.0

    def to_dict(self) -> dict:
        question = self.movie.question_last
        return {
            "session_id": self.session_id,
            "device_id": self.device_id,
            "user_name": self.user_name,
            "turn_index": self.turn_index,
            "started": self.started,
            "awaiting_name": self.awaiting_name,
            "closed": self.closed,
            "topic_current": self.topic_current,
            "topic_stack": list(self.topic_stack),
            "topic_turns_left": self.topic_turns_left,
            "consecutive_offense": self.consecutive_offense,
            "recent_jokes": list(self.recent_jokes),
            "movie": {
                "movie_current": self.movie.movie_current,
                "stack_topic": list(self.movie.stack_topic),
                "question_last": {"kind": question.kind, "text": question.text} if question else None,
                "change_flag": self.movie.change_flag,
            },
            "movie_user_led": self.movie_user_led,
            "mini_progress": {k: dict(v) for k, v in self.mini_progress.items()},
            "active_spec": self.active_spec,
            "recent_token_counts": list(self.recent_token_counts),
            "recent_sentiments": list(self.recent_sentiments),
            "last_active": self.last_active,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionState":
        movie_raw = data.get("movie") or {}
        question_raw = movie_raw.get("question_last")
        movie = MovieCktState(
            movie_current=movie_raw.get("movie_current"),
            stack_topic=list(movie_raw.get("stack_topic", [])),
            question_last=QuestionRef(**question_raw) if question_raw else None,
            change_flag=bool(movie_raw.get("change_flag", False)),
        )
        return cls(
            session_id=data["session_id"],
            device_id=data.get("device_id"),
            user_name=data.get("user_name"),
            turn_index=int(data.get("turn_index", 0)),
            started=bool(data.get("started", False)),
            awaiting_name=bool(data.get("awaiting_name", False)),
            closed=bool(data.get("closed", False)),
            topic_current=data.get("topic_current", "GENERAL"),
            topic_stack=list(data.get("topic_stack", [])),
            topic_turns_left=int(data.get("topic_turns_left", 0)),
            consecutive_offense=int(data.get("consecutive_offense", 0)),
            recent_jokes=list(data.get("recent_jokes", [])),
            movie=movie,
            movie_user_led=bool(data.get("movie_user_led", False)),
            mini_progress={k: dict(v) for k, v in (data.get("mini_progress") or {}).items()},
            active_spec=data.get("active_spec"),
            recent_token_counts=list(data.get("recent_token_counts", [])),
            recent_sentiments=list(data.get("recent_sentiments", [])),
            last_active=float(data.get("last_active", 0.0)),
        )


@dataclass
class ResponseEnvelope:
    session_id: str
    turn_index: int
    text: str
    closed: bool
    debug: dict

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "turn_index": self.turn_index,
            "text": self.text,
            "closed": self.closed,
            "debug": self.debug,
        }


class SessionNotFound(KeyError):
    pass


class SessionClosed(RuntimeError):
    pass


@dataclass
class _CktOffer:
    """A template response held aside until ranking commits it."""

    text: str
    movie_state: MovieCktState | None = None
    mini_state: MiniCktState | None = None
    chain_to: str | None = None
    alternatives: tuple[str, ...] = ()
    question_kind: str | None = None


def _candidates_summary(candidates: list[CandidateResponse]) -> list[dict]:
    return [
        {"generator": c.generator, "kind": c.kind, "score": c.score, "metrics": c.metrics}
        for c in candidates
    ]


class Engine:
    """Conversation engine facade. One instance serves many sessions."""

    def __init__(
        self,
        config: EngineConfig | None = None,
        store: Store | None = None,
        index: SearchIndex | None = None,
        news: NewsIndex | None = None,
        now_fn=None,
    ) -> None:
        self.config = config or EngineConfig()
        self.store = store if store is not None else MemoryStore()
        self._now = now_fn or (lambda: datetime.now(timezone.utc))
        data_dir = Path(self.config.data_dir) if self.config.data_dir else _data_dir()
        self.lexicons = load_lexicons(str(data_dir) if self.config.data_dir else None)
        self.sensitive = load_sensitive_lexicon(data_dir if self.config.data_dir else None)
        self.jokes = JokeBook.load(data_dir / "jokes.tsv")
        if index is not None:
            self.index = index
        else:
            self.index = build_index(load_entity_dir(data_dir / "entities"))
        self.movie_db = MovieDb.load(data_dir / "movies.tsv")
        self.movie_ckt = MovieCkt(self.movie_db)
        self.minis = MiniCktLibrary.load(data_dir / "ckts")
        self.priority = PriorityTable.load(data_dir / "priority_table.tsv")
        self.qa = KnowledgeQa()
        self.chitchat = Chitchat()
        if news is not None:
            self.news = news
        else:
            news_path = self.config.store_dir / "news.jsonl"
            self.news = NewsIndex.load(news_path) if news_path.exists() else NewsIndex()
        self._sessions: dict[str, SessionState] = {}

    # ---------------------------------------------------------------- session plumbing

    def create_session(self, device_id: str | None = None, session_id: str | None = None) -> str:
        session_id = session_id or uuid.uuid4().hex
        if self._lookup(session_id) is not None:
            raise ValueError(f"session {session_id!r} already exists")
        state = SessionState(session_id=session_id, device_id=device_id)
        state.last_active = self._now().timestamp()
        self._sessions[session_id] = state
        self.store.save_session(session_id, state.to_dict())
        return session_id

    def _lookup(self, session_id: str) -> SessionState | None:
        state = self._sessions.get(session_id)
        if state is None:
            raw = self.store.load_session(session_id)
            if raw is None:
                return None
            state = SessionState.from_dict(raw)
            self._sessions[session_id] = state
        return state

    def get_session(self, session_id: str) -> dict:
        state = self._lookup(session_id)
        if state is None:
            raise SessionNotFound(session_id)
        self._expire_if_idle(state)
        info = state.to_dict()
        info["turns"] = self.store.turns(session_id)
        return info

    def delete_session(self, session_id: str) -> None:
        if self._lookup(session_id) is None:
            raise SessionNotFound(session_id)
        self._sessions.pop(session_id, None)
        self.store.delete_session(session_id)

    def _expire_if_idle(self, state: SessionState) -> None:
        if state.closed or not state.started:
            return
        idle = self._now().timestamp() - state.last_active
        if idle > self.config.session_idle_minutes * 60:
            state.closed = True
            self.store.save_session(state.session_id, state.to_dict())

    def _turn_rng(self, state: SessionState) -> random.Random:
        return random.Random(f"{self.config.seed}:{state.session_id}:{state.turn_index}")

    # ---------------------------------------------------------------- topic loop

    def _pop_topic(self, state: SessionState, rng: random.Random) -> str:
        if not state.topic_stack:
            stack = list(LOOP_TOPICS)
            rng.shuffle(stack)
            # Never let a fresh pass immediately re-serve the current topic.
            if len(stack) > 1 and stack[-1] == state.topic_current:
                stack[0], stack[-1] = stack[-1], stack[0]
            state.topic_stack = stack
        return state.topic_stack.pop()

    def _mini_state(self, state: SessionState, spec_topic: str) -> MiniCktState:
        raw = state.mini_progress.get(spec_topic, {})
        return MiniCktState(
            topic=spec_topic,
            dialog_index=int(raw.get("dialog_index", 0)),
            exhausted=bool(raw.get("exhausted", False)),
        )

    def _save_mini_state(self, state: SessionState, mini: MiniCktState) -> None:
        state.mini_progress[mini.topic] = {
            "dialog_index": mini.dialog_index,
            "exhausted": mini.exhausted,
        }

    def _spec_for_topic(self, state: SessionState) -> str | None:
        if state.topic_current == "MOVIE":
            return None
        if state.active_spec and self.minis.specs.get(state.active_spec):
            return state.active_spec
        mapped = self.config.topic_specs.get(state.topic_current)
        if mapped and mapped in self.minis.specs:
            return mapped
        return None

    def _enter_topic(self, state: SessionState, topic: str) -> None:
        state.topic_current = topic
        state.topic_turns_left = self.config.turns_per_topic
        state.active_spec = None
        state.movie_user_led = False
        if topic == "MOVIE":
            state.movie = MovieCktState()
        else:
            spec = self.config.topic_specs.get(topic)
            if spec:
                state.active_spec = spec
                progress = state.mini_progress.get(spec)
                if progress and progress.get("exhausted"):
                    # A revisited topic starts its script over.
                    state.mini_progress[spec] = {"dialog_index": 0, "exhausted": False}

    # ---------------------------------------------------------------- generators

    def _movie_offer(
        self,
        state: SessionState,
        features: UtteranceFeatures,
        mentions: list[MatchCandidate],
        rng: random.Random,
    ) -> _CktOffer | None:
        try:
            text, new_state = self.movie_ckt.respond(state.movie, features, mentions, rng)
        except Exception:
            log.exception("movie template failed")
            return None
        kind = new_state.question_last.kind if new_state.question_last else None
        return _CktOffer(text=text, movie_state=new_state, question_kind=kind)

    def _mini_offer(
        self,
        state: SessionState,
        spec_topic: str,
        nt: NormalizedText,
        features: UtteranceFeatures,
        rng: random.Random,
    ) -> _CktOffer | None:
        mini = self._mini_state(state, spec_topic)
        text, new_state, chain_to = self.minis.respond(mini, nt, features, rng)
        if chain_to is not None:
            # The hook fired: open the chained script in the same breath.
            chained = MiniCktState(topic=chain_to, dialog_index=0, exhausted=False)
            chained_text, chained_state, _ = self.minis.respond(chained, nt, features, rng)
            if chained_text is not None:
                spec = self.minis.specs[chain_to]
                return _CktOffer(
                    text=chained_text,
                    mini_state=chained_state,
                    chain_to=chain_to,
                    alternatives=tuple(spec.dialogs[0]),
                )
        if text is None:
            if new_state.exhausted != mini.exhausted:
                self._save_mini_state(state, new_state)
            return None
        spec = self.minis.specs[spec_topic]
        variants = spec.dialogs[new_state.dialog_index - 1]
        return _CktOffer(text=text, mini_state=new_state, alternatives=tuple(variants))

    def _news_text(self, nt: NormalizedText, rng: random.Random) -> str | None:
        ignore = frozenset(self.lexicons.topic_keywords.get("NEWS", ()))
        vocabulary: set[str] = set()
        for article in self.news.articles:
            vocabulary.update(article.keywords)
        keyword = None
        for token, ignorable in zip(nt.tokens, nt.ignorable_mask):
            if ignorable or token in ignore:
                continue
            if token in vocabulary:
                keyword = token
                break
        now = self._now()
        kwargs = dict(
            now=now,
            window_days=self.config.news_window_days,
            retries=self.config.news_filter_retries,
            lexicon=self.sensitive,
        )
        if keyword:
            served = self.news.keyword_news(keyword, rng, **kwargs)
            if served:
                return f"Here is some recent news about {keyword}. {served[0]}"
        served = self.news.random_news(rng, **kwargs)
        if served:
            return f"Here is something from the news. {served[0]}"
        return None

    # ---------------------------------------------------------------- turn pipeline

    def handle_turn(self, session_id: str, text: str, device_id: str | None = None) -> ResponseEnvelope:
        started_at = time.perf_counter()
        state = self._lookup(session_id)
        if state is None:
            raise SessionNotFound(session_id)
        self._expire_if_idle(state)
        if state.closed:
            raise SessionClosed(session_id)
        if device_id and not state.device_id:
            state.device_id = device_id

        now = self._now()
        rng = self._turn_rng(state)
        nt = normalize(text)
        sentiment = classify_sentiment(nt, self.lexicons)
        features = self._classify(nt, state)
        entities = self.index.retrieve(nt, limit=self.config.retrieve_limit)
        # A mention is stricter than a fuzzy match: the entity name must
        # appear verbatim in the utterance. Long sentences reach high match
        # scores on short names by scattered-subsequence luck alone.
        padded = f" {nt.normalized} "
        mentions = [
            c
            for c in entities
            if c.match_score >= self.config.mention_min_score
            and f" {c.record.norm_name} " in padded
        ]

        debug: dict = {
            "intent": features.intent,
            "topic_user": features.topic,
            "sentiment": round(sentiment, 4),
            "is_question": features.is_question,
            "entities": [
                {
                    "id": c.record.id,
                    "name": c.record.name,
                    "entity_type": c.record.entity_type,
                    "match_score": round(c.match_score, 4),
                    "rank_score": round(c.rank_score, 4),
                }
                for c in entities
            ],
        }

        verdict = check_utterance(nt, entities=mentions, features=features, lexicon=self.sensitive)
        debug["input_filter"] = {
            "blocked": verdict.blocked,
            "category": verdict.category,
            "trigger": verdict.trigger,
            "exemption": verdict.exemption,
        }

        if not state.started:
            reply = self._welcome(state, now, rng, debug)
        elif features.intent == "STOP":
            reply = self._farewell(state, rng)
            debug["generator"] = "farewell"
        elif state.awaiting_name:
            reply = self._capture_name(state, nt, features, now, rng, debug)
        elif verdict.blocked:
            reply = self._deflect(state, verdict, rng, debug)
        else:
            state.consecutive_offense = 0
            reply = self._respond(state, nt, features, sentiment, mentions, rng, debug)

        reply = build_response(reply, self.config.max_response_chars)

        self._note_user_turn(state, nt, sentiment)
        latency_ms = (time.perf_counter() - started_at) * 1000.0
        debug["topic"] = state.topic_current
        debug["topic_turns_left"] = state.topic_turns_left
        debug["latency_ms"] = round(latency_ms, 3)

        turn_record = {
            "turn_index": state.turn_index,
            "user_text": text,
            "response": reply,
            "intent": features.intent,
            "topic": state.topic_current,
            "generator": debug.get("generator"),
            "blocked": verdict.blocked,
            "filter_category": verdict.category,
            "timestamp": now.isoformat(),
            "latency_ms": round(latency_ms, 3),
        }
        envelope = ResponseEnvelope(
            session_id=session_id,
            turn_index=state.turn_index,
            text=reply,
            closed=state.closed,
            debug=debug,
        )
        state.turn_index += 1
        state.last_active = now.timestamp()
        self.store.append_turn(session_id, turn_record)
        self.store.save_session(session_id, state.to_dict())
        return envelope

    def _classify(self, nt: NormalizedText, state: SessionState) -> UtteranceFeatures:
        history: tuple[str, ...] = ()
        if state.topic_current != "GENERAL":
            history = (state.topic_current,)
        return classify_intent_topic(nt, history=history, lexicons=self.lexicons)

    def _note_user_turn(self, state: SessionState, nt: NormalizedText, sentiment: float) -> None:
        content = sum(1 for ignorable in nt.ignorable_mask if not ignorable)
        state.recent_token_counts = (state.recent_token_counts + [content])[-2:]
        state.recent_sentiments = (state.recent_sentiments + [sentiment])[-2:]

    def _is_bored(self, state: SessionState, nt: NormalizedText, sentiment: float) -> bool:
        counts = (state.recent_token_counts + [sum(1 for i in nt.ignorable_mask if not i)])[-2:]
        moods = (state.recent_sentiments + [sentiment])[-2:]
        if len(counts) < 2:
            return False
        limit = self.config.boredom_token_limit
        return all(c <= limit for c in counts) and all(m <= 0 for m in moods)

    # ---------------------------------------------------------------- turn kinds

    def _welcome(self, state: SessionState, now: datetime, rng: random.Random, debug: dict) -> str:
        state.started = True
        greeting = greeting_for_time(now.hour)
        profile = self.store.load_profile(state.device_id) if state.device_id else None
        parts = [f"{greeting.capitalize()}!"]
        if profile and profile.get("name"):
            state.user_name = profile["name"]
            parts.append(WELCOME_BACK.format(name=profile["name"].title()))
            parts.append(self._open_topic(state, rng, debug))
            debug["generator"] = "welcome"
        else:
            state.awaiting_name = True
            parts.append(rng.choice(NAME_ASKS))
            debug["generator"] = "welcome"
        if state.device_id:
            profile = dict(profile or {})
            profile["last_seen"] = now.isoformat()
            if state.user_name:
                profile["name"] = state.user_name
            self.store.save_profile(state.device_id, profile)
        return " ".join(parts)

    def _capture_name(
        self,
        state: SessionState,
        nt: NormalizedText,
        features: UtteranceFeatures,
        now: datetime,
        rng: random.Random,
        debug: dict,
    ) -> str:
        debug["generator"] = "name_capture"
        if features.intent in ("YES", "NO", "GREETING"):
            return NAME_RETRY
        name = extract_user_name(nt)
        state.awaiting_name = False
        if name:
            state.user_name = name
            if state.device_id:
                profile = dict(self.store.load_profile(state.device_id) or {})
                profile["name"] = name
                profile["last_seen"] = now.isoformat()
                self.store.save_profile(state.device_id, profile)
            ack = MEET_ACK.format(name=name.title())
        else:
            ack = NAME_GIVE_UP
        opener = self._open_topic(state, rng, debug)
        return f"{ack} {opener}"

    def _farewell(self, state: SessionState, rng: random.Random) -> str:
        state.closed = True
        name = f", {state.user_name.title()}" if state.user_name else ""
        return rng.choice(FAREWELLS).format(name=name)

    def _deflect(self, state: SessionState, verdict: Verdict, rng: random.Random, debug: dict) -> str:
        if verdict.category == "offensive":
            state.consecutive_offense += 1
        joke = None
        if state.consecutive_offense >= self.config.joke_threshold:
            joke = self.jokes.pick_joke(state.consecutive_offense, rng, recent=state.recent_jokes)
        if joke is not None:
            index, item = joke
            state.recent_jokes.append(index)
            debug["generator"] = "joke"
            return f"Let me lighten the mood instead. {item.setup} {item.punchline}"
        debug["generator"] = "deflection"
        deflection = DEFLECTIONS.get(verdict.category or "", DEFLECTION_DEFAULT)
        topic = state.topic_current.lower() if state.topic_current not in ("GENERAL", "NEWS") else "something cheerful"
        redirect = rng.choice(REDIRECTS).format(topic=topic)
        return f"{deflection} {redirect}"

    def _open_topic(self, state: SessionState, rng: random.Random, debug: dict) -> str:
        topic = self._pop_topic(state, rng)
        self._enter_topic(state, topic)
        state.topic_turns_left -= 1
        opener = self._topic_opener(state, rng)
        debug["topic_change"] = topic
        return opener

    def _topic_opener(self, state: SessionState, rng: random.Random) -> str:
        neutral = normalize("")
        features = UtteranceFeatures(sentiment=0.0, intent="STATEMENT", topic=state.topic_current, is_question=False)
        text = None
        if state.topic_current == "MOVIE":
            offer = self._movie_offer(state, features, [], rng)
            if offer and offer.movie_state is not None:
                state.movie = offer.movie_state
                text = offer.text
        else:
            spec_topic = self._spec_for_topic(state)
            if spec_topic:
                offer = self._mini_offer(state, spec_topic, neutral, features, rng)
                if offer and offer.mini_state is not None:
                    self._save_mini_state(state, offer.mini_state)
                    if offer.chain_to:
                        state.active_spec = offer.chain_to
                    text = offer.text
        if text is not None and not check_response(text, lexicon=self.sensitive).blocked:
            return text
        return STUCK_LINE

    def _respond(
        self,
        state: SessionState,
        nt: NormalizedText,
        features: UtteranceFeatures,
        sentiment: float,
        mentions: list[MatchCandidate],
        rng: random.Random,
        debug: dict,
    ) -> str:
        # Explicit topic moves trump the rotation budget.
        switched = False
        wants_movie = any(c.record.entity_type in _MOVIE_ENTITY_TYPES for c in mentions)
        if not features.is_question:
            if (
                features.topic in SWITCHABLE_TOPICS
                and features.topic != state.topic_current
                and features.topic != "MOVIE"
            ):
                self._switch_topic(state, features.topic, debug)
                switched = True
            elif (features.topic == "MOVIE" or wants_movie) and state.topic_current != "MOVIE":
                self._switch_topic(state, "MOVIE", debug)
                state.movie_user_led = True
                switched = True
            elif state.topic_current == "MOVIE" and wants_movie:
                state.movie_user_led = True

        # Dropping a film title is engagement even when the sentence is
        # short; boredom must never cancel the movie floor the same turn
        # the user claims it.
        bored = not switched and not wants_movie and self._is_bored(state, nt, sentiment)
        if bored:
            state.topic_turns_left = 0
            debug["bored"] = True

        if features.is_question:
            pass  # questions never consume or advance the rotation
        elif switched:
            state.topic_turns_left -= 1
        elif state.topic_current == "MOVIE" and state.movie_user_led and not bored:
            # A movie dialog the user asked for holds the floor: its attribute
            # sweep and pivots outlast the rotation clock. Movie visits the
            # rotation scheduled itself stay on the clock like any topic.
            pass
        elif state.topic_current in PREDEFINED_TOPICS or state.topic_current == "GENERAL":
            if state.topic_turns_left <= 0 or state.topic_current == "GENERAL":
                topic = self._pop_topic(state, rng)
                self._enter_topic(state, topic)
                debug["topic_change"] = topic
            state.topic_turns_left -= 1
        elif state.topic_current == "NEWS" and state.topic_turns_left <= 0:
            topic = self._pop_topic(state, rng)
            self._enter_topic(state, topic)
            debug["topic_change"] = topic
            state.topic_turns_left -= 1

        if state.topic_current == "MOVIE" and not features.is_question:
            if self._wants_different_movie(nt) and not any(
                c.record.entity_type == "movie" for c in mentions
            ):
                state.movie.change_flag = True

        return self._pool_response(state, nt, features, mentions, rng, debug)

    def _switch_topic(self, state: SessionState, topic: str, debug: dict) -> None:
        if topic in state.topic_stack:
            state.topic_stack.remove(topic)
        self._enter_topic(state, topic)
        debug["topic_change"] = topic
        debug["topic_switch"] = "explicit"

    @staticmethod
    def _wants_different_movie(nt: NormalizedText) -> bool:
        tokens = nt.tokens
        for i, token in enumerate(tokens):
            if token in ("different", "another", "other"):
                window = tokens[i + 1 : i + 4]
                if any(w in ("movie", "movies", "film", "films", "flick", "one") for w in window):
                    return True
        return False

    def _pool_response(
        self,
        state: SessionState,
        nt: NormalizedText,
        features: UtteranceFeatures,
        mentions: list[MatchCandidate],
        rng: random.Random,
        debug: dict,
    ) -> str:
        offers: dict[str, _CktOffer] = {}
        generators: list[Generator] = []

        if state.topic_current == "MOVIE" and not features.is_question:
            offer = self._movie_offer(state, features, mentions, rng)
            if offer:
                offers["movie_ckt"] = offer
                generators.append(Generator("movie_ckt", "ckt", lambda t=offer.text: t))
        spec_topic = self._spec_for_topic(state)
        if spec_topic and state.topic_current != "MOVIE":
            offer = self._mini_offer(state, spec_topic, nt, features, rng)
            if offer:
                offers["topic_ckt"] = offer
                generators.append(Generator("topic_ckt", "mini_ckt", lambda t=offer.text: t))

        if features.is_question:
            answer = self.qa.answer(nt.normalized)
            if answer:
                generators.append(Generator("knowledge_qa", "knowledge_qa_stub", lambda a=answer: a))

        if state.topic_current == "NEWS" or features.topic == "NEWS":
            news_rng = random.Random(rng.random())
            generators.append(Generator("news", "news", lambda r=news_rng: self._news_text(nt, r)))

        if features.is_question and "knowledge_qa" not in {g.name for g in generators}:
            shrug = rng.choice(QUESTION_SHRUG)
            generators.append(Generator("chitchat", "chitchat_stub", lambda s=shrug: s))
        else:
            line = self.chitchat.line(rng)
            generators.append(Generator("chitchat", "chitchat_stub", lambda s=line: s))

        candidates = gather(generators, timeout=self.config.generator_timeout)
        topic_keywords = frozenset(self.lexicons.topic_keywords.get(state.topic_current, ()))
        for candidate in candidates:
            score_metrics(candidate, topic_keywords)

        ruled = rank_rule_based(candidates, features.intent, state.topic_current, self.priority)
        best = rank_polynomial(candidates, self.config.ranker_weights)
        ordered = sorted(
            candidates,
            key=lambda c: (-(c.score or 0.0), c.generator),
        )
        if ruled is not None:
            ordered = [ruled] + [c for c in ordered if c is not ruled]
            debug["ranker"] = "rule"
        else:
            debug["ranker"] = "polynomial"
            if best is not None:
                ordered = [best] + [c for c in ordered if c is not best]
        debug["candidates"] = _candidates_summary(candidates)

        for candidate in ordered:
            texts = [candidate.text]
            offer = offers.get(candidate.generator)
            if offer:
                extra = [v for v in offer.alternatives if v != candidate.text]
                rng.shuffle(extra)
                texts.extend(extra)
            for text in texts:
                final = build_response(text, self.config.max_response_chars)
                out_verdict = check_response(final, lexicon=self.sensitive)
                if out_verdict.blocked:
                    debug.setdefault("output_retries", []).append(
                        {"generator": candidate.generator, "category": out_verdict.category}
                    )
                    continue
                debug["generator"] = candidate.generator
                debug["output_filter"] = {"blocked": False}
                if offer:
                    self._commit_offer(state, candidate.generator, offer, debug)
                return text
        debug["generator"] = "fallback"
        debug["output_filter"] = {"blocked": False}
        return STUCK_LINE

    def _commit_offer(self, state: SessionState, name: str, offer: _CktOffer, debug: dict) -> None:
        if name == "movie_ckt" and offer.movie_state is not None:
            state.movie = offer.movie_state
            if offer.question_kind:
                debug["movie"] = {
                    "current": offer.movie_state.movie_current,
                    "question_kind": offer.question_kind,
                    "stack_size": len(offer.movie_state.stack_topic),
                }
        elif name == "topic_ckt" and offer.mini_state is not None:
            self._save_mini_state(state, offer.mini_state)
            if offer.chain_to:
                state.active_spec = offer.chain_to
                debug["chained_to"] = offer.chain_to
