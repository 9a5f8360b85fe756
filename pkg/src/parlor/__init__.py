"""A self-contained conversational engine.

The library layers a topic-rotating dialog manager over knowledge-driven
entity retrieval, scripted conversation templates, sensitive-content
filtering, pooled response generation with ranking, and a news module.
The same engine backs the HTTP service and the console chat.
"""
from .config import EngineConfig, load_config
from .dialog import Engine, ResponseEnvelope, SessionClosed, SessionNotFound, SessionState
from .entity_index import SearchIndex, build_index, load_entity_corpus, load_entity_dir, make_record
from .news import NewsIndex, ingest_articles
from .normtext import classify_intent_topic, classify_sentiment, normalize
from .safety import check_response, check_utterance
from .store import FileStore, MemoryStore, Store

__version__ = "1.0.0"

__all__ = [
    "Engine",
    "EngineConfig",
    "FileStore",
    "MemoryStore",
    "NewsIndex",
    "ResponseEnvelope",
    "SearchIndex",
    "SessionClosed",
    "SessionNotFound",
    "SessionState",
    "Store",
    "build_index",
    "check_response",
    "check_utterance",
    "classify_intent_topic",
    "classify_sentiment",
    "ingest_articles",
    "load_config",
    "load_entity_corpus",
    "load_entity_dir",
    "make_record",
    "normalize",
    "__version__",
]
