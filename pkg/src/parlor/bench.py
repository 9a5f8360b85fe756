"""Latency benchmarking with a delimited report and a rendered figure."""
from __future__ import annotations

import logging
import random
import string
import time
from pathlib import Path

from .config import EngineConfig
from .dialog import Engine
from .entity_index import EntityRecord, SearchIndex, build_index, make_record
from .normtext import normalize
from .store import MemoryStore

log = logging.getLogger(__name__)

_WORDS = (
    "amber bright cedar dawn ember frost golden harbor iron jade keen lunar "
    "meadow noble ocean pale quiet river stone tide umber velvet winter".split()
)


def percentile(values: list[float], q: float) -> float:
    """Linear-interpolated percentile; q in [0, 100]."""
    if not values:
        raise ValueError("no values")
    if not 0 <= q <= 100:
        raise ValueError("q must be in [0, 100]")
    ordered = sorted(values)
    if len(ordered) == 1:
        return ordered[0]
    pos = (len(ordered) - 1) * q / 100.0
    lower = int(pos)
    frac = pos - lower
    if lower + 1 >= len(ordered):
        return ordered[-1]
    return ordered[lower] * (1 - frac) + ordered[lower + 1] * frac


def synthetic_records(count: int, rng: random.Random) -> list[EntityRecord]:
    """Distinct multi-word entities with vote-like ranking attributes."""
    records = []
    seen = set()
    for i in range(count):
        while True:
            words = rng.sample(_WORDS, rng.randint(2, 4))
            suffix = "".join(rng.choices(string.ascii_lowercase, k=3))
            name = " ".join(words + [suffix])
            if name not in seen:
                seen.add(name)
                break
        records.append(
            make_record(
                id=f"syn{i:07d}",
                name=name,
                entity_type="movie" if i % 3 == 0 else "book",
                ranking_attribute=float(rng.randint(10, 10_000_000)),
                source="synthetic",
            )
        )
    return records


def bench_retrieve(index: SearchIndex, queries: list[str]) -> list[float]:
    timings = []
    for query in queries:
        nt = normalize(query)
        start = time.perf_counter()
        index.retrieve(nt, limit=5)
        timings.append((time.perf_counter() - start) * 1000.0)
    return timings


def bench_turns(engine: Engine, texts: list[str]) -> list[float]:
    session_id = engine.create_session(session_id="bench-session")
    timings = []
    for text in texts:
        start = time.perf_counter()
        engine.handle_turn(session_id, text)
        timings.append((time.perf_counter() - start) * 1000.0)
    return timings


def summarize_timings(operation: str, timings: list[float]) -> dict:
    return {
        "operation": operation,
        "count": len(timings),
        "mean_ms": sum(timings) / len(timings),
        "p50_ms": percentile(timings, 50),
        "p95_ms": percentile(timings, 95),
        "p99_ms": percentile(timings, 99),
    }


_REPORT_COLUMNS = ("operation", "count", "mean_ms", "p50_ms", "p95_ms", "p99_ms")


def write_report(rows: list[dict], out_dir: str | Path) -> tuple[Path, Path]:
    """Write the latency table as TSV plus a bar figure alongside it."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / "latency.tsv"
    with tsv_path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(_REPORT_COLUMNS) + "\n")
        for row in rows:
            cells = [
                str(row[c]) if c in ("operation", "count") else f"{row[c]:.3f}" for c in _REPORT_COLUMNS
            ]
            fh.write("\t".join(cells) + "\n")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    labels = [row["operation"] for row in rows]
    x = range(len(rows))
    width = 0.25
    for offset, metric, shade in ((-width, "p50_ms", "#4c72b0"), (0.0, "p95_ms", "#dd8452"), (width, "p99_ms", "#c44e52")):
        ax.bar([i + offset for i in x], [row[metric] for row in rows], width=width, label=metric, color=shade)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("latency (ms)")
    ax.set_title("engine latency percentiles")
    ax.legend()
    fig.tight_layout()
    fig_path = out_dir / "latency.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return tsv_path, fig_path


def run(out_dir: str | Path, entity_count: int = 20_000, query_count: int = 200, turn_count: int = 50, seed: int = 7) -> list[dict]:
    rng = random.Random(seed)
    records = synthetic_records(entity_count, rng)
    index = build_index(records)
    queries = []
    for _ in range(query_count):
        record = rng.choice(records)
        queries.append(f"i was thinking about {record.name} earlier today")
    retrieve_times = bench_retrieve(index, queries)

    engine = Engine(config=EngineConfig(seed=seed), store=MemoryStore(), index=index)
    texts = []
    chatter = (
        "that sounds interesting",
        "tell me more about it",
        "i watched a movie yesterday",
        "my week was fine",
        "i like quiet evenings",
    )
    for i in range(turn_count):
        texts.append(chatter[i % len(chatter)])
    turn_times = bench_turns(engine, texts)

    rows = [
        summarize_timings("retrieve", retrieve_times),
        summarize_timings("handle_turn", turn_times),
    ]
    tsv_path, fig_path = write_report(rows, out_dir)
    log.info("benchmark written to %s and %s", tsv_path, fig_path)
    return rows
