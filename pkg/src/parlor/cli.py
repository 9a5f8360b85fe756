"""Command line entry points: serve, chat, index, news, ckt, bench."""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import EngineConfig, load_config

log = logging.getLogger(__name__)


def _build_config(config_path: str | None, port: int | None, host: str | None) -> EngineConfig:
    config = load_config(config_path) if config_path else load_config()
    from dataclasses import replace

    overrides = {}
    if port is not None:
        overrides["port"] = port
    if host is not None:
        overrides["host"] = host
    return replace(config, **overrides) if overrides else config


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Conversational engine utilities."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="YAML config file.")
@click.option("--host", default=None, help="Bind address.")
@click.option("--port", type=int, default=None, help="Bind port.")
def serve(config_path: str | None, host: str | None, port: int | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = _build_config(config_path, port, host)
    app = create_app(config=config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="YAML config file.")
@click.option("--device-id", default=None, help="Stable device identity for profile recall.")
def chat(config_path: str | None, device_id: str | None) -> None:
    """Interactive console conversation."""
    from .dialog import Engine
    from .store import FileStore

    config = _build_config(config_path, None, None)
    engine = Engine(config=config, store=FileStore(config.store_dir / "sessions.jsonl"))
    session_id = engine.create_session(device_id=device_id)
    show_debug = False
    click.echo("type /debug to toggle turn details, /quit to leave")
    envelope = engine.handle_turn(session_id, "hello", device_id=device_id)
    click.echo(f"engine> {envelope.text}")
    while True:
        try:
            text = click.prompt("you", prompt_suffix="> ")
        except (EOFError, KeyboardInterrupt, click.Abort):
            click.echo("")
            break
        stripped = text.strip()
        if not stripped:
            continue
        if stripped in ("/quit", "//quit", "/exit"):
            break
        if stripped == "/debug":
            show_debug = not show_debug
            click.echo(f"debug {'on' if show_debug else 'off'}")
            continue
        envelope = engine.handle_turn(session_id, stripped, device_id=device_id)
        click.echo(f"engine> {envelope.text}")
        if show_debug:
            click.echo(json.dumps(envelope.debug, indent=2, default=str))
        if envelope.closed:
            break


@main.group()
def index() -> None:
    """Entity index maintenance."""


@index.command("build")
@click.option("--entities", "entities_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Directory of entity TSV files.")
def index_build(entities_dir: str | None) -> None:
    """Build the retrieval index and report its size."""
    from .entity_index import build_index, load_entity_dir
    from .normtext import _data_dir

    directory = Path(entities_dir) if entities_dir else _data_dir() / "entities"
    records = load_entity_dir(directory)
    built = build_index(records)
    click.echo(f"indexed {len(records)} entities ({built.key_count} keys) from {directory}")


@main.group()
def news() -> None:
    """News corpus maintenance."""


@news.command("ingest")
@click.argument("feed", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="YAML config file.")
def news_ingest(feed: str, config_path: str | None) -> None:
    """Ingest a JSONL article feed into the stored news corpus."""
    from .news import NewsIndex

    config = _build_config(config_path, None, None)
    corpus_path = config.store_dir / "news.jsonl"
    index = NewsIndex.load(corpus_path) if corpus_path.exists() else NewsIndex()
    before = len(index.articles)
    added = index.ingest_file(feed)
    index.save(corpus_path)
    click.echo(f"ingested {added} articles ({before} already stored) into {corpus_path}")


@main.group()
def ckt() -> None:
    """Conversation template maintenance."""


@ckt.command("validate")
@click.argument("directory", type=click.Path(exists=True, file_okay=False), required=False)
def ckt_validate(directory: str | None) -> None:
    """Validate mini template specs and list their topics."""
    from .ckt import load_ckt_specs

    try:
        specs = load_ckt_specs(directory)
    except ValueError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(1)
    for topic, spec in sorted(specs.items()):
        hook = f" -> {spec.entity_hook.chain_to}" if spec.entity_hook else ""
        click.echo(f"{topic}: {len(spec.dialogs)} dialogs{hook}")
    click.echo(f"{len(specs)} specs ok")


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="bench_report", help="Report directory.")
@click.option("--entities", "entity_count", type=int, default=20000, help="Synthetic corpus size.")
@click.option("--queries", "query_count", type=int, default=200, help="Retrieval queries to time.")
@click.option("--turns", "turn_count", type=int, default=50, help="Conversation turns to time.")
def bench(out_dir: str, entity_count: int, query_count: int, turn_count: int) -> None:
    """Measure latency and write a TSV report plus a rendered figure."""
    from .bench import run

    rows = run(out_dir, entity_count=entity_count, query_count=query_count, turn_count=turn_count)
    for row in rows:
        click.echo(
            f"{row['operation']}: p50 {row['p50_ms']:.2f}ms, p95 {row['p95_ms']:.2f}ms, p99 {row['p99_ms']:.2f}ms over {row['count']} runs"
        )
    click.echo(f"report written to {out_dir}/latency.tsv and {out_dir}/latency.png")


if __name__ == "__main__":
    main()
