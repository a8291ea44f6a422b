"""Command-line entry points: serve, ask, schema render, sql check, eval run."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import yaml

from .config import AppConfig, ConfigError, config_from_mapping, load_config
from .evaluation import EvalReport, bundled_suite, load_suite, render_report, run_suite
from .orchestrator import ConversationState
from .runtime import build_runtime, build_schema_document
from .sandbox import SandboxError, validate_select

log = logging.getLogger(__name__)


def _load_config(path: str | None) -> AppConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="YAML configuration file.")
@click.option("--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, verbose: bool):
    """Conversational SQL assistant for an ERP database."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.pass_context
def serve(ctx: click.Context, host: str, port: int):
    """Run the HTTP chat service."""
    import uvicorn

    from .service import create_app

    config = _load_config(ctx.obj["config_path"])
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command()
@click.argument("question")
@click.option("--events/--no-events", default=True, show_default=True,
              help="Print the agent event trail.")
@click.pass_context
def ask(ctx: click.Context, question: str, events: bool):
    """Answer one question in a throwaway session."""
    config = _load_config(ctx.obj["config_path"])
    runtime = build_runtime(config)
    state = ConversationState(session_id="cli")
    reply, status, trail = runtime.orchestrator.handle_turn(state, question)
    if events:
        for event in trail:
            click.echo(f"[{event.kind}] {json.dumps(event.payload, ensure_ascii=False)}")
        click.echo("")
    click.echo(reply)
    if status == "failed":
        sys.exit(1)


@main.group()
def schema():
    """Schema document commands."""


@schema.command("render")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write to a file instead of stdout.")
@click.pass_context
def schema_render(ctx: click.Context, out_path: str | None):
    """Render the markdown schema document."""
    config = _load_config(ctx.obj["config_path"])
    document = build_schema_document(config)
    if out_path:
        Path(out_path).write_text(document.rendered, "utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(document.rendered, nl=False)


@main.group()
def sql():
    """SQL validation commands."""


@sql.command("check")
@click.argument("sql_file", type=click.Path(exists=True, dir_okay=False))
def sql_check(sql_file: str):
    """Validate that a file holds a single read-only SELECT."""
    text = Path(sql_file).read_text("utf-8")
    try:
        validated = validate_select(text)
    except SandboxError as exc:
        click.echo(f"REJECTED: {exc}")
        sys.exit(1)
    tables = ", ".join(sorted(validated.referenced_tables)) or "(none)"
    columns = ", ".join(validated.output_columns) or "(none)"
    click.echo("OK: single SELECT statement")
    click.echo(f"tables: {tables}")
    click.echo(f"output columns: {columns}")


@main.group("eval")
def eval_group():
    """Evaluation commands."""


@eval_group.command("run")
@click.option("--suite", "suite_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="YAML question suite; defaults to the bundled one.")
@click.option("--models", "models_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="YAML list of model configurations.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Markdown report destination.")
@click.pass_context
def eval_run(ctx: click.Context, suite_path: str | None, models_path: str, out_path: str):
    """Run a suite against each configured model and write the report."""
    base = _load_config(ctx.obj["config_path"])
    suite = load_suite(suite_path) if suite_path else bundled_suite()
    try:
        models_raw = yaml.safe_load(Path(models_path).read_text("utf-8")) or {}
    except yaml.YAMLError as exc:
        raise click.ClickException(f"models file is not valid YAML: {exc}") from exc
    entries = models_raw.get("models")
    if not isinstance(entries, list) or not entries:
        raise click.ClickException("models file must hold a non-empty 'models' list")

    reports = []
    for entry in entries:
        if not isinstance(entry, dict) or "name" not in entry:
            raise click.ClickException(f"malformed model entry: {entry!r}")
        overlay = {
            "database_path": base.database_path,
            "semantic_path": base.semantic_path,
            "prompt_dir": base.prompt_dir,
            "storage_dir": base.storage_dir,
            "backend": entry.get("backend") or {},
            "roles": entry.get("roles") or {},
            "limits": entry.get("limits")
            or {
                "reasoner_attempts": base.limits.reasoner_attempts,
                "critic_rounds": base.limits.critic_rounds,
            },
        }
        try:
            model_config = config_from_mapping(overlay)
        except ConfigError as exc:
            raise click.ClickException(f"model '{entry['name']}': {exc}") from exc
        runtime = build_runtime(model_config)
        click.echo(f"running suite against {entry['name']} ...")
        reports.append(run_suite(runtime.orchestrator, suite, str(entry["name"])))

    report = EvalReport(suite=suite, models=tuple(reports))
    rendered = render_report(report)
    Path(out_path).write_text(rendered, "utf-8")
    click.echo(f"wrote {out_path}")
    for model in report.models:
        click.echo(f"{model.model_name}: {model.passed}/{len(model.results)}")


if __name__ == "__main__":
    main()
