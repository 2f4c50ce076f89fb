"""Command-line entry points.

Stage verbs (ingest, extract, mediate, judge, simulate, report) advance the
configured pipeline up to their stage and are resumable: completed stages
are never recomputed. triage and principles expose their finer-grained
operations. Exit codes: 0 success, 2 configuration error, 3 stage error.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click

from . import principles as principles_mod
from . import triage as triage_mod
from .errors import ConfigurationError, FlamewardError, StageError
from .gateway import build_gateway
from .pipeline import Pipeline, load_config, load_corpus, run_pipeline
from .threads import canonical_json

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_STAGE = 3


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, ConfigurationError):
        sys.exit(EXIT_CONFIG)
    if isinstance(exc, StageError):
        sys.exit(EXIT_STAGE)
    sys.exit(1)


def _advance(config_path: str, stage: str) -> None:
    try:
        run = run_pipeline(config_path, until_stage=stage)
    except FlamewardError as exc:
        _fail(exc)
        return
    click.echo(f"run {run.run_id}: stage {run.stage} complete ({run.stage_dir(stage)})")


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """Flame-war mediation pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def ingest(config_path: str):
    """Validate the corpus and emit normalized documents plus statistics."""
    _advance(config_path, "ingested")


@main.group()
def triage():
    """Score posts, select by threshold, identify target users."""


@triage.command("score")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--in", "corpus_path", default=None, type=click.Path(exists=True),
              help="Corpus path (defaults to the configured one).")
@click.option("--model", "model_name", default=None, help="Roster model name.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="scores.csv destination (stdout when omitted).")
def triage_score(config_path: str, corpus_path: str | None, model_name: str | None,
                 out_path: str | None):
    """Score every post 0-10 for flame-war likelihood."""
    try:
        config = load_config(config_path)
        gateway, models = build_gateway(config["gateway"], base_dir=config.get("out_dir", "."))
        name = model_name or config["roster"]["triage_model"]
        if name not in models:
            raise ConfigurationError(f"unknown model '{name}'")
        trees = load_corpus(corpus_path or config["corpus"])
        scores = [triage_mod.score_post(t, models[name], gateway) for t in trees]
    except FlamewardError as exc:
        _fail(exc)
        return
    text = triage_mod.scores_csv(scores, str(config.get("run_timestamp", "")))
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


@triage.command("select")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--min", "minimum", default=triage_mod.RETAIN_MIN, show_default=True)
@click.option("--max", "maximum", default=triage_mod.RETAIN_MAX, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
def triage_select(scores_path: str, minimum: int, maximum: int, out_path: str | None):
    """Keep post ids whose score falls inside [--min, --max]."""
    with open(scores_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    retained = sorted(r["post_id"] for r in rows if minimum <= int(r["score"]) <= maximum)
    text = canonical_json(retained)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path} ({len(retained)} retained)")
    else:
        click.echo(text, nl=False)


@triage.command("targets")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--in", "corpus_path", default=None, type=click.Path(exists=True))
@click.option("--model", "model_name", default=None)
@click.option("--out", "out_path", default=None, type=click.Path())
def triage_targets(config_path: str, corpus_path: str | None, model_name: str | None,
                   out_path: str | None):
    """Identify the two most-engaged flame participants per thread."""
    try:
        config = load_config(config_path)
        gateway, models = build_gateway(config["gateway"], base_dir=config.get("out_dir", "."))
        name = model_name or config["roster"]["triage_model"]
        if name not in models:
            raise ConfigurationError(f"unknown model '{name}'")
        trees = load_corpus(corpus_path or config["corpus"])
        out = {}
        for tree in trees:
            if len(tree.authors) < 2:
                continue
            pair = triage_mod.identify_target_pair(tree, models[name], gateway)
            out[tree.post_id] = {"user_a": pair.user_a, "user_b": pair.user_b}
    except FlamewardError as exc:
        _fail(exc)
        return
    text = canonical_json(out)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def extract(config_path: str):
    """Extract the maximal subtrees where both target users appear."""
    _advance(config_path, "extracted")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--task", type=click.Choice(["judgment", "steering", "both"]), default="both",
              show_default=True, help="Recorded for compatibility; the pipeline emits both.")
def mediate(config_path: str, task: str):
    """Generate judgment and steering mediations for each conversation."""
    _advance(config_path, "mediated")


@main.group()
def principles():
    """Principle elicitation, merging, verification, judging."""


@principles.command("elicit")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def principles_elicit(config_path: str):
    """Propose and merge principle banks (runs the principled stage)."""
    _advance(config_path, "principled")


@principles.command("merge")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def principles_merge(config_path: str):
    """Alias of elicit: proposals and merging happen in one stage."""
    _advance(config_path, "principled")


@principles.command("verify")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--conversation", "conv", required=True)
@click.option("--apply", "decisions_path", required=True, type=click.Path(exists=True),
              help="NDJSON file of verification records to apply in order.")
def principles_verify(config_path: str, conv: str, decisions_path: str):
    """Apply a decision-record file to a conversation's bank (headless review)."""
    try:
        config = load_config(config_path)
        pipe = Pipeline(config)
        bank_path = pipe.run.stage_dir("principled") / f"{conv}.bank.json"
        if not bank_path.exists():
            raise ConfigurationError(f"no bank for conversation '{conv}' (run principles elicit)")
        bank = pipe.load_bank(conv)
        applied = 0
        lines = Path(decisions_path).read_text(encoding="utf-8").splitlines()
        log_path = pipe.run.stage_dir("principled") / f"{conv}.decisions.ndjson"
        with open(log_path, "a", encoding="utf-8") as fh:
            for line in lines:
                if not line.strip():
                    continue
                record = principles_mod.record_from_dict(json.loads(line))
                bank = principles_mod.apply_verification(bank, record)
                fh.write(json.dumps(principles_mod.record_to_dict(record), sort_keys=True) + "\n")
                applied += 1
    except FlamewardError as exc:
        _fail(exc)
        return
    click.echo(f"applied {applied} record(s) to {conv}; active principles: "
               f"{len(bank.active_principles())}")


@principles.command("judge")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def principles_judge(config_path: str):
    """Judge mediations against verified banks (runs the judged stage)."""
    _advance(config_path, "judged")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def judge(config_path: str):
    """Judge mediations against the principle banks."""
    _advance(config_path, "judged")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=None, type=int, help="Override the configured seed.")
@click.option("--max-turns", default=None, type=int, help="Override max continuation turns.")
def simulate(config_path: str, seed: int | None, max_turns: int | None):
    """Simulate post-mediation user behavior and compute metric deltas."""
    try:
        config = load_config(config_path)
        if seed is not None:
            config["seed"] = seed
        if max_turns is not None:
            config.setdefault("simulation", {})["max_turns"] = max_turns
        run = run_pipeline(config, until_stage="simulated")
    except FlamewardError as exc:
        _fail(exc)
        return
    click.echo(f"run {run.run_id}: stage {run.stage} complete")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.argument("view", type=click.Choice(["table", "leaderboard", "correlation", "effects"]),
                required=False)
def report(config_path: str, view: str | None):
    """Build the report bundle; optionally print one view to stdout."""
    try:
        run = run_pipeline(config_path, until_stage="reported")
    except FlamewardError as exc:
        _fail(exc)
        return
    out = run.stage_dir("reported")
    files = {
        "table": "score_table.csv",
        "leaderboard": "leaderboard.csv",
        "correlation": "correlation_points.csv",
        "effects": "effects.csv",
    }
    if view:
        path = out / files[view]
        if not path.exists():
            click.echo(f"error: {path.name} was not produced (see {out})", err=True)
            sys.exit(EXIT_STAGE)
        click.echo(path.read_text(encoding="utf-8"), nl=False)
    else:
        click.echo(f"report bundle at {out}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--until", "until_stage", default=None, help="Stop after this stage.")
def run(config_path: str, until_stage: str | None):
    """Run (or resume) the full pipeline."""
    try:
        result = run_pipeline(config_path, until_stage=until_stage)
    except FlamewardError as exc:
        _fail(exc)
        return
    click.echo(f"run {result.run_id}: stage {result.stage} complete ({result.out_dir})")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--run-dir", "run_dir", default=None, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True)
@click.option("--quorum", default=None, type=int,
              help="Annotator submissions needed per conversation (default from config, else 3).")
def serve(config_path: str | None, run_dir: str | None, host: str, port: int,
          quorum: int | None):
    """Serve the review API over a pipeline run (stage >= principled)."""
    import uvicorn

    from .service import DEFAULT_QUORUM, create_app

    try:
        if run_dir is None:
            if config_path is None:
                raise ConfigurationError("pass --config or --run-dir")
            config = load_config(config_path)
            run_dir = config["out_dir"]
            if quorum is None:
                quorum = int(config.get("judging", {}).get("quorum", DEFAULT_QUORUM))
        app = create_app(run_dir, quorum=quorum or DEFAULT_QUORUM)
    except (FlamewardError, FileNotFoundError) as exc:
        _fail(ConfigurationError(str(exc)))
        return
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
