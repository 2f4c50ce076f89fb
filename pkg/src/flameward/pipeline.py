"""End-to-end pipeline: ingest -> triage -> extract -> mediate -> principles
-> judge -> simulate -> report.

Each stage persists its artifacts under ``out_dir/stages/<stage>/`` and drops
a completion marker, so a rerun resumes after the last finished stage and a
completed run is a no-op. Every artifact write is canonical (sorted keys,
ordered iteration), so identical config plus mock providers yields a
byte-identical bundle; wall-clock state lives only in the run manifest.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from . import analysis, mediation, principles, simulation, triage
from .errors import ConfigurationError, StageError
from .gateway import ModelSpec, build_gateway
from .prompts import serialize_thread
from .textmetrics import (
    LexiconSet,
    analyze,
    builtin_lexicons,
    full_metrics,
    metrics_csv_header,
    metrics_csv_row,
)
from .threads import (
    ExtractionResult,
    ThreadTree,
    canonical_json,
    compute_corpus_stats,
    export_thread,
    extract_pair_subthreads,
    ingest_thread,
    stats_csv,
)

logger = logging.getLogger(__name__)

STAGES = (
    "ingested",
    "triaged",
    "extracted",
    "mediated",
    "principled",
    "judged",
    "simulated",
    "reported",
)


@dataclass
class PipelineRun:
    run_id: str
    stage: str | None
    config: dict
    out_dir: Path
    timestamps: dict[str, str]

    def stage_dir(self, stage: str) -> Path:
        return self.out_dir / "stages" / stage

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "stage": self.stage,
            "config": self.config,
            "timestamps": self.timestamps,
            "artifacts": {s: str(self.stage_dir(s)) for s in STAGES},
        }


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, doc) -> None:
    _write(path, canonical_json(doc))


def load_corpus(path: str | Path) -> list[ThreadTree]:
    """Corpus file: one thread document, an array of them, or a directory of
    ``*.json`` files. Trees come back sorted by post id."""
    p = Path(path)
    docs: list[dict] = []
    if p.is_dir():
        for f in sorted(p.glob("*.json")):
            loaded = json.loads(f.read_text(encoding="utf-8"))
            docs.extend(loaded if isinstance(loaded, list) else [loaded])
    else:
        loaded = json.loads(p.read_text(encoding="utf-8"))
        docs = loaded if isinstance(loaded, list) else [loaded]
    trees = [ingest_thread(d) for d in docs]
    trees.sort(key=lambda t: t.post_id)
    return trees


def extraction_to_dict(ex: ExtractionResult) -> dict:
    return {
        "source_post_id": ex.source_post_id,
        "target_users": list(ex.target_users),
        "kept_comment_ids": sorted(ex.kept_comment_ids),
        "kept_forest": export_thread(ex.kept_forest),
    }


def extraction_from_dict(data: dict) -> ExtractionResult:
    forest = ingest_thread(data["kept_forest"])
    return ExtractionResult(
        source_post_id=data["source_post_id"],
        target_users=tuple(data["target_users"]),
        kept_comment_ids=frozenset(data["kept_comment_ids"]),
        kept_forest=forest,
    )


def _validate_config(config: dict) -> None:
    for key in ("corpus", "out_dir", "gateway", "roster"):
        if key not in config:
            raise ConfigurationError(f"config missing required key '{key}'")
    roster = config["roster"]
    for key in ("triage_model", "evaluated_models", "proposer_models", "aggregator_model",
                "judge_model", "simulator_model"):
        if key not in roster:
            raise ConfigurationError(f"config roster missing '{key}'")
    if not Path(config["corpus"]).exists():
        raise ConfigurationError(f"corpus path does not exist: {config['corpus']}")


def _run_id(config: dict) -> str:
    import hashlib

    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()[:12]


class Pipeline:
    """One configured run. ``execute`` advances stage by stage, skipping
    stages whose completion marker already exists."""

    def __init__(self, config: dict):
        _validate_config(config)
        self.config = config
        self.out_dir = Path(config["out_dir"])
        self.gateway, self.models = build_gateway(config["gateway"], base_dir=self.out_dir)
        self.lexicons: LexiconSet = builtin_lexicons()
        self.workers = int(config.get("workers", 4))
        roster = config["roster"]
        self.triage_model = self._model(roster["triage_model"])
        self.evaluated = {name: self._model(name) for name in sorted(roster["evaluated_models"])}
        self.proposers = {name: self._model(name) for name in sorted(roster["proposer_models"])}
        self.aggregator = self._model(roster["aggregator_model"])
        self.judge = self._model(roster["judge_model"])
        self.simulator = self._model(roster["simulator_model"])
        self.run = PipelineRun(
            run_id=_run_id(config),
            stage=None,
            config=config,
            out_dir=self.out_dir,
            timestamps={},
        )

    def _model(self, name: str) -> ModelSpec:
        if name not in self.models:
            raise ConfigurationError(f"roster names unknown model '{name}'")
        return self.models[name]

    # -- stage plumbing ------------------------------------------------

    def _marker(self, stage: str) -> Path:
        return self.run.stage_dir(stage) / "_complete"

    def _finish(self, stage: str) -> None:
        _write(self._marker(stage), stage + "\n")
        self.run.stage = stage
        self.run.timestamps[stage] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        _write_json(self.out_dir / "run.json", self.run.as_dict())

    def _fan_out(self, items: list, fn) -> list:
        """Apply fn over items concurrently; results return in input order."""
        if self.workers <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def execute(self, until_stage: str | None = None) -> PipelineRun:
        if until_stage is not None and until_stage not in STAGES:
            raise ConfigurationError(f"unknown stage '{until_stage}'")
        manifest = self.out_dir / "run.json"
        if manifest.exists():
            recorded = json.loads(manifest.read_text(encoding="utf-8")).get("run_id")
            if recorded != self.run.run_id:
                raise ConfigurationError(
                    f"{self.out_dir} belongs to run {recorded}; this config hashes to "
                    f"{self.run.run_id}. Use a fresh out_dir for a changed config."
                )
        for stage in STAGES:
            if self._marker(stage).exists():
                self.run.stage = stage
                logger.info("stage %s already complete; skipping", stage)
            else:
                logger.info("running stage %s", stage)
                try:
                    getattr(self, f"_stage_{stage}")()
                except StageError:
                    raise
                except Exception as exc:
                    raise StageError(stage, str(exc)) from exc
                self._finish(stage)
            if until_stage is not None and stage == until_stage:
                break
        return self.run

    # -- stages ----------------------------------------------------------

    def _stage_ingested(self) -> None:
        trees = load_corpus(self.config["corpus"])
        out = self.run.stage_dir("ingested")
        _write_json(out / "corpus.json", [export_thread(t) for t in trees])
        _write(out / "corpus_stats.csv", stats_csv(compute_corpus_stats(trees)))

    def _corpus(self) -> list[ThreadTree]:
        doc = json.loads(
            (self.run.stage_dir("ingested") / "corpus.json").read_text(encoding="utf-8")
        )
        return [ingest_thread(d) for d in doc]

    def _stage_triaged(self) -> None:
        trees = self._corpus()
        out = self.run.stage_dir("triaged")
        tcfg = self.config.get("triage", {})
        minimum = int(tcfg.get("min_score", triage.RETAIN_MIN))
        maximum = int(tcfg.get("max_score", triage.RETAIN_MAX))
        timestamp = str(self.config.get("run_timestamp", ""))

        scores = self._fan_out(trees, lambda t: triage.score_post(t, self.triage_model, self.gateway))
        retained = triage.retain_by_threshold(scores, minimum, maximum)

        targets: dict[str, dict] = {}
        dropped: dict[str, str] = {}
        for tree in trees:
            if tree.post_id not in retained:
                dropped[tree.post_id] = "score outside retention window"
                continue
            if len(tree.authors) < 2:
                dropped[tree.post_id] = "fewer than two distinct authors"
                continue
            pair = triage.identify_target_pair(tree, self.triage_model, self.gateway)
            targets[tree.post_id] = {
                "user_a": pair.user_a,
                "user_b": pair.user_b,
                "evidence_comment_ids": list(pair.evidence_comment_ids),
            }
        _write(out / "scores.csv", triage.scores_csv(scores, timestamp))
        _write_json(out / "retained.json", sorted(retained))
        _write_json(out / "targets.json", targets)
        _write_json(out / "dropped.json", dropped)

    def _stage_extracted(self) -> None:
        trees = {t.post_id: t for t in self._corpus()}
        targets = json.loads(
            (self.run.stage_dir("triaged") / "targets.json").read_text(encoding="utf-8")
        )
        out = self.run.stage_dir("extracted")
        dropped: dict[str, str] = {}
        for post_id in sorted(targets):
            pair = targets[post_id]
            ex = extract_pair_subthreads(trees[post_id], pair["user_a"], pair["user_b"])
            if ex.is_empty:
                dropped[post_id] = "target users never co-occur in a subtree"
                continue
            _write_json(out / f"{post_id}.json", extraction_to_dict(ex))
        _write_json(out / "dropped.json", dropped)

    def _extractions(self) -> dict[str, ExtractionResult]:
        out = self.run.stage_dir("extracted")
        result = {}
        for f in sorted(out.glob("*.json")):
            if f.name == "dropped.json":
                continue
            result[f.stem] = extraction_from_dict(json.loads(f.read_text(encoding="utf-8")))
        return result

    def _stage_mediated(self) -> None:
        extractions = self._extractions()
        out = self.run.stage_dir("mediated")
        jobs = [
            (model_name, post_id)
            for model_name in self.evaluated
            for post_id in sorted(extractions)
        ]

        def mediate(job):
            model_name, post_id = job
            spec = self.evaluated[model_name]
            ex = extractions[post_id]
            report = mediation.generate_judgment(ex, spec, self.gateway)
            steer = mediation.generate_steering(ex, spec, self.gateway, judgment=report)
            return model_name, post_id, report, steer

        for model_name, post_id, report, steer in self._fan_out(jobs, mediate):
            _write_json(out / model_name / f"{post_id}.judgment.json", report.as_dict())
            _write_json(out / model_name / f"{post_id}.steering.json", steer.as_dict())

    def _stage_principled(self) -> None:
        extractions = self._extractions()
        out = self.run.stage_dir("principled")
        for post_id in sorted(extractions):
            ex = extractions[post_id]
            proposals = {
                name: principles.elicit_principles(ex, spec, self.gateway, name)
                for name, spec in self.proposers.items()
            }
            bank = principles.merge_principles(post_id, proposals, self.aggregator, self.gateway)
            _write_json(out / f"{post_id}.bank.json", principles.bank_to_dict(bank))
            log_path = out / f"{post_id}.decisions.ndjson"
            if not log_path.exists():
                _write(log_path, "")

    def load_bank(self, post_id: str) -> principles.PrincipleBank:
        """Merged bank with its decision log replayed on top."""
        out = self.run.stage_dir("principled")
        bank = principles.bank_from_dict(
            json.loads((out / f"{post_id}.bank.json").read_text(encoding="utf-8"))
        )
        log_path = out / f"{post_id}.decisions.ndjson"
        if log_path.exists():
            for line in log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    record = principles.record_from_dict(json.loads(line))
                    bank = principles.apply_verification(bank, record)
        return bank

    def _stage_judged(self) -> None:
        extractions = self._extractions()
        jcfg = self.config.get("judging", {})
        waive = bool(jcfg.get("waive_verification", False))
        include_conv = bool(jcfg.get("include_conversation", False))
        trees = {t.post_id: t for t in self._corpus()}
        med_dir = self.run.stage_dir("mediated")

        records = []
        for post_id in sorted(extractions):
            bank = self.load_bank(post_id)
            conv_text = (
                serialize_thread(extractions[post_id].kept_forest) if include_conv else None
            )
            for model_name in self.evaluated:
                jdoc = json.loads(
                    (med_dir / model_name / f"{post_id}.judgment.json").read_text(encoding="utf-8")
                )
                sdoc = json.loads(
                    (med_dir / model_name / f"{post_id}.steering.json").read_text(encoding="utf-8")
                )
                report = mediation.JudgmentReport(
                    conversation_id=jdoc["conversation_id"],
                    unfair_claims=(),
                    emotional_triggers=(),
                    escalation_points=(),
                    fairness_assessment=jdoc["fairness_assessment"],
                    raw_model_text=jdoc["raw_model_text"],
                )
                steer = mediation.SteeringMessage(
                    conversation_id=sdoc["conversation_id"],
                    message_text=sdoc["message_text"],
                    addressed_users=tuple(sdoc["addressed_users"]),
                    conditioned_on_judgment=sdoc["conditioned_on_judgment"],
                )
                for output in (report, steer):
                    records.append(
                        principles.judge_mediation(
                            bank,
                            output,
                            self.judge,
                            self.gateway,
                            evaluated_model=model_name,
                            domain_tag=trees[post_id].domain_tag,
                            conversation_text=conv_text,
                            waive_verification=waive,
                        )
                    )
        _write_json(
            self.run.stage_dir("judged") / "records.json",
            [principles.evaluation_to_dict(r) for r in records],
        )

    def _stage_simulated(self) -> None:
        extractions = self._extractions()
        scfg = self.config.get("simulation", {})
        seed = int(self.config.get("seed", 0))
        max_turns = int(scfg.get("max_turns", simulation.MAX_TURNS_DEFAULT))
        task = scfg.get("mediation_task", "steering")
        med_dir = self.run.stage_dir("mediated")
        out = self.run.stage_dir("simulated")
        skips: dict[str, str] = {}

        for model_name in self.evaluated:
            for post_id in sorted(extractions):
                ex = extractions[post_id]
                doc = json.loads(
                    (med_dir / model_name / f"{post_id}.{task}.json").read_text(encoding="utf-8")
                )
                if task == "steering":
                    output = mediation.SteeringMessage(
                        conversation_id=doc["conversation_id"],
                        message_text=doc["message_text"],
                        addressed_users=tuple(doc["addressed_users"]),
                        conditioned_on_judgment=doc["conditioned_on_judgment"],
                    )
                else:
                    output = mediation.JudgmentReport(
                        conversation_id=doc["conversation_id"],
                        unfair_claims=(),
                        emotional_triggers=(),
                        escalation_points=(),
                        fairness_assessment=doc["fairness_assessment"],
                        raw_model_text=doc["raw_model_text"],
                    )
                run = simulation.simulate_continuation(
                    ex,
                    output,
                    self.simulator,
                    self.gateway,
                    seed=seed,
                    max_turns=max_turns,
                    lexicons=self.lexicons,
                )
                if isinstance(run, simulation.SimulationSkip):
                    skips[f"{model_name}/{post_id}"] = run.reason
                    continue
                tail = [
                    text
                    for _, text in simulation.pair_turns(ex)[run.injection_index :]
                ]
                if not tail:
                    # Injection after the final turn: the original tail is the
                    # peak-escalation turn itself, so the contrast stays defined.
                    tail = [simulation.pair_turns(ex)[-1][1]]
                delta = simulation.compare(tail, run, self.lexicons)
                doc_out = run.as_dict()
                if isinstance(delta, simulation.DeltaReport):
                    doc_out["delta_report"] = delta.as_dict()
                else:
                    doc_out["delta_skip"] = delta.reason
                _write_json(out / model_name / f"{post_id}.sim.json", doc_out)
        _write_json(out / "skipped.json", skips)

    def _stage_reported(self) -> None:
        out = self.run.stage_dir("reported")
        records = [
            principles.evaluation_from_dict(d)
            for d in json.loads(
                (self.run.stage_dir("judged") / "records.json").read_text(encoding="utf-8")
            )
        ]
        table = analysis.build_score_table(records)
        _write(out / "score_table.csv", analysis.score_table_csv(table))
        _write(out / "leaderboard.csv", analysis.leaderboard_csv(table))

        corr = analysis.correlate_tasks(table)
        _write(out / "correlation_points.csv", analysis.correlation_csv(corr))
        _write_json(
            out / "correlation.json",
            {"pearson_r": corr.r, "reason": corr.reason, "n_models": len(corr.points)},
        )

        med_dir = self.run.stage_dir("mediated")
        model_vectors = []
        metric_rows = ["source,text_id," + metrics_csv_header()]
        for model_name in self.evaluated:
            for f in sorted((med_dir / model_name).glob("*.steering.json")):
                doc = json.loads(f.read_text(encoding="utf-8"))
                vector = full_metrics(analyze(doc["message_text"]), self.lexicons)
                model_vectors.append(vector)
                text_id = f.name.removesuffix(".steering.json")
                metric_rows.append(f"{model_name},{text_id}," + metrics_csv_row(vector))

        human_path = self.config.get("human_reference")
        if human_path and Path(human_path).exists():
            replies = json.loads(Path(human_path).read_text(encoding="utf-8"))
            human_vectors = []
            for r in replies:
                vector = full_metrics(analyze(r["text"]), self.lexicons)
                human_vectors.append(vector)
                metric_rows.append(f"human,{r['id']}," + metrics_csv_row(vector))
            effects = analysis.effect_sizes(model_vectors, human_vectors)
            _write(out / "effects.csv", analysis.effects_csv(effects))
            _write(
                out / "distributions.csv",
                analysis.distributions_csv({"model": model_vectors, "human": human_vectors}),
            )
        else:
            _write_json(out / "effects_skipped.json", {"reason": "no human_reference configured"})
        _write(out / "metrics.csv", "\n".join(metric_rows) + "\n")

        sim_dir = self.run.stage_dir("simulated")
        lines = ["model,conversation_id,metric,pre,post,delta"]
        for model_name in self.evaluated:
            model_dir = sim_dir / model_name
            if not model_dir.exists():
                continue
            for f in sorted(model_dir.glob("*.sim.json")):
                doc = json.loads(f.read_text(encoding="utf-8"))
                delta = doc.get("delta_report")
                if not delta:
                    continue
                post_id = f.name.removesuffix(".sim.json")
                for metric, diff in sorted(delta["deltas"].items()):
                    pre = delta["pre_metrics"][metric]
                    post = delta["post_metrics"][metric]
                    lines.append(f"{model_name},{post_id},{metric},{pre!r},{post!r},{diff!r}")
        _write(out / "simulation_summary.csv", "\n".join(lines) + "\n")


def run_pipeline(config: dict | str | Path, until_stage: str | None = None) -> PipelineRun:
    """Execute (or resume) the pipeline described by ``config``.

    ``config`` may be a mapping or a path to a JSON file. Stage failures
    surface as StageError with the stage name; completed stages are never
    recomputed.
    """
    if not isinstance(config, dict):
        config = load_config(config)
    return Pipeline(config).execute(until_stage=until_stage)
