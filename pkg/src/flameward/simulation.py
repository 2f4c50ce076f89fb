"""User simulation: build the intervened thread and measure what changed.

A mediation is injected into the linearized exchange between the two target
users at the point of peak escalation; a simulator model then plays out the
pair's next turns. Comparing the simulated continuation against the original
post-injection turns yields per-metric deltas (negative toxicity delta means
the intervention helped).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import prompts
from .errors import ContentError, SimulationError
from .gateway import Gateway, ModelSpec
from .mediation import JudgmentReport, SteeringMessage
from .textmetrics import LexiconSet, MetricVector, analyze, sentiment_shift, simulation_metrics
from .threads import ExtractionResult

logger = logging.getLogger(__name__)

MAX_TURNS_DEFAULT = 6
MEDIATOR_HANDLE = "mediator"


@dataclass(frozen=True)
class SimulationSkip:
    """Typed refusal: the thread is too degenerate to simulate."""

    reason: str


@dataclass(frozen=True)
class SimulationRun:
    conversation_id: str
    injection_index: int
    mediation_task: str
    continuation_turns: tuple[tuple[str, str], ...]  # (author, text)
    simulator_model: str
    seed: int

    def as_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "injection_index": self.injection_index,
            "mediation_task": self.mediation_task,
            "continuation_turns": [list(t) for t in self.continuation_turns],
            "simulator_model": self.simulator_model,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class DeltaReport:
    pre_metrics: MetricVector
    post_metrics: MetricVector
    deltas: dict[str, float]
    pre_sentiment: float | None = None
    post_sentiment: float | None = None

    def as_dict(self) -> dict:
        return {
            "pre_metrics": self.pre_metrics.as_dict(),
            "post_metrics": self.post_metrics.as_dict(),
            "deltas": dict(self.deltas),
            "pre_sentiment": self.pre_sentiment,
            "post_sentiment": self.post_sentiment,
        }


def pair_turns(extraction: ExtractionResult) -> list[tuple[str, str]]:
    """The target pair's exchange in document order: (author, body) turns."""
    a, b = extraction.target_users
    return [
        (c.author, c.body)
        for c in extraction.kept_forest.linearize()
        if c.author in (a, b)
    ]


def choose_injection_point(
    extraction: ExtractionResult, lexicons: LexiconSet
) -> int | SimulationSkip:
    """Insertion position in the pair's exchange, right after peak escalation.

    The turn with the highest toxic-token count wins; ties go to the later
    turn, so an all-calm exchange injects after the final turn. Fewer than
    two pair turns is a typed skip, never an exception.
    """
    turns = pair_turns(extraction)
    if len(turns) < 2:
        return SimulationSkip(
            reason=f"{extraction.source_post_id}: only {len(turns)} target-pair turns"
        )
    toxic = lexicons.toxic
    counts = []
    for _, text in turns:
        norm = analyze(text).norm_tokens()
        counts.append(sum(1 for t in norm if t in toxic))
    best = max(range(len(counts)), key=lambda i: (counts[i], i))
    return best + 1


def simulate_continuation(
    extraction: ExtractionResult,
    mediation: JudgmentReport | SteeringMessage,
    spec: ModelSpec,
    gateway: Gateway,
    seed: int,
    max_turns: int = MAX_TURNS_DEFAULT,
    injection_index: int | None = None,
    lexicons: LexiconSet | None = None,
) -> SimulationRun | SimulationSkip:
    """Inject the mediation and alternate simulated replies from the pair.

    Generation stops at ``max_turns`` or when the simulator emits the
    end-of-exchange marker. Output is a pure function of (inputs, seed,
    provider), so fixed seeds and mock backends reproduce runs exactly.
    """
    if mediation.conversation_id != extraction.source_post_id:
        raise ValueError(
            f"mediation belongs to {mediation.conversation_id}, "
            f"not {extraction.source_post_id}"
        )
    if injection_index is None:
        if lexicons is None:
            raise ValueError("need lexicons to choose an injection point")
        chosen = choose_injection_point(extraction, lexicons)
        if isinstance(chosen, SimulationSkip):
            return chosen
        injection_index = chosen

    turns = pair_turns(extraction)
    if not 0 <= injection_index <= len(turns):
        raise ValueError(f"injection index {injection_index} outside [0, {len(turns)}]")

    if isinstance(mediation, JudgmentReport):
        task, mediation_text = "judgment", mediation.raw_model_text
    else:
        task, mediation_text = "steering", mediation.message_text

    a, b = extraction.target_users
    history: list[tuple[str, str]] = list(turns[:injection_index])
    history.append((MEDIATOR_HANDLE, mediation_text))

    # The user who did not speak last responds to the mediator first.
    last_author = turns[injection_index - 1][0] if injection_index > 0 else b
    speaker = a if last_author != a else b

    continuation: list[tuple[str, str]] = []
    for turn_index in range(max_turns):
        messages = prompts.simulate_prompt(
            conversation_id=extraction.source_post_id,
            speaker=speaker,
            history=history,
            seed=seed,
            turn_index=turn_index,
        )
        try:
            exchange = gateway.complete(spec, messages)
        except ContentError as exc:
            raise SimulationError(
                f"simulator returned empty output for {extraction.source_post_id}"
            ) from exc
        text = exchange.response_text
        if prompts.END_MARKER in text:
            residual = text.replace(prompts.END_MARKER, "").strip()
            if residual:
                continuation.append((speaker, residual))
                history.append((speaker, residual))
            break
        text = text.strip()
        continuation.append((speaker, text))
        history.append((speaker, text))
        speaker = a if speaker == b else b

    if not continuation:
        raise SimulationError(
            f"simulator produced no continuation turns for {extraction.source_post_id}"
        )
    return SimulationRun(
        conversation_id=extraction.source_post_id,
        injection_index=injection_index,
        mediation_task=task,
        continuation_turns=tuple(continuation),
        simulator_model=spec.model_name,
        seed=seed,
    )


def compare(
    original_tail: list[str], run: SimulationRun, lexicons: LexiconSet
) -> DeltaReport | SimulationSkip:
    """Per-metric deltas (continuation minus original tail).

    Deltas exist only where both sides are defined; an empty side skips the
    comparison with a reason rather than raising.
    """
    post_texts = [text for _, text in run.continuation_turns]
    if not original_tail:
        return SimulationSkip(reason=f"{run.conversation_id}: empty original tail")
    if not post_texts:
        return SimulationSkip(reason=f"{run.conversation_id}: empty continuation")
    pre = simulation_metrics(original_tail, lexicons)
    post = simulation_metrics(post_texts, lexicons)
    deltas: dict[str, float] = {}
    for name in ("toxicity_rate", "capitalization_ratio", "exclamation_count", "argumentativeness"):
        p = getattr(pre, name)
        q = getattr(post, name)
        if p is not None and q is not None:
            deltas[name] = q - p
    return DeltaReport(
        pre_metrics=pre,
        post_metrics=post,
        deltas=deltas,
        pre_sentiment=sentiment_shift(original_tail, lexicons),
        post_sentiment=sentiment_shift(post_texts, lexicons),
    )
