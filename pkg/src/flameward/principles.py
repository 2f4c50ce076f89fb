"""Conversation-specific evaluation principles and principle-based judging.

Several models each propose 5-10 weighted principles for a conversation; an
aggregator model merges them into one bank; human annotators then verify the
bank through keep/edit/delete/merge/add decisions with confidence ratings.
Verification is an event-sourced log: the bank is only ever mutated by a
deterministic reducer, so replaying the recorded decisions from the merged
snapshot reproduces the final bank exactly. A judge model scores mediation
outputs against the verified bank on a 1-10 scale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from . import prompts
from .errors import ElicitationError, JudgingError, MergeError, StateError, ValidationError
from .gateway import Gateway, ModelSpec
from .mediation import JudgmentReport, SteeringMessage
from .parsing import tagged_number, weighted_items
from .threads import ExtractionResult

logger = logging.getLogger(__name__)

ELICIT_MIN, ELICIT_MAX = 5, 10
MERGE_MIN, MERGE_MAX = 5, 15
CONFIDENCE_LEVELS = (1, 2, 3)
ACTIONS = ("keep", "edit", "delete", "merge", "add")
DEFAULT_ADDED_WEIGHT = 5.0

STATUS_PROPOSED = "proposed"
STATUS_MERGED = "merged"
STATUS_KEPT = "kept"
STATUS_EDITED = "edited"
STATUS_DELETED = "deleted"


@dataclass(frozen=True)
class Principle:
    id: str
    text: str
    weight: float
    source: str  # "model:<name>", "merged", or "human-added"
    status: str
    contributors: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.weight <= 10.0:
            raise ValueError(f"principle weight {self.weight} outside 0-10")

    @property
    def active(self) -> bool:
        return self.status != STATUS_DELETED


@dataclass(frozen=True)
class Decision:
    action: str
    principle_id: str | None = None
    new_text: str | None = None
    merged_from: tuple[str, ...] = ()
    confidence: int = 0


@dataclass(frozen=True)
class VerificationRecord:
    annotator_id: str
    decisions: tuple[Decision, ...]
    completed_at: str


@dataclass(frozen=True)
class PrincipleBank:
    conversation_id: str
    principles: tuple[Principle, ...]
    verification: VerificationRecord | None = None
    next_id: int = 1

    def active_principles(self) -> tuple[Principle, ...]:
        return tuple(p for p in self.principles if p.active)

    def get(self, principle_id: str) -> Principle | None:
        for p in self.principles:
            if p.id == principle_id:
                return p
        return None


@dataclass(frozen=True)
class EvaluationRecord:
    conversation_id: str
    task: str  # "judgment" | "steering"
    evaluated_model: str
    judge_model: str
    score: float
    domain_tag: str = "Other"
    per_principle_notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.task not in ("judgment", "steering"):
            raise ValueError(f"unknown task {self.task!r}")
        if not 1.0 <= self.score <= 10.0:
            raise ValueError(f"score {self.score} outside [1, 10]")


def _next_principle_id(counter: int) -> str:
    return f"p{counter:03d}"


def elicit_principles(
    extraction: ExtractionResult, spec: ModelSpec, gateway: Gateway, model_label: str
) -> list[Principle]:
    """Ask one model for 5-10 weighted principles tailored to the conversation.

    A count outside the bound earns one reprompt stating it; still more than
    ten keeps the ten highest-weight items (logged), still fewer than five is
    an ElicitationError.
    """
    if extraction.is_empty:
        raise ValueError("cannot elicit principles for an empty extraction")
    messages = prompts.elicit_prompt(extraction, model_label)
    exchange = gateway.complete(spec, messages)
    items = weighted_items(exchange.response_text)
    if not ELICIT_MIN <= len(items) <= ELICIT_MAX:
        retry = messages + [
            {"role": "assistant", "content": exchange.response_text},
            {"role": "user", "content": prompts.REPROMPT_ELICIT},
        ]
        exchange = gateway.complete(spec, retry)
        items = weighted_items(exchange.response_text)
        if len(items) > ELICIT_MAX:
            logger.info(
                "%s proposed %d principles for %s; keeping top %d by weight",
                model_label, len(items), extraction.source_post_id, ELICIT_MAX,
            )
            order = sorted(range(len(items)), key=lambda i: (-items[i][0], i))
            items = [items[i] for i in sorted(order[:ELICIT_MAX])]
        if len(items) < ELICIT_MIN:
            raise ElicitationError(
                f"{model_label} produced {len(items)} usable principles for "
                f"{extraction.source_post_id} after reprompt (need >= {ELICIT_MIN})"
            )
    return [
        Principle(
            id=f"{model_label}:{k}",
            text=text,
            weight=weight,
            source=f"model:{model_label}",
            status=STATUS_PROPOSED,
        )
        for k, (weight, text, _sources) in enumerate(items, start=1)
    ]


def merge_principles(
    conversation_id: str,
    proposals: dict[str, list[Principle]],
    aggregator: ModelSpec,
    gateway: Gateway,
) -> PrincipleBank:
    """Consolidate per-model proposal lists into one conversation bank.

    With a single non-empty list the aggregator is skipped and the list is
    relabeled as merged; otherwise the aggregator model does the dedup and
    the result is bounded to 5-15 items (reprompt, then truncation).
    """
    if len(proposals) < 2:
        raise ValueError("merge needs at least two proposal lists")
    non_empty = {label: items for label, items in proposals.items() if items}
    if not non_empty:
        raise MergeError(f"no principles proposed for {conversation_id}")

    if len(non_empty) == 1:
        label, items = next(iter(non_empty.items()))
        merged = [
            (p.weight, p.text, label) for p in items
        ]
    else:
        payload = {
            label: [(p.weight, p.text) for p in items] for label, items in non_empty.items()
        }
        messages = prompts.merge_prompt(conversation_id, payload)
        exchange = gateway.complete(aggregator, messages)
        parsed = weighted_items(exchange.response_text)
        if not MERGE_MIN <= len(parsed) <= MERGE_MAX:
            retry = messages + [
                {"role": "assistant", "content": exchange.response_text},
                {"role": "user", "content": prompts.REPROMPT_MERGE},
            ]
            exchange = gateway.complete(aggregator, retry)
            parsed = weighted_items(exchange.response_text)
            if len(parsed) > MERGE_MAX:
                logger.info(
                    "aggregator returned %d merged principles for %s; keeping top %d",
                    len(parsed), conversation_id, MERGE_MAX,
                )
                order = sorted(range(len(parsed)), key=lambda i: (-parsed[i][0], i))
                parsed = [parsed[i] for i in sorted(order[:MERGE_MAX])]
        if not parsed:
            raise MergeError(f"aggregator produced no merged principles for {conversation_id}")
        if len(parsed) < MERGE_MIN:
            raise MergeError(
                f"aggregator produced {len(parsed)} merged principles for "
                f"{conversation_id} after reprompt (need >= {MERGE_MIN})"
            )
        merged = [(w, t, s) for w, t, s in parsed]

    principles = []
    for k, (weight, text, sources) in enumerate(merged, start=1):
        contributors: tuple[str, ...] = ()
        if sources:
            contributors = tuple(s.strip() for s in sources.replace(",", ";").split(";") if s.strip())
        principles.append(
            Principle(
                id=_next_principle_id(k),
                text=text,
                weight=weight,
                source=STATUS_MERGED,
                status=STATUS_MERGED,
                contributors=contributors,
            )
        )
    return PrincipleBank(
        conversation_id=conversation_id,
        principles=tuple(principles),
        next_id=len(principles) + 1,
    )


def _validate_decision(d: Decision, index: int) -> None:
    if d.action not in ACTIONS:
        raise ValidationError(f"decision {index}: unknown action {d.action!r}", index)
    if d.confidence not in CONFIDENCE_LEVELS:
        raise ValidationError(
            f"decision {index}: confidence {d.confidence!r} not in {{1, 2, 3}}", index
        )
    if d.action in ("keep", "edit", "delete") and not d.principle_id:
        raise ValidationError(f"decision {index}: action {d.action} needs principle_id", index)
    if d.action in ("edit", "merge", "add") and not d.new_text:
        raise ValidationError(f"decision {index}: action {d.action} needs new_text", index)
    if d.action == "merge" and len(d.merged_from) < 2:
        raise ValidationError(f"decision {index}: merge needs >= 2 merged_from ids", index)


def apply_verification(bank: PrincipleBank, record: VerificationRecord) -> PrincipleBank:
    """Deterministic reducer: fold one annotator record into the bank.

    All decisions validate against the evolving state before anything is
    published, so a failed record leaves the caller's bank untouched.
    Deleted principles stay in the list as an audit trail; a complete
    record must cover every principle active at submission time.
    """
    state: dict[str, Principle] = {p.id: p for p in bank.principles}
    order: list[str] = [p.id for p in bank.principles]
    counter = bank.next_id

    covered: set[str] = set()
    pre_active = {p.id for p in bank.principles if p.active}

    for index, d in enumerate(record.decisions):
        _validate_decision(d, index)

        if d.action == "add":
            new_id = _next_principle_id(counter)
            counter += 1
            state[new_id] = Principle(
                id=new_id,
                text=d.new_text or "",
                weight=DEFAULT_ADDED_WEIGHT,
                source="human-added",
                status=STATUS_KEPT,
            )
            order.append(new_id)
            continue

        if d.action == "merge":
            constituents = []
            for pid in d.merged_from:
                p = state.get(pid)
                if p is None:
                    raise ValidationError(f"decision {index}: unknown principle {pid!r}", index)
                if not p.active:
                    raise StateError(f"decision {index}: principle {pid} is deleted", index)
                constituents.append(p)
            for p in constituents:
                state[p.id] = replace(p, status=STATUS_DELETED)
            covered.update(d.merged_from)
            new_id = _next_principle_id(counter)
            counter += 1
            state[new_id] = Principle(
                id=new_id,
                text=d.new_text or "",
                weight=max(p.weight for p in constituents),
                source=STATUS_MERGED,
                status=STATUS_MERGED,
                contributors=tuple(d.merged_from),
            )
            order.append(new_id)
            continue

        assert d.principle_id is not None
        p = state.get(d.principle_id)
        if p is None:
            raise ValidationError(
                f"decision {index}: unknown principle {d.principle_id!r}", index
            )
        if not p.active:
            raise StateError(
                f"decision {index}: principle {d.principle_id} is deleted", index
            )
        covered.add(d.principle_id)
        if d.action == "keep":
            state[p.id] = replace(p, status=STATUS_KEPT)
        elif d.action == "edit":
            state[p.id] = replace(p, status=STATUS_EDITED, text=d.new_text or p.text)
        elif d.action == "delete":
            state[p.id] = replace(p, status=STATUS_DELETED)

    if record.completed_at:
        uncovered = sorted(pre_active - covered)
        if uncovered:
            raise ValidationError(
                f"complete record leaves principles without a decision: {uncovered}"
            )

    return PrincipleBank(
        conversation_id=bank.conversation_id,
        principles=tuple(state[pid] for pid in order),
        verification=record,
        next_id=counter,
    )


def is_complete(bank: PrincipleBank, decisions: list[Decision]) -> bool:
    """Whether a decision batch covers every active principle in the bank."""
    covered: set[str] = set()
    for d in decisions:
        if d.principle_id:
            covered.add(d.principle_id)
        covered.update(d.merged_from)
    return {p.id for p in bank.active_principles()} <= covered


def resolve_majority(
    bank: PrincipleBank, records: list[VerificationRecord]
) -> VerificationRecord:
    """Collapse several annotators' records into one consensus record.

    Per principle, the majority action wins with ties broken toward keep
    (conservative); details for the winning action come from the first
    annotator (by id) who voted it. An add survives only when a strict
    majority of annotators added the identical text.
    """
    if not records:
        raise ValueError("no records to resolve")
    ordered = sorted(records, key=lambda r: r.annotator_id)
    majority = len(ordered) // 2 + 1

    decisions: list[Decision] = []
    for p in bank.active_principles():
        votes: list[tuple[str, Decision]] = []
        for rec in ordered:
            for d in rec.decisions:
                if d.principle_id == p.id or p.id in d.merged_from:
                    votes.append((rec.annotator_id, d))
                    break
        if not votes:
            continue
        tally: dict[str, int] = {}
        for _, d in votes:
            tally[d.action] = tally.get(d.action, 0) + 1
        best = max(tally.values())
        winners = sorted(a for a, n in tally.items() if n == best)
        action = "keep" if len(winners) > 1 else winners[0]
        chosen = next(d for _, d in votes if d.action == action) if action in tally else None
        if chosen is None:
            chosen = Decision(action="keep", principle_id=p.id, confidence=2)
        if chosen.action == "keep" and chosen.principle_id != p.id:
            chosen = replace(chosen, principle_id=p.id, merged_from=())
        decisions.append(chosen)

    # Deduplicate merge decisions that several constituents all map to.
    deduped: list[Decision] = []
    seen_merges: set[tuple[str, ...]] = set()
    for d in decisions:
        if d.action == "merge":
            key = tuple(sorted(d.merged_from))
            if key in seen_merges:
                continue
            seen_merges.add(key)
        deduped.append(d)

    add_counts: dict[str, list[Decision]] = {}
    for rec in ordered:
        for d in rec.decisions:
            if d.action == "add" and d.new_text:
                add_counts.setdefault(d.new_text, []).append(d)
    for text in sorted(add_counts):
        if len(add_counts[text]) >= majority:
            deduped.append(add_counts[text][0])

    return VerificationRecord(
        annotator_id="consensus:" + ",".join(r.annotator_id for r in ordered),
        decisions=tuple(deduped),
        completed_at=max(r.completed_at for r in ordered),
    )


def judge_mediation(
    bank: PrincipleBank,
    output: JudgmentReport | SteeringMessage,
    judge: ModelSpec,
    gateway: Gateway,
    evaluated_model: str,
    domain_tag: str = "Other",
    conversation_text: str | None = None,
    waive_verification: bool = False,
) -> EvaluationRecord:
    """Score a mediation output against the bank's active principles.

    The judge sees the weighted principles and the output (plus the
    conversation when supplied) and returns one holistic 1-10 score.
    Unparseable or out-of-range answers get one reprompt, then a
    JudgingError; scores are never clamped.
    """
    active = bank.active_principles()
    if not active:
        raise ValueError(f"bank for {bank.conversation_id} has no active principles")
    if bank.verification is None and not waive_verification:
        raise ValueError(
            f"bank for {bank.conversation_id} is unverified; pass waive_verification to override"
        )

    if isinstance(output, JudgmentReport):
        task, text = "judgment", output.raw_model_text
    else:
        task, text = "steering", output.message_text

    messages = prompts.judge_prompt(
        conversation_id=bank.conversation_id,
        principles=[(p.weight, p.text) for p in active],
        task=task,
        evaluated_model=evaluated_model,
        mediation_text=text,
        conversation_text=conversation_text,
    )

    def attempt(msgs) -> float | None:
        exchange = gateway.complete(judge, msgs)
        value = tagged_number(exchange.response_text, "score")
        if value is None or not 1.0 <= value <= 10.0:
            return None
        return value

    score = attempt(messages)
    if score is None:
        retry = messages + [{"role": "user", "content": prompts.REPROMPT_JUDGE}]
        score = attempt(retry)
        if score is None:
            raise JudgingError(
                f"judge produced no usable score in [1, 10] for "
                f"{bank.conversation_id}/{evaluated_model}/{task} after reprompt"
            )
    return EvaluationRecord(
        conversation_id=bank.conversation_id,
        task=task,
        evaluated_model=evaluated_model,
        judge_model=judge.model_name,
        score=score,
        domain_tag=domain_tag,
    )


# ---------------------------------------------------------------------------
# Serialization (NDJSON decision logs, bank snapshots)

def decision_to_dict(d: Decision) -> dict:
    return {
        "action": d.action,
        "principle_id": d.principle_id,
        "new_text": d.new_text,
        "merged_from": list(d.merged_from),
        "confidence": d.confidence,
    }


def decision_from_dict(data: dict) -> Decision:
    return Decision(
        action=data["action"],
        principle_id=data.get("principle_id"),
        new_text=data.get("new_text"),
        merged_from=tuple(data.get("merged_from") or ()),
        confidence=data.get("confidence", 0),
    )


def record_to_dict(r: VerificationRecord) -> dict:
    return {
        "annotator_id": r.annotator_id,
        "decisions": [decision_to_dict(d) for d in r.decisions],
        "completed_at": r.completed_at,
    }


def record_from_dict(data: dict) -> VerificationRecord:
    return VerificationRecord(
        annotator_id=data["annotator_id"],
        decisions=tuple(decision_from_dict(d) for d in data["decisions"]),
        completed_at=data.get("completed_at", ""),
    )


def principle_to_dict(p: Principle) -> dict:
    return {
        "id": p.id,
        "text": p.text,
        "weight": p.weight,
        "source": p.source,
        "status": p.status,
        "contributors": list(p.contributors),
    }


def principle_from_dict(data: dict) -> Principle:
    return Principle(
        id=data["id"],
        text=data["text"],
        weight=data["weight"],
        source=data["source"],
        status=data["status"],
        contributors=tuple(data.get("contributors") or ()),
    )


def bank_to_dict(bank: PrincipleBank) -> dict:
    return {
        "conversation_id": bank.conversation_id,
        "principles": [principle_to_dict(p) for p in bank.principles],
        "verification": record_to_dict(bank.verification) if bank.verification else None,
        "next_id": bank.next_id,
    }


def bank_from_dict(data: dict) -> PrincipleBank:
    return PrincipleBank(
        conversation_id=data["conversation_id"],
        principles=tuple(principle_from_dict(p) for p in data["principles"]),
        verification=record_from_dict(data["verification"]) if data.get("verification") else None,
        next_id=data.get("next_id", len(data["principles"]) + 1),
    )


def evaluation_to_dict(r: EvaluationRecord) -> dict:
    return {
        "conversation_id": r.conversation_id,
        "task": r.task,
        "evaluated_model": r.evaluated_model,
        "judge_model": r.judge_model,
        "score": r.score,
        "domain_tag": r.domain_tag,
        "per_principle_notes": list(r.per_principle_notes),
    }


def evaluation_from_dict(data: dict) -> EvaluationRecord:
    return EvaluationRecord(
        conversation_id=data["conversation_id"],
        task=data["task"],
        evaluated_model=data["evaluated_model"],
        judge_model=data["judge_model"],
        score=data["score"],
        domain_tag=data.get("domain_tag", "Other"),
        per_principle_notes=tuple(data.get("per_principle_notes") or ()),
    )
