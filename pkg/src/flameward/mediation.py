"""Judgment and steering generation.

A judgment is an interpretive reading of the conflict: unfair claims,
emotional triggers, and escalation points keyed to comment ids. A steering
message is a single mediator turn meant to de-escalate, optionally
conditioned on the judgment. Structured output keeps every item addressable
by downstream judging; when structure fails to parse, the raw text is still
preserved so the content can be judged.
"""

from __future__ import annotations

import difflib
import logging
from dataclasses import dataclass

from . import prompts
from .errors import ContentError, GenerationError
from .gateway import Gateway, ModelSpec
from .parsing import bullet_items, sections
from .threads import ExtractionResult, ThreadTree

logger = logging.getLogger(__name__)

# A steering message may echo at most this fraction of any one comment,
# measured as longest-common-substring over the comment length. Short
# comments are exempt: common words trip the ratio without real quoting.
MAX_QUOTE_FRACTION = 0.5
MIN_GUARDED_COMMENT_CHARS = 40

_JUDGMENT_HEADERS = ["UNFAIR_CLAIMS", "EMOTIONAL_TRIGGERS", "ESCALATION_POINTS", "ASSESSMENT"]


@dataclass(frozen=True)
class UnfairClaim:
    comment_id: str
    claim_text: str
    why_unfair: str


@dataclass(frozen=True)
class EmotionalTrigger:
    comment_id: str
    trigger_text: str


@dataclass(frozen=True)
class EscalationPoint:
    comment_id: str
    note: str


@dataclass(frozen=True)
class JudgmentReport:
    conversation_id: str
    unfair_claims: tuple[UnfairClaim, ...]
    emotional_triggers: tuple[EmotionalTrigger, ...]
    escalation_points: tuple[EscalationPoint, ...]
    fairness_assessment: str
    raw_model_text: str
    parse_warning: bool = False
    dropped_references: int = 0

    def as_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "unfair_claims": [
                {"comment_id": c.comment_id, "claim_text": c.claim_text, "why_unfair": c.why_unfair}
                for c in self.unfair_claims
            ],
            "emotional_triggers": [
                {"comment_id": t.comment_id, "trigger_text": t.trigger_text}
                for t in self.emotional_triggers
            ],
            "escalation_points": [
                {"comment_id": p.comment_id, "note": p.note} for p in self.escalation_points
            ],
            "fairness_assessment": self.fairness_assessment,
            "raw_model_text": self.raw_model_text,
            "parse_warning": self.parse_warning,
            "dropped_references": self.dropped_references,
        }


@dataclass(frozen=True)
class SteeringMessage:
    conversation_id: str
    message_text: str
    addressed_users: tuple[str, ...]
    conditioned_on_judgment: bool

    def as_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "message_text": self.message_text,
            "addressed_users": list(self.addressed_users),
            "conditioned_on_judgment": self.conditioned_on_judgment,
        }


def _parse_judgment(conversation_id: str, text: str, valid_ids: set[str]) -> JudgmentReport:
    found = sections(text, _JUDGMENT_HEADERS)
    if not found:
        logger.warning("judgment for %s had no parseable sections", conversation_id)
        return JudgmentReport(
            conversation_id=conversation_id,
            unfair_claims=(),
            emotional_triggers=(),
            escalation_points=(),
            fairness_assessment="",
            raw_model_text=text,
            parse_warning=True,
        )

    dropped = 0

    def keep(comment_id: str) -> bool:
        nonlocal dropped
        if comment_id in valid_ids:
            return True
        dropped += 1
        logger.info("dropping judgment reference to unknown comment %r", comment_id)
        return False

    claims = []
    for item in bullet_items(found.get("UNFAIR_CLAIMS", "")):
        if len(item) >= 1 and keep(item[0]):
            claims.append(
                UnfairClaim(
                    comment_id=item[0],
                    claim_text=item[1] if len(item) > 1 else "",
                    why_unfair=item[2] if len(item) > 2 else "",
                )
            )
    triggers = []
    for item in bullet_items(found.get("EMOTIONAL_TRIGGERS", "")):
        if len(item) >= 1 and keep(item[0]):
            triggers.append(
                EmotionalTrigger(comment_id=item[0], trigger_text=item[1] if len(item) > 1 else "")
            )
    points = []
    for item in bullet_items(found.get("ESCALATION_POINTS", "")):
        if len(item) >= 1 and keep(item[0]):
            points.append(
                EscalationPoint(comment_id=item[0], note=item[1] if len(item) > 1 else "")
            )

    return JudgmentReport(
        conversation_id=conversation_id,
        unfair_claims=tuple(claims),
        emotional_triggers=tuple(triggers),
        escalation_points=tuple(points),
        fairness_assessment=found.get("ASSESSMENT", ""),
        raw_model_text=text,
        dropped_references=dropped,
    )


def generate_judgment(
    extraction: ExtractionResult, spec: ModelSpec, gateway: Gateway
) -> JudgmentReport:
    """Produce the interpretive report for an extracted conversation."""
    if extraction.is_empty:
        raise ValueError("cannot judge an empty extraction")
    try:
        exchange = gateway.complete(spec, prompts.judgment_prompt(extraction))
    except ContentError as exc:
        raise GenerationError(f"empty judgment output for {extraction.source_post_id}") from exc
    text = exchange.response_text
    if not text.strip():
        raise GenerationError(f"empty judgment output for {extraction.source_post_id}")
    return _parse_judgment(
        extraction.source_post_id, text, set(extraction.kept_comment_ids)
    )


def quote_fraction(message: str, comment_body: str) -> float:
    """Fraction of ``comment_body`` echoed verbatim inside ``message``."""
    if not comment_body:
        return 0.0
    matcher = difflib.SequenceMatcher(None, message, comment_body, autojunk=False)
    match = matcher.find_longest_match(0, len(message), 0, len(comment_body))
    return match.size / len(comment_body)


def _worst_quote(message: str, tree: ThreadTree) -> float:
    worst = 0.0
    for c in tree.comments.values():
        if len(c.body) < MIN_GUARDED_COMMENT_CHARS:
            continue
        worst = max(worst, quote_fraction(message, c.body))
    return worst


def generate_steering(
    extraction: ExtractionResult,
    spec: ModelSpec,
    gateway: Gateway,
    judgment: JudgmentReport | None = None,
    max_quote_fraction: float = MAX_QUOTE_FRACTION,
) -> SteeringMessage:
    """Produce one mediator message for the extracted conversation.

    When a judgment is supplied its content rides along in the prompt and
    the result is flagged as conditioned. An anti-parroting guard rejects
    messages that quote any single comment beyond ``max_quote_fraction``
    (one rewrite attempt, then GenerationError).
    """
    if extraction.is_empty:
        raise ValueError("cannot steer an empty extraction")
    judgment_text = judgment.raw_model_text if judgment is not None else None
    messages = prompts.steering_prompt(extraction, judgment_text)
    try:
        exchange = gateway.complete(spec, messages)
    except ContentError as exc:
        raise GenerationError(f"empty steering output for {extraction.source_post_id}") from exc
    text = exchange.response_text.strip()
    if not text:
        raise GenerationError(f"empty steering output for {extraction.source_post_id}")

    if _worst_quote(text, extraction.kept_forest) > max_quote_fraction:
        logger.info("steering for %s tripped the quote guard; rewriting", extraction.source_post_id)
        retry = messages + [
            {"role": "assistant", "content": text},
            {"role": "user", "content": prompts.REPROMPT_STEERING_QUOTE},
        ]
        exchange = gateway.complete(spec, retry)
        text = exchange.response_text.strip()
        if not text:
            raise GenerationError(f"empty steering output for {extraction.source_post_id}")
        if _worst_quote(text, extraction.kept_forest) > max_quote_fraction:
            raise GenerationError(
                f"steering for {extraction.source_post_id} still quotes a participant "
                f"beyond {max_quote_fraction:.0%} after rewrite"
            )

    return SteeringMessage(
        conversation_id=extraction.source_post_id,
        message_text=text,
        addressed_users=extraction.target_users,
        conditioned_on_judgment=judgment is not None,
    )
