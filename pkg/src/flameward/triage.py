"""Score-based post selection and target-user identification.

Posts are scored 0-10 for flame-war likelihood by a model; only a score
window (default 7-10) survives. A second model call names the two users
with the most hostile interactions, validated against the thread's author
roster. Parse failures get exactly one structured reprompt, then a typed
error; nothing is ever silently defaulted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from . import prompts
from .errors import IdentificationError, ScoringError
from .gateway import Gateway, ModelSpec
from .parsing import tagged_line, tagged_number
from .threads import ThreadTree

logger = logging.getLogger(__name__)

RETAIN_MIN = 7
RETAIN_MAX = 10


@dataclass(frozen=True)
class FlameScore:
    post_id: str
    score: int
    rationale_text: str | None
    model_used: ModelSpec

    def __post_init__(self):
        if not 0 <= self.score <= 10:
            raise ValueError(f"flame score {self.score} outside 0-10")


@dataclass(frozen=True)
class TargetPair:
    post_id: str
    user_a: str
    user_b: str
    evidence_comment_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.user_a == self.user_b:
            raise ValueError("target users must differ")


def _parse_score(text: str) -> int | None:
    value = tagged_number(text, "score")
    if value is None:
        return None
    if value != int(value):
        logger.info("flooring decimal flame score %s", value)
        value = math.floor(value)
    value = int(value)
    if not 0 <= value <= 10:
        return None
    return value


def score_post(tree: ThreadTree, spec: ModelSpec, gateway: Gateway) -> FlameScore:
    """Ask the model for a 0-10 flame-war score; one reprompt, then error."""
    if tree.comment_count == 0:
        raise ValueError(f"thread {tree.post_id} has no comments")
    messages = prompts.flame_score_prompt(tree)
    exchange = gateway.complete(spec, messages)
    score = _parse_score(exchange.response_text)
    if score is None:
        retry = messages + [
            {"role": "assistant", "content": exchange.response_text},
            {"role": "user", "content": prompts.REPROMPT_SCORE},
        ]
        exchange = gateway.complete(spec, retry)
        score = _parse_score(exchange.response_text)
        if score is None:
            raise ScoringError(
                f"post {tree.post_id}: no usable 0-10 score after reprompt "
                f"(last answer: {exchange.response_text[:120]!r})"
            )
    return FlameScore(
        post_id=tree.post_id,
        score=score,
        rationale_text=exchange.response_text,
        model_used=spec,
    )


def retain_by_threshold(
    scores: list[FlameScore], minimum: int = RETAIN_MIN, maximum: int = RETAIN_MAX
) -> set[str]:
    """Post ids whose score falls inside [minimum, maximum]."""
    return {s.post_id for s in scores if minimum <= s.score <= maximum}


def _parse_pair(text: str) -> tuple[str, str] | None:
    a = tagged_line(text, "USER_A")
    b = tagged_line(text, "USER_B")
    if a and b:
        return a, b
    return None


def identify_target_pair(tree: ThreadTree, spec: ModelSpec, gateway: Gateway) -> TargetPair:
    """Name the two most-engaged flame participants, validated against the tree.

    On a parse failure or an unknown handle the model is reprompted once
    with the author roster included; a second failure is an
    IdentificationError.
    """
    authors = tree.authors
    if len(authors) < 2:
        raise ValueError(f"thread {tree.post_id} has fewer than two distinct authors")

    def attempt(messages) -> tuple[str, str] | None:
        exchange = gateway.complete(spec, messages)
        pair = _parse_pair(exchange.response_text)
        if pair is None:
            return None
        a, b = pair
        if a not in authors or b not in authors or a == b:
            logger.info("target pair %r rejected for post %s", pair, tree.post_id)
            return None
        return pair

    pair = attempt(prompts.target_pair_prompt(tree))
    if pair is None:
        pair = attempt(prompts.target_pair_prompt(tree, roster=sorted(authors)))
    if pair is None:
        raise IdentificationError(
            f"post {tree.post_id}: could not identify two valid target users"
        )
    a, b = pair
    evidence = tuple(c.id for c in tree.linearize() if c.author in (a, b))
    return TargetPair(post_id=tree.post_id, user_a=a, user_b=b, evidence_comment_ids=evidence)


def scores_csv(scores: list[FlameScore], timestamp: str) -> str:
    """CSV rows for triage output: post_id, score, model, timestamp."""
    lines = ["post_id,score,model,timestamp"]
    for s in scores:
        lines.append(f"{s.post_id},{s.score},{s.model_used.model_name},{timestamp}")
    return "\n".join(lines) + "\n"
