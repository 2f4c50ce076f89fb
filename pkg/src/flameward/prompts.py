"""Versioned prompt templates.

Every prompt embeds machine tags (``#task:...``) so deterministic mock
rules can key on them, and instructs the model to answer inside a tagged
field the parsers can find. Bump PROMPT_VERSION on any wording change;
the version participates in request digests via the rendered text.
"""

from __future__ import annotations

from .threads import ExtractionResult, ThreadTree

PROMPT_VERSION = "1"

END_MARKER = "END_OF_EXCHANGE"


def serialize_thread(tree: ThreadTree, max_tokens: int = 3000) -> str:
    """Depth-indented author-prefixed transcript of a thread.

    When the rendering would exceed ``max_tokens`` whitespace words, the
    oldest lines are dropped first so the most recent turns survive.
    """
    lines = [f"POST {tree.post_id} [{tree.domain_tag}] {tree.title}".rstrip()]
    if tree.post_body:
        lines.append(tree.post_body)
    for c in tree.linearize():
        indent = "  " * tree.depth_of(c.id)
        lines.append(f"{indent}[{c.id}] {c.author}: {c.body}")
    budget = max_tokens
    kept: list[str] = []
    for line in reversed(lines):
        cost = len(line.split())
        if kept and budget - cost < 0:
            kept.append("[earlier turns truncated]")
            break
        budget -= cost
        kept.append(line)
    return "\n".join(reversed(kept))


def serialize_exchange(turns: list[tuple[str, str]]) -> str:
    """Flat author-tagged rendering of a linear exchange."""
    return "\n".join(f"{author}: {text}" for author, text in turns)


def flame_score_prompt(tree: ThreadTree) -> list[dict[str, str]]:
    system = (
        "You rate how likely a discussion thread is to contain a flame war: "
        "an extended hostile exchange escalating from disagreement to personal "
        "attacks. Rate 0 (calm) to 10 (full flame war). Answer with a single "
        'line "SCORE: <integer 0-10>".'
        f"\n#task:flame_score #post:{tree.post_id} #v:{PROMPT_VERSION}"
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": serialize_thread(tree)},
    ]

REPROMPT_SCORE = (
    'Your previous answer could not be used. Reply with exactly one line of the form '
    '"SCORE: <integer between 0 and 10>" and nothing else.'
)


def target_pair_prompt(tree: ThreadTree, roster: list[str] | None = None) -> list[dict[str, str]]:
    system = (
        "Identify the two users with the most hostile back-and-forth in this "
        "thread. Answer with exactly two lines:\nUSER_A: <handle>\nUSER_B: <handle>"
        f"\n#task:target_users #post:{tree.post_id} #v:{PROMPT_VERSION}"
    )
    if roster is not None:
        system += "\nChoose handles from this roster only: " + ", ".join(sorted(roster))
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": serialize_thread(tree)},
    ]


def judgment_prompt(extraction: ExtractionResult) -> list[dict[str, str]]:
    system = (
        "You are a neutral mediator reviewing a heated exchange. Identify "
        "unfair claims, emotional triggers, and points of escalation, then "
        "assess the overall fairness of the arguments. Use exactly this format:\n"
        "UNFAIR_CLAIMS:\n- <comment_id> | <claim> | <why it is unfair>\n"
        "EMOTIONAL_TRIGGERS:\n- <comment_id> | <trigger>\n"
        "ESCALATION_POINTS:\n- <comment_id> | <note>\n"
        "ASSESSMENT:\n<free text>\n"
        "Use '- none' for an empty section."
        f"\n#task:judgment #conv:{extraction.source_post_id} #v:{PROMPT_VERSION}"
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": serialize_thread(extraction.kept_forest)},
    ]


def steering_prompt(
    extraction: ExtractionResult, judgment_text: str | None = None
) -> list[dict[str, str]]:
    a, b = extraction.target_users
    system = (
        "You are a neutral mediator stepping into a heated exchange between "
        f"{a} and {b}. Write one short message that reduces hostility, "
        "acknowledges each side's concerns, and guides them back to the "
        "substance of their disagreement. Do not quote their messages back at "
        "them. Reply with the message text only."
        f"\n#task:steering #conv:{extraction.source_post_id} #v:{PROMPT_VERSION}"
    )
    if judgment_text is not None:
        system += "\n#conditioned:judgment"
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": serialize_thread(extraction.kept_forest)},
    ]
    if judgment_text is not None:
        messages.append(
            {"role": "user", "content": "Mediator analysis of the exchange:\n" + judgment_text}
        )
    return messages

REPROMPT_STEERING_QUOTE = (
    "Your previous message quoted a participant nearly verbatim. Write it "
    "again in your own words without quoting anyone."
)


def elicit_prompt(extraction: ExtractionResult, model_label: str) -> list[dict[str, str]]:
    system = (
        "Propose between five and ten evaluation principles tailored to this "
        "specific discussion: criteria a reviewer should use to judge the "
        "quality of a mediator's intervention here. Weight each 0-10 by "
        "importance. One per line, exactly:\n- <weight> | <principle>"
        f"\n#task:principles #conv:{extraction.source_post_id} "
        f"#model:{model_label} #v:{PROMPT_VERSION}"
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": serialize_thread(extraction.kept_forest)},
    ]

REPROMPT_ELICIT = (
    "Your previous list could not be used. Reply with between five and ten "
    'lines, each exactly of the form "- <weight 0-10> | <principle>".'
)


def merge_prompt(
    conversation_id: str, proposals: dict[str, list[tuple[float, str]]]
) -> list[dict[str, str]]:
    system = (
        "You are consolidating evaluation principles proposed by several "
        "models for the same discussion. Merge overlapping items, resolve "
        "minor wording differences, and remove near-duplicates while "
        "preserving real distinctions. Output 5 to 15 lines, exactly:\n"
        "- <weight> | <principle> | sources: <label>[; <label>...]"
        f"\n#task:merge_principles #conv:{conversation_id} #v:{PROMPT_VERSION}"
    )
    body_lines = []
    for label in sorted(proposals):
        body_lines.append(f"PROPOSALS {label}:")
        for weight, text in proposals[label]:
            body_lines.append(f"- {weight:g} | {text} | source: {label}")
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": "\n".join(body_lines)},
    ]

REPROMPT_MERGE = (
    "Your previous list could not be used. Reply with between five and "
    'fifteen lines, each exactly "- <weight 0-10> | <principle> | sources: <labels>".'
)


def judge_prompt(
    conversation_id: str,
    principles: list[tuple[float, str]],
    task: str,
    evaluated_model: str,
    mediation_text: str,
    conversation_text: str | None = None,
) -> list[dict[str, str]]:
    system = (
        "You are scoring a mediator intervention against conversation-specific "
        "principles. Weights mark each principle's importance. Give one "
        'holistic score from 1 to 10 (decimals allowed) as a single line "SCORE: <value>".'
        f"\n#task:judge #conv:{conversation_id} #target:{evaluated_model} "
        f"#mediation:{task} #v:{PROMPT_VERSION}"
    )
    parts = ["PRINCIPLES:"]
    for weight, text in principles:
        parts.append(f"- {weight:g} | {text}")
    if conversation_text is not None:
        parts.append("\nCONVERSATION:\n" + conversation_text)
    parts.append(f"\nMEDIATION ({task}):\n" + mediation_text)
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": "\n".join(parts)},
    ]

REPROMPT_JUDGE = (
    'Your previous answer could not be used. Reply with exactly one line '
    '"SCORE: <number between 1 and 10>" and nothing else.'
)


def simulate_prompt(
    conversation_id: str,
    speaker: str,
    history: list[tuple[str, str]],
    seed: int,
    turn_index: int,
) -> list[dict[str, str]]:
    last_turn = history[-1][1] if history else ""
    system = (
        f"You are simulating how {speaker} would reply next in this exchange "
        "after a mediator stepped in. Stay in character. Reply with the "
        f"message text only, or exactly {END_MARKER} if {speaker} would "
        "disengage now."
        f"\n#task:simulate #conv:{conversation_id} #speaker:{speaker} "
        f"#seed:{seed} #turn:{turn_index} #v:{PROMPT_VERSION}"
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": serialize_exchange(history)},
        {"role": "user", "content": f"LAST_TURN: {last_turn}"},
    ]
