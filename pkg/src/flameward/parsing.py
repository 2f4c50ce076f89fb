"""Small shared parsers for tagged model answers."""

from __future__ import annotations

import re

_NUMBER = r"-?\d+(?:\.\d+)?"


def tagged_number(text: str, tag: str = "score") -> float | None:
    """Value of the first ``tag: <number>`` field, else the first standalone
    number anywhere in the text, else None."""
    m = re.search(rf"{re.escape(tag)}\s*[:=]\s*({_NUMBER})", text, re.IGNORECASE)
    if m:
        return float(m.group(1))
    m = re.search(rf"(?<![\w.])({_NUMBER})(?![\w.])", text)
    if m:
        return float(m.group(1))
    return None


def tagged_line(text: str, tag: str) -> str | None:
    """Content of the first ``TAG: value`` line, stripped."""
    m = re.search(rf"^\s*{re.escape(tag)}\s*[:=]\s*(.+?)\s*$", text, re.IGNORECASE | re.MULTILINE)
    return m.group(1) if m else None


def sections(text: str, headers: list[str]) -> dict[str, str]:
    """Split ``text`` into header-delimited sections.

    Headers look like ``UNFAIR_CLAIMS:`` on their own line; everything up to
    the next known header belongs to the section. Missing headers are absent
    from the result.
    """
    pattern = re.compile(
        rf"^\s*({'|'.join(re.escape(h) for h in headers)})\s*:\s*$",
        re.IGNORECASE | re.MULTILINE,
    )
    found = [(m.start(), m.end(), m.group(1).upper()) for m in pattern.finditer(text)]
    out: dict[str, str] = {}
    for i, (start, end, name) in enumerate(found):
        stop = found[i + 1][0] if i + 1 < len(found) else len(text)
        out[name] = text[end:stop].strip()
    return out


def bullet_items(section: str) -> list[list[str]]:
    """Parse ``- a | b | c`` bullets into field lists; '- none' yields []."""
    items: list[list[str]] = []
    for line in section.splitlines():
        line = line.strip()
        m = re.match(r"^[-*•]\s*(.+)$", line)
        if not m:
            continue
        body = m.group(1).strip()
        if body.lower() == "none":
            continue
        items.append([part.strip() for part in body.split("|")])
    return items


def weighted_items(text: str) -> list[tuple[float, str, str | None]]:
    """Parse ``- <weight> | <text>[ | sources: a; b]`` lines.

    Returns (weight, text, sources_or_None); lines that do not parse or
    carry an out-of-range weight are skipped.
    """
    out: list[tuple[float, str, str | None]] = []
    for fields in bullet_items(text):
        if len(fields) < 2:
            continue
        try:
            weight = float(fields[0])
        except ValueError:
            continue
        if not 0.0 <= weight <= 10.0:
            continue
        body = fields[1]
        sources = None
        for extra in fields[2:]:
            m = re.match(r"^sources?\s*:\s*(.+)$", extra, re.IGNORECASE)
            if m:
                sources = m.group(1)
        if body:
            out.append((weight, body, sources))
    return out
