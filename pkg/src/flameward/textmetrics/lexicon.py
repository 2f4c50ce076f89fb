"""Word lists backing the lexical metrics.

Each lexicon ships as a versioned data file: one lowercase token per line,
'#' starts a comment, UTF-8. Toxicity here is a lexical proxy, not a
classifier; that limitation is deliberate and documented.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CATEGORIES = (
    "toxic",
    "negative-sentiment",
    "positive-sentiment",
    "disagreement",
    "politeness",
    "directive-verb",
)

_BUILTIN_FILES = {
    "toxic": "toxic.txt",
    "negative-sentiment": "negative.txt",
    "positive-sentiment": "positive.txt",
    "disagreement": "disagreement.txt",
    "politeness": "politeness.txt",
    "directive-verb": "directives.txt",
}


@dataclass(frozen=True)
class Lexicon:
    name: str
    category: str
    entries: frozenset[str]

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown lexicon category '{self.category}'")
        if not self.entries:
            raise ValueError(f"lexicon '{self.name}' is empty")
        for e in self.entries:
            if e != e.lower() or any(ch.isspace() for ch in e):
                raise ValueError(f"lexicon '{self.name}': bad entry {e!r}")

    def __contains__(self, token: str) -> bool:
        return token in self.entries


def parse_lexicon_text(name: str, category: str, text: str) -> Lexicon:
    entries = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.add(line)
    return Lexicon(name=name, category=category, entries=frozenset(entries))


def load_lexicon_file(path: str | Path, category: str) -> Lexicon:
    p = Path(path)
    return parse_lexicon_text(p.stem, category, p.read_text(encoding="utf-8"))


def builtin_lexicon(category: str) -> Lexicon:
    filename = _BUILTIN_FILES[category]
    text = resources.files("flameward.textmetrics").joinpath(f"data/{filename}").read_text(
        encoding="utf-8"
    )
    return parse_lexicon_text(filename.removesuffix(".txt"), category, text)


@dataclass(frozen=True)
class LexiconSet:
    """The bundle the metric functions consume."""

    toxic: Lexicon
    negative: Lexicon
    positive: Lexicon
    disagreement: Lexicon
    politeness: Lexicon
    directives: Lexicon


def builtin_lexicons() -> LexiconSet:
    return LexiconSet(
        toxic=builtin_lexicon("toxic"),
        negative=builtin_lexicon("negative-sentiment"),
        positive=builtin_lexicon("positive-sentiment"),
        disagreement=builtin_lexicon("disagreement"),
        politeness=builtin_lexicon("politeness"),
        directives=builtin_lexicon("directive-verb"),
    )
