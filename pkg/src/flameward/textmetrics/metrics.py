"""The eleven comparative metrics plus the four per-thread simulation metrics.

Everything here is a pure function of its inputs; undefined values are None
(never zero) and are rendered as empty CSV cells. Degenerate inputs (empty
text, zero turns) never raise.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from . import engine
from .lexicon import Lexicon, LexiconSet

FLESCH_BASE = 206.835
FLESCH_SENTENCE_WEIGHT = 1.015
FLESCH_SYLLABLE_WEIGHT = 84.6

# Scale factor applied to the per-turn exclamation average for display; the
# raw total is kept alongside so reports can show both.
EXCLAMATION_SCALE = 10.0

SECOND_PERSON = frozenset({"you", "your", "yours", "you're", "youre", "u"})


@dataclass(frozen=True)
class AnalyzedText:
    """Tokenized view of one text: tokens, sentences, per-token syllables."""

    raw: str
    tokens: tuple[str, ...]
    sentences: tuple[str, ...]
    sentence_token_counts: tuple[int, ...]
    question_flags: tuple[bool, ...]
    syllable_counts: tuple[int, ...]

    @property
    def word_count(self) -> int:
        return len(self.tokens)

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)

    def norm_tokens(self) -> list[str]:
        return [engine.norm_token(t) for t in self.tokens]

    def sentence_first_tokens(self) -> list[str]:
        """Normalized first token of each sentence (for directive detection)."""
        out = []
        offset = 0
        for count in self.sentence_token_counts:
            out.append(engine.norm_token(self.tokens[offset]))
            offset += count
        return out


def analyze(raw: str) -> AnalyzedText:
    """Tokenize, split sentences, and count syllables. Empty text is fine."""
    tokens, sentences, counts, questions = engine.scan(raw)
    return AnalyzedText(
        raw=raw,
        tokens=tuple(tokens),
        sentences=tuple(sentences),
        sentence_token_counts=tuple(counts),
        question_flags=tuple(questions),
        syllable_counts=tuple(engine.syllable_counts(tokens)),
    )


@dataclass
class MetricVector:
    """One row of metric values; None marks an undefined metric."""

    avg_words_per_sentence: float | None = None
    avg_word_length: float | None = None
    type_token_ratio: float | None = None
    flesch_reading_ease: float | None = None
    unique_token_count: int | None = None
    question_rate_per_100w: float | None = None
    engagement_balance: float | None = None
    assertiveness_per_sentence: float | None = None
    pronoun_bias_rate: float | None = None
    direct_you_count: int | None = None
    toxic_word_count: int | None = None
    toxicity_rate: float | None = None
    capitalization_ratio: float | None = None
    exclamation_count: float | None = None
    exclamation_total: int | None = None
    argumentativeness: float | None = None

    def merge(self, other: "MetricVector") -> "MetricVector":
        """Fill unset fields from ``other``; defined values win over None."""
        merged = MetricVector()
        for f in fields(MetricVector):
            mine = getattr(self, f.name)
            theirs = getattr(other, f.name)
            setattr(merged, f.name, mine if mine is not None else theirs)
        return merged

    def as_dict(self) -> dict[str, float | int | None]:
        return {f.name: getattr(self, f.name) for f in fields(MetricVector)}


METRIC_NAMES = tuple(f.name for f in fields(MetricVector))


def metrics_csv_header() -> str:
    return ",".join(METRIC_NAMES)


def metrics_csv_row(v: MetricVector) -> str:
    cells = []
    for name in METRIC_NAMES:
        value = getattr(v, name)
        cells.append("" if value is None else repr(value))
    return ",".join(cells)


def complexity_metrics(a: AnalyzedText) -> MetricVector:
    """Length, diversity, and reading-ease metrics.

    flesch = 206.835 - 1.015*(words/sentences) - 84.6*(syllables/words).
    Zero tokens leaves every field undefined rather than zero.
    """
    v = MetricVector()
    words = a.word_count
    sents = a.sentence_count
    if words == 0:
        return v
    distinct = len(set(a.norm_tokens()))
    v.avg_word_length = sum(len(t) for t in a.tokens) / words
    v.type_token_ratio = distinct / words
    v.unique_token_count = distinct
    if sents > 0:
        v.avg_words_per_sentence = words / sents
        v.flesch_reading_ease = (
            FLESCH_BASE
            - FLESCH_SENTENCE_WEIGHT * (words / sents)
            - FLESCH_SYLLABLE_WEIGHT * (sum(a.syllable_counts) / words)
        )
    return v


def interaction_metrics(a: AnalyzedText, directives: Lexicon) -> MetricVector:
    """Question rate per 100 words, question/directive balance, assertiveness.

    A directive is a sentence whose first token is a known imperative verb;
    engagement balance is undefined when the text has neither questions nor
    directives.
    """
    v = MetricVector()
    words = a.word_count
    sents = a.sentence_count
    if words == 0 or sents == 0:
        return v
    q = sum(1 for flag in a.question_flags if flag)
    d = sum(1 for first in a.sentence_first_tokens() if first in directives)
    v.question_rate_per_100w = 100.0 * q / words
    if q + d > 0:
        v.engagement_balance = q / (q + d)
    avg_wps = words / sents
    v.assertiveness_per_sentence = (d / sents) / avg_wps
    return v


def stance_metrics(a: AnalyzedText, toxic: Lexicon) -> MetricVector:
    """Pronoun bias, direct second-person references, toxic token count.

    pronoun_bias_rate uses the exact base tokens "you" and "we" only;
    direct_you_count uses the broader second-person family so the two
    metrics stay non-duplicative.
    """
    v = MetricVector()
    words = a.word_count
    if words == 0:
        return v
    norm = a.norm_tokens()
    you = sum(1 for t in norm if t == "you")
    we = sum(1 for t in norm if t == "we")
    v.pronoun_bias_rate = 100.0 * (you - we) / words
    v.direct_you_count = sum(1 for t in norm if t in SECOND_PERSON)
    v.toxic_word_count = sum(1 for t in norm if t in toxic)
    return v


def full_metrics(a: AnalyzedText, lexicons: LexiconSet) -> MetricVector:
    return (
        complexity_metrics(a)
        .merge(interaction_metrics(a, lexicons.directives))
        .merge(stance_metrics(a, lexicons.toxic))
    )


def _is_shout_token(token: str) -> bool:
    return len(token) >= 2 and token.isalpha() and token == token.upper()


def simulation_metrics(turn_texts: list[str], lexicons: LexiconSet) -> MetricVector:
    """The four per-thread measures used when comparing G against G'.

    toxicity_rate: percent of turns containing a toxic-lexicon token.
    capitalization_ratio: percent of fully-uppercase alphabetic tokens (len>=2).
    exclamation_count: '!' per turn, scaled by EXCLAMATION_SCALE for display
    (the raw total travels in exclamation_total).
    argumentativeness: disagreement tokens / (politeness tokens + 1).
    """
    v = MetricVector()
    turns = len(turn_texts)
    if turns == 0:
        return v
    analyzed = [analyze(t) for t in turn_texts]
    toxic_turns = 0
    total_tokens = 0
    shout_tokens = 0
    disagreement = 0
    politeness = 0
    bangs = 0
    for raw, a in zip(turn_texts, analyzed):
        norm = a.norm_tokens()
        if any(t in lexicons.toxic for t in norm):
            toxic_turns += 1
        total_tokens += len(a.tokens)
        shout_tokens += sum(1 for t in a.tokens if _is_shout_token(t))
        disagreement += sum(1 for t in norm if t in lexicons.disagreement)
        politeness += sum(1 for t in norm if t in lexicons.politeness)
        bangs += raw.count("!")
    v.toxicity_rate = 100.0 * toxic_turns / turns
    if total_tokens > 0:
        v.capitalization_ratio = 100.0 * shout_tokens / total_tokens
    v.exclamation_total = bangs
    v.exclamation_count = EXCLAMATION_SCALE * bangs / turns
    v.argumentativeness = disagreement / (politeness + 1)
    return v


def sentiment_shift(turn_texts: list[str], lexicons: LexiconSet) -> float | None:
    """(positive - negative lexicon hits) / tokens; interpretive extra.

    Reported separately from the core metric family because the source
    material names the measure without pinning a formula.
    """
    total_tokens = 0
    pos = 0
    neg = 0
    for text in turn_texts:
        a = analyze(text)
        norm = a.norm_tokens()
        total_tokens += len(norm)
        pos += sum(1 for t in norm if t in lexicons.positive)
        neg += sum(1 for t in norm if t in lexicons.negative)
    if total_tokens == 0:
        return None
    return (pos - neg) / total_tokens
