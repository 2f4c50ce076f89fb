"""Pure-Python text scan kernel.

Reference implementation of the hot loop behind every metric: tokenization,
sentence segmentation, and syllable counting. The compiled twin in
``_scan.pyx`` must produce bit-identical output; ``engine`` picks whichever
is importable.

Rules (shared by both kernels, do not change one without the other):
  * token  = maximal run of unicode alphanumerics or apostrophes (' or U+2019)
  * sentence break = '.', '!' or '?' followed by whitespace/end of text,
    except a '.' directly preceded by a guard-list abbreviation or a single
    alphabetic letter (initials, "e.g.")
  * a sentence is kept only if it contains at least one token
  * syllables = vowel-group count (aeiouy, leading y excluded) with a
    silent-e adjustment, never below 1
"""

from __future__ import annotations

BACKEND = "pure"

_APOSTROPHES = ("'", "’")
_TERMINALS = (".", "!", "?")
_ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc"}
)
_VOWELS = frozenset("aeiouy")


def _is_token_char(c: str) -> bool:
    return c.isalnum() or c in _APOSTROPHES


def norm_token(token: str) -> str:
    """Lowercase and fold curly apostrophes; the matching form of a token."""
    return token.lower().replace("’", "'")


def scan(text: str):
    """Single pass over ``text``.

    Returns (tokens, sentences, sentence_token_counts, question_flags) where
    sentences are the stripped segment texts, counts partition the token
    list in order, and a flag is set when the segment's last non-space
    character is '?'.
    """
    n = len(text)
    breaks: list[int] = []  # index one past each sentence-terminating char
    i = 0
    while i < n:
        c = text[i]
        if c in _TERMINALS and (i + 1 >= n or text[i + 1].isspace()):
            guarded = False
            if c == ".":
                j = i - 1
                while j >= 0 and _is_token_char(text[j]):
                    j -= 1
                tok = norm_token(text[j + 1 : i])
                if tok and (tok in _ABBREVIATIONS or (len(tok) == 1 and tok.isalpha())):
                    guarded = True
            if not guarded:
                breaks.append(i + 1)
        i += 1
    if not breaks or breaks[-1] < n:
        breaks.append(n)

    tokens: list[str] = []
    sentences: list[str] = []
    counts: list[int] = []
    questions: list[bool] = []
    seg_start = 0
    for seg_end in breaks:
        seg_tokens = 0
        i = seg_start
        while i < seg_end:
            if _is_token_char(text[i]):
                j = i + 1
                while j < seg_end and _is_token_char(text[j]):
                    j += 1
                tokens.append(text[i:j])
                seg_tokens += 1
                i = j
            else:
                i += 1
        if seg_tokens > 0:
            stripped = text[seg_start:seg_end].strip()
            sentences.append(stripped)
            counts.append(seg_tokens)
            questions.append(bool(stripped) and stripped[-1] == "?")
        seg_start = seg_end
    return tokens, sentences, counts, questions


def syllables(token: str) -> int:
    """Vowel-group count with silent-e adjustment, minimum 1.

    Operates on the normalized form; y counts as a vowel except at
    position 0 of the token.
    """
    t = norm_token(token)
    groups = 0
    last_len = 0
    prev_vowel = False
    for idx, ch in enumerate(t):
        vowel = ch in _VOWELS and not (ch == "y" and idx == 0)
        if vowel:
            if prev_vowel:
                last_len += 1
            else:
                groups += 1
                last_len = 1
        prev_vowel = vowel
    if groups > 1 and last_len == 1 and t.endswith("e"):
        groups -= 1
    return groups if groups >= 1 else 1


def syllable_counts(tokens: list[str]) -> list[int]:
    return [syllables(t) for t in tokens]
