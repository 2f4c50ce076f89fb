# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled text scan kernel; the fast twin of ``_scan_py``.

Must stay bit-identical to the pure implementation: same token rule, same
sentence-break rule, same syllable heuristic. Build in place with
``python setup.py build_ext --inplace``.
"""

BACKEND = "compiled"

cdef frozenset _ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc"}
)


cdef inline bint _is_token_char(Py_UCS4 c):
    return c.isalnum() or c == u"'" or c == u"’"


cdef inline bint _is_vowel(Py_UCS4 c):
    return c == u"a" or c == u"e" or c == u"i" or c == u"o" or c == u"u" or c == u"y"


def norm_token(token):
    """Lowercase and fold curly apostrophes; the matching form of a token."""
    return token.lower().replace(u"’", u"'")


def scan(text):
    """Single pass over ``text``; see the pure twin for the full contract."""
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i = 0, j
    cdef Py_UCS4 c, nxt
    cdef bint guarded
    cdef list breaks = []

    while i < n:
        c = text[i]
        if (c == u"." or c == u"!" or c == u"?") and (
            i + 1 >= n or (<Py_UCS4> text[i + 1]).isspace()
        ):
            guarded = False
            if c == u".":
                j = i - 1
                while j >= 0 and _is_token_char(text[j]):
                    j -= 1
                tok = norm_token(text[j + 1 : i])
                if tok and (tok in _ABBREVIATIONS or (len(tok) == 1 and tok.isalpha())):
                    guarded = True
            if not guarded:
                breaks.append(i + 1)
        i += 1
    if not breaks or <Py_ssize_t> breaks[len(breaks) - 1] < n:
        breaks.append(n)

    cdef list tokens = []
    cdef list sentences = []
    cdef list counts = []
    cdef list questions = []
    cdef Py_ssize_t seg_start = 0, seg_end, seg_tokens
    for bk in breaks:
        seg_end = <Py_ssize_t> bk
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
            questions.append(len(stripped) > 0 and stripped[len(stripped) - 1] == u"?")
        seg_start = seg_end
    return tokens, sentences, counts, questions


def syllables(token):
    """Vowel-group count with silent-e adjustment, minimum 1."""
    t = norm_token(token)
    cdef Py_ssize_t n = len(t)
    cdef Py_ssize_t idx
    cdef int groups = 0, last_len = 0
    cdef bint prev_vowel = False, vowel
    cdef Py_UCS4 ch
    for idx in range(n):
        ch = t[idx]
        vowel = _is_vowel(ch) and not (ch == u"y" and idx == 0)
        if vowel:
            if prev_vowel:
                last_len += 1
            else:
                groups += 1
                last_len = 1
        prev_vowel = vowel
    if groups > 1 and last_len == 1 and n > 0 and <Py_UCS4> t[n - 1] == u"e":
        groups -= 1
    return groups if groups >= 1 else 1


def syllable_counts(tokens):
    return [syllables(t) for t in tokens]
