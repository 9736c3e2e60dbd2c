"""Deterministic normalization for OCR-extracted meme text.

Steps run in a fixed order chosen so URL fragments never get mangled by
later steps:

    strip_urls -> split_hashtags -> expand_contractions
        -> collapse_elongations -> normalize_entities -> strip_nonalnum

Every step is a total function on str; with the default config the whole
pipeline is idempotent and its output stays within [A-Za-z0-9 <>].
"""

import re
from dataclasses import dataclass
from importlib import resources
from math import log

# TLDs accepted when deciding whether a bare token like "example.net" is a
# URL.  Deliberately short: a long list starts eating sentence-final
# abbreviations.
KNOWN_TLDS = frozenset(
    """com net org edu gov mil int info biz name pro co io ai app dev me ly
    gl tv cc ws us uk ca de fr es it nl ru cn jp in au br eu xyz online site
    club shop blog live news video media link page""".split()
)

_URL_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*://\S+$")
_BARE_DOMAIN_RE = re.compile(
    r"^[A-Za-z0-9][A-Za-z0-9-]*(\.[A-Za-z0-9][A-Za-z0-9-]*)*\.([A-Za-z]{2,})(/\S*)?$"
)
_TRAILING_PUNCT = ".,!?;:)]}\"'"

_ELONG_RE = re.compile(r"([^\W\d_])\1{2,}", re.UNICODE)

# Entity boundaries use the post-strip alphabet [A-Za-z0-9<>], not \w, so a
# digit shielded only by a char that strip_nonalnum later deletes (e.g. "_")
# is already standalone on the first pass.
_B = "A-Za-z0-9<>"
_DATE_RES = (
    re.compile(rf"(?<![{_B}])\d{{1,2}}/\d{{1,2}}/\d{{2,4}}(?![{_B}])"),
    re.compile(rf"(?<![{_B}])\d{{4}}-\d{{1,2}}-\d{{1,2}}(?![{_B}])"),
    re.compile(
        rf"(?<![{_B}])(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|"
        rf"jun(?:e)?|jul(?:y)?|aug(?:ust)?|sep(?:t|tember)?|oct(?:ober)?|"
        rf"nov(?:ember)?|dec(?:ember)?)\.?\s+\d{{1,2}}(?:st|nd|rd|th)?,?\s+\d{{4}}(?![{_B}])",
        re.IGNORECASE,
    ),
)
_TIME_RE = re.compile(
    rf"(?<![{_B}])\d{{1,2}}:\d{{2}}(?::\d{{2}})?(?:\s?[ap]\.?m\.?)?(?![{_B}:])",
    re.IGNORECASE,
)
_NUMBER_RE = re.compile(
    rf"(?<![{_B}])[+-]?(?:\d{{1,3}}(?:,\d{{3}})+|\d+)(?:\.\d+)?(?![{_B}])"
)

_NONALNUM_RE = re.compile(r"[^A-Za-z0-9<> \t\r\n]")
_WS_RE = re.compile(r"\s+")

_HASHTAG_BODY_RE = re.compile(r"^#+([A-Za-z0-9_]+)$")

MAX_SEGMENT_WORD_LEN = 24


class ContractionDict:
    """Chat-token -> expansion map. Keys are lowercase, whitespace-free,
    and never map to themselves; lookups are case-insensitive."""

    def __init__(self, entries):
        cleaned = {}
        for token, expansion in entries.items():
            key = token.strip().lower()
            if not key or any(ch.isspace() for ch in key):
                raise ValueError(f"bad contraction key {token!r}")
            if key == expansion.strip().lower():
                raise ValueError(f"contraction {key!r} maps to itself")
            cleaned[key] = expansion.strip()
        self.entries = cleaned

    def __len__(self):
        return len(self.entries)

    def get(self, token):
        return self.entries.get(token.lower())

    @classmethod
    def from_file(cls, path):
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                if "\t" not in line:
                    raise ValueError(f"{path}:{lineno}: expected token<TAB>expansion")
                token, expansion = line.split("\t", 1)
                entries[token] = expansion
        return cls(entries)


class SegmentLexicon:
    """Word list ordered by descending frequency, with Zipf log-probs.

    Word at 1-based rank r scores log(1 / (r * H_n)) with H_n the harmonic
    number, i.e. a fitted Zipf(s=1) unigram model.  Duplicate words keep
    their first (best) rank.
    """

    def __init__(self, words):
        self.logp = {}
        rank = 0
        for w in words:
            w = w.strip().lower()
            if not w or w in self.logp:
                continue
            rank += 1
            self.logp[w] = -log(rank)  # -log(H_n) added after count known
        h_n = sum(1.0 / r for r in range(1, rank + 1))
        log_h = log(h_n) if h_n > 0 else 0.0
        for w in self.logp:
            self.logp[w] -= log_h

    def __contains__(self, word):
        return word in self.logp

    def __len__(self):
        return len(self.logp)

    def score(self, word):
        return self.logp.get(word)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read().split())


@dataclass(frozen=True)
class PreprocessConfig:
    expand_contractions: bool = True
    strip_urls: bool = True
    collapse_elongations: bool = True
    normalize_entities: bool = True
    split_hashtags: bool = True
    strip_nonalnum: bool = True


def default_contractions():
    path = resources.files("memefuse.data").joinpath("contractions.tsv")
    return ContractionDict.from_file(str(path))


def default_lexicon():
    path = resources.files("memefuse.data").joinpath("wordlist.txt")
    return SegmentLexicon.from_file(str(path))


def _is_url_token(token):
    if _URL_SCHEME_RE.match(token):
        return True
    core = token.rstrip(_TRAILING_PUNCT)
    if not core:
        return False
    if core.lower().startswith("www.") and len(core) > 4:
        return True
    m = _BARE_DOMAIN_RE.match(core)
    if m and "." in core:
        return m.group(2).lower() in KNOWN_TLDS
    return False


def strip_urls(text):
    """Drop whitespace tokens that look like URLs (scheme://..., www....,
    or bare domain with a known TLD); join survivors with single spaces."""
    return " ".join(t for t in text.split() if not _is_url_token(t))


def expand_contractions(text, cdict):
    """Replace each whitespace token whose lowercase form is a dictionary
    key by its expansion; join with single spaces."""
    out = []
    for token in text.split():
        expansion = cdict.get(token)
        out.append(expansion if expansion is not None else token)
    return " ".join(out)


def collapse_elongations(text):
    """Collapse any same-letter run of length >= 3 down to one letter;
    runs of two survive (book, keeper)."""
    return _ELONG_RE.sub(r"\1", text)


def normalize_entities(text):
    """Rewrite dates, then clock times, then standalone numbers to the
    placeholder tokens <date>, <time>, <number>."""
    for pat in _DATE_RES:
        text = pat.sub("<date>", text)
    text = _TIME_RE.sub("<time>", text)
    text = _NUMBER_RE.sub("<number>", text)
    return text


def segment_word(word, lexicon):
    """Maximum-likelihood split of `word` into lexicon words, or None.

    Dynamic program over prefixes; the score of a segmentation is the sum
    of Zipf log-probs, so rarer/longer vocabularies lose to frequent ones
    and extra words pay the normalization penalty.
    """
    word = word.lower()
    n = len(word)
    if n == 0:
        return None
    best = [None] * (n + 1)
    back = [0] * (n + 1)
    best[0] = 0.0
    for j in range(1, n + 1):
        lo = max(0, j - MAX_SEGMENT_WORD_LEN)
        for i in range(lo, j):
            if best[i] is None:
                continue
            piece = word[i:j]
            s = lexicon.score(piece)
            if s is None:
                continue
            cand = best[i] + s
            if best[j] is None or cand > best[j]:
                best[j] = cand
                back[j] = i
    if best[n] is None:
        return None
    parts = []
    j = n
    while j > 0:
        i = back[j]
        parts.append(word[i:j])
        j = i
    parts.reverse()
    return parts


def split_hashtags(text, lexicon):
    """Replace #tag tokens by their best lexicon segmentation (lowercased);
    unsegmentable tags keep their body without the '#'."""
    out = []
    for token in text.split():
        if not token.startswith("#"):
            out.append(token)
            continue
        m = _HASHTAG_BODY_RE.match(token)
        body = m.group(1) if m else token.lstrip("#")
        if not body:
            continue
        parts = segment_word(body, lexicon) if m else None
        out.append(" ".join(parts) if parts else body)
    return " ".join(out)


def strip_nonalnum(text):
    """Remove everything outside [A-Za-z0-9 space < >], then collapse
    whitespace runs.  Angle brackets survive so entity tokens do."""
    text = _NONALNUM_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def _sweep(text, config, cdict, lexicon):
    if config.strip_urls:
        text = strip_urls(text)
    if config.split_hashtags:
        text = split_hashtags(text, lexicon)
    if config.expand_contractions:
        text = expand_contractions(text, cdict)
    if config.collapse_elongations:
        text = collapse_elongations(text)
    if config.normalize_entities:
        text = normalize_entities(text)
    if config.strip_nonalnum:
        text = strip_nonalnum(text)
    return text


def preprocess(text, config=None, cdict=None, lexicon=None):
    """Apply the enabled normalization steps in the pipeline's fixed order,
    repeating the sweep until the text stops changing.

    A single sweep is not idempotent: stripping punctuation can expose a
    contraction key ("YOLO!" -> "YOLO") or merge letter runs ("aa!a" ->
    "aaa") that an earlier step would have rewritten. Iterating to a fixed
    point makes a second preprocess call a no-op by construction. The
    expansion phrases contain no contraction keys, digits, or 3-letter
    runs, so the iteration settles within a few sweeps; the cap is a
    safety net only.
    """
    config = config or PreprocessConfig()
    if config.split_hashtags and lexicon is None:
        lexicon = default_lexicon()
    if config.expand_contractions and cdict is None:
        cdict = default_contractions()
    for _ in range(16):
        new = _sweep(text, config, cdict, lexicon)
        if new == text:
            break
        text = new
    return text
