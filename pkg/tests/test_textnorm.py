"""Text normalization: per-step goldens, URL/entity decision tables, and
pipeline-level properties (idempotence, charset, determinism)."""

import re
import string

import numpy as np
import pytest

from memefuse.textnorm import (
    ContractionDict,
    PreprocessConfig,
    SegmentLexicon,
    collapse_elongations,
    default_contractions,
    default_lexicon,
    expand_contractions,
    normalize_entities,
    preprocess,
    segment_word,
    split_hashtags,
    strip_nonalnum,
    strip_urls,
)

CDICT = default_contractions()
LEXICON = default_lexicon()


class TestContractionDict:
    def test_published_pairs_present(self):
        assert CDICT.get("YOLO") == "you only live once"
        assert CDICT.get("asap") == "as soon as possible"

    def test_lookup_is_case_insensitive(self):
        assert CDICT.get("YoLo") == CDICT.get("yolo")

    def test_rejects_self_mapping(self):
        with pytest.raises(ValueError):
            ContractionDict({"lol": "LOL"})

    def test_rejects_whitespace_keys(self):
        with pytest.raises(ValueError):
            ContractionDict({"a b": "something"})

    def test_from_file_requires_tabs(self, tmp_path):
        path = tmp_path / "dict.tsv"
        path.write_text("yolo you only live once\n", encoding="utf-8")
        with pytest.raises(ValueError):
            ContractionDict.from_file(path)

    def test_dictionary_is_reasonably_sized(self):
        assert len(CDICT) >= 50


class TestExpandContractions:
    def test_single_token(self):
        assert expand_contractions("YOLO", CDICT) == "you only live once"

    def test_token_in_context(self):
        assert expand_contractions("ASAP reply", CDICT) == "as soon as possible reply"

    def test_empty_string(self):
        assert expand_contractions("", CDICT) == ""

    def test_unknown_tokens_untouched(self):
        assert expand_contractions("plain words here", CDICT) == "plain words here"


URL_TABLE = [
    # (token-in-context, stripped?)
    ("http://example.com", True),
    ("https://a.b/c", True),
    ("ftp://files.example.org/pub", True),
    ("HTTP://EXAMPLE.COM", True),
    ("https://example.com.", True),
    ("www.example.com", True),
    ("www.memegenerator.net", True),
    ("www.a.b", True),
    ("memegenerator.net", True),
    ("example.com", True),
    ("example.com/path/to/page", True),
    ("example.com,", True),
    ("example.net!", True),
    ("example.co.uk", True),
    ("sub.domain.co", True),
    ("bit.ly/abc123", True),
    ("goo.gl/xyz", True),
    ("news.site/today", True),
    ("a.io", True),
    ("m.me/page", True),
    ("t.co/abc", True),
    ("example.info", True),
    ("site.blog", True),
    ("pages.dev", True),
    ("example.org)", True),
    ("end.", False),
    ("Not", False),
    ("a", False),
    ("url", False),
    ("e.g.", False),
    ("i.e.", False),
    ("U.S.", False),
    ("U.S.A.", False),
    ("Mr.Smith", False),
    ("3.14", False),
    ("version2.0", False),
    ("example.unknowntld", False),
    ("hello...world", False),
    (".com", False),
    ("com", False),
    ("index.html", False),
    ("README.md", False),
    ("file.txt", False),
    ("script.js", False),
    ("photo.jpg", False),
    ("no.way", False),
    ("covid19.stats", False),
    ("(example.org)", False),
    ("example.", False),
    ("@user.name", False),
]


class TestStripUrls:
    def test_decision_table(self):
        assert len(URL_TABLE) == 50
        for token, stripped in URL_TABLE:
            got = strip_urls(f"before {token} after")
            want = "before after" if stripped else f"before {token} after"
            assert got == want, f"{token!r}: expected stripped={stripped}, got {got!r}"

    def test_published_example(self):
        assert strip_urls("funny memegenerator.net caption") == "funny caption"

    def test_never_increases_token_count(self, rng):
        alphabet = list("abc ./:w#")
        for _ in range(200):
            s = "".join(rng.choice(alphabet, size=rng.integers(0, 40)))
            assert len(strip_urls(s).split()) <= len(s.split())


class TestCollapseElongations:
    def test_published_examples(self):
        assert collapse_elongations("Nooooo") == "No"
        assert collapse_elongations("suuuppperrr") == "super"

    def test_doubles_preserved(self):
        assert collapse_elongations("book keeper") == "book keeper"

    def test_digits_not_collapsed(self):
        assert collapse_elongations("111222333") == "111222333"

    def test_never_increases_length(self, rng):
        alphabet = list(string.ascii_letters + "!?1 ")
        for _ in range(200):
            s = "".join(rng.choice(alphabet, size=rng.integers(0, 30)))
            assert len(collapse_elongations(s)) <= len(s)


ENTITY_TABLE = [
    ("12/05/2020", "<date>"),
    ("1/1/99", "<date>"),
    ("2021-03-01", "<date>"),
    ("2020-1-5", "<date>"),
    ("March 5, 2021", "<date>"),
    ("Jan 1 2020", "<date>"),
    ("Sept. 22nd, 1984", "<date>"),
    ("december 25, 2019", "<date>"),
    ("13/13/2020", "<date>"),
    ("2020-13-45", "<date>"),
    ("seen 12/05/2020.", "seen <date>."),
    ("10:30", "<time>"),
    ("10:30 pm", "<time>"),
    ("10:30pm", "<time>"),
    ("23:59:59", "<time>"),
    ("9:05 AM", "<time>"),
    ("7:45 a.m.", "<time>"),
    ("3", "<number>"),
    ("42 cases", "<number> cases"),
    ("3.14", "<number>"),
    ("-5", "<number>"),
    ("+3.5", "<number>"),
    ("1,000,000", "<number>"),
    ("12.5%", "<number>%"),
    ("x 7 y", "x <number> y"),
    ("covid19", "covid19"),
    ("19covid", "19covid"),
    ("no digits here", "no digits here"),
    ("7,77", "<number>,<number>"),
    ("on 12/05/2020 we saw 3 cases", "on <date> we saw <number> cases"),
]


class TestNormalizeEntities:
    def test_decision_table(self):
        assert len(ENTITY_TABLE) == 30
        for raw, want in ENTITY_TABLE:
            assert normalize_entities(raw) == want, raw

    def test_time_example(self):
        assert normalize_entities("meet at 10:30 pm") == "meet at <time>"


class TestSegmentation:
    def test_best_split_wins(self):
        assert segment_word("fakenews", LEXICON) == ["fake", "news"]

    def test_single_word(self):
        assert segment_word("a", LEXICON) == ["a"]

    def test_unsegmentable_returns_none(self):
        assert segment_word("zzqx", LEXICON) is None

    def test_empty_returns_none(self):
        assert segment_word("", LEXICON) is None

    def test_hashtag_splitting(self):
        assert split_hashtags("#fakenews", LEXICON) == "fake news"
        assert split_hashtags("#a", LEXICON) == "a"
        assert split_hashtags("#zzqx", LEXICON) == "zzqx"

    def test_non_hashtags_untouched(self):
        assert split_hashtags("plain text", LEXICON) == "plain text"

    def test_lexicon_dedupes_keeping_first_rank(self):
        lex = SegmentLexicon(["the", "cat", "the"])
        assert len(lex) == 2
        assert lex.score("the") > lex.score("cat")


class TestStripNonalnum:
    def test_examples(self):
        assert strip_nonalnum("Wow!!! \U0001F921 ok…") == "Wow ok"
        assert strip_nonalnum("<number> votes!") == "<number> votes"

    def test_idempotent_on_random_strings(self, rng):
        alphabet = list(string.printable + "é中\U0001F600")
        for _ in range(300):
            s = "".join(rng.choice(alphabet, size=rng.integers(0, 50)))
            once = strip_nonalnum(s)
            assert strip_nonalnum(once) == once


def _random_strings(seed, count):
    """Deterministic mixed corpus: raw character soup plus meme-ish
    fragments with hashtags, URLs, numbers, and elongations."""
    rng = np.random.default_rng(seed)
    soup = list(string.printable + "éü中\U0001F921#<>")
    frags = [
        "#fakenews", "#StopThe", "www.example.com", "https://a.b/c", "12/05/2020",
        "10:30pm", "1,000", "Noooo!!!", "YOLO", "soooo", "cool", "e.g.", "ok",
        "<number>", "BUILD", "the", "wall", "memegenerator.net", "3.14", "@user",
    ]
    out = []
    for _ in range(count):
        if rng.random() < 0.5:
            out.append("".join(rng.choice(soup, size=rng.integers(0, 60))))
        else:
            k = rng.integers(1, 8)
            out.append(" ".join(rng.choice(frags, size=k)))
    return out


class TestPipeline:
    def test_composed_golden(self):
        got = preprocess("Nooooo!!! YOLO memegenerator.net")
        assert got == "No you only live once"

    def test_all_flags_false_is_identity(self):
        cfg = PreprocessConfig(
            expand_contractions=False,
            strip_urls=False,
            collapse_elongations=False,
            normalize_entities=False,
            split_hashtags=False,
            strip_nonalnum=False,
        )
        weird = "Nooooo!!! YOLO #fakenews www.x.com 12/05/2020"
        assert preprocess(weird, cfg) == weird

    def test_single_flag_toggles_its_step(self):
        cfg = PreprocessConfig(strip_urls=False)
        assert "examplecom" in preprocess("see example.com now", cfg)
        assert preprocess("see example.com now") == "see now"

    def test_deterministic(self):
        s = "#fakenews Nooooo 10:30pm www.a.com YOLO 1,000"
        assert preprocess(s) == preprocess(s)

    def test_output_charset(self):
        ok = re.compile(r"^[A-Za-z0-9 <>]*$")
        for s in _random_strings(7, 300):
            assert ok.match(preprocess(s)), s

    def test_idempotent_on_random_strings(self):
        for s in _random_strings(13, 300):
            once = preprocess(s)
            assert preprocess(once) == once, s
