import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairlens.align import AlignmentCounts, align, cer, edit_distance, tokenize_chars, tokenize_words, wer
from fairlens.errors import UndefinedMetricError
from oracles import brute_edit_distance, optimal_count_triples


def test_tokenizers():
    assert tokenize_words("hallo wereld") == ["hallo", "wereld"]
    assert tokenize_words("") == []
    assert len(tokenize_words("a b c")) == 3
    assert tokenize_chars("ab") == ["a", "b"]
    assert tokenize_chars("a b") == ["a", " ", "b"]
    assert tokenize_chars("") == []


def test_identity_alignment():
    c = align(["de", "kat", "zat"], ["de", "kat", "zat"])
    assert (c.substitutions, c.deletions, c.insertions, c.hits) == (0, 0, 0, 3)


def test_single_deletion():
    ref, hyp = ["de", "kat", "zat"], ["de", "kat"]
    assert brute_edit_distance(ref, hyp) == 1
    c = align(ref, hyp)
    assert (c.substitutions, c.deletions, c.insertions) == (0, 1, 0)


def test_pure_insertion():
    c = align([], ["x", "y"])
    assert (c.substitutions, c.deletions, c.insertions, c.reference_length) == (0, 0, 2, 0)


def test_tie_break_prefers_substitution_over_delete_insert():
    # "a b" -> "b c": either 2 substitutions or 1 deletion + 1 insertion (both cost 2)
    c = align(["a", "b"], ["b", "c"])
    assert sum((c.substitutions, c.deletions, c.insertions)) == 2
    assert (c.substitutions, c.deletions, c.insertions) == (2, 0, 0)


def test_tie_break_deletion_before_insertion():
    # backtrace from the end: the trailing "x" vs "y" mismatch is a substitution
    c = align(["x", "a"], ["a", "y"])
    assert (c.substitutions, c.deletions, c.insertions) == (2, 0, 0)
    c = align(["a", "b", "c"], ["b", "c", "d"])
    assert c.errors == 2
    assert (c.deletions, c.insertions) == (1, 1)


def test_wer_examples():
    assert wer("de kat zat", "de kat zat") == 0.0
    assert brute_edit_distance("de kat zat".split(), "de hond zat hier".split()) == 2
    assert wer("de kat zat", "de hond zat hier") == pytest.approx(2 / 3)
    assert brute_edit_distance(["a"], ["b", "c", "d"]) == 3
    assert wer("a", "b c d") == 3.0


def test_cer_examples():
    assert cer("ab", "ab") == 0.0
    assert brute_edit_distance("kat", "kas") == 1
    assert cer("kat", "kas") == pytest.approx(1 / 3)
    assert cer("a", "") == 1.0


def test_empty_reference_is_undefined():
    with pytest.raises(UndefinedMetricError):
        wer("", "iets")
    with pytest.raises(UndefinedMetricError):
        cer("", "")
    with pytest.raises(UndefinedMetricError):
        AlignmentCounts(0, 0, 1, 0, 0).error_rate


tokens = st.lists(st.sampled_from("abcde"), max_size=8)


@settings(max_examples=500, deadline=None)
@given(tokens, tokens)
def test_matches_oracle(ref, hyp):
    c = align(ref, hyp)
    assert c.errors == brute_edit_distance(ref, hyp)
    assert edit_distance(ref, hyp) == c.errors
    assert (c.substitutions, c.deletions, c.insertions) in optimal_count_triples(ref, hyp)
    assert c.substitutions + c.deletions + c.hits == len(ref) == c.reference_length
    assert c.substitutions + c.insertions + c.hits == len(hyp) == c.hypothesis_length


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abc ", min_size=1, max_size=12).map(lambda s: " ".join(s.split())).filter(bool))
def test_wer_zero_iff_equal(ref):
    assert wer(ref, ref) == 0
    assert wer(ref, ref + " x") > 0
    assert cer(ref, "") == 1.0


def test_deterministic():
    ref, hyp = list("abcabcab"), list("bcbacbba")
    assert len({align(ref, hyp) for _ in range(5)}) == 1
