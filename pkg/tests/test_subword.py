import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bitextkit.errors import DanglingMarker, EmptyCorpus
from bitextkit.subword import BpeModel, apply_bpe, learn_bpe, undo_bpe, vocab_report

words = st.text(alphabet="abcdeé澳門xy", min_size=1, max_size=8)


def test_learn_follows_stop_and_tie_rules():
    # "aaab": (a,a) occurs twice and is merged; afterwards every pair occurs once, so learning stops
    assert learn_bpe(["aaab"], [], 2).merges == (("a", "a"),)
    assert learn_bpe(["aaab"], [], 2).merges == tuple(oracles.learn_bpe(["aaab"], 2))


def test_learn_single_pair():
    model = learn_bpe(["ab"] * 3, [], 1)
    assert model.merges == (("a", "b</w>"),)
    assert apply_bpe(model, ["ab"]) == ["ab"]


def test_learn_is_joint_over_both_sides():
    # neither side alone has a pair occurring twice
    assert learn_bpe(["xy"], [], 1).merges == ()
    assert learn_bpe(["xy"], ["xy"], 1).merges == (("x", "y</w>"),)


def test_learn_empty():
    with pytest.raises(EmptyCorpus):
        learn_bpe([], [], 3)
    with pytest.raises(EmptyCorpus):
        learn_bpe([""], [""], 3)
    with pytest.raises(ValueError):
        learn_bpe(["a"], [], 0)


@pytest.mark.parametrize("merges,tokens,expected", [
    ([("a", "b")], ["abc"], ["ab@@", "c"]),
    ([], ["xy"], ["x@@", "y"]),
    ([("a", "b"), ("ab", "c</w>")], ["abc"], ["abc"]),
    ([("a", "b")], ["ab"], ["a@@", "b"]),  # word-final b is the symbol b</w>, not b
    ([], [], []),
])
def test_apply_examples(merges, tokens, expected):
    assert apply_bpe(BpeModel(tuple(merges)), tokens) == expected


def test_undo_examples():
    assert undo_bpe(["ab@@", "c"]) == ["abc"]
    assert undo_bpe([]) == []
    with pytest.raises(DanglingMarker):
        undo_bpe(["x@@"])


def test_vocab_report_examples():
    assert vocab_report(["a", "b", "a"]) == (2, 2)
    assert vocab_report(["abc"], BpeModel((("a", "b"),))) == (1, 2)
    assert vocab_report([]) == (0, 0)


def test_model_rejects_duplicates():
    with pytest.raises(ValueError):
        BpeModel((("a", "b"), ("a", "b")))


def test_model_file_round_trip(tmp_path):
    model = learn_bpe("the cat sat on the mat with the hat".split() * 3, ["o", "gato"], 10)
    path = tmp_path / "m.bpe"
    model.save(path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "#bpe v1 marker=@@"
    assert len(text.splitlines()) == model.n_merges + 1
    assert BpeModel.load(path) == model


def test_model_file_other_marker(tmp_path):
    model = BpeModel((("a", "b"),), marker="++")
    model.save(tmp_path / "m")
    loaded = BpeModel.load(tmp_path / "m")
    assert loaded.marker == "++"
    assert apply_bpe(loaded, ["abc"]) == ["ab++", "c"]


@settings(max_examples=60)
@given(st.lists(words, min_size=1, max_size=40), st.lists(words, max_size=20), st.integers(1, 30))
def test_learner_matches_bruteforce(a, b, n):
    assert list(learn_bpe(a, b, n).merges) == oracles.learn_bpe(a + b, n)


@settings(max_examples=60)
@given(st.lists(words, min_size=1, max_size=40), st.integers(1, 30), st.lists(words, max_size=10))
def test_apply_matches_naive_replay(corpus, n, probe):
    model = learn_bpe(corpus, [], n)
    for w in corpus + probe:
        assert apply_bpe(model, [w]) == oracles.apply_bpe(list(model.merges), w)


@settings(max_examples=60)
@given(st.lists(words, min_size=1, max_size=30), st.integers(1, 20), st.lists(words, max_size=15))
def test_round_trip(corpus, n, seq):
    model = learn_bpe(corpus, [], n)
    assert undo_bpe(apply_bpe(model, seq)) == seq


@settings(max_examples=30)
@given(st.lists(words, min_size=1, max_size=40), st.integers(1, 15), st.integers(0, 10))
def test_vocab_growth_bound(corpus, n, k):
    small, large = learn_bpe(corpus, [], n), learn_bpe(corpus, [], n + k)
    assert large.merges[:small.n_merges] == small.merges  # greedy prefix property
    assert vocab_report(corpus, large)[1] <= vocab_report(corpus, small)[1] + k


def test_learning_is_deterministic():
    rng = random.Random(5)
    corpus = ["".join(rng.choice("abcde") for _ in range(rng.randint(1, 7))) for _ in range(500)]
    assert learn_bpe(corpus, corpus[:50], 80).dumps() == learn_bpe(list(corpus), corpus[:50], 80).dumps()
