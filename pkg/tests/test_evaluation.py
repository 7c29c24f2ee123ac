import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from headparse.corpus import Treebank, read_conll
from headparse.evaluation import (EvalReport, attachment_scores, format_tree_rates, length_bins, tree_rate,
                                  tree_rate_report, uas_by_length, write_report)
from conftest import make_sentence
from oracles import random_head_array, random_tree

# Hand-scored predictions for the three fixture sentences:
#   s1: "dog" gets the wrong label, "." the wrong head (punctuation, excluded)
#   s2: "John" and "today" get wrong heads
#   s3: perfect
PREDICTED = """\
1	The	_	DT	DT	_	2	det	_	_
2	dog	_	NN	NN	_	3	dobj	_	_
3	barks	_	VBZ	VBZ	_	0	root	_	_
4	.	_	.	.	_	1	punct	_	_

1	John	_	NNP	NNP	_	3	nsubj	_	_
2	saw	_	VBD	VBD	_	0	root	_	_
3	Mary	_	NNP	NNP	_	2	dobj	_	_
4	,	_	,	,	_	2	punct	_	_
5	today	_	NN	NN	_	3	tmod	_	_

1	Birds	_	NNS	NNS	_	2	nsubj	_	_
2	fly	_	VBP	VBP	_	0	root	_	_
"""


def test_three_sentence_fixture_hand_counts(fixture_treebank):
    pred = read_conll(PREDICTED)
    r = attachment_scores(fixture_treebank, pred)
    # 9 scored tokens: 7 correct heads, 6 correct head+label; s1 and s3 exact
    assert (r.tokens, r.excluded, r.correct_heads, r.correct_labeled, r.exact) == (9, 2, 7, 6, 2)
    assert r.uas == 100 * 7 / 9
    assert r.las == 100 * 6 / 9
    assert r.uem == 100 * 2 / 3


def test_fixture_without_punctuation_exclusion(fixture_treebank):
    r = attachment_scores(fixture_treebank, read_conll(PREDICTED), exclude_punct=False)
    assert (r.tokens, r.correct_heads, r.correct_labeled, r.exact) == (11, 8, 7, 1)


def test_punctuation_is_decided_by_gold_tag(fixture_treebank):
    pred = read_conll(PREDICTED.replace("\t.\t.\t_\t1", "\tNN\tNN\t_\t1"))
    assert attachment_scores(fixture_treebank, pred).tokens == 9


def test_identity_and_all_wrong(fixture_treebank):
    r = attachment_scores(fixture_treebank, fixture_treebank)
    assert r.uas == r.las == r.uem == 100.0
    wrong = Treebank(tuple(s.with_heads([(h % len(s)) + 1 if h == 0 else 0 for h in s.heads], s.labels)
                           for s in fixture_treebank))
    assert attachment_scores(fixture_treebank, wrong).uas == 0.0


def test_two_sentences_one_error():
    gold = Treebank((make_sentence([2, 0, 2, 3]), make_sentence([0, 1, 1, 3])))
    pred = Treebank((gold[0], gold[1].with_heads([0, 1, 1, 1], gold[1].labels)))
    r = attachment_scores(gold, pred)
    assert r.uem == 50.0
    assert r.uas == 100 * 7 / 8


def test_mismatched_inputs_raise(fixture_treebank):
    with pytest.raises(ValueError, match="sentences"):
        attachment_scores(fixture_treebank, fixture_treebank[:2])
    short = Treebank((make_sentence([0]),) + fixture_treebank.sentences[1:])
    with pytest.raises(ValueError, match="sentence 0"):
        attachment_scores(fixture_treebank, short)


def _random_pair(rng, n_sent):
    gold, pred = [], []
    for _ in range(n_sent):
        n = int(rng.integers(1, 9))
        tags = [str(rng.choice(["NN", ",", "VB", "."])) for _ in range(n)]
        g = make_sentence(random_tree(rng, n), tags=tags, labels=[str(rng.choice(["a", "b"])) for _ in range(n)])
        p = g.with_heads([h if rng.random() < 0.6 else ph for h, ph in zip(g.heads, random_head_array(rng, n))],
                         [str(rng.choice(["a", "b"])) for _ in range(n)])
        gold.append(g)
        pred.append(p)
    return Treebank(tuple(gold)), Treebank(tuple(pred))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_las_never_exceeds_uas_and_order_is_irrelevant(seed):
    rng = np.random.default_rng(seed)
    gold, pred = _random_pair(rng, int(rng.integers(1, 6)))
    r = attachment_scores(gold, pred)
    assert r.las <= r.uas
    perm = rng.permutation(len(gold))
    r2 = attachment_scores(Treebank(tuple(gold[k] for k in perm)), Treebank(tuple(pred[k] for k in perm)))
    assert (r.uas, r.las, r.uem) == (r2.uas, r2.las, r2.uem)


def test_punctuation_free_corpus_unaffected_by_exclusion():
    rng = np.random.default_rng(4)
    gold, pred = _random_pair(rng, 30)
    strip = lambda tb: Treebank(tuple(make_sentence(s.heads, tags=["NN"] * len(s), labels=s.labels) for s in tb))
    g, p = strip(gold), strip(pred)
    a, b = attachment_scores(g, p), attachment_scores(g, p, exclude_punct=False)
    assert (a.uas, a.las, a.uem) == (b.uas, b.las, b.uem)


def test_report_formats(fixture_treebank):
    r = attachment_scores(fixture_treebank, read_conll(PREDICTED))
    text = r.as_text()
    assert "UAS   77.78  (7 / 9)" in text
    kv = dict(line.split("=") for line in r.as_key_values().splitlines())
    assert kv["uas"] == "77.78" and kv["las"] == "66.67" and kv["uem"] == "66.67"
    buf = io.StringIO()
    r.bins = [(3, 100.0, 2)]
    write_report(r, buf, machine=True)
    assert buf.getvalue().endswith("max_length\tuas\tsentences\n3\t100.00\t2\n")


def test_empty_report_is_zero():
    r = EvalReport(0, 0, 0, 0, 0, 0)
    assert r.uas == r.las == r.uem == 0.0


# -- tree rates -----------------------------------------------------------

def test_tree_rate_counts():
    rates = tree_rate([[0], [2, 1], [3, 4, 0, 3], [2, 0, 2]])
    assert rates == {"sentences": 4, "tree": 75.0, "projective": 50.0}


def test_tree_rate_report_all_trees_before_equals_after():
    rng = np.random.default_rng(0)
    trees = [random_tree(rng, int(rng.integers(1, 10))) for _ in range(50)]
    rep = tree_rate_report(trees, trees)
    assert rep["before_tree"] == rep["after_tree"] == 100.0
    assert rep["before_projective"] == rep["after_projective"]
    assert format_tree_rates(rep).startswith("sentences=50 tree_before=100.0")


# -- length bins ------------------------------------------------------------

def test_ten_sentences_ten_bins():
    gold = Treebank(tuple(make_sentence([0] * n) for n in range(10, 0, -1)))
    bins = uas_by_length(gold, gold, bins=10)
    assert [b[0] for b in bins] == list(range(1, 11))
    assert all(count == 1 for _, _, count in bins)
    assert all(uas == 100.0 for _, uas, _ in bins)


def test_leftovers_go_to_earliest_bins():
    groups = length_bins(list(range(23)), bins=10)
    assert [len(g) for g in groups] == [3, 3, 3] + [2] * 7
    with pytest.raises(ValueError):
        length_bins([1, 2], bins=3)


def test_errors_only_in_long_sentences_give_non_increasing_tail():
    gold, pred = [], []
    for n in range(1, 41):
        g = make_sentence([0] * n)
        wrong = max(0, n - 20)  # sentences longer than 20 get n-20 wrong heads
        heads = [2 if k < wrong else 0 for k in range(n)]
        heads = [h if h != k + 1 else 0 for k, h in enumerate(heads)]
        gold.append(g)
        pred.append(g.with_heads(heads))
    bins = uas_by_length(Treebank(tuple(gold)), Treebank(tuple(pred)), bins=10)
    uas = [b[1] for b in bins]
    assert uas[:5] == [100.0] * 5
    assert all(a >= b for a, b in zip(uas[4:], uas[5:]))
    assert uas[-1] < 100.0
