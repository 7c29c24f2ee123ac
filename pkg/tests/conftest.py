import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from headparse.config import TrainConfig  # noqa: E402
from headparse.corpus import Sentence, Token, Treebank, Vocabulary, read_conll  # noqa: E402
from headparse.model import initialize  # noqa: E402
from headparse.synthetic import generate_treebank  # noqa: E402

THREE_SENTENCES = """\
1	The	_	DT	DT	_	2	det	_	_
2	dog	_	NN	NN	_	3	nsubj	_	_
3	barks	_	VBZ	VBZ	_	0	root	_	_
4	.	_	.	.	_	3	punct	_	_

1	John	_	NNP	NNP	_	2	nsubj	_	_
2	saw	_	VBD	VBD	_	0	root	_	_
3	Mary	_	NNP	NNP	_	2	dobj	_	_
4	,	_	,	,	_	2	punct	_	_
5	today	_	NN	NN	_	2	tmod	_	_

1	Birds	_	NNS	NNS	_	2	nsubj	_	_
2	fly	_	VBP	VBP	_	0	root	_	_
"""


def make_sentence(heads, tags=None, forms=None, labels=None) -> Sentence:
    n = len(heads)
    tags = tags or ["NN"] * n
    forms = forms or [f"w{k}" for k in range(1, n + 1)]
    labels = labels or ["dep"] * n
    return Sentence(tuple(Token(form=f, pos=t, head=h, label=lab)
                          for f, t, h, lab in zip(forms, tags, heads, labels)))


def tiny_vocab(n_words: int = 20, tags=("NN", "VB", "DT"), labels=("dep", "nsubj")) -> Vocabulary:
    words = ["<unk>", "<root>"] + [f"w{k}" for k in range(1, n_words - 1)]
    return Vocabulary(words=words, tags=["<root>", "<unk>"] + list(tags), labels=list(labels))


def tiny_config(**kw) -> TrainConfig:
    base = dict(hidden_dim=8, word_dim=8, tag_dim=4, label_hidden=6, dtype="float64", seed=7)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture
def fixture_treebank() -> Treebank:
    return read_conll(THREE_SENTENCES)


@pytest.fixture
def tiny_bundle():
    return initialize(tiny_config(), tiny_vocab())


@pytest.fixture(scope="session")
def toy_treebank() -> Treebank:
    return generate_treebank(50, seed=11, max_length=15)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
