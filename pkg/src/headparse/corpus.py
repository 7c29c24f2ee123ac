"""CoNLL-X / CoNLL-U treebank I/O, vocabularies and projectivity statistics."""
from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence, TextIO

from .decoders import is_projective, is_tree

UNDERSCORE = "_"
UNK = "<unk>"
ROOT = "<root>"


class ConllError(ValueError):
    """Malformed CoNLL input (bad column count, non-integer id, ...)."""


class TreebankValidationError(ValueError):
    """Well-formed rows that do not describe a valid sentence."""


@dataclass(frozen=True)
class Token:
    form: str
    pos: str
    head: int | None = None
    label: str | None = None
    lemma: str = UNDERSCORE
    cpos: str = UNDERSCORE
    feats: str = UNDERSCORE


@dataclass(frozen=True)
class Sentence:
    """Tokens are 1-indexed conceptually; ``tokens[k]`` is word ``k + 1``.

    Position 0 is the implicit ROOT and is never stored.
    """

    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t.pos for t in self.tokens]

    @property
    def heads(self) -> list[int | None]:
        return [t.head for t in self.tokens]

    @property
    def labels(self) -> list[str | None]:
        return [t.label for t in self.tokens]

    @property
    def is_annotated(self) -> bool:
        return all(t.head is not None for t in self.tokens)

    @property
    def is_labeled(self) -> bool:
        return all(t.label is not None for t in self.tokens)

    def with_heads(self, heads: Sequence[int], labels: Sequence[str | None] | None = None) -> "Sentence":
        if labels is None:
            labels = [None] * len(heads)
        return Sentence(tuple(
            replace(t, head=int(h), label=lab) for t, h, lab in zip(self.tokens, heads, labels)
        ))


@dataclass(frozen=True)
class Treebank:
    sentences: tuple[Sentence, ...]
    name: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return Treebank(self.sentences[k], self.name)
        return self.sentences[k]


def _parse_head(field_: str, lineno: int) -> int | None:
    if field_ == UNDERSCORE:
        return None
    try:
        return int(field_)
    except ValueError:
        raise ConllError(f"line {lineno}: HEAD {field_!r} is not an integer") from None


def _finish(rows: list[Token], index: int, name: str) -> Sentence:
    n = len(rows)
    for k, tok in enumerate(rows, start=1):
        if tok.head is None:
            continue
        if not 0 <= tok.head <= n:
            raise TreebankValidationError(
                f"{name} sentence {index}: token {k} has HEAD {tok.head} outside [0, {n}]")
        if tok.head == k:
            raise TreebankValidationError(f"{name} sentence {index}: token {k} is its own head")
    return Sentence(tuple(rows))


def read_conll(stream: TextIO | str, name: str = "") -> Treebank:
    """Read CoNLL-X (or CoNLL-U) text into a :class:`Treebank`.

    ``stream`` may be a text stream or a string holding the file contents.
    Comment lines, multi-word ranges (``3-4``) and empty nodes (``5.1``) are
    skipped.  The fine-grained tag column is used as POS, falling back to the
    coarse column when it is ``_``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    sentences: list[Sentence] = []
    rows: list[Token] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if rows:
                sentences.append(_finish(rows, len(sentences), name))
                rows = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConllError(f"line {lineno}: expected 10 tab-separated columns, found {len(cols)}")
        ident = cols[0]
        if "-" in ident or "." in ident:
            continue
        try:
            position = int(ident)
        except ValueError:
            raise ConllError(f"line {lineno}: ID {ident!r} is not an integer") from None
        if position != len(rows) + 1:
            raise ConllError(f"line {lineno}: expected ID {len(rows) + 1}, found {position}")
        head = _parse_head(cols[6], lineno)
        label = None if cols[7] == UNDERSCORE else cols[7]
        if head is None:
            label = None
        pos = cols[4] if cols[4] != UNDERSCORE else cols[3]
        rows.append(Token(form=cols[1], pos=pos, head=head, label=label,
                          lemma=cols[2], cpos=cols[3], feats=cols[5]))
    if rows:
        sentences.append(_finish(rows, len(sentences), name))
    return Treebank(tuple(sentences), name)


def load_treebank(path: str) -> Treebank:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_conll(fh, name=str(path))


def write_conll(treebank: Treebank | Iterable[Sentence], stream: TextIO) -> None:
    for sent in treebank:
        for k, tok in enumerate(sent.tokens, start=1):
            cols = [
                str(k), tok.form, tok.lemma, tok.cpos if tok.cpos != UNDERSCORE else tok.pos,
                tok.pos, tok.feats,
                UNDERSCORE if tok.head is None else str(tok.head),
                tok.label if tok.label is not None else UNDERSCORE,
                UNDERSCORE, UNDERSCORE,
            ]
            stream.write("\t".join(cols) + "\n")
        stream.write("\n")


def conll_string(treebank: Treebank | Iterable[Sentence]) -> str:
    buf = io.StringIO()
    write_conll(treebank, buf)
    return buf.getvalue()


@dataclass
class Vocabulary:
    """Dense id maps for words, tags and labels.

    Word ids 0 and 1 are reserved for the unknown word and the ROOT token;
    tag id 0 is ROOT and tag id 1 the unknown tag.  Labels carry no
    reserved entries.
    """

    words: list[str]
    tags: list[str]
    labels: list[str]
    word_counts: Counter = field(default_factory=Counter)
    lowercase: bool = False

    def __post_init__(self):
        self.word_index = {w: k for k, w in enumerate(self.words)}
        self.tag_index = {t: k for k, t in enumerate(self.tags)}
        self.label_index = {lab: k for k, lab in enumerate(self.labels)}

    @property
    def unk_id(self) -> int:
        return self.word_index[UNK]

    @property
    def root_word_id(self) -> int:
        return self.word_index[ROOT]

    @property
    def root_tag_id(self) -> int:
        return self.tag_index[ROOT]

    def word_id(self, form: str) -> int:
        key = form.lower() if self.lowercase else form
        return self.word_index.get(key, self.word_index[UNK])

    @property
    def unk_tag_id(self) -> int:
        return self.tag_index[UNK]

    def tag_id(self, tag: str) -> int:
        return self.tag_index.get(tag, self.tag_index[UNK])

    def label_id(self, label: str) -> int:
        try:
            return self.label_index[label]
        except KeyError:
            raise KeyError(f"label {label!r} is not in the label vocabulary") from None

    def encode(self, sentence: Sentence) -> tuple[list[int], list[int]]:
        """Word and tag ids for positions 0..N, ROOT first."""
        words = [self.root_word_id] + [self.word_id(t.form) for t in sentence.tokens]
        tags = [self.root_tag_id] + [self.tag_id(t.pos) for t in sentence.tokens]
        return words, tags

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return (self.words, self.tags, self.labels, self.lowercase) == (
            other.words, other.tags, other.labels, other.lowercase)


def build_vocabulary(treebank: Treebank, min_count: int = 2, lowercase: bool = False) -> Vocabulary:
    """Words seen fewer than ``min_count`` times map to the unknown id.

    Every tag and label is kept.  Words are ordered by descending frequency
    then alphabetically so ids do not depend on corpus order.
    """
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    if len(treebank) == 0:
        raise ValueError("cannot build a vocabulary from an empty treebank")
    counts: Counter = Counter()
    tags: set[str] = set()
    labels: set[str] = set()
    for sent in treebank:
        for tok in sent.tokens:
            counts[tok.form.lower() if lowercase else tok.form] += 1
            tags.add(tok.pos)
            if tok.label is not None:
                labels.add(tok.label)
    kept = sorted((w for w, c in counts.items() if c >= min_count and w not in (UNK, ROOT)),
                  key=lambda w: (-counts[w], w))
    return Vocabulary(
        words=[UNK, ROOT] + kept,
        tags=[ROOT, UNK] + sorted(tags - {ROOT, UNK}),
        labels=sorted(labels),
        word_counts=counts,
        lowercase=lowercase,
    )


def projective_stats(treebank: Treebank) -> dict:
    """Sentence count and percentage of projective gold trees."""
    n = 0
    projective = 0
    for k, sent in enumerate(treebank):
        if not sent.is_annotated:
            raise TreebankValidationError(f"sentence {k} has no gold heads")
        heads = sent.heads
        if not is_tree(heads):
            raise TreebankValidationError(f"sentence {k}: gold heads do not form a tree")
        n += 1
        projective += is_projective(heads)
    percent = 100.0 * projective / n if n else 0.0
    return {"sentences": n, "projective": projective, "percent_projective": percent}


def format_stats(stats: dict) -> str:
    return f"{stats['sentences']:,}\t{stats['percent_projective']:.1f}"
