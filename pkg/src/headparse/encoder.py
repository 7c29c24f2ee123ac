"""Embedding lookup and stacked bidirectional LSTM encoder."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .corpus import Sentence, Vocabulary
from .numeric import Tape, Tensor, ShapeError


@dataclass
class EmbeddingTables:
    word: Tensor  # (s, |V|)
    tag: Tensor  # (q, |T|)

    def named(self, prefix: str = "embed") -> dict[str, Tensor]:
        return {f"{prefix}.word": self.word, f"{prefix}.tag": self.tag}


@dataclass
class LSTMCell:
    """Gate rows are ordered input, forget, output, candidate."""

    W_x: Tensor  # (4d, in)
    W_h: Tensor  # (4d, d)
    b: Tensor  # (4d,)

    @property
    def hidden(self) -> int:
        return self.W_h.shape[1]

    @property
    def input_size(self) -> int:
        return self.W_x.shape[1]

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.W_x": self.W_x, f"{prefix}.W_h": self.W_h, f"{prefix}.b": self.b}


@dataclass
class LSTMStack:
    forward: list[LSTMCell]
    backward: list[LSTMCell]

    @property
    def hidden(self) -> int:
        return self.forward[0].hidden

    @property
    def layers(self) -> int:
        return len(self.forward)

    def named(self, prefix: str = "lstm") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for k, (f, b) in enumerate(zip(self.forward, self.backward)):
            out.update(f.named(f"{prefix}.fwd{k}"))
            out.update(b.named(f"{prefix}.bwd{k}"))
        return out


@dataclass
class EncodedSentence:
    """Rows are positions 0..N; row 0 is ROOT."""

    x: Tensor  # (N+1, s+q)
    a: Tensor  # (N+1, 2d)

    def __len__(self) -> int:
        return self.a.shape[0] - 1


def embed(tape: Tape, sentence: Sentence, vocab: Vocabulary, tables: EmbeddingTables) -> Tensor:
    """Word and tag embedding columns for ROOT and each token, concatenated per row."""
    word_ids, tag_ids = vocab.encode(sentence)
    return embed_ids(tape, word_ids, tag_ids, tables)


def embed_ids(tape: Tape, word_ids, tag_ids, tables: EmbeddingTables) -> Tensor:
    words = tape.lookup(tables.word, word_ids)
    tags = tape.lookup(tables.tag, tag_ids)
    return tape.concat([words, tags], axis=-1)


def _cell(tape: Tape, cell: LSTMCell, gates_x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    d = cell.hidden
    gates = tape.add(gates_x, tape.affine(cell.W_h, h))
    ifo = tape.sigmoid(tape.slice(gates, 0, 3 * d))
    cand = tape.tanh(tape.slice(gates, 3 * d, 4 * d))
    i = tape.slice(ifo, 0, d)
    f = tape.slice(ifo, d, 2 * d)
    o = tape.slice(ifo, 2 * d, 3 * d)
    c_new = tape.add(tape.mul(f, c), tape.mul(i, cand))
    h_new = tape.mul(o, tape.tanh(c_new))
    return h_new, c_new


def lstm_step(tape: Tape, cell: LSTMCell, x_t: Tensor, h_prev: Tensor, c_prev: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM recurrence step from input ``x_t`` and state (h_prev, c_prev)."""
    if x_t.shape != (cell.input_size,):
        raise ShapeError(f"lstm_step: input shape {x_t.shape} vs cell input ({cell.input_size},)")
    if h_prev.shape != (cell.hidden,) or c_prev.shape != (cell.hidden,):
        raise ShapeError(f"lstm_step: state shapes {h_prev.shape}, {c_prev.shape} vs ({cell.hidden},)")
    return _cell(tape, cell, tape.affine(cell.W_x, x_t, cell.b), h_prev, c_prev)


def run_direction(tape: Tape, cell: LSTMCell, inputs: Tensor, reverse: bool = False) -> Tensor:
    """Hidden states for every row of ``inputs``; row order follows the input."""
    n = inputs.shape[0]
    proj = tape.unstack(tape.affine(cell.W_x, inputs, cell.b))
    zero = np.zeros(cell.hidden, dtype=cell.W_h.dtype)
    h, c = Tensor(zero), Tensor(zero)
    states: list[Tensor] = [None] * n  # type: ignore[list-item]
    order = range(n - 1, -1, -1) if reverse else range(n)
    for t in order:
        h, c = _cell(tape, cell, proj[t], h, c)
        states[t] = h
    return tape.stack(states)


def encode(tape: Tape, x: Tensor, stack: LSTMStack, train: bool = False,
           dropout: float = 0.0, rng: np.random.Generator | None = None) -> EncodedSentence:
    """Two independent directional stacks over ``x``; their top layers concatenate per row.

    Dropout (training only) hits every layer input, never the recurrent
    connections.
    """
    if x.shape[0] == 0:
        raise ShapeError("encode: empty input sequence")
    fwd_in = bwd_in = x
    for f_cell, b_cell in zip(stack.forward, stack.backward):
        fwd_in = run_direction(tape, f_cell, tape.dropout(fwd_in, dropout, rng, train))
        bwd_in = run_direction(tape, b_cell, tape.dropout(bwd_in, dropout, rng, train), reverse=True)
    return EncodedSentence(x=x, a=tape.concat([fwd_in, bwd_in], axis=-1))


def load_pretrained_embeddings(stream: TextIO, vocab: Vocabulary, tables: EmbeddingTables) -> int:
    """Overwrite word columns from a GloVe-style text file.

    Each line is a word followed by ``s`` numbers.  A vocabulary entry takes
    the vector of its exact form when present, else of its lowercased form.
    Returns the number of vocabulary words covered.
    """
    s = tables.word.shape[0]
    exact: dict[int, np.ndarray] = {}
    lowered: dict[int, np.ndarray] = {}
    lower_targets: dict[str, list[int]] = {}
    for word, idx in vocab.word_index.items():
        lower_targets.setdefault(word.lower(), []).append(idx)
    for line in stream:
        parts = line.rstrip().split(" ")
        if len(parts) < 2:
            continue
        word, values = parts[0], parts[1:]
        if len(values) != s:
            raise ValueError(f"pretrained vector for {word!r} has {len(values)} values, expected {s}")
        idx = vocab.word_index.get(word)
        if idx is not None:
            exact[idx] = np.asarray(values, dtype=np.float64)
        if word == word.lower():
            for target in lower_targets.get(word, ()):
                lowered.setdefault(target, np.asarray(values, dtype=np.float64))
    covered = dict(lowered)
    covered.update(exact)
    for name in ("<unk>", "<root>"):
        covered.pop(vocab.word_index.get(name, -1), None)
    table = tables.word.value
    for idx, vec in covered.items():
        table[:, idx] = vec.astype(table.dtype)
    return len(covered)
