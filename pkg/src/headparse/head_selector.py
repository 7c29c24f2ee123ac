"""Pairwise head scoring, per-word head distributions, loss and greedy choice.

Score and probability matrices have shape ``(N + 1, N)``: row ``j`` is the
candidate head (0 = ROOT), column ``k`` is word ``k + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .encoder import EncodedSentence
from .numeric import Tape, Tensor


@dataclass
class ScorerParams:
    v: Tensor  # (2d,)
    U: Tensor  # (2d, 2d), applied to the candidate head
    W: Tensor  # (2d, 2d), applied to the dependent

    def named(self, prefix: str = "scorer") -> dict[str, Tensor]:
        return {f"{prefix}.v": self.v, f"{prefix}.U": self.U, f"{prefix}.W": self.W}


def self_arc_mask(n: int) -> np.ndarray:
    """True where candidate head equals the dependent."""
    mask = np.zeros((n + 1, n), dtype=bool)
    mask[np.arange(1, n + 1), np.arange(n)] = True
    return mask


def score_arcs(tape: Tape, enc: EncodedSentence, params: ScorerParams) -> Tensor:
    """``v . tanh(U a_j + W a_i)`` for every head j in 0..N and word i in 1..N."""
    n = len(enc)
    if n < 1:
        raise ValueError("score_arcs: sentence has no words to attach")
    heads = tape.affine(params.U, enc.a)
    deps = tape.affine(params.W, tape.take(enc.a, slice(1, None)))
    return tape.dot(tape.tanh(tape.outer_add(heads, deps)), params.v)


def head_log_probabilities(tape: Tape, scores: Tensor, self_in_normalizer: bool = False) -> Tensor:
    """Column-wise log-softmax over candidate heads.

    Self-arcs are excluded from the normaliser unless ``self_in_normalizer``
    is set; either way the self entry comes back as ``-inf``.
    """
    n = scores.shape[1]
    mask = self_arc_mask(n)
    if not self_in_normalizer:
        return tape.log_softmax(scores, axis=0, mask=mask)
    logp = tape.log_softmax(scores, axis=0)
    # the self entry keeps its share of mass but is never a legal head
    return _mask_entries(tape, logp, mask)


def _mask_entries(tape: Tape, x: Tensor, mask: np.ndarray) -> Tensor:
    out = Tensor(np.where(mask, -np.inf, x.value), requires_grad=x.requires_grad and tape.record)
    if out.requires_grad:
        def node():
            if out.grad is not None:
                g = np.where(mask, 0, out.grad)
                x.grad = g if x.grad is None else x.grad + g
        tape.nodes.append(node)
    return out


def head_probabilities(scores: np.ndarray | Tensor, self_in_normalizer: bool = False) -> np.ndarray:
    """Per-word probability of each candidate head; the self entry is 0."""
    value = scores.value if isinstance(scores, Tensor) else np.asarray(scores)
    logp = head_log_probabilities(Tape(record=False), Tensor(value), self_in_normalizer).value
    return np.exp(logp)


def nll_loss(tape: Tape, log_probs: Tensor, gold_heads: Sequence[int]) -> Tensor:
    """Summed negative log-likelihood of the gold head of every word."""
    n = log_probs.shape[1]
    gold = np.asarray(gold_heads, dtype=np.int64)
    if gold.shape != (n,):
        raise ValueError(f"nll_loss: expected {n} gold heads, got {len(gold)}")
    if np.any(gold == np.arange(1, n + 1)):
        bad = int(np.flatnonzero(gold == np.arange(1, n + 1))[0]) + 1
        raise ValueError(f"nll_loss: word {bad} has itself as gold head")
    if np.any(gold < 0) or np.any(gold > n):
        raise ValueError("nll_loss: gold head out of range")
    picked = tape.take(log_probs, (gold, np.arange(n)))
    return tape.scale(tape.sum(picked), -1.0)


def batch_loss(tape: Tape, sentence_losses: Sequence[Tensor]) -> Tensor:
    """Mean over sentences of the per-sentence summed NLL."""
    total = sentence_losses[0]
    for loss in sentence_losses[1:]:
        total = tape.add(total, loss)
    return tape.scale(total, 1.0 / len(sentence_losses))


def greedy_heads(probs: np.ndarray) -> list[int]:
    """Most probable head per word; the lowest index wins a tie."""
    probs = np.array(probs, dtype=np.float64, copy=True)
    n = probs.shape[1]
    probs[self_arc_mask(n)] = -np.inf
    return [int(h) for h in np.argmax(probs, axis=0)]


def arc_weights(log_probs: np.ndarray, kind: str = "log") -> np.ndarray:
    """Decoder weights: log-probabilities (default) or raw probabilities."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if kind == "log":
        w = log_probs.copy()
    elif kind == "prob":
        w = np.exp(log_probs)
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    w[self_arc_mask(w.shape[1])] = 0.0
    return w


def dump_distributions(probs: np.ndarray, stream: TextIO, sentence_index: int | None = None) -> None:
    """Tab-separated matrix: one row per word, one column per candidate head."""
    n = probs.shape[1]
    if sentence_index is not None:
        stream.write(f"# sentence {sentence_index}\n")
    stream.write("dep\\head\t" + "\t".join(str(j) for j in range(n + 1)) + "\n")
    for k in range(n):
        stream.write(f"{k + 1}\t" + "\t".join(f"{p:.6f}" for p in probs[:, k]) + "\n")
    stream.write("\n")
