"""Arc labeling with a two-hidden-layer rectifier classifier."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoder import EncodedSentence
from .numeric import Tape, Tensor


@dataclass
class LabelerParams:
    W1: Tensor
    b1: Tensor
    W2: Tensor
    b2: Tensor
    W_out: Tensor
    b_out: Tensor

    @property
    def n_labels(self) -> int:
        return self.W_out.shape[0]

    @property
    def input_size(self) -> int:
        return self.W1.shape[1]

    def named(self, prefix: str = "labeler") -> dict[str, Tensor]:
        return {f"{prefix}.{k}": getattr(self, k) for k in ("W1", "b1", "W2", "b2", "W_out", "b_out")}


def feature_size(hidden_dim: int, word_dim: int, tag_dim: int) -> int:
    return 2 * (2 * hidden_dim) + 2 * (word_dim + tag_dim)


def extract_arc_features(tape: Tape, enc: EncodedSentence, heads: Sequence[int]) -> Tensor:
    """Rows ``[a_i; a_h(i); x_i; x_h(i)]`` for i = 1..N."""
    n = len(enc)
    heads = np.asarray(heads, dtype=np.int64)
    if heads.shape != (n,):
        raise ValueError(f"expected {n} heads, got {heads.shape[0]}")
    if np.any(heads < 0) or np.any(heads > n):
        raise ValueError(f"head index outside [0, {n}]")
    deps = np.arange(1, n + 1)
    return tape.concat([
        tape.take(enc.a, deps), tape.take(enc.a, heads),
        tape.take(enc.x, deps), tape.take(enc.x, heads),
    ], axis=-1)


def label_logits(tape: Tape, features: Tensor, params: LabelerParams, train: bool = False,
                 dropout: float = 0.0, rng: np.random.Generator | None = None) -> Tensor:
    h = tape.relu(tape.affine(params.W1, features, params.b1))
    h = tape.dropout(h, dropout, rng, train)
    h = tape.relu(tape.affine(params.W2, h, params.b2))
    h = tape.dropout(h, dropout, rng, train)
    return tape.affine(params.W_out, h, params.b_out)


def label_loss(tape: Tape, logits: Tensor, gold: Sequence[int]) -> Tensor:
    """Mean cross-entropy over the rows of ``logits``."""
    gold = np.asarray(gold, dtype=np.int64)
    logp = tape.log_softmax(logits, axis=-1)
    picked = tape.take(logp, (np.arange(len(gold)), gold))
    return tape.scale(tape.mean(picked), -1.0)


def predict_labels(features: np.ndarray | Tensor, params: LabelerParams) -> list[int]:
    """Argmax label id per row; the smaller id wins a tie."""
    tape = Tape(record=False)
    x = features if isinstance(features, Tensor) else Tensor(np.asarray(features))
    logits = label_logits(tape, x, params).value
    return [int(k) for k in np.argmax(logits, axis=-1)]


def predict_label(feature: np.ndarray, params: LabelerParams) -> int:
    return predict_labels(np.asarray(feature)[None, :], params)[0]


def generate_label_training_data(bundle, treebank, heads_from: str = "gold") -> tuple[np.ndarray, np.ndarray]:
    """Arc features from a trained head model paired with gold label ids.

    ``heads_from="gold"`` builds features over gold arcs; ``"predicted"``
    uses the model's repaired predictions instead (the gold label of each
    word is kept either way).
    """
    if len(treebank) == 0:
        raise ValueError("cannot generate label training data from an empty treebank")
    feats: list[np.ndarray] = []
    labels: list[int] = []
    for k, sent in enumerate(treebank):
        if not sent.is_annotated or not sent.is_labeled:
            raise ValueError(f"sentence {k} lacks gold heads or labels")
        tape = Tape(record=False)
        enc = bundle.encode(tape, sent)
        if heads_from == "gold":
            heads = sent.heads
        elif heads_from == "predicted":
            heads = bundle.predict_heads(sent, enc=enc)[1]
        else:
            raise ValueError(f"heads_from must be 'gold' or 'predicted', got {heads_from!r}")
        feats.append(extract_arc_features(tape, enc, heads).value)
        labels.extend(bundle.vocab.label_id(lab) for lab in sent.labels)
    return np.concatenate(feats, axis=0), np.asarray(labels, dtype=np.int64)
