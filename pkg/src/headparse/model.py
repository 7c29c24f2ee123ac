"""Model bundle: parameters + vocabulary + config, initialisation, persistence, parsing."""
from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from . import decoders
from .config import TrainConfig
from .corpus import Sentence, Treebank, Vocabulary
from .encoder import (EmbeddingTables, EncodedSentence, LSTMCell, LSTMStack, embed, encode,
                      load_pretrained_embeddings)
from .head_selector import (ScorerParams, arc_weights, greedy_heads, head_log_probabilities,
                            score_arcs)
from .labeler import LabelerParams, extract_arc_features, predict_labels
from .numeric import Tape, Tensor, make_rng, parameter

MAGIC = b"HEADPRS\x00"
FORMAT_VERSION = 1
THREADS_ENV = "HEADPARSE_THREADS"


class ModelFormatError(ValueError):
    pass


@dataclass
class Prediction:
    greedy: list[int]
    heads: list[int]
    labels: list[str] | None
    log_probs: np.ndarray


@dataclass
class ModelBundle:
    vocab: Vocabulary
    config: TrainConfig
    embeddings: EmbeddingTables
    lstm: LSTMStack
    scorer: ScorerParams
    labeler: LabelerParams | None = None
    version: int = FORMAT_VERSION

    def head_parameters(self) -> dict[str, Tensor]:
        out = self.embeddings.named()
        out.update(self.lstm.named())
        out.update(self.scorer.named())
        return out

    def parameters(self) -> dict[str, Tensor]:
        out = self.head_parameters()
        if self.labeler is not None:
            out.update(self.labeler.named())
        return out

    def encode(self, tape: Tape, sentence: Sentence, train: bool = False,
               rng: np.random.Generator | None = None) -> EncodedSentence:
        x = embed(tape, sentence, self.vocab, self.embeddings)
        return encode(tape, x, self.lstm, train=train, dropout=self.config.dropout, rng=rng)

    def head_log_probs(self, tape: Tape, enc: EncodedSentence) -> Tensor:
        scores = score_arcs(tape, enc, self.scorer)
        return head_log_probabilities(tape, scores, self.config.self_in_normalizer)

    def predict_heads(self, sentence: Sentence, mode: str | None = None, repair: bool = True,
                      enc: EncodedSentence | None = None, weight_kind: str = "log"):
        """(greedy heads, final heads, log-probabilities) for one sentence."""
        tape = Tape(record=False)
        if enc is None:
            enc = self.encode(tape, sentence)
        logp = self.head_log_probs(tape, enc).value.astype(np.float64)
        greedy = greedy_heads(logp)
        heads = greedy
        if repair:
            heads = decoders.repair(greedy, arc_weights(logp, weight_kind), mode or self.config.mode)
        return greedy, heads, logp

    def predict(self, sentence: Sentence, mode: str | None = None, repair: bool = True,
                weight_kind: str = "log") -> Prediction:
        tape = Tape(record=False)
        enc = self.encode(tape, sentence)
        greedy, heads, logp = self.predict_heads(sentence, mode, repair, enc=enc, weight_kind=weight_kind)
        labels = None
        if self.labeler is not None:
            feats = extract_arc_features(tape, enc, heads)
            labels = [self.vocab.labels[k] for k in predict_labels(feats, self.labeler)]
        return Prediction(greedy, heads, labels, logp)


def _uniform(rng: np.random.Generator, shape, r: float, dtype) -> np.ndarray:
    return rng.uniform(-r, r, size=shape).astype(dtype)


def initialize(config: TrainConfig, vocab: Vocabulary) -> ModelBundle:
    """Uniform init in ``[-init_range, init_range]`` from the config seed.

    Forget-gate biases are then set to ``config.forget_bias`` unless it is
    ``None``; pretrained vectors are overlaid last when configured.
    """
    rng = make_rng(config.seed)
    dt = np.dtype(config.dtype)
    r = config.init_range
    d, s, q = config.hidden_dim, config.word_dim, config.tag_dim

    def p(shape, name):
        return parameter(_uniform(rng, shape, r, dt), name)

    embeddings = EmbeddingTables(word=p((s, len(vocab.words)), "embed.word"),
                                 tag=p((q, len(vocab.tags)), "embed.tag"))
    forward, backward = [], []
    for layer in range(config.layers):
        size = s + q if layer == 0 else d
        for cells in (forward, backward):
            cell = LSTMCell(W_x=p((4 * d, size), None), W_h=p((4 * d, d), None), b=p((4 * d,), None))
            if config.forget_bias is not None:
                cell.b.value[d:2 * d] = config.forget_bias
            cells.append(cell)
    lstm = LSTMStack(forward, backward)
    scorer = ScorerParams(v=p((2 * d,), "scorer.v"), U=p((2 * d, 2 * d), "scorer.U"),
                          W=p((2 * d, 2 * d), "scorer.W"))
    bundle = ModelBundle(vocab=vocab, config=config, embeddings=embeddings, lstm=lstm, scorer=scorer)
    for name, t in bundle.parameters().items():
        t.name = name
    if config.pretrained:
        with open(config.pretrained, encoding="utf-8") as fh:
            load_pretrained_embeddings(fh, vocab, embeddings)
    return bundle


def init_labeler(bundle: ModelBundle) -> LabelerParams:
    config = bundle.config
    rng = make_rng([config.seed, 1])
    dt = np.dtype(config.dtype)
    r = config.init_range
    d, s, q, h = config.hidden_dim, config.word_dim, config.tag_dim, config.label_hidden
    n_in = 2 * (2 * d) + 2 * (s + q)
    n_out = len(bundle.vocab.labels)
    if n_out == 0:
        raise ValueError("vocabulary has no dependency labels")
    shapes = {"W1": (h, n_in), "b1": (h,), "W2": (h, h), "b2": (h,), "W_out": (n_out, h), "b_out": (n_out,)}
    params = LabelerParams(**{k: parameter(_uniform(rng, shp, r, dt), f"labeler.{k}") for k, shp in shapes.items()})
    bundle.labeler = params
    return params


def snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: t.value.copy() for k, t in params.items()}


def restore(params: dict[str, Tensor], values: dict[str, np.ndarray]) -> None:
    for k, t in params.items():
        t.value[...] = values[k]


# -- persistence ------------------------------------------------------------

def _write_block(fh: BinaryIO, data: bytes) -> None:
    fh.write(struct.pack("<I", len(data)))
    fh.write(data)


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ModelFormatError("model file is truncated")
    return data


def _read_block(fh: BinaryIO) -> bytes:
    (n,) = struct.unpack("<I", _read_exact(fh, 4))
    return _read_exact(fh, n)


def save_model(bundle: ModelBundle, path_or_file) -> None:
    """Magic, version, config text, vocabulary JSON, then named float32 LE tensors."""
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "wb") as fh:
            save_model(bundle, fh)
        return
    fh = path_or_file
    fh.write(MAGIC)
    fh.write(struct.pack("<I", FORMAT_VERSION))
    _write_block(fh, bundle.config.to_text().encode("utf-8"))
    vocab = {"words": bundle.vocab.words, "tags": bundle.vocab.tags,
             "labels": bundle.vocab.labels, "lowercase": bundle.vocab.lowercase}
    _write_block(fh, json.dumps(vocab, ensure_ascii=False, sort_keys=True).encode("utf-8"))
    params = bundle.parameters()
    fh.write(struct.pack("<I", len(params)))
    for name, t in params.items():
        raw = name.encode("utf-8")
        fh.write(struct.pack("<H", len(raw)))
        fh.write(raw)
        fh.write(struct.pack("<B", t.value.ndim))
        fh.write(struct.pack(f"<{t.value.ndim}I", *t.shape))
        fh.write(np.ascontiguousarray(t.value, dtype="<f4").tobytes())


def load_model(path_or_file) -> ModelBundle:
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "rb") as fh:
            return load_model(fh)
    fh = path_or_file
    if _read_exact(fh, len(MAGIC)) != MAGIC:
        raise ModelFormatError("not a headparse model file")
    (version,) = struct.unpack("<I", _read_exact(fh, 4))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    config = TrainConfig.from_text(_read_block(fh).decode("utf-8")).replace(dtype="float32", pretrained=None)
    vocab_json = json.loads(_read_block(fh).decode("utf-8"))
    vocab = Vocabulary(words=vocab_json["words"], tags=vocab_json["tags"], labels=vocab_json["labels"],
                       lowercase=vocab_json["lowercase"])
    (count,) = struct.unpack("<I", _read_exact(fh, 4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (n,) = struct.unpack("<H", _read_exact(fh, 2))
        name = _read_exact(fh, n).decode("utf-8")
        (ndim,) = struct.unpack("<B", _read_exact(fh, 1))
        shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
        size = int(np.prod(shape)) if shape else 1
        payload = np.frombuffer(_read_exact(fh, 4 * size), dtype="<f4")
        tensors[name] = payload.astype(np.float32).reshape(shape)
    bundle = initialize(config, vocab)
    if any(k.startswith("labeler.") for k in tensors):
        init_labeler(bundle)
    params = bundle.parameters()
    if set(params) != set(tensors):
        missing = sorted(set(params) ^ set(tensors))
        raise ModelFormatError(f"tensor set does not match configuration: {missing[:5]}")
    for name, t in params.items():
        if t.shape != tensors[name].shape:
            raise ModelFormatError(f"tensor {name} has shape {tensors[name].shape}, expected {t.shape}")
        t.value[...] = tensors[name]
    return bundle


# -- batch parsing ----------------------------------------------------------

def thread_count(requested: int | None = None) -> int:
    if requested:
        return max(1, requested)
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def parse_sentences(bundle: ModelBundle, sentences: Iterable[Sentence], mode: str | None = None,
                    repair: bool = True, threads: int | None = None,
                    weight_kind: str = "log") -> list[Prediction]:
    """Parse in input order; ``threads`` > 1 parses concurrently over a read-only model."""
    work = list(sentences)
    n = thread_count(threads)

    def one(sent: Sentence) -> Prediction:
        return bundle.predict(sent, mode=mode, repair=repair, weight_kind=weight_kind)

    if n == 1 or len(work) < 2:
        return [one(s) for s in work]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(one, work))


def predictions_to_treebank(treebank: Treebank | Sequence[Sentence], predictions: Sequence[Prediction],
                            use_greedy: bool = False) -> Treebank:
    out = []
    for sent, pred in zip(treebank, predictions):
        heads = pred.greedy if use_greedy else pred.heads
        out.append(sent.with_heads(heads, pred.labels))
    name = treebank.name if isinstance(treebank, Treebank) else ""
    return Treebank(tuple(out), name)
