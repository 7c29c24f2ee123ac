"""Training loops for the head model and the arc labeler."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .config import TrainConfig
from .corpus import Treebank, build_vocabulary
from .evaluation import attachment_scores
from .head_selector import batch_loss, nll_loss
from .labeler import extract_arc_features, generate_label_training_data, label_logits, label_loss
from .model import (ModelBundle, init_labeler, initialize, parse_sentences, predictions_to_treebank,
                    restore, snapshot)
from .numeric import AdamState, Tape, Tensor, adam_step, backward, clip_global_norm, make_rng

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    dev_score: float
    max_grad_norm: float = 0.0


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_score: float = -1.0

    def as_text(self) -> str:
        return "".join(f"{r.epoch}\t{r.loss:.6f}\t{r.dev_score:.2f}\n" for r in self.epochs)

    def write(self, stream: TextIO) -> None:
        stream.write(self.as_text())


def dev_uas(bundle: ModelBundle, dev: Treebank, repair: bool = False) -> float:
    """Greedy (or repaired) UAS with punctuation excluded; parameters untouched."""
    preds = parse_sentences(bundle, dev, repair=repair)
    return attachment_scores(dev, predictions_to_treebank(dev, preds)).uas


def _stop(bad_epochs: int, patience: int | None) -> bool:
    # patience counts the extra non-improving epochs tolerated
    return patience is not None and bad_epochs > patience


def _gradients(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: t.grad for k, t in params.items()}


def _zero(params: dict[str, Tensor]) -> None:
    for t in params.values():
        t.zero_grad()


def head_loss(bundle: ModelBundle, sentences, rng: np.random.Generator | None = None,
              train: bool = True) -> tuple[Tape, Tensor]:
    """Recorded batch objective: mean over sentences of the summed gold-head NLL."""
    tape = Tape()
    losses = []
    for sent in sentences:
        enc = bundle.encode(tape, sent, train=train, rng=rng)
        losses.append(nll_loss(tape, bundle.head_log_probs(tape, enc), sent.heads))
    return tape, batch_loss(tape, losses)


def train_heads(bundle: ModelBundle, train: Treebank, dev: Treebank | None,
                config: TrainConfig | None = None) -> tuple[ModelBundle, TrainingLog]:
    """Minibatch Adam on the head-selection NLL with dev-UAS model selection."""
    config = config or bundle.config
    for k, sent in enumerate(train):
        if not sent.is_annotated:
            raise TrainingError(f"training sentence {k} has no gold heads")
        if len(sent) > config.long_sentence_warning:
            log.warning("training sentence %d has %d tokens; repair cost grows cubically", k, len(sent))
    if len(train) == 0:
        raise TrainingError("empty training treebank")

    rng = make_rng([config.seed, 2])
    params = bundle.head_parameters()
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    history = TrainingLog()
    best = snapshot(params)
    bad_epochs = 0
    sentences = list(train)

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(sentences))
        total = 0.0
        max_norm = 0.0
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            batch = [sentences[k] for k in order[start:start + config.batch_size]]
            _zero(params)
            tape, loss = head_loss(bundle, batch, rng)
            value = float(loss.value)
            if not math.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            backward(tape, loss)
            grads, norm = clip_global_norm(_gradients(params), config.clip)
            max_norm = max(max_norm, norm)
            adam_step(state, params, grads)
            total += value * len(batch)
        epoch_loss = total / len(sentences)

        score = dev_uas(bundle, dev) if dev is not None and len(dev) else -epoch_loss
        history.epochs.append(EpochRecord(epoch, epoch_loss, score if dev is not None else float("nan"),
                                          max_norm))
        log.info("epoch %d loss %.4f dev %.2f", epoch, epoch_loss, score)
        if score > history.best_score:
            history.best_score = score
            history.best_epoch = epoch
            best = snapshot(params)
            bad_epochs = 0
        else:
            bad_epochs += 1
            if _stop(bad_epochs, config.patience):
                break

    restore(params, best)
    return bundle, history


def _label_accuracy(bundle: ModelBundle, feats: np.ndarray, gold: np.ndarray) -> float:
    logits = label_logits(Tape(record=False), Tensor(feats), bundle.labeler).value
    return 100.0 * float(np.mean(np.argmax(logits, axis=-1) == gold)) if len(gold) else 0.0


def train_labeler(bundle: ModelBundle, train: Treebank, dev: Treebank | None,
                  config: TrainConfig | None = None) -> tuple[ModelBundle, TrainingLog]:
    """Fit the arc classifier on frozen encoder features.

    Dev selection uses LAS over the model's own (repaired) dev heads, which
    the labeler cannot change.
    """
    config = config or bundle.config
    for k, sent in enumerate(train):
        if not sent.is_labeled or not sent.is_annotated:
            raise TrainingError(f"training sentence {k} has no gold labels")
    heads_from = "predicted" if config.label_on_predicted else "gold"
    feats, gold = generate_label_training_data(bundle, train, heads_from=heads_from)

    if bundle.labeler is None:
        init_labeler(bundle)
    params = bundle.labeler.named()
    rng = make_rng([config.seed, 3])
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    history = TrainingLog()
    best = snapshot(params)
    bad_epochs = 0

    dev_feats = None
    dev_pred = None
    if dev is not None and len(dev):
        dev_pred = parse_sentences(bundle, dev)
        rows = []
        for sent, pred in zip(dev, dev_pred):
            tape = Tape(record=False)
            rows.append(extract_arc_features(tape, bundle.encode(tape, sent), pred.heads).value)
        dev_feats = np.concatenate(rows, axis=0)

    for epoch in range(1, config.label_epochs + 1):
        order = rng.permutation(len(gold))
        total = 0.0
        for start in range(0, len(order), config.label_batch):
            idx = order[start:start + config.label_batch]
            _zero(params)
            tape = Tape()
            logits = label_logits(tape, Tensor(feats[idx]), bundle.labeler, train=True,
                                  dropout=config.label_dropout, rng=rng)
            loss = label_loss(tape, logits, gold[idx])
            value = float(loss.value)
            if not math.isfinite(value):
                raise TrainingError(f"non-finite labeler loss at epoch {epoch}")
            backward(tape, loss)
            grads, _ = clip_global_norm(_gradients(params), config.clip)
            adam_step(state, params, grads)
            total += value * len(idx)
        epoch_loss = total / len(gold)

        if dev_feats is not None:
            labels = np.argmax(label_logits(Tape(record=False), Tensor(dev_feats), bundle.labeler).value, axis=-1)
            pred_tb = _relabel(dev, dev_pred, labels, bundle)
            score = attachment_scores(dev, pred_tb).las
        else:
            score = _label_accuracy(bundle, feats, gold)
        history.epochs.append(EpochRecord(epoch, epoch_loss, score))
        log.info("labeler epoch %d loss %.4f dev %.2f", epoch, epoch_loss, score)
        if score > history.best_score:
            history.best_score = score
            history.best_epoch = epoch
            best = snapshot(params)
            bad_epochs = 0
        else:
            bad_epochs += 1
            if _stop(bad_epochs, config.label_patience):
                break

    restore(params, best)
    return bundle, history


def _relabel(dev: Treebank, preds, label_ids: np.ndarray, bundle: ModelBundle) -> Treebank:
    out = []
    pos = 0
    for sent, pred in zip(dev, preds):
        n = len(sent)
        labels = [bundle.vocab.labels[k] for k in label_ids[pos:pos + n]]
        pos += n
        out.append(sent.with_heads(pred.heads, labels))
    return Treebank(tuple(out))


def train_model(train: Treebank, dev: Treebank | None, config: TrainConfig,
                labeled: bool = False) -> tuple[ModelBundle, TrainingLog, TrainingLog | None]:
    """Vocabulary, initialisation, head training and (optionally) labeler training."""
    vocab = build_vocabulary(train, min_count=config.min_count, lowercase=config.lowercase)
    bundle = initialize(config, vocab)
    bundle, head_log = train_heads(bundle, train, dev, config)
    label_log = None
    if labeled:
        bundle, label_log = train_labeler(bundle, train, dev, config)
    return bundle, head_log, label_log
