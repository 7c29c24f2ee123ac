"""Attachment scores, tree-rate diagnostics and UAS by sentence length."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .corpus import Treebank
from .decoders import is_projective, is_tree

# Penn Treebank punctuation tags
PUNCT_TAGS = frozenset({"``", "''", ":", ",", "."})


@dataclass
class EvalReport:
    tokens: int
    excluded: int
    correct_heads: int
    correct_labeled: int
    sentences: int
    exact: int
    bins: list[tuple[int, float, int]] = field(default_factory=list)

    @property
    def uas(self) -> float:
        return 100.0 * self.correct_heads / self.tokens if self.tokens else 0.0

    @property
    def las(self) -> float:
        return 100.0 * self.correct_labeled / self.tokens if self.tokens else 0.0

    @property
    def uem(self) -> float:
        return 100.0 * self.exact / self.sentences if self.sentences else 0.0

    def as_text(self) -> str:
        rows = [
            ("UAS", f"{self.uas:6.2f}", f"{self.correct_heads} / {self.tokens}"),
            ("LAS", f"{self.las:6.2f}", f"{self.correct_labeled} / {self.tokens}"),
            ("UEM", f"{self.uem:6.2f}", f"{self.exact} / {self.sentences}"),
        ]
        lines = [f"{name:<4} {value}  ({detail})" for name, value, detail in rows]
        lines.append(f"excluded tokens: {self.excluded}")
        return "\n".join(lines) + "\n"

    def as_key_values(self) -> str:
        pairs = [("uas", f"{self.uas:.2f}"), ("las", f"{self.las:.2f}"), ("uem", f"{self.uem:.2f}"),
                 ("tokens", self.tokens), ("excluded", self.excluded), ("sentences", self.sentences)]
        return "".join(f"{k}={v}\n" for k, v in pairs)

    def bins_tsv(self) -> str:
        lines = ["max_length\tuas\tsentences"]
        lines += [f"{length}\t{uas:.2f}\t{count}" for length, uas, count in self.bins]
        return "\n".join(lines) + "\n"


def _check_parallel(gold: Treebank, pred: Treebank) -> None:
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, prediction has {len(pred)}")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {k}: gold has {len(g)} tokens, prediction has {len(p)}")


def attachment_scores(gold: Treebank, pred: Treebank, exclude_punct: bool = True,
                      punct_tags: Iterable[str] = PUNCT_TAGS) -> EvalReport:
    """UAS, LAS and UEM; punctuation is decided by the *gold* tag."""
    _check_parallel(gold, pred)
    punct = frozenset(punct_tags) if exclude_punct else frozenset()
    tokens = excluded = heads_ok = labeled_ok = exact = 0
    for g_sent, p_sent in zip(gold, pred):
        all_ok = True
        for g, p in zip(g_sent.tokens, p_sent.tokens):
            if g.pos in punct:
                excluded += 1
                continue
            tokens += 1
            if g.head == p.head:
                heads_ok += 1
                if g.label == p.label:
                    labeled_ok += 1
            else:
                all_ok = False
        exact += all_ok
    return EvalReport(tokens, excluded, heads_ok, labeled_ok, len(gold), exact)


def tree_rate(head_arrays: Iterable[Sequence[int]]) -> dict:
    """Percent of outputs that are trees, and trees that are also projective."""
    n = trees = projective = 0
    for heads in head_arrays:
        n += 1
        if is_tree(heads):
            trees += 1
            projective += is_projective(heads)
    pct = (lambda c: 100.0 * c / n) if n else (lambda c: 0.0)
    return {"sentences": n, "tree": pct(trees), "projective": pct(projective)}


def tree_rate_report(before: Iterable[Sequence[int]], after: Iterable[Sequence[int]]) -> dict:
    b = tree_rate(before)
    a = tree_rate(after)
    return {"sentences": b["sentences"], "before_tree": b["tree"], "before_projective": b["projective"],
            "after_tree": a["tree"], "after_projective": a["projective"]}


def format_tree_rates(report: dict) -> str:
    return (f"sentences={report['sentences']} "
            f"tree_before={report['before_tree']:.1f} proj_before={report['before_projective']:.1f} "
            f"tree_after={report['after_tree']:.1f} proj_after={report['after_projective']:.1f}")


def length_bins(lengths: Sequence[int], bins: int = 10) -> list[list[int]]:
    """Sentence indices sorted by length, cut into ``bins`` equal-count groups.

    Leftover sentences go one each to the earliest bins.
    """
    if bins < 1:
        raise ValueError("bins must be positive")
    if len(lengths) < bins:
        raise ValueError(f"need at least {bins} sentences for {bins} bins, got {len(lengths)}")
    order = sorted(range(len(lengths)), key=lambda k: lengths[k])
    size, extra = divmod(len(order), bins)
    groups = []
    start = 0
    for b in range(bins):
        stop = start + size + (1 if b < extra else 0)
        groups.append(order[start:stop])
        start = stop
    return groups


def uas_by_length(gold: Treebank, pred: Treebank, bins: int = 10, exclude_punct: bool = True,
                  punct_tags: Iterable[str] = PUNCT_TAGS) -> list[tuple[int, float, int]]:
    """(length of the longest sentence in the bin, UAS, sentence count) per bin."""
    _check_parallel(gold, pred)
    groups = length_bins([len(s) for s in gold], bins)
    out = []
    for group in groups:
        sub_g = Treebank(tuple(gold[k] for k in group))
        sub_p = Treebank(tuple(pred[k] for k in group))
        report = attachment_scores(sub_g, sub_p, exclude_punct, punct_tags)
        out.append((max(len(gold[k]) for k in group), report.uas, len(group)))
    return out


def write_report(report: EvalReport, stream: TextIO, machine: bool = False) -> None:
    stream.write(report.as_key_values() if machine else report.as_text())
    if report.bins:
        stream.write(report.bins_tsv())
