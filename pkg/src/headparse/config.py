from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional

from .decoders import MODES, NONPROJECTIVE


@dataclass
class TrainConfig:
    """Model dimensions and optimisation settings.

    Defaults are desk-scale; ``hidden_dim=word_dim=300`` and ``tag_dim`` in
    30..50 give the full-size model.
    """

    hidden_dim: int = 100
    word_dim: int = 100
    tag_dim: int = 25
    layers: int = 2
    dropout: float = 0.5
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip: float = 5.0
    batch_size: int = 16
    max_epochs: int = 30
    patience: Optional[int] = 5
    seed: int = 1
    pretrained: Optional[str] = None
    min_count: int = 2
    lowercase: bool = False
    mode: str = NONPROJECTIVE
    forget_bias: float = 1.0
    init_range: float = 0.1
    self_in_normalizer: bool = False
    label_hidden: int = 200
    label_dropout: float = 0.5
    label_batch: int = 128
    label_epochs: int = 20
    label_patience: Optional[int] = 5
    label_on_predicted: bool = False
    dtype: str = "float32"
    long_sentence_warning: int = 200

    def __post_init__(self):
        for name in ("hidden_dim", "word_dim", "tag_dim", "layers", "batch_size", "max_epochs",
                     "min_count", "label_hidden", "label_batch", "label_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0 or not 0.0 <= self.label_dropout < 1.0:
            raise ValueError("dropout rates must lie in [0, 1)")
        if self.lr <= 0 or self.clip <= 0 or self.init_range <= 0:
            raise ValueError("lr, clip and init_range must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name}={'' if value is None else value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, raw = line.partition("=")
            if key not in kinds:
                continue
            values[key] = _coerce(kinds[key], raw)
        return cls(**values)


def _coerce(kind: str, raw: str):
    optional = kind.startswith("Optional[")
    base = kind[len("Optional["):-1] if optional else kind
    if optional and raw == "":
        return None
    if base == "bool":
        return raw == "True"
    if base == "int":
        return int(raw)
    if base == "float":
        return float(raw)
    return raw
