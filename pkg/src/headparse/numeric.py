"""Small dense-tensor core with a reverse-mode tape.

Only the handful of operations the parser needs are provided.  Every op is a
method on :class:`Tape`; when the tape was created with ``record=False`` the
ops compute values only, so the same model code serves training and
inference.

Arrays are numpy arrays in row-major layout.  A sequence of vectors is a
matrix whose rows are positions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; identical streams on every platform for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.asarray(value)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, dtype={self.dtype})"


def parameter(value, name: str | None = None) -> Tensor:
    t = Tensor(value, requires_grad=True, name=name)
    t.zero_grad()
    return t


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # never add in place: g may alias another tensor's buffer
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


def _check_same(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


class Tape:
    """Ordered record of executed ops.

    Each recorded entry is a closure that pushes the output gradient back
    into the op's inputs.  Replaying the record in reverse visits every node
    after all of its consumers.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self.nodes: list[Callable[[], None]] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _out(self, value: np.ndarray, inputs: Sequence[Tensor]) -> Tensor:
        return Tensor(value, requires_grad=self.record and any(t.requires_grad for t in inputs))

    def _push(self, out: Tensor, fn: Callable[[np.ndarray], None]) -> Tensor:
        if out.requires_grad:
            def node():
                if out.grad is not None:
                    fn(out.grad)
            self.nodes.append(node)
        return out

    # -- linear algebra -------------------------------------------------

    def affine(self, W: Tensor, x: Tensor, b: Tensor | None = None) -> Tensor:
        """``x @ W.T + b`` over the last axis of ``x``; W is (out, in)."""
        if W.value.ndim != 2 or x.shape[-1] != W.shape[1]:
            raise ShapeError(f"affine: shape mismatch W{W.shape} vs x{x.shape}")
        if b is not None and b.shape != (W.shape[0],):
            raise ShapeError(f"affine: shape mismatch W{W.shape} vs b{b.shape}")
        value = x.value @ W.value.T
        if b is not None:
            value = value + b.value
        inputs = (W, x) if b is None else (W, x, b)
        out = self._out(value, inputs)

        def backward(g):
            if W.requires_grad:
                if x.value.ndim == 1:
                    _accumulate(W, np.outer(g, x.value))
                else:
                    _accumulate(W, g.reshape(-1, g.shape[-1]).T @ x.value.reshape(-1, x.shape[-1]))
            if x.requires_grad:
                _accumulate(x, g @ W.value)
            if b is not None and b.requires_grad:
                _accumulate(b, g.reshape(-1, g.shape[-1]).sum(axis=0))

        return self._push(out, backward)

    def dot(self, x: Tensor, v: Tensor) -> Tensor:
        """Contract the last axis of ``x`` with vector ``v``."""
        if v.value.ndim != 1 or x.shape[-1] != v.shape[0]:
            raise ShapeError(f"dot: shape mismatch x{x.shape} vs v{v.shape}")
        out = self._out(x.value @ v.value, (x, v))

        def backward(g):
            if x.requires_grad:
                _accumulate(x, g[..., None] * v.value)
            if v.requires_grad:
                _accumulate(v, np.tensordot(g, x.value, axes=g.ndim))

        return self._push(out, backward)

    def outer_add(self, p: Tensor, q: Tensor) -> Tensor:
        """(n, k) and (m, k) -> (n, m, k) with entry [j, i] = p[j] + q[i]."""
        if p.value.ndim != 2 or q.value.ndim != 2 or p.shape[1] != q.shape[1]:
            raise ShapeError(f"outer_add: shape mismatch {p.shape} vs {q.shape}")
        out = self._out(p.value[:, None, :] + q.value[None, :, :], (p, q))

        def backward(g):
            if p.requires_grad:
                _accumulate(p, g.sum(axis=1))
            if q.requires_grad:
                _accumulate(q, g.sum(axis=0))

        return self._push(out, backward)

    # -- elementwise ----------------------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        _check_same("add", a, b)
        out = self._out(a.value + b.value, (a, b))

        def backward(g):
            if a.requires_grad:
                _accumulate(a, g)
            if b.requires_grad:
                _accumulate(b, g)

        return self._push(out, backward)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        _check_same("mul", a, b)
        out = self._out(a.value * b.value, (a, b))

        def backward(g):
            if a.requires_grad:
                _accumulate(a, g * b.value)
            if b.requires_grad:
                _accumulate(b, g * a.value)

        return self._push(out, backward)

    def scale(self, x: Tensor, c: float) -> Tensor:
        out = self._out(x.value * c, (x,))
        return self._push(out, lambda g: _accumulate(x, g * c))

    def tanh(self, x: Tensor) -> Tensor:
        y = np.tanh(x.value)
        out = self._out(y, (x,))
        return self._push(out, lambda g: _accumulate(x, g * (1.0 - y * y)))

    def sigmoid(self, x: Tensor) -> Tensor:
        # tanh form avoids overflow in exp for large |x|
        y = 0.5 * (np.tanh(0.5 * x.value) + 1.0)
        out = self._out(y, (x,))
        return self._push(out, lambda g: _accumulate(x, g * y * (1.0 - y)))

    def relu(self, x: Tensor) -> Tensor:
        mask = x.value > 0
        out = self._out(np.where(mask, x.value, 0).astype(x.dtype), (x,))
        return self._push(out, lambda g: _accumulate(x, g * mask))

    def dropout(self, x: Tensor, rate: float, rng: np.random.Generator | None, train: bool) -> Tensor:
        """Inverted dropout; identity when not training or when rate is 0."""
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        if not train or rate == 0.0:
            return x
        if rng is None:
            raise ValueError("dropout in training mode needs a random generator")
        keep = 1.0 - rate
        mask = ((rng.random(x.shape) < keep) / keep).astype(x.dtype)
        out = self._out(x.value * mask, (x,))
        return self._push(out, lambda g: _accumulate(x, g * mask))

    # -- structural -----------------------------------------------------

    def concat(self, xs: Sequence[Tensor], axis: int = -1) -> Tensor:
        values = [t.value for t in xs]
        try:
            value = np.concatenate(values, axis=axis)
        except ValueError as exc:
            raise ShapeError(f"concat: shape mismatch {[t.shape for t in xs]}") from exc
        out = self._out(value, xs)
        bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

        def backward(g):
            for t, piece in zip(xs, np.split(g, bounds, axis=axis)):
                if t.requires_grad:
                    _accumulate(t, piece)

        return self._push(out, backward)

    def stack(self, xs: Sequence[Tensor]) -> Tensor:
        """Stack same-shaped tensors along a new leading axis."""
        shapes = {t.shape for t in xs}
        if len(shapes) != 1:
            raise ShapeError(f"stack: shape mismatch {sorted(shapes)}")
        out = self._out(np.stack([t.value for t in xs]), xs)

        def backward(g):
            for k, t in enumerate(xs):
                if t.requires_grad:
                    _accumulate(t, g[k])

        return self._push(out, backward)

    def unstack(self, x: Tensor) -> list[Tensor]:
        """Split along the leading axis into separate tensors."""
        rows = [Tensor(v, requires_grad=self.record and x.requires_grad) for v in x.value]
        if rows and rows[0].requires_grad:
            def node():
                grads = [r.grad for r in rows]
                if all(g is None for g in grads):
                    return
                full = np.zeros_like(x.value)
                for k, g in enumerate(grads):
                    if g is not None:
                        full[k] = g
                _accumulate(x, full)
            self.nodes.append(node)
        return rows

    def slice(self, x: Tensor, start: int, stop: int) -> Tensor:
        """``x[..., start:stop]``."""
        out = self._out(x.value[..., start:stop], (x,))

        def backward(g):
            full = np.zeros_like(x.value)
            full[..., start:stop] = g
            _accumulate(x, full)

        return self._push(out, backward)

    def take(self, x: Tensor, index) -> Tensor:
        """Basic or fancy indexing ``x[index]``; repeated indices accumulate."""
        out = self._out(x.value[index], (x,))

        def backward(g):
            full = np.zeros_like(x.value)
            np.add.at(full, index, g)
            _accumulate(x, full)

        return self._push(out, backward)

    def lookup(self, W: Tensor, ids: Sequence[int]) -> Tensor:
        """Columns ``W[:, ids]`` returned as rows: shape (len(ids), W.rows)."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= W.shape[1]):
            raise IndexError(f"lookup: id out of range for table with {W.shape[1]} columns")
        out = self._out(W.value[:, ids].T.copy(), (W,))

        def backward(g):
            full = np.zeros_like(W.value)
            np.add.at(full.T, ids, g)
            _accumulate(W, full)

        return self._push(out, backward)

    # -- normalisation and reductions -------------------------------------

    def softmax(self, x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
        """Max-stabilised softmax; entries where ``mask`` is True get zero mass."""
        z = x.value if mask is None else np.where(mask, -np.inf, x.value)
        z = z - z.max(axis=axis, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=axis, keepdims=True)
        out = self._out(y, (x,))

        def backward(g):
            _accumulate(x, y * (g - (g * y).sum(axis=axis, keepdims=True)))

        return self._push(out, backward)

    def log_softmax(self, x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
        z = x.value if mask is None else np.where(mask, -np.inf, x.value)
        z = z - z.max(axis=axis, keepdims=True)
        with np.errstate(divide="ignore"):
            y = z - np.log(np.exp(z).sum(axis=axis, keepdims=True))
        p = np.exp(y)
        out = self._out(y, (x,))

        def backward(g):
            if mask is not None:
                g = np.where(mask, 0, g)
            _accumulate(x, g - p * g.sum(axis=axis, keepdims=True))

        return self._push(out, backward)

    def log_pick(self, p: Tensor, index) -> Tensor:
        """``log(p[index])`` for a probability tensor."""
        picked = p.value[index]
        out = self._out(np.log(picked), (p,))

        def backward(g):
            full = np.zeros_like(p.value)
            np.add.at(full, index, g / picked)
            _accumulate(p, full)

        return self._push(out, backward)

    def sum(self, x: Tensor) -> Tensor:
        out = self._out(np.asarray(x.value.sum(), dtype=x.dtype), (x,))
        return self._push(out, lambda g: _accumulate(x, np.full_like(x.value, g)))

    def mean(self, x: Tensor) -> Tensor:
        n = x.value.size
        out = self._out(np.asarray(x.value.mean(), dtype=x.dtype), (x,))
        return self._push(out, lambda g: _accumulate(x, np.full_like(x.value, g / n)))


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into every reachable parameter's ``grad``."""
    if loss.value.size != 1 or loss.value.ndim != 0:
        raise ShapeError(f"backward: loss must be a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    loss.grad = np.ones_like(loss.value)
    for node in reversed(tape.nodes):
        node()
    tape.nodes.clear()


def global_norm(grads: Iterable[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))


def clip_global_norm(grads: Mapping[str, np.ndarray], threshold: float = 5.0) -> tuple[dict[str, np.ndarray], float]:
    """Rescale all gradients by ``threshold / norm`` when the joint L2 norm exceeds it.

    Returns the (possibly) rescaled gradients and the pre-clip norm.
    """
    if threshold <= 0:
        raise ValueError("clip threshold must be positive")
    norm = global_norm(grads.values())
    if norm > threshold:
        factor = threshold / norm
        return {k: (g * factor).astype(g.dtype, copy=False) for k, g in grads.items()}, norm
    return dict(grads), norm


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray]) -> None:
    """One bias-corrected Adam update, applied in place to ``params``."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.value)
            state.v[name] = np.zeros_like(p.value)
        elif m.shape != p.shape:
            raise ShapeError(f"adam_step: state for {name} has shape {m.shape}, parameter {p.shape}")
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.value -= update.astype(p.dtype, copy=False)
