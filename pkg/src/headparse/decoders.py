"""Tree predicates and first-order maximum spanning tree decoders.

Head arrays have one entry per word: ``heads[k]`` is the head of word
``k + 1`` and lies in ``[0, N]``.  Arc weight matrices have shape
``(N + 1, N)``: ``w[j, k]`` scores head ``j`` for word ``k + 1``; the entry
with ``j == k + 1`` (a self-arc) is never read.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

PROJECTIVE = "projective"
NONPROJECTIVE = "nonprojective"
MODES = (PROJECTIVE, NONPROJECTIVE)


def _check_heads(heads: Sequence[int]) -> list[int]:
    n = len(heads)
    out = []
    for k, h in enumerate(heads, start=1):
        if h is None or not 0 <= h <= n:
            raise ValueError(f"head {h!r} of word {k} is outside [0, {n}]")
        if h == k:
            raise ValueError(f"word {k} is its own head")
        out.append(int(h))
    return out


def is_tree(heads: Sequence[int]) -> bool:
    """True iff every word reaches ROOT by following head links."""
    heads = _check_heads(heads)
    n = len(heads)
    # 0 unvisited, 1 on current path, 2 known to reach ROOT
    state = [0] * (n + 1)
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        v = start
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = heads[v - 1]
        if state[v] == 1:
            return False
        for u in path:
            state[u] = 2
    return True


def is_projective(heads: Sequence[int]) -> bool:
    """True iff no two arcs cross (ROOT arcs included).

    Arcs sharing an endpoint never cross; (a, b) and (c, d) with a < b,
    c < d cross when a < c < b < d or c < a < d < b.
    """
    if not is_tree(heads):
        raise ValueError("is_projective requires a well-formed tree")
    spans = [(min(h, d), max(h, d)) for d, h in enumerate(heads, start=1)]
    for x, (a, b) in enumerate(spans):
        for c, d in spans[x + 1:]:
            if a < c < b < d or c < a < d < b:
                return False
    return True


def tree_weight(heads: Sequence[int], weights: np.ndarray) -> float:
    heads = np.asarray(heads, dtype=np.int64)
    return float(weights[heads, np.arange(len(heads))].sum())


def _square(weights: np.ndarray) -> np.ndarray:
    """(N+1, N) arc weights -> (N+1, N+1) with -inf on invalid arcs."""
    weights = np.asarray(weights, dtype=np.float64)
    n1, n = weights.shape
    if n1 != n + 1 or n < 1:
        raise ValueError(f"arc weight matrix must have shape (N+1, N) with N >= 1, got {weights.shape}")
    full = np.full((n + 1, n + 1), -np.inf)
    full[:, 1:] = weights
    np.fill_diagonal(full, -np.inf)
    return full


def greedy_from_weights(weights: np.ndarray) -> list[int]:
    """Best head per word, smaller head index on ties."""
    return [int(h) for h in np.argmax(_square(weights)[:, 1:], axis=0)]


def _find_cycle(heads: np.ndarray) -> list[int] | None:
    n = len(heads)
    color = np.zeros(n, dtype=np.int8)
    color[0] = 2
    for start in range(1, n):
        path = []
        v = start
        while color[v] == 0:
            color[v] = 1
            path.append(v)
            v = heads[v]
        if color[v] == 1:
            return sorted(path[path.index(v):])
        for u in path:
            color[u] = 2
    return None


def _cle(score: np.ndarray) -> np.ndarray:
    n = score.shape[0]
    heads = np.full(n, -1, dtype=np.int64)
    heads[1:] = np.argmax(score[:, 1:], axis=0)
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads

    in_cycle = np.zeros(n, dtype=bool)
    in_cycle[cycle] = True
    rest = np.flatnonzero(~in_cycle)
    cyc = np.asarray(cycle)
    m = len(rest) + 1
    c = m - 1

    contracted = np.full((m, m), -np.inf)
    contracted[:c, :c] = score[np.ix_(rest, rest)]

    # entering the cycle at d replaces the cycle arc into d
    enter = score[np.ix_(rest, cyc)] - score[heads[cyc], cyc][None, :]
    enter_arg = np.argmax(enter, axis=1)
    contracted[:c, c] = enter[np.arange(len(rest)), enter_arg]

    leave = score[np.ix_(cyc, rest)]
    leave_arg = np.argmax(leave, axis=0)
    contracted[c, :c] = leave[leave_arg, np.arange(len(rest))]
    contracted[:, 0] = -np.inf
    np.fill_diagonal(contracted, -np.inf)

    sub = _cle(contracted)

    out = heads.copy()
    for new_v in range(1, c):
        v = rest[new_v]
        h = sub[new_v]
        out[v] = cyc[leave_arg[new_v]] if h == c else rest[h]
    entry_from = sub[c]
    out[cyc[enter_arg[entry_from]]] = rest[entry_from]
    return out


def cle_decode(weights: np.ndarray) -> list[int]:
    """Maximum-weight spanning arborescence rooted at 0 (Chu-Liu-Edmonds)."""
    heads = _cle(_square(weights))
    return [int(h) for h in heads[1:]]


def eisner_decode(weights: np.ndarray) -> list[int]:
    """Maximum-weight projective tree by the first-order span DP.

    Ties resolve to the smaller split point.  ROOT may take several
    dependents.
    """
    score = _square(weights)
    n = score.shape[0]
    L, R = 0, 1
    complete = np.full((n, n, 2), -np.inf)
    incomplete = np.full((n, n, 2), -np.inf)
    complete_bp = np.zeros((n, n, 2), dtype=np.int64)
    incomplete_bp = np.zeros((n, n, 2), dtype=np.int64)
    for s in range(n):
        complete[s, s, :] = 0.0

    for k in range(1, n):
        for s in range(n - k):
            t = s + k
            joint = complete[s, s:t, R] + complete[s + 1:t + 1, t, L]
            r = int(np.argmax(joint))
            best = joint[r]
            incomplete[s, t, L] = best + score[t, s]
            incomplete[s, t, R] = best + score[s, t]
            incomplete_bp[s, t, :] = s + r

            left = complete[s, s:t, L] + incomplete[s:t, t, L]
            r = int(np.argmax(left))
            complete[s, t, L] = left[r]
            complete_bp[s, t, L] = s + r

            right = incomplete[s, s + 1:t + 1, R] + complete[s + 1:t + 1, t, R]
            r = int(np.argmax(right))
            complete[s, t, R] = right[r]
            complete_bp[s, t, R] = s + 1 + r

    heads = [0] * n
    stack = [(0, n - 1, R, True)]
    while stack:
        s, t, d, is_complete = stack.pop()
        if s == t:
            continue
        if is_complete:
            r = complete_bp[s, t, d]
            if d == R:
                stack.append((s, r, R, False))
                stack.append((r, t, R, True))
            else:
                stack.append((s, r, L, True))
                stack.append((r, t, L, False))
        else:
            r = incomplete_bp[s, t, d]
            if d == R:
                heads[t] = s
            else:
                heads[s] = t
            stack.append((s, r, R, True))
            stack.append((r + 1, t, L, True))
    return [int(h) for h in heads[1:]]


def repair(greedy: Sequence[int], weights: np.ndarray, mode: str = NONPROJECTIVE) -> list[int]:
    """Return ``greedy`` untouched when it is already acceptable, else decode.

    Non-projective mode accepts any tree and falls back to Chu-Liu-Edmonds;
    projective mode accepts projective trees only and falls back to Eisner.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    greedy = list(greedy)
    if is_tree(greedy):
        if mode == NONPROJECTIVE or is_projective(greedy):
            return greedy
    if mode == NONPROJECTIVE:
        return cle_decode(weights)
    return eisner_decode(weights)
