"""
Greedy heads and tree repair
============================

Head selection picks every word's head on its own, so nothing stops two
words from choosing each other.  This walk-through builds such a case by
hand and shows how the two repair decoders turn it into a tree.
"""

import numpy as np

from headparse import cle_decode, eisner_decode, is_projective, is_tree, repair
from headparse.decoders import tree_weight

# Rows are candidate heads (0 is ROOT), columns are the words 1..4.
# Words 2 and 3 prefer each other, which closes a cycle.
weights = np.log(np.array([
    [0.70, 0.10, 0.10, 0.05],
    [0.00, 0.30, 0.05, 0.50],
    [0.10, 0.00, 0.80, 0.05],
    [0.10, 0.55, 0.00, 0.40],
    [0.10, 0.05, 0.05, 0.00],
]) + 1e-12)
np.fill_diagonal(weights[1:], -np.inf)

greedy = [int(h) for h in np.argmax(weights, axis=0)]
print("greedy heads      ", greedy, "tree:", is_tree(greedy))

# %%
# Chu-Liu-Edmonds finds the best arborescence, crossing arcs allowed.
cle = cle_decode(weights)
print("chu-liu-edmonds   ", cle, "weight %.3f" % tree_weight(cle, weights))

# %%
# Eisner restricts the search to projective trees.
eis = eisner_decode(weights)
print("eisner            ", eis, "weight %.3f" % tree_weight(eis, weights),
      "projective:", is_projective(eis))

# %%
# ``repair`` only calls a decoder when the greedy output is broken, so a
# well-formed greedy answer comes back unchanged.
print("repair (nonproj)  ", repair(greedy, weights, "nonprojective"))
print("repair (proj)     ", repair(greedy, weights, "projective"))
good = [0, 1, 2, 3]
print("repair of a tree  ", repair(good, weights), "unchanged:", repair(good, weights) == good)
