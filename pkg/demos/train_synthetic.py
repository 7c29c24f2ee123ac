"""
Training on a generated treebank
================================

No licensed treebank ships with the package, so this script trains on
sentences from the built-in toy grammar, parses a held-out set and
reports attachment scores plus how often greedy output was already a
tree.  Pass ``--big`` for the 1000/100 setting (a few minutes on one
CPU core).
"""

import sys

from headparse import TrainConfig, attachment_scores, parse_sentences, train_model
from headparse.model import predictions_to_treebank
from headparse.evaluation import format_tree_rates, tree_rate_report
from headparse.synthetic import train_dev_split

big = "--big" in sys.argv
train, dev = train_dev_split(1000, 100, seed=1) if big else train_dev_split(200, 40, seed=1)
print(f"{len(train)} training and {len(dev)} held-out sentences")
print(dev[0].forms)

# %%
# The small setting trains in about a minute.
config = TrainConfig(hidden_dim=64 if not big else 100, word_dim=64 if not big else 100,
                     max_epochs=25 if not big else 15, patience=3, label_epochs=5)
bundle, head_log, label_log = train_model(train, dev, config, labeled=True)
print(head_log.as_text())

# %%
# Parse the held-out sentences.  ``greedy`` is the raw argmax, ``heads``
# the repaired output.
preds = parse_sentences(bundle, dev)
print("repaired:")
print(attachment_scores(dev, predictions_to_treebank(dev, preds)).as_text())
print("greedy only:")
print(attachment_scores(dev, predictions_to_treebank(dev, preds, use_greedy=True)).as_text())
print(format_tree_rates(tree_rate_report([p.greedy for p in preds], [p.heads for p in preds])))
