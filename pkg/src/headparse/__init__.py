"""BiLSTM head-selection dependency parser with greedy decoding and MST repair.

The pieces compose bottom-up::

    numeric       tensors, a reverse-mode tape, Adam, clipping
    corpus        CoNLL-X I/O, vocabulary, projectivity statistics
    encoder       embeddings and the bidirectional LSTM stack
    head_selector pairwise arc scores and per-word head softmax
    decoders      tree checks, Eisner, Chu-Liu-Edmonds, repair
    labeler       MLP arc labeler on encoder features
    trainer       training loops and model selection
    evaluation    UAS / LAS / UEM, tree rates, length bins
    cli           ``headparse train|parse|eval|stats``
"""
from .config import TrainConfig
from .corpus import Sentence, Token, Treebank, Vocabulary, build_vocabulary, load_treebank, read_conll, write_conll
from .decoders import NONPROJECTIVE, PROJECTIVE, cle_decode, eisner_decode, is_projective, is_tree, repair
from .evaluation import EvalReport, attachment_scores, tree_rate, uas_by_length
from .model import ModelBundle, initialize, load_model, parse_sentences, save_model
from .trainer import train_heads, train_labeler, train_model

__version__ = "0.1.0"

__all__ = [
    "TrainConfig", "Sentence", "Token", "Treebank", "Vocabulary", "build_vocabulary", "load_treebank",
    "read_conll", "write_conll", "PROJECTIVE", "NONPROJECTIVE", "cle_decode", "eisner_decode",
    "is_projective", "is_tree", "repair", "EvalReport", "attachment_scores", "tree_rate", "uas_by_length",
    "ModelBundle", "initialize", "load_model", "parse_sentences", "save_model", "train_heads",
    "train_labeler", "train_model",
]
