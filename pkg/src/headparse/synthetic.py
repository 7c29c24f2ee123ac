"""Seeded generator of English-like dependency treebanks.

Sentences come from a small probabilistic dependency grammar with Penn
tags and Stanford-style labels: subjects and objects, determiners and
adjectives, prepositional phrases whose attachment depends on the verb and
the preposition, relative clauses (occasionally extraposed, which makes the
tree non-projective), clausal complements, adverbial clauses, coordination
and punctuation.  It stands in for a licensed treebank when exercising the
training pipeline end to end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Sentence, Token, Treebank
from .numeric import make_rng

NOUNS = """time year people way day man thing woman life child world school state family student
group country problem hand part place case week company system program question work government
number night point home water room mother area money story fact month lot right study book eye job
word business issue side kind head house service friend father power hour game line end member law
car city community name president team minute idea kid body information back parent face others
level office door health person art war history party result change morning reason research girl
guy moment air teacher force education food river garden letter machine table window market road
village doctor picture song island bridge truck ship engine forest""".split()
PLURAL = {n: n + "s" for n in NOUNS}
PLURAL.update({"man": "men", "woman": "women", "child": "children", "person": "people", "city": "cities",
               "country": "countries", "family": "families", "story": "stories", "party": "parties",
               "body": "bodies", "study": "studies", "community": "communities", "history": "histories",
               "business": "businesses", "class": "classes", "people": "peoples", "others": "others"})
NAMES = """John Mary Smith Obama Paris London Kim Chen Garcia Lee Taylor Brown Wilson Moore Anderson
Thomas Jackson Martin White Harris Clark Lewis Walker Young Allen King Wright Scott Green Baker""".split()
ADJS = """new good high old great big small large local social important national young different
black long little political white real best right public bad able late hard major better economic
strong possible whole free military true federal international full special easy clear recent
certain personal open red difficult available likely short single medical current wrong private
past foreign fine common poor natural significant similar hot dead central happy serious ready""".split()
ADVS = """quickly often never also really already always still soon just probably recently finally
usually clearly certainly suddenly slowly simply easily""".split()
# (base, past, third person singular)
INTRANS = [("arrive", "arrived", "arrives"), ("sleep", "slept", "sleeps"), ("run", "ran", "runs"),
           ("fall", "fell", "falls"), ("wait", "waited", "waits"), ("smile", "smiled", "smiles"),
           ("laugh", "laughed", "laughs"), ("work", "worked", "works"), ("live", "lived", "lives"),
           ("die", "died", "dies"), ("grow", "grew", "grows"), ("rise", "rose", "rises")]
TRANS = [("see", "saw", "sees"), ("make", "made", "makes"), ("take", "took", "takes"),
         ("find", "found", "finds"), ("buy", "bought", "buys"), ("build", "built", "builds"),
         ("need", "needed", "needs"), ("hold", "held", "holds"), ("bring", "brought", "brings"),
         ("write", "wrote", "writes"), ("read", "read", "reads"), ("lose", "lost", "loses"),
         ("open", "opened", "opens"), ("carry", "carried", "carries"), ("watch", "watched", "watches"),
         ("follow", "followed", "follows"), ("fix", "fixed", "fixes"), ("paint", "painted", "paints"),
         ("cut", "cut", "cuts"), ("eat", "ate", "eats"), ("visit", "visited", "visits"),
         ("love", "loved", "loves"), ("hit", "hit", "hits"), ("sell", "sold", "sells")]
DITRANS = [("give", "gave", "gives"), ("send", "sent", "sends"), ("show", "showed", "shows"),
           ("offer", "offered", "offers"), ("tell", "told", "tells"), ("teach", "taught", "teaches")]
SAY = [("say", "said", "says"), ("think", "thought", "thinks"), ("believe", "believed", "believes"),
       ("know", "knew", "knows"), ("claim", "claimed", "claims"), ("report", "reported", "reports")]
WANT = [("want", "wanted", "wants"), ("try", "tried", "tries"), ("decide", "decided", "decides"),
        ("hope", "hoped", "hopes"), ("plan", "planned", "plans")]
PREPS = ["of", "in", "with", "on", "for", "at", "from", "by", "about", "into", "near", "under"]
# log-odds of attaching to the verb rather than the object noun
PREP_VERB_BIAS = {"of": -6.0, "in": 0.5, "with": 0.0, "on": 0.3, "for": -0.3, "at": 1.0, "from": 0.2,
                  "by": 0.8, "about": -1.5, "into": 2.0, "near": -0.5, "under": 0.0}
DETS = [("the", 0.55), ("a", 0.25), ("this", 0.05), ("some", 0.05), ("every", 0.03), ("that", 0.03),
        ("no", 0.02), ("another", 0.02)]
SUBJ_PRONOUNS = ["he", "she", "they", "we", "it", "I", "you"]
OBJ_PRONOUNS = ["him", "her", "them", "us", "it", "me", "you"]
MODALS = ["will", "can", "would", "could", "should", "must", "may", "might"]
SUBORD = ["because", "when", "if", "although", "while", "after", "before", "since"]


@dataclass
class Node:
    form: str
    tag: str
    label: str = ""
    left: list["Node"] = field(default_factory=list)
    right: list["Node"] = field(default_factory=list)
    lemma: str = ""
    # subtrees placed after this node's own span but headed elsewhere
    trailing: list["Node"] = field(default_factory=list)
    extraposed_head: "Node | None" = None


class _Generator:
    def __init__(self, rng: np.random.Generator, extraposition: float):
        self.rng = rng
        self.extraposition = extraposition
        self.noun_weights = self._zipf(len(NOUNS))
        self.adj_weights = self._zipf(len(ADJS))
        self.name_weights = self._zipf(len(NAMES))
        # each verb and noun gets a fixed taste for PP attachment
        self.verb_affinity = {v[0]: float(rng.normal(0, 1.5)) for v in INTRANS + TRANS + DITRANS + SAY + WANT}
        self.noun_affinity = {n: float(rng.normal(0, 1.0)) for n in NOUNS}

    @staticmethod
    def _zipf(n: int) -> np.ndarray:
        w = 1.0 / np.arange(1, n + 1) ** 0.9
        return w / w.sum()

    def p(self, prob: float) -> bool:
        return bool(self.rng.random() < prob)

    def pick(self, items, weights=None):
        return items[int(self.rng.choice(len(items), p=weights))]

    # -- phrases --------------------------------------------------------

    def noun_phrase(self, depth: int, role: str, allow_pronoun: bool = True) -> Node:
        r = self.rng.random()
        if allow_pronoun and r < 0.13:
            return Node(self.pick(SUBJ_PRONOUNS if role == "nsubj" else OBJ_PRONOUNS), "PRP", role)
        if r < 0.25:
            head = Node(self.pick(NAMES, self.name_weights), "NNP", role)
            if self.p(0.3):
                head.left.append(Node(self.pick(NAMES, self.name_weights), "NNP", "nn"))
            return head
        noun = self.pick(NOUNS, self.noun_weights)
        plural = self.p(0.3)
        head = Node(PLURAL[noun] if plural else noun, "NNS" if plural else "NN", role)
        head.lemma = noun
        if self.p(0.12):
            head.left.insert(0, Node(self.pick(NOUNS, self.noun_weights), "NN", "nn"))
        for _ in range(2):
            if self.p(0.3):
                head.left.insert(0, Node(self.pick(ADJS, self.adj_weights), "JJ", "amod"))
        if not plural or self.p(0.4):
            det, _ = DETS[int(self.rng.choice(len(DETS), p=[w for _, w in DETS]))]
            if plural and det in ("a", "every", "another", "this", "that"):
                det = "the"
            head.left.insert(0, Node(det, "DT", "det"))
        if depth < 2 and self.p(0.2):
            head.right.append(self.prep_phrase(depth + 1, self.pick(["of", "in", "with", "from", "about"])))
        if depth < 2 and self.p(0.07):
            head.right.append(self.relative_clause(depth + 1))
        if depth < 2 and role in ("dobj", "pobj") and self.p(0.06):
            head.right.append(Node("and", "CC", "cc"))
            head.right.append(self.noun_phrase(depth + 1, "conj", allow_pronoun=False))
        return head

    def prep_phrase(self, depth: int, prep: str | None = None) -> Node:
        prep = prep or self.pick(PREPS)
        node = Node(prep, "IN", "prep")
        node.right.append(self.noun_phrase(depth + 1, "pobj"))
        return node

    def relative_clause(self, depth: int) -> Node:
        verb, obj = self.verb_group(depth, self.pick(["trans", "intrans"]), past=self.p(0.6))
        verb.label = "rcmod"
        verb.left.insert(0, Node(self.pick(["that", "which", "who"]), "WDT", "nsubj"))
        if obj is not None:
            verb.right.insert(0, obj)
        return verb

    def verb_group(self, depth: int, kind: str, past: bool) -> tuple[Node, Node | None]:
        table = {"intrans": INTRANS, "trans": TRANS, "ditrans": DITRANS, "say": SAY, "want": WANT}[kind]
        base, past_form, third = table[int(self.rng.integers(len(table)))]
        aux = None
        if self.p(0.15):
            aux = Node(self.pick(MODALS), "MD", "aux")
            verb = Node(base, "VB", "")
        elif past:
            verb = Node(past_form, "VBD", "")
        else:
            verb = Node(third, "VBZ", "")
        verb.lemma = base
        if aux is not None:
            verb.left.append(aux)
            if self.p(0.15):
                verb.left.append(Node("not", "RB", "neg"))
        if self.p(0.08):
            verb.left.append(Node(self.pick(ADVS), "RB", "advmod"))
        obj = None
        if kind == "trans":
            obj = self.noun_phrase(depth, "dobj")
        elif kind == "ditrans":
            verb.right.append(self.noun_phrase(depth, "iobj"))
            obj = self.noun_phrase(depth, "dobj", allow_pronoun=False)
        elif kind == "say" and depth < 2:
            comp = self.clause(depth + 1)
            comp.label = "ccomp"
            if self.p(0.5):
                comp.left.insert(0, Node("that", "IN", "mark"))
            verb.right.append(comp)
        elif kind == "want":
            inner = Node(self.pick(TRANS)[0], "VB", "xcomp")
            inner.left.append(Node("to", "TO", "aux"))
            inner.right.append(self.noun_phrase(depth + 1, "dobj"))
            verb.right.append(inner)
        return verb, obj

    def clause(self, depth: int) -> Node:
        kind = self.pick(["intrans", "trans", "ditrans", "say", "want"], [0.22, 0.48, 0.08, 0.12, 0.10])
        verb, obj = self.verb_group(depth, kind, past=self.p(0.6))
        subject = self.noun_phrase(depth, "nsubj")
        verb.left.insert(0, subject)
        if obj is not None:
            verb.right.append(obj)
        n_pp = int(self.p(0.55)) + int(self.p(0.25))
        for _ in range(n_pp if depth < 3 else 0):
            prep = self.pick(PREPS)
            pp = self.prep_phrase(depth, prep)
            logit = PREP_VERB_BIAS[prep] + self.verb_affinity[verb.lemma]
            if obj is not None and obj.tag in ("NN", "NNS"):
                logit -= self.noun_affinity.get(obj.lemma, 0.0)
            attach_verb = obj is None or obj.tag not in ("NN", "NNS") or self.rng.random() < 1 / (1 + math.exp(-logit))
            (verb if attach_verb else obj).right.append(pp)
        if self.p(0.12):
            verb.right.append(Node(self.pick(ADVS), "RB", "advmod"))
        # extraposed relative clause: headed by the subject noun, placed after the verb's span
        if subject.tag in ("NN", "NNS") and depth < 2 and self.p(self.extraposition):
            rc = self.relative_clause(depth + 1)
            verb.trailing.append(rc)
            rc.extraposed_head = subject
        return verb

    def sentence(self) -> Node:
        root = self.clause(0)
        root.label = "root"
        if self.p(0.08):
            sub = self.clause(1)
            sub.label = "advcl"
            sub.left.insert(0, Node(self.pick(SUBORD), "IN", "mark"))
            root.left.insert(0, Node(",", ",", "punct"))
            root.left.insert(0, sub)
        if self.p(0.1):
            conj = self.clause(1)
            conj.label = "conj"
            root.right.append(Node(",", ",", "punct"))
            root.right.append(Node("and", "CC", "cc"))
            root.right.append(conj)
        root.right.append(Node(".", ".", "punct"))
        return root


def _linearize(root: Node) -> Sentence:
    order: list[Node] = []
    parent: dict[int, Node | None] = {id(root): None}

    def visit(node: Node) -> None:
        for child in node.left:
            parent[id(child)] = node
            visit(child)
        order.append(node)
        for child in node.right:
            parent[id(child)] = node
            visit(child)
        for child in node.trailing:
            parent[id(child)] = child.extraposed_head
            visit(child)

    visit(root)
    # keep the sentence-final period last
    if order[-1].tag != "." and any(n.tag == "." and parent[id(n)] is root for n in order):
        period = next(n for n in reversed(order) if n.tag == "." and parent[id(n)] is root)
        order.remove(period)
        order.append(period)
    index = {id(n): k + 1 for k, n in enumerate(order)}
    tokens = []
    for n in order:
        p = parent[id(n)]
        tokens.append(Token(form=n.form, pos=n.tag, head=0 if p is None else index[id(p)],
                            label=n.label or "dep", cpos=n.tag))
    return Sentence(tuple(tokens))


def generate_treebank(n_sentences: int, seed: int = 0, max_length: int = 60,
                      extraposition: float = 0.04, grammar_seed: int = 0,
                      name: str = "synthetic") -> Treebank:
    """``n_sentences`` sentences of at most ``max_length`` tokens, reproducible from ``seed``.

    ``grammar_seed`` fixes the lexical attachment preferences, so treebanks
    drawn with different ``seed`` values share one grammar.
    """
    gen = _Generator(make_rng([grammar_seed, 99]), extraposition)
    gen.rng = make_rng(seed)
    sentences: list[Sentence] = []
    while len(sentences) < n_sentences:
        sent = _linearize(gen.sentence())
        if len(sent) <= max_length:
            sentences.append(sent)
    return Treebank(tuple(sentences), name)


def train_dev_split(n_train: int, n_dev: int, seed: int = 0, **kwargs) -> tuple[Treebank, Treebank]:
    """One grammar (fixed lexical attachment preferences), disjoint sentence draws."""
    both = generate_treebank(n_train + n_dev, seed=seed, **kwargs)
    return both[:n_train], both[n_train:]
