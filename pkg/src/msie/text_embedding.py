"""CBOW word vectors trained with negative sampling, and document means.

For one centre word ``c`` with context words ``C`` the averaged context
vector ``x = mean(v[C])`` is scored against the centre's output vector
and against ``k`` noise words drawn from the unigram^0.75 table; the
objective ``log s(x.theta_c) + sum_u log s(-x.theta_u)`` is climbed by
stochastic gradient ascent.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import EmptyVocab, NonFinite

_PUNCT = re.compile(r"[^\w\s]+")


def tokenize(text: str) -> list[str]:
    if not text:
        return []
    return _PUNCT.sub("", text.lower()).split()


@dataclass
class Vocab:
    tokens: list[str]
    counts: np.ndarray
    index: dict[str, int] = field(default_factory=dict)
    table: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.tokens)}
        if self.table.size == 0 and len(self.tokens):
            w = self.counts.astype(float) ** 0.75
            self.table = w / w.sum()

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def encode(self, tokens) -> np.ndarray:
        idx = self.index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)


def build_vocab(corpus, min_count: int = 2) -> Vocab:
    corpus = list(corpus)
    if not corpus:
        raise EmptyVocab("corpus is empty")
    counts = Counter(t for doc in corpus for t in doc)
    kept = sorted(((t, c) for t, c in counts.items() if c >= min_count), key=lambda tc: (-tc[1], tc[0]))
    if not kept:
        raise EmptyVocab(f"no token reaches min_count={min_count}")
    return Vocab([t for t, _ in kept], np.array([c for _, c in kept]))


@dataclass
class WordVectors:
    vocab: Vocab
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    epoch_objective: list[float] = field(default_factory=list)

    @property
    def dim(self):
        return self.input_vectors.shape[1]

    def __getitem__(self, token):
        return self.input_vectors[self.vocab.index[token]]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.vocab)} {self.dim}\n")
            for tok, vec in zip(self.vocab.tokens, self.input_vectors):
                fh.write(tok + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")


def load_word_vectors(path) -> WordVectors:
    """Reads the input vectors back; counts and output vectors are not stored."""
    with open(path, encoding="utf-8") as fh:
        n, d = map(int, fh.readline().split())
        tokens, rows = [], []
        for line in fh:
            tok, vals = line.rstrip("\n").split("\t")
            tokens.append(tok)
            rows.append([float(v) for v in vals.split()])
    vecs = np.array(rows, dtype=float).reshape(n, d)
    vocab = Vocab(tokens, np.ones(n, dtype=np.int64))
    return WordVectors(vocab, vecs, np.zeros_like(vecs))


# ---------------------------------------------------------------- objective

def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def cbow_objective(context_vectors, theta_rows, labels) -> float:
    """``sum_u [L_u log s(x.theta_u) + (1 - L_u) log s(-x.theta_u)]`` with ``x`` the context mean."""
    x = np.asarray(context_vectors, dtype=float).mean(axis=0)
    f = np.asarray(theta_rows, dtype=float) @ x
    labels = np.asarray(labels, dtype=float)
    return float((labels * _log_sigmoid(f) + (1.0 - labels) * _log_sigmoid(-f)).sum())


def cbow_gradients(context_vectors, theta_rows, labels):
    """Analytic gradients of :func:`cbow_objective`.

    Returns ``(objective, d_x, d_context, d_theta)`` where ``d_x`` is the
    gradient w.r.t. the averaged context vector and ``d_context`` its share
    for each individual context vector.
    """
    ctx = np.asarray(context_vectors, dtype=float)
    theta = np.asarray(theta_rows, dtype=float)
    labels = np.asarray(labels, dtype=float)
    x = ctx.mean(axis=0)
    f = theta @ x
    obj = float((labels * _log_sigmoid(f) + (1.0 - labels) * _log_sigmoid(-f)).sum())
    g = labels - expit(f)
    d_x = g @ theta
    d_theta = g[:, None] * x[None, :]
    d_context = np.repeat(d_x[None, :] / ctx.shape[0], ctx.shape[0], axis=0)
    return obj, d_x, d_context, d_theta


# ---------------------------------------------------------------- training

def _positions(docs, window):
    """(doc_index, position) pairs that have at least one context word."""
    out = []
    for d, ids in enumerate(docs):
        if len(ids) < 2:
            continue
        out.extend((d, i) for i in range(len(ids)))
    return out


def init_word_vectors(vocab: Vocab, dim: int, seed: int) -> WordVectors:
    rng = np.random.default_rng(seed)
    v_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim))
    return WordVectors(vocab, v_in, np.zeros((len(vocab), dim)))


def train_cbow(corpus, vocab: Vocab, dim=100, window=5, negatives=5, epochs=5,
               learning_rate=0.025, min_learning_rate=1e-4, seed=0) -> WordVectors:
    """Single-threaded CBOW / negative-sampling training.

    The learning rate decays linearly over all training positions. The
    context update adds the full gradient w.r.t. the context mean to each
    context word, as in the reference word2vec ``cbow_mean`` mode.
    """
    if negatives < 1 or dim < 1:
        raise ValueError("negatives and dim must be >= 1")
    wv = init_word_vectors(vocab, dim, seed)
    if epochs <= 0:
        return wv
    rng = np.random.default_rng([seed, 1])
    docs = [vocab.encode(doc) for doc in corpus]
    positions = _positions(docs, window)
    if not positions:
        return wv
    v_in, v_out = wv.input_vectors, wv.output_vectors
    labels = np.zeros(negatives + 1)
    labels[0] = 1.0
    total = len(positions) * epochs
    step = 0
    V = len(vocab)
    for _ in range(epochs):
        negs_all = rng.choice(V, size=(len(positions), negatives), p=vocab.table)
        obj_sum = 0.0
        for p, (d, i) in enumerate(positions):
            ids = docs[d]
            lr = max(min_learning_rate, learning_rate * (1.0 - step / total))
            step += 1
            ctx = np.concatenate((ids[max(0, i - window):i], ids[i + 1:i + 1 + window]))
            center = ids[i]
            negs = negs_all[p]
            negs = negs[negs != center]
            rows = np.concatenate(([center], negs))
            lab = labels[:rows.size]
            x = v_in[ctx].mean(axis=0)
            theta = v_out[rows]
            f = theta @ x
            obj_sum += float((lab * _log_sigmoid(f) + (1.0 - lab) * _log_sigmoid(-f)).sum())
            g = (lab - expit(f)) * lr
            neu = g @ theta
            np.add.at(v_out, rows, g[:, None] * x[None, :])
            np.add.at(v_in, ctx, neu)
        mean_obj = obj_sum / len(positions)
        if not np.isfinite(mean_obj) or not np.isfinite(v_in).all():
            raise NonFinite("CBOW training diverged; lower the learning rate")
        wv.epoch_objective.append(mean_obj)
    return wv


def corpus_objective(wv: WordVectors, corpus, window=5, negatives=5, seed=0) -> float:
    """Mean objective over all positions with a fixed, seeded noise sample."""
    rng = np.random.default_rng([seed, 2])
    docs = [wv.vocab.encode(doc) for doc in corpus]
    positions = _positions(docs, window)
    negs_all = rng.choice(len(wv.vocab), size=(len(positions), negatives), p=wv.vocab.table)
    total = 0.0
    for p, (d, i) in enumerate(positions):
        ids = docs[d]
        ctx = np.concatenate((ids[max(0, i - window):i], ids[i + 1:i + 1 + window]))
        negs = negs_all[p][negs_all[p] != ids[i]]
        rows = np.concatenate(([ids[i]], negs))
        lab = np.zeros(rows.size)
        lab[0] = 1.0
        total += cbow_objective(wv.input_vectors[ctx], wv.output_vectors[rows], lab)
    return total / max(len(positions), 1)


# ---------------------------------------------------------------- documents

def embed_document(tokens, wv: WordVectors) -> np.ndarray:
    """Mean input vector over in-vocabulary tokens; zeros if there are none."""
    idx = wv.vocab.encode(tokens)
    if idx.size == 0:
        return np.zeros(wv.dim)
    return wv.input_vectors[idx].sum(axis=0) / idx.size


@dataclass
class TextFeatures:
    listing_ids: list[str]
    L: np.ndarray
    H: np.ndarray
    empty_description: np.ndarray
    empty_host_about: np.ndarray

    def save(self, path):
        d = self.L.shape[1]
        with open(path, "w", encoding="utf-8") as fh:
            cols = ["listing_id"] + [f"l{j}" for j in range(d)] + [f"h{j}" for j in range(d)]
            fh.write("\t".join(cols + ["empty_description", "empty_host_about"]) + "\n")
            for i, lid in enumerate(self.listing_ids):
                vals = [repr(float(v)) for v in self.L[i]] + [repr(float(v)) for v in self.H[i]]
                flags = [str(int(self.empty_description[i])), str(int(self.empty_host_about[i]))]
                fh.write("\t".join([lid] + vals + flags) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            d = (len(header) - 3) // 2
            ids, rows = [], []
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                ids.append(parts[0])
                rows.append([float(v) for v in parts[1:]])
        arr = np.array(rows, dtype=float).reshape(len(ids), 2 * d + 2)
        return cls(ids, arr[:, :d], arr[:, d:2 * d], arr[:, -2].astype(bool), arr[:, -1].astype(bool))


def embed_listing_texts(listings, wv: WordVectors, tokenizer=tokenize) -> TextFeatures:
    ids, L, H, fl, fh = [], [], [], [], []
    for r in listings:
        ids.append(r.listing_id)
        dt, ht = tokenizer(r.description_text), tokenizer(r.host_about_text)
        L.append(embed_document(dt, wv))
        H.append(embed_document(ht, wv))
        fl.append(wv.vocab.encode(dt).size == 0)
        fh.append(wv.vocab.encode(ht).size == 0)
    n, d = len(ids), wv.dim
    return TextFeatures(ids, np.array(L).reshape(n, d), np.array(H).reshape(n, d),
                        np.array(fl, dtype=bool), np.array(fh, dtype=bool))
