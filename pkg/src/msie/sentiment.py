"""Multinomial naive Bayes review polarity and per-listing sentiment scores."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import expit

from .errors import SingleClass
from .text_embedding import tokenize


@dataclass
class NbModel:
    vocab: dict[str, int]
    log_prior_pos: float
    log_prior_neg: float
    log_lik_pos: np.ndarray
    log_lik_neg: np.ndarray
    smoothing: float = 1.0

    @property
    def prior_pos(self):
        return math.exp(self.log_prior_pos)

    def log_odds_neg(self, tokens) -> float:
        """``log gamma``: log P(neg, tokens) - log P(pos, tokens), OOV tokens skipped."""
        idx = [self.vocab[t] for t in tokens if t in self.vocab]
        lg = self.log_prior_neg - self.log_prior_pos
        if idx:
            lg += float(self.log_lik_neg[idx].sum() - self.log_lik_pos[idx].sum())
        return lg


def train_nb(labeled_docs, smoothing: float = 1.0) -> NbModel:
    """Laplace-smoothed multinomial NB over ``(tokens, 'pos'|'neg')`` pairs."""
    if smoothing <= 0:
        raise ValueError("smoothing must be positive")
    docs = [(list(toks), lab) for toks, lab in labeled_docs]
    labels = {lab for _, lab in docs}
    bad = labels - {"pos", "neg"}
    if bad:
        raise ValueError(f"unknown labels: {sorted(bad)}")
    if labels != {"pos", "neg"}:
        raise SingleClass(f"need both classes, got {sorted(labels)}")

    vocab: dict[str, int] = {}
    for toks, _ in docs:
        for t in toks:
            vocab.setdefault(t, len(vocab))
    counts = {"pos": np.zeros(len(vocab)), "neg": np.zeros(len(vocab))}
    n_docs = {"pos": 0, "neg": 0}
    for toks, lab in docs:
        n_docs[lab] += 1
        for t in toks:
            counts[lab][vocab[t]] += 1

    V = len(vocab)

    def loglik(c):
        return np.log(c + smoothing) - math.log(c.sum() + smoothing * V)

    total = n_docs["pos"] + n_docs["neg"]
    return NbModel(
        vocab=vocab,
        log_prior_pos=math.log(n_docs["pos"] / total),
        log_prior_neg=math.log(n_docs["neg"] / total),
        log_lik_pos=loglik(counts["pos"]),
        log_lik_neg=loglik(counts["neg"]),
        smoothing=smoothing,
    )


def score_review(model: NbModel, tokens) -> float:
    """Positive-class posterior ``1 / (1 + gamma)``."""
    return float(expit(-model.log_odds_neg(tokens)))


@dataclass
class SentimentVector:
    listing_ids: list[str]
    r: np.ndarray
    q: np.ndarray
    zero_review: np.ndarray

    def save(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["listing_id", "r", "q", "zero_review_flag"])
            for lid, r, q, z in zip(self.listing_ids, self.r, self.q, self.zero_review):
                w.writerow([lid, repr(float(r)), int(q), int(z)])

    @classmethod
    def load(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [row["listing_id"] for row in rows],
            np.array([float(row["r"]) for row in rows]),
            np.array([int(row["q"]) for row in rows]),
            np.array([row["zero_review_flag"] == "1" for row in rows], dtype=bool),
        )


NEUTRAL_SCORE = 0.5


def listing_sentiment(model: NbModel, reviews_by_listing, listing_ids, tokenizer=tokenize) -> SentimentVector:
    """Mean review score per listing; listings without reviews get 0.5 and a flag.

    ``reviews_by_listing`` maps listing id to a list of review texts (or
    ``ReviewDoc`` objects).
    """
    r, q = [], []
    for lid in listing_ids:
        texts = reviews_by_listing.get(lid, [])
        scores = [score_review(model, tokenizer(getattr(t, "text", t))) for t in texts]
        q.append(len(scores))
        # fsum is exactly rounded, so the mean does not depend on review order
        r.append(math.fsum(scores) / len(scores) if scores else NEUTRAL_SCORE)
    q = np.array(q, dtype=np.int64)
    return SentimentVector(list(listing_ids), np.array(r, dtype=float), q, q == 0)


def load_labeled_corpus(path=None, tokenizer=tokenize):
    """``label<TAB>text`` lines; defaults to the bundled seed review set."""
    if path is None:
        text = resources.files("msie.data").joinpath("seed_reviews.tsv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    docs = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        label, body = line.split("\t", 1)
        docs.append((tokenizer(body), label.strip()))
    return docs
