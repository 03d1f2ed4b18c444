"""
CBOW word vectors from listing descriptions
===========================================

Negative-sampling CBOW trained from scratch on generated descriptions,
then nearest neighbours and document vectors.
"""
import numpy as np

from msie.text_embedding import build_vocab, embed_document, tokenize, train_cbow
from msie.synth import SynthConfig, synth_generate

ds = synth_generate(SynthConfig(n_listings=1000, n_pois=10, seed=5))
corpus = [tokenize(r.description_text) for r in ds.listings.records]
print(corpus[0][:12])

vocab = build_vocab(corpus, min_count=2)
print("vocabulary:", len(vocab))

wv = train_cbow(corpus, vocab, dim=50, window=5, negatives=5, epochs=5, seed=0)
print("objective per epoch:", np.round(wv.epoch_objective, 1))


def neighbours(word, k=5):
    # filler words share most of their contexts, so every vector carries a
    # large common component; remove it before comparing directions
    V = wv.input_vectors - wv.input_vectors.mean(axis=0)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    sims = V @ V[vocab.index[word]]
    order = np.argsort(-sims)[1:k + 1]
    return [(vocab.tokens[i], round(float(sims[i]), 2)) for i in order]


# upscale words co-occur with each other, basic words with each other
print("luxury ->", neighbours("luxury"))
print("budget ->", neighbours("budget"))

# a document vector is the mean of its in-vocabulary word vectors
doc = embed_document(tokenize("Spacious renovated apartment with a balcony"), wv)
print("document vector:", doc.shape, np.round(doc[:5], 3))
