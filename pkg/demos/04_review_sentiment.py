"""
Naive Bayes review polarity
===========================

Laplace-smoothed multinomial naive Bayes trained on the bundled seed
reviews, applied to single reviews and averaged per listing.
"""
from msie.sentiment import listing_sentiment, load_labeled_corpus, score_review, train_nb
from msie.text_embedding import tokenize

docs = load_labeled_corpus()
model = train_nb(docs)
print("training docs:", len(docs), "vocabulary:", len(model.vocab), "P(pos) = %.2f" % model.prior_pos)

for text in ["Clean and cozy flat, would stay again",
             "Dirty room, noisy street, awful host",
             "The apartment was near the subway"]:
    print("%.3f  %s" % (score_review(model, tokenize(text)), text))

reviews = {
    "L1": ["great location, spotless", "lovely host"],
    "L2": ["smelly bathroom", "broken shower, would never stay again", "okay"],
}
sv = listing_sentiment(model, reviews, ["L1", "L2", "L3"])
for lid, r, q in zip(sv.listing_ids, sv.r, sv.q):
    print(f"{lid}: r = {r:.3f} from {q} reviews")
# L3 has no reviews and gets the neutral 0.5
