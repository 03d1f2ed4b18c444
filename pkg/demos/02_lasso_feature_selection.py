"""
Lasso feature selection on listing attributes
=============================================

Coordinate-descent lasso over a geometric alpha grid, alpha picked by
contiguous time-ordered folds, then the surviving columns.
"""
from msie.corpus_io import temporal_split
from msie.stat_features import (TargetTransform, alpha_grid, assemble_stat_matrix, fit_standardizer,
                                lasso_cv, pvalue_rank, select_features)
from msie.synth import SynthConfig, synth_generate

ds = synth_generate(SynthConfig(n_listings=800, n_pois=20, seed=3))
train, test = temporal_split(ds.listings, 0.8)
print("train/test:", len(train.records), len(test.records))

# raw attributes: sparse columns dropped, gaps filled with train medians
S_train, (S_test,) = assemble_stat_matrix(train, [test])
print("kept columns:", S_train.column_names)

scaler = fit_standardizer(S_train)
Z = scaler.transform(S_train)
print("constant columns removed:", scaler.constant)

target = TargetTransform.fit([r.price for r in train.records])
y = target.forward([r.price for r in train.records])

grid = alpha_grid(Z.values, y, n_alphas=30)
best, model, cv = lasso_cv(Z, y, grid, k=5)
print("alpha range %.3g .. %.3g, chosen %.4g" % (grid.min(), grid.max(), best))

chosen = select_features(model, Z)
print("selected %d of %d:" % (len(chosen.column_names), len(Z.column_names)))
for name, w in zip(model.column_names, model.weights):
    if w != 0:
        print("  %-28s %+.3f" % (name, w))

# the noise columns attr_* should mostly be gone; compare with a univariate ranking
print("top 5 by p-value:", [n for n, _ in pvalue_rank(Z, y, 5)])
