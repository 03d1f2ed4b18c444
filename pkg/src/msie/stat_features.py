"""Statistical attribute matrix: cleaning, scaling and L1 feature selection.

The Lasso objective is the plain sum form

    0.5 * sum_i (y_i - w.x_i - b)^2 + alpha * sum_j |w_j|

solved by cyclic coordinate descent on the Gram matrix.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import AllConstant, EmptySelection, FoldTooSmall, NonFinite


@dataclass
class StatFeatureMatrix:
    listing_ids: list[str]
    values: np.ndarray
    column_names: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.listing_ids), len(self.column_names)):
            raise ValueError(f"shape {self.values.shape} does not match ids/columns")

    def take_columns(self, idx) -> "StatFeatureMatrix":
        idx = list(idx)
        return StatFeatureMatrix(list(self.listing_ids), self.values[:, idx],
                                 [self.column_names[i] for i in idx])


@dataclass
class StandardScaler:
    means: np.ndarray
    stdevs: np.ndarray
    column_names: list[str]
    constant: list[str] = field(default_factory=list)

    def transform(self, X: StatFeatureMatrix) -> StatFeatureMatrix:
        cols = [X.column_names.index(c) for c in self.column_names]
        vals = (X.values[:, cols] - self.means) / self.stdevs
        return StatFeatureMatrix(list(X.listing_ids), vals, list(self.column_names))

    def to_dict(self):
        return {
            "columns": list(self.column_names),
            "means": self.means.tolist(),
            "stdevs": self.stdevs.tolist(),
            "constant": list(self.constant),
        }


@dataclass
class TargetTransform:
    """Standardized log10 price; fit on the training split."""
    mean: float
    std: float

    @classmethod
    def fit(cls, prices):
        logp = np.log10(np.asarray(prices, dtype=float))
        return cls(float(logp.mean()), float(logp.std()))

    def forward(self, prices):
        return (np.log10(np.asarray(prices, dtype=float)) - self.mean) / self.std

    def inverse(self, z):
        return 10.0 ** (np.asarray(z, dtype=float) * self.std + self.mean)

    def to_dict(self):
        return {"kind": "standardized-log10", "mean": self.mean, "std": self.std}


@dataclass
class LassoModel:
    alpha: float
    weights: np.ndarray
    intercept: float
    column_names: list[str] | None = None
    n_iter: int = 0
    converged: bool = True
    objective_trace: list[float] = field(default_factory=list)

    @property
    def selected_mask(self) -> np.ndarray:
        return self.weights != 0.0

    def predict(self, X) -> np.ndarray:
        X = getattr(X, "values", X)
        return np.asarray(X) @ self.weights + self.intercept

    def to_dict(self):
        names = self.column_names or [f"x{j}" for j in range(len(self.weights))]
        return {
            "alpha": self.alpha,
            "weights": {n: float(w) for n, w in zip(names, self.weights)},
            "intercept": self.intercept,
        }


# ---------------------------------------------------------------- preprocessing

def assemble_stat_matrix(train_table, other_tables=(), max_missing=0.3):
    """Stat matrices for train and any further tables.

    Columns missing in more than ``max_missing`` of training rows are
    dropped; remaining gaps are filled with the training-column median.
    """
    names = list(train_table.stat_names)
    raw = np.array([r.raw_stats for r in train_table.records], dtype=float).reshape(len(train_table), len(names))
    miss = np.isnan(raw).mean(axis=0) if len(raw) else np.zeros(len(names))
    keep = [j for j in range(len(names)) if miss[j] <= max_missing]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        medians = np.nanmedian(raw[:, keep], axis=0) if keep else np.zeros(0)
    medians = np.where(np.isnan(medians), 0.0, medians)

    def build(table):
        vals = np.array([r.raw_stats for r in table.records], dtype=float).reshape(len(table), len(names))[:, keep]
        vals = np.where(np.isnan(vals), medians, vals)
        return StatFeatureMatrix(table.ids, vals, [names[j] for j in keep])

    return build(train_table), [build(t) for t in other_tables]


def fit_standardizer(X: StatFeatureMatrix) -> StandardScaler:
    """Population mean/stdev per column; zero-variance columns are excluded."""
    vals = X.values
    if vals.shape[0] < 2:
        raise ValueError("need at least 2 rows to standardize")
    means = vals.mean(axis=0)
    stdevs = vals.std(axis=0)
    const = stdevs <= 1e-12 * np.maximum(1.0, np.abs(means))
    if const.all():
        raise AllConstant("every stat column has zero variance")
    keep = ~const
    return StandardScaler(
        means=means[keep],
        stdevs=stdevs[keep],
        column_names=[c for c, k in zip(X.column_names, keep) if k],
        constant=[c for c, k in zip(X.column_names, const) if k],
    )


# ---------------------------------------------------------------- lasso

def soft_threshold(x, alpha):
    return np.sign(x) * np.maximum(np.abs(x) - alpha, 0.0)


def lasso_objective(X, y, w, b, alpha) -> float:
    r = y - X @ w - b
    return 0.5 * float(r @ r) + alpha * float(np.abs(w).sum())


def _center(X, y, fit_intercept):
    if not fit_intercept:
        return X, y, np.zeros(X.shape[1]), 0.0
    xm, ym = X.mean(axis=0), y.mean()
    return X - xm, y - ym, xm, ym


def lasso_fit(X, y, alpha, tol=1e-6, max_iter=10_000, fit_intercept=True,
              column_names=None) -> LassoModel:
    """Cyclic coordinate descent with covariance (Gram) updates."""
    names = column_names
    if isinstance(X, StatFeatureMatrix):
        names = names or list(X.column_names)
        X = X.values
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFinite("non-finite values in lasso input")

    Xc, yc, xm, ym = _center(X, y, fit_intercept)
    gram = Xc.T @ Xc
    xty = Xc.T @ yc
    yty = float(yc @ yc)
    d = X.shape[1]
    w = np.zeros(d)
    diag = np.diag(gram).copy()

    def objective(w):
        return 0.5 * (yty - 2.0 * xty @ w + w @ gram @ w) + alpha * np.abs(w).sum()

    trace = [float(objective(w))]
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        max_change = 0.0
        for j in range(d):
            if diag[j] == 0.0:
                continue
            old = w[j]
            rho = xty[j] - gram[j] @ w + diag[j] * old
            new = math.copysign(max(abs(rho) - alpha, 0.0), rho) / diag[j]
            if new != old:
                w[j] = new
                max_change = max(max_change, abs(new - old))
        trace.append(float(objective(w)))
        if max_change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"lasso did not converge in {max_iter} sweeps (alpha={alpha})", RuntimeWarning)
    intercept = float(ym - xm @ w) if fit_intercept else 0.0
    return LassoModel(float(alpha), w, intercept, names, n_iter, converged, trace)


def kkt_violation(X, y, model: LassoModel) -> float:
    """Largest violation of the Lasso optimality conditions."""
    X = getattr(X, "values", X)
    r = np.asarray(y, dtype=float) - X @ model.weights - model.intercept
    grad = -(X.T @ r)  # d RSS/2 / dw
    w, a = model.weights, model.alpha
    active = w != 0
    v_active = np.abs(grad[active] + a * np.sign(w[active]))
    v_zero = np.maximum(np.abs(grad[~active]) - a, 0.0)
    return float(max(v_active.max(initial=0.0), v_zero.max(initial=0.0)))


def alpha_max(X, y, fit_intercept=True) -> float:
    """Smallest alpha at which every weight is exactly zero."""
    X = np.asarray(getattr(X, "values", X), dtype=float)
    Xc, yc, _, _ = _center(X, np.asarray(y, dtype=float), fit_intercept)
    return float(np.abs(Xc.T @ yc).max())


def alpha_grid(X, y, n_alphas=50, ratio=1e-4) -> np.ndarray:
    top = alpha_max(X, y)
    if top == 0.0:
        return np.array([1.0])
    return np.logspace(np.log10(top), np.log10(top * ratio), n_alphas)


def lasso_cv(X, y, alpha_grid, k=5, tol=1e-6, max_iter=10_000):
    """Pick alpha by mean validation MSE over ``k`` contiguous folds.

    Rows are taken in the given (temporal) order; ties go to the larger,
    sparser alpha. Returns ``(best_alpha, model refit on all rows, cv_mse)``.
    """
    names = list(X.column_names) if isinstance(X, StatFeatureMatrix) else None
    Xv = np.asarray(getattr(X, "values", X), dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    grid = sorted((float(a) for a in alpha_grid), reverse=True)
    if not grid:
        raise ValueError("alpha grid is empty")
    if k < 2:
        raise ValueError("k must be >= 2")
    n = Xv.shape[0]
    if n / k < 2:
        raise FoldTooSmall(f"{n} rows cannot fill {k} folds of size >= 2")

    bounds = np.linspace(0, n, k + 1).round().astype(int)
    cv_mse = np.zeros(len(grid))
    for f in range(k):
        lo, hi = bounds[f], bounds[f + 1]
        val = np.zeros(n, dtype=bool)
        val[lo:hi] = True
        for i, a in enumerate(grid):
            m = lasso_fit(Xv[~val], y[~val], a, tol=tol, max_iter=max_iter)
            resid = y[val] - m.predict(Xv[val])
            cv_mse[i] += float(resid @ resid) / val.sum() / k
    # grid is descending so argmin's first hit is the largest tied alpha
    best = grid[int(np.argmin(cv_mse))]
    model = lasso_fit(Xv, y, best, tol=tol, max_iter=max_iter, column_names=names)
    return best, model, dict(zip(grid, cv_mse.tolist()))


def select_features(model: LassoModel, X: StatFeatureMatrix) -> StatFeatureMatrix:
    mask = model.selected_mask
    if len(mask) != len(X.column_names):
        raise ValueError("model and matrix disagree on column count")
    if not mask.any():
        raise EmptySelection("lasso selected no features")
    return X.take_columns(np.flatnonzero(mask))


def pvalue_rank(X, y, top_k, column_names=None):
    """Rank features by the two-sided p-value of a univariate regression slope."""
    names = column_names or list(getattr(X, "column_names", []))
    Xv = np.asarray(getattr(X, "values", X), dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, d = Xv.shape
    if not names:
        names = [f"x{j}" for j in range(d)]
    if top_k > d:
        raise ValueError("top_k exceeds feature count")
    xc = Xv - Xv.mean(axis=0)
    yc = y - y.mean()
    sxx = (xc * xc).sum(axis=0)
    syy = float(yc @ yc)
    pvals = np.ones(d)
    for j in range(d):
        if sxx[j] == 0.0 or syy == 0.0:
            continue
        r = float(xc[:, j] @ yc) / math.sqrt(sxx[j] * syy)
        r = max(-1.0, min(1.0, r))
        if abs(r) == 1.0 or n <= 2:
            pvals[j] = 0.0 if abs(r) == 1.0 else 1.0
            continue
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        if n > 30:
            pvals[j] = 2.0 * sps.norm.sf(abs(t))
        else:
            pvals[j] = 2.0 * sps.t.sf(abs(t), df=n - 2)
    order = sorted(range(d), key=lambda j: (pvals[j], j))[:top_k]
    return [(names[j], float(pvals[j])) for j in order]
