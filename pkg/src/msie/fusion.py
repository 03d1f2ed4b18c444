"""Multi-source feature matrix and the dense price regressor.

Columns of the fused matrix are always ordered ``[S | L | H | R | P]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, DimensionMismatch, NonFinite
from .neural import DenseNet, TrainConfig, backward, forward, half_mse, sgd_step
from .stat_features import TargetTransform

BLOCKS = ("S", "L", "H", "R", "P")
VARIANT_BLOCKS = {
    "S": ("S",),
    "ST": ("S", "L", "H", "R"),
    "STP": ("S", "L", "H", "R", "P"),
}
HIDDEN_DIMS = (128, 64, 64)


@dataclass
class FeatureBundle:
    listing_ids: list[str]
    S: np.ndarray
    L: np.ndarray
    H: np.ndarray
    R: np.ndarray
    P: np.ndarray
    y: np.ndarray
    stat_names: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.listing_ids)

    def block(self, name):
        return getattr(self, name)

    def matrix(self, variant="STP") -> np.ndarray:
        return np.hstack([self.block(b) for b in VARIANT_BLOCKS[variant]])

    @property
    def M(self) -> np.ndarray:
        return self.matrix("STP")

    def layout(self, variant="STP") -> str:
        return "|".join(f"{b}:{self.block(b).shape[1]}" for b in VARIANT_BLOCKS[variant])

    def rows(self, ids) -> "FeatureBundle":
        pos = {lid: i for i, lid in enumerate(self.listing_ids)}
        missing = [lid for lid in ids if lid not in pos]
        if missing:
            raise AlignmentError(missing, "bundle")
        idx = np.array([pos[lid] for lid in ids], dtype=np.int64)
        return FeatureBundle(list(ids), self.S[idx], self.L[idx], self.H[idx], self.R[idx],
                             self.P[idx], self.y[idx], list(self.stat_names))

    def save(self, path):
        """TSV: listing_id, y, then the fused columns with block-prefixed names."""
        names = list(self.stat_names) or [f"s{j}" for j in range(self.S.shape[1])]
        cols = (["S:" + n for n in names]
                + [f"L:{j}" for j in range(self.L.shape[1])]
                + [f"H:{j}" for j in range(self.H.shape[1])]
                + ["R:r"]
                + [f"P:{j}" for j in range(self.P.shape[1])])
        M = self.M
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(["listing_id", "y"] + cols) + "\n")
            for lid, yv, row in zip(self.listing_ids, self.y, M):
                fh.write("\t".join([lid, repr(float(yv))] + [repr(float(v)) for v in row]) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            ids, rows = [], []
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                ids.append(parts[0])
                rows.append([float(v) for v in parts[1:]])
        cols = header[2:]
        arr = np.array(rows, dtype=float).reshape(len(ids), len(cols) + 1)
        blocks = {b: [j for j, c in enumerate(cols) if c.split(":", 1)[0] == b] for b in BLOCKS}
        M = arr[:, 1:]
        return cls(ids, *(M[:, blocks[b]] for b in BLOCKS), arr[:, 0],
                   [cols[j].split(":", 1)[1] for j in blocks["S"]])


def _align(ids, source_ids, source_name):
    pos = {lid: i for i, lid in enumerate(source_ids)}
    missing = [lid for lid in ids if lid not in pos]
    if missing:
        raise AlignmentError(missing, source_name)
    return np.array([pos[lid] for lid in ids], dtype=np.int64)


def fuse(S, text, sentiment, spatial, y, listing_ids=None) -> FeatureBundle:
    """Row-align every source on ``listing_ids`` (default: the stat matrix order).

    ``y`` is either an array in stat-matrix order or a mapping from
    listing id to target value.
    """
    ids = list(listing_ids) if listing_ids is not None else list(S.listing_ids)
    si = _align(ids, S.listing_ids, "stat features")
    ti = _align(ids, text.listing_ids, "text features")
    ri = _align(ids, sentiment.listing_ids, "sentiment")
    pi = _align(ids, spatial.listing_ids, "spatial features")
    if isinstance(y, dict):
        missing = [lid for lid in ids if lid not in y]
        if missing:
            raise AlignmentError(missing, "target")
        yv = np.array([y[lid] for lid in ids], dtype=float)
    else:
        yv = np.asarray(y, dtype=float)[si]
    return FeatureBundle(
        ids,
        np.asarray(S.values, dtype=float)[si],
        text.L[ti],
        text.H[ti],
        np.asarray(sentiment.r, dtype=float)[ri].reshape(-1, 1),
        spatial.P[pi],
        yv,
        list(S.column_names),
    )


# ---------------------------------------------------------------- regressor

@dataclass
class PriceModel:
    net: DenseNet
    input_mean: np.ndarray
    input_std: np.ndarray
    loss_curve: list[float]
    layout: str = ""
    target: TargetTransform | None = None

    def to_dict(self):
        return {
            "layout": self.layout,
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_transform": self.target.to_dict() if self.target else None,
            "loss_curve": list(self.loss_curve),
            "network": self.net.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        t = d.get("target_transform")
        return cls(
            DenseNet.from_dict(d["network"]),
            np.array(d["input_mean"], dtype=float),
            np.array(d["input_std"], dtype=float),
            list(d["loss_curve"]),
            d.get("layout", ""),
            TargetTransform(t["mean"], t["std"]) if t else None,
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def train_price_model(X, y, config: TrainConfig | None = None, hidden_dims=HIDDEN_DIMS,
                      layout="", target=None) -> PriceModel:
    """Mini-batch SGD on half-MSE; inputs are standardized with training statistics.

    ``loss_curve[e]`` is the sample-weighted mean batch loss seen during epoch ``e``.
    """
    cfg = config or TrainConfig()
    X = np.asarray(getattr(X, "M", X), dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    n = X.shape[0]
    if n != y.shape[0]:
        raise DimensionMismatch("X and y row counts differ")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    Xs = (X - mean) / std

    rng = np.random.default_rng(cfg.seed)
    dims = [X.shape[1], *hidden_dims, 1]
    net = DenseNet.build(dims, ["relu"] * len(hidden_dims) + ["identity"], rng)
    batch = min(cfg.batch_size, n)
    curve = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            out, cache = forward(net, Xs[idx])
            loss, grad = half_mse(out, y[idx])
            if not math.isfinite(loss):
                raise NonFinite(f"regressor loss non-finite at epoch {epoch + 1}")
            sgd_step(net, backward(net, cache, grad), cfg.learning_rate)
            total += loss * idx.size
        curve.append(total / n)
    return PriceModel(net, mean, std, curve, layout, target)


def predict(model: PriceModel, X, layout=None):
    """Returns ``(yhat on the transformed scale, price in currency or None)``."""
    if layout is not None and model.layout and layout != model.layout:
        raise DimensionMismatch(f"column layout {layout!r} != trained layout {model.layout!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.input_mean.shape[0]:
        raise DimensionMismatch(f"expected {model.input_mean.shape[0]} columns, got {X.shape[1]}")
    yhat = forward(model.net, (X - model.input_mean) / model.input_std)[0][:, 0]
    price = model.target.inverse(yhat) if model.target is not None else None
    return yhat, price


def predict_bundle(model: PriceModel, bundle: FeatureBundle, variant="STP"):
    return predict(model, bundle.matrix(variant), layout=bundle.layout(variant))
