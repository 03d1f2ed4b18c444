"""Listing-POI proximity graphs and SDNE listing embeddings.

Each POI category gives a bipartite graph: a listing is linked to every
POI of that category within ``radius_km``, with similarity weight
``1 - d / radius_km``. A listing's adjacency row (one column per POI,
sorted by poi_id) is the SDNE input; the encoder bottleneck is its
embedding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus_io import CATEGORIES
from .errors import NonFinite
from .neural import DenseNet, backward, forward

EARTH_RADIUS_KM = 6371.004
EDGE_EPS = 1e-6


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float


def _latlon(p):
    if isinstance(p, GeoPoint):
        return p.latitude, p.longitude
    if hasattr(p, "latitude"):
        return p.latitude, p.longitude
    return p[0], p[1]


def haversine_km(a, b) -> float:
    """Great-circle distance in km between two (lat, lon) points in degrees."""
    lat1, lon1 = _latlon(a)
    lat2, lon2 = _latlon(b)
    return float(haversine_matrix(np.array([lat1]), np.array([lon1]), np.array([lat2]), np.array([lon2]))[0, 0])


def haversine_matrix(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Pairwise distances, shape ``(len(lat1), len(lat2))``."""
    p1 = np.radians(np.asarray(lat1, dtype=float))[:, None]
    p2 = np.radians(np.asarray(lat2, dtype=float))[None, :]
    dlat = p2 - p1
    dlon = np.radians(np.asarray(lon2, dtype=float))[None, :] - np.radians(np.asarray(lon1, dtype=float))[:, None]
    h = np.sin(dlat / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlon / 2.0) ** 2
    h = np.clip(h, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))


# ---------------------------------------------------------------- graphs

@dataclass
class SpatialGraph:
    category: str
    listing_ids: list[str]
    poi_ids: list[str]
    distance_km: np.ndarray  # n_listings x n_pois, inf where there is no edge
    adjacency: np.ndarray    # similarity weights, 0 where there is no edge
    radius_km: float = 1.0

    @property
    def isolated(self) -> np.ndarray:
        return ~(self.adjacency > 0).any(axis=1)

    def edges(self):
        rows, cols = np.nonzero(self.adjacency)
        for i, j in zip(rows, cols):
            yield self.listing_ids[i], self.poi_ids[j], float(self.distance_km[i, j]), float(self.adjacency[i, j])

    def save_edges(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("listing_id\tpoi_id\tdistance_km\tweight\n")
            for lid, pid, d, w in self.edges():
                fh.write(f"{lid}\t{pid}\t{d!r}\t{w!r}\n")


def load_graph_edges(path, category, listing_ids, poi_ids, radius_km=1.0) -> SpatialGraph:
    li = {lid: i for i, lid in enumerate(listing_ids)}
    pj = {pid: j for j, pid in enumerate(poi_ids)}
    dist = np.full((len(listing_ids), len(poi_ids)), np.inf)
    adj = np.zeros((len(listing_ids), len(poi_ids)))
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            lid, pid, d, w = line.rstrip("\n").split("\t")
            dist[li[lid], pj[pid]] = float(d)
            adj[li[lid], pj[pid]] = float(w)
    return SpatialGraph(category, list(listing_ids), list(poi_ids), dist, adj, radius_km)


def build_spatial_graph(listings, pois, category, radius_km=1.0) -> SpatialGraph:
    """Edges to every POI of ``category`` within ``radius_km`` (inclusive)."""
    pois = sorted((p for p in pois if p.category == category), key=lambda p: p.poi_id)
    listings = list(listings)
    lat1 = [r.latitude for r in listings]
    lon1 = [r.longitude for r in listings]
    if pois:
        d = haversine_matrix(lat1, lon1, [p.latitude for p in pois], [p.longitude for p in pois])
    else:
        d = np.zeros((len(listings), 0))
    within = d <= radius_km
    w = np.where(within, np.clip(1.0 - d / radius_km, EDGE_EPS, 1.0), 0.0)
    return SpatialGraph(
        category=category,
        listing_ids=[r.listing_id for r in listings],
        poi_ids=[p.poi_id for p in pois],
        distance_km=np.where(within, d, np.inf),
        adjacency=w,
        radius_km=radius_km,
    )


# ---------------------------------------------------------------- SDNE

def listing_similarity(adjacency) -> np.ndarray:
    """Listing-listing first-order weights: cosine similarity of POI rows, zero diagonal."""
    A = np.asarray(adjacency, dtype=float)
    norms = np.sqrt((A * A).sum(axis=1))
    safe = np.where(norms > 0, norms, 1.0)
    An = A / safe[:, None]
    S = An @ An.T
    np.fill_diagonal(S, 0.0)
    return S


@dataclass
class SdneModel:
    encoder: DenseNet
    decoder: DenseNet
    loss_history: list[float] = field(default_factory=list)
    recon_history: list[float] = field(default_factory=list)

    @property
    def embed_dim(self):
        return self.encoder.out_dim

    def embed(self, rows) -> np.ndarray:
        return forward(self.encoder, np.atleast_2d(np.asarray(rows, dtype=float)))[0]

    def to_dict(self):
        return {"encoder": self.encoder.to_dict(), "decoder": self.decoder.to_dict(),
                "loss_history": list(self.loss_history), "recon_history": list(self.recon_history)}


def build_sdne(in_dim, embed_dim=16, hidden_dims=(64,), seed=0) -> SdneModel:
    rng = np.random.default_rng(seed)
    enc_dims = [in_dim, *hidden_dims, embed_dim]
    dec_dims = enc_dims[::-1]
    encoder = DenseNet.build(enc_dims, "sigmoid", rng)
    decoder = DenseNet.build(dec_dims, "sigmoid", rng)
    return SdneModel(encoder, decoder)


def sdne_loss(model: SdneModel, X, S, beta=5.0, alpha_1st=0.05, nu=1e-4, with_grads=True):
    """Full SDNE loss and gradients (encoder grads followed by decoder grads).

    ``sum_i ||(xhat_i - x_i) * b_i||^2 + alpha_1st * sum_ij s_ij ||y_i - y_j||^2
    + nu/2 * sum ||W||^2`` with ``b_ij = beta`` on nonzero entries, else 1.
    Returns ``(total, reconstruction, grads)``.
    """
    X = np.asarray(X, dtype=float)
    B = np.where(X != 0, beta, 1.0)
    Y, enc_cache = forward(model.encoder, X)
    Xh, dec_cache = forward(model.decoder, Y)
    R = (Xh - X) * B
    recon = float((R * R).sum())
    LY = S.sum(axis=1)[:, None] * Y - S @ Y  # graph Laplacian times Y
    first = 2.0 * float(np.sum(Y * LY))
    weights = [l.weight for l in model.encoder.layers + model.decoder.layers]
    reg = 0.5 * sum(float((W * W).sum()) for W in weights)
    total = recon + alpha_1st * first + nu * reg
    if not with_grads:
        return total, recon, None

    dXh = 2.0 * R * B
    dec_grads, dY = backward(model.decoder, dec_cache, dXh, input_grad=True)
    dY = dY + alpha_1st * 4.0 * LY
    enc_grads = backward(model.encoder, enc_cache, dY)
    grads = enc_grads + dec_grads
    for k in range(0, len(grads), 2):  # weight entries; biases are not regularized
        grads[k] = grads[k] + nu * (model.encoder.layers + model.decoder.layers)[k // 2].weight
    return total, recon, grads


def sdne_parameters(model: SdneModel):
    return model.encoder.parameters() + model.decoder.parameters()


def train_sdne(adjacency, embed_dim=16, hidden_dims=(64,), alpha_1st=0.05, beta=5.0,
               nu=1e-4, epochs=50, lr=0.01, seed=0) -> SdneModel:
    """Full-batch gradient descent on every listing row.

    The loss recorded for an epoch is the one evaluated before that
    epoch's update, so ``loss_history[0]`` is the untrained loss.
    """
    X = np.asarray(getattr(adjacency, "adjacency", adjacency), dtype=float)
    if X.shape[1] == 0 or not (X > 0).any():
        raise ValueError("graph has no listing with a nonzero adjacency row")
    model = build_sdne(X.shape[1], embed_dim, hidden_dims, seed)
    S = listing_similarity(X)
    params = sdne_parameters(model)
    for epoch in range(epochs):
        total, recon, grads = sdne_loss(model, X, S, beta, alpha_1st, nu)
        if not math.isfinite(total):
            raise NonFinite(f"SDNE loss became non-finite at epoch {epoch + 1} (last={model.loss_history[-1:]})")
        model.loss_history.append(total)
        model.recon_history.append(recon)
        for p, g in zip(params, grads):
            p -= lr * g
    return model


# ---------------------------------------------------------------- features

@dataclass
class SpatialFeatures:
    listing_ids: list[str]
    P: np.ndarray
    isolated: np.ndarray  # n x 8 flags, True where a listing has no in-radius POI
    block_dim: int = 16

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(["listing_id"] + [f"p{j}" for j in range(self.P.shape[1])]) + "\n")
            for lid, row in zip(self.listing_ids, self.P):
                fh.write("\t".join([lid] + [repr(float(v)) for v in row]) + "\n")

    @classmethod
    def load(cls, path, block_dim=16):
        with open(path, encoding="utf-8") as fh:
            width = len(fh.readline().split("\t")) - 1
            ids, rows = [], []
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                ids.append(parts[0])
                rows.append([float(v) for v in parts[1:]])
        P = np.array(rows, dtype=float).reshape(len(ids), width)
        return cls(ids, P, np.zeros((len(ids), len(CATEGORIES)), dtype=bool), block_dim)


@dataclass
class SpatialConfig:
    radius_km: float = 1.0
    embed_dim: int = 16
    hidden_dims: tuple = (64,)
    alpha_1st: float = 0.05
    beta: float = 5.0
    nu: float = 1e-4
    epochs: int = 50
    lr: float = 0.01
    seed: int = 0


def embed_spatial(listings, pois, config: SpatialConfig | None = None, graphs=None):
    """Per-category SDNE embeddings concatenated in the fixed category order.

    Returns ``(SpatialFeatures, {category: SdneModel})``. Categories without
    POIs contribute zero blocks.
    """
    cfg = config or SpatialConfig()
    listings = list(listings)
    n, dim = len(listings), cfg.embed_dim
    P = np.zeros((n, dim * len(CATEGORIES)))
    isolated = np.ones((n, len(CATEGORIES)), dtype=bool)
    models = {}
    for c, cat in enumerate(CATEGORIES):
        g = graphs[cat] if graphs is not None else build_spatial_graph(listings, pois, cat, cfg.radius_km)
        if g.adjacency.shape[1] == 0 or not (g.adjacency > 0).any():
            continue
        model = train_sdne(g.adjacency, dim, cfg.hidden_dims, cfg.alpha_1st, cfg.beta,
                           cfg.nu, cfg.epochs, cfg.lr, seed=[cfg.seed, c])
        P[:, c * dim:(c + 1) * dim] = model.embed(g.adjacency)
        isolated[:, c] = g.isolated
        models[cat] = model
    return SpatialFeatures([r.listing_id for r in listings], P, isolated, dim), models
