"""Seeded synthetic city: listings, reviews and POIs with a known price function.

    log(price) = base + stat_w*f_stat + text_w*f_text + spatial_w*f_spatial + noise

Each latent score has unit variance across listings. ``f_stat`` is a
linear form of a few generated stat columns, ``f_text`` controls how many
upscale words appear in descriptions and how positive the reviews are,
and ``f_spatial`` is a weighted sum of log(1 + POIs within 1 km) over
the categories.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .corpus_io import (
    CATEGORIES,
    ListingRecord,
    ListingTable,
    PoiRecord,
    PoiTable,
    ReviewDoc,
    ReviewTable,
    write_listings,
    write_pois,
    write_reviews,
)
from .spatial import haversine_matrix

CENTER = (39.9042, 116.4074)
KM_PER_DEG_LAT = 111.32

FILLER = (
    "apartment located near subway station street floor building kitchen living room "
    "bedroom wifi tv city center walk minutes park mall restaurants shops bus line "
    "quiet area residential window desk sofa shower towels washer heating air "
    "conditioning elevator neighborhood market coffee metro airport taxi check "
    "guests welcome stay nights family friends travel business easy access"
).split()
UPSCALE = ("luxury spacious elegant renovated designer panoramic premium stylish "
           "skyline balcony marble gourmet").split()
BASIC = "basic compact simple small budget shared older tiny plain cheap narrow dim".split()
HOST_FILLER = (
    "i am love travel work teacher engineer student enjoy meeting people cooking music "
    "reading hiking photography born live beijing speak english chinese happy help"
).split()
HOST_GOOD = "attentive experienced responsive professional".split()
HOST_BAD = "busy occasional slow new".split()

REVIEW_NOUNS = "room apartment place bed bathroom kitchen flat stay location view".split()
POS_ADJ = ("clean spacious cozy comfortable quiet beautiful lovely bright modern "
           "charming wonderful great perfect excellent amazing").split()
NEG_ADJ = ("dirty cramped noisy uncomfortable smelly broken dark shabby awful "
           "terrible disappointing bad poor moldy filthy").split()
POS_TAIL = ["host was friendly and helpful", "would definitely stay again", "highly recommend",
            "check in was easy", "everything as described", "we enjoyed our stay"]
NEG_TAIL = ["host was rude and unhelpful", "would never stay again", "do not recommend",
            "check in was a mess", "nothing like the photos", "we left early"]


@dataclass
class SynthConfig:
    n_listings: int = 2000
    n_pois: int = 400
    min_reviews: int = 1
    max_reviews: int = 10
    seed: int = 42
    stat_w: float = 0.6
    text_w: float = 0.5
    spatial_w: float = 0.5
    noise_sd: float = 0.25
    base_price: float = 400.0
    n_hotspots: int = 6
    extent_km: float = 10.0
    radius_km: float = 1.0
    n_noise_stats: int = 10
    start_date: str = "2017-01-01"
    end_date: str = "2019-06-30"

    def __post_init__(self):
        for name in ("stat_w", "text_w", "spatial_w", "noise_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.min_reviews > self.max_reviews:
            raise ValueError("min_reviews exceeds max_reviews")


@dataclass
class SynthDataset:
    listings: ListingTable
    reviews: ReviewTable
    pois: PoiTable
    latent: dict[str, np.ndarray]
    config: SynthConfig

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "listings": out / "listings.csv",
            "reviews": out / "reviews.csv",
            "pois": out / "pois.csv",
            "latent_scores": out / "latent_scores.csv",
        }
        write_listings(self.listings, paths["listings"])
        write_reviews(self.reviews, paths["reviews"])
        write_pois(self.pois, paths["pois"])
        keys = ["f_stat", "f_text", "f_spatial", "noise", "log_price"]
        with open(paths["latent_scores"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["listing_id"] + keys)
            for i, r in enumerate(self.listings.records):
                w.writerow([r.listing_id] + [repr(float(self.latent[k][i])) for k in keys])
        return paths


def _zscore(x):
    x = np.asarray(x, dtype=float)
    s = x.std()
    return (x - x.mean()) / s if s > 0 else np.zeros_like(x)


def _offset(rng, n, spread_km, centers_km, weights=None):
    """(north_km, east_km) samples: gaussian blobs around centres."""
    k = rng.choice(len(centers_km), size=n, p=weights)
    return centers_km[k] + rng.normal(0.0, spread_km, size=(n, 2))


def _to_latlon(km):
    lat = CENTER[0] + km[:, 0] / KM_PER_DEG_LAT
    lon = CENTER[1] + km[:, 1] / (KM_PER_DEG_LAT * np.cos(np.radians(CENTER[0])))
    return lat, lon


def _points(rng, n, hotspots, weights, spread_km, uniform_frac, extent):
    n_uni = int(round(n * uniform_frac))
    uni = rng.uniform(-extent, extent, size=(n_uni, 2))
    blob = _offset(rng, n - n_uni, spread_km, hotspots, weights)
    km = np.vstack([blob, uni])
    return km[rng.permutation(n)]


def synth_generate(config: SynthConfig | None = None) -> SynthDataset:
    cfg = config or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_listings

    # ---- geography
    hotspots = rng.uniform(-0.7 * cfg.extent_km, 0.7 * cfg.extent_km, size=(cfg.n_hotspots, 2))
    pois = []
    for c, cat in enumerate(CATEGORIES):
        w = rng.dirichlet(np.ones(cfg.n_hotspots))
        km = _points(rng, cfg.n_pois, hotspots, w, 1.2, 0.4, cfg.extent_km)
        lat, lon = _to_latlon(km)
        pois += [PoiRecord(f"P{c}{j:05d}", cat, float(a), float(b)) for j, (a, b) in enumerate(zip(lat, lon))]
    lkm = _points(rng, n, hotspots, None, 2.5, 0.5, cfg.extent_km)
    llat, llon = _to_latlon(lkm)

    counts = np.zeros((n, len(CATEGORIES)))
    for c, cat in enumerate(CATEGORIES):
        sub = [p for p in pois if p.category == cat]
        d = haversine_matrix(llat, llon, [p.latitude for p in sub], [p.longitude for p in sub])
        counts[:, c] = (d <= cfg.radius_km).sum(axis=1)
    cat_coef = rng.uniform(0.5, 1.5, size=len(CATEGORIES))
    f_spatial = _zscore(np.log1p(counts) @ cat_coef)

    # ---- statistical attributes
    bedrooms = rng.integers(1, 5, size=n)
    bathrooms = np.minimum(bedrooms, rng.integers(1, 4, size=n))
    accommodates = 2 * bedrooms + rng.integers(0, 3, size=n)
    rating = np.clip(rng.normal(92, 5, size=n), 60, 100).round(0)
    superhost = rng.random(n) < 0.3
    deposit = rng.gamma(2.0, 500.0, size=n).round(0)
    guests = rng.integers(1, 5, size=n)
    response = rng.integers(50, 101, size=n)
    total_listings = rng.integers(1, 30, size=n)
    min_nights = rng.integers(1, 8, size=n)
    noise_cols = rng.normal(0.0, 1.0, size=(n, cfg.n_noise_stats))
    square_feet = rng.normal(600, 150, size=n).round(0)

    f_stat = _zscore(0.8 * _zscore(bedrooms) + 0.5 * _zscore(bathrooms) + 0.3 * _zscore(accommodates)
                     + 0.4 * _zscore(rating) + 0.3 * _zscore(superhost) + 0.3 * _zscore(deposit))

    # ---- text latent
    f_text = _zscore(rng.normal(0.0, 1.0, size=n))
    noise = rng.normal(0.0, cfg.noise_sd, size=n)
    log_price = (np.log(cfg.base_price) + cfg.stat_w * f_stat + cfg.text_w * f_text
                 + cfg.spatial_w * f_spatial + noise)
    price = np.exp(log_price)

    stat_names = ["host_is_superhost", "host_response_rate", "host_total_listings_count",
                  "bedrooms", "bathrooms", "accommodates", "guests_included", "security_deposit",
                  "review_scores_rating", "minimum_nights", "square_feet", "has_availability"]
    stat_names += [f"attr_{k:02d}" for k in range(cfg.n_noise_stats)]

    d0 = dt.date.fromisoformat(cfg.start_date)
    span = (dt.date.fromisoformat(cfg.end_date) - d0).days
    first_days = rng.integers(0, span + 1, size=n)

    listings, reviews = [], []
    rid = 0
    for i in range(n):
        lid = f"L{i:05d}"
        p_up = expit(1.5 * f_text[i])
        desc = list(rng.choice(FILLER, size=18))
        desc += [rng.choice(UPSCALE) if rng.random() < p_up else rng.choice(BASIC) for _ in range(6)]
        desc = [desc[k] for k in rng.permutation(len(desc))]
        if rng.random() < 0.05:
            host = []
        else:
            host = list(rng.choice(HOST_FILLER, size=10))
            host += [rng.choice(HOST_GOOD) if rng.random() < p_up else rng.choice(HOST_BAD) for _ in range(2)]

        stats = [
            float(superhost[i]), response[i] / 100.0, float(total_listings[i]), float(bedrooms[i]),
            float(bathrooms[i]), float(accommodates[i]), float(guests[i]), float(deposit[i]),
            float(rating[i]), float(min_nights[i]), float(square_feet[i]), 1.0,
            *noise_cols[i].tolist(),
        ]
        # sparse gaps; square_feet is mostly missing and gets dropped downstream
        for j in range(len(stats)):
            missing_p = 0.7 if stat_names[j] == "square_feet" else 0.03
            if j != 11 and rng.random() < missing_p:
                stats[j] = float("nan")

        first = d0 + dt.timedelta(days=int(first_days[i]))
        listings.append(ListingRecord(
            listing_id=lid,
            host_id=f"H{int(rng.integers(0, n // 2)):05d}",
            first_review_date=first,
            latitude=float(llat[i]),
            longitude=float(llon[i]),
            price=round(float(price[i]), 2),
            raw_stats=tuple(stats),
            description_text=" ".join(desc).capitalize() + ".",
            host_about_text=(" ".join(host).capitalize() + ".") if host else "",
        ))

        p_pos = expit(2.0 * f_text[i])
        for _ in range(int(rng.integers(cfg.min_reviews, cfg.max_reviews + 1))):
            good = rng.random() < p_pos
            adj = POS_ADJ if good else NEG_ADJ
            tail = POS_TAIL if good else NEG_TAIL
            text = (f"The {rng.choice(REVIEW_NOUNS)} was {rng.choice(adj)} and {rng.choice(adj)}, "
                    f"{tail[int(rng.integers(len(tail)))]}.")
            day = first + dt.timedelta(days=int(rng.integers(0, 365)))
            reviews.append(ReviewDoc(f"R{rid:07d}", lid, text, day))
            rid += 1

    latent = {"f_stat": f_stat, "f_text": f_text, "f_spatial": f_spatial, "noise": noise,
              "log_price": log_price, "poi_counts": counts}
    return SynthDataset(
        ListingTable(tuple(listings), tuple(stat_names)),
        ReviewTable(tuple(reviews)),
        PoiTable(tuple(pois)),
        latent,
        cfg,
    )


def synth_config_dict(cfg: SynthConfig) -> dict:
    return asdict(cfg)
