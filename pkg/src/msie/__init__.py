"""Multi-source information embedding for short-term rental price prediction."""

from .corpus_io import CATEGORIES, parse_listings, parse_pois, parse_reviews, temporal_split
from .evaluation import mae, mse, r2, rmse, run_ablation
from .fusion import FeatureBundle, fuse, predict, train_price_model
from .sentiment import listing_sentiment, score_review, train_nb
from .spatial import build_spatial_graph, embed_spatial, haversine_km, train_sdne
from .stat_features import fit_standardizer, lasso_cv, lasso_fit, pvalue_rank, select_features
from .synth import SynthConfig, synth_generate
from .text_embedding import build_vocab, embed_document, tokenize, train_cbow

__version__ = "0.1.0"
