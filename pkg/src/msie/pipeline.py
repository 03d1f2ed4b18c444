"""File-based pipeline stages with a content-hashed manifest.

Every stage reads declared artifacts from the output directory (or the
configured input paths) and writes only into it. Missing upstream
artifacts are produced by running the owning stage first.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import re
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import corpus_io as cio
from .config import PipelineConfig, derive_seed
from .errors import ConfigError, EmptySelection
from .evaluation import MetricReport, run_ablation, write_reports
from .fusion import FeatureBundle, PriceModel, fuse, predict_bundle, train_price_model
from .neural import TrainConfig
from .sentiment import SentimentVector, listing_sentiment, load_labeled_corpus, train_nb
from .spatial import SpatialConfig, SpatialFeatures, build_spatial_graph, load_graph_edges, embed_spatial
from .stat_features import (
    StatFeatureMatrix,
    TargetTransform,
    alpha_grid,
    assemble_stat_matrix,
    fit_standardizer,
    lasso_cv,
    pvalue_rank,
    select_features,
)
from .synth import synth_generate
from .text_embedding import TextFeatures, build_vocab, embed_listing_texts, tokenize, train_cbow

log = logging.getLogger(__name__)

STAGES = ("synth", "ingest", "stats", "select-features", "train-text", "sentiment", "build-graphs",
          "embed-spatial", "fuse", "train", "evaluate", "ablate", "predict")


def slug(category: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", category.lower()).strip("_")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _variant_suffix(v):
    return "" if v == "STP" else f"_{v}"


class Pipeline:
    def __init__(self, config: PipelineConfig, out_dir):
        self.cfg = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self._inputs: list[Path] = []
        self._outputs: list[Path] = []

    # ------------------------------------------------------------ plumbing

    def p(self, *parts) -> Path:
        return self.out.joinpath(*parts)

    def _input_paths(self):
        paths = self.cfg.paths
        data = self.p("data")
        return (
            Path(paths.listings) if paths.listings else data / "listings.csv",
            Path(paths.reviews) if paths.reviews else data / "reviews.csv",
            Path(paths.pois) if paths.pois else data / "pois.csv",
        )

    def seed(self, stage):
        return derive_seed(self.cfg.seed, stage)

    def expected_outputs(self, stage, variant=None) -> list[Path]:
        v = variant or self.cfg.variant
        sfx = _variant_suffix(v)
        table = {
            "synth": [self.p("data", n) for n in ("listings.csv", "reviews.csv", "pois.csv", "latent_scores.csv")],
            "ingest": [self.p("split.csv"), self.p("ingest_report.json")],
            "stats": [self.p("dataset_summary.json")],
            "select-features": [self.p("stat_features.tsv"), self.p("stat_model.json"), self.p("target.csv")],
            "train-text": [self.p("word_vectors.tsv"), self.p("text_features.tsv")],
            "sentiment": [self.p("sentiment.csv")],
            "build-graphs": [self.p("graphs", f"graph_{slug(c)}.tsv") for c in cio.CATEGORIES],
            "embed-spatial": [self.p("spatial_features.tsv"), self.p("sdne_report.json")],
            "fuse": [self.p("fused.tsv")],
            "train": [self.p(f"model{sfx}.json"), self.p(f"loss_curve{sfx}.csv")],
            "evaluate": [self.p(f"metrics{sfx}.json")],
            "ablate": [self.p("ablation_report.csv"), self.p("ablation_report.json")],
            "predict": [self.p(f"predictions{sfx}.csv")],
        }
        return table[stage]

    def _need(self, stage, variant=None):
        """Run ``stage`` unless all of its outputs already exist."""
        if stage == "synth" and any(self.cfg.paths.__dict__[k] for k in ("listings", "reviews", "pois")):
            return
        if not all(p.exists() for p in self.expected_outputs(stage, variant)):
            log.info("running upstream stage %s", stage)
            self.run(stage, variant=variant)

    def _use(self, *paths):
        for path in paths:
            self._inputs.append(Path(path))
        return paths[0] if len(paths) == 1 else paths

    def _rel(self, path: Path) -> str:
        try:
            return Path(path).resolve().relative_to(self.out.resolve()).as_posix()
        except ValueError:
            return str(path)

    def _record(self, stage, variant):
        manifest_path = self.p("manifest.json")
        manifest = _read_json(manifest_path) if manifest_path.exists() else {"stages": {}}
        key = stage if stage not in ("train", "evaluate", "predict") else f"{stage}:{variant}"
        manifest["stages"][key] = {
            "seed": self.seed(stage),
            "global_seed": self.cfg.seed,
            "config_hash": self.cfg.digest(),
            "inputs": {self._rel(p): sha256_file(p) for p in sorted(set(self._inputs))},
            "outputs": {self._rel(p): sha256_file(p) for p in sorted(set(self._outputs))},
        }
        _write_json(manifest_path, manifest)

    def run(self, stage, variant=None):
        if stage not in STAGES:
            raise ConfigError(f"unknown stage {stage!r}")
        v = variant or self.cfg.variant
        if v not in ("S", "ST", "STP"):
            raise ConfigError(f"unknown variant {v!r}")
        saved = self._inputs, self._outputs
        self._inputs, self._outputs = [], []
        try:
            getattr(self, "stage_" + stage.replace("-", "_"))(v)
            self._outputs = self.expected_outputs(stage, v)
            self._record(stage, v)
        finally:
            self._inputs, self._outputs = saved

    def run_all(self):
        for stage in STAGES:
            if stage == "synth" and any(self.cfg.paths.__dict__[k] for k in ("listings", "reviews", "pois")):
                continue
            if stage in ("train", "evaluate", "predict"):
                for v in self.cfg.ablation.variants:
                    self.run(stage, variant=v)
            else:
                self.run(stage)

    # ------------------------------------------------------------ loaders

    def listings(self) -> cio.ListingTable:
        self._need("synth")
        return cio.parse_listings(self._use(self._input_paths()[0]))

    def reviews(self) -> cio.ReviewTable:
        self._need("synth")
        return cio.parse_reviews(self._use(self._input_paths()[1]))

    def pois(self) -> cio.PoiTable:
        self._need("synth")
        return cio.parse_pois(self._use(self._input_paths()[2]))

    def split(self):
        self._need("ingest")
        with open(self._use(self.p("split.csv")), newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        train = [r["listing_id"] for r in rows if r["split"] == "train"]
        test = [r["listing_id"] for r in rows if r["split"] == "test"]
        return train, test

    def bundle(self) -> FeatureBundle:
        self._need("fuse")
        return FeatureBundle.load(self._use(self.p("fused.tsv")))

    def target(self) -> TargetTransform:
        self._need("select-features")
        d = _read_json(self._use(self.p("stat_model.json")))["target_transform"]
        return TargetTransform(d["mean"], d["std"])

    def train_config(self, variant=None) -> TrainConfig:
        r = self.cfg.regressor
        return TrainConfig(r.epochs, r.batch_size, r.learning_rate, self.seed("train"), r.shuffle)

    # ------------------------------------------------------------ stages

    def stage_synth(self, v):
        scfg = self.cfg.synth
        scfg = type(scfg)(**{**asdict(scfg), "seed": self.seed("synth")})
        synth_generate(scfg).write(self.p("data"))

    def stage_ingest(self, v):
        listings = self.listings()
        reviews = self.reviews()
        pois = self.pois()
        train, test = cio.temporal_split(listings, self.cfg.split.ratio)
        with open(self.p("split.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["listing_id", "first_review", "split"])
            for part, table in (("train", train), ("test", test)):
                for r in table:
                    w.writerow([r.listing_id, r.first_review_date.isoformat(), part])
        known = set(listings.ids)
        orphan = sum(1 for r in reviews if r.listing_id not in known)
        _write_json(self.p("ingest_report.json"), {
            "n_listings": len(listings),
            "n_train": len(train),
            "n_test": len(test),
            "rejected_listing_rows": [list(x) for x in listings.rejected],
            "dropped_empty_reviews": reviews.n_dropped,
            "orphan_reviews": orphan,
            "n_pois": len(pois),
            "stat_columns": list(listings.stat_names),
        })

    def stage_stats(self, v):
        summary = cio.dataset_stats(self.listings(), self.reviews(), self.pois())
        _write_json(self.p("dataset_summary.json"), summary.to_dict())

    def stage_select_features(self, v):
        listings = self.listings()
        train_ids, test_ids = self.split()
        by_id = {r.listing_id: r for r in listings}
        train_tab = listings.subset(by_id[i] for i in train_ids)
        all_tab = listings.subset(by_id[i] for i in train_ids + test_ids)
        X_train, (X_all,) = assemble_stat_matrix(train_tab, [all_tab], self.cfg.lasso.max_missing)
        scaler = fit_standardizer(X_train)
        Z_train, Z_all = scaler.transform(X_train), scaler.transform(X_all)
        target = TargetTransform.fit([r.price for r in train_tab])
        y_train = target.forward([r.price for r in train_tab])

        lc = self.cfg.lasso
        info = {"method": lc.method, "empty_selection_fallback": False}
        if lc.method == "lasso":
            grid = alpha_grid(Z_train.values, y_train, lc.n_alphas, lc.alpha_ratio)
            best, model, cv = lasso_cv(Z_train, y_train, grid, lc.folds, lc.tol, lc.max_iter)
            info.update(model.to_dict())
            info["cv_mse"] = {repr(a): m for a, m in cv.items()}
            try:
                selected = select_features(model, Z_all)
            except EmptySelection:
                info["empty_selection_fallback"] = True
                selected = Z_all
        elif lc.method == "pvalue":
            ranked = pvalue_rank(Z_train, y_train, min(lc.top_k, len(Z_train.column_names)))
            info["pvalues"] = {n: p for n, p in ranked}
            keep = {n for n, _ in ranked}
            selected = Z_all.take_columns([j for j, n in enumerate(Z_all.column_names) if n in keep])
        else:
            missing = [c for c in lc.manual_columns if c not in Z_all.column_names]
            if missing or not lc.manual_columns:
                raise ConfigError(f"manual_columns not usable: {missing or 'empty list'}")
            selected = Z_all.take_columns([Z_all.column_names.index(c) for c in lc.manual_columns])
        info["selected"] = list(selected.column_names)
        info["scaler"] = scaler.to_dict()
        info["target_transform"] = target.to_dict()
        _write_json(self.p("stat_model.json"), info)

        with open(self.p("stat_features.tsv"), "w", encoding="utf-8") as fh:
            fh.write("\t".join(["listing_id"] + selected.column_names) + "\n")
            for lid, row in zip(selected.listing_ids, selected.values):
                fh.write("\t".join([lid] + [repr(float(x)) for x in row]) + "\n")
        with open(self.p("target.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["listing_id", "price", "y"])
            for r in all_tab:
                w.writerow([r.listing_id, repr(r.price), repr(float(target.forward([r.price])[0]))])

    def stage_train_text(self, v):
        listings = self.listings()
        c = self.cfg.cbow
        if self.cfg.paths.text_corpus:
            with open(self._use(Path(self.cfg.paths.text_corpus)), encoding="utf-8") as fh:
                corpus = [tokenize(line) for line in fh]
        else:
            corpus = []
            for r in listings:
                corpus += [tokenize(r.description_text), tokenize(r.host_about_text)]
        corpus = [doc for doc in corpus if doc]
        vocab = build_vocab(corpus, c.min_count)
        wv = train_cbow(corpus, vocab, c.dim, c.window, c.negatives, c.epochs, c.learning_rate,
                        c.min_learning_rate, seed=self.seed("train-text"))
        wv.save(self.p("word_vectors.tsv"))
        embed_listing_texts(listings, wv).save(self.p("text_features.tsv"))

    def stage_sentiment(self, v):
        listings = self.listings()
        reviews = self.reviews()
        path = self.cfg.paths.labeled_corpus
        if path:
            self._use(Path(path))
        model = train_nb(load_labeled_corpus(path), self.cfg.nb.smoothing)
        grouped = {k: [r.text for r in rs] for k, rs in reviews.by_listing().items()}
        listing_sentiment(model, grouped, listings.ids).save(self.p("sentiment.csv"))

    def stage_build_graphs(self, v):
        listings = self.listings()
        pois = self.pois()
        self.p("graphs").mkdir(exist_ok=True)
        for cat in cio.CATEGORIES:
            g = build_spatial_graph(listings, pois, cat, self.cfg.sdne.radius_km)
            g.save_edges(self.p("graphs", f"graph_{slug(cat)}.tsv"))

    def stage_embed_spatial(self, v):
        listings = self.listings()
        pois = self.pois()
        self._need("build-graphs")
        graphs = {}
        by_cat = pois.by_category()
        for cat in cio.CATEGORIES:
            poi_ids = sorted(p.poi_id for p in by_cat[cat])
            graphs[cat] = load_graph_edges(self._use(self.p("graphs", f"graph_{slug(cat)}.tsv")), cat,
                                           listings.ids, poi_ids, self.cfg.sdne.radius_km)
        s = self.cfg.sdne
        scfg = SpatialConfig(s.radius_km, s.embed_dim, tuple(s.hidden_dims), s.alpha_1st, s.beta, s.nu,
                             s.epochs, s.lr, self.seed("embed-spatial"))
        feats, models = embed_spatial(listings, pois, scfg, graphs=graphs)
        feats.save(self.p("spatial_features.tsv"))
        _write_json(self.p("sdne_report.json"), {
            cat: {"loss_first": m.loss_history[0], "loss_last": m.loss_history[-1],
                  "recon_first": m.recon_history[0], "recon_last": m.recon_history[-1],
                  "isolated_listings": int(feats.isolated[:, k].sum())}
            for k, cat in enumerate(cio.CATEGORIES) if (m := models.get(cat)) is not None
        })

    def stage_fuse(self, v):
        for stage in ("select-features", "train-text", "sentiment", "embed-spatial"):
            self._need(stage)
        with open(self._use(self.p("stat_features.tsv")), encoding="utf-8") as fh:
            names = fh.readline().rstrip("\n").split("\t")[1:]
            ids, rows = [], []
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                ids.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        S = StatFeatureMatrix(ids, np.array(rows).reshape(len(ids), len(names)), names)
        with open(self._use(self.p("target.csv")), newline="", encoding="utf-8") as fh:
            y = {r["listing_id"]: float(r["y"]) for r in csv.DictReader(fh)}
        text = TextFeatures.load(self._use(self.p("text_features.tsv")))
        sent = SentimentVector.load(self._use(self.p("sentiment.csv")))
        spatial = SpatialFeatures.load(self._use(self.p("spatial_features.tsv")))
        fuse(S, text, sent, spatial, y).save(self.p("fused.tsv"))

    def _train_test(self):
        bundle = self.bundle()
        train_ids, test_ids = self.split()
        return bundle.rows(train_ids), bundle.rows(test_ids)

    def stage_train(self, v):
        train, _ = self._train_test()
        target = self.target()
        model = train_price_model(train.matrix(v), train.y, self.train_config(), tuple(self.cfg.regressor.hidden_dims),
                                  layout=train.layout(v), target=target)
        sfx = _variant_suffix(v)
        model.save(self.p(f"model{sfx}.json"))
        with open(self.p(f"loss_curve{sfx}.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "loss"])
            for e, loss in enumerate(model.loss_curve, start=1):
                w.writerow([e, repr(loss)])

    def _model(self, v) -> PriceModel:
        self._need("train", v)
        return PriceModel.load(self._use(self.p(f"model{_variant_suffix(v)}.json")))

    def stage_evaluate(self, v):
        _, test = self._train_test()
        model = self._model(v)
        yhat, price = predict_bundle(model, test, v)
        rep = MetricReport.compute(f"MSIE-{v}", yhat, test.y, price, model.target.inverse(test.y))
        _write_json(self.p(f"metrics{_variant_suffix(v)}.json"), asdict(rep))

    def stage_ablate(self, v):
        train, test = self._train_test()
        cfg = self.train_config()
        reports, _ = run_ablation(train, test, tuple(self.cfg.ablation.variants), cfg, target=self.target())
        write_reports(reports, self.p("ablation_report.json"), self.p("ablation_report.csv"))

    def stage_predict(self, v):
        bundle = self.bundle()
        train_ids, _ = self.split()
        train_set = set(train_ids)
        model = self._model(v)
        yhat, price = predict_bundle(model, bundle, v)
        true_price = model.target.inverse(bundle.y)
        with open(self.p(f"predictions{_variant_suffix(v)}.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["listing_id", "split", "y", "y_pred", "price", "price_pred"])
            for i, lid in enumerate(bundle.listing_ids):
                w.writerow([lid, "train" if lid in train_set else "test", repr(float(bundle.y[i])),
                            repr(float(yhat[i])), repr(float(true_price[i])), repr(float(price[i]))])
