"""Regression metrics and the S / ST / STP ablation."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConstantTarget, LengthMismatch, MsieError
from .fusion import VARIANT_BLOCKS, predict_bundle, train_price_model
from .neural import TrainConfig

log = logging.getLogger(__name__)


def _pair(y_pred, y_true):
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    y_true = np.asarray(y_true, dtype=float).ravel()
    if y_pred.shape != y_true.shape:
        raise LengthMismatch(f"{y_pred.size} predictions vs {y_true.size} targets")
    if y_true.size == 0:
        raise LengthMismatch("empty input")
    return y_pred, y_true


def mae(y_pred, y_true) -> float:
    p, t = _pair(y_pred, y_true)
    return float(np.abs(p - t).mean())


def mse(y_pred, y_true) -> float:
    p, t = _pair(y_pred, y_true)
    d = p - t
    return float((d * d).mean())


def rmse(y_pred, y_true) -> float:
    return math.sqrt(mse(y_pred, y_true))


def r2(y_pred, y_true) -> float:
    p, t = _pair(y_pred, y_true)
    d = p - t
    c = t - t.mean()
    ss_tot = float(c @ c)
    if ss_tot == 0.0:
        raise ConstantTarget("R^2 is undefined for a constant target")
    return 1.0 - float(d @ d) / ss_tot


@dataclass
class MetricReport:
    variant: str
    n: int
    mae: float
    mse: float
    rmse: float
    r2: float
    mae_currency: float | None = None

    @classmethod
    def compute(cls, variant, y_pred, y_true, price_pred=None, price_true=None):
        m = mse(y_pred, y_true)
        rep = cls(variant, int(np.size(y_true)), mae(y_pred, y_true), m, math.sqrt(m), r2(y_pred, y_true))
        if price_pred is not None and price_true is not None:
            rep.mae_currency = mae(price_pred, price_true)
        return rep


def write_reports(reports, json_path=None, csv_path=None):
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump([asdict(r) for r in reports], fh, indent=2)
            fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variant", "mae", "mse", "rmse", "r2"])
            for r in reports:
                w.writerow([r.variant, repr(r.mae), repr(r.mse), repr(r.rmse), repr(r.r2)])


def run_ablation(train, test, variants=("S", "ST", "STP"), config: TrainConfig | None = None,
                 target=None):
    """Retrain the regressor on each variant's blocks and score it on ``test``.

    A failing variant is logged and skipped; the others still run. Returns
    ``(reports, models)``.
    """
    cfg = config or TrainConfig()
    reports, models = [], {}
    for v in variants:
        if v not in VARIANT_BLOCKS:
            raise ValueError(f"unknown variant {v!r}")
        try:
            model = train_price_model(train.matrix(v), train.y, replace(cfg), layout=train.layout(v),
                                      target=target)
            yhat, price = predict_bundle(model, test, v)
            price_true = target.inverse(test.y) if target is not None else None
            reports.append(MetricReport.compute(f"MSIE-{v}", yhat, test.y, price, price_true))
            models[v] = model
        except MsieError as exc:
            log.error("variant %s failed: %s", v, exc)
    return reports, models
