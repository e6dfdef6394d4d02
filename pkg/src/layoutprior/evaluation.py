"""COCO-style detection evaluation, implemented from scratch.

Produces the standard 12-metric block: AP averaged over IoU thresholds
0.50:0.95, AP50, AP75, AP by object scale, and AR at detection caps
1/10/100 plus AR by scale. Precision is 101-point interpolated;
matching is greedy in descending score order. Crowd/ignore annotations
are not supported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import BBox, LayoutPriorError, iou
from .ingest import Corpus

SENTINEL = -1.0


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple = tuple(np.round(np.arange(0.5, 1.0, 0.05), 2))
    recall_points: tuple = tuple(np.round(np.linspace(0.0, 1.0, 101), 2))
    area_ranges: tuple = (
        ("all", 0.0, float("inf")),
        ("small", 0.0, 32.0 ** 2),
        ("medium", 32.0 ** 2, 96.0 ** 2),
        ("large", 96.0 ** 2, float("inf")),
    )
    max_dets: tuple = (1, 10, 100)


@dataclass(frozen=True)
class EvalReport:
    ap: float
    ap50: float
    ap75: float
    ap_small: float
    ap_medium: float
    ap_large: float
    ar1: float
    ar10: float
    ar100: float
    ar_small: float
    ar_medium: float
    ar_large: float
    per_class: dict = field(default_factory=dict)

    FIELDS = ("ap", "ap50", "ap75", "ap_small", "ap_medium", "ap_large",
              "ar1", "ar10", "ar100", "ar_small", "ar_medium", "ar_large")

    def to_dict(self, include_per_class: bool = True) -> dict:
        out = {k: getattr(self, k) for k in self.FIELDS}
        if include_per_class:
            out["per_class"] = {name: dict(block)
                                for name, block in self.per_class.items()}
        return out

    def to_table(self) -> str:
        header = ["AP", "AP50", "AP75", "APs", "APm", "APl",
                  "AR1", "AR10", "AR100", "ARs", "ARm", "ARl"]
        vals = [getattr(self, k) for k in self.FIELDS]
        row = ["{:6.3f}".format(v) if v >= 0 else "     -" for v in vals]
        return ("  ".join("{:>6}".format(h) for h in header) + "\n"
                + "  ".join(row))


def match(dets: List[Tuple[BBox, float]], gts: List[BBox], iou_t: float,
          max_dets: int) -> List[bool]:
    """Greedy score-ordered matching; returns TP/FP flag per kept detection.

    Detections are sorted by descending score (ties keep input order) and
    truncated to max_dets; each claims the unmatched ground truth of
    highest IoU provided it reaches the threshold.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i][1])
    order = order[:max_dets]
    taken = [False] * len(gts)
    flags = []
    for di in order:
        best, best_iou = -1, min(iou_t, 1.0 - 1e-10)
        for gi, g in enumerate(gts):
            if taken[gi]:
                continue
            v = iou(dets[di][0], g)
            if v >= best_iou and (best == -1 or v > best_iou):
                best, best_iou = gi, v
        if best >= 0:
            taken[best] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def precision_recall(flags: List[bool], n_gt: int,
                     recall_points: Optional[tuple] = None) -> Tuple[np.ndarray, float]:
    """101-point interpolated precision samples and their mean (AP).

    Flags must be in descending-score order. Returns (samples, ap);
    ap is the sentinel when n_gt == 0.
    """
    if recall_points is None:
        recall_points = EvalConfig().recall_points
    R = len(recall_points)
    if n_gt == 0:
        return np.zeros(R), SENTINEL
    if not flags:
        return np.zeros(R), 0.0
    tp = np.cumsum([1 if f else 0 for f in flags])
    fp = np.cumsum([0 if f else 1 for f in flags])
    rc = tp / n_gt
    pr = tp / np.maximum(tp + fp, 1)
    # Monotone-decreasing envelope from the right.
    for i in range(len(pr) - 1, 0, -1):
        if pr[i] > pr[i - 1]:
            pr[i - 1] = pr[i]
    samples = np.zeros(R)
    inds = np.searchsorted(rc, recall_points, side="left")
    for ri, pi in enumerate(inds):
        if pi < len(pr):
            samples[ri] = pr[pi]
    return samples, float(samples.mean())


def _group(corpus: Corpus):
    """(layout_id, class_id) -> list of components, preserving input order."""
    out: Dict[Tuple[str, int], list] = {}
    for lay in corpus.layouts:
        for comp in lay.components:
            out.setdefault((lay.id, comp.class_id), []).append(comp)
    return out


def _evaluate_unit(dts, gts, iou_thrs, area_lo, area_hi, max_det):
    """Per-(image, category) matching for one area slice.

    Returns (scores, tps, fps, n_positive) with detection arrays already
    truncated to max_det and filtered of ignored detections per
    threshold; ground truths outside the area range are ignored, and
    detections matched to them (or unmatched and themselves outside the
    range) count neither as TP nor FP.
    """
    T = len(iou_thrs)
    order = sorted(range(len(dts)),
                   key=lambda i: -(dts[i].score if dts[i].score is not None else 1.0))
    order = order[:max_det]
    dts = [dts[i] for i in order]
    D, G = len(dts), len(gts)

    gt_ig = np.array([g.bbox.area() < area_lo or g.bbox.area() >= area_hi
                      for g in gts], dtype=bool)
    # Non-ignored ground truths are preferred match targets.
    gt_order = sorted(range(G), key=lambda i: gt_ig[i])

    ious = np.zeros((D, G))
    for di, d in enumerate(dts):
        for gi, g in enumerate(gts):
            ious[di, gi] = iou(d.bbox, g.bbox)

    dtm = -np.ones((T, D), dtype=np.int64)
    dt_ig = np.zeros((T, D), dtype=bool)
    for ti, t in enumerate(iou_thrs):
        gtm = -np.ones(G, dtype=np.int64)
        for di in range(D):
            best = -1
            best_iou = min(t, 1.0 - 1e-10)
            for gi in gt_order:
                if gtm[gi] >= 0:
                    continue
                if best > -1 and not gt_ig[best] and gt_ig[gi]:
                    break
                if ious[di, gi] < best_iou:
                    continue
                best_iou = ious[di, gi]
                best = gi
            if best == -1:
                continue
            dtm[ti, di] = best
            gtm[best] = di
            dt_ig[ti, di] = gt_ig[best]

    dt_out = np.array([d.bbox.area() < area_lo or d.bbox.area() >= area_hi
                       for d in dts], dtype=bool)
    dt_ig |= (dtm == -1) & dt_out[None, :]

    scores = np.array([d.score if d.score is not None else 1.0 for d in dts])
    tps = (dtm >= 0) & ~dt_ig
    fps = (dtm == -1) & ~dt_ig
    n_pos = int((~gt_ig).sum())
    return scores, tps, fps, dt_ig, n_pos


def _accumulate(per_image, T, R, recall_points):
    """Reduce one (category, area, max_det) slice to AP/AR curves."""
    n_pos = sum(u[4] for u in per_image)
    if n_pos == 0:
        return None
    scores = np.concatenate([u[0] for u in per_image]) if per_image else np.zeros(0)
    order = np.argsort(-scores, kind="mergesort")
    precision = np.zeros((T, R))
    recall = np.zeros(T)
    if len(order):
        tps = np.concatenate([u[1] for u in per_image], axis=1)[:, order]
        fps = np.concatenate([u[2] for u in per_image], axis=1)[:, order]
        ig = np.concatenate([u[3] for u in per_image], axis=1)[:, order]
        for ti in range(T):
            keep = ~ig[ti]
            flags = tps[ti][keep]
            tp = np.cumsum(flags)
            fp = np.cumsum(fps[ti][keep])
            if len(tp):
                recall[ti] = tp[-1] / n_pos
            rc = tp / n_pos
            pr = tp / np.maximum(tp + fp, 1)
            for i in range(len(pr) - 1, 0, -1):
                if pr[i] > pr[i - 1]:
                    pr[i - 1] = pr[i]
            inds = np.searchsorted(rc, recall_points, side="left")
            for ri, pi in enumerate(inds):
                if pi < len(pr):
                    precision[ti, ri] = pr[pi]
    return precision, recall


def evaluate(dets: Corpus, gts: Corpus,
             config: EvalConfig = EvalConfig()) -> EvalReport:
    if dets.vocabulary.names != gts.vocabulary.names:
        raise LayoutPriorError("detection and ground-truth vocabularies differ")
    det_ids = {l.id for l in dets.layouts}
    gt_ids = {l.id for l in gts.layouts}
    if det_ids != gt_ids:
        missing = sorted(gt_ids - det_ids)
        extra = sorted(det_ids - gt_ids)
        raise LayoutPriorError(
            f"layout id sets differ; missing from detections: {missing}, "
            f"unknown in detections: {extra}"
        )

    C = gts.vocabulary.size
    iou_thrs = config.iou_thresholds
    T, R = len(iou_thrs), len(config.recall_points)
    recall_points = np.asarray(config.recall_points)
    image_ids = [l.id for l in dets.layouts]
    det_groups = _group(dets)
    gt_groups = _group(gts)
    max_det_cap = max(config.max_dets)

    # precision[t, r, class, area, maxdet] and recall[t, class, area, maxdet];
    # sentinel where a slice has no ground truth.
    A, M = len(config.area_ranges), len(config.max_dets)
    precision = np.full((T, R, C, A, M), SENTINEL)
    recall = np.full((T, C, A, M), SENTINEL)

    for ci in range(C):
        for ai, (_, lo, hi) in enumerate(config.area_ranges):
            for mi, md in enumerate(config.max_dets):
                per_image = []
                for iid in image_ids:
                    dts = det_groups.get((iid, ci), [])
                    gtl = gt_groups.get((iid, ci), [])
                    if not dts and not gtl:
                        continue
                    per_image.append(
                        _evaluate_unit(dts, gtl, iou_thrs, lo, hi, md))
                acc = _accumulate(per_image, T, R, recall_points)
                if acc is None:
                    continue
                precision[:, :, ci, ai, mi] = acc[0]
                recall[:, ci, ai, mi] = acc[1]

    area_names = [name for name, _, _ in config.area_ranges]

    def mean_ap(t_sel, area, maxdet, cls=None):
        if area not in area_names or maxdet not in config.max_dets:
            return SENTINEL
        ai = area_names.index(area)
        mi = config.max_dets.index(maxdet)
        p = precision[:, :, :, ai, mi]
        if t_sel is not None:
            ti = list(iou_thrs).index(t_sel)
            p = p[ti:ti + 1]
        if cls is not None:
            p = p[:, :, cls:cls + 1]
        valid = p[p > SENTINEL]
        return float(valid.mean()) if valid.size else SENTINEL

    def mean_ar(area, maxdet, cls=None):
        if area not in area_names or maxdet not in config.max_dets:
            return SENTINEL
        ai = area_names.index(area)
        mi = config.max_dets.index(maxdet)
        r = recall[:, :, ai, mi]
        if cls is not None:
            r = r[:, cls:cls + 1]
        valid = r[r > SENTINEL]
        return float(valid.mean()) if valid.size else SENTINEL

    def block(cls=None):
        return dict(
            ap=mean_ap(None, "all", 100, cls),
            ap50=mean_ap(0.5, "all", 100, cls),
            ap75=mean_ap(0.75, "all", 100, cls),
            ap_small=mean_ap(None, "small", 100, cls),
            ap_medium=mean_ap(None, "medium", 100, cls),
            ap_large=mean_ap(None, "large", 100, cls),
            ar1=mean_ar("all", 1, cls),
            ar10=mean_ar("all", 10, cls),
            ar100=mean_ar("all", 100, cls),
            ar_small=mean_ar("small", 100, cls),
            ar_medium=mean_ar("medium", 100, cls),
            ar_large=mean_ar("large", 100, cls),
        )

    per_class = {gts.vocabulary.names[ci]: block(ci) for ci in range(C)}
    return EvalReport(per_class=per_class, **block())


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=1, sort_keys=True)
