"""Evaluation metrics: two-class 3D IoU over primitive labels, 2D semantic
metrics (mIoU, overall accuracy), and instance metrics built on Hungarian
matching (precision/recall/F1, panoptic quality, AP@50).

Conventions:
- 3D IoU binarizes per ground-truth instance and averages; a class absent
  from both sides counts as IoU 1.
- 2D mIoU averages over classes >= 1 present in prediction or truth.
- Overall accuracy is confusion trace over total pixels.
- Instance matching maximizes total IoU (cost 1 - IoU), then drops pairs
  under the threshold (default 0.5).
- AP@50 sorts by confidence (default 1.0), greedily matches, and integrates
  the all-point-interpolated precision-recall curve.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from splatseg.errors import AlignmentError, MissingViewError, UndefinedMetricError

MATCH_IOU_THRESHOLD = 0.5


class ConfusionMatrix:
    """Square (truth, prediction) count grid, grown to fit the largest
    class id seen."""

    def __init__(self, class_count: int = 2):
        self.counts = np.zeros((class_count, class_count), dtype=np.int64)

    @property
    def class_count(self) -> int:
        return self.counts.shape[0]

    def _grow(self, needed: int):
        if needed > self.class_count:
            grown = np.zeros((needed, needed), dtype=np.int64)
            grown[: self.class_count, : self.class_count] = self.counts
            self.counts = grown

    def add(self, truth, prediction):
        truth = np.asarray(truth).ravel().astype(np.int64)
        prediction = np.asarray(prediction).ravel().astype(np.int64)
        if truth.shape != prediction.shape:
            raise AlignmentError("truth/prediction size mismatch")
        if truth.size == 0:
            return
        if truth.min() < 0 or prediction.min() < 0:
            raise ValueError("class ids must be non-negative")
        needed = int(max(truth.max(), prediction.max())) + 1
        self._grow(needed)
        c = self.class_count
        flat = np.bincount(truth * c + prediction, minlength=c * c)
        self.counts += flat.reshape(c, c)

    def merge(self, other: "ConfusionMatrix"):
        self._grow(other.class_count)
        self.counts[: other.class_count, : other.class_count] += other.counts

    def true_positives(self) -> np.ndarray:
        return np.diag(self.counts)

    def false_positives(self) -> np.ndarray:
        return self.counts.sum(axis=0) - np.diag(self.counts)

    def false_negatives(self) -> np.ndarray:
        return self.counts.sum(axis=1) - np.diag(self.counts)

    def total(self) -> int:
        return int(self.counts.sum())


def iou3d(pred_labels, gt_labels) -> float:
    """Mean of foreground and background IoU over binary per-primitive
    labels; a class absent from both sides contributes IoU 1."""
    pred = np.asarray(pred_labels).ravel().astype(bool)
    gt = np.asarray(gt_labels).ravel().astype(bool)
    if pred.shape != gt.shape:
        raise AlignmentError(
            f"label arrays differ in length: {pred.shape[0]} vs {gt.shape[0]}"
        )
    total = 0.0
    for cls in (False, True):
        tp = int(np.sum((gt == cls) & (pred == cls)))
        fp = int(np.sum((gt != cls) & (pred == cls)))
        fn = int(np.sum((gt == cls) & (pred != cls)))
        denom = tp + fp + fn
        total += 1.0 if denom == 0 else tp / denom
    return total / 2.0


def iou3d_multi(pred_labels, gt_labels) -> float:
    """Mean over ground-truth instance ids of the two-class IoU obtained by
    binarizing both label arrays at that id."""
    pred = np.asarray(pred_labels).ravel()
    gt = np.asarray(gt_labels).ravel()
    if pred.shape != gt.shape:
        raise AlignmentError("label arrays differ in length")
    ids = np.unique(gt)
    ids = ids[ids > 0]
    if ids.size == 0:
        raise UndefinedMetricError("no ground-truth instances to evaluate")
    return float(np.mean([iou3d(pred == k, gt == k) for k in ids]))


def semantic_2d(pred_masks, gt_masks):
    """Accumulate one confusion matrix over aligned mask lists and return
    (miou2d, oa, per_class_iou). mIoU averages classes >= 1 present on
    either side; OA is trace over total pixels."""
    preds = list(pred_masks)
    gts = list(gt_masks)
    if len(preds) != len(gts):
        raise AlignmentError("prediction/ground-truth view counts differ")
    cm = ConfusionMatrix()
    for pred, gt in zip(preds, gts):
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise AlignmentError(
                f"mask dimensions differ: {pred.shape} vs {gt.shape}"
            )
        cm.add(gt, pred)
    return _semantic_from_confusion(cm)


def _semantic_from_confusion(cm: ConfusionMatrix):
    tp = cm.true_positives()
    fp = cm.false_positives()
    fn = cm.false_negatives()
    per_class = {}
    for cls in range(1, cm.class_count):
        denom = tp[cls] + fp[cls] + fn[cls]
        if denom == 0:
            continue  # absent from both sides: not a valid class
        per_class[cls] = float(tp[cls] / denom)
    miou = float(np.mean(list(per_class.values()))) if per_class else 1.0
    total = cm.total()
    oa = float(tp.sum() / total) if total else 1.0
    return miou, oa, per_class


@dataclass
class InstanceMatching:
    """Result of matching predicted to ground-truth instances."""

    pairs: list  # (gt_id, pred_id, iou), iou >= threshold
    tp: int
    fp: int
    fn: int
    threshold: float = MATCH_IOU_THRESHOLD
    assignment_iou_total: float = 0.0  # optimal total before thresholding

    def matched_iou_sum(self) -> float:
        return float(sum(iou for _, _, iou in self.pairs))


def mask_iou(a, b) -> float:
    a = np.asarray(a, dtype=bool).ravel()
    b = np.asarray(b, dtype=bool).ravel()
    union = int(np.sum(a | b))
    if union == 0:
        return 0.0
    return float(np.sum(a & b) / union)


def instances_from_mask(labels) -> dict[int, np.ndarray]:
    """Split a label map into {id: boolean mask} for every id >= 1."""
    arr = np.asarray(labels)
    return {int(k): arr == k for k in np.unique(arr) if k > 0}


def hungarian_match(
    pred_instances: dict,
    gt_instances: dict,
    threshold: float = MATCH_IOU_THRESHOLD,
) -> InstanceMatching:
    """Optimal assignment maximizing total IoU (min-cost on 1 - IoU); pairs
    below the threshold are discarded afterwards."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    gt_ids = sorted(gt_instances)
    pred_ids = sorted(pred_instances)
    if not gt_ids or not pred_ids:
        return InstanceMatching(
            pairs=[], tp=0, fp=len(pred_ids), fn=len(gt_ids), threshold=threshold
        )
    iou = np.zeros((len(gt_ids), len(pred_ids)))
    for i, g in enumerate(gt_ids):
        for j, p in enumerate(pred_ids):
            iou[i, j] = mask_iou(gt_instances[g], pred_instances[p])
    rows, cols = linear_sum_assignment(1.0 - iou)
    pairs = [
        (gt_ids[i], pred_ids[j], float(iou[i, j]))
        for i, j in zip(rows, cols)
        if iou[i, j] >= threshold
    ]
    tp = len(pairs)
    return InstanceMatching(
        pairs=pairs,
        tp=tp,
        fp=len(pred_ids) - tp,
        fn=len(gt_ids) - tp,
        threshold=threshold,
        assignment_iou_total=float(iou[rows, cols].sum()),
    )


def instance_scores(matching: InstanceMatching):
    """(precision, recall, f1, pq); every zero-denominator case is 0."""
    tp, fp, fn = matching.tp, matching.fp, matching.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    pq_denom = tp + 0.5 * fp + 0.5 * fn
    pq = matching.matched_iou_sum() / pq_denom if pq_denom else 0.0
    return precision, recall, f1, pq


def _greedy_match_flags(ordered_preds, gt_sets, threshold):
    """Greedy TP flags for AP: each prediction takes the best unmatched gt
    (highest IoU, ties to the smallest gt id) with IoU >= threshold.

    ordered_preds: [(group, mask)] already sorted by descending confidence;
    gt_sets: {group: {gt_id: mask}}. Groups keep matching within one view.
    """
    taken = {group: set() for group in gt_sets}
    flags = []
    for group, mask in ordered_preds:
        candidates = gt_sets.get(group, {})
        best_id, best_iou = None, 0.0
        for gt_id in sorted(candidates):
            if gt_id in taken[group]:
                continue
            value = mask_iou(mask, candidates[gt_id])
            if value >= threshold and value > best_iou:
                best_id, best_iou = gt_id, value
        if best_id is None:
            flags.append(False)
        else:
            taken[group].add(best_id)
            flags.append(True)
    return flags


def _ap_from_flags(flags, n_gt) -> float:
    """All-point interpolated average precision from ordered TP flags."""
    if n_gt == 0:
        return 0.0
    tp_cum = np.cumsum(np.asarray(flags, dtype=np.int64))
    ranks = np.arange(1, len(flags) + 1)
    precision = tp_cum / ranks
    recall = tp_cum / n_gt
    ap = 0.0
    prev_recall = 0.0
    for k in range(len(flags)):
        if not flags[k]:
            continue
        p_interp = float(np.max(precision[k:]))
        ap += (recall[k] - prev_recall) * p_interp
        prev_recall = recall[k]
    return float(ap)


def ap50(
    pred_instances: dict,
    gt_instances: dict,
    confidences: dict | None = None,
    threshold: float = MATCH_IOU_THRESHOLD,
) -> float:
    """Average precision at the matching threshold. Confidence defaults to
    1.0 for every prediction (the pipeline emits none), which reduces AP to
    the precision-recall area of a single operating point."""
    if confidences is None:
        confidences = {}
    order = sorted(
        pred_instances,
        key=lambda pid: (-float(confidences.get(pid, 1.0)), pid),
    )
    ordered = [(0, pred_instances[pid]) for pid in order]
    flags = _greedy_match_flags(ordered, {0: gt_instances}, threshold)
    return _ap_from_flags(flags, len(gt_instances))


@dataclass
class MetricReport:
    """Every run-level metric; 3D IoU is None when no 3D labels exist."""

    iou3d: float | None
    miou2d: float
    oa: float
    precision: float
    recall: float
    f1: float
    pq: float
    ap50: float
    per_class_iou: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "iou3d": self.iou3d,
            "miou2d": self.miou2d,
            "oa": self.oa,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "pq": self.pq,
            "ap50": self.ap50,
            "per_class_iou": {str(k): v for k, v in sorted(self.per_class_iou.items())},
        }

    def validate(self):
        values = [self.miou2d, self.oa, self.precision, self.recall, self.f1, self.pq, self.ap50]
        if self.iou3d is not None:
            values.append(self.iou3d)
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"metric {v} outside [0, 1]")


def evaluate_views(
    view_ids,
    pred_masks: dict,
    gt_masks: dict,
    pred_3d_labels=None,
    gt_3d_labels=None,
    threshold: float = MATCH_IOU_THRESHOLD,
) -> MetricReport:
    """Aggregate every metric over a set of views.

    Semantic metrics share one confusion matrix; instance counts and matched
    IoU sums accumulate per view; AP pools predictions across views (all
    confidences 1.0, ordered by view then id)."""
    view_ids = list(view_ids)
    missing = [vid for vid in view_ids if vid not in pred_masks]
    if missing:
        raise MissingViewError(missing)

    cm = ConfusionMatrix()
    tp = fp = fn = 0
    iou_sum = 0.0
    pooled_preds = []
    gt_sets = {}
    for vid in view_ids:
        pred = np.asarray(pred_masks[vid])
        gt = np.asarray(gt_masks[vid])
        if pred.shape != gt.shape:
            raise AlignmentError(f"view {vid}: mask dimensions differ")
        cm.add(gt, pred)
        pred_inst = instances_from_mask(pred)
        gt_inst = instances_from_mask(gt)
        matching = hungarian_match(pred_inst, gt_inst, threshold)
        tp += matching.tp
        fp += matching.fp
        fn += matching.fn
        iou_sum += matching.matched_iou_sum()
        gt_sets[vid] = gt_inst
        for pid in sorted(pred_inst):
            pooled_preds.append((vid, pred_inst[pid]))

    miou, oa, per_class = _semantic_from_confusion(cm)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    pq_denom = tp + 0.5 * fp + 0.5 * fn
    pq = iou_sum / pq_denom if pq_denom else 0.0

    flags = _greedy_match_flags(pooled_preds, gt_sets, threshold)
    n_gt = sum(len(s) for s in gt_sets.values())
    ap = _ap_from_flags(flags, n_gt)

    value3d = None
    if pred_3d_labels is not None and gt_3d_labels is not None:
        value3d = iou3d_multi(pred_3d_labels, gt_3d_labels)

    report = MetricReport(
        iou3d=value3d,
        miou2d=miou,
        oa=oa,
        precision=precision,
        recall=recall,
        f1=f1,
        pq=pq,
        ap50=ap,
        per_class_iou=per_class,
    )
    report.validate()
    return report


def evaluate_run(dataset, pred_masks: dict, pred_3d_labels=None) -> MetricReport:
    """Evaluate predictions against a loaded dataset scene. Ground-truth 2D
    masks come from the dataset's mask directory; 3D labels, when requested,
    from its annotated model PLY."""
    view_ids = dataset.view_ids()
    gt_masks = {vid: dataset.load_mask(vid) for vid in view_ids}
    gt_3d = None
    if pred_3d_labels is not None:
        if dataset.model_path is None:
            raise UndefinedMetricError("dataset has no annotated model PLY for 3D IoU")
        from splatseg.scene import load_gaussian_ply

        gt_3d = load_gaussian_ply(dataset.model_path).labels
    return evaluate_views(view_ids, pred_masks, gt_masks, pred_3d_labels, gt_3d)


REPORT_COLUMNS = ["iou3d", "miou2d", "oa", "precision", "recall", "f1", "pq", "ap50"]


def write_report_json(report: MetricReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def write_report_csv(report: MetricReport, path) -> None:
    """One-row CSV mirroring the headline metric columns."""
    row = report.to_dict()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        writer.writerow(
            ["" if row[c] is None else f"{row[c]:.6f}" for c in REPORT_COLUMNS]
        )
