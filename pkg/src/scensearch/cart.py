"""Axis-aligned decision trees over the evaluation archive.

A from-scratch CART classifier (greedy binary splits minimizing weighted
Gini impurity) plus the machinery that turns critical-labeled leaves into
box-shaped regions of the raw search space.  Everything is deterministic:
split thresholds sit midway between adjacent distinct feature values, and
ties are broken toward the lowest feature index, then lowest threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .records import EvaluationRecord
from .scenario import ScenarioSpec, scale_to_unit


@dataclass
class CartParams:
    max_depth: int = 6
    min_samples_split: int = 10
    min_impurity_decrease: float = 0.01


@dataclass
class TreeNode:
    """Internal node (has children and a split) or leaf (has a label).

    The split keeps samples with ``feature < threshold`` on the left and
    ``feature >= threshold`` on the right; thresholds are stored in both
    unit-cube and raw coordinates.
    """

    count_total: int
    count_critical: int
    feature_index: Optional[int] = None
    threshold_unit: Optional[float] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None

    @property
    def label(self) -> bool:
        # majority vote; exact ties count as non-critical
        return 2 * self.count_critical > self.count_total

    @property
    def purity(self) -> float:
        return self.count_critical / self.count_total if self.count_total else 0.0


@dataclass
class DecisionTree:
    root: TreeNode
    feature_names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    params: CartParams

    def predict_unit(self, points_unit: np.ndarray) -> np.ndarray:
        points_unit = np.atleast_2d(np.asarray(points_unit, dtype=float))
        out = np.empty(len(points_unit), dtype=bool)
        for i, p in enumerate(points_unit):
            node = self.root
            while not node.is_leaf:
                node = node.left if p[node.feature_index] < node.threshold_unit else node.right
            out[i] = node.label
        return out

    def to_dict(self) -> dict:
        def encode(node: TreeNode) -> dict:
            if node.is_leaf:
                return {
                    "count_total": node.count_total,
                    "count_critical": node.count_critical,
                    "label": "critical" if node.label else "non_critical",
                }
            return {
                "count_total": node.count_total,
                "count_critical": node.count_critical,
                "feature_index": node.feature_index,
                "feature": self.feature_names[node.feature_index],
                "threshold_unit": node.threshold_unit,
                "threshold": node.threshold,
                "left": encode(node.left),
                "right": encode(node.right),
            }

        return {
            "features": list(self.feature_names),
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
            "params": {
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
                "min_impurity_decrease": self.params.min_impurity_decrease,
            },
            "root": encode(self.root),
        }


@dataclass(frozen=True)
class Region:
    """A box in raw search coordinates labeled critical by the tree."""

    lower: np.ndarray
    upper: np.ndarray
    support: int
    purity: float

    def contains(self, values: Sequence[float]) -> bool:
        v = np.asarray(values, dtype=float)
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))

    def same_box(self, other: "Region") -> bool:
        return np.array_equal(self.lower, other.lower) and \
            np.array_equal(self.upper, other.upper)


def _gini(n_total: int, n_critical) -> float:
    if n_total == 0:
        return 0.0
    p = n_critical / n_total
    return 2.0 * p * (1.0 - p)


def _best_split(X: np.ndarray, y: np.ndarray):
    """Best (gain, feature, unit threshold) over all candidate splits.

    Ties go to the lowest feature index, then the lowest threshold.  A
    zero-gain split can still be returned: with min_impurity_decrease 0
    that lets the tree work through plateaus (e.g. XOR-like labelings).
    """
    n = len(y)
    parent = _gini(n, int(y.sum()))
    best_gain = -1.0
    best: Optional[tuple[int, float]] = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        change = np.nonzero(xs[1:] != xs[:-1])[0]
        if change.size == 0:
            continue
        cum_crit = np.cumsum(ys)
        n_left = change + 1
        crit_left = cum_crit[change]
        n_right = n - n_left
        crit_right = cum_crit[-1] - crit_left
        p_left = crit_left / n_left
        p_right = crit_right / n_right
        child = (n_left * 2.0 * p_left * (1.0 - p_left)
                 + n_right * 2.0 * p_right * (1.0 - p_right)) / n
        gains = parent - child
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best = (j, float((xs[change[k]] + xs[change[k] + 1]) / 2.0))
    if best is None:
        return -1.0, None, None
    return best_gain, best[0], best[1]


def fit_cart(records: Sequence[EvaluationRecord], spec: ScenarioSpec,
             params: CartParams | None = None) -> DecisionTree:
    """Fit a criticality classifier on the archive (unit-scaled features)."""
    params = params or CartParams()
    X = np.array([scale_to_unit(spec, r.values) for r in records], dtype=float)
    y = np.array([r.critical for r in records], dtype=int)
    return fit_cart_points(X, y, spec.lower, spec.upper,
                           tuple(spec.names), params)


def fit_cart_points(points_unit: np.ndarray, labels: np.ndarray,
                    lower: np.ndarray, upper: np.ndarray,
                    feature_names: tuple[str, ...],
                    params: CartParams | None = None) -> DecisionTree:
    params = params or CartParams()
    X = np.asarray(points_unit, dtype=float)
    y = np.asarray(labels, dtype=int)
    if len(y) == 0:
        raise ValueError("cannot fit a tree on an empty archive")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    span = upper - lower

    def build(X: np.ndarray, y: np.ndarray, depth: int) -> TreeNode:
        n = len(y)
        n_crit = int(y.sum())
        node = TreeNode(count_total=n, count_critical=n_crit)
        if (depth >= params.max_depth or n < params.min_samples_split
                or n_crit == 0 or n_crit == n):
            return node
        gain, feature, thr_unit = _best_split(X, y)
        if feature is None or gain < params.min_impurity_decrease:
            return node
        mask = X[:, feature] < thr_unit
        node.feature_index = feature
        node.threshold_unit = thr_unit
        node.threshold = float(lower[feature] + thr_unit * span[feature])
        node.left = build(X[mask], y[mask], depth + 1)
        node.right = build(X[~mask], y[~mask], depth + 1)
        return node

    root = build(X, y, 0)
    return DecisionTree(root=root, feature_names=tuple(feature_names),
                        lower=lower, upper=upper, params=params)


def extract_critical_regions(tree: DecisionTree,
                             min_support: int = 0,
                             min_fraction: Optional[float] = None) -> list[Region]:
    """Boxes of all critical leaves, clipped to the global bounds.

    By default a leaf counts as critical via its majority label; the
    tree-guided search instead gates on an explicit critical fraction and
    a minimum number of supporting samples.
    """
    regions: list[Region] = []

    def walk(node: TreeNode, lo: np.ndarray, hi: np.ndarray) -> None:
        if node.is_leaf:
            if min_fraction is None:
                is_critical = node.label
            else:
                is_critical = node.purity >= min_fraction
            if is_critical and node.count_total >= min_support:
                regions.append(Region(lower=lo.copy(), upper=hi.copy(),
                                      support=node.count_total,
                                      purity=node.purity))
            return
        j = node.feature_index
        hi_left = hi.copy()
        hi_left[j] = min(hi[j], node.threshold)
        lo_right = lo.copy()
        lo_right[j] = max(lo[j], node.threshold)
        walk(node.left, lo, hi_left)
        walk(node.right, lo_right, hi)

    walk(tree.root, tree.lower.astype(float).copy(), tree.upper.astype(float).copy())
    return regions


def merge_identical_regions(regions: list[Region]) -> list[Region]:
    """Drop duplicate boxes (same bounds), keeping the first occurrence."""
    kept: list[Region] = []
    for region in regions:
        if not any(region.same_box(k) for k in kept):
            kept.append(region)
    return kept


def format_condition(region: Region, spec: ScenarioSpec) -> str:
    """Human-readable conjunction of the region's non-trivial bounds."""
    terms = []
    for i, p in enumerate(spec.parameters):
        unit = f" {p.unit}" if p.unit else ""
        if region.lower[i] > p.lower:
            terms.append(f"{p.name} ≥ {region.lower[i]:.2f}{unit}")
        if region.upper[i] < p.upper:
            terms.append(f"{p.name} < {region.upper[i]:.2f}{unit}")
    if not terms:
        return "true"
    return " ∧ ".join(terms)
