"""Binary tree structure, CART growth on Gini impurity, and Newton regression trees.

Ties during split search are broken deterministically: lowest feature index
first, then lowest threshold. Growth and prediction are iterative so
unbounded-depth trees cannot hit the interpreter recursion limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splits import BinnedMatrix, argbest


@dataclass
class TreeNode:
    n: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    klass: int | None = None  # classification leaf: predicted class
    prob: float | None = None  # fraction of the predicted class in the leaf
    n1: int = 0  # class-1 count at the node (classification only)
    value: float | None = None  # regression leaf weight

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _gini_split(bm: BinnedMatrix, idx: np.ndarray, y_f: np.ndarray, min_leaf: int):
    """Best (feature, threshold, flat_bin) by Gini gain; None if no valid split.

    Zero-gain splits are allowed: growth stops on purity, depth, or leaf-size
    grounds, not on lack of immediate impurity improvement.
    """
    n = len(idx)
    counts, left_n, (left_1,), valid = bm.scan(idx, (y_f,))
    valid = valid & (left_n >= min_leaf) & ((n - left_n) >= min_leaf)
    if not valid.any():
        return None
    n1 = float(y_f.sum())
    n0 = n - n1
    parent = 1.0 - (n0 * n0 + n1 * n1) / (n * n)
    lnf = left_n.astype(np.float64)
    rnf = n - lnf
    l1 = left_1
    l0 = lnf - l1
    r1 = n1 - l1
    r0 = n0 - l0
    with np.errstate(divide="ignore", invalid="ignore"):
        gini_left = 1.0 - (l0 * l0 + l1 * l1) / (lnf * lnf)
        gini_right = 1.0 - (r0 * r0 + r1 * r1) / (rnf * rnf)
        gain = parent - (lnf / n) * gini_left - (rnf / n) * gini_right
    best = argbest(gain, valid, maximize=True)
    if best is None:
        return None
    feature, threshold = bm.split_at(best, counts)
    return feature, threshold, best


def _class_leaf(node: TreeNode) -> None:
    n0 = node.n - node.n1
    node.klass = 1 if node.n1 > n0 else 0  # ties predict class 0
    node.prob = (node.n1 if node.klass == 1 else n0) / node.n


def grow_classification_tree(
    X: np.ndarray, y: np.ndarray, max_depth: int | None, min_leaf: int
) -> TreeNode:
    bm = BinnedMatrix(X)
    y_f = y.astype(np.float64)
    root = TreeNode(n=len(y))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        node.n = len(idx)
        node.n1 = int(y[idx].sum())
        pure = node.n1 in (0, node.n)
        depth_capped = max_depth is not None and depth >= max_depth
        split = None
        if not pure and not depth_capped and node.n >= 2 * min_leaf:
            split = _gini_split(bm, idx, y_f[idx], min_leaf)
        if split is None:
            _class_leaf(node)
            continue
        node.feature, node.threshold, flat_bin = split
        mask = bm.left_mask(idx, node.feature, flat_bin)
        node.left = TreeNode(n=int(mask.sum()))
        node.right = TreeNode(n=int((~mask).sum()))
        stack.append((node.right, idx[~mask], depth + 1))
        stack.append((node.left, idx[mask], depth + 1))
    return root


def _newton_split(bm: BinnedMatrix, idx: np.ndarray, g: np.ndarray, h: np.ndarray, l2: float):
    """Best (feature, threshold, flat_bin) by second-order gain; None unless gain > 0."""
    counts, _, (lg, lh), valid = bm.scan(idx, (g, h))
    G = float(g.sum())
    H = float(h.sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        parent_score = G * G / (H + l2)
        rg = G - lg
        rh = H - lh
        gain = 0.5 * (lg * lg / (lh + l2) + rg * rg / (rh + l2) - parent_score)
    best = argbest(gain, valid, maximize=True)
    if best is None or gain[best] <= 0.0:
        return None
    feature, threshold = bm.split_at(best, counts)
    return feature, threshold, best


def grow_regression_tree(
    bm: BinnedMatrix,
    g: np.ndarray,
    h: np.ndarray,
    max_depth: int,
    l2: float,
    row_values: np.ndarray,
) -> TreeNode:
    """Fit a Newton-step regression tree to gradients/hessians.

    Leaf weight is -sum(g) / (sum(h) + l2). Each training row's leaf weight is
    also written into row_values so boosting can update scores without a
    separate prediction pass.
    """
    root = TreeNode(n=len(g))
    stack = [(root, np.arange(len(g)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        node.n = len(idx)
        split = None
        if depth < max_depth and node.n >= 2:
            split = _newton_split(bm, idx, g[idx], h[idx], l2)
        if split is None:
            node.value = -float(g[idx].sum()) / (float(h[idx].sum()) + l2)
            row_values[idx] = node.value
            continue
        node.feature, node.threshold, flat_bin = split
        mask = bm.left_mask(idx, node.feature, flat_bin)
        node.left = TreeNode(n=int(mask.sum()))
        node.right = TreeNode(n=int((~mask).sum()))
        stack.append((node.right, idx[~mask], depth + 1))
        stack.append((node.left, idx[mask], depth + 1))
    return root


def _apply(root: TreeNode, X: np.ndarray, out: np.ndarray, attr: str) -> None:
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = getattr(node, attr)
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))


def predict_classes(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=np.int64)
    _apply(root, X, out, "klass")
    return out


def predict_values(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=np.float64)
    _apply(root, X, out, "value")
    return out


def dump_tree(root: TreeNode, feature_names: tuple[str, ...]) -> str:
    """Human-readable indented dump of a classification tree."""
    lines: list[str] = []

    def walk(node: TreeNode, indent: int) -> None:
        pad = " " * indent
        if node.is_leaf:
            lines.append(f"{pad}leaf class={node.klass} p={node.prob:.4f} n={node.n}")
            return
        lines.append(f"{pad}if {feature_names[node.feature]} <= {node.threshold:g}")
        walk(node.left, indent + 4)
        lines.append(f"{pad}else")
        walk(node.right, indent + 4)

    walk(root, 0)
    return "\n".join(lines)


def node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        d = {"n": node.n}
        if node.value is not None:
            d["value"] = node.value
        else:
            d["class"] = node.klass
            d["p"] = node.prob
            d["n1"] = node.n1
        return d
    return {
        "n": node.n,
        "feature": node.feature,
        "threshold": node.threshold,
        "left": node_to_dict(node.left),
        "right": node_to_dict(node.right),
    }


def node_from_dict(d: dict) -> TreeNode:
    if "feature" not in d:
        return TreeNode(
            n=d["n"],
            klass=d.get("class"),
            prob=d.get("p"),
            n1=d.get("n1", 0),
            value=d.get("value"),
        )
    return TreeNode(
        n=d["n"],
        feature=d["feature"],
        threshold=d["threshold"],
        left=node_from_dict(d["left"]),
        right=node_from_dict(d["right"]),
    )
