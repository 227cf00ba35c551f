"""Random forests built from depth-limited binary trees.

Each tree trains on a bootstrap resample drawn from a generator seeded
with seed + tree_index, with ceil(sqrt(p)) candidate features drawn per
split, so the model is independent of worker count and scheduling.
Training rows are canonically ordered internally, which makes the fitted
model invariant to the storage order of the training set.

Split search delegates to the compiled kernel when available (see
_kernel.BACKEND); regression splits minimize variance, classification
splits minimize Gini impurity. Ties resolve to the lowest feature index,
then the lowest threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernel

DEFAULT_N_TREES = 100
DEFAULT_MIN_LEAF = 2

KIND_REGRESSION = "regression"
KIND_CLASSIFICATION = "classification"


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (value).

    Leaf value is the mean target for regression trees and the
    (p_class0, p_class1) frequency pair for classification trees.
    """

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: Any = None

    @property
    def is_leaf(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            if isinstance(self.value, tuple):
                return {"probs": [self.value[0], self.value[1]]}
            return {"value": self.value}
        assert self.left is not None and self.right is not None
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "probs" in d:
            return cls(value=(d["probs"][0], d["probs"][1]))
        if "value" in d:
            return cls(value=d["value"])
        return cls(feature=d["feature"], threshold=d["threshold"],
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        assert self.left is not None and self.right is not None
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = DEFAULT_N_TREES
    min_leaf: int = DEFAULT_MIN_LEAF
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")


@dataclass
class ForestModel:
    kind: str
    trees: list[TreeNode]
    depth_limit: int
    seed: int
    n_features: int
    min_leaf: int = DEFAULT_MIN_LEAF
    target_range: tuple[float, float] | None = field(default=None)  # regression only

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "depth_limit": self.depth_limit,
            "seed": self.seed,
            "n_features": self.n_features,
            "min_leaf": self.min_leaf,
            "target_range": list(self.target_range) if self.target_range else None,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(
            kind=d["kind"],
            trees=[TreeNode.from_dict(t) for t in d["trees"]],
            depth_limit=d["depth_limit"],
            seed=d["seed"],
            n_features=d["n_features"],
            min_leaf=d["min_leaf"],
            target_range=tuple(d["target_range"]) if d.get("target_range") else None,
        )


def _leaf(targets: np.ndarray, kind: str) -> TreeNode:
    if kind == KIND_REGRESSION:
        return TreeNode(value=float(np.mean(targets)))
    n = targets.shape[0]
    pos = float(np.sum(targets)) / n
    return TreeNode(value=(1.0 - pos, pos))


def _build_node(Xb: np.ndarray, yb: np.ndarray, idx: np.ndarray, depth: int,
                depth_limit: int, min_leaf: int, n_candidates: int,
                kind: str, rng: np.random.Generator) -> TreeNode:
    targets = yb[idx]
    if (depth >= depth_limit or idx.shape[0] < 2 * min_leaf
            or targets.min() == targets.max()):
        return _leaf(targets, kind)

    p = Xb.shape[1]
    candidates = np.sort(rng.choice(p, size=n_candidates, replace=False))
    kernel = (_kernel.best_split_regression if kind == KIND_REGRESSION
              else _kernel.best_split_classification)

    best_proxy = -np.inf
    best: tuple[int, float] | None = None
    for f in candidates:
        vals = Xb[idx, f]
        order = np.argsort(vals, kind="stable")
        pos, proxy = kernel(np.ascontiguousarray(vals[order]),
                            np.ascontiguousarray(targets[order]), min_leaf)
        if pos >= 0 and proxy > best_proxy:
            lo, hi = vals[order[pos]], vals[order[pos + 1]]
            thr = 0.5 * (lo + hi)
            if thr == hi:  # midpoint rounded up between adjacent floats
                thr = lo
            best_proxy = proxy
            best = (int(f), float(thr))
    if best is None:
        return _leaf(targets, kind)

    feature, threshold = best
    mask = Xb[idx, feature] <= threshold
    left = _build_node(Xb, yb, idx[mask], depth + 1, depth_limit, min_leaf,
                       n_candidates, kind, rng)
    right = _build_node(Xb, yb, idx[~mask], depth + 1, depth_limit, min_leaf,
                        n_candidates, kind, rng)
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def _build_tree(Xc: np.ndarray, yc: np.ndarray, tree_seed: int, depth_limit: int,
                min_leaf: int, n_candidates: int, kind: str) -> TreeNode:
    rng = np.random.default_rng(tree_seed)
    n = Xc.shape[0]
    boot = rng.integers(0, n, size=n)
    Xb = Xc[boot]
    yb = yc[boot]
    return _build_node(Xb, yb, np.arange(n), 0, depth_limit, min_leaf,
                       n_candidates, kind, rng)


def fit_forest(X: np.ndarray, target: np.ndarray, kind: str, depth_limit: int,
               config: ForestConfig | None = None, seed: int = 0) -> ForestModel:
    config = config or ForestConfig()
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("X must be a nonempty 2-D matrix")
    if X.shape[0] != target.shape[0]:
        raise ValueError("X and target lengths differ")
    if depth_limit < 1:
        raise ValueError(f"depth_limit must be >= 1, got {depth_limit}")
    if kind not in (KIND_REGRESSION, KIND_CLASSIFICATION):
        raise ValueError(f"kind must be {KIND_REGRESSION!r} or {KIND_CLASSIFICATION!r}")
    if kind == KIND_CLASSIFICATION and not np.all(np.isin(np.unique(target), (0.0, 1.0))):
        raise ValueError("classification target must be binary 0/1")

    # Canonical row order: the seeded bootstrap then indexes the same
    # multiset of rows whatever order the caller stored them in.
    order = np.lexsort([target] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)])
    Xc = np.ascontiguousarray(X[order])
    yc = np.ascontiguousarray(target[order])

    p = X.shape[1]
    n_candidates = min(p, math.ceil(math.sqrt(p)))

    def build(i: int) -> TreeNode:
        return _build_tree(Xc, yc, seed + i, depth_limit, config.min_leaf,
                           n_candidates, kind)

    if config.n_jobs == 1:
        trees = [build(i) for i in range(config.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            trees = list(pool.map(build, range(config.n_trees)))

    return ForestModel(kind=kind, trees=trees, depth_limit=depth_limit, seed=seed,
                       n_features=p, min_leaf=config.min_leaf,
                       target_range=(float(yc.min()), float(yc.max()))
                       if kind == KIND_REGRESSION else None)


def _tree_value(node: TreeNode, x: np.ndarray) -> Any:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right  # type: ignore[assignment]
    return node.value


def predict_forest(model: ForestModel, x: np.ndarray) -> float:
    """Mean over trees: target estimate (regression) or positive-class
    probability (classification)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise ValueError(f"expected a row with {model.n_features} features")
    if model.kind == KIND_REGRESSION:
        total = sum(_tree_value(t, x) for t in model.trees)
    else:
        total = sum(_tree_value(t, x)[1] for t in model.trees)
    return float(total / len(model.trees))


def predict_forest_many(model: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected rows with {model.n_features} features")
    return np.array([predict_forest(model, X[i]) for i in range(X.shape[0])])
