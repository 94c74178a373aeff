"""Random forest: Gini trees on seeded bags, per-node feature subsets, majority vote."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InsufficientDataError

DEFAULT_TREES = 30
SAMPLING_MODES = ("paper", "classical", "none")


@dataclass
class DecisionTree:
    """Array-encoded binary tree. Leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray
    counts: np.ndarray  # (nodes, 2): false, true

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        return self.leaf_class[self.apply(np.asarray(X, dtype=np.float64))]

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_class": self.leaf_class.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "DecisionTree":
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["leaf_class"], dtype=np.int64),
            np.array(d["counts"], dtype=np.int64).reshape(-1, 2),
        )


def _best_split(X: np.ndarray, y: np.ndarray, features: list[int]):
    """Lowest weighted Gini over ``features``; ties go to the earlier feature, then lower threshold."""
    n = len(y)
    best = (math.inf, -1, 0.0)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        ones_left = np.cumsum(ys)[:-1]
        n_left = np.arange(1, n)
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        ones_right = ys.sum() - ones_left
        n_right = n - n_left
        zeros_left = n_left - ones_left
        zeros_right = n_right - ones_right
        impurity = (
            n_left - (ones_left**2 + zeros_left**2) / n_left
            + n_right - (ones_right**2 + zeros_right**2) / n_right
        )
        impurity = np.where(valid, impurity, np.inf)
        k = int(np.argmin(impurity))
        if impurity[k] < best[0]:
            best = (float(impurity[k]), f, float((xs[k] + xs[k + 1]) / 2.0))
    return best


def _leaf_class(counts) -> int:
    return 1 if counts[1] > counts[0] else 0


def tree_fit(
    X,
    y,
    features_per_node: int | None = None,
    max_depth: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Grow one Gini tree on all of ``(X, y)``.

    Each node examines ``features_per_node`` randomly drawn features that are
    not constant on the node's rows (all features when ``None``). Splits use
    midpoints between adjacent distinct values; growth stops at pure nodes,
    at ``max_depth``, or when every feature is constant.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise InsufficientDataError("cannot grow a tree on zero rows")
    d = X.shape[1]
    m = d if features_per_node is None else features_per_node
    if not 1 <= m <= d:
        raise ValueError(f"features_per_node={m} outside [1, {d}]")
    rng = rng if rng is not None else np.random.default_rng(0)

    feature, threshold, left, right, leaf, counts = [], [], [], [], [], []

    def new_node(rows) -> int:
        c = np.bincount(y[rows], minlength=2)[:2]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf.append(_leaf_class(c))
        counts.append(c.tolist())
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        c = counts[node]
        if c[0] == 0 or c[1] == 0 or (max_depth is not None and depth >= max_depth):
            continue
        sub = X[rows]
        if m == d:
            chosen = [f for f in range(d) if sub[:, f].min() < sub[:, f].max()]
        else:
            chosen = []
            for f in rng.permutation(d):
                if sub[:, f].min() < sub[:, f].max():
                    chosen.append(int(f))
                    if len(chosen) == m:
                        break
            chosen.sort()
        if not chosen:
            continue
        _, f, t = _best_split(sub, y[rows], chosen)
        if f < 0:
            continue
        mask = sub[:, f] <= t
        feature[node], threshold[node] = f, t
        lrows, rrows = rows[mask], rows[~mask]
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(leaf, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
    )


def bag_size(n: int, sampling: str = "paper") -> int:
    if sampling == "paper":
        return -(-2 * n // 3)
    if sampling in ("classical", "none"):
        return n
    raise ValueError(f"unknown sampling mode {sampling!r}")


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, tree_index])


def draw_bag(n: int, seed: int, tree_index: int, sampling: str = "paper") -> tuple[np.ndarray, np.random.Generator]:
    """Row indices for one tree plus the generator that continues into its feature draws."""
    rng = tree_rng(seed, tree_index)
    if sampling == "none":
        return np.arange(n), rng
    return rng.integers(0, n, size=bag_size(n, sampling)), rng


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    n_features: int
    features_per_node: int
    max_depth: int | None
    seed: int
    sampling: str = "paper"
    n_train: int = 0
    oob_error: float | None = None
    manifest: dict = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def votes(self, X) -> np.ndarray:
        """Per-row count of trees voting for class 1."""
        X = self.check(X)
        return np.sum([t.predict(X) for t in self.trees], axis=0, dtype=np.int64)

    def bags(self) -> list[np.ndarray]:
        return [draw_bag(self.n_train, self.seed, i, self.sampling)[0] for i in range(self.n_trees)]

    def to_json(self) -> dict:
        return {
            "model_type": "forest",
            "n_trees": self.n_trees,
            "n_features": self.n_features,
            "features_per_node": self.features_per_node,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "sampling": self.sampling,
            "n_train": self.n_train,
            "oob_error": self.oob_error,
            "trees": [t.to_json() for t in self.trees],
            "training_manifest": self.manifest,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ForestModel":
        return cls(
            [DecisionTree.from_json(t) for t in d["trees"]],
            int(d["n_features"]),
            int(d["features_per_node"]),
            d["max_depth"],
            int(d["seed"]),
            d.get("sampling", "paper"),
            int(d.get("n_train", 0)),
            d.get("oob_error"),
            d.get("training_manifest", {}),
        )


def forest_train(
    X,
    y=None,
    n_trees: int = DEFAULT_TREES,
    features_per_node: int | None = None,
    max_depth: int | None = None,
    seed: int = 0,
    sampling: str = "paper",
) -> ForestModel:
    """Train ``n_trees`` trees, tree ``i`` seeded from ``(seed, i)``.

    ``sampling="paper"`` bags ``ceil(2n/3)`` rows with replacement,
    ``"classical"`` bags ``n`` and ``"none"`` gives every tree all rows.
    """
    if y is None:
        X, y = X.X, X.y
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if X.ndim != 2 or len(X) == 0:
        raise InsufficientDataError("forest training needs a nonempty matrix")
    if len(X) != len(y):
        raise DimensionMismatchError(f"{len(X)} rows but {len(y)} labels")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    d = X.shape[1]
    m = math.isqrt(d - 1) + 1 if features_per_node is None else features_per_node
    if not 1 <= m <= d:
        raise ValueError(f"features_per_node={m} outside [1, {d}]")
    bag_size(len(y), sampling)
    trees = []
    for i in range(n_trees):
        bag, rng = draw_bag(len(y), seed, i, sampling)
        trees.append(tree_fit(X[bag], y[bag], m, max_depth, rng))
    model = ForestModel(trees, d, m, max_depth, seed, sampling, len(y))
    model.oob_error = oob_error(model, X, y)
    return model


def forest_predict(model: ForestModel, X) -> np.ndarray:
    """Majority vote; an even split goes to class 0."""
    return (2 * model.votes(X) > model.n_trees).astype(np.int64)


def oob_error(model: ForestModel, X, y=None) -> float | None:
    """Error of the out-of-bag vote, over rows that were out of bag for at least one tree.

    Returns ``None`` when no row was ever out of bag.
    """
    if y is None:
        X, y = X.X, X.y
    X = model.check(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if len(y) != model.n_train:
        raise DimensionMismatchError(f"model was trained on {model.n_train} rows, got {len(y)}")
    ones = np.zeros(len(y), dtype=np.int64)
    total = np.zeros(len(y), dtype=np.int64)
    for tree, bag in zip(model.trees, model.bags()):
        out = np.ones(len(y), dtype=bool)
        out[bag] = False
        if out.any():
            ones[out] += tree.predict(X[out])
            total[out] += 1
    seen = total > 0
    if not seen.any():
        return None
    pred = (2 * ones[seen] > total[seen]).astype(np.int64)
    return float(np.mean(pred != y[seen]))


def save_model(model: ForestModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> ForestModel:
    with open(path, encoding="utf-8") as fh:
        return ForestModel.from_json(json.load(fh))


def n_trees_sweep(X, y, X_test, y_test, sizes=(10, 20, 30, 40, 50), seed: int = 0, **kwargs) -> list[dict]:
    """Held-out and out-of-bag error for each forest size."""
    out = []
    for n in sizes:
        model = forest_train(X, y, n, seed=seed, **kwargs)
        err = float(np.mean(forest_predict(model, X_test) != np.asarray(y_test)))
        out.append({"n_trees": n, "test_error": err, "oob_error": model.oob_error})
    return out
