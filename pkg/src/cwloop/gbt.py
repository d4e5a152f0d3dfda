"""Gradient-boosted regression trees, from scratch.

Plain least-squares boosting: each tree fits the residuals of the model
so far, leaves predict the (weighted) mean residual, and the ensemble
prediction is base + learning_rate * sum of tree outputs. Split finding
is exact greedy over sorted unique feature values with a variance
reduction criterion; ties break toward the lowest feature index, then
the lowest threshold, so training is fully deterministic.

Trees are stored as flat parallel arrays (feature, threshold, left,
right, value) which serialize naturally and allow all trees of a model
to be traversed for a whole batch of rows in a handful of vectorized
passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cwloop.errors import SchemaError, TrainingError

_LEAF = -1


@dataclass
class GBTHyperparams:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise TrainingError(
                f"n_trees, max_depth, min_samples_leaf must be >= 1, got "
                f"{self.n_trees}, {self.max_depth}, {self.min_samples_leaf}"
            )
        if not 0.0 < self.learning_rate <= 1.0:
            raise TrainingError(
                f"learning_rate must be in (0, 1], got {self.learning_rate}"
            )

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
        }


@dataclass
class RegressionTree:
    """Binary regression tree as parallel node arrays.

    ``feature[i] == -1`` marks a leaf; internal nodes split rows with
    x[feature] <= threshold to ``left`` and the rest to ``right``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_row(self, x) -> float:
        node = 0
        while self.feature[node] != _LEAF:
            if x[self.feature[node]] <= self.threshold[node]:
                node = int(self.left[node])
            else:
                node = int(self.right[node])
        return float(self.value[node])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int32),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int32),
            right=np.asarray(payload["right"], dtype=np.int32),
            value=np.asarray(payload["value"], dtype=np.float64),
            max_depth=int(payload["max_depth"]),
        )


class _TreeBuilder:
    """Grows one tree on residuals, reusing a per-feature presort.

    The sorted row order for each feature is computed once per tree and
    filtered down node by node with boolean masks, which keeps split
    finding O(n) per node-feature after the initial sort.
    """

    def __init__(self, X, residual, weight, max_depth, min_leaf):
        self.X = X
        self.r = residual
        self.w = weight
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.train_pred = np.zeros(len(residual))

    def _new_node(self) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self, sorted_rows: list[np.ndarray]) -> RegressionTree:
        self._grow(sorted_rows, depth=0)
        return RegressionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
            max_depth=self.max_depth,
        )

    def _grow(self, sorted_rows: list[np.ndarray], depth: int) -> int:
        node = self._new_node()
        rows = sorted_rows[0]
        r = self.r[rows]
        w = self.w[rows]
        mean = float(np.average(r, weights=w))

        if depth >= self.max_depth or len(rows) < 2 * self.min_leaf:
            return self._leaf(node, rows, mean)
        best = self._best_split(sorted_rows)
        if best is None:
            return self._leaf(node, rows, mean)

        feat, thresh = best
        self.feature[node] = feat
        self.threshold[node] = thresh
        go_left = self.X[:, feat] <= thresh
        left_sorted = [idx[go_left[idx]] for idx in sorted_rows]
        right_sorted = [idx[~go_left[idx]] for idx in sorted_rows]
        self.left[node] = self._grow(left_sorted, depth + 1)
        self.right[node] = self._grow(right_sorted, depth + 1)
        return node

    def _leaf(self, node: int, rows: np.ndarray, mean: float) -> int:
        self.value[node] = mean
        self.train_pred[rows] = mean
        return node

    def _best_split(self, sorted_rows: list[np.ndarray]):
        best_score = np.inf
        best = None
        min_leaf = self.min_leaf
        for feat, idx in enumerate(sorted_rows):
            xs = self.X[idx, feat]
            ws = self.w[idx]
            ys = self.r[idx]
            wy = ws * ys
            cw = np.cumsum(ws)
            cwy = np.cumsum(wy)
            cwy2 = np.cumsum(wy * ys)
            total_w, total_wy, total_wy2 = cw[-1], cwy[-1], cwy2[-1]

            n = len(idx)
            pos = np.arange(n - 1)
            valid = (
                (xs[:-1] < xs[1:])
                & (pos + 1 >= min_leaf)
                & (n - pos - 1 >= min_leaf)
            )
            if not valid.any():
                continue
            pos = pos[valid]
            sse_left = cwy2[pos] - cwy[pos] ** 2 / cw[pos]
            rw = total_w - cw[pos]
            sse_right = (total_wy2 - cwy2[pos]) - (total_wy - cwy[pos]) ** 2 / rw
            scores = sse_left + sse_right
            k = int(np.argmin(scores))
            if scores[k] < best_score:
                best_score = float(scores[k])
                i = int(pos[k])
                best = (feat, float(0.5 * (xs[i] + xs[i + 1])))
        return best


@dataclass
class GBTModel:
    """A trained boosted ensemble for one target."""

    base_prediction: float
    trees: list[RegressionTree]
    learning_rate: float
    feature_names: list[str]
    target_name: str
    training_metrics: dict = field(default_factory=dict)
    hyperparams: GBTHyperparams = field(default_factory=GBTHyperparams)
    warning: str | None = None
    _forest: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def _compiled(self):
        """Stack all trees into flat arrays with per-tree node offsets.

        Flattening lets the batch traversal use ``ndarray.take`` on
        1-D arrays, which is markedly cheaper than 2-D fancy indexing
        for the small batches the optimizer sends through.
        """
        if self._forest is None:
            if not self.trees:
                self._forest = ()
            else:
                n_nodes = max(t.n_nodes for t in self.trees)
                T = len(self.trees)
                feat = np.full((T, n_nodes), _LEAF, dtype=np.int64)
                thr = np.zeros((T, n_nodes))
                left = np.zeros((T, n_nodes), dtype=np.int64)
                right = np.zeros((T, n_nodes), dtype=np.int64)
                val = np.zeros((T, n_nodes))
                depth = 0
                for k, t in enumerate(self.trees):
                    m = t.n_nodes
                    feat[k, :m] = t.feature
                    thr[k, :m] = t.threshold
                    left[k, :m] = t.left
                    right[k, :m] = t.right
                    val[k, :m] = t.value
                    depth = max(depth, t.max_depth)
                tree_base = np.arange(T, dtype=np.int64)[:, None] * n_nodes
                self._forest = (
                    feat.ravel(),
                    thr.ravel(),
                    (left + tree_base).ravel(),
                    (right + tree_base).ravel(),
                    val.ravel(),
                    depth,
                    tree_base.reshape(1, -1),
                    T,
                )
        return self._forest

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise SchemaError(
                f"expected feature matrix with {len(self.feature_names)} columns "
                f"({self.feature_names}), got shape {getattr(X, 'shape', None)}"
            )
        n = X.shape[0]
        out = np.full(n, self.base_prediction)
        forest = self._compiled()
        if not forest:
            return out
        feat, thr, left, right, val, depth, offsets, T = forest
        n_features = X.shape[1]
        x_flat = X.ravel()
        row_offset = (np.arange(n, dtype=np.int64) * n_features)[:, None]
        # Absolute node ids: tree k's node j lives at k*n_nodes + j.
        idx = np.broadcast_to(offsets, (n, T)).copy()
        for _ in range(depth):
            f = feat.take(idx)
            at_leaf = f == _LEAF
            xv = x_flat.take(row_offset + np.maximum(f, 0))
            go_left = xv <= thr.take(idx)
            nxt = np.where(go_left, left.take(idx), right.take(idx))
            idx = np.where(at_leaf, idx, nxt)
        out += self.learning_rate * val.take(idx).sum(axis=1)
        return out

    def predict(self, features) -> float:
        values = np.asarray(features, dtype=float)
        if values.ndim != 1 or len(values) != len(self.feature_names):
            raise SchemaError(
                f"expected {len(self.feature_names)} features "
                f"({self.feature_names}), got {features!r}"
            )
        return float(self.predict_batch(values[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "base_prediction": self.base_prediction,
            "learning_rate": self.learning_rate,
            "feature_names": list(self.feature_names),
            "target_name": self.target_name,
            "training_metrics": dict(self.training_metrics),
            "hyperparams": self.hyperparams.to_dict(),
            "warning": self.warning,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GBTModel":
        return cls(
            base_prediction=float(payload["base_prediction"]),
            trees=[RegressionTree.from_dict(t) for t in payload["trees"]],
            learning_rate=float(payload["learning_rate"]),
            feature_names=list(payload["feature_names"]),
            target_name=payload["target_name"],
            training_metrics=dict(payload.get("training_metrics", {})),
            hyperparams=GBTHyperparams(**payload.get("hyperparams", {})),
            warning=payload.get("warning"),
        )


def fit_arrays(
    X,
    y,
    feature_names: list[str],
    target_name: str,
    hyperparams: GBTHyperparams | None = None,
    sample_weight=None,
) -> GBTModel:
    """Stagewise least-squares boosting on a feature matrix."""
    if hyperparams is None:
        hyperparams = GBTHyperparams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise TrainingError(f"bad training shapes X={X.shape} y={y.shape}")
    if len(feature_names) != X.shape[1]:
        raise TrainingError(
            f"{len(feature_names)} feature names for {X.shape[1]} columns"
        )
    if len(set(feature_names)) != len(feature_names):
        raise TrainingError(f"feature names must be distinct: {feature_names}")
    n = X.shape[0]
    if n < 2 * hyperparams.min_samples_leaf:
        raise TrainingError(
            f"need at least {2 * hyperparams.min_samples_leaf} rows, got {n}"
        )
    if sample_weight is None:
        w = np.ones(n)
    else:
        w = np.asarray(sample_weight, dtype=float)
        if len(w) != n or (w <= 0).any():
            raise TrainingError("sample_weight must be positive, one per row")

    base = float(np.average(y, weights=w))
    model = GBTModel(
        base_prediction=base,
        trees=[],
        learning_rate=hyperparams.learning_rate,
        feature_names=list(feature_names),
        target_name=target_name,
        hyperparams=hyperparams,
    )
    if np.all(y == y[0]):
        model.warning = "constant target; base-only model with zero trees"
        model.training_metrics = {"rmse": 0.0, "mbe_percent": 0.0, "cv_rmse_percent": 0.0}
        return model

    sorted_rows = [
        np.argsort(X[:, f], kind="stable").astype(np.intp) for f in range(X.shape[1])
    ]
    pred = np.full(n, base)
    for _ in range(hyperparams.n_trees):
        builder = _TreeBuilder(
            X, y - pred, w, hyperparams.max_depth, hyperparams.min_samples_leaf
        )
        tree = builder.build(sorted_rows)
        model.trees.append(tree)
        pred += hyperparams.learning_rate * builder.train_pred

    residual = pred - y
    rmse = float(np.sqrt(np.mean(residual**2)))
    mean_actual = float(np.mean(y))
    model.training_metrics = {
        "rmse": rmse,
        "mbe_percent": 100.0 * float(np.mean(residual)) / mean_actual
        if mean_actual != 0
        else float("nan"),
        "cv_rmse_percent": 100.0 * rmse / mean_actual
        if mean_actual != 0
        else float("nan"),
    }
    return model


def fit(
    data,
    target: str,
    features: list[str],
    hyperparams: GBTHyperparams | None = None,
    sample_weight=None,
) -> GBTModel:
    """Train a boosted model on dataset columns (see :mod:`cwloop.datagen`)."""
    X = np.column_stack([data.column(f) for f in features]).astype(float)
    y = data.column(target).astype(float)
    return fit_arrays(X, y, features, target, hyperparams, sample_weight)
