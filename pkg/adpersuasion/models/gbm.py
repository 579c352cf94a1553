"""
Least-squares gradient boosting over depth-limited regression trees.

Trees are grown level by level with an exact greedy split search over the
sorted values of every feature. A row goes left when ``x[feature] <=
threshold``, where the threshold is an observed feature value. Equal gains
go to the lowest feature index, then the lowest threshold. Training rows are
put into a canonical order first, so the fitted model does not depend on the
order rows arrive in.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from adpersuasion.exceptions import DimensionMismatch, EmptyInput, LengthMismatch

logger = logging.getLogger(__name__)

# a split must explain more than this share of the node's sum of squares
_MIN_RELATIVE_GAIN = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    max_depth: int = 5
    n_trees: int = 200
    min_samples_leaf: int = 20

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be non-negative, got {self.max_depth}")
        if self.n_trees < 0:
            raise ValueError(f"n_trees must be non-negative, got {self.n_trees}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be at least 1, got {self.min_samples_leaf}")

    def to_dict(self) -> Dict[str, Any]:
        return {"learning_rate": self.learning_rate, "max_depth": self.max_depth,
                "n_trees": self.n_trees, "min_samples_leaf": self.min_samples_leaf}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Hyperparams":
        return cls(float(data["learning_rate"]), int(data["max_depth"]),
                   int(data["n_trees"]), int(data["min_samples_leaf"]))


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """
    Flat array form of one tree. Node 0 is the root; ``feature`` is -1 at
    leaves, whose ``value`` already includes the learning rate.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            idx = np.flatnonzero(feat >= 0)
            if idx.size == 0:
                return node
            current = node[idx]
            go_left = X[idx, feat[idx]] <= self.threshold[current]
            node[idx] = np.where(go_left, self.left[current], self.right[current])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self, node: int = 0) -> Dict[str, Any]:
        if self.feature[node] < 0:
            return {"leaf": float(self.value[node])}
        return {"feature": int(self.feature[node]),
                "threshold": float(self.threshold[node]),
                "gain": float(self.gain[node]),
                "left": self.to_dict(int(self.left[node])),
                "right": self.to_dict(int(self.right[node]))}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RegressionTree":
        builder = _TreeBuilder()
        queue = [(data, builder.add())]
        while queue:
            spec, node = queue.pop(0)
            if "leaf" in spec:
                builder.value[node] = float(spec["leaf"])
                continue
            left, right = builder.add(), builder.add()
            builder.split(node, int(spec["feature"]), float(spec["threshold"]), float(spec["gain"]), left, right)
            queue.append((spec["left"], left))
            queue.append((spec["right"], right))
        return builder.build()


class _TreeBuilder:
    def __init__(self):
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []
        self.gain: List[float] = []

    def add(self) -> int:
        for arr, default in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                             (self.right, -1), (self.value, 0.0), (self.gain, 0.0)):
            arr.append(default)
        return len(self.feature) - 1

    def split(self, node: int, feature: int, threshold: float, gain: float, left: int, right: int) -> None:
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.gain[node] = gain
        self.left[node] = left
        self.right[node] = right

    def build(self) -> RegressionTree:
        arrays = (np.array(self.feature, dtype=np.int64), np.array(self.threshold, dtype=np.float64),
                  np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                  np.array(self.value, dtype=np.float64), np.array(self.gain, dtype=np.float64))
        for arr in arrays:
            arr.setflags(write=False)
        return RegressionTree(*arrays)


def _best_splits(X: np.ndarray, residual: np.ndarray, presorted: Sequence[np.ndarray], row_slot: np.ndarray,
                 n_slots: int, tot_sum: np.ndarray, tot_cnt: np.ndarray, min_gain: np.ndarray,
                 min_leaf: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Best (feature, threshold, gain) for every frontier node ("slot").

    Gain is the least-squares reduction left_sum^2/n_l + right_sum^2/n_r - sum^2/n.
    Slots without an admissible split keep feature -1.
    """
    best_feat = np.full(n_slots, -1, dtype=np.int64)
    best_thr = np.zeros(n_slots)
    best_gain = min_gain.copy()
    slot_ids = np.arange(n_slots)
    key_dtype = np.uint16 if n_slots < 2 ** 16 else np.int64

    for f, order in enumerate(presorted):
        slots = row_slot[order]
        keep = slots >= 0
        rows, slots = order[keep], slots[keep]
        # stable regroup by node keeps each node's rows in ascending feature order
        grouping = np.argsort(slots.astype(key_dtype), kind="stable")
        rows, slots = rows[grouping], slots[grouping]
        vals = X[rows, f]
        cum = np.cumsum(residual[rows])
        starts = np.searchsorted(slots, slot_ids, side="left")
        before = np.where(starts > 0, cum[np.maximum(starts - 1, 0)], 0.0)

        left_sum = cum - before[slots]
        left_cnt = np.arange(len(rows)) - starts[slots] + 1
        right_cnt = tot_cnt[slots] - left_cnt
        right_sum = tot_sum[slots] - left_sum

        boundary = np.zeros(len(rows), dtype=bool)
        boundary[:-1] = (vals[1:] != vals[:-1]) & (slots[1:] == slots[:-1])
        valid = boundary & (left_cnt >= min_leaf) & (right_cnt >= min_leaf)
        if not valid.any():
            continue
        pos = np.flatnonzero(valid)
        s = slots[pos]
        gain = (left_sum[pos] ** 2 / left_cnt[pos] + right_sum[pos] ** 2 / right_cnt[pos]
                - tot_sum[s] ** 2 / tot_cnt[s])

        seg_max = np.full(n_slots, -np.inf)
        np.maximum.at(seg_max, s, gain)
        first = gain == seg_max[s]
        first_slots, first_idx = np.unique(s[first], return_index=True)
        chosen = pos[first][first_idx]
        improved = seg_max[first_slots] > best_gain[first_slots]
        upd = first_slots[improved]
        best_gain[upd] = seg_max[upd]
        best_feat[upd] = f
        best_thr[upd] = vals[chosen[improved]]
    return best_feat, best_thr, best_gain


def fit_tree(X: np.ndarray, residual: np.ndarray, presorted: Sequence[np.ndarray],
             max_depth: int, min_samples_leaf: int, learning_rate: float) -> Tuple[RegressionTree, np.ndarray]:
    """
    Fit one least-squares regression tree to ``residual``.

    Returns:
        The tree and the leaf index of every training row
    """
    n = X.shape[0]
    builder = _TreeBuilder()
    builder.add()
    node_of = np.zeros(n, dtype=np.int64)
    frontier = [0] if n >= 2 * min_samples_leaf else []

    for _ in range(max_depth):
        if not frontier:
            break
        slot_of_node = np.full(len(builder.feature), -1, dtype=np.int64)
        slot_of_node[frontier] = np.arange(len(frontier))
        row_slot = slot_of_node[node_of]
        active = row_slot >= 0
        k = len(frontier)
        tot_sum = np.bincount(row_slot[active], weights=residual[active], minlength=k)
        tot_cnt = np.bincount(row_slot[active], minlength=k)
        tot_ss = np.bincount(row_slot[active], weights=residual[active] ** 2, minlength=k)
        min_gain = _MIN_RELATIVE_GAIN * tot_ss

        feat, thr, gain = _best_splits(X, residual, presorted, row_slot, k, tot_sum, tot_cnt,
                                       min_gain, min_samples_leaf)
        child_left = np.full(k, -1, dtype=np.int64)
        child_right = np.full(k, -1, dtype=np.int64)
        for slot, node in enumerate(frontier):
            if feat[slot] < 0:
                continue
            left, right = builder.add(), builder.add()
            builder.split(node, int(feat[slot]), float(thr[slot]), float(gain[slot]), left, right)
            child_left[slot], child_right[slot] = left, right

        moving = np.flatnonzero(active & (feat[np.maximum(row_slot, 0)] >= 0))
        slots = row_slot[moving]
        go_left = X[moving, feat[slots]] <= thr[slots]
        node_of[moving] = np.where(go_left, child_left[slots], child_right[slots])

        counts = np.bincount(node_of, minlength=len(builder.feature))
        frontier = [c for pair in zip(child_left, child_right) for c in pair
                    if c >= 0 and counts[c] >= 2 * min_samples_leaf]

    n_nodes = len(builder.feature)
    sums = np.bincount(node_of, weights=residual, minlength=n_nodes)
    counts = np.bincount(node_of, minlength=n_nodes)
    for node in np.flatnonzero(counts):
        builder.value[node] = learning_rate * (sums[node] / counts[node])
    return builder.build(), node_of


@dataclass
class GbmModel:
    """Initial prediction plus an ordered list of trees."""
    initial_prediction: float
    trees: List[RegressionTree]
    hyperparams: Hyperparams
    columns: Tuple[str, ...]
    training_loss: List[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def raw_predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} feature columns, got shape {X.shape}")
        out = np.full(X.shape[0], self.initial_prediction)
        for tree in self.trees:
            out = out + tree.predict(X)
        return out

    def feature_importance(self) -> Dict[str, float]:
        """Total split gain per feature, normalised to sum to 1 (all zero without splits)."""
        totals = np.zeros(self.n_features)
        for tree in self.trees:
            internal = tree.feature >= 0
            np.add.at(totals, tree.feature[internal], tree.gain[internal])
        grand = totals.sum()
        shares = totals / grand if grand > 0 else totals
        return {col: float(v) for col, v in zip(self.columns, shares)}

    def to_dict(self) -> Dict[str, Any]:
        return {"initial_prediction": self.initial_prediction,
                "hyperparams": self.hyperparams.to_dict(),
                "columns": list(self.columns),
                "training_loss": list(self.training_loss),
                "trees": [tree.to_dict() for tree in self.trees]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GbmModel":
        return cls(initial_prediction=float(data["initial_prediction"]),
                   trees=[RegressionTree.from_dict(t) for t in data["trees"]],
                   hyperparams=Hyperparams.from_dict(data["hyperparams"]),
                   columns=tuple(data["columns"]),
                   training_loss=[float(v) for v in data.get("training_loss", [])])


def canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order sorted by every feature column, then the target."""
    keys = (y,) + tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def train_gbm(X: np.ndarray, y: np.ndarray, hp: Hyperparams,
              columns: Optional[Sequence[str]] = None) -> GbmModel:
    """
    Fit a least-squares gradient-boosted ensemble.

    Stage m fits a tree to the residuals of stages 0..m-1 and adds its leaf
    means scaled by the learning rate. There is no early stopping.

    Args:
        X: Feature matrix (rows x columns)
        y: Targets
        hp: Hyperparameters
        columns: Feature names kept as the model's manifest

    Returns:
        Trained model with the per-stage training MSE in ``training_loss``

    Raises:
        EmptyInput: No training rows
        LengthMismatch: Row counts of X and y differ
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("training set is empty")
    if X.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
    columns = tuple(columns) if columns is not None else tuple(f"x{j}" for j in range(X.shape[1]))
    if len(columns) != X.shape[1]:
        raise DimensionMismatch(f"{len(columns)} column names for {X.shape[1]} columns")

    order = canonical_order(X, y)
    X, y = X[order], y[order]
    presorted = [np.argsort(X[:, j], kind="stable") for j in range(X.shape[1])]

    init = float(np.mean(y))
    fitted = np.full(len(y), init)
    losses = [float(np.mean((y - fitted) ** 2))]
    trees = []
    for stage in range(hp.n_trees):
        tree, leaf_of = fit_tree(X, y - fitted, presorted, hp.max_depth, hp.min_samples_leaf, hp.learning_rate)
        fitted = fitted + tree.value[leaf_of]
        trees.append(tree)
        losses.append(float(np.mean((y - fitted) ** 2)))
        if logger.isEnabledFor(logging.DEBUG) and (stage + 1) % 50 == 0:
            logger.debug(f"Stage {stage + 1}/{hp.n_trees}: training MSE {losses[-1]:.6f}")
    logger.debug(f"Trained {hp} on {len(y)} rows, final training MSE {losses[-1]:.6f}")
    return GbmModel(initial_prediction=init, trees=trees, hyperparams=hp, columns=columns, training_loss=losses)


def predict(model: GbmModel, X: np.ndarray, bounds: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """
    Ensemble prediction, optionally clamped to ``bounds``.

    Raises:
        DimensionMismatch: Column count differs from the training features
    """
    out = model.raw_predict(X)
    if bounds is not None:
        out = np.clip(out, bounds[0], bounds[1])
    return out
