"""Outcome predictors: SMOTE balancing plus decision-tree / bagged-forest classifiers.

Trees use histogram split search (features are pre-binned once per training
set), Gini impurity, and per-node random feature subsets; forests aggregate
leaf count histograms and break argmax ties toward the lower class index.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Agent, seeded_rng
from .oracle import Corpus
from .population import encode_pair_scaled

try:  # JIT descent is a ~10x win on per-minute scoring; plain numpy otherwise
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def _descend_jit(X, feats, thr, lefts, rights, offsets):  # pragma: no cover
        n = X.shape[0]
        t = offsets.shape[0]
        out = np.empty((t, n), dtype=np.int64)
        # tree-outer order keeps each tree's node arrays cache-hot across rows
        for j in prange(t):
            root = offsets[j]
            for i in range(n):
                node = root
                f = feats[node]
                while f >= 0:
                    if X[i, f] <= thr[node]:
                        node = lefts[node]
                    else:
                        node = rights[node]
                    f = feats[node]
                out[j, i] = node
        return out.T

except Exception:  # pragma: no cover
    _descend_jit = None

MODEL_FORMAT = "matchlab-forest"
MODEL_VERSION = 1

DEFAULT_N_TREES = 100
DEFAULT_MAX_DEPTH = 12
DEFAULT_MIN_LEAF = 5
DEFAULT_SMOTE_K = 5


class SmoteError(ValueError):
    pass


@dataclass
class Dataset:
    """Feature matrix with integer class labels in [0, class_count)."""

    X: np.ndarray
    y: np.ndarray
    class_count: int
    provenance: np.ndarray | None = None  # synthetic rows: (base_idx, neighbor_idx, u)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValueError("X must be (n, d) aligned with y")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.class_count):
            raise ValueError("labels must lie in [0, class_count)")

    def __len__(self) -> int:
        return len(self.y)


def class_counts(y: np.ndarray, class_count: int) -> np.ndarray:
    return np.bincount(y, minlength=class_count)


def _knn_indices(X: np.ndarray, k: int, chunk: int = 512) -> np.ndarray:
    """Indices of the k nearest same-set neighbours (self excluded), row-wise."""
    n = len(X)
    out = np.empty((n, k), dtype=int)
    sq = np.einsum("ij,ij->i", X, X)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d2 = sq[start:stop, None] - 2.0 * (X[start:stop] @ X.T) + sq[None, :]
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        # stable order inside the neighbourhood for reproducibility
        rows = np.arange(stop - start)[:, None]
        order = np.argsort(d2[rows, part], axis=1, kind="stable")
        out[start:stop] = part[rows, order]
    return out


def smote_oversample(data: Dataset, k: int = DEFAULT_SMOTE_K, rng: np.random.Generator | None = None) -> Dataset:
    """Balance every class up to the majority count via segment interpolation.

    Each synthetic row is x + u * (x' - x) with u ~ U[0, 1], x a minority row
    and x' one of its k nearest same-class neighbours. Original rows are kept
    verbatim; synthetic provenance (base row, neighbour row, u) is attached
    for auditability.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = rng if rng is not None else seeded_rng(0, "smote")
    counts = class_counts(data.y, data.class_count)
    present = np.nonzero(counts)[0]
    majority = counts.max() if len(counts) else 0
    if all(counts[c] == majority for c in present):
        return data

    X_parts = [data.X]
    y_parts = [data.y]
    prov_parts = []
    for c in present:
        n_c = int(counts[c])
        if n_c == majority:
            continue
        if n_c < 2:
            raise SmoteError(
                f"class {c} has only {n_c} sample(s); SMOTE interpolation needs at least 2"
            )
        k_eff = min(k, n_c - 1)
        if k_eff < k:
            warnings.warn(
                f"class {c}: k={k} exceeds class size - 1; clamped to {k_eff}",
                stacklevel=2,
            )
        idx_c = np.nonzero(data.y == c)[0]
        Xc = data.X[idx_c]
        nn = _knn_indices(Xc, k_eff)
        need = majority - n_c
        base = rng.integers(0, n_c, size=need)
        pick = rng.integers(0, k_eff, size=need)
        u = rng.random(need)
        nb = nn[base, pick]
        synth = Xc[base] + u[:, None] * (Xc[nb] - Xc[base])
        X_parts.append(synth)
        y_parts.append(np.full(need, c, dtype=int))
        prov_parts.append(
            np.column_stack([idx_c[base], idx_c[nb], u])
        )
    prov = np.vstack(prov_parts) if prov_parts else None
    return Dataset(
        np.vstack(X_parts), np.concatenate(y_parts), data.class_count, provenance=prov
    )


@dataclass
class DecisionTree:
    """Array-encoded binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_hist: np.ndarray  # (n_nodes, class_count); zeros on internal nodes

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_hist(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            fx = np.where(internal, f, 0)
            go_left = X[np.arange(len(X)), fx] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return self.leaf_hist[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_hist": self.leaf_hist.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int32),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int32),
            np.asarray(d["right"], dtype=np.int32),
            np.asarray(d["leaf_hist"], dtype=float),
        )


class _BinnedFeatures:
    """Per-feature threshold candidates and integer codes for fast split search."""

    def __init__(self, X: np.ndarray, max_bins: int = 255):
        n, d = X.shape
        self.thresholds: list[np.ndarray] = []
        self.codes = np.empty((n, d), dtype=np.int32)
        for f in range(d):
            uniq = np.unique(X[:, f])
            if len(uniq) > max_bins + 1:
                qs = np.quantile(uniq, np.linspace(0, 1, max_bins + 1))
                uniq = np.unique(qs)
            thr = (uniq[:-1] + uniq[1:]) / 2.0
            self.thresholds.append(thr)
            self.codes[:, f] = np.searchsorted(thr, X[:, f], side="left")


def _build_tree(
    codes: np.ndarray,
    thresholds: list[np.ndarray],
    y: np.ndarray,
    class_count: int,
    max_depth: int,
    min_leaf: int,
    features_per_split: int,
    rng: np.random.Generator,
) -> DecisionTree:
    n_features = codes.shape[1]
    feature, threshold, left, right, hists = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        hists.append(np.zeros(class_count))
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        hist = np.bincount(y_node, minlength=class_count).astype(float)
        n = len(idx)
        pure = (hist > 0).sum() <= 1
        if depth >= max_depth or n < 2 * min_leaf or pure:
            hists[node] = hist
            continue
        parent_score = float((hist**2).sum()) / n
        best = None  # (gain_score, feature, bin, n_left)
        feats = rng.choice(n_features, size=min(features_per_split, n_features), replace=False)
        for f in feats:
            thr = thresholds[f]
            if len(thr) == 0:
                continue
            nb = len(thr) + 1
            c = codes[idx, f]
            h = np.bincount(c * class_count + y_node, minlength=nb * class_count).reshape(
                nb, class_count
            )
            prefix = np.cumsum(h, axis=0)[:-1]  # split at bin b keeps codes <= b left
            nL = prefix.sum(axis=1)
            nR = n - nL
            valid = (nL >= min_leaf) & (nR >= min_leaf)
            if not valid.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                score = (prefix**2).sum(axis=1) / nL + (
                    (hist - prefix) ** 2
                ).sum(axis=1) / nR
            score[~valid] = -np.inf
            b = int(np.argmax(score))
            if score[b] > parent_score + 1e-12 and (best is None or score[b] > best[0]):
                best = (float(score[b]), int(f), b, int(nL[b]))
        if best is None:
            hists[node] = hist
            continue
        _, f, b, _ = best
        mask = codes[idx, f] <= b
        li, ri = new_node(), new_node()
        feature[node] = f
        threshold[node] = float(thresholds[f][b])
        left[node] = li
        right[node] = ri
        stack.append((ri, idx[~mask], depth + 1))
        stack.append((li, idx[mask], depth + 1))
    return DecisionTree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.vstack(hists),
    )


def train_tree(
    data: Dataset,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    features_per_split: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Greedy Gini tree over a random feature subset at each split."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = rng if rng is not None else seeded_rng(0, "tree")
    fps = features_per_split or max(1, int(np.sqrt(data.X.shape[1])))
    binned = _BinnedFeatures(data.X)
    return _build_tree(
        binned.codes, binned.thresholds, data.y, data.class_count, max_depth, min_leaf, fps, rng
    )


@dataclass
class ForestModel:
    """Bagged decision-tree ensemble with frozen feature scaling metadata."""

    trees: list[DecisionTree]
    class_count: int
    class_labels: list[int]
    n_features: int
    n_trees: int
    max_depth: int
    min_leaf: int
    features_per_split: int
    training_seed: int
    bootstrap: bool = True
    scaling: dict = field(default_factory=dict)
    _flat: tuple | None = field(default=None, repr=False, compare=False)

    def _flattened(self):
        if self._flat is None:
            offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]])
            feats = np.concatenate([t.feature for t in self.trees])
            thr = np.concatenate([t.threshold for t in self.trees])
            lefts = np.concatenate(
                [t.left + off for t, off in zip(self.trees, offsets)]
            )
            rights = np.concatenate(
                [t.right + off for t, off in zip(self.trees, offsets)]
            )
            hist = np.vstack([t.leaf_hist for t in self.trees])
            totals = hist.sum(axis=1, keepdims=True)
            totals[totals == 0] = 1.0
            self._flat = (
                offsets.astype(np.int64),
                feats,
                thr,
                lefts,
                rights,
                hist,
                hist / totals,
            )
        return self._flat

    def _descend(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            got = X.shape[1] if X.ndim == 2 else X.shape
            raise ValueError(
                f"feature dimension mismatch: model expects {self.n_features}, got {got}"
            )
        offsets, feats, thr, lefts, rights, _, _ = self._flattened()
        n, t = len(X), len(self.trees)
        if _descend_jit is not None:
            return _descend_jit(
                np.ascontiguousarray(X), feats, thr, lefts, rights, offsets
            )
        # flat (row, tree) state vector; rows that hit a leaf drop out of the loop
        state = np.tile(offsets.astype(np.int64), n)
        rowidx = np.repeat(np.arange(n), t)
        active = np.arange(n * t)
        while active.size:
            st = state[active]
            f = feats[st]
            at_leaf = f < 0
            if at_leaf.any():
                active = active[~at_leaf]
                if not active.size:
                    break
                st = state[active]
                f = feats[st]
            go_left = X[rowidx[active], f] <= thr[st]
            state[active] = np.where(go_left, lefts[st], rights[st])
        return state.reshape(n, t)

    def predict_hist(self, X: np.ndarray) -> np.ndarray:
        """Summed raw leaf count histograms over all trees, shape (n, class_count)."""
        state = self._descend(X)
        hist = self._flattened()[5]
        return hist[state].sum(axis=1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Mean of per-leaf class distributions across trees (soft vote)."""
        state = self._descend(X)
        norm = self._flattened()[6]
        return norm[state].sum(axis=1) / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class labels from the soft vote; argmax ties resolve toward the lower class index."""
        h = self.predict_proba(X)
        return np.asarray(self.class_labels)[np.argmax(h, axis=1)]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "class_count": self.class_count,
            "class_labels": self.class_labels,
            "n_features": self.n_features,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
            "training_seed": self.training_seed,
            "bootstrap": self.bootstrap,
            "scaling": self.scaling,
            "trees": [t.to_dict() for t in self.trees],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a {MODEL_FORMAT} file")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        return cls(
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
            class_count=d["class_count"],
            class_labels=list(d["class_labels"]),
            n_features=d["n_features"],
            n_trees=d["n_trees"],
            max_depth=d["max_depth"],
            min_leaf=d["min_leaf"],
            features_per_split=d["features_per_split"],
            training_seed=d["training_seed"],
            bootstrap=d["bootstrap"],
            scaling=d.get("scaling", {}),
        )

    @classmethod
    def load(cls, path) -> "ForestModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def train_forest(
    data: Dataset,
    n_trees: int = DEFAULT_N_TREES,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    features_per_split: int | None = None,
    training_seed: int = 0,
    bootstrap: bool = True,
    class_labels: list[int] | None = None,
    scaling: dict | None = None,
) -> ForestModel:
    """Bagged forest: each tree sees a bootstrap resample and its own RNG stream."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    fps = features_per_split or max(1, int(np.sqrt(data.X.shape[1])))
    binned = _BinnedFeatures(data.X)
    trees = []
    for i in range(n_trees):
        tree_rng = seeded_rng(training_seed, f"forest.tree{i}")
        if bootstrap:
            boot_rng = seeded_rng(training_seed, f"forest.boot{i}")
            idx = boot_rng.integers(0, len(data), size=len(data))
            codes, y = binned.codes[idx], data.y[idx]
        else:
            codes, y = binned.codes, data.y
        trees.append(
            _build_tree(
                codes, binned.thresholds, y, data.class_count, max_depth, min_leaf, fps, tree_rng
            )
        )
    return ForestModel(
        trees=trees,
        class_count=data.class_count,
        class_labels=class_labels or list(range(data.class_count)),
        n_features=data.X.shape[1],
        n_trees=n_trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
        features_per_split=fps,
        training_seed=training_seed,
        bootstrap=bootstrap,
        scaling=scaling or {},
    )


def _encode_for_model(model: ForestModel, seeker: Agent, counselor: Agent) -> np.ndarray:
    by = tuple(model.scaling.get("birth_year_range", (1950, 2008)))
    su = tuple(model.scaling.get("signup_day_range", (0, 3650)))
    return encode_pair_scaled(seeker, counselor, by, su)


def predict_rating(model: ForestModel, seeker: Agent, counselor: Agent) -> int:
    """Predicted 1-5 chat rating for one pair."""
    return int(model.predict(_encode_for_model(model, seeker, counselor)[None, :])[0])


def predict_block(model: ForestModel, seeker: Agent, counselor: Agent) -> int:
    """Predicted 0/1 block outcome for one pair."""
    return int(model.predict(_encode_for_model(model, seeker, counselor)[None, :])[0])


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    confusion: np.ndarray  # (class_count, class_count), rows = true

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.tolist(),
        }


def classification_report(y_true: np.ndarray, y_pred: np.ndarray, class_count: int) -> EvalReport:
    if len(y_true) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    conf = np.zeros((class_count, class_count), dtype=int)
    np.add.at(conf, (y_true, y_pred), 1)
    accuracy = float(np.trace(conf) / conf.sum())
    f1s = []
    for c in range(class_count):
        tp = conf[c, c]
        fp = conf[:, c].sum() - tp
        fn = conf[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return EvalReport(accuracy, float(np.mean(f1s)), conf)


def evaluate(model: ForestModel, test: Dataset) -> EvalReport:
    """Exact-match accuracy, macro F1, and confusion counts on held-out rows."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    label_to_idx = {lbl: i for i, lbl in enumerate(model.class_labels)}
    pred = model.predict(test.X)
    y_pred = np.array([label_to_idx[int(p)] for p in pred])
    return classification_report(test.y, y_pred, model.class_count)


def rating_datasets(corpus: Corpus) -> tuple[Dataset, Dataset]:
    tr, te = corpus.is_train, ~corpus.is_train
    return (
        Dataset(corpus.features[tr], corpus.ratings[tr] - 1, 5),
        Dataset(corpus.features[te], corpus.ratings[te] - 1, 5),
    )


def blocking_datasets(corpus: Corpus) -> tuple[Dataset, Dataset]:
    tr, te = corpus.is_train, ~corpus.is_train
    return (
        Dataset(corpus.features[tr], corpus.blocks[tr], 2),
        Dataset(corpus.features[te], corpus.blocks[te], 2),
    )


def train_outcome_models(
    corpus: Corpus,
    scaling: dict,
    n_trees: int = DEFAULT_N_TREES,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    smote_k: int = DEFAULT_SMOTE_K,
    training_seed: int = 0,
) -> tuple[ForestModel, EvalReport, ForestModel, EvalReport]:
    """Train the rating and blocking forests on the corpus train split."""
    r_train, r_test = rating_datasets(corpus)
    b_train, b_test = blocking_datasets(corpus)
    r_bal = smote_oversample(r_train, smote_k, seeded_rng(training_seed, "smote.rating"))
    b_bal = smote_oversample(b_train, smote_k, seeded_rng(training_seed, "smote.blocking"))
    rating_model = train_forest(
        r_bal,
        n_trees,
        max_depth,
        min_leaf,
        training_seed=training_seed,
        class_labels=[1, 2, 3, 4, 5],
        scaling=scaling,
    )
    blocking_model = train_forest(
        b_bal,
        n_trees,
        max_depth,
        min_leaf,
        training_seed=training_seed + 1,
        class_labels=[0, 1],
        scaling=scaling,
    )
    return (
        rating_model,
        evaluate(rating_model, r_test),
        blocking_model,
        evaluate(blocking_model, b_test),
    )
