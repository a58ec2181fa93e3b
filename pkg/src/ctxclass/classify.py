"""The two classifiers: single-nearest-neighbor and one-vs-rest linear discriminant.

Both consume the primary features of an encoded dataset as plain real
vectors and are deterministic: ties break toward the lowest training-row
index (nearest neighbor) or the lowest class index (discriminant).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .data import MISSING, Dataset, FeatureSchema

PIVOT_TOL = 1e-10


def similarity(x: Sequence[float], y: Sequence[float]) -> float:
    """Sum over features of 1 - |x_i - y_i|.

    Equals d - L1(x, y) for d features, so the most similar vector is the
    L1-nearest one.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    # computed as d - L1 so the identity holds bit-exactly, not just in math
    return float(len(x) - sum(abs(a - b) for a, b in zip(x, y)))


def _feature_matrix(dataset: Dataset) -> np.ndarray:
    idx = dataset.schema.primary_indices
    rows = []
    for row in dataset.rows:
        vec = []
        for i in idx:
            cell = row[i]
            if cell is MISSING:
                raise ValueError("classifier input contains MISSING cells; impute first")
            if isinstance(cell, str):
                raise ValueError("classifier input contains symbols; encode_numeric first")
            vec.append(float(cell))
        rows.append(vec)
    return np.asarray(rows, dtype=float)


def _query_vector(schema: FeatureSchema, row: Sequence) -> np.ndarray:
    return np.asarray(
        [float(row[i]) for i in schema.primary_indices], dtype=float
    )


# ---------------------------------------------------------------------------
# Single-nearest neighbor

@dataclass(frozen=True)
class NearestNeighborModel:
    schema: FeatureSchema
    features: np.ndarray
    labels: tuple[str, ...]

    def describe(self) -> str:
        lines = [f"nearest-neighbor model: {len(self.labels)} stored rows"]
        for i, lab in enumerate(self.labels):
            lines.append(f"row {i}: class={lab}")
        return "\n".join(lines)


def nn_fit(train: Dataset) -> NearestNeighborModel:
    if train.n_rows == 0:
        raise ValueError("empty training set")
    return NearestNeighborModel(train.schema, _feature_matrix(train), train.class_labels())


def nn_predict(model: NearestNeighborModel, query) -> str:
    """Class of the L1-nearest stored row; earliest row wins ties."""
    if isinstance(query, (tuple, list)) and len(query) == len(model.schema):
        vec = _query_vector(model.schema, query)
    else:
        vec = np.asarray(query, dtype=float)
    dists = np.abs(model.features - vec).sum(axis=1)
    return model.labels[int(dists.argmin())]


def nn_predict_dataset(model: NearestNeighborModel, dataset: Dataset) -> tuple[str, ...]:
    """Vectorized prediction for every row of a dataset."""
    q = _feature_matrix(dataset)
    dists = np.abs(q[:, None, :] - model.features[None, :, :]).sum(axis=2)
    nearest = dists.argmin(axis=1)  # argmin returns the first minimum
    return tuple(model.labels[i] for i in nearest)


# ---------------------------------------------------------------------------
# One-vs-rest linear discriminant with forward selection

@dataclass(frozen=True)
class SelectionParams:
    enabled: bool = True
    f_enter: float = 4.0  # standard entry threshold for forward selection
    max_features: int | None = None


@dataclass(frozen=True)
class ClassEquation:
    label: str
    selected: tuple[int, ...]  # positions within the primary-feature vector
    intercept: float
    coefs: tuple[float, ...]
    dropped: tuple[int, ...] = ()

    def evaluate(self, vec: np.ndarray) -> float:
        return self.intercept + float(
            sum(c * vec[i] for c, i in zip(self.coefs, self.selected))
        )


@dataclass(frozen=True)
class LinearDiscriminantModel:
    schema: FeatureSchema
    equations: tuple[ClassEquation, ...]  # in class alphabet order

    def describe(self) -> str:
        lines = []
        for eq in self.equations:
            terms = " ".join(
                f"{c:+.6g}*x{i}" for c, i in zip(eq.coefs, eq.selected)
            )
            lines.append(f"class {eq.label}: y = {eq.intercept:.6g} {terms}".rstrip())
            if eq.dropped:
                lines.append(f"  dropped (singular): {list(eq.dropped)}")
        return "\n".join(lines)


def _lstsq_rss(design: np.ndarray, y: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    r = y - design @ coef
    return float(r @ r)


def _fit_full(x: np.ndarray, y: np.ndarray) -> tuple[float, tuple, tuple, tuple]:
    """Least squares on all features via pivoted QR; near-singular columns
    (pivot below PIVOT_TOL of the leading pivot) are dropped."""
    n, d = x.shape
    # center the columns first: the intercept is always in the basis, so any
    # column collinear with it (or with the others) must pivot out here
    centered = x - x.mean(axis=0)
    _, r, piv = scipy.linalg.qr(centered, mode="economic", pivoting=True)
    diag = np.abs(np.diag(np.atleast_2d(r)))
    lead = diag[0] if diag.size else 0.0
    selected = tuple(sorted(piv[j] for j in range(len(diag)) if diag[j] > PIVOT_TOL * lead))
    design = np.hstack([np.ones((n, 1)), x[:, selected]])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    intercept = float(coef[0])
    coefs = tuple(float(c) for c in coef[1:])
    dropped = tuple(sorted(set(range(d)) - set(selected)))
    return intercept, selected, coefs, dropped


def _fit_forward(
    x: np.ndarray, y: np.ndarray, params: SelectionParams
) -> tuple[float, tuple, tuple, tuple]:
    """Greedy forward selection: admit the feature with the largest residual
    sum-of-squares reduction while its partial F statistic exceeds f_enter."""
    n, d = x.shape
    limit = d if params.max_features is None else min(d, params.max_features)
    selected: list[int] = []
    ones = np.ones((n, 1))
    rss = _lstsq_rss(ones, y)
    while len(selected) < limit:
        best = None
        for j in range(d):
            if j in selected:
                continue
            design = np.hstack([ones, x[:, selected + [j]]])
            cand = _lstsq_rss(design, y)
            if best is None or cand < best[1]:
                best = (j, cand)
        if best is None:
            break
        j, new_rss = best
        p = len(selected) + 2  # intercept + selected + candidate
        if n - p <= 0:
            break
        # an RSS drop at float-noise scale is no evidence; without this guard
        # the partial F becomes a ratio of rounding errors once the fit is
        # already (numerically) perfect
        if rss - new_rss <= 1e-10 * max(1.0, float(y @ y)):
            break
        if new_rss <= 0.0:
            f_stat = np.inf if rss > 0.0 else 0.0
        else:
            f_stat = (rss - new_rss) / (new_rss / (n - p))
        if f_stat <= params.f_enter:
            break
        selected.append(j)
        rss = new_rss
    design = np.hstack([ones, x[:, selected]])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    intercept = float(coef[0])
    coefs = tuple(float(c) for c in coef[1:])
    dropped = tuple(sorted(set(range(d)) - set(selected)))
    return intercept, tuple(selected), coefs, dropped


def mlr_fit(train: Dataset, selection: SelectionParams | None = None) -> LinearDiscriminantModel:
    """One 0/1-target least-squares equation per class, intercept included."""
    if train.n_rows == 0:
        raise ValueError("empty training set")
    selection = selection or SelectionParams()
    x = _feature_matrix(train)
    labels = train.class_labels()
    classes = train.schema.class_feature.alphabet
    equations = []
    for cls in classes:
        y = np.asarray([1.0 if lab == cls else 0.0 for lab in labels])
        if selection.enabled:
            intercept, sel, coefs, dropped = _fit_forward(x, y, selection)
        else:
            intercept, sel, coefs, dropped = _fit_full(x, y)
        equations.append(ClassEquation(cls, sel, intercept, coefs, dropped))
    return LinearDiscriminantModel(train.schema, tuple(equations))


def mlr_predict(model: LinearDiscriminantModel, query) -> str:
    """Class whose equation yields the largest value; lowest class index wins ties."""
    if isinstance(query, (tuple, list)) and len(query) == len(model.schema):
        vec = _query_vector(model.schema, query)
    else:
        vec = np.asarray(query, dtype=float)
    best_label, best_y = None, None
    for eq in model.equations:  # alphabet order, first max kept
        yval = eq.evaluate(vec)
        if best_y is None or yval > best_y:
            best_label, best_y = eq.label, yval
    return best_label


def mlr_predict_dataset(model: LinearDiscriminantModel, dataset: Dataset) -> tuple[str, ...]:
    q = _feature_matrix(dataset)
    scores = np.empty((q.shape[0], len(model.equations)))
    for k, eq in enumerate(model.equations):
        scores[:, k] = eq.intercept
        for c, i in zip(eq.coefs, eq.selected):
            scores[:, k] += c * q[:, i]
    winners = scores.argmax(axis=1)  # first maximum = lowest class index
    return tuple(model.equations[int(w)].label for w in winners)
