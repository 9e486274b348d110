"""Shape error after optimal translation and proper rotation, plus
agreement and convergence diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import PLAN_TOL, ContractViolation, RobotState, Vec2, as_array, plan_equal

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class AlignmentResult:
    rotation: np.ndarray
    centroids: tuple[Vec2, Vec2]
    aligned_points: np.ndarray
    error_mean_dist: float
    error_mean_sq: float
    reflection_corrected: bool


def _points(p) -> np.ndarray:
    if isinstance(p, np.ndarray):
        return np.asarray(p, dtype=float).reshape(-1, 2)
    return as_array(p)


def procrustes_align(actual, target) -> AlignmentResult:
    """Rotate the centered ``actual`` points onto the centered ``target``.

    Both inputs are sequences of :class:`Vec2` or ``(N, 2)`` arrays, matched
    by index. Scale is not factored out.
    """
    X = _points(actual)
    Y = _points(target)
    if X.shape != Y.shape:
        raise ContractViolation(f"point counts differ: {len(X)} vs {len(Y)}")
    n = len(X)
    if n < 2:
        raise ContractViolation("need at least two points")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ContractViolation("non-finite points")

    xbar, ybar = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - xbar, Y - ybar
    flipped = False
    if np.abs(Xc).max() <= DEGENERATE_TOL or np.abs(Yc).max() <= DEGENERATE_TOL:
        R = np.eye(2)
    else:
        # cross-covariance sum_i y_i x_i^T
        M = Yc.T @ Xc
        U, _, Vt = np.linalg.svd(M)
        R = U @ Vt
        if np.linalg.det(R) < 0:
            U = U.copy()
            U[:, -1] *= -1
            R = U @ Vt
            flipped = True
    aligned = Xc @ R.T
    resid = aligned - Yc
    sq = np.sum(resid**2, axis=1)
    return AlignmentResult(
        rotation=R,
        centroids=(Vec2(*xbar), Vec2(*ybar)),
        aligned_points=aligned,
        error_mean_dist=float(np.mean(np.sqrt(sq))),
        error_mean_sq=float(np.mean(sq)),
        reflection_corrected=flipped,
    )


def point_correspondence(actual, target) -> list[int]:
    """Greedy bijection: repeatedly match the globally closest unmatched pair.

    ``perm[i]`` is the target index matched to actual point ``i``.
    """
    X = _points(actual)
    Y = _points(target)
    if X.shape != Y.shape:
        raise ContractViolation(f"point counts differ: {len(X)} vs {len(Y)}")
    n = len(X)
    d = np.hypot(*(X[:, None, :] - Y[None, :, :]).transpose(2, 0, 1))
    # stable sort so equal distances resolve by (actual, target) index
    order = np.argsort(d, axis=None, kind="stable")
    perm = [-1] * n
    used = [False] * n
    matched = 0
    for flat in order:
        i, j = divmod(int(flat), n)
        if perm[i] < 0 and not used[j]:
            perm[i] = j
            used[j] = True
            matched += 1
            if matched == n:
                break
    return perm


def plan_agreement(states: Sequence[RobotState], tol: float = PLAN_TOL) -> float:
    """Share of robots in the largest group holding equal plans."""
    if not states:
        raise ContractViolation("no robots")
    reps: list = []
    sizes: list[int] = []
    for s in states:
        for k, rep in enumerate(reps):
            if plan_equal(rep, s.plan, tol):
                sizes[k] += 1
                break
        else:
            reps.append(s.plan)
            sizes.append(1)
    return max(sizes) / len(states)


def converged(error_curve: Sequence[float], epsilon: float, window: int) -> int | None:
    """First round from which ``window`` consecutive errors are all ``<= epsilon``."""
    if epsilon <= 0 or window < 1:
        raise ContractViolation("need epsilon > 0 and window >= 1")
    run = 0
    for r, e in enumerate(error_curve):
        run = run + 1 if e <= epsilon else 0
        if run == window:
            return r - window + 1
    return None


class ProcrustesAligner(TransformerMixin, BaseEstimator):
    """Estimator wrapper: learn the rigid map taking ``X`` onto ``y``.

    ``fit(X, y)`` takes two ``(N, 2)`` arrays matched by row.
    ``transform`` maps points into the target frame and ``score`` returns the
    negated mean aligned distance, so larger is better.
    """

    def __init__(self, match: str = "index"):
        self.match = match

    def fit(self, X, y):
        X = check_array(X, ensure_min_samples=2)
        y = check_array(y, ensure_min_samples=2)
        if X.shape[1] != 2 or y.shape != X.shape:
            raise ValueError("expected two (N, 2) arrays of equal shape")
        if self.match == "greedy":
            y = y[point_correspondence(X, y)]
        elif self.match != "index":
            raise ValueError(f"unknown match mode {self.match!r}")
        res = procrustes_align(X, y)
        self.rotation_ = res.rotation
        self.source_centroid_ = np.array(list(res.centroids[0]))
        self.target_centroid_ = np.array(list(res.centroids[1]))
        self.reflection_corrected_ = res.reflection_corrected
        self.error_mean_dist_ = res.error_mean_dist
        self.error_mean_sq_ = res.error_mean_sq
        return self

    def transform(self, X):
        check_is_fitted(self, "rotation_")
        X = check_array(X)
        return (X - self.source_centroid_) @ self.rotation_.T + self.target_centroid_

    def score(self, X, y):
        check_is_fitted(self, "rotation_")
        mapped = self.transform(X)
        y = check_array(y)
        return -float(np.mean(np.hypot(*(mapped - y).T)))
