"""Clustering and motion metrics over breakplane snapshots, plus fit comparison."""
import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.cluster.hierarchy import leaves_list, linkage
from scipy.optimize import linear_sum_assignment
from scipy.spatial import ConvexHull, distance_matrix
from scipy.spatial.distance import squareform

from .network import SplineParams

GREEDY_ABOVE = 512


@dataclass
class SimilarityMatrix:
    S: np.ndarray
    order: np.ndarray

    def sorted(self):
        return self.S[np.ix_(self.order, self.order)]


def similarity(s: SplineParams) -> SimilarityMatrix:
    """``S_ij = <xi_i, xi_j> exp(-|gamma_i - gamma_j|^2)`` with a block ordering.

    The ordering is the leaf order of average-linkage clustering on
    ``1 - S``. Antipodal pairs are not identified.
    """
    H = s.n_neurons
    if H < 2:
        raise ValueError("similarity needs at least two neurons")
    G = s.xi @ s.xi.T
    dg = s.gamma[:, None] - s.gamma[None, :]
    S = G * np.exp(-(dg**2))
    S = 0.5 * (S + S.T)
    np.fill_diagonal(S, 1.0)
    dist = np.clip(1.0 - S, 0.0, None)
    np.fill_diagonal(dist, 0.0)
    order = leaves_list(linkage(squareform(dist, checks=False), method="average"))
    return SimilarityMatrix(S, order)


def cluster_auc(S) -> float:
    """Area under the cumulative normalized eigenvalue curve.

    Eigenvalue magnitudes are sorted in descending order and normalized to
    sum 1. The curve starts at the origin and takes value ``c_i`` at
    ``i / H``; the area is by the trapezoid rule. A rank-one matrix gives
    ``(2H - 1) / (2H)`` and the identity gives ``1/2``.
    """
    S = S.S if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=float)
    lam = np.sort(np.abs(np.linalg.eigvalsh(0.5 * (S + S.T))))[::-1]
    total = lam.sum()
    if total == 0:
        return 0.5
    c = np.concatenate([[0.0], np.cumsum(lam / total)])
    x = np.arange(len(c)) / len(lam)
    return float(trapezoid(c, x))


def augmented(s: SplineParams):
    return np.hstack([s.xi, -s.gamma[:, None]])


def _greedy_match(C):
    H = C.shape[0]
    rows = np.empty(H, dtype=int)
    cols = np.empty(H, dtype=int)
    order = np.argsort(C, axis=None)
    used_r = np.zeros(H, dtype=bool)
    used_c = np.zeros(H, dtype=bool)
    k = 0
    for flat in order:
        r, c = divmod(int(flat), H)
        if used_r[r] or used_c[c]:
            continue
        used_r[r] = used_c[c] = True
        rows[k], cols[k] = r, c
        k += 1
        if k == H:
            break
    return rows, cols


def step_distance_details(prev: SplineParams, nxt: SplineParams, greedy_above=GREEDY_ABOVE):
    """Mean matched-pair distance between two breakplane sets and the matcher used.

    Uses an optimal assignment with Euclidean cost on ``(xi, -gamma)`` up to
    ``greedy_above`` neurons and a greedy closest-pair matching beyond.
    """
    if prev.n_neurons != nxt.n_neurons:
        raise ValueError("snapshots must have the same number of neurons")
    A, B = augmented(prev), augmented(nxt)
    C = distance_matrix(A, B)
    if len(A) > greedy_above:
        rows, cols = _greedy_match(C)
        method = "greedy"
    else:
        rows, cols = linear_sum_assignment(C)
        method = "optimal"
    return float(C[rows, cols].mean()), method


def step_distance(prev: SplineParams, nxt: SplineParams, greedy_above=GREEDY_ABOVE) -> float:
    return step_distance_details(prev, nxt, greedy_above)[0]


def hull_mask(X, points, tol=1e-12):
    """True for ``points`` inside the convex hull of ``X`` (half-plane tests)."""
    hull = ConvexHull(np.asarray(X, dtype=float))
    P = np.asarray(points, dtype=float)
    eq = hull.equations
    return np.all(P @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)


def relative_error(f_a, f_b, mask) -> float:
    """``mean_hull |f_a - f_b| / max_hull |f_a|``; ``f_a`` is the reference fit."""
    f_a = np.asarray(f_a, dtype=float).ravel()
    f_b = np.asarray(f_b, dtype=float).ravel()
    mask = np.asarray(mask, dtype=bool).ravel()
    if not mask.any():
        raise ValueError("empty hull mask")
    denom = np.abs(f_a[mask]).max()
    if denom == 0:
        raise ValueError("reference fit vanishes on the hull")
    return float(np.abs(f_a[mask] - f_b[mask]).mean() / denom)


class RunLog:
    """Append-only JSON-lines log of ``(step, metric, value)`` records."""

    def __init__(self, path=None):
        self.path = path
        self.records = []
        if path is not None:
            open(path, "w").close()

    def log(self, step, metric, value):
        rec = {"step": int(step), "metric": str(metric), "value": float(value)}
        self.records.append(rec)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(rec) + "\n")

    def series(self, metric):
        rows = [(r["step"], r["value"]) for r in self.records if r["metric"] == metric]
        return np.array(rows).reshape(-1, 2)

    @staticmethod
    def read(path):
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]


def save_similarity_csv(path, sim: SimilarityMatrix, sort=True):
    M = sim.sorted() if sort else sim.S
    np.savetxt(path, M, delimiter=",", fmt="%.10g")
