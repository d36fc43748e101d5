"""Clustering-based evaluation: does feature reduction hurt cluster quality?

The harness mirrors a standard unsupervised pipeline: a Gaussian similarity
graph over samples, spectral embedding through the symmetric normalized
Laplacian, k-means on the re-normalized embedding rows, and agreement scores
(normalized mutual information and best-match accuracy) against ground-truth
labels.  A sparse-regression feature scorer (`mcfs_select`) is included as a
reference selection method to compare reduced inputs against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DataError, DimensionError, NumericalError, ParameterError
from .matrix import FeatureMatrix, pairwise_euclidean
from .omp import _greedy_fit

__all__ = [
    "SimilarityGraph",
    "SpectralEmbedding",
    "KMeansResult",
    "McfsResult",
    "gaussian_similarity",
    "spectral_embedding",
    "kmeans",
    "njw_cluster",
    "nmi",
    "acc",
    "mcfs_select",
]

# Above this many samples the dense symmetric eigensolver is replaced by an
# iterative one.
DENSE_EIGEN_LIMIT = 4000
# Threshold used by the sparse-regression scorer; effectively "run until the
# support cap", since coefficient paths are cut by cardinality, not residual.
MCFS_EPSILON = 1e-12


@dataclass
class SimilarityGraph:
    """Dense sample-similarity matrix with the kernel width that built it."""

    weights: np.ndarray
    sigma: float


@dataclass
class SpectralEmbedding:
    """Per-sample spectral coordinates.

    vectors : (n, K) eigenvectors of the symmetric normalized Laplacian for
        the K smallest eigenvalues, one column per eigenvalue, each column's
        first non-negligible entry made positive.
    eigenvalues : the K eigenvalues, ascending.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    objective_trace: np.ndarray
    n_iter: int


@dataclass
class McfsResult:
    """Feature relevance scores and the top-m selection they induce.

    scores : per-feature relevance, the max |coefficient| over regressions.
    selected : indices of the m best features, best first.
    coefficients : (k, d) regression coefficients, one row per embedding
        column; zero outside each regression's support.
    """

    scores: np.ndarray
    selected: np.ndarray
    coefficients: np.ndarray


def gaussian_similarity(samples, sigma: float | None = None) -> SimilarityGraph:
    """Gaussian kernel similarity between sample rows.

    ``W[i, j] = exp(-dist(i, j)^2 / (2 sigma^2))``.  When ``sigma`` is not
    given it defaults to the mean pairwise distance between distinct samples,
    which keeps the kernel scale proportionate to the data spread.
    """
    x = samples.values if isinstance(samples, FeatureMatrix) else np.asarray(samples)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DimensionError("need a 2-D matrix with at least 2 sample rows")
    dist = pairwise_euclidean(x)
    if sigma is None:
        n = x.shape[0]
        sigma = float(dist.sum() / (n * (n - 1)))
        if sigma == 0.0:
            raise DataError(
                "all samples are identical; similarity width is undefined"
            )
    elif not sigma > 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    weights = np.exp(-(dist**2) / (2.0 * float(sigma) ** 2))
    return SimilarityGraph(weights, float(sigma))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each column's first entry with |v| > 1e-12 positive (in place)."""
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        big = np.flatnonzero(np.abs(col) > 1e-12)
        if big.size and col[big[0]] < 0:
            vectors[:, k] = -col
    return vectors


def spectral_embedding(graph: SimilarityGraph, k: int) -> SpectralEmbedding:
    """Eigenvectors of the symmetric normalized Laplacian of a similarity graph.

    Uses a dense solver up to ``DENSE_EIGEN_LIMIT`` samples and an iterative
    (Lanczos) solver beyond that; non-convergence of the iterative solver is
    reported as a :class:`NumericalError`.
    """
    w = np.asarray(graph.weights, dtype=np.float64)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n:
        raise DimensionError(f"similarity matrix must be square, got {w.shape}")
    if not 1 <= k < n:
        raise ParameterError(f"k must lie in [1, {n - 1}] for {n} samples, got {k}")
    deg = w.sum(axis=1)
    if np.any(deg <= 0.0):
        bad = int(np.flatnonzero(deg <= 0.0)[0])
        raise DataError(f"sample {bad} has no similarity mass (isolated vertex)")
    inv_sqrt = 1.0 / np.sqrt(deg)
    s = w * inv_sqrt[:, None] * inv_sqrt[None, :]
    s = (s + s.T) / 2.0

    if n <= DENSE_EIGEN_LIMIT:
        lap = np.eye(n) - s
        eigenvalues, vectors = scipy.linalg.eigh(lap, subset_by_index=(0, k - 1))
    else:
        try:
            mu, vectors = scipy.sparse.linalg.eigsh(s, k=k, which="LA", tol=1e-8)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise NumericalError(
                f"eigensolver did not converge for {n} samples "
                f"({len(exc.eigenvalues)} of {k} eigenpairs found)"
            ) from exc
        order = np.argsort(-mu)  # largest of S == smallest of the Laplacian
        eigenvalues = 1.0 - mu[order]
        vectors = vectors[:, order]
    return SpectralEmbedding(_fix_signs(np.ascontiguousarray(vectors)), eigenvalues)


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Spread-out initial centers: each next center is sampled with
    probability proportional to its squared distance from the chosen ones."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _squared_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        + np.sum(centers**2, axis=1)[None, :]
        - 2.0 * (x @ centers.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _lloyd(
    x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int, rel_tol: float
) -> KMeansResult:
    centers = _plus_plus_init(x, k, rng)
    trace: list[float] = []
    labels = np.zeros(x.shape[0], dtype=np.int64)
    for it in range(max_iter):
        d2 = _squared_distances(x, centers)
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # Split the largest cluster: hand its farthest member to the
            # empty cluster.
            largest = int(np.argmax(counts))
            members = np.flatnonzero(labels == largest)
            far = members[int(np.argmax(d2[members, largest]))]
            labels[far] = empty
            counts[largest] -= 1
            counts[empty] += 1
        for c in range(k):
            centers[c] = x[labels == c].mean(axis=0)
        objective = float(
            np.sum((x - centers[labels]) ** 2)
        )
        trace.append(objective)
        if it > 0:
            prev = trace[-2]
            if prev == 0.0 or abs(prev - objective) <= rel_tol * prev:
                break
    return KMeansResult(labels, centers, trace[-1], np.asarray(trace), len(trace))


def kmeans(
    points,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    rel_tol: float = 1e-6,
) -> KMeansResult:
    """Restarted Lloyd k-means with spread-out seeding.

    Runs ``restarts`` independent fits from deterministic per-restart RNG
    streams and returns the one with the lowest objective (earliest restart
    wins ties), so results are reproducible for a given ``seed``.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected 2-D points, got {x.ndim}-D")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in [1, {n}] for {n} points, got {k}")
    if restarts < 1:
        raise ParameterError(f"restarts must be at least 1, got {restarts}")
    best: KMeansResult | None = None
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        result = _lloyd(x, k, rng, max_iter, rel_tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def njw_cluster(
    embedding: SpectralEmbedding,
    k: int,
    seed: int = 0,
    restarts: int = 10,
) -> np.ndarray:
    """Cluster samples from their spectral embedding.

    Rows of the first ``k`` embedding columns are scaled to unit norm (rows
    that are exactly zero are left as-is; they gravitate to whichever center
    is nearest the origin) and then clustered with restarted k-means.
    """
    y = embedding.vectors
    if y.shape[1] < k:
        raise ParameterError(
            f"embedding has {y.shape[1]} columns, need at least k={k}"
        )
    y = y[:, :k]
    norms = np.linalg.norm(y, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    rows = y / safe[:, None]
    return kmeans(rows, k, seed=seed, restarts=restarts).labels


def _entropy(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _as_labels(a, name: str) -> np.ndarray:
    arr = np.asarray(a).reshape(-1)
    if arr.size == 0:
        raise DimensionError(f"{name} label vector is empty")
    return arr.astype(np.int64)


def _canonical_partition(a: np.ndarray) -> np.ndarray:
    """Relabel by order of first appearance, so partitions compare by shape."""
    _, canon = np.unique(a, return_inverse=True)
    first_seen: dict[int, int] = {}
    out = np.empty_like(canon)
    for i, v in enumerate(canon):
        out[i] = first_seen.setdefault(int(v), len(first_seen))
    return out


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information between two labelings.

    Natural-log entropies, normalized by ``max(H(A), H(B))``.  When both
    labelings are constant the measure is 0/0; identical partitions score 1,
    anything else 0.
    """
    a = _as_labels(labels_a, "first")
    b = _as_labels(labels_b, "second")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"label vectors differ in length: {a.shape[0]} vs {b.shape[0]}"
        )
    _, ca = np.unique(a, return_counts=True)
    _, cb = np.unique(b, return_counts=True)
    _, cab = np.unique(np.stack([a, b]), axis=1, return_counts=True)
    h_a, h_b, h_ab = _entropy(ca), _entropy(cb), _entropy(cab)
    denom = max(h_a, h_b)
    if denom == 0.0:
        same = np.array_equal(_canonical_partition(a), _canonical_partition(b))
        return 1.0 if same else 0.0
    return min(1.0, max(0.0, (h_a + h_b - h_ab) / denom))


def acc(labels_a, labels_b) -> float:
    """Best-match clustering accuracy.

    Fraction of samples that agree under the one-to-one relabeling of cluster
    ids that maximizes agreement (padded to square when the two labelings use
    different numbers of ids).  Symmetric in its arguments.
    """
    a = _as_labels(labels_a, "first")
    b = _as_labels(labels_b, "second")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"label vectors differ in length: {a.shape[0]} vs {b.shape[0]}"
        )
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    k = max(ua.size, ub.size)
    contingency = np.zeros((k, k), dtype=np.int64)
    np.add.at(contingency, (ia, ib), 1)
    row, col = linear_sum_assignment(contingency, maximize=True)
    return float(contingency[row, col].sum()) / a.shape[0]


def mcfs_select(
    features: FeatureMatrix,
    embedding: SpectralEmbedding,
    m: int,
    support_cap: int | None = None,
) -> McfsResult:
    """Score features by sparse regression onto the spectral embedding.

    Each embedding column is greedily regressed on the (unit-normalized)
    feature columns with at most ``support_cap`` nonzero coefficients
    (default: ``m``).  A feature's score is the largest absolute coefficient
    it earns across the embedding columns; the top ``m`` scores win, ties
    resolved toward the lower feature index.  The returned coefficients are
    those of the normalized regressions, so ``scores`` equals the column-wise
    max of ``|coefficients|`` exactly.
    """
    d = features.n_features
    if not 1 <= m <= d:
        raise ParameterError(f"m must lie in [1, {d}] for {d} features, got {m}")
    cap = m if support_cap is None else support_cap
    if cap < 1:
        raise ParameterError(f"support_cap must be at least 1, got {cap}")
    y = embedding.vectors
    if y.shape[0] != features.n_samples:
        raise DimensionError(
            f"embedding rows {y.shape[0]} do not match samples {features.n_samples}"
        )

    norms = np.linalg.norm(features.values, axis=0)
    zero_mask = norms == 0.0
    safe = np.where(zero_mask, 1.0, norms)
    values = np.asfortranarray(features.values / safe)

    scores = np.zeros(d)
    coefficients = np.zeros((y.shape[1], d))
    for col in range(y.shape[1]):
        t = y[:, col]
        tn = np.linalg.norm(t)
        if tn == 0.0:
            continue
        support, coef, _, _ = _greedy_fit(
            values, t / tn, MCFS_EPSILON, cap, pre_banned=zero_mask
        )
        for j, w in zip(support, coef):
            coefficients[col, j] = w
            if abs(w) > scores[j]:
                scores[j] = abs(w)
    order = np.lexsort((np.arange(d), -scores))
    selected = order[:m].astype(np.intp)
    return McfsResult(scores, selected, coefficients)
