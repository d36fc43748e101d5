"""Sparse feature graph: leave-one-out self-representation of every feature.

Each feature column is greedily fit as a sparse combination of all the other
columns.  The coefficients become the weighted out-edges of that feature's
node in a directed graph, so an edge ``i -> j`` with weight ``w`` reads as
"feature j contributes w to reconstructing feature i".  Groups of mutually
well-representable features are exactly the redundancy structure later mined
by the subgraph stage.

Nodes whose reconstruction is poor (large angle between the feature and its
reconstruction) are marked *failed*: their out-edges say nothing reliable and
are dropped, while edges pointing at them are kept, since those encode other
features' valid representations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, ParseError
from .matrix import FeatureMatrix
from .omp import UNIT_NORM_TOL, OmpConfig, _greedy_fit

__all__ = [
    "SparseFeatureGraph",
    "AngleReport",
    "build_sfg",
    "representation_angle",
    "filter_failed",
    "angle_histogram",
    "save_sfg",
    "load_sfg",
]


@dataclass
class SparseFeatureGraph:
    """Directed weighted graph over feature indices.

    weights : scipy CSR matrix of shape (d, d); row i holds the out-edges of
        node i, i.e. the representation coefficients of feature i.  The
        diagonal is structurally zero (a feature never represents itself).
    failed_nodes : indices whose representation is unusable (zero-norm
        feature at build time, or rejected by the angle filter); their rows
        are empty.
    """

    weights: sp.csr_matrix
    failed_nodes: frozenset[int]

    def __post_init__(self) -> None:
        w = sp.csr_matrix(self.weights)
        w.eliminate_zeros()
        w.sort_indices()
        self.weights = w
        self.failed_nodes = frozenset(int(i) for i in self.failed_nodes)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def in_degrees(self) -> np.ndarray:
        """Number of stored (nonzero) edges pointing at each node."""
        csc = self.weights.tocsc()
        return np.diff(csc.indptr).astype(np.int64)

    def out_edges(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(destination indices, weights) of node i's out-edges."""
        row = self.weights
        lo, hi = row.indptr[i], row.indptr[i + 1]
        return row.indices[lo:hi].astype(np.intp), row.data[lo:hi]

    def max_abs_weight(self) -> float:
        return float(np.max(np.abs(self.weights.data))) if self.weights.nnz else 0.0


def _fit_row(values: np.ndarray, i: int, cfg: OmpConfig, zero_mask: np.ndarray):
    max_support = values.shape[1] - 1 if cfg.max_support is None else cfg.max_support
    support, coef, _, _ = _greedy_fit(
        values, values[:, i], cfg.epsilon, max_support, exclude=i, pre_banned=zero_mask
    )
    return support, coef


def build_sfg(
    features: FeatureMatrix, config: OmpConfig | None = None, n_jobs: int = 1
) -> SparseFeatureGraph:
    """Build the sparse feature graph of a unit-norm feature matrix.

    Every column is fit over all the other columns (the column itself is
    masked out by index, the matrix is never copied) and the coefficients are
    written into the corresponding adjacency row.  Zero-norm columns cannot be
    fit or used as atoms; they become failed nodes with empty rows.  A live
    column whose fit comes back empty keeps an empty row but is *not* marked
    failed here: it has no defined reconstruction angle, which is exactly what
    the downstream angle filter rejects.

    ``n_jobs`` > 1 fans the per-feature fits out to a thread pool; each task
    writes only its own row, so the result is identical for any job count.
    """
    cfg = config if config is not None else OmpConfig()
    values = features.values
    d = features.n_features
    if d < 2:
        raise ParameterError(f"need at least 2 features to build a graph, got {d}")

    norms = np.linalg.norm(values, axis=0)
    zero_mask = norms == 0.0
    bad = np.flatnonzero(~zero_mask & (np.abs(norms - 1.0) > UNIT_NORM_TOL))
    if bad.size:
        j = int(bad[0])
        raise ParameterError(
            f"feature {j} is not unit-norm (norm {norms[j]:.6g}); "
            f"apply normalize_features before building the graph"
        )

    live = [i for i in range(d) if not zero_mask[i]]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            fits = list(pool.map(lambda i: _fit_row(values, i, cfg, zero_mask), live))
    else:
        fits = [_fit_row(values, i, cfg, zero_mask) for i in live]

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    failed = frozenset(int(i) for i in np.flatnonzero(zero_mask))
    for i, (support, coef) in zip(live, fits):
        for j, w in zip(support, coef):
            if w != 0.0:
                rows.append(i)
                cols.append(int(j))
                vals.append(float(w))

    weights = sp.csr_matrix(
        (vals, (rows, cols)), shape=(d, d), dtype=np.float64
    )
    return SparseFeatureGraph(weights, failed)


def representation_angle(graph: SparseFeatureGraph, features: FeatureMatrix) -> np.ndarray:
    """Angle (radians) between each feature and its graph reconstruction.

    Node i's reconstruction is the weighted sum of its out-edge features.  A
    perfect representation gives angle 0.  Nodes with no out-edges or a
    zero-norm reconstruction have no defined angle and get NaN.
    """
    if features.n_features != graph.n_nodes:
        raise ParameterError(
            f"graph has {graph.n_nodes} nodes but matrix has "
            f"{features.n_features} features"
        )
    values = features.values
    angles = np.full(graph.n_nodes, np.nan)
    for i in range(graph.n_nodes):
        dst, w = graph.out_edges(i)
        if dst.size == 0:
            continue
        recon = values[:, dst] @ w
        rn = np.linalg.norm(recon)
        fn = np.linalg.norm(values[:, i])
        if rn == 0.0 or fn == 0.0:
            continue
        cos = float(values[:, i] @ recon) / (fn * rn)
        angles[i] = float(np.arccos(np.clip(cos, -1.0, 1.0)))
    return angles


def filter_failed(
    graph: SparseFeatureGraph,
    features: FeatureMatrix,
    max_angle: float,
    invert: bool = False,
) -> SparseFeatureGraph:
    """Drop the out-edges of nodes whose reconstruction angle is unacceptable.

    By default a node fails when its angle *exceeds* ``max_angle`` (radians)
    or is undefined; ``invert=True`` flips the comparison and fails nodes
    whose angle is *below* the threshold instead (undefined still fails).
    In-edges of failed nodes are left untouched.  The operation is
    idempotent: surviving rows are unchanged, so their angles do not move.
    """
    if not 0.0 < max_angle <= np.pi / 2.0:
        raise ParameterError(
            f"max_angle must lie in (0, pi/2] radians, got {max_angle}"
        )
    angles = representation_angle(graph, features)
    undefined = np.isnan(angles)
    if invert:
        rejected = undefined | (angles < max_angle)
    else:
        rejected = undefined | (angles > max_angle)

    newly_failed = set(int(i) for i in np.flatnonzero(rejected))
    failed = set(graph.failed_nodes) | newly_failed
    keep = np.ones(graph.n_nodes, dtype=bool)
    keep[list(newly_failed)] = False

    lil = graph.weights.tolil(copy=True)
    for i in np.flatnonzero(~keep):
        lil.rows[i] = []
        lil.data[i] = []
    return SparseFeatureGraph(lil.tocsr(), frozenset(failed))


@dataclass
class AngleReport:
    """Distribution of reconstruction angles over the graph's nodes.

    angles : per-node angle in radians, NaN where undefined.
    bin_edges : ``bins + 1`` edges covering [0, pi/2].
    counts : per-bin node counts; the last bin is right-inclusive and also
        absorbs the rare angle beyond pi/2, so the counts sum to the number
        of nodes with a defined angle.
    overflow : nodes with no defined angle (empty or degenerate rows).
    """

    angles: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    overflow: int


def angle_histogram(
    graph: SparseFeatureGraph, features: FeatureMatrix, bins: int = 18
) -> AngleReport:
    """Histogram of reconstruction angles over fixed-width bins on [0, pi/2]."""
    if bins < 1:
        raise ParameterError(f"bins must be at least 1, got {bins}")
    angles = representation_angle(graph, features)
    defined = angles[~np.isnan(angles)]
    edges = np.linspace(0.0, np.pi / 2.0, bins + 1)
    counts, _ = np.histogram(np.minimum(defined, np.pi / 2.0), bins=edges)
    overflow = int(np.isnan(angles).sum())
    return AngleReport(angles, edges, counts.astype(np.int64), overflow)


def save_sfg(graph: SparseFeatureGraph, path) -> None:
    """Write a graph as a TSV edge list.

    First line: ``# sfg d=<nodes> failed=<comma-separated indices>``.
    Then one ``src<TAB>dst<TAB>weight`` line per edge, row-major, with
    full-precision weights (they survive a round-trip bit-exactly).
    """
    failed = ",".join(str(i) for i in sorted(graph.failed_nodes))
    coo = graph.weights.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# sfg d={graph.n_nodes} failed={failed}\n")
        for k in order:
            fh.write(f"{coo.row[k]}\t{coo.col[k]}\t{float(coo.data[k])!r}\n")


def load_sfg(path) -> SparseFeatureGraph:
    """Read a graph written by :func:`save_sfg`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# sfg "):
            raise ParseError(f"{path}: missing graph header line")
        fields = dict(
            part.split("=", 1) for part in header[len("# sfg ") :].split() if "=" in part
        )
        try:
            d = int(fields["d"])
        except (KeyError, ValueError):
            raise ParseError(f"{path}: bad graph header: {header!r}") from None
        failed = frozenset(
            int(tok) for tok in fields.get("failed", "").split(",") if tok
        )
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for line_no, line in enumerate(fh, start=2):
            text = line.strip()
            if not text:
                continue
            parts = text.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{path}: line {line_no}: expected 3 tab-separated fields")
            try:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            except ValueError:
                raise ParseError(f"{path}: line {line_no}: bad edge {text!r}") from None
    weights = sp.csr_matrix((vals, (rows, cols)), shape=(d, d), dtype=np.float64)
    return SparseFeatureGraph(weights, failed)
