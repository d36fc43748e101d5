"""Mining locally compressible subgraphs out of a sparse feature graph.

A locally compressible subgraph (LCS) is a connected group of feature nodes
tied together by strong representation edges: any member is (directly or
through peers) well expressed by the others, so the whole group compresses to
a single representative feature with bounded loss.

Group discovery keeps only edges whose normalized absolute weight reaches a
threshold ``theta`` in (0, 1], then grows groups by breadth-first search from
high in-degree seeds, treating edge direction as irrelevant for connectivity.
The in-degree order only influences group *numbering*; membership is the
connected-component structure of the thresholded graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .matrix import FeatureMatrix
from .sfg import SparseFeatureGraph

__all__ = [
    "LcsPartition",
    "ReducedFeatureSet",
    "find_lcs",
    "select_representatives",
    "reduce_matrix",
    "save_partition",
]


@dataclass
class LcsPartition:
    """Grouping of graph nodes at one threshold.

    labels : 1-based group label per node (every node gets one).
    subgraphs : members of each group of size > 1, ascending, listed in
        label order.
    singletons : nodes whose group is just themselves, ascending.
    theta : threshold the partition was mined at.
    """

    labels: np.ndarray
    subgraphs: list[list[int]]
    singletons: list[int]
    theta: float


@dataclass
class ReducedFeatureSet:
    """Outcome of collapsing each subgraph to one representative.

    kept / dropped partition the node set; ``representative_of`` maps the
    position of a subgraph in the partition's list to the member kept for it.
    """

    kept: np.ndarray
    dropped: np.ndarray
    representative_of: dict[int, int]


def find_lcs(graph: SparseFeatureGraph, theta: float) -> LcsPartition:
    """Partition graph nodes into strongly connected redundancy groups.

    Edge weights are normalized by the largest absolute weight in the graph;
    an edge participates iff its normalized absolute weight is >= ``theta``.
    Unlabeled nodes are seeded in order of decreasing in-degree (ties to the
    lower index) and each seed's breadth-first closure over participating
    edges, followed both ways, becomes one group.
    """
    if not 0.0 < theta <= 1.0:
        raise ParameterError(f"theta must lie in (0, 1], got {theta}")
    d = graph.n_nodes
    adjacency: list[set[int]] = [set() for _ in range(d)]
    max_w = graph.max_abs_weight()
    if max_w > 0.0:
        coo = graph.weights.tocoo()
        strong = np.abs(coo.data) / max_w >= theta
        for i, j in zip(coo.row[strong], coo.col[strong]):
            adjacency[int(i)].add(int(j))
            adjacency[int(j)].add(int(i))
    neighbors = [np.array(sorted(s), dtype=np.intp) for s in adjacency]

    in_deg = graph.in_degrees()
    seed_order = sorted(range(d), key=lambda i: (-int(in_deg[i]), i))

    labels = np.zeros(d, dtype=np.int64)
    groups: list[list[int]] = []
    for seed in seed_order:
        if labels[seed] != 0:
            continue
        label = len(groups) + 1
        labels[seed] = label
        members = [seed]
        queue = deque([seed])
        while queue:
            u = queue.popleft()
            for v in neighbors[u]:
                if labels[v] == 0:
                    labels[v] = label
                    members.append(int(v))
                    queue.append(int(v))
        groups.append(sorted(members))

    subgraphs = [g for g in groups if len(g) > 1]
    singletons = sorted(g[0] for g in groups if len(g) == 1)
    return LcsPartition(labels, subgraphs, singletons, float(theta))


def select_representatives(
    partition: LcsPartition,
    graph: SparseFeatureGraph,
    keep_singletons: bool = True,
) -> ReducedFeatureSet:
    """Pick one representative per subgraph: its highest in-degree member.

    The representative is the member most other features lean on (in-degree
    in the full graph, ties to the lower index).  Singleton nodes carry no
    redundancy and are kept unless ``keep_singletons`` is False.
    """
    in_deg = graph.in_degrees()
    kept: list[int] = []
    representative_of: dict[int, int] = {}
    for pos, members in enumerate(partition.subgraphs):
        rep = min(members, key=lambda i: (-int(in_deg[i]), i))
        representative_of[pos] = rep
        kept.append(rep)
    if keep_singletons:
        kept.extend(partition.singletons)
    kept_arr = np.array(sorted(kept), dtype=np.intp)
    mask = np.ones(graph.n_nodes, dtype=bool)
    mask[kept_arr] = False
    dropped = np.flatnonzero(mask).astype(np.intp)
    return ReducedFeatureSet(kept_arr, dropped, representative_of)


def reduce_matrix(features: FeatureMatrix, reduced: ReducedFeatureSet) -> FeatureMatrix:
    """Column subset of the matrix holding only the kept features, in order."""
    if reduced.kept.size and int(reduced.kept.max()) >= features.n_features:
        raise ParameterError(
            f"kept index {int(reduced.kept.max())} out of range for "
            f"{features.n_features} features"
        )
    return features.subset(reduced.kept)


def save_partition(partition: LcsPartition, reduced: ReducedFeatureSet, path) -> None:
    """Write the partition as text: one line per subgraph, representative
    first and remaining members ascending; one ``S:<index>`` line per
    singleton."""
    with open(path, "w") as fh:
        for pos, members in enumerate(partition.subgraphs):
            rep = reduced.representative_of[pos]
            rest = [i for i in members if i != rep]
            fh.write(",".join(str(i) for i in [rep] + rest) + "\n")
        for i in partition.singletons:
            fh.write(f"S:{i}\n")
