"""End-to-end reduction pipeline and its report files.

One run normalizes the features, builds and angle-filters the sparse feature
graph, then for every requested threshold mines redundancy groups, keeps one
representative per group, and scores spectral clustering on the reduced
matrix against the clustering on all features.  Optionally a sparse-
regression selection grid is evaluated on every reduced matrix.

Everything that influences numbers lives in :class:`PipelineConfig`, and all
randomness flows from its single seed, so a rerun of the same config on the
same data reproduces the report byte for byte (wall-clock timings aside).
"""

from __future__ import annotations

import csv
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, SfgraphError
from .evaluate import (
    acc,
    gaussian_similarity,
    mcfs_select,
    njw_cluster,
    nmi,
    spectral_embedding,
)
from .lcs import find_lcs, reduce_matrix, select_representatives
from .matrix import FeatureMatrix, normalize_features
from .omp import OmpConfig
from .sfg import angle_histogram, build_sfg, filter_failed

__all__ = ["PipelineConfig", "run_pipeline", "render_report"]

DEFAULT_THETAS = (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)


@dataclass
class PipelineConfig:
    """All knobs of one pipeline run."""

    k_clusters: int
    epsilon: float = 1e-6
    max_angle_deg: float = 15.0
    thetas: tuple[float, ...] = DEFAULT_THETAS
    mcfs_counts: tuple[int, ...] = ()
    seed: int = 0
    restarts: int = 10
    drop_singletons: bool = False
    invert_angle_filter: bool = False
    angle_bins: int = 18
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.k_clusters < 1:
            raise ParameterError(f"k_clusters must be at least 1, got {self.k_clusters}")
        if not self.epsilon > 0.0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.max_angle_deg <= 90.0:
            raise ParameterError(
                f"max_angle_deg must lie in (0, 90], got {self.max_angle_deg}"
            )
        self.thetas = tuple(float(t) for t in self.thetas)
        if not self.thetas:
            raise ParameterError("theta list must not be empty")
        for t in self.thetas:
            if not 0.0 < t <= 1.0:
                raise ParameterError(f"theta must lie in (0, 1], got {t}")
        self.mcfs_counts = tuple(int(m) for m in self.mcfs_counts)
        for m in self.mcfs_counts:
            if m < 1:
                raise ParameterError(f"mcfs count must be at least 1, got {m}")
        if self.restarts < 1:
            raise ParameterError(f"restarts must be at least 1, got {self.restarts}")
        if self.angle_bins < 1:
            raise ParameterError(f"angle_bins must be at least 1, got {self.angle_bins}")

    def as_dict(self) -> dict:
        return {
            "k_clusters": self.k_clusters,
            "epsilon": self.epsilon,
            "max_angle_deg": self.max_angle_deg,
            "thetas": list(self.thetas),
            "mcfs_counts": list(self.mcfs_counts),
            "seed": self.seed,
            "restarts": self.restarts,
            "drop_singletons": self.drop_singletons,
            "invert_angle_filter": self.invert_angle_filter,
            "angle_bins": self.angle_bins,
        }


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except SfgraphError as exc:
        raise type(exc)(f"stage {name!r}: {exc}") from exc
    finally:
        timings[name] = (time.perf_counter() - start) * 1000.0


def _cluster_scores(matrix: FeatureMatrix, labels, cfg: PipelineConfig):
    """(embedding, nmi, acc) of spectral clustering on one matrix."""
    sim = gaussian_similarity(matrix)
    emb = spectral_embedding(sim, cfg.k_clusters)
    if labels is None:
        return emb, None, None
    pred = njw_cluster(emb, cfg.k_clusters, seed=cfg.seed, restarts=cfg.restarts)
    return emb, float(nmi(labels, pred)), float(acc(labels, pred))


def run_pipeline(
    features: FeatureMatrix, labels, config: PipelineConfig
) -> dict:
    """Run the full reduction-and-evaluation pipeline; returns the report.

    ``labels`` may be None, in which case all agreement metrics are null and
    the selection grid is skipped.  Per-theta failures are recorded in that
    theta's sweep entry and the run continues; failures in the shared stages
    abort with the stage name attached.
    """
    if labels is not None:
        labels = np.asarray(labels).reshape(-1)
        if labels.shape[0] != features.n_samples:
            raise DimensionError(
                f"{labels.shape[0]} labels for {features.n_samples} samples"
            )
    timings: dict[str, float] = {}
    total_start = time.perf_counter()

    with _stage("normalize", timings):
        normalized, zero_columns = normalize_features(features)

    with _stage("build_sfg", timings):
        graph = build_sfg(
            normalized, OmpConfig(epsilon=config.epsilon), n_jobs=config.n_jobs
        )

    with _stage("angle_histogram", timings):
        report_angles = angle_histogram(graph, normalized, bins=config.angle_bins)

    with _stage("filter", timings):
        filtered = filter_failed(
            graph,
            normalized,
            np.deg2rad(config.max_angle_deg),
            invert=config.invert_angle_filter,
        )

    with _stage("baseline", timings):
        baseline_emb, baseline_nmi, baseline_acc = _cluster_scores(
            normalized, labels, config
        )

    sweep: list[dict] = []
    reduced_inputs: list[tuple[float | None, FeatureMatrix, object]] = [
        (None, normalized, baseline_emb)
    ]
    with _stage("sweep", timings):
        for theta in config.thetas:
            record: dict = {"theta": theta}
            try:
                partition = find_lcs(filtered, theta)
                reduction = select_representatives(
                    partition,
                    filtered,
                    keep_singletons=not config.drop_singletons,
                )
                reduced = reduce_matrix(normalized, reduction)
                record["retained"] = int(reduction.kept.size)
                record["subgraphs"] = len(partition.subgraphs)
                record["singletons"] = len(partition.singletons)
                emb, record["nmi"], record["acc"] = _cluster_scores(
                    reduced, labels, config
                )
                record["error"] = None
                reduced_inputs.append((theta, reduced, emb))
            except SfgraphError as exc:
                record.setdefault("retained", None)
                record.setdefault("subgraphs", None)
                record.setdefault("singletons", None)
                record["nmi"] = None
                record["acc"] = None
                record["error"] = str(exc)
            sweep.append(record)

    mcfs_records: list[dict] = []
    if config.mcfs_counts and labels is not None:
        with _stage("mcfs", timings):
            for theta, matrix, emb in reduced_inputs:
                for m in config.mcfs_counts:
                    record = {
                        "theta": theta,
                        "input_features": matrix.n_features,
                        "selected": m,
                    }
                    if m > matrix.n_features:
                        record["nmi"] = None
                        record["acc"] = None
                    else:
                        chosen = mcfs_select(matrix, emb, m)
                        picked = matrix.subset(np.sort(chosen.selected))
                        _, record["nmi"], record["acc"] = _cluster_scores(
                            picked, labels, config
                        )
                    mcfs_records.append(record)

    timings["total"] = (time.perf_counter() - total_start) * 1000.0
    return {
        "config": config.as_dict(),
        "dataset": {
            "n_samples": features.n_samples,
            "n_features": features.n_features,
            "n_label_classes": int(np.unique(labels).size) if labels is not None else None,
            "zero_norm_features": [int(j) for j in zero_columns],
        },
        "graph": {
            "edges": int(graph.weights.nnz),
            "failed_nodes_after_filter": sorted(int(i) for i in filtered.failed_nodes),
        },
        "angles": {
            "bin_edges": [float(e) for e in report_angles.bin_edges],
            "counts": [int(c) for c in report_angles.counts],
            "overflow": int(report_angles.overflow),
        },
        "baseline": {
            "theta": None,
            "retained": normalized.n_features,
            "nmi": baseline_nmi,
            "acc": baseline_acc,
        },
        "sweep": sweep,
        "mcfs": mcfs_records,
        "timings_ms": timings,
    }


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_report(report: dict, out_dir) -> list[str]:
    """Write report.json, sweep.csv, angles.csv (and mcfs_grid.csv when the
    selection grid ran) into ``out_dir``; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    written.append(path)

    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "retained", "nmi", "acc"])
        base = report["baseline"]
        writer.writerow(["NA", base["retained"], _fmt(base["nmi"]), _fmt(base["acc"])])
        for rec in report["sweep"]:
            writer.writerow(
                [
                    _fmt(rec["theta"]),
                    _fmt(rec["retained"]),
                    _fmt(rec["nmi"]),
                    _fmt(rec["acc"]),
                ]
            )
    written.append(path)

    path = os.path.join(out_dir, "angles.csv")
    edges = report["angles"]["bin_edges"]
    counts = report["angles"]["counts"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, count in zip(edges[:-1], edges[1:], counts):
            writer.writerow([repr(left), repr(right), count])
        writer.writerow([repr(edges[-1]), "inf", report["angles"]["overflow"]])
    written.append(path)

    if report["mcfs"]:
        path = os.path.join(out_dir, "mcfs_grid.csv")
        columns: list[tuple] = []  # (theta, input_features) in first-seen order
        cells: dict[tuple, dict] = {}
        for rec in report["mcfs"]:
            key = (rec["theta"], rec["input_features"])
            if key not in columns:
                columns.append(key)
            cells[(rec["selected"], key)] = rec
        counts_m = list(dict.fromkeys(r["selected"] for r in report["mcfs"]))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["metric", "m"] + [
                f"input_{f}" if t is None else f"theta_{_fmt(t)}_{f}"
                for t, f in columns
            ]
            writer.writerow(header)
            for metric in ("nmi", "acc"):
                for m in counts_m:
                    row = [metric, m]
                    for key in columns:
                        rec = cells.get((m, key))
                        value = rec[metric] if rec is not None else None
                        row.append("-" if value is None else repr(value))
                    writer.writerow(row)
        written.append(path)
    return written
