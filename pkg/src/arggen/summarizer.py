"""Extractive k-sentence summaries via embedding + k-means + centroid selection.

Sentences are embedded, clustered into k groups (seeded k-means++ with Lloyd
iterations), and each cluster contributes its most central sentence. Selected
sentences keep their original order, so a summary is always a subsequence of
the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingProvider
from .errors import EmptyInput, TooFewItems


@dataclass(frozen=True)
class SummaryConfig:
    k: int
    seed: int = 0
    max_iterations: int = 100

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class KMeansResult:
    assignments: np.ndarray  # (n,) cluster id per point
    centroids: np.ndarray  # (k, d)
    objective_history: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_history[-1] if self.objective_history else float("nan")


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ seeding; falls back to the lowest unchosen index when
    every remaining point coincides with a chosen centroid."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    sq_dist = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        total = float(sq_dist.sum())
        if total > 0.0:
            probabilities = sq_dist / total
            index = int(rng.choice(n, p=probabilities))
        else:
            remaining = [i for i in range(n) if i not in set(chosen)]
            index = remaining[0]
        chosen.append(index)
        sq_dist = np.minimum(sq_dist, np.sum((points - points[index]) ** 2, axis=1))
    return points[chosen].copy()


def _pairwise_sq_dist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.sum(diff * diff, axis=2)


def kmeans_cluster(
    vectors, k: int, seed: int = 0, max_iterations: int = 100
) -> KMeansResult:
    """Lloyd's algorithm with seeded k-means++ initialization.

    Empty clusters are repaired by stealing the point currently farthest from
    its assigned centroid (donor clusters keep at least one member). The
    recorded per-iteration objective (sum of squared distances to the assigned
    centroid, measured after the centroid update) is non-increasing.
    """
    points = np.asarray(vectors, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("vectors must form a 2-D (n, d) array")
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise TooFewItems(f"cannot form {k} clusters from {n} vectors")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    assignments = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    converged = False

    for _ in range(max_iterations):
        sq = _pairwise_sq_dist(points, centroids)
        new_assignments = np.argmin(sq, axis=1)  # ties -> lowest cluster id

        # repair empty clusters: each steals the globally farthest point
        for cluster in range(k):
            if np.any(new_assignments == cluster):
                continue
            member_dist = sq[np.arange(n), new_assignments]
            donors = np.bincount(new_assignments, minlength=k)
            eligible = donors[new_assignments] > 1
            candidates = np.where(eligible, member_dist, -np.inf)
            stolen = int(np.argmax(candidates))
            new_assignments[stolen] = cluster
            sq[stolen] = 0.0  # pin the stolen point to its new cluster

        stable = bool(np.array_equal(new_assignments, assignments))
        assignments = new_assignments
        for cluster in range(k):
            centroids[cluster] = points[assignments == cluster].mean(axis=0)
        history.append(float(np.sum((points - centroids[assignments]) ** 2)))
        if stable:
            converged = True
            break

    return KMeansResult(
        assignments=assignments,
        centroids=centroids,
        objective_history=history,
        converged=converged,
    )


def summarize(sentences, provider: EmbeddingProvider, config: SummaryConfig) -> list[str]:
    """Select min(k, n) sentences, one per cluster, in original order.

    Each cluster contributes the member sentence with the smallest Euclidean
    distance to the centroid; ties go to the lowest original index. When the
    input already fits the budget it is returned unchanged.
    """
    sentences = list(sentences)
    if not sentences:
        raise EmptyInput("cannot summarize an empty sentence list")
    if len(sentences) <= config.k:
        return sentences

    points = np.asarray(provider.embed(sentences), dtype=np.float64)
    if points.shape[0] != len(sentences):
        raise ValueError("provider returned a row count different from the input length")
    result = kmeans_cluster(points, config.k, seed=config.seed, max_iterations=config.max_iterations)

    selected = []
    for cluster in range(config.k):
        members = np.where(result.assignments == cluster)[0]
        distances = np.linalg.norm(points[members] - result.centroids[cluster], axis=1)
        selected.append(int(members[int(np.argmin(distances))]))  # first min = lowest index
    return [sentences[i] for i in sorted(selected)]
