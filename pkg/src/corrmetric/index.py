"""Exact k-NN and range search under absolute correlation distance.

A vantage-point tree over centered unit vectors.  The distance is not a
metric, so pruning uses one of two sound lower bounds:

* ``relaxed-k``: from ``d(q, p) <= K (d(q, x) + d(x, p))`` with K = 2,
  ``d(q, x) >= max(d(q, p)/K - d(p, x), d(p, x)/K - d(q, p), 0)``.
* ``projective-angle``: the folded angle ``theta = arccos|<u, v>|`` is a
  metric on lines, so ``theta(q, x) >= |theta(q, p) - theta(p, x)|`` and
  ``d = 1 - cos(theta)`` is increasing on [0, pi/2].

``brute`` disables pruning.
"""

from __future__ import annotations

import bisect
import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import SampleLike, _sample, abs_corr_distance, center_and_normalize, cosine
from .errors import DimensionMismatch, DomainError, ZeroVariance

STRATEGIES = ("relaxed-k", "projective-angle", "brute")
SCHEMA_VERSION = 1
# Pruning only fires when a lower bound beats the threshold by this much, which
# absorbs rounding in bounds computed from separately rounded distances.
PRUNE_SLACK = 1e-12


def lower_bound_relaxed(d_qp: float, d_px: float, k: float = 2.0) -> float:
    """Lower bound on d(q, x) from d(q, p) and d(p, x) via the K-relaxed inequality."""
    if not (0.0 <= d_qp <= 1.0 and 0.0 <= d_px <= 1.0):
        raise DomainError(f"distances must lie in [0, 1], got {d_qp}, {d_px}")
    if k <= 0:
        raise DomainError(f"k must be positive, got {k}")
    return max(d_qp / k - d_px, d_px / k - d_qp, 0.0)


def lower_bound_angle(theta_qp: float, theta_px: float) -> float:
    """Lower bound on d(q, x) from folded angles: ``1 - cos|theta_qp - theta_px|``."""
    half = math.pi / 2
    if not (0.0 <= theta_qp <= half and 0.0 <= theta_px <= half):
        raise DomainError(f"angles must lie in [0, pi/2], got {theta_qp}, {theta_px}")
    return 1.0 - math.cos(abs(theta_qp - theta_px))


def _envelope_bound_relaxed(d_qp, lo, hi, k):
    # min over d_px in [lo, hi] of lower_bound_relaxed(d_qp, d_px, k)
    return max(d_qp / k - hi, lo / k - d_qp, 0.0)


def _envelope_bound_angle(t_qp, lo, hi):
    gap = max(lo - t_qp, t_qp - hi, 0.0)
    return 1.0 - math.cos(gap)


@dataclass(frozen=True)
class IndexConfig:
    strategy: str = "relaxed-k"
    k_constant: float = 2.0
    leaf_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise DomainError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.leaf_size < 1:
            raise DomainError("leaf_size must be >= 1")
        if not self.k_constant > 0:
            raise DomainError("k_constant must be positive")
        if self.strategy == "relaxed-k" and self.k_constant < 2:
            warnings.warn(
                f"k_constant={self.k_constant} < 2 voids the no-false-dismissal guarantee",
                stacklevel=3,
            )


@dataclass
class Node:
    """Internal node (``vantage`` set) or leaf (``points`` set); children by array offset."""

    vantage: Optional[int] = None
    mu: Optional[float] = None
    near: Optional[int] = None
    far: Optional[int] = None
    # [min, max] of d(vantage, x) and of theta(vantage, x) over each side
    near_env: Optional[list] = None
    far_env: Optional[list] = None
    near_theta: Optional[list] = None
    far_theta: Optional[list] = None
    points: Optional[list] = None

    @property
    def is_leaf(self):
        return self.points is not None


@dataclass
class QueryResult:
    neighbors: list  # [(id, distance)], ascending distance, ties by id
    nodes_visited: int = 0
    distance_evaluations: int = 0

    @property
    def ids(self):
        return [i for i, _ in self.neighbors]

    @property
    def distances(self):
        return [d for _, d in self.neighbors]


class _Probe:
    """Per-query distance cache; each corpus point is evaluated at most once."""

    def __init__(self, units: np.ndarray, sq_norms: np.ndarray, q: np.ndarray):
        self.units = units
        self.sq_norms = sq_norms
        self.q = q
        self.qq = float(np.dot(q, q))
        self.dots: dict[int, float] = {}

    def dot(self, i: int) -> float:
        v = self.dots.get(i)
        if v is None:
            v = cosine(self.units[i], self.q, self.sq_norms[i], self.qq)
            self.dots[i] = v
        return v

    def distance(self, i: int) -> float:
        return 1.0 - min(abs(self.dot(i)), 1.0)

    def angle(self, i: int) -> float:
        return _folded_angle(self.units[i], self.q, self.dot(i))

    @property
    def evaluations(self):
        return len(self.dots)


def _sq_norms(units: np.ndarray) -> np.ndarray:
    # np.dot row by row, matching how a query's squared norm is computed
    return np.array([float(np.dot(u, u)) for u in units])


def _folded_angle(u, v, dot):
    chord = float(np.linalg.norm(u - v if dot >= 0 else u + v))
    return min(2.0 * math.asin(min(chord / 2.0, 1.0)), math.pi / 2)


class QmIndex:
    """Vantage-point tree over centered unit vectors.

    Build with :meth:`build`; the tree is immutable afterwards and safe for
    concurrent read-only queries.
    """

    def __init__(self, ids: list, units: np.ndarray, nodes: list[Node], config: IndexConfig):
        self.ids = ids
        self.units = units
        self.sq_norms = _sq_norms(units)
        self.nodes = nodes
        self.config = config

    def __len__(self):
        return len(self.ids)

    @property
    def dimension(self):
        return self.units.shape[1]

    @classmethod
    def build(cls, points: Sequence[SampleLike], cfg: IndexConfig = IndexConfig()) -> "QmIndex":
        samples = [_sample(p) for p in points]
        if not samples:
            raise DomainError("cannot build an index over an empty corpus")
        n = samples[0].values.size
        ids, units = [], []
        for i, s in enumerate(samples):
            sid = s.id if s.id is not None else i
            if s.values.size != n:
                raise DimensionMismatch(f"point {sid!r}: length {s.values.size} != {n}")
            try:
                units.append(center_and_normalize(s).values)
            except ZeroVariance as exc:
                raise ZeroVariance(f"point {sid!r} has zero variance", sample_id=sid) from exc
            ids.append(sid)
        if len(set(ids)) != len(ids):
            raise DomainError("point ids must be unique")
        units = np.vstack(units)
        rng = np.random.Generator(np.random.Philox(cfg.seed))
        nodes: list[Node] = []
        sq_norms = _sq_norms(units)
        _build_node(nodes, units, sq_norms, list(range(len(ids))), cfg.leaf_size, rng)
        return cls(ids, units, nodes, cfg)

    def _query_unit(self, query: SampleLike) -> np.ndarray:
        s = _sample(query)
        if s.values.size != self.dimension:
            raise DimensionMismatch(f"query length {s.values.size} != index dimension {self.dimension}")
        return center_and_normalize(s).values

    def _side_bound(self, probe, node, d_qp, t_qp, near: bool):
        strategy = self.config.strategy
        if strategy == "relaxed-k":
            lo, hi = node.near_env if near else node.far_env
            return _envelope_bound_relaxed(d_qp, lo, hi, self.config.k_constant)
        if strategy == "projective-angle":
            lo, hi = node.near_theta if near else node.far_theta
            return _envelope_bound_angle(t_qp, lo, hi)
        return 0.0

    def _walk(self, probe: _Probe, threshold, visit_leaf) -> int:
        """Depth-first traversal; ``threshold()`` is the current pruning radius.

        A side is tested against the threshold only when it is popped, so the
        second side of a node sees whatever the first side tightened.
        """
        angle = self.config.strategy == "projective-angle"
        visited = 0
        stack: list = [(0, None)]
        while stack:
            idx, gate = stack.pop()
            if gate is not None:
                node, d_qp, t_qp, near = gate
                if self._side_bound(probe, node, d_qp, t_qp, near) > threshold() + PRUNE_SLACK:
                    continue
            node = self.nodes[idx]
            visited += 1
            if node.is_leaf:
                visit_leaf(node.points)
                continue
            d_qp = probe.distance(node.vantage)
            t_qp = probe.angle(node.vantage) if angle else None
            sides = [(True, node.near), (False, node.far)]
            if d_qp > node.mu:
                sides.reverse()
            for near, child in reversed(sides):
                stack.append((child, (node, d_qp, t_qp, near)))
        return visited

    def knn(self, query: SampleLike, k: int) -> QueryResult:
        """The k nearest points (ties by ascending id), identical to a linear scan."""
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        probe = _Probe(self.units, self.sq_norms, self._query_unit(query))
        best: list = []  # sorted [(distance, id)]
        k_eff = min(k, len(self.ids))

        def threshold():
            return best[-1][0] if len(best) >= k_eff else math.inf

        def visit_leaf(points):
            for i in points:
                item = (probe.distance(i), self.ids[i])
                if len(best) < k_eff:
                    bisect.insort(best, item)
                elif item < best[-1]:
                    bisect.insort(best, item)
                    best.pop()

        if self.config.strategy == "brute":
            visit_leaf(range(len(self.ids)))
            visited = 0
        else:
            visited = self._walk(probe, threshold, visit_leaf)
        return QueryResult([(i, d) for d, i in best], visited, probe.evaluations)

    def range_query(self, query: SampleLike, r: float) -> list:
        """Ids of all points within distance ``r`` of the query, ascending."""
        if not (0.0 <= r <= 1.0):
            raise DomainError(f"radius must lie in [0, 1], got {r}")
        probe = _Probe(self.units, self.sq_norms, self._query_unit(query))
        hits = []

        def visit_leaf(points):
            hits.extend(self.ids[i] for i in points if probe.distance(i) <= r)

        if self.config.strategy == "brute":
            visit_leaf(range(len(self.ids)))
        else:
            self._walk(probe, lambda: r, visit_leaf)
        return sorted(hits)

    def validate(self) -> None:
        """Assert the structural invariants; raises AssertionError on violation."""
        seen: list[int] = []

        def members(idx):
            node = self.nodes[idx]
            if node.is_leaf:
                return list(node.points)
            return members(node.near) + members(node.far)

        for node in self.nodes:
            if node.is_leaf:
                seen.extend(node.points)
                continue
            p = self.units[node.vantage]
            for side, env, tenv, le in ((node.near, node.near_env, node.near_theta, True),
                                        (node.far, node.far_env, node.far_theta, False)):
                for i in members(side):
                    dot = cosine(self.units[i], p, self.sq_norms[i], self.sq_norms[node.vantage])
                    d = 1.0 - min(abs(dot), 1.0)
                    assert (d <= node.mu) if le else (d >= node.mu), "split violated"
                    assert env[0] <= d <= env[1], "distance envelope violated"
                    t = _folded_angle(p, self.units[i], dot)
                    assert tenv[0] <= t <= tenv[1], "angle envelope violated"
        assert sorted(seen) == list(range(len(self.ids))), "points not in exactly one leaf"

    # serialization

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": asdict(self.config),
            "points": [{"id": i, "values": [float(v) for v in u]}
                       for i, u in zip(self.ids, self.units)],
            "nodes": [{k: v for k, v in asdict(n).items() if v is not None} for n in self.nodes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "QmIndex":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise DomainError(f"unsupported index schema_version {doc.get('schema_version')!r}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = IndexConfig(**doc["config"])
        ids = [p["id"] for p in doc["points"]]
        units = np.array([p["values"] for p in doc["points"]], dtype=np.float64)
        nodes = [Node(**n) for n in doc["nodes"]]
        return cls(ids, units, nodes, cfg)

    @classmethod
    def from_json(cls, text: str) -> "QmIndex":
        return cls.from_dict(json.loads(text))


def _build_node(nodes: list[Node], units: np.ndarray, sq_norms: np.ndarray, members: list[int],
                leaf_size: int, rng: np.random.Generator) -> int:
    idx = len(nodes)
    nodes.append(Node())
    if len(members) <= leaf_size:
        nodes[idx] = Node(points=sorted(members))
        return idx
    vantage = members[int(rng.integers(len(members)))]
    p = units[vantage]
    dots = np.array([cosine(units[m], p, sq_norms[m], sq_norms[vantage]) for m in members])
    dist = 1.0 - np.minimum(np.abs(dots), 1.0)
    mu = float(np.sort(dist)[(len(members) - 1) // 2])  # lower median
    near_mask = dist <= mu
    if near_mask.all():
        # every point ties with the vantage; splitting cannot make progress
        nodes[idx] = Node(points=sorted(members))
        return idx
    theta = np.array([_folded_angle(p, units[m], d) for m, d in zip(members, dots)])
    near = [m for m, keep in zip(members, near_mask) if keep]
    far = [m for m, keep in zip(members, near_mask) if not keep]
    node = Node(
        vantage=int(vantage),
        mu=mu,
        near_env=[float(dist[near_mask].min()), float(dist[near_mask].max())],
        far_env=[float(dist[~near_mask].min()), float(dist[~near_mask].max())],
        near_theta=[float(theta[near_mask].min()), float(theta[near_mask].max())],
        far_theta=[float(theta[~near_mask].min()), float(theta[~near_mask].max())],
    )
    nodes[idx] = node
    node.near = _build_node(nodes, units, sq_norms, near, leaf_size, rng)
    node.far = _build_node(nodes, units, sq_norms, far, leaf_size, rng)
    return idx


def build(points: Sequence[SampleLike], cfg: IndexConfig = IndexConfig()) -> QmIndex:
    return QmIndex.build(points, cfg)


def knn(index: QmIndex, query: SampleLike, k: int) -> QueryResult:
    return index.knn(query, k)


def range_query(index: QmIndex, query: SampleLike, r: float) -> list:
    return index.range_query(query, r)


def brute_force_knn(points: Sequence[SampleLike], query: SampleLike, k: int) -> QueryResult:
    """Linear-scan oracle: every distance computed from raw samples."""
    samples = [_sample(p) for p in points]
    if not samples:
        raise DomainError("brute_force_knn needs a non-empty corpus")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    q = _sample(query)
    scored = sorted(
        (abs_corr_distance(q, s), s.id if s.id is not None else i) for i, s in enumerate(samples)
    )
    return QueryResult([(i, d) for d, i in scored[:k]], 0, len(samples))
