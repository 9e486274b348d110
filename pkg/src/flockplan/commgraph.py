"""Range-limited communication topology and influence scores."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ContractViolation, Vec2, as_array


@dataclass(frozen=True)
class CommGraph:
    round: int
    adjacency: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        adj = tuple(frozenset(a) for a in self.adjacency)
        for i, nbrs in enumerate(adj):
            if i in nbrs:
                raise ContractViolation(f"self-loop at {i}")
            for j in nbrs:
                if i not in adj[j]:
                    raise ContractViolation(f"asymmetric edge {i}->{j}")
        object.__setattr__(self, "adjacency", adj)

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def neighbors(self, i: int) -> frozenset[int]:
        return self.adjacency[i]

    def edges(self) -> set[tuple[int, int]]:
        return {(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j}

    @classmethod
    def from_edges(cls, n: int, edges, round: int = 0) -> CommGraph:
        adj: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            adj[i].add(j)
            adj[j].add(i)
        return cls(round, tuple(frozenset(a) for a in adj))


def build_graph(positions: Sequence[Vec2], r_comm: float, round: int = 0) -> CommGraph:
    """Edge (i, j) iff the robots are at most ``r_comm`` apart (boundary inclusive)."""
    if len(positions) < 2:
        raise ContractViolation("need at least two robots")
    if r_comm <= 0:
        raise ContractViolation("r_comm must be positive")
    xy = as_array(positions)
    diff = xy[:, None, :] - xy[None, :, :]
    within = np.hypot(diff[..., 0], diff[..., 1]) <= r_comm
    np.fill_diagonal(within, False)
    adj = tuple(frozenset(np.flatnonzero(row).tolist()) for row in within)
    return CommGraph(round, adj)


def influence(g: CommGraph, i: int) -> float:
    """Neighbor count normalized by team size."""
    if not 0 <= i < g.n:
        raise ContractViolation(f"robot {i} not in graph of {g.n}")
    return len(g.adjacency[i]) / g.n


def influences(g: CommGraph) -> list[float]:
    return [len(a) / g.n for a in g.adjacency]


def hop_distances(g: CommGraph, source: int) -> list[int | None]:
    dist: list[int | None] = [None] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] is None:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def is_connected(g: CommGraph) -> bool:
    if g.n == 0:
        return True
    return all(d is not None for d in hop_distances(g, 0))


def diameter(g: CommGraph) -> int | None:
    """Longest shortest path in hops; ``None`` for disconnected graphs."""
    best = 0
    for s in range(g.n):
        dist = hop_distances(g, s)
        if any(d is None for d in dist):
            return None
        best = max(best, max(dist))
    return best
