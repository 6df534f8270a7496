"""Joint route selection as a min-max clique search.

Each user's candidate routes form one partition of a K-partite graph;
two candidates are connected exactly when their routes can operate
simultaneously, meaning they share no vertex and no cross pair of
their vertices has LoS.  A size-K clique is then one compatible route
per user, and the max-min power selection is the clique minimizing the
largest route cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Route
from .scene import Scene


class CliqueError(ValueError):
    """Raised for invalid path-graph constructions."""


class NoCandidateRoutesError(CliqueError):
    """A user ended up with an empty candidate list."""

    def __init__(self, user_index: int):
        self.user_index = user_index
        super().__init__(f"user {user_index} has no candidate routes")


def neighbor_disjoint(a: Route, b: Route, scene: Scene) -> bool:
    """True when two routes of different users can coexist.

    Both the surfaces and the terminal users count; the shared BS is
    exempt.  The routes must have no vertex in common and no LoS pair
    across them.
    """
    if a.user_index == b.user_index:
        raise CliqueError("neighbor test is undefined for same-user routes")
    va = a.vertices[1:]
    vb = b.vertices[1:]
    if set(va) & set(vb):
        return False
    for u in va:
        for v in vb:
            if scene.los_indicator(u, v):
                return False
    return True


@dataclass(frozen=True, eq=False)
class PathGraph:
    """K-partite compatibility graph over candidate routes.

    Vertices are numbered globally; ``partitions[k]`` lists the vertex
    ids of user k's candidates in candidate order.  ``order_key`` is
    the tuple the clique search compares; for plain weights it is the
    1-tuple of ``weight``.
    """

    users: tuple[int, ...]
    partitions: tuple[tuple[int, ...], ...]
    weight: tuple[float, ...]
    order_key: tuple[tuple[float, ...], ...]
    adj: tuple[frozenset[int], ...]
    routes: tuple[Route | None, ...] = field(default=None)

    def __post_init__(self) -> None:
        if self.routes is None:
            object.__setattr__(self, "routes", (None,) * len(self.weight))
        seen = [False] * len(self.weight)
        for part in self.partitions:
            for v in part:
                if seen[v]:
                    raise CliqueError(f"vertex {v} listed twice")
                seen[v] = True
        if not all(seen):
            raise CliqueError("every vertex must belong to a partition")
        owner = self.partition_of
        for v, nbrs in enumerate(self.adj):
            for u in nbrs:
                if v not in self.adj[u]:
                    raise CliqueError("adjacency must be symmetric")
                if owner[u] == owner[v]:
                    raise CliqueError("edges inside a partition are not allowed")

    @property
    def partition_of(self) -> list[int]:
        owner = [0] * len(self.weight)
        for idx, part in enumerate(self.partitions):
            for v in part:
                owner[v] = idx
        return owner

    @property
    def num_vertices(self) -> int:
        return len(self.weight)


def build_path_graph(candidates: dict[int, list[Route]], scene: Scene) -> PathGraph:
    """Assemble the compatibility graph from per-user candidate lists.

    Raises NoCandidateRoutesError naming the first user whose list is
    empty, since no joint selection can exist then.
    """
    if not candidates:
        raise CliqueError("no candidate lists given")
    users = tuple(sorted(candidates))
    for k in users:
        if not candidates[k]:
            raise NoCandidateRoutesError(k)
    partitions = []
    weight: list[float] = []
    order_key: list[tuple[float, ...]] = []
    routes: list[Route] = []
    for k in users:
        ids = []
        for route in candidates[k]:
            if route.user_index != k:
                raise CliqueError(
                    f"route for user {route.user_index} listed under user {k}"
                )
            ids.append(len(weight))
            weight.append(route.cost)
            order_key.append(route.cost_vec)
            routes.append(route)
        partitions.append(tuple(ids))

    adj = [set() for _ in weight]
    for ka in range(len(users)):
        for kb in range(ka + 1, len(users)):
            for va in partitions[ka]:
                for vb in partitions[kb]:
                    if neighbor_disjoint(routes[va], routes[vb], scene):
                        adj[va].add(vb)
                        adj[vb].add(va)

    return PathGraph(
        users=users,
        partitions=tuple(partitions),
        weight=tuple(weight),
        order_key=tuple(order_key),
        adj=tuple(frozenset(s) for s in adj),
        routes=tuple(routes),
    )


@dataclass(frozen=True)
class Clique:
    """One selected vertex per partition, in partition order."""

    vertices: tuple[int, ...]
    objective: float
    objective_key: tuple[float, ...]
    weight_sum: float


class CliqueSearch:
    """Exhaustive K-partite clique enumeration with last-layer pruning.

    Partitions are processed in index order by default or smallest
    first with order="size"; the minimal worst weight is the same
    either way.  With pruning on, once a clique covers all but the
    final partition only the cheapest compatible completion is tried,
    which cannot miss the optimum.  ``explored`` counts every partial
    or complete clique constructed.
    """

    def __init__(self, graph: PathGraph, prune: bool = True, order: str = "index"):
        if order not in ("index", "size"):
            raise CliqueError(f"unknown partition order {order!r}")
        self.graph = graph
        self.prune = prune
        self._owner = graph.partition_of
        if order == "size":
            self.order = sorted(
                range(len(graph.partitions)), key=lambda i: (len(graph.partitions[i]), i)
            )
        else:
            self.order = list(range(len(graph.partitions)))
        self.explored = 0
        self._best: tuple | None = None

    def run(self) -> Clique | None:
        self._best = None
        self.explored = 0
        all_vertices = frozenset(range(self.graph.num_vertices))
        self._extend([], all_vertices, 0)
        if self._best is None:
            return None
        key, chosen = self._best
        return Clique(
            vertices=chosen,
            objective=max(self.graph.weight[v] for v in chosen),
            objective_key=key[0],
            weight_sum=sum(self.graph.weight[v] for v in chosen),
        )

    # key: (max order_key, componentwise key sum, canonical vertex tuple)
    def _complete(self, members: list[int]) -> None:
        g = self.graph
        chosen = tuple(sorted(members, key=lambda v: self._owner[v]))
        worst = max(g.order_key[v] for v in chosen)
        total = tuple(
            sum(g.order_key[v][i] for v in chosen)
            for i in range(len(worst))
        )
        key = (worst, total, chosen)
        if self._best is None or key < self._best[0]:
            self._best = (key, chosen)

    def _extend(self, members: list[int], common: frozenset[int], depth: int) -> None:
        g = self.graph
        last = depth == len(self.order) - 1
        part = g.partitions[self.order[depth]]
        allowed = [v for v in part if v in common]
        if last and self.prune and allowed:
            pick = min(allowed, key=lambda v: (g.order_key[v], v))
            allowed = [pick]
        for v in allowed:
            self.explored += 1
            members.append(v)
            if last:
                self._complete(members)
            else:
                self._extend(members, common & g.adj[v], depth + 1)
            members.pop()


def min_max_clique(
    graph: PathGraph, prune: bool = True, order: str = "index"
) -> Clique | None:
    """Clique with one vertex per partition minimizing the largest weight.

    Ties break toward the smallest weight sum, then the smallest vertex
    tuple.  Returns None when no full-size clique exists.
    """
    return CliqueSearch(graph, prune=prune, order=order).run()
