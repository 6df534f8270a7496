"""Routing graph over the LoS topology and shortest-path machinery.

Vertices are the scene nodes.  Directed edges run BS -> surface,
surface -> strictly-farther surface, and surface -> user, each carrying
the weight ln(d / (M sqrt(beta))).  Minimizing the weight sum of a
BS-to-user path maximizes its end to end channel power, so candidate
route search reduces to loopless shortest paths on a DAG.  Weights can
be negative; all searches rely on topological order, never on
Dijkstra's nonnegativity assumption.

Edge costs are short float tuples compared lexicographically.  The
plain graph uses 1-tuples of the scalar weight; the hop-greedy variant
uses (-1, ln d) so longer paths win before distance breaks ties, which
realizes the large-M limit without evaluating any large power.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property

from .scene import IRS, USER, Scene


class GraphError(ValueError):
    """Raised for malformed graphs or invalid route constructions."""


@dataclass(frozen=True)
class Route:
    """One beam route: vertex 0, an ordered surface sequence, a user.

    ``cost`` is the scalar weight sum of the underlying graph and
    ``cost_vec`` the tuple the search ordered by; they coincide (up to
    wrapping) except in the hop-greedy variant.
    """

    user_index: int
    vertices: tuple[int, ...]
    cost: float
    cost_vec: tuple[float, ...]
    distance_m: float

    @property
    def hops(self) -> int:
        """Number of reflecting surfaces on the route."""
        return len(self.vertices) - 2

    @property
    def irs_ids(self) -> tuple[int, ...]:
        return self.vertices[1:-1]

    def __str__(self) -> str:
        inner = " -> ".join(f"IRS {v}" for v in self.irs_ids)
        middle = f" -> {inner}" if inner else ""
        return f"BS{middle} -> User {self.user_index}"


def edge_weight(distance: float, elements: int, ref_path_gain: float) -> float:
    """ln(d / (M sqrt(beta))), the per-hop power cost in log domain."""
    if distance <= 0 or elements < 1:
        raise GraphError("edge weight needs positive distance and element count")
    return math.log(distance / (elements * math.sqrt(ref_path_gain)))


def validate_route(scene: Scene, route: Route) -> None:
    """Check ids, kinds, surface distinctness and hop-wise LoS."""
    seq = route.vertices
    if len(seq) < 3:
        raise GraphError(f"route too short: {seq}")
    if seq[0] != 0:
        raise GraphError("route must start at the BS")
    if seq[-1] != scene.user_vertex(route.user_index):
        raise GraphError(
            f"route ends at {seq[-1]}, expected user {route.user_index}"
        )
    inner = seq[1:-1]
    if len(set(inner)) != len(inner):
        raise GraphError(f"route repeats a surface: {seq}")
    for v in inner:
        if scene.kind(v) != IRS:
            raise GraphError(f"route vertex {v} is not a reflecting surface")
    for a, b in zip(seq[:-1], seq[1:]):
        if not scene.los_indicator(a, b):
            raise GraphError(f"route hop {a} -> {b} has no LoS")


def route_from_sequence(scene: Scene, user_index: int, irs_ids: list[int]) -> Route:
    """Build and validate a route from an explicit surface sequence."""
    seq = (0, *irs_ids, scene.user_vertex(user_index))
    dist = sum(scene.distance(a, b) for a, b in zip(seq[:-1], seq[1:]))
    cost = sum(
        edge_weight(scene.distance(a, b), scene.elements, scene.ref_path_gain)
        for a, b in zip(seq[:-1], seq[1:])
    )
    route = Route(
        user_index=user_index,
        vertices=seq,
        cost=cost,
        cost_vec=(cost,),
        distance_m=dist,
    )
    validate_route(scene, route)
    return route


@dataclass(frozen=True, eq=False)
class LosGraph:
    """Immutable routing DAG.

    Vertex ids: 0 is the BS, 1..num_irs the surfaces, then the users.
    ``weight`` holds the scalar per-edge weight, ``cost`` the tuple the
    searches compare, ``dist`` the hop length in meters.
    """

    num_irs: int
    num_users: int
    succ: dict[int, tuple[int, ...]]
    weight: dict[tuple[int, int], float]
    cost: dict[tuple[int, int], tuple[float, ...]]
    dist: dict[tuple[int, int], float]
    elements: int
    ref_path_gain: float

    @property
    def num_vertices(self) -> int:
        return 1 + self.num_irs + self.num_users

    @property
    def user_vertices(self) -> range:
        return range(1 + self.num_irs, self.num_vertices)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in sorted(self.succ) for j in self.succ[i]]

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        """Topological vertex order; construction fails on any cycle."""
        indeg = {v: 0 for v in range(self.num_vertices)}
        for i in self.succ:
            for j in self.succ[i]:
                indeg[j] += 1
        ready = deque(v for v in range(self.num_vertices) if indeg[v] == 0)
        order = []
        while ready:
            v = ready.popleft()
            order.append(v)
            for j in self.succ.get(v, ()):
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
        if len(order) != self.num_vertices:
            raise GraphError("routing graph contains a cycle")
        return tuple(order)

    @classmethod
    def from_edges(
        cls,
        num_irs: int,
        num_users: int,
        weighted_edges: list[tuple[int, int, float]],
        elements: int = 1,
        ref_path_gain: float = 0.25,
    ) -> "LosGraph":
        """Synthetic graph from explicit weighted edges.

        Hop distances are derived from the weights by inverting the
        weight formula so cost and power stay mutually consistent.
        """
        succ: dict[int, list[int]] = {}
        weight = {}
        cost = {}
        dist = {}
        scale = elements * math.sqrt(ref_path_gain)
        for i, j, w in weighted_edges:
            if (i, j) in weight:
                raise GraphError(f"duplicate edge ({i}, {j})")
            succ.setdefault(i, []).append(j)
            weight[i, j] = w
            cost[i, j] = (w,)
            dist[i, j] = scale * math.exp(w)
        g = cls(
            num_irs=num_irs,
            num_users=num_users,
            succ={i: tuple(sorted(js)) for i, js in succ.items()},
            weight=weight,
            cost=cost,
            dist=dist,
            elements=elements,
            ref_path_gain=ref_path_gain,
        )
        g.topo_order
        return g


def build_routing_graph(
    scene: Scene,
    elements: int | None = None,
    hop_priority: bool = False,
) -> LosGraph:
    """Routing DAG of a scene.

    Edges: BS to every LoS surface, surface to every LoS surface that
    is strictly farther from the BS, surface to every LoS user.  Users
    never transmit and the BS-user link is treated as blocked, so no
    other edges exist.

    ``elements`` overrides the surface size used in the weights (the
    scene's count stays authoritative for power evaluation elsewhere).
    ``hop_priority`` switches the search cost to (-1, ln d) per edge.
    """
    m = scene.elements if elements is None else elements
    if m < 1:
        raise GraphError("element override must be positive")
    j_count = scene.num_irs
    succ: dict[int, list[int]] = {}
    weight = {}
    cost = {}
    dist = {}

    def add(i: int, j: int) -> None:
        d = scene.distance(i, j)
        succ.setdefault(i, []).append(j)
        weight[i, j] = edge_weight(d, m, scene.ref_path_gain)
        cost[i, j] = (-1.0, math.log(d)) if hop_priority else (weight[i, j],)
        dist[i, j] = d

    irs_range = range(1, 1 + j_count)
    for j in irs_range:
        if scene.los_indicator(0, j):
            add(0, j)
    for i in irs_range:
        for j in irs_range:
            if i == j or not scene.los_indicator(i, j):
                continue
            # only edges leading strictly away from the BS keep the graph acyclic
            if scene.distance(j, 0) > scene.distance(i, 0):
                add(i, j)
    for i in irs_range:
        for u in range(1 + j_count, scene.num_nodes):
            if scene.los_indicator(i, u):
                add(i, u)

    g = LosGraph(
        num_irs=j_count,
        num_users=scene.num_users,
        succ={i: tuple(sorted(js)) for i, js in succ.items()},
        weight=weight,
        cost=cost,
        dist=dist,
        elements=m,
        ref_path_gain=scene.ref_path_gain,
    )
    g.topo_order
    return g


# -- path search -------------------------------------------------------


def _zero_cost(graph: LosGraph) -> tuple[float, ...]:
    dims = len(next(iter(graph.cost.values()))) if graph.cost else 1
    return (0.0,) * dims


def _path_cost(graph: LosGraph, vertices: tuple[int, ...]) -> tuple[float, ...]:
    """Cost vector of a path, summed hop by hop in path order.

    Always re-accumulated left to right so equal paths produce
    bit-identical floats regardless of how the search found them.
    """
    total = list(_zero_cost(graph))
    for a, b in zip(vertices[:-1], vertices[1:]):
        c = graph.cost[a, b]
        for idx in range(len(total)):
            total[idx] += c[idx]
    return tuple(total)


def _make_route(graph: LosGraph, vertices: tuple[int, ...]) -> Route:
    cost = 0.0
    dist = 0.0
    for a, b in zip(vertices[:-1], vertices[1:]):
        cost += graph.weight[a, b]
        dist += graph.dist[a, b]
    return Route(
        user_index=vertices[-1] - graph.num_irs,
        vertices=vertices,
        cost=cost,
        cost_vec=_path_cost(graph, vertices),
        distance_m=dist,
    )


def make_route(graph: LosGraph, vertices: tuple[int, ...]) -> Route:
    """Route for an explicit vertex path; every hop must be an edge."""
    for a, b in zip(vertices[:-1], vertices[1:]):
        if (a, b) not in graph.weight:
            raise GraphError(f"no edge {a} -> {b}")
    if len(vertices) < 3 or vertices[0] != 0:
        raise GraphError(f"not a BS-to-user path: {vertices}")
    _check_target(graph, vertices[-1])
    return _make_route(graph, vertices)


def _check_target(graph: LosGraph, target: int) -> None:
    if target not in graph.user_vertices:
        raise GraphError(f"target {target} is not a user vertex")


def dag_shortest_path(
    graph: LosGraph,
    target: int,
    source: int = 0,
    banned_vertices: frozenset[int] = frozenset(),
    banned_edges: frozenset[tuple[int, int]] = frozenset(),
) -> Route | None:
    """Minimum-cost path from source to a user vertex, or None.

    Single relaxation sweep in topological order, exact for any edge
    sign.  Ties break toward fewer hops, then the lexicographically
    smallest vertex sequence, so results are deterministic.
    """
    _check_target(graph, target)
    if source in banned_vertices or target in banned_vertices:
        return None
    # key: (cost vector, hop count, vertex sequence), compared as a tuple
    best: dict[int, tuple[tuple[float, ...], int, tuple[int, ...]]] = {
        source: (_zero_cost(graph), 0, (source,))
    }
    for v in graph.topo_order:
        entry = best.get(v)
        if entry is None or v == target:
            continue
        for j in graph.succ.get(v, ()):
            if j in banned_vertices or (v, j) in banned_edges:
                continue
            path = entry[2] + (j,)
            cand = (_path_cost(graph, path), entry[1] + 1, path)
            if j not in best or cand < best[j]:
                best[j] = cand
    hit = best.get(target)
    if hit is None:
        return None
    return _make_route(graph, hit[2])


def yen_k_shortest(graph: LosGraph, target: int, count: int) -> list[Route]:
    """Up to `count` lowest-cost loopless BS-to-user paths, sorted.

    Classic deviation search: each accepted path spawns spur searches
    that exclude the edges of previously accepted paths sharing the
    same root prefix, with the shortest-path subroutine above.  Returns
    fewer than `count` routes when the path set is exhausted.
    """
    _check_target(graph, target)
    if count < 1:
        raise GraphError("path count must be positive")
    first = dag_shortest_path(graph, target)
    if first is None:
        return []
    accepted = [first]
    seen = {first.vertices}
    candidates: list[tuple[tuple[float, ...], int, tuple[int, ...]]] = []
    while len(accepted) < count:
        prev = accepted[-1].vertices
        for i in range(len(prev) - 1):
            root = prev[: i + 1]
            spur = prev[i]
            banned_edges = set()
            for done in accepted:
                path = done.vertices
                if len(path) > i + 1 and path[: i + 1] == root:
                    banned_edges.add((path[i], path[i + 1]))
            banned_vertices = frozenset(root[:-1])
            spur_route = dag_shortest_path(
                graph,
                target,
                source=spur,
                banned_vertices=banned_vertices,
                banned_edges=frozenset(banned_edges),
            )
            if spur_route is None:
                continue
            full = root[:-1] + spur_route.vertices
            if full in seen:
                continue
            seen.add(full)
            heapq.heappush(
                candidates, (_path_cost(graph, full), len(full) - 1, full)
            )
        if not candidates:
            break
        _, _, best_path = heapq.heappop(candidates)
        accepted.append(_make_route(graph, best_path))
    return accepted


def enumerate_paths(
    graph: LosGraph,
    target: int,
    banned_vertices: frozenset[int] = frozenset(),
) -> list[tuple[int, ...]]:
    """All simple BS-to-user vertex sequences, in lexicographic order."""
    _check_target(graph, target)
    out: list[tuple[int, ...]] = []
    stack = [0]

    def walk(v: int) -> None:
        if v == target:
            out.append(tuple(stack))
            return
        for j in graph.succ.get(v, ()):
            if j in banned_vertices or j in stack:
                continue
            if j in graph.user_vertices and j != target:
                continue
            stack.append(j)
            walk(j)
            stack.pop()

    if 0 not in banned_vertices:
        walk(0)
    return out


# -- exports -----------------------------------------------------------


def edge_list_text(graph: LosGraph) -> str:
    """One `i j weight` line per edge, vertex order, round-trip floats."""
    lines = [f"{i} {j} {graph.weight[i, j]!r}" for i, j in graph.edges]
    return "\n".join(lines) + "\n"


def _vertex_label(graph: LosGraph, v: int) -> str:
    if v == 0:
        return "BS"
    if v <= graph.num_irs:
        return f"IRS {v}"
    return f"User {v - graph.num_irs}"


def to_dot(graph: LosGraph) -> str:
    """Graphviz digraph with kind-based labels and weight annotations."""
    lines = ["digraph routing {"]
    for v in range(graph.num_vertices):
        lines.append(f'  v{v} [label="{_vertex_label(graph, v)}"];')
    for i, j in graph.edges:
        lines.append(f'  v{i} -> v{j} [label="{graph.weight[i, j]:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
