"""Centered colorings, tree-depth, and elimination forests.

A coloring is p-centered when every connected subgraph either receives at
least p colors or has some color on exactly one vertex.  Colorings whose every
connected subgraph has a uniquely colored vertex ("fully centered") are
p-centered for all p; depth levels of an elimination forest are such a
coloring, which is how both construction backends here produce validity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .structures import Graph, GuidedStructure, gaifman


class NotCenteredError(ValueError):
    """Raised when a coloring is not centered on some connected subgraph."""

    def __init__(self, component: Sequence[int]):
        super().__init__(f"no uniquely colored vertex in component {sorted(component)}")
        self.component = tuple(sorted(component))


@dataclass(frozen=True)
class CenteredColoring:
    """A p-centered coloring candidate: colors are positive integers."""

    p: int
    colors: Dict[int, int]

    def n_colors(self) -> int:
        return len(set(self.colors.values()))

    def classes(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {}
        for v in sorted(self.colors):
            out.setdefault(self.colors[v], []).append(v)
        return {c: tuple(vs) for c, vs in sorted(out.items())}


@dataclass
class EliminationForest:
    """Rooted forest on the vertex set; roots are their own parents.

    Built so that every edge of the originating graph joins an ancestor to a
    descendant (the graph embeds in the forest's ancestor closure).
    """

    parent: Dict[int, int]
    level: Dict[int, int]

    @property
    def height(self) -> int:
        return max(self.level.values(), default=0)

    def vertices(self) -> Tuple[int, ...]:
        return tuple(sorted(self.parent))

    def roots(self) -> Tuple[int, ...]:
        return tuple(sorted(v for v, p in self.parent.items() if p == v))

    def children(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {v: [] for v in self.parent}
        for v in sorted(self.parent):
            p = self.parent[v]
            if p != v:
                out[p].append(v)
        return {v: tuple(c) for v, c in out.items()}

    def strict_ancestors(self, v: int) -> Tuple[int, ...]:
        """Ancestors from parent up to the root."""
        out = []
        while self.parent[v] != v:
            v = self.parent[v]
            out.append(v)
        return tuple(out)

    def ancestor_at_level(self, v: int, lvl: int) -> int:
        if not 1 <= lvl <= self.level[v]:
            raise ValueError(f"no level-{lvl} ancestor of {v}")
        while self.level[v] > lvl:
            v = self.parent[v]
        return v

    def root_of(self, v: int) -> int:
        return self.ancestor_at_level(v, 1)

    def is_ancestor(self, u: int, v: int) -> bool:
        """True when u is an ancestor of v (or equal)."""
        if self.level[u] > self.level[v]:
            return False
        return self.ancestor_at_level(v, self.level[u]) == u

    def validate(self, g: Optional[Graph] = None) -> None:
        for v, p in self.parent.items():
            if p == v:
                if self.level[v] != 1:
                    raise ValueError(f"root {v} not at level 1")
            elif self.level[v] != self.level[p] + 1:
                raise ValueError(f"level gap at {v}")
        if g is not None:
            for u, v in g.edges():
                if not (self.is_ancestor(u, v) or self.is_ancestor(v, u)):
                    raise ValueError(f"edge ({u},{v}) is not ancestor-descendant in the forest")


# ---------------------------------------------------------------------------
# exact tree-depth: memoized branch and bound
# ---------------------------------------------------------------------------


class _TreedepthEngine:
    def __init__(self, g: Graph):
        self.adj = {v: frozenset(g.adj[v]) for v in g.vertices}
        self.memo: Dict[FrozenSet[int], int] = {}

    def components(self, vs: FrozenSet[int]) -> List[FrozenSet[int]]:
        seen = set()
        comps = []
        for s in sorted(vs):
            if s in seen:
                continue
            comp = {s}
            stack = [s]
            seen.add(s)
            while stack:
                x = stack.pop()
                for y in self.adj[x] & vs:
                    if y not in seen:
                        seen.add(y)
                        comp.add(y)
                        stack.append(y)
            comps.append(frozenset(comp))
        return comps

    def eccentricity_lb(self, vs: FrozenSet[int]) -> int:
        """Tree-depth of a connected graph is at least log2(diameter path)."""
        start = min(vs)
        far, _ = self._bfs_far(vs, start)
        _, dist = self._bfs_far(vs, far)
        # a shortest path with dist edges is an induced-length path subgraph
        n_path = dist + 1
        lb = 1
        while (1 << lb) - 1 < n_path:
            lb += 1
        return lb

    def _bfs_far(self, vs: FrozenSet[int], start: int) -> Tuple[int, int]:
        seen = {start: 0}
        frontier = [start]
        far, fdist = start, 0
        while frontier:
            nxt = []
            for x in frontier:
                for y in self.adj[x] & vs:
                    if y not in seen:
                        seen[y] = seen[x] + 1
                        if (seen[y], -y) > (fdist, -far):
                            far, fdist = y, seen[y]
                        nxt.append(y)
            frontier = nxt
        return far, fdist

    def greedy_ub(self, vs: FrozenSet[int]) -> int:
        """Height of a forest built by removing a good separator vertex."""
        if not vs:
            return 0
        comps = self.components(vs)
        return max(self._greedy_ub_connected(c) for c in comps)

    def _greedy_ub_connected(self, vs: FrozenSet[int]) -> int:
        if len(vs) == 1:
            return 1
        v = self._separator_choice(vs)
        rest = vs - {v}
        if not rest:
            return 1
        return 1 + max(self._greedy_ub_connected(c) for c in self.components(rest))

    def _separator_choice(self, vs: FrozenSet[int]) -> int:
        candidates = set()
        start = min(vs)
        far, _ = self._bfs_far(vs, start)
        # middle of a long shortest path is a decent separator
        mid = self._bfs_middle(vs, far)
        candidates.add(mid)
        by_deg = sorted(vs, key=lambda v: (-len(self.adj[v] & vs), v))
        candidates.update(by_deg[:4])
        best_v, best_key = None, None
        for v in sorted(candidates):
            rest = vs - {v}
            worst = max((len(c) for c in self.components(rest)), default=0)
            key = (worst, v)
            if best_key is None or key < best_key:
                best_key, best_v = key, v
        return best_v

    def _bfs_middle(self, vs: FrozenSet[int], start: int) -> int:
        seen = {start: 0}
        order = [start]
        frontier = [start]
        parent = {start: start}
        far = start
        while frontier:
            nxt = []
            for x in frontier:
                for y in sorted(self.adj[x] & vs):
                    if y not in seen:
                        seen[y] = seen[x] + 1
                        parent[y] = x
                        order.append(y)
                        nxt.append(y)
                        far = y
            frontier = nxt
        path = [far]
        while parent[path[-1]] != path[-1]:
            path.append(parent[path[-1]])
        return path[len(path) // 2]

    def treedepth(self, vs: FrozenSet[int], budget: Optional[int] = None) -> int:
        """Exact tree-depth of the induced subgraph on vs."""
        comps = self.components(vs)
        if not comps:
            return 0
        return max(self._td_connected(c, budget) for c in comps)

    def _td_connected(self, vs: FrozenSet[int], budget: Optional[int]) -> int:
        if len(vs) == 1:
            return 1
        if len(vs) == 2:
            return 2
        hit = self.memo.get(vs)
        if hit is not None:
            return hit
        lb = self.eccentricity_lb(vs)
        ub = self.greedy_ub(vs)
        if lb >= ub:
            self.memo[vs] = ub
            return ub
        best = ub
        order = sorted(vs, key=lambda v: (-len(self.adj[v] & vs), v))
        for v in order:
            if best == lb:
                break
            comps = sorted(self.components(vs - {v}), key=len, reverse=True)
            worst = 0
            for c in comps:
                worst = max(worst, self._td_connected(c, best - 1))
                if worst + 1 >= best:
                    break
            best = min(best, 1 + worst)
        self.memo[vs] = best
        return best


def treedepth_exact(g: Graph, size_cap: int = 20) -> int:
    """Exact tree-depth by branch and bound; refuses graphs above the cap."""
    if len(g) > size_cap:
        raise ValueError(f"graph has {len(g)} vertices, exact tree-depth capped at {size_cap}")
    if len(g) == 0:
        return 0
    return _TreedepthEngine(g).treedepth(frozenset(g.vertices))


def optimal_elimination_forest(g: Graph) -> EliminationForest:
    """Minimum-height elimination forest (exponential; small graphs only)."""
    eng = _TreedepthEngine(g)
    parent: Dict[int, int] = {}
    level: Dict[int, int] = {}

    def peel(vs: FrozenSet[int], par: Optional[int], lvl: int) -> None:
        for comp in eng.components(vs):
            td = eng._td_connected(comp, None) if len(comp) > 1 else 1
            chosen = None
            if len(comp) == 1:
                chosen = min(comp)
            else:
                for v in sorted(comp):
                    rest = comp - {v}
                    sub = max((eng._td_connected(c, td) for c in eng.components(rest)), default=0)
                    if sub + 1 <= td:
                        chosen = v
                        break
                assert chosen is not None, "tree-depth recursion lost its witness"
            parent[chosen] = chosen if par is None else par
            level[chosen] = lvl
            peel(comp - {chosen}, chosen, lvl + 1)

    peel(frozenset(g.vertices), None, 1)
    return EliminationForest(parent, level)


def heuristic_elimination_forest(g: Graph) -> EliminationForest:
    """Separator-guided elimination forest; valid for any graph, decent height."""
    eng = _TreedepthEngine(g)
    parent: Dict[int, int] = {}
    level: Dict[int, int] = {}

    def peel(vs: FrozenSet[int], par: Optional[int], lvl: int) -> None:
        for comp in eng.components(vs):
            v = min(comp) if len(comp) == 1 else eng._separator_choice(comp)
            parent[v] = v if par is None else par
            level[v] = lvl
            peel(comp - {v}, v, lvl + 1)

    peel(frozenset(g.vertices), None, 1)
    return EliminationForest(parent, level)


def coloring_from_forest(forest: EliminationForest, p: int) -> CenteredColoring:
    """Depth levels as colors: fully centered, hence p-centered for every p."""
    return CenteredColoring(p, dict(forest.level))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _centered_violation(adj: Dict[int, frozenset], vs: FrozenSet[int], colors: Dict[int, int]) -> Optional[Tuple[int, ...]]:
    """Find a connected subgraph with no uniquely colored vertex, else None.

    Works component-wise: delete a uniquely colored vertex, recurse.  Which
    unique vertex is deleted does not matter for the outcome.
    """
    stack = [vs]
    while stack:
        cur = stack.pop()
        seen = set()
        for s in sorted(cur):
            if s in seen:
                continue
            comp = {s}
            seen.add(s)
            grow = [s]
            while grow:
                x = grow.pop()
                for y in adj[x] & cur:
                    if y not in seen:
                        seen.add(y)
                        comp.add(y)
                        grow.append(y)
            counts: Dict[int, int] = {}
            for v in comp:
                counts[colors[v]] = counts.get(colors[v], 0) + 1
            unique = [v for v in comp if counts[colors[v]] == 1]
            if not unique:
                return tuple(sorted(comp))
            pick = min(unique, key=lambda v: (colors[v], v))
            rest = frozenset(comp) - {pick}
            if rest:
                stack.append(rest)
    return None


def validate_p_centered(g: Graph, coloring: CenteredColoring, p: Optional[int] = None) -> Optional[Tuple[int, ...]]:
    """Return a violating connected vertex set, or None when p-centered.

    Only subgraphs spanning at most p-1 colors can violate the definition, so
    it suffices to check that the union of every such family of color classes
    is centered.
    """
    p = coloring.p if p is None else p
    if p < 1:
        raise ValueError("p must be positive")
    for v in g.vertices:
        if v not in coloring.colors:
            raise ValueError(f"vertex {v} is uncolored")
    adj = {v: frozenset(g.adj[v]) for v in g.vertices}
    palette = sorted(set(coloring.colors[v] for v in g.vertices))
    classes: Dict[int, List[int]] = {c: [] for c in palette}
    for v in sorted(g.vertices):
        classes[coloring.colors[v]].append(v)
    top = min(p - 1, len(palette))
    for size in range(1, top + 1):
        for chosen in itertools.combinations(palette, size):
            vs = frozenset(v for c in chosen for v in classes[c])
            witness = _centered_violation(adj, vs, coloring.colors)
            if witness is not None:
                return witness
    return None


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def _smallest_last_order(g: Graph) -> List[int]:
    deg = {v: len(g.adj[v]) for v in g.vertices}
    alive = set(g.vertices)
    order = []
    while alive:
        v = min(alive, key=lambda x: (deg[x], x))
        order.append(v)
        alive.remove(v)
        for u in g.adj[v]:
            if u in alive:
                deg[u] -= 1
    order.reverse()
    return order


def _greedy_distance_coloring(g: Graph, radius: int) -> CenteredColoring:
    """Greedy along a degeneracy order, refusing color reuse within a radius."""
    colors: Dict[int, int] = {}
    for v in _smallest_last_order(g):
        forbidden = set()
        frontier = {v}
        seen = {v}
        for _ in range(radius):
            nxt = set()
            for x in frontier:
                for y in g.adj[x]:
                    if y not in seen:
                        seen.add(y)
                        nxt.add(y)
                        if y in colors:
                            forbidden.add(colors[y])
            frontier = nxt
        c = 1
        while c in forbidden:
            c += 1
        colors[v] = c
    return CenteredColoring(0, colors)


def compute_p_centered(g: Graph, p: int, backend: str = "heuristic", exact_threshold: int = 18) -> CenteredColoring:
    """A valid p-centered coloring; no promise on the number of colors.

    exact backend: depth levels of a minimum-height elimination forest.
    heuristic backend: distance-constrained greedy attempts checked by the
    validator with an escalating radius; on persistent failure, exact below
    the size threshold, otherwise depth levels of a separator-guided forest
    (centered by construction, so no validator pass is required).
    """
    if p < 1:
        raise ValueError("p must be positive")
    if len(g) == 0:
        return CenteredColoring(p, {})
    if backend == "exact":
        return coloring_from_forest(optimal_elimination_forest(g), p)
    if backend != "heuristic":
        raise ValueError(f"unknown backend {backend!r}")
    for radius in (2, 3, p + 1):
        cand = CenteredColoring(p, _greedy_distance_coloring(g, radius).colors)
        if validate_p_centered(g, cand, p) is None:
            return cand
    if len(g) <= exact_threshold:
        return coloring_from_forest(optimal_elimination_forest(g), p)
    return coloring_from_forest(heuristic_elimination_forest(g), p)


def forest_from_centered(m: GuidedStructure, coloring: CenteredColoring) -> EliminationForest:
    """Elimination forest of the Gaifman graph from a centered coloring.

    Stage by stage each component must hold a uniquely colored vertex; that
    vertex (ties: smallest color, then smallest id) becomes the next root.
    Raises NotCenteredError when some component has no unique color.
    """
    g = gaifman(m)
    adj = {v: frozenset(g.adj[v]) for v in g.vertices}
    parent: Dict[int, int] = {}
    level: Dict[int, int] = {}

    def peel(vs: FrozenSet[int], par: Optional[int], lvl: int) -> None:
        seen = set()
        for s in sorted(vs):
            if s in seen:
                continue
            comp = {s}
            seen.add(s)
            grow = [s]
            while grow:
                x = grow.pop()
                for y in adj[x] & vs:
                    if y not in seen:
                        seen.add(y)
                        comp.add(y)
                        grow.append(y)
            counts: Dict[int, int] = {}
            for v in comp:
                counts[coloring.colors[v]] = counts.get(coloring.colors[v], 0) + 1
            unique = [v for v in comp if counts[coloring.colors[v]] == 1]
            if not unique:
                raise NotCenteredError(comp)
            pick = min(unique, key=lambda v: (coloring.colors[v], v))
            parent[pick] = pick if par is None else par
            level[pick] = lvl
            rest = frozenset(comp) - {pick}
            if rest:
                peel(rest, pick, lvl + 1)

    peel(frozenset(g.vertices), None, 1)
    forest = EliminationForest(parent, level)
    forest.validate(g)
    return forest
