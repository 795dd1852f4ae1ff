"""Guided pointer structures: colored graphs with unary functions that follow edges.

A guided structure is a finite simple graph with named unary relations (marks)
and named unary functions, where every function either fixes a vertex or moves
it to a neighbor.  This module owns the structure type, its vocabulary, the
Gaifman graph, restriction with function clamping, monadic expansion, and the
plain-text graph file format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


class GraphFormatError(ValueError):
    """Raised on malformed graph files; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Signature:
    """Vocabulary: one binary adjacency plus named unary relations and functions.

    Function names are indexed 1-based; composition tuples in formulas refer to
    these indices.
    """

    unary_relations: Tuple[str, ...] = ()
    unary_functions: Tuple[str, ...] = ()

    def __post_init__(self):
        names = list(self.unary_relations) + list(self.unary_functions)
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names in signature")
        for name in names:
            if not name or any(ch.isspace() for ch in name):
                raise ValueError(f"bad symbol name {name!r}")

    def function_name(self, index: int) -> str:
        """1-based index -> function name."""
        if not 1 <= index <= len(self.unary_functions):
            raise ValueError(f"function index {index} out of range")
        return self.unary_functions[index - 1]

    def function_index(self, name: str) -> int:
        try:
            return self.unary_functions.index(name) + 1
        except ValueError:
            raise ValueError(f"unknown function {name!r}") from None

    def has_relation(self, name: str) -> bool:
        return name in self.unary_relations

    def has_function(self, name: str) -> bool:
        return name in self.unary_functions

    def with_relations(self, extra: Sequence[str]) -> "Signature":
        clash = [r for r in extra if r in self.unary_relations or r in self.unary_functions]
        if clash:
            raise ValueError(f"mark names already in signature: {clash}")
        return Signature(self.unary_relations + tuple(extra), self.unary_functions)


class Graph:
    """Plain undirected graph over integer vertices (not necessarily dense)."""

    def __init__(self, vertices: Iterable[int], edges: Iterable[Tuple[int, int]] = ()):
        self.vertices: Tuple[int, ...] = tuple(sorted(set(vertices)))
        vset = set(self.vertices)
        adj: Dict[int, set] = {v: set() for v in self.vertices}
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if u not in vset or v not in vset:
                raise ValueError(f"edge ({u},{v}) leaves vertex set")
            adj[u].add(v)
            adj[v].add(u)
        self.adj: Dict[int, Tuple[int, ...]] = {v: tuple(sorted(adj[v])) for v in self.vertices}

    def __len__(self) -> int:
        return len(self.vertices)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj.get(u, ())

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in self.vertices for v in self.adj[u] if u < v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def induced(self, subset: Iterable[int]) -> "Graph":
        sub = set(subset)
        if not sub <= set(self.vertices):
            raise ValueError("induced subset leaves vertex set")
        return Graph(sub, [(u, v) for u, v in self.edges() if u in sub and v in sub])

    def components(self) -> List[Tuple[int, ...]]:
        """Connected components as sorted vertex tuples, ordered by smallest member."""
        seen = set()
        out = []
        for start in self.vertices:
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            stack = [start]
            while stack:
                x = stack.pop()
                for y in self.adj[x]:
                    if y not in seen:
                        seen.add(y)
                        comp.append(y)
                        stack.append(y)
            out.append(tuple(sorted(comp)))
        return out

    def is_connected(self) -> bool:
        return len(self.components()) <= 1


class GuidedStructure:
    """Colored graph with total unary functions, each fixing or following an edge.

    domain      sorted tuple of vertex ids (dense 0..n-1 for freshly built
                structures; restrictions keep the original ids)
    edges       normalized (u, v) pairs with u < v
    marks       mark name -> sorted tuple of vertices
    functions   function name -> {vertex: image}, total on the domain
    """

    def __init__(
        self,
        signature: Signature,
        domain: Iterable[int],
        edges: Iterable[Tuple[int, int]] = (),
        marks: Optional[Dict[str, Iterable[int]]] = None,
        functions: Optional[Dict[str, Dict[int, int]]] = None,
    ):
        self.signature = signature
        self.domain: Tuple[int, ...] = tuple(sorted(set(domain)))
        dset = set(self.domain)

        norm = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if u not in dset or v not in dset:
                raise ValueError(f"edge ({u},{v}) leaves domain")
            norm.add((min(u, v), max(u, v)))
        self.edges: Tuple[Tuple[int, int], ...] = tuple(sorted(norm))
        adj: Dict[int, set] = {v: set() for v in self.domain}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        self._adj: Dict[int, frozenset] = {v: frozenset(adj[v]) for v in self.domain}

        marks = marks or {}
        self.marks: Dict[str, Tuple[int, ...]] = {}
        for name in signature.unary_relations:
            vs = tuple(sorted(set(marks.get(name, ()))))
            if not set(vs) <= dset:
                raise ValueError(f"mark {name!r} leaves domain")
            self.marks[name] = vs
        unknown = set(marks) - set(signature.unary_relations)
        if unknown:
            raise ValueError(f"marks not in signature: {sorted(unknown)}")

        functions = functions or {}
        self.functions: Dict[str, Dict[int, int]] = {}
        for name in signature.unary_functions:
            fmap = dict(functions.get(name, {}))
            for v in self.domain:
                fmap.setdefault(v, v)
            if set(fmap) != dset:
                raise ValueError(f"function {name!r} not total on domain")
            if not set(fmap.values()) <= dset:
                raise ValueError(f"function {name!r} leaves domain")
            self.functions[name] = fmap
        unknown = set(functions) - set(signature.unary_functions)
        if unknown:
            raise ValueError(f"functions not in signature: {sorted(unknown)}")

    def __len__(self) -> int:
        return len(self.domain)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GuidedStructure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.domain == other.domain
            and self.edges == other.edges
            and self.marks == other.marks
            and self.functions == other.functions
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"GuidedStructure(n={len(self.domain)}, edges={len(self.edges)}, "
            f"marks={list(self.marks)}, functions={list(self.functions)})"
        )

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, frozenset())

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return tuple(sorted(self._adj[v]))

    def has_mark(self, name: str, v: int) -> bool:
        return v in self._mark_sets()[name]

    def _mark_sets(self) -> Dict[str, frozenset]:
        cached = getattr(self, "_mark_set_cache", None)
        if cached is None:
            cached = {name: frozenset(vs) for name, vs in self.marks.items()}
            self._mark_set_cache = cached
        return cached

    def apply(self, fname: str, v: int) -> int:
        return self.functions[fname][v]


def validate_guided(m: GuidedStructure) -> None:
    """Check guidedness: every function fixes each vertex or follows an edge.

    Raises ValueError naming the first offending (function, vertex) pair.
    """
    for name in m.signature.unary_functions:
        fmap = m.functions[name]
        for v in m.domain:
            w = fmap[v]
            if w != v and not m.has_edge(v, w):
                raise ValueError(f"function {name!r} not guided at {v}: image {w} is not a neighbor")


def gaifman(m: GuidedStructure) -> Graph:
    """Gaifman graph: adjacency plus every non-fixed function pair.

    For guided structures this equals the plain adjacency; restriction-produced
    clamps keep it that way.  Function pairs are included anyway so the result
    is correct on any structure.
    """
    pairs = set(m.edges)
    for name in m.signature.unary_functions:
        fmap = m.functions[name]
        for v in m.domain:
            w = fmap[v]
            if w != v:
                pairs.add((min(v, w), max(v, w)))
    return Graph(m.domain, pairs)


def restrict(m: GuidedStructure, subset: Iterable[int]) -> GuidedStructure:
    """Induced substructure on `subset` with function clamping.

    A function value falling outside the subset is clamped to its argument, so
    the restriction of a guided structure stays guided and total.
    """
    sub = tuple(sorted(set(subset)))
    sset = set(sub)
    if not sset <= set(m.domain):
        raise ValueError("restriction subset leaves domain")
    edges = [(u, v) for u, v in m.edges if u in sset and v in sset]
    marks = {name: [v for v in vs if v in sset] for name, vs in m.marks.items()}
    functions = {}
    for name, fmap in m.functions.items():
        functions[name] = {v: (fmap[v] if fmap[v] in sset else v) for v in sub}
    return GuidedStructure(m.signature, sub, edges, marks, functions)


def expand_monadic(m: GuidedStructure, new_marks: Dict[str, Iterable[int]]) -> GuidedStructure:
    """Expansion by fresh unary marks; name clashes are errors."""
    for name, vs in new_marks.items():
        if not set(vs) <= set(m.domain):
            raise ValueError(f"new mark {name!r} leaves domain")
    sig = m.signature.with_relations(sorted(new_marks))
    marks = dict(m.marks)
    marks.update({name: tuple(sorted(set(vs))) for name, vs in new_marks.items()})
    return GuidedStructure(sig, m.domain, m.edges, marks, m.functions)


# ---------------------------------------------------------------------------
# graph file format
#
#   n <count>            vertex count; ids are 0..count-1
#   v <id> <mark>...     marks of a vertex (may repeat per vertex)
#   e <u> <v>            undirected edge
#   f <name> <u> <v>     function entry name(u) = v
#
# '#' starts a comment.  Unknown directives, duplicate edges, and ids out of
# range are parse errors carrying the line number.
# ---------------------------------------------------------------------------


def parse_graph(text: str) -> GuidedStructure:
    n = None
    mark_order: List[str] = []
    func_order: List[str] = []
    vertex_marks: Dict[str, List[int]] = {}
    edges: List[Tuple[int, int]] = []
    edge_seen = set()
    func_entries: Dict[str, Dict[int, int]] = {}

    def need_int(tok: str, lineno: int) -> int:
        try:
            return int(tok)
        except ValueError:
            raise GraphFormatError(lineno, f"expected integer, got {tok!r}") from None

    def need_vertex(tok: str, lineno: int) -> int:
        v = need_int(tok, lineno)
        if n is None:
            raise GraphFormatError(lineno, "vertex before 'n' line")
        if not 0 <= v < n:
            raise GraphFormatError(lineno, f"vertex {v} out of range 0..{n - 1}")
        return v

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head, rest = toks[0], toks[1:]
        if head == "n":
            if n is not None:
                raise GraphFormatError(lineno, "duplicate 'n' line")
            if len(rest) != 1:
                raise GraphFormatError(lineno, "'n' takes one argument")
            n = need_int(rest[0], lineno)
            if n < 0:
                raise GraphFormatError(lineno, "negative vertex count")
        elif head == "v":
            if not rest:
                raise GraphFormatError(lineno, "'v' needs a vertex id")
            v = need_vertex(rest[0], lineno)
            for mark in rest[1:]:
                if mark not in vertex_marks:
                    vertex_marks[mark] = []
                    mark_order.append(mark)
                vertex_marks[mark].append(v)
        elif head == "e":
            if len(rest) != 2:
                raise GraphFormatError(lineno, "'e' takes two vertex ids")
            u, v = need_vertex(rest[0], lineno), need_vertex(rest[1], lineno)
            if u == v:
                raise GraphFormatError(lineno, f"self-loop at {u}")
            key = (min(u, v), max(u, v))
            if key in edge_seen:
                raise GraphFormatError(lineno, f"parallel edge ({u},{v})")
            edge_seen.add(key)
            edges.append(key)
        elif head == "f":
            if len(rest) != 3:
                raise GraphFormatError(lineno, "'f' takes a name and two vertex ids")
            name = rest[0]
            u, v = need_vertex(rest[1], lineno), need_vertex(rest[2], lineno)
            if name not in func_entries:
                func_entries[name] = {}
                func_order.append(name)
            if u in func_entries[name] and func_entries[name][u] != v:
                raise GraphFormatError(lineno, f"conflicting images for {name}({u})")
            func_entries[name][u] = v
        else:
            raise GraphFormatError(lineno, f"unknown directive {head!r}")

    if n is None:
        raise GraphFormatError(1, "missing 'n' line")
    sig = Signature(tuple(mark_order), tuple(func_order))
    return GuidedStructure(sig, range(n), edges, vertex_marks, func_entries)


def serialize_graph(m: GuidedStructure) -> str:
    """Inverse of parse_graph up to formatting; deterministic output."""
    if m.domain and m.domain != tuple(range(len(m.domain))):
        raise ValueError("graph files require dense vertex ids 0..n-1")
    lines = [f"n {len(m.domain)}"]
    per_vertex: Dict[int, List[str]] = {}
    for name in m.signature.unary_relations:
        for v in m.marks[name]:
            per_vertex.setdefault(v, []).append(name)
    for v in sorted(per_vertex):
        lines.append("v " + " ".join([str(v)] + per_vertex[v]))
    for u, v in m.edges:
        lines.append(f"e {u} {v}")
    for name in m.signature.unary_functions:
        fmap = m.functions[name]
        for u in m.domain:
            if fmap[u] != u:
                lines.append(f"f {name} {u} {fmap[u]}")
    return "\n".join(lines) + "\n"
