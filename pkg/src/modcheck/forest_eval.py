"""Fast FOM evaluation and modulo-counting elimination on colored forests.

Three layers:

* subtree type codes: canonical integer codes for rooted subtrees, either
  exact or truncated to (threshold, modulus) child multiplicities.  Formula
  truth depends only on these codes, which powers everything below.
* eval_forest: evaluates any FOM formula by shrinking the forest to a
  bounded-size pruned representative (per-class child caps) and running the
  naive evaluator there.
* pattern counting and elimination: counts extensions w with
  closure(v̄, w) isomorphic to a given labeled pattern via the three-case
  split (untouched component / forced closure position / branch below a
  closure vertex), and eliminates one modulo quantifier into a
  quantifier-free formula over parent compositions and residue marks.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .coloring import EliminationForest
from .forest_codec import (
    ColoredForest,
    edge_mark_name,
    forest_structure,
    func_mark_name,
    level_mark_name,
)
from .logic import (
    And,
    BoolConst,
    EqAtom,
    Formula,
    MarkAtom,
    Not,
    Term,
    and_all,
    eval_naive,
    free_vars,
    moduli_of,
    or_all,
    quantifier_depth,
)

# how often each proof case fired; tests assert minimum coverage
CASE_COUNTER: Counter = Counter()


def reset_case_counters() -> None:
    CASE_COUNTER.clear()


# ---------------------------------------------------------------------------
# forest indexing and letters
# ---------------------------------------------------------------------------


class _Index:
    """Children lists and per-vertex letters (all marks except levels)."""

    def __init__(self, y: ColoredForest):
        self.y = y
        self.forest = y.forest
        self.children: Dict[int, Tuple[int, ...]] = y.forest.children()
        letters: Dict[int, List[str]] = {v: [] for v in y.forest.vertices()}
        for name in y.signature.unary_relations:
            for v in y.marks[name]:
                letters[v].append(name)
        for (j, i), vs in sorted(y.edge_marks.items()):
            for v in vs:
                letters[v].append(edge_mark_name(j, i))
        for key, vs in sorted(y.func_marks.items()):
            for v in vs:
                letters[v].append(func_mark_name(*key))
        self.letter: Dict[int, Tuple[str, ...]] = {v: tuple(sorted(ls)) for v, ls in letters.items()}

    def roots(self) -> Tuple[int, ...]:
        return self.forest.roots()


# ---------------------------------------------------------------------------
# subtree type codes
# ---------------------------------------------------------------------------


class SubtreeTypeTable:
    """Canonical codes for the subtree below each vertex.

    With threshold=None codes are exact: equal codes iff the mark-preserving
    rooted subtrees are isomorphic.  With a threshold t and modulus B, child
    multiplicities are recorded as (min(count, t), count mod B), which is the
    coarsening used by the pruning evaluator.
    """

    def __init__(self, y: ColoredForest, threshold: Optional[int] = None, modulus: int = 1, index: Optional[_Index] = None):
        if modulus < 1:
            raise ValueError("modulus must be positive")
        self.threshold = threshold
        self.modulus = modulus
        self.index = index or _Index(y)
        self.code: Dict[int, int] = {}
        self._intern: Dict[tuple, int] = {}
        order = sorted(self.index.forest.vertices(), key=lambda v: -self.index.forest.level[v])
        for v in order:
            counts = Counter(self.code[c] for c in self.index.children[v])
            if threshold is None:
                summary = tuple(sorted(counts.items()))
            else:
                summary = tuple(sorted((c, (min(n, threshold), n % modulus)) for c, n in counts.items()))
            key = (self.index.letter[v], summary)
            tid = self._intern.get(key)
            if tid is None:
                tid = len(self._intern)
                self._intern[key] = tid
            self.code[v] = tid

    def same_subtree(self, u: int, v: int) -> bool:
        return self.code[u] == self.code[v]


# ---------------------------------------------------------------------------
# labeled patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternNode:
    letter: tuple
    labels: Tuple[int, ...]
    children: Tuple["PatternNode", ...]

    def key(self) -> tuple:
        return (self.letter, self.labels, tuple(c.key() for c in self.children))


def make_pattern_node(letter, labels: Iterable[int] = (), children: Iterable[PatternNode] = ()) -> PatternNode:
    kids = tuple(sorted(children, key=lambda c: c.key()))
    return PatternNode(tuple(letter), tuple(sorted(labels)), kids)


def _subtree_labels(node: PatternNode) -> FrozenSet[int]:
    out = set(node.labels)
    for c in node.children:
        out |= _subtree_labels(c)
    return frozenset(out)


@dataclass(frozen=True)
class TightLabeledForest:
    """Canonical rooted colored forest with labels 1..k placed on vertices.

    Tight: every vertex carries a label or has one below it, which is exactly
    the shape of an ancestor closure.
    """

    trees: Tuple[PatternNode, ...]
    k: int

    @staticmethod
    def of(trees: Iterable[PatternNode], k: int) -> "TightLabeledForest":
        trees = tuple(sorted(trees, key=lambda t: t.key()))
        seen: Counter = Counter()

        def visit(node: PatternNode) -> bool:
            has = bool(node.labels)
            for lbl in node.labels:
                seen[lbl] += 1
            for c in node.children:
                has |= visit(c)
            if not has:
                raise ValueError("pattern is not tight: a vertex has no label below it")
            return has

        for t in trees:
            visit(t)
        expected = set(range(1, k + 1))
        if set(seen) != expected or any(n != 1 for n in seen.values()):
            raise ValueError(f"labels must be exactly 1..{k}, once each; got {dict(seen)}")
        return TightLabeledForest(trees, k)

    @property
    def height(self) -> int:
        def h(node: PatternNode) -> int:
            return 1 + max((h(c) for c in node.children), default=0)

        return max((h(t) for t in self.trees), default=0)

    def size(self) -> int:
        def s(node: PatternNode) -> int:
            return 1 + sum(s(c) for c in node.children)

        return sum(s(t) for t in self.trees)

    def single_tree(self) -> bool:
        return len(self.trees) == 1

    def label_path(self, label: int) -> Tuple[PatternNode, ...]:
        """Nodes from the root down to the node carrying the label."""
        for t in self.trees:
            path: List[PatternNode] = []

            def descend(node: PatternNode) -> bool:
                path.append(node)
                if label in node.labels:
                    return True
                for c in node.children:
                    if label in _subtree_labels(c):
                        return descend(c)
                path.pop()
                return False

            if descend(t):
                return tuple(path)
        raise ValueError(f"label {label} not in pattern")

    def restrict_labels(self, upto: int) -> "TightLabeledForest":
        """Closure of labels 1..upto: drop vertices with no such label below."""

        def rebuild(node: PatternNode) -> Optional[PatternNode]:
            kids = [k2 for k2 in (rebuild(c) for c in node.children) if k2 is not None]
            labels = tuple(l for l in node.labels if l <= upto)
            if not labels and not kids:
                return None
            return make_pattern_node(node.letter, labels, kids)

        trees = [t2 for t2 in (rebuild(t) for t in self.trees) if t2 is not None]
        return TightLabeledForest.of(trees, upto)


def _closure_vertices(forest: EliminationForest, vbar: Sequence[int]) -> List[int]:
    out: Set[int] = set()
    for v in vbar:
        out.add(v)
        out.update(forest.strict_ancestors(v))
    return sorted(out)


def shape_at(y: ColoredForest, vbar: Sequence[int], index: Optional[_Index] = None) -> TightLabeledForest:
    """Canonical shape of the ancestor closure of vbar, labels at its entries."""
    idx = index or _Index(y)
    forest = idx.forest
    for v in vbar:
        if v not in forest.parent:
            raise ValueError(f"vertex {v} not in forest")
    closure = set(_closure_vertices(forest, vbar))
    labels_at: Dict[int, List[int]] = {}
    for i, v in enumerate(vbar, start=1):
        labels_at.setdefault(v, []).append(i)

    def build(v: int) -> PatternNode:
        kids = [build(c) for c in idx.children[v] if c in closure]
        return make_pattern_node(idx.letter[v], labels_at.get(v, ()), kids)

    roots = [v for v in sorted(closure) if forest.parent[v] == v]
    return TightLabeledForest.of([build(r) for r in roots], len(vbar))


def typed_shape_key(codes: SubtreeTypeTable, vbar: Sequence[int]) -> tuple:
    """Canonical key of the closure with exact subtree codes as letters.

    Tuples with equal keys are related by a forest automorphism, so any
    formula value at them agrees.
    """
    idx = codes.index
    forest = idx.forest
    closure = set(_closure_vertices(forest, vbar))
    labels_at: Dict[int, List[int]] = {}
    for i, v in enumerate(vbar, start=1):
        labels_at.setdefault(v, []).append(i)

    def build(v: int) -> PatternNode:
        kids = [build(c) for c in idx.children[v] if c in closure]
        return make_pattern_node((codes.code[v],), labels_at.get(v, ()), kids)

    roots = [v for v in sorted(closure) if forest.parent[v] == v]
    trees = tuple(sorted((build(r) for r in roots), key=lambda t: t.key()))
    return tuple(t.key() for t in trees)


# ---------------------------------------------------------------------------
# eval_forest: prune to a bounded representative, then evaluate naively
# ---------------------------------------------------------------------------


def _kept_count(n: int, threshold: int, modulus: int) -> int:
    if n <= threshold:
        return n
    return threshold + ((n - threshold) % modulus)


def _prune(y: ColoredForest, table: SubtreeTypeTable, anchors: Sequence[int]) -> Tuple[ColoredForest, Dict[int, int]]:
    """Bounded-size forest satisfying the same formulas at the anchors."""
    idx = table.index
    forest = idx.forest
    anchored: Set[int] = set()
    for a in anchors:
        anchored.add(a)
        anchored.update(forest.strict_ancestors(a))

    vertex_marks: Dict[int, List[tuple]] = {v: [] for v in forest.vertices()}
    for name in y.signature.unary_relations:
        for v in y.marks[name]:
            vertex_marks[v].append(("m", name))
    for key, vs in sorted(y.edge_marks.items()):
        for v in vs:
            vertex_marks[v].append(("e", key))
    for key, vs in sorted(y.func_marks.items()):
        for v in vs:
            vertex_marks[v].append(("f", key))

    parent: Dict[int, int] = {}
    level: Dict[int, int] = {}
    marks: Dict[str, List[int]] = {name: [] for name in y.signature.unary_relations}
    edge_marks: Dict[Tuple[int, int], List[int]] = {}
    func_marks: Dict[Tuple[str, int, int, int], List[int]] = {}
    vmap: Dict[int, int] = {}
    counter = itertools.count()

    def emit(v: int, new_parent: Optional[int], lvl: int) -> None:
        nid = next(counter)
        parent[nid] = nid if new_parent is None else new_parent
        level[nid] = lvl
        if v in anchored:
            vmap[v] = nid
        for kind, key in vertex_marks[v]:
            if kind == "m":
                marks[key].append(nid)
            elif kind == "e":
                edge_marks.setdefault(key, []).append(nid)
            else:
                func_marks.setdefault(key, []).append(nid)
        emit_children(idx.children[v], nid, lvl + 1)

    def emit_children(kids: Sequence[int], new_parent: Optional[int], lvl: int) -> None:
        free_groups: Dict[int, List[int]] = {}
        for c in kids:
            if c in anchored:
                emit(c, new_parent, lvl)
            else:
                free_groups.setdefault(table.code[c], []).append(c)
        for code in sorted(free_groups):
            group = sorted(free_groups[code])
            keep = _kept_count(len(group), table.threshold, table.modulus)
            rep = group[0]
            for _ in range(keep):
                emit(rep, new_parent, lvl)

    emit_children(forest.roots(), None, 1)
    pruned = ColoredForest(
        EliminationForest(parent, level),
        y.signature,
        {k: tuple(vs) for k, vs in marks.items()},
        {k: tuple(vs) for k, vs in edge_marks.items()},
        {k: tuple(vs) for k, vs in func_marks.items()},
    )
    return pruned, vmap


def eval_forest(
    y: ColoredForest,
    phi: Formula,
    valuation: Optional[Dict[str, int]] = None,
    height_bound: Optional[int] = None,
) -> bool:
    """Evaluate a forest-vocabulary FOM formula; linear in the forest size.

    The forest is shrunk to a pruned representative whose child multiplicities
    are capped at quantifier depth + number of anchors + 1 (and reduced modulo
    the lcm of the formula's moduli beyond the cap), then evaluated naively.
    """
    if height_bound is not None and y.forest.height > height_bound:
        raise ValueError(f"forest height {y.forest.height} exceeds bound {height_bound}")
    nu = dict(valuation or {})
    verts = set(y.forest.vertices())
    for var, v in nu.items():
        if v not in verts:
            raise ValueError(f"valuation sends {var} to {v}, not a forest vertex")
    moduli = moduli_of(phi)
    big_b = math.lcm(*moduli) if moduli else 1
    threshold = quantifier_depth(phi) + len(nu) + 1
    table = SubtreeTypeTable(y, threshold=threshold, modulus=big_b)
    pruned, vmap = _prune(y, table, sorted(set(nu.values())))
    vocab_height = height_bound if height_bound is not None else (y.forest.height or None)
    fs = forest_structure(pruned, height=vocab_height)
    return eval_naive(fs, phi, {var: vmap[v] for var, v in nu.items()})


# ---------------------------------------------------------------------------
# pattern counting: annotations
# ---------------------------------------------------------------------------


@dataclass
class ResidueAnnotation:
    """Per-vertex embedding counts of a single-tree pattern, all modulo b.

    blue[v]: embeddings of the pattern rooted at v.  green[v]: embeddings of
    the pattern minus its root, rooted at v (single-branch patterns; zero
    otherwise).  b_index[r]: embeddings anywhere in r's tree.  total: the
    forest-wide count, kept as scalar metadata rather than marks.
    """

    modulus: int
    blue: Dict[int, int]
    green: Dict[int, int]
    b_index: Dict[int, int]
    total: int


def _embeddings_at(idx: _Index, v: int, node: PatternNode, memo: Dict[tuple, int]) -> int:
    """Injective structure- and letter-preserving embeddings, root at v."""
    key = (v, node)
    hit = memo.get(key)
    if hit is not None:
        return hit
    out = 0
    if idx.letter[v] == node.letter:
        if not node.children:
            out = 1
        else:
            kids = idx.children[v]
            pkids = node.children

            def assign(i: int, used: FrozenSet[int]) -> int:
                if i == len(pkids):
                    return 1
                total = 0
                for c in kids:
                    if c in used:
                        continue
                    sub = _embeddings_at(idx, c, pkids[i], memo)
                    if sub:
                        total += sub * assign(i + 1, used | {c})
                return total

            out = assign(0, frozenset())
    memo[key] = out
    return out


def annotate_counts(y: ColoredForest, f1: TightLabeledForest, b: int) -> ResidueAnnotation:
    """Blue/green/B-mark residues for one single-tree pattern."""
    if b < 1:
        raise ValueError("modulus must be positive")
    if not f1.single_tree():
        raise ValueError("annotation pattern must be a single tree")
    idx = _Index(y)
    root = f1.trees[0]
    memo: Dict[tuple, int] = {}
    blue = {v: _embeddings_at(idx, v, root, memo) % b for v in y.forest.vertices()}
    if len(root.children) == 1:
        sub = root.children[0]
        green = {v: _embeddings_at(idx, v, sub, memo) % b for v in y.forest.vertices()}
    else:
        green = {v: 0 for v in y.forest.vertices()}
    b_index: Dict[int, int] = {}
    total = 0
    for r in idx.roots():
        acc = 0
        stack = [r]
        while stack:
            v = stack.pop()
            acc += blue[v]
            stack.extend(idx.children[v])
        b_index[r] = acc % b
        total += acc
    return ResidueAnnotation(b, blue, green, b_index, total % b)


# ---------------------------------------------------------------------------
# pattern counting: the three-case census
# ---------------------------------------------------------------------------


def _letter_path_count(idx: _Index, v: int, seq: Sequence[tuple], skip: FrozenSet[int] = frozenset()) -> int:
    """Descending paths from v (exclusive) whose letters spell seq."""
    if not seq:
        return 1
    total = 0
    for c in idx.children[v]:
        if c in skip or idx.letter[c] != seq[0]:
            continue
        total += _letter_path_count(idx, c, seq[1:])
    return total


def count_instances_mod(y: ColoredForest, pattern: TightLabeledForest, vbar: Sequence[int], b: int) -> int:
    """|{w : closure(vbar, w) has this (k+1)-labeled shape}| mod b.

    Splits on where the last label sits: inside the closure of the first k
    labels (forced vertex, 0/1), on a branch below a closure vertex
    (blue-minus-green difference), or in an untouched tree (global count
    minus the touched trees' contributions).
    """
    if b < 1:
        raise ValueError("modulus must be positive")
    k = len(vbar)
    if pattern.k != k + 1:
        raise ValueError(f"pattern has {pattern.k} labels, expected {k + 1}")
    idx = _Index(y)
    forest = y.forest
    f2 = pattern.restrict_labels(k)
    if shape_at(y, vbar, idx) != f2:
        return 0
    closure = _closure_vertices(forest, vbar)

    path = pattern.label_path(k + 1)
    witness_node = path[-1]
    if _subtree_labels(witness_node) & set(range(1, k + 1)):
        # forced position: the witness is inside the closure itself
        CASE_COUNTER["B"] += 1
        hits = sum(1 for w in closure if shape_at(y, tuple(vbar) + (w,), idx) == pattern)
        return hits % b

    in_f2 = [bool(_subtree_labels(n) & set(range(1, k + 1))) for n in path]
    split = -1
    for i, flag in enumerate(in_f2[:-1]):
        if flag:
            split = i

    if split == -1:
        # untouched component: the witness tree shares nothing with vbar
        CASE_COUNTER["A"] += 1
        letters = tuple(n.letter for n in path)
        total = 0
        closure_roots = {v for v in closure if forest.parent[v] == v}
        for r in idx.roots():
            if idx.letter[r] != letters[0]:
                continue
            n_here = _letter_path_count(idx, r, letters[1:])
            total += n_here
            if r in closure_roots:
                total -= n_here
        return total % b

    # branch below a closure vertex: tightness forces the branch to be a path
    CASE_COUNTER["C"] += 1
    s_node = path[split]
    branch = path[split + 1 :]
    for node in branch[:-1]:
        assert len(node.children) == 1, "tight pattern branch must be a bare path"
    assert not branch[-1].children, "witness must be a leaf outside the closure"
    # locate the closure vertex matching s_node: it sits at depth split+1 on
    # the root path of any label below it (label-respecting isomorphisms fix
    # the closure pointwise, so the choice of label does not matter)
    label_below = min(_subtree_labels(s_node) & set(range(1, k + 1)))
    s_y = forest.ancestor_at_level(vbar[label_below - 1], split + 1)
    pinned = frozenset(c for c in idx.children[s_y] if c in set(closure))
    letters = tuple(n.letter for n in branch)
    total = _letter_path_count(idx, s_y, letters)
    for c in sorted(pinned):
        if idx.letter[c] == letters[0]:
            total -= _letter_path_count(idx, c, letters[1:])
    return total % b


# ---------------------------------------------------------------------------
# modulo-quantifier elimination on a forest
# ---------------------------------------------------------------------------


def _pi_term(var: str, steps: int) -> Term:
    return Term(var, (1,) * steps)


class ModForestCounter:
    """Counts witnesses of one modulo quantifier over a fixed forest.

    For the formula ∃^{c mod b} y ς(x̄, y): residue(ν) returns the witness
    count mod b at ν, and materialize(c) produces an expanded forest plus a
    quantifier-free formula over parent compositions and residue marks.

    Precomputes exact subtree codes and, for every realized descending
    code-path, the number of its occurrences below each vertex; acceptance
    of ς on a witness class is decided once per typed closure shape (tuples
    sharing a typed shape are automorphic, so one representative suffices).
    """

    def __init__(
        self,
        y: ColoredForest,
        sigma: Formula,
        b: int,
        yvar: Optional[str] = None,
        height: Optional[int] = None,
        accept: Optional[Callable[[Dict[str, int]], bool]] = None,
    ):
        """`accept`, when given, replaces the default acceptance test
        (evaluating `sigma` on the forest structure) with a callback on the
        same valuations.  The callback must be invariant under
        mark-preserving forest automorphisms — any evaluation against a
        structure the forest encodes qualifies, since decoding commutes with
        such automorphisms — because results are memoized by argument shape."""
        if b < 1:
            raise ValueError("modulus must be positive")
        self.y = y
        self.b = b
        fv = free_vars(sigma)
        if yvar is None:
            if not fv:
                raise ValueError("witness variable must be given for a closed formula")
            yvar = fv[-1]
        elif yvar not in fv:
            # a witness variable the formula ignores is fine (e.g. ς constant)
            pass
        self.yvar = yvar
        self.xvars: Tuple[str, ...] = tuple(v for v in fv if v != yvar)
        self.sigma = sigma
        self.index = _Index(y)
        self.codes = SubtreeTypeTable(y, index=self.index)
        self._fs = forest_structure(y, height=max(height or 0, y.forest.height) or None)
        self._accept_fn = accept
        self._accept_memo: Dict[tuple, bool] = {}
        self._build_path_tables()

    # -- tables -------------------------------------------------------------

    def _build_path_tables(self) -> None:
        forest = self.index.forest
        code = self.codes.code
        down: Dict[Tuple[int, Tuple[int, ...]], int] = {}
        n_table: Dict[Tuple[int, ...], int] = {}
        for w in forest.vertices():
            chain = [w] + list(forest.strict_ancestors(w))
            for d in range(1, len(chain)):
                q = tuple(code[chain[j]] for j in range(d - 1, -1, -1))
                key = (chain[d], q)
                down[key] = down.get(key, 0) + 1
            full = tuple(code[chain[j]] for j in range(len(chain) - 1, -1, -1))
            n_table[full] = n_table.get(full, 0) + 1
        self._down = down
        self._n_table = n_table
        paths_from: Dict[int, List[Tuple[int, ...]]] = {}
        for (v, q) in down:
            paths_from.setdefault(v, []).append(q)
        self._paths_from = {v: sorted(qs) for v, qs in paths_from.items()}

    def down(self, v: int, q: Tuple[int, ...]) -> int:
        if not q:
            return 1
        return self._down.get((v, q), 0)

    def root_count(self, r: int, qfull: Tuple[int, ...]) -> int:
        if self.codes.code[r] != qfull[0]:
            return 0
        return self.down(r, qfull[1:])

    # -- acceptance ---------------------------------------------------------

    def _accept(self, vbar: Tuple[int, ...], w: int) -> bool:
        key = typed_shape_key(self.codes, vbar + (w,))
        hit = self._accept_memo.get(key)
        if hit is None:
            nu = dict(zip(self.xvars, vbar))
            nu[self.yvar] = w
            if self._accept_fn is not None:
                hit = self._accept_fn(nu)
            else:
                hit = eval_naive(self._fs, self.sigma, nu)
            self._accept_memo[key] = hit
        return hit

    # -- witness search -----------------------------------------------------

    def _find_below(self, v: int, q: Tuple[int, ...], skip: FrozenSet[int] = frozenset()) -> Optional[int]:
        if not q:
            return v
        for c in self.index.children[v]:
            if c in skip or self.codes.code[c] != q[0]:
                continue
            got = self._find_below(c, q[1:])
            if got is not None:
                return got
        return None

    # -- the census ---------------------------------------------------------

    def _closure_data(self, vbar: Tuple[int, ...]):
        forest = self.index.forest
        closure = _closure_vertices(forest, vbar)
        cset = set(closure)
        pinned: Dict[int, List[int]] = {
            s: [c for c in self.index.children[s] if c in cset] for s in closure
        }
        roots = [v for v in closure if forest.parent[v] == v]
        return closure, pinned, roots

    def residue(self, valuation: Optional[Dict[str, int]] = None) -> int:
        nu = valuation or {}
        try:
            vbar = tuple(nu[x] for x in self.xvars)
        except KeyError as exc:
            raise ValueError(f"valuation missing variable {exc.args[0]!r}") from None
        return self._residue_at(vbar)[0]

    def _residue_at(self, vbar: Tuple[int, ...]) -> Tuple[int, list]:
        """Witness count mod b plus the class terms it was assembled from."""
        closure, pinned, closure_roots = self._closure_data(vbar)
        total = 0
        terms: list = []
        for w in closure:
            CASE_COUNTER["B"] += 1
            if self._accept(vbar, w):
                total += 1
                terms.append(("B", w))
        for s in closure:
            for q in self._paths_from.get(s, ()):
                cnt = self.down(s, q)
                for c in pinned[s]:
                    if self.codes.code[c] == q[0]:
                        cnt -= self.down(c, q[1:])
                if cnt % self.b == 0:
                    continue
                CASE_COUNTER["C"] += 1
                w = self._find_below(s, q, skip=frozenset(pinned[s]))
                assert w is not None, "positive census count must have a witness"
                if self._accept(vbar, w):
                    total += cnt
                    terms.append(("C", s, q, cnt))
        croots = set(closure_roots)
        for qfull in sorted(self._n_table):
            cnt = self._n_table[qfull] - sum(self.root_count(r, qfull) for r in closure_roots)
            if cnt % self.b == 0:
                continue
            CASE_COUNTER["A"] += 1
            w = None
            for r in self.index.roots():
                if r in croots or self.codes.code[r] != qfull[0]:
                    continue
                w = self._find_below(r, qfull[1:])
                if w is not None:
                    break
            assert w is not None, "positive untouched-tree count must have a witness"
            if self._accept(vbar, w):
                total += cnt
                terms.append(("A", qfull, cnt))
        return total % self.b, terms

    # -- materialization ----------------------------------------------------

    def materialize(self, c: int, mark_prefix: str = "Z") -> Tuple[ColoredForest, Formula]:
        """Expanded forest plus a quantifier-free formula testing residue c.

        The formula is a disjunction over realized closure shapes: a shape
        test (level marks, parent-composition equalities, subtree-code marks)
        conjoined with residue-mark reads at the contributing positions.
        """
        if not 0 <= c < self.b:
            raise ValueError(f"residue {c} out of range for modulus {self.b}")
        domain = self.y.forest.vertices()
        k = len(self.xvars)
        groups: Dict[tuple, Tuple[int, ...]] = {}
        for vbar in itertools.product(domain, repeat=k):
            key = typed_shape_key(self.codes, vbar)
            groups.setdefault(key, vbar)

        used_codes: Set[int] = set()
        used_paths: Dict[Tuple[str, Tuple[int, ...]], int] = {}

        def path_id(kind: str, q: Tuple[int, ...]) -> int:
            key = (kind, q)
            if key not in used_paths:
                used_paths[key] = len(used_paths)
            return used_paths[key]

        disjuncts: List[Formula] = []
        for key in sorted(groups):
            vbar = groups[key]
            total, terms = self._residue_at(vbar)
            if total != c:
                continue
            closure, pinned, closure_roots = self._closure_data(vbar)
            # terms of the position vocabulary: each closure vertex as a
            # parent composition of the first variable that reaches it
            forest = self.index.forest
            pos_term: Dict[int, Term] = {}
            for i, v in enumerate(vbar):
                lvl = forest.level[v]
                for steps in range(lvl):
                    u = v
                    for _ in range(steps):
                        u = forest.parent[u]
                    if u not in pos_term:
                        pos_term[u] = _pi_term(self.xvars[i], steps)
            conj: List[Formula] = []
            for i, v in enumerate(vbar):
                conj.append(MarkAtom(level_mark_name(forest.level[v]), Term(self.xvars[i])))
            for i in range(k):
                for j in range(i + 1, k):
                    vi, vj = vbar[i], vbar[j]
                    li, lj = forest.level[vi], forest.level[vj]
                    meet = self._meet_level(vi, vj)
                    if meet >= 1:
                        conj.append(
                            EqAtom(_pi_term(self.xvars[i], li - meet), _pi_term(self.xvars[j], lj - meet))
                        )
                    nxt = meet + 1
                    if nxt <= min(li, lj):
                        conj.append(
                            Not(EqAtom(_pi_term(self.xvars[i], li - nxt), _pi_term(self.xvars[j], lj - nxt)))
                        )
            for v in closure:
                used_codes.add(self.codes.code[v])
                conj.append(MarkAtom(f"{mark_prefix}Code{self.codes.code[v]}", pos_term[v]))
            # residue reads at the contributing positions (constant per shape)
            for term in terms:
                if term[0] == "C":
                    _, s, q, _cnt = term
                    qid = path_id("C", q)
                    r_blue = self.down(s, q) % self.b
                    conj.append(MarkAtom(f"{mark_prefix}Blue{qid}x{r_blue}", pos_term[s]))
                    for ch in pinned[s]:
                        r_green = (self.down(ch, q[1:]) if self.codes.code[ch] == q[0] else 0) % self.b
                        conj.append(MarkAtom(f"{mark_prefix}Green{qid}x{r_green}", pos_term[ch]))
                elif term[0] == "A":
                    _, qfull, _cnt = term
                    qid = path_id("A", qfull)
                    for r in closure_roots:
                        conj.append(
                            MarkAtom(f"{mark_prefix}Root{qid}x{self.root_count(r, qfull) % self.b}", pos_term[r])
                        )
            disjuncts.append(and_all(conj))

        zeta = or_all(disjuncts)
        y_star = self._expand_forest(used_codes, used_paths, mark_prefix)
        return y_star, zeta

    def _meet_level(self, u: int, v: int) -> int:
        forest = self.index.forest
        cu = [u] + list(forest.strict_ancestors(u))
        cv = set([v] + list(forest.strict_ancestors(v)))
        for x in cu:
            if x in cv:
                return forest.level[x]
        return 0

    def _expand_forest(
        self,
        used_codes: Set[int],
        used_paths: Dict[Tuple[str, Tuple[int, ...]], int],
        mark_prefix: str,
    ) -> ColoredForest:
        new_marks: Dict[str, List[int]] = {}
        for tid in sorted(used_codes):
            new_marks[f"{mark_prefix}Code{tid}"] = [
                v for v in self.y.forest.vertices() if self.codes.code[v] == tid
            ]
        for (kind, q), qid in sorted(used_paths.items(), key=lambda kv: kv[1]):
            for r in range(self.b):
                if kind == "C":
                    new_marks[f"{mark_prefix}Blue{qid}x{r}"] = [
                        v for v in self.y.forest.vertices() if self.down(v, q) % self.b == r
                    ]
                    new_marks[f"{mark_prefix}Green{qid}x{r}"] = [
                        v
                        for v in self.y.forest.vertices()
                        if ((self.down(v, q[1:]) if self.codes.code[v] == q[0] else 0) % self.b) == r
                    ]
                else:
                    new_marks[f"{mark_prefix}Root{qid}x{r}"] = [
                        v
                        for v in self.y.forest.vertices()
                        if ((self.down(v, q[1:]) if self.codes.code[v] == q[0] else 0) % self.b) == r
                    ]
        sig = self.y.signature.with_relations(sorted(new_marks))
        marks = dict(self.y.marks)
        marks.update({name: tuple(vs) for name, vs in new_marks.items()})
        return ColoredForest(self.y.forest, sig, marks, dict(self.y.edge_marks), dict(self.y.func_marks))


def eliminate_mod_on_forest(
    y: ColoredForest,
    sigma: Formula,
    c: int,
    b: int,
    yvar: Optional[str] = None,
    height_bound: Optional[int] = None,
    mark_prefix: str = "Z",
) -> Tuple[ColoredForest, Formula]:
    """Rewrite ∃^{c mod b} y ς(x̄,y) into marks plus a quantifier-free test.

    Returns (Y*, ζ): Y* is the forest expanded with subtree-code and residue
    marks, ζ a quantifier-free formula over parent compositions and those
    marks with Y ⊨ ∃^{c mod b} y ς(v̄,y) iff Y* ⊨ ζ(v̄) for every v̄ of Y.
    ζ's shape disjunction covers the shapes realized in Y, so the guarantee
    is relative to this forest.
    """
    if height_bound is not None and y.forest.height > height_bound:
        raise ValueError(f"forest height {y.forest.height} exceeds bound {height_bound}")
    counter = ModForestCounter(y, sigma, b, yvar=yvar)
    return counter.materialize(c, mark_prefix=mark_prefix)
