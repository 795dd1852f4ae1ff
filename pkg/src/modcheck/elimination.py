"""Modulo-counting quantifier elimination over sparse guided structures.

Eliminating one quantifier ``Emod[a,b] y . rho(xbar, y)`` proceeds in four
moves:

1.  **Color types.**  Close the composition tuples appearing in ``rho`` under
    suffixes (so every intermediate stop of a function chain is named), obtain
    a centered coloring of the Gaifman graph, and tag every vertex with its
    *color type*: the tuple of colors of all those compositions, computed on
    the unrestricted structure.  Color classes and types are materialized as
    fresh unary marks.

2.  **Pieces.**  For each realized combination of argument types and witness
    type, restrict the expanded structure to the union of the color classes
    those types mention.  The restriction of the centered coloring stays
    centered there, so the piece peels into an elimination forest of bounded
    height.

3.  **Forest counters.**  Encode each piece as a colored forest, pull the
    type-guarded body through the encoding, and attach a residue counter.
    Because the types of the arguments and the witness pin every function
    chain of the body inside the piece, the piece-local witness count equals
    the global count of witnesses of that type — the clamped functions of the
    restriction never fire on the terms that matter.

4.  **Output formula.**  The residual formula reads, per argument tuple, the
    witness-count residues of the realized witness types and tests whether
    their sum hits the target residue.  It is quantifier-free: each read is a
    piece-local lookup, with the forest parent tables kept as side data.

Nesting is handled innermost-first; an inner eliminated quantifier with at
most one free variable is materialized as a fresh unary mark, which keeps the
next matrix quantifier-free.  Plain exists/forall layers are not eliminated;
the evaluation entry points route them to the naive evaluator over the
rewritten core.
"""

from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .coloring import CenteredColoring, compute_p_centered, forest_from_centered
from .forest_codec import ColoredForest, encode_IY, pullback_IS
from .forest_eval import ModForestCounter, eliminate_mod_on_forest
from .logic import (
    And,
    BoolConst,
    EdgeAtom,
    EqAtom,
    Exists,
    Forall,
    Formula,
    MarkAtom,
    ModExists,
    Not,
    Or,
    Term,
    and_all,
    collect_term_tuples,
    count_naive,
    eval_naive,
    free_vars,
    walk,
)
from .structures import (
    GuidedStructure,
    expand_monadic,
    gaifman,
    restrict,
    validate_guided,
)

logger = logging.getLogger("modcheck.elimination")

ColorType = Tuple[int, ...]

_PLAIN_NODES = (And, Or, Not, BoolConst, EdgeAtom, EqAtom, MarkAtom)


class UnsupportedFragmentError(ValueError):
    """Raised when a formula leaves the supported modulo-prenex fragment."""

    def __init__(self, message: str, node: Optional[Formula] = None):
        super().__init__(message)
        self.node = node


def _plain_quantifier_free(phi: Formula) -> bool:
    """True when every node is a core Boolean/atomic node (no quantifiers,
    no structure-relative residue nodes)."""
    return all(isinstance(n, _PLAIN_NODES) for n in walk(phi))


# ---------------------------------------------------------------------------
# color types
# ---------------------------------------------------------------------------


def suffix_closure(tuples: Iterable[Tuple[int, ...]]) -> Tuple[Tuple[int, ...], ...]:
    """Close composition tuples under trailing subtuples; always contains ().

    Compositions are written outermost-first, so the trailing subtuples are
    exactly the intermediate stops when a chain is applied to a vertex.
    """
    out = {()}
    for alpha in tuples:
        alpha = tuple(alpha)
        for i in range(len(alpha)):
            out.add(alpha[i:])
    return tuple(sorted(out))


def apply_composition(m: GuidedStructure, alpha: Tuple[int, ...], v: int) -> int:
    """Apply a composition tuple (1-based function indices, outermost first)."""
    names = m.signature.unary_functions
    for idx in reversed(alpha):
        v = m.functions[names[idx - 1]][v]
    return v


def color_type_of(
    m: GuidedStructure,
    colors: Dict[int, int],
    compositions: Sequence[Tuple[int, ...]],
    v: int,
) -> ColorType:
    """The colors of all tracked compositions applied to ``v``, in order."""
    return tuple(colors[apply_composition(m, alpha, v)] for alpha in compositions)


def theta(
    t: ColorType,
    compositions: Sequence[Tuple[int, ...]],
    var: str,
    color_mark: Callable[[int], str],
) -> Formula:
    """Quantifier-free test "the color type of ``var`` equals ``t``".

    One color-mark atom per tracked composition; exact on the expanded
    structure (where the marks were computed before any restriction).
    """
    if len(t) != len(compositions):
        raise ValueError("color type length does not match the composition list")
    return and_all(
        [
            MarkAtom(color_mark(c), Term(var, tuple(alpha)))
            for alpha, c in zip(compositions, t)
        ]
    )


def rho_restrict(
    rho: Formula,
    tbar: Sequence[ColorType],
    tprime: ColorType,
    compositions: Sequence[Tuple[int, ...]],
    xvars: Sequence[str],
    yvar: str,
    color_mark: Callable[[int], str],
) -> Formula:
    """Guard a quantifier-free body by color-type tests on every variable."""
    if len(tbar) != len(xvars):
        raise ValueError("one argument type per argument variable is required")
    parts: List[Formula] = [
        theta(t, compositions, x, color_mark) for t, x in zip(tbar, xvars)
    ]
    parts.append(theta(tprime, compositions, yvar, color_mark))
    parts.append(rho)
    return and_all(parts)


def residue_distributions(
    a: int, b: int, realized: Sequence
) -> Iterator[Dict[object, int]]:
    """All assignments of residues to the realized keys summing to ``a`` mod ``b``.

    Lazily enumerated in lexicographic order; ``b ** (len(realized) - 1)``
    assignments when at least one key is realized, and the empty assignment
    alone when none are (empty sums hit 0 only).
    """
    if b < 1:
        raise ValueError("modulus must be at least 1")
    keys = list(realized)
    a %= b
    if not keys:
        if a == 0:
            yield {}
        return
    for head in itertools.product(range(b), repeat=len(keys) - 1):
        last = (a - sum(head)) % b
        yield dict(zip(keys, (*head, last)))


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


@dataclass
class Piece:
    """One restriction of the expanded structure, with its forest counter.

    ``parent`` is the elimination-forest parent table, kept as side data so
    the expanded structure stays a plain guided structure.
    """

    key: Tuple[Tuple[int, ...], int]
    name: str
    colors: Tuple[int, ...]
    domain: Tuple[int, ...]
    parent: Dict[int, int]
    height: int
    forest: ColoredForest
    sigma: Formula
    sigma_pulled: Formula
    counter: ModForestCounter
    modulus: int
    _eliminated: Dict[int, Tuple[ColoredForest, Formula]] = field(default_factory=dict)

    def eliminated(self, c: int) -> Tuple[ColoredForest, Formula]:
        """Forest-level residual formula for "the witness count leaves
        residue ``c``", with its residue marks; built on first use."""
        c %= self.modulus
        if c not in self._eliminated:
            self._eliminated[c] = eliminate_mod_on_forest(
                self.forest,
                self.sigma_pulled,
                c,
                self.modulus,
                yvar=self.counter.yvar,
                height_bound=self.height,
                mark_prefix=f"{self.name}r{c}_",
            )
        return self._eliminated[c]


# ---------------------------------------------------------------------------
# one quantifier
# ---------------------------------------------------------------------------


@dataclass
class EliminationConfig:
    coloring_backend: str = "heuristic"
    exact_threshold: int = 18
    mark_prefix: str = "Q"
    threads: int = 1  # cap on workers building pieces; 1 = fully sequential


class ZetaFormula(Formula):
    """Residual formula of one elimination: a structure-relative residue test.

    Quantifier-free; evaluation reads the witness-count residues of the
    realized witness types for the bound argument types and compares their
    sum with the target.  Carries explicit terms so free-variable discovery
    sees the argument variables.
    """

    def __init__(self, result: "EliminationResult"):
        self.result = result
        self.terms = tuple(Term(x) for x in result.xvars)

    def _custom_eval(self, m, valuation, recurse) -> bool:
        return self.result.eval(valuation)

    def __repr__(self) -> str:  # deterministic, cycle-free
        r = self.result
        return (
            f"ZetaFormula(args={list(r.xvars)!r}, target={r.a}, "
            f"modulus={r.b}, witness_types={len(r.types)})"
        )


@dataclass
class EliminationResult:
    """Expanded structure plus the residual formula for one eliminated
    modulo-counting quantifier.

    ``m_star`` carries the color-class and color-type marks.  Pieces (with
    their forest parent tables and residue counters) are created on demand,
    keyed by realized argument/witness types; ``last_touched`` records the
    vertices consulted by the most recent evaluation.
    """

    m: GuidedStructure
    m_star: GuidedStructure
    a: int
    b: int
    yvar: str
    xvars: Tuple[str, ...]
    rho: Formula
    compositions: Tuple[Tuple[int, ...], ...]
    p: int
    coloring: CenteredColoring
    types: Tuple[ColorType, ...]
    type_of: Dict[int, int]
    prefix: str
    config: EliminationConfig
    zeta: Formula = field(init=False)
    last_touched: Set[int] = field(default_factory=set)
    _classes: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    _pieces: Dict[Tuple[Tuple[int, ...], int], Piece] = field(default_factory=dict)
    _bases: Dict[Tuple[int, ...], Tuple[GuidedStructure, object, ColoredForest]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        self.zeta = ZetaFormula(self)

    # -- mark naming ------------------------------------------------------

    def color_mark(self, color: int) -> str:
        return f"{self.prefix}c{color}"

    def type_mark(self, type_index: int) -> str:
        return f"{self.prefix}t{type_index}"

    # -- pieces -----------------------------------------------------------

    def piece(self, tbar_idx: Sequence[int], t_idx: int) -> Piece:
        """Build (or fetch) the piece for argument types ``tbar_idx`` and
        witness type ``t_idx`` (indices into ``types``)."""
        key = (tuple(tbar_idx), int(t_idx))
        cached = self._pieces.get(key)
        if cached is not None:
            return cached
        for i in (*key[0], key[1]):
            if not 0 <= i < len(self.types):
                raise ValueError(f"unrealized type index {i}")
        if len(key[0]) != len(self.xvars):
            raise ValueError("one argument type per argument variable is required")

        used = sorted({c for i in (*key[0], key[1]) for c in self.types[i]})
        base = self._bases.get(tuple(used))
        if base is None:
            domain = sorted({v for c in used for v in self._classes.get(c, ())})
            piece_struct = restrict(self.m_star, domain)
            forest = forest_from_centered(piece_struct, self.coloring)
            encoded = encode_IY(piece_struct, forest)
            base = (piece_struct, forest, encoded)
            self._bases[tuple(used)] = base
        piece_struct, forest, encoded = base
        sigma = and_all(
            [
                MarkAtom(self.type_mark(i), Term(x))
                for i, x in zip(key[0], self.xvars)
            ]
            + [MarkAtom(self.type_mark(key[1]), Term(self.yvar)), self.rho]
        )
        pulled = pullback_IS(sigma, piece_struct.signature, forest.height)
        # Acceptance evaluates the quantifier-free guard on the piece itself:
        # extensionally equal to evaluating its pullback on the forest (the
        # encoding is faithful), and free of the pullback's term-flattening
        # quantifiers, so each memoized acceptance probe is a few atom reads.
        counter = ModForestCounter(
            encoded,
            pulled,
            self.b,
            yvar=self.yvar,
            height=forest.height,
            accept=lambda nu: eval_naive(piece_struct, sigma, nu),
        )
        name = "{}p{}w{}".format(
            self.prefix, "_".join(map(str, key[0])), key[1]
        )
        piece = Piece(
            key=key,
            name=name,
            colors=tuple(used),
            domain=tuple(piece_struct.domain),
            parent=dict(forest.parent),
            height=forest.height,
            forest=encoded,
            sigma=sigma,
            sigma_pulled=pulled,
            counter=counter,
            modulus=self.b,
        )
        self._pieces[key] = piece
        return piece

    def pieces_materialized(self) -> Tuple[Tuple[Tuple[int, ...], int], ...]:
        return tuple(sorted(self._pieces))

    # -- evaluation -------------------------------------------------------

    def _argument_types(self, valuation: Dict[str, int]) -> Tuple[int, ...]:
        vbar = []
        for x in self.xvars:
            if x not in valuation:
                raise ValueError(f"argument variable {x!r} is unbound")
            vbar.append(valuation[x])
        for v in vbar:
            if v not in self.type_of:
                raise ValueError(f"vertex {v} is outside the domain")
        return tuple(self.type_of[v] for v in vbar)

    def residue(self, tbar_idx: Sequence[int], t_idx: int, valuation: Dict[str, int]) -> int:
        """Witness-count residue of one piece at one argument tuple.

        The argument vertices must realize exactly the argument types of the
        piece — that is the regime in which the piece-local count equals the
        global count of witnesses of the piece's witness type.
        """
        tbar_idx = tuple(tbar_idx)
        actual = self._argument_types(valuation)
        if actual != tbar_idx:
            raise ValueError(
                f"argument types {actual} do not match the piece key {tbar_idx}"
            )
        piece = self.piece(tbar_idx, t_idx)
        self.last_touched |= set(piece.domain)
        nu = {x: valuation[x] for x in self.xvars}
        return piece.counter.residue(nu)

    def residue_vector(self, valuation: Dict[str, int]) -> Dict[int, int]:
        """Residues of every realized witness type at one argument tuple."""
        tbar = self._argument_types(valuation)
        self.last_touched = {valuation[x] for x in self.xvars}
        indices = range(len(self.types))
        missing = [t for t in indices if (tbar, t) not in self._pieces]
        if self.config.threads > 1 and len(missing) > 1:
            # Piece construction is independent per witness type; results do
            # not depend on completion order, so a pool only changes timing.
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                list(pool.map(lambda t: self.piece(tbar, t), missing))
        return {
            t_idx: self.residue(tbar, t_idx, valuation)
            for t_idx in indices
        }

    def total_residue(self, valuation: Dict[str, int]) -> int:
        """Residue of the full witness count at one argument tuple."""
        return sum(self.residue_vector(valuation).values()) % self.b

    def eval(self, valuation: Dict[str, int]) -> bool:
        """The residual formula's verdict at one argument tuple."""
        return self.total_residue(valuation) == self.a

    # -- serialization ----------------------------------------------------

    def serialize(self) -> str:
        """Canonical JSON identity of the elimination (cache state excluded)."""
        payload = {
            "kind": "modulo-elimination",
            "target": self.a,
            "modulus": self.b,
            "witness": self.yvar,
            "arguments": list(self.xvars),
            "body": repr(self.rho),
            "compositions": [list(t) for t in self.compositions],
            "colors_used": self.p,
            "coloring": sorted(self.coloring.colors.items()),
            "types": [list(t) for t in self.types],
            "type_of": sorted(self.type_of.items()),
            "marks": sorted(self.m_star.signature.unary_relations),
            "zeta": repr(self.zeta),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _fresh_prefix(sig, base: str) -> str:
    """A deterministic mark-name prefix no existing relation starts with."""
    candidates = itertools.chain([base], (f"{base}{i}" for i in itertools.count()))
    for prefix in candidates:
        if not any(r.startswith(prefix) for r in sig.unary_relations):
            return prefix
    raise AssertionError("unreachable")


def eliminate_one(
    m: GuidedStructure,
    a: int,
    b: int,
    rho: Formula,
    yvar: str,
    config: Optional[EliminationConfig] = None,
) -> EliminationResult:
    """Eliminate ``Emod[a,b] yvar . rho`` over a guided structure.

    ``rho`` must be quantifier-free over the structure's signature.  The
    result's ``eval`` agrees with the naive verdict at every argument tuple;
    its ``zeta`` is a quantifier-free structure-relative node usable inside
    larger formulas.
    """
    config = config or EliminationConfig()
    if b < 1:
        raise ValueError("modulus must be at least 1")
    a %= b
    if not _plain_quantifier_free(rho):
        raise UnsupportedFragmentError(
            "the body of an eliminated quantifier must be quantifier-free", rho
        )
    validate_guided(m)

    fv = free_vars(rho)
    xvars = tuple(v for v in fv if v != yvar)
    compositions = suffix_closure(collect_term_tuples(rho))
    n_funcs = len(m.signature.unary_functions)
    for alpha in compositions:
        if any(not 1 <= i <= n_funcs for i in alpha):
            raise ValueError(f"composition {alpha} names an unknown function")

    k = len(xvars)
    p = (k + 1) * len(compositions)
    coloring = compute_p_centered(
        gaifman(m),
        p + 1,
        backend=config.coloring_backend,
        exact_threshold=config.exact_threshold,
    )

    classes: Dict[int, List[int]] = {}
    for v in m.domain:
        classes.setdefault(coloring.colors[v], []).append(v)

    vertex_type = {
        v: color_type_of(m, coloring.colors, compositions, v) for v in m.domain
    }
    type_list: List[ColorType] = sorted(set(vertex_type.values()))
    type_index = {t: i for i, t in enumerate(type_list)}
    type_of = {v: type_index[t] for v, t in vertex_type.items()}

    prefix = _fresh_prefix(m.signature, config.mark_prefix)
    new_marks: Dict[str, Iterable[int]] = {
        f"{prefix}c{c}": vs for c, vs in classes.items()
    }
    for i in range(len(type_list)):
        new_marks[f"{prefix}t{i}"] = [v for v in m.domain if type_of[v] == i]
    m_star = expand_monadic(m, new_marks)

    result = EliminationResult(
        m=m,
        m_star=m_star,
        a=a,
        b=b,
        yvar=yvar,
        xvars=xvars,
        rho=rho,
        compositions=compositions,
        p=p,
        coloring=coloring,
        types=tuple(type_list),
        type_of=type_of,
        prefix=prefix,
        config=config,
    )
    result._classes = {c: tuple(vs) for c, vs in classes.items()}
    return result


# ---------------------------------------------------------------------------
# nesting
# ---------------------------------------------------------------------------


@dataclass
class StageReport:
    stage: int
    witness: str
    arity: int
    n_compositions: int
    p: int
    n_colors: int
    n_types: int
    materialized_mark: Optional[str]
    constant_folded: Optional[bool]


@dataclass
class RunReport:
    stages: List[StageReport] = field(default_factory=list)
    notices: List[str] = field(default_factory=list)


@dataclass
class PipelineResult:
    """Cumulative expansion and rewritten formula after nested eliminations."""

    m: GuidedStructure
    m_star: GuidedStructure
    phi: Formula
    zeta: Formula
    stages: Tuple[EliminationResult, ...]
    report: RunReport

    def eval(self, valuation: Optional[Dict[str, int]] = None) -> bool:
        return eval_naive(self.m_star, self.zeta, valuation)

    def serialize(self) -> str:
        payload = {
            "kind": "modulo-elimination-pipeline",
            "input": repr(self.phi),
            "output": repr(self.zeta),
            "marks": sorted(self.m_star.signature.unary_relations),
            "stages": [json.loads(s.serialize()) for s in self.stages],
            "notices": list(self.report.notices),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _rewrite(
    m: GuidedStructure,
    phi: Formula,
    config: EliminationConfig,
    strict: bool,
) -> PipelineResult:
    """Innermost-first elimination of modulo quantifiers.

    ``strict`` demands the modulo-prenex fragment (Boolean combinations and
    modulo quantifiers whose matrices are quantifier-free after inner
    eliminations) and raises on anything else; the lenient mode leaves
    offending layers in place for the naive evaluator and logs a notice.
    """
    working = m
    stages: List[EliminationResult] = []
    report = RunReport()
    stage_counter = itertools.count()

    def rec(node: Formula) -> Formula:
        nonlocal working
        if isinstance(node, (EdgeAtom, EqAtom, MarkAtom, BoolConst)):
            return node
        if isinstance(node, Not):
            return Not(rec(node.sub))
        if isinstance(node, And):
            return And(rec(node.left), rec(node.right))
        if isinstance(node, Or):
            return Or(rec(node.left), rec(node.right))
        if isinstance(node, (Exists, Forall)):
            kind = "exists" if isinstance(node, Exists) else "forall"
            if strict:
                raise UnsupportedFragmentError(
                    f"plain {kind} quantifier on {node.var!r} is outside the "
                    "modulo-prenex fragment",
                    node,
                )
            report.notices.append(
                f"plain {kind} quantifier on {node.var!r} left to the naive evaluator"
            )
            body = rec(node.body)
            return type(node)(node.var, body)
        if isinstance(node, ModExists):
            body = rec(node.body)
            if not _plain_quantifier_free(body):
                if strict:
                    raise UnsupportedFragmentError(
                        f"matrix of the modulo quantifier on {node.var!r} is not "
                        "quantifier-free after inner eliminations",
                        node,
                    )
                report.notices.append(
                    f"modulo quantifier on {node.var!r} left to the naive "
                    "evaluator (matrix not quantifier-free after inner eliminations)"
                )
                return ModExists(node.residue, node.modulus, node.var, body)
            stage = next(stage_counter)
            stage_config = EliminationConfig(
                coloring_backend=config.coloring_backend,
                exact_threshold=config.exact_threshold,
                mark_prefix=f"{config.mark_prefix}{stage}_",
            )
            res = eliminate_one(
                working, node.residue, node.modulus, body, node.var, stage_config
            )
            stages.append(res)
            working = res.m_star
            k = len(res.xvars)
            entry = StageReport(
                stage=stage,
                witness=node.var,
                arity=k,
                n_compositions=len(res.compositions),
                p=res.p,
                n_colors=len(res._classes),
                n_types=len(res.types),
                materialized_mark=None,
                constant_folded=None,
            )
            report.stages.append(entry)
            if k == 0:
                value = res.eval({})
                entry.constant_folded = value
                return BoolConst(value)
            if k == 1:
                mark = f"{res.prefix}m"
                xvar = res.xvars[0]
                hits = [v for v in working.domain if res.eval({xvar: v})]
                working = expand_monadic(working, {mark: hits})
                entry.materialized_mark = mark
                return MarkAtom(mark, Term(xvar))
            return res.zeta
        raise UnsupportedFragmentError(
            f"unsupported formula node {type(node).__name__}", node
        )

    zeta = rec(phi)
    return PipelineResult(
        m=m,
        m_star=working,
        phi=phi,
        zeta=zeta,
        stages=tuple(stages),
        report=report,
    )


def eliminate_all(
    m: GuidedStructure,
    phi: Formula,
    config: Optional[EliminationConfig] = None,
) -> PipelineResult:
    """Eliminate every modulo quantifier of a modulo-prenex formula.

    The fragment: Boolean combinations and modulo quantifiers whose matrices
    are quantifier-free once inner eliminations have been materialized.
    Anything else raises ``UnsupportedFragmentError`` naming the offending
    node.  A quantifier-free input is returned unchanged.
    """
    return _rewrite(m, phi, config or EliminationConfig(), strict=True)


# ---------------------------------------------------------------------------
# evaluation entry points
# ---------------------------------------------------------------------------


def eval_pipeline(
    m: GuidedStructure,
    phi: Formula,
    valuation: Optional[Dict[str, int]] = None,
    config: Optional[EliminationConfig] = None,
) -> bool:
    """Truth value of any supported formula, fast paths engaged where possible.

    Modulo quantifiers with quantifier-free matrices are eliminated; plain
    exists/forall layers (and modulo quantifiers over non-quantifier-free
    matrices) are evaluated naively over the rewritten core.
    """
    run = _rewrite(m, phi, config or EliminationConfig(), strict=False)
    for notice in run.report.notices:
        logger.info("eval_pipeline: %s", notice)
    return eval_naive(run.m_star, run.zeta, valuation)


def count_definable(
    m: GuidedStructure,
    phi: Formula,
    config: Optional[EliminationConfig] = None,
) -> int:
    """Number of vertices satisfying a one-free-variable formula.

    Fast path: a modulo-prenex formula is eliminated once and its residual
    formula evaluated per vertex.  Anything else falls back to the naive
    counter with a logged notice.
    """
    fv = free_vars(phi)
    if len(fv) == 1:
        try:
            run = eliminate_all(m, phi, config)
        except UnsupportedFragmentError as exc:
            logger.info(
                "count_definable: falling back to the naive counter (%s)", exc
            )
        else:
            var = fv[0]
            return sum(
                1 for v in m.domain if eval_naive(run.m_star, run.zeta, {var: v})
            )
    return count_naive(m, phi)
