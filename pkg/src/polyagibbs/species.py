"""Symbolic weighted species and exact enumeration of unlabelled objects.

A species is an expression tree over the constructors ATOM, EPSILON, SET,
SEQ, COMPOSE, DERIVE, UNION, PRODUCT, WEIGHTED and named recursion, plus
SIZED (one orbit per size with a prescribed rational weight — the escape
hatch for classes given only by their counting series).

Unlabelled objects are canonical nested tuples; two objects are isomorphic
iff their encodings are equal.  Enumeration is the test oracle of the whole
package: it is exhaustive, duplicate-free and weight-exact, but guarded to
small sizes.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

from .errors import (
    IllFoundedRecursion,
    SizeGuardExceeded,
    SpecError,
)

DEFAULT_SIZE_GUARD = 14


# -- weight models -------------------------------------------------------


@dataclass(frozen=True)
class UnitWeight:
    def factor(self, obj, size: int) -> Fraction:
        return Fraction(1)


@dataclass(frozen=True)
class AtomMultiplicative:
    """Weight c^{size}; the powered weighting nu^i is c^{i*size}."""

    c: Fraction

    def __post_init__(self):
        if self.c <= 0:
            raise SpecError("atom-multiplicative weight must be positive")

    def factor(self, obj, size: int) -> Fraction:
        return self.c**size


@dataclass(frozen=True)
class TableWeight:
    """Explicit per-orbit weights keyed by canonical form; zero outside the
    (finite) support."""

    table: Tuple[Tuple[object, Fraction], ...]

    @classmethod
    def from_dict(cls, d) -> "TableWeight":
        items = tuple(sorted((k, Fraction(v)) for k, v in d.items()))
        for _, v in items:
            if v < 0:
                raise SpecError("table weights must be >= 0")
        return cls(items)

    def factor(self, obj, size: int) -> Fraction:
        for k, v in self.table:
            if k == obj:
                return v
        return Fraction(0)


# -- species nodes -------------------------------------------------------


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Atom(Node):
    pass


@dataclass(frozen=True)
class Epsilon(Node):
    pass


@dataclass(frozen=True)
class Zero(Node):
    """The empty species (no objects); arises from derivatives."""


@dataclass(frozen=True)
class SetOf(Node):
    inner: Node


@dataclass(frozen=True)
class SeqOf(Node):
    inner: Node


@dataclass(frozen=True)
class Compose(Node):
    """Composite species with outer structure 'SET' or 'SEQ'."""

    outer: str
    inner: Node

    def __post_init__(self):
        if self.outer not in ("SET", "SEQ"):
            raise SpecError(f"unsupported outer species {self.outer!r}")


@dataclass(frozen=True)
class Derive(Node):
    inner: Node


@dataclass(frozen=True)
class Union(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Product(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Ref(Node):
    name: str


@dataclass(frozen=True)
class Weighted(Node):
    inner: Node
    model: object


@dataclass(frozen=True)
class Sized(Node):
    """One orbit per size n >= 1 with weight coeffs[n]."""

    coeffs: Tuple[Fraction, ...]

    def __post_init__(self):
        if self.coeffs and self.coeffs[0] != 0:
            raise SpecError("SIZED species may not have size-0 objects")


@dataclass(frozen=True)
class SpeciesSpec:
    root: Node
    defs: Tuple[Tuple[str, Node], ...] = ()

    def resolve(self, name: str) -> Node:
        for n, node in self.defs:
            if n == name:
                return node
        raise SpecError(f"undefined species name {name!r}")

    def with_root(self, root: Node) -> "SpeciesSpec":
        return SpeciesSpec(root, self.defs)


def spec(root: Node, defs: Dict[str, Node] | None = None) -> SpeciesSpec:
    return SpeciesSpec(root, tuple(sorted((defs or {}).items())))


ATOM = Atom()
EPSILON = Epsilon()


def polya_trees() -> SpeciesSpec:
    """Rooted unlabelled trees, T = ATOM * SET(T)."""
    return spec(Ref("T"), {"T": Product(ATOM, SetOf(Ref("T")))})


def forests() -> SpeciesSpec:
    """Multisets of rooted unlabelled trees."""
    t = polya_trees()
    return SpeciesSpec(Compose("SET", t.root), t.defs)


def sized_species(coeffs) -> SpeciesSpec:
    return spec(Sized(tuple(Fraction(c) for c in coeffs)))


# -- canonical objects ---------------------------------------------------

EPS_OBJ = ("eps",)
ATOM_OBJ = ("atom",)
STAR_OBJ = ("star",)


def canonicalize(obj):
    """Deterministic canonical form: recursively canonical children, with
    multiset children sorted.  Idempotent and isomorphism-invariant."""
    head = obj[0]
    if head in ("eps", "atom", "star", "blob"):
        return obj
    if head == "set":
        return ("set", tuple(sorted(canonicalize(c) for c in obj[1])))
    if head == "seq":
        return ("seq", tuple(canonicalize(c) for c in obj[1]))
    if head == "prod":
        return ("prod", canonicalize(obj[1]), canonicalize(obj[2]))
    if head == "tag":
        return ("tag", obj[1], canonicalize(obj[2]))
    raise ValueError(f"unknown object head {head!r}")


def object_size(obj) -> int:
    """Number of (non-star) atoms."""
    head = obj[0]
    if head == "atom":
        return 1
    if head == "blob":
        return obj[1]
    if head in ("eps", "star"):
        return 0
    if head in ("set", "seq"):
        return sum(object_size(c) for c in obj[1])
    if head == "prod":
        return object_size(obj[1]) + object_size(obj[2])
    if head == "tag":
        return object_size(obj[2])
    raise ValueError(f"unknown object head {head!r}")


def object_to_string(obj) -> str:
    """Compact nested-bracket serialization (stable, for transcripts and
    golden tests)."""
    head = obj[0]
    if head == "atom":
        return "o"
    if head == "eps":
        return "e"
    if head == "star":
        return "*"
    if head == "blob":
        return f"#{obj[1]}"
    if head == "set":
        return "{" + ",".join(object_to_string(c) for c in obj[1]) + "}"
    if head == "seq":
        return "[" + ",".join(object_to_string(c) for c in obj[1]) + "]"
    if head == "prod":
        return "(" + object_to_string(obj[1]) + "|" + object_to_string(obj[2]) + ")"
    if head == "tag":
        return f"<{obj[1]}:{object_to_string(obj[2])}>"
    raise ValueError(f"unknown object head {head!r}")


def mark_one_atom(obj) -> List[tuple]:
    """All ways of replacing a single atom by the *-placeholder (before
    canonicalization)."""
    head = obj[0]
    if head == "atom":
        return [STAR_OBJ]
    if head in ("eps", "star"):
        return []
    if head == "blob":
        raise SpecError("cannot derive a SIZED species (no atom structure)")
    out = []
    if head in ("set", "seq"):
        children = obj[1]
        for i, c in enumerate(children):
            for m in mark_one_atom(c):
                out.append((head, children[:i] + (m,) + children[i + 1 :]))
    elif head == "prod":
        for m in mark_one_atom(obj[1]):
            out.append(("prod", m, obj[2]))
        for m in mark_one_atom(obj[2]):
            out.append(("prod", obj[1], m))
    elif head == "tag":
        for m in mark_one_atom(obj[2]):
            out.append(("tag", obj[1], m))
    return out


# -- enumeration ---------------------------------------------------------


class Enumerator:
    """Exhaustive enumeration of unlabelled objects with exact weights.

    ``enumerate(node, n, power)`` returns the duplicate-free list of
    (canonical object, nu^power weight) pairs of size n, sorted by
    encoding.
    """

    def __init__(self, spec: SpeciesSpec, guard: int = DEFAULT_SIZE_GUARD):
        self.spec = spec
        self.guard = guard
        self._memo: Dict[tuple, list] = {}
        self._busy: set = set()

    def enumerate(self, node: Node, n: int, power: int = 1) -> list:
        if n > self.guard:
            raise SizeGuardExceeded(
                f"size {n} exceeds enumeration guard {self.guard}"
            )
        key = (node, n, power)
        if key in self._memo:
            return self._memo[key]
        if key in self._busy:
            raise IllFoundedRecursion(
                "recursive definition does not increase size"
            )
        self._busy.add(key)
        try:
            result = self._compute(node, n, power)
        finally:
            self._busy.discard(key)
        result.sort(key=lambda p: p[0])
        self._memo[key] = result
        return result

    def enumerate_root(self, n: int, power: int = 1) -> list:
        return self.enumerate(self.spec.root, n, power)

    # internal

    def _compute(self, node: Node, n: int, power: int) -> list:
        if isinstance(node, Atom):
            return [(ATOM_OBJ, Fraction(1))] if n == 1 else []
        if isinstance(node, Epsilon):
            return [(EPS_OBJ, Fraction(1))] if n == 0 else []
        if isinstance(node, Zero):
            return []
        if isinstance(node, Sized):
            if 1 <= n < len(node.coeffs) and node.coeffs[n]:
                return [(("blob", n), node.coeffs[n] ** power)]
            return []
        if isinstance(node, Ref):
            return list(self.enumerate(self.spec.resolve(node.name), n, power))
        if isinstance(node, Union):
            out = [
                (("tag", 0, o), w) for o, w in self.enumerate(node.left, n, power)
            ]
            out += [
                (("tag", 1, o), w) for o, w in self.enumerate(node.right, n, power)
            ]
            return out
        if isinstance(node, Product):
            out = []
            for k in range(n + 1):
                left = self.enumerate(node.left, k, power)
                if not left:
                    continue
                right = self.enumerate(node.right, n - k, power)
                for a, wa in left:
                    for b, wb in right:
                        out.append((("prod", a, b), wa * wb))
            return out
        if isinstance(node, (SetOf, Compose)) and (
            isinstance(node, SetOf) or node.outer == "SET"
        ):
            inner = node.inner
            self._check_no_empty(inner, power)
            return [
                (("set", ms), w) for ms, w in self._multisets(inner, n, power)
            ]
        if isinstance(node, (SeqOf, Compose)):
            inner = node.inner
            self._check_no_empty(inner, power)
            return [
                (("seq", sq), w) for sq, w in self._sequences(inner, n, power)
            ]
        if isinstance(node, Weighted):
            out = []
            for o, w in self.enumerate(node.inner, n, power):
                f = node.model.factor(o, n)
                if f:
                    out.append((o, w * f**power))
            return out
        if isinstance(node, Derive):
            seen = {}
            for o, w in self.enumerate(node.inner, n + 1, power):
                for marked in mark_one_atom(o):
                    c = canonicalize(marked)
                    seen[c] = w
            return list(seen.items())
        raise SpecError(f"cannot enumerate node {type(node).__name__}")

    def _check_no_empty(self, inner: Node, power: int):
        if self.enumerate(inner, 0, power):
            raise SpecError(
                "inner species of SET/SEQ/COMPOSE must have no size-0 objects"
            )

    def _multisets(self, inner: Node, n: int, power: int):
        """(sorted tuple of children, weight) for all multisets of total
        size n, grouped by the size profile."""
        by_size = {
            s: self.enumerate(inner, s, power) for s in range(1, n + 1)
        }
        sizes = [s for s in range(1, n + 1) if by_size[s]]
        out = []

        def rec(remaining: int, size_idx: int, chosen: tuple, weight: Fraction):
            if remaining == 0:
                out.append((tuple(sorted(chosen)), weight))
                return
            if size_idx >= len(sizes):
                return
            s = sizes[size_idx]
            max_k = remaining // s
            orbits = by_size[s]
            for k in range(max_k + 1):
                if k == 0:
                    rec(remaining, size_idx + 1, chosen, weight)
                else:
                    for combo in itertools.combinations_with_replacement(
                        orbits, k
                    ):
                        w = weight
                        objs = []
                        for o, ow in combo:
                            w *= ow
                            objs.append(o)
                        rec(
                            remaining - k * s,
                            size_idx + 1,
                            chosen + tuple(objs),
                            w,
                        )

        rec(n, 0, (), Fraction(1))
        return out

    def _sequences(self, inner: Node, n: int, power: int):
        if n == 0:
            return [((), Fraction(1))]
        out = []
        for s in range(1, n + 1):
            heads = self.enumerate(inner, s, power)
            if not heads:
                continue
            tails = self._sequences(inner, n - s, power)
            for o, ow in heads:
                for t, tw in tails:
                    out.append(((o,) + t, ow * tw))
        return out


def unrank_by_weight(
    species: SpeciesSpec,
    n: int,
    u: Fraction,
    guard: int = DEFAULT_SIZE_GUARD,
    enumerator: Enumerator | None = None,
):
    """Orbit at cumulative-weight position u * (total size-n weight).

    With u uniform on [0,1) the induced law is weight-proportional.
    """
    from .errors import EmptySize

    if not (0 <= u < 1):
        raise ValueError("u must lie in [0, 1)")
    enum = enumerator or Enumerator(species, guard)
    orbits = enum.enumerate_root(n)
    total = sum(w for _, w in orbits)
    if total == 0:
        raise EmptySize(f"no objects of size {n}")
    target = Fraction(u) * total
    acc = Fraction(0)
    for o, w in orbits:
        acc += w
        if target < acc:
            return o
    return orbits[-1][0]


# -- derivative rewriting (for generating series) ------------------------


def derive_node(node: Node, spec_defs: Dict[str, Node]) -> Node:
    """Structural rewrite of the derived species, valid at the level of
    cycle index sums (product rule, SET' = SET * inner', SEQ' = SEQ *
    inner' * SEQ).  Recursive names get a companion derived definition in
    ``spec_defs``."""
    if isinstance(node, (Atom,)):
        return EPSILON
    if isinstance(node, (Epsilon, Zero, Sized)):
        if isinstance(node, Sized):
            raise SpecError("cannot derive a SIZED species")
        return Zero()
    if isinstance(node, Union):
        return Union(derive_node(node.left, spec_defs), derive_node(node.right, spec_defs))
    if isinstance(node, Product):
        return Union(
            Product(derive_node(node.left, spec_defs), node.right),
            Product(node.left, derive_node(node.right, spec_defs)),
        )
    if isinstance(node, SetOf):
        return Product(node, derive_node(node.inner, spec_defs))
    if isinstance(node, SeqOf):
        return Product(
            node, Product(derive_node(node.inner, spec_defs), node)
        )
    if isinstance(node, Compose):
        base = SetOf(node.inner) if node.outer == "SET" else SeqOf(node.inner)
        return derive_node(base, spec_defs)
    if isinstance(node, Weighted):
        # weights are preserved by derivation only for UNIT weights
        if isinstance(node.model, UnitWeight):
            return Weighted(derive_node(node.inner, spec_defs), node.model)
        raise SpecError("derivative through non-unit weights is unsupported")
    if isinstance(node, Derive):
        return Derive(derive_node(node.inner, spec_defs))
    if isinstance(node, Ref):
        dname = node.name + "'"
        if dname not in spec_defs:
            spec_defs[dname] = Zero()  # placeholder to terminate recursion
            spec_defs[dname] = derive_node(spec_defs[node.name], spec_defs)
        return Ref(dname)
    raise SpecError(f"cannot derive node {type(node).__name__}")


def derived_spec(s: SpeciesSpec) -> SpeciesSpec:
    defs = dict(s.defs)
    root = derive_node(s.root, defs)
    return spec(root, defs)


# -- spec language: text DSL and JSON ------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<num>\d+(?:/\d+)?)"
    r"|(?P<op>:=|[();,*+])|(?P<ws>\s+|#[^\n]*)|(?P<bad>.)"
)

_KEYWORDS = {"ATOM", "EPSILON", "SET", "SEQ", "COMPOSE", "DERIVE", "WEIGHT"}


class _Tokens:
    def __init__(self, text: str):
        self.items = []
        for m in _TOKEN_RE.finditer(text):
            if m.lastgroup == "ws":
                continue
            line = text.count("\n", 0, m.start()) + 1
            col = m.start() - text.rfind("\n", 0, m.start())
            if m.lastgroup == "bad":
                raise SpecError(f"unexpected character {m.group()!r}", line, col)
            self.items.append((m.group(), line, col))
        self.i = 0

    def peek(self):
        if self.i < len(self.items):
            return self.items[self.i]
        if self.items:
            _, line, col = self.items[-1]
            return (None, line, col + 1)
        return (None, 1, 1)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        tok, line, col = self.next()
        if tok != value:
            raise SpecError(f"expected {value!r}, got {tok!r}", line, col)
        return tok


def parse_dsl(text: str) -> SpeciesSpec:
    """Parse the statement language, e.g.::

        T := ATOM * SET(T);
        MODEL := COMPOSE(SET, T);

    The last definition is the root of the returned spec.
    """
    toks = _Tokens(text)
    defs: Dict[str, Node] = {}
    last_name = None

    def parse_expr() -> Node:
        node = parse_term()
        while toks.peek()[0] == "+":
            toks.next()
            node = Union(node, parse_term())
        return node

    def parse_term() -> Node:
        node = parse_factor()
        while toks.peek()[0] == "*":
            toks.next()
            node = Product(node, parse_factor())
        return node

    def parse_factor() -> Node:
        tok, line, col = toks.next()
        if tok == "ATOM":
            return ATOM
        if tok == "EPSILON":
            return EPSILON
        if tok == "SET":
            toks.expect("(")
            inner = parse_expr()
            toks.expect(")")
            return SetOf(inner)
        if tok == "SEQ":
            toks.expect("(")
            inner = parse_expr()
            toks.expect(")")
            return SeqOf(inner)
        if tok == "COMPOSE":
            toks.expect("(")
            outer, oline, ocol = toks.next()
            if outer not in ("SET", "SEQ"):
                raise SpecError(
                    f"outer species must be SET or SEQ, got {outer!r}",
                    oline,
                    ocol,
                )
            toks.expect(",")
            inner = parse_expr()
            toks.expect(")")
            return Compose(outer, inner)
        if tok == "DERIVE":
            toks.expect("(")
            inner = parse_expr()
            toks.expect(")")
            return Derive(inner)
        if tok == "WEIGHT":
            toks.expect("(")
            inner = parse_expr()
            toks.expect(",")
            num, nline, ncol = toks.next()
            try:
                c = Fraction(num)
            except (ValueError, TypeError):
                raise SpecError(f"expected a rational, got {num!r}", nline, ncol)
            toks.expect(")")
            return Weighted(inner, AtomMultiplicative(c))
        if tok == "(":
            inner = parse_expr()
            toks.expect(")")
            return inner
        if tok is not None and tok not in _KEYWORDS and tok[0].isalpha():
            return Ref(tok)
        raise SpecError(f"unexpected token {tok!r}", line, col)

    while toks.peek()[0] is not None:
        name, line, col = toks.next()
        if name in _KEYWORDS or not name[0].isalpha():
            raise SpecError(f"expected a definition name, got {name!r}", line, col)
        toks.expect(":=")
        defs[name] = parse_expr()
        toks.expect(";")
        last_name = name
    if last_name is None:
        raise SpecError("empty specification", 1, 1)
    return spec(Ref(last_name), defs)


def _node_to_json(node: Node):
    if isinstance(node, Atom):
        return {"op": "ATOM"}
    if isinstance(node, Epsilon):
        return {"op": "EPSILON"}
    if isinstance(node, Zero):
        return {"op": "ZERO"}
    if isinstance(node, SetOf):
        return {"op": "SET", "inner": _node_to_json(node.inner)}
    if isinstance(node, SeqOf):
        return {"op": "SEQ", "inner": _node_to_json(node.inner)}
    if isinstance(node, Compose):
        return {
            "op": "COMPOSE",
            "outer": node.outer,
            "inner": _node_to_json(node.inner),
        }
    if isinstance(node, Derive):
        return {"op": "DERIVE", "inner": _node_to_json(node.inner)}
    if isinstance(node, Union):
        return {
            "op": "UNION",
            "left": _node_to_json(node.left),
            "right": _node_to_json(node.right),
        }
    if isinstance(node, Product):
        return {
            "op": "PRODUCT",
            "left": _node_to_json(node.left),
            "right": _node_to_json(node.right),
        }
    if isinstance(node, Ref):
        return {"op": "REF", "name": node.name}
    if isinstance(node, Weighted):
        if isinstance(node.model, AtomMultiplicative):
            return {
                "op": "WEIGHT",
                "c": str(node.model.c),
                "inner": _node_to_json(node.inner),
            }
        raise SpecError("only atom-multiplicative weights serialize to JSON")
    if isinstance(node, Sized):
        return {"op": "SIZED", "coeffs": [str(c) for c in node.coeffs]}
    raise SpecError(f"cannot serialize node {type(node).__name__}")


def _node_from_json(data) -> Node:
    op = data.get("op")
    if op == "ATOM":
        return ATOM
    if op == "EPSILON":
        return EPSILON
    if op == "ZERO":
        return Zero()
    if op == "SET":
        return SetOf(_node_from_json(data["inner"]))
    if op == "SEQ":
        return SeqOf(_node_from_json(data["inner"]))
    if op == "COMPOSE":
        return Compose(data["outer"], _node_from_json(data["inner"]))
    if op == "DERIVE":
        return Derive(_node_from_json(data["inner"]))
    if op == "UNION":
        return Union(_node_from_json(data["left"]), _node_from_json(data["right"]))
    if op == "PRODUCT":
        return Product(
            _node_from_json(data["left"]), _node_from_json(data["right"])
        )
    if op == "REF":
        return Ref(data["name"])
    if op == "WEIGHT":
        return Weighted(
            _node_from_json(data["inner"]), AtomMultiplicative(Fraction(data["c"]))
        )
    if op == "SIZED":
        return Sized(tuple(Fraction(c) for c in data["coeffs"]))
    raise SpecError(f"unknown op {op!r} in JSON spec")


def spec_to_json(s: SpeciesSpec) -> str:
    return json.dumps(
        {
            "defs": {name: _node_to_json(node) for name, node in s.defs},
            "root": _node_to_json(s.root),
        }
    )


def spec_from_json(text: str) -> SpeciesSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"invalid JSON spec: {e.msg}", e.lineno, e.colno)
    defs = {name: _node_from_json(nd) for name, nd in data.get("defs", {}).items()}
    return spec(_node_from_json(data["root"]), defs)


def parse_spec(text: str) -> SpeciesSpec:
    """Parse either the text DSL or the JSON form (detected by a leading
    '{')."""
    if text.lstrip().startswith("{"):
        return spec_from_json(text)
    return parse_dsl(text)
