"""High-level symmetric nets: typed places, transitions with modes, guards,
arc expressions, high-level firing, and expansion to P/T nets.

The expression fragment is deliberately small: an arc expression is a
multiset of tuples whose components are transition variables or `all(C)`
broadcast terms; guards are boolean combinations of `x == y`, `x != y` and
`x in C_{i,q}`.  Every construct treats the colors of a class equally, so
the symmetry group of the universe is automatically a symmetry group of
the net.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

from .colors import ColorUniverse, Symmetry, apply_to_tuple


class NetError(ValueError):
    pass


class IllTypedArc(NetError):
    pass


class UnboundVariable(NetError):
    pass


class NonSymmetricInitialMarking(NetError):
    pass


class GuardFalse(NetError):
    pass


class NotEnabled(NetError):
    pass


# ---------------------------------------------------------------------------
# terms, expressions, guards
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class All:
    """Broadcast term: one occurrence of every color of a class."""
    class_name: str


Term = Union[Var, All]

# an arc expression is a sum of tuples of terms
ArcExpression = tuple[tuple[Term, ...], ...]


@dataclass(frozen=True)
class Guard:
    """Conjunction-free mini AST; `kind` is one of
    'true', 'eq', 'neq', 'in', 'and', 'or', 'not'."""
    kind: str
    args: tuple = ()

    def variables(self) -> set[str]:
        if self.kind in ("eq", "neq"):
            return {self.args[0], self.args[1]}
        if self.kind == "in":
            return {self.args[0]}
        if self.kind in ("and", "or"):
            return self.args[0].variables() | self.args[1].variables()
        if self.kind == "not":
            return self.args[0].variables()
        return set()


TRUE = Guard("true")


def g_eq(x: str, y: str) -> Guard:
    return Guard("eq", (x, y))


def g_neq(x: str, y: str) -> Guard:
    return Guard("neq", (x, y))


def g_in(x: str, subclass_index: int) -> Guard:
    return Guard("in", (x, subclass_index))


def g_and(a: Guard, b: Guard) -> Guard:
    return Guard("and", (a, b))


def g_or(a: Guard, b: Guard) -> Guard:
    return Guard("or", (a, b))


def g_not(a: Guard) -> Guard:
    return Guard("not", (a,))


# ---------------------------------------------------------------------------
# net structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HLPlace:
    name: str
    signature: tuple[int, ...]  # class index per tuple component


@dataclass(frozen=True)
class HLTransition:
    name: str
    variables: tuple[tuple[str, int], ...]  # (var name, class index)
    guard: Guard = TRUE

    def var_class(self, name: str) -> int:
        for v, ci in self.variables:
            if v == name:
                return ci
        raise UnboundVariable(name)


@dataclass(frozen=True)
class HLNet:
    universe: ColorUniverse
    places: tuple[HLPlace, ...]
    transitions: tuple[HLTransition, ...]
    # arcs keyed by (place name, transition name) resp. (transition, place)
    arcs_in: dict[tuple[str, str], ArcExpression] = field(default_factory=dict)
    arcs_out: dict[tuple[str, str], ArcExpression] = field(default_factory=dict)

    def place(self, name: str) -> HLPlace:
        for p in self.places:
            if p.name == name:
                return p
        raise KeyError(name)

    def transition(self, name: str) -> HLTransition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(name)


# a high-level marking: per place name, a Counter of color-index tuples
HLMarking = dict[str, Counter]


def marking(**tokens: Sequence[tuple[int, ...]]) -> HLMarking:
    return {p: Counter(ts) for p, ts in tokens.items()}


# ---------------------------------------------------------------------------
# modes and expression evaluation
# ---------------------------------------------------------------------------

def modes(net: HLNet, t: HLTransition) -> Iterator[tuple[int, ...]]:
    """All modes of t in fixed slot-major, color-index-minor order."""
    ranges = [range(net.universe.classes[ci].size) for _, ci in t.variables]
    return itertools.product(*ranges)


def guard_holds(net: HLNet, t: HLTransition, g: Guard,
                mode: Sequence[int]) -> bool:
    def value(var: str) -> tuple[int, int]:
        for i, (v, ci) in enumerate(t.variables):
            if v == var:
                return ci, mode[i]
        raise UnboundVariable(var)

    if g.kind == "true":
        return True
    if g.kind == "eq":
        (c1, v1), (c2, v2) = value(g.args[0]), value(g.args[1])
        if c1 != c2:
            raise IllTypedArc(
                f"guard compares variables of different classes in {t.name}")
        return v1 == v2
    if g.kind == "neq":
        return not guard_holds(net, t, g_eq(*g.args), mode)
    if g.kind == "in":
        ci, v = value(g.args[0])
        return net.universe.classes[ci].subclass_of(v) == g.args[1]
    if g.kind == "and":
        return (guard_holds(net, t, g.args[0], mode)
                and guard_holds(net, t, g.args[1], mode))
    if g.kind == "or":
        return (guard_holds(net, t, g.args[0], mode)
                or guard_holds(net, t, g.args[1], mode))
    if g.kind == "not":
        return not guard_holds(net, t, g.args[0], mode)
    raise NetError(f"unknown guard kind {g.kind!r}")


def eval_expression(net: HLNet, t: HLTransition, expr: ArcExpression,
                    mode: Sequence[int]) -> Counter:
    """Multiset of color tuples an arc contributes under a mode."""
    var_value = {v: mode[i] for i, (v, _) in enumerate(t.variables)}
    result: Counter = Counter()
    for tup in expr:
        # each component is either fixed by the mode or ranges over a class
        component_choices = []
        for term in tup:
            if isinstance(term, Var):
                if term.name not in var_value:
                    raise UnboundVariable(term.name)
                component_choices.append((var_value[term.name],))
            else:
                ci = net.universe.class_index(term.class_name)
                component_choices.append(
                    tuple(range(net.universe.classes[ci].size)))
        for combo in itertools.product(*component_choices):
            result[combo] += 1
    return result


def _expr_signature_ok(net: HLNet, t: HLTransition, expr: ArcExpression,
                       place: HLPlace) -> Optional[str]:
    for tup in expr:
        if len(tup) != len(place.signature):
            return (f"arity {len(tup)} does not match place "
                    f"{place.name!r} ({len(place.signature)})")
        for term, ci in zip(tup, place.signature):
            if isinstance(term, Var):
                try:
                    vci = t.var_class(term.name)
                except UnboundVariable:
                    return f"unbound variable {term.name!r} on {t.name!r}"
                if vci != ci:
                    return (f"variable {term.name!r} of class {vci} used in a "
                            f"class-{ci} component of {place.name!r}")
            else:
                if net.universe.class_index(term.class_name) != ci:
                    return (f"all({term.class_name}) used in a class-{ci} "
                            f"component of {place.name!r}")
    return None


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def apply_symmetry_marking(net: HLNet, s: Symmetry, m: HLMarking) -> HLMarking:
    out: HLMarking = {}
    for pname, tokens in m.items():
        sig = net.place(pname).signature
        out[pname] = Counter()
        for tup, k in tokens.items():
            out[pname][apply_to_tuple(s, sig, tup)] += k
    return out


def marking_equal(a: HLMarking, b: HLMarking) -> bool:
    keys = {k for k, v in a.items() if v} | {k for k, v in b.items() if v}
    return all(a.get(k, Counter()) == b.get(k, Counter()) for k in keys)


def validate_net(net: HLNet, m0: HLMarking,
                 symmetries: Optional[list[Symmetry]] = None) -> None:
    """Raise a NetError if the net or its initial marking is malformed."""
    from .colors import enumerate_symmetries

    for (pname, tname), expr in net.arcs_in.items():
        bad = _expr_signature_ok(net, net.transition(tname), expr,
                                 net.place(pname))
        if bad:
            raise IllTypedArc(f"arc {pname}->{tname}: {bad}")
    for (tname, pname), expr in net.arcs_out.items():
        bad = _expr_signature_ok(net, net.transition(tname), expr,
                                 net.place(pname))
        if bad:
            raise IllTypedArc(f"arc {tname}->{pname}: {bad}")
    for t in net.transitions:
        declared = {v for v, _ in t.variables}
        missing = t.guard.variables() - declared
        if missing:
            raise UnboundVariable(
                f"guard of {t.name!r} uses undeclared {sorted(missing)}")
    for pname, tokens in m0.items():
        sig = net.place(pname).signature
        for tup in tokens:
            if len(tup) != len(sig):
                raise IllTypedArc(f"initial token {tup} on {pname!r}")
            for v, ci in zip(tup, sig):
                if not 0 <= v < net.universe.classes[ci].size:
                    raise IllTypedArc(f"initial token {tup} on {pname!r}")
    if symmetries is None:
        symmetries = enumerate_symmetries(net.universe)
    for s in symmetries:
        if not marking_equal(apply_symmetry_marking(net, s, m0), m0):
            raise NonSymmetricInitialMarking(
                "initial marking is not fixed by the symmetry group")


# ---------------------------------------------------------------------------
# high-level firing
# ---------------------------------------------------------------------------

def enabled_hl(net: HLNet, m: HLMarking, t: HLTransition,
               mode: Sequence[int]) -> bool:
    if not guard_holds(net, t, t.guard, mode):
        return False
    for (pname, tname), expr in net.arcs_in.items():
        if tname != t.name:
            continue
        need = eval_expression(net, t, expr, mode)
        have = m.get(pname, Counter())
        if any(have[tok] < k for tok, k in need.items()):
            return False
    return True


def fire_hl(net: HLNet, m: HLMarking, t: HLTransition,
            mode: Sequence[int]) -> HLMarking:
    if not guard_holds(net, t, t.guard, mode):
        raise GuardFalse(f"{t.name} guard false in mode {mode}")
    if not enabled_hl(net, m, t, mode):
        raise NotEnabled(f"{t.name} not enabled in mode {mode}")
    out = {p: Counter(ts) for p, ts in m.items()}
    for (pname, tname), expr in net.arcs_in.items():
        if tname != t.name:
            continue
        for tok, k in eval_expression(net, t, expr, mode).items():
            out.setdefault(pname, Counter())[tok] -= k
    for (tname, pname), expr in net.arcs_out.items():
        if tname != t.name:
            continue
        for tok, k in eval_expression(net, t, expr, mode).items():
            out.setdefault(pname, Counter())[tok] += k
    for pname in list(out):
        out[pname] = +out[pname]  # drop zero entries
    return out


def hl_enabled_pairs(net: HLNet, m: HLMarking):
    """All (transition, mode) pairs enabled at m."""
    for t in net.transitions:
        for mode in modes(net, t):
            if enabled_hl(net, m, t, mode):
                yield t, mode
