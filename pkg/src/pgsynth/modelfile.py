"""Textual model files for high-level games.

Line-based grammar, '#' starts a comment:

    class <Name> = <colors> [| <colors>]* ;
    place <Name> kind=(env|sys|bad) type=<Class>[*<Class>]* ;
    trans <Name> [vars <v>:<Class>[, ...]] [guard <Guard>] ;
    arc <from> -> <to> expr <tuple>[+<tuple>]* ;
    init <Place> = (<colors>)... ;

Tuple components are variables or all(<Class>); guards combine
`x == y`, `x != y`, `x in <Class>[<q>]`, `true` with and/or/not and
parentheses.  Static subclasses of a class are separated by '|'.
"""

from __future__ import annotations

import re
from collections import Counter

from .colors import ColorClass, ColorUniverse
from .game import HLGame
from .hlnet import (All, ArcExpression, Guard, HLNet, HLPlace, HLTransition,
                    TRUE, Var, g_and, g_eq, g_in, g_neq, g_not, g_or)


class SyntaxErrorWithLocation(ValueError):
    def __init__(self, msg: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


def _statements(text: str):
    """Join physical lines into ';'-terminated statements."""
    buf, start = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if start is None:
            start = lineno
        buf.append(line.strip())
        while ";" in " ".join(buf):
            joined = " ".join(buf)
            stmt, rest = joined.split(";", 1)
            yield stmt.strip(), start
            buf = [rest.strip()] if rest.strip() else []
            start = lineno if buf else None
    if buf and " ".join(buf).strip():
        yield " ".join(buf).strip(), start or 1


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"


class _GuardParser:
    def __init__(self, text: str, line: int, classes: dict[str, int],
                 var_class: dict[str, int]):
        self.tokens = re.findall(
            rf"{_NAME}|==|!=|\(|\)|\[|\]|\d+", text)
        self.pos = 0
        self.line = line
        self.classes = classes
        self.var_class = var_class

    def fail(self, msg):
        raise SyntaxErrorWithLocation(msg, self.line, self.pos)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def eat(self, tok=None):
        got = self.peek()
        if got is None or (tok is not None and got != tok):
            self.fail(f"expected {tok or 'a token'}, got {got!r}")
        self.pos += 1
        return got

    def parse(self) -> Guard:
        g = self.or_()
        if self.peek() is not None:
            self.fail(f"trailing {self.peek()!r} in guard")
        return g

    def or_(self) -> Guard:
        g = self.and_()
        while self.peek() == "or":
            self.eat()
            g = g_or(g, self.and_())
        return g

    def and_(self) -> Guard:
        g = self.atom()
        while self.peek() == "and":
            self.eat()
            g = g_and(g, self.atom())
        return g

    def atom(self) -> Guard:
        tok = self.peek()
        if tok == "not":
            self.eat()
            return g_not(self.atom())
        if tok == "(":
            self.eat()
            g = self.or_()
            self.eat(")")
            return g
        if tok == "true":
            self.eat()
            return TRUE
        var = self.eat()
        if var not in self.var_class:
            self.fail(f"unknown variable {var!r} in guard")
        op = self.eat()
        if op in ("==", "!="):
            other = self.eat()
            if other not in self.var_class:
                self.fail(f"unknown variable {other!r} in guard")
            return g_eq(var, other) if op == "==" else g_neq(var, other)
        if op == "in":
            cls = self.eat()
            if cls not in self.classes:
                self.fail(f"unknown class {cls!r} in guard")
            self.eat("[")
            q = int(self.eat())
            self.eat("]")
            return g_in(var, q)
        self.fail(f"unexpected {op!r} in guard")


def parse_model(text: str) -> HLGame:
    classes: list[ColorClass] = []
    class_index: dict[str, int] = {}
    color_home: dict[str, tuple[int, int]] = {}
    places: list[HLPlace] = []
    place_kind: dict[str, str] = {}
    transitions: list[HLTransition] = []
    arcs_in: dict = {}
    arcs_out: dict = {}
    init: dict[str, Counter] = {}

    def class_of(name: str, line: int) -> int:
        if name not in class_index:
            raise SyntaxErrorWithLocation(f"unknown class {name!r}", line)
        return class_index[name]

    def parse_tuple(text_: str, line: int, trans: HLTransition):
        comps = [c.strip() for c in text_.split(",")]
        out = []
        for comp in comps:
            m = re.fullmatch(rf"all\(({_NAME})\)", comp)
            if m:
                class_of(m.group(1), line)
                out.append(All(m.group(1)))
            elif re.fullmatch(_NAME, comp):
                out.append(Var(comp))
            else:
                raise SyntaxErrorWithLocation(
                    f"bad tuple component {comp!r}", line)
        return tuple(out)

    trans_by_name: dict[str, HLTransition] = {}
    pending_arcs = []

    for stmt, line in _statements(text):
        head = stmt.split(None, 1)[0] if stmt.split() else ""
        if head == "class":
            m = re.fullmatch(rf"class\s+({_NAME})\s*=\s*(.+)", stmt)
            if not m:
                raise SyntaxErrorWithLocation("malformed class", line)
            name, body = m.group(1), m.group(2)
            groups = [g.strip() for g in body.split("|")]
            colors, sizes = [], []
            for g in groups:
                members = g.split()
                if not members:
                    raise SyntaxErrorWithLocation(
                        "empty static subclass", line)
                colors.extend(members)
                sizes.append(len(members))
            if name in class_index:
                raise SyntaxErrorWithLocation(
                    f"duplicate class {name!r}", line)
            class_index[name] = len(classes)
            for idx, c in enumerate(colors):
                if c in color_home:
                    raise SyntaxErrorWithLocation(
                        f"duplicate color {c!r}", line)
                color_home[c] = (class_index[name], idx)
            classes.append(ColorClass(name, tuple(colors), tuple(sizes)))
        elif head == "place":
            m = re.fullmatch(
                rf"place\s+({_NAME})\s+kind=(env|sys|bad)\s+type=(.+)",
                stmt)
            if not m:
                raise SyntaxErrorWithLocation("malformed place", line)
            name, kind, ty = m.groups()
            sig = tuple(class_of(c.strip(), line) for c in ty.split("*"))
            places.append(HLPlace(name, sig))
            place_kind[name] = kind
        elif head == "trans":
            m = re.fullmatch(
                rf"trans\s+({_NAME})"
                rf"(?:\s+vars\s+((?:{_NAME}\s*:\s*{_NAME}\s*,?\s*)+?))?"
                rf"(?:\s+guard\s+(.+))?",
                stmt)
            if not m:
                raise SyntaxErrorWithLocation("malformed trans", line)
            name, vars_text, guard_text = m.groups()
            variables = []
            if vars_text:
                for part in vars_text.split(","):
                    v, cls = (s.strip() for s in part.split(":"))
                    variables.append((v, class_of(cls, line)))
            guard = TRUE
            if guard_text:
                guard = _GuardParser(
                    guard_text, line, class_index,
                    {v: ci for v, ci in variables}).parse()
            t = HLTransition(name, tuple(variables), guard)
            transitions.append(t)
            trans_by_name[name] = t
        elif head == "arc":
            m = re.fullmatch(
                rf"arc\s+({_NAME})\s*->\s*({_NAME})\s+expr\s+(.+)", stmt)
            if not m:
                raise SyntaxErrorWithLocation("malformed arc", line)
            pending_arcs.append((m.group(1), m.group(2), m.group(3), line))
        elif head == "init":
            m = re.fullmatch(rf"init\s+({_NAME})\s*=\s*(.+)", stmt)
            if not m:
                raise SyntaxErrorWithLocation("malformed init", line)
            pname, body = m.groups()
            tokens = Counter()
            for tok in re.findall(r"\(([^()]*)\)", body):
                names = [s.strip() for s in tok.split(",")]
                idx = []
                for cname in names:
                    if cname not in color_home:
                        raise SyntaxErrorWithLocation(
                            f"unknown color {cname!r}", line)
                    idx.append(color_home[cname][1])
                tokens[tuple(idx)] += 1
            init[pname] = tokens
        else:
            raise SyntaxErrorWithLocation(
                f"unknown statement {head!r}", line)

    place_names = {p.name for p in places}
    for src, dst, expr_text, line in pending_arcs:
        if src in place_names and dst in trans_by_name:
            key, kind, trans = (src, dst), "in", trans_by_name[dst]
        elif src in trans_by_name and dst in place_names:
            key, kind, trans = (src, dst), "out", trans_by_name[src]
        else:
            raise SyntaxErrorWithLocation(
                f"arc endpoints {src!r} -> {dst!r} unknown", line)
        tuples = []
        for t in expr_text.split("+"):
            t = t.strip()
            if t.startswith("(") and t.endswith(")"):
                t = t[1:-1]
            tuples.append(parse_tuple(t, line, trans))
        expr: ArcExpression = tuple(tuples)
        (arcs_in if kind == "in" else arcs_out)[key] = expr

    for pname in init:
        if pname not in place_names:
            raise SyntaxErrorWithLocation(
                f"init for unknown place {pname!r}", 1)

    net = HLNet(universe=ColorUniverse(tuple(classes)),
                places=tuple(places), transitions=tuple(transitions),
                arcs_in=arcs_in, arcs_out=arcs_out)
    game = HLGame(
        net=net,
        m0=init,
        env_places=tuple(p for p, k in place_kind.items() if k == "env"),
        bad_places=tuple(p for p, k in place_kind.items() if k == "bad"),
    )
    game.validate()
    return game


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _term_text(term) -> str:
    return f"all({term.class_name})" if isinstance(term, All) else term.name


def _guard_text(g: Guard, var_class: dict, u) -> str:
    if g.kind == "true":
        return "true"
    if g.kind == "eq":
        return f"{g.args[0]} == {g.args[1]}"
    if g.kind == "neq":
        return f"{g.args[0]} != {g.args[1]}"
    if g.kind == "in":
        cls = u.classes[var_class[g.args[0]]].name
        return f"{g.args[0]} in {cls}[{g.args[1]}]"
    if g.kind in ("and", "or"):
        return (f"({_guard_text(g.args[0], var_class, u)}) {g.kind} "
                f"({_guard_text(g.args[1], var_class, u)})")
    if g.kind == "not":
        return f"not ({_guard_text(g.args[0], var_class, u)})"
    raise ValueError(g.kind)


def serialize_model(game: HLGame) -> str:
    net = game.net
    u = net.universe
    out = []
    for cls in u.classes:
        groups = []
        for rng in cls.subclass_ranges():
            groups.append(" ".join(cls.colors[i] for i in rng))
        out.append(f"class {cls.name} = {' | '.join(groups)} ;")
    for p in net.places:
        kind = ("bad" if p.name in game.bad_places
                else "env" if p.name in game.env_places else "sys")
        ty = "*".join(u.classes[ci].name for ci in p.signature)
        out.append(f"place {p.name} kind={kind} type={ty} ;")
    for t in net.transitions:
        parts = [f"trans {t.name}"]
        if t.variables:
            parts.append("vars " + ", ".join(
                f"{v}:{u.classes[ci].name}" for v, ci in t.variables))
        if t.guard.kind != "true":
            parts.append("guard " + _guard_text(
                t.guard, {v: ci for v, ci in t.variables}, u))
        out.append(" ".join(parts) + " ;")
    for (a, b), expr in sorted(net.arcs_in.items()):
        tuples = "+".join(
            "(" + ",".join(_term_text(c) for c in tup) + ")"
            for tup in expr)
        out.append(f"arc {a} -> {b} expr {tuples} ;")
    for (a, b), expr in sorted(net.arcs_out.items()):
        tuples = "+".join(
            "(" + ",".join(_term_text(c) for c in tup) + ")"
            for tup in expr)
        out.append(f"arc {a} -> {b} expr {tuples} ;")
    for pname in sorted(game.m0):
        tokens = game.m0[pname]
        if not tokens:
            continue
        sig = net.place(pname).signature
        toks = []
        for tup, k in sorted(tokens.items()):
            names = ",".join(u.classes[ci].colors[v]
                             for ci, v in zip(sig, tup))
            toks.extend([f"({names})"] * k)
        out.append(f"init {pname} = {''.join(toks)} ;")
    return "\n".join(out) + "\n"


def cs_model_text(n: int) -> str:
    from .generators import generate_cs
    return serialize_model(generate_cs(n))
