"""Canonical representations of symmetry orbits of decision sets.

A dynamic representation abstracts a decision set by replacing colors with
dynamic subclasses (blocks of interchangeable colors, each tagged with its
static subclass and a cardinality).  Two subclasses merge when they occur
in exactly the same entry shapes (their contexts coincide literally); the
merged, lexicographically least-encoded representation is the unique
canonical representative of the whole symmetry orbit.

Firing and pending-choice resolution work directly on representations:
a firing instantiates the participating members as fresh singleton
subclasses (splitting), a resolution refines subclasses into parts that
may commit differently (partitioning), and the result is re-canonicalized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import decisions as ds
from .decisions import DecisionSet, TOP
from .hlnet import All, Var
from .ptnet import PTGame


class CanonicalError(ValueError):
    pass


class NotMinimal(CanonicalError):
    pass


class InvalidAssignment(CanonicalError):
    pass


class UnknownSubclass(CanonicalError):
    pass


class _Nabla:
    __slots__ = ()

    def __repr__(self):
        return "∇"


NABLA = _Nabla()

# an instance inside a dynamic commitment: (hl transition index, tuple of
# subclass indices, one per parameter slot)
Instance = tuple[int, tuple[int, ...]]
# an entry: (hl place index, tuple of subclass indices, TOP | frozenset)
DynEntry = tuple[int, tuple[int, ...], Optional[frozenset]]


@dataclass(frozen=True)
class Representation:
    """Dynamic subclasses plus a dynamic decision set.

    subclasses[i] is a tuple of (static subclass, cardinality) pairs; the
    position inside the tuple is the subclass index.  Indices are grouped
    by static subclass in non-decreasing order.
    """

    subclasses: tuple[tuple[tuple[int, int], ...], ...]
    entries: tuple[DynEntry, ...]

    def card(self, class_index: int, j: int) -> int:
        return self.subclasses[class_index][j][1]

    def stat(self, class_index: int, j: int) -> int:
        return self.subclasses[class_index][j][0]


def _sort_entries(entries) -> tuple[DynEntry, ...]:
    def key(e):
        hp, ztup, dec = e
        if dec is TOP:
            return (hp, ztup, 0, ())
        return (hp, ztup, 1, tuple(sorted(dec)))
    return tuple(sorted(set(entries), key=key))


def make_representation(subclasses, entries) -> Representation:
    subclasses = tuple(tuple(cls) for cls in subclasses)
    for cls in subclasses:
        stats = [s for s, _ in cls]
        if stats != sorted(stats):
            raise CanonicalError("subclasses not grouped by static subclass")
        if any(c < 1 for _, c in cls):
            raise CanonicalError("empty dynamic subclass")
    return Representation(subclasses, _sort_entries(entries))


# ---------------------------------------------------------------------------
# lifting and realization
# ---------------------------------------------------------------------------

def lift(game: PTGame, d: DecisionSet) -> Representation:
    """One singleton subclass per color of the universe; the induced
    assignment maps color index c to subclass index c."""
    u = game.universe
    subclasses = tuple(
        tuple((cls.subclass_of(c), 1) for c in range(cls.size))
        for cls in u.classes)
    entries = []
    for pid, dec in d:
        hp, ctup = game.place_keys[pid]
        if dec is TOP:
            entries.append((hp, ctup, TOP))
        else:
            inst = frozenset(
                (game.trans_keys[t][0], game.trans_keys[t][1]) for t in dec)
            entries.append((hp, ctup, inst))
    return make_representation(subclasses, entries)


# a valid assignment: per class, a tuple mapping color index -> subclass index
Assignment = tuple[tuple[int, ...], ...]


def identity_assignment(game: PTGame) -> Assignment:
    return tuple(tuple(range(cls.size)) for cls in game.universe.classes)


def assignments(game: PTGame, rep: Representation) -> Iterator[Assignment]:
    """All valid assignments: colors distributed over subclasses respecting
    static subclasses and cardinalities."""
    u = game.universe
    per_class = []
    for i, cls in enumerate(u.classes):
        subs = rep.subclasses[i]
        # per static subclass q, distribute its color range over the
        # subclass indices with stat q according to their cardinalities
        options = []
        for q, rng in enumerate(cls.subclass_ranges()):
            slots = [j for j, (s, _) in enumerate(subs) if s == q]
            cards = [subs[j][1] for j in slots]
            if sum(cards) != len(rng):
                raise CanonicalError("cardinality sum mismatch")
            options.append(_distributions(list(rng), slots, cards))
        combined = []
        for combo in itertools.product(*options):
            mapping = {}
            for part in combo:
                mapping.update(part)
            combined.append(tuple(mapping[c] for c in range(cls.size)))
        per_class.append(combined)
    for combo in itertools.product(*per_class):
        yield tuple(combo)


def _distributions(colors, slots, cards):
    """All ways to assign `colors` to `slots` with the given block sizes."""
    out = []

    def rec(remaining, idx, acc):
        if idx == len(slots):
            out.append(dict(acc))
            return
        for chosen in itertools.combinations(remaining, cards[idx]):
            rest = [c for c in remaining if c not in chosen]
            rec(rest, idx + 1, acc + [(c, slots[idx]) for c in chosen])
    rec(colors, 0, [])
    return out


def realize(game: PTGame, rep: Representation, va: Assignment) -> DecisionSet:
    """Substitute each subclass occurrence by its assigned colors."""
    u = game.universe
    colors_of = [
        [tuple(c for c in range(u.classes[i].size) if va[i][c] == j)
         for j in range(len(rep.subclasses[i]))]
        for i in range(len(u.classes))]
    for i, cls in enumerate(rep.subclasses):
        for j, (q, card) in enumerate(cls):
            got = colors_of[i][j]
            if len(got) != card or any(
                    u.classes[i].subclass_of(c) != q for c in got):
                raise InvalidAssignment(f"class {i} subclass {j}")
    out = []
    for hp, ztup, dec in rep.entries:
        sig = game.net.places[hp].signature
        for ctup in itertools.product(
                *(colors_of[ci][j] for ci, j in zip(sig, ztup))):
            pid = game.place_id((hp, ctup))
            if dec is TOP:
                out.append((pid, TOP))
                continue
            # commitments realize per token: a subclass occurring in its own
            # entry's commitment refers to the token's own member, so only
            # the instances actually involving this token are kept
            post = set(game.place_post[pid])
            tids = set()
            for ht, zmode in dec:
                tsig = tuple(ci for _, ci in
                             game.net.transitions[ht].variables)
                for mode in itertools.product(
                        *(colors_of[ci][j] for ci, j in zip(tsig, zmode))):
                    tid = game.trans_id((ht, mode))
                    if tid in post:
                        tids.add(tid)
            out.append((pid, tuple(sorted(tids))))
    return ds.make_ds(out)


def realize_all(game: PTGame, rep: Representation) -> set[DecisionSet]:
    return {realize(game, rep, va) for va in assignments(game, rep)}


# ---------------------------------------------------------------------------
# contexts and merging
# ---------------------------------------------------------------------------

def context(game: PTGame, rep: Representation, class_index: int,
            j: int) -> frozenset:
    """Entry shapes with exactly one occurrence of the subclass blanked."""
    if j >= len(rep.subclasses[class_index]):
        raise UnknownSubclass((class_index, j))
    shapes = []
    for hp, ztup, dec in rep.entries:
        sig = game.net.places[hp].signature
        for slot, (ci, z) in enumerate(zip(sig, ztup)):
            if ci == class_index and z == j:
                blanked = ztup[:slot] + (NABLA,) + ztup[slot + 1:]
                shapes.append((hp, blanked, _freeze_dec(dec)))
        if dec is TOP:
            continue
        for ht, zmode in dec:
            tsig = tuple(ci for _, ci in game.net.transitions[ht].variables)
            for slot, (ci, z) in enumerate(zip(tsig, zmode)):
                if ci == class_index and z == j:
                    blanked_inst = (ht, zmode[:slot] + (NABLA,)
                                    + zmode[slot + 1:])
                    new_dec = frozenset(
                        x for x in dec if x != (ht, zmode)) | {blanked_inst}
                    shapes.append((hp, ztup, new_dec))
    return frozenset(shapes)


def _freeze_dec(dec):
    return "T" if dec is TOP else dec


def _rewrite(game: PTGame, rep: Representation, class_index: int,
             mapping: dict[int, int], new_cls) -> Representation:
    subclasses = list(rep.subclasses)
    subclasses[class_index] = tuple(new_cls)
    entries = []
    for hp, ztup, dec in rep.entries:
        sig = game.net.places[hp].signature
        ztup2 = tuple(mapping[z] if ci == class_index else z
                      for ci, z in zip(sig, ztup))
        if dec is TOP:
            entries.append((hp, ztup2, TOP))
            continue
        new_dec = set()
        for ht, zmode in dec:
            tsig = tuple(ci for _, ci in game.net.transitions[ht].variables)
            new_dec.add((ht, tuple(mapping[z] if ci == class_index else z
                                   for ci, z in zip(tsig, zmode))))
        entries.append((hp, ztup2, frozenset(new_dec)))
    return make_representation(subclasses, entries)


def _symmetry_tables(game: PTGame):
    hit = game._cache.get("sym_tables")
    if hit is None:
        from .colors import enumerate_symmetries
        hit = game.symmetry_tables(enumerate_symmetries(game.universe))
        game._cache["sym_tables"] = hit
    return hit


def _transposition_fixes(game: PTGame, rep: Representation, class_index: int,
                         j: int, k: int) -> bool:
    """Whether exchanging the two subclass names leaves the dynamic
    decision set unchanged (cards ignored; interchangeable roles)."""
    mapping = {x: x for x in range(len(rep.subclasses[class_index]))}
    mapping[j], mapping[k] = k, j
    swapped = _rewrite(game, rep, class_index, mapping,
                       _swap_positions(rep.subclasses[class_index], j, k))
    return swapped.entries == rep.entries


def _swap_positions(cls, j, k):
    out = list(cls)
    out[j], out[k] = out[k], out[j]
    return tuple(out)


def _merge_sound(game: PTGame, rep: Representation,
                 merged: Representation) -> bool:
    """The merge is sound iff it represents the same orbit: one realized
    member of the merged form must be a symmetry image of one member of
    the original."""
    d_orig = realize(game, rep, next(assignments(game, rep)))
    d_merged = realize(game, merged, next(assignments(game, merged)))
    return any(ds.apply_symmetry_ds(t, d_orig) == d_merged
               for t in _symmetry_tables(game))


def _merge_pair(game: PTGame, rep: Representation, class_index: int,
                j: int, k: int) -> Representation:
    cls = rep.subclasses[class_index]
    mapping = {}
    new_cls = []
    for x, (q, card) in enumerate(cls):
        if x == k:
            mapping[x] = j
            new_cls[j] = (q, new_cls[j][1] + card)
            continue
        mapping[x] = len(new_cls)
        new_cls.append((q, card))
    return _rewrite(game, rep, class_index, mapping, new_cls)


def merge_minimal(game: PTGame, rep: Representation) -> Representation:
    """Fixpoint of merging interchangeable subclasses (same class, same
    static subclass, exchanging them fixes the dynamic decision set, and
    the realized orbit is preserved)."""
    changed = True
    while changed:
        changed = False
        for i, cls in enumerate(rep.subclasses):
            for j in range(len(cls)):
                for k in range(j + 1, len(cls)):
                    if cls[j][0] != cls[k][0]:
                        continue
                    if not _transposition_fixes(game, rep, i, j, k):
                        continue
                    merged = _merge_pair(game, rep, i, j, k)
                    if not _merge_sound(game, rep, merged):
                        continue
                    rep = merged
                    changed = True
                    break
                if changed:
                    break
            if changed:
                break
    return rep


def is_minimal(game: PTGame, rep: Representation) -> bool:
    for i, cls in enumerate(rep.subclasses):
        for j in range(len(cls)):
            for k in range(j + 1, len(cls)):
                if cls[j][0] != cls[k][0]:
                    continue
                if _transposition_fixes(game, rep, i, j, k) and \
                        _merge_sound(game, rep,
                                     _merge_pair(game, rep, i, j, k)):
                    return False
    return True


# ---------------------------------------------------------------------------
# encoding and ordering
# ---------------------------------------------------------------------------

ENCODING_TAG = "pgc1"


def encode(rep: Representation) -> str:
    parts = [ENCODING_TAG]
    for cls in rep.subclasses:
        parts.append(",".join(f"{q}.{card}" for q, card in cls))
    for hp, ztup, dec in rep.entries:
        z = ".".join(map(str, ztup))
        if dec is TOP:
            parts.append(f"{hp}({z})T")
        elif not dec:
            parts.append(f"{hp}({z})0")
        else:
            insts = "+".join(
                f"{ht}({'.'.join(map(str, zm))})"
                for ht, zm in sorted(dec))
            parts.append(f"{hp}({z}){{{insts}}}")
    return "|".join(parts)


def _stat_group_perms(cls) -> Iterator[tuple[int, ...]]:
    """Permutations of subclass indices that respect the stat grouping."""
    groups = []
    start = 0
    while start < len(cls):
        end = start
        while end < len(cls) and cls[end][0] == cls[start][0]:
            end += 1
        groups.append(range(start, end))
        start = end
    for combo in itertools.product(*(itertools.permutations(g)
                                     for g in groups)):
        yield tuple(itertools.chain.from_iterable(combo))


@dataclass
class OrderingStats:
    orderings: int = 0
    max_per_node: int = 0

    def record(self, n: int) -> None:
        self.orderings += n
        self.max_per_node = max(self.max_per_node, n)


def apply_subclass_permutation(game: PTGame, rep: Representation,
                               perms) -> Representation:
    """perms[i][old_j] = new_j; must respect the stat grouping."""
    out = rep
    for i, perm in enumerate(perms):
        cls = out.subclasses[i]
        new_cls = [None] * len(cls)
        for old_j, new_j in enumerate(perm):
            if cls[old_j][0] != cls[new_j][0]:
                raise CanonicalError("permutation breaks static subclasses")
            new_cls[new_j] = cls[old_j]
        out = _rewrite(game, out, i, dict(enumerate(perm)), new_cls)
    return out


def order_representation(game: PTGame, rep: Representation,
                         stats: Optional[OrderingStats] = None,
                         check_minimal: bool = True,
                         ) -> tuple[Representation, str]:
    """Among all stat-respecting index permutations, pick the one with the
    lexicographically smallest encoding."""
    if check_minimal and not is_minimal(game, rep):
        raise NotMinimal("representation must be merged first")
    best = None
    best_rep = None
    count = 0
    for perms in itertools.product(
            *(_stat_group_perms(cls) for cls in rep.subclasses)):
        candidate = apply_subclass_permutation(game, rep, perms)
        enc = encode(candidate)
        count += 1
        if best is None or enc < best:
            best, best_rep = enc, candidate
    if stats is not None:
        stats.record(count)
    return best_rep, best


def canonicalize(game: PTGame, rep: Representation,
                 stats: Optional[OrderingStats] = None,
                 ) -> tuple[Representation, str]:
    minimal = merge_minimal(game, rep)
    return order_representation(game, minimal, stats, check_minimal=False)


def canon_of(game: PTGame, d: DecisionSet,
             stats: Optional[OrderingStats] = None,
             ) -> tuple[Representation, str]:
    return canonicalize(game, lift(game, d), stats)


# ---------------------------------------------------------------------------
# symbolic pre/post structure
# ---------------------------------------------------------------------------

def _trans_sig(game: PTGame, ht: int) -> tuple[int, ...]:
    return tuple(ci for _, ci in game.net.transitions[ht].variables)


def _symbolic_arcs(game: PTGame, ht: int, zmode, subclasses, arcs):
    """Multiset of (hl place, subclass tuple) a transition instance moves,
    with subclass indices as colors (broadcast terms range over all
    subclasses of the class)."""
    net = game.net
    trans = net.transitions[ht]
    var_value = {v: zmode[i] for i, (v, _) in enumerate(trans.variables)}
    out = []
    for key, expr in arcs.items():
        pname = key[0] if key[0] != trans.name else key[1]
        tname = key[1] if key[0] != trans.name else key[0]
        if tname != trans.name:
            continue
        hp = next(i for i, p in enumerate(net.places) if p.name == pname)
        for tup in expr:
            choices = []
            for term in tup:
                if isinstance(term, Var):
                    choices.append((var_value[term.name],))
                else:
                    ci = net.universe.class_index(term.class_name)
                    choices.append(tuple(range(len(subclasses[ci]))))
            for combo in itertools.product(*choices):
                out.append((hp, combo))
    return out


def symbolic_pre(game: PTGame, ht: int, zmode, subclasses):
    return _symbolic_arcs(game, ht, zmode, subclasses, game.net.arcs_in)


def symbolic_post(game: PTGame, ht: int, zmode, subclasses):
    return _symbolic_arcs(game, ht, zmode, subclasses, game.net.arcs_out)


def _guard_holds_symbolic(game: PTGame, ht: int, zmode,
                          rep: Representation) -> bool:
    """Guards decided on instantiated singleton parts: equal parts mean
    equal colors, distinct parts mean distinct colors."""
    net = game.net
    trans = net.transitions[ht]

    def value(var):
        for k, (v, ci) in enumerate(trans.variables):
            if v == var:
                return ci, zmode[k]
        raise CanonicalError(var)

    def ev(g):
        if g.kind == "true":
            return True
        if g.kind == "eq":
            (c1, z1), (c2, z2) = value(g.args[0]), value(g.args[1])
            return c1 == c2 and z1 == z2
        if g.kind == "neq":
            (c1, z1), (c2, z2) = value(g.args[0]), value(g.args[1])
            return not (c1 == c2 and z1 == z2)
        if g.kind == "in":
            ci, z = value(g.args[0])
            return rep.stat(ci, z) == g.args[1]
        if g.kind == "and":
            return ev(g.args[0]) and ev(g.args[1])
        if g.kind == "or":
            return ev(g.args[0]) or ev(g.args[1])
        if g.kind == "not":
            return not ev(g.args[0])
        raise CanonicalError(g.kind)
    return ev(trans.guard)


def full_symbolic_commitment(game: PTGame, rep: Representation, hp: int,
                             ztup) -> frozenset:
    """All symbolic instances that involve the given place tuple (the
    commitment an environment token receives)."""
    out = set()
    for ht in range(len(game.net.transitions)):
        sig = _trans_sig(game, ht)
        for zmode in itertools.product(
                *(range(len(rep.subclasses[ci])) for ci in sig)):
            if not _guard_holds_symbolic(game, ht, zmode, rep):
                continue
            if (hp, tuple(ztup)) in symbolic_pre(game, ht, zmode,
                                                 rep.subclasses):
                out.add((ht, tuple(zmode)))
    return frozenset(out)


# ---------------------------------------------------------------------------
# splitting and symbolic firing
# ---------------------------------------------------------------------------

# a symbolic mode: per parameter slot, (original subclass index j, member k)
SymbolicMode = tuple[tuple[int, int], ...]
SymbolicInstance = tuple[int, SymbolicMode]  # (hl transition, mode)


def enumerate_symbolic_modes(game: PTGame, rep: Representation,
                             ht: int) -> Iterator[SymbolicMode]:
    """Normalized modes: member indices per subclass are 1..m in first-use
    order, never exceeding the subclass cardinality."""
    sig = _trans_sig(game, ht)

    def rec(slot, used, acc):
        if slot == len(sig):
            yield tuple(acc)
            return
        ci = sig[slot]
        for j in range(len(rep.subclasses[ci])):
            seen = used.get((ci, j), 0)
            limit = min(rep.card(ci, j), seen + 1)
            for k in range(1, limit + 1):
                if k <= seen:
                    yield from rec(slot + 1, used, acc + [(j, k)])
                else:
                    used2 = dict(used)
                    used2[(ci, j)] = k
                    yield from rec(slot + 1, used2, acc + [(j, k)])
    yield from rec(0, {}, [])


@dataclass(frozen=True)
class SplitMap:
    """Bookkeeping of one split/partition step: for each class, a list
    mapping new index -> (old index, part cardinality)."""
    old_of_new: tuple[tuple[tuple[int, int], ...], ...]

    def part_indices(self, class_index: int, old_j: int) -> list[int]:
        return [nj for nj, (oj, _) in
                enumerate(self.old_of_new[class_index]) if oj == old_j]


def refine(game: PTGame, rep: Representation,
           parts_of: dict[tuple[int, int], tuple[int, ...]]
           ) -> tuple[Representation, SplitMap]:
    """Replace each subclass by consecutive parts with the given positive
    cardinalities (defaulting to no split); entries expand to all part
    combinations per occurrence."""
    new_subclasses = []
    old_of_new = []
    new_parts_of: dict[tuple[int, int], list[int]] = {}
    for i, cls in enumerate(rep.subclasses):
        out_cls = []
        out_map = []
        for j, (q, card) in enumerate(cls):
            cards = parts_of.get((i, j), (card,))
            if sum(cards) != card or any(c < 1 for c in cards):
                raise CanonicalError("bad partition cardinalities")
            new_parts_of[(i, j)] = []
            for c in cards:
                new_parts_of[(i, j)].append(len(out_cls))
                out_cls.append((q, c))
                out_map.append((j, c))
        new_subclasses.append(tuple(out_cls))
        old_of_new.append(tuple(out_map))
    new_subclasses_t = tuple(tuple(c) for c in new_subclasses)
    entries = []
    for hp, ztup, dec in rep.entries:
        sig = game.net.places[hp].signature
        slot_choices = [new_parts_of[(ci, z)] for ci, z in zip(sig, ztup)]
        for combo in itertools.product(*slot_choices):
            if dec is TOP:
                entries.append((hp, tuple(combo), TOP))
                continue
            # expand commitments over the parts, keeping per token only the
            # instances that involve it (a self-referring commitment means
            # every member allows its own modes)
            new_dec = set()
            for ht, zmode in dec:
                tsig = _trans_sig(game, ht)
                for mcombo in itertools.product(
                        *(new_parts_of[(ci, z)]
                          for ci, z in zip(tsig, zmode))):
                    if (hp, tuple(combo)) in symbolic_pre(
                            game, ht, mcombo, new_subclasses_t):
                        new_dec.add((ht, tuple(mcombo)))
            entries.append((hp, tuple(combo), frozenset(new_dec)))
    return (make_representation(new_subclasses, entries),
            SplitMap(tuple(old_of_new)))


def split_for_mode(game: PTGame, rep: Representation, ht: int,
                   zmode: SymbolicMode
                   ) -> tuple[Representation, tuple[int, ...], SplitMap]:
    """Split the subclasses used by a symbolic mode into instantiated
    singletons (k = 1..m) plus a remainder part, and translate the mode
    into plain subclass indices of the refined representation."""
    sig = _trans_sig(game, ht)
    counts: dict[tuple[int, int], int] = {}
    for ci, (j, k) in zip(sig, zmode):
        counts[(ci, j)] = max(counts.get((ci, j), 0), k)
    parts_of = {}
    for (ci, j), m in counts.items():
        card = rep.card(ci, j)
        cards = (1,) * m + ((card - m,) if card > m else ())
        parts_of[(ci, j)] = cards
    refined, smap = refine(game, rep, parts_of)
    plain_mode = []
    for ci, (j, k) in zip(sig, zmode):
        plain_mode.append(smap.part_indices(ci, j)[k - 1])
    return refined, tuple(plain_mode), smap


def _instance_enabled(game: PTGame, rep: Representation, ht: int,
                      plain_mode) -> bool:
    """Every consumed place tuple is present and commits to the instance."""
    if not _guard_holds_symbolic(game, ht, plain_mode, rep):
        return False
    needed = symbolic_pre(game, ht, plain_mode, rep.subclasses)
    if len(set(needed)) != len(needed):
        return False  # would need two tokens on one place tuple
    have = {(hp, ztup): dec for hp, ztup, dec in rep.entries}
    inst = (ht, tuple(plain_mode))
    for hp, ztup in needed:
        dec = have.get((hp, ztup), None)
        if dec is TOP or dec is None or inst not in dec:
            return False
    return True


def fire_symbolic(game: PTGame, rep: Representation, ht: int,
                  plain_mode) -> Representation:
    """Fire an instantiated instance on a refined representation: consumed
    entries vanish, produced system tokens are pending, produced
    environment tokens allow their full symbolic postset."""
    consumed = set(symbolic_pre(game, ht, plain_mode, rep.subclasses))
    produced = symbolic_post(game, ht, plain_mode, rep.subclasses)
    entries = [e for e in rep.entries if (e[0], e[1]) not in consumed]
    occupied = {(hp, ztup) for hp, ztup, _ in entries}
    mid = make_representation(rep.subclasses, entries)
    for hp, ztup in produced:
        if (hp, ztup) in occupied:
            raise ds.DecisionSetError("symbolic firing violates safeness")
        occupied.add((hp, ztup))
    out_entries = list(entries)
    for hp, ztup in produced:
        hp_name_is_env = game.net.places[hp].name in _env_names(game)
        if hp_name_is_env:
            out_entries.append(
                (hp, ztup,
                 full_symbolic_commitment(game, mid, hp, ztup)))
        else:
            out_entries.append((hp, ztup, TOP))
    return make_representation(rep.subclasses, out_entries)


def _env_names(game: PTGame) -> frozenset[str]:
    hit = game._cache.get("env_names")
    if hit is None:
        hit = frozenset(game.net.places[hp].name
                        for pid, (hp, _) in enumerate(game.place_keys)
                        if game.is_env[pid])
        game._cache["env_names"] = hit
    return hit


def symbolic_firings(game: PTGame, rep: Representation
                     ) -> Iterator[tuple[SymbolicInstance, Representation]]:
    """All enabled symbolic instances with the raw (pre-canonical) result."""
    if any(dec is TOP for _, _, dec in rep.entries):
        return
    for ht in range(len(game.net.transitions)):
        for zmode in enumerate_symbolic_modes(game, rep, ht):
            refined, plain_mode, _ = split_for_mode(game, rep, ht, zmode)
            if not _instance_enabled(game, refined, ht, plain_mode):
                continue
            yield (ht, zmode), fire_symbolic(game, refined, ht, plain_mode)


# ---------------------------------------------------------------------------
# symbolic resolution of pending choices
# ---------------------------------------------------------------------------

def _partition_cards(card: int) -> Iterator[tuple[int, ...]]:
    """Non-increasing positive integer partitions."""
    def rec(remaining, maxpart):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, maxpart), 0, -1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest
    yield from rec(card, card)


def symbolic_commitment_units(game: PTGame, rep: Representation, hp: int,
                              ztup) -> list[frozenset]:
    """Commitment units over symbolic instances, mirroring the explicit
    rule: modes reached only through broadcast arcs are all-or-nothing."""
    full = full_symbolic_commitment(game, rep, hp, ztup)
    net = game.net
    pname = net.places[hp].name
    units: dict = {}
    for ht, zmode in full:
        trans = net.transitions[ht]
        expr = net.arcs_in.get((pname, trans.name), ())
        var_value = {v: zmode[i] for i, (v, _) in enumerate(trans.variables)}
        distinguishable = False
        for tup in expr:
            purely_vars = True
            matches = True
            for term, z in zip(tup, ztup):
                if isinstance(term, Var):
                    if var_value[term.name] != z:
                        matches = False
                else:
                    purely_vars = False
            if matches and purely_vars:
                distinguishable = True
        key = (ht, zmode) if distinguishable else (ht, None)
        units.setdefault(key, set()).add((ht, zmode))
    return [frozenset(u) for _, u in sorted(
        units.items(), key=lambda kv: sorted(kv[1]))]


def symbolic_top_choices(game: PTGame, rep: Representation, hp: int,
                         ztup) -> list[frozenset]:
    units = symbolic_commitment_units(game, rep, hp, ztup)
    out = []
    for r in range(1, len(units) + 1):
        for combo in itertools.combinations(units, r):
            out.append(frozenset(itertools.chain.from_iterable(combo)))
    return out or [frozenset()]


def symbolic_top_resolutions(game: PTGame, rep: Representation
                             ) -> Iterator[Representation]:
    """Partition the subclasses, then choose a commitment for every pending
    token of the refined representation (raw results, not canonical)."""
    if not any(dec is TOP for _, _, dec in rep.entries):
        raise ds.NoTop("no pending choices")
    per_subclass = []
    keys = []
    for i, cls in enumerate(rep.subclasses):
        for j, (q, card) in enumerate(cls):
            keys.append((i, j))
            per_subclass.append(list(_partition_cards(card)))
    for combo in itertools.product(*per_subclass):
        parts_of = {key: cards for key, cards in zip(keys, combo)}
        refined, _ = refine(game, rep, parts_of)
        top_entries = [(hp, ztup) for hp, ztup, dec in refined.entries
                       if dec is TOP]
        fixed = [e for e in refined.entries if e[2] is not TOP]
        choice_lists = [symbolic_top_choices(game, refined, hp, ztup)
                        for hp, ztup in top_entries]
        for picks in itertools.product(*choice_lists):
            entries = fixed + [
                (hp, ztup, dec)
                for (hp, ztup), dec in zip(top_entries, picks)]
            yield make_representation(refined.subclasses, entries)


# ---------------------------------------------------------------------------
# top-level successor API
# ---------------------------------------------------------------------------

def symbolic_transition_successors(game: PTGame, rep: Representation,
                                   stats: Optional[OrderingStats] = None,
                                   ) -> list[tuple[SymbolicInstance, str,
                                                   Representation]]:
    """Enabled symbolic instances with canonical successors, deduplicated
    per (instance, successor encoding)."""
    seen = set()
    out = []
    for inst, raw in symbolic_firings(game, rep):
        canon, enc = canonicalize(game, raw, stats)
        if (inst, enc) in seen:
            continue
        seen.add((inst, enc))
        out.append((inst, enc, canon))
    return out


def symbolic_top_successors(game: PTGame, rep: Representation,
                            stats: Optional[OrderingStats] = None,
                            ) -> list[tuple[str, Representation]]:
    """Canonical successors of the pending-choice resolution, deduplicated
    by encoding."""
    seen = {}
    for raw in symbolic_top_resolutions(game, rep):
        canon, enc = canonicalize(game, raw, stats)
        if enc not in seen:
            seen[enc] = canon
    return sorted(seen.items())


# ---------------------------------------------------------------------------
# symbolic state properties
# ---------------------------------------------------------------------------

def _enabled_instances(game: PTGame, rep: Representation
                       ) -> list[tuple[SymbolicInstance, tuple[int, ...],
                                       Representation]]:
    """(instance, refined plain mode, refined rep) for every enabled
    symbolic instance; skips the firing itself."""
    out = []
    if any(dec is TOP for _, _, dec in rep.entries):
        return out
    for ht in range(len(game.net.transitions)):
        for zmode in enumerate_symbolic_modes(game, rep, ht):
            refined, plain_mode, _ = split_for_mode(game, rep, ht, zmode)
            if _instance_enabled(game, refined, ht, plain_mode):
                out.append(((ht, zmode), plain_mode, refined))
    return out


def _rep_all(game: PTGame, rep: Representation) -> Representation:
    """Every token equipped with its full symbolic commitment; stands in
    for the underlying marking when deciding termination and deadlocks."""
    entries = []
    for hp, ztup, _ in rep.entries:
        entries.append(
            (hp, ztup, full_symbolic_commitment(game, rep, hp, ztup)))
    return make_representation(rep.subclasses, entries)


def _instance_env_pre(game: PTGame, ht: int, plain_mode,
                      subclasses) -> bool:
    env = _env_names(game)
    return any(game.net.places[hp].name in env
               for hp, _ in symbolic_pre(game, ht, plain_mode, subclasses))


def properties_rep(game: PTGame, rep: Representation) -> dict[str, bool]:
    """The five flags evaluated on the representation itself.

    The commitment-conflict part of nondet is symmetry-invariant, so it is
    evaluated on one realized member; everything else is symbolic."""
    has_top_entries = any(dec is TOP for _, _, dec in rep.entries)
    bad_names = {game.net.places[hp].name
                 for pid, (hp, _) in enumerate(game.place_keys)
                 if game.is_bad[pid]}
    bad = any(game.net.places[hp].name in bad_names
              for hp, _, _ in rep.entries)
    enabled = _enabled_instances(game, rep)
    all_enabled = _enabled_instances(game, _rep_all(game, rep))
    terminating = not all_enabled
    deadlock = (not has_top_entries) and bool(all_enabled) and not enabled
    env_dependent = (not has_top_entries) and all(
        _instance_env_pre(game, ht, pm, refined.subclasses)
        for (ht, _), pm, refined in enabled)
    nondet = False
    env = _env_names(game)
    sys_entries = {(hp, tuple(ztup)) for hp, ztup, dec in rep.entries
                   if dec is not TOP and game.net.places[hp].name not in env}
    plain_pre = {}
    for (ht, zmode), pm, refined in enabled:
        plain = tuple(j for j, _ in zmode)
        plain_pre[(ht, zmode)] = set(
            symbolic_pre(game, ht, plain, rep.subclasses))
    # ndet1: two distinct enabled instances consuming one committed system
    # token (plain-level pre tuples address the same tokens iff equal)
    insts = sorted(plain_pre)
    for a in range(len(insts)):
        for b in range(a + 1, len(insts)):
            shared = plain_pre[insts[a]] & plain_pre[insts[b]] & sys_entries
            if shared:
                nondet = True
                break
        if nondet:
            break
    # ndet2: an enabled instance whose realizations vary inside one
    # subclass while consuming a system token that does not vary with it
    if not nondet:
        for (ht, zmode), pm, refined in enabled:
            varying = {(ci, j)
                       for ci, (j, k) in zip(_trans_sig(game, ht), zmode)
                       if rep.card(ci, j) > 1}
            if not varying:
                continue
            plain = tuple(j for j, _ in zmode)
            for hp, ztup in plain_pre[(ht, zmode)]:
                if (hp, ztup) not in sys_entries:
                    continue
                psig = game.net.places[hp].signature
                touches = {(ci, z) for ci, z in zip(psig, ztup)}
                if varying - touches:
                    nondet = True
                    break
            if nondet:
                break
    if not nondet:
        member = realize(game, rep, next(assignments(game, rep)))
        nondet = ds.commitment_conflict(game, member)
    return {
        "env_dependent": env_dependent,
        "bad": bad,
        "deadlock": deadlock,
        "terminating": terminating,
        "nondet": nondet,
    }


# ---------------------------------------------------------------------------
# automorphisms and label folding
# ---------------------------------------------------------------------------

def automorphisms(game: PTGame, rep: Representation) -> list:
    """Stat-respecting subclass permutations that fix the representation
    literally; instances equivalent under them describe the same
    partition cell of concrete firings."""
    enc0 = encode(rep)
    out = []
    for perms in itertools.product(
            *(_stat_group_perms(cls) for cls in rep.subclasses)):
        if encode(apply_subclass_permutation(game, rep, perms)) == enc0:
            out.append(perms)
    return out


def fold_instance(game: PTGame, auts, inst: SymbolicInstance
                  ) -> SymbolicInstance:
    """Least automorphism image of a symbolic instance label."""
    ht, zmode = inst
    sig = _trans_sig(game, ht)
    best = None
    for perms in auts:
        cand = (ht, tuple((perms[ci][j], k)
                          for ci, (j, k) in zip(sig, zmode)))
        if best is None or cand < best:
            best = cand
    return best
