"""Decision sets: markings of a P/T game enriched with commitments.

A decision set maps each token to either a commitment set (transition
instances the token currently allows) or the pending-choice marker TOP.
These are the states of the explicit two-player reduction and the oracle
for all symbolic machinery.

Entries are kept sorted by place id, commitments as sorted tuples, so
equality is structural and hashing is cheap.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Iterator, Optional

from .ptnet import PTGame, UnsafeNet


class DecisionSetError(ValueError):
    pass


class MultipleEnvironmentTokens(DecisionSetError):
    pass


class NotEnabledInDS(DecisionSetError):
    pass


class TopPresent(DecisionSetError):
    pass


class NoTop(DecisionSetError):
    pass


# the pending-choice marker; None sorts nowhere so entries keep it distinct
TOP = None

# entry: (place id, TOP | sorted tuple of transition ids)
Entry = tuple[int, Optional[tuple[int, ...]]]
DecisionSet = tuple[Entry, ...]


def make_ds(entries: Iterable[Entry]) -> DecisionSet:
    out = tuple(sorted(entries, key=lambda e: e[0]))
    pids = [p for p, _ in out]
    if len(set(pids)) != len(pids):
        raise UnsafeNet("two tokens on one place instance")
    return out


def underlying_marking(d: DecisionSet) -> frozenset[int]:
    return frozenset(p for p, _ in d)


def has_top(d: DecisionSet) -> bool:
    return any(c is TOP for _, c in d)


def env_commitment(game: PTGame, pid: int) -> tuple[int, ...]:
    """Environment tokens allow every transition they are involved in."""
    return tuple(game.place_post[pid])


def check_env_count(game: PTGame, marking: Iterable[int]) -> None:
    envs = [p for p in marking if game.is_env[p]]
    if len(envs) > 1:
        raise MultipleEnvironmentTokens(
            f"{len(envs)} environment tokens: "
            f"{[game.place_name(p) for p in envs]}")


def initial_decision_set(game: PTGame) -> DecisionSet:
    check_env_count(game, game.m0)
    entries: list[Entry] = []
    for pid in game.m0:
        if game.is_env[pid]:
            entries.append((pid, env_commitment(game, pid)))
        else:
            entries.append((pid, TOP))
    return make_ds(entries)


# ---------------------------------------------------------------------------
# firing
# ---------------------------------------------------------------------------

def enabled_ds(game: PTGame, d: DecisionSet, tid: int) -> bool:
    """Enabled iff every pre-place holds a token committing to tid."""
    if has_top(d):
        return False
    committed = {p: c for p, c in d}
    for p in game.pre[tid]:
        c = committed.get(p)
        if c is TOP or c is None or tid not in c:
            return False
    return True


def enabled_transitions(game: PTGame, d: DecisionSet) -> list[int]:
    if has_top(d):
        return []
    marked = underlying_marking(d)
    candidates = set()
    for p, c in d:
        if c:
            candidates.update(c)
    return [t for t in sorted(candidates)
            if all(p in marked for p in game.pre[t]) and
            enabled_ds(game, d, t)]


def fire_ds(game: PTGame, d: DecisionSet, tid: int) -> DecisionSet:
    if has_top(d):
        raise TopPresent("cannot fire while a commitment choice is pending")
    if not enabled_ds(game, d, tid):
        raise NotEnabledInDS(game.trans_name(tid))
    pre = set(game.pre[tid])
    entries = [(p, c) for p, c in d if p not in pre]
    occupied = {p for p, _ in entries}
    for p in game.post[tid]:
        if p in occupied:
            raise UnsafeNet(
                f"firing {game.trans_name(tid)} violates safeness "
                f"on {game.place_name(p)}")
        occupied.add(p)
        if game.is_env[p]:
            entries.append((p, env_commitment(game, p)))
        else:
            entries.append((p, TOP))
    check_env_count(game, occupied)
    return make_ds(entries)


# ---------------------------------------------------------------------------
# commitment-set resolution
# ---------------------------------------------------------------------------

# a commitment family yields, per system token, the commitment sets a
# pending choice may pick from
CommitmentFamily = Callable[[PTGame, int], list[tuple[int, ...]]]


def powerset_commitments(game: PTGame, pid: int) -> list[tuple[int, ...]]:
    post = game.place_post[pid]
    out = []
    for r in range(len(post) + 1):
        out.extend(tuple(sorted(c)) for c in itertools.combinations(post, r))
    return out


def commitment_units(game: PTGame, pid: int) -> list[tuple[int, ...]]:
    """Partition post(p.c) into the units a pending choice ranges over.

    A token that reaches a transition only through broadcast (all) arcs
    cannot distinguish that transition's modes, so those instances form a
    single all-or-nothing unit; instances reached through a variable are
    individually selectable.
    """
    from .hlnet import Var

    hp, ctup = game.place_keys[pid]
    net = game.net
    pname = net.places[hp].name
    units: dict = {}
    for t in game.place_post[pid]:
        ht, mode = game.trans_keys[t]
        trans = net.transitions[ht]
        expr = net.arcs_in.get((pname, trans.name), ())
        var_value = {v: mode[i] for i, (v, _) in enumerate(trans.variables)}
        distinguishable = False
        for tup in expr:
            purely_vars = True
            matches = True
            for term, c in zip(tup, ctup):
                if isinstance(term, Var):
                    if var_value[term.name] != c:
                        matches = False
                else:
                    purely_vars = False
            if matches and purely_vars:
                distinguishable = True
        key = (ht, mode) if distinguishable else (ht, None)
        units.setdefault(key, []).append(t)
    return [tuple(sorted(u)) for _, u in sorted(units.items())]


def unit_commitments(game: PTGame, pid: int) -> list[tuple[int, ...]]:
    """Default family: every nonempty union of commitment units (the empty
    commitment only when the token has no outgoing transitions at all)."""
    units = commitment_units(game, pid)
    out = []
    for r in range(1, len(units) + 1):
        for combo in itertools.combinations(units, r):
            out.append(tuple(sorted(itertools.chain.from_iterable(combo))))
    return out or [()]


def top_successors(game: PTGame, d: DecisionSet,
                   family: Optional[CommitmentFamily] = None,
                   ) -> Iterator[DecisionSet]:
    """All decision sets obtained by resolving every TOP simultaneously."""
    if family is None:
        family = cached_family(unit_commitments)
    top_places = [p for p, c in d if c is TOP]
    if not top_places:
        raise NoTop("no pending choices")
    fixed = [(p, c) for p, c in d if c is not TOP]
    choices = [family(game, p) for p in top_places]
    for combo in itertools.product(*choices):
        yield make_ds(fixed + list(zip(top_places, combo)))


def cached_family(base: CommitmentFamily) -> CommitmentFamily:
    def fn(game: PTGame, pid: int) -> list[tuple[int, ...]]:
        key = (base.__name__, pid)
        hit = game._cache.get(key)
        if hit is None:
            hit = game._cache[key] = base(game, pid)
        return hit
    return fn


# ---------------------------------------------------------------------------
# state properties
# ---------------------------------------------------------------------------

def marking_enabled(game: PTGame, marked: frozenset[int], tid: int) -> bool:
    return all(p in marked for p in game.pre[tid])


def marking_enabled_any(game: PTGame, marked: frozenset[int]) -> bool:
    candidates = set()
    for p in marked:
        candidates.update(game.place_post[p])
    return any(marking_enabled(game, marked, t) for t in candidates)


def conflicting_pairs(game: PTGame, pid: int) -> frozenset[tuple[int, int]]:
    """Pairs in post(p.c) that the one-environment-player restriction can
    never keep from being co-enabled: committing to both is a
    nondeterministic choice the token can never take back."""
    key = ("conflicts", pid)
    hit = game._cache.get(key)
    if hit is not None:
        return hit
    post = game.place_post[pid]
    pairs = set()
    for t1, t2 in itertools.combinations(post, 2):
        union = set(game.pre[t1]) | set(game.pre[t2])
        if sum(1 for p in union if game.is_env[p]) <= 1:
            pairs.add((t1, t2) if t1 < t2 else (t2, t1))
    hit = frozenset(pairs)
    game._cache[key] = hit
    return hit


def commitment_conflict(game: PTGame, d: DecisionSet) -> bool:
    for p, c in d:
        if c is TOP or game.is_env[p] or not c:
            continue
        pairs = conflicting_pairs(game, p)
        if any(pair in pairs for pair in itertools.combinations(c, 2)):
            return True
    return False


def properties_ds(game: PTGame, d: DecisionSet) -> dict[str, bool]:
    """The five state flags of the reduction.

    nondet covers both transitions that are co-enabled right now and
    commitment conflicts (two allowed transitions on one system token
    that some future marking could co-enable)."""
    marked = underlying_marking(d)
    top = has_top(d)
    enabled = [] if top else enabled_transitions(game, d)
    bad = any(game.is_bad[p] for p in marked)
    terminating = not marking_enabled_any(game, marked)
    deadlock = (not top) and (not terminating) and not enabled \
        and marking_enabled_any(game, marked)
    env_dependent = (not top) and all(game.env_pre[t] for t in enabled)
    nondet = commitment_conflict(game, d)
    if not nondet and enabled:
        sys_pre = {t: frozenset(p for p in game.pre[t] if not game.is_env[p])
                   for t in enabled}
        for t1, t2 in itertools.combinations(enabled, 2):
            if sys_pre[t1] & sys_pre[t2]:
                nondet = True
                break
    return {
        "env_dependent": env_dependent,
        "bad": bad,
        "deadlock": deadlock,
        "terminating": terminating,
        "nondet": nondet,
    }


# ---------------------------------------------------------------------------
# symmetry action
# ---------------------------------------------------------------------------

def apply_symmetry_ds(table: tuple[tuple[int, ...], tuple[int, ...]],
                      d: DecisionSet) -> DecisionSet:
    """Apply a (place permutation, transition permutation) pair."""
    pp, tp = table
    return make_ds(
        (pp[p], c if c is TOP else tuple(sorted(tp[t] for t in c)))
        for p, c in d)
