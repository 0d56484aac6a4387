"""Petri games and occurrence-net machinery.

A game classifies the places of a high-level net into system and
environment places with a designated set of bad (system) places.  A
strategy for the system players is an occurrence net labeled into the
expanded game; this module provides the causal relations, reachable cuts,
and the four-condition strategy validator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .colors import enumerate_symmetries
from .hlnet import HLMarking, HLNet, NetError, validate_net
from .ptnet import PTGame, expand_game as _expand


class OccurrenceNetError(ValueError):
    pass


class CyclicFlow(OccurrenceNetError):
    pass


class BoundExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class HLGame:
    net: HLNet
    m0: HLMarking
    env_places: tuple[str, ...]
    bad_places: tuple[str, ...]

    def __post_init__(self):
        names = {p.name for p in self.net.places}
        if not set(self.env_places) <= names or \
                not set(self.bad_places) <= names:
            raise NetError("classification names unknown places")
        if set(self.bad_places) & set(self.env_places):
            raise NetError("bad places must be system places")

    def system_places(self) -> list[str]:
        return [p.name for p in self.net.places
                if p.name not in self.env_places]

    def validate(self) -> None:
        validate_net(self.net, self.m0,
                     enumerate_symmetries(self.net.universe))


def expand_game(game: HLGame) -> PTGame:
    return _expand(game.net, game.m0, game.env_places, game.bad_places)


# ---------------------------------------------------------------------------
# occurrence nets
# ---------------------------------------------------------------------------

@dataclass
class OccurrenceNet:
    """Places and transitions are integer ids; labels map into a PTGame.

    place_label[i] / trans_label[i] give the game place/transition ids;
    flow arcs have multiplicity one.
    """

    place_label: list[int] = field(default_factory=list)
    trans_label: list[int] = field(default_factory=list)
    pre: list[tuple[int, ...]] = field(default_factory=list)
    post: list[tuple[int, ...]] = field(default_factory=list)
    place_pre: list[tuple[int, ...]] = field(default_factory=list)
    place_post: list[list[int]] = field(default_factory=list)
    place_name: list[str] = field(default_factory=list)
    trans_name: list[str] = field(default_factory=list)
    # branch back-references recorded when unrolling stopped at a lasso
    lassos: list[tuple[int, int]] = field(default_factory=list)

    def add_place(self, label: int, name: str,
                  pre_trans: Optional[int]) -> int:
        pid = len(self.place_label)
        self.place_label.append(label)
        self.place_name.append(name)
        self.place_pre.append((pre_trans,) if pre_trans is not None else ())
        self.place_post.append([])
        return pid

    def add_transition(self, label: int, name: str,
                       preset: tuple[int, ...]) -> int:
        tid = len(self.trans_label)
        self.trans_label.append(label)
        self.trans_name.append(name)
        self.pre.append(tuple(sorted(preset)))
        self.post.append(())
        for p in preset:
            self.place_post[p].append(tid)
        return tid

    def set_post(self, tid: int, postset: tuple[int, ...]) -> None:
        self.post[tid] = tuple(sorted(postset))

    def initial_places(self) -> frozenset[int]:
        return frozenset(p for p in range(len(self.place_label))
                         if not self.place_pre[p])

    def num_places(self) -> int:
        return len(self.place_label)

    def num_transitions(self) -> int:
        return len(self.trans_label)


@dataclass
class CausalRelations:
    leq: list[set[int]]      # node -> causal successors (reflexive)
    conflict: set[tuple[int, int]]
    num_places: int

    def node(self, kind: str, i: int) -> int:
        return i if kind == "p" else self.num_places + i

    def causally_related(self, x: int, y: int) -> bool:
        return y in self.leq[x] or x in self.leq[y]

    def in_conflict(self, x: int, y: int) -> bool:
        return (min(x, y), max(x, y)) in self.conflict

    def concurrent(self, x: int, y: int) -> bool:
        return x != y and not self.causally_related(x, y) \
            and not self.in_conflict(x, y)


def causal_analysis(net: OccurrenceNet) -> CausalRelations:
    """Reflexive-transitive causal order, conflict, and concurrency."""
    np_, nt = net.num_places(), net.num_transitions()
    n = np_ + nt
    succ: list[list[int]] = [[] for _ in range(n)]
    for t in range(nt):
        for p in net.pre[t]:
            succ[p].append(np_ + t)
        for p in net.post[t]:
            succ[np_ + t].append(p)
    order = _topological(succ)
    if order is None:
        raise CyclicFlow("occurrence net has a causal cycle")
    leq: list[set[int]] = [set() for _ in range(n)]
    for x in reversed(order):
        leq[x].add(x)
        for y in succ[x]:
            leq[x] |= leq[y]
    conflict: set[tuple[int, int]] = set()
    for p in range(np_):
        outs = net.place_post[p]
        for t1, t2 in itertools.combinations(outs, 2):
            for x in leq[np_ + t1]:
                for y in leq[np_ + t2]:
                    if x != y:
                        conflict.add((min(x, y), max(x, y)))
                    else:
                        conflict.add((x, x))  # self-conflict marker
    return CausalRelations(leq=leq, conflict=conflict, num_places=np_)


def _topological(succ) -> Optional[list[int]]:
    n = len(succ)
    indeg = [0] * n
    for x in range(n):
        for y in succ[x]:
            indeg[y] += 1
    stack = [x for x in range(n) if indeg[x] == 0]
    order = []
    while stack:
        x = stack.pop()
        order.append(x)
        for y in succ[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                stack.append(y)
    return order if len(order) == n else None


def check_occurrence_net(net: OccurrenceNet, game: PTGame) -> None:
    """Branching-process conditions for a labeled occurrence net."""
    for p in range(net.num_places()):
        if len(net.place_pre[p]) > 1:
            raise OccurrenceNetError(
                f"place {net.place_name[p]} has two producing transitions")
    rel = causal_analysis(net)
    for t in range(net.num_transitions()):
        node = rel.node("t", t)
        if (node, node) in rel.conflict:
            raise OccurrenceNetError(
                f"transition {net.trans_name[t]} is in self-conflict")
    for t in range(net.num_transitions()):
        expect_pre = tuple(sorted(game.pre[net.trans_label[t]]))
        got_pre = tuple(sorted(net.place_label[p] for p in net.pre[t]))
        expect_post = tuple(sorted(game.post[net.trans_label[t]]))
        got_post = tuple(sorted(net.place_label[p] for p in net.post[t]))
        if expect_pre != got_pre or expect_post != got_post:
            raise OccurrenceNetError(
                f"labeling is not a homomorphism at {net.trans_name[t]}")
    init_labels = sorted(net.place_label[p] for p in net.initial_places())
    if init_labels != sorted(game.m0):
        raise OccurrenceNetError("initial marking labels do not match")
    by_preset: dict = {}
    for t in range(net.num_transitions()):
        key = (net.pre[t], net.trans_label[t])
        if key in by_preset:
            raise OccurrenceNetError(
                "two equally labeled transitions share a preset")
        by_preset[key] = t


def reachable_cuts(net: OccurrenceNet,
                   bound: int = 1_000_000) -> set[frozenset[int]]:
    """All markings reachable from the initial places."""
    m0 = net.initial_places()
    seen = {m0}
    frontier = [m0]
    while frontier:
        cut = frontier.pop()
        for t in range(net.num_transitions()):
            if not all(p in cut for p in net.pre[t]):
                continue
            nxt = frozenset((cut - set(net.pre[t])) | set(net.post[t]))
            if nxt not in seen:
                if len(seen) >= bound:
                    raise BoundExceeded(f"more than {bound} cuts")
                seen.add(nxt)
                frontier.append(nxt)
    return seen


# ---------------------------------------------------------------------------
# strategy validation
# ---------------------------------------------------------------------------

@dataclass
class StrategyReport:
    justified_refusal: bool
    deterministic: bool
    deadlock_free: bool
    winning: bool
    detail: str = ""

    @property
    def valid(self) -> bool:
        return (self.justified_refusal and self.deterministic
                and self.deadlock_free and self.winning)


def validate_strategy(net: OccurrenceNet, game: PTGame,
                      cut_bound: int = 1_000_000) -> StrategyReport:
    """Check justified refusal, determinism, deadlock freedom and
    winning on the reachable cuts of a strategy prefix."""
    cuts = reachable_cuts(net, cut_bound)
    detail = []
    jr = det = df = True

    # per strategy place, the game transitions occurring in its postset
    place_post_labels = [
        {net.trans_label[t] for t in net.place_post[p]}
        for p in range(net.num_places())]

    for cut in cuts:
        labels = [net.place_label[p] for p in cut]
        label_set = set(labels)
        enabled_game = set()
        for p in label_set:
            for t in game.place_post[p]:
                if all(q in label_set for q in game.pre[t]):
                    enabled_game.add(t)
        enabled_strat = [t for t in range(net.num_transitions())
                         if all(p in cut for p in net.pre[t])]
        enabled_strat_labels = {net.trans_label[t] for t in enabled_strat}

        if enabled_game and not enabled_strat and df:
            df = False
            detail.append(f"deadlock at cut {sorted(cut)}")

        for t in enabled_game - enabled_strat_labels:
            # some system place in the preset must refuse this label
            # uniformly (no occurrence anywhere in its postset)
            ok = False
            for p in cut:
                if net.place_label[p] in game.pre[t] and \
                        not game.is_env[net.place_label[p]] and \
                        t not in place_post_labels[p]:
                    ok = True
                    break
            if not ok and jr:
                jr = False
                detail.append(
                    f"refusal of {game.trans_name(t)} at cut "
                    f"{sorted(cut)} is not justified")

        for p in cut:
            if game.is_env[net.place_label[p]]:
                continue
            mine = [t for t in enabled_strat if p in net.pre[t]]
            if len(mine) > 1 and det:
                det = False
                detail.append(
                    f"system place {net.place_name[p]} allows "
                    f"{len(mine)} enabled transitions at a cut")

    winning = not any(game.is_bad[net.place_label[p]]
                      for p in range(net.num_places()))
    if not winning:
        detail.append("a bad place occurs in the strategy")
    return StrategyReport(justified_refusal=jr, deterministic=det,
                          deadlock_free=df, winning=winning,
                          detail="; ".join(detail))
