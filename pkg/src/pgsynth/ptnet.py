"""Expanded P/T nets and games.

Place instances p.c and transition instances t.v are interned as dense
integer ids, with pre/post stored as sorted id tuples.  The nets in scope
are safe, so flows are plain sets; safety is re-checked during any state
exploration that consumes markings.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .colors import ColorUniverse, Symmetry, apply_to_tuple
from .hlnet import (HLNet, HLMarking, eval_expression, guard_holds, modes,
                    NetError)


class UnsafeNet(NetError):
    pass


@dataclass(frozen=True)
class PTGame:
    """Expanded Petri game over an HL net with place classification."""

    net: HLNet
    # place instance -> id maps; instance = (hl place index, color tuple)
    place_keys: tuple[tuple[int, tuple[int, ...]], ...]
    trans_keys: tuple[tuple[int, tuple[int, ...]], ...]
    pre: tuple[tuple[int, ...], ...]    # per transition id, sorted place ids
    post: tuple[tuple[int, ...], ...]
    place_post: tuple[tuple[int, ...], ...]  # per place id, transition ids
    place_pre: tuple[tuple[int, ...], ...]
    m0: frozenset[int]
    is_env: tuple[bool, ...]
    is_bad: tuple[bool, ...]
    # transition touches an environment place in its preset
    env_pre: tuple[bool, ...]
    _place_index: dict = field(default_factory=dict, hash=False, repr=False,
                               compare=False)
    _trans_index: dict = field(default_factory=dict, hash=False, repr=False,
                               compare=False)
    _cache: dict = field(default_factory=dict, hash=False, repr=False,
                         compare=False)

    @property
    def universe(self) -> ColorUniverse:
        return self.net.universe

    def place_id(self, key: tuple[int, tuple[int, ...]]) -> int:
        return self._place_index[key]

    def trans_id(self, key: tuple[int, tuple[int, ...]]) -> int:
        return self._trans_index[key]

    def place_name(self, pid: int) -> str:
        hp, ctup = self.place_keys[pid]
        place = self.net.places[hp]
        if not ctup:
            return place.name
        names = [self.universe.color_name(ci, v)
                 for ci, v in zip(place.signature, ctup)]
        return f"{place.name}.{'x'.join(names)}" if len(names) > 1 \
            else f"{place.name}.{names[0]}"

    def trans_name(self, tid: int) -> str:
        ht, mode = self.trans_keys[tid]
        trans = self.net.transitions[ht]
        if not mode:
            return trans.name
        names = [self.universe.color_name(ci, v)
                 for (_, ci), v in zip(trans.variables, mode)]
        return f"{trans.name}.{','.join(names)}"

    def find_place(self, name: str) -> int:
        for pid in range(len(self.place_keys)):
            if self.place_name(pid) == name:
                return pid
        raise KeyError(name)

    def find_trans(self, name: str) -> int:
        for tid in range(len(self.trans_keys)):
            if self.trans_name(tid) == name:
                return tid
        raise KeyError(name)

    # -- symmetry action ----------------------------------------------------

    def symmetry_tables(self, symmetries: list[Symmetry]
                        ) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Per symmetry: (place id permutation, transition id permutation)."""
        tables = []
        for s in symmetries:
            pp = tuple(
                self._place_index[(hp, apply_to_tuple(
                    s, self.net.places[hp].signature, ctup))]
                for hp, ctup in self.place_keys)
            tp = tuple(
                self._trans_index[(ht, apply_to_tuple(
                    s, tuple(ci for _, ci in
                             self.net.transitions[ht].variables), mode))]
                for ht, mode in self.trans_keys)
            tables.append((pp, tp))
        return tables

    # -- firing on safe markings ---------------------------------------------

    def enabled_marking(self, m: frozenset[int], tid: int) -> bool:
        return all(p in m for p in self.pre[tid])

    def fire_marking(self, m: frozenset[int], tid: int) -> frozenset[int]:
        out = set(m)
        out.difference_update(self.pre[tid])
        for p in self.post[tid]:
            if p in out:
                raise UnsafeNet(
                    f"firing {self.trans_name(tid)} puts a second token "
                    f"on {self.place_name(p)}")
            out.add(p)
        return frozenset(out)


def expand_game(net: HLNet, m0: HLMarking, env_places: Iterable[str],
                bad_places: Iterable[str] = ()) -> PTGame:
    """Expand an HL net into a P/T game, lifting the place classification."""
    env_set, bad_set = set(env_places), set(bad_places)
    unknown = (env_set | bad_set) - {p.name for p in net.places}
    if unknown:
        raise NetError(f"unknown places in classification: {sorted(unknown)}")
    if env_set & bad_set:
        raise NetError("bad places must be system places")
    universe = net.universe

    place_keys: list[tuple[int, tuple[int, ...]]] = []
    for hp, place in enumerate(net.places):
        ranges = [range(universe.classes[ci].size) for ci in place.signature]
        for ctup in itertools.product(*ranges):
            place_keys.append((hp, ctup))
    place_index = {key: i for i, key in enumerate(place_keys)}

    trans_keys: list[tuple[int, tuple[int, ...]]] = []
    pre_sets: list[tuple[int, ...]] = []
    post_sets: list[tuple[int, ...]] = []
    for ht, trans in enumerate(net.transitions):
        for mode in modes(net, trans):
            if not guard_holds(net, trans, trans.guard, mode):
                continue
            pre_places: Counter = Counter()
            post_places: Counter = Counter()
            for (pname, tname), expr in net.arcs_in.items():
                if tname != trans.name:
                    continue
                hp = next(i for i, p in enumerate(net.places)
                          if p.name == pname)
                for tok, k in eval_expression(net, trans, expr, mode).items():
                    pre_places[place_index[(hp, tok)]] += k
            for (tname, pname), expr in net.arcs_out.items():
                if tname != trans.name:
                    continue
                hp = next(i for i, p in enumerate(net.places)
                          if p.name == pname)
                for tok, k in eval_expression(net, trans, expr, mode).items():
                    post_places[place_index[(hp, tok)]] += k
            if any(k > 1 for k in pre_places.values()) or \
               any(k > 1 for k in post_places.values()):
                raise UnsafeNet(
                    f"arc weight > 1 on instance {trans.name}.{mode}")
            trans_keys.append((ht, tuple(mode)))
            pre_sets.append(tuple(sorted(pre_places)))
            post_sets.append(tuple(sorted(post_places)))

    place_post = [[] for _ in place_keys]
    place_pre = [[] for _ in place_keys]
    for tid, (ps, qs) in enumerate(zip(pre_sets, post_sets)):
        for p in ps:
            place_post[p].append(tid)
        for q in qs:
            place_pre[q].append(tid)

    m0_ids: set[int] = set()
    for pname, tokens in m0.items():
        hp = next(i for i, p in enumerate(net.places) if p.name == pname)
        for tok, k in tokens.items():
            if k > 1:
                raise UnsafeNet(f"initial marking not safe on {pname}")
            if k == 1:
                m0_ids.add(place_index[(hp, tuple(tok))])

    is_env = tuple(net.places[hp].name in env_set for hp, _ in place_keys)
    is_bad = tuple(net.places[hp].name in bad_set for hp, _ in place_keys)
    env_pre = tuple(any(is_env[p] for p in ps) for ps in pre_sets)

    game = PTGame(
        net=net,
        place_keys=tuple(place_keys),
        trans_keys=tuple(trans_keys),
        pre=tuple(pre_sets),
        post=tuple(post_sets),
        place_post=tuple(tuple(x) for x in place_post),
        place_pre=tuple(tuple(x) for x in place_pre),
        m0=frozenset(m0_ids),
        is_env=is_env,
        is_bad=is_bad,
        env_pre=env_pre,
    )
    game._place_index.update(place_index)
    game._trans_index.update(
        {key: i for i, key in enumerate(trans_keys)})
    return game
