"""Two-player Buchi game construction and solving.

Build modes:
  explicit    nodes are decision sets of the expanded game
  membership  nodes are first-seen orbit representatives; a new state is
              identified by applying symmetries until a known node matches
  canonical   nodes are canonical representations keyed by their encoding

The edge rules are shared: nodes that are bad, a deadlock, terminating or
nondeterministic keep only a self-loop; pending commitment choices are
resolved before anything fires; system-only firings preempt environment
steps, which happen only from environment-dependent nodes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import decisions as ds
from .decisions import DecisionSet, cached_family, unit_commitments
from .ptnet import PTGame


class BuildError(RuntimeError):
    pass


class BoundExceeded(BuildError):
    pass


class NonTotalGame(ValueError):
    pass


TOP_EDGE = -1  # edge label for commitment resolutions
SELF_EDGE = -2  # edge label for the sink self-loops


@dataclass
class BuildStats:
    model: str = ""
    approach: str = ""
    num_nodes: int = 0
    num_edges: int = 0
    num_accepting: int = 0
    num_symmetries: int = 1
    comparisons: int = 0
    orderings_enumerated: int = 0
    max_orderings_per_node: int = 0
    build_ms: float = 0.0
    solve_ms: float = 0.0
    realizable: Optional[bool] = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


@dataclass
class BuchiGame:
    """V0/V1 graph with labeled edges and Buchi acceptance."""

    num_nodes: int
    in_v1: list[bool]
    accepting: list[bool]
    # per node: list of (label, target); label is a transition id of the
    # underlying game, TOP_EDGE or SELF_EDGE
    edges: list[list[tuple[int, int]]]
    initial: int
    # per node, the reason it was closed off, if any
    sink_kind: list[Optional[str]]
    node_keys: list = field(default_factory=list)

    def successor_count(self) -> int:
        return sum(len(e) for e in self.edges)

    def relation_edge_count(self) -> int:
        """Edges excluding the synthetic sink self-loops (the published
        state-space sizes count only relation edges)."""
        return sum(1 for es in self.edges for lab, _ in es
                   if lab != SELF_EDGE)


SINK_FLAGS = ("bad", "deadlock", "terminating", "nondet")


def classify(props: dict[str, bool]) -> Optional[str]:
    for k in SINK_FLAGS:
        if props[k]:
            return k
    return None


def is_accepting(props: dict[str, bool]) -> bool:
    return ((props["terminating"] or props["env_dependent"])
            and not props["deadlock"] and not props["nondet"]
            and not props["bad"])


def _successors(game: PTGame, d: DecisionSet,
                family) -> tuple[bool, list[tuple[int, DecisionSet]]]:
    """(is_v1, [(label, successor)]) for a non-sink node."""
    if ds.has_top(d):
        return False, [(TOP_EDGE, d2)
                       for d2 in ds.top_successors(game, d, family)]
    enabled = ds.enabled_transitions(game, d)
    sys_only = [t for t in enabled if not game.env_pre[t]]
    if sys_only:
        return False, [(t, ds.fire_ds(game, d, t)) for t in sys_only]
    return True, [(t, ds.fire_ds(game, d, t)) for t in enabled]


def build_explicit(game: PTGame,
                   family=None,
                   max_nodes: int = 5_000_000,
                   key_of: Optional[Callable[[DecisionSet], object]] = None,
                   stats: Optional[BuildStats] = None,
                   ) -> BuchiGame:
    """BFS construction of the explicit game (identity on decision sets,
    or quotiented through key_of when given)."""
    t0 = time.perf_counter()
    if family is None:
        family = cached_family(unit_commitments)
    d0 = ds.initial_decision_set(game)
    k0 = key_of(d0) if key_of else d0
    index: dict = {k0: 0}
    reps: list[DecisionSet] = [d0]
    in_v1: list[bool] = []
    accepting: list[bool] = []
    edges: list[list[tuple[int, int]]] = []
    sink_kind: list[Optional[str]] = []
    frontier = [0]
    while frontier:
        nxt = []
        for node in frontier:
            d = reps[node]
            props = ds.properties_ds(game, d)
            while len(in_v1) <= node:
                in_v1.append(False)
                accepting.append(False)
                edges.append([])
                sink_kind.append(None)
            accepting[node] = is_accepting(props)
            kind = classify(props)
            if kind is not None:
                sink_kind[node] = kind
                in_v1[node] = False
                edges[node] = [(SELF_EDGE, node)]
                continue
            v1, succs = _successors(game, d, family)
            in_v1[node] = v1
            if not succs:
                raise BuildError(
                    "node with no sink kind and no successors; "
                    "model violates the construction assumptions")
            for label, d2 in succs:
                k2 = key_of(d2) if key_of else d2
                tgt = index.get(k2)
                if tgt is None:
                    tgt = len(reps)
                    if tgt >= max_nodes:
                        raise BoundExceeded(f"more than {max_nodes} nodes")
                    index[k2] = tgt
                    reps.append(d2)
                    nxt.append(tgt)
                edges[node].append((label, tgt))
        frontier = nxt
    game_out = BuchiGame(
        num_nodes=len(reps),
        in_v1=in_v1,
        accepting=accepting,
        edges=edges,
        initial=0,
        sink_kind=sink_kind,
        node_keys=reps,
    )
    if stats is not None:
        stats.num_nodes = game_out.num_nodes
        stats.num_edges = game_out.relation_edge_count()
        stats.num_accepting = sum(accepting)
        stats.build_ms = (time.perf_counter() - t0) * 1000.0
    return game_out


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

@dataclass
class SolveResult:
    winning: set[int]
    strategy: dict[int, int]  # chosen successor for player-0 winning nodes
    realizable: bool


def solve_buchi(game: BuchiGame) -> SolveResult:
    """Classical Buchi fixpoint: repeatedly restrict to the player-0
    attractor of the accepting set until stable."""
    n = game.num_nodes
    preds: list[list[int]] = [[] for _ in range(n)]
    out_deg = [0] * n
    for u in range(n):
        if not game.edges[u]:
            raise NonTotalGame(f"node {u} has no successor")
        for _, v in game.edges[u]:
            preds[v].append(u)
            out_deg[u] += 1

    alive = [True] * n

    def attractor(targets: list[bool]) -> list[bool]:
        # player-0 attractor within the alive subgame
        attr = [targets[u] and alive[u] for u in range(n)]
        deg = [0] * n
        for u in range(n):
            if alive[u]:
                deg[u] = sum(1 for _, v in game.edges[u] if alive[v])
        work = [u for u in range(n) if attr[u]]
        while work:
            v = work.pop()
            for u in preds[v]:
                if not alive[u] or attr[u]:
                    continue
                if not game.in_v1[u]:
                    attr[u] = True
                    work.append(u)
                else:
                    deg[u] -= 1
                    if deg[u] == 0:
                        attr[u] = True
                        work.append(u)
        return attr

    while True:
        recur = attractor(game.accepting)
        # player-0 nodes outside the attractor of accepting states, and
        # player-1 nodes that can leave it, are removed together with
        # everything player 1 can steer into them
        losing = [alive[u] and not recur[u] for u in range(n)]
        if not any(losing):
            break
        # attractor for player 1 of the losing set
        attr1 = losing[:]
        deg = [0] * n
        for u in range(n):
            if alive[u]:
                deg[u] = sum(1 for _, v in game.edges[u] if alive[v])
        work = [u for u in range(n) if attr1[u]]
        while work:
            v = work.pop()
            for u in preds[v]:
                if not alive[u] or attr1[u]:
                    continue
                if game.in_v1[u]:
                    attr1[u] = True
                    work.append(u)
                else:
                    deg[u] -= 1
                    if deg[u] == 0:
                        attr1[u] = True
                        work.append(u)
        changed = False
        for u in range(n):
            if alive[u] and attr1[u]:
                alive[u] = False
                changed = True
        if not changed:
            break

    winning = {u for u in range(n) if alive[u]}

    # memoryless strategy: follow the attractor toward the accepting set
    # (rank strictly decreases along the chosen move), and from accepting
    # nodes re-enter the attractor through any winning successor
    strategy: dict[int, int] = {}
    if winning:
        rank = {u: 0 for u in winning if game.accepting[u]}
        witness: dict[int, int] = {}
        deg = {u: sum(1 for _, v in game.edges[u] if alive[v])
               for u in winning}
        work = sorted(rank)
        while work:
            v = work.pop(0)
            for u in preds[v]:
                if u not in winning or u in rank:
                    continue
                if not game.in_v1[u]:
                    rank[u] = rank[v] + 1
                    witness[u] = v
                    work.append(u)
                else:
                    deg[u] -= 1
                    if deg[u] == 0:
                        rank[u] = max(rank[w] for _, w in game.edges[u]
                                      if alive[w]) + 1
                        work.append(u)
        for u in winning:
            if game.in_v1[u]:
                continue
            if game.accepting[u]:
                succ = [v for _, v in game.edges[u] if v in winning]
                if not succ:
                    raise BuildError(f"no winning move at node {u}")
                strategy[u] = min(succ, key=lambda v: rank.get(v, 1 << 60))
            else:
                if u not in witness:
                    raise BuildError(f"no winning move recorded at node {u}")
                strategy[u] = witness[u]
    return SolveResult(winning=winning, strategy=strategy,
                       realizable=game.initial in winning)


# ---------------------------------------------------------------------------
# membership mode: first-seen orbit representatives
# ---------------------------------------------------------------------------

def build_membership(game: PTGame, symmetries=None, family=None,
                     max_nodes: int = 5_000_000,
                     stats: Optional[BuildStats] = None) -> BuchiGame:
    """Reduced game built by comparing each new state against the known
    representatives under every symmetry."""
    from .colors import enumerate_symmetries

    t0 = time.perf_counter()
    if symmetries is None:
        symmetries = enumerate_symmetries(game.universe)
    tables = game.symmetry_tables(symmetries)
    if family is None:
        family = ds.cached_family(ds.unit_commitments)
    comparisons = 0

    index: dict = {}
    reps: list[DecisionSet] = []

    def node_of(d: DecisionSet) -> tuple[int, bool]:
        nonlocal comparisons
        for table in tables:
            comparisons += 1
            hit = index.get(ds.apply_symmetry_ds(table, d))
            if hit is not None:
                return hit, False
        node = len(reps)
        index[d] = node
        reps.append(d)
        return node, True

    d0 = ds.initial_decision_set(game)
    node_of(d0)
    in_v1, accepting, edges, sink_kind = [], [], [], []
    frontier = [0]
    while frontier:
        nxt = []
        for node in frontier:
            d = reps[node]
            props = ds.properties_ds(game, d)
            while len(in_v1) <= node:
                in_v1.append(False)
                accepting.append(False)
                edges.append([])
                sink_kind.append(None)
            accepting[node] = is_accepting(props)
            in_v1[node] = props["env_dependent"]
            kind = classify(props)
            if kind is not None:
                sink_kind[node] = kind
                in_v1[node] = False
                edges[node] = [(SELF_EDGE, node)]
                continue
            v1, succs = _successors(game, d, family)
            in_v1[node] = v1
            stab = [t for t in tables
                    if ds.apply_symmetry_ds(t, d) == d]
            seen_here = set()
            for label, d2 in succs:
                if len(reps) >= max_nodes:
                    raise BoundExceeded(f"more than {max_nodes} nodes")
                tgt, fresh = node_of(d2)
                if fresh:
                    nxt.append(tgt)
                key = (label, tgt)
                if label >= 0 and len(stab) > 1:
                    key = (min(tp[label] for _, tp in stab), tgt)
                if key not in seen_here:
                    seen_here.add(key)
                    edges[node].append((key[0], tgt))
        frontier = nxt
    out = BuchiGame(num_nodes=len(reps), in_v1=in_v1, accepting=accepting,
                    edges=edges, initial=0, sink_kind=sink_kind,
                    node_keys=reps)
    if stats is not None:
        stats.num_nodes = out.num_nodes
        stats.num_edges = out.relation_edge_count()
        stats.num_accepting = sum(accepting)
        stats.num_symmetries = len(symmetries)
        stats.comparisons = comparisons
        stats.build_ms = (time.perf_counter() - t0) * 1000.0
    return out


# ---------------------------------------------------------------------------
# canonical mode: encoding-keyed canonical representations
# ---------------------------------------------------------------------------

def build_canonical(game: PTGame, max_nodes: int = 5_000_000,
                    stats: Optional[BuildStats] = None) -> BuchiGame:
    from . import canonical as cn

    t0 = time.perf_counter()
    ostats = cn.OrderingStats()
    comparisons = 0

    rep0, enc0 = cn.canon_of(game, ds.initial_decision_set(game), ostats)
    index = {enc0: 0}
    reps = [rep0]
    in_v1, accepting, edges, sink_kind = [], [], [], []
    frontier = [0]
    while frontier:
        nxt = []
        for node in frontier:
            rep = reps[node]
            props = cn.properties_rep(game, rep)
            while len(in_v1) <= node:
                in_v1.append(False)
                accepting.append(False)
                edges.append([])
                sink_kind.append(None)
            accepting[node] = is_accepting(props)
            in_v1[node] = props["env_dependent"]
            kind = classify(props)
            if kind is not None:
                sink_kind[node] = kind
                in_v1[node] = False
                edges[node] = [(SELF_EDGE, node)]
                continue
            has_top = any(dec is ds.TOP for _, _, dec in rep.entries)
            if has_top:
                succs = [(TOP_EDGE, enc, r) for enc, r in
                         cn.symbolic_top_successors(game, rep, ostats)]
                in_v1[node] = False
            else:
                fired = cn.symbolic_transition_successors(game, rep, ostats)
                auts = cn.automorphisms(game, rep)
                if len(auts) > 1:
                    folded = {}
                    for inst, enc, r in fired:
                        key = (cn.fold_instance(game, auts, inst), enc)
                        folded.setdefault(key, (key[0], enc, r))
                    fired = sorted(folded.values(),
                                   key=lambda x: (x[0], x[1]))
                sys_only = [
                    (inst, enc, r) for inst, enc, r in fired
                    if not _symbolic_instance_env(game, rep, inst)]
                chosen = sys_only or fired
                in_v1[node] = not sys_only
                succs = [(inst, enc, r) for inst, enc, r in chosen]
            if not succs:
                raise BuildError(
                    "node with no sink kind and no successors; "
                    "model violates the construction assumptions")
            for label, enc, rep2 in succs:
                comparisons += 1
                tgt = index.get(enc)
                if tgt is None:
                    tgt = len(reps)
                    if tgt >= max_nodes:
                        raise BoundExceeded(f"more than {max_nodes} nodes")
                    index[enc] = tgt
                    reps.append(rep2)
                    nxt.append(tgt)
                edges[node].append((label, tgt))
        frontier = nxt
    out = BuchiGame(num_nodes=len(reps), in_v1=in_v1, accepting=accepting,
                    edges=edges, initial=0, sink_kind=sink_kind,
                    node_keys=reps)
    if stats is not None:
        stats.num_nodes = out.num_nodes
        stats.num_edges = out.relation_edge_count()
        stats.num_accepting = sum(accepting)
        stats.num_symmetries = game.universe.num_symmetries()
        stats.comparisons = comparisons + ostats.orderings
        stats.orderings_enumerated = ostats.orderings
        stats.max_orderings_per_node = ostats.max_per_node
        stats.build_ms = (time.perf_counter() - t0) * 1000.0
    return out


def _symbolic_instance_env(game: PTGame, rep, inst) -> bool:
    from . import canonical as cn
    ht, zmode = inst
    refined, plain_mode, _ = cn.split_for_mode(game, rep, ht, zmode)
    return cn._instance_env_pre(game, ht, plain_mode, refined.subclasses)


def build_game(game: PTGame, approach: str = "canonical",
               symmetries=None, family=None, max_nodes: int = 5_000_000,
               stats: Optional[BuildStats] = None) -> BuchiGame:
    if approach == "explicit":
        out = build_explicit(game, family=family, max_nodes=max_nodes,
                             stats=stats)
        if stats is not None:
            stats.num_symmetries = game.universe.num_symmetries()
        return out
    if approach == "membership":
        return build_membership(game, symmetries=symmetries, family=family,
                                max_nodes=max_nodes, stats=stats)
    if approach == "canonical":
        return build_canonical(game, max_nodes=max_nodes, stats=stats)
    raise ValueError(f"unknown approach {approach!r}")


# ---------------------------------------------------------------------------
# quotient comparison between explicit and canonical builds
# ---------------------------------------------------------------------------

@dataclass
class QuotientReport:
    ok: bool
    orbit_count: int
    canonical_count: int
    detail: str = ""


def quotient_check(game: PTGame, explicit: BuchiGame, canonical: BuchiGame,
                   symmetries) -> QuotientReport:
    """Verify that the orbit quotient of the explicit game is isomorphic to
    the canonical game: same orbit count, matching canonical labels per
    node, matching flags, and matching label-multiplicities per edge."""
    from . import canonical as cn

    tables = game.symmetry_tables(symmetries)
    node_of = {d: i for i, d in enumerate(explicit.node_keys)}
    orbit = [-1] * explicit.num_nodes
    orbits = []
    for i, d in enumerate(explicit.node_keys):
        if orbit[i] >= 0:
            continue
        members = set()
        for table in tables:
            j = node_of.get(ds.apply_symmetry_ds(table, d))
            if j is not None:
                members.add(j)
        oid = len(orbits)
        orbits.append(sorted(members))
        for j in members:
            orbit[j] = oid
    if len(orbits) != canonical.num_nodes:
        return QuotientReport(False, len(orbits), canonical.num_nodes,
                              "orbit count differs from canonical node count")

    # map each orbit to the canonical node with the same encoding
    enc_index = {cn.encode(rep): i
                 for i, rep in enumerate(canonical.node_keys)}
    orbit_to_canon = []
    for oid, members in enumerate(orbits):
        _, enc = cn.canon_of(game, explicit.node_keys[members[0]])
        tgt = enc_index.get(enc)
        if tgt is None:
            return QuotientReport(False, len(orbits), canonical.num_nodes,
                                  f"orbit {oid} has no canonical twin")
        orbit_to_canon.append(tgt)
        for m in members[1:]:
            _, enc2 = cn.canon_of(game, explicit.node_keys[m])
            if enc2 != enc:
                return QuotientReport(
                    False, len(orbits), canonical.num_nodes,
                    f"orbit {oid} members disagree on the canonical form")
    if sorted(orbit_to_canon) != list(range(canonical.num_nodes)):
        return QuotientReport(False, len(orbits), canonical.num_nodes,
                              "orbit-to-canonical map is not a bijection")

    for oid, members in enumerate(orbits):
        cnode = orbit_to_canon[oid]
        u0 = members[0]
        if explicit.sink_kind[u0] != canonical.sink_kind[cnode] or \
           explicit.accepting[u0] != canonical.accepting[cnode] or \
           explicit.in_v1[u0] != canonical.in_v1[cnode]:
            return QuotientReport(False, len(orbits), canonical.num_nodes,
                                  f"flags differ at orbit {oid}")

    # fold the explicit edges by the symmetry action; the number of edge
    # orbits between two node orbits must match the number of canonical
    # edges between their canonical twins (Theorem 2 at graph level)
    edge_orbits: set = set()
    for u in range(explicit.num_nodes):
        for lab, v in explicit.edges[u]:
            if lab == SELF_EDGE:
                continue
            images = []
            for pp, tp in tables:
                lu = node_of.get(ds.apply_symmetry_ds(
                    (pp, tp), explicit.node_keys[u]))
                lv = node_of.get(ds.apply_symmetry_ds(
                    (pp, tp), explicit.node_keys[v]))
                if lu is None or lv is None:
                    continue
                llab = lab if lab == TOP_EDGE else tp[lab]
                images.append((lu, llab, lv))
            edge_orbits.add(min(images))
    qcounts: dict[tuple[int, int, bool], int] = {}
    for u, lab, v in edge_orbits:
        key = (orbit_to_canon[orbit[u]], orbit_to_canon[orbit[v]],
               lab == TOP_EDGE)
        qcounts[key] = qcounts.get(key, 0) + 1
    ccounts: dict[tuple[int, int, bool], int] = {}
    for u in range(canonical.num_nodes):
        for lab, v in canonical.edges[u]:
            if lab == SELF_EDGE:
                continue
            key = (u, v, lab == TOP_EDGE)
            ccounts[key] = ccounts.get(key, 0) + 1
    if qcounts != ccounts:
        diff = {k: (qcounts.get(k), ccounts.get(k))
                for k in set(qcounts) | set(ccounts)
                if qcounts.get(k) != ccounts.get(k)}
        first = sorted(diff.items())[0]
        return QuotientReport(
            False, len(orbits), canonical.num_nodes,
            f"edge-orbit counts differ, first at {first[0]}: "
            f"quotient={first[1][0]} canonical={first[1][1]}")
    return QuotientReport(True, len(orbits), canonical.num_nodes)
