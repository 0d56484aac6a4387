"""Direct generation of a Petri-game strategy from a Buchi-game strategy.

The winning strategy is unfolded into a tree (the unique chosen move at
player-0 nodes, every move at player-1 nodes).  Walking the tree in
breadth-first order, each tree node carries the set of strategy cuts it
is associated with; commitment resolutions keep the cuts, system firings
extend every cut by one transition, environment firings branch over all
matching instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import canonical as cn
from . import decisions as ds
from .buchi import BuchiGame, SELF_EDGE, TOP_EDGE, SolveResult
from .game import OccurrenceNet
from .ptnet import PTGame


class SynthesisError(RuntimeError):
    pass


class NotWinning(SynthesisError):
    pass


class LimitExceeded(SynthesisError):
    pass


class AssignmentMismatch(SynthesisError):
    """Internal consistency failure between symbolic and concrete level."""


@dataclass(frozen=True)
class SynthesisLimits:
    max_depth: int = 10_000
    max_nodes: int = 1_000_000
    lasso_policy: str = "stop"  # "stop" | "unroll"
    unroll_depth: int = 3


@dataclass
class TreeNode:
    game_node: int
    parent: Optional[int]
    edge_label: object  # TOP_EDGE or a symbolic instance
    depth: int
    children: list[int] = field(default_factory=list)
    lasso_to: Optional[int] = None


@dataclass
class StrategyTree:
    nodes: list[TreeNode]
    root: int = 0


def unfold_strategy_tree(game: BuchiGame, result: SolveResult,
                         limits: SynthesisLimits = SynthesisLimits(),
                         ) -> StrategyTree:
    """Breadth-first unfolding of the memoryless strategy into a tree."""
    if not result.realizable:
        raise NotWinning("player 0 does not win from the initial node")
    nodes = [TreeNode(game.initial, None, None, 0)]
    frontier = [0]
    while frontier:
        nxt = []
        for r in frontier:
            tn = nodes[r]
            v = tn.game_node
            if game.sink_kind[v] is not None:
                continue  # closed-off node; the branch ends here
            if tn.depth >= limits.max_depth:
                raise LimitExceeded("tree depth limit")
            # lasso detection along the branch
            seen_on_branch = set()
            a = tn.parent
            while a is not None:
                seen_on_branch.add(nodes[a].game_node)
                a = nodes[a].parent
            if game.in_v1[v]:
                moves = [(lab, w) for lab, w in game.edges[v]
                         if lab != SELF_EDGE and w in result.winning]
            else:
                target = result.strategy[v]
                moves = [next((lab, w) for lab, w in game.edges[v]
                              if w == target and lab != SELF_EDGE)]
            for lab, w in moves:
                if w in seen_on_branch or w == v:
                    if limits.lasso_policy == "stop":
                        child = TreeNode(w, r, lab, tn.depth + 1,
                                         lasso_to=w)
                        nodes.append(child)
                        tn.children.append(len(nodes) - 1)
                        continue
                child = TreeNode(w, r, lab, tn.depth + 1)
                nodes.append(child)
                if len(nodes) > limits.max_nodes:
                    raise LimitExceeded("tree size limit")
                tn.children.append(len(nodes) - 1)
                nxt.append(len(nodes) - 1)
        frontier = nxt
    return StrategyTree(nodes=nodes)


@dataclass
class CutRecord:
    cut: frozenset[int]
    decision: ds.DecisionSet


@dataclass
class SynthesisOutcome:
    net: OccurrenceNet
    cuts_per_tree_node: dict[int, list[CutRecord]]
    complete: bool  # False when a lasso was truncated


def generate_strategy(tree: StrategyTree, game: PTGame, buchi: BuchiGame,
                      ) -> SynthesisOutcome:
    """Emit the occurrence-net strategy for a tree over the canonical
    game, tracking for every tree node the strategy cuts realizing it."""
    net = OccurrenceNet()
    occurrence_count: dict[str, int] = {}

    def fresh_place(label: int, pre_trans: Optional[int]) -> int:
        base = game.place_name(label)
        occurrence_count[base] = occurrence_count.get(base, 0) + 1
        return net.add_place(label, f"{base}#{occurrence_count[base]}",
                             pre_trans)

    place_of: dict[int, int] = {}
    for pid in sorted(game.m0):
        place_of[pid] = fresh_place(pid, None)
    root_cut = frozenset(place_of.values())
    d0 = ds.initial_decision_set(game)
    cuts: dict[int, list[CutRecord]] = {
        tree.root: [CutRecord(root_cut, d0)]}
    complete = True

    order = sorted(range(len(tree.nodes)),
                   key=lambda r: tree.nodes[r].depth)
    for r in order:
        tn = tree.nodes[r]
        if tn.lasso_to is not None:
            complete = False
            continue
        if r not in cuts:
            continue
        records = cuts[r]
        for child_idx in tn.children:
            child = tree.nodes[child_idx]
            label = child.edge_label
            out_records = cuts.setdefault(child_idx, [])
            if label == TOP_EDGE:
                rep2 = buchi.node_keys[child.game_node]
                for rec in records:
                    d2 = _matching_resolution(game, rec.decision, rep2)
                    out_records.append(CutRecord(rec.cut, d2))
                continue
            target_enc = cn.encode(buchi.node_keys[child.game_node])
            for rec in records:
                fired = _matching_firings(game, rec.decision, target_enc)
                if not fired:
                    raise AssignmentMismatch(
                        "no concrete firing matches a strategy edge")
                if not buchi.in_v1[tn.game_node]:
                    fired = fired[:1]
                for tid, d2 in fired:
                    preset = []
                    for p in game.pre[tid]:
                        sp = _place_in_cut(net, rec.cut, p)
                        preset.append(sp)
                    base = game.trans_name(tid)
                    occurrence_count[base] = occurrence_count.get(base,
                                                                  0) + 1
                    st = net.add_transition(
                        tid, f"{base}#{occurrence_count[base]}",
                        tuple(preset))
                    postset = []
                    for p in game.post[tid]:
                        postset.append(fresh_place(p, st))
                    net.set_post(st, tuple(postset))
                    new_cut = frozenset(
                        (rec.cut - set(preset)) | set(postset))
                    out_records.append(CutRecord(new_cut, d2))
    # deduplicate cut records per node (environment branches can meet)
    for r, records in cuts.items():
        seen = set()
        uniq = []
        for rec in records:
            key = (rec.cut, rec.decision)
            if key not in seen:
                seen.add(key)
                uniq.append(rec)
        cuts[r] = uniq
    return SynthesisOutcome(net=net, cuts_per_tree_node=cuts,
                            complete=complete)


def _place_in_cut(net: OccurrenceNet, cut: frozenset[int],
                  label: int) -> int:
    for p in cut:
        if net.place_label[p] == label:
            return p
    raise AssignmentMismatch(
        f"cut lacks a place labeled {label}")


def _matching_resolution(game: PTGame, d: ds.DecisionSet,
                         rep2) -> ds.DecisionSet:
    """The commitment resolution of d whose orbit is the child node."""
    target_marking = ds.underlying_marking(d)
    for va in cn.assignments(game, rep2):
        cand = cn.realize(game, rep2, va)
        if ds.underlying_marking(cand) != target_marking:
            continue
        if _is_resolution_of(game, d, cand):
            return cand
    raise AssignmentMismatch("no resolution realizes the chosen node")


def _is_resolution_of(game: PTGame, d: ds.DecisionSet,
                      cand: ds.DecisionSet) -> bool:
    cd = dict(cand)
    for p, c in d:
        if p not in cd:
            return False
        if c is not ds.TOP and cd[p] != c:
            return False
    return True


def _matching_firings(game: PTGame, d: ds.DecisionSet, target_enc: str,
                      ) -> list[tuple[int, ds.DecisionSet]]:
    out = []
    for tid in ds.enabled_transitions(game, d):
        d2 = ds.fire_ds(game, d, tid)
        if cn.canon_of(game, d2)[1] == target_enc:
            out.append((tid, d2))
    return out
