"""DOT exports for game graphs and strategies."""

from __future__ import annotations

from .buchi import BuchiGame, SELF_EDGE, TOP_EDGE
from .game import OccurrenceNet
from .ptnet import PTGame


def _esc(s: str) -> str:
    return s.replace('"', '\\"')


def game_dot(bg: BuchiGame, game: PTGame, max_nodes: int = 5000) -> str:
    """Player-0 nodes as boxes, player-1 as diamonds, accepting nodes
    double-bordered; edge labels are the commitment-resolution marker or
    instance names."""
    lines = ["digraph buchi {", "  rankdir=TB;"]
    n = min(bg.num_nodes, max_nodes)
    for u in range(n):
        shape = "diamond" if bg.in_v1[u] else "box"
        extra = ", peripheries=2" if bg.accepting[u] else ""
        tag = f"\\n{bg.sink_kind[u]}" if bg.sink_kind[u] else ""
        if u == bg.initial:
            extra += ", style=bold"
        lines.append(f'  n{u} [shape={shape}{extra}, '
                     f'label="{u}{tag}"];')
    for u in range(n):
        for lab, v in bg.edges[u]:
            if v >= n:
                continue
            if lab == SELF_EDGE:
                text = ""
            elif lab == TOP_EDGE:
                text = "T"
            elif isinstance(lab, tuple):
                ht, zmode = lab
                text = game.net.transitions[ht].name + "." + ",".join(
                    f"{j}:{k}" for j, k in zmode)
            else:
                text = game.trans_name(lab)
            lines.append(f'  n{u} -> n{v} [label="{_esc(text)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def strategy_dot(net: OccurrenceNet, game: PTGame) -> str:
    """System places gray, environment places white, bad places
    double-bordered; transitions as squares."""
    lines = ["digraph strategy {", "  rankdir=TB;"]
    for p in range(net.num_places()):
        label = net.place_label[p]
        fill = "white" if game.is_env[label] else "lightgray"
        peri = ", peripheries=2" if game.is_bad[label] else ""
        lines.append(
            f'  p{p} [shape=circle, style=filled, fillcolor={fill}{peri}, '
            f'label="{_esc(game.place_name(label))}"];')
    for t in range(net.num_transitions()):
        lines.append(
            f'  t{t} [shape=box, label='
            f'"{_esc(game.trans_name(net.trans_label[t]))}"];')
        for p in net.pre[t]:
            lines.append(f"  p{p} -> t{t};")
        for p in net.post[t]:
            lines.append(f"  t{t} -> p{p};")
    lines.append("}")
    return "\n".join(lines) + "\n"
