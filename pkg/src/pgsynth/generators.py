"""Built-in Client/Server benchmark family.

One environment player picks one of n computers to host a server; the
computers may connect blindly or wait to be informed of the decision.
The informed flow broadcasts the decision to every computer, which can
then connect to the chosen host so the final host transition fires; a
stray pair on the connection place can only move to the bad place.
"""

from __future__ import annotations

from collections import Counter

from .colors import ColorClass, ColorUniverse
from .game import HLGame
from .hlnet import All, HLNet, HLPlace, HLTransition, TRUE, Var


def cs_universe(n: int) -> ColorUniverse:
    if n < 1:
        raise ValueError("need at least one computer")
    return ColorUniverse((
        ColorClass("C1", tuple(f"c{i + 1}" for i in range(n)), (n,)),
        ColorClass("C2", ("dot",), (1,)),
    ))


def generate_cs(n: int) -> HLGame:
    """The Client/Server game with n computers (symmetry group size n!)."""
    u = cs_universe(n)
    c1, c2 = 0, 1
    x, y = Var("x"), Var("y")
    net = HLNet(
        universe=u,
        places=(
            HLPlace("Env", (c2,)),
            HLPlace("Sys", (c1,)),
            HLPlace("I", (c1,)),
            HLPlace("R", (c1,)),
            HLPlace("A", (c1, c1)),
            HLPlace("B", (c1, c1)),
            HLPlace("H", (c1,)),
        ),
        transitions=(
            HLTransition("d", (("x", c1),), TRUE),
            HLTransition("inf", (("x", c1),), TRUE),
            HLTransition("a", (("y", c1), ("x", c1)), TRUE),
            HLTransition("b", (("y", c1), ("x", c1)), TRUE),
            HLTransition("h", (("x", c1),), TRUE),
        ),
        arcs_in={
            ("Env", "d"): ((All("C2"),),),
            ("I", "inf"): ((x,),),
            ("Sys", "inf"): ((All("C1"),),),
            ("Sys", "a"): ((y,),),
            ("A", "b"): ((y, x),),
            ("A", "h"): ((All("C1"), x),),
            ("R", "h"): ((x,),),
        },
        arcs_out={
            ("d", "I"): ((x,),),
            ("inf", "R"): ((x,),),
            ("inf", "Sys"): ((All("C1"),),),
            ("a", "A"): ((y, x),),
            ("b", "B"): ((y, x),),
            ("h", "H"): ((x,),),
        },
    )
    m0 = {
        "Env": Counter({(0,): 1}),
        "Sys": Counter({(i,): 1 for i in range(n)}),
    }
    return HLGame(net=net, m0=m0, env_places=("Env", "I", "R"),
                  bad_places=("B",))
