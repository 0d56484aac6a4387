"""Color universes and their permutation symmetries.

A universe is an ordered list of finite color classes.  Each class is
partitioned into contiguous *static subclasses*; a symmetry is a tuple of
per-class permutations that map every static subclass onto itself.  Colors
are referred to by (class index, color index) so that permutations are
plain index arrays and application is O(1) per component.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class UniverseMismatch(ValueError):
    """Two values over different color universes were combined."""


@dataclass(frozen=True)
class ColorClass:
    name: str
    colors: tuple[str, ...]
    # static subclasses as sizes of contiguous index ranges, e.g. (2, 2)
    # partitions a 4-color class into {0,1} and {2,3}
    subclass_sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.colors:
            raise ValueError(f"color class {self.name!r} is empty")
        if len(set(self.colors)) != len(self.colors):
            raise ValueError(f"duplicate color names in class {self.name!r}")
        if not self.subclass_sizes or any(s <= 0 for s in self.subclass_sizes):
            raise ValueError(f"empty static subclass in class {self.name!r}")
        if sum(self.subclass_sizes) != len(self.colors):
            raise ValueError(
                f"static subclasses of {self.name!r} do not cover the class")

    @property
    def size(self) -> int:
        return len(self.colors)

    def subclass_ranges(self) -> list[range]:
        ranges, start = [], 0
        for s in self.subclass_sizes:
            ranges.append(range(start, start + s))
            start += s
        return ranges

    def subclass_of(self, color_index: int) -> int:
        """Static-subclass index q of a color."""
        start = 0
        for q, s in enumerate(self.subclass_sizes):
            if color_index < start + s:
                return q
            start += s
        raise IndexError(color_index)


@dataclass(frozen=True)
class ColorUniverse:
    classes: tuple[ColorClass, ...]

    def __post_init__(self):
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate color class names")

    def class_index(self, name: str) -> int:
        for i, c in enumerate(self.classes):
            if c.name == name:
                return i
        raise KeyError(name)

    def color_name(self, class_index: int, color_index: int) -> str:
        return self.classes[class_index].colors[color_index]

    def num_symmetries(self) -> int:
        n = 1
        for c in self.classes:
            for s in c.subclass_sizes:
                n *= _factorial(s)
        return n


def _factorial(n: int) -> int:
    r = 1
    for k in range(2, n + 1):
        r *= k
    return r


@dataclass(frozen=True)
class Symmetry:
    """One permutation per class, stored as index tuples (i -> perm[i])."""

    universe: ColorUniverse
    perms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for cls, perm in zip(self.universe.classes, self.perms):
            if sorted(perm) != list(range(cls.size)):
                raise ValueError(f"not a permutation of class {cls.name!r}")
            for rng in cls.subclass_ranges():
                if any(perm[i] not in rng for i in rng):
                    raise ValueError(
                        f"permutation does not preserve a static subclass "
                        f"of {cls.name!r}")

    def apply_color(self, class_index: int, color_index: int) -> int:
        return self.perms[class_index][color_index]

    def is_identity(self) -> bool:
        return all(perm[i] == i for perm in self.perms
                   for i in range(len(perm)))


def identity(universe: ColorUniverse) -> Symmetry:
    return Symmetry(universe,
                    tuple(tuple(range(c.size)) for c in universe.classes))


def compose(s1: Symmetry, s2: Symmetry) -> Symmetry:
    """compose(s1, s2) applies s2 first, then s1."""
    if s1.universe is not s2.universe and s1.universe != s2.universe:
        raise UniverseMismatch("symmetries over different universes")
    perms = tuple(
        tuple(p1[p2[i]] for i in range(len(p1)))
        for p1, p2 in zip(s1.perms, s2.perms))
    return Symmetry(s1.universe, perms)


def invert(s: Symmetry) -> Symmetry:
    perms = []
    for perm in s.perms:
        inv = [0] * len(perm)
        for i, j in enumerate(perm):
            inv[j] = i
        perms.append(tuple(inv))
    return Symmetry(s.universe, tuple(perms))


def _subclass_respecting_perms(cls: ColorClass) -> Iterator[tuple[int, ...]]:
    """All permutations of one class mapping each static subclass to itself."""
    per_range = [itertools.permutations(rng) for rng in cls.subclass_ranges()]
    for combo in itertools.product(*per_range):
        perm = tuple(itertools.chain.from_iterable(combo))
        yield perm


def enumerate_symmetries(universe: ColorUniverse) -> list[Symmetry]:
    """The full group, of size prod_i prod_q |C_{i,q}|!."""
    per_class = [list(_subclass_respecting_perms(c)) for c in universe.classes]
    return [Symmetry(universe, combo)
            for combo in itertools.product(*per_class)]


def apply_to_tuple(s: Symmetry, class_signature: Sequence[int],
                   color_tuple: Sequence[int]) -> tuple[int, ...]:
    """Apply a symmetry componentwise to an index tuple.

    class_signature gives the class index of each component.
    """
    return tuple(s.perms[ci][v]
                 for ci, v in zip(class_signature, color_tuple))
