"""Cubical-cell geometry of Z^d restricted to finite boxes.

Sites, oriented edges/faces/cubes, boundary and coboundary incidence.
Everything here is pure combinatorics with a fixed orientation
convention: a positive k-cell based at x with strictly increasing
directions (i1 < ... < ik) carries the orientation of the ordered
tuple, and the induced boundary orientation follows the alternating
cubical rule

    bd(x; i1..ik) = sum_a (-1)^(a-1) [ (x+e_{ia}; ia dropped) - (x; ia dropped) ].

Directions are 1-based in the public API (f12 is the face spanned by
e1, e2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "LatticeBox",
    "OrientedCell",
    "enumerate_cells",
    "cell_boundary",
    "cofaces",
    "component_tuples",
]


@lru_cache(maxsize=None)
def component_tuples(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing k-tuples from {1..d}, lexicographically ordered."""
    return tuple(combinations(range(1, d + 1), k))


@lru_cache(maxsize=None)
def component_index(d: int, k: int) -> dict:
    return {dirs: i for i, dirs in enumerate(component_tuples(d, k))}


@dataclass(frozen=True)
class LatticeBox:
    """Finite box Lambda_L = {-L, ..., L}^d.

    A site is *boundary* if some nearest neighbour lies outside the box,
    otherwise *interior*.
    """

    dimension: int
    half_side: int

    def __post_init__(self):
        if self.dimension < 3:
            raise ValueError(f"dimension must be >= 3, got {self.dimension}")
        if self.half_side < 0:
            raise ValueError(f"half_side must be >= 0, got {self.half_side}")

    @property
    def side(self) -> int:
        return 2 * self.half_side + 1

    @property
    def n_sites(self) -> int:
        return self.side ** self.dimension

    def n_cells(self, degree: int) -> int:
        return self.n_sites * len(component_tuples(self.dimension, degree))

    def contains_site(self, site: Sequence[int]) -> bool:
        L = self.half_side
        return all(-L <= c <= L for c in site)

    def is_interior(self, site: Sequence[int]) -> bool:
        L = self.half_side
        return all(-L < c < L for c in site)

    def is_boundary(self, site: Sequence[int]) -> bool:
        return self.contains_site(site) and not self.is_interior(site)

    def site_index(self, site: Sequence[int]) -> int:
        """Row-major index of a site, first coordinate slowest."""
        L, S = self.half_side, self.side
        idx = 0
        for c in site:
            if not -L <= c <= L:
                raise IndexError(f"site {tuple(site)} outside box L={L}")
            idx = idx * S + (c + L)
        return idx

    def site_from_index(self, idx: int) -> tuple[int, ...]:
        L, S = self.half_side, self.side
        out = []
        for _ in range(self.dimension):
            out.append(idx % S - L)
            idx //= S
        return tuple(reversed(out))

    def sites(self) -> Iterator[tuple[int, ...]]:
        """All sites in row-major (lexicographic) order."""
        for idx in range(self.n_sites):
            yield self.site_from_index(idx)

    def site_array(self) -> np.ndarray:
        """(n_sites, d) int array of all sites in canonical order."""
        L = self.half_side
        grids = np.meshgrid(*[np.arange(-L, L + 1)] * self.dimension, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class OrientedCell:
    """Oriented k-cell: base site, increasing direction tuple, sign.

    Reversing ``sign`` models orientation reversal; a 0-cell has an
    empty direction tuple.
    """

    degree: int
    base: tuple[int, ...]
    directions: tuple[int, ...]
    sign: int = 1

    def __post_init__(self):
        if self.degree != len(self.directions):
            raise ValueError("degree must match number of directions")
        if list(self.directions) != sorted(set(self.directions)):
            raise ValueError(f"directions must be strictly increasing, got {self.directions}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def reversed(self) -> "OrientedCell":
        return OrientedCell(self.degree, self.base, self.directions, -self.sign)

    def translated(self, shift: Sequence[int]) -> "OrientedCell":
        base = tuple(b + s for b, s in zip(self.base, shift))
        return OrientedCell(self.degree, base, self.directions, self.sign)

    def key(self) -> tuple:
        """Geometric identity, forgetting the sign."""
        return (self.degree, self.base, self.directions)

    def corners(self) -> list[tuple[int, ...]]:
        """All 2^k corner sites of the closed cell."""
        out = []
        for mask in range(1 << self.degree):
            c = list(self.base)
            for a, i in enumerate(self.directions):
                if mask >> a & 1:
                    c[i - 1] += 1
            out.append(tuple(c))
        return out


def enumerate_cells(box: LatticeBox, degree: int) -> list[OrientedCell]:
    """All positively oriented k-cells with base site in the box.

    Deterministic order: site-major (row-major lexicographic over sites),
    then lexicographic over direction tuples.
    """
    if degree not in (0, 1, 2, 3) or degree > box.dimension:
        raise ValueError(f"degree must be in 0..3 and <= dimension, got {degree}")
    comps = component_tuples(box.dimension, degree)
    return [
        OrientedCell(degree, site, dirs)
        for site in box.sites()
        for dirs in comps
    ]


def cell_boundary(cell: OrientedCell) -> list[OrientedCell]:
    """Oriented boundary of a k-cell (2k cells of degree k-1).

    Signs follow the alternating cubical rule, so boundary-of-boundary
    cancels pairwise.
    """
    if cell.degree < 1:
        raise ValueError("0-cells have no boundary")
    out = []
    for a, i in enumerate(cell.directions):
        rest = cell.directions[:a] + cell.directions[a + 1:]
        s = cell.sign * (1 if a % 2 == 0 else -1)
        upper = tuple(b + (1 if j == i - 1 else 0) for j, b in enumerate(cell.base))
        out.append(OrientedCell(cell.degree - 1, upper, rest, s))
        out.append(OrientedCell(cell.degree - 1, cell.base, rest, -s))
    return out


def cofaces(edge: OrientedCell) -> list[tuple[OrientedCell, int]]:
    """Faces incident to an edge with the edge's incidence sign in their boundary.

    In dimension d exactly 2(d-1) faces are returned. ``incidence_sign``
    is the orientation the (positively oriented) face induces on the edge,
    so f appears here with sign s iff the edge appears in cell_boundary(f)
    with sign s.
    """
    if edge.degree != 1:
        raise ValueError("cofaces is defined for edges only")
    d = len(edge.base)
    (i,) = edge.directions
    out = []
    for j in range(1, d + 1):
        if j == i:
            continue
        dirs = (i, j) if i < j else (j, i)
        below = tuple(b - (1 if a == j - 1 else 0) for a, b in enumerate(edge.base))
        if j > i:
            # face (x; i,j) holds edge (x; i) with +, face (x-e_j; i,j) with -
            out.append((OrientedCell(2, edge.base, dirs), edge.sign))
            out.append((OrientedCell(2, below, dirs), -edge.sign))
        else:
            # face (x-e_j; j,i) holds edge (x; i) with +, face (x; j,i) with -
            out.append((OrientedCell(2, below, dirs), edge.sign))
            out.append((OrientedCell(2, edge.base, dirs), -edge.sign))
    return out
