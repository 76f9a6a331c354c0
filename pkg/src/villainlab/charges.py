"""Charge ensembles: closed, integer, connected-support 2-forms.

A charge is an integer-valued 2-form q with dq = 0 and finite connected
support (two faces are connected when their Euclidean distance as point
sets is <= 1).  Each charge carries an anchor vertex z_q (the
lexicographically smallest corner of its support), a Poincare primitive
n_q (an integer 1-form with d n_q = q supported in the bounding box
Lambda(q) of the support, with ||n_q||_inf <= ||q||_1), and truncated
cluster-expansion activities

    z(beta, q) = sum_{n<=n_max} (1/n!) sum_{q_1+...+q_n=q}
                 I(G(supp q_1, ..., supp q_n)) exp(-(1/2) sqrt(beta) sum_i (q_i, q_i)),

where the decomposition charges are drawn from the enumerated pool
restricted to Lambda(q), I(G) is the Mayer coefficient of the connection
graph (sum over connected spanning subgraphs H of (-1)^{|E(H)|}; zero for
a disconnected graph), and the n = 1 term is exp(-(1/2) sqrt(beta) (q, q)).

Enumeration grows connected face sets from each anchor face by completing
cubes that currently touch the set in a single face (a closed form can
never leave a cube with exactly one supported face), then solves the
integer kernel of the cube-incidence matrix on each saturated set.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import exp, gcd, sqrt

import numpy as np

from .forms import Form, zeros
from .lattice import LatticeBox, component_tuples

__all__ = [
    "Charge",
    "ChargePool",
    "ResourceLimitError",
    "NotClosedError",
    "enumerate_charges",
    "poincare_primitive",
    "mayer_coefficient",
    "activity",
    "activity_terms",
    "weighted_charge_sum",
    "face_distance_sq",
    "charge_from_sparse",
    "save_pool",
    "load_pool",
    "POINCARE_SUP_CONSTANT",
    "DIAMETER_CONSTANT",
]

# ||n_q||_inf <= POINCARE_SUP_CONSTANT * ||q||_1 for the deterministic
# construction below (partial fiber sums of q never exceed sum |q|).
POINCARE_SUP_CONSTANT = 1
# diam q <= DIAMETER_CONSTANT * ||q||_1 for connected supports.
DIAMETER_CONSTANT = 2


class ResourceLimitError(RuntimeError):
    """Enumeration or decomposition search exceeded its configured budget."""

    def __init__(self, message, partial_count=None):
        super().__init__(message)
        self.partial_count = partial_count


class NotClosedError(ValueError):
    """A 2-form that was required to be closed is not."""


# ---------------------------------------------------------------------------
# sparse faces: key = (base site tuple, (i, j)) with 1-based i < j
# ---------------------------------------------------------------------------

def _face_intervals(face_key):
    site, dirs = face_key
    return tuple((c, c + 1) if (a + 1) in dirs else (c, c) for a, c in enumerate(site))


def face_distance_sq(f, g) -> int:
    """Squared Euclidean distance between two closed unit faces of Z^d."""
    total = 0
    for (a1, b1), (a2, b2) in zip(_face_intervals(f), _face_intervals(g)):
        gap = max(0, a2 - b1, a1 - b2)
        total += gap * gap
    return total


def faces_adjacent(f, g) -> bool:
    return face_distance_sq(f, g) <= 1


def _support_connected(faces) -> bool:
    faces = list(faces)
    if not faces:
        return False
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(len(faces)):
            if j not in seen and faces_adjacent(faces[i], faces[j]):
                seen.add(j)
                stack.append(j)
    return len(seen) == len(faces)


def _face_cubes(face_key, d):
    """The 3-cells having this face on their boundary: (cube base, dirs)."""
    site, (i, j) = face_key
    out = []
    for k in range(1, d + 1):
        if k in (i, j):
            continue
        dirs = tuple(sorted((i, j, k)))
        out.append((site, dirs))
        below = tuple(c - (1 if a + 1 == k else 0) for a, c in enumerate(site))
        out.append((below, dirs))
    return out


def _cube_faces(cube_key):
    """Boundary faces of a cube with incidence signs: [(face key, sign)]."""
    site, dirs = cube_key
    out = []
    for a, i in enumerate(dirs):
        rest = dirs[:a] + dirs[a + 1:]
        s = 1 if a % 2 == 0 else -1
        upper = tuple(c + (1 if b + 1 == i else 0) for b, c in enumerate(site))
        out.append(((upper, rest), s))
        out.append(((site, rest), -s))
    return out


def sparse_d(q: dict, d: int) -> dict:
    """Exterior derivative of a sparse 2-form, as a sparse 3-form."""
    out = {}
    for fk, val in q.items():
        if val == 0:
            continue
        for ck in _face_cubes(fk, d):
            s = next(sgn for f, sgn in _cube_faces(ck) if f == fk)
            out[ck] = out.get(ck, 0) + s * val
    return {k: v for k, v in out.items() if v != 0}


def sparse_d_edges(n: dict, d: int) -> dict:
    """Exterior derivative of a sparse 1-form (keys (site, (i,))) as sparse 2-form."""
    touched = set()
    for (site, (i,)) in n:
        for j in range(1, d + 1):
            if j == i:
                continue
            dirs = (i, j) if i < j else (j, i)
            below = tuple(c - (1 if a + 1 == j else 0) for a, c in enumerate(site))
            touched.add((site, dirs))
            touched.add((below, dirs))
    out = {}
    for fk in touched:
        site, (i, j) = fk
        e_i = lambda s: (s, (i,))
        e_j = lambda s: (s, (j,))
        up_i = tuple(c + (1 if a + 1 == i else 0) for a, c in enumerate(site))
        up_j = tuple(c + (1 if a + 1 == j else 0) for a, c in enumerate(site))
        val = (n.get(e_i(site), 0) + n.get(e_j(up_i), 0)
               - n.get(e_i(up_j), 0) - n.get(e_j(site), 0))
        if val != 0:
            out[fk] = val
    return out


def _bounding_box(faces):
    """Lambda(q): per-coordinate closed vertex ranges [a_c, b_c]."""
    its = [_face_intervals(f) for f in faces]
    d = len(its[0])
    lo = [min(iv[c][0] for iv in its) for c in range(d)]
    hi = [max(iv[c][1] for iv in its) for c in range(d)]
    return lo, hi


def _anchor(faces):
    """Lexicographically minimal corner of the support (= minimal base site)."""
    return min(site for site, _ in faces)


# ---------------------------------------------------------------------------
# Charge and pool
# ---------------------------------------------------------------------------

@dataclass
class Charge:
    """A closed integer 2-form with anchor, primitive, and activity cache."""

    d: int
    q: dict                          # face key -> int
    anchor: tuple
    primitive: dict                  # edge key -> int, d(primitive) = q
    l1: int
    q_sq: int                        # (q, q)
    diameter: int
    _activities: dict = field(default_factory=dict, repr=False)

    @property
    def support(self) -> frozenset:
        return frozenset(self.q)

    def bounding_box(self):
        return _bounding_box(list(self.q))

    def sparse_key(self) -> frozenset:
        return frozenset(self.q.items())

    def negated(self) -> "Charge":
        return Charge(self.d, {k: -v for k, v in self.q.items()}, self.anchor,
                      {k: -v for k, v in self.primitive.items()},
                      self.l1, self.q_sq, self.diameter)

    def as_form(self, box: LatticeBox) -> Form:
        f = zeros(box, 2, dtype=np.int64)
        idx = {dirs: i for i, dirs in enumerate(component_tuples(self.d, 2))}
        for (site, dirs), val in self.q.items():
            f.values[box.site_index(site), idx[dirs]] = val
        return f

    def primitive_as_form(self, box: LatticeBox) -> Form:
        f = zeros(box, 1, dtype=np.int64)
        for (site, (i,)), val in self.primitive.items():
            f.values[box.site_index(site), i - 1] = val
        return f


def charge_from_sparse(d: int, q: dict) -> Charge:
    """Build a Charge (with primitive and invariant fields) from a sparse 2-form."""
    q = {k: int(v) for k, v in q.items() if v != 0}
    if not q:
        raise ValueError("empty charge")
    if sparse_d(q, d):
        raise NotClosedError("dq != 0")
    if not _support_connected(list(q)):
        raise ValueError("support is not connected")
    n = poincare_primitive(q, d)
    lo, hi = _bounding_box(list(q))
    diam = max(h - l for l, h in zip(lo, hi))
    l1 = sum(abs(v) for v in q.values())
    return Charge(d, q, _anchor(list(q)), n, l1, sum(v * v for v in q.values()), diam)


# ---------------------------------------------------------------------------
# Poincare primitive: deterministic staircase integration
# ---------------------------------------------------------------------------

def poincare_primitive(q: dict, d: int) -> dict:
    """Integer 1-form n with d n = q, supp n inside Lambda(q), ||n||_inf <= ||q||_1.

    Construction: integrate the (k=d)-components of q along direction d from
    the top of the bounding box,

        n_i(x) = sum_{s = x_d}^{b_d} q_{(i,d)}(x_1, ..., s)        (i < d),

    restricted to x_d > a_d, and absorb the full fiber sums on the bottom
    layer into the d-edges via the potential u of the curl-free field
    F_i(x') = -sum_s q_{(i,d)}(x', s):

        n_d(x', a_d) = -u(x'),  u(x') = -sum_{t >= x'_j} F_j  (j = d-1).

    Raises NotClosedError when dq != 0 (the telescoping identities used
    above are exactly the closedness relations).
    """
    q = {k: v for k, v in q.items() if v != 0}
    if not q:
        return {}
    if sparse_d(q, d):
        raise NotClosedError("dq != 0")
    lo, hi = _bounding_box(list(q))
    a_k, b_k = lo[d - 1], hi[d - 1]

    n = {}
    # columns of q_{(i,d)} indexed by the non-d coordinates and i
    cols = {}
    for (site, dirs), val in q.items():
        if dirs[1] != d:
            continue
        i = dirs[0]
        key = (site[: d - 1], i)
        cols.setdefault(key, {})[site[d - 1]] = val
    # n_i by partial sums from the top
    for (x_rest, i), col in cols.items():
        running = 0
        for s in range(b_k, a_k, -1):
            running += col.get(s, 0)
            if running != 0:
                n[(x_rest + (s,), (i,))] = running
    # full fiber sums F_i(x') = -sum_s q_{(i,d)}(x', s)
    fibers = {}
    for (x_rest, i), col in cols.items():
        tot = -sum(col.values())
        if tot != 0:
            fibers[(x_rest, i)] = tot
    if fibers:
        # u(x') = -sum_{t >= x'_j} F_j(..., t, ...) along j = d-1
        j = d - 1
        ucols = {}
        for (x_rest, i), val in fibers.items():
            if i != j:
                continue
            key = x_rest[: j - 1] + x_rest[j:]
            ucols.setdefault(key, {})[x_rest[j - 1]] = val
        lo_j, hi_j = lo[j - 1], hi[j - 1]
        for key, col in ucols.items():
            running = 0
            for t in range(hi_j, lo_j - 1, -1):
                running -= col.get(t, 0)
                if running != 0:
                    x_rest = key[: j - 1] + (t,) + key[j - 1:]
                    n[(x_rest + (a_k,), (d,))] = -running
    n = {k: v for k, v in n.items() if v != 0}
    # the construction is self-verifying; fail loudly rather than subtly
    check = sparse_d_edges(n, d)
    if check != q:
        raise AssertionError("primitive construction failed to satisfy dn = q")
    return n


# ---------------------------------------------------------------------------
# enumeration: cube-completion growth + integer kernels
# ---------------------------------------------------------------------------

def _face_in_box(face_key, box: LatticeBox) -> bool:
    site, _ = face_key
    return box.contains_site(site)


def _integer_nullspace(rows, ncols):
    """Primitive integer basis of the nullspace of an integer matrix.

    Fraction-free enough for the tiny systems that occur here (<= ~8
    columns); returns a list of integer tuples, each with content 1, in
    reduced column-echelon layout so coefficient enumeration is bounded.
    """
    m = [[Fraction(v) for v in row] for row in rows]
    nrows = len(m)
    pivot_of_col = {}
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = m[r][c]
        m[r] = [v / inv for v in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivot_of_col[c] = r
        r += 1
        if r == nrows:
            break
    free_cols = [c for c in range(ncols) if c not in pivot_of_col]
    basis = []
    for fc in free_cols:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for pc, pr in pivot_of_col.items():
            vec[pc] = -m[pr][fc]
        den = 1
        for v in vec:
            den = den * v.denominator // gcd(den, v.denominator)
        ints = [int(v * den) for v in vec]
        g = 0
        for v in ints:
            g = gcd(g, abs(v))
        basis.append(tuple(v // g for v in ints))
    return basis


def _assignments_for_support(faces, l1_cap):
    """All integer closed forms with support exactly ``faces`` and l1 <= cap."""
    faces = sorted(faces)
    cube_rows = {}
    for fi, fk in enumerate(faces):
        for ck in _face_cubes(fk, len(fk[0])):
            cube_rows.setdefault(ck, [0] * len(faces))
    for ck, row in cube_rows.items():
        signed = dict(_cube_faces(ck))
        for fi, fk in enumerate(faces):
            if fk in signed:
                row[fi] = signed[fk]
    basis = _integer_nullspace(list(cube_rows.values()), len(faces))
    if not basis:
        return []
    out = []
    rng = range(-l1_cap, l1_cap + 1)
    for coeffs in product(rng, repeat=len(basis)):
        if all(c == 0 for c in coeffs):
            continue
        vals = [sum(c * b[i] for c, b in zip(coeffs, basis)) for i in range(len(faces))]
        if any(v == 0 for v in vals):
            continue
        if sum(abs(v) for v in vals) > l1_cap:
            continue
        out.append(dict(zip(faces, vals)))
    # one support can be hit by several coefficient vectors only if they
    # give different value patterns, so no dedup is needed here
    return out


def enumerate_charges(box: LatticeBox, l1_cap: int, *, max_faces: int | None = None,
                      budget: int = 5_000_000) -> list[Charge]:
    """All charges with support in the box and ||q||_1 <= l1_cap.

    Both q and -q are returned.  Deterministic order: by (anchor face,
    support, values).  Raises ResourceLimitError with a partial count when
    the state budget is exhausted.
    """
    if l1_cap < 1:
        raise ValueError("l1_cap must be >= 1")
    d = box.dimension
    if max_faces is None:
        max_faces = l1_cap
    max_faces = min(max_faces, l1_cap)

    comps = component_tuples(d, 2)
    all_faces = [(site, dirs) for site in box.sites() for dirs in comps]
    face_rank = {f: i for i, f in enumerate(all_faces)}

    results = []
    seen_supports = set()
    states = 0

    def record_support(faces):
        key = frozenset(faces)
        if key in seen_supports:
            return
        seen_supports.add(key)
        if not _support_connected(list(faces)):
            return
        for q in _assignments_for_support(faces, l1_cap):
            results.append(q)

    def deficient_cube(S):
        counts = {}
        for fk in S:
            for ck in _face_cubes(fk, d):
                counts[ck] = counts.get(ck, 0) + 1
        bad = [ck for ck, cnt in counts.items() if cnt == 1]
        return min(bad) if bad else None

    for f0 in all_faces:
        visited = set()
        stack = [frozenset([f0])]
        while stack:
            S = stack.pop()
            if S in visited:
                continue
            visited.add(S)
            states += 1
            if states > budget:
                raise ResourceLimitError(
                    f"enumeration budget exceeded after {states} states",
                    partial_count=len(results))
            ck = deficient_cube(S)
            if ck is None:
                record_support(S)
                # supports strictly containing a saturated set need at least
                # three more faces (the new face brings two fresh cubes that
                # each need a partner), so nothing is missed under the cap
                if len(S) + 3 <= max_faces:
                    for g in all_faces:
                        if g not in S and face_rank.get(g, -1) > face_rank[f0] \
                                and any(face_distance_sq(g, f) <= 1 for f in S):
                            stack.append(S | {g})
                continue
            if len(S) >= max_faces:
                continue
            for g, _sgn in _cube_faces(ck):
                if g in S:
                    continue
                if face_rank.get(g, -1) <= face_rank[f0]:
                    continue  # outside box, or support would have a smaller anchor face
                stack.append(S | {g})

    results.sort(key=lambda q: sorted(q.items()))
    return [charge_from_sparse(d, q) for q in results]


# ---------------------------------------------------------------------------
# Mayer coefficients and activities
# ---------------------------------------------------------------------------

def _graph_connected(n_vertices, edges) -> bool:
    if n_vertices == 0:
        return False
    adj = {i: set() for i in range(n_vertices)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n_vertices


def mayer_coefficient(n_vertices: int, edges) -> int:
    """I(G) = sum over connected spanning subgraphs H of G of (-1)^{|E(H)|}.

    The input graph must be connected.
    """
    edges = list(edges)
    if not _graph_connected(n_vertices, edges):
        raise ValueError("connection graph must be connected")
    if len(edges) > 20:
        raise ResourceLimitError(f"too many edges for exhaustive Mayer sum: {len(edges)}")
    total = 0
    for mask in range(1 << len(edges)):
        sub = [edges[i] for i in range(len(edges)) if mask >> i & 1]
        if _graph_connected(n_vertices, sub):
            total += (-1) ** len(sub)
    return total


def _supports_adjacent(s1, s2) -> bool:
    return any(face_distance_sq(f, g) <= 1 for f in s1 for g in s2)


def _connection_graph(supports):
    edges = [(i, j) for i in range(len(supports)) for j in range(i + 1, len(supports))
             if _supports_adjacent(supports[i], supports[j])]
    return len(supports), edges


class ChargePool:
    """Enumerated charge ensemble for one box and l1 cap."""

    def __init__(self, box: LatticeBox, l1_cap: int, charges: list[Charge] | None = None,
                 budget: int = 5_000_000):
        self.box = box
        self.l1_cap = l1_cap
        self.charges = charges if charges is not None else enumerate_charges(
            box, l1_cap, budget=budget)
        self._by_key = {c.sparse_key(): c for c in self.charges}

    def __len__(self):
        return len(self.charges)

    def __iter__(self):
        return iter(self.charges)

    def lookup(self, q: dict) -> Charge | None:
        return self._by_key.get(frozenset((k, v) for k, v in q.items() if v != 0))

    def candidates_within(self, lo, hi) -> list[Charge]:
        out = []
        for c in self.charges:
            clo, chi = c.bounding_box()
            if all(l >= bl and h <= bh for l, h, bl, bh in zip(clo, chi, lo, hi)):
                out.append(c)
        return out

    # -- activities ---------------------------------------------------------

    def activity_terms(self, beta: float, charge: Charge, n_max: int) -> list[float]:
        """Per-order contributions [T_1, ..., T_{n_max}] so z = sum(T_n)."""
        if beta <= 1:
            raise ValueError("beta must exceed 1")
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        if n_max > 3:
            raise ResourceLimitError(
                f"decomposition search implemented for n_max <= 3, got {n_max}")
        sb = sqrt(beta)
        terms = [exp(-0.5 * sb * charge.q_sq)]
        if n_max == 1:
            return terms
        lo, hi = charge.bounding_box()
        cands = self.candidates_within(lo, hi)
        # n = 2: ordered pairs q1 + q2 = q, connection graph K2 has I = -1
        t2 = 0.0
        for c1 in cands:
            rem = dict(charge.q)
            for k, v in c1.q.items():
                rem[k] = rem.get(k, 0) - v
            c2 = self.lookup(rem)
            if c2 is None:
                continue
            if not _supports_adjacent(c1.support, c2.support):
                continue
            t2 += -exp(-0.5 * sb * (c1.q_sq + c2.q_sq))
        terms.append(t2 / 2.0)
        if n_max == 2:
            return terms
        t3 = 0.0
        for c1 in cands:
            rem1 = dict(charge.q)
            for k, v in c1.q.items():
                rem1[k] = rem1.get(k, 0) - v
            for c2 in cands:
                rem2 = dict(rem1)
                for k, v in c2.q.items():
                    rem2[k] = rem2.get(k, 0) - v
                c3 = self.lookup(rem2)
                if c3 is None:
                    continue
                n, edges = _connection_graph([c1.support, c2.support, c3.support])
                if not _graph_connected(n, edges):
                    continue
                t3 += (mayer_coefficient(n, edges)
                       * exp(-0.5 * sb * (c1.q_sq + c2.q_sq + c3.q_sq)))
        terms.append(t3 / 6.0)
        return terms

    def activity(self, beta: float, charge: Charge, n_max: int = 2) -> float:
        key = (beta, n_max)
        cached = charge._activities.get(key)
        if cached is None:
            cached = sum(self.activity_terms(beta, charge, n_max))
            charge._activities[key] = cached
        return cached

    def activities(self, beta: float, n_max: int = 2) -> np.ndarray:
        return np.array([self.activity(beta, c, n_max) for c in self.charges])

    def weighted_charge_sum(self, h, k: int, beta: float, n_max: int = 1):
        """sum_q |z(beta, q)| ||q||_1^k h(z_q), with the plain site sum of h
        for the diagnostic ratio of the summation lemma."""
        total = 0.0
        for c in self.charges:
            hv = h(c.anchor)
            if hv == 0.0:
                continue
            total += abs(self.activity(beta, c, n_max)) * c.l1 ** k * hv
        site_sum = sum(h(s) for s in self.box.sites())
        ratio = total / site_sum if site_sum > 0 else float("inf")
        return WeightedChargeSum(total, site_sum, ratio)


@dataclass(frozen=True)
class WeightedChargeSum:
    value: float
    site_sum: float
    ratio: float


def activity(beta: float, charge: Charge, n_max: int, pool: ChargePool) -> float:
    return pool.activity(beta, charge, n_max)


def activity_terms(beta: float, charge: Charge, n_max: int, pool: ChargePool):
    return pool.activity_terms(beta, charge, n_max)


def weighted_charge_sum(h, k: int, beta: float, pool: ChargePool, n_max: int = 1):
    return pool.weighted_charge_sum(h, k, beta, n_max)


# ---------------------------------------------------------------------------
# pool file: versioned binary
# ---------------------------------------------------------------------------

_POOL_MAGIC = b"VLQP"
_POOL_VERSION = 1


def save_pool(pool: ChargePool, path) -> None:
    d = pool.box.dimension
    with open(path, "wb") as fh:
        fh.write(_POOL_MAGIC)
        fh.write(struct.pack("<4i", _POOL_VERSION, d, pool.box.half_side, pool.l1_cap))
        fh.write(struct.pack("<i", len(pool.charges)))
        for c in pool.charges:
            fh.write(struct.pack("<2i", len(c.q), len(c.primitive)))
            for (site, dirs), val in sorted(c.q.items()):
                fh.write(struct.pack(f"<{d}i2ii", *site, dirs[0], dirs[1], val))
            for (site, (i,)), val in sorted(c.primitive.items()):
                fh.write(struct.pack(f"<{d}i1ii", *site, i, val))


def load_pool(path) -> ChargePool:
    with open(path, "rb") as fh:
        if fh.read(4) != _POOL_MAGIC:
            raise ValueError("bad pool magic")
        version, d, L, cap = struct.unpack("<4i", fh.read(16))
        if version != _POOL_VERSION:
            raise ValueError(f"unsupported pool version {version}")
        (count,) = struct.unpack("<i", fh.read(4))
        charges = []
        for _ in range(count):
            nq, nn = struct.unpack("<2i", fh.read(8))
            q = {}
            for _ in range(nq):
                *site, i, j, val = struct.unpack(f"<{d}i2ii", fh.read(4 * (d + 3)))
                q[(tuple(site), (i, j))] = val
            n = {}
            for _ in range(nn):
                *site, i, val = struct.unpack(f"<{d}i1ii", fh.read(4 * (d + 2)))
                n[(tuple(site), (i,))] = val
            if sparse_d_edges(n, d) != q:
                raise ValueError("corrupt pool record: d(n_q) != q")
            lo, hi = _bounding_box(list(q))
            charges.append(Charge(d, q, _anchor(list(q)), n,
                                  sum(abs(v) for v in q.values()),
                                  sum(v * v for v in q.values()),
                                  max(h - l for l, h in zip(lo, hi))))
    return ChargePool(LatticeBox(d, L), cap, charges=charges)
