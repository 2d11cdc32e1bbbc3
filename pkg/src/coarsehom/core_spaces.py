"""Finite and windowed bornological coarse spaces.

A space is a ground set together with a coarse structure (given by entourage
generators and their scale filtration) and a bornology (given by generators of
the bounded sets).  Everything here is exact and deterministic: points carry a
total order fixed at construction, and every derived object (closures,
components, thickenings) is reported in that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence


class CoarseError(Exception):
    """Base class for domain errors raised by this package."""


class UnknownPoint(CoarseError):
    pass


class BornologyDoesNotCover(CoarseError):
    pass


class IncompatibleStructures(CoarseError):
    """A controlled thickening of a bounded set escaped the bornology."""


class InvalidMetric(CoarseError):
    pass


class NonSymmetricMatrix(InvalidMetric):
    pass


class NegativeDistance(InvalidMetric):
    pass


class BadScales(CoarseError):
    pass


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        # floats are rejected: exact rational input is part of the contract
        raise InvalidMetric("distances and scales must be rational (int, Fraction or 'p/q'), not float")
    raise InvalidMetric(f"cannot interpret {value!r} as a rational number")


class GroundSet:
    """Ordered set of opaque point identifiers.

    The construction order is the canonical total order used for all
    tie-breaking (component representatives, tuple enumeration, output order).
    """

    __slots__ = ("points", "_index")

    def __init__(self, points: Iterable):
        pts = tuple(points)
        index = {}
        for i, p in enumerate(pts):
            if p in index:
                raise UnknownPoint(f"duplicate point identifier {p!r}")
            index[p] = i
        self.points = pts
        self._index = index

    def __len__(self):
        return len(self.points)

    def __contains__(self, p):
        return p in self._index

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        return isinstance(other, GroundSet) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def index(self, p):
        try:
            return self._index[p]
        except KeyError:
            raise UnknownPoint(f"point {p!r} is not in the ground set") from None

    def check_subset(self, B: Iterable) -> frozenset:
        B = frozenset(B)
        for p in B:
            if p not in self._index:
                raise UnknownPoint(f"point {p!r} is not in the ground set")
        return B

    def sorted(self, B: Iterable):
        """Points of B in canonical order."""
        return sorted(B, key=self._index.__getitem__)


class Entourage:
    """A finite set of ordered point pairs over a ground set.

    Internally keeps a left-neighbour map so that thickenings U[B] and
    compositions are cheap; the pair set itself stays the source of truth.
    """

    __slots__ = ("ground", "pairs", "_left")

    def __init__(self, ground: GroundSet, pairs: Iterable):
        self.ground = ground
        ps = set()
        for x, y in pairs:
            if x not in ground or y not in ground:
                raise UnknownPoint(f"pair ({x!r}, {y!r}) leaves the ground set")
            ps.add((x, y))
        self.pairs = frozenset(ps)
        left = {}
        for x, y in self.pairs:
            left.setdefault(y, set()).add(x)
        self._left = left

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        return isinstance(other, Entourage) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def __le__(self, other: "Entourage"):
        return self.pairs <= other.pairs

    def image_of(self, B: Iterable) -> frozenset:
        """U[B] = all x with (x, b) in U for some b in B."""
        out = set()
        for b in B:
            out |= self._left.get(b, ())
        return frozenset(out)

    def inverse(self) -> "Entourage":
        return Entourage(self.ground, ((y, x) for x, y in self.pairs))

    def union(self, other: "Entourage") -> "Entourage":
        return Entourage(self.ground, self.pairs | other.pairs)

    def compose(self, other: "Entourage") -> "Entourage":
        """U o V = {(x, z) : (x, y) in U and (y, z) in V for some y}."""
        pairs = set()
        for y, z in other.pairs:
            for x in self._left.get(y, ()):
                pairs.add((x, z))
        return Entourage(self.ground, pairs)

    def is_symmetric(self) -> bool:
        return all((y, x) in self.pairs for x, y in self.pairs)

    def contains_diagonal(self) -> bool:
        return all((p, p) in self.pairs for p in self.ground)

    def restrict(self, A: frozenset) -> "Entourage":
        return Entourage(self.ground, (p for p in self.pairs if p[0] in A and p[1] in A))

    def neighbours(self, x) -> frozenset:
        """Points y with (y, x) in U; equals the ball around x once symmetric."""
        return frozenset(self._left.get(x, ()))


def diagonal(ground: GroundSet) -> Entourage:
    return Entourage(ground, ((p, p) for p in ground))


class CoarseStructure:
    """Generated coarse structure, represented by its scale filtration.

    closure_at(k) is the k-fold composition of diag u G u G^-1 with itself,
    where G is the union of the generators; equivalently all pairs at graph
    distance <= k in the symmetrized generator graph.  The memo fill is
    idempotent, so concurrent readers are safe.
    """

    def __init__(self, ground: GroundSet, generators: Sequence[Entourage]):
        self.ground = ground
        self.generators = tuple(generators)
        for g in self.generators:
            if g.ground is not ground and g.ground != ground:
                raise UnknownPoint("generator defined over a different ground set")
        self.cached_closures: dict[int, Entourage] = {}
        self.stabilized_at: Optional[int] = None
        # symmetric adjacency of the scale-1 relation, by point
        adj = {p: {p} for p in ground}
        for g in self.generators:
            for x, y in g.pairs:
                adj[x].add(y)
                adj[y].add(x)
        self._adj1 = {p: frozenset(s) for p, s in adj.items()}
        self._balls: dict[int, dict] = {0: {p: frozenset((p,)) for p in ground}, 1: self._adj1}
        if all(len(s) == 1 for s in self._adj1.values()):
            self.stabilized_at = 0

    def _ball_map(self, k: int) -> dict:
        """Map point -> closed ball of radius k in the generator graph."""
        if k in self._balls:
            return self._balls[k]
        prev = self._ball_map(k - 1)
        if self.stabilized_at is not None and k > self.stabilized_at:
            self._balls[k] = self._balls[self.stabilized_at]
            return self._balls[k]
        cur = {}
        changed = False
        for p, ball in prev.items():
            grown = set(ball)
            for q in ball:
                grown |= self._adj1[q]
            cur[p] = frozenset(grown)
            if cur[p] != ball:
                changed = True
        if not changed and self.stabilized_at is None:
            self.stabilized_at = k - 1
            self._balls[k] = prev
            return prev
        self._balls[k] = cur
        return cur

    def closure_at(self, k: int) -> Entourage:
        if k < 0:
            raise CoarseError("scale-index must be >= 0")
        if self.stabilized_at is not None and k > self.stabilized_at:
            k = self.stabilized_at
        if k not in self.cached_closures:
            balls = self._ball_map(k)
            pairs = [(x, y) for y, ball in balls.items() for x in ball]
            self.cached_closures[k] = Entourage(self.ground, pairs)
        return self.cached_closures[k]

    def ball(self, k: int, x) -> frozenset:
        if k < 0:
            raise CoarseError("scale-index must be >= 0")
        if self.stabilized_at is not None and k > self.stabilized_at:
            k = self.stabilized_at
        return self._ball_map(k)[x]

    def stabilization(self) -> int:
        """Least s with closure_at(s) == closure_at(s+1); finite spaces always stabilize."""
        k = 0
        # graph diameter is < |X|, so this terminates
        while self.stabilized_at is None and k <= len(self.ground) + 1:
            self._ball_map(k)
            k += 1
        if self.stabilized_at is None:
            self.stabilized_at = max(len(self.ground) - 1, 0)
        return self.stabilized_at

    def related_at(self, k: int, x, y) -> bool:
        if self.stabilized_at is not None and k > self.stabilized_at:
            k = self.stabilized_at
        return x in self._ball_map(k)[y]


class Bornology:
    """Bounded sets generated by a finite list of subsets.

    B is bounded iff B is contained in the union of the generators; with a
    finite generator list this is the downward closed, union closed family
    they generate.
    """

    __slots__ = ("ground", "generators", "_union")

    def __init__(self, ground: GroundSet, generators: Sequence[Iterable]):
        self.ground = ground
        self.generators = tuple(ground.check_subset(g) for g in generators)
        u = set()
        for g in self.generators:
            u |= g
        self._union = frozenset(u)

    def bounded(self, B: Iterable) -> bool:
        return frozenset(B) <= self._union

    def covers(self) -> bool:
        return self._union >= frozenset(self.ground.points)

    def __eq__(self, other):
        return isinstance(other, Bornology) and set(self.generators) == set(other.generators)

    def __hash__(self):
        return hash(frozenset(self.generators))


@dataclass(frozen=True)
class WindowTag:
    """Marks a space as a finite window into an infinite ambient space.

    Every statement about such a space is window-relative; reports must carry
    this tag through to their warnings.
    """

    name: str
    radius: int


@dataclass(frozen=True)
class UniformMetric:
    """Rational point metric backing the uniform (small-scale) structure."""

    dist: Callable[[object, object], Fraction]
    description: str = ""

    def __call__(self, x, y) -> Fraction:
        return self.dist(x, y)


class BornCoarseSpace:
    """Ground set + coarse structure + bornology (+ optional window/metric)."""

    def __init__(
        self,
        ground: GroundSet,
        coarse: CoarseStructure,
        bornology: Bornology,
        window_tag: Optional[WindowTag] = None,
        metric: Optional[UniformMetric] = None,
    ):
        self.ground = ground
        self.coarse = coarse
        self.bornology = bornology
        self.window_tag = window_tag
        self.metric = metric

    # -- convenience delegates -------------------------------------------
    def closure_at(self, k: int) -> Entourage:
        return self.coarse.closure_at(k)

    def thicken(self, k: int, B: Iterable) -> frozenset:
        return thicken(self, k, B)

    @property
    def points(self):
        return self.ground.points

    def __len__(self):
        return len(self.ground)

    def __eq__(self, other):
        if not isinstance(other, BornCoarseSpace):
            return NotImplemented
        return (
            self.ground == other.ground
            and tuple(g.pairs for g in self.coarse.generators) == tuple(g.pairs for g in other.coarse.generators)
            and self.bornology == other.bornology
            and self.window_tag == other.window_tag
        )

    def __repr__(self):
        tag = f", window={self.window_tag.name}({self.window_tag.radius})" if self.window_tag else ""
        return f"<BornCoarseSpace |X|={len(self.ground)}, {len(self.coarse.generators)} generators{tag}>"


def _check_compatibility(ground: GroundSet, coarse: CoarseStructure, bornology: Bornology):
    """Scale-1 compatibility: controlled thickenings of bounded sets stay bounded."""
    U1 = coarse.closure_at(1)
    for B in bornology.generators:
        thick = U1.image_of(B)
        if not bornology.bounded(thick):
            raise IncompatibleStructures(
                f"thickening of bounded generator {sorted(B, key=ground.index)} at scale 1 "
                f"gives {sorted(thick, key=ground.index)}, which is not bounded"
            )


def make_explicit_space(points, entourage_gens, bornology_gens) -> BornCoarseSpace:
    """Space generated by explicit entourage pair sets and bornology subsets.

    Validation order: unknown points, then scale-1 compatibility, then
    bornology coverage.
    """
    ground = GroundSet(points)
    gens = [Entourage(ground, pairs) for pairs in entourage_gens]
    coarse = CoarseStructure(ground, gens)
    bornology = Bornology(ground, bornology_gens)
    _check_compatibility(ground, coarse, bornology)
    if not bornology.covers():
        missing = ground.sorted(set(ground.points) - set().union(*bornology.generators) if bornology.generators else set(ground.points))
        raise BornologyDoesNotCover(f"bornology generators do not cover points {missing}")
    return BornCoarseSpace(ground, coarse, bornology)


def from_metric(points, dist, scales) -> BornCoarseSpace:
    """Metric space with entourage generators U_r = {(x, y) : d(x, y) < r}.

    The inequality is strict.  The bornology is maximal (every subset is
    bounded), recorded as the single generator X.
    """
    ground = GroundSet(points)
    n = len(ground)
    rows = [[_as_fraction(v) for v in row] for row in dist]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise InvalidMetric(f"distance matrix must be {n}x{n}")
    for i in range(n):
        if rows[i][i] != 0:
            raise InvalidMetric("distance matrix must have zero diagonal")
        for j in range(n):
            if rows[i][j] < 0:
                raise NegativeDistance(f"d({points[i]!r},{points[j]!r}) = {rows[i][j]} < 0")
            if rows[i][j] != rows[j][i]:
                raise NonSymmetricMatrix(f"d({points[i]!r},{points[j]!r}) != d({points[j]!r},{points[i]!r})")
    rs = [_as_fraction(r) for r in scales]
    if any(r <= 0 for r in rs) or any(b <= a for a, b in zip(rs, rs[1:])):
        raise BadScales("scales must be positive and strictly increasing")
    pts = ground.points
    gens = []
    for r in rs:
        pairs = [
            (pts[i], pts[j])
            for i in range(n)
            for j in range(n)
            if i != j and rows[i][j] < r
        ]
        gens.append(Entourage(ground, pairs))
    coarse = CoarseStructure(ground, gens)
    bornology = Bornology(ground, [frozenset(pts)] if n else [])
    lookup = {(pts[i], pts[j]): rows[i][j] for i in range(n) for j in range(n)}
    metric = UniformMetric(lambda x, y: lookup[(x, y)], "explicit rational matrix")
    return BornCoarseSpace(ground, coarse, bornology, metric=metric)


def windowed_builtin(name: str, radius: int) -> BornCoarseSpace:
    """Finite windows into the standard infinite examples.

    half_line(N) is {0..N} with unit-step generators, int_window(N) is {-N..N},
    grid2_window(N) is {-N..N}^2 with the l^1 metric.  Bornology generators are
    the graded metric balls around the origin clipped to the window, so bounded
    sets of every size up to the window are representable.
    """
    if radius < 1:
        raise CoarseError("radius must be >= 1")
    if name == "half_line":
        pts = list(range(radius + 1))
        adj = [(t, t + 1) for t in range(radius)]
        born = [frozenset(range(n + 1)) for n in range(radius + 1)]
        metric = UniformMetric(lambda x, y: Fraction(abs(x - y)), "unit metric on the half line")
    elif name == "int_window":
        pts = list(range(-radius, radius + 1))
        adj = [(t, t + 1) for t in range(-radius, radius)]
        born = [frozenset(range(-n, n + 1)) for n in range(radius + 1)]
        metric = UniformMetric(lambda x, y: Fraction(abs(x - y)), "unit metric on the integers")
    elif name == "grid2_window":
        pts = [(a, b) for a in range(-radius, radius + 1) for b in range(-radius, radius + 1)]
        adj = []
        for a, b in pts:
            if a + 1 <= radius:
                adj.append(((a, b), (a + 1, b)))
            if b + 1 <= radius:
                adj.append(((a, b), (a, b + 1)))
        born = [
            frozenset(p for p in pts if abs(p[0]) + abs(p[1]) <= n)
            for n in range(2 * radius + 1)
        ]
        metric = UniformMetric(
            lambda x, y: Fraction(abs(x[0] - y[0]) + abs(x[1] - y[1])), "l1 metric on the plane grid"
        )
    else:
        raise CoarseError(f"unknown builtin {name!r}; expected half_line, int_window or grid2_window")
    ground = GroundSet(pts)
    coarse = CoarseStructure(ground, [Entourage(ground, adj)])
    bornology = Bornology(ground, born)
    return BornCoarseSpace(ground, coarse, bornology, window_tag=WindowTag(name, radius), metric=metric)


def thicken(space: BornCoarseSpace, k: int, B: Iterable) -> frozenset:
    """closure_at(k)[B] = {x : (x, b) in closure_at(k) for some b in B}."""
    B = space.ground.check_subset(B)
    out = set()
    for b in B:
        out |= space.coarse.ball(k, b)
    return frozenset(out)


def closure_at(space: BornCoarseSpace, k: int) -> Entourage:
    return space.coarse.closure_at(k)


def is_U_bounded(space: BornCoarseSpace, k: int, B: Iterable) -> bool:
    """True iff B x B is contained in closure_at(k)."""
    B = space.ground.check_subset(B)
    return all(space.coarse.related_at(k, x, y) for x in B for y in B)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def coarse_components(space: BornCoarseSpace) -> list:
    """Partition of the ground set by the union of all entourages.

    Classes come back in canonical order (least member first), each class
    sorted by the point order.
    """
    uf = _UnionFind(space.ground.points)
    for g in space.coarse.generators:
        for x, y in g.pairs:
            uf.union(x, y)
    classes: dict = {}
    for p in space.ground.points:
        classes.setdefault(uf.find(p), []).append(p)
    # points were scanned in canonical order, so each class is already sorted
    return sorted(classes.values(), key=lambda c: space.ground.index(c[0]))


def product_p(X: BornCoarseSpace, Y: BornCoarseSpace) -> BornCoarseSpace:
    """Product space on X x Y: coarse generator closure_X(1) x closure_Y(1),
    bornology generators B x B'."""
    pts = [(x, y) for x in X.ground.points for y in Y.ground.points]
    ground = GroundSet(pts)
    ux, uy = X.closure_at(1), Y.closure_at(1)
    pairs = [((a, c), (b, d)) for a, b in ux.pairs for c, d in uy.pairs]
    coarse = CoarseStructure(ground, [Entourage(ground, pairs)])
    born_gens = [
        frozenset((x, y) for x in B for y in Bp)
        for B in X.bornology.generators
        for Bp in Y.bornology.generators
    ]
    bornology = Bornology(ground, born_gens)
    return BornCoarseSpace(ground, coarse, bornology)


def semidirect(X: BornCoarseSpace, Y: BornCoarseSpace) -> BornCoarseSpace:
    """Product coarse structure with bornology generated by X x B'."""
    prod = product_p(X, Y)
    all_x = frozenset(X.ground.points)
    born_gens = [frozenset((x, y) for x in all_x for y in Bp) for Bp in Y.bornology.generators]
    bornology = Bornology(prod.ground, born_gens)
    return BornCoarseSpace(prod.ground, prod.coarse, bornology)


def _tagged_union_points(spaces: Sequence[BornCoarseSpace]):
    pts = []
    for i, S in enumerate(spaces):
        pts.extend((i, p) for p in S.ground.points)
    return pts


def coproduct(spaces: Sequence[BornCoarseSpace]) -> BornCoarseSpace:
    """Disjoint union; per-factor generators, bounded iff bounded in each factor."""
    spaces = list(spaces)
    ground = GroundSet(_tagged_union_points(spaces))
    gens = []
    for i, S in enumerate(spaces):
        for g in S.coarse.generators:
            gens.append(Entourage(ground, (((i, x), (i, y)) for x, y in g.pairs)))
    born_gens = []
    for i, S in enumerate(spaces):
        for B in S.bornology.generators:
            born_gens.append(frozenset((i, p) for p in B))
    return BornCoarseSpace(ground, CoarseStructure(ground, gens), Bornology(ground, born_gens))


def free_union(spaces: Sequence[BornCoarseSpace]) -> BornCoarseSpace:
    """Disjoint union with one generator per family of factor entourages.

    On finitely many factors the coarse structure agrees with the coproduct;
    the distinction only matters for infinite families, which are out of reach
    here anyway.
    """
    spaces = list(spaces)
    ground = GroundSet(_tagged_union_points(spaces))
    pairs = []
    for i, S in enumerate(spaces):
        pairs.extend(((i, x), (i, y)) for x, y in S.closure_at(1).pairs)
    coarse = CoarseStructure(ground, [Entourage(ground, pairs)] if pairs else [])
    born_gens = []
    for i, S in enumerate(spaces):
        for B in S.bornology.generators:
            born_gens.append(frozenset((i, p) for p in B))
    return BornCoarseSpace(ground, coarse, Bornology(ground, born_gens))


def mixed_union(spaces: Sequence[BornCoarseSpace]) -> BornCoarseSpace:
    """Coarse structure of the coproduct with the free-union bornology."""
    cp = coproduct(spaces)
    fu = free_union(spaces)
    return BornCoarseSpace(cp.ground, cp.coarse, fu.bornology)


def subspace(X: BornCoarseSpace, A: Iterable) -> BornCoarseSpace:
    """Generators restricted to A x A, bornology generators intersected with A."""
    A = X.ground.check_subset(A)
    pts = [p for p in X.ground.points if p in A]
    ground = GroundSet(pts)
    gens = [
        Entourage(ground, (pair for pair in g.pairs if pair[0] in A and pair[1] in A))
        for g in X.coarse.generators
    ]
    born_gens = [B & A for B in X.bornology.generators if B & A]
    if not pts:
        born_gens = []
    metric = X.metric
    return BornCoarseSpace(
        ground, CoarseStructure(ground, gens), Bornology(ground, born_gens), window_tag=X.window_tag, metric=metric
    )


@dataclass
class BigFamilyPrefix:
    """Finite prefix Y_0 subset ... subset Y_m of a big family.

    witness[(i, k)] = least j <= m with closure_at(k)[Y_i] subset Y_j; pairs
    with no such j are absent, never guessed.
    """

    members: tuple
    witness: Mapping

    def __len__(self):
        return len(self.members)


def big_family_generated(X: BornCoarseSpace, A: Iterable, depth: int) -> BigFamilyPrefix:
    """Members Y_i = closure_at(i)[A] for i = 0..depth.

    For these members closure_at(k)[Y_i] equals Y_{i+k}, so the witness map is
    total wherever i + k <= depth.
    """
    if depth < 0:
        raise CoarseError("depth must be >= 0")
    A = X.ground.check_subset(A)
    members = tuple(thicken(X, i, A) for i in range(depth + 1))
    witness = {}
    for i in range(depth + 1):
        for k in range(depth + 1):
            # exact: composing ball maps adds scale indices
            if i + k <= depth:
                witness[(i, k)] = i + k
            else:
                target = thicken(X, k, members[i])
                for j in range(depth + 1):
                    if target <= members[j]:
                        witness[(i, k)] = j
                        break
    return BigFamilyPrefix(members, witness)


def make_big_family(X: BornCoarseSpace, members: Sequence[Iterable], scale_cap: int = 4) -> BigFamilyPrefix:
    """Wrap explicit nested subsets as a big-family prefix, filling witnesses by search."""
    ms = tuple(X.ground.check_subset(m) for m in members)
    for a, b in zip(ms, ms[1:]):
        if not a <= b:
            raise CoarseError("big family members must be nested")
    witness = {}
    for i in range(len(ms)):
        for k in range(scale_cap + 1):
            target = thicken(X, k, ms[i])
            for j in range(len(ms)):
                if target <= ms[j]:
                    witness[(i, k)] = j
                    break
    return BigFamilyPrefix(ms, witness)
