"""Maps between coarse spaces and their certificates.

Controlled/proper validation, closeness indices, coarse equivalences,
flasqueness certification (plain and generalized), integer-skeleton cylinders
and homotopy checking.  Certificates on windowed spaces are always
window-relative and say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core_spaces import (
    BornCoarseSpace,
    Bornology,
    CoarseError,
    CoarseStructure,
    Entourage,
    GroundSet,
    UnknownPoint,
    thicken,
)


class SourceTargetMismatch(CoarseError):
    pass


class CylinderMismatch(CoarseError):
    pass


class PNotControlled(CoarseError):
    pass


class PNotBornological(CoarseError):
    pass


class SpaceMap:
    """A total function between ground sets, given by an assignment table."""

    __slots__ = ("source", "target", "table", "clamp_count", "clamped_points")

    def __init__(self, source: BornCoarseSpace, target: BornCoarseSpace, table):
        if isinstance(table, Mapping):
            items = table.items()
        else:
            items = list(table)
        tbl = {}
        for x, y in items:
            if x not in source.ground:
                raise UnknownPoint(f"source point {x!r} unknown")
            if y not in target.ground:
                raise UnknownPoint(f"target point {y!r} unknown")
            if x in tbl and tbl[x] != y:
                raise CoarseError(f"point {x!r} assigned twice")
            tbl[x] = y
        missing = [p for p in source.ground.points if p not in tbl]
        if missing:
            raise CoarseError(f"map not total; first missing point {missing[0]!r}")
        self.source = source
        self.target = target
        self.table = tbl
        self.clamp_count = 0
        self.clamped_points = frozenset()

    def __call__(self, x):
        return self.table[x]

    def __eq__(self, other):
        return (
            isinstance(other, SpaceMap)
            and self.source == other.source
            and self.target == other.target
            and self.table == other.table
        )

    def image(self, B=None) -> frozenset:
        pts = self.source.ground.points if B is None else B
        return frozenset(self.table[x] for x in pts)

    def compose(self, first: "SpaceMap") -> "SpaceMap":
        """self o first."""
        if first.target != self.source:
            raise SourceTargetMismatch("compose: inner target differs from outer source")
        return SpaceMap(first.source, self.target, {x: self.table[y] for x, y in first.table.items()})

    def power(self, j: int) -> "SpaceMap":
        """j-fold self-composition; source must equal target."""
        if self.source != self.target:
            raise SourceTargetMismatch("power: source and target differ")
        tbl = {x: x for x in self.source.ground.points}
        for _ in range(j):
            tbl = {x: self.table[y] for x, y in tbl.items()}
        return SpaceMap(self.source, self.target, tbl)


def identity_map(X: BornCoarseSpace) -> SpaceMap:
    return SpaceMap(X, X, {p: p for p in X.ground.points})


def constant_map(X: BornCoarseSpace, Y: BornCoarseSpace, y0) -> SpaceMap:
    return SpaceMap(X, Y, {p: y0 for p in X.ground.points})


def inclusion_map(A: BornCoarseSpace, X: BornCoarseSpace) -> SpaceMap:
    return SpaceMap(A, X, {p: p for p in A.ground.points})


def translate_map(X: BornCoarseSpace, delta) -> SpaceMap:
    """Shift a windowed builtin by delta, clamping at the window edge.

    Clamps are counted on the map so certificates can report boundary
    pollution.
    """
    if X.window_tag is None:
        raise CoarseError("translate_map expects a windowed builtin space")
    name, r = X.window_tag.name, X.window_tag.radius
    tbl = {}
    clamped = set()
    if name in ("half_line", "int_window"):
        lo = 0 if name == "half_line" else -r
        for t in X.ground.points:
            s = t + delta
            c = min(max(s, lo), r)
            if c != s:
                clamped.add(t)
            tbl[t] = c
    elif name == "grid2_window":
        da, db = delta
        for a, b in X.ground.points:
            s = (a + da, b + db)
            c = (min(max(s[0], -r), r), min(max(s[1], -r), r))
            if c != s:
                clamped.add((a, b))
            tbl[(a, b)] = c
    else:
        raise CoarseError(f"translate_map does not know builtin {name!r}")
    f = SpaceMap(X, X, tbl)
    f.clamp_count = len(clamped)
    f.clamped_points = frozenset(clamped)
    return f


# ------------------------------------------------------------------ reports

@dataclass
class MorphismReport:
    controlled: bool
    proper: bool
    scale_shift: dict
    controlled_witness: Optional[tuple] = None
    proper_witness: Optional[frozenset] = None

    @property
    def is_morphism(self) -> bool:
        return self.controlled and self.proper


def _least_containing_scale(space: BornCoarseSpace, pairs, cap: int) -> Optional[int]:
    """Least k <= cap with all pairs inside closure_at(k), or None."""
    worst = 0
    for x, y in pairs:
        k = worst
        while k <= cap and not space.coarse.related_at(k, x, y):
            k += 1
        if k > cap:
            return None
        worst = max(worst, k)
    return worst


def check_morphism(f: SpaceMap) -> MorphismReport:
    """Decide controlled and proper against the target's stabilized filtration."""
    src, tgt = f.source, f.target
    s_src = src.coarse.stabilization()
    s_tgt = tgt.coarse.stabilization()
    shift = {}
    controlled = True
    witness = None
    for k in range(s_src + 1):
        pairs = [(f(x), f(y)) for x, y in src.closure_at(k).pairs]
        found = _least_containing_scale(tgt, pairs, s_tgt)
        if found is None:
            controlled = False
            for x, y in src.closure_at(k).pairs:
                if not tgt.coarse.related_at(s_tgt, f(x), f(y)):
                    witness = (x, y)
                    break
            break
        shift[k] = found
    proper = True
    proper_witness = None
    for B in tgt.bornology.generators:
        preimage = frozenset(x for x in src.ground.points if f(x) in B)
        if not src.bornology.bounded(preimage):
            proper = False
            proper_witness = B
            break
    return MorphismReport(controlled, proper, shift, witness, proper_witness)


def are_close(f: SpaceMap, g: SpaceMap) -> Optional[int]:
    """Least k with (f(x), g(x)) in the target's closure_at(k) for all x."""
    if f.source != g.source or f.target != g.target:
        raise SourceTargetMismatch("closeness needs equal sources and targets")
    cap = f.target.coarse.stabilization()
    pairs = [(f(x), g(x)) for x in f.source.ground.points]
    return _least_containing_scale(f.target, pairs, cap)


@dataclass
class EquivalenceReport:
    equivalence: bool
    k_source: Optional[int]  # closeness index of g o f to id_X
    k_target: Optional[int]  # closeness index of f o g to id_X'
    f_report: MorphismReport = field(repr=False, default=None)
    g_report: MorphismReport = field(repr=False, default=None)

    def __bool__(self):
        return self.equivalence


def check_equivalence(f: SpaceMap, g: SpaceMap) -> EquivalenceReport:
    """f: X -> X' and g: X' -> X invert each other up to closeness."""
    if f.source != g.target or f.target != g.source:
        raise SourceTargetMismatch("check_equivalence needs f: X -> X' and g: X' -> X")
    rf, rg = check_morphism(f), check_morphism(g)
    k1 = are_close(g.compose(f), identity_map(f.source))
    k2 = are_close(f.compose(g), identity_map(f.target))
    ok = rf.is_morphism and rg.is_morphism and k1 is not None and k2 is not None
    return EquivalenceReport(ok, k1, k2, rf, rg)


# ------------------------------------------------------------------ flasqueness

@dataclass
class FlasqueCertificate:
    """Window-relative witness for the three flasqueness conditions.

    cond2_table maps each tested scale k to the least k' bounding every
    iterate's image of closure_at(k); cond3_table maps each tested bornology
    generator to the first iterate whose image avoids it.
    """

    map: SpaceMap
    window: Optional[int]
    cond1_scale: int
    cond2_table: dict
    cond3_table: dict
    iter_cap: int
    scale_cap: int
    tested_generators: tuple
    clamp_count: int
    warnings: tuple


@dataclass
class FlasqueRefusal:
    condition: str
    explanation: str
    witness: object = None

    def __bool__(self):
        return False


def _margin_generators(X: BornCoarseSpace, margin: Optional[int]):
    """Bornology generators small enough to escape within the window."""
    if X.window_tag is None or margin is None:
        return tuple(X.bornology.generators)
    r = X.window_tag.radius
    name = X.window_tag.name
    if name == "grid2_window":
        inside = lambda B: all(abs(p[0]) + abs(p[1]) <= margin for p in B)
    elif name == "int_window":
        inside = lambda B: all(abs(p) <= margin for p in B)
    elif name == "half_line":
        inside = lambda B: all(p <= margin for p in B)
    else:
        inside = lambda B: True
    return tuple(B for B in X.bornology.generators if inside(B))


def certify_flasque(
    X: BornCoarseSpace,
    f: SpaceMap,
    scale_cap: int = 4,
    iter_cap: int = 64,
    margin: Optional[int] = None,
):
    """Certificate or refusal for the three flasqueness conditions.

    1. f is close to the identity.
    2. The union over iterates f^j of (f^j x f^j)(closure_at(k)) stays inside
       a single closure, for each tested k <= scale_cap.
    3. Iterates eventually leave every tested bounded generator.

    Finite spaces without a window are refused: their ground set is bounded,
    so condition 3 cannot hold.  On windowed spaces only generators within
    `margin` of the origin are tested (default: half the window radius) and
    the result is explicitly window-relative.
    """
    if f.source != X or f.target != X:
        raise SourceTargetMismatch("flasqueness needs a self-map of X")
    if len(X) == 0:
        return FlasqueCertificate(f, None, 0, {}, {}, iter_cap, scale_cap, (), 0, ("empty space",))
    if X.window_tag is None:
        return FlasqueRefusal(
            "NotWindowed",
            "condition 3 impossible: a finite space with covering bornology is bounded, "
            "so no iterate can leave it; flasqueness only makes sense window-relatively",
        )
    if margin is None:
        margin = X.window_tag.radius // 2

    warnings = [
        f"window-relative: all statements hold on the {X.window_tag.name}({X.window_tag.radius}) window only"
    ]
    if f.clamp_count:
        warnings.append(f"{f.clamp_count} points clamp at the window edge under f")

    k1 = are_close(f, identity_map(X))
    if k1 is None:
        return FlasqueRefusal("condition 1", "f is not close to the identity on the window")

    cap = X.coarse.stabilization()
    powers = [identity_map(X)]
    for _ in range(iter_cap):
        powers.append(f.compose(powers[-1]))

    cond2 = {}
    for k in range(scale_cap + 1):
        pairs = set()
        for fj in powers:
            pairs.update((fj(x), fj(y)) for x, y in X.closure_at(k).pairs)
        found = _least_containing_scale(X, pairs, cap)
        if found is None:
            bad = next(p for p in pairs if not X.coarse.related_at(cap, *p))
            return FlasqueRefusal(
                "condition 2",
                f"iterated images of closure_at({k}) escape every window closure",
                bad,
            )
        cond2[k] = found

    tested = _margin_generators(X, margin)
    cond3 = {}
    for B in tested:
        escaped = None
        for j, fj in enumerate(powers):
            if not (fj.image() & B):
                escaped = j
                break
        if escaped is None:
            return FlasqueRefusal(
                "condition 3",
                f"no iterate up to {iter_cap} leaves the bounded generator",
                B,
            )
        cond3[B] = escaped

    return FlasqueCertificate(
        f,
        X.window_tag.radius,
        k1,
        cond2,
        cond3,
        iter_cap,
        scale_cap,
        tested,
        f.clamp_count,
        tuple(warnings),
    )


@dataclass
class GeneralizedFlasqueCertificate:
    maps_checked: int
    window: Optional[int]
    cond2_scale: int  # uniform closeness of consecutive maps
    cond3_table: dict
    cond4_table: dict
    scale_cap: int
    tested_generators: tuple
    warnings: tuple


def certify_flasque_generalized(
    X: BornCoarseSpace,
    maps: Sequence[SpaceMap],
    scale_cap: int = 4,
    margin: Optional[int] = None,
):
    """Certificate or refusal for generalized flasqueness over a prefix (f_j).

    Conditions: f_0 = id; consecutive maps uniformly close; the union of all
    (f_j x f_j)(U) controlled for each tested U; every tested bounded
    generator eventually avoided by all later maps in the prefix.
    """
    maps = list(maps)
    if not maps:
        raise CoarseError("need at least one map (f_0 = id)")
    for m in maps:
        if m.source != X or m.target != X:
            raise SourceTargetMismatch("generalized flasqueness needs self-maps of X")
    if len(X) == 0:
        return GeneralizedFlasqueCertificate(len(maps), None, 0, {}, {}, scale_cap, (), ("empty space",))
    if maps[0] != identity_map(X):
        return FlasqueRefusal("condition 1", "f_0 is not the identity")
    if X.window_tag is None:
        return FlasqueRefusal(
            "NotWindowed",
            "condition 4 impossible: a finite space with covering bornology is bounded",
        )
    if margin is None:
        margin = X.window_tag.radius // 2
    warnings = (
        f"window-relative: checked a prefix of {len(maps)} maps on the "
        f"{X.window_tag.name}({X.window_tag.radius}) window",
    )

    cap = X.coarse.stabilization()
    consec = [(fj(x), fk(x)) for fj, fk in zip(maps, maps[1:]) for x in X.ground.points]
    k2 = _least_containing_scale(X, consec, cap)
    if k2 is None:
        return FlasqueRefusal("condition 2", "consecutive maps are not uniformly close on the window")

    cond3 = {}
    for k in range(scale_cap + 1):
        pairs = set()
        for fj in maps:
            pairs.update((fj(x), fj(y)) for x, y in X.closure_at(k).pairs)
        found = _least_containing_scale(X, pairs, cap)
        if found is None:
            return FlasqueRefusal("condition 3", f"images of closure_at({k}) escape every window closure")
        cond3[k] = found

    tested = _margin_generators(X, margin)
    cond4 = {}
    for B in tested:
        stable_from = None
        for j in range(len(maps)):
            if all(not (maps[i].image() & B) for i in range(j, len(maps))):
                stable_from = j
                break
        if stable_from is None:
            return FlasqueRefusal(
                "condition 4",
                "no tail of the prefix avoids the bounded generator",
                B,
            )
        cond4[B] = stable_from

    return GeneralizedFlasqueCertificate(
        len(maps), X.window_tag.radius, k2, cond3, cond4, scale_cap, tested, warnings
    )


# ------------------------------------------------------------------ cylinders

@dataclass
class Cylinder:
    space: BornCoarseSpace
    projection: SpaceMap
    i_minus: SpaceMap
    i_plus: SpaceMap
    p_minus: dict
    p_plus: dict


def cylinder(
    X: BornCoarseSpace,
    p_minus,
    p_plus,
    max_jump: Optional[int] = None,
    max_value: Optional[int] = None,
) -> Cylinder:
    """Integer-skeleton coarse cylinder {(t, x) : p_-(x) <= t <= p_+(x)}.

    p_- is nonpositive, p_+ nonnegative.  The coarse generator relates (t, x)
    to (s, y) when |t - s| <= 1 and (x, y) lies in X's scale-1 closure; the
    bornology consists of full strips over X's bounded generators.  Optional
    caps bound the jump of p over related pairs and the magnitude of p on
    bounded generators; on a finite window both quantities are always finite,
    so violations are only reachable through the caps.
    """
    pm = {x: int(p_minus(x) if callable(p_minus) else p_minus[x]) for x in X.ground.points}
    pp = {x: int(p_plus(x) if callable(p_plus) else p_plus[x]) for x in X.ground.points}
    for x in X.ground.points:
        if pm[x] > 0:
            raise CoarseError(f"p_minus({x!r}) = {pm[x]} must be nonpositive")
        if pp[x] < 0:
            raise CoarseError(f"p_plus({x!r}) = {pp[x]} must be nonnegative")
    if max_jump is not None:
        for x, y in X.closure_at(1).pairs:
            for p in (pm, pp):
                if abs(p[x] - p[y]) > max_jump:
                    raise PNotControlled(
                        f"|p({x!r}) - p({y!r})| = {abs(p[x] - p[y])} exceeds the jump cap {max_jump}"
                    )
    if max_value is not None:
        for B in X.bornology.generators:
            for x in B:
                if max(abs(pm[x]), abs(pp[x])) > max_value:
                    raise PNotBornological(f"|p| exceeds {max_value} on a bounded generator at {x!r}")

    pts = [(t, x) for x in X.ground.points for t in range(pm[x], pp[x] + 1)]
    ground = GroundSet(pts)
    ball1 = {x: X.coarse.ball(1, x) for x in X.ground.points}
    pairs = []
    for t, x in pts:
        for y in ball1[x]:
            for s in (t - 1, t, t + 1):
                if pm[y] <= s <= pp[y]:
                    pairs.append(((t, x), (s, y)))
    coarse = CoarseStructure(ground, [Entourage(ground, pairs)])
    born_gens = [frozenset((t, x) for t, x in pts if x in B) for B in X.bornology.generators]
    born_gens = [B for B in born_gens if B]
    space = BornCoarseSpace(ground, coarse, Bornology(ground, born_gens), window_tag=X.window_tag)

    projection = SpaceMap(space, X, {(t, x): x for t, x in pts})
    i_minus = SpaceMap(X, space, {x: (pm[x], x) for x in X.ground.points})
    i_plus = SpaceMap(X, space, {x: (pp[x], x) for x in X.ground.points})
    for m in (projection, i_minus, i_plus):
        rep = check_morphism(m)
        if not rep.is_morphism:
            raise CoarseError("internal: cylinder structure map failed morphism check")
    return Cylinder(space, projection, i_minus, i_plus, pm, pp)


def check_homotopy(f0: SpaceMap, f1: SpaceMap, h: SpaceMap, cyl: Cylinder) -> bool:
    """True iff h o i_- = f0 and h o i_+ = f1 pointwise."""
    if h.source != cyl.space:
        raise CylinderMismatch("h is not defined on the supplied cylinder")
    if f0.source != cyl.projection.target or f1.source != cyl.projection.target:
        raise CylinderMismatch("f0/f1 are not defined on the cylinder's base space")
    if f0.target != h.target or f1.target != h.target:
        raise CylinderMismatch("f0/f1 and h must share a target")
    rep = check_morphism(h)
    if not rep.is_morphism:
        return False
    left = h.compose(cyl.i_minus)
    right = h.compose(cyl.i_plus)
    return left.table == f0.table and right.table == f1.table
