"""Covers, nerves, anti-Cech prefixes, measure complexes and their homology,
truncated coarsening telescopes, asymptotic-dimension upper bounds, and the
hybrid/uniform-decomposition constructions.

Certificates on covers are verified, never trusted: a bound scale means every
member was checked to be bounded at that scale, and a Lebesgue scale means
every bounded subset at that scale was checked to land inside some member.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from .core_spaces import BigFamilyPrefix, BornCoarseSpace, CoarseError, Entourage
from .homology_engine import (
    DEFAULT_BASIS_CAP,
    DegreeCapExceeded,
    FGAbGroup,
    SimplicialComplex,
)


class CoverError(CoarseError):
    pass


class NotACover(CoverError):
    pass


class CertificateFailed(CoverError):
    def __init__(self, pair_index, detail=""):
        self.pair_index = pair_index
        extra = f": {detail}" if detail else ""
        super().__init__(f"anti-Cech certificate failed at pair {pair_index}{extra}")


class PhiNotDecreasing(CoarseError):
    pass


class NotADecomposition(CoarseError):
    pass


# ---------------------------------------------------------------- covers


@dataclass(frozen=True)
class Cover:
    """Indexed cover with verified (optional) bound and Lebesgue certificates.

    bound_scale k: every member M satisfies M x M <= closure_at(k).
    lebesgue_scale k: every closure_at(k)-bounded subset lies in some member.
    """

    members: Tuple[frozenset, ...]
    bound_scale: Optional[int] = None
    lebesgue_scale: Optional[int] = None
    notes: Tuple[str, ...] = ()

    def __len__(self):
        return len(self.members)


def _relation_tables(X: BornCoarseSpace, k: int):
    related = {p: {p} for p in X.points}
    for a, b in X.closure_at(k).pairs:
        related[a].add(b)
    return related


def greedy_net(X: BornCoarseSpace, k: int) -> list:
    """Separated covering subset, grown greedily in canonical point order."""
    related = _relation_tables(X, k)
    net = []
    for x in X.points:
        if all(x not in related[d] for d in net):
            net.append(x)
    # both halves of the net contract are cheap to re-check exactly
    for i, d in enumerate(net):
        for e in net[i + 1:]:
            if e in related[d] or d in related[e]:
                raise CoverError(f"net separation violated by {d!r}, {e!r}")
    covered = set()
    for d in net:
        covered |= related[d]
    if covered != set(X.points):
        raise CoverError("net fails to cover the space")
    return net


def _is_bounded_at(related, member) -> bool:
    return all(b in related[a] for a in member for b in member)


def _ball_lebesgue(X, related_s, members) -> Optional[str]:
    """Ball route: every scale-s ball inside some member certifies the scale.

    Sufficient because a bounded set lies in the ball around any of its points;
    failure is not conclusive (balls are twice as wide as bounded sets).
    """
    for x in X.points:
        ball = related_s[x]
        if not any(ball <= m for m in members):
            return None
    return "lebesgue verified via ball containment (sufficient for symmetric relations)"


def _exact_lebesgue(X, s, members) -> Optional[str]:
    """Exact route: maximal bounded sets are maximal cliques of the scale-s graph."""
    G = nx.Graph()
    G.add_nodes_from(X.points)
    G.add_edges_from((a, b) for a, b in X.closure_at(s).pairs if a != b)
    for clique in nx.find_cliques(G):
        cset = frozenset(clique)
        if not any(cset <= m for m in members):
            return None
    return "lebesgue verified via maximal bounded-set enumeration"


def _verify_lebesgue(X, s, members) -> Optional[str]:
    related_s = _relation_tables(X, s)
    note = _ball_lebesgue(X, related_s, members)
    if note is None:
        note = _exact_lebesgue(X, s, members)
    return note


def cover_from_net(X: BornCoarseSpace, k: int) -> Cover:
    """Cover by scale-k balls around greedy-net points.

    The bound certificate 2k always verifies (two ball members share the
    center); the Lebesgue scale is the largest verified value up to the
    stabilization scale.
    """
    net = greedy_net(X, k)
    related = _relation_tables(X, k)
    members = tuple(frozenset(related[d]) for d in net)
    related_2k = _relation_tables(X, 2 * k)
    bound = 2 * k if all(_is_bounded_at(related_2k, m) for m in members) else None
    notes = []
    stab = X.coarse.stabilization()
    lebesgue = None
    for s in range(stab + 1):
        note = _verify_lebesgue(X, s, members)
        if note is None:
            break
        lebesgue, last_note = s, note
    if lebesgue is not None:
        notes.append(last_note)
    return Cover(members, bound, lebesgue, tuple(notes))


def check_cover(X: BornCoarseSpace, cover, k_bound: int, k_lebesgue: int) -> Cover:
    """Re-verify both certificates on an explicit cover.

    Failed certificates come back as None with a witness note; a non-cover is
    refused outright.
    """
    members = cover.members if isinstance(cover, Cover) else tuple(
        frozenset(X.ground.check_subset(m)) for m in cover
    )
    if any(not m for m in members):
        raise NotACover("cover members must be nonempty")
    union = set()
    for m in members:
        union |= m
    if union != set(X.points):
        missing = sorted(set(X.points) - union, key=list(X.points).index)[0]
        raise NotACover(f"point {missing!r} is not covered")
    notes = []
    related_b = _relation_tables(X, k_bound)
    bound: Optional[int] = k_bound
    for i, m in enumerate(members):
        if not _is_bounded_at(related_b, m):
            bound = None
            notes.append(f"member {i} is not bounded at scale {k_bound}")
            break
    note = _verify_lebesgue(X, k_lebesgue, members)
    lebesgue: Optional[int] = k_lebesgue if note else None
    if note:
        notes.append(note)
    else:
        notes.append(f"some scale-{k_lebesgue} bounded set fits in no member")
    return Cover(members, bound, lebesgue, tuple(notes))


# ---------------------------------------------------------- anti-Cech


@dataclass(frozen=True)
class AntiCechPrefix:
    """Ball covers at increasing scales with verified pairwise certificates.

    certificates[i] is a scale bounding every member of covers[i] and, at the
    same time, a verified Lebesgue scale of covers[i+1]; refinements[i] sends
    each member of covers[i] to the least member of covers[i+1] containing it.
    """

    scales: Tuple[int, ...]
    covers: Tuple[Cover, ...]
    certificates: Tuple[int, ...]
    refinements: Tuple[Tuple[int, ...], ...]


def anti_cech(X: BornCoarseSpace, scale_list: Sequence[int]) -> AntiCechPrefix:
    scales = tuple(int(k) for k in scale_list)
    if not scales:
        raise CoverError("at least one scale is required")
    for i, (a, b) in enumerate(zip(scales, scales[1:])):
        if b <= a:
            raise CertificateFailed(i, f"scales must increase, got {a} then {b}")
    covers = []
    for k in scales:
        net = greedy_net(X, k)
        related = _relation_tables(X, k)
        members = tuple(frozenset(related[d]) for d in net)
        covers.append(Cover(members, 2 * k, None, ("ball cover; bound scale is twice the radius",)))
    certificates = []
    refinements = []
    for i in range(len(scales) - 1):
        s = 2 * scales[i]
        related_s = _relation_tables(X, s)
        if not all(_is_bounded_at(related_s, m) for m in covers[i].members):
            raise CertificateFailed(i, f"a member of cover {i} is not bounded at scale {s}")
        if _verify_lebesgue(X, s, covers[i + 1].members) is None:
            raise CertificateFailed(
                i, f"scale {s} is not a Lebesgue scale of the cover at scale {scales[i + 1]}"
            )
        certificates.append(s)
        kappa = []
        for j, m in enumerate(covers[i].members):
            target = next(
                (t for t, big in enumerate(covers[i + 1].members) if m <= big), None
            )
            if target is None:
                raise CertificateFailed(i, f"member {j} fits in no member of the next cover")
            kappa.append(target)
        refinements.append(tuple(kappa))
    return AntiCechPrefix(scales, tuple(covers), tuple(certificates), tuple(refinements))


# ------------------------------------------------------------- nerves


@dataclass
class NerveComplex(SimplicialComplex):
    """Nerve of a cover; vertices are member indices."""

    cover: Cover


def nerve(cover: Cover, d_max: int, basis_cap: int = DEFAULT_BASIS_CAP) -> NerveComplex:
    members = cover.members
    simplices: List[List[tuple]] = [[] for _ in range(d_max + 1)]
    total = 0

    def grow(s, inter):
        nonlocal total
        dim = len(s) - 1
        simplices[dim].append(s)
        total += 1
        if total > basis_cap:
            raise DegreeCapExceeded(dim, None, basis_cap)
        if dim == d_max:
            return
        for j in range(s[-1] + 1, len(members)):
            nxt = inter & members[j]
            if nxt:
                grow(s + (j,), nxt)

    for i in range(len(members)):
        grow((i,), members[i])
    return NerveComplex(list(range(len(members))), simplices, cover)


def measure_complex(X: BornCoarseSpace, k: int, d_max: int,
                    basis_cap: int = DEFAULT_BASIS_CAP) -> SimplicialComplex:
    """Supports of bounded probability measures at scale k, as a complex.

    Simplices are the subsets S with S x S inside the scale-k closure, i.e.
    exactly the cliques of the symmetric relation, so this coincides with
    rips_complex(X, k, d_max) as a complex; the agreement is asserted in the
    test suite, with the enumeration kept independent on purpose.
    """
    points = list(X.points)
    pairs = set(X.closure_at(k).pairs)
    simplices: List[List[tuple]] = [[] for _ in range(d_max + 1)]
    total = 0

    def grow(s):
        nonlocal total
        dim = len(s) - 1
        simplices[dim].append(s)
        total += 1
        if total > basis_cap:
            raise DegreeCapExceeded(dim, k, basis_cap)
        if dim == d_max:
            return
        for j in range(s[-1] + 1, len(points)):
            if all((points[i], points[j]) in pairs for i in s):
                grow(s + (j,))

    for i in range(len(points)):
        grow((i,))
    return SimplicialComplex(points, simplices)


# -------------------------------------------------- coarsified homology


@dataclass
class CoarsificationReport:
    """Per-scale homology of the measure complex plus the stabilized value."""

    d_max: int
    table: Dict[int, List[FGAbGroup]]
    stable_scale: int
    terminal: List[FGAbGroup]
    notes: Tuple[str, ...] = ()


def coarsify_homology(X: BornCoarseSpace, scale_list: Sequence[int], d_max: int,
                      basis_cap: int = DEFAULT_BASIS_CAP) -> CoarsificationReport:
    """Homology of the measure complex at each listed scale and at stabilization.

    For a finite space the exhaustion over bounded subsets collapses at the
    whole space, so the value at a scale is the plain unreduced homology of
    the measure complex there; no cofiber towers are involved.
    """
    notes = ["bounded exhaustion collapses at the whole finite space; "
             "values are unreduced homology of the measure complex"]
    if X.window_tag is not None:
        notes.append(
            f"window-relative: computed over the {X.window_tag.name} window "
            f"of radius {X.window_tag.radius}"
        )
    table = {}
    for k in scale_list:
        table[int(k)] = measure_complex(X, int(k), d_max + 1, basis_cap).homology(d_max)
    stab = X.coarse.stabilization()
    terminal = table.get(stab)
    if terminal is None:
        terminal = measure_complex(X, stab, d_max + 1, basis_cap).homology(d_max)
    return CoarsificationReport(d_max, table, stab, terminal, tuple(notes))


# ------------------------------------------------------------ telescope


@dataclass
class TelescopeComplex(SimplicialComplex):
    """Mapping telescope of the nerves along the refinement maps.

    Vertices are (slice, member-index) pairs; each slice spans its nerve as a
    subcomplex and consecutive slices are joined by prism blocks.
    """

    prefix: AntiCechPrefix

    def slice_vertex_indices(self, i):
        return [a for a, (s, _) in enumerate(self.vertices) if s == i]


def coarsening_space(prefix: AntiCechPrefix, d_max: int,
                     basis_cap: int = DEFAULT_BASIS_CAP):
    """Truncated coarsening telescope and its homology up to d_max.

    Prism blocks use the standard ordered triangulation: a nerve simplex
    (v_0 < ... < v_n) in slice i contributes the pieces
    {(i, v_0..v_l), (i+1, kappa v_l .. kappa v_n)} for l = 0..n, with repeats
    collapsed; the block list is closed downward afterwards.
    """
    build_dim = d_max + 1
    nerves = [nerve(c, build_dim, basis_cap) for c in prefix.covers]
    vertices = [(i, j) for i, c in enumerate(prefix.covers) for j in range(len(c.members))]
    vindex = {v: a for a, v in enumerate(vertices)}
    seen = set()
    for i, nv in enumerate(nerves):
        for dim_list in nv.simplices:
            for s in dim_list:
                seen.add(tuple(vindex[(i, j)] for j in s))
    for i, kappa in enumerate(prefix.refinements):
        for dim_list in nerves[i].simplices:
            for s in dim_list:
                if len(s) - 1 >= build_dim:
                    continue
                for l in range(len(s)):
                    labels = [(i, j) for j in s[: l + 1]]
                    labels += [(i + 1, kappa[j]) for j in s[l:]]
                    piece = tuple(sorted({vindex[v] for v in labels}))
                    if len(piece) - 1 <= build_dim:
                        seen.add(piece)
    # downward closure over the prism pieces
    stack = list(seen)
    while stack:
        s = stack.pop()
        if len(s) == 1:
            continue
        for a in range(len(s)):
            face = s[:a] + s[a + 1:]
            if face not in seen:
                seen.add(face)
                stack.append(face)
    simplices: List[List[tuple]] = [[] for _ in range(build_dim + 1)]
    for s in seen:
        simplices[len(s) - 1].append(s)
    for dim_list in simplices:
        dim_list.sort()
    tele = TelescopeComplex(vertices, simplices, prefix)
    return tele, tele.homology(d_max)


# ----------------------------------------------------------------- asdim


@dataclass
class AsdimReport:
    """Heuristic upper bound for asymptotic dimension on a finite window."""

    per_scale: Dict[int, int]
    upper_bound: int
    budget: int
    notes: Tuple[str, ...] = ()


def _net_over_order(order, related):
    net = []
    for x in order:
        if all(x not in related[d] for d in net):
            net.append(x)
    return net


def asdim_upper_bound(X: BornCoarseSpace, scale_list: Sequence[int],
                      search_budget: int = 8) -> AsdimReport:
    """Least nerve dimension of a ball cover found within the search budget.

    The search rotates the greedy net's start point; the nerve dimension of a
    cover is one less than the largest number of members through a single
    point.  The value is a search result, not a certificate, and is relative
    to the window.
    """
    points = list(X.points)
    per_scale = {}
    for k in scale_list:
        k = int(k)
        related = _relation_tables(X, k)
        best = None
        for r in range(max(1, min(search_budget, len(points)))):
            order = points[r:] + points[:r]
            net = _net_over_order(order, related)
            depth = {p: 0 for p in points}
            for d in net:
                for p in related[d]:
                    depth[p] += 1
            dim = max(depth.values()) - 1
            best = dim if best is None else min(best, dim)
            if best == 0:
                break
        per_scale[k] = best
    notes = ["search result, not a certificate; lower bounds are out of scope"]
    if X.window_tag is not None:
        notes.append("window-relative")
    return AsdimReport(per_scale, max(per_scale.values()), search_budget, tuple(notes))


# ------------------------------------------------------ hybrid structures


def hybrid_entourage(X: BornCoarseSpace, family: BigFamilyPrefix,
                     phi: Sequence[int], base_k: int) -> Entourage:
    """Definitional scan for the hybrid relation inside the scale-base_k closure.

    A pair survives when, for every family index i, both entries lie in Y_i or
    the pair is phi(i)-small; phi stands in for a cofinal decreasing function
    into the metric filtration, so it must be non-increasing.
    """
    if len(phi) != len(family.members):
        raise CoarseError(
            f"phi has {len(phi)} entries for {len(family.members)} family members"
        )
    phi = [int(v) for v in phi]
    for i, (a, b) in enumerate(zip(phi, phi[1:])):
        if b > a:
            raise PhiNotDecreasing(f"phi({i}) = {a} < phi({i + 1}) = {b}")
    if any(v < 0 for v in phi):
        raise CoarseError("phi entries must be nonnegative scale indices")
    small = []
    for v in phi:
        small.append({p: {p} for p in X.points})
        if v > 0:
            for a, b in X.closure_at(v).pairs:
                small[-1][a].add(b)
    pairs = []
    for a, b in X.closure_at(base_k).pairs:
        ok = True
        for i, Y in enumerate(family.members):
            if a in Y and b in Y:
                continue
            if b not in small[i][a]:
                ok = False
                break
        if ok:
            pairs.append((a, b))
    return Entourage(X.ground, pairs)


# ------------------------------------------------ uniform decompositions


@dataclass
class UniformDecompositionReport:
    """Finite-prefix certificate for a uniform two-set decomposition."""

    radii: Tuple[Fraction, ...]
    assignments: Tuple[Tuple[Fraction, Optional[Fraction]], ...]
    ok: bool
    notes: Tuple[str, ...] = ()


def _metric_thicken(X, S, r: Fraction):
    m = X.metric
    return {x for x in X.points if any(m(x, s) <= r for s in S)}


def uniform_decomposition_check(X: BornCoarseSpace, Y, Z,
                                radii: Sequence) -> UniformDecompositionReport:
    """For each listed radius r, the least listed s with
    U_r[Y] n U_r[Z] <= U_s[Y n Z], or a recorded failure at r.

    Only the listed radii are inspected, so success certifies a finite prefix
    of the decreasing filtration, nothing more.
    """
    if X.metric is None:
        raise CoarseError("a metric filtration is required for uniform checks")
    Y = X.ground.check_subset(Y)
    Z = X.ground.check_subset(Z)
    if Y | Z != frozenset(X.points):
        raise NotADecomposition("the two parts must cover the space")
    rs = [Fraction(r) for r in radii]
    if any(r <= 0 for r in rs) or any(b >= a for a, b in zip(rs, rs[1:])):
        raise CoarseError("radii must be positive and strictly decreasing")
    meet = Y & Z
    ascending = sorted(rs)
    rows = []
    ok = True
    for r in rs:
        overlap = _metric_thicken(X, Y, r) & _metric_thicken(X, Z, r)
        found = None
        for s in ascending:
            if overlap <= _metric_thicken(X, meet, s):
                found = s
                break
        rows.append((r, found))
        ok = ok and found is not None
    notes = ["finite-prefix certificate over the listed radii only"]
    if X.window_tag is not None:
        notes.append("window-relative")
    return UniformDecompositionReport(tuple(rs), tuple(rows), ok, tuple(notes))
