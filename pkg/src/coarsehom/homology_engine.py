"""Coarse ordinary homology over exact integers.

Chains in degree n are Z-linear combinations of (n+1)-tuples of points whose
entries are pairwise related at a chosen scale; tuples with two equal adjacent
entries are normalized away.  Boundary matrices are sparse integer matrices,
homology groups come out of Smith normal forms, and every identity the module
claims (complex identity, prism identity, swindle identity) is verified as an
exact matrix equation, never numerically.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .core_spaces import BornCoarseSpace, BigFamilyPrefix, CoarseError
from .morphisms import SpaceMap, _least_containing_scale, are_close

DEFAULT_BASIS_CAP = 200_000
DEFAULT_DEGREE_CAP = 3


class HomologyError(CoarseError):
    pass


class DegreeCapExceeded(HomologyError):
    def __init__(self, degree, scale, cap):
        self.degree = degree
        self.scale = scale
        self.cap = cap
        where = f" at scale {scale}" if scale is not None else ""
        super().__init__(
            f"basis in degree {degree}{where} exceeds the cap of {cap} tuples; "
            "raise basis_cap to proceed"
        )


class NotControlledAtScale(HomologyError):
    def __init__(self, scale, witness):
        self.scale = scale
        self.witness = witness
        super().__init__(f"map is not controlled at scale {scale}; witness pair {witness}")


class NotClose(HomologyError):
    pass


class WindowTooSmall(HomologyError):
    def __init__(self, iterate, witness):
        self.iterate = iterate
        self.witness = witness
        super().__init__(
            f"iterate {iterate} still meets the bounded set at {witness}; "
            "increase J or shrink B"
        )


class NotComplementary(HomologyError):
    pass


class PrefixTooShort(HomologyError):
    def __init__(self, member_index, scale):
        self.member_index = member_index
        self.scale = scale
        super().__init__(
            f"no family member absorbs closure_at({scale})[Y_{member_index}]; "
            "extend the prefix"
        )


# --------------------------------------------------------------------- tuples


def _neighbor_tables(points, pair_iter):
    """Index-space adjacency (sorted lists and sets) of a symmetric reflexive relation."""
    idx = {p: i for i, p in enumerate(points)}
    sets = [set() for _ in points]
    for a, b in pair_iter:
        sets[idx[a]].add(idx[b])
    nbrs = [sorted(s) for s in sets]
    return nbrs, sets


def _space_tables(X, k):
    ent = X.closure_at(k)
    return _neighbor_tables(X.points, ent.pairs)


def _components_of(nbrs):
    comp = [-1] * len(nbrs)
    cid = 0
    for start in range(len(nbrs)):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = cid
        while stack:
            v = stack.pop()
            for w in nbrs[v]:
                if comp[w] < 0:
                    comp[w] = cid
                    stack.append(w)
        cid += 1
    return comp, cid


def _iter_controlled(nbrs, sets, n):
    """Yield index tuples of length n+1, pairwise related, no adjacent repeats, lex order."""
    npts = len(nbrs)
    if n == 0:
        for i in range(npts):
            yield (i,)
        return
    comp, ncomp = _components_of(nbrs)
    members = [[] for _ in range(ncomp)]
    for i in range(npts):
        members[comp[i]].append(i)
    clique = [all(len(nbrs[i]) == len(members[c]) for i in members[c]) for c in range(ncomp)]

    def dfs(prefix, cand):
        if len(prefix) == n + 1:
            yield prefix
            return
        last = prefix[-1]
        for j in cand:
            if j == last:
                continue
            sj = sets[j]
            yield from dfs(prefix + (j,), [t for t in cand if t in sj])

    for i0 in range(npts):
        c = comp[i0]
        if clique[c]:
            mem = members[c]
            if n == 1:
                for a in mem:
                    if a != i0:
                        yield (i0, a)
            elif n == 2:
                for a in mem:
                    if a == i0:
                        continue
                    for b in mem:
                        if b != a:
                            yield (i0, a, b)
            else:
                for rest in product(mem, repeat=n):
                    prev = i0
                    ok = True
                    for r in rest:
                        if r == prev:
                            ok = False
                            break
                        prev = r
                    if ok:
                        yield (i0,) + rest
        else:
            yield from dfs((i0,), nbrs[i0])


def controlled_tuples(X, k, n, basis_cap=DEFAULT_BASIS_CAP):
    """All nondegenerate (n+1)-tuples pairwise related at scale k, lex order."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    nbrs, sets = _space_tables(X, k)
    pts = X.points
    out = []
    for t in _iter_controlled(nbrs, sets, n):
        if basis_cap is not None and len(out) >= basis_cap:
            raise DegreeCapExceeded(n, k, basis_cap)
        out.append(tuple(pts[i] for i in t))
    return out


def _materialize_bases(nbrs, sets, d_max, basis_cap, scale):
    bases = []
    for n in range(d_max + 1):
        basis = []
        for t in _iter_controlled(nbrs, sets, n):
            if basis_cap is not None and len(basis) >= basis_cap:
                raise DegreeCapExceeded(n, scale, basis_cap)
            basis.append(t)
        bases.append(basis)
    return bases


def _boundary_from_lists(basis_n, index_prev, n):
    """Sparse matrix of the alternating face sum on normalized index tuples."""
    rows, cols, data = [], [], []
    for col, t in enumerate(basis_n):
        for i in range(n + 1):
            if 0 < i < n and t[i - 1] == t[i + 1]:
                continue
            face = t[:i] + t[i + 1:]
            rows.append(index_prev[face])
            cols.append(col)
            data.append(1 if i % 2 == 0 else -1)
    return sp.csc_matrix(
        (np.asarray(data, dtype=np.int64), (rows, cols)),
        shape=(len(index_prev), len(basis_n)),
    )


def boundary_matrix(X, k, n, basis_cap=DEFAULT_BASIS_CAP):
    """Matrix of the degree-n boundary at scale k (rows: degree n-1, cols: degree n)."""
    if n < 1:
        raise ValueError("boundary matrices start at degree 1")
    nbrs, sets = _space_tables(X, k)
    bases = _materialize_bases(nbrs, sets, n, basis_cap, k)
    index_prev = {t: i for i, t in enumerate(bases[n - 1])}
    return _boundary_from_lists(bases[n], index_prev, n)


@dataclass
class ChainComplexAtScale:
    """Normalized controlled-tuple complex of a space at one scale."""

    space: BornCoarseSpace
    scale: int
    d_max: int
    bases: List[List[tuple]]
    boundaries: List[Optional[sp.csc_matrix]]

    def dims(self):
        return [len(b) for b in self.bases]

    def verify_dd(self):
        for n in range(2, self.d_max + 1):
            if (self.boundaries[n - 1] @ self.boundaries[n]).nnz != 0:
                return False
        return True


def chain_complex(X, k, d_max, basis_cap=DEFAULT_BASIS_CAP):
    nbrs, sets = _space_tables(X, k)
    idx_bases = _materialize_bases(nbrs, sets, d_max, basis_cap, k)
    pts = X.points
    bases = [[tuple(pts[i] for i in t) for t in b] for b in idx_bases]
    boundaries: List[Optional[sp.csc_matrix]] = [None]
    for n in range(1, d_max + 1):
        index_prev = {t: i for i, t in enumerate(idx_bases[n - 1])}
        boundaries.append(_boundary_from_lists(idx_bases[n], index_prev, n))
    cc = ChainComplexAtScale(X, k, d_max, bases, boundaries)
    if not cc.verify_dd():
        raise HomologyError("boundary matrices fail the complex identity")
    return cc


def verify_complex_identity(X, k, d_max=DEFAULT_DEGREE_CAP, basis_cap=None, chunk=400_000):
    """Exact check that consecutive boundaries compose to zero, streaming the top degree."""
    nbrs, sets = _space_tables(X, k)
    if d_max < 2:
        return True
    bases = _materialize_bases(nbrs, sets, d_max - 1, basis_cap, k)
    indexes = [{t: i for i, t in enumerate(b)} for b in bases]
    mats = {}
    for n in range(1, d_max):
        mats[n] = _boundary_from_lists(bases[n], indexes[n - 1], n)
    for n in range(2, d_max):
        if (mats[n - 1] @ mats[n]).nnz != 0:
            return False
    # stream the top boundary in column blocks
    n = d_max
    prev = indexes[n - 1]
    d_prev = mats[n - 1]
    rows, cols, data = [], [], []
    col = 0
    count = 0

    def flush():
        block = sp.csc_matrix(
            (np.asarray(data, dtype=np.int64), (rows, cols)),
            shape=(len(prev), col),
        )
        return (d_prev @ block).nnz == 0

    for t in _iter_controlled(nbrs, sets, n):
        count += 1
        if basis_cap is not None and count > basis_cap:
            raise DegreeCapExceeded(n, k, basis_cap)
        for i in range(n + 1):
            if 0 < i < n and t[i - 1] == t[i + 1]:
                continue
            face = t[:i] + t[i + 1:]
            rows.append(prev[face])
            cols.append(col)
            data.append(1 if i % 2 == 0 else -1)
        col += 1
        if col >= chunk:
            if not flush():
                return False
            rows, cols, data = [], [], []
            col = 0
    if col and not flush():
        return False
    return True


# ------------------------------------------------------------ exact SNF


def _shape_of(A):
    if sp.issparse(A) or isinstance(A, np.ndarray):
        return A.shape
    return (len(A), len(A[0]) if len(A) else 0)


def _as_int_rows(A):
    if sp.issparse(A):
        A = A.toarray()
    return [[int(x) for x in row] for row in A]


def _eye(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


@dataclass
class SNFResult:
    """A = U @ S @ V with unimodular U, V and a divisibility chain on diag(S).

    Matrices are lists of Python-int rows so entries never overflow; shape
    records the dimensions of S even when a side is zero.
    """

    U: Optional[List[List[int]]]
    S: List[List[int]]
    V: Optional[List[List[int]]]
    U_inv: Optional[List[List[int]]]
    V_inv: Optional[List[List[int]]]
    shape: Tuple[int, int]

    @property
    def invariant_factors(self):
        m = min(self.shape)
        return [self.S[i][i] for i in range(m) if self.S[i][i] != 0]

    @property
    def rank(self):
        return len(self.invariant_factors)


def smith_normal_form(A, track_U=True, track_V=True) -> SNFResult:
    """Exact Smith normal form; pivot is the least |nonzero| entry, ties row-major."""
    m, n = _shape_of(A)
    S = _as_int_rows(A)
    U, Ui = (_eye(m), _eye(m)) if track_U else (None, None)
    V, Vi = (_eye(n), _eye(n)) if track_V else (None, None)

    def swap_rows(a, b):
        if a == b:
            return
        S[a], S[b] = S[b], S[a]
        if track_U:
            Ui[a], Ui[b] = Ui[b], Ui[a]
            for r in U:
                r[a], r[b] = r[b], r[a]

    def swap_cols(a, b):
        if a == b:
            return
        for r in S:
            r[a], r[b] = r[b], r[a]
        if track_V:
            V[a], V[b] = V[b], V[a]
            for r in Vi:
                r[a], r[b] = r[b], r[a]

    def row_sub(i, d, q):
        # S: row_i -= q*row_d; keeps A = U S V
        if q == 0:
            return
        Si, Sd = S[i], S[d]
        for j in range(n):
            Si[j] -= q * Sd[j]
        if track_U:
            UIi, UId = Ui[i], Ui[d]
            for j in range(m):
                UIi[j] -= q * UId[j]
            for r in U:
                r[d] += q * r[i]

    def col_sub(j, d, q):
        # S: col_j -= q*col_d
        if q == 0:
            return
        for r in S:
            r[j] -= q * r[d]
        if track_V:
            Vd, Vj = V[d], V[j]
            for t in range(n):
                Vd[t] += q * Vj[t]
            for r in Vi:
                r[j] -= q * r[d]

    def negate_row(d):
        S[d] = [-x for x in S[d]]
        if track_U:
            Ui[d] = [-x for x in Ui[d]]
            for r in U:
                r[d] = -r[d]

    def row_add(d, i):
        # S: row_d += row_i
        Sd, Si = S[d], S[i]
        for j in range(n):
            Sd[j] += Si[j]
        if track_U:
            UId, UIi = Ui[d], Ui[i]
            for j in range(m):
                UId[j] += UIi[j]
            for r in U:
                r[i] -= r[d]

    d = 0
    while d < m and d < n:
        best = None
        for i in range(d, m):
            Si = S[i]
            for j in range(d, n):
                v = Si[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        swap_rows(d, best[1])
        swap_cols(d, best[2])
        if S[d][d] < 0:
            negate_row(d)
        while True:
            restart = False
            for i in range(d + 1, m):
                if S[i][d]:
                    q = S[i][d] // S[d][d]
                    row_sub(i, d, q)
                    if S[i][d]:
                        swap_rows(d, i)
                        if S[d][d] < 0:
                            negate_row(d)
                        restart = True
                        break
            if restart:
                continue
            for j in range(d + 1, n):
                if S[d][j]:
                    q = S[d][j] // S[d][d]
                    col_sub(j, d, q)
                    if S[d][j]:
                        swap_cols(d, j)
                        if S[d][d] < 0:
                            negate_row(d)
                        restart = True
                        break
            if restart:
                continue
            pivot = S[d][d]
            fix = None
            for i in range(d + 1, m):
                Si = S[i]
                for j in range(d + 1, n):
                    if Si[j] % pivot:
                        fix = i
                        break
                if fix is not None:
                    break
            if fix is None:
                break
            row_add(d, fix)
        d += 1
    return SNFResult(U, S, V, Ui, Vi, (m, n))


def _sparse_invariants(rows: List[Dict[int, int]], want_factors=True):
    """Rank and invariant factors of a sparse integer matrix, destructive on rows."""
    live = {i for i, r in enumerate(rows) if r}
    col_index: Dict[int, set] = {}
    for i in live:
        for j in rows[i]:
            col_index.setdefault(j, set()).add(i)
    pivots = []

    def drop_entry(i, j):
        s = col_index.get(j)
        if s is not None:
            s.discard(i)
            if not s:
                del col_index[j]

    def set_entry(i, j, v):
        row = rows[i]
        if v:
            if j not in row:
                col_index.setdefault(j, set()).add(i)
            row[j] = v
        elif j in row:
            del row[j]
            drop_entry(i, j)

    while live:
        # pick a pivot: unit if available, otherwise smallest magnitude; favor sparse rows
        best = None
        for i in live:
            row = rows[i]
            if not row:
                continue
            for j, v in row.items():
                a = abs(v)
                key = (a > 1, a, len(row), len(col_index.get(j, ())), i, j)
                if best is None or key < best[0]:
                    best = (key, i, j)
            if best is not None and best[0][0] is False and best[0][2] <= 2:
                break
        if best is None:
            break
        _, r, c = best
        while True:
            v = rows[r][c]
            if v < 0:
                rows[r] = {j: -x for j, x in rows[r].items()}
                v = -v
            moved = False
            for i in list(col_index.get(c, ())):
                if i == r:
                    continue
                a = rows[i][c]
                q = a // v
                if q:
                    for j, x in rows[r].items():
                        set_entry(i, j, rows[i].get(j, 0) - q * x)
                if rows[i].get(c, 0):
                    r = i
                    moved = True
                    break
            if moved:
                continue
            # column is clear; reduce the pivot row in place (column ops touch only row r)
            rrow = rows[r]
            rem = None
            for j in list(rrow):
                if j == c:
                    continue
                w = rrow[j] % v
                set_entry(r, j, w)
                if w:
                    rem = j
            if rem is not None:
                c = rem
                continue
            break
        pivots.append(abs(rows[r][c]))
        set_entry(r, c, 0)
        live.discard(r)
        live = {i for i in live if rows[i]}
    if not want_factors:
        return len(pivots), None
    # repair the divisibility chain pairwise: diag(a,b) ~ diag(gcd, lcm)
    from math import gcd

    facs = sorted(pivots)
    changed = True
    while changed:
        changed = False
        for i in range(len(facs) - 1):
            a, b = facs[i], facs[i + 1]
            if b % a:
                g = gcd(a, b)
                facs[i], facs[i + 1] = g, a * b // g
                changed = True
        facs.sort()
    return len(facs), facs


def _sparse_rows_from_csc(M: sp.csc_matrix):
    coo = M.tocoo()
    rows: List[Dict[int, int]] = [dict() for _ in range(M.shape[0])]
    for r, c, v in zip(coo.row, coo.col, coo.data):
        rows[r][int(c)] = int(v)
    return rows


def _rank(M: sp.csc_matrix):
    r, _ = _sparse_invariants(_sparse_rows_from_csc(M), want_factors=False)
    return r


def _torsion(M: sp.csc_matrix):
    _, facs = _sparse_invariants(_sparse_rows_from_csc(M))
    return tuple(d for d in facs if d >= 2)


# --------------------------------------------------------------- groups


@dataclass(frozen=True)
class FGAbGroup:
    """Finitely generated abelian group Z^free_rank + sum of Z/d with d_1 | d_2 | ..."""

    free_rank: int
    torsion: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free rank must be nonnegative")
        prev = None
        for d in self.torsion:
            if d < 2:
                raise ValueError("torsion orders must be >= 2")
            if prev is not None and d % prev:
                raise ValueError("torsion orders must form a divisibility chain")
            prev = d

    @property
    def trivial(self):
        return self.free_rank == 0 and not self.torsion

    def __str__(self):
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " + ".join(parts) if parts else "0"


def _group_from_boundaries(c_n, d_n: Optional[sp.csc_matrix], d_next: Optional[sp.csc_matrix]):
    rank_n = _rank(d_n) if d_n is not None else 0
    if d_next is None or d_next.shape[1] == 0:
        return FGAbGroup(c_n - rank_n, ())
    rank_next, facs = _sparse_invariants(_sparse_rows_from_csc(d_next))
    return FGAbGroup(c_n - rank_n - rank_next, tuple(d for d in facs if d >= 2))


def homology_at_scale(X, k, d_max, basis_cap=DEFAULT_BASIS_CAP):
    """Homology groups of the controlled-tuple complex, degrees 0..d_max."""
    cc = chain_complex(X, k, d_max + 1, basis_cap)
    out = []
    for n in range(d_max + 1):
        d_n = cc.boundaries[n] if n >= 1 else None
        out.append(_group_from_boundaries(len(cc.bases[n]), d_n, cc.boundaries[n + 1]))
    return out


@dataclass
class StabilizationReport:
    stable_scale: int
    per_scale: Dict[int, List[FGAbGroup]]
    warnings: List[str] = field(default_factory=list)


def _component_count(X, k):
    pts = X.points
    idx = {p: i for i, p in enumerate(pts)}
    parent = list(range(len(pts)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in X.closure_at(k).pairs:
        ra, rb = find(idx[a]), find(idx[b])
        if ra != rb:
            parent[ra] = rb
    return len({find(i) for i in range(len(pts))})


def homology_colimit(X, d_max, basis_cap=DEFAULT_BASIS_CAP, full_table=True):
    """Homology at the stabilized closure plus a per-scale table up to stabilization."""
    stab = X.coarse.stabilization()
    groups = homology_at_scale(X, stab, d_max, basis_cap)
    warnings = []
    if X.window_tag is not None:
        warnings.append(
            f"window-relative: colimit taken over the {X.window_tag.name} window of "
            f"radius {X.window_tag.radius}"
        )
    table: Dict[int, List[FGAbGroup]] = {}
    scales = list(range(min(1, stab), stab + 1)) or [0]
    if full_table:
        for s in scales:
            table[s] = groups if s == stab else homology_at_scale(X, s, d_max, basis_cap)
    else:
        for s in scales:
            table[s] = groups if s == stab else [FGAbGroup(_component_count(X, s), ())]
        warnings.append(
            "per-scale table lists degree-0 component counts only; the terminal value is exact"
        )
    return groups, StabilizationReport(stab, table, warnings)


# ------------------------------------------------------- presentations


def _matvec(A, v):
    return [sum(a * b for a, b in zip(row, v)) for row in A]


@dataclass
class HomologyPresentation:
    """H_n at a scale with enough bookkeeping to take class coordinates of cycles."""

    degree: int
    scale: int
    group: FGAbGroup
    basis: List[tuple]
    index: Dict[tuple, int]
    rank_dn: int
    V: List[List[int]]
    kernel_basis: List[List[int]]  # columns, each of length len(basis)
    factors: List[int]  # invariant factors of the image presentation, with 1s
    Uprime: List[List[int]]
    Uprime_inv: List[List[int]]

    @property
    def generator_count(self):
        return len(self.group.torsion) + self.group.free_rank

    def generator_chains(self):
        # kernel_basis holds columns; generator i mixes them with weights Uprime[:, i]
        t = len(self.kernel_basis)
        s = len(self.factors)
        cols = [i for i in range(s) if self.factors[i] >= 2] + list(range(s, t))
        out = []
        for i in cols:
            vec = [0] * len(self.basis)
            for a in range(t):
                coeff = self.Uprime[a][i]
                if coeff:
                    for r, x in enumerate(self.kernel_basis[a]):
                        vec[r] += coeff * x
            out.append(vec)
        return out

    def class_coordinates(self, chain):
        """Coordinates (torsion parts reduced mod their orders, then free parts)."""
        if isinstance(chain, dict):
            vec = [0] * len(self.basis)
            for t, c in chain.items():
                vec[self.index[t]] += c
        else:
            vec = list(chain)
        y = _matvec(self.V, vec)
        if any(y[i] for i in range(self.rank_dn)):
            raise HomologyError("chain is not a cycle at this scale")
        a0 = y[self.rank_dn:]
        a = _matvec(self.Uprime_inv, a0)
        s = len(self.factors)
        tors = [a[i] % self.factors[i] for i in range(s) if self.factors[i] >= 2]
        free = list(a[s:])
        return tuple(tors + free)


def homology_presentation(X, k, n, basis_cap=DEFAULT_BASIS_CAP) -> HomologyPresentation:
    cc = chain_complex(X, k, n + 1, basis_cap)
    return _presentation_from_complex(cc.bases[n], cc.boundaries[n] if n else None,
                                      cc.boundaries[n + 1], n, k)


def _presentation_from_complex(basis, d_n, d_next, degree, scale):
    c = len(basis)
    if d_n is not None:
        snf = smith_normal_form(d_n, track_U=False)
        r = snf.rank
        V, Vi = snf.V, snf.V_inv
    else:
        r = 0
        V, Vi = _eye(c), _eye(c)
    t = c - r
    kernel_cols = [[Vi[row][r + i] for row in range(c)] for i in range(t)]
    # image of d_next in kernel coordinates
    wcols = []
    if d_next is not None and d_next.shape[1]:
        coo = d_next.tocoo()
        bycol: Dict[int, List[Tuple[int, int]]] = {}
        for rr, cc_, vv in zip(coo.row, coo.col, coo.data):
            bycol.setdefault(int(cc_), []).append((int(rr), int(vv)))
        seen = set()
        for j in sorted(bycol):
            col = [0] * t
            for rr, vv in bycol[j]:
                for i in range(t):
                    vcoef = V[r + i][rr]
                    if vcoef:
                        col[i] += vv * vcoef
            key = tuple(col)
            if any(col) and key not in seen:
                seen.add(key)
                wcols.append(col)
    if wcols:
        W = [[wcols[j][i] for j in range(len(wcols))] for i in range(t)]
        wsnf = smith_normal_form(W, track_V=False)
        factors = [wsnf.S[i][i] for i in range(min(t, len(wcols))) if wsnf.S[i][i] != 0]
        Uprime, Uprime_inv = wsnf.U, wsnf.U_inv
    else:
        factors = []
        Uprime, Uprime_inv = _eye(t), _eye(t)
    group = FGAbGroup(t - len(factors), tuple(d for d in factors if d >= 2))
    index = {tp: i for i, tp in enumerate(basis)}
    return HomologyPresentation(degree, scale, group, list(basis), index, r, V,
                                kernel_cols, factors, Uprime, Uprime_inv)


# ------------------------------------------------------- induced maps


def _shift_at(f: SpaceMap, k):
    src, tgt = f.source, f.target
    pairs = [(f(a), f(b)) for a, b in src.closure_at(k).pairs]
    cap = tgt.coarse.stabilization()
    return _least_containing_scale(tgt, pairs, cap)


def _chain_map_matrix(f: SpaceMap, basis_src, index_tgt):
    rows, cols, data = [], [], []
    for col, t in enumerate(basis_src):
        img = tuple(f(x) for x in t)
        if any(img[i] == img[i + 1] for i in range(len(img) - 1)):
            continue
        rows.append(index_tgt[img])
        cols.append(col)
        data.append(1)
    return sp.csc_matrix(
        (np.asarray(data, dtype=np.int64), (rows, cols)),
        shape=(len(index_tgt), len(basis_src)),
    )


@dataclass
class InducedMap:
    map: SpaceMap
    degree: int
    source_scale: int
    target_scale: int
    source: HomologyPresentation
    target: HomologyPresentation
    chain_matrix: sp.csc_matrix
    matrix: List[List[int]]  # columns = images of source generators in target coordinates


def induced_map(f: SpaceMap, k_source, n, target_scale=None, basis_cap=DEFAULT_BASIS_CAP):
    """Chain-level and homology-level matrices of a controlled map at a scale."""
    shift = _shift_at(f, k_source)
    if shift is None:
        bad = next(
            (p for p in f.source.closure_at(k_source).pairs
             if not f.target.coarse.related_at(f.target.coarse.stabilization(), f(p[0]), f(p[1]))),
            None,
        )
        raise NotControlledAtScale(k_source, bad)
    kt = shift if target_scale is None else target_scale
    if kt < shift:
        raise NotControlledAtScale(k_source, None)
    src = homology_presentation(f.source, k_source, n, basis_cap)
    tgt = homology_presentation(f.target, kt, n, basis_cap)
    chain = _chain_map_matrix(f, src.basis, tgt.index)
    coo = chain.tocoo()
    entries = [(int(r), int(c), int(v)) for r, c, v in zip(coo.row, coo.col, coo.data)]
    cols = []
    for g in src.generator_chains():
        img = [0] * len(tgt.basis)
        for r, c, v in entries:
            gv = g[c]
            if gv:
                img[r] += v * gv
        cols.append(list(tgt.class_coordinates(img)))
    matrix = [[cols[j][i] for j in range(len(cols))] for i in range(tgt.generator_count)]
    return InducedMap(f, n, k_source, kt, src, tgt, chain, matrix)


# ------------------------------------------------------------ prism


@dataclass
class PrismResult:
    source_scale: int
    target_scale: int
    closeness: int
    h: Dict[int, sp.csc_matrix]
    verified: bool


def prism(f: SpaceMap, g: SpaceMap, k, n, basis_cap=DEFAULT_BASIS_CAP):
    """Chain homotopy between C(f) and C(g) with the prism identity checked exactly."""
    if f.source is not g.source or f.target is not g.target:
        raise NotClose("prism needs a parallel pair of maps")
    c = are_close(f, g)
    if c is None:
        raise NotClose("maps are not close at any scale up to stabilization")
    sf = _shift_at(f, k)
    sg = _shift_at(g, k)
    if sf is None or sg is None:
        raise NotControlledAtScale(k, None)
    # closures agree past stabilization, so capping keeps the same complex
    kt = min(max(sf, sg) + c, f.target.coarse.stabilization())
    src_cc = chain_complex(f.source, k, n, basis_cap)
    tgt_cc = chain_complex(f.target, kt, n + 1, basis_cap)
    tgt_index = [{t: i for i, t in enumerate(b)} for b in tgt_cc.bases]
    hmats: Dict[int, sp.csc_matrix] = {}
    for m in range(n + 1):
        rows, cols, data = [], [], []
        for col, t in enumerate(src_cc.bases[m]):
            fx = [f(x) for x in t]
            gx = [g(x) for x in t]
            for i in range(m + 1):
                pr = tuple(fx[: i + 1]) + tuple(gx[i:])
                if any(pr[a] == pr[a + 1] for a in range(len(pr) - 1)):
                    continue
                rows.append(tgt_index[m + 1][pr])
                cols.append(col)
                data.append(1 if i % 2 == 0 else -1)
        hmats[m] = sp.csc_matrix(
            (np.asarray(data, dtype=np.int64), (rows, cols)),
            shape=(len(tgt_cc.bases[m + 1]), len(src_cc.bases[m])),
        )
    verified = True
    for m in range(n + 1):
        F = _chain_map_matrix(f, src_cc.bases[m], tgt_index[m])
        G = _chain_map_matrix(g, src_cc.bases[m], tgt_index[m])
        lhs = tgt_cc.boundaries[m + 1] @ hmats[m]
        if m >= 1:
            lhs = lhs + hmats[m - 1] @ src_cc.boundaries[m]
        if (lhs - (G - F)).nnz != 0:
            verified = False
    return PrismResult(k, kt, c, hmats, verified)


# ----------------------------------------------------------- swindle


def swindle_identity_check(X, f: SpaceMap, B, J, k=1, n=1, basis_cap=DEFAULT_BASIS_CAP):
    """Truncated Eilenberg-swindle identity, exact on chains seen by the bounded set B.

    With S_J the sum of the chain maps of f^0..f^J, the identity S - C(f)S = id
    holds after projecting onto tuples that meet B, provided f^J(X) misses B.
    """
    Bset = X.ground.check_subset(B)
    powers = [SpaceMap(X, X, {p: p for p in X.points})]
    for _ in range(J):
        powers.append(f.compose(powers[-1]))
    if Bset:
        img = {powers[J](p) for p in X.points}
        hit = img & Bset
        if hit:
            raise WindowTooSmall(J, sorted(hit)[0])
    shifts = []
    for j in range(J + 1):
        s = _shift_at(powers[j], k)
        if s is None:
            raise NotControlledAtScale(k, None)
        shifts.append(s)
    K0 = max([k] + shifts)
    sF = _shift_at(f, K0)
    if sF is None:
        raise NotControlledAtScale(K0, None)
    K1 = max(K0, sF)
    for deg in range(n + 1):
        basis_k = controlled_tuples(X, k, deg, basis_cap)
        basis_K0 = controlled_tuples(X, K0, deg, basis_cap) if K0 != k else basis_k
        basis_K1 = controlled_tuples(X, K1, deg, basis_cap) if K1 != K0 else basis_K0
        idx_K0 = {t: i for i, t in enumerate(basis_K0)}
        idx_K1 = {t: i for i, t in enumerate(basis_K1)}
        ident = SpaceMap(X, X, {p: p for p in X.points})
        S = None
        for j in range(J + 1):
            M = _chain_map_matrix(powers[j], basis_k, idx_K0)
            S = M if S is None else S + M
        E = _chain_map_matrix(ident, basis_K0, idx_K1)
        Phi = _chain_map_matrix(f, basis_K0, idx_K1)
        incl = _chain_map_matrix(ident, basis_k, idx_K1)
        lhs = E @ S - Phi @ S - incl
        proj = np.fromiter(
            (1 if any(x in Bset for x in t) else 0 for t in basis_K1),
            dtype=np.int64,
            count=len(basis_K1),
        )
        P = sp.diags(proj, format="csc", dtype=np.int64)
        if (P @ lhs).nnz != 0:
            return False
    return True


# ------------------------------------------------- relative homology


def _relative_bases(nbrs, sets, inside, d_max, basis_cap, scale):
    """Bases of the quotient complex by the subcomplex of tuples inside a subset."""
    bases = []
    for deg in range(d_max + 1):
        basis = []
        for t in _iter_controlled(nbrs, sets, deg):
            if all(inside[i] for i in t):
                continue
            if basis_cap is not None and len(basis) >= basis_cap:
                raise DegreeCapExceeded(deg, scale, basis_cap)
            basis.append(t)
        bases.append(basis)
    return bases


def _relative_boundary(basis_n, index_prev, inside, n):
    rows, cols, data = [], [], []
    for col, t in enumerate(basis_n):
        for i in range(n + 1):
            if 0 < i < n and t[i - 1] == t[i + 1]:
                continue
            face = t[:i] + t[i + 1:]
            if all(inside[x] for x in face):
                continue
            rows.append(index_prev[face])
            cols.append(col)
            data.append(1 if i % 2 == 0 else -1)
    return sp.csc_matrix(
        (np.asarray(data, dtype=np.int64), (rows, cols)),
        shape=(len(index_prev), len(basis_n)),
    )


@dataclass
class RelativeHomology:
    groups: List[FGAbGroup]
    prefix_index: int
    member: frozenset
    scale: int
    warnings: List[str] = field(default_factory=list)


def relative_homology(X, family: BigFamilyPrefix, k, d_max, basis_cap=DEFAULT_BASIS_CAP):
    """Homology of C(X)/C(Y_m) for the last family member Y_m (finite-prefix stand-in)."""
    m = len(family.members) - 1
    Y = family.members[m]
    nbrs, sets = _space_tables(X, k)
    pts = X.points
    inside = [p in Y for p in pts]
    bases = _relative_bases(nbrs, sets, inside, d_max + 1, basis_cap, k)
    mats: List[Optional[sp.csc_matrix]] = [None]
    for n in range(1, d_max + 2):
        index_prev = {t: i for i, t in enumerate(bases[n - 1])}
        mats.append(_relative_boundary(bases[n], index_prev, inside, n))
    groups = []
    for n in range(d_max + 1):
        groups.append(_group_from_boundaries(len(bases[n]), mats[n] if n else None, mats[n + 1]))
    warnings = [f"relative to prefix member Y_{m} (finite-prefix stand-in for the colimit)"]
    if X.window_tag is not None:
        warnings.append("window-relative values")
    return RelativeHomology(groups, m, Y, k, warnings)


# ------------------------------------------------------------ mv_check


@dataclass
class ExcisionReport:
    scale: int
    d_max: int
    complement_index: int
    prefix_index: int
    groups_sub: List[FGAbGroup]
    groups_full: List[FGAbGroup]
    iso: List[bool]
    basis_bijection: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def all_iso(self):
        return all(self.iso)


def _quotient_presentations(points, nbrs, sets, inside, k, d_max, basis_cap):
    bases = _relative_bases(nbrs, sets, inside, d_max + 1, basis_cap, k)
    mats: List[Optional[sp.csc_matrix]] = [None]
    for n in range(1, d_max + 2):
        index_prev = {t: i for i, t in enumerate(bases[n - 1])}
        mats.append(_relative_boundary(bases[n], index_prev, inside, n))
    pres = []
    for n in range(d_max + 1):
        named = [tuple(points[i] for i in t) for t in bases[n]]
        pres.append(_presentation_from_complex(named, mats[n] if n else None,
                                               mats[n + 1], n, k))
    return bases, pres


def _surjective_over_Z(matrix, target: HomologyPresentation):
    """matrix columns = images in target generator coordinates; checks surjectivity."""
    gens = target.generator_count
    if gens == 0:
        return True
    cols = [[matrix[i][j] for i in range(gens)] for j in range(len(matrix[0]) if matrix else 0)]
    tors = list(target.group.torsion)
    for i, d in enumerate(tors):
        rel = [0] * gens
        rel[i] = d
        cols.append(rel)
    if not cols:
        return False
    A = [[cols[j][i] for j in range(len(cols))] for i in range(gens)]
    r, facs = _sparse_invariants([{j: v for j, v in enumerate(row) if v} for row in A])
    return r == gens and all(d == 1 for d in facs)


def mv_check(X, Z, family: BigFamilyPrefix, k, d_max, basis_cap=DEFAULT_BASIS_CAP):
    """Excision shadow: compare H(Z, Z∩Y_m) with H(X, Y_m) through the inclusion."""
    Zset = X.ground.check_subset(Z)
    i0 = None
    for i, Y in enumerate(family.members):
        if Zset | Y == frozenset(X.points):
            i0 = i
            break
    if i0 is None:
        missing = sorted(frozenset(X.points) - (Zset | family.members[-1]))[:3]
        raise NotComplementary(
            f"no family member completes Z to X; sample uncovered points {missing}"
        )
    m = family.witness.get((i0, k))
    if m is None:
        raise PrefixTooShort(i0, k)
    Ym = family.members[m]
    pts = X.points
    nbrs, sets = _space_tables(X, k)
    inside_full = [p in Ym for p in pts]
    bases_full, pres_full = _quotient_presentations(pts, nbrs, sets, inside_full, k, d_max, basis_cap)

    zpts = [p for p in pts if p in Zset]
    zidx = {p: i for i, p in enumerate(zpts)}
    old = {p: i for i, p in enumerate(pts)}
    znbrs = [[zidx[q] for q in (pts[j] for j in nbrs[old[p]]) if q in zidx] for p in zpts]
    zsets = [set(r) for r in znbrs]
    inside_sub = [p in Ym for p in zpts]
    bases_sub, pres_sub = _quotient_presentations(zpts, znbrs, zsets, inside_sub, k, d_max, basis_cap)

    bijection = all(
        [tuple(zpts[i] for i in t) for t in bases_sub[n]]
        == [tuple(pts[i] for i in t) for t in bases_full[n]]
        for n in range(d_max + 2)
    )
    iso = []
    for n in range(d_max + 1):
        src, tgt = pres_sub[n], pres_full[n]
        if src.group != tgt.group:
            iso.append(False)
            continue
        cols = []
        for gch in src.generator_chains():
            img = [0] * len(tgt.basis)
            for i, v in enumerate(gch):
                if v:
                    t_full = src.basis[i]
                    img[tgt.index[t_full]] += v
            cols.append(list(tgt.class_coordinates(img)))
        matrix = [[cols[j][i] for j in range(len(cols))] for i in range(tgt.generator_count)]
        iso.append(_surjective_over_Z(matrix, tgt))
    warnings = [
        f"complementary member index {i0}, quotient taken at prefix index {m}",
    ]
    if X.window_tag is not None:
        warnings.append("window-relative values")
    return ExcisionReport(k, d_max, i0, m, [p.group for p in pres_sub],
                          [p.group for p in pres_full], iso, bijection, warnings)


# ----------------------------------------------------- rips backend


@dataclass
class SimplicialComplex:
    """Finite simplicial complex; simplices are index tuples, strictly increasing."""

    vertices: List
    simplices: List[List[tuple]]

    @property
    def dim_built(self):
        return len(self.simplices) - 1

    def boundary(self, n):
        if n < 1 or n > self.dim_built:
            raise ValueError("degree out of the built range")
        index_prev = {s: i for i, s in enumerate(self.simplices[n - 1])}
        rows, cols, data = [], [], []
        for col, s in enumerate(self.simplices[n]):
            for i in range(n + 1):
                face = s[:i] + s[i + 1:]
                rows.append(index_prev[face])
                cols.append(col)
                data.append(1 if i % 2 == 0 else -1)
        return sp.csc_matrix(
            (np.asarray(data, dtype=np.int64), (rows, cols)),
            shape=(len(self.simplices[n - 1]), len(self.simplices[n])),
        )

    def homology(self, d_max):
        """Groups in degrees 0..d_max.

        Degree d is exact for the complex as built; build through d+1 when the
        complex is a truncation of something deeper (skeleton homology otherwise).
        """
        out = []
        for n in range(d_max + 1):
            c = len(self.simplices[n]) if n <= self.dim_built else 0
            d_n = self.boundary(n) if 1 <= n <= self.dim_built else None
            d_next = self.boundary(n + 1) if n + 1 <= self.dim_built else None
            out.append(_group_from_boundaries(c, d_n, d_next))
        return out

    def betti(self, d_max):
        return [g.free_rank for g in self.homology(d_max)]


def _cliques(nbrs, sets, d_max, cap, scale):
    """Strictly increasing index tuples spanning cliques, by dimension."""
    out = [[] for _ in range(d_max + 1)]
    total = 0

    def grow(s, cand):
        nonlocal total
        dim = len(s) - 1
        out[dim].append(s)
        total += 1
        if cap is not None and total > cap:
            raise DegreeCapExceeded(dim, scale, cap)
        if dim == d_max:
            return
        last = s[-1]
        for j in cand:
            if j > last:
                grow(s + (j,), [t for t in cand if t in sets[j]])

    for i in range(len(nbrs)):
        grow((i,), [j for j in nbrs[i] if j > i])
    return out


def rips_complex(X, k, d_max, basis_cap=DEFAULT_BASIS_CAP, points=None):
    """Clique complex of the symmetrized relation at scale k.

    With points given, uses the relation induced on that subset (in ambient order).
    """
    if points is None:
        verts = list(X.points)
        nbrs, sets = _space_tables(X, k)
    else:
        sub = X.ground.check_subset(points)
        verts = [p for p in X.points if p in sub]
        ent = X.closure_at(k)
        vi = {p: i for i, p in enumerate(verts)}
        sets = [set() for _ in verts]
        for a, b in ent.pairs:
            if a in vi and b in vi:
                sets[vi[a]].add(vi[b])
        nbrs = [sorted(s) for s in sets]
    simp = _cliques(nbrs, sets, d_max, basis_cap, k)
    return SimplicialComplex(verts, simp)
