"""Strata [sequence, n, r, beta] and their invariants.

Covers levels, characteristic polynomials, the fundamental / simple /
semisimple predicates, Hensel splitting into beta-stable orthogonal
components, the centralizer decomposition A = B + Bperp, graded
bijectivity of ad(beta), lattice recovery for anisotropic components,
and the half-integral and third-level case analysis.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from math import gcd

import numpy as np

from .arith import LocalElem, PrecisionExhausted
from .hermitian import Mat, is_skew, sigma
from .lattices import ExpoMat, Sequence, depth_of, filtration, standard_sequence
from .windows import Solver, Subspace, Window, rref


class NotIntegral(Exception):
    pass


class ShapeMismatch(Exception):
    pass


class NotSplit(Exception):
    pass


class RankUnstable(Exception):
    pass


class NotAnisotropic(Exception):
    pass


class NotFundamental(Exception):
    pass


# ---------------------------------------------------------------------------
# polynomials over the local field (lists of LocalElem, index = degree)

def padd(a, b):
    n = max(len(a), len(b))
    K = (a or b)[0].K
    z = LocalElem.zero(K)
    return [(a[i] if i < len(a) else z) + (b[i] if i < len(b) else z) for i in range(n)]


def pneg(a):
    return [-c for c in a]


def pmul(a, b):
    K = a[0].K
    out = [LocalElem.zero(K) for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if x.is_zero_known():
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def pdivmod_monic(a, b):
    """Division by a monic polynomial; exact over the series ring."""
    K = a[0].K
    r = list(a)
    q = [LocalElem.zero(K)] * max(1, len(a) - len(b) + 1)
    while len(r) >= len(b):
        c = r[-1]
        d = len(r) - len(b)
        q[d] = q[d] + c
        for i, x in enumerate(b):
            r[d + i] = r[d + i] - c * x
        r.pop()
    return q, r


def peval_mat(poly, Y: Mat):
    K = Y.K
    acc = Mat.zero(K)
    for c in reversed(poly):
        acc = acc * Y + Mat.identity(K).scale(c)
    return acc


def ptrunc(poly, prec):
    """Exact canonical representatives of the coefficients mod pi^prec."""
    return [c.rep_mod(prec) for c in poly]


def _perm_sign(perm):
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def charpoly_rows(ctx, rows):
    """det(X - M) for a square matrix given as nested LocalElem lists."""
    d = len(rows)
    K = ctx.K
    one = LocalElem.integer(K, 1)
    zero = LocalElem.zero(K)
    ent = [[([-rows[i][j], one] if i == j else [-rows[i][j], zero]) for j in range(d)]
           for i in range(d)]
    total = [zero] * (d + 1)
    for perm in permutations(range(d)):
        term = ent[0][perm[0]]
        for i in range(1, d):
            term = pmul(term, ent[i][perm[i]])
        if _perm_sign(perm) < 0:
            term = pneg(term)
        total = padd(total, term)
    return total


def charpoly(Y: Mat):
    return charpoly_rows(_CtxShim(Y.K), [[Y.e[i][j] for j in range(4)] for i in range(4)])


class _CtxShim:
    def __init__(self, K):
        self.K = K


# ---------------------------------------------------------------------------
# polynomials over the residue field kF (lists of int codes, index = degree)

def rtrim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def rmul(K, a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] = K.add(out[i + j], K.mul(x, y))
    return rtrim(out)


def radd(K, a, b):
    n = max(len(a), len(b))
    return rtrim([K.add(a[i] if i < len(a) else 0, b[i] if i < len(b) else 0)
                  for i in range(n)])


def rsub(K, a, b):
    n = max(len(a), len(b))
    return rtrim([K.sub(a[i] if i < len(a) else 0, b[i] if i < len(b) else 0)
                  for i in range(n)])


def rdivmod(K, a, b):
    a = rtrim(a)
    b = rtrim(b)
    binv = K.inv(b[-1])
    q = [0] * max(1, len(a) - len(b) + 1)
    while len(a) >= len(b):
        c = K.mul(a[-1], binv)
        d = len(a) - len(b)
        if c:
            q[d] = c
            for i, x in enumerate(b):
                a[d + i] = K.sub(a[d + i], K.mul(c, x))
        a.pop()
        while a and a[-1] == 0:
            a.pop()
    return rtrim(q), rtrim(a)


def rgcd(K, a, b):
    a, b = rtrim(a), rtrim(b)
    while b:
        _, r = rdivmod(K, a, b)
        a, b = b, r
    if a:
        c = K.inv(a[-1])
        a = [K.mul(c, x) for x in a]
    return a


def reval(K, a, x):
    acc = 0
    for c in reversed(a):
        acc = K.add(K.mul(acc, x), c)
    return acc


def rbezout(K, a, b):
    """(u, v) with u*a + v*b = 1 for coprime a, b over kF."""
    r0, r1 = rtrim(a), rtrim(b)
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while r1:
        q, r = rdivmod(K, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, rsub(K, s0, rmul(K, q, s1))
        t0, t1 = t1, rsub(K, t0, rmul(K, q, t1))
    assert len(r0) == 1, "polynomials not coprime"
    c = K.inv(r0[0])
    return [K.mul(c, x) for x in s0], [K.mul(c, x) for x in t0]


def rfactor(K, poly):
    """Monic irreducible factorization of a kF polynomial, degree <= 4."""
    poly = rtrim(poly)
    assert poly and poly[-1] == 1, "factor input must be monic"
    out = {}
    work = poly

    def record(f):
        key = tuple(f)
        out[key] = out.get(key, 0) + 1

    while len(work) > 1:
        deg = len(work) - 1
        root = next((x for x in K.elements() if reval(K, work, x) == 0), None)
        if root is not None:
            lin = [K.neg(root), 1]
            q, rem = rdivmod(K, work, lin)
            assert not rem
            record(lin)
            work = q
            continue
        if deg <= 3:
            record(work)
            break
        found = False
        for c0 in K.elements():
            for c1 in K.elements():
                quad = [c0, c1, 1]
                if any(reval(K, quad, x) == 0 for x in K.elements()):
                    continue
                q, r = rdivmod(K, work, quad)
                if not r:
                    record(quad)
                    work = q
                    found = True
                    break
            if found:
                break
        if not found:
            record(work)
            break
    return out


def rfactor_groups(K, poly):
    """Pairwise-coprime factor groups irr^mult, sorted canonically."""
    fac = rfactor(K, poly)
    groups = []
    for irr, mult in fac.items():
        g = [1]
        for _ in range(mult):
            g = rmul(K, g, list(irr))
        groups.append((tuple(g), irr, mult))
    groups.sort(key=lambda t: (len(t[0]), t[0]))
    return [{"poly": list(g), "irr": list(irr), "mult": mult} for g, irr, mult in groups]


# ---------------------------------------------------------------------------
# strata

class Stratum:
    def __init__(self, ctx, seq: Sequence, n: int, r: int, beta: Mat, check=True):
        if not (n > r >= 0):
            raise ValueError("need n > r >= 0")
        self.ctx = ctx
        self.seq = seq
        self.n = n
        self.r = r
        self.beta = beta
        if check:
            if not filtration(seq, -n).contains_mat(beta):
                raise ValueError("beta outside the depth -n lattice")
        self.skew = seq.is_self_dual() and is_skew(beta)

    def level(self):
        return Fraction(self.n, self.seq.e)

    def gcd_en(self):
        return gcd(self.seq.e, self.n)

    def y_elem(self):
        k = self.gcd_en()
        Y = Mat.identity(self.beta.K)
        for _ in range(self.seq.e // k):
            Y = Y * self.beta
        return Y.scale(LocalElem.pi(self.beta.K, self.n // k))

    def char_polys(self):
        """(integral charpoly of y_elem, its residue reduction)."""
        Phi = charpoly(self.y_elem())
        for c in Phi[:-1]:
            if not c.is_zero_known() and c.valuation() < 0:
                raise NotIntegral(f"coefficient {c!r} not integral")
        phi = rtrim([c.digit(0) for c in Phi])
        return Phi, phi

    def residue_poly(self):
        return self.char_polys()[1]

    def is_fundamental(self):
        phi = self.residue_poly()
        return any(c != 0 for c in phi[:-1])

    def window(self, extra=2):
        e = self.seq.e
        lo = -(self.n + e + extra)
        hi = self.n + e + extra + 1
        return Window(self.ctx, filtration(self.seq, lo), filtration(self.seq, hi))

    def __repr__(self):
        return f"Stratum({self.seq!r}, n={self.n}, r={self.r})"


def strata_equivalent(s1: Stratum, s2: Stratum):
    if (s1.seq, s1.n, s1.r) != (s2.seq, s2.n, s2.r):
        raise ShapeMismatch("equivalence needs matching sequence, n and r")
    return filtration(s1.seq, -s1.r).contains_mat(s1.beta - s2.beta)


# ---------------------------------------------------------------------------
# beta normal forms

def halfint_beta(ctx, m, a, d, y):
    """Depth 4m-2 band form on L3: parameters a, d in o0, y in oF."""
    K = ctx.K
    se = ctx.se()
    pi = ctx.pi()
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    rows[0][3] = a * se
    rows[1][2] = y
    rows[2][1] = -(pi * y.conj())
    rows[3][0] = pi * d * se
    return Mat(K, rows).scale(ctx.pi(-m))


def oddlevel_beta(ctx, m, y):
    """Depth 6m-3 form on L4/L5: single oF parameter y."""
    K = ctx.K
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    rows[1][2] = y
    rows[2][1] = -(ctx.pi() * y.conj())
    return Mat(K, rows).scale(ctx.pi(-m))


def principal_beta(ctx, m, c, mm, y):
    """Depth 2m-1 band form on L1: parameters c, mm, y in oF."""
    K = ctx.K
    pi = ctx.pi()
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    rows[0][1] = pi * c
    rows[1][0] = mm
    rows[1][2] = y
    rows[1][3] = -c.conj()
    rows[2][1] = -(pi * y.conj())
    rows[3][1] = -(pi * mm.conj())
    return Mat(K, rows).scale(ctx.pi(-m))


def quarter_beta(ctx, n, u, v):
    """Depth n (coprime to 4) cyclic band form on L3, unit parameters u, v."""
    assert gcd(n, 4) == 1
    K = ctx.K
    L = filtration(standard_sequence(3), -n)
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    rows[0][2] = u.shift(L[0, 2])
    rows[2][3] = -(u.conj().shift(L[0, 2]))
    rows[1][0] = v.shift(L[1, 0])
    rows[3][1] = -(v.conj().shift(L[1, 0] + 1))
    M = Mat(K, rows)
    assert is_skew(M)
    return M


def third_beta(ctx, seq_id, nspec, a, w):
    """Depth 2*nspec band form on L4 or L5, gcd(nspec, 3) = 1.

    a is a k0 parameter steering the rank-3 block; w an oF parameter.
    """
    K = ctx.K
    se = ctx.se()
    if isinstance(a, int):
        a = ctx.num(a)
    n2 = 2 * nspec
    seq = standard_sequence(seq_id)
    L = filtration(seq, -n2)
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    if seq_id == 4:
        rows[0][3] = (a * se).shift(L[0, 3])
        rows[1][0] = w.shift(L[1, 0])
        rows[3][1] = -(w.conj().shift(L[1, 0] + 1))
    elif seq_id == 5:
        rows[0][2] = w.shift(L[0, 2])
        rows[2][3] = -(w.conj().shift(L[0, 2]))
        rows[3][0] = (a * se).shift(L[3, 0])
    else:
        raise ValueError("third-level strata live on sequences 4 and 5")
    M = Mat(K, rows)
    assert is_skew(M)
    return M


def sample_skew_in(ctx, seq, depth, deeper=None):
    """Random skew element of the depth lattice (mod an optional deeper one)."""
    w = Window(ctx, filtration(seq, depth - 1), filtration(seq, (deeper or depth) + seq.e + 2))
    S = w.lattice_subspace(filtration(seq, depth), skew=True)
    if deeper is not None:
        D = w.lattice_subspace(filtration(seq, deeper), skew=True)
        basis = S.quotient_basis(D)
    else:
        basis = S.basis
    v = np.zeros(w.dim, dtype=np.int64)
    for row in basis:
        v = v + ctx.rng.randrange(ctx.K.p) * row
    return w.unvec(v % ctx.K.p)


# ---------------------------------------------------------------------------
# Hensel lifting

def _lift_respoly(K, rp, deg=None):
    out = [LocalElem.const(K, c) for c in rp]
    if deg is not None:
        while len(out) < deg + 1:
            out.append(LocalElem.zero(K))
    return out


def hensel_pair(ctx, Phi, fbar, gbar, target_prec):
    """Lift a coprime monic residue factorization Phi = fbar * gbar.

    Returns (f, g, u, v) with Phi = f*g and u*f + v*g = 1 to target
    precision, f and g monic lifting fbar and gbar."""
    K = ctx.K
    ubar, vbar = rbezout(K, fbar, gbar)
    f = _lift_respoly(K, fbar)
    g = _lift_respoly(K, gbar)
    u = _lift_respoly(K, ubar)
    v = _lift_respoly(K, vbar)
    prec = 1
    while prec < target_prec:
        prec = min(2 * prec, target_prec)
        e = padd(Phi, pneg(pmul(f, g)))
        q, r = pdivmod_monic(pmul(v, e), f)
        f = ptrunc(padd(f, r), prec)
        g = ptrunc(padd(g, padd(pmul(u, e), pmul(q, g))), prec)
        b = padd(padd(pmul(u, f), pmul(v, g)), pneg([LocalElem.integer(K, 1)]))
        q2, r2 = pdivmod_monic(pmul(v, b), f)
        v = ptrunc(padd(v, pneg(r2)), prec)
        u = ptrunc(padd(u, pneg(padd(pmul(u, b), pmul(q2, g)))), prec)
    check = padd(Phi, pneg(pmul(f, g)))
    for c in check:
        if not c.is_zero_known() and c.valuation() < target_prec - 2:
            raise PrecisionExhausted("Hensel lifting stalled")
    return f, g, u, v


# ---------------------------------------------------------------------------
# components of a split stratum

def _apply(M: Mat, vec):
    return [sum((M.e[i][j] * vec[j] for j in range(1, 4)), M.e[i][0] * vec[0])
            for i in range(4)]


def _vec_reduce(basis, vec):
    """Eliminate vec against echelonized vectors (pivot = first known-nonzero)."""
    v = list(vec)
    for b in basis:
        piv = next(i for i, x in enumerate(b) if not x.is_zero_known())
        if not v[piv].is_zero_known():
            c = v[piv] * b[piv].inverse()
            v = [x - c * y for x, y in zip(v, b)]
    return v


def _solve_columns(cols, vec):
    """lam with sum lam_j cols[j] = vec, or None if outside the span."""
    d = len(cols)
    K = vec[0].K
    A = [[cols[j][i] for j in range(d)] for i in range(4)]
    b = list(vec)
    used = []
    for c in range(d):
        piv = None
        for i in range(4):
            if i in used or A[i][c].is_zero_known():
                continue
            if piv is None or A[i][c].valuation() < A[piv][c].valuation():
                piv = i
        if piv is None:
            return None
        used.append(piv)
        inv = A[piv][c].inverse()
        A[piv] = [x * inv for x in A[piv]]
        b[piv] = b[piv] * inv
        for i in range(4):
            if i != piv and not A[i][c].is_zero_known():
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[piv])]
                b[i] = b[i] - f * b[piv]
    for i in range(4):
        if i not in used and not b[i].is_zero_known():
            return None
    return [b[i] for i in used]


def _column_hnf(gens, rank):
    """Column reduction of lattice generators over the valuation ring."""
    cols = [list(c) for c in gens]
    basis = []
    rows_used = set()
    while cols:
        best = None
        for c in cols:
            for i, x in enumerate(c):
                if i in rows_used or x.is_zero_known():
                    continue
                v = x.valuation()
                if best is None or v < best[0]:
                    best = (v, i, c)
        if best is None:
            break
        _, i, c = best
        cols.remove(c)
        basis.append(c)
        rows_used.add(i)
        inv = c[i].inverse()
        for other in cols:
            if not other[i].is_zero_known():
                f = other[i] * inv
                for k in range(4):
                    other[k] = other[k] - f * c[k]
    assert len(basis) == rank, f"lattice rank {len(basis)} != {rank}"
    return basis


class Component:
    """One beta-stable summand of a split stratum."""

    def __init__(self, ctx, stratum, projector, factor_poly):
        self.ctx = ctx
        self.stratum = stratum
        self.projector = projector
        self.factor = factor_poly
        self.factor_res = rtrim([c.digit(0) for c in factor_poly])
        self.dim = len(self.factor_res) - 1
        self.basis = self._column_basis(projector)
        self.cells = [self._cell(l) for l in range(stratum.seq.e)]

    def _column_basis(self, P):
        cols = [[P.e[i][j] for i in range(4)] for j in range(4)]
        basis = []
        for c in cols:
            c = _vec_reduce(basis, c)
            if any(not x.is_zero_known() for x in c):
                basis.append(c)
        assert len(basis) == self.dim, "projector rank != factor degree"
        return basis

    def _cell(self, l):
        lat = self.stratum.seq.lat(l)
        gens = []
        for j in range(4):
            col = [self.projector.e[i][j].shift(lat.expo[j]) for i in range(4)]
            if any(not x.is_zero_known() for x in col):
                gens.append(col)
        return _column_hnf(gens, self.dim)

    def cell(self, l):
        t, r = divmod(l, self.stratum.seq.e)
        base = self.cells[r]
        if t == 0:
            return base
        return [[x.shift(t) for x in col] for col in base]

    def cell_contains(self, l, vec):
        cs = _solve_columns(self.cell(l), vec)
        if cs is None:
            return False
        return all(c.is_zero_known() or c.valuation() >= 0 for c in cs)

    def cell_equal(self, l1, l2):
        return (all(self.cell_contains(l2, col) for col in self.cell(l1))
                and all(self.cell_contains(l1, col) for col in self.cell(l2)))

    def beta_shift(self):
        """max t with beta * cell(l) inside cell(l + t) for all l."""
        s = self.stratum
        imgs = [[_apply(s.beta, col) for col in self.cell(l)] for l in range(s.seq.e)]
        if all(all(x.is_zero_known() for x in v) for vs in imgs for v in vs):
            return None  # beta restricted to the component is zero
        t = -(s.n + s.seq.e)
        best = None
        for l in range(s.seq.e):
            tl = t
            while all(self.cell_contains(l + tl + 1, v) for v in imgs[l]):
                tl += 1
            best = tl if best is None else min(best, tl)
        return best

    def strict_chain(self):
        """Indices of the distinct cells across one pi-period."""
        s = self.stratum
        idx = [0]
        for l in range(1, s.seq.e):
            if not self.cell_equal(l, idx[-1]):
                idx.append(l)
        return idx

    def chain_cell(self, chain, t):
        """Cell of the strictified (reindexed) chain at chain-index t."""
        e1 = len(chain)
        carry, r = divmod(t, e1)
        cols = self.cell(chain[r])
        if carry == 0:
            return cols
        return [[x.shift(carry) for x in col] for col in cols]

    def chain_contains(self, chain, t, vec):
        cs = _solve_columns(self.chain_cell(chain, t), vec)
        if cs is None:
            return False
        return all(c.is_zero_known() or c.valuation() >= 0 for c in cs)

    def chain_depth_of_beta(self, chain):
        """sup t with beta * chain(s) inside chain(s + t) for all s."""
        s = self.stratum
        best = None
        for sidx in range(len(chain)):
            imgs = [_apply(s.beta, col) for col in self.chain_cell(chain, sidx)]
            t = -(s.n + s.seq.e) * len(chain)
            while all(self.chain_contains(chain, sidx + t + 1, v) for v in imgs):
                t += 1
            best = t if best is None else min(best, t)
        return best

    def beta_matrix(self):
        cols = [self.coords(_apply(self.stratum.beta, b)) for b in self.basis]
        return [[cols[j][i] for j in range(len(cols))] for i in range(len(cols))]

    def coords(self, vec):
        cs = _solve_columns([list(b) for b in self.basis], vec)
        assert cs is not None, "vector outside the component"
        return cs

    def is_zero_block(self):
        return all(x == 0 for x in self.factor_res[:-1])


class SplittingData:
    def __init__(self, stratum, factors, projectors, components):
        self.stratum = stratum
        self.factors = factors
        self.projectors = projectors
        self.components = components


def _approx_same(M1, M2, ctx, floor=None, slack=8):
    D = M1 - M2
    if floor is None:
        floor = ctx.cfg.prec - slack
    for i in range(4):
        for j in range(4):
            a = D.e[i][j]
            if not a.is_zero_known() and a.valuation() < floor:
                return False
    return True


def hensel_split(stratum: Stratum) -> SplittingData:
    ctx = stratum.ctx
    K = ctx.K
    Phi, phi = stratum.char_polys()
    groups = rfactor_groups(K, phi)
    if len(groups) < 2:
        raise NotSplit("residue charpoly is a power of one irreducible")
    # all later membership tests involve valuations O(n); lifting to
    # 2n + 16 digits leaves a comfortable margin at a fraction of the cost
    target = min(ctx.cfg.prec, 2 * stratum.n + 16)
    y = stratum.y_elem()
    factors = []
    rest_poly, rest_res = Phi, phi
    for g in groups[:-1]:
        fbar = g["poly"]
        qbar, rbar = rdivmod(K, rest_res, fbar)
        assert not rbar
        f, g2, _, _ = hensel_pair(ctx, rest_poly, fbar, qbar, target)
        factors.append(f)
        rest_poly, rest_res = g2, qbar
    factors.append(rest_poly)
    projectors = []
    for i, f in enumerate(factors):
        rest = [LocalElem.integer(K, 1)]
        for j, g in enumerate(factors):
            if j != i:
                rest = pmul(rest, g)
        fbar = rtrim([c.digit(0) for c in f])
        rbar = rtrim([c.digit(0) for c in rest])
        _, _, u, v = hensel_pair(ctx, Phi, fbar, rbar, target)
        projectors.append(peval_mat(pmul(v, rest), y))
    I = Mat.identity(K)
    tot = Mat.zero(K)
    floor = target - 2 * stratum.n - 6
    for i, P in enumerate(projectors):
        tot = tot + P
        for j, Q in enumerate(projectors):
            expect = P if i == j else Mat.zero(K)
            if not _approx_same(P * Q, expect, ctx, floor=floor):
                raise PrecisionExhausted("projector idempotence failed at precision")
        if not _approx_same(P * stratum.beta, stratum.beta * P, ctx, floor=floor):
            raise PrecisionExhausted("projector does not commute with beta")
    if not _approx_same(tot, I, ctx, floor=floor):
        raise PrecisionExhausted("projectors do not sum to 1")
    if stratum.skew:
        for P in projectors:
            if not _approx_same(sigma(P), P, ctx, floor=floor):
                raise NotSplit("splitting not orthogonal for a skew stratum")
    # hand the components precision-marked projectors: digits beyond the
    # verified lifting depth are unknown, not junk
    cut = target - 8
    comps = [Component(ctx, stratum, P.truncate(cut), ptrunc(f, cut))
             for P, f in zip(projectors, factors)]
    # beta stability of the component cells
    for comp in comps:
        for l in range(stratum.seq.e):
            for col in comp.cell(l):
                img = _apply(stratum.beta, col)
                if any(not x.is_zero_known() for x in img):
                    assert comp.cell_contains(l - stratum.n, img), \
                        "component cell not beta-stable"
    return SplittingData(stratum, factors, projectors, comps)


def check_split_conditions(stratum: Stratum, sd: SplittingData):
    """The split/semisimple clauses, one boolean per condition."""
    report = {}
    n = stratum.n
    K = stratum.ctx.K
    nonzero = [c for c in sd.components if not c.is_zero_block()]
    zeroish = [c for c in sd.components if c.is_zero_block()]
    report["first_depth_exact"] = all(c.beta_shift() == -n for c in nonzero)
    report["first_factor_coprime_to_X"] = all(c.factor_res[0] != 0 for c in nonzero)
    report["rest_depth_shallower"] = all(
        (c.beta_shift() is None or c.beta_shift() > -n) for c in zeroish)
    ok = True
    for i in range(len(sd.components)):
        for j in range(i + 1, len(sd.components)):
            g = rgcd(K, sd.components[i].factor_res, sd.components[j].factor_res)
            if len(g) != 1:
                ok = False
    report["factors_pairwise_coprime"] = ok
    if stratum.skew:
        floor = min(stratum.ctx.cfg.prec, 2 * n + 16) - 2 * n - 6
        report["orthogonal"] = all(_approx_same(sigma(P), P, stratum.ctx, floor=floor)
                                   for P in sd.projectors)
    return report


# ---------------------------------------------------------------------------
# simplicity and semisimplicity

def simple_certificate(stratum: Stratum):
    """A sufficient-condition certificate of simplicity, or None.

    Route A: strict sequence of period 4 = dim V, gcd(n, 4) = 1 and
    fundamental.  Route B: beta^2 is a scalar of odd valuation (so
    F[beta] is ramified quadratic and beta is a minimal generator).
    """
    seq, n = stratum.seq, stratum.n
    K = stratum.ctx.K
    if (seq.is_strict() and seq.e == 4 and gcd(n, 4) == 1
            and stratum.is_fundamental() and depth_of(seq, stratum.beta) == -n):
        fac = rfactor(K, stratum.residue_poly())
        if len(fac) == 1:
            irr, mult = next(iter(fac.items()))
            if len(irr) == 2 and mult == 4 and irr[0] != 0:
                c = K.neg(irr[0])
                # the reduction of y acts as the scalar c
                scalar_ok = filtration(seq, 1).contains_mat(
                    stratum.y_elem() - Mat.identity(K).scale(LocalElem.const(K, c)))
                return {"route": "strict-coprime", "degree": 4, "ramification": 4,
                        "residue_root": c, "scalar_reduction": scalar_ok}
    B2 = stratum.beta * stratum.beta
    lam = B2.e[0][0]
    if not lam.is_zero_known():
        I = Mat.identity(K)
        if (B2 - I.scale(lam)).is_zero_known() and lam.valuation() % 2 == 1 \
                and depth_of(seq, stratum.beta) == -n:
            return {"route": "scalar-square", "degree": 2, "ramification": 2,
                    "square_valuation": lam.valuation()}
    return None


def component_simple_certificate(comp: Component):
    """Simplicity of a nonzero component via the strict reindexed chain,
    or the scalar-square route for 2-dimensional components."""
    ctx = comp.ctx
    K = ctx.K
    bm = comp.beta_matrix()
    if comp.dim == 2:
        sq = [[sum((bm[i][k] * bm[k][j] for k in range(1, 2)), bm[i][0] * bm[0][j])
               for j in range(2)] for i in range(2)]
        lam = sq[0][0]
        if (sq[0][1].is_zero_known() and sq[1][0].is_zero_known()
                and sq[1][1].same(lam) and not lam.is_zero_known()
                and lam.valuation() % 2 == 1):
            return {"route": "scalar-square", "degree": 2, "ramification": 2}
    chain = comp.strict_chain()
    e1 = len(chain)
    if e1 != comp.dim:
        return None
    nprime = -comp.chain_depth_of_beta(chain)
    if nprime is None or gcd(nprime, e1) != 1:
        return None
    # fundamental on the chain: residue charpoly of pi^{nprime} beta^{e1}
    acc = bm
    for _ in range(e1 - 1):
        acc = [[sum((acc[i][k] * bm[k][j] for k in range(1, e1)), acc[i][0] * bm[0][j])
                for j in range(e1)] for i in range(e1)]
    y = [[x.shift(nprime) for x in row] for row in acc]
    cp = charpoly_rows(ctx, y)
    for c in cp[:-1]:
        if not c.is_zero_known() and c.valuation() < 0:
            return None
    res = rtrim([c.digit(0) for c in cp])
    fac = rfactor(K, res)
    if len(fac) != 1:
        return None
    irr, mult = next(iter(fac.items()))
    if len(irr) == 2 and mult == e1 and irr[0] != 0:
        # total ramification cross-check: val(det beta|comp) = -nprime
        det = charpoly_rows(ctx, bm)[0]
        if e1 % 2:
            det = -det
        if det.valuation() == -nprime:
            return {"route": "strict-coprime", "degree": e1, "ramification": e1,
                    "residue_root": K.neg(irr[0]), "chain_depth": nprime}
    return None


def is_semisimple(stratum: Stratum):
    """Semisimplicity decision with a certificate dictionary."""
    cert = {"simple": None, "components": []}
    simple = simple_certificate(stratum)
    if simple is not None:
        cert["simple"] = simple
        return True, cert
    if not stratum.is_fundamental():
        cert["reason"] = "not fundamental and not certified simple"
        return False, cert
    try:
        sd = hensel_split(stratum)
    except NotSplit as exc:
        cert["reason"] = f"no splitting: {exc}"
        return False, cert
    cert["split_conditions"] = check_split_conditions(stratum, sd)
    ok = all(cert["split_conditions"].values())
    for comp in sd.components:
        if comp.is_zero_block():
            shift = comp.beta_shift()
            good = shift is None or shift > -stratum.n
            cert["components"].append({"zero_block": True, "dim": comp.dim,
                                       "shallow": good})
            ok = ok and good
        else:
            c = component_simple_certificate(comp)
            cert["components"].append({"zero_block": False, "dim": comp.dim,
                                       "simple": c})
            ok = ok and c is not None
    return ok, cert


# ---------------------------------------------------------------------------
# centralizer and the B / Bperp decomposition

_EIJ = [(i, j) for i in range(4) for j in range(4)]


def _f_kernel(ctx, rows):
    """Kernel over F of v -> v @ rows (rows of LocalElem lists)."""
    K = ctx.K
    work = [list(r) for r in rows]
    nrows = len(work)
    ncols = len(work[0])
    # transpose to treat kernel as solution space of linear equations
    eqs = [[work[r][c] for r in range(nrows)] for c in range(ncols)]
    pivots = {}
    rr = 0
    order = []
    for c in range(nrows):
        piv = None
        for r in range(rr, len(eqs)):
            x = eqs[r][c]
            if not x.is_zero_known():
                if piv is None or x.valuation() < eqs[piv][c].valuation():
                    piv = r
        if piv is None:
            continue
        eqs[rr], eqs[piv] = eqs[piv], eqs[rr]
        inv = eqs[rr][c].inverse()
        eqs[rr] = [x * inv for x in eqs[rr]]
        for r in range(len(eqs)):
            if r != rr and not eqs[r][c].is_zero_known():
                f = eqs[r][c]
                eqs[r] = [x - f * y for x, y in zip(eqs[r], eqs[rr])]
        pivots[c] = rr
        rr += 1
    free = [c for c in range(nrows) if c not in pivots]
    out = []
    for fc in free:
        v = [LocalElem.zero(K) for _ in range(nrows)]
        v[fc] = LocalElem.integer(K, 1)
        for c, r in pivots.items():
            v[c] = -eqs[r][fc]
        out.append(v)
    return out


class CentralizerData:
    def __init__(self, ctx, stratum, basisB, basisBperp):
        self.ctx = ctx
        self.stratum = stratum
        self.basisB = basisB
        self.basisBperp = basisBperp
        d = len(basisB)
        self.gram = [[(basisB[i] * basisB[j]).trace() for j in range(d)] for i in range(d)]
        self._solver = None  # built lazily: degenerate for wild components
        self.tame = True

    @property
    def dimB(self):
        return len(self.basisB)

    def solver(self):
        if self._solver is None:
            self._solver = _FLinSolver(self.ctx, self.gram)
        return self._solver

    def project(self, X: Mat) -> Mat:
        """Trace-orthogonal projection onto B."""
        t = [(X * b).trace() for b in self.basisB]
        cs = self.solver().solve(t)
        out = Mat.zero(self.ctx.K)
        for c, b in zip(cs, self.basisB):
            out = out + b.scale(c)
        return out

    def perp_part(self, X: Mat) -> Mat:
        return X - self.project(X)

    def in_B(self, X: Mat) -> bool:
        beta = self.stratum.beta
        return (beta * X - X * beta).is_zero_known()


class _FLinSolver:
    """Exact Gauss-Jordan inverse of a square LocalElem matrix."""

    def __init__(self, ctx, mat):
        d = len(mat)
        K = ctx.K
        aug = [list(row) + [LocalElem.integer(K, 1) if i == j else LocalElem.zero(K)
                            for j in range(d)] for i, row in enumerate(mat)]
        for c in range(d):
            piv = None
            for r in range(c, d):
                x = aug[r][c]
                if not x.is_zero_known():
                    if piv is None or x.valuation() < aug[piv][c].valuation():
                        piv = r
            if piv is None:
                raise RankUnstable("trace form degenerate on the centralizer")
            aug[c], aug[piv] = aug[piv], aug[c]
            inv = aug[c][c].inverse()
            aug[c] = [x * inv for x in aug[c]]
            for r in range(d):
                if r != c and not aug[r][c].is_zero_known():
                    f = aug[r][c]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
        self.inv = [row[d:] for row in aug]

    def solve(self, rhs):
        d = len(self.inv)
        return [sum((self.inv[i][j] * rhs[j] for j in range(1, d)),
                    self.inv[i][0] * rhs[0]) for i in range(d)]


def centralizer(stratum: Stratum) -> CentralizerData:
    ctx = stratum.ctx
    K = ctx.K
    beta = stratum.beta

    def ad_rows(prec=None):
        b = beta if prec is None else beta.truncate(prec)
        rows = []
        for (i, j) in _EIJ:
            E = Mat.unit(K, i + 1, j + 1)
            D = b * E - E * b
            rows.append([D.e[a][bb] for (a, bb) in _EIJ])
        return rows

    ker = _f_kernel(ctx, ad_rows())
    ker_lo = _f_kernel(ctx, ad_rows(prec=ctx.cfg.prec - 8))
    if len(ker) != len(ker_lo):
        raise RankUnstable("centralizer rank varies with precision")
    basisB = [Mat(K, [[v[4 * i + j] for j in range(4)] for i in range(4)]) for v in ker]
    tr_rows = []
    for (i, j) in _EIJ:
        E = Mat.unit(K, i + 1, j + 1)
        tr_rows.append([(E * b).trace() for b in basisB])
    # kernel of the map x -> (tr(x b_k))_k : rows indexed by E_ij coordinates
    perp = _f_kernel(ctx, tr_rows)
    basisP = [Mat(K, [[v[4 * i + j] for j in range(4)] for i in range(4)]) for v in perp]
    assert len(basisB) + len(basisP) == 16
    cd = CentralizerData(ctx, stratum, basisB, basisP)
    # for a wildly ramified component the trace form restricted to B is
    # singular and B meets Bperp; consumers needing the projection check
    # this flag
    try:
        cd.solver()
        cd.tame = True
    except RankUnstable:
        cd.tame = False
    return cd


# ---------------------------------------------------------------------------
# window-level checks for the decomposition and the adjoint bijections

def span_in_window(w: Window, mats, lattice=None, skew=False):
    """GF(p)-span of all digit shifts of the given matrices inside the window."""
    K = w.K
    lo_min = min(w.lo[i, j] for i in range(4) for j in range(4))
    hi_max = max(w.hi[i, j] for i in range(4) for j in range(4))
    unit_codes = [K.from_coords([1 if i == k else 0 for i in range(w.cl)])
                  for k in range(w.cl)]
    fam = []
    for b in mats:
        vals = [x.valuation() for r in b.e for x in r if not x.is_zero_known()]
        if not vals:
            continue
        vmin = min(vals)
        for t in range(lo_min - vmin, hi_max - vmin + 1):
            for code in unit_codes:
                M = b.scale(LocalElem.const(K, code, t))
                try:
                    fam.append(w.vec(M))
                except (ValueError, PrecisionExhausted):
                    continue
    S = Subspace.from_rows(fam, w.p, w.dim)
    if lattice is not None:
        S = S.intersect(w.lattice_subspace(lattice))
    if skew:
        S = S.intersect(w.skew_subspace())
    return S


def decomp_filtration_check(stratum: Stratum, k: int, cent=None, w=None) -> bool:
    """The depth-k lattice splits along B and Bperp (tame strata only)."""
    cent = cent or centralizer(stratum)
    if not cent.tame:
        raise RankUnstable("decomposition check needs a tame stratum")
    w = w or stratum.window()
    seq = stratum.seq
    L = filtration(seq, k)
    S = w.lattice_subspace(L)
    T = w.lattice_subspace(filtration(seq, k + 1))
    for row in S.quotient_basis(T):
        x = w.unvec(row)
        bpart = cent.project(x)
        if not (L.contains_mat(bpart) and L.contains_mat(x - bpart)):
            return False
    return True


def graded_ad_bijective(stratum: Stratum, k: int, cent=None, skew=False, w=None) -> bool:
    """ad(beta): Bperp grade at depth k -> Bperp grade at depth k - n
    is bijective (skew=True restricts to the skew parts)."""
    if stratum.beta.is_zero_known():
        return False  # degenerate control: the zero map certifies nothing
    cent = cent or centralizer(stratum)
    if not cent.tame:
        raise RankUnstable("graded adjoint check needs a tame stratum")
    w = w or stratum.window()
    seq, n = stratum.seq, stratum.n
    P = span_in_window(w, cent.basisBperp, skew=skew)
    Sk = w.lattice_subspace(filtration(seq, k), skew=skew).intersect(P)
    Sk1 = w.lattice_subspace(filtration(seq, k + 1), skew=skew).intersect(P)
    Tk = w.lattice_subspace(filtration(seq, k - n), skew=skew).intersect(P)
    Tk1 = w.lattice_subspace(filtration(seq, k - n + 1), skew=skew).intersect(P)
    Q = Sk.quotient_basis(Sk1)
    R = Tk.quotient_basis(Tk1)
    if len(Q) != len(R):
        return False
    if len(Q) == 0:
        return True
    solver = Solver(R, w.p)
    beta = stratum.beta
    img = []
    for row in Q:
        x = w.unvec(row)
        y = beta * x - x * beta
        cs = solver.coords(Tk1.reduce(w.vec(y)))
        if cs is None:
            return False
        img.append(cs)
    M, _ = rref(np.array(img), w.p)
    return M.shape[0] == len(Q)


# ---------------------------------------------------------------------------
# half-integral case analysis

def halfint_parameters(stratum, m):
    """Residue parameters (a, d, y) of the band normal form at depth 4m-2."""
    K = stratum.ctx.K
    beta = stratum.beta
    se_inv = K.inv(K.s)
    a_res = K.mul(beta.e[0][3].digit(-m), se_inv)
    d_res = K.mul(beta.e[3][0].digit(1 - m), se_inv)
    y_res = beta.e[1][2].digit(-m)
    return a_res, d_res, y_res


def classify_halfint(stratum: Stratum):
    """Case tag {ia, ib, ic} of a depth 4m-2 band stratum on L3."""
    K = stratum.ctx.K
    n = stratum.n
    assert n % 4 == 2, "half-integral classification needs depth 4m-2"
    if not stratum.is_fundamental():
        raise NotFundamental("classification requires a fundamental stratum")
    m = (n + 2) // 4
    a_res, d_res, y_res = halfint_parameters(stratum, m)
    ad = K.mul(a_res, d_res)
    if ad == 0:
        return "ic"
    lhs = K.mul(ad, K.of_k0(K.eps))
    if lhs == K.neg(K.norm(y_res)):
        return "ia"
    return "ib"


def normalize_halfint(stratum: Stratum) -> Stratum:
    """Band representative of the equivalence class at depth 4m-2 on L3.

    Reduces beta modulo the depth 3-4m lattice onto the band coordinates.
    """
    ctx = stratum.ctx
    n = stratum.n
    m = (n + 2) // 4
    w = stratum.window()
    T = w.lattice_subspace(filtration(stratum.seq, 1 - n), skew=True)
    band = w.unvec(T.reduce(w.vec(stratum.beta)))
    # the reduction lands on the band positions (1,4),(2,3),(3,2),(4,1)
    for (i, j) in ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 3),
                   (2, 0), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)):
        assert band.e[i][j].is_zero_known(), "band reduction has stray entries"
    return Stratum(ctx, stratum.seq, n, stratum.r, band)


def lambda2_beta(ctx, m, dd, y, nn):
    """Depth 2m-1 band form on L2: parameters dd, y, nn in oF."""
    K = ctx.K
    pi = ctx.pi()
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    rows[0][2] = dd
    rows[1][2] = y
    rows[2][0] = nn
    rows[2][1] = -(pi * y.conj())
    rows[2][3] = -dd.conj()
    rows[3][2] = -nn.conj()
    return Mat(K, rows).scale(ctx.pi(-m))


def reduction_inclusion(ctx, case, m=1):
    """Coset inclusions pushing shallow band cases into deeper sequences.

    "ic-a": a in p0 lands in the L4 lattice; "ic-d": d in p0, L5;
    "ii": principal form with vanishing corner, L4; "iii": the L2
    analogue, L5; "ib-neg" is the failing negative control.
    """
    s1 = standard_sequence(1)
    s2 = standard_sequence(2)
    s3 = standard_sequence(3)
    s4 = standard_sequence(4)
    s5 = standard_sequence(5)
    if case == "ic-a":
        beta = halfint_beta(ctx, m, ctx.pi() * ctx.one(), ctx.one(), ctx.one())
        return _coset_inside(beta, filtration(s3, 3 - 4 * m), filtration(s4, 3 - 6 * m))
    if case == "ic-d":
        beta = halfint_beta(ctx, m, ctx.one(), ctx.pi() * ctx.one(), ctx.one())
        return _coset_inside(beta, filtration(s3, 3 - 4 * m), filtration(s5, 3 - 6 * m))
    if case == "ii":
        beta = principal_beta(ctx, m, ctx.one(), ctx.zero(), ctx.one())
        return _coset_inside(beta, filtration(s1, 2 - 2 * m), filtration(s4, 3 - 6 * m))
    if case == "iii":
        beta = lambda2_beta(ctx, m, ctx.zero(), ctx.one(), ctx.zero())
        return _coset_inside(beta, filtration(s2, 2 - 2 * m), filtration(s5, 3 - 6 * m))
    if case == "ib-neg":
        beta = halfint_beta(ctx, m, ctx.one(), ctx.one(), ctx.zero())
        return _coset_inside(beta, filtration(s3, 3 - 4 * m), filtration(s4, 3 - 6 * m))
    raise ValueError(f"unknown reduction case {case!r}")


def _coset_inside(beta, coset: ExpoMat, target: ExpoMat):
    """beta + coset contained in the target lattice."""
    if not target.contains(coset):
        return False
    return target.contains_mat(beta)


# ---------------------------------------------------------------------------
# hermitian structure of the components

def _herm(K, v, w):
    from .hermitian import herm_form
    return herm_form(v, w, K)


def isotropy_f_plane(ctx, b1, b2):
    """Isotropy of a 2-dim hermitian space over F spanned by b1, b2."""
    K = ctx.K
    g1 = _herm(K, b1, b1)
    if g1.is_zero_known():
        return True
    h12 = _herm(K, b1, b2)
    c = (h12 * g1.inverse()).conj()
    b2p = [x - c * y for x, y in zip(b2, b1)]
    g2 = _herm(K, b2p, b2p)
    if g2.is_zero_known():
        return True
    return (g1.valuation() - g2.valuation()) % 2 == 0


def isotropy_e_plane(ctx, beta, lam, v1, v2):
    """Isotropy of a rank-2 space over the ramified quadratic E = F[beta],
    where beta^2 = lam is a scalar of odd valuation.

    The E-valued form is h_E(v, w) with h(v, xw) = tr_{E/F}(x h_E(v, w)).
    E over its fixed field is unramified, so isotropy is decided by
    valuation parity of the diagonalized Gram values.
    """
    K = ctx.K
    half = LocalElem.integer(K, 2).inverse()

    def h_e(v, w):
        c0 = _herm(K, v, w) * half
        c1 = _herm(K, v, _apply(beta, w)) * half * lam.inverse()
        return (c0, c1)

    def e_val(c):
        c0, c1 = c
        cands = []
        if not c0.is_zero_known():
            cands.append(2 * c0.valuation())
        if not c1.is_zero_known():
            cands.append(2 * c1.valuation() + lam.valuation())
        return min(cands) if cands else None

    def e_mul_vec(c, v):
        c0, c1 = c
        bv = _apply(beta, v)
        return [c0 * x + c1 * y for x, y in zip(v, bv)]

    g1 = h_e(v1, v1)
    if e_val(g1) is None:
        return True
    # v2' = v2 - (h_E(v1,v2)/g1) . v1 in the E-module structure
    num = h_e(v1, v2)
    g1inv_c0, g1inv_c1 = _e_inverse(ctx, g1, lam)
    c = _e_mul(ctx, num, (g1inv_c0, g1inv_c1), lam)
    v2p = [x - y for x, y in zip(v2, e_mul_vec(c, v1))]
    g2 = h_e(v2p, v2p)
    if e_val(g2) is None:
        return True
    return (e_val(g1) - e_val(g2)) % 2 == 0


def _e_mul(ctx, a, b, lam):
    a0, a1 = a
    b0, b1 = b
    return (a0 * b0 + a1 * b1 * lam, a0 * b1 + a1 * b0)


def _e_inverse(ctx, a, lam):
    a0, a1 = a
    # (a0 + a1 t)^-1 = (a0 - a1 t) / (a0^2 - a1^2 lam), t^2 = lam
    den = a0 * a0 - a1 * a1 * lam
    deninv = den.inverse()
    return (a0 * deninv, -(a1 * deninv))


def component_field_data(comp: Component):
    """(degree, ramification, residue degree) of F[beta_i] acting on V^i."""
    if comp.is_zero_block():
        return {"degree": 1, "ram": 1, "res": 1}
    cp = charpoly_rows(comp.ctx, comp.beta_matrix())
    det_val = cp[0].valuation()
    slope = Fraction(det_val, comp.dim)
    ram = slope.denominator
    K = comp.ctx.K
    fac = rfactor(K, comp.factor_res)
    irr_deg = len(next(iter(fac))) - 1
    return {"degree": comp.dim, "ram": ram, "res": irr_deg}


def ge_type_report(stratum: Stratum):
    """Per-component shape of the centralizer unitary group.

    Returns {"components": [record], "compact": bool}; a record carries
    the F-dimension, the field degree over F, ramification data and the
    isotropy verdict of the induced hermitian space (dim over E <= 2).
    """
    ctx = stratum.ctx
    K = ctx.K
    ok, cert = is_semisimple(stratum)
    assert ok, "centralizer report requires a semisimple stratum"
    records = []
    if cert["simple"] is not None:
        deg = cert["simple"]["degree"]
        dim_over_e = 4 // deg
        if dim_over_e == 1:
            iso = False
        elif deg == 2:
            B2 = stratum.beta * stratum.beta
            lam = B2.e[0][0]
            # E-basis of V over E: e1, e2 generate (beta e_i fills the rest)
            e1 = [ctx.one(), ctx.zero(), ctx.zero(), ctx.zero()]
            e2 = [ctx.zero(), ctx.one(), ctx.zero(), ctx.zero()]
            iso = isotropy_e_plane(ctx, stratum.beta, lam, e1, e2)
        else:
            raise NotImplementedError("unexpected simple degree")
        records.append({"dim_F": 4, "field_degree": deg,
                        "ram": cert["simple"]["ramification"],
                        "res": 4 // (deg * dim_over_e) if deg != 2 else 1,
                        "dim_over_E": dim_over_e, "isotropic": iso})
    else:
        sd = hensel_split(stratum)
        for comp in sd.components:
            if comp.is_zero_block():
                if comp.dim == 1:
                    iso = False
                elif comp.dim == 2:
                    iso = isotropy_f_plane(ctx, comp.basis[0], comp.basis[1])
                else:
                    raise NotImplementedError("zero block of dimension > 2")
                records.append({"dim_F": comp.dim, "field_degree": 1, "ram": 1,
                                "res": 1, "dim_over_E": comp.dim, "isotropic": iso})
            else:
                data = component_field_data(comp)
                records.append({"dim_F": comp.dim, "field_degree": data["degree"],
                                "ram": data["ram"], "res": data["res"],
                                "dim_over_E": 1, "isotropic": False})
    return {"components": records,
            "compact": all(not r["isotropic"] for r in records)}


def represents_one_line(ctx, vec):
    """A rank-one F-space represents 1 iff h(v, v) has even valuation."""
    return _herm(ctx.K, vec, vec).valuation() % 2 == 0


def third_level_zero_component(stratum: Stratum):
    """The rank-one summand of a fundamental third-level stratum."""
    sd = hensel_split(stratum)
    zero = [c for c in sd.components if c.is_zero_block()]
    assert len(zero) == 1 and zero[0].dim == 1, "expected a unique line component"
    return zero[0]


def represents_one_third_level(stratum: Stratum):
    comp = third_level_zero_component(stratum)
    return represents_one_line(stratum.ctx, comp.basis[0])


# ---------------------------------------------------------------------------
# torus-case numerical invariants

class OddIndexLog(Exception):
    pass


def torus_case_indices(stratum: Stratum, cent=None):
    """log_q of the square index and the count of the finite residue
    quotient used by the torus constructions.

    dim_eta_log is half of log_q of the graded index between the two
    mixed-depth unit groups.  rep_count is the order of the quotient of
    the compact centralizer group by its depth-(floor(n/2)+1) subgroup.
    """
    ctx = stratum.ctx
    cent = cent or centralizer(stratum)
    n = stratum.n
    h = (n + 1) // 2
    hp = n // 2 + 1
    w = stratum.window()
    seq = stratum.seq
    Sh = w.lattice_subspace(filtration(seq, h), skew=True)
    Shp = w.lattice_subspace(filtration(seq, hp), skew=True)
    Bspan = span_in_window(w, cent.basisB)
    inner = Shp.add(Sh.intersect(Bspan))
    j1h1_log = w.qlog(Sh.dim - inner.dim)
    if j1h1_log % 2:
        raise OddIndexLog(f"[J1:H1] has odd q-log {j1h1_log}")
    # residue quotient order of the centralizer unit group
    r0 = _residue_torus_order(stratum, cent, w)
    graded = 0
    for j in range(1, hp):
        Sj = w.lattice_subspace(filtration(seq, j), skew=True).intersect(Bspan)
        Sj1 = w.lattice_subspace(filtration(seq, j + 1), skew=True).intersect(Bspan)
        graded += Sj.dim - Sj1.dim
    rep_count = r0 * ctx.K.p ** graded
    return {"dim_eta_log": j1h1_log // 2, "j1h1_log": j1h1_log,
            "residue_order": r0, "graded_log": w.qlog(graded),
            "rep_count": rep_count}


def _residue_torus_order(stratum, cent, w):
    """Order of (G_E cap P_0) / (G_E cap P_1): residue solutions of the
    unitarity equation inside the centralizer order."""
    ctx = stratum.ctx
    K = ctx.K
    seq = stratum.seq
    B0 = span_in_window(w, cent.basisB).intersect(w.lattice_subspace(filtration(seq, 0)))
    B1 = span_in_window(w, cent.basisB).intersect(w.lattice_subspace(filtration(seq, 1)))
    Q = B0.quotient_basis(B1)
    count = 0
    L1 = filtration(seq, 1)
    for coeffs in _iter_coeffs(K.p, len(Q)):
        v = np.zeros(w.dim, dtype=np.int64)
        for c, row in zip(coeffs, Q):
            v = v + c * row
        z = w.unvec(v % K.p)
        zz = z * sigma(z)
        if L1.contains_mat(zz - Mat.identity(K)):
            count += 1
    return count


def _iter_coeffs(p, k):
    idx = [0] * k
    while True:
        yield tuple(idx)
        i = 0
        while i < k and idx[i] == p - 1:
            idx[i] = 0
            i += 1
        if i == k:
            return
        idx[i] += 1


# ---------------------------------------------------------------------------
# lattice recovery for anisotropic data

def recover_sequence(ctx, beta, n, e, d):
    """Reconstruct the self-dual sequence of a skew stratum from
    (beta, n, period, duality index), when every component is anisotropic
    and rank one over its field.
    """
    K = ctx.K
    k = gcd(e, n)
    Y = Mat.identity(K)
    for _ in range(e // k):
        Y = Y * beta
    Y = Y.scale(LocalElem.pi(K, n // k))
    Phi = charpoly(Y)
    phi = rtrim([c.digit(0) for c in Phi])
    groups = rfactor_groups(K, phi)
    target = min(ctx.cfg.prec, 2 * n + 16)
    if len(groups) == 1:
        projectors = [Mat.identity(K)]
        factors = [Phi]
    else:
        factors = []
        rest_poly, rest_res = Phi, phi
        for g in groups[:-1]:
            qbar, rbar = rdivmod(K, rest_res, g["poly"])
            assert not rbar
            f, g2, _, _ = hensel_pair(ctx, rest_poly, g["poly"], qbar, target)
            factors.append(f)
            rest_poly, rest_res = g2, qbar
        factors.append(rest_poly)
        projectors = []
        for i, f in enumerate(factors):
            rest = [LocalElem.integer(K, 1)]
            for j, g in enumerate(factors):
                if j != i:
                    rest = pmul(rest, g)
            fbar = rtrim([c.digit(0) for c in f])
            rbar = rtrim([c.digit(0) for c in rest])
            _, _, u, v = hensel_pair(ctx, Phi, fbar, rbar, target)
            projectors.append(peval_mat(pmul(v, rest), Y))
    chains = []
    cut = target - 8
    for P, f in zip(projectors, factors):
        chains.append(_component_chain(ctx, beta, P.truncate(cut), ptrunc(f, cut), n, e))
    # assemble: per component a nondecreasing jump pattern with the right period
    patterns = [_jump_patterns(e, ch["ram"]) for ch in chains]
    # volume prefilter: vol(dual L) = -vol(L) - val(det H) = -vol(L) - 1,
    # so a candidate with duality index d must satisfy
    # vol(j) + vol(d - j) = -1 for all j.  Volumes decompose as a base
    # volume plus per-chain relative indices.
    base_cols = [col for ch in chains for col in ch["lattice"](0)]
    base_vol = _det_val4(ctx, base_cols)
    vols = []
    for ch in chains:
        tmin = -3 * ch["ram"] - 2 * e
        tmax = 4 * ch["ram"] + 2 * e
        ref = ch["lattice"](0)
        table = {}
        for t in range(tmin, tmax + 1):
            cols = ch["lattice"](t)
            coords = [_solve_columns(ref, col) for col in cols]
            table[t] = _det_val(ctx, coords)
        vols.append(table)
    found = []
    for combo in _product_all(patterns):
        def vol_at(j):
            tot = base_vol
            for ci, (ch, pat) in enumerate(zip(chains, combo)):
                carry, r = divmod(j, e)
                t = pat[r] + carry * ch["ram"]
                tot += vols[ci][t]
            return tot
        if any(vol_at(j) + vol_at(d - j) != -1 for j in range(e)):
            continue
        cells = []
        for j in range(e):
            gens = []
            for ch, pat in zip(chains, combo):
                gens.extend(ch["lattice"](pat[j]))
            cells.append(gens)
        seqlike = _GenSeq(ctx, cells, e)
        if not seqlike.decreasing():
            continue
        # the stratum condition beta * L(j) inside L(j - n) pins the
        # distribution of jumps among the candidates
        stable = True
        for j in range(e):
            for col in seqlike.basis(j):
                img = _apply(beta, col)
                if any(not x.is_zero_known() for x in img) \
                        and not seqlike.contains_vec(j - n, img):
                    stable = False
                    break
            if not stable:
                break
        if not stable:
            continue
        if seqlike.duality_index() != d:
            continue
        found.append(seqlike)
    uniq = []
    for cand in found:
        if not any(cand.equals(u) for u in uniq):
            uniq.append(cand)
    if not uniq:
        raise NotAnisotropic("no self-dual assembly matches the duality index")
    assert len(uniq) == 1, "recovery is not unique"
    return uniq[0]


def _component_chain(ctx, beta, P, factor, n, e):
    """Uniformizer chain data of one component (rank one over its field)."""
    K = ctx.K
    res = rtrim([c.digit(0) for c in factor])
    dim = len(res) - 1
    basis = []
    for j in range(4):
        col = [P.e[i][j] for i in range(4)]
        col = _vec_reduce(basis, col)
        if any(not x.is_zero_known() for x in col):
            basis.append(col)
    assert len(basis) == dim
    zero_block = all(c == 0 for c in res[:-1])
    if zero_block and dim > 1:
        # fields cannot certify anisotropy: check for an isotropic vector
        if dim == 2 and isotropy_f_plane(ctx, basis[0], basis[1]):
            raise NotAnisotropic("a rank-two zero component is isotropic")
        raise NotImplementedError("anisotropic zero components of rank > 1")
    if zero_block:
        v0 = basis[0]
        powers = [v0]
        ram = 1
    else:
        # find a cyclic vector: beta-powers of v0 must span the component
        v0 = None
        for cand in basis:
            powers = [cand]
            for _ in range(dim - 1):
                powers.append(_apply(beta, powers[-1]))
            echelon = []
            for pw in powers:
                red = _vec_reduce(echelon, pw)
                if any(not x.is_zero_known() for x in red):
                    echelon.append(red)
            if len(echelon) == dim:
                v0 = cand
                break
        if v0 is None:
            raise NotAnisotropic("component is not rank one over its field")
        cpr = charpoly_rows(ctx, _restrict(ctx, beta, basis))
        det_val = cpr[0].valuation()
        ram = Fraction(det_val, dim).denominator
        if ram != dim:
            raise NotImplementedError("recovery restricted to totally ramified fields")
    # uniformizer of the field as an operator: beta^x * pi^y with
    # x * val_E(beta) + y * ram = 1
    if zero_block:
        def lattice(t):
            return [[x.shift(t) for x in v0]]
        return {"ram": 1, "lattice": lattice}
    val_e_beta = charpoly_rows(ctx, _restrict(ctx, beta, basis))[0].valuation()
    g, x, y = _ext_gcd(val_e_beta, ram)
    assert g == 1, "beta valuation not coprime to the ramification index"
    x %= ram
    y = (1 - x * val_e_beta) // ram

    def unif_apply(vec, times=1):
        out = vec
        for _ in range(times):
            w = out
            for _ in range(x):
                w = _apply(beta, w)
            out = [c.shift(y) for c in w]
        return out

    def lattice(t):
        carry, r = divmod(t, ram)
        cols = [unif_apply(v0, times=r + i) if r + i < ram else
                [c.shift(1) for c in unif_apply(v0, times=r + i - ram)]
                for i in range(ram)]
        return [[c.shift(carry) for c in col] for col in cols]

    return {"ram": ram, "lattice": lattice}


def _restrict(ctx, beta, basis):
    cols = []
    for b in basis:
        img = _apply(beta, b)
        cs = _solve_columns([list(x) for x in basis], img)
        assert cs is not None
        cols.append(cs)
    d = len(basis)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def _ext_gcd(a, b):
    if b == 0:
        return (a, 1, 0) if a > 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _det_val(ctx, rows):
    """Valuation of the determinant of a small LocalElem matrix."""
    d = len(rows)
    K = ctx.K
    total = None
    for perm in permutations(range(d)):
        term = rows[0][perm[0]]
        for i in range(1, d):
            term = term * rows[i][perm[i]]
        if _perm_sign(perm) < 0:
            term = -term
        total = term if total is None else total + term
    return total.valuation()


def _det_val4(ctx, cols):
    rows = [[cols[j][i] for j in range(4)] for i in range(4)]
    return _det_val(ctx, rows)


def _jump_patterns(e, ram):
    """Nondecreasing maps c: [0..e-1] -> Z with c(j + e) = c(j) + ram."""
    pats = []

    def rec(prefix, remaining):
        if len(prefix) == e:
            pats.append(tuple(prefix))
            return
        for step in range(remaining + 1):
            rec(prefix + [prefix[-1] + step], remaining - step)

    for base in range(-ram, ram + 1):
        rec([base], ram)
    # drop patterns whose final step to base+ram would be negative
    return [p for p in pats if p[0] + ram >= p[-1]]


def _product_all(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for rest in _product_all(lists[1:]):
            yield (head,) + rest


class _GenSeq:
    """Sequence of lattices given by generator columns, for recovery checks."""

    def __init__(self, ctx, cells, e):
        self.ctx = ctx
        self.cells = cells
        self.e = e
        self._basis_cache = {}

    def gens(self, j):
        carry, r = divmod(j, self.e)
        cols = self.cells[r]
        if carry == 0:
            return cols
        return [[x.shift(carry) for x in col] for col in cols]

    def basis(self, j):
        if j not in self._basis_cache:
            self._basis_cache[j] = _column_hnf(self.gens(j), 4)
        return self._basis_cache[j]

    def contains_vec(self, j, v):
        cs = _solve_columns(self.basis(j), v)
        return cs is not None and all(c.is_zero_known() or c.valuation() >= 0
                                      for c in cs)

    def contains(self, j1, j2):
        return all(self.contains_vec(j1, col) for col in self.basis(j2))

    def decreasing(self):
        return all(self.contains(j, j + 1) for j in range(self.e))

    def dual_basis(self, j):
        from .hermitian import gram_matrix
        K = self.ctx.K
        W = Mat(K, [[self.basis(j)[c][r] for c in range(4)] for r in range(4)])
        H = gram_matrix(K)
        M = (H * W).transpose().inverse().conj_entries()
        return [[M.e[r][c] for r in range(4)] for c in range(4)]

    def duality_index(self):
        # all dd with dual(lat(0)) = lat(dd), then verify across a period
        dual0 = self.dual_basis(0)
        cands = [dd for dd in range(-3 * self.e, 3 * self.e + 1)
                 if self._vol(dd) == self._dual_vol(0)
                 and all(self.contains_vec(dd, v) for v in dual0)]
        duals = [self.dual_basis(i) for i in range(1, self.e)]
        good = []
        for d0 in cands:
            if all(self._vol(d0 - i) == self._dual_vol(i)
                   and all(self.contains_vec(d0 - i, v) for v in duals[i - 1])
                   for i in range(1, self.e)):
                good.append(d0)
        odd = [d0 for d0 in good if d0 % 2]
        if odd:
            return odd[0]
        return good[0] if good else None

    def _vol(self, j):
        b = self.basis(j)
        W = Mat(self.ctx.K, [[b[c][r] for c in range(4)] for r in range(4)])
        return W.det().valuation()

    def _dual_vol(self, j):
        b = self.dual_basis(j)
        W = Mat(self.ctx.K, [[b[c][r] for c in range(4)] for r in range(4)])
        return W.det().valuation()

    def equals(self, other):
        return all(self._vol(j) == other._vol(j)
                   and all(self.contains_vec(j, col) for col in other.basis(j))
                   for j in range(self.e))

    def equals_diagonal(self, seq: Sequence):
        for j in range(self.e):
            lat = seq.lat(j)
            sumexpo = sum(lat.expo)
            if self._vol(j) != sumexpo:
                return False
            for col in self.basis(j):
                if not all(col[i].is_zero_known() or col[i].valuation() >= lat.expo[i]
                           for i in range(4)):
                    return False
        return True
