"""Characters of congruence quotients and the mixed-depth unit groups.

Hosts the Cayley transversal machinery for finite coset spaces, the
exhaustive duality pairing between lattice and character quotients, the
commutator form on J/J+, and the successive approximation that conjugates
a perturbed generator back into the centralizer.
"""

from __future__ import annotations

import numpy as np

from .arith import CycInt, LocalElem, PrecisionExhausted, psi0_eval
from .hermitian import GroupElem, Mat, is_isometry, sigma
from .lattices import ExpoMat, filtration
from .strata import Stratum, centralizer, span_in_window
from .windows import Solver, Subspace, Window, rref


class NotInGroup(Exception):
    pass


class TooLarge(Exception):
    pass


class LiftFailure(Exception):
    pass


class HypothesisFails(Exception):
    pass


def cayley(ctx, x: Mat, rel=None) -> GroupElem:
    """(1 + x)(1 - x)^-1; sends skew x into the isometry group.

    The inverse tail is truncated at a relative precision comfortably
    above every congruence depth in play."""
    K = ctx.K
    if rel is None:
        rel = ctx.cfg.hot_prec + 12
    I = Mat.identity(K)
    num = I + x
    den = I - x
    g = num * den.inverse(rel=rel)
    gi = den * num.inverse(rel=rel)
    return GroupElem(g, gi, check=False)


def cayley_inverse(g: GroupElem) -> Mat:
    I = Mat.identity(g.K)
    return (g.g - I) * (g.g + I).inverse()


def char_exponent(val: CycInt):
    """k with val = zeta^k; raises if val is not a root of unity."""
    p = val.p
    for k in range(p):
        if val == CycInt.zeta_pow(p, k):
            return k
    raise ValueError(f"{val!r} is not a p-th root of unity")


def twisted_char(ctx, b: Mat, g: Mat) -> CycInt:
    """psi_b(g) = psi0(tr(b (g - 1))) as an exact cyclotomic value."""
    X = (b * (g - Mat.identity(ctx.K))).trace_to_base()
    return psi0_eval(X)


class StratumGroups:
    """The unit groups J, J+, J', B' and characters of a depth-(n, n-1)
    skew stratum, together with their window-level lattice data."""

    def __init__(self, stratum: Stratum, cent=None, extra=6):
        self.s = stratum
        self.ctx = stratum.ctx
        self.cent = cent or centralizer(stratum)
        if not self.cent.tame:
            raise HypothesisFails("the mixed-depth groups need a tame stratum")
        self.n = stratum.n
        self.h = (self.n + 1) // 2
        self.hp = self.n // 2 + 1
        self.seq = stratum.seq
        self.window = stratum.window(extra=extra)
        w = self.window
        Bspan = span_in_window(w, self.cent.basisB)
        Pspan = span_in_window(w, self.cent.basisBperp)
        self._Bspan = Bspan
        self._Pspan = Pspan
        skew = w.skew_subspace()
        self.lie_J = (Bspan.intersect(w.lattice_subspace(filtration(self.seq, self.n)))
                      .add(Pspan.intersect(w.lattice_subspace(filtration(self.seq, self.h))))
                      .intersect(skew))
        self.lie_Jplus = (Bspan.intersect(w.lattice_subspace(filtration(self.seq, self.n)))
                          .add(Pspan.intersect(
                              w.lattice_subspace(filtration(self.seq, self.hp))))
                          .intersect(skew))
        self.lie_Jprime = Bspan.intersect(
            w.lattice_subspace(filtration(self.seq, self.n))).intersect(skew)

    # -- membership ----------------------------------------------------------
    def in_P(self, k, g: GroupElem):
        if not is_isometry(g.g):
            return False
        if k == 0:
            return filtration(self.seq, 0).contains_mat(g.g)
        return filtration(self.seq, k).contains_mat(g.g - Mat.identity(self.ctx.K))

    def in_GE(self, g: GroupElem):
        if not is_isometry(g.g):
            return False
        beta = self.s.beta
        D = beta * g.g - g.g * beta
        return D.is_zero_known() or all(
            a.is_zero_known() or a.valuation() >= self.ctx.cfg.prec - 3 * self.n - 10
            for r in D.e for a in r)

    def _mixed_membership(self, g: GroupElem, depth_perp):
        if not is_isometry(g.g):
            return False
        X = g.g - Mat.identity(self.ctx.K)
        bpart = self.cent.project(X)
        try:
            return (filtration(self.seq, self.n).contains_mat(bpart)
                    and filtration(self.seq, depth_perp).contains_mat(X - bpart))
        except PrecisionExhausted:
            raise

    def in_J(self, g: GroupElem):
        return self._mixed_membership(g, self.h)

    def in_Jplus(self, g: GroupElem):
        return self._mixed_membership(g, self.hp)

    def in_Jprime(self, g: GroupElem):
        return self.in_GE(g) and self.in_P(self.n, g)

    def in_Bprime(self, g: GroupElem):
        return self.in_GE(g) and self.in_P(0, g)

    # -- characters ------------------------------------------------------------
    def psi(self, g: GroupElem) -> CycInt:
        """The stratum character on J+ (and on J when n is odd)."""
        return twisted_char(self.ctx, self.s.beta, g.g)

    def psi_inv(self, g: GroupElem) -> CycInt:
        return self.psi(g).conj()

    # -- indices ---------------------------------------------------------------
    def _conjugated_lie(self, lie: Subspace, g: GroupElem, w=None):
        w = w or self.window
        rows = []
        for row in lie.basis:
            X = w.unvec(row)
            rows.append(w.vec(g.ad(X)))
        return Subspace.from_rows(rows, w.p, w.dim)

    def index_log(self, g: GroupElem, prime=False):
        """log_q [J g J : J] = log_q [lie : lie cap Ad(g) lie]."""
        lie, conj, w = self.conjugation_pair(g, prime)
        return w.qlog(lie.dim - lie.intersect(conj).dim)

    def conjugation_pair(self, g: GroupElem, prime=False):
        """(lie mod deep, Ad(g) lie mod deep, window).

        Box truncation at a filtration exponent matrix is exactly the
        quotient by that deep lattice; the conjugate is built from an
        extended window so that its image modulo the cutoff is complete.
        """
        spread = _entry_spread(g)
        e = self.seq.e
        khi = self.n + e * (spread + 1) + 4
        klo = -(self.n + e + 2 * spread + 6)
        w = self._window_cached(klo, khi)
        wext = self._window_cached(klo, khi + e * spread + 2)
        lie = self._lie_on(w, prime)
        lie_ext = self._lie_on(wext, prime)
        rows = [w.vec(g.ad(wext.unvec(row))) for row in lie_ext.basis]
        from .windows import Subspace
        conj = Subspace.from_rows(rows, w.p, w.dim)
        assert conj.dim == lie.dim, "conjugated lattice lost digits"
        return lie, conj, w

    def _window_cached(self, klo, khi):
        if not hasattr(self, "_wcache"):
            self._wcache = {}
        key = (klo, khi)
        if key not in self._wcache:
            self._wcache[key] = Window(self.ctx, filtration(self.seq, klo),
                                       filtration(self.seq, khi))
        return self._wcache[key]

    def _lie_on(self, w, prime):
        if not hasattr(self, "_liecache"):
            self._liecache = {}
        key = (id(w), prime)
        if key not in self._liecache:
            Bspan = span_in_window(w, self.cent.basisB)
            skew = w.skew_subspace()
            base = Bspan.intersect(w.lattice_subspace(filtration(self.seq, self.n)))
            if prime:
                out = base.intersect(skew)
            else:
                Pspan = span_in_window(w, self.cent.basisBperp)
                out = base.add(Pspan.intersect(
                    w.lattice_subspace(filtration(self.seq, self.h)))).intersect(skew)
            self._liecache[key] = out
        return self._liecache[key]


def _entry_spread(g: GroupElem):
    vals = [x.valuation() for r in g.g.e for x in r if not x.is_zero_known()]
    return max(vals) - min(vals) if vals else 0


class CosetSpace:
    """Left transversal of (J cap gJg^-1) in J, by graded Cayley lifting.

    reps[i] are GroupElems with J g J = union of reps[i] g J.  The key
    dictionary buckets group elements by their digits above a congruence
    bound, which is constant on left cosets of the inner group.
    """

    def __init__(self, groups: StratumGroups, g: GroupElem, prime=False,
                 explicit_reps=None):
        self.groups = groups
        self.g = g
        self.prime = prime
        ctx = groups.ctx
        lie, conj, w = groups.conjugation_pair(g, prime)
        self.window = w
        inner = lie.intersect(conj)
        Q = lie.quotient_basis(inner)
        log = w.qlog(len(Q))
        if log > ctx.cfg.max_quotient_log:
            raise TooLarge(f"coset space of size q^{log}")
        self.log = log
        reps = []
        p = ctx.K.p
        hot = ctx.cfg.hot_prec
        for coeffs in _tuples(p, len(Q)):
            v = np.zeros(w.dim, dtype=np.int64)
            for c, row in zip(coeffs, Q):
                v = v + c * row
            x = w.unvec(v % p)
            r = cayley(ctx, x).truncate(hot)
            member = groups.in_Jprime(r) if prime else groups.in_J(r)
            if not member:
                raise LiftFailure("Cayley lift escaped the unit group")
            reps.append(r)
        if explicit_reps is not None:
            assert len(explicit_reps) == len(reps)
            reps = [r.truncate(hot) for r in explicit_reps]
            check = groups.in_Jprime if prime else groups.in_J
            for r in reps:
                if not check(r):
                    raise LiftFailure("explicit representative outside the group")
        self.reps = reps
        self._distinct_by_buckets()

    # congruence bound: y in x_j g J implies y = x_j g modulo this lattice,
    # since y - x_j g = x_j g (k - 1) with k - 1 in the group's lattice
    def _key_bound(self):
        groups = self.groups
        lie_depth = groups.n if self.prime else groups.h
        lielat = filtration(groups.seq, lie_depth)
        JB = lielat.meet(_ident_expo())
        gB = _val_bound(self.g.g)
        return JB.minplus(gB).minplus(lielat)

    def key_of(self, X: Mat, bound: ExpoMat):
        out = []
        for i in range(4):
            for j in range(4):
                a = X.e[i][j]
                for t in range(-12, bound[i, j]):
                    out.append(a.digit(t))
        return tuple(out)

    def _distinct_by_buckets(self):
        bound = self._key_bound()
        self.bound = bound
        buckets = {}
        for idx, r in enumerate(self.reps):
            x = r.g * self.g.g
            key = self.key_of(x, bound)
            buckets.setdefault(key, []).append(idx)
        self.buckets = buckets
        groups = self.groups
        for key, idxs in buckets.items():
            for a in range(len(idxs)):
                for b in range(a + 1, len(idxs)):
                    r1, r2 = self.reps[idxs[a]], self.reps[idxs[b]]
                    z = r1 * r2.inv()
                    if self._in_inner(z):
                        raise LiftFailure("two lifted representatives collide")

    def _in_inner(self, z: GroupElem):
        groups = self.groups
        check = groups.in_Jprime if self.prime else groups.in_J
        if not check(z):
            return False
        zc = GroupElem(self.g.ginv * z.g * self.g.g,
                       self.g.ginv * z.ginv * self.g.g, check=False)
        return check(zc)

    def __len__(self):
        return len(self.reps)

    def locate(self, y: Mat):
        """(i, k) with y = reps[i] * g * k and k in the group, else None."""
        key = self.key_of(y, self.bound)
        groups = self.groups
        check = groups.in_Jprime if self.prime else groups.in_J
        for idx in self.buckets.get(key, ()):
            k = self.g.ginv * self.reps[idx].ginv * y
            kg = GroupElem(k, sigma(k), check=False)
            try:
                if check(kg):
                    return idx, kg
            except PrecisionExhausted:
                continue
        return None


def _tuples(p, k):
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


def _ident_expo():
    big = 64
    return ExpoMat([[0 if i == j else big for j in range(4)] for i in range(4)])


def _val_bound(M: Mat):
    big = 64
    out = [[big] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(4):
            a = M.e[i][j]
            if not a.is_zero_known():
                out[i][j] = a.valuation()
    return ExpoMat(out)


# ---------------------------------------------------------------------------
# the duality pairing between lattice and character quotients

def pairing_check(ctx, seq, n, r, samples=60):
    """Exhaustive duality between the depth (-n..-r) skew lattice quotient
    and the characters of the unit-group quotient at depths (r+1..n+1).

    Returns a dict of booleans; all must hold.
    """
    if not (n > r >= n // 2 >= 0):
        raise ValueError("need n > r >= floor(n/2)")
    p = ctx.K.p
    w = Window(ctx, filtration(seq, -(n + seq.e + 2)),
               filtration(seq, n + seq.e + 2))
    Sb = w.lattice_subspace(filtration(seq, -n), skew=True)
    Tb = w.lattice_subspace(filtration(seq, -r), skew=True)
    QB = Sb.quotient_basis(Tb)
    Sx = w.lattice_subspace(filtration(seq, r + 1), skew=True)
    Tx = w.lattice_subspace(filtration(seq, n + 1), skew=True)
    QX = Sx.quotient_basis(Tx)
    dim = len(QB)
    if dim != len(QX):
        return {"dims_match": False}
    if p ** dim > 3 ** 10:
        raise TooLarge(f"pairing quotient of size {p ** dim}")
    out = {"dims_match": True}

    # group transversal by Cayley lifting, and the x -> x - 1 bijection;
    # higher-order terms of the shift are symmetric but die in the full
    # deep lattice because 2(r+1) >= n+1
    hot = ctx.cfg.hot_prec + n
    Tfull = w.lattice_subspace(filtration(seq, n + 1))
    reps = []
    img_coords = set()
    solver = Solver(QX, p) if dim else None
    for coeffs in _tuples(p, dim):
        v = np.zeros(w.dim, dtype=np.int64)
        for c, row in zip(coeffs, QX):
            v = v + c * row
        gx = cayley(ctx, w.unvec(v % p)).truncate(hot)
        reps.append((coeffs, gx))
        shifted = gx.g - Mat.identity(ctx.K)
        if not filtration(seq, r + 1).contains_mat(shifted):
            return {**out, "shift_in_lattice": False}
        red = Tfull.reduce(w.vec(shifted.truncate(hot)))
        cs = solver.coords(red) if dim else ()
        if cs is None:
            return {**out, "shift_in_lattice": False}
        img_coords.add(tuple(int(c) for c in cs))
    out["shift_in_lattice"] = True
    out["shift_bijective"] = len(img_coords) == p ** dim

    # exact bilinear exponent table: characters are pairwise distinct
    PM = np.zeros((dim, w.dim), dtype=np.int64)
    for bi, brow in enumerate(QB):
        B = w.unvec(brow)
        for (i, j, t), base in w.index.items():
            for kcoord in range(w.cl):
                cs = [0] * w.cl
                cs[kcoord] = 1
                E = Mat.unit(ctx.K, i + 1, j + 1,
                             LocalElem.const(ctx.K, ctx.K.from_coords(cs), t))
                val = (B * E).trace_to_base()
                try:
                    u, v2 = ctx.K.parts(val.digit(0))
                except PrecisionExhausted:
                    u, v2 = 0, 0
                PM[bi, base + kcoord] = ctx.K.k0_trace_to_prime(u)
    X1 = np.zeros((len(reps), w.dim), dtype=np.int64)
    for ri, (_, gx) in enumerate(reps):
        X1[ri] = w.vec((gx.g - Mat.identity(ctx.K)).truncate(hot))
    CB = np.array([c for c in _tuples(p, dim)], dtype=np.int64)
    table = (CB @ (PM @ X1.T)) % p
    out["characters_distinct"] = len({tuple(row) for row in table}) == p ** dim

    # cross-validate the table against the exact character on samples
    rng = ctx.rng
    ok = True
    for _ in range(samples):
        bi = rng.randrange(len(CB))
        xi = rng.randrange(len(reps))
        bvec = (CB[bi] @ QB) % p
        bmat = w.unvec(bvec)
        val = twisted_char(ctx, bmat, reps[xi][1].g)
        if val != CycInt.zeta_pow(p, int(table[bi, xi])):
            ok = False
    out["table_matches_exact_character"] = ok

    # multiplicativity and triviality on the deep subgroup, sampled exactly
    ok_mult = True
    for _ in range(samples):
        bi = rng.randrange(len(CB))
        bmat = w.unvec((CB[bi] @ QB) % p)
        x = reps[rng.randrange(len(reps))][1]
        y = reps[rng.randrange(len(reps))][1]
        lhs = twisted_char(ctx, bmat, (x * y).g)
        rhs = twisted_char(ctx, bmat, x.g) * twisted_char(ctx, bmat, y.g)
        if lhs != rhs:
            ok_mult = False
    out["multiplicative"] = ok_mult
    ok_deep = True
    deepQ = Tx.basis
    for _ in range(samples // 2):
        bi = rng.randrange(len(CB))
        bmat = w.unvec((CB[bi] @ QB) % p)
        row = deepQ[rng.randrange(len(deepQ))] if len(deepQ) else None
        if row is None:
            break
        gz = cayley(ctx, w.unvec(row))
        if twisted_char(ctx, bmat, gz.g) != CycInt.one(p):
            ok_deep = False
    out["trivial_on_deep"] = ok_deep
    out["cardinalities_match"] = True
    return out


# ---------------------------------------------------------------------------
# the commutator form on J/J+

def theta_gram(groups: StratumGroups):
    """Gram matrix (zeta exponents) of (x, y) -> Psi([x, y]) on J/J+.

    Returns (gram, rank, dim); the form is alternating and the rank is
    computed over GF(p)."""
    ctx = groups.ctx
    p = ctx.K.p
    w = groups.window
    Q = groups.lie_J.quotient_basis(groups.lie_Jplus)
    dim = len(Q)
    lifts = [cayley(ctx, w.unvec(row)) for row in Q]
    gram = np.zeros((dim, dim), dtype=np.int64)
    for i in range(dim):
        for j in range(dim):
            comm = lifts[i] * lifts[j] * lifts[i].inv() * lifts[j].inv()
            gram[i, j] = char_exponent(groups.psi(comm))
    R, _ = rref(gram, p) if dim else (np.zeros((0, 0)), [])
    rank = R.shape[0] if dim else 0
    alternating = all(gram[i, i] == 0 for i in range(dim)) and \
        all((gram[i, j] + gram[j, i]) % p == 0 for i in range(dim) for j in range(dim))
    return gram, rank, dim, alternating


# ---------------------------------------------------------------------------
# conjugating a perturbed generator into the centralizer

def conjugate_into_B(groups: StratumGroups, gamma: Mat, stop_depth=None):
    """p in the unit filtration with Ad(p)(gamma) - beta supported in B.

    Successive approximation: at each step the Bperp part of the error is
    cancelled by inverting ad(beta) on its graded piece."""
    ctx = groups.ctx
    s = groups.s
    cent = groups.cent
    w = groups.window
    seq, n = groups.seq, groups.n
    if stop_depth is None:
        stop_depth = n + seq.e + 2
    p_elem = GroupElem.identity(ctx.K)
    Pspan = groups._Pspan
    half = LocalElem.integer(ctx.K, 2).inverse()
    for _ in range(8 * (stop_depth + n)):
        delta = p_elem.ad(gamma) - s.beta
        perp = cent.perp_part(delta)
        depth = _depth_or_none(seq, perp, stop_depth)
        if depth is None:
            # postcondition: B-part within the coset lattice
            bpart = cent.project(p_elem.ad(gamma) - s.beta)
            if not filtration(seq, 1 - n).contains_mat(bpart):
                raise HypothesisFails("conjugated element left the coset")
            return p_elem
        if depth < 1 - n:
            raise HypothesisFails("error term too shallow for the hypothesis")
        # solve ad(beta)(x) = perp at the graded level, x at depth + n
        Sk = w.lattice_subspace(filtration(seq, depth + n), skew=True).intersect(Pspan)
        Sk1 = w.lattice_subspace(filtration(seq, depth + n + 1), skew=True).intersect(Pspan)
        Tk = w.lattice_subspace(filtration(seq, depth), skew=True).intersect(Pspan)
        Tk1 = w.lattice_subspace(filtration(seq, depth + 1), skew=True).intersect(Pspan)
        Q = Sk.quotient_basis(Sk1)
        R = Tk.quotient_basis(Tk1)
        if len(Q) == 0 or len(R) != len(Q):
            raise HypothesisFails("graded solve has no room at this depth")
        solver = Solver(R, w.p)
        img = []
        for row in Q:
            xm = w.unvec(row)
            img.append(solver.coords(Tk1.reduce(w.vec(s.beta * xm - xm * s.beta))))
        target = solver.coords(Tk1.reduce(w.vec(perp)))
        csolver = Solver(np.array(img), w.p)
        cs = csolver.coords(target)
        if cs is None:
            raise HypothesisFails("ad(beta) graded solve failed")
        xv = np.zeros(w.dim, dtype=np.int64)
        for c, row in zip(cs, Q):
            xv = xv + int(c) * row
        x = w.unvec(xv % w.p)
        step = cayley(ctx, x * half)
        p_elem = step * p_elem
    raise HypothesisFails("successive approximation did not converge")


def _depth_or_none(seq, X, stop_depth):
    from .lattices import depth_of
    if X.is_zero_known():
        return None
    d = depth_of(seq, X)
    return None if d >= stop_depth else d
