"""Convolution algebras of biequivariant functions with exact values.

Elements are finitely supported on double cosets of centralizer points,
with values in Z[zeta_p] over a power of q.  Convolution is a finite
coset sum; supports are discovered exhaustively by classifying the
points w x_j w' over the right factor's transversal, and products with
multiplicative indices take the single-coset fast path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arith import CycInt
from .chargroups import CosetSpace, StratumGroups, _entry_spread, cayley
from .hermitian import GroupElem, Mat, make_named_element
from .lattices import standard_sequence
from .strata import Stratum, oddlevel_beta


class WindowExceeded(Exception):
    pass


class RelationFailed(Exception):
    pass


class MismatchCertificate(Exception):
    pass


class NotInGE(Exception):
    pass


@dataclass
class CosetEntry:
    rep: GroupElem
    shadow: CosetSpace          # centralizer-side transversal, always present
    cs: CosetSpace | None       # big-group transversal when materializable
    log_J: int
    log_Jp: int


class HeckeContext:
    """Registry of double cosets shared by the two convolution ambients."""

    MAX_WORD_SPREAD = 10

    def __init__(self, groups: StratumGroups):
        if groups.n % 2 == 0:
            raise ValueError("scalar convolution ambients need odd depth")
        self.groups = groups
        self.ctx = groups.ctx
        self.entries: list[CosetEntry] = []
        self._conv_cache = {}
        self.adopt(GroupElem.identity(self.ctx.K))

    # -- registry -------------------------------------------------------------
    def adopt(self, g: GroupElem) -> int:
        """Index of the double coset of the centralizer point g."""
        groups = self.groups
        if not groups.in_GE(g):
            raise NotInGE("registry points must centralize the stratum")
        found = self.classify(g.g)
        if found is not None:
            return found[0]
        if _entry_spread(g) > self.MAX_WORD_SPREAD:
            raise WindowExceeded("support outside the word-length window")
        shadow = CosetSpace(groups, g, prime=True)
        log_J = groups.index_log(g)
        cs = None
        if log_J <= self.ctx.cfg.max_quotient_log:
            cs = CosetSpace(groups, g)
        self.entries.append(CosetEntry(g, shadow, cs, log_J, shadow.log))
        return len(self.entries) - 1

    def classify(self, y: Mat):
        """(idx, i, k, via_shadow) with y in reps[i] * rep * k, else None."""
        for idx, ent in enumerate(self.entries):
            space = ent.cs if ent.cs is not None else ent.shadow
            loc = space.locate(y)
            if loc is not None:
                return idx, loc[0], loc[1], space is ent.shadow
            if ent.cs is not None:
                # a centralizer point may sit in the big coset while only
                # the shadow sees its small factorization
                loc = ent.shadow.locate(y)
                if loc is not None:
                    return idx, loc[0], loc[1], True
        return None

    def psi_inv(self, g: GroupElem) -> CycInt:
        return self.groups.psi(g).conj()

    # -- basis elements ---------------------------------------------------------
    def basis(self, prime, g: GroupElem, coeff=None) -> "HeckeElem":
        """The function supported on the coset of g, normalized at g."""
        idx = self.adopt(g)
        ent = self.entries[idx]
        p = self.ctx.K.p
        val = CycInt.one(p) if coeff is None else coeff
        if not (ent.rep.g - g.g).is_zero_known():
            space = ent.shadow if (prime or ent.cs is None) else ent.cs
            loc = space.locate(g.g)
            if loc is None:
                loc = ent.shadow.locate(g.g)
            if loc is None:
                raise MismatchCertificate("coset point escaped its transversal")
            i, k = loc
            # value at the canonical representative: f_g(rep) = conj(f_rep(g))
            val = val * (self.psi_inv(space.reps[i]) * self.psi_inv(k)).conj()
        return HeckeElem(self, prime, {idx: val}, 0).prune()

    def unit(self, prime) -> "HeckeElem":
        return HeckeElem(self, prime, {0: CycInt.one(self.ctx.K.p)}, 0)

    # -- convolution -------------------------------------------------------------
    def evaluate(self, f: "HeckeElem", y: Mat) -> CycInt:
        """Value of f at an arbitrary group point (the q-power aside)."""
        p = self.ctx.K.p
        for idx, c in f.coeffs.items():
            ent = self.entries[idx]
            space = ent.shadow if f.prime else ent.cs
            if space is None:
                raise WindowExceeded("no transversal available for evaluation")
            loc = space.locate(y)
            if loc is not None:
                i, k = loc
                return self.psi_inv(space.reps[i]) * c * self.psi_inv(k)
        return CycInt.zero(p)

    def convolve_basis(self, prime, idx1, idx2):
        key = (prime, idx1, idx2)
        if key not in self._conv_cache:
            self._conv_cache[key] = self._convolve_basis(prime, idx1, idx2)
        return self._conv_cache[key]

    def _convolve_basis(self, prime, idx1, idx2):
        ent1 = self.entries[idx1]
        ent2 = self.entries[idx2]
        log1 = ent1.log_Jp if prime else ent1.log_J
        log2 = ent2.log_Jp if prime else ent2.log_J
        prod = ent1.rep * ent2.rep
        logp = self.groups.index_log(prod, prime=prime)
        if log1 + log2 == logp:
            # multiplicative indices: single product coset, value 1 at the
            # product point
            return self.basis(prime, prod).coeffs
        space1 = ent1.shadow if prime else ent1.cs
        space2 = ent2.shadow if prime else ent2.cs
        if space1 is None or space2 is None:
            raise WindowExceeded("convolution needs both transversals")
        support = set()
        for xj in space2.reps:
            pt = ent1.rep.g * xj.g * ent2.rep.g
            found = self.classify(pt)
            if found is not None:
                support.add(found[0])
                continue
            gpt = GroupElem(pt, None, check=False)
            if self.groups.in_GE(gpt):
                support.add(self.adopt(gpt))
                continue
            # not in the intertwining: the perpendicular part of any point
            # of the support double cosets is deep relative to its
            # centralizer part
            if self._intertwine_filter(pt):
                raise WindowExceeded("product point escaped the registry window")
        p = self.ctx.K.p
        f2 = HeckeElem(self, prime, {idx2: CycInt.one(p)}, 0)
        out = {}
        for vidx in support:
            vrep = self.entries[vidx].rep
            total = CycInt.zero(p)
            for xi in space1.reps:
                y = ent1.rep.ginv * xi.ginv * vrep.g
                val = self.evaluate(f2, y)
                if not val.is_zero():
                    total = total + self.psi_inv(xi) * val
            if not total.is_zero():
                out[vidx] = total
        return out

    def _intertwine_filter(self, pt: Mat) -> bool:
        """Necessary condition for membership in the intertwining set:
        depth(perp part) >= depth(centralizer part) + upper mixed depth."""
        from .lattices import depth_of
        groups = self.groups
        bpart = groups.cent.project(pt)
        perp = pt - bpart
        if perp.is_zero_known() or bpart.is_zero_known():
            return True
        d_perp = depth_of(groups.seq, perp)
        d_b = depth_of(groups.seq, bpart)
        return d_perp >= d_b + groups.h


class HeckeElem:
    """q^{-qden} * sum coeffs[idx] * (basis element of coset idx)."""

    def __init__(self, hctx: HeckeContext, prime: bool, coeffs, qden=0):
        self.h = hctx
        self.prime = prime
        self.coeffs = dict(coeffs)
        self.qden = qden

    def prune(self):
        self.coeffs = {k: v for k, v in self.coeffs.items() if not v.is_zero()}
        return self

    def scaled(self, c=None, qden_add=0):
        out = {k: (v * c if c is not None else v) for k, v in self.coeffs.items()}
        return HeckeElem(self.h, self.prime, out, self.qden + qden_add).prune()

    def __add__(self, other):
        assert self.prime == other.prime
        q = self.h.ctx.q
        p = self.h.ctx.K.p
        den = max(self.qden, other.qden)
        out = {}
        for src in (self, other):
            scale = q ** (den - src.qden)
            for k, v in src.coeffs.items():
                out[k] = out.get(k, CycInt.zero(p)) + v * scale
        return HeckeElem(self.h, self.prime, out, den).prune()

    def __neg__(self):
        return HeckeElem(self.h, self.prime,
                         {k: -v for k, v in self.coeffs.items()}, self.qden)

    def __sub__(self, other):
        return self + (-other)

    def convolve(self, other) -> "HeckeElem":
        assert self.prime == other.prime
        h = self.h
        p = h.ctx.K.p
        out = {}
        for i1, c1 in self.coeffs.items():
            for i2, c2 in other.coeffs.items():
                prod = h.convolve_basis(self.prime, i1, i2)
                for vidx, val in prod.items():
                    out[vidx] = out.get(vidx, CycInt.zero(p)) + c1 * c2 * val
        return HeckeElem(h, self.prime, out, self.qden + other.qden).prune()

    def star(self) -> "HeckeElem":
        """f*(g) = conj(f(g^-1))."""
        h = self.h
        out = HeckeElem(h, self.prime, {}, self.qden)
        for idx, c in self.coeffs.items():
            ent = h.entries[idx]
            target = h.adopt(ent.rep.inv())
            tent = h.entries[target]
            f_here = HeckeElem(h, self.prime, {idx: c}, 0)
            val = h.evaluate(f_here, tent.rep.ginv).conj()
            out = out + HeckeElem(h, self.prime, {target: val}, self.qden)
        return out.prune()

    def equals(self, other) -> bool:
        if self.prime != other.prime:
            return False
        q = self.h.ctx.q
        p = self.h.ctx.K.p
        den = max(self.qden, other.qden)
        for k in set(self.coeffs) | set(other.coeffs):
            a = self.coeffs.get(k, CycInt.zero(p)) * q ** (den - self.qden)
            b = other.coeffs.get(k, CycInt.zero(p)) * q ** (den - other.qden)
            if a != b:
                return False
        return True

    def __repr__(self):
        body = ", ".join(f"[{k}]:{v!r}" for k, v in sorted(self.coeffs.items()))
        den = f" / q^{self.qden}" if self.qden else ""
        return f"Hecke({body}{den})"


# ---------------------------------------------------------------------------
# the presentations and the scaling isomorphism

class Presentation:
    """Generators and relation suites for the odd-depth stratum at level m."""

    def __init__(self, ctx, m):
        seq = standard_sequence(4)
        n = 6 * m - 3
        self.ctx = ctx
        self.m = m
        self.n = n
        self.stratum = Stratum(ctx, seq, n, n - 1, oddlevel_beta(ctx, m, ctx.one()))
        self.groups = StratumGroups(self.stratum)
        self.h = HeckeContext(self.groups)
        K = ctx.K
        self.s1 = make_named_element(K, "s1")
        self.s2 = make_named_element(K, "s2")

    def u(self, mu):
        return make_named_element(self.ctx.K, "u", mu=mu)

    def ubar(self, mu):
        return make_named_element(self.ctx.K, "ubar", mu=mu)

    def hd(self, nu):
        return make_named_element(self.ctx.K, "hdiag", nu=nu)

    def e(self, g):
        return self.h.basis(True, g)

    def f(self, g):
        return self.h.basis(False, g)

    def elem(self, prime, g):
        return self.h.basis(prime, g)

    def bprime_samples(self):
        ctx = self.ctx
        se = ctx.se()
        cands = [self.u(se), self.u((ctx.num(2) + ctx.pi()) * se),
                 self.ubar(ctx.pi() * se), self.hd(ctx.one() + ctx.pi()),
                 self.hd(ctx.num(2))]
        return [g for g in cands if self.groups.in_Bprime(g)]

    def jprime_samples(self, count=4):
        groups = self.groups
        w = groups.window
        return [cayley(self.ctx, w.unvec(row))
                for row in groups.lie_Jprime.basis[:count]]

    def u_window_sum(self, prime, shift):
        """sum of basis elements at u(pi^shift x sqrt(eps)), x over the
        residue pairs modulo square of the maximal ideal."""
        ctx = self.ctx
        se = ctx.se()
        total = None
        for x0 in range(ctx.q):
            for x1 in range(ctx.q):
                mu = ((ctx.kf(x0) + ctx.kf(x1, 1)) * se).shift(shift)
                term = self.elem(prime, self.u(mu))
                total = term if total is None else total + term
        return total

    # -- the relation suite ------------------------------------------------------
    def check_relations(self, prime):
        """Every printed relation instantiated and compared exactly.

        Returns [(name, ok)] records."""
        ctx = self.ctx
        q = ctx.q
        p = ctx.K.p
        se = ctx.se()
        E = lambda g: self.elem(prime, g)
        out = []
        one = self.h.unit(prime)

        # (i) inner points give character multiples of the unit
        ok = all(E(k).equals(one.scaled(self.groups.psi(k)))
                 for k in self.jprime_samples())
        out.append(("i", ok))

        # (ii) products inside the compact torus part
        bs = self.bprime_samples()
        ok = all(E(k).convolve(E(k2)).equals(E(k * k2))
                 for k in bs for k2 in bs)
        out.append(("ii", ok))

        # (iii) commutation with normalizer elements
        k = self.hd(ctx.one() + ctx.pi())
        ok = E(k).convolve(E(self.s1)).equals(
            E(self.s1).convolve(E(self.s1 * k * self.s1)))
        k2 = self.u(se)
        ok = ok and E(k2).convolve(E(self.s2)).equals(
            E(self.s2).convolve(E(self.s2 * k2 * self.s2)))
        out.append(("iii", ok))

        # (iv) quadratic relations
        out.append(("iv-s1", E(self.s1).convolve(E(self.s1)).equals(one)))
        if self.m >= 2:
            lhs = E(self.s2).convolve(E(self.s2))
            index_log = 2 if prime else 6
            rhs = self.u_window_sum(prime, self.m - 2).scaled(
                CycInt.from_int(p, q ** index_log))
            out.append(("iv-s2", lhs.equals(rhs)))
        else:
            out.append(("iv-s2-m1", self._check_iv_m1(prime)))

        # (v) conjugation against the unipotent one-parameter subgroups
        mus = [ctx.kf(x0) * se for x0 in range(1, q)]
        mus.append((ctx.one() + ctx.pi()) * se)
        ok_v1 = True
        ok_v2 = True
        for mu in mus:
            muinv = mu.inverse()
            lhs = E(self.s1).convolve(E(self.u(mu))).convolve(E(self.s1))
            rhs = (E(self.u(muinv)).convolve(E(self.s1))
                   .convolve(E(self.hd(mu))).convolve(E(self.u(muinv))))
            ok_v1 = ok_v1 and lhs.equals(rhs)
            if self.m >= 2:
                lhs2 = (E(self.s2).convolve(E(self.ubar(mu.shift(1))))
                        .convolve(E(self.s2)))
                factor = q ** 2 if prime else q ** 4
                rhs2 = (E(self.ubar(muinv.shift(1))).convolve(E(self.s2))
                        .convolve(E(self.hd(-muinv)))
                        .convolve(E(self.ubar(muinv.shift(1)))))
                rhs2 = rhs2.scaled(CycInt.from_int(p, factor))
                ok_v2 = ok_v2 and lhs2.equals(rhs2)
        out.append(("v-s1", ok_v1))
        if self.m >= 2:
            out.append(("v-s2", ok_v2))
        return out

    def _check_iv_m1(self, prime):
        """The m = 1 variant of the reflection square.

        On the centralizer side the relation is printed; the big-group
        version is its transport through the scaling map (the reflection
        generator carries q^2)."""
        ctx = self.ctx
        q = ctx.q
        p = ctx.K.p
        se = ctx.se()
        E = lambda g: self.elem(prime, g)
        one = self.h.unit(prime)
        lhs = E(self.s2).convolve(E(self.s2))
        refl = None
        for y0 in range(1, q):
            mu = ctx.kf(y0) * se
            term = E(self.s2).convolve(E(self.hd(-(mu.inverse()))))
            if not prime:
                term = term.scaled(CycInt.from_int(p, q ** 2))
            refl = term if refl is None else refl + term
        const = q ** 2 if prime else q ** 6
        refl = refl + one.scaled(CycInt.from_int(p, const))
        usum = None
        for x0 in range(q):
            term = E(self.u(ctx.kf(x0) * se))
            usum = term if usum is None else usum + term
        return lhs.equals(refl.convolve(usum))

    # -- the scaling isomorphism ---------------------------------------------------
    def eta_delta(self, idx):
        ent = self.h.entries[idx]
        diff = ent.log_J - ent.log_Jp
        if diff % 2:
            raise MismatchCertificate("odd index-log difference")
        return diff // 2

    def eta(self, elem: HeckeElem) -> HeckeElem:
        """Transport through the volume-ratio scaling map."""
        assert elem.prime
        q = self.ctx.q
        maxd = max((self.eta_delta(i) for i in elem.coeffs), default=0)
        coeffs = {i: c * q ** (maxd - self.eta_delta(i))
                  for i, c in elem.coeffs.items()}
        return HeckeElem(self.h, False, coeffs, elem.qden + maxd).prune()

    def check_eta(self):
        """Multiplicativity, star- and support-preservation of the
        scaling transport on generators and length-two words."""
        ctx = self.ctx
        records = []
        gens = [("s1", self.s1), ("s2", self.s2),
                ("u", self.u(ctx.se())), ("ubar", self.ubar(ctx.pi() * ctx.se())),
                ("h", self.hd(ctx.one() + ctx.pi()))]
        words = list(gens) + [("s2s1", self.s2 * self.s1),
                              ("s1s2", self.s1 * self.s2)]
        for namex, x in words:
            for namey, y in gens:
                ex, ey = self.e(x), self.e(y)
                lhs = self.eta(ex.convolve(ey))
                rhs = self.eta(ex).convolve(self.eta(ey))
                ok = lhs.equals(rhs) and set(lhs.coeffs) == set(rhs.coeffs)
                records.append((f"eta({namex}*{namey})", ok))
        for name, g in gens:
            lhs = self.eta(self.e(g).star())
            rhs = self.eta(self.e(g)).star()
            records.append((f"eta-star({name})", lhs.equals(rhs)))
        records.append(("eta-scale-s1", self.eta_delta(self.h.adopt(self.s1)) == 0))
        records.append(("eta-scale-s2", self.eta_delta(self.h.adopt(self.s2)) == 2))
        for name, b in gens[2:]:
            records.append((f"eta-scale-{name}",
                            self.eta_delta(self.h.adopt(b)) == 0))
        return records


# ---------------------------------------------------------------------------
# compact-centralizer structure transport

def compact_intersection_check(ctx, stratum, samples=10, ball_depth=None):
    """For sampled centralizer points g, the big double coset meets the
    centralizer exactly in the small double coset.

    Enumerates a congruence ball of centralizer points around g and
    compares the two memberships pointwise."""
    from .lattices import filtration
    from .strata import span_in_window
    import numpy as np
    groups = StratumGroups(stratum)
    w = groups.window
    cent = groups.cent
    rng = ctx.rng
    n = groups.n
    if ball_depth is None:
        ball_depth = n + 2
    Bspan = span_in_window(w, cent.basisB)
    skew = w.skew_subspace()
    # residue-level centralizer points and graded directions
    res_reps = _residue_unit_reps(ctx, groups, w, Bspan)
    grade_rows = []
    for j in range(1, ball_depth):
        Sj = w.lattice_subspace(filtration(groups.seq, j), skew=True).intersect(Bspan)
        Sj1 = w.lattice_subspace(filtration(groups.seq, j + 1), skew=True).intersect(Bspan)
        grade_rows.extend(list(Sj.quotient_basis(Sj1)))
    records = []
    p = ctx.K.p
    torus_dirs = []
    for row in grade_rows:
        torus_dirs.append(cayley(ctx, w.unvec(row)))
    samples_pts = []
    for _ in range(samples):
        g = _random_ge_point(ctx, groups, res_reps, grade_rows, w)
        samples_pts.append(g)
    for g in samples_pts:
        big = CosetSpace(groups, g)
        small = CosetSpace(groups, g, prime=True)
        mismatches = 0
        checked = 0
        for z0 in res_reps:
            for coeffs in _sparse_tuples(ctx, p, len(grade_rows), budget=40):
                v = np.zeros(w.dim, dtype=np.int64)
                for c, row in zip(coeffs, grade_rows):
                    v = v + c * row
                z = cayley(ctx, w.unvec(v % p))
                u = (z0 * z * g).truncate(ctx.cfg.hot_prec)
                if not groups.in_GE(u):
                    continue
                in_big = big.locate(u.g) is not None
                in_small = small.locate(u.g) is not None
                checked += 1
                if in_big != in_small:
                    mismatches += 1
        records.append({"checked": checked, "mismatches": mismatches})
    return records


def _residue_unit_reps(ctx, groups, w, Bspan):
    """Centralizer points covering the residue torus."""
    from .lattices import filtration
    import numpy as np
    p = ctx.K.p
    B0 = Bspan.intersect(w.lattice_subspace(filtration(groups.seq, 0)))
    B1 = Bspan.intersect(w.lattice_subspace(filtration(groups.seq, 1)))
    Q = B0.quotient_basis(B1)
    out = []
    from .hermitian import sigma, is_isometry
    for coeffs in _all_tuples(p, len(Q)):
        v = np.zeros(w.dim, dtype=np.int64)
        for c, row in zip(coeffs, Q):
            v = v + c * row
        z = w.unvec(v % p)
        if not is_isometry(z):
            continue
        g = GroupElem(z, sigma(z), check=False)
        if groups.in_GE(g):
            out.append(g)
    return out


def _all_tuples(p, k):
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


def _sparse_tuples(ctx, p, k, budget):
    """The zero tuple, the coordinate lines, and random draws."""
    yield (0,) * k
    for i in range(k):
        for c in range(1, p):
            t = [0] * k
            t[i] = c
            yield tuple(t)
    for _ in range(budget):
        yield tuple(ctx.rng.randrange(p) for _ in range(k))


def _random_ge_point(ctx, groups, res_reps, grade_rows, w):
    import numpy as np
    p = ctx.K.p
    z0 = res_reps[ctx.rng.randrange(len(res_reps))]
    v = np.zeros(w.dim, dtype=np.int64)
    for row in grade_rows:
        v = v + ctx.rng.randrange(p) * row
    z = cayley(ctx, w.unvec(v % p))
    return (z0 * z).truncate(ctx.cfg.hot_prec)


def dim_rho_log(groups: StratumGroups):
    """log_q [J : J+], whose half is the dimension exponent of the
    distinguished representation; always even."""
    w = groups.window
    return w.qlog(groups.lie_J.dim - groups.lie_Jplus.dim)
