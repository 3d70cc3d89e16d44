"""Self-dual lattice sequences on F^4 and the induced algebra filtrations.

A diagonal lattice is p^{a1} e1 + ... + p^{a4} e4, encoded by its
exponent 4-vector.  A sequence stores one period of cells; everything
else follows from pi-periodicity.  The filtration lattices in the
matrix algebra are encoded by 4x4 integer exponent matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arith import INF, PrecisionExhausted
from .hermitian import _RHO, Mat


class NotSelfDual(Exception):
    pass


class NotNested(Exception):
    pass


@dataclass(frozen=True)
class Lattice:
    """Diagonal o_F-lattice given by its exponent vector."""

    expo: tuple

    def dual(self):
        a = self.expo
        return Lattice((-a[3], -a[1] - 1, -a[2], -a[0]))

    def shift(self, k):
        return Lattice(tuple(x + k for x in self.expo))

    def contains(self, other):
        return all(x <= y for x, y in zip(self.expo, other.expo))

    def __repr__(self):
        return f"L{list(self.expo)}"


N0 = Lattice((0, 0, 0, 0))
N1 = Lattice((0, 0, 0, 1))
N0_DUAL = N0.dual()
N1_DUAL = N1.dual()


class Sequence:
    """Periodic decreasing sequence of diagonal lattices."""

    def __init__(self, cells, name=""):
        self.cells = tuple(cells)
        self.e = len(self.cells)
        self.name = name
        for i in range(self.e):
            if not self.lat(i).contains(self.lat(i + 1)):
                raise ValueError(f"cells not decreasing at index {i}")

    def lat(self, i):
        t, r = divmod(i, self.e)
        return self.cells[r].shift(t)

    # -- invariants ----------------------------------------------------------
    def _indices_of(self, target):
        """All i in one period window with lat(i) == target."""
        out = []
        for r in range(self.e):
            t = target.expo[0] - self.cells[r].expo[0]
            if self.cells[r].shift(t) == target:
                out.append(r + t * self.e)
        return out

    def duality_indices(self):
        """All d with lat(i)^# = lat(d-i) for all i."""
        cand = None
        for i in range(self.e):
            ds = {i + j for j in self._indices_of(self.lat(i).dual())}
            cand = ds if cand is None else cand & ds
            if not cand:
                return []
        return sorted(cand)

    def duality_index(self):
        ds = self.duality_indices()
        if not ds:
            raise NotSelfDual(f"{self.name or self.cells} has no duality index")
        odd = [d for d in ds if d % 2]
        return odd[0] if odd else ds[0]

    def is_self_dual(self):
        return bool(self.duality_indices())

    def is_strict(self):
        return all(self.lat(i) != self.lat(i + 1) for i in range(self.e))

    def is_c_sequence(self):
        if not self.is_self_dual():
            return False
        if self.e % 2:
            return False
        if all(d % 2 == 0 for d in self.duality_indices()):
            return False
        return all(self.lat(2 * i + 1) != self.lat(2 * i + 2) for i in range(self.e))

    def translate(self, k):
        return Sequence([self.lat(i + k) for i in range(self.e)],
                        name=f"{self.name}+{k}" if self.name else "")

    def __eq__(self, other):
        return isinstance(other, Sequence) and self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        return self.name or f"Sequence{list(self.cells)}"


def standard_sequence(i):
    """The eight standard sequences with strict odd-index drops."""
    w = [N0, N1, N1_DUAL.shift(1), N0_DUAL.shift(1)]  # one pi-period of the chain
    if i == 1:
        return Sequence([N0, N0_DUAL.shift(1)], "L1")
    if i == 2:
        return Sequence([N1, N1_DUAL.shift(1)], "L2")
    if i == 3:
        return Sequence(w, "L3")
    if i == 4:
        return Sequence([N0, N0, N1, N1_DUAL.shift(1), N0_DUAL.shift(1), N0_DUAL.shift(1)], "L4")
    if i == 5:
        return Sequence([N1, N1, N1_DUAL.shift(1), N1_DUAL.shift(1), N0_DUAL.shift(1), N0.shift(1)], "L5")
    if i == 6:
        return Sequence([N0, N0, N0_DUAL.shift(1), N0_DUAL.shift(1)], "L6")
    if i == 7:
        return Sequence([N1, N1, N1_DUAL.shift(1), N1_DUAL.shift(1)], "L7")
    if i == 8:
        return Sequence([N0, N0, N1, N1, N1_DUAL.shift(1), N1_DUAL.shift(1),
                         N0_DUAL.shift(1), N0_DUAL.shift(1)], "L8")
    raise ValueError("standard sequences are numbered 1..8")


def seq_props(seq):
    return {
        "e": seq.e,
        "d": seq.duality_index(),
        "is_strict": seq.is_strict(),
        "is_C_sequence": seq.is_c_sequence(),
    }


_CHAIN = [N0, N1, N1_DUAL.shift(1), N0_DUAL.shift(1)]


def _chain_lat(c):
    t, r = divmod(c, 4)
    return _CHAIN[r].shift(t)


def _chain_pos(lat):
    for r in range(4):
        d = lat.expo[0] - _CHAIN[r].expo[0]
        if _CHAIN[r].shift(d) == lat:
            return 4 * d + r
    raise ValueError(f"{lat} is not a standard lattice")


def _canonical_positions(seq):
    """Translation-invariant key: minimal rotated position tuple."""
    e = seq.e
    pos = [_chain_pos(seq.lat(i)) for i in range(2 * e)]
    best = None
    for k in range(e):
        window = pos[k:k + e]
        window = tuple(c - 4 * (window[0] // 4) for c in window)
        if best is None or window < best:
            best = window
    return best


def enumerate_standard_c_sequences(max_period=8):
    """Exhaustive search over standard sequences, up to translation.

    Standard lattices form a single chain ... > N0 > N1 > pi N1^# >
    pi N0^# > pi N0 > ..., so a standard sequence is exactly a
    nondecreasing periodic map into chain positions with c(i+e) = c(i)+4.
    """
    def compositions(slots, total):
        if slots == 0:
            yield ()
            return
        for first in range(total + 1):
            for rest in compositions(slots - 1, total - first):
                yield (first,) + rest

    found = {}
    for e in range(2, max_period + 1, 2):
        for start in range(4):
            for steps in compositions(e, 4):
                cs = [start]
                for s in steps[:-1]:
                    cs.append(cs[-1] + s)
                seq = Sequence([_chain_lat(c) for c in cs])
                if not seq.is_c_sequence():
                    continue
                found.setdefault(_canonical_positions(seq), seq)
    return list(found.values())


class ExpoMat:
    """Integer exponent matrix: entry (i,j) is the least admissible
    valuation of X_ij for membership in the corresponding lattice."""

    __slots__ = ("m",)

    def __init__(self, m):
        self.m = tuple(tuple(int(x) for x in row) for row in m)

    def __getitem__(self, ij):
        return self.m[ij[0]][ij[1]]

    def __eq__(self, other):
        return isinstance(other, ExpoMat) and self.m == other.m

    def __hash__(self):
        return hash(self.m)

    def shift(self, k):
        return ExpoMat([[x + k for x in row] for row in self.m])

    def meet(self, other):
        """Lattice sum (entrywise min)."""
        return ExpoMat([[min(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(self.m, other.m)])

    def join(self, other):
        """Lattice intersection (entrywise max)."""
        return ExpoMat([[max(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(self.m, other.m)])

    def contains_mat(self, X: Mat):
        try:
            return all(X.e[i][j].val_at_least(self.m[i][j]) for i in range(4) for j in range(4))
        except PrecisionExhausted:
            raise

    def contains(self, other):
        """Entrywise: self >= other as lattices."""
        return all(a <= b for r1, r2 in zip(self.m, other.m) for a, b in zip(r1, r2))

    def minplus(self, other):
        """Exponent matrix of the product lattice (min-plus matrix product)."""
        out = [[min(self.m[i][k] + other.m[k][j] for k in range(4)) for j in range(4)]
               for i in range(4)]
        return ExpoMat(out)

    def dual(self):
        """Trace-pairing dual: (L*)_ij = 1 - L_ji."""
        return ExpoMat([[1 - self.m[j][i] for j in range(4)] for i in range(4)])

    def sigma_image(self):
        """Exponents of sigma(L): position (i,j) <- (rho(j), rho(i)) twisted."""
        out = [[0] * 4 for _ in range(4)]
        for i in range(4):
            for j in range(4):
                shift = (1 if j == 1 else 0) - (1 if i == 1 else 0)
                out[i][j] = self.m[_RHO[j]][_RHO[i]] + shift
        return ExpoMat(out)

    def rows(self):
        return [list(r) for r in self.m]

    def __repr__(self):
        return "ExpoMat(" + str([list(r) for r in self.m]) + ")"


def filtration(seq: Sequence, k: int) -> ExpoMat:
    """Exponent matrix of the depth-k lattice in the matrix algebra."""
    e = seq.e
    cells = [seq.lat(l).expo for l in range(e)]
    shifted = [seq.lat(l + k).expo for l in range(e)]
    out = [[max(shifted[l][i] - cells[l][j] for l in range(e)) for j in range(4)]
           for i in range(4)]
    return ExpoMat(out)


def depth_of(seq: Sequence, X: Mat):
    """sup { k : X in depth-k lattice }; INF for 0."""
    if X.is_zero_known():
        if all(a.is_exact_zero() for r in X.e for a in r):
            return INF
        raise PrecisionExhausted("depth of an element that is only zero at precision")
    e = seq.e
    lo = None
    for i in range(4):
        for j in range(4):
            a = X.e[i][j]
            if a.is_zero_known():
                continue
            v = a.valuation()
            # largest k with filtration exponent at (i,j) <= v
            base = filtration(seq, 0)[i, j]
            k = e * (v - base)  # coarse start, then walk
            while filtration(seq, k + 1)[i, j] <= v:
                k += 1
            while filtration(seq, k)[i, j] > v:
                k -= 1
            lo = k if lo is None else min(lo, k)
    return lo


def in_unit_group(seq: Sequence, k: int, g) -> bool:
    """Membership in the depth-k congruence unit group of the sequence."""
    from .hermitian import GroupElem, is_isometry
    X = g.g if isinstance(g, GroupElem) else g
    if not is_isometry(X):
        return False
    if k == 0:
        return filtration(seq, 0).contains_mat(X)
    I = Mat.identity(X.K)
    return filtration(seq, k).contains_mat(X - I)


# -- skew-aware index bookkeeping --------------------------------------------

_SELF_PAIRED = {(0, 3), (3, 0), (1, 1), (2, 2)}
_ORBITS = []
_seen = set()
for _i in range(4):
    for _j in range(4):
        if (_i, _j) in _seen:
            continue
        _pi, _pj = _RHO[_j], _RHO[_i]
        if (_pi, _pj) == (_i, _j):
            _ORBITS.append(((_i, _j),))
            _seen.add((_i, _j))
        else:
            _ORBITS.append(((_i, _j), (_pi, _pj)))
            _seen.add((_i, _j))
            _seen.add((_pi, _pj))


def skew_grade_dim(L1: ExpoMat, L2: ExpoMat):
    """k0-length of the skew part of L1/L2 (entrywise lattices, L1 >= L2)."""
    total = 0
    for orbit in _ORBITS:
        i, j = orbit[0]
        d = L2[i, j] - L1[i, j]
        if d < 0:
            raise NotNested(f"lattices not nested at entry {(i, j)}")
        if len(orbit) == 1:
            total += d
        else:
            i2, j2 = orbit[1]
            d2 = L2[i2, j2] - L1[i2, j2]
            if d2 != d:
                raise NotNested("sigma-paired entries step differently; lattice not sigma-stable")
            total += 2 * d
    return total


def full_grade_dim(L1: ExpoMat, L2: ExpoMat):
    """k0-length of L1/L2 in the full matrix algebra."""
    total = 0
    for i in range(4):
        for j in range(4):
            d = L2[i, j] - L1[i, j]
            if d < 0:
                raise NotNested(f"lattices not nested at entry {(i, j)}")
            total += 2 * d
    return total


def index_log(L1: ExpoMat, L2: ExpoMat, skew=False):
    """log_q [L1 : L2] for entrywise lattices."""
    return skew_grade_dim(L1, L2) if skew else full_grade_dim(L1, L2)


def conjugate_expomat(L: ExpoMat, g) -> ExpoMat:
    """Exponent matrix of g L g^-1 for a *monomial* group element g.

    Raises if g is not monomial (a single nonzero entry per row/column).
    """
    from .hermitian import GroupElem
    G = g.g if isinstance(g, GroupElem) else g
    perm = {}
    shifts = {}
    for i in range(4):
        nz = [j for j in range(4) if not G.e[i][j].is_zero_known()]
        if len(nz) != 1:
            raise ValueError("conjugate_expomat needs a monomial element")
        j = nz[0]
        perm[j] = i
        shifts[j] = G.e[i][j].valuation()
    out = [[0] * 4 for _ in range(4)]
    for a in range(4):
        for b in range(4):
            # (g X g^-1)_{perm[a], perm[b]} = g_{perm[a],a} X_{ab} (g^-1)_{b,perm[b]}
            out[perm[a]][perm[b]] = L[a, b] + shifts[a] - shifts[b]
    return ExpoMat(out)


def _n_patterns(e, target_gcd):
    """Symbolic n-families { e*m - c } obtained by enumerating residues."""
    from math import gcd
    residues = sorted({n % e for n in range(1, 4 * e + 1) if gcd(e, n) == target_gcd},
                      reverse=True)
    pats = []
    for r in residues:
        if r == 0:
            pats.append((f"{e}m" if e != 1 else "m", "m"))
        else:
            c = e - r
            num, den = c, e
            g = gcd(num, den)
            num, den = num // g, den // g
            level = "m" if c == 0 else f"m-{num}/{den}"
            pats.append((f"{e}m-{c}", level))
    return pats


def strict_level_table():
    """Rows (name, e, d, n-patterns, level-patterns) of the inventory of
    fundamental-stratum configurations on the standard sequences."""
    rows = []
    for name, i, target in (("L1", 1, 2), ("L2", 2, 2), ("L3", 3, 2),
                            ("L4", 4, 2), ("L5", 5, 2),
                            ("L1", 1, 1), ("L2", 2, 1), ("L3", 3, 1)):
        seq = standard_sequence(i)
        pats = _n_patterns(seq.e, target)
        rows.append((name, seq.e, seq.duality_index(),
                     [p[0] for p in pats], [p[1] for p in pats]))
    return rows
