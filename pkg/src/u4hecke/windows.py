"""GF(p) linear algebra on truncated coefficient windows of the matrix algebra.

A Window fixes, per matrix position, a digit range [lo_ij, hi_ij).  The
digits of a matrix inside the window form a GF(p)-vector space; lattices
between the window bounds become subspaces, conjugation and ad(beta)
become matrices, and index computations become dimension counts.
"""

from __future__ import annotations

import numpy as np

from .arith import LocalElem
from .hermitian import Mat, sigma
from .lattices import ExpoMat


def rref(A, p):
    """Row-reduce A mod p; returns (reduced rows, pivot columns)."""
    A = np.array(A, dtype=np.int64) % p
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        piv = None
        for rr in range(r, rows):
            if A[rr, c]:
                piv = rr
                break
        if piv is None:
            continue
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = (A[r] * pow(int(A[r, c]), p - 2, p)) % p
        for rr in range(rows):
            if rr != r and A[rr, c]:
                A[rr] = (A[rr] - A[rr, c] * A[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A[:r], pivots


class Subspace:
    """Row space of an rref basis over GF(p)."""

    def __init__(self, basis, pivots, p, dim_ambient):
        self.basis = basis  # rref rows, shape (d, n)
        self.pivots = pivots
        self.p = p
        self.n = dim_ambient

    @staticmethod
    def from_rows(rows, p, n):
        if len(rows) == 0:
            return Subspace(np.zeros((0, n), dtype=np.int64), [], p, n)
        B, piv = rref(np.array(rows, dtype=np.int64), p)
        return Subspace(B, piv, p, n)

    @property
    def dim(self):
        return self.basis.shape[0]

    def reduce(self, v):
        """Residual of v after elimination along the basis."""
        v = np.array(v, dtype=np.int64) % self.p
        for row, c in zip(self.basis, self.pivots):
            if v[c]:
                v = (v - v[c] * row) % self.p
        return v

    def contains(self, v):
        return not self.reduce(v).any()

    def contains_space(self, other):
        return all(self.contains(row) for row in other.basis)

    def add(self, other):
        rows = np.vstack([self.basis, other.basis]) if self.dim or other.dim else []
        return Subspace.from_rows(rows, self.p, self.n)

    def intersect(self, other):
        """Zassenhaus: rref of [A|A; B|0], zero-left rows carry the intersection."""
        p, n = self.p, self.n
        if self.dim == 0 or other.dim == 0:
            return Subspace.from_rows([], p, n)
        top = np.hstack([self.basis, self.basis])
        bot = np.hstack([other.basis, np.zeros_like(other.basis)])
        R, _ = rref(np.vstack([top, bot]), p)
        out = [row[n:] for row in R if not row[:n].any() and row[n:].any()]
        return Subspace.from_rows(out, p, n)

    def quotient_basis(self, sub):
        """Rows of self completing a basis of sub to one of self."""
        assert self.contains_space(sub), "quotient of non-nested spaces"
        work = Subspace(sub.basis.copy(), list(sub.pivots), self.p, self.n)
        out = []
        for row in self.basis:
            r = work.reduce(row)
            if r.any():
                out.append(r)
                work = work.add(Subspace.from_rows([r], self.p, self.n))
        return np.array(out, dtype=np.int64) if out else np.zeros((0, self.n), dtype=np.int64)


class Solver:
    """Coordinate extraction against a fixed independent row family."""

    def __init__(self, rows, p):
        rows = np.array(rows, dtype=np.int64) % p
        d, n = rows.shape
        aug = np.hstack([rows, np.eye(d, dtype=np.int64)])
        E = aug.copy()
        pivots = []
        r = 0
        for c in range(n):
            piv = None
            for rr in range(r, d):
                if E[rr, c] % p:
                    piv = rr
                    break
            if piv is None:
                continue
            if piv != r:
                E[[r, piv]] = E[[piv, r]]
            E[r] = (E[r] * pow(int(E[r, c]), p - 2, p)) % p
            for rr in range(d):
                if rr != r and E[rr, c]:
                    E[rr] = (E[rr] - E[rr, c] * E[r]) % p
            pivots.append(c)
            r += 1
        assert r == d, "rows are dependent"
        self.p = p
        self.n = n
        self.R = E[:, :n]
        self.U = E[:, n:]  # R = U @ rows
        self.pivots = pivots

    def coords(self, v):
        """c with c @ rows = v, or None if v is outside the span."""
        p = self.p
        v = np.array(v, dtype=np.int64) % p
        cs = np.zeros(self.R.shape[0], dtype=np.int64)
        for i, c in enumerate(self.pivots):
            if v[c]:
                cs[i] = v[c]
                v = (v - v[c] * self.R[i]) % p
        if v.any():
            return None
        return (cs @ self.U) % p


class Window:
    """Digit window of the 4x4 algebra with GF(p) coordinates."""

    def __init__(self, ctx, lo: ExpoMat, hi: ExpoMat):
        self.ctx = ctx
        self.K = ctx.K
        self.p = ctx.K.p
        self.lo = lo
        self.hi = hi
        self.cl = ctx.K.coord_len
        index = {}
        pos = 0
        for i in range(4):
            for j in range(4):
                for t in range(lo[i, j], hi[i, j]):
                    index[(i, j, t)] = pos
                    pos += self.cl
        self.index = index
        self.dim = pos

    # -- vectors --------------------------------------------------------------
    def vec(self, M: Mat):
        K = self.K
        out = np.zeros(self.dim, dtype=np.int64)
        for i in range(4):
            for j in range(4):
                a = M.e[i][j]
                if not a.is_zero_known() and a.valuation() < self.lo[i, j]:
                    raise ValueError(f"entry ({i},{j}) below window")
                for t in range(self.lo[i, j], self.hi[i, j]):
                    c = a.digit(t)
                    if c:
                        base = self.index[(i, j, t)]
                        for k, d in enumerate(K.coords(c)):
                            out[base + k] = d
        return out

    def unvec(self, v):
        K = self.K
        entries = [[LocalElem.zero(K) for _ in range(4)] for _ in range(4)]
        for i in range(4):
            for j in range(4):
                lo, hi = self.lo[i, j], self.hi[i, j]
                co = []
                for t in range(lo, hi):
                    base = self.index[(i, j, t)]
                    co.append(K.from_coords([int(v[base + k]) for k in range(self.cl)]))
                entries[i][j] = LocalElem.make(K, lo, co)
        return Mat(K, entries)

    def basis_mats(self):
        for (i, j, t), base in self.index.items():
            for k in range(self.cl):
                cs = [0] * self.cl
                cs[k] = 1
                yield base + k, Mat.unit(self.K, i + 1, j + 1,
                                         LocalElem.const(self.K, self.K.from_coords(cs), t))

    # -- subspaces --------------------------------------------------------------
    def full_space(self):
        return Subspace.from_rows(np.eye(self.dim, dtype=np.int64), self.p, self.dim)

    def lattice_subspace(self, L: ExpoMat, skew=False):
        rows = []
        for (i, j, t), base in self.index.items():
            if t >= L[i, j]:
                for k in range(self.cl):
                    row = np.zeros(self.dim, dtype=np.int64)
                    row[base + k] = 1
                    rows.append(row)
        S = Subspace.from_rows(rows, self.p, self.dim)
        if skew:
            S = S.intersect(self.skew_subspace())
        return S

    def skew_subspace(self):
        if not hasattr(self, "_skew"):
            Msig = self.map_matrix(sigma)
            self._skew = self._kernel((Msig + np.eye(self.dim, dtype=np.int64)) % self.p)
        return self._skew

    def _kernel(self, A):
        """Kernel of v -> v @ A (row-vector convention)."""
        p = self.p
        At = A.T % p
        R, piv = rref(At, p)
        n = self.dim
        free = [c for c in range(n) if c not in piv]
        rows = []
        for fc in free:
            v = np.zeros(n, dtype=np.int64)
            v[fc] = 1
            for i, c in enumerate(piv):
                v[c] = (-R[i, fc]) % p
            rows.append(v)
        return Subspace.from_rows(rows, p, n)

    def map_matrix(self, fn):
        """Matrix (row-vector convention) of a GF(p)-linear map on matrices."""
        M = np.zeros((self.dim, self.dim), dtype=np.int64)
        for idx, B in self.basis_mats():
            M[idx] = self.vec(fn(B))
        return M % self.p

    def subspace_span(self, mats, skew=False, intersect_with=None):
        rows = [self.vec(M) for M in mats]
        S = Subspace.from_rows(rows, self.p, self.dim)
        if skew:
            S = S.intersect(self.skew_subspace())
        if intersect_with is not None:
            S = S.intersect(intersect_with)
        return S

    def qlog(self, dim_fp):
        """Convert a GF(p)-dimension to a log base q."""
        f = self.ctx.K.f
        assert dim_fp % f == 0
        return dim_fp // f
