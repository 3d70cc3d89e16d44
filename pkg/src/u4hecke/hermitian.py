"""The hermitian space (V, h) on F^4 and its isometry group.

The Gram matrix is H = E14 + pi*E22 + E33 + E41, so the induced
involution on 4x4 matrices is sigma(X) = H^-1 * conj(X)^T * H, which
permutes entry positions by (i,j) -> (rho(j), rho(i)) with
rho = (1 4), twisted by pi on row/column 2.
"""

from __future__ import annotations

from .arith import INF, LocalElem, PrecisionExhausted


class BadParamDomain(Exception):
    pass


# position involution for sigma: rho in 0-based indexing
_RHO = (3, 1, 2, 0)


class Mat:
    """4x4 matrix over LocalElem."""

    __slots__ = ("K", "e")

    def __init__(self, K, entries):
        self.K = K
        self.e = tuple(tuple(row) for row in entries)

    @staticmethod
    def zero(K):
        z = LocalElem.zero(K)
        return Mat(K, [[z] * 4 for _ in range(4)])

    @staticmethod
    def identity(K):
        z = LocalElem.zero(K)
        o = LocalElem.integer(K, 1)
        return Mat(K, [[o if i == j else z for j in range(4)] for i in range(4)])

    @staticmethod
    def unit(K, i, j, coeff=None):
        """coeff * E_{ij} (1-based indices)."""
        m = [[LocalElem.zero(K)] * 4 for _ in range(4)]
        m[i - 1][j - 1] = coeff if coeff is not None else LocalElem.integer(K, 1)
        return Mat(K, m)

    @staticmethod
    def from_rows(K, rows):
        return Mat(K, rows)

    def __add__(self, o):
        return Mat(self.K, [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.e, o.e)])

    def __sub__(self, o):
        return Mat(self.K, [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.e, o.e)])

    def __neg__(self):
        return Mat(self.K, [[-a for a in r] for r in self.e])

    def __mul__(self, o):
        if isinstance(o, LocalElem):
            return Mat(self.K, [[a * o for a in r] for r in self.e])
        K = self.K
        a, b = self.e, o.e
        out = []
        for i in range(4):
            row = []
            for j in range(4):
                acc = a[i][0] * b[0][j]
                for k in range(1, 4):
                    acc = acc + a[i][k] * b[k][j]
                row.append(acc)
            out.append(row)
        return Mat(K, out)

    def scale(self, x: LocalElem):
        return Mat(self.K, [[a * x for a in r] for r in self.e])

    def conj_entries(self):
        return Mat(self.K, [[a.conj() for a in r] for r in self.e])

    def transpose(self):
        return Mat(self.K, [[self.e[j][i] for j in range(4)] for i in range(4)])

    def trace(self):
        t = self.e[0][0]
        for i in range(1, 4):
            t = t + self.e[i][i]
        return t

    def trace_to_base(self):
        """tr_{A/F0} = tr_{F/F0} o tr_{A/F}."""
        t = self.trace()
        return t + t.conj()

    def is_zero_known(self):
        return all(a.is_zero_known() for r in self.e for a in r)

    def same(self, o):
        return (self - o).is_zero_known()

    def truncate(self, prec):
        return Mat(self.K, [[a.truncate(prec) for a in r] for r in self.e])

    def det(self):
        # Laplace expansion along the first row; exact over the series ring
        e = self.e

        def det3(rs, cs):
            (a, b, c), (d, f, g), (h, i, j) = [[e[r][cc] for cc in cs] for r in rs]
            return a * (f * j - g * i) - b * (d * j - g * h) + c * (d * i - f * h)

        rows = (1, 2, 3)
        out = None
        sign = 1
        for k, col in enumerate(range(4)):
            cols = tuple(c for c in range(4) if c != col)
            term = e[0][col] * det3(rows, cols)
            if sign < 0:
                term = -term
            out = term if out is None else out + term
            sign = -sign
        return out

    def adjugate(self):
        e = self.e

        def det3(rs, cs):
            (a, b, c), (d, f, g), (h, i, j) = [[e[r][cc] for cc in cs] for r in rs]
            return a * (f * j - g * i) - b * (d * j - g * h) + c * (d * i - f * h)

        adj = [[None] * 4 for _ in range(4)]
        for i in range(4):
            rows = tuple(r for r in range(4) if r != i)
            for j in range(4):
                cols = tuple(c for c in range(4) if c != j)
                m = det3(rows, cols)
                if (i + j) % 2:
                    m = -m
                adj[j][i] = m  # transposed cofactor
        return Mat(self.K, adj)

    def inverse(self, rel=None):
        d = self.det()
        return self.adjugate().scale(d.inverse(rel=rel))

    def min_prec(self):
        return min((a.prec for r in self.e for a in r), default=INF)

    def __repr__(self):
        return "[" + ",\n ".join("[" + ", ".join(repr(a) for a in r) + "]" for r in self.e) + "]"


def gram_matrix(K):
    pi = LocalElem.pi(K)
    H = Mat.zero(K)
    rows = [list(r) for r in H.e]
    rows[0][3] = LocalElem.integer(K, 1)
    rows[1][1] = pi
    rows[2][2] = LocalElem.integer(K, 1)
    rows[3][0] = LocalElem.integer(K, 1)
    return Mat(K, rows)


def herm_form(v, w, K):
    """h(v, w) = conj(v)^T H w for coordinate 4-vectors of LocalElem."""
    # H pairs (1,4), (4,1), (2,2) with pi, (3,3)
    pi = LocalElem.pi(K)
    return (v[0].conj() * w[3] + v[3].conj() * w[0]
            + v[1].conj() * pi * w[1] + v[2].conj() * w[2])


def sigma(X: Mat) -> Mat:
    """The form-adjoint involution; closed-form entry permutation."""
    K = X.K
    out = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(4):
            a = X.e[_RHO[j]][_RHO[i]].conj()
            shift = (1 if j == 1 else 0) - (1 if i == 1 else 0)
            out[i][j] = a.shift(shift) if shift else a
    return Mat(K, out)


def is_isometry(X: Mat) -> bool:
    """Membership in G = { g : g sigma(g) = 1 } at working precision."""
    return (X * sigma(X)).same(Mat.identity(X.K))


def is_skew(X: Mat) -> bool:
    """sigma(X) = -X, cross-checked against the block parametrization."""
    if not (sigma(X) + X).is_zero_known():
        return False
    # entries (1,4),(4,1),(2,2),(3,3) must have conjugation-skew digits,
    # i.e. lie on the sqrt(eps)-line over F0
    for (i, j) in ((0, 3), (3, 0), (1, 1), (2, 2)):
        a = X.e[i][j]
        if not (a + a.conj()).is_zero_known():
            return False
    # linked pairs: X32 = -pi * conj(X23), X21 column relations etc. are
    # subsumed by sigma(X) = -X; spot-check one explicitly
    if not (X.e[2][1] + X.e[1][2].conj().shift(1)).is_zero_known():
        return False
    return True


def similitude_ratio(X: Mat):
    """If sigma(X) X is a nonzero scalar, return it; else None."""
    P = sigma(X) * X
    lam = P.e[0][0]
    if lam.is_zero_known():
        return None
    K = X.K
    if not (P - Mat.identity(K).scale(lam)).is_zero_known():
        return None
    return lam


class GroupElem:
    """An isometry with cached inverse.  Similitudes are kept as raw Mat."""

    __slots__ = ("g", "ginv")

    def __init__(self, g: Mat, ginv: Mat | None = None, check=True):
        if ginv is None:
            ginv = sigma(g)  # for isometries g^-1 = sigma(g)
        if check:
            if not (g * ginv).same(Mat.identity(g.K)):
                raise BadParamDomain("g * ginv != 1")
            if not is_isometry(g):
                raise BadParamDomain("matrix is not an isometry of the form")
        self.g = g
        self.ginv = ginv

    @property
    def K(self):
        return self.g.K

    def __mul__(self, o):
        return GroupElem(self.g * o.g, o.ginv * self.ginv, check=False)

    def inv(self):
        return GroupElem(self.ginv, self.g, check=False)

    def ad(self, X: Mat) -> Mat:
        """Conjugation action g X g^-1 on the algebra."""
        return self.g * X * self.ginv

    @staticmethod
    def identity(K):
        I = Mat.identity(K)
        return GroupElem(I, I, check=False)

    def truncate(self, prec):
        return GroupElem(self.g.truncate(prec), self.ginv.truncate(prec), check=False)

    def __repr__(self):
        return f"GroupElem({self.g!r})"


def _num(K, n):
    return LocalElem.integer(K, n)


def make_named_element(K, name, **params):
    """The standing group elements: s1, s2, u, ubar, hdiag, xABa, t.

    u/ubar require a conjugation-skew argument (mu on the sqrt(eps)-line)
    so that the result is an isometry.  t is a similitude and is returned
    as a raw Mat.
    """
    one = _num(K, 1)
    z = LocalElem.zero(K)
    pi = LocalElem.pi(K)

    if name == "s1":
        rows = [[z, z, z, one], [z, one, z, z], [z, z, one, z], [one, z, z, z]]
        return GroupElem(Mat(K, rows))
    if name == "s2":
        rows = [[z, z, z, LocalElem.pi(K, -1)], [z, one, z, z], [z, z, one, z],
                [pi, z, z, z]]
        return GroupElem(Mat(K, rows))
    if name in ("u", "ubar"):
        mu = params["mu"]
        if not (mu + mu.conj()).is_zero_known():
            raise BadParamDomain("u/ubar argument must be conjugation-skew")
        M = Mat.identity(K)
        rows = [list(r) for r in M.e]
        if name == "u":
            rows[0][3] = mu
        else:
            rows[3][0] = mu
        return GroupElem(Mat(K, rows))
    if name == "hdiag":
        nu = params["nu"]
        if nu.is_zero_known():
            raise BadParamDomain("hdiag argument must be a unit of F")
        rows = [[nu, z, z, z], [z, one, z, z], [z, z, one, z],
                [z, z, z, nu.conj().inverse()]]
        return GroupElem(Mat(K, rows))
    if name == "xABa":
        a, A, B, m = params["a"], params["A"], params["B"], params["m"]
        if m % 2 != 0 or m <= 0:
            raise BadParamDomain("explicit transversal elements need even m >= 2")
        k = m // 2
        half = LocalElem.integer(K, 2).inverse()
        se = LocalElem.sqrt_eps(K)
        corr = (pi * A * A.conj() + B * B.conj()) * half
        e41 = (a * se - corr).shift(m)
        rows = [
            [one, z, z, z],
            [A.shift(k), one, z, z],
            [B.shift(k), z, one, z],
            [e41, -(A.conj().shift(k + 1)), -(B.conj().shift(k)), one],
        ]
        return GroupElem(Mat(K, rows))
    if name == "t":
        rows = [[z, z, z, one], [z, z, one, z], [z, pi, z, z], [pi, z, z, z]]
        return Mat(K, rows)
    raise BadParamDomain(f"unknown element name {name!r}")
