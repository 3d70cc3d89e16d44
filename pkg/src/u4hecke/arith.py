"""Exact arithmetic layers: residue fields, truncated Laurent series, Z[zeta_p].

The base field F0 = k0((pi)) and its unramified quadratic extension
F = kF((pi)) share the uniformizer pi, which is fixed by the Galois
involution.  kF is realized as k0[s] with s^2 = eps for a fixed
non-square unit eps of k0, so conjugation is u + v*s -> u - v*s.
"""

from __future__ import annotations

INF = 1 << 30  # absolute-precision sentinel for exact elements
_INF_CLAMP = INF >> 1  # precisions beyond this collapse back to exact


def _clamp(prec):
    return INF if prec >= _INF_CLAMP else prec


class PrecisionExhausted(Exception):
    """A predicate or digit was requested beyond the known precision."""


class DivisionByZero(Exception):
    pass


class NotInBaseField(Exception):
    """Element is not fixed by the Galois involution."""


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class _SmallField:
    """GF(p^f) with elements encoded as ints 0..p^f-1 (base-p digit vectors)."""

    def __init__(self, p, f):
        self.p = p
        self.f = f
        self.q = p ** f
        if f == 1:
            self.modulus = None
        else:
            self.modulus = self._find_irreducible()

    def _poly_mul(self, a, b):
        p, f = self.p, self.f
        out = [0] * (2 * f - 1)
        da = self._digits(a)
        db = self._digits(b)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    out[i + j] = (out[i + j] + x * y) % p
        # reduce by modulus
        mod = self.modulus
        for k in range(2 * f - 2, f - 1, -1):
            c = out[k]
            if c:
                out[k] = 0
                for j in range(f):
                    out[k - f + j] = (out[k - f + j] - c * mod[j]) % p
        return self._undigits(out[:f])

    def _digits(self, a):
        p, f = self.p, self.f
        return [(a // p ** i) % p for i in range(f)]

    def _undigits(self, ds):
        return sum(d * self.p ** i for i, d in enumerate(ds))

    def _find_irreducible(self):
        # monic x^f + c_{f-1}x^{f-1} + ... + c_0, found by exhausting roots
        # and degree <= f/2 divisors; f stays tiny in practice.
        p, f = self.p, self.f
        for code in range(p ** f):
            cs = self._digits(code)  # c_0..c_{f-1}
            if self._irreducible(cs):
                return cs
        raise RuntimeError("no irreducible polynomial found")

    def _irreducible(self, cs):
        p, f = self.p, self.f
        # root test over GF(p)
        for x in range(p):
            acc = 1
            for _ in range(f):
                acc = acc * x % p
            tot = acc
            for i, c in enumerate(cs):
                xi = pow(x, i, p)
                tot = (tot + c * xi) % p
            if tot == 0:
                return False
        if f <= 3:
            return True
        # trial division by monic polys of degree 2..f//2
        full = cs + [1]
        for d in range(2, f // 2 + 1):
            for code in range(p ** d):
                div = [(code // p ** i) % p for i in range(d)] + [1]
                if _poly_divides(div, full, p):
                    return False
        return True

    def add(self, a, b):
        if self.f == 1:
            return (a + b) % self.p
        return self._undigits([(x + y) % self.p for x, y in zip(self._digits(a), self._digits(b))])

    def neg(self, a):
        if self.f == 1:
            return (-a) % self.p
        return self._undigits([(-x) % self.p for x in self._digits(a)])

    def mul(self, a, b):
        if self.f == 1:
            return a * b % self.p
        return self._poly_mul(a, b)

    def inv(self, a):
        if a == 0:
            raise DivisionByZero("inverse of 0 in residue field")
        return self.pow(a, self.q - 2)

    def pow(self, a, n):
        acc = 1
        base = a
        while n:
            if n & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            n >>= 1
        return acc

    def trace_to_prime(self, a):
        """Tr to GF(p), as an int mod p."""
        if self.f == 1:
            return a % self.p
        acc = 0
        x = a
        for _ in range(self.f):
            acc = self.add(acc, x)
            x = self.pow(x, self.p)
        assert acc < self.p
        return acc

    def coords(self, a):
        return self._digits(a)

    def from_coords(self, ds):
        return self._undigits([d % self.p for d in ds])


def _poly_divides(div, poly, p):
    rem = list(poly)
    dd = len(div) - 1
    while len(rem) - 1 >= dd:
        c = rem[-1] % p
        if c:
            shift = len(rem) - 1 - dd
            for i, x in enumerate(div):
                rem[shift + i] = (rem[shift + i] - c * x) % p
        rem.pop()
        while rem and rem[-1] % p == 0 and len(rem) - 1 >= dd:
            rem.pop()
    return all(x % p == 0 for x in rem)


class ResidueField:
    """The pair k0 = GF(q) inside kF = k0[s]/(s^2 - eps), q = p^f odd.

    kF elements are encoded as ints u + q*v meaning u + v*s.  The
    involution x -> x^q fixes k0 and sends s to -s because eps is a
    non-square of k0.
    """

    def __init__(self, p, f=1, eps=None, series_prec=48):
        if not _is_prime(p) or p == 2:
            raise ValueError(f"p must be an odd prime, got {p}")
        self.p = p
        self.f = f
        self.base = _SmallField(p, f)
        self.q = self.base.q
        if eps is None:
            eps = self._find_nonsquare()
        if self._is_square(eps):
            raise ValueError(f"eps={eps} is a square in GF({self.q})")
        self.eps = eps
        self.series_prec = series_prec
        self.zero = 0
        self.one = 1
        self.s = self.q  # the element s = sqrt(eps)
        self._mul_table = None
        self._inv_table = None
        if self.q <= 16:
            self._build_tables()

    # -- k0 helpers ---------------------------------------------------------
    def _is_square(self, a):
        if a == 0:
            return True
        return self.base.pow(a, (self.q - 1) // 2) == 1

    def _find_nonsquare(self):
        for a in range(2, self.q):
            if not self._is_square(a):
                return a
        raise RuntimeError("no non-square unit found")

    # -- kF encoding --------------------------------------------------------
    def pair(self, u, v=0):
        return u + self.q * v

    def parts(self, a):
        return a % self.q, a // self.q

    def of_k0(self, u):
        return u % self.q if self.f == 1 else u

    def _build_tables(self):
        Q = self.q * self.q
        tbl = [[0] * Q for _ in range(Q)]
        for a in range(Q):
            for b in range(a, Q):
                c = self._mul_slow(a, b)
                tbl[a][b] = c
                tbl[b][a] = c
        self._mul_table = tbl
        inv = [0] * Q
        for a in range(1, Q):
            for b in range(1, Q):
                if tbl[a][b] == 1:
                    inv[a] = b
                    break
        self._inv_table = inv

    def _mul_slow(self, a, b):
        u1, v1 = self.parts(a)
        u2, v2 = self.parts(b)
        F = self.base
        # (u1 + v1 s)(u2 + v2 s) = u1u2 + eps v1v2 + (u1v2 + u2v1)s
        u = F.add(F.mul(u1, u2), F.mul(self.eps, F.mul(v1, v2)))
        v = F.add(F.mul(u1, v2), F.mul(u2, v1))
        return u + self.q * v

    # -- kF arithmetic ------------------------------------------------------
    def add(self, a, b):
        u1, v1 = self.parts(a)
        u2, v2 = self.parts(b)
        return self.base.add(u1, u2) + self.q * self.base.add(v1, v2)

    def neg(self, a):
        u, v = self.parts(a)
        return self.base.neg(u) + self.q * self.base.neg(v)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self._mul_table is not None:
            return self._mul_table[a][b]
        return self._mul_slow(a, b)

    def inv(self, a):
        if a == 0:
            raise DivisionByZero("inverse of 0 in residue field")
        if self._inv_table is not None:
            return self._inv_table[a]
        u, v = self.parts(a)
        F = self.base
        # 1/(u+vs) = (u-vs)/(u^2 - eps v^2)
        d = F.add(F.mul(u, u), F.neg(F.mul(self.eps, F.mul(v, v))))
        di = F.inv(d)
        return F.mul(u, di) + self.q * F.mul(F.neg(v), di)

    def conj(self, a):
        u, v = self.parts(a)
        return u + self.q * self.base.neg(v)

    def in_k0(self, a):
        return a < self.q

    def norm(self, a):
        """a * conj(a), an element of k0."""
        n = self.mul(a, self.conj(a))
        assert self.in_k0(n)
        return n

    def trace_to_prime(self, a):
        """Tr_{kF/GF(p)}, an int mod p."""
        u, v = self.parts(a)
        # Tr_{kF/k0}(u+vs) = 2u, then down to GF(p)
        return self.base.trace_to_prime(self.base.add(u, u))

    def k0_trace_to_prime(self, u):
        return self.base.trace_to_prime(u)

    # F_p coordinates of a kF element (length 2f), used by the linear layer
    def coords(self, a):
        u, v = self.parts(a)
        return self.base.coords(u) + self.base.coords(v)

    def from_coords(self, cs):
        f = self.f
        return self.base.from_coords(cs[:f]) + self.q * self.base.from_coords(cs[f:])

    @property
    def coord_len(self):
        return 2 * self.f

    def elements(self):
        return range(self.q * self.q)

    def k0_elements(self):
        return range(self.q)

    def __repr__(self):
        return f"ResidueField(p={self.p}, f={self.f}, eps={self.eps})"


class LocalElem:
    """Truncated Laurent series sum_{t>=v} c_t pi^t over kF.

    co stores the digits c_v..c_{v+len-1} with c_v != 0; digits from
    v+len up to prec are known to be zero; digits at >= prec are
    unknown.  An element with empty co is zero modulo pi^prec, and an
    exact zero has prec = INF.
    """

    __slots__ = ("K", "v", "co", "prec")

    def __init__(self, K, v, co, prec):
        self.K = K
        self.v = v
        self.co = co
        self.prec = prec

    # -- constructors -------------------------------------------------------
    @staticmethod
    def make(K, v, coeffs, prec=INF):
        co = list(coeffs)
        if prec < INF:
            co = co[: max(0, prec - v)]
        i = 0
        while i < len(co) and co[i] == 0:
            i += 1
        co = co[i:]
        v = v + i
        while co and co[-1] == 0:
            co.pop()
        if not co:
            return LocalElem(K, prec, (), prec)
        return LocalElem(K, v, tuple(co), prec)

    @staticmethod
    def zero(K, prec=INF):
        return LocalElem(K, prec, (), prec)

    @staticmethod
    def const(K, c, shift=0, prec=INF):
        """c * pi^shift for a kF element code c."""
        return LocalElem.make(K, shift, [c], prec)

    @staticmethod
    def integer(K, n, prec=INF):
        return LocalElem.const(K, n % K.p, 0, prec)

    @staticmethod
    def pi(K, k=1, prec=INF):
        return LocalElem.const(K, 1, k, prec)

    @staticmethod
    def sqrt_eps(K, prec=INF):
        return LocalElem.const(K, K.s, 0, prec)

    # -- inspection ---------------------------------------------------------
    def is_exact_zero(self):
        return not self.co and self.prec >= INF

    def is_zero_known(self):
        """All known digits vanish (exact zero or zero at finite precision)."""
        return not self.co

    def valuation(self):
        if self.co:
            return self.v
        if self.prec >= INF:
            return INF
        raise PrecisionExhausted(f"valuation of 0 + O(pi^{self.prec}) is undetermined")

    def val_at_least(self, k):
        if self.co:
            return self.v >= k
        if self.prec >= k:
            return True
        raise PrecisionExhausted(f"cannot decide val >= {k} at precision {self.prec}")

    def digit(self, t):
        """Coefficient of pi^t as a kF code; raises beyond precision."""
        if t >= self.prec:
            raise PrecisionExhausted(f"digit at pi^{t} unknown (precision {self.prec})")
        if not self.co or t < self.v or t >= self.v + len(self.co):
            return 0
        return self.co[t - self.v]

    def residue(self):
        """Leading coefficient (unit part residue); 0 for known-zero."""
        return self.co[0] if self.co else 0

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        K = self.K
        prec = min(self.prec, other.prec)
        if not self.co:
            return LocalElem.make(K, other.v, other.co, prec) if other.co else LocalElem.zero(K, prec)
        if not other.co:
            return LocalElem.make(K, self.v, self.co, prec)
        v = min(self.v, other.v)
        end = min(max(self.v + len(self.co), other.v + len(other.co)), prec)
        if end <= v:
            return LocalElem.zero(K, prec)
        co = [0] * (end - v)
        for i, c in enumerate(self.co):
            t = self.v + i
            if t < end:
                co[t - v] = c
        for i, c in enumerate(other.co):
            t = other.v + i
            if t < end:
                co[t - v] = K.add(co[t - v], c)
        return LocalElem.make(K, v, co, prec)

    def __neg__(self):
        K = self.K
        return LocalElem(K, self.v, tuple(K.neg(c) for c in self.co), self.prec)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        K = self.K
        if not self.co or not other.co:
            # val(a*b) >= v_a + prec_b etc.; keep the best bound
            if not self.co and not other.co:
                prec = self.prec + other.prec
            elif not self.co:
                prec = self.prec + other.v
            else:
                prec = other.prec + self.v
            return LocalElem.zero(K, _clamp(prec))
        prec = _clamp(min(self.v + other.prec, other.v + self.prec))
        v = self.v + other.v
        n = min(len(self.co) + len(other.co) - 1, max(0, prec - v) if prec < INF else len(self.co) + len(other.co) - 1)
        co = [0] * n
        for i, a in enumerate(self.co):
            if a == 0:
                continue
            jmax = min(len(other.co), n - i)
            for j in range(jmax):
                b = other.co[j]
                if b:
                    co[i + j] = K.add(co[i + j], K.mul(a, b))
        return LocalElem.make(K, v, co, prec)

    def inverse(self, rel=None):
        """Multiplicative inverse, truncated to relative precision rel."""
        K = self.K
        if not self.co:
            if self.prec >= INF:
                raise DivisionByZero("inverse of exact zero")
            raise PrecisionExhausted("inverse of element that is 0 at working precision")
        if rel is None:
            rel = self.prec - self.v if self.prec < INF else K.series_prec
        rel = min(rel, K.series_prec)
        a0i = K.inv(self.co[0])
        out = [a0i]
        # long division: (sum out_t pi^t) * self = 1
        for t in range(1, rel):
            acc = 0
            for j in range(1, min(t, len(self.co) - 1) + 1):
                c = self.co[j]
                if c:
                    acc = K.add(acc, K.mul(c, out[t - j]))
            out.append(K.mul(K.neg(acc), a0i))
        return LocalElem.make(K, -self.v, out, -self.v + rel)

    def conj(self):
        K = self.K
        return LocalElem(K, self.v, tuple(K.conj(c) for c in self.co), self.prec)

    def shift(self, k):
        """Multiply by pi^k."""
        if not self.co:
            return LocalElem.zero(self.K, _clamp(self.prec + k))
        return LocalElem(self.K, self.v + k, self.co, _clamp(self.prec + k))

    def rep_mod(self, prec):
        """The exact canonical representative modulo pi^prec."""
        if prec > self.prec:
            raise PrecisionExhausted(
                f"representative mod pi^{prec} needs precision {self.prec}")
        if not self.co:
            return LocalElem.zero(self.K)
        co = [c for t, c in enumerate(self.co) if self.v + t < prec]
        return LocalElem.make(self.K, self.v, co)

    def truncate(self, prec):
        if prec >= self.prec:
            return self
        return LocalElem.make(self.K, self.v, self.co, prec)

    def scale(self, c):
        """Multiply by the kF constant code c."""
        K = self.K
        if c == 0:
            return LocalElem.zero(K, self.prec if self.co else self.prec)
        return LocalElem.make(K, self.v, [K.mul(c, x) for x in self.co], self.prec)

    # -- predicates ---------------------------------------------------------
    def in_base_field(self):
        """Fixed by the involution, to known precision."""
        return (self - self.conj()).is_zero_known()

    def same(self, other):
        """Equal as far as the joint precision can tell."""
        return (self - other).is_zero_known()

    def __repr__(self):
        if not self.co:
            return "0" if self.prec >= INF else f"O(pi^{self.prec})"
        K = self.K
        parts = []
        for i, c in enumerate(self.co):
            if c == 0:
                continue
            t = self.v + i
            u, w = K.parts(c)
            if w == 0:
                cs = str(u)
            elif u == 0:
                cs = "se" if w == 1 else f"{w}*se"
            else:
                cs = f"({u}+{w}*se)"
            if t == 0:
                parts.append(cs)
            elif t == 1:
                parts.append(f"{cs}*p" if cs != "1" else "p")
            else:
                parts.append(f"{cs}*p^{t}" if cs != "1" else f"p^{t}")
        body = " + ".join(parts)
        if self.prec < INF:
            body += f" + O(pi^{self.prec})"
        return body


def lf_arith(a, b, op):
    """Dispatch wrapper for the basic local-field operations."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown op {op!r}")


def lf_conjugate(a):
    return a.conj()


def lf_valuation(a):
    return a.valuation()


class CycInt:
    """Z[zeta_p] in the basis 1, zeta, ..., zeta^{p-2}."""

    __slots__ = ("p", "co")

    def __init__(self, p, co):
        self.p = p
        self.co = tuple(co)
        assert len(self.co) == p - 1

    @staticmethod
    def zero(p):
        return CycInt(p, (0,) * (p - 1))

    @staticmethod
    def one(p):
        return CycInt(p, (1,) + (0,) * (p - 2))

    @staticmethod
    def from_int(p, n):
        return CycInt(p, (n,) + (0,) * (p - 2))

    @staticmethod
    def zeta_pow(p, k):
        """zeta_p^k in canonical form."""
        k %= p
        if k < p - 1:
            co = [0] * (p - 1)
            co[k] = 1
            return CycInt(p, co)
        # zeta^{p-1} = -(1 + zeta + ... + zeta^{p-2})
        return CycInt(p, (-1,) * (p - 1))

    @staticmethod
    def _reduce(p, full):
        """Reduce a length-p exponent vector to the canonical basis."""
        top = full[p - 1]
        return tuple(full[k] - top for k in range(p - 1))

    def __add__(self, other):
        assert self.p == other.p
        return CycInt(self.p, tuple(a + b for a, b in zip(self.co, other.co)))

    def __neg__(self):
        return CycInt(self.p, tuple(-a for a in self.co))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        p = self.p
        if isinstance(other, int):
            return CycInt(p, tuple(a * other for a in self.co))
        assert p == other.p
        full = [0] * p
        for i, a in enumerate(self.co):
            if a == 0:
                continue
            for j, b in enumerate(other.co):
                if b:
                    full[(i + j) % p] += a * b
        return CycInt(p, self._reduce(p, full))

    __rmul__ = __mul__

    def conj(self):
        """Complex conjugation zeta -> zeta^{-1}."""
        p = self.p
        full = [0] * p
        for k, a in enumerate(self.co):
            full[(-k) % p] += a
        return CycInt(p, self._reduce(p, full))

    def is_zero(self):
        return all(a == 0 for a in self.co)

    def __eq__(self, other):
        return isinstance(other, CycInt) and self.p == other.p and self.co == other.co

    def __hash__(self):
        return hash((self.p, self.co))

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for k, a in enumerate(self.co):
            if a == 0:
                continue
            if k == 0:
                parts.append(str(a))
            else:
                z = "z" if k == 1 else f"z^{k}"
                parts.append(z if a == 1 else f"{a}*{z}" if a != -1 else f"-{z}")
        return " + ".join(parts).replace("+ -", "- ")


def psi0_eval(x):
    """The additive character of F0 with conductor pi*o0.

    psi0(x) = zeta_p^{Tr(c0(x))} where c0 is the pi^0 digit; x must be
    fixed by the involution.
    """
    K = x.K
    if not x.in_base_field():
        raise NotInBaseField(f"psi0 argument {x!r} is not conjugation-fixed")
    c0 = x.digit(0)
    u, w = K.parts(c0)
    if w != 0:
        raise NotInBaseField("pi^0 digit not in k0")
    return CycInt.zeta_pow(K.p, K.k0_trace_to_prime(u))
