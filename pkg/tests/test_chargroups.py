import numpy as np
import pytest

from u4hecke.arith import CycInt
from u4hecke.config import Context
from u4hecke.hermitian import GroupElem, Mat, make_named_element
from u4hecke.lattices import filtration, standard_sequence
from u4hecke.strata import Stratum, centralizer, halfint_beta, oddlevel_beta, sample_skew_in
from u4hecke.chargroups import (
    CosetSpace, HypothesisFails, StratumGroups, TooLarge, cayley,
    cayley_inverse, char_exponent, conjugate_into_B, pairing_check,
    theta_gram, twisted_char,
)


@pytest.fixture(scope="module")
def ctx():
    return Context()


def iiprime_stratum(ctx, m=1):
    seq = standard_sequence(4)
    return Stratum(ctx, seq, 6 * m - 3, 6 * m - 4, oddlevel_beta(ctx, m, ctx.one()))


def ia_stratum(ctx, m=1):
    seq = standard_sequence(3)
    return Stratum(ctx, seq, 4 * m - 2, 4 * m - 3,
                   halfint_beta(ctx, m, ctx.one(), ctx.one(), ctx.se()))


def ib_stratum(ctx, m=1):
    seq = standard_sequence(3)
    return Stratum(ctx, seq, 4 * m - 2, 4 * m - 3,
                   halfint_beta(ctx, m, ctx.one(), ctx.one(), ctx.one() + ctx.se()))


@pytest.fixture(scope="module")
def groups1(ctx):
    return StratumGroups(iiprime_stratum(ctx, 1))


def test_cayley_roundtrip(ctx):
    seq = standard_sequence(3)
    for _ in range(10):
        x = sample_skew_in(ctx, seq, 1)
        g = cayley(ctx, x)
        assert (g.g * g.ginv).same(Mat.identity(ctx.K))
        y = cayley_inverse(g)
        assert (y - x).is_zero_known()


def test_membership_ii_prime(ctx, groups1):
    K = ctx.K
    g1 = GroupElem.identity(K)
    assert groups1.in_J(g1) and groups1.in_Jplus(g1) and groups1.in_Jprime(g1)
    s1 = make_named_element(K, "s1")
    s2 = make_named_element(K, "s2")
    assert groups1.in_GE(s1) and groups1.in_GE(s2)
    assert not groups1.in_J(s1)
    assert groups1.in_Bprime(make_named_element(K, "u", mu=ctx.se()))
    assert not groups1.in_Bprime(s1)
    # n odd: J = J+ on samples
    w = groups1.window
    for row in groups1.lie_J.basis[:8]:
        g = cayley(ctx, w.unvec(row))
        assert groups1.in_J(g) == groups1.in_Jplus(g)
    # containment J' = G_E cap J
    for row in groups1.lie_Jprime.basis[:6]:
        g = cayley(ctx, w.unvec(row))
        assert groups1.in_Jprime(g) and groups1.in_J(g) and groups1.in_GE(g)


def test_psi_multiplicative_and_trivial_deep(ctx, groups1):
    w = groups1.window
    rng = ctx.rng
    basis = groups1.lie_Jplus.basis
    for _ in range(60):
        v1 = basis[rng.randrange(len(basis))]
        v2 = basis[rng.randrange(len(basis))]
        g = cayley(ctx, w.unvec(v1))
        h = cayley(ctx, w.unvec(v2))
        assert groups1.psi(g * h) == groups1.psi(g) * groups1.psi(h)
    deep = w.lattice_subspace(filtration(groups1.seq, groups1.n + 1), skew=True)
    for row in deep.basis[:10]:
        g = cayley(ctx, w.unvec(row))
        assert groups1.psi(g) == CycInt.one(ctx.K.p)
    # x(a, A, B) lies in the kernel of the character (even m)
    g2 = StratumGroups(iiprime_stratum(ctx, 2))
    for (a, A, B) in [(1, 0, 0), (2, 1, 3), (0, 4, 2)]:
        x = make_named_element(ctx.K, "xABa", a=ctx.num(a),
                               A=ctx.kf(A), B=ctx.kf(B), m=2)
        assert g2.in_J(x)
        assert g2.psi(x) == CycInt.one(ctx.K.p)


def test_index_logs_lemma(ctx):
    # the seven double-coset index formulas at m = 2, t in {0, 1}
    groups = StratumGroups(iiprime_stratum(ctx, 2))
    K = ctx.K
    s1 = make_named_element(K, "s1")
    s2 = make_named_element(K, "s2")

    def word(els):
        g = GroupElem.identity(K)
        for e in els:
            g = g * e
        return g

    for t in (0, 1):
        st = [s1, s2] * t
        ts = [s2, s1] * t
        assert groups.index_log(word(st), prime=True) == 2 * t
        assert groups.index_log(word(st + [s1]), prime=True) == 2 * t
        assert groups.index_log(word(ts), prime=True) == 2 * t
        assert groups.index_log(word(ts + [s2]), prime=True) == 2 * (t + 1)
        assert groups.index_log(word(st)) == 6 * t
        assert groups.index_log(word(st + [s1])) == 6 * t
        assert groups.index_log(word(ts)) == 6 * t
        assert groups.index_log(word(ts + [s2])) == 6 * (t + 1)


def test_coset_space_s2(ctx):
    groups = StratumGroups(iiprime_stratum(ctx, 2))
    s2 = make_named_element(ctx.K, "s2")
    cs_prime = CosetSpace(groups, s2, prime=True)
    assert len(cs_prime) == ctx.q ** 2
    cs = CosetSpace(groups, s2)
    assert len(cs) == ctx.q ** 6
    # locate a known point: reps[i] * g * k
    for i in (0, len(cs) // 2, len(cs) - 1):
        y = cs.reps[i].g * s2.g
        loc = cs.locate(y)
        assert loc is not None and loc[0] == i
    # a point outside J s2 J is not located: s1 is in no s2-coset
    assert cs.locate(make_named_element(ctx.K, "s1").g) is None


def test_coset_space_cross_validation_explicit(ctx):
    # the printed transversal x(a, A, B) covers the same cosets as the
    # generic graded lifting at even m
    groups = StratumGroups(iiprime_stratum(ctx, 2))
    s2 = make_named_element(ctx.K, "s2")
    cs = CosetSpace(groups, s2)
    K = ctx.K
    seen = set()
    for a0 in range(ctx.q):
        for a1 in range(ctx.q):
            for A in K.elements():
                for B in K.elements():
                    x = make_named_element(K, "xABa",
                                           a=ctx.kf(a0) + ctx.kf(a1, 1),
                                           A=ctx.kf(A), B=ctx.kf(B), m=2)
                    loc = cs.locate(x.g * s2.g)
                    assert loc is not None, "explicit representative not covered"
                    seen.add(loc[0])
    assert len(seen) == len(cs)


def test_pairing_checks(ctx):
    rep = pairing_check(ctx, standard_sequence(1), 1, 0)
    assert all(rep.values()), rep
    rep = pairing_check(ctx, standard_sequence(3), 2, 1)
    assert all(rep.values()), rep
    # r below floor(n/2) violates the hypothesis
    with pytest.raises(ValueError):
        pairing_check(ctx, standard_sequence(3), 3, 0)


def test_theta_gram(ctx):
    for m in (1, 2):
        for make in (ia_stratum, ib_stratum):
            s = make(ctx, m)
            groups = StratumGroups(s)
            gram, rank, dim, alternating = theta_gram(groups)
            assert dim > 0
            assert alternating
            assert rank == dim, f"degenerate commutator form at m={m}"
    # n odd: J = J+ and the form lives on a zero space
    groups = StratumGroups(iiprime_stratum(ctx, 1))
    _, rank, dim, alternating = theta_gram(groups)
    assert dim == 0 and rank == 0 and alternating


def test_theta_negative_control(ctx):
    # twisting by b = 0 kills the form
    s = ia_stratum(ctx, 1)
    groups = StratumGroups(s)
    w = groups.window
    Q = groups.lie_J.quotient_basis(groups.lie_Jplus)
    lifts = [cayley(ctx, w.unvec(row)) for row in Q]
    zero = Mat.zero(ctx.K)
    for i in range(len(lifts)):
        for j in range(len(lifts)):
            comm = lifts[i] * lifts[j] * lifts[i].inv() * lifts[j].inv()
            assert twisted_char(ctx, zero, comm.g) == CycInt.one(ctx.K.p)


def test_conjugate_into_B(ctx):
    s = iiprime_stratum(ctx, 1)
    groups = StratumGroups(s)
    # gamma = beta is already in place
    p = conjugate_into_B(groups, s.beta)
    assert groups.in_P(1, p) or (p.g - Mat.identity(ctx.K)).is_zero_known()
    # forward-constructed gamma = Ad(g)(beta + small B-part) for known g
    w = groups.window
    cent = groups.cent
    rng = ctx.rng
    for _ in range(5):
        # a perturbation of beta inside the B-part of the coset lattice
        pert = sample_skew_in(ctx, groups.seq, 1 - groups.n)
        bpert = cent.project(pert)
        target = s.beta + bpert
        x = w.unvec(groups.lie_J.basis[rng.randrange(groups.lie_J.dim)])
        g = cayley(ctx, x)
        gamma = g.inv().ad(target)
        p = conjugate_into_B(groups, gamma)
        moved = p.ad(gamma) - s.beta
        perp = cent.perp_part(moved)
        deep = filtration(groups.seq, groups.n + groups.seq.e + 2)
        assert deep.contains_mat(perp)
        assert filtration(groups.seq, 1 - groups.n).contains_mat(cent.project(moved))


def test_ad_j_coset_sweep(ctx):
    # forward inclusion: Ad(j)(beta + B-part of coset) stays in
    # beta + dual-lattice skew part, on random pairs
    s = iiprime_stratum(ctx, 1)
    groups = StratumGroups(s)
    cent = groups.cent
    w = groups.window
    rng = ctx.rng
    dual = filtration(groups.seq, 1 - groups.n).meet(
        filtration(groups.seq, -(groups.n // 2)))
    for _ in range(40):
        pert = cent.project(sample_skew_in(ctx, groups.seq, 1 - groups.n))
        j = cayley(ctx, w.unvec(groups.lie_J.basis[rng.randrange(groups.lie_J.dim)]))
        moved = j.ad(s.beta + pert) - s.beta
        assert dual.contains_mat(moved)
