from fractions import Fraction

import pytest

from u4hecke.config import Context
from u4hecke.hermitian import Mat, is_skew, make_named_element, sigma
from u4hecke.lattices import depth_of, filtration, standard_sequence
from u4hecke.strata import (
    Component, NotFundamental, NotAnisotropic, NotSplit, ShapeMismatch, Stratum,
    centralizer, check_split_conditions, classify_halfint, component_simple_certificate,
    decomp_filtration_check, ge_type_report, graded_ad_bijective, halfint_beta,
    hensel_split, is_semisimple, lambda2_beta, normalize_halfint, oddlevel_beta,
    principal_beta, quarter_beta, recover_sequence, reduction_inclusion,
    represents_one_third_level, rfactor, rmul, rtrim, sample_skew_in,
    simple_certificate, strata_equivalent, third_beta, torus_case_indices,
)


@pytest.fixture(scope="module")
def ctx():
    return Context()


def Lnorm(K, y):
    return K.norm(y)


# -- parameter pickers at q = 3 ---------------------------------------------

def ia_beta(ctx, m=1):
    # a = d = 1 and norm(y) = -eps: with eps = 2, se has norm 1 = -eps
    return halfint_beta(ctx, m, ctx.one(), ctx.one(), ctx.se())


def ib_beta(ctx, m=1, y_unit=True):
    if y_unit:
        y = ctx.one() + ctx.se()  # norm(1+se) = 1 - eps = 2 != -adeps
        return halfint_beta(ctx, m, ctx.one(), ctx.one(), y)
    return halfint_beta(ctx, m, ctx.one(), ctx.one(), ctx.zero())


def test_levels(ctx):
    s3 = standard_sequence(3)
    b = halfint_beta(ctx, 1, ctx.one(), ctx.one(), ctx.one())
    s = Stratum(ctx, s3, 2, 1, b)
    assert s.level() == Fraction(1, 2)
    assert Stratum(ctx, s3, 3, 1, quarter_beta(ctx, 3, ctx.one(), ctx.one())).level() \
        == Fraction(3, 4)
    s4 = standard_sequence(4)
    assert Stratum(ctx, s4, 4, 2, third_beta(ctx, 4, 2, 1, ctx.one())).level() \
        == Fraction(2, 3)
    s1 = standard_sequence(1)
    assert Stratum(ctx, s1, 2, 1, sample_skew_in(ctx, s1, -2)).level() == 1


def test_halfint_charpoly_formula(ctx):
    # residue charpoly is (X - ad*eps)^2 (X + norm(y))^2
    K = ctx.K
    for _ in range(25):
        a = ctx.rand_k0()
        d = ctx.rand_k0()
        y = ctx.rand_kf()
        m = ctx.rng.choice([1, 2])
        beta = halfint_beta(ctx, m, ctx.kf(a), ctx.kf(d), ctx.kf(y))
        s = Stratum(ctx, standard_sequence(3), 4 * m - 2, 4 * m - 3, beta)
        got = s.residue_poly()
        c1 = K.mul(K.mul(a, d), K.of_k0(K.eps))
        c2 = K.neg(K.norm(y))
        lin1 = [K.neg(c1), 1]
        lin2 = [K.neg(c2), 1]
        expect = rmul(K, rmul(K, lin1, lin1), rmul(K, lin2, lin2))
        assert got == rtrim(expect)


def test_principal_charpoly_formula(ctx):
    # residue charpoly is X^2 (X + norm(y) - cm - conj(cm))^2
    K = ctx.K
    for _ in range(25):
        c = ctx.rand_kf()
        mm = ctx.rand_kf()
        y = ctx.rand_kf()
        m = ctx.rng.choice([1, 2])
        beta = principal_beta(ctx, m, ctx.kf(c), ctx.kf(mm), ctx.kf(y))
        s = Stratum(ctx, standard_sequence(1), 2 * m - 1, 2 * m - 2, beta)
        got = s.residue_poly()
        cm = K.mul(c, mm)
        t = K.add(K.norm(y), K.neg(K.add(cm, K.conj(cm))))
        lin = [t, 1]
        expect = rmul(K, [0, 0, 1], rmul(K, lin, lin))
        assert got == rtrim(expect)


def test_fundamental(ctx):
    s3 = standard_sequence(3)
    zb = Mat.zero(ctx.K)
    # depth constraint fails for the zero matrix only via is_fundamental
    s = Stratum(ctx, s3, 2, 1, halfint_beta(ctx, 1, ctx.zero(), ctx.zero(), ctx.zero()))
    assert not s.is_fundamental()
    assert Stratum(ctx, s3, 2, 1, ia_beta(ctx)).is_fundamental()
    s4 = standard_sequence(4)
    deep = Stratum(ctx, s4, 3, 2, oddlevel_beta(ctx, 1, ctx.pi()))
    assert not deep.is_fundamental()
    assert Stratum(ctx, s4, 3, 2, oddlevel_beta(ctx, 1, ctx.one())).is_fundamental()


def test_equivalence(ctx):
    s3 = standard_sequence(3)
    b = ia_beta(ctx)
    s = Stratum(ctx, s3, 2, 1, b)
    assert strata_equivalent(s, s)
    pert = Mat.unit(ctx.K, 1, 2, ctx.pi(9))
    assert strata_equivalent(s, Stratum(ctx, s3, 2, 1, b + pert, check=False))
    # a only matters mod p0: a vs a + pi
    b2 = halfint_beta(ctx, 1, ctx.one() + ctx.pi(), ctx.one(), ctx.se())
    assert strata_equivalent(s, Stratum(ctx, s3, 2, 1, b2))
    with pytest.raises(ShapeMismatch):
        strata_equivalent(s, Stratum(ctx, standard_sequence(1), 1, 0,
                                     sample_skew_in(ctx, standard_sequence(1), -1)))
    # fundamental is an equivalence invariant: exhaustive over the band
    # residues at q = 3 for (L3, n = 2, r = 1)
    K = ctx.K
    for a in K.k0_elements():
        for d in K.k0_elements():
            for y in list(K.elements())[:9]:
                beta = halfint_beta(ctx, 1, ctx.kf(a), ctx.kf(d), ctx.kf(y))
                st = Stratum(ctx, s3, 2, 1, beta)
                deep = sample_skew_in(ctx, s3, -1)
                st2 = Stratum(ctx, s3, 2, 1, beta + deep, check=False)
                assert st.is_fundamental() == st2.is_fundamental()


def test_classify_halfint(ctx):
    s3 = standard_sequence(3)
    assert classify_halfint(Stratum(ctx, s3, 2, 1, ia_beta(ctx))) == "ia"
    assert classify_halfint(Stratum(ctx, s3, 2, 1, ib_beta(ctx))) == "ib"
    assert classify_halfint(Stratum(ctx, s3, 2, 1, ib_beta(ctx, y_unit=False))) == "ib"
    ic = halfint_beta(ctx, 1, ctx.zero(), ctx.one(), ctx.one())
    assert classify_halfint(Stratum(ctx, s3, 2, 1, ic)) == "ic"
    with pytest.raises(NotFundamental):
        classify_halfint(Stratum(ctx, s3, 2, 1,
                                 halfint_beta(ctx, 1, ctx.zero(), ctx.one(), ctx.pi())))


def test_normalize_halfint(ctx):
    s3 = standard_sequence(3)
    base = ib_beta(ctx)
    deep = sample_skew_in(ctx, s3, -1)
    s = Stratum(ctx, s3, 2, 1, base + deep, check=False)
    nrm = normalize_halfint(s)
    assert strata_equivalent(s, nrm)
    assert classify_halfint(nrm) == "ib"


def test_simple_certificates(ctx):
    s3 = standard_sequence(3)
    # quarter level: strict chain route
    s = Stratum(ctx, s3, 3, 1, quarter_beta(ctx, 3, ctx.one(), ctx.one()))
    cert = simple_certificate(s)
    assert cert and cert["route"] == "strict-coprime" and cert["degree"] == 4
    assert cert["scalar_reduction"]
    # half-integral ia: scalar square route
    sia = Stratum(ctx, s3, 2, 1, ia_beta(ctx))
    cert = simple_certificate(sia)
    assert cert and cert["route"] == "scalar-square"
    assert cert["square_valuation"] == -1
    # zero beta is nothing
    z = Stratum(ctx, s3, 2, 1, halfint_beta(ctx, 1, ctx.zero(), ctx.zero(), ctx.zero()))
    assert simple_certificate(z) is None


def test_third_level_split(ctx):
    for seq_id, expect_rep1 in ((4, True), (5, False)):
        seq = standard_sequence(seq_id)
        beta = third_beta(ctx, seq_id, 2, 1, ctx.one())
        s = Stratum(ctx, seq, 4, 2, beta)
        assert depth_of(seq, beta) == -4
        assert s.is_fundamental()
        sd = hensel_split(s)
        dims = sorted(c.dim for c in sd.components)
        assert dims == [1, 3]
        rep = check_split_conditions(s, sd)
        assert all(rep.values())
        line = next(c for c in sd.components if c.dim == 1)
        assert line.is_zero_block()
        big = next(c for c in sd.components if c.dim == 3)
        cert = component_simple_certificate(big)
        assert cert and cert["degree"] == 3 and cert["ramification"] == 3
        assert represents_one_third_level(s) is expect_rep1


def test_third_level_split_noisy(ctx):
    # random deeper perturbations keep the splitting and the verdicts
    for seq_id, expect in ((4, True), (5, False)):
        seq = standard_sequence(seq_id)
        for _ in range(5):
            beta = third_beta(ctx, seq_id, 2, ctx.rng.randrange(1, 3),
                              ctx.kf(ctx.rand_kf(nonzero=True)))
            noise = sample_skew_in(ctx, seq, -3)
            s = Stratum(ctx, seq, 4, 2, beta + noise, check=False)
            if not s.is_fundamental():
                continue
            assert represents_one_third_level(s) is expect


def test_is_semisimple(ctx):
    s3 = standard_sequence(3)
    ok, cert = is_semisimple(Stratum(ctx, s3, 2, 1, ia_beta(ctx)))
    assert ok and cert["simple"]["route"] == "scalar-square"
    ok, cert = is_semisimple(Stratum(ctx, s3, 2, 1, ib_beta(ctx)))
    assert ok and cert["simple"] is None
    assert all(c["simple"] for c in cert["components"] if not c["zero_block"])
    ok, cert = is_semisimple(Stratum(ctx, s3, 2, 1, ib_beta(ctx, y_unit=False)))
    assert ok
    s4 = standard_sequence(4)
    ok, cert = is_semisimple(Stratum(ctx, s4, 3, 2, oddlevel_beta(ctx, 1, ctx.one())))
    assert ok
    assert any(c.get("zero_block") for c in cert["components"])
    z = Stratum(ctx, s3, 2, 1, halfint_beta(ctx, 1, ctx.zero(), ctx.zero(), ctx.zero()))
    ok, _ = is_semisimple(z)
    assert not ok


def test_centralizer_dims(ctx):
    s3 = standard_sequence(3)
    # scalar beta: B = A
    lam = ctx.pi(-2)
    scal = Mat.identity(ctx.K).scale(lam * ctx.se())
    cent = centralizer(Stratum(ctx, s3, 8, 7, scal, check=False))
    assert cent.dimB == 16
    # ia: quaternion-like centralizer of a quadratic regular element
    cent = centralizer(Stratum(ctx, s3, 2, 1, ia_beta(ctx)))
    assert cent.dimB == 8
    # projection fixes B
    for b in cent.basisB[:4]:
        assert cent.project(b).same(b)
    # sigma stability of B on samples
    for b in cent.basisB[:4]:
        sb = sigma(b)
        assert (cent.project(sb)).same(sb)
    # ii-prime: B = M2(F) + E2 has dimension 4 + 2
    s4 = standard_sequence(4)
    cent = centralizer(Stratum(ctx, s4, 3, 2, oddlevel_beta(ctx, 1, ctx.one())))
    assert cent.dimB == 6


# the third-level strata have a residual cubic component, which is wildly
# ramified when p = 3; the trace-form decomposition needs a tame prime
CASES = [
    ("quarter", False, lambda c: (standard_sequence(3), 3, 1,
                                  quarter_beta(c, 3, c.one(), c.one()))),
    ("third-L4", True, lambda c: (standard_sequence(4), 4, 2,
                                  third_beta(c, 4, 2, 1, c.one()))),
    ("third-L5", True, lambda c: (standard_sequence(5), 4, 2,
                                  third_beta(c, 5, 2, 1, c.one()))),
    ("ia", False, lambda c: (standard_sequence(3), 2, 1, ia_beta(c))),
    ("ib", False, lambda c: (standard_sequence(3), 2, 1, ib_beta(c))),
    ("ii-prime", False, lambda c: (standard_sequence(4), 3, 2,
                                   oddlevel_beta(c, 1, c.one()))),
]


@pytest.fixture(scope="module")
def ctx5():
    return Context(p=5)


@pytest.mark.parametrize("name,needs_tame_prime,make", CASES)
def test_decomposition_and_adjoint(ctx, ctx5, name, needs_tame_prime, make):
    c = ctx5 if needs_tame_prime else ctx
    seq, n, r, beta = make(c)
    s = Stratum(c, seq, n, r, beta)
    cent = centralizer(s)
    assert cent.tame
    w = s.window()
    for k in range(seq.e):
        assert decomp_filtration_check(s, k, cent=cent, w=w), f"{name} decomp at {k}"
        assert graded_ad_bijective(s, k, cent=cent, w=w), f"{name} adjoint at {k}"
        assert graded_ad_bijective(s, k, cent=cent, skew=True, w=w), \
            f"{name} skew adjoint at {k}"


def test_third_level_wild_at_p3(ctx):
    # at p = 3 the cubic component is wildly ramified: the trace pairing
    # degenerates on the centralizer and the decomposition is refused
    from u4hecke.strata import RankUnstable
    s = Stratum(ctx, standard_sequence(4), 4, 2, third_beta(ctx, 4, 2, 1, ctx.one()))
    cent = centralizer(s)
    assert not cent.tame
    with pytest.raises(RankUnstable):
        decomp_filtration_check(s, 0, cent=cent)


def test_adjoint_negative_control(ctx):
    s3 = standard_sequence(3)
    # the zero stratum is a degenerate control and never certifies
    z = Stratum(ctx, s3, 2, 1, Mat.zero(ctx.K), check=False)
    assert graded_ad_bijective(z, 0) is False
    # a deliberately wild fake: perturbing ia by a non-commuting unit
    # makes the trace form singular on the centralizer, and the check
    # refuses rather than certify
    from u4hecke.strata import RankUnstable
    beta = ia_beta(ctx)
    fake = beta + Mat.unit(ctx.K, 1, 2, ctx.pi(-1) * ctx.se())
    s = Stratum(ctx, s3, 2, 1, fake, check=False)
    cent = centralizer(s)
    assert not cent.tame
    with pytest.raises(RankUnstable):
        decomp_filtration_check(s, 0, cent=cent)


def test_periodicity_of_checks(ctx):
    s3 = standard_sequence(3)
    s = Stratum(ctx, s3, 2, 1, ia_beta(ctx))
    cent = centralizer(s)
    w = s.window()
    assert decomp_filtration_check(s, 1, cent=cent, w=w) == \
        decomp_filtration_check(s, 1 + s3.e, cent=cent, w=w)


def test_reduction_inclusions(ctx):
    for m in (1, 2):
        assert reduction_inclusion(ctx, "ic-a", m)
        assert reduction_inclusion(ctx, "ic-d", m)
        assert reduction_inclusion(ctx, "ii", m)
        assert reduction_inclusion(ctx, "iii", m)
        assert not reduction_inclusion(ctx, "ib-neg", m)


def test_ge_type_reports(ctx):
    s3 = standard_sequence(3)
    rep = ge_type_report(Stratum(ctx, s3, 2, 1, ia_beta(ctx)))
    assert rep["compact"] and len(rep["components"]) == 1
    assert rep["components"][0]["field_degree"] == 2
    assert rep["components"][0]["dim_over_E"] == 2
    rep = ge_type_report(Stratum(ctx, s3, 2, 1, ib_beta(ctx)))
    assert rep["compact"] and len(rep["components"]) == 2
    assert all(r["dim_over_E"] == 1 for r in rep["components"])
    rep = ge_type_report(Stratum(ctx, s3, 2, 1, ib_beta(ctx, y_unit=False)))
    assert rep["compact"]
    assert sorted(r["dim_over_E"] for r in rep["components"]) == [1, 2]
    s4 = standard_sequence(4)
    rep = ge_type_report(Stratum(ctx, s4, 3, 2, oddlevel_beta(ctx, 1, ctx.one())))
    assert not rep["compact"]
    iso = [r for r in rep["components"] if r["isotropic"]]
    assert len(iso) == 1 and iso[0]["dim_F"] == 2
    rep = ge_type_report(Stratum(ctx, s4, 4, 2, third_beta(ctx, 4, 2, 1, ctx.one())))
    assert rep["compact"] and sorted(r["dim_F"] for r in rep["components"]) == [1, 3]


def test_torus_indices(ctx):
    s3 = standard_sequence(3)
    s = Stratum(ctx, s3, 3, 1, quarter_beta(ctx, 3, ctx.one(), ctx.one()))
    out = torus_case_indices(s)
    assert out["j1h1_log"] % 2 == 0
    # n odd: the two mixed depths coincide, so the index is trivial
    assert out["j1h1_log"] == 0 and out["dim_eta_log"] == 0
    # quartic totally ramified: residue torus is the norm-one group of
    # the quadratic residue extension: q + 1 elements
    assert out["residue_order"] == ctx.q + 1
    s4 = standard_sequence(4)
    s = Stratum(ctx, s4, 4, 2, third_beta(ctx, 4, 2, 1, ctx.one()))
    out = torus_case_indices(s)
    assert out["j1h1_log"] % 2 == 0
    assert out["residue_order"] == (ctx.q + 1) ** 2
    assert out["rep_count"] == out["residue_order"] * ctx.q ** out["graded_log"]


def test_recover_roundtrip_quarter(ctx):
    s3 = standard_sequence(3)
    beta = quarter_beta(ctx, 3, ctx.one(), ctx.one())
    got = recover_sequence(ctx, beta, 3, 4, s3.duality_index())
    assert got.equals_diagonal(s3)


def test_recover_roundtrip_third(ctx):
    for seq_id in (4, 5):
        seq = standard_sequence(seq_id)
        beta = third_beta(ctx, seq_id, 2, 1, ctx.one())
        got = recover_sequence(ctx, beta, 4, 6, seq.duality_index())
        assert got.equals_diagonal(seq)


def test_recover_isotropic_rejected(ctx):
    beta = oddlevel_beta(ctx, 1, ctx.one())
    with pytest.raises(NotAnisotropic):
        recover_sequence(ctx, beta, 3, 6, standard_sequence(4).duality_index())


def test_charpoly_conjugation_invariance(ctx):
    s3 = standard_sequence(3)
    beta = ib_beta(ctx)
    s = Stratum(ctx, s3, 2, 1, beta)
    base = s.residue_poly()
    K = ctx.K
    h = make_named_element(K, "hdiag", nu=ctx.one() + ctx.pi() * ctx.se())
    for g in (h,):
        conj = Stratum(ctx, s3, 2, 1, g.ad(beta), check=False)
        assert conj.residue_poly() == base
