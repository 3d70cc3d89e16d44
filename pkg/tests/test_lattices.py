import pytest

from u4hecke.arith import INF
from u4hecke.config import Context
from u4hecke.hermitian import Mat, make_named_element, sigma
from u4hecke.lattices import (
    N0, N1, ExpoMat, Lattice, NotNested, Sequence, conjugate_expomat,
    depth_of, enumerate_standard_c_sequences, filtration, in_unit_group,
    index_log, seq_props, standard_sequence, strict_level_table,
)


@pytest.fixture(scope="module")
def ctx():
    return Context()


def test_dual_lattices():
    assert N0.dual() == Lattice((0, -1, 0, 0))
    assert N1.dual() == Lattice((-1, -1, 0, 0))
    for lat in (N0, N1, Lattice((2, -1, 0, 3))):
        assert lat.dual().dual() == lat


def test_standard_sequence_invariants():
    expected = {1: (2, -1), 2: (2, -1), 3: (4, -1), 4: (6, -1), 5: (6, -3)}
    for i, (e, d) in expected.items():
        seq = standard_sequence(i)
        assert seq.e == e
        assert seq.duality_index() == d
        assert seq.is_c_sequence()
    assert standard_sequence(1).lat(2) == N0.shift(1)
    assert standard_sequence(1).lat(2 * 5) == N0.shift(5)
    # L6 is non-strict but still a C-sequence
    s6 = standard_sequence(6)
    props = seq_props(s6)
    assert props["e"] == 4 and props["d"] % 2 == 1 or props["d"] % 2 == -1
    assert props["is_strict"] is False
    assert props["is_C_sequence"] is True
    assert seq_props(standard_sequence(4))["is_C_sequence"] is True


def test_translation():
    s1 = standard_sequence(1)
    t = s1.translate(2)
    assert all(t.lat(i) == s1.lat(i).shift(1) for i in range(4))
    assert t.duality_index() == s1.duality_index() - 4
    s3 = standard_sequence(3)
    assert filtration(s3.translate(1), 0) == filtration(s3, 0)
    assert filtration(s3.translate(3), 2) == filtration(s3, 2)


# exponent matrices transcribed from the printed filtration tables
PRINTED = {
    (1, 0): [[0, 1, 0, 0], [0, 0, 0, 0], [0, 1, 0, 0], [0, 1, 0, 0]],
    (1, 1): [[1, 1, 1, 1], [0, 1, 0, 0], [1, 1, 1, 1], [1, 1, 1, 1]],
    (2, 0): [[0, 0, 0, -1], [0, 0, 0, -1], [1, 1, 0, 0], [1, 1, 1, 0]],
    (2, 1): [[1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 1, 0], [2, 2, 1, 1]],
    (3, 0): [[0, 1, 0, 0], [0, 0, 0, 0], [1, 1, 0, 0], [1, 1, 1, 0]],
    (3, 1): [[1, 1, 0, 0], [0, 1, 0, 0], [1, 1, 1, 0], [1, 1, 1, 1]],
    (3, 2): [[1, 1, 1, 0], [1, 1, 0, 0], [1, 1, 1, 1], [1, 2, 1, 1]],
    (3, 3): [[1, 1, 1, 1], [1, 1, 1, 0], [1, 2, 1, 1], [2, 2, 1, 1]],
    (4, 2): [[1, 1, 1, 0], [0, 1, 0, 0], [1, 1, 1, 1], [1, 1, 1, 1]],
    (4, 3): [[1, 1, 1, 1], [1, 1, 0, 0], [1, 1, 1, 1], [1, 2, 1, 1]],
    (4, 4): [[1, 1, 1, 1], [1, 1, 1, 0], [1, 2, 1, 1], [1, 2, 1, 1]],
    (4, 5): [[1, 2, 1, 1], [1, 1, 1, 1], [1, 2, 1, 1], [2, 2, 1, 1]],
    (5, 2): [[1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 1, 0], [1, 2, 1, 1]],
    (5, 3): [[1, 1, 1, 0], [1, 1, 0, 0], [1, 1, 1, 1], [2, 2, 1, 1]],
    (5, 4): [[1, 1, 1, 0], [1, 1, 1, 0], [1, 2, 1, 1], [2, 2, 1, 1]],
    (5, 5): [[1, 1, 1, 1], [1, 1, 1, 0], [2, 2, 1, 1], [2, 2, 2, 1]],
}


def test_filtration_matches_printed_tables():
    for (i, k), rows in PRINTED.items():
        got = filtration(standard_sequence(i), k)
        assert got == ExpoMat(rows), f"sequence {i}, depth {k}"
    # shared depth-0/1 lattices
    for i in (4, 5):
        assert filtration(standard_sequence(i), 0) == filtration(standard_sequence(3), 0)
        assert filtration(standard_sequence(i), 1) == filtration(standard_sequence(3), 1)


def test_filtration_periodicity_and_products():
    for i in range(1, 6):
        seq = standard_sequence(i)
        e = seq.e
        for k in range(e):
            assert filtration(seq, k + e) == filtration(seq, k).shift(1)
        for k in range(2 * e):
            for mdepth in range(2 * e):
                prod = filtration(seq, k).minplus(filtration(seq, mdepth))
                assert filtration(seq, k + mdepth).contains(prod)


def test_filtration_duality_and_sigma_stability():
    for i in range(1, 6):
        seq = standard_sequence(i)
        for k in range(-seq.e, seq.e + 1):
            L = filtration(seq, k)
            assert L.dual() == filtration(seq, 1 - k)
            assert L.sigma_image() == L


def test_exactly_eight_standard_c_sequences():
    found = enumerate_standard_c_sequences()
    assert len(found) == 8
    from u4hecke.lattices import _canonical_positions
    keys = {_canonical_positions(s) for s in found}
    expected = {_canonical_positions(standard_sequence(i)) for i in range(1, 9)}
    assert keys == expected


def test_strict_level_table_shape():
    rows = strict_level_table()
    assert len(rows) == 8
    assert rows[2] == ("L3", 4, -1, ["4m-2"], ["m-1/2"])
    assert rows[3] == ("L4", 6, -1, ["6m-2", "6m-4"], ["m-1/3", "m-2/3"])
    assert rows[4] == ("L5", 6, -3, ["6m-2", "6m-4"], ["m-1/3", "m-2/3"])
    assert rows[7] == ("L3", 4, -1, ["4m-1", "4m-3"], ["m-1/4", "m-3/4"])


def halfint_band(ctx, m, a, d, y):
    """The half-integral normal form on L3 with parameters a, d in o0, y in oF."""
    K = ctx.K
    se = ctx.se()
    pi = ctx.pi()
    rows = [[ctx.zero()] * 4 for _ in range(4)]
    rows[0][3] = a * se
    rows[1][2] = y
    rows[2][1] = -(pi * y.conj())
    rows[3][0] = pi * d * se
    return Mat(K, rows).scale(ctx.pi(-m))


def test_depth_examples(ctx):
    s3 = standard_sequence(3)
    assert depth_of(s3, Mat.identity(ctx.K)) == 0
    assert depth_of(s3, Mat.zero(ctx.K)) == INF
    beta = halfint_band(ctx, 1, ctx.one(), ctx.one(), ctx.one())
    assert depth_of(s3, beta) == -2


def test_unit_group_membership(ctx):
    K = ctx.K
    s1 = make_named_element(K, "s1")
    for i in range(1, 6):
        assert in_unit_group(standard_sequence(i), 0, make_named_element(K, "hdiag", nu=ctx.one()))
    assert in_unit_group(standard_sequence(1), 0, s1) is True
    # the (4,1) entry of the depth-0 lattice of L3 requires positive valuation
    assert in_unit_group(standard_sequence(3), 0, s1) is False
    assert in_unit_group(standard_sequence(3), 1, s1) is False
    u = make_named_element(K, "u", mu=ctx.se() * ctx.pi(2))
    assert in_unit_group(standard_sequence(3), 1, u)


def test_index_log(ctx):
    s1 = standard_sequence(1)
    L0, L1_ = filtration(s1, 0), filtration(s1, 1)
    assert index_log(L0, L0) == 0
    # full-algebra step counts twice the number of stepping entries
    steps = sum(1 for i in range(4) for j in range(4) if L1_[i, j] > L0[i, j])
    assert index_log(L0, L1_) == 2 * steps
    with pytest.raises(NotNested):
        index_log(L1_, L0)
    # skew dimensions of the unit-group graded pieces used by the pairing
    assert index_log(filtration(s1, 1), filtration(s1, 2), skew=True) == 6
    s3 = standard_sequence(3)
    assert index_log(filtration(s3, 2), filtration(s3, 3), skew=True) == 4


def test_conjugate_expomat(ctx):
    K = ctx.K
    s2 = make_named_element(K, "s2")
    s3 = standard_sequence(3)
    L = filtration(s3, 0)
    C = conjugate_expomat(L, s2)
    # conjugating twice returns the original (s2^2 = 1)
    assert conjugate_expomat(C, s2) == L
    # conjugation by an element of the depth-0 unit group of L1 fixes its filtration
    s1 = standard_sequence(1)
    sw = make_named_element(K, "s1")
    assert conjugate_expomat(filtration(s1, 0), sw) == filtration(s1, 0)
