import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbecc.gf2codes import (AlistError, LinearCode, RankDeficientError, derive_generator, encode,
                            gf2_rank, hard_decision, load_code, parse_alist, parse_matrix_dump,
                            serialize_alist, serialize_matrix_dump, syndrome)

from conftest import all_messages

HAMMING_H = np.array([[1, 1, 0, 1, 1, 0, 0],
                      [1, 0, 1, 1, 0, 1, 0],
                      [0, 1, 1, 1, 0, 0, 1]], dtype=np.uint8)
REP_H = np.array([[1, 1, 0], [1, 0, 1]], dtype=np.uint8)

REP_ALIST = """3 2
2 2
2 1 1
2 2
1 2
1 0
2 0
1 2
1 3
"""


# independent oracles: plain Python loops, no numpy matmul

def loop_matmul_gf2(a, b):
    a, b = a.tolist(), b.tolist()
    return [[sum(a[i][t] * b[t][j] for t in range(len(b))) % 2 for j in range(len(b[0]))]
            for i in range(len(a))]


def dense_rank(M):
    M = [list(r) for r in np.asarray(M).tolist()]
    rank, cols = 0, len(M[0]) if M else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(M)) if M[r][c]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(len(M)):
            if r != rank and M[r][c]:
                M[r] = [x ^ y for x, y in zip(M[r], M[rank])]
        rank += 1
    return rank


def test_encode_zero_and_unit(hamming):
    assert not encode(np.zeros(4, np.uint8), hamming).any()
    assert np.array_equal(encode([1, 0, 0, 0], hamming), hamming.G[0])


def test_encode_all_hamming_messages(hamming):
    msgs = all_messages(4)
    cw = encode(msgs, hamming)
    assert cw.tolist() == loop_matmul_gf2(msgs, hamming.G)
    assert len({tuple(c) for c in cw.tolist()}) == 16
    assert not syndrome(cw, hamming.H).any()


def test_encode_dimension_mismatch(hamming):
    with pytest.raises(ValueError):
        encode([1, 0, 1], hamming)


def test_single_flip_syndrome_is_column(hamming):
    for cw in encode(all_messages(4), hamming):
        for j in range(7):
            e = cw.copy()
            e[j] ^= 1
            assert np.array_equal(syndrome(e, hamming.H), hamming.H[:, j])


def test_syndrome_matches_parity_sums(hamming):
    rng = np.random.default_rng(3)
    for _ in range(50):
        v = rng.integers(0, 2, 7)
        expected = [sum(int(h) * int(b) for h, b in zip(row, v)) % 2 for row in hamming.H]
        assert syndrome(v, hamming.H).tolist() == expected


def test_syndrome_dimension_mismatch(hamming):
    with pytest.raises(ValueError):
        syndrome(np.zeros(6, np.uint8), hamming.H)


def test_syndrome_linearity(hamming):
    rng = np.random.default_rng(4)
    cw = encode(rng.integers(0, 2, (200, 4)), hamming)
    e = rng.integers(0, 2, (200, 7)).astype(np.uint8)
    assert np.array_equal(syndrome(cw ^ e, hamming.H), syndrome(e, hamming.H))


def test_hard_decision_conventions():
    assert hard_decision([0.3, -1.2, 2.0]).tolist() == [0, 1, 0]
    assert hard_decision(np.zeros(5)).tolist() == [0] * 5
    for eps in (1e-300, 1e-9, 0.5):
        assert hard_decision([-eps, eps]).tolist() == [1, 0]


def test_derive_generator_hamming():
    G = derive_generator(HAMMING_H)
    assert not np.array(loop_matmul_gf2(G, HAMMING_H.T)).any()
    assert dense_rank(G) == 4


def test_derive_generator_degenerate_and_repetition():
    assert derive_generator(np.eye(3, dtype=np.uint8)).shape == (0, 3)
    assert derive_generator(REP_H).tolist() == [[1, 1, 1]]


def test_derive_generator_rank_deficient():
    H = np.array([[1, 1, 0], [1, 1, 0]], dtype=np.uint8)
    with pytest.raises(RankDeficientError) as err:
        derive_generator(H)
    assert err.value.rank == 1
    assert "rank 1" in str(err.value)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, n - 1), st.integers(0, 2**32 - 1))))
def test_derive_generator_property(args):
    n, m, seed = args
    H = np.random.default_rng(seed).integers(0, 2, (m, n)).astype(np.uint8)
    if dense_rank(H) < m:
        with pytest.raises(RankDeficientError):
            derive_generator(H)
        return
    G = derive_generator(H)
    assert G.shape == (n - m, n)
    if G.shape[0]:
        assert not np.array(loop_matmul_gf2(G, H.T)).any()
        assert dense_rank(G) == n - m


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_gf2_rank_matches_dense_oracle(r, c, seed):
    M = np.random.default_rng(seed).integers(0, 2, (r, c))
    assert gf2_rank(M) == dense_rank(M)


def test_parse_alist_repetition():
    assert parse_alist(REP_ALIST).tolist() == REP_H.tolist()


def test_parse_alist_unpadded_lists():
    text = "3 2\n2 2\n2 1 1\n2 2\n1 2\n1\n2\n1 2\n1 3\n"
    assert parse_alist(text).tolist() == REP_H.tolist()


def test_parse_alist_inconsistent():
    bad = REP_ALIST.replace("1 2\n1 3\n", "1 2\n2 3\n")
    with pytest.raises(AlistError) as err:
        parse_alist(bad)
    assert "row 2" in str(err.value) and "column 1" in str(err.value)
    assert err.value.line == 9


def test_parse_alist_non_numeric():
    with pytest.raises(AlistError) as err:
        parse_alist(REP_ALIST.replace("2 1 1", "2 x 1"))
    assert err.value.line == 3 and "'x'" in str(err.value)


def test_parse_alist_truncated():
    text = "\n".join(REP_ALIST.splitlines()[:6])
    with pytest.raises(AlistError) as err:
        parse_alist(text)
    assert "truncated" in str(err.value)


def test_alist_round_trip():
    assert np.array_equal(parse_alist(serialize_alist(HAMMING_H)), HAMMING_H)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_alist_round_trip_property(m, n, seed):
    H = np.random.default_rng(seed).integers(0, 2, (m, n)).astype(np.uint8)
    assert np.array_equal(parse_alist(serialize_alist(H)), H)


def test_matrix_dump_round_trip():
    assert serialize_matrix_dump(REP_H) == "2 3\n110\n101\n"
    assert np.array_equal(parse_matrix_dump(serialize_matrix_dump(HAMMING_H)), HAMMING_H)


@pytest.mark.parametrize("name,n,k", [("hamming74", 7, 4), ("repetition3", 3, 1),
                                      ("bch31_16", 31, 16), ("ldpc49_24", 49, 24)])
def test_builtin_codes(name, n, k):
    code = load_code(name)
    assert (code.n, code.k) == (n, k)
    assert not np.array(loop_matmul_gf2(code.G, code.H.T)).any()
    assert dense_rank(code.G) == k and dense_rank(code.H) == n - k


def test_bundled_hamming_is_systematic(hamming):
    assert np.array_equal(hamming.G[:, :4], np.eye(4, dtype=np.uint8))
    assert np.array_equal(hamming.H, HAMMING_H)


def test_linear_code_rejects_bad_pair():
    with pytest.raises(ValueError):
        LinearCode(np.array([[1, 1, 0]]), REP_H)


def test_load_code_from_path(tmp_path):
    p = tmp_path / "rep.alist"
    p.write_text(REP_ALIST)
    code = load_code(str(p))
    assert (code.n, code.k, code.name) == (3, 1, "rep")
    with pytest.raises(FileNotFoundError):
        load_code(str(tmp_path / "missing.alist"))
