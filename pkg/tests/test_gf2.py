import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldpccrc.codes import build_ccsds_128_64
from ldpccrc.errors import DegenerateCode, DivisionByZeroPolynomial
from ldpccrc.gf2 import (
    BitVector,
    Gf2Matrix,
    Gf2Polynomial,
    poly_mod,
    poly_mod_batch,
    rank,
    systematic_generator,
)
from oracles import coeffs_to_int, dense_rank, int_to_coeffs, schoolbook_mod

CRC16 = Gf2Polynomial.from_exponents([16, 12, 5, 0])
polys = st.integers(min_value=0, max_value=(1 << 200) - 1).map(Gf2Polynomial)
nonzero_polys = st.integers(min_value=1, max_value=(1 << 40) - 1).map(Gf2Polynomial)


# -- BitVector ---------------------------------------------------------------


def test_bitvector_bit_order_is_power_of_x():
    v = BitVector.from_bits([1, 0, 1, 1])
    assert v.value == 0b1101
    assert [v[i] for i in range(4)] == [1, 0, 1, 1]
    assert v.to_polynomial().exponents() == [0, 2, 3]


def test_bitvector_rejects_out_of_range_value():
    with pytest.raises(ValueError):
        BitVector(0b100, 2)
    with pytest.raises(ValueError):
        BitVector.from_bits([0, 2])


def test_bitvector_slice_concat_roundtrip():
    v = BitVector.from_bits([1, 1, 0, 0, 1, 0, 1])
    assert v.slice(0, 3).concat(v.slice(3, 7)) == v
    assert v.slice(2, 5).to_array().tolist() == [0, 0, 1]


def test_bitvector_hex_roundtrip():
    v = BitVector(0xBEEF, 20)
    assert v.hex() == "0beef"
    assert BitVector.from_hex(v.hex(), 20) == v


@given(st.lists(st.integers(0, 1), min_size=0, max_size=150), st.data())
def test_bitvector_xor_group_laws(bits, data):
    a = BitVector.from_bits(bits)
    b = BitVector.from_bits(data.draw(st.lists(st.integers(0, 1), min_size=len(bits), max_size=len(bits))))
    zero = BitVector.zeros(len(bits))
    assert a ^ a == zero
    assert a ^ b == b ^ a
    assert (a ^ b) ^ b == a
    assert 0 <= a.weight <= a.length
    assert a.weight == sum(bits)
    assert BitVector.from_array(a.to_array()) == a


# -- polynomials ---------------------------------------------------------------


def test_poly_mod_generator_by_itself_is_zero():
    assert poly_mod(CRC16, CRC16).is_zero


def test_poly_mod_x20_matches_long_division():
    a = Gf2Polynomial.from_exponents([20])
    expect = coeffs_to_int(schoolbook_mod(int_to_coeffs(a.value), int_to_coeffs(CRC16.value)))
    assert poly_mod(a, CRC16).value == expect
    assert poly_mod(a, CRC16).degree < 16


def test_poly_mod_by_zero_raises():
    with pytest.raises(DivisionByZeroPolynomial):
        poly_mod(Gf2Polynomial(5), Gf2Polynomial(0))
    with pytest.raises(ZeroDivisionError):
        poly_mod_batch(np.zeros((1, 2), dtype=np.uint8), Gf2Polynomial(0))


def test_degree_of_zero_is_none():
    assert Gf2Polynomial(0).degree is None
    assert Gf2Polynomial(1).degree == 0


def test_polynomial_string():
    assert str(CRC16) == "x^16 + x^12 + x^5 + 1"


@given(polys, nonzero_polys)
def test_poly_mod_matches_schoolbook_oracle(a, g):
    r = poly_mod(a, g)
    assert r.value == coeffs_to_int(schoolbook_mod(int_to_coeffs(a.value), int_to_coeffs(g.value)))
    assert r.is_zero or r.degree < g.degree


@given(polys, polys, nonzero_polys)
def test_remainder_is_linear(a, b, g):
    assert poly_mod(a ^ b, g) == poly_mod(a, g) ^ poly_mod(b, g)


@given(polys, nonzero_polys)
def test_divisible_iff_remainder_zero(a, g):
    assert poly_mod(a * g, g).is_zero
    r = poly_mod(a, g)
    assert poly_mod(a ^ r, g).is_zero


@settings(max_examples=30)
@given(st.integers(1, 24), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_poly_mod_batch_matches_scalar(deg, nbytes, seed):
    rng = np.random.default_rng(seed)
    g = Gf2Polynomial((1 << deg) | int(rng.integers(0, 1 << deg)) | 1)
    data = rng.integers(0, 256, size=(20, nbytes), dtype=np.uint8)
    got = poly_mod_batch(data, g)
    for row, r in zip(data, got):
        v = int.from_bytes(row.tobytes(), "little")
        assert int(r) == poly_mod(Gf2Polynomial(v), g).value


# -- matrices ----------------------------------------------------------------------


def test_rank_identity_and_zero():
    assert rank(Gf2Matrix.identity(4)) == 4
    assert rank(Gf2Matrix.zeros(3, 5)) == 0


def test_rank_of_ccsds_parity_check_matches_oracle():
    H = build_ccsds_128_64().H
    assert rank(H) == dense_rank(H.to_dense()) == 64


def test_rank_agrees_with_oracle_on_random_matrices():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        r, c = int(rng.integers(1, 65)), int(rng.integers(1, 129))
        a = (rng.random((r, c)) < rng.uniform(0.05, 0.6)).astype(np.uint8)
        m = Gf2Matrix.from_dense(a)
        got = rank(m)
        assert got == dense_rank(a)
        assert got <= min(r, c)


def test_matrix_times_zero_vector():
    m = Gf2Matrix.from_dense(np.random.default_rng(0).integers(0, 2, (5, 9)))
    assert m.syndrome(BitVector.zeros(9)).value == 0
    assert m.vecmat(BitVector.zeros(5)).value == 0


def test_matmul_matches_numpy():
    rng = np.random.default_rng(3)
    a, b = rng.integers(0, 2, (6, 9)), rng.integers(0, 2, (9, 4))
    got = (Gf2Matrix.from_dense(a) @ Gf2Matrix.from_dense(b)).to_dense()
    assert np.array_equal(got, (a @ b) & 1)


def test_systematic_generator_repetition_code():
    G = systematic_generator(Gf2Matrix.from_dense([[1, 1]]))
    assert G.to_dense().tolist() == [[1, 1]]


def test_systematic_generator_full_rank_square_is_degenerate():
    with pytest.raises(DegenerateCode):
        systematic_generator(Gf2Matrix.identity(5))


def test_systematic_generator_ccsds_orthogonal_to_H():
    code = build_ccsds_128_64()
    G, H = code.G_dense.astype(np.int64), code.H_dense.astype(np.int64)
    assert G.shape == (64, 128)
    assert not np.any((G @ H.T) & 1)
    assert dense_rank(G) == 64


def test_systematic_generator_records_permutation():
    # pivots for the checks cannot all sit at the right end here
    H = Gf2Matrix.from_dense([[1, 0, 1, 0, 0], [0, 1, 1, 0, 0], [1, 1, 0, 1, 1]])
    G = systematic_generator(H)
    Gd = G.to_dense()
    assert not np.any((Gd.astype(int) @ H.to_dense().T.astype(int)) & 1)
    assert sorted(G.perm) == list(range(5))
    assert np.array_equal(Gd[:, list(G.info_positions)], np.eye(G.nrows, dtype=np.uint8))
    assert list(G.perm[: G.nrows]) == list(G.info_positions)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_encoding_any_message_gives_zero_syndrome(seed):
    rng = np.random.default_rng(seed)
    r, n = int(rng.integers(1, 12)), int(rng.integers(13, 40))
    a = rng.integers(0, 2, (r, n))
    H = Gf2Matrix.from_dense(a)
    if dense_rank(a) == n:
        return
    G = systematic_generator(H)
    assert G.nrows == n - dense_rank(a)
    u = BitVector(int(rng.integers(0, 1 << G.nrows)), G.nrows)
    assert H.syndrome(G.vecmat(u)).value == 0
