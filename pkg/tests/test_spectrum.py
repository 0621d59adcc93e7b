import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldpccrc.codes import LinearCode, build_ccsds_128_64, build_toy_32_16
from ldpccrc.errors import BlockMismatch
from ldpccrc.gf2 import BitVector, Gf2Matrix
from ldpccrc.spectrum import (
    CCSDS_128_64_SPECTRUM,
    TOY_32_16_SPECTRUM,
    WeightSpectrum,
    block_shift,
    ccsds_reference_spectrum,
    error_floor,
    exhaustive_spectrum,
    iter_codewords,
    low_weight_search,
    orbit_expand,
    reduce_base,
    search_qc_code,
    union_bound_cer,
    union_bound_terms,
    words_to_ints,
)
from oracles import all_codewords, union_bound_mp

TOY = build_toy_32_16()
CCSDS = build_ccsds_128_64()


def test_reference_constants():
    assert CCSDS_128_64_SPECTRUM == {14: 16, 16: 528, 18: 5632, 20: 35968, 22: 123888, 24: 364944}
    toy = {4: 4, 6: 48, 8: 460, 10: 1776, 12: 6684, 14: 14048, 16: 19494,
           18: 14048, 20: 6684, 22: 1776, 24: 460, 26: 48, 28: 4, 32: 1}
    assert {w: a for w, a in TOY_32_16_SPECTRUM.items() if w} == toy
    ref = ccsds_reference_spectrum()
    assert ref.is_exact(14) and ref.is_exact(18) and not ref.is_exact(20)


def test_repetition_code_spectrum():
    code = LinearCode.from_parity_check(Gf2Matrix.from_dense([[1, 1]]))
    assert exhaustive_spectrum(code).entries == {0: 1, 2: 1}


def test_toy_spectrum_exact():
    sp = exhaustive_spectrum(TOY)
    assert sp.total() == 65536
    assert sp.entries == TOY_32_16_SPECTRUM
    assert sp[0] == 1 and sp.d_min == 4
    assert all(sp.is_exact(w) for w in sp.entries)
    # the all-ones word is a codeword, so the spectrum is symmetric
    assert all(sp[w] == sp[32 - w] for w in range(33))


def test_enumeration_matches_brute_force():
    words = np.concatenate(list(iter_codewords(TOY, chunk_bits=5)))
    assert words.shape[0] == 65536
    got = sorted(words_to_ints(words))
    ref = all_codewords(TOY.G_dense)
    expect = sorted(int(sum(int(b) << i for i, b in enumerate(r))) for r in ref)
    assert got == expect


def test_enumeration_cap():
    with pytest.raises(ValueError):
        next(iter_codewords(CCSDS))


def test_spectrum_csv_roundtrip(tmp_path):
    sp = ccsds_reference_spectrum()
    text = sp.to_csv()
    assert text.splitlines()[0] == "weight,multiplicity,exactness"
    back = WeightSpectrum.from_csv(text)
    assert back.entries == sp.entries and back.exactness == sp.exactness
    sp.save(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == text


# -- orbits ------------------------------------------------------------------------


def test_orbit_of_zero_word():
    assert orbit_expand(BitVector.zeros(128), 16) == {BitVector.zeros(128)}


def test_orbit_of_random_codeword():
    cw = CCSDS.encode(np.random.default_rng(1).integers(0, 2, 64, dtype=np.uint8))
    orb = orbit_expand(BitVector.from_array(cw), 16)
    assert len(orb) == 16
    assert all(CCSDS.is_codeword(w) for w in orb)


def test_orbit_of_periodic_word():
    # every block is 0101...: invariant under a shift by 2
    v = BitVector.from_array(np.tile([1, 0], 64))
    assert len(orbit_expand(v, 16)) == 2


def test_orbit_block_mismatch():
    with pytest.raises(BlockMismatch):
        orbit_expand(BitVector.zeros(30), 16)


@given(st.integers(0, (1 << 48) - 1), st.sampled_from([1, 2, 3, 4, 6, 8, 12]))
def test_orbit_size_divides_block_size(v, M):
    n = 48 if 48 % M == 0 else M * (48 // M)
    word = BitVector(v & ((1 << n) - 1), n)
    size = len(orbit_expand(word, M))
    assert M % size == 0


@given(st.integers(0, (1 << 32) - 1), st.integers(0, 7), st.integers(0, 7))
def test_block_shift_composes(v, a, b):
    assert block_shift(block_shift(v, 32, 8, a), 32, 8, b) == block_shift(v, 32, 8, a + b)


# -- low-weight search ---------------------------------------------------------------


def test_search_zero_budget():
    res = low_weight_search(CCSDS, 0, np.random.default_rng(0))
    assert res.spectrum.entries == {}


def test_search_finds_all_weight14_words():
    res = low_weight_search(CCSDS, 128, np.random.default_rng(0), w_max=16)
    assert res.spectrum[14] == 16
    assert res.spectrum[16] <= 528
    assert not res.spectrum.is_exact(14)
    for w in (14, 16):
        for cw in res.words(w):
            assert cw.weight == w and CCSDS.is_codeword(cw)
            assert 16 % len(orbit_expand(cw, 16)) == 0


def test_search_recovers_toy_low_weights():
    res = low_weight_search(TOY, 32, np.random.default_rng(1), w_max=8)
    for w in (4, 6, 8):
        assert res.spectrum[w] == TOY_32_16_SPECTRUM[w]


# -- union bound -------------------------------------------------------------------------


def test_union_bound_empty_spectrum():
    assert union_bound_cer(WeightSpectrum(10, 5, {0: 1}), 0.5, 3.0) == 0.0


def test_union_bound_single_term():
    sp = WeightSpectrum(128, 64, {14: 16})
    expect = 8 * math.erfc(math.sqrt(14 * 0.5 * 10 ** 0.36))
    assert union_bound_cer(sp, 0.5, 3.6) == pytest.approx(expect, rel=1e-14)
    assert union_bound_cer(sp, 0.5, 3.6) == pytest.approx(union_bound_mp({14: 16}, 0.5, 3.6), rel=1e-12)


def test_union_bound_toy_sweep_against_oracle():
    prev = math.inf
    for s in np.arange(0.0, 6.01, 0.25):
        got = union_bound_cer(WeightSpectrum(32, 16, TOY_32_16_SPECTRUM), 0.5, float(s))
        assert got == pytest.approx(union_bound_mp(TOY_32_16_SPECTRUM, 0.5, float(s)), rel=1e-12)
        assert got < prev
        prev = got


def test_error_floor_is_dmin_term():
    sp = ccsds_reference_spectrum()
    terms = union_bound_terms(sp, 0.5, 4.0)
    assert error_floor(sp, 0.5, 4.0) == terms[14]


def test_union_bound_rejects_bad_rate():
    with pytest.raises(ValueError):
        union_bound_cer(ccsds_reference_spectrum(), 0.0, 1.0)


@settings(max_examples=50)
@given(st.dictionaries(st.integers(1, 60), st.integers(1, 10**6), min_size=1, max_size=8),
       st.floats(0, 8), st.floats(0.01, 2), st.integers(1, 60), st.integers(1, 1000))
def test_union_bound_monotone(spec, snr, step, extra_w, extra_a):
    sp = WeightSpectrum(64, 32, spec)
    assert union_bound_cer(sp, 0.5, snr + step) <= union_bound_cer(sp, 0.5, snr)
    bigger = dict(spec)
    bigger[extra_w] = bigger.get(extra_w, 0) + extra_a
    assert union_bound_cer(WeightSpectrum(64, 32, bigger), 0.5, snr) >= union_bound_cer(sp, 0.5, snr)


# -- small QC design ------------------------------------------------------------------------


def test_reduce_base_gives_bundled_toy():
    assert reduce_base(CCSDS.base, 4) == TOY.base


def _cell_sizes(base):
    return [[len(c) for c in row] for row in base.cells]


def test_search_qc_code_keeps_protograph():
    base, sp = search_qc_code(TOY.base, 4, np.random.default_rng(0), 50)
    assert _cell_sizes(base) == _cell_sizes(TOY.base)
    assert sp.total() == 65536 and sp.d_min >= 2


def test_search_qc_code_stops_at_target():
    first = search_qc_code(TOY.base, 4, np.random.default_rng(5), 1)
    assert first is not None
    hit = search_qc_code(TOY.base, 4, np.random.default_rng(5), 1, target=first[1].entries)
    assert hit is not None and hit[0] == first[0]
    assert search_qc_code(TOY.base, 4, np.random.default_rng(5), 1, target={0: 1}) is None
