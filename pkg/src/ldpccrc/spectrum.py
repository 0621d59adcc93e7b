"""Weight spectra: exhaustive enumeration, quasi-cyclic orbits, randomized
low-weight codeword search and the union bound on the codeword error rate."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import _kernels
from .codes import CirculantBaseMatrix, LinearCode
from .errors import BlockMismatch
from .gf2 import BitVector

EXACT = "exact"
LOWER_BOUND = "lower_bound"

# Known leading terms of the (128,64) enumerator: A14..A18 exact, the rest lower bounds.
CCSDS_128_64_SPECTRUM = {14: 16, 16: 528, 18: 5632, 20: 35968, 22: 123888, 24: 364944}
CCSDS_128_64_EXACT = (14, 16, 18)

TOY_32_16_SPECTRUM = {
    0: 1, 4: 4, 6: 48, 8: 460, 10: 1776, 12: 6684, 14: 14048, 16: 19494,
    18: 14048, 20: 6684, 22: 1776, 24: 460, 26: 48, 28: 4, 32: 1,
}


@dataclass
class WeightSpectrum:
    """Multiplicities A_w with a per-entry exactness flag."""

    n: int
    k: int
    entries: dict[int, int] = field(default_factory=dict)
    exactness: dict[int, str] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, n: int, k: int, counts: dict[int, int], exact: bool = True) -> WeightSpectrum:
        flag = EXACT if exact else LOWER_BOUND
        entries = {int(w): int(a) for w, a in sorted(counts.items()) if a}
        return cls(n, k, entries, {w: flag for w in entries})

    @property
    def d_min(self) -> int | None:
        ws = [w for w, a in self.entries.items() if w > 0 and a > 0]
        return min(ws) if ws else None

    def total(self) -> int:
        return sum(self.entries.values())

    def is_exact(self, w: int) -> bool:
        return self.exactness.get(w) == EXACT

    def __getitem__(self, w: int) -> int:
        return self.entries.get(w, 0)

    def nonzero_terms(self) -> list[tuple[int, int]]:
        return [(w, a) for w, a in sorted(self.entries.items()) if w > 0 and a > 0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["weight", "multiplicity", "exactness"])
        for w in sorted(self.entries):
            wr.writerow([w, self.entries[w], self.exactness.get(w, EXACT)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int = 0, k: int = 0) -> WeightSpectrum:
        rows = list(csv.DictReader(io.StringIO(text)))
        entries = {int(r["weight"]): int(r["multiplicity"]) for r in rows}
        flags = {int(r["weight"]): r.get("exactness") or EXACT for r in rows}
        return cls(n, k, entries, flags)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def ccsds_reference_spectrum() -> WeightSpectrum:
    sp = WeightSpectrum(128, 64, {0: 1, **CCSDS_128_64_SPECTRUM})
    sp.exactness = {w: EXACT if w in (0, *CCSDS_128_64_EXACT) else LOWER_BOUND for w in sp.entries}
    return sp


# -- exhaustive enumeration -------------------------------------------------


def _gray_flip_index(i: int) -> int:
    # bit that changes between Gray codes of i-1 and i
    return (i & -i).bit_length() - 1


def iter_codewords(code: LinearCode, chunk_bits: int = 16, cap: int = 28) -> Iterator[np.ndarray]:
    """Yield every codeword, in chunks of packed (count, words) uint64 rows.

    The low ``chunk_bits`` message bits are expanded by doubling (one row XOR
    per codeword); successive chunks step the remaining message bits in Gray
    order, so each chunk differs from the previous one by a single generator
    row.
    """
    k = code.k
    if k > cap:
        raise ValueError(f"k = {k} exceeds the enumeration cap {cap}")
    G = code.G.packed()
    nw = G.shape[1]
    low = min(chunk_bits, k)
    block = np.zeros((1, nw), dtype=np.uint64)
    for i in range(low):
        block = np.concatenate([block, block ^ G[i]])
    offset = np.zeros(nw, dtype=np.uint64)
    for step in range(1 << (k - low)):
        if step:
            offset = offset ^ G[low + _gray_flip_index(step)]
        yield block ^ offset


def packed_weights(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=1, dtype=np.int64)


def exhaustive_spectrum(code: LinearCode, cap: int = 28) -> WeightSpectrum:
    counts = np.zeros(code.n + 1, dtype=np.int64)
    for chunk in iter_codewords(code, cap=cap):
        counts += np.bincount(packed_weights(chunk), minlength=code.n + 1)
    return WeightSpectrum.from_counts(code.n, code.k, dict(enumerate(counts.tolist())), exact=True)


def words_to_ints(words: np.ndarray) -> list[int]:
    out = []
    for row in np.atleast_2d(words):
        v = 0
        for q, x in enumerate(row.tolist()):
            v |= int(x) << (64 * q)
        out.append(v)
    return out


# -- quasi-cyclic orbits -------------------------------------------------------


def block_shift(value: int, n: int, M: int, s: int) -> int:
    """Cyclically shift every M-bit block of an n-bit word by ``s`` places."""
    s %= M
    if s == 0:
        return value
    mask = (1 << M) - 1
    out = 0
    for b in range(n // M):
        blk = (value >> (b * M)) & mask
        blk = ((blk << s) | (blk >> (M - s))) & mask
        out |= blk << (b * M)
    return out


def orbit_expand(codeword: BitVector, M: int) -> frozenset[BitVector]:
    """All distinct block-wise cyclic shifts of ``codeword``."""
    n = codeword.length
    if M <= 0 or n % M:
        raise BlockMismatch(f"length {n} is not a multiple of block size {M}")
    return frozenset(BitVector(block_shift(codeword.value, n, M, s), n) for s in range(M))


def _orbit_ints(value: int, n: int, M: int) -> set[int]:
    return {block_shift(value, n, M, s) for s in range(M)}


# -- low-weight search ---------------------------------------------------------


@dataclass
class SearchResult:
    spectrum: WeightSpectrum
    codewords: dict[int, set[int]]
    trials: int

    def words(self, w: int) -> list[BitVector]:
        return [BitVector(v, self.spectrum.n) for v in sorted(self.codewords.get(w, ()))]


def low_weight_search(
    code: LinearCode,
    budget: int,
    rng: np.random.Generator,
    w_max: int | None = None,
    order: int = 4,
    impulse: float = 4.0,
    jitter: float = 0.5,
    buffer: int = 200_000,
) -> SearchResult:
    """Collect low-weight codewords by MRB reprocessing of perturbed all-zero
    observations.

    Each trial starts from the all-zero codeword at unit reliability, adds a
    random reliability jitter, and drives one (first pass: every position in
    turn) or two (later trials: random pairs) positions toward 1 with an
    impulse of magnitude ``impulse``.  All order-``order`` candidates on the
    resulting most reliable basis whose weight is at most ``w_max`` are kept,
    and every find is closed under block-wise cyclic shifts.  Multiplicities
    are lower bounds.
    """
    n = code.n
    if w_max is None:
        w_max = (code.d_min or 1) + 6
    M = code.qc_block
    G = code.G_dense
    found: dict[int, set[int]] = {}
    out = np.zeros((buffer, (n + 63) // 64), dtype=np.uint64)
    for t in range(budget):
        llr = 1.0 + jitter * rng.random(n)
        if t < n:
            llr[t] = -impulse
        else:
            a, b = rng.choice(n, 2, replace=False)
            llr[a] = llr[b] = -impulse
        cnt = _kernels.mrb_collect_low_weight(G, llr, order, w_max, out, 0)
        for v in words_to_ints(out[:cnt]):
            orbit = _orbit_ints(v, n, M) if M else {v}
            found.setdefault(v.bit_count(), set()).update(orbit)
    counts = {w: len(s) for w, s in found.items()}
    return SearchResult(WeightSpectrum.from_counts(n, code.k, counts, exact=False), found, budget)


# -- union bound -----------------------------------------------------------------


def union_bound_terms(spectrum: WeightSpectrum, rate: float, eb_n0_db: float) -> dict[int, float]:
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    ebn0 = 10.0 ** (eb_n0_db / 10.0)
    return {w: 0.5 * a * math.erfc(math.sqrt(w * rate * ebn0)) for w, a in spectrum.nonzero_terms()}


def union_bound_cer(spectrum: WeightSpectrum, rate: float, eb_n0_db: float) -> float:
    """Union bound on the ML codeword error rate: sum of A_w/2 erfc(sqrt(w R Eb/N0))."""
    return math.fsum(union_bound_terms(spectrum, rate, eb_n0_db).values())


def error_floor(spectrum: WeightSpectrum, rate: float, eb_n0_db: float) -> float:
    """The minimum-distance term of the union bound."""
    terms = union_bound_terms(spectrum, rate, eb_n0_db)
    return terms[min(terms)] if terms else 0.0


# -- small QC code design --------------------------------------------------------


def reduce_base(base: CirculantBaseMatrix, M: int) -> CirculantBaseMatrix:
    """Same protograph with every exponent taken modulo ``M``.

    Raises ValueError when two exponents of a cell collide modulo M.
    """
    cells = tuple(tuple(tuple(e % M for e in cell) for cell in row) for row in base.cells)
    return CirculantBaseMatrix(M, cells)


def search_qc_code(
    protograph: CirculantBaseMatrix,
    M: int,
    rng: np.random.Generator,
    trials: int,
    target: dict[int, int] | None = None,
) -> tuple[CirculantBaseMatrix, WeightSpectrum] | None:
    """Random search over circulant exponents for a protograph.

    Keeps the protograph (which cells are populated and how many exponents
    each holds), draws fresh distinct exponents in [0, M) and returns the
    first full-rank candidate whose exhaustive spectrum equals ``target``;
    without a target it returns the candidate with the largest minimum
    distance and smallest d_min multiplicity.
    """
    best = None
    best_key = None
    for _ in range(trials):
        cells = tuple(
            tuple(tuple(sorted(rng.choice(M, len(cell), replace=False).tolist())) for cell in row)
            for row in protograph.cells
        )
        cand = CirculantBaseMatrix(M, cells)
        code = LinearCode.from_base(cand)
        n_checks = protograph.block_rows * M
        if code.k != code.n - n_checks or code.k > 28:
            continue
        sp = exhaustive_spectrum(code)
        if target is not None:
            if sp.entries == {w: a for w, a in target.items() if a}:
                return cand, sp
            continue
        key = (sp.d_min or 0, -sp[sp.d_min or 0])
        if best_key is None or key > best_key:
            best, best_key = (cand, sp), key
    return best
