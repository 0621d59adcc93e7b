"""CRC divisibility analysis of undetected LDPC errors.

An undetected decoder error leaves a nonzero codeword ``e`` added to the
transmitted one.  Because the CRC is linear, the outer check misses it exactly
when the information part of ``e`` (its first k bits, read as a polynomial)
is a multiple of the CRC generator.  Tallying that per Hamming weight gives
the conditional miss probability L_j / A_j, which weights the per-weight
decoder error rates.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .codes import CrcCode, LinearCode
from .errors import MissingWeightData
from .gf2 import BitVector, Gf2Polynomial, _remainder_table, poly_mod, poly_mod_batch
from .spectrum import iter_codewords, packed_weights

EXACT = "exact"
ESTIMATED = "estimated"


def divisibility_test(codeword: BitVector, k: int, crc: CrcCode) -> bool:
    """True when the first ``k`` bits of ``codeword`` form a multiple of g."""
    if codeword.length < k:
        raise ValueError("codeword shorter than the information length")
    return poly_mod(codeword.slice(0, k).to_polynomial(), crc.g).is_zero


def info_remainders(words: np.ndarray, k: int, crc: CrcCode) -> np.ndarray:
    """CRC remainders of the first k bits of packed codewords (count, words)."""
    words = np.ascontiguousarray(np.atleast_2d(words), dtype=np.uint64)
    nbytes = (k + 7) // 8
    data = words.view(np.uint8).reshape(words.shape[0], -1)[:, :nbytes].copy()
    if k % 8:
        data[:, -1] &= np.uint8((1 << (k % 8)) - 1)
    return poly_mod_batch(data, crc.g)


@dataclass
class WeightCrcEntry:
    L: int
    A: int
    exactness: str = EXACT

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.L, self.A) if self.A else Fraction(0)


@dataclass
class PerWeightCrcProfile:
    """Per weight j: L_j divisible codewords out of A_j."""

    entries: dict[int, WeightCrcEntry] = field(default_factory=dict)

    def ratio(self, j: int) -> Fraction:
        return self.entries[j].ratio

    def L(self, j: int) -> int:
        return self.entries[j].L if j in self.entries else 0

    def nonzero_L(self) -> dict[int, int]:
        return {j: e.L for j, e in sorted(self.entries.items()) if e.L}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["weight", "L", "A", "ratio", "exactness"])
        for j in sorted(self.entries):
            e = self.entries[j]
            wr.writerow([j, e.L, e.A, repr(float(e.ratio)), e.exactness])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> PerWeightCrcProfile:
        out = cls()
        for r in csv.DictReader(io.StringIO(text)):
            out.entries[int(r["weight"])] = WeightCrcEntry(int(r["L"]), int(r["A"]), r.get("exactness") or EXACT)
        return out


def crc_profile(
    codewords: Iterable[BitVector] | np.ndarray,
    k: int,
    crc: CrcCode,
    exhaustive: bool | Iterable[int] = False,
    reference: dict[int, int] | None = None,
) -> PerWeightCrcProfile:
    """Tally L_j over a stream of codewords.

    ``codewords`` is either an iterable of BitVectors or a packed uint64
    array.  The all-zero word is skipped.  A weight is marked exact when the
    stream is declared exhaustive for it (``exhaustive=True`` for all weights,
    or a collection of weights), or when ``reference`` gives its true
    multiplicity and the stream holds that many distinct words of that weight.
    """
    L: dict[int, int] = {}
    A: dict[int, int] = {}
    if isinstance(codewords, np.ndarray):
        words = np.atleast_2d(codewords)
        w = packed_weights(words)
        div = info_remainders(words, k, crc) == 0
        for j in np.unique(w[w > 0]).tolist():
            sel = w == j
            A[j] = int(sel.sum())
            L[j] = int((div & sel).sum())
    else:
        for cw in codewords:
            j = cw.weight
            if j == 0:
                continue
            A[j] = A.get(j, 0) + 1
            L[j] = L.get(j, 0) + int(divisibility_test(cw, k, crc))
    if exhaustive is True:
        exact_weights = set(A)
    elif exhaustive:
        exact_weights = set(exhaustive)
    else:
        exact_weights = set()
    if reference:
        exact_weights |= {j for j, a in reference.items() if A.get(j) == a}
    prof = PerWeightCrcProfile()
    for j in sorted(A):
        prof.entries[j] = WeightCrcEntry(L[j], A[j], EXACT if j in exact_weights else ESTIMATED)
    return prof


def exhaustive_crc_profile(code: LinearCode, crc: CrcCode, k: int | None = None) -> PerWeightCrcProfile:
    """L_j and A_j over every codeword of a small code (information part = first k bits)."""
    k = code.k if k is None else k
    L = np.zeros(code.n + 1, dtype=np.int64)
    A = np.zeros(code.n + 1, dtype=np.int64)
    for chunk in iter_codewords(code):
        w = packed_weights(chunk)
        div = info_remainders(chunk, k, crc) == 0
        A += np.bincount(w, minlength=code.n + 1)
        L += np.bincount(w[div], minlength=code.n + 1)
    prof = PerWeightCrcProfile()
    for j in range(1, code.n + 1):
        if A[j]:
            prof.entries[j] = WeightCrcEntry(int(L[j]), int(A[j]), EXACT)
    return prof


@dataclass
class PerWeightLdpcProfile:
    """Decoder-output undetected errors split by error-codeword weight."""

    snr_db: float
    frames: int
    counts: dict[int, int] = field(default_factory=dict)

    def ucer(self, j: int) -> float:
        return self.counts.get(j, 0) / self.frames if self.frames else 0.0

    @property
    def total_undetected(self) -> int:
        return sum(self.counts.values())

    @property
    def ucer_total(self) -> float:
        return self.total_undetected / self.frames if self.frames else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["snr_db", "weight", "count", "frames", "ucer_ldpc"])
        # a weight-0 row keeps the frame count when nothing went undetected
        for j in sorted(self.counts) or [0]:
            wr.writerow([self.snr_db, j, self.counts.get(j, 0), self.frames, repr(self.ucer(j))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> list[PerWeightLdpcProfile]:
        by_snr: dict[float, PerWeightLdpcProfile] = {}
        for r in csv.DictReader(io.StringIO(text)):
            snr = float(r["snr_db"])
            prof = by_snr.setdefault(snr, cls(snr, int(r["frames"])))
            if int(r["count"]):
                prof.counts[int(r["weight"])] = int(r["count"])
        return list(by_snr.values())


@dataclass
class CombinedUcer:
    ucer: float
    per_weight_terms: dict[int, float]
    truncation: tuple[int, int]
    provenance: dict[int, str]
    ci: tuple[float, float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "ucer": self.ucer,
                "per_weight_terms": {str(j): v for j, v in sorted(self.per_weight_terms.items())},
                "truncation": {"j_min": self.truncation[0], "j_max": self.truncation[1]},
                "provenance": {str(j): v for j, v in sorted(self.provenance.items())},
                "ci95": list(self.ci),
            },
            indent=2,
            sort_keys=True,
        )


def combine_ucer(
    ldpc: PerWeightLdpcProfile,
    crc: PerWeightCrcProfile,
    j_min: int | None = None,
    j_max: int | None = None,
) -> CombinedUcer:
    """Sum over j in [j_min, j_max] of UCER_LDPC_j * L_j / A_j.

    The 95% interval treats each frame as contributing L_j/A_j when it ends
    in a weight-j undetected error and 0 otherwise (normal approximation).
    """
    weights = sorted(set(ldpc.counts) | set(crc.entries))
    if j_min is None:
        j_min = min(weights) if weights else 0
    if j_max is None:
        j_max = max(weights) if weights else 0
    missing = [j for j, c in ldpc.counts.items() if c and j_min <= j <= j_max and j not in crc.entries]
    if missing:
        raise MissingWeightData(missing)
    terms: dict[int, float] = {}
    provenance: dict[int, str] = {}
    second = 0.0
    for j in range(j_min, j_max + 1):
        if j not in crc.entries:
            continue
        r = crc.ratio(j)
        terms[j] = ldpc.ucer(j) * float(r)
        provenance[j] = crc.entries[j].exactness
        second += ldpc.counts.get(j, 0) * float(r) ** 2
    total = math.fsum(terms.values())
    if ldpc.frames:
        var = max(second / ldpc.frames - total * total, 0.0) / ldpc.frames
        half = 1.96 * math.sqrt(var)
    else:
        half = 0.0
    return CombinedUcer(total, terms, (j_min, j_max), provenance, (max(total - half, 0.0), total + half))


def conventional_estimate(ucer_ldpc_total: float, P: int) -> float:
    """LDPC undetected rate scaled by 2**-P (uniform-syndrome assumption)."""
    if P < 1:
        raise ValueError("P must be >= 1")
    return ucer_ldpc_total * 2.0 ** (-P)


def shifted_divisibility(m: Gf2Polynomial, block_offset: int, crc: CrcCode, block_bits: int = 64) -> bool:
    """Divisibility of x**(block_bits * block_offset) * m(x) by g.

    This is the error pattern seen by the CRC when the erred block sits
    ``block_offset`` blocks away from the lowest-order block of the frame.
    """
    if block_offset < 0:
        raise ValueError("block_offset must be >= 0")
    shifted = Gf2Polynomial(m.value << (block_bits * block_offset))
    return poly_mod(shifted, crc.g).is_zero


def shifted_remainders(messages: np.ndarray, max_offset: int, crc: CrcCode, block_bits: int = 64) -> np.ndarray:
    """Remainders of x**(block_bits*o) * m(x) for o = 0..max_offset, batched.

    ``messages`` are packed little-endian bytes, shape (count, nbytes).  Long
    division runs highest degree first, so the shifted polynomial is processed
    as the message bytes followed by ``block_bits*o/8`` zero bytes; the
    register after each group of zero bytes is the remainder for that offset.
    Returns an array of shape (max_offset + 1, count).
    """
    if block_bits % 8:
        raise ValueError("block_bits must be a multiple of 8")
    p = crc.P
    if p < 8:
        out = []
        for o in range(max_offset + 1):
            pad = np.zeros((messages.shape[0], block_bits * o // 8), dtype=np.uint8)
            out.append(poly_mod_batch(np.hstack([pad, messages]), crc.g))
        return np.array(out)
    table = _remainder_table(crc.g.value, p)
    low_mask = np.uint64((1 << (p - 8)) - 1)
    shift_top = np.uint64(p - 8)
    r = poly_mod_batch(messages, crc.g)
    out = np.empty((max_offset + 1, messages.shape[0]), dtype=np.uint64)
    out[0] = r
    for o in range(1, max_offset + 1):
        for _ in range(block_bits // 8):
            r = table[(r >> shift_top).astype(np.intp)] ^ ((r & low_mask) << np.uint64(8))
        out[o] = r
    return out


# -- codeword list files -----------------------------------------------------------
# First line "n=<length>", then one codeword per line as the hex of the integer
# whose bit i is codeword bit i.  Blank lines and '#' comments are ignored.


def codeword_list_text(words: Iterable[BitVector], n: int) -> str:
    lines = [f"n={n}"]
    for w in words:
        if w.length != n:
            raise ValueError(f"codeword length {w.length} != {n}")
        lines.append(w.hex())
    return "\n".join(lines) + "\n"


def parse_codeword_list(text: str) -> list[BitVector]:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("codeword list must start with a 'n=<length>' header")
    n = int(lines[0][2:])
    return [BitVector.from_hex(ln, n) for ln in lines[1:]]
