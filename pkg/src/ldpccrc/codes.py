"""Code construction: QC-LDPC codes from circulant base matrices, CRC codes
and the telecommand transfer-frame layout."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ExponentOutOfRange, PayloadOutOfRange
from .gf2 import (
    BitVector,
    GeneratorMatrix,
    Gf2Matrix,
    Gf2Polynomial,
    poly_mod,
    poly_mulmod,
    rank,
    systematic_generator,
)

# Generator polynomials as coefficient masks including the leading term.
CRC16_MASK = 0x11021  # x^16 + x^12 + x^5 + 1
CRC8_MASK = 0x1D5  # x^8 + x^7 + x^6 + x^4 + x^2 + 1

MIN_TF_BITS = 64
MAX_TF_BITS = 8192


@dataclass(frozen=True)
class CirculantBaseMatrix:
    """Grid of circulant shift sets; cell ``()`` is the zero block."""

    M: int
    cells: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(tuple(sorted(int(e) for e in cell)) for cell in row) for row in self.cells)
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("base matrix must be a non-empty rectangular grid")
        for row in rows:
            for cell in row:
                if len(set(cell)) != len(cell):
                    raise ValueError(f"duplicate exponent in cell {cell}")
                for e in cell:
                    if not 0 <= e < self.M:
                        raise ExponentOutOfRange(f"exponent {e} outside [0, {self.M})")
        object.__setattr__(self, "cells", rows)

    @property
    def block_rows(self) -> int:
        return len(self.cells)

    @property
    def block_cols(self) -> int:
        return len(self.cells[0])

    def to_text(self) -> str:
        lines = [f"qc {self.block_rows} {self.block_cols} {self.M}"]
        for row in self.cells:
            lines.append(" ".join(",".join(map(str, c)) if c else "-" for c in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> CirculantBaseMatrix:
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        head = lines[0].split()
        if len(head) != 4 or head[0] != "qc":
            raise ValueError("expected header 'qc <block_rows> <block_cols> <M>'")
        br, bc, m = (int(x) for x in head[1:])
        body = lines[1:]
        if len(body) != br:
            raise ValueError(f"expected {br} block rows, found {len(body)}")
        cells = []
        for ln in body:
            toks = ln.split()
            if len(toks) != bc:
                raise ValueError(f"expected {bc} cells in row {ln!r}")
            cells.append(tuple(() if t == "-" else tuple(int(e) for e in t.split(",")) for t in toks))
        return cls(m, tuple(cells))

    @classmethod
    def load(cls, path: str | Path) -> CirculantBaseMatrix:
        return cls.from_text(Path(path).read_text())


def expand_base(base: CirculantBaseMatrix) -> Gf2Matrix:
    """Expand circulant exponents into the full binary parity-check matrix.

    Exponent ``e`` puts a one at local (i, (i + e) mod M) in every local row
    ``i``; several exponents in one cell are added modulo 2.
    """
    m = base.M
    dense = np.zeros((base.block_rows * m, base.block_cols * m), dtype=np.uint8)
    local = np.arange(m)
    for bi, row in enumerate(base.cells):
        for bj, cell in enumerate(row):
            for e in cell:
                dense[bi * m + local, bj * m + (local + e) % m] ^= 1
    return Gf2Matrix.from_dense(dense)


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear block code with its parity-check and generator matrices.

    ``d_min`` is a known minimum distance (or a lower bound on it); decoders
    use it only for early-termination certificates, never for correctness.
    """

    name: str
    H: Gf2Matrix
    G: GeneratorMatrix
    qc_block: int | None = None
    d_min: int | None = None
    base: CirculantBaseMatrix | None = field(default=None, repr=False)

    @classmethod
    def from_parity_check(cls, H: Gf2Matrix, name: str = "code", **kw) -> LinearCode:
        return cls(name=name, H=H, G=systematic_generator(H), **kw)

    @classmethod
    def from_base(cls, base: CirculantBaseMatrix, name: str = "qc", **kw) -> LinearCode:
        return cls.from_parity_check(expand_base(base), name=name, qc_block=base.M, base=base, **kw)

    @property
    def n(self) -> int:
        return self.H.cols

    @property
    def k(self) -> int:
        return self.G.nrows

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def H_dense(self) -> np.ndarray:
        return self.H.to_dense()

    @cached_property
    def G_dense(self) -> np.ndarray:
        return self.G.to_dense()

    @cached_property
    def info_positions(self) -> np.ndarray:
        return np.asarray(self.G.info_positions, dtype=np.intp)

    def encode(self, messages) -> np.ndarray:
        """Encode message bits of shape (..., k) into codewords of shape (..., n)."""
        u = np.asarray(messages, dtype=np.float32)
        return (np.rint(u @ self.G_dense.astype(np.float32)).astype(np.int64) & 1).astype(np.uint8)

    def encode_vector(self, message: BitVector) -> BitVector:
        return self.G.vecmat(message)

    def is_codeword(self, word) -> bool:
        if isinstance(word, BitVector):
            return self.H.syndrome(word).value == 0
        w = np.asarray(word, dtype=np.int64)
        return not np.any((self.H_dense.astype(np.int64) @ w) & 1)

    def syndromes(self, words: np.ndarray) -> np.ndarray:
        """Syndrome bits for a batch of words of shape (count, n)."""
        w = np.asarray(words, dtype=np.float32)
        return (np.rint(w @ self.H_dense.T.astype(np.float32)).astype(np.int64) & 1).astype(np.uint8)

    def info_part(self, codeword) -> np.ndarray:
        return np.asarray(codeword)[..., self.info_positions]


def load_base(name: str) -> CirculantBaseMatrix:
    """Load a base matrix bundled with the package (``data/<name>.qc``)."""
    text = resources.files("ldpccrc").joinpath("data", f"{name}.qc").read_text()
    return CirculantBaseMatrix.from_text(text)


@lru_cache(maxsize=None)
def build_ccsds_128_64() -> LinearCode:
    """The rate-1/2, k = 64 telecommand LDPC code (M = 16)."""
    # d_min = 14: lowest term of the known exact weight enumerator
    return LinearCode.from_base(load_base("ccsds_128_64"), name="ccsds-128-64", d_min=14)


@lru_cache(maxsize=None)
def build_toy_32_16() -> LinearCode:
    """Bundled (32,16) protograph QC code (M = 4) used for exhaustive analysis."""
    return LinearCode.from_base(load_base("toy_32_16"), name="toy-32-16", d_min=4)


BUNDLED_CODES = {
    "ccsds-128-64": build_ccsds_128_64,
    "toy-32-16": build_toy_32_16,
}


def load_code(ref: str) -> LinearCode:
    """Resolve a bundled code name or a path to a base-matrix file."""
    if ref in BUNDLED_CODES:
        return BUNDLED_CODES[ref]()
    path = Path(ref)
    return LinearCode.from_base(CirculantBaseMatrix.load(path), name=path.stem)


def check_code_dimension(code: LinearCode) -> bool:
    return code.k == code.n - rank(code.H)


# -- CRC ---------------------------------------------------------------------


@dataclass(frozen=True)
class CrcCode:
    """CRC defined by a generator polynomial.

    The default register convention treats the CRC as pure polynomial
    divisibility (zero preset, no final inversion): the whole protected word
    ``b_0 + b_1 x + ...`` is a multiple of ``g``.  ``standard_preset`` switches
    to the hardware framing convention (all-ones preset, bits shifted in
    transmission order, highest degree first); it is never used by the
    analysis paths.
    """

    g: Gf2Polynomial
    standard_preset: bool = False

    def __post_init__(self):
        if self.g.degree is None or self.g.degree < 1:
            raise ValueError("CRC generator must have degree >= 1")

    @classmethod
    def from_mask(cls, mask: int | str, standard_preset: bool = False) -> CrcCode:
        if isinstance(mask, str):
            mask = int(mask, 16)
        return cls(Gf2Polynomial(mask), standard_preset)

    @property
    def P(self) -> int:
        return self.g.degree

    @property
    def mask(self) -> int:
        return self.g.value

    def __str__(self) -> str:
        return f"CRC-{self.P} g(x) = {self.g}"


CRC16 = CrcCode(Gf2Polynomial(CRC16_MASK))
CRC8 = CrcCode(Gf2Polynomial(CRC8_MASK))


@lru_cache(maxsize=4096)
def _x_inverse_power(g_value: int, power: int) -> int:
    g = Gf2Polynomial(g_value)
    if not g_value & 1:
        raise ValueError("g(0) = 0: x is not invertible modulo g")
    x_inv = Gf2Polynomial((g_value ^ 1) >> 1)  # x * x_inv = g + 1 = 1 (mod g)
    result, base, e = Gf2Polynomial(1), x_inv, power
    while e:
        if e & 1:
            result = poly_mulmod(result, base, g)
        base = poly_mulmod(base, base, g)
        e >>= 1
    return result.value


def _standard_register(bits: BitVector, crc: CrcCode) -> int:
    p = crc.P
    top = 1 << (p - 1)
    mask = (1 << p) - 1
    low = crc.g.value & mask
    reg = mask
    for i in range(bits.length):
        fb = ((reg & top) >> (p - 1)) ^ bits[i]
        reg = (reg << 1) & mask
        if fb:
            reg ^= low
    return reg


def crc_remainder(payload: BitVector, crc: CrcCode) -> BitVector:
    """The P redundancy bits that ``crc_append`` puts after ``payload``."""
    if crc.standard_preset:
        reg = _standard_register(payload, crc)
        # register bit P-1 is transmitted first
        return BitVector(int(format(reg, f"0{crc.P}b")[::-1], 2), crc.P)
    inv = Gf2Polynomial(_x_inverse_power(crc.g.value, payload.length))
    r = poly_mulmod(payload.to_polynomial(), inv, crc.g)
    return BitVector(r.value, crc.P)


def crc_append(payload: BitVector, crc: CrcCode) -> BitVector:
    if payload.length < 1:
        raise ValueError("payload must be non-empty")
    return payload.concat(crc_remainder(payload, crc))


def crc_check(data: BitVector, crc: CrcCode) -> bool:
    if data.length <= crc.P:
        raise ValueError("data must be longer than the CRC")
    if crc.standard_preset:
        body = data.slice(0, data.length - crc.P)
        return crc_remainder(body, crc) == data.slice(data.length - crc.P, data.length)
    return poly_mod(data.to_polynomial(), crc.g).is_zero


# -- transfer frame ----------------------------------------------------------


@dataclass(frozen=True)
class FrameLayout:
    S: int  # payload bits including the CRC
    k: int
    N: int
    stuff_len: int

    @classmethod
    def for_payload(cls, payload_bits: int, k: int, P: int, check_bounds: bool = True) -> FrameLayout:
        S = payload_bits + P
        if check_bounds and not MIN_TF_BITS <= S <= MAX_TF_BITS:
            raise PayloadOutOfRange(f"S = {S} outside [{MIN_TF_BITS}, {MAX_TF_BITS}]")
        if payload_bits < 1:
            raise PayloadOutOfRange("empty payload")
        N = math.ceil(S / k)
        return cls(S=S, k=k, N=N, stuff_len=N * k - S)

    @property
    def total_bits(self) -> int:
        return self.N * self.k


def stuffing(length: int, fill: str = "alternating") -> BitVector:
    if fill == "alternating":
        # 0101...: first stuffing bit is 0
        v = sum(1 << i for i in range(1, length, 2))
        return BitVector(v, length)
    if fill == "zeros":
        return BitVector.zeros(length)
    raise ValueError(f"unknown fill pattern {fill!r}")


def frame_build(
    payload: BitVector,
    k: int,
    crc: CrcCode,
    fill: str = "alternating",
    check_bounds: bool = True,
) -> list[BitVector]:
    """Append the CRC, split into k-bit blocks and stuff the last block."""
    layout = FrameLayout.for_payload(payload.length, k, crc.P, check_bounds)
    data = crc_append(payload, crc).concat(stuffing(layout.stuff_len, fill))
    return [data.slice(i * k, (i + 1) * k) for i in range(layout.N)]


def frame_parse(blocks: list[BitVector], payload_bits: int, crc: CrcCode) -> tuple[BitVector, bool]:
    """Reassemble blocks, drop stuffing, and return (payload, crc_ok)."""
    data = blocks[0]
    for b in blocks[1:]:
        data = data.concat(b)
    s = payload_bits + crc.P
    protected = data.slice(0, s)
    return protected.slice(0, payload_bits), crc_check(protected, crc)
