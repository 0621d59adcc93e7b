"""Binary linear algebra and polynomial arithmetic over GF(2).

Vectors, matrix rows and polynomials are packed into Python integers:
bit ``i`` of the integer is vector position ``i`` (the ``i``-th transmitted
bit) and, for polynomials, the coefficient of ``x**i``.  Python ints give
word-level XOR and popcount for free and are immutable, so every value here
can be shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateCode, DivisionByZeroPolynomial

__all__ = [
    "BitVector",
    "Gf2Polynomial",
    "Gf2Matrix",
    "GeneratorMatrix",
    "rank",
    "systematic_generator",
    "poly_mod",
    "poly_mulmod",
    "poly_mod_batch",
    "bits_to_int",
    "int_to_bits",
]


def bits_to_int(bits) -> int:
    """Pack a 0/1 sequence (index 0 = least significant bit) into an int."""
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size == 0:
        return 0
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


def int_to_bits(value: int, length: int) -> np.ndarray:
    """Unpack ``length`` low bits of ``value`` into a uint8 array."""
    if length == 0:
        return np.zeros(0, dtype=np.uint8)
    nbytes = (length + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length].copy()


@dataclass(frozen=True)
class BitVector:
    """Fixed-length binary vector packed into an int."""

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.value < 0 or self.value >> self.length:
            raise ValueError("value has bits outside the vector length")

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitVector:
        arr = np.fromiter((int(b) for b in bits), dtype=np.int64)
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("bits must be 0 or 1")
        return cls(bits_to_int(arr), arr.size)

    @classmethod
    def from_array(cls, arr) -> BitVector:
        arr = np.asarray(arr).ravel()
        return cls(bits_to_int(arr & 1), arr.size)

    @classmethod
    def from_hex(cls, text: str, length: int) -> BitVector:
        return cls(int(text, 16), length)

    def to_array(self) -> np.ndarray:
        return int_to_bits(self.value, self.length)

    def hex(self) -> str:
        width = (self.length + 3) // 4
        return format(self.value, f"0{width}x") if width else ""

    @property
    def weight(self) -> int:
        return self.value.bit_count()

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> i) & 1

    def __iter__(self):
        return (int(b) for b in self.to_array())

    def __xor__(self, other: BitVector) -> BitVector:
        if self.length != other.length:
            raise ValueError("length mismatch")
        return BitVector(self.value ^ other.value, self.length)

    def slice(self, start: int, stop: int) -> BitVector:
        return BitVector((self.value >> start) & ((1 << (stop - start)) - 1), stop - start)

    def concat(self, other: BitVector) -> BitVector:
        return BitVector(self.value | (other.value << self.length), self.length + other.length)

    def to_polynomial(self) -> Gf2Polynomial:
        return Gf2Polynomial(self.value)

    def __repr__(self) -> str:
        return f"BitVector({''.join(map(str, self))})"


@dataclass(frozen=True)
class Gf2Polynomial:
    """Binary polynomial; bit ``i`` of ``value`` is the coefficient of x**i."""

    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("negative polynomial encoding")

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> Gf2Polynomial:
        v = 0
        for e in exponents:
            v ^= 1 << e
        return cls(v)

    @property
    def degree(self) -> int | None:
        return self.value.bit_length() - 1 if self.value else None

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def exponents(self) -> list[int]:
        return [i for i in range(self.value.bit_length()) if (self.value >> i) & 1]

    def to_bitvector(self, length: int) -> BitVector:
        return BitVector(self.value, length)

    def __xor__(self, other: Gf2Polynomial) -> Gf2Polynomial:
        return Gf2Polynomial(self.value ^ other.value)

    __add__ = __xor__

    def __mul__(self, other: Gf2Polynomial) -> Gf2Polynomial:
        a, b, out = self.value, other.value, 0
        while b:
            if b & 1:
                out ^= a
            a <<= 1
            b >>= 1
        return Gf2Polynomial(out)

    def __mod__(self, other: Gf2Polynomial) -> Gf2Polynomial:
        return poly_mod(self, other)

    def __str__(self) -> str:
        if not self.value:
            return "0"
        terms = []
        for e in reversed(self.exponents()):
            terms.append("1" if e == 0 else "x" if e == 1 else f"x^{e}")
        return " + ".join(terms)


def poly_mod(a: Gf2Polynomial, g: Gf2Polynomial) -> Gf2Polynomial:
    """Remainder of ``a`` divided by ``g``."""
    if g.value == 0:
        raise DivisionByZeroPolynomial("division by the zero polynomial")
    r, gv = a.value, g.value
    glen = gv.bit_length()
    while r.bit_length() >= glen:
        r ^= gv << (r.bit_length() - glen)
    return Gf2Polynomial(r)


def poly_mulmod(a: Gf2Polynomial, b: Gf2Polynomial, g: Gf2Polynomial) -> Gf2Polynomial:
    return poly_mod(a * b, g)


def _remainder_table(g: int, p: int) -> np.ndarray:
    # T[v] = v(x) * x^p mod g(x) for every byte value v
    table = np.zeros(256, dtype=np.uint64)
    gp = Gf2Polynomial(g)
    for v in range(256):
        table[v] = poly_mod(Gf2Polynomial(v << p), gp).value
    return table


def poly_mod_batch(data: np.ndarray, g: Gf2Polynomial) -> np.ndarray:
    """Remainders of many polynomials at once.

    ``data`` is a uint8 array of shape (count, nbytes); byte ``b`` holds the
    coefficients of x**(8b) .. x**(8b+7), least significant bit first (the
    layout produced by ``np.packbits(..., bitorder="little")``).  Returns the
    remainders as uint64 integers.
    """
    if g.value == 0:
        raise DivisionByZeroPolynomial("division by the zero polynomial")
    data = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    p = g.degree
    if p > 56:
        raise ValueError("generator degree above 56 is not supported in batch mode")
    r = np.zeros(data.shape[0], dtype=np.uint64)
    if p >= 8:
        table = _remainder_table(g.value, p)
        low_mask = np.uint64((1 << (p - 8)) - 1)
        shift_top = np.uint64(p - 8)
        for b in range(data.shape[1] - 1, -1, -1):
            top = (r >> shift_top).astype(np.intp)
            r = table[top] ^ ((r & low_mask) << np.uint64(8)) ^ data[:, b].astype(np.uint64)
    else:
        gv = np.uint64(g.value)
        one = np.uint64(1)
        for b in range(data.shape[1] - 1, -1, -1):
            byte = data[:, b].astype(np.uint64)
            for t in range(7, -1, -1):
                r = (r << one) | ((byte >> np.uint64(t)) & one)
                r = np.where((r >> np.uint64(p)) & one, r ^ gv, r)
    return r


@dataclass(frozen=True)
class Gf2Matrix:
    """Dense binary matrix stored as one packed int per row."""

    rows: tuple[int, ...]
    cols: int

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        limit = 1 << self.cols
        if any(r < 0 or r >= limit for r in self.rows):
            raise ValueError("row has bits outside the column range")

    @classmethod
    def from_dense(cls, arr) -> Gf2Matrix:
        arr = np.asarray(arr, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(tuple(bits_to_int(row) for row in arr), arr.shape[1])

    @classmethod
    def identity(cls, n: int) -> Gf2Matrix:
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> Gf2Matrix:
        return cls((0,) * rows, cols)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i] = int_to_bits(r, self.cols)
        return out

    def row(self, i: int) -> BitVector:
        return BitVector(self.rows[i], self.cols)

    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def col_weights(self) -> list[int]:
        return self.to_dense().sum(axis=0).astype(int).tolist()

    def transpose(self) -> Gf2Matrix:
        return Gf2Matrix.from_dense(self.to_dense().T)

    def syndrome(self, v: BitVector) -> BitVector:
        """Return M·vᵀ as a vector of length ``nrows``."""
        if v.length != self.cols:
            raise ValueError("length mismatch")
        s = 0
        for i, r in enumerate(self.rows):
            s |= ((r & v.value).bit_count() & 1) << i
        return BitVector(s, self.nrows)

    def vecmat(self, u: BitVector) -> BitVector:
        """Return u·M (XOR of the rows selected by ``u``)."""
        if u.length != self.nrows:
            raise ValueError("length mismatch")
        out, val, i = 0, u.value, 0
        while val:
            if val & 1:
                out ^= self.rows[i]
            val >>= 1
            i += 1
        return BitVector(out, self.cols)

    def __matmul__(self, other: Gf2Matrix) -> Gf2Matrix:
        if self.cols != other.nrows:
            raise ValueError("shape mismatch")
        return Gf2Matrix(
            tuple(other.vecmat(BitVector(r, self.cols)).value for r in self.rows), other.cols
        )

    def is_zero(self) -> bool:
        return not any(self.rows)

    def packed(self) -> np.ndarray:
        """Rows as a (nrows, ceil(cols/64)) uint64 array, little-endian words."""
        nwords = max(1, (self.cols + 63) // 64)
        out = np.zeros((self.nrows, nwords), dtype=np.uint64)
        mask = (1 << 64) - 1
        for i, r in enumerate(self.rows):
            for w in range(nwords):
                out[i, w] = (r >> (64 * w)) & mask
        return out


def rank(m: Gf2Matrix) -> int:
    """GF(2) rank by Gaussian elimination on packed rows."""
    work = list(m.rows)
    r = 0
    for col in range(m.cols):
        bit = 1 << col
        pivot = next((i for i in range(r, len(work)) if work[i] & bit), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        pv = work[r]
        for i in range(r + 1, len(work)):
            if work[i] & bit:
                work[i] ^= pv
        r += 1
        if r == len(work):
            break
    return r


@dataclass(frozen=True)
class GeneratorMatrix(Gf2Matrix):
    """Generator matrix in the original column order.

    ``info_positions`` are the columns where the generator restricted to them
    is the identity: message bit ``i`` appears verbatim at
    ``info_positions[i]``.  ``perm`` lists the info positions followed by the
    parity positions, i.e. the column permutation that brings the matrix to
    ``[I | P]`` form.
    """

    info_positions: tuple[int, ...] = ()
    perm: tuple[int, ...] = ()

    @property
    def is_identity_permutation(self) -> bool:
        return self.perm == tuple(range(self.cols))


def systematic_generator(h: Gf2Matrix) -> GeneratorMatrix:
    """Derive a systematic generator matrix for the code with parity checks ``h``.

    Pivot columns are taken from the right end of ``h`` first, so a matrix
    whose trailing columns are independent keeps the message in the leading
    positions and the returned permutation is the identity.
    """
    n = h.cols
    work = [r for r in h.rows if r]
    pivots: list[tuple[int, int]] = []  # (column, row index)
    r = 0
    for col in range(n - 1, -1, -1):
        bit = 1 << col
        pivot = next((i for i in range(r, len(work)) if work[i] & bit), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        pv = work[r]
        for i in range(len(work)):
            if i != r and work[i] & bit:
                work[i] ^= pv
        pivots.append((col, r))
        r += 1
        if r == len(work):
            break
    if r == n:
        raise DegenerateCode(f"rank {r} equals code length; dimension is zero")
    pivot_cols = {c for c, _ in pivots}
    info = [c for c in range(n) if c not in pivot_cols]
    rows = []
    for j in info:
        v = 1 << j
        for col, ri in pivots:
            if (work[ri] >> j) & 1:
                v |= 1 << col
        rows.append(v)
    perm = tuple(info) + tuple(sorted(pivot_cols))
    return GeneratorMatrix(tuple(rows), n, info_positions=tuple(info), perm=perm)

