"""Iterative (SPA-LLR, min-sum, normalized min-sum) and most-reliable-basis
decoders, plus classification of a decode against the transmitted codeword."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .codes import LinearCode
from .errors import InvalidAlpha
from .gf2 import BitVector, Gf2Matrix

DECODERS = ("spa", "ms", "nms", "mrb")
DEFAULT_ALPHA = 0.8
DEFAULT_IMAX = 100
DEFAULT_MRB_ORDER = 4


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Sparse view of H in compressed form.

    Edges are numbered check-major: the edges of check ``c`` are
    ``chk_ptr[c]:chk_ptr[c+1]`` and ``chk_var[e]`` is the variable on edge
    ``e``.  ``var_edge[var_ptr[v]:var_ptr[v+1]]`` lists the edges of ``v``.
    """

    chk_ptr: np.ndarray
    chk_var: np.ndarray
    var_ptr: np.ndarray
    var_edge: np.ndarray

    @classmethod
    def from_matrix(cls, H: Gf2Matrix | np.ndarray) -> TannerGraph:
        dense = H.to_dense() if isinstance(H, Gf2Matrix) else np.asarray(H, dtype=np.uint8)
        checks, variables = np.nonzero(dense)  # row-major: grouped by check
        m, n = dense.shape
        chk_ptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(np.bincount(checks, minlength=m), out=chk_ptr[1:])
        order = np.argsort(variables, kind="stable")
        var_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(variables, minlength=n), out=var_ptr[1:])
        return cls(chk_ptr, variables.astype(np.int64), var_ptr, order.astype(np.int64))

    @property
    def n(self) -> int:
        return self.var_ptr.shape[0] - 1

    @property
    def m(self) -> int:
        return self.chk_ptr.shape[0] - 1

    @property
    def edge_count(self) -> int:
        return self.chk_var.shape[0]

    def check_neighbors(self, c: int) -> np.ndarray:
        return self.chk_var[self.chk_ptr[c]:self.chk_ptr[c + 1]]

    def variable_neighbors(self, v: int) -> np.ndarray:
        edges = self.var_edge[self.var_ptr[v]:self.var_ptr[v + 1]]
        return np.searchsorted(self.chk_ptr, edges, side="right") - 1


class Outcome(enum.Enum):
    CORRECTED = "corrected"
    DETECTED_FAILURE = "detected_failure"
    UNDETECTED_ERROR = "undetected_error"


@dataclass(frozen=True)
class DecodeResult:
    """Raw decoder output before comparison with the transmitted word."""

    decoded: np.ndarray
    valid: bool  # zero syndrome
    iterations: int = 0


@dataclass(frozen=True)
class DecodeOutcome:
    kind: Outcome
    decoded: BitVector | None
    error_weight: int = 0
    iterations: int = 0


@dataclass(frozen=True)
class MrbConfig:
    order: int = DEFAULT_MRB_ORDER

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("MRB order must be >= 0")


def _as_batch(llr) -> tuple[np.ndarray, bool]:
    arr = np.asarray(llr, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :], True
    return np.ascontiguousarray(arr), False


def bp_decode(graph: TannerGraph, llrs, i_max: int, rule: str, alpha: float = 1.0):
    """Batch flooding BP.  Returns (bits, valid, iterations) arrays."""
    batch, _ = _as_batch(llrs)
    if batch.shape[1] != graph.n:
        raise ValueError(f"expected {graph.n} LLRs per frame, got {batch.shape[1]}")
    if rule not in ("spa", "ms", "nms"):
        raise ValueError(f"unknown check rule {rule!r}")
    if rule == "nms" and not 0.0 < alpha <= 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1], got {alpha}")
    count = batch.shape[0]
    bits = np.zeros((count, graph.n), dtype=np.uint8)
    valid = np.zeros(count, dtype=np.bool_)
    iters = np.zeros(count, dtype=np.int64)
    _kernels.bp_decode_batch(
        graph.chk_ptr, graph.chk_var, graph.var_ptr, graph.var_edge, batch,
        int(i_max), rule == "spa", float(alpha if rule == "nms" else 1.0), bits, valid, iters,
    )
    return bits, valid, iters


def _single(bits, valid, iters) -> DecodeResult:
    return DecodeResult(bits[0], bool(valid[0]), int(iters[0]))


def decode_spa_llr(graph: TannerGraph, llr, i_max: int = DEFAULT_IMAX) -> DecodeResult:
    return _single(*bp_decode(graph, llr, i_max, "spa"))


def decode_min_sum(graph: TannerGraph, llr, i_max: int = DEFAULT_IMAX) -> DecodeResult:
    return _single(*bp_decode(graph, llr, i_max, "ms"))


def decode_nms(graph: TannerGraph, llr, i_max: int = DEFAULT_IMAX, alpha: float = DEFAULT_ALPHA) -> DecodeResult:
    return _single(*bp_decode(graph, llr, i_max, "nms", alpha))


def mrb_decode(code: LinearCode, llrs, order: int = DEFAULT_MRB_ORDER, use_certificate: bool = True):
    """Batch MRB decoding.  Returns (codewords, evaluated-candidate counts).

    With ``use_certificate`` the reprocessing stops as soon as the best
    candidate provably is the maximum-likelihood codeword (needs
    ``code.d_min``); the output is the same as the full order-``order`` search.
    """
    batch, _ = _as_batch(llrs)
    if batch.shape[1] != code.n:
        raise ValueError(f"expected {code.n} LLRs per frame, got {batch.shape[1]}")
    if order < 0:
        raise ValueError("MRB order must be >= 0")
    dmin = int(code.d_min) if (use_certificate and code.d_min) else 0
    bits = np.zeros((batch.shape[0], code.n), dtype=np.uint8)
    evaluated = np.zeros(batch.shape[0], dtype=np.int64)
    _kernels.mrb_decode_batch(code.G_dense, batch, int(order), dmin, bits, evaluated)
    return bits, evaluated


def decode_mrb(code: LinearCode, llr, cfg: MrbConfig = MrbConfig()) -> DecodeResult:
    bits, _ = mrb_decode(code, llr, cfg.order)
    return DecodeResult(bits[0], True, 0)


def classify(raw: DecodeResult, transmitted, H: Gf2Matrix) -> DecodeOutcome:
    tx = transmitted.to_array() if isinstance(transmitted, BitVector) else np.asarray(transmitted, dtype=np.uint8)
    dec = np.asarray(raw.decoded, dtype=np.uint8)
    decoded = BitVector.from_array(dec)
    if np.array_equal(dec, tx):
        return DecodeOutcome(Outcome.CORRECTED, decoded, 0, raw.iterations)
    if H.syndrome(decoded).value == 0:
        weight = int(np.count_nonzero(dec ^ tx))
        return DecodeOutcome(Outcome.UNDETECTED_ERROR, decoded, weight, raw.iterations)
    return DecodeOutcome(Outcome.DETECTED_FAILURE, None, 0, raw.iterations)


class Decoder:
    """Batch decoder bound to one code; one instance per worker."""

    def __init__(self, code: LinearCode, name: str, i_max: int = DEFAULT_IMAX,
                 alpha: float = DEFAULT_ALPHA, mrb_order: int = DEFAULT_MRB_ORDER):
        if name not in DECODERS:
            raise ValueError(f"unknown decoder {name!r}; choose from {DECODERS}")
        if name == "nms" and not 0.0 < alpha <= 1.0:
            raise InvalidAlpha(f"alpha must lie in (0, 1], got {alpha}")
        self.code = code
        self.name = name
        self.i_max = i_max
        self.alpha = alpha
        self.mrb_order = mrb_order
        self.graph = TannerGraph.from_matrix(code.H_dense) if name != "mrb" else None

    @property
    def complete(self) -> bool:
        return self.name == "mrb"

    def decode(self, llrs) -> tuple[np.ndarray, np.ndarray]:
        """Decode a (frames, n) LLR batch; returns (bits, zero-syndrome flags)."""
        if self.name == "mrb":
            bits, _ = mrb_decode(self.code, llrs, self.mrb_order)
            return bits, np.ones(bits.shape[0], dtype=np.bool_)
        bits, valid, _ = bp_decode(self.graph, llrs, self.i_max, self.name, self.alpha)
        return bits, valid
