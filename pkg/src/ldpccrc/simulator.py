"""Monte Carlo harness: random frames, encoding, BPSK/AWGN, decoding and
classification, with error-count stopping and Wilson intervals.

Frames are simulated in fixed-size chunks.  Chunk ``c`` at SNR index ``s``
draws everything (messages, then noise) from its own generator keyed on
``(seed, s, c)``, and chunks are merged strictly in index order, with the
stopping rule applied frame by frame inside the last chunk.  The result is
therefore the same for any number of workers.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import binomtest

from .channel import ChannelParams, chunk_rng, transmit
from .codes import CrcCode, FrameLayout, crc_remainder, load_code, stuffing
from .decoders import DEFAULT_ALPHA, DEFAULT_IMAX, DEFAULT_MRB_ORDER, Decoder
from .detection import PerWeightLdpcProfile
from .gf2 import BitVector, poly_mod_batch

THREADS_ENV = "LDPCCRC_THREADS"


def default_workers() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    code: str = "ccsds-128-64"
    decoder: str = "spa"
    i_max: int = DEFAULT_IMAX
    alpha: float = DEFAULT_ALPHA
    mrb_order: int = DEFAULT_MRB_ORDER
    snrs: tuple[float, ...] = (3.0,)
    min_errors: int | None = 100
    max_frames: int | None = None
    stop_on: str = "errors"  # or "undetected"
    seed: int = 0
    crc: str | None = None  # hex generator mask
    payload_bits: int | None = None  # end-to-end only; default k - P (one block)
    fill: str = "alternating"
    workers: int = 1
    all_zero: bool = False
    noiseless: bool = False
    chunk_size: int = 1000

    def __post_init__(self):
        if not (self.min_errors or 0) >= 1 and not (self.max_frames or 0) >= 1:
            raise ValueError("need min_errors >= 1 or max_frames >= 1")
        if self.stop_on not in ("errors", "undetected"):
            raise ValueError("stop_on must be 'errors' or 'undetected'")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be >= 1")
        object.__setattr__(self, "snrs", tuple(float(s) for s in self.snrs))

    @property
    def crc_code(self) -> CrcCode | None:
        return CrcCode.from_mask(self.crc) if self.crc else None

    def config_hash(self) -> str:
        # worker count does not change results, so it is left out
        d = dataclasses.asdict(self)
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **kw) -> RunConfig:
        return dataclasses.replace(self, **kw)


def wilson(successes: int, trials: int) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    ci = binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SimRecord:
    snr_db: float
    frames: int
    Q: int
    Q_u: int
    hist: dict[int, int] = field(default_factory=dict)
    wall_time: float = 0.0
    seed: int = 0
    config_hash: str = ""
    # end-to-end runs: LDPC block level statistics behind the frame counts
    blocks: int = 0
    block_Q: int = 0
    block_Q_u: int = 0
    block_hist: dict[int, int] = field(default_factory=dict)

    @property
    def cer(self) -> float:
        return self.Q / self.frames if self.frames else 0.0

    @property
    def ucer(self) -> float:
        # (Q_u / Q) * (Q / frames), written so that it is exact when Q = 0
        return self.Q_u / self.frames if self.frames else 0.0

    @property
    def cer_ci(self) -> tuple[float, float]:
        return wilson(self.Q, self.frames)

    @property
    def ucer_ci(self) -> tuple[float, float]:
        return wilson(self.Q_u, self.frames)

    def mean_error_weight(self) -> float:
        total = sum(self.hist.values())
        return sum(w * c for w, c in self.hist.items()) / total if total else float("nan")

    def ldpc_profile(self) -> PerWeightLdpcProfile:
        """Per-weight decoder-output undetected errors (block level for end-to-end runs)."""
        if self.blocks:
            return PerWeightLdpcProfile(self.snr_db, self.blocks, dict(self.block_hist))
        return PerWeightLdpcProfile(self.snr_db, self.frames, dict(self.hist))


# -- per-chunk work ---------------------------------------------------------------


@lru_cache(maxsize=8)
def _decoder(code_ref: str, name: str, i_max: int, alpha: float, order: int) -> Decoder:
    return Decoder(load_code(code_ref), name, i_max=i_max, alpha=alpha, mrb_order=order)


def _channel_decode(cfg: RunConfig, dec: Decoder, codewords: np.ndarray, snr_db: float, rng):
    code = dec.code
    llr = transmit(codewords, ChannelParams(snr_db, code.rate), rng, noiseless=cfg.noiseless)
    bits, valid = dec.decode(llr)
    err_pattern = bits ^ codewords
    wrong = err_pattern.any(axis=1)
    weights = err_pattern.sum(axis=1, dtype=np.int64)
    return bits, wrong, wrong & valid, weights


def _frames_in_chunk(cfg: RunConfig) -> int:
    return min(cfg.chunk_size, cfg.max_frames) if cfg.max_frames else cfg.chunk_size


def _ldpc_chunk(cfg: RunConfig, snr_db: float, snr_index: int, chunk_index: int) -> dict:
    dec = _decoder(cfg.code, cfg.decoder, cfg.i_max, cfg.alpha, cfg.mrb_order)
    code = dec.code
    count = _frames_in_chunk(cfg)
    rng = chunk_rng(cfg.seed, snr_index, chunk_index)
    if cfg.all_zero:
        msgs = np.zeros((count, code.k), dtype=np.uint8)
    else:
        msgs = rng.integers(0, 2, size=(count, code.k), dtype=np.uint8)
    _, wrong, undetected, weights = _channel_decode(cfg, dec, code.encode(msgs), snr_db, rng)
    return {"err": wrong, "und": undetected, "w": weights}


def crc_parity_matrix(payload_bits: int, crc: CrcCode) -> np.ndarray:
    """Rows: CRC bits produced by each unit payload (the CRC map is linear)."""
    rows = [crc_remainder(BitVector(1 << i, payload_bits), crc).to_array() for i in range(payload_bits)]
    return np.array(rows, dtype=np.uint8).reshape(payload_bits, crc.P)


@lru_cache(maxsize=8)
def _frame_tables(payload_bits: int, k: int, crc_mask: str, fill: str):
    crc = CrcCode.from_mask(crc_mask)
    layout = FrameLayout.for_payload(payload_bits, k, crc.P, check_bounds=False)
    return crc, layout, crc_parity_matrix(payload_bits, crc), stuffing(layout.stuff_len, fill).to_array()


def _e2e_chunk(cfg: RunConfig, snr_db: float, snr_index: int, chunk_index: int) -> dict:
    dec = _decoder(cfg.code, cfg.decoder, cfg.i_max, cfg.alpha, cfg.mrb_order)
    code = dec.code
    payload_bits = cfg.payload_bits or code.k - cfg.crc_code.P
    crc, layout, C, stuff = _frame_tables(payload_bits, code.k, cfg.crc, cfg.fill)
    count = _frames_in_chunk(cfg)
    rng = chunk_rng(cfg.seed, snr_index, chunk_index)
    if cfg.all_zero:
        payload = np.zeros((count, payload_bits), dtype=np.uint8)
    else:
        payload = rng.integers(0, 2, size=(count, payload_bits), dtype=np.uint8)
    parity = ((payload.astype(np.float32) @ C.astype(np.float32)).astype(np.int64) & 1).astype(np.uint8)
    data = np.hstack([payload, parity, np.broadcast_to(stuff, (count, stuff.size))])
    msgs = data.reshape(count * layout.N, code.k)
    bits, wrong, undetected, weights = _channel_decode(cfg, dec, code.encode(msgs), snr_db, rng)
    rx = code.info_part(bits).reshape(count, layout.N * code.k)[:, : layout.S]
    frame_wrong = (rx != data[:, : layout.S]).any(axis=1)
    blocks_valid = (~wrong | undetected).reshape(count, layout.N).all(axis=1)
    crc_ok = poly_mod_batch(np.packbits(rx, axis=1, bitorder="little"), crc.g) == 0
    return {
        "err": frame_wrong,
        "und": frame_wrong & blocks_valid & crc_ok,
        "w": weights.reshape(count, layout.N).sum(axis=1),
        "b_err": wrong.reshape(count, layout.N),
        "b_und": undetected.reshape(count, layout.N),
        "b_w": weights.reshape(count, layout.N),
    }


class _Accumulator:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.frames = self.Q = self.Q_u = 0
        self.hist: dict[int, int] = {}
        self.blocks = self.block_Q = self.block_Q_u = 0
        self.block_hist: dict[int, int] = {}

    @property
    def done(self) -> bool:
        cfg = self.cfg
        counted = self.Q_u if cfg.stop_on == "undetected" else self.Q
        if cfg.min_errors and counted >= cfg.min_errors:
            return True
        return bool(cfg.max_frames and self.frames >= cfg.max_frames)

    def add(self, part: dict) -> None:
        cfg = self.cfg
        take = part["err"].shape[0]
        if cfg.max_frames:
            take = min(take, cfg.max_frames - self.frames)
        if cfg.min_errors:
            key = "und" if cfg.stop_on == "undetected" else "err"
            counted = self.Q_u if cfg.stop_on == "undetected" else self.Q
            cum = np.cumsum(part[key][:take])
            hit = np.flatnonzero(counted + cum >= cfg.min_errors)
            if hit.size:
                take = int(hit[0]) + 1
        err, und = part["err"][:take], part["und"][:take]
        self.frames += take
        self.Q += int(err.sum())
        self.Q_u += int(und.sum())
        _bump(self.hist, part["w"][:take][und])
        if "b_err" in part:
            self.blocks += part["b_err"][:take].size
            self.block_Q += int(part["b_err"][:take].sum())
            b_und = part["b_und"][:take]
            self.block_Q_u += int(b_und.sum())
            _bump(self.block_hist, part["b_w"][:take][b_und])


def _bump(hist: dict[int, int], weights: np.ndarray) -> None:
    for w, c in zip(*np.unique(weights, return_counts=True)):
        hist[int(w)] = hist.get(int(w), 0) + int(c)


def _simulate(cfg: RunConfig, snr_db: float, snr_index: int, end_to_end: bool) -> SimRecord:
    work = _e2e_chunk if end_to_end else _ldpc_chunk
    acc = _Accumulator(cfg)
    start = time.perf_counter()
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        chunk = 0
        while not acc.done:
            ids = range(chunk, chunk + cfg.workers)
            if pool is None:
                parts = (work(cfg, snr_db, snr_index, c) for c in ids)
            else:
                parts = pool.map(work, *zip(*[(cfg, snr_db, snr_index, c) for c in ids]))
            for part in parts:
                acc.add(part)
                if acc.done:
                    break
            chunk += cfg.workers
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    rec = SimRecord(
        snr_db=snr_db, frames=acc.frames, Q=acc.Q, Q_u=acc.Q_u, hist=dict(sorted(acc.hist.items())),
        wall_time=time.perf_counter() - start, seed=cfg.seed, config_hash=cfg.config_hash(),
        blocks=acc.blocks, block_Q=acc.block_Q, block_Q_u=acc.block_Q_u,
        block_hist=dict(sorted(acc.block_hist.items())),
    )
    if cfg.decoder == "mrb" and not end_to_end and rec.Q_u != rec.Q:
        raise AssertionError("complete decoder produced a detected failure")
    return rec


def run_point(config: RunConfig, snr_db: float, snr_index: int = 0) -> SimRecord:
    """Simulate one SNR point until the stopping rule fires."""
    return _simulate(config, float(snr_db), snr_index, end_to_end=False)


def run_sweep(config: RunConfig) -> list[SimRecord]:
    if not config.snrs:
        raise ValueError("empty SNR list")
    return [run_point(config, s, i) for i, s in enumerate(config.snrs)]


def end_to_end_ucer(config: RunConfig, snr_db: float | None = None, snr_index: int = 0) -> SimRecord:
    """Direct simulation of LDPC + CRC transfer frames.

    A frame counts as an undetected error when its payload or CRC is wrong,
    every LDPC block decoded to a valid codeword, and the CRC check passes on
    the reassembled data.  ``Q``/``Q_u`` are frame counts; the ``block_*``
    fields hold the LDPC-level statistics of the same run.
    """
    if config.crc is None:
        raise ValueError("end-to-end simulation needs a CRC")
    snr = config.snrs[snr_index] if snr_db is None else float(snr_db)
    return _simulate(config, snr, snr_index, end_to_end=True)


def end_to_end_sweep(config: RunConfig) -> list[SimRecord]:
    return [end_to_end_ucer(config, s, i) for i, s in enumerate(config.snrs)]


# -- output -------------------------------------------------------------------------

BASE_COLUMNS = ["snr_db", "frames", "Q", "Q_u", "cer", "cer_ci_lo", "cer_ci_hi", "ucer", "ucer_ci_lo", "ucer_ci_hi"]


def records_to_rows(records: list[SimRecord]) -> tuple[list[str], list[list]]:
    weights = sorted({w for r in records for w in r.hist})
    header = BASE_COLUMNS + [f"hist_{w}" for w in weights] + ["wall_time_s", "seed", "config_hash"]
    rows = []
    for r in records:
        lo, hi = r.cer_ci
        ulo, uhi = r.ucer_ci
        rows.append(
            [r.snr_db, r.frames, r.Q, r.Q_u, repr(r.cer), repr(lo), repr(hi), repr(r.ucer), repr(ulo), repr(uhi)]
            + [r.hist.get(w, 0) for w in weights]
            + [f"{r.wall_time:.3f}", r.seed, r.config_hash]
        )
    return header, rows


def records_to_csv(records: list[SimRecord]) -> str:
    header, rows = records_to_rows(records)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def records_from_csv(text: str) -> list[SimRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        hist = {int(k[5:]): int(v) for k, v in row.items() if k.startswith("hist_") and int(v)}
        out.append(SimRecord(
            snr_db=float(row["snr_db"]), frames=int(row["frames"]), Q=int(row["Q"]), Q_u=int(row["Q_u"]),
            hist=hist, wall_time=float(row.get("wall_time_s") or 0.0), seed=int(row.get("seed") or 0),
            config_hash=row.get("config_hash", ""),
        ))
    return out


def records_to_json(records: list[SimRecord]) -> str:
    out = []
    for r in records:
        d = dataclasses.asdict(r)
        d.update(cer=r.cer, ucer=r.ucer, cer_ci=list(r.cer_ci), ucer_ci=list(r.ucer_ci))
        d["hist"] = {str(w): c for w, c in r.hist.items()}
        d["block_hist"] = {str(w): c for w, c in r.block_hist.items()}
        out.append(d)
    return json.dumps(out, indent=2)


def ldpc_profiles_csv(records: list[SimRecord]) -> str:
    return "".join(
        text if i == 0 else text.split("\n", 1)[1]
        for i, text in enumerate(r.ldpc_profile().to_csv() for r in records)
    )
