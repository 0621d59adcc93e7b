"""BPSK over AWGN with channel LLRs (positive LLR means bit 0 is more likely)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import BitVector

# Bump when the noise generation recipe changes; recorded in run metadata.
RNG_SCHEME = "numpy-PCG64/SeedSequence(master,snr_index,chunk)/ziggurat-normal v1"


@dataclass(frozen=True)
class ChannelParams:
    eb_n0_db: float
    rate: float

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValueError("rate must lie in (0, 1]")

    @property
    def sigma2(self) -> float:
        """Noise variance per real dimension for unit-energy symbols."""
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.eb_n0_db / 10.0))

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def modulate(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def transmit(codeword, params: ChannelParams, rng: np.random.Generator | None = None,
             noiseless: bool = False) -> np.ndarray:
    """Send codeword(s) over the channel and return the channel LLRs.

    Accepts a BitVector, a 1-D bit array or a (frames, n) batch.
    """
    bits = codeword.to_array() if isinstance(codeword, BitVector) else np.asarray(codeword)
    y = modulate(bits)
    if not noiseless:
        if rng is None:
            raise ValueError("an RNG is required unless noiseless=True")
        y = y + params.sigma * rng.standard_normal(y.shape)
    return 2.0 * y / params.sigma2


def hard_decision(llr) -> np.ndarray:
    return (np.asarray(llr) < 0).astype(np.uint8)


def chunk_rng(master_seed: int, snr_index: int, chunk_index: int) -> np.random.Generator:
    """Independent generator for one chunk of frames.

    Keyed on (master_seed, snr_index, chunk_index) so results do not depend on
    how chunks are scheduled over workers.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, snr_index, chunk_index])))
