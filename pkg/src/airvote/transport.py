"""Aggregation transports: how K sign vectors become one majority vote.

IdealTransport exchanges signs losslessly. PpmTransport runs the full
radio chain: per-device PPM encoding with fresh QPSK dithers, DFT-s-OFDM
modulation, a block-fading multipath channel with a per-device timing
offset, superposition with receiver noise, and non-coherent energy
detection. ObdaTransport is the coherent QPSK baseline with optional
truncated channel inversion from genie transmitter CSI (the timing
offset is never compensated: the device cannot know it).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .channel import PowerDelayProfile, apply_channel, draw_channel, draw_timing_offset, superpose
from .detector import detect_mv
from .dsp import OfdmConfig, demodulate, modulate, strip_cp
from .obda import TciConfig, obda_detect, obda_encode
from .ppm import PpmLayout, VoteAssignment, draw_dithers, encode_votes
from .rng import substream
from .training import ideal_mv


def _map_over_eds(pool, fn, k: int) -> list:
    if pool is not None:
        return list(pool.map(fn, range(k)))
    return [fn(ed) for ed in range(k)]


class IdealTransport:
    """Lossless sign exchange; reproduces plain majority-vote training."""

    def aggregate(self, signs: np.ndarray, master_seed: int, round_idx: int, pool=None):
        mv = ideal_mv(signs, substream(master_seed, rng_mod.MV_TIE, round_idx))
        return mv, {}


@dataclass
class PpmTransport:
    ofdm: OfdmConfig
    layout: PpmLayout
    assignment: VoteAssignment
    profile: PowerDelayProfile
    t_sync_s: float
    sigma_n_sq: float

    def draw_realization(self, master_seed: int, round_idx: int, ed: int):
        """Block-fading draw for one device and round (overridable in tests)."""
        offset = draw_timing_offset(
            substream(master_seed, rng_mod.SYNC, round_idx, ed),
            self.t_sync_s,
            self.ofdm.sample_rate_hz,
        )
        return draw_channel(
            self.profile,
            substream(master_seed, rng_mod.CHANNEL, round_idx, ed),
            self.ofdm.sample_rate_hz,
            timing_offset=offset,
            cp_len=self.ofdm.cp_len,
        )

    def aggregate(self, signs: np.ndarray, master_seed: int, round_idx: int, pool=None):
        k, q = signs.shape
        if q != self.assignment.q:
            raise ValueError(f"transport carries {self.assignment.q} votes, got {q}")

        def transmit(ed: int) -> list[np.ndarray]:
            dithers = draw_dithers(substream(master_seed, rng_mod.DITHER, round_idx, ed), q)
            frames = encode_votes(signs[ed], self.assignment, self.layout, dithers)
            chn = self.draw_realization(master_seed, round_idx, ed)
            return [apply_channel(modulate(f, self.ofdm), chn) for f in frames]

        per_ed = _map_over_eds(pool, transmit, k)

        received = []
        for m in range(self.layout.n_symbols):
            y = superpose(
                [per_ed[ed][m] for ed in range(k)],
                self.sigma_n_sq,
                substream(master_seed, rng_mod.NOISE, round_idx, m),
            )
            received.append(demodulate(strip_cp(y, self.ofdm), self.ofdm))

        mv = detect_mv(received, self.assignment, self.layout,
                       substream(master_seed, rng_mod.DETECT, round_idx))
        return mv, self._energy_diag(received)

    def _energy_diag(self, received: list[np.ndarray]) -> dict:
        """Mean detected slot energies over all votes (diagnostics only)."""
        width = self.layout.slot_width
        e_plus = e_minus = 0.0
        for (tp, fp), (tm, fm) in zip(self.assignment.plus_pos, self.assignment.minus_pos):
            e_plus += np.sum(np.abs(received[tp][fp * width:(fp + 1) * width]) ** 2)
            e_minus += np.sum(np.abs(received[tm][fm * width:(fm + 1) * width]) ** 2)
        return {
            "e_plus_mean": float(e_plus / self.assignment.q),
            "e_minus_mean": float(e_minus / self.assignment.q),
        }


@dataclass
class ObdaTransport:
    ofdm: OfdmConfig
    profile: PowerDelayProfile
    t_sync_s: float
    sigma_n_sq: float
    tci: TciConfig
    use_tci: bool = True

    def draw_realization(self, master_seed: int, round_idx: int, ed: int):
        offset = draw_timing_offset(
            substream(master_seed, rng_mod.SYNC, round_idx, ed),
            self.t_sync_s,
            self.ofdm.sample_rate_hz,
        )
        return draw_channel(
            self.profile,
            substream(master_seed, rng_mod.CHANNEL, round_idx, ed),
            self.ofdm.sample_rate_hz,
            timing_offset=offset,
            cp_len=self.ofdm.cp_len,
        )

    def aggregate(self, signs: np.ndarray, master_seed: int, round_idx: int, pool=None):
        k, q = signs.shape

        def transmit(ed: int) -> list[np.ndarray]:
            chn = self.draw_realization(master_seed, round_idx, ed)
            h_genie = chn.frequency_response(self.ofdm, include_offset=False) if self.use_tci else None
            frames = obda_encode(signs[ed], h_genie, self.tci, self.use_tci, m_bins=self.ofdm.m_bins)
            return [apply_channel(modulate(f, self.ofdm, dft_spread=False), chn) for f in frames]

        per_ed = _map_over_eds(pool, transmit, k)

        received = []
        for m in range(len(per_ed[0])):
            y = superpose(
                [per_ed[ed][m] for ed in range(k)],
                self.sigma_n_sq,
                substream(master_seed, rng_mod.NOISE, round_idx, m),
            )
            received.append(demodulate(strip_cp(y, self.ofdm), self.ofdm, dft_spread=False))

        mv = obda_detect(received, q, substream(master_seed, rng_mod.DETECT, round_idx))
        return mv, {}
