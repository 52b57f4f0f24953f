"""Multipath fading, timing offsets, superposition and receiver noise.

Channels are tapped delay lines drawn from a power-delay profile:
delays are rounded to the sample grid, each tap is an independent
circularly-symmetric complex Gaussian with the profile's (normalized)
power, and an integer timing offset models imperfect uplink sync.
Block fading is assumed: a realization stays fixed for all symbols of
one communication round and is redrawn for the next.

As long as the last tap plus the timing offset lands inside the cyclic
prefix, the linear convolution seen by the receiver's FFT window equals
a circular one, so each subcarrier is scaled by the tap DFT with the
offset appearing as a pure phase ramp.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import OfdmConfig
from .ppm import ConfigurationError


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap delays (ns) and mean powers (dB), normalized to unit total power."""

    delays_ns: np.ndarray
    powers_db: np.ndarray

    def __post_init__(self):
        delays = np.asarray(self.delays_ns, dtype=float).reshape(-1)
        powers = np.asarray(self.powers_db, dtype=float).reshape(-1)
        if delays.size == 0 or delays.size != powers.size:
            raise ValueError("delays_ns and powers_db must be non-empty and equal length")
        if np.any(delays < 0):
            raise ValueError("tap delays must be non-negative")
        if np.any(np.diff(delays) <= 0):
            raise ValueError("tap delays must be strictly increasing")
        object.__setattr__(self, "delays_ns", delays)
        object.__setattr__(self, "powers_db", powers)

    @property
    def linear_powers(self) -> np.ndarray:
        """Per-tap mean powers normalized to sum to one."""
        p = 10.0 ** (self.powers_db / 10.0)
        return p / p.sum()

    def rms_delay_spread_ns(self) -> float:
        p = self.linear_powers
        mean = float(np.dot(p, self.delays_ns))
        return float(np.sqrt(np.dot(p, self.delays_ns**2) - mean**2))

    def max_excess_delay_s(self) -> float:
        """Rule-of-thumb maximum excess delay: four RMS delay spreads."""
        return 4.0 * self.rms_delay_spread_ns() * 1e-9

    def tap_variances(self, sample_rate_hz: float) -> np.ndarray:
        """Per-sample-position tap variances after rounding delays to the grid.

        Taps that round to the same position have their powers summed.
        """
        positions = np.rint(self.delays_ns * 1e-9 * sample_rate_hz).astype(int)
        var = np.zeros(positions.max() + 1)
        np.add.at(var, positions, self.linear_powers)
        return var


def epa_profile() -> PowerDelayProfile:
    """ITU/3GPP Extended Pedestrian A profile (RMS delay spread ~43.1 ns)."""
    return PowerDelayProfile(
        delays_ns=np.array([0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0]),
        powers_db=np.array([0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8]),
    )


def flat_profile() -> PowerDelayProfile:
    """Single unit-power tap at zero delay (flat Rayleigh fading)."""
    return PowerDelayProfile(delays_ns=np.array([0.0]), powers_db=np.array([0.0]))


@dataclass(frozen=True)
class ChannelRealization:
    """One device's channel for one round: dense taps plus a timing offset.

    taps[d] is the coefficient at delay d samples; timing_offset shifts
    the whole response right by that many samples.
    """

    taps: np.ndarray
    timing_offset: int = 0

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128).reshape(-1)
        if taps.size == 0:
            raise ValueError("taps must be non-empty")
        if self.timing_offset < 0:
            raise ValueError("timing_offset must be non-negative")
        object.__setattr__(self, "taps", taps)

    @property
    def last_path_sample(self) -> int:
        return self.taps.size - 1 + self.timing_offset

    def frequency_response(self, cfg: OfdmConfig, include_offset: bool = True) -> np.ndarray:
        """Response on the occupied subcarriers.

        The timing offset appears as a phase ramp; exclude it to model a
        transmitter that knows its taps but not its sync error.
        """
        h = np.fft.fft(self.taps, cfg.n_idft)
        n = np.arange(cfg.first_subcarrier, cfg.first_subcarrier + cfg.m_bins)
        h = h[n]
        if include_offset and self.timing_offset:
            h = h * np.exp(-2j * np.pi * n * self.timing_offset / cfg.n_idft)
        return h


def check_cp_budget(realization: ChannelRealization, cp_len: int) -> None:
    """All arrivals must land inside the cyclic prefix."""
    if realization.last_path_sample >= cp_len:
        raise ConfigurationError(
            f"last path at sample {realization.last_path_sample} does not fit in cp_len={cp_len}"
        )


def draw_channel(
    profile: PowerDelayProfile,
    rng: np.random.Generator,
    sample_rate_hz: float,
    timing_offset: int = 0,
    cp_len: int | None = None,
) -> ChannelRealization:
    """Rayleigh realization of the profile on the sample grid.

    E[sum |taps|^2] = 1. When cp_len is given, realizations that cannot
    fit inside the prefix are rejected up front.
    """
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    var = profile.tap_variances(sample_rate_hz)
    scale = np.sqrt(var / 2.0)
    taps = scale * (rng.standard_normal(var.size) + 1j * rng.standard_normal(var.size))
    realization = ChannelRealization(taps=taps, timing_offset=timing_offset)
    if cp_len is not None:
        check_cp_budget(realization, cp_len)
    return realization


def draw_timing_offset(rng: np.random.Generator, t_sync_s: float, sample_rate_hz: float) -> int:
    """Uniform integer offset over {0, ..., round(t_sync * fs)}."""
    if t_sync_s < 0:
        raise ValueError("t_sync_s must be non-negative")
    max_offset = int(np.rint(t_sync_s * sample_rate_hz))
    return int(rng.integers(0, max_offset + 1))


def apply_channel(x: np.ndarray, realization: ChannelRealization) -> np.ndarray:
    """Convolve with the taps and delay by the timing offset.

    Output is truncated to the input length; the spill-over belongs to
    the next symbol's CP in the per-symbol model, which is safe while
    the CP exceeds the channel memory plus sync error.
    """
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    y = np.convolve(x, realization.taps)
    if realization.timing_offset:
        y = np.concatenate([np.zeros(realization.timing_offset, dtype=np.complex128), y])
    return y[: x.size]


def superpose(
    signals: list[np.ndarray] | np.ndarray,
    sigma_n_sq: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sum of simultaneously arriving signals plus complex AWGN.

    sigma_n_sq is the noise variance per complex sample; no noise is
    drawn when it is zero.
    """
    if sigma_n_sq < 0:
        raise ValueError("sigma_n_sq must be non-negative")
    arrays = [np.asarray(s, dtype=np.complex128).reshape(-1) for s in signals]
    if not arrays:
        raise ValueError("need at least one signal")
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError("signals must have equal lengths")
    total = np.sum(arrays, axis=0)
    if sigma_n_sq > 0:
        noise = np.sqrt(sigma_n_sq / 2.0) * (
            rng.standard_normal(length) + 1j * rng.standard_normal(length)
        )
        total = total + noise
    return total
