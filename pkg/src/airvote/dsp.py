"""DFT-s-OFDM baseband modulation chain.

The transmit path is ``x = IDFT_N(map(DFT_M(s)))`` followed by a cyclic
prefix: an M-point DFT precoder spreads the bin vector ``s`` over M
contiguous subcarriers of an N-point IDFT, which makes the time-domain
symbol a circular convolution of the bin values with a Dirichlet sinc
pulse (single-carrier-like). The receive path is the exact adjoint on a
CP-stripped symbol; no frequency-domain equalization is applied.

Both transforms use unitary normalization (1/sqrt(N) each way), so
energy is preserved at every stage and white noise keeps its variance
through demodulation. Plain OFDM (no DFT precoder) is available via
``dft_spread=False`` for the coherent baseline, which places bin values
directly on subcarriers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OfdmConfig:
    """Numerology of one DFT-s-OFDM symbol.

    n_idft: IDFT size N. m_bins: number of occupied bins/subcarriers M.
    cp_len: cyclic-prefix length in samples. first_subcarrier: index of
    the first occupied subcarrier (defaults to band-center placement).
    """

    n_idft: int = 2048
    m_bins: int = 1200
    cp_len: int = 144
    sample_rate_hz: float = 30.72e6
    first_subcarrier: int | None = None

    def __post_init__(self):
        if self.n_idft < 1 or self.m_bins < 1:
            raise ValueError("n_idft and m_bins must be positive")
        if self.m_bins > self.n_idft:
            raise ValueError(f"m_bins={self.m_bins} exceeds n_idft={self.n_idft}")
        if not 0 <= self.cp_len < self.n_idft:
            raise ValueError(f"cp_len={self.cp_len} must lie in [0, n_idft)")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.first_subcarrier is None:
            object.__setattr__(self, "first_subcarrier", (self.n_idft - self.m_bins) // 2)
        if self.first_subcarrier < 0 or self.first_subcarrier + self.m_bins > self.n_idft:
            raise ValueError("occupied band does not fit inside the IDFT grid")

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def bin_spacing_s(self) -> float:
        """Time spacing between adjacent bins of the single-carrier view."""
        return self.n_idft * self.sample_period_s / self.m_bins

    @property
    def symbol_duration_s(self) -> float:
        """Duration of the CP-stripped symbol body."""
        return self.n_idft * self.sample_period_s


def _as_complex_vec(v, name: str = "input") -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return v


def dft(v) -> np.ndarray:
    """Unitary DFT (energy preserving)."""
    return np.fft.fft(_as_complex_vec(v), norm="ortho")


def idft(v) -> np.ndarray:
    """Unitary IDFT (energy preserving)."""
    return np.fft.ifft(_as_complex_vec(v), norm="ortho")


def map_to_grid(bins: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Place M subcarrier values on the contiguous occupied band of the N-grid."""
    bins = _as_complex_vec(bins, "bins")
    if bins.size != cfg.m_bins:
        raise ValueError(f"expected {cfg.m_bins} subcarrier values, got {bins.size}")
    grid = np.zeros(cfg.n_idft, dtype=np.complex128)
    grid[cfg.first_subcarrier:cfg.first_subcarrier + cfg.m_bins] = bins
    return grid


def extract_from_grid(grid: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    grid = _as_complex_vec(grid, "grid")
    if grid.size != cfg.n_idft:
        raise ValueError(f"expected grid of length {cfg.n_idft}, got {grid.size}")
    return grid[cfg.first_subcarrier:cfg.first_subcarrier + cfg.m_bins]


def modulate(s, cfg: OfdmConfig, dft_spread: bool = True) -> np.ndarray:
    """One baseband symbol with CP from a length-M bin vector.

    With dft_spread the bins are DFT-precoded before subcarrier mapping
    (DFT-s-OFDM); without it they are placed on subcarriers directly
    (plain OFDM). Output length is n_idft + cp_len.
    """
    s = _as_complex_vec(s, "bin vector")
    if s.size != cfg.m_bins:
        raise ValueError(f"expected {cfg.m_bins} bins, got {s.size}")
    subcarriers = dft(s) if dft_spread else s
    body = np.fft.ifft(map_to_grid(subcarriers, cfg), norm="ortho")
    if cfg.cp_len == 0:
        return body
    return np.concatenate([body[-cfg.cp_len:], body])


def strip_cp(y, cfg: OfdmConfig) -> np.ndarray:
    """Drop the cyclic prefix of a received symbol."""
    y = _as_complex_vec(y, "received symbol")
    if y.size != cfg.n_idft + cfg.cp_len:
        raise ValueError(f"expected {cfg.n_idft + cfg.cp_len} samples, got {y.size}")
    return y[cfg.cp_len:]


def demodulate(y, cfg: OfdmConfig, dft_spread: bool = True) -> np.ndarray:
    """Recover the length-M bin vector from a CP-stripped symbol body."""
    y = _as_complex_vec(y, "symbol body")
    if y.size != cfg.n_idft:
        raise ValueError(f"expected {cfg.n_idft} samples (CP removed), got {y.size}")
    subcarriers = extract_from_grid(np.fft.fft(y, norm="ortho"), cfg)
    return idft(subcarriers) if dft_spread else subcarriers


def oversampled_envelope(s, cfg: OfdmConfig, oversample: int, dft_spread: bool = True) -> np.ndarray:
    """Magnitude of the symbol body on an `oversample`-times finer time grid.

    Zero-pads the spectrum so the samples interpolate the same
    continuous-time waveform the IDFT grid would produce; scaling keeps
    amplitudes identical to the unitary IDFT at oversample=1.
    """
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    s = _as_complex_vec(s, "bin vector")
    grid = map_to_grid(dft(s) if dft_spread else s, cfg)
    padded = np.zeros(cfg.n_idft * oversample, dtype=np.complex128)
    padded[:cfg.n_idft] = grid
    fine = np.fft.ifft(padded) * (padded.size / np.sqrt(cfg.n_idft))
    return np.abs(fine)


def pmepr_db(s, cfg: OfdmConfig, oversample: int = 4, dft_spread: bool = True) -> float:
    """Peak-to-mean-envelope-power ratio of one symbol, in dB.

    The mean envelope power is the full-occupancy reference M/N (the
    time-average power of a symbol whose bin energy equals M), so
    results are comparable across pulse layouts and schemes. Continuous
    time is approximated by 4x or finer zero-padded interpolation.
    """
    if oversample < 4:
        raise ValueError("oversample must be >= 4 to capture continuous-time peaks")
    env = oversampled_envelope(s, cfg, oversample, dft_spread)
    p_tx = cfg.m_bins / cfg.n_idft
    return float(10.0 * np.log10(np.max(env) ** 2 / p_tx))
