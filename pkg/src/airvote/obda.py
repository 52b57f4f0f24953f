"""Coherent one-bit aggregation baseline (QPSK on OFDM subcarriers).

Each device packs two gradient signs per subcarrier as the real and
imaginary parts of a QPSK symbol and pre-inverts its own channel
(truncated channel inversion: subcarriers whose gain magnitude falls
below a threshold are dropped). The server reads the majority vote off
the signs of the superposed subcarrier values. This needs transmitter
CSI and coherent arrival, which is exactly what the energy-detected
scheme avoids; it is included for accuracy and envelope comparisons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1


@dataclass(frozen=True)
class TciConfig:
    """Truncated channel inversion: drop subcarriers with |h| < threshold,
    scale everything by power_scale."""

    threshold: float = 0.2
    power_scale: float = 1.0

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        if self.power_scale <= 0:
            raise ValueError("power_scale must be positive")


def tci_power_scale(threshold: float) -> float:
    """power_scale making E[|QPSK/h|^2] = 1 per surviving subcarrier under
    unit-power Rayleigh fading, so frames average the same energy budget
    as full QPSK occupancy. E[|1/h|^2; |h| >= tau] = E1(tau^2)."""
    if threshold <= 0:
        return 1.0
    return float(1.0 / math.sqrt(exp1(threshold**2)))


def n_symbols_for(q: int, m_bins: int) -> int:
    """Symbols needed to carry q signs at two signs per subcarrier."""
    return math.ceil(q / (2 * m_bins))


def pack_positions(q: int, m_bins: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(symbol, subcarrier, use_imag) for each vote index, packed in order."""
    i = np.arange(q)
    pair = i // 2
    return pair // m_bins, pair % m_bins, i % 2 == 1


def obda_encode(
    signs: np.ndarray,
    h_freq: np.ndarray | None,
    tci: TciConfig,
    use_tci: bool = True,
    m_bins: int | None = None,
) -> list[np.ndarray]:
    """QPSK bin frames for one device, optionally channel-inverted.

    signs: length-q over {+1,-1}. h_freq: per-subcarrier channel values
    (required when use_tci). Subcarrier j of symbol t carries
    (sign_a + 1j*sign_b)/sqrt(2) * inversion * power_scale, where the
    inversion is 1/h when |h| >= threshold and 0 otherwise.
    """
    signs = np.asarray(signs)
    if not np.all(np.isin(signs, (-1, 1))):
        raise ValueError("signs must be +1 or -1")
    q = signs.size
    if m_bins is None:
        if h_freq is None:
            raise ValueError("need m_bins when no h_freq is given")
        m_bins = np.asarray(h_freq).size
    if use_tci:
        if h_freq is None:
            raise ValueError("channel inversion requires h_freq")
        h_freq = np.asarray(h_freq, dtype=np.complex128).reshape(-1)
        if h_freq.size != m_bins:
            raise ValueError(f"h_freq must have {m_bins} entries")

    t_idx, j_idx, is_imag = pack_positions(q, m_bins)
    n_symbols = n_symbols_for(q, m_bins)
    frames = [np.zeros(m_bins, dtype=np.complex128) for _ in range(n_symbols)]
    values = signs / math.sqrt(2.0)
    for t, j, imag, v in zip(t_idx, j_idx, is_imag, values):
        frames[t][j] += 1j * v if imag else v

    for t, frame in enumerate(frames):
        if use_tci:
            gain = np.zeros(m_bins, dtype=np.complex128)
            keep = np.abs(h_freq) >= tci.threshold
            gain[keep] = 1.0 / h_freq[keep]
            frames[t] = frame * gain * tci.power_scale
        else:
            frames[t] = frame * tci.power_scale
    return frames


def obda_detect(frames, q: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Signs of the real/imaginary parts of the superposed subcarriers.

    Zero components resolve to +/-1 uniformly at random.
    """
    m_bins = len(frames[0])
    t_idx, j_idx, is_imag = pack_positions(q, m_bins)
    votes = np.empty(q, dtype=np.int8)
    for i in range(q):
        value = frames[t_idx[i]][j_idx[i]]
        component = value.imag if is_imag[i] else value.real
        if component > 0:
            votes[i] = 1
        elif component < 0:
            votes[i] = -1
        else:
            if rng is None:
                raise ValueError("zero component encountered but no rng supplied")
            votes[i] = 1 if rng.integers(0, 2) else -1
    return votes
