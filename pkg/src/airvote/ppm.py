"""Pulse-position encoding of gradient-sign votes onto DFT-s-OFDM bins.

Each vote owns two pulse positions, one for +1 and one for -1; the
transmitter puts a short pulse (M_pulse active bins followed by M_gap
guard bins) at the position matching its local gradient sign. Guard
bins absorb delay spread and timing error, so the receiver can detect
votes non-coherently from windowed energies. Each pulse is multiplied
by a per-device random QPSK dither so that superposed energies stay
randomized even in a static channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

QPSK_POINTS = np.exp(1j * np.pi * (2 * np.arange(4) + 1) / 4)


class ConfigurationError(ValueError):
    """Raised when parameters are individually valid but mutually inconsistent."""


@dataclass(frozen=True)
class PpmLayout:
    """Slot geometry of one vote-carrying symbol.

    A slot is m_pulse active bins plus m_gap guard bins; two slots per
    vote give m_vote votes per symbol and n_symbols symbols for q votes.
    e_s normalizes the pulse so a fully occupied symbol has bin energy M.
    """

    m_bins: int
    m_pulse: int
    m_gap: int
    m_vote: int
    n_symbols: int
    e_s: float

    @property
    def slot_width(self) -> int:
        return self.m_pulse + self.m_gap


def compute_layout(
    m_bins: int,
    m_pulse: int,
    m_gap: int,
    q: int,
    *,
    t_chn_s: float | None = None,
    t_sync_s: float | None = None,
    bin_spacing_s: float | None = None,
) -> PpmLayout:
    """Derive the pulse layout for q votes on M bins.

    When the channel/sync timing parameters are supplied, the guard
    condition m_gap >= ceil((t_chn + t_sync) / bin_spacing) is enforced
    and a violation reports the minimum admissible m_gap.
    """
    if m_pulse < 1:
        raise ValueError("m_pulse must be >= 1")
    if m_gap < 0:
        raise ValueError("m_gap must be >= 0")
    if q < 1:
        raise ValueError("q must be >= 1")
    if 2 * (m_pulse + m_gap) > m_bins:
        raise ValueError(f"two slots of width {m_pulse + m_gap} do not fit in {m_bins} bins")
    if t_chn_s is not None or t_sync_s is not None:
        if bin_spacing_s is None or not (t_chn_s is not None and t_sync_s is not None):
            raise ValueError("guard check needs t_chn_s, t_sync_s and bin_spacing_s together")
        min_gap = math.ceil((t_chn_s + t_sync_s) / bin_spacing_s)
        if m_gap < min_gap:
            raise ConfigurationError(
                f"m_gap={m_gap} cannot absorb delay spread plus sync error; minimum m_gap is {min_gap}"
            )
    m_vote = m_bins // (2 * (m_pulse + m_gap))
    return PpmLayout(
        m_bins=m_bins,
        m_pulse=m_pulse,
        m_gap=m_gap,
        m_vote=m_vote,
        n_symbols=math.ceil(q / m_vote),
        e_s=2.0 * (m_pulse + m_gap) / m_pulse,
    )


@dataclass(frozen=True)
class VoteAssignment:
    """Vote index -> (symbol, slot) pulse positions for the +1 and -1 choices.

    plus_pos[i] = (t+, f+), minus_pos[i] = (t-, f-); all 2q pairs are
    distinct, with slots counted in units of (m_pulse + m_gap) bins.
    """

    plus_pos: np.ndarray   # shape (q, 2), columns (symbol, slot)
    minus_pos: np.ndarray  # shape (q, 2)

    @property
    def q(self) -> int:
        return self.plus_pos.shape[0]


def default_vote_map(layout: PpmLayout, q: int) -> VoteAssignment:
    """Adjacent-slot assignment: vote i = t*m_vote + j uses slots (2j, 2j+1)
    of symbol t, minus vote at the even slot and plus at the odd one."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if math.ceil(q / layout.m_vote) > layout.n_symbols:
        raise ValueError(f"layout provides {layout.n_symbols * layout.m_vote} votes, need {q}")
    i = np.arange(q)
    t = i // layout.m_vote
    j = i % layout.m_vote
    minus = np.stack([t, 2 * j], axis=1)
    plus = np.stack([t, 2 * j + 1], axis=1)
    return VoteAssignment(plus_pos=plus, minus_pos=minus)


def pulse_weights(layout: PpmLayout) -> np.ndarray:
    """Alternating-sign bin weights sqrt(E_s) * [1, -1, 1, ...].

    The sign alternation concentrates the pulse into a rectangular-like
    time envelope; ||p||^2 = 2 * (m_pulse + m_gap).
    """
    signs = (-1.0) ** np.arange(layout.m_pulse)
    return np.sqrt(layout.e_s) * signs.astype(np.complex128)


def draw_dithers(rng: np.random.Generator, q: int) -> np.ndarray:
    """q unit-modulus QPSK dither symbols, uniform over the constellation."""
    return QPSK_POINTS[rng.integers(0, 4, size=q)]


def encode_votes(
    signs: np.ndarray,
    assignment: VoteAssignment,
    layout: PpmLayout,
    dithers: np.ndarray,
) -> list[np.ndarray]:
    """Bin vectors for all symbols of one device's round.

    Vote i places pulse_weights * dithers[i] at its +1 position when
    signs[i] == +1, else at its -1 position; every other bin is zero.
    """
    signs = np.asarray(signs)
    if signs.shape != (assignment.q,):
        raise ValueError(f"expected {assignment.q} signs, got shape {signs.shape}")
    if not np.all(np.isin(signs, (-1, 1))):
        raise ValueError("signs must be +1 or -1")
    dithers = np.asarray(dithers, dtype=np.complex128)
    if dithers.shape != (assignment.q,):
        raise ValueError(f"expected {assignment.q} dithers, got shape {dithers.shape}")

    pulse = pulse_weights(layout)
    frames = [np.zeros(layout.m_bins, dtype=np.complex128) for _ in range(layout.n_symbols)]
    pos = np.where(signs[:, None] == 1, assignment.plus_pos, assignment.minus_pos)
    for i in range(assignment.q):
        t, f = pos[i]
        start = f * layout.slot_width
        frames[t][start:start + layout.m_pulse] = pulse * dithers[i]
    return frames
