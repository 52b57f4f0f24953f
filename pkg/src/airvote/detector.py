"""Non-coherent majority-vote detection from superposed PPM symbols.

For each vote the receiver compares the energies of the two candidate
pulse positions. Each energy window spans the pulse bins plus the guard
bins, since multipath and timing error smear pulse energy into the
guard; the detected vote is the sign of the energy difference. No
channel knowledge is used anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ppm import PpmLayout, VoteAssignment


@dataclass(frozen=True)
class EnergyPair:
    e_plus: float
    e_minus: float

    @property
    def delta(self) -> float:
        return self.e_plus - self.e_minus


def _window_energy(frames, layout: PpmLayout, t: int, f: int) -> float:
    if not 0 <= t < len(frames):
        raise ValueError(f"symbol index {t} outside the {len(frames)} demodulated symbols")
    start = f * layout.slot_width
    stop = start + layout.slot_width
    frame = frames[t]
    if stop > len(frame):
        raise ValueError(f"slot {f} does not fit in a {len(frame)}-bin symbol")
    window = frame[start:stop]
    return float(np.sum(np.abs(window) ** 2))


def vote_energies(
    frames,
    assignment: VoteAssignment,
    layout: PpmLayout,
    i: int,
) -> EnergyPair:
    """Windowed energies at vote i's two pulse positions."""
    if not 0 <= i < assignment.q:
        raise ValueError(f"vote index {i} outside [0, {assignment.q})")
    tp, fp = assignment.plus_pos[i]
    tm, fm = assignment.minus_pos[i]
    return EnergyPair(
        e_plus=_window_energy(frames, layout, tp, fp),
        e_minus=_window_energy(frames, layout, tm, fm),
    )


def detect_mv(
    frames,
    assignment: VoteAssignment,
    layout: PpmLayout,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Majority-vote vector over {+1, -1} from demodulated symbols.

    Exact energy ties resolve to +/-1 uniformly at random (rng needed
    only then; ties cannot occur in noiseless loopback).
    """
    votes = np.empty(assignment.q, dtype=np.int8)
    for i in range(assignment.q):
        delta = vote_energies(frames, assignment, layout, i).delta
        if delta > 0:
            votes[i] = 1
        elif delta < 0:
            votes[i] = -1
        else:
            if rng is None:
                raise ValueError("energy tie encountered but no rng supplied for tie-breaking")
            votes[i] = 1 if rng.integers(0, 2) else -1
    return votes
