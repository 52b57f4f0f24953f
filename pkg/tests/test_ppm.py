import numpy as np
import pytest

from airvote.ppm import (
    ConfigurationError,
    compute_layout,
    default_vote_map,
    draw_dithers,
    encode_votes,
    pulse_weights,
)


class TestLayout:
    @pytest.mark.parametrize("m_pulse,m_vote,n_symbols", [
        (1, 75, 1642),
        (3, 60, 2052),
        (8, 40, 3078),
        (13, 30, 4103),   # direct evaluation of the two layout formulas
    ])
    def test_full_model_symbol_counts(self, m_pulse, m_vote, n_symbols):
        layout = compute_layout(1200, m_pulse, 7, q=123090)
        assert layout.m_vote == m_vote
        assert layout.n_symbols == n_symbols

    def test_invariants(self):
        layout = compute_layout(1200, 3, 7, q=1000)
        assert layout.m_vote == 1200 // (2 * (3 + 7))
        assert layout.e_s == pytest.approx(2 * (3 + 7) / 3)
        assert layout.n_symbols == int(np.ceil(1000 / layout.m_vote))

    def test_preconditions(self):
        with pytest.raises(ValueError):
            compute_layout(1200, 0, 7, 10)
        with pytest.raises(ValueError):
            compute_layout(1200, 1, -1, 10)
        with pytest.raises(ValueError):
            compute_layout(10, 3, 7, 10)
        with pytest.raises(ValueError):
            compute_layout(1200, 1, 7, 0)

    def test_guard_condition_names_minimum_gap(self):
        # 172.5 ns delay spread + 55.6 ns sync error at 55.6 ns spacing
        with pytest.raises(ConfigurationError, match="minimum m_gap is 5"):
            compute_layout(1200, 1, 3, 10,
                           t_chn_s=172.5e-9, t_sync_s=55.6e-9, bin_spacing_s=55.6e-9)
        layout = compute_layout(1200, 1, 7, 10,
                                t_chn_s=172.5e-9, t_sync_s=55.6e-9, bin_spacing_s=55.6e-9)
        assert layout.m_gap == 7


class TestVoteMap:
    def test_first_pair(self):
        layout = compute_layout(1200, 1, 7, q=80)
        amap = default_vote_map(layout, 80)
        assert tuple(amap.plus_pos[0]) == (0, 1)
        assert tuple(amap.minus_pos[0]) == (0, 0)

    def test_rolls_to_second_symbol(self):
        layout = compute_layout(1200, 1, 7, q=80)
        amap = default_vote_map(layout, 80)
        assert tuple(amap.plus_pos[75]) == (1, 1)
        assert tuple(amap.minus_pos[75]) == (1, 0)

    def test_all_positions_distinct(self):
        layout = compute_layout(1200, 1, 7, q=300)
        amap = default_vote_map(layout, 300)
        pairs = {tuple(p) for p in amap.plus_pos} | {tuple(p) for p in amap.minus_pos}
        assert len(pairs) == 2 * 300

    def test_slot_ranges_in_bounds(self):
        layout = compute_layout(1200, 3, 7, q=200)
        amap = default_vote_map(layout, 200)
        for pos in (amap.plus_pos, amap.minus_pos):
            assert pos[:, 0].max() < layout.n_symbols
            assert pos[:, 1].max() < 2 * layout.m_vote


class TestPulseWeights:
    def test_single_bin_pulse(self):
        layout = compute_layout(1200, 1, 7, q=1)
        np.testing.assert_allclose(pulse_weights(layout), [4.0])

    def test_two_bin_pulse_alternates(self):
        layout = compute_layout(1200, 2, 6, q=1)
        np.testing.assert_allclose(pulse_weights(layout), [np.sqrt(8), -np.sqrt(8)])

    @pytest.mark.parametrize("m_pulse,m_gap", [(1, 7), (2, 6)])
    def test_norm_identity(self, m_pulse, m_gap):
        layout = compute_layout(1200, m_pulse, m_gap, q=1)
        p = pulse_weights(layout)
        assert np.sum(np.abs(p) ** 2) == pytest.approx(2 * (m_pulse + m_gap))


class TestEncode:
    def setup_method(self):
        self.layout = compute_layout(1200, 1, 7, q=1)
        self.amap = default_vote_map(self.layout, 1)

    def test_plus_vote_lands_in_odd_slot(self):
        frames = encode_votes(np.array([1]), self.amap, self.layout, np.array([1.0 + 0j]))
        assert frames[0][8] == pytest.approx(4.0)
        assert np.count_nonzero(frames[0]) == 1

    def test_minus_vote_lands_in_even_slot(self):
        frames = encode_votes(np.array([-1]), self.amap, self.layout, np.array([1.0 + 0j]))
        assert frames[0][0] == pytest.approx(4.0)
        assert np.count_nonzero(frames[0]) == 1

    def test_sign_flip_swaps_slots_same_energy(self):
        layout = compute_layout(1200, 1, 7, q=150)
        amap = default_vote_map(layout, 150)
        rng = np.random.default_rng(0)
        signs = rng.choice([-1, 1], 150)
        dith = draw_dithers(rng, 150)
        a = encode_votes(signs, amap, layout, dith)
        b = encode_votes(-signs, amap, layout, dith)
        for fa, fb in zip(a, b):
            assert np.sum(np.abs(fa) ** 2) == pytest.approx(np.sum(np.abs(fb) ** 2))
            occupied_a = np.flatnonzero(fa) // layout.slot_width
            occupied_b = np.flatnonzero(fb) // layout.slot_width
            assert set(occupied_a).isdisjoint(occupied_b)

    def test_occupancy_and_energy_budget(self):
        layout = compute_layout(1200, 3, 7, q=60)   # exactly one full symbol
        amap = default_vote_map(layout, 60)
        rng = np.random.default_rng(1)
        frames = encode_votes(rng.choice([-1, 1], 60), amap, layout, draw_dithers(rng, 60))
        assert len(frames) == 1
        assert np.count_nonzero(frames[0]) == layout.m_vote * layout.m_pulse
        assert np.sum(np.abs(frames[0]) ** 2) == pytest.approx(
            2 * layout.m_vote * (layout.m_pulse + layout.m_gap))
        assert np.sum(np.abs(frames[0]) ** 2) <= layout.m_bins + 1e-9

    def test_bad_sign_rejected(self):
        with pytest.raises(ValueError):
            encode_votes(np.array([0]), self.amap, self.layout, np.array([1.0 + 0j]))

    def test_trailing_symbol_partially_filled(self):
        layout = compute_layout(1200, 1, 7, q=80)
        amap = default_vote_map(layout, 80)
        rng = np.random.default_rng(2)
        frames = encode_votes(rng.choice([-1, 1], 80), amap, layout, draw_dithers(rng, 80))
        assert len(frames) == 2
        assert np.count_nonzero(frames[0]) == 75
        assert np.count_nonzero(frames[1]) == 5


class TestDithers:
    def test_unit_modulus(self):
        d = draw_dithers(np.random.default_rng(3), 1000)
        np.testing.assert_allclose(np.abs(d), 1.0, atol=1e-12)

    def test_uniform_over_constellation(self):
        d = draw_dithers(np.random.default_rng(4), 100_000)
        for point in np.exp(1j * np.pi * (2 * np.arange(4) + 1) / 4):
            freq = np.mean(np.isclose(d, point))
            assert abs(freq - 0.25) <= 0.01

    def test_deterministic_given_seed(self):
        a = draw_dithers(np.random.default_rng(5), 64)
        b = draw_dithers(np.random.default_rng(5), 64)
        np.testing.assert_array_equal(a, b)
