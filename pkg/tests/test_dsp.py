import numpy as np
import pytest

from airvote.dsp import (
    OfdmConfig,
    demodulate,
    dft,
    idft,
    modulate,
    oversampled_envelope,
    pmepr_db,
    strip_cp,
)

CFG = OfdmConfig()
SMALL = OfdmConfig(n_idft=64, m_bins=32, cp_len=8, sample_rate_hz=1e6)


def test_dft_impulse_is_flat():
    np.testing.assert_allclose(dft([1, 0, 0, 0]), [0.5, 0.5, 0.5, 0.5], atol=1e-15)


def test_transform_pair_and_parseval():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    np.testing.assert_allclose(idft(dft(v)), v, atol=1e-12)
    assert abs(np.linalg.norm(dft(v)) - np.linalg.norm(v)) <= 1e-10 * np.linalg.norm(v)


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        dft([])
    with pytest.raises(ValueError):
        idft(np.array([]))


def test_constant_bins_give_constant_envelope():
    s = np.ones(SMALL.m_bins, dtype=complex)
    body = strip_cp(modulate(s, SMALL), SMALL)
    mags = np.abs(body)
    np.testing.assert_allclose(mags, mags[0], rtol=1e-12)


@pytest.mark.parametrize("cfg", [SMALL, CFG])
def test_loopback_is_identity(cfg):
    rng = np.random.default_rng(2)
    s = rng.standard_normal(cfg.m_bins) + 1j * rng.standard_normal(cfg.m_bins)
    out = demodulate(strip_cp(modulate(s, cfg), cfg), cfg)
    np.testing.assert_allclose(out, s, atol=1e-9)


def test_loopback_without_spreading():
    rng = np.random.default_rng(3)
    s = rng.standard_normal(SMALL.m_bins) + 1j * rng.standard_normal(SMALL.m_bins)
    out = demodulate(strip_cp(modulate(s, SMALL, dft_spread=False), SMALL), SMALL, dft_spread=False)
    np.testing.assert_allclose(out, s, atol=1e-9)


def test_body_energy_matches_bin_energy():
    rng = np.random.default_rng(4)
    s = rng.standard_normal(SMALL.m_bins) + 1j * rng.standard_normal(SMALL.m_bins)
    body = strip_cp(modulate(s, SMALL), SMALL)
    assert abs(np.sum(np.abs(body) ** 2) - np.sum(np.abs(s) ** 2)) < 1e-9


def test_length_mismatches_rejected():
    with pytest.raises(ValueError):
        modulate(np.ones(SMALL.m_bins + 1), SMALL)
    with pytest.raises(ValueError):
        demodulate(np.ones(SMALL.n_idft - 1), SMALL)
    with pytest.raises(ValueError):
        strip_cp(np.ones(10), SMALL)


def test_circular_shift_is_phase_ramp_on_subcarriers():
    rng = np.random.default_rng(5)
    s = rng.standard_normal(SMALL.m_bins) + 1j * rng.standard_normal(SMALL.m_bins)
    body = strip_cp(modulate(s, SMALL, dft_spread=False), SMALL)
    d = 3
    delayed = np.roll(body, d)
    got = demodulate(delayed, SMALL, dft_spread=False)
    n = np.arange(SMALL.first_subcarrier, SMALL.first_subcarrier + SMALL.m_bins)
    expected = s * np.exp(-2j * np.pi * n * d / SMALL.n_idft)
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_noise_variance_preserved_through_demodulation():
    # unitary receive chain keeps white-noise variance per bin
    cfg = OfdmConfig(n_idft=256, m_bins=128, cp_len=0)
    rng = np.random.default_rng(6)
    draws = 10_000
    noise = np.sqrt(0.5) * (rng.standard_normal((draws, cfg.n_idft))
                            + 1j * rng.standard_normal((draws, cfg.n_idft)))
    grid = np.fft.fft(noise, norm="ortho", axis=1)
    bins = np.fft.ifft(grid[:, cfg.first_subcarrier:cfg.first_subcarrier + cfg.m_bins],
                       norm="ortho", axis=1)
    var = np.mean(np.abs(bins) ** 2)
    assert abs(var - 1.0) <= 0.05


class TestPmepr:
    def test_constant_bins_sit_at_zero_db(self):
        s = np.ones(CFG.m_bins, dtype=complex)
        assert abs(pmepr_db(s, CFG)) < 1e-9

    def test_aligned_qpsk_peaks_at_coherent_sum(self):
        # brute-force expectation: M identical unit tones add to peak M^2/N
        s = np.full(CFG.m_bins, (1 + 1j) / np.sqrt(2))
        got = pmepr_db(s, CFG, dft_spread=False)
        assert abs(got - 10 * np.log10(CFG.m_bins)) < 0.01

    def test_invariant_under_global_phase(self):
        rng = np.random.default_rng(7)
        s = rng.standard_normal(CFG.m_bins) + 1j * rng.standard_normal(CFG.m_bins)
        a = pmepr_db(s, CFG)
        b = pmepr_db(s * np.exp(1j * 1.234), CFG)
        assert abs(a - b) < 1e-9

    def test_oversample_floor_enforced(self):
        with pytest.raises(ValueError):
            pmepr_db(np.ones(CFG.m_bins), CFG, oversample=2)

    def test_envelope_scaling_matches_unit_oversampling(self):
        rng = np.random.default_rng(8)
        s = rng.standard_normal(SMALL.m_bins) + 1j * rng.standard_normal(SMALL.m_bins)
        body = strip_cp(modulate(s, SMALL), SMALL)
        env = oversampled_envelope(s, SMALL, oversample=1)
        np.testing.assert_allclose(env, np.abs(body), atol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        OfdmConfig(n_idft=64, m_bins=65, cp_len=8)
    with pytest.raises(ValueError):
        OfdmConfig(n_idft=64, m_bins=32, cp_len=64)
    with pytest.raises(ValueError):
        OfdmConfig(n_idft=64, m_bins=32, cp_len=8, first_subcarrier=40)
    assert OfdmConfig(n_idft=64, m_bins=32, cp_len=8).first_subcarrier == 16


def test_bin_spacing_matches_production_numerology():
    assert abs(CFG.bin_spacing_s - 55.6e-9) < 0.1e-9
