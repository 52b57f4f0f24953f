"""Monte-Carlo-vs-closed-form consistency checks.

Each check simulates part of the system with seeded randomness and
compares against an independent expectation: an exact expression, a
brute-force summation, or a quadrature. The `validate` CLI subcommand
runs the whole suite; the statistical tolerances (3 standard errors,
or stated percentage bands) match the check's sample size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import chi2

from . import rng as rng_mod
from .analysis import (
    delta_pdf,
    energy_means,
    mv_error_prob,
    mv_error_prob_bruteforce,
    sign_error_prob_given_split,
)
from .channel import draw_timing_offset, epa_profile, flat_profile
from .detector import detect_mv, vote_energies
from .dsp import OfdmConfig, modulate
from .ppm import PpmLayout, compute_layout, default_vote_map, draw_dithers
from .rng import substream
from .tasks import QuadraticTask
from .training import TrainConfig, ideal_mv, run_training
from .transport import IdealTransport


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


# ---------------------------------------------------------------- DSP checks

def check_noise_through_demodulator(seed: int, n_draws: int = 10_000) -> CheckResult:
    """White noise keeps its per-bin variance through the receive chain."""
    cfg = OfdmConfig(n_idft=256, m_bins=128, cp_len=0)
    rng = substream(seed, rng_mod.VALIDATE, 1)
    sigma_sq = 1.0
    acc = 0.0
    chunk = 1000
    for lo in range(0, n_draws, chunk):
        n = min(chunk, n_draws - lo)
        noise = np.sqrt(sigma_sq / 2) * (
            rng.standard_normal((n, cfg.n_idft)) + 1j * rng.standard_normal((n, cfg.n_idft))
        )
        grid = np.fft.fft(noise, norm="ortho", axis=1)
        band = grid[:, cfg.first_subcarrier:cfg.first_subcarrier + cfg.m_bins]
        bins = np.fft.ifft(band, norm="ortho", axis=1)
        acc += np.sum(np.abs(bins) ** 2)
    mean_var = acc / (n_draws * cfg.m_bins)
    ok = abs(mean_var - sigma_sq) <= 0.05 * sigma_sq
    return _result("noise-variance-through-demodulator", ok,
                   f"per-bin variance {mean_var:.4f} vs {sigma_sq} (tol 5%)")


def check_dither_uniformity(seed: int, n_draws: int = 100_000) -> CheckResult:
    rng = substream(seed, rng_mod.VALIDATE, 2)
    d = draw_dithers(rng, n_draws)
    if not np.allclose(np.abs(d), 1.0, atol=1e-12):
        return _result("dither-uniformity", False, "non-unit modulus value")
    phases = np.angle(d)
    freqs = [np.mean(np.isclose(phases, p)) for p in np.pi * np.array([0.25, 0.75, -0.75, -0.25])]
    tol = 0.01 * np.sqrt(100_000 / n_draws)
    ok = all(abs(f - 0.25) <= tol for f in freqs)
    return _result("dither-uniformity", ok,
                   f"constellation frequencies {np.round(freqs, 4)} vs 0.25 (tol {tol:.3g})")


# ------------------------------------------------------------- channel checks

def check_rayleigh_normalization(seed: int, n_draws: int = 100_000) -> CheckResult:
    rng = substream(seed, rng_mod.VALIDATE, 3)
    taps = np.sqrt(0.5) * (rng.standard_normal(n_draws) + 1j * rng.standard_normal(n_draws))
    mean_power = float(np.mean(np.abs(taps) ** 2))
    circ = abs(np.mean(taps / np.abs(taps)))
    ok = abs(mean_power - 1.0) <= 0.03 and circ <= 0.02
    return _result("single-tap-rayleigh", ok,
                   f"mean |tap|^2 {mean_power:.4f} (tol 3%), circular mean {circ:.4f}")


def check_timing_offset_uniformity(seed: int, n_draws: int = 100_000) -> CheckResult:
    rng = substream(seed, rng_mod.VALIDATE, 4)
    fs = 30.72e6
    offsets = np.array([draw_timing_offset(rng, 55.6e-9, fs) for _ in range(n_draws)])
    support = np.arange(3)
    counts = np.array([(offsets == s).sum() for s in support])
    if counts.sum() != n_draws:
        return _result("timing-offset-uniformity", False, f"values outside {{0,1,2}}")
    expected = n_draws / support.size
    stat = float(np.sum((counts - expected) ** 2 / expected))
    crit = float(chi2.ppf(0.99, df=support.size - 1))
    return _result("timing-offset-uniformity", stat <= crit,
                   f"chi2 {stat:.2f} vs critical {crit:.2f} (1% level)")


# ----------------------------------------------------------- detector checks

def check_noise_window_energy(seed: int, n_draws: int = 10_000) -> CheckResult:
    """Mean windowed energy of pure noise is (m_pulse + m_gap) * sigma^2."""
    layout = compute_layout(128, 1, 7, q=1)
    assignment = default_vote_map(layout, 1)
    rng = substream(seed, rng_mod.VALIDATE, 5)
    sigma_sq = 1.0
    e_plus = np.empty(n_draws)
    e_minus = np.empty(n_draws)
    for t in range(n_draws):
        frame = np.sqrt(sigma_sq / 2) * (
            rng.standard_normal(layout.m_bins) + 1j * rng.standard_normal(layout.m_bins)
        )
        pair = vote_energies([frame], assignment, layout, 0)
        e_plus[t], e_minus[t] = pair.e_plus, pair.e_minus
    expected = (layout.m_pulse + layout.m_gap) * sigma_sq
    ok = (abs(e_plus.mean() - expected) <= 0.05 * expected
          and abs(e_minus.mean() - expected) <= 0.05 * expected)
    return _result("noise-window-energy", ok,
                   f"means ({e_plus.mean():.3f}, {e_minus.mean():.3f}) vs {expected} (tol 5%)")


def check_detector_tie_break(seed: int, n_trials: int = 10_000) -> CheckResult:
    layout = compute_layout(32, 1, 7, q=1)
    assignment = default_vote_map(layout, 1)
    frame = np.zeros(layout.m_bins, dtype=np.complex128)
    frame[0] = 1.0   # minus window
    frame[8] = 1.0   # plus window, equal energy
    rng = substream(seed, rng_mod.VALIDATE, 6)
    votes = np.array([detect_mv([frame], assignment, layout, rng)[0] for _ in range(n_trials)])
    frac = float(np.mean(votes == 1))
    tol = 0.02 * np.sqrt(10_000 / n_trials)
    ok = abs(frac - 0.5) <= tol
    return _result("detector-tie-break", ok, f"P(+1)={frac:.4f} vs 0.5 (tol {tol:.3g})")


def check_detector_vs_closed_form(seed: int, n_trials: int = 10_000) -> CheckResult:
    """3-vs-1 split, flat unit-power Rayleigh, no noise: error rate = 1/K."""
    k_plus, k_minus = 3, 1
    layout = compute_layout(32, 1, 7, q=1)
    assignment = default_vote_map(layout, 1)
    rng = substream(seed, rng_mod.VALIDATE, 7)
    errors = 0
    pulse_bin_plus = layout.slot_width    # slot f=1
    for _ in range(n_trials):
        frame = np.zeros(layout.m_bins, dtype=np.complex128)
        h = np.sqrt(0.5) * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        d = draw_dithers(rng, 4)
        amp = np.sqrt(layout.e_s)
        frame[pulse_bin_plus] = amp * np.sum(h[:k_plus] * d[:k_plus])
        frame[0] = amp * np.sum(h[k_plus:] * d[k_plus:])
        if detect_mv([frame], assignment, layout, rng)[0] != 1:
            errors += 1
    p_hat = errors / n_trials
    p_exact = sign_error_prob_given_split(k_plus + k_minus, k_plus, np.inf)
    se = np.sqrt(p_exact * (1 - p_exact) / n_trials)
    ok = abs(p_hat - p_exact) <= 3 * se
    return _result("detector-vs-closed-form", ok,
                   f"error rate {p_hat:.4f} vs {p_exact:.4f} (3 SE = {3 * se:.4f})")


# ----------------------------------------------------------- analysis checks

def check_mv_error_bruteforce() -> CheckResult:
    worst = 0.0
    for k in range(1, 11):
        for xi_value in (0.1, 1.0, 10.0, 100.0):
            for q_i in (0.0, 0.1, 0.25, 0.5):
                a = mv_error_prob(k, q_i, xi_value)
                b = mv_error_prob_bruteforce(k, q_i, xi_value)
                worst = max(worst, abs(a - b))
    return _result("mv-error-closed-form-vs-bruteforce", worst <= 1e-12,
                   f"max |closed - bruteforce| = {worst:.2e} (tol 1e-12)")


def check_sign_error_sampling(seed: int, n_trials: int = 100_000) -> CheckResult:
    """Exponential-draw Monte Carlo against the split-conditional error."""
    rng = substream(seed, rng_mod.VALIDATE, 8)
    m_pulse, m_gap, sigma_sq = 1, 7, 1.0
    failures = []
    for k in (1, 2, 5):
        for xi_value in (1.0, 10.0):
            for k_plus in sorted({0, k // 2, k}):
                # pick the pulse energy that realizes this effective SNR
                e_s = (m_pulse + m_gap) * sigma_sq * xi_value / m_pulse
                mu_p, mu_m = energy_means(k_plus, k - k_plus, m_pulse, m_gap, e_s, sigma_sq)
                draws_p = rng.exponential(mu_p, n_trials)
                draws_m = rng.exponential(mu_m, n_trials)
                p_hat = float(np.mean(draws_p - draws_m <= 0))
                p_exact = sign_error_prob_given_split(k, k_plus, xi_value)
                se = np.sqrt(max(p_exact * (1 - p_exact), 1e-12) / n_trials)
                if abs(p_hat - p_exact) > 3 * se:
                    failures.append((k, k_plus, xi_value, round(p_hat, 5), round(p_exact, 5)))
    return _result("sign-error-exponential-sampling", not failures,
                   "all (K, K+, xi) grid points within 3 SE" if not failures
                   else f"outliers: {failures}")


def check_delta_pdf_quadrature() -> CheckResult:
    mu_p, mu_m = 40.0, 24.0
    total, _ = integrate.quad(lambda d: delta_pdf(d, mu_p, mu_m), -np.inf, np.inf)
    neg, _ = integrate.quad(lambda d: delta_pdf(d, mu_p, mu_m), -np.inf, 0.0)
    expected_neg = mu_m / (mu_p + mu_m)
    ok = abs(total - 1.0) <= 1e-6 and abs(neg - expected_neg) <= 1e-6
    return _result("delta-pdf-quadrature", ok,
                   f"integral {total:.8f}, negative mass {neg:.8f} vs {expected_neg:.8f}")


# ------------------------------------------------ full physical chain bridge

def simulate_energy_pairs(
    seed: int,
    n_trials: int,
    k_plus: int,
    k_minus: int,
    profile,
    t_sync_s: float,
    sigma_n_sq: float,
    cfg: OfdmConfig,
    layout: PpmLayout,
    chunk: int = 2000,
    stream_tag: int = 9,
) -> tuple[float, float]:
    """Mean (e_plus, e_minus) over full TX -> channel -> RX chains.

    Vectorized over trials: one vote per symbol, k_plus devices pulse in
    the plus slot and k_minus in the minus slot, each with a fresh
    channel realization, timing offset and QPSK dither per trial.
    """
    fs = cfg.sample_rate_hz
    var = profile.tap_variances(fs)
    max_offset = int(np.rint(t_sync_s * fs))
    width = layout.slot_width
    band = slice(cfg.first_subcarrier, cfg.first_subcarrier + cfg.m_bins)
    length = cfg.n_idft + cfg.cp_len

    # Per-trial transmit signals differ only by a unit-modulus dither, so
    # modulate the two slot templates once and scale.
    base = []
    for start in (width, 0):          # plus slot, minus slot
        bins = np.zeros(cfg.m_bins, dtype=np.complex128)
        bins[start:start + layout.m_pulse] = np.sqrt(layout.e_s) * (-1.0) ** np.arange(layout.m_pulse)
        base.append(modulate(bins, cfg))

    e_plus_sum = 0.0
    e_minus_sum = 0.0
    done = 0
    chunk_id = 0
    while done < n_trials:
        n = min(chunk, n_trials - done)
        rng = substream(seed, rng_mod.VALIDATE, stream_tag, chunk_id)
        y_sum = np.zeros((n, length), dtype=np.complex128)
        rows = np.arange(n)[:, None]
        for ed in range(k_plus + k_minus):
            x = base[0] if ed < k_plus else base[1]
            dith = np.exp(1j * np.pi * (2 * rng.integers(0, 4, size=(n, 1)) + 1) / 4)
            taps = np.sqrt(var / 2)[None, :] * (
                rng.standard_normal((n, var.size)) + 1j * rng.standard_normal((n, var.size))
            )
            offsets = rng.integers(0, max_offset + 1, size=n)
            # fold the timing offset into the delay positions
            coeff = np.zeros((n, var.size + max_offset), dtype=np.complex128)
            coeff[rows, np.arange(var.size)[None, :] + offsets[:, None]] = taps * dith
            if coeff.shape[1] <= 4:
                for d in range(coeff.shape[1]):
                    y_sum[:, d:] += coeff[:, d, None] * x[None, : length - d]
            else:
                # length-L circular convolution; the wrapped tail only hits
                # the first taps-1 CP samples, which the receiver discards
                assert coeff.shape[1] - 1 < cfg.cp_len
                y_sum += np.fft.ifft(
                    np.fft.fft(coeff, n=length, axis=1) * np.fft.fft(x, n=length)[None, :],
                    axis=1,
                )
        if sigma_n_sq > 0:
            y_sum += np.sqrt(sigma_n_sq / 2) * (
                rng.standard_normal(y_sum.shape) + 1j * rng.standard_normal(y_sum.shape)
            )
        grid = np.fft.fft(y_sum[:, cfg.cp_len:], norm="ortho", axis=1)
        shat = np.fft.ifft(grid[:, band], norm="ortho", axis=1)
        e_minus_sum += float(np.sum(np.abs(shat[:, :width]) ** 2))
        e_plus_sum += float(np.sum(np.abs(shat[:, width:2 * width]) ** 2))
        done += n
        chunk_id += 1
    return e_plus_sum / n_trials, e_minus_sum / n_trials


def check_physical_bridge(seed: int, n_trials: int = 100_000, multipath: bool = False) -> CheckResult:
    """Chain-simulated mean energies vs the linear mean-energy model.

    Runs a half-scale numerology with the production bin spacing (same
    ratio of delay spread to pulse geometry) to keep 1e5 trials fast.
    """
    cfg = OfdmConfig(n_idft=1024, m_bins=600, cp_len=72)
    layout = compute_layout(cfg.m_bins, 1, 7, q=1)
    k_plus, k_minus, sigma_sq = 2, 1, 1.0
    profile = epa_profile() if multipath else flat_profile()
    t_sync = 55.6e-9 if multipath else 0.0
    tol = 0.10 if multipath else 0.03
    e_plus, e_minus = simulate_energy_pairs(
        seed, n_trials, k_plus, k_minus, profile, t_sync, sigma_sq, cfg, layout,
        stream_tag=91 if multipath else 90,
    )
    mu_p, mu_m = energy_means(k_plus, k_minus, layout.m_pulse, layout.m_gap, layout.e_s, sigma_sq)
    dev_p = abs(e_plus - mu_p) / mu_p
    dev_m = abs(e_minus - mu_m) / mu_m
    name = "physical-bridge-" + ("epa" if multipath else "flat")
    return _result(name, dev_p <= tol and dev_m <= tol,
                   f"e+ {e_plus:.2f} vs {mu_p} ({dev_p:.2%}), "
                   f"e- {e_minus:.2f} vs {mu_m} ({dev_m:.2%}), tol {tol:.0%}")


# ------------------------------------------------------------ training checks

def check_mv_tie_break(seed: int, n_trials: int = 10_000) -> CheckResult:
    rng = substream(seed, rng_mod.VALIDATE, 10)
    signs = np.array([[1], [-1]])
    votes = np.array([ideal_mv(signs, rng)[0] for _ in range(n_trials)])
    frac = float(np.mean(votes == 1))
    tol = 0.02 * np.sqrt(10_000 / n_trials)
    ok = abs(frac - 0.5) <= tol
    return _result("mv-tie-break", ok, f"P(+1)={frac:.4f} vs 0.5 (tol {tol:.3g})")


def check_quadratic_convergence(seed: int) -> CheckResult:
    rng = substream(seed, rng_mod.VALIDATE, 11)
    w_star = rng.uniform(-1.0, 1.0, size=8)
    task = QuadraticTask(w_star, n_train=64)
    cfg = TrainConfig(eta=0.01, n_b=8, rounds=150, k=4)
    records = run_training(task, cfg, IdealTransport(), master_seed=seed)
    final = -records[-1].test_accuracy   # sup-norm distance
    ok = final <= cfg.eta + 1e-12
    return _result("quadratic-sign-descent", ok,
                   f"final sup-distance {final:.4f} <= eta {cfg.eta}")


def run_all(seed: int = 20_260_810, quick: bool = False) -> list[CheckResult]:
    """Complete oracle suite; quick mode shrinks the Monte Carlo sizes."""
    scale = 10 if quick else 1
    checks = [
        check_mv_error_bruteforce(),
        check_delta_pdf_quadrature(),
        check_noise_through_demodulator(seed, 10_000 // scale),
        check_dither_uniformity(seed, 100_000 // scale),
        check_rayleigh_normalization(seed, 100_000 // scale),
        check_timing_offset_uniformity(seed, 100_000 // scale),
        check_noise_window_energy(seed, 10_000 // scale),
        check_detector_tie_break(seed, 10_000 // scale),
        check_detector_vs_closed_form(seed, 10_000 // scale),
        check_sign_error_sampling(seed, 100_000 // scale),
        check_physical_bridge(seed, 100_000 // scale, multipath=False),
        check_physical_bridge(seed, 100_000 // scale, multipath=True),
        check_mv_tie_break(seed, 10_000 // scale),
        check_quadratic_convergence(seed),
    ]
    return checks
