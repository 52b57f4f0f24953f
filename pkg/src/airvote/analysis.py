"""Closed-form detection and convergence characteristics.

Under Rayleigh fading the two windowed energies of a vote are
(approximately) exponential with means that are linear in the number of
devices voting each way, so the probability of flipping a vote, the
per-coordinate majority-vote error and the training convergence bound
all have closed forms. These evaluators are the oracles the Monte Carlo
simulation is validated against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def energy_means(
    k_plus: int,
    k_minus: int,
    m_pulse: int,
    m_gap: int,
    e_s: float,
    sigma_n_sq: float,
) -> tuple[float, float]:
    """Mean windowed energies (mu_plus, mu_minus) for a k_plus/k_minus split.

    Each voting device contributes m_pulse * e_s of mean signal energy
    to its chosen window; noise adds (m_pulse + m_gap) * sigma_n_sq to
    both. Inter-pulse leakage is neglected (good for a wide guard).
    """
    noise = (m_pulse + m_gap) * sigma_n_sq
    return (m_pulse * e_s * k_plus + noise, m_pulse * e_s * k_minus + noise)


def xi(m_pulse: int, m_gap: int, e_s: float, sigma_n_sq: float) -> float:
    """Effective detection SNR: per-window signal energy of one device over
    the per-window noise energy."""
    if sigma_n_sq == 0:
        return math.inf
    return m_pulse * e_s / ((m_pulse + m_gap) * sigma_n_sq)


def delta_pdf(delta, mu_plus: float, mu_minus: float):
    """Density of the energy difference e_plus - e_minus.

    Difference of independent exponentials with means mu_plus/mu_minus:
    a two-sided exponential, exp(delta/mu_minus)/(mu_plus+mu_minus) for
    delta <= 0 and exp(-delta/mu_plus)/(mu_plus+mu_minus) above.
    """
    if mu_plus <= 0 or mu_minus <= 0:
        raise ValueError("means must be positive")
    delta = np.asarray(delta, dtype=float)
    norm = mu_plus + mu_minus
    out = np.empty(delta.shape)
    neg = delta <= 0
    out[neg] = np.exp(delta[neg] / mu_minus) / norm
    out[~neg] = np.exp(-delta[~neg] / mu_plus) / norm
    return out if out.ndim else float(out)


def sign_error_prob_given_split(k: int, k_plus: int, xi_value: float) -> float:
    """P(detected vote is -1) when k_plus of k devices voted +1.

    Equals mu_minus / (mu_plus + mu_minus) = ((k - k_plus) + 1/xi) / (k + 2/xi);
    supports xi = inf for the noiseless limit (k - k_plus) / k.
    """
    if not 0 <= k_plus <= k:
        raise ValueError("k_plus must lie in [0, k]")
    if xi_value <= 0:
        raise ValueError("xi must be positive")
    inv = 0.0 if math.isinf(xi_value) else 1.0 / xi_value
    return ((k - k_plus) + inv) / (k + 2.0 * inv)


def mv_error_prob(k: int, q_i: float, xi_value: float) -> float:
    """Per-coordinate majority-vote error probability.

    q_i is the probability a single device's stochastic gradient sign
    disagrees with the true gradient sign. Averaging the split-conditional
    error over the binomial split collapses to
    (1/(xi*k) + q_i) / (1 + 2/(k*xi)).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= q_i <= 0.5:
        raise ValueError("q_i must lie in [0, 0.5]")
    if xi_value <= 0:
        raise ValueError("xi must be positive")
    inv = 0.0 if math.isinf(xi_value) else 1.0 / (xi_value * k)
    return (inv + q_i) / (1.0 + 2.0 * inv)


def mv_error_prob_bruteforce(k: int, q_i: float, xi_value: float) -> float:
    """Direct binomial summation of the split-conditional error (oracle)."""
    p_correct = 1.0 - q_i
    total = 0.0
    for k_plus in range(k + 1):
        weight = math.comb(k, k_plus) * p_correct**k_plus * q_i ** (k - k_plus)
        total += weight * sign_error_prob_given_split(k, k_plus, xi_value)
    return total


def q_bound(sigma_i: float, g_i: float, n_b: int) -> float:
    """Upper bound sqrt(2)*sigma_i / (3*|g_i|*sqrt(n_b)) on the per-device
    sign-error probability; infinite (vacuous) at g_i = 0."""
    if sigma_i < 0:
        raise ValueError("sigma_i must be non-negative")
    if n_b < 1:
        raise ValueError("n_b must be >= 1")
    if sigma_i == 0:
        return 0.0
    if g_i == 0:
        return math.inf
    return math.sqrt(2.0) * sigma_i / (3.0 * abs(g_i) * math.sqrt(n_b))


@dataclass(frozen=True)
class TheoremParams:
    """Inputs of the convergence-rate bound.

    n_rounds: total communication rounds N, with batch size N/gamma and
    step size 1/sqrt(l1_smoothness * n_b). l1_smoothness and l1_sigma
    are the l1 norms of the coordinate smoothness and gradient-variance
    vectors; f0_minus_fstar the initial optimality gap; xi the effective
    detection SNR; k the number of devices.
    """

    n_rounds: int
    k: int
    gamma: float
    l1_smoothness: float
    l1_sigma: float
    f0_minus_fstar: float
    xi: float

    def __post_init__(self):
        if self.n_rounds < 1 or self.k < 1:
            raise ValueError("n_rounds and k must be >= 1")
        for name in ("gamma", "l1_smoothness", "l1_sigma", "f0_minus_fstar", "xi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def convergence_bound(p: TheoremParams) -> float:
    """Bound on the expected average l1 gradient norm after N rounds.

    (1/sqrt(N)) * (a*sqrt(l1_L)*(F0 - F* + gamma/2) + (2*sqrt(2*gamma)/3)*l1_sigma)
    with a = (1 + 2/(xi*k)) / sqrt(gamma); O(1/sqrt(N)), and the ideal-
    channel rate is recovered as xi*k grows.
    """
    inv = 0.0 if math.isinf(p.xi) else 2.0 / (p.xi * p.k)
    a = (1.0 + inv) / math.sqrt(p.gamma)
    lead = a * math.sqrt(p.l1_smoothness) * (p.f0_minus_fstar + p.gamma / 2.0)
    noise = 2.0 * math.sqrt(2.0 * p.gamma) / 3.0 * p.l1_sigma
    return (lead + noise) / math.sqrt(p.n_rounds)


def pmepr_ccdf(samples_db, thresholds_db) -> np.ndarray:
    """Empirical complementary CDF: fraction of samples above each threshold."""
    samples = np.asarray(samples_db, dtype=float).reshape(-1)
    if samples.size == 0:
        raise ValueError("need at least one sample")
    thresholds = np.atleast_1d(np.asarray(thresholds_db, dtype=float))
    return (samples[None, :] > thresholds[:, None]).mean(axis=1)


def ccdf_level_db(samples_db, level: float) -> float:
    """Smallest threshold at which the empirical CCDF drops to `level`
    (the (1 - level) quantile)."""
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    samples = np.sort(np.asarray(samples_db, dtype=float).reshape(-1))
    return float(np.quantile(samples, 1.0 - level))
