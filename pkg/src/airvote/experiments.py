"""Experiment commands: training runs, envelope statistics, closed-form tables.

Each command reads an ExperimentConfig, runs deterministically from its
seed, and writes CSV/JSON artifacts into the config's output directory.
Every file starts with a `# config=<hash>` comment so outputs of
different configurations cannot be mixed up silently.
"""
from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .analysis import TheoremParams, convergence_bound, mv_error_prob, xi
from .config import ExperimentConfig
from .dsp import OfdmConfig, oversampled_envelope
from .ppm import PpmLayout, compute_layout, default_vote_map, pulse_weights
from .rng import substream
from .tasks import make_task
from .training import TrainConfig, run_training
from .transport import IdealTransport, ObdaTransport, PpmTransport

OVERSAMPLE = 4


def _write_csv(path: Path, header: str, rows, config_hash: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config={config_hash}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def make_layout(cfg: ExperimentConfig, q: int) -> PpmLayout:
    profile = cfg.channel.make_profile()
    return compute_layout(
        cfg.ofdm.m_bins,
        cfg.ppm.m_pulse,
        cfg.ppm.m_gap,
        q,
        t_chn_s=profile.max_excess_delay_s(),
        t_sync_s=cfg.channel.t_sync_s,
        bin_spacing_s=cfg.ofdm.bin_spacing_s,
    )


def make_transport(cfg: ExperimentConfig, q: int):
    """Transport instance for the config's scheme, sized for q votes."""
    if cfg.scheme == "ideal":
        return IdealTransport()
    profile = cfg.channel.make_profile()
    if cfg.scheme == "ppm":
        layout = make_layout(cfg, q)
        return PpmTransport(
            ofdm=cfg.ofdm,
            layout=layout,
            assignment=default_vote_map(layout, q),
            profile=profile,
            t_sync_s=cfg.channel.t_sync_s,
            sigma_n_sq=cfg.channel.sigma_n_sq,
        )
    return ObdaTransport(
        ofdm=cfg.ofdm,
        profile=profile,
        t_sync_s=cfg.channel.t_sync_s,
        sigma_n_sq=cfg.channel.sigma_n_sq,
        tci=cfg.obda.make_tci(),
        use_tci=(cfg.scheme == "obda"),
    )


def cmd_train(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Run the configured training experiment; writes rounds.csv + summary.json.

    Per-round wall time goes into the wall_ms column only when
    train.record_timing is enabled; it stays 0.0 otherwise so that a
    fixed config and seed produce byte-identical CSVs at any thread
    count. Total wall time is always reported in summary.json.
    """
    task = make_task(cfg.train.task, cfg.seed, cfg.train.dataset_path)
    transport = make_transport(cfg, task.q)
    train_cfg = TrainConfig(eta=cfg.train.eta, n_b=cfg.train.n_b,
                            rounds=cfg.train.rounds, k=cfg.train.k)
    start = time.perf_counter()
    records = run_training(task, train_cfg, transport, cfg.seed, threads=threads)
    total_s = time.perf_counter() - start

    out = Path(cfg.output_dir)
    chash = cfg.config_hash()
    rows = [
        (r.round, repr(r.test_accuracy), repr(r.mv_error_rate),
         repr(r.wall_ms) if cfg.train.record_timing else "0.0")
        for r in records
    ]
    _write_csv(out / "rounds.csv", "round,test_accuracy,mv_error_rate,wall_ms", rows, chash)

    summary = {
        "config": chash,
        "version": cfg.version_string(),
        "scheme": cfg.scheme,
        "task": cfg.train.task,
        "rounds": cfg.train.rounds,
        "final_accuracy": records[-1].test_accuracy,
        "final_mv_error_rate": records[-1].mv_error_rate,
        "total_wall_s": total_s,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return {"rounds_csv": out / "rounds.csv", "summary_json": out / "summary.json",
            "records": records}


def random_ppm_frames(layout: PpmLayout, n_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Fully occupied vote-carrying bin frames with random signs and dithers."""
    width = layout.slot_width
    frames = np.zeros((n_symbols, layout.m_bins), dtype=np.complex128)
    pulse = pulse_weights(layout)
    signs = rng.choice([0, 1], size=(n_symbols, layout.m_vote))   # 0 -> minus slot
    dithers = np.exp(1j * np.pi * (2 * rng.integers(0, 4, size=(n_symbols, layout.m_vote)) + 1) / 4)
    slot = 2 * np.arange(layout.m_vote)[None, :] + signs
    starts = slot * width
    rows = np.repeat(np.arange(n_symbols)[:, None], layout.m_vote, axis=1)
    for p in range(layout.m_pulse):
        frames[rows, starts + p] = pulse[p] * dithers
    return frames


def random_qpsk_frames(m_bins: int, n_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Full-occupancy QPSK frames (coherent baseline waveform statistics)."""
    signs = rng.choice([-1.0, 1.0], size=(n_symbols, m_bins, 2))
    return (signs[..., 0] + 1j * signs[..., 1]) / np.sqrt(2.0)


def pmepr_batch(frames: np.ndarray, cfg: OfdmConfig, oversample: int = OVERSAMPLE,
                dft_spread: bool = True, chunk: int = 512) -> np.ndarray:
    """Vectorized peak-to-mean-envelope-power of many bin frames, in dB."""
    frames = np.asarray(frames, dtype=np.complex128)
    n_fine = cfg.n_idft * oversample
    p_tx = cfg.m_bins / cfg.n_idft
    out = np.empty(frames.shape[0])
    for lo in range(0, frames.shape[0], chunk):
        part = frames[lo:lo + chunk]
        spectra = np.fft.fft(part, norm="ortho", axis=1) if dft_spread else part
        padded = np.zeros((part.shape[0], n_fine), dtype=np.complex128)
        padded[:, cfg.first_subcarrier:cfg.first_subcarrier + cfg.m_bins] = spectra
        fine = np.fft.ifft(padded, axis=1) * (n_fine / np.sqrt(cfg.n_idft))
        out[lo:lo + chunk] = 10.0 * np.log10(np.max(np.abs(fine) ** 2, axis=1) / p_tx)
    return out


def tci_gains(cfg: ExperimentConfig, n_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Per-symbol truncated-inversion gains from fresh channel realizations."""
    profile = cfg.channel.make_profile()
    var = profile.tap_variances(cfg.ofdm.sample_rate_hz)
    taps = np.sqrt(var / 2)[None, :] * (
        rng.standard_normal((n_symbols, var.size)) + 1j * rng.standard_normal((n_symbols, var.size))
    )
    h = np.fft.fft(taps, cfg.ofdm.n_idft, axis=1)[
        :, cfg.ofdm.first_subcarrier:cfg.ofdm.first_subcarrier + cfg.ofdm.m_bins
    ]
    tci = cfg.obda.make_tci()
    gain = np.zeros_like(h)
    keep = np.abs(h) >= tci.threshold
    gain[keep] = 1.0 / h[keep]
    return gain * tci.power_scale


def pmepr_samples(cfg: ExperimentConfig, n_symbols: int, chunk: int = 1000) -> tuple[np.ndarray, int]:
    """(pmepr_db samples, m_pulse label) for the config scheme's transmit waveform.

    The obda scheme measures the waveform it actually radiates: QPSK
    pre-multiplied by the truncated channel inverse of a fresh fading
    realization per symbol. obda-no-tci measures plain QPSK.
    """
    if cfg.scheme == "ideal":
        raise ValueError("scheme 'ideal' has no transmit waveform")
    layout = make_layout(cfg, q=1) if cfg.scheme == "ppm" else None
    out = np.empty(n_symbols)
    for chunk_id, lo in enumerate(range(0, n_symbols, chunk)):
        n = min(chunk, n_symbols - lo)
        rng = substream(cfg.seed, rng_mod.PMEPR, 0, chunk_id)
        if cfg.scheme == "ppm":
            frames = random_ppm_frames(layout, n, rng)
            out[lo:lo + n] = pmepr_batch(frames, cfg.ofdm, dft_spread=True)
        else:
            frames = random_qpsk_frames(cfg.ofdm.m_bins, n, rng)
            if cfg.scheme == "obda":
                frames = frames * tci_gains(cfg, n, rng)
            out[lo:lo + n] = pmepr_batch(frames, cfg.ofdm, dft_spread=False)
    return out, cfg.ppm.m_pulse if cfg.scheme == "ppm" else 0


def cmd_pmepr(cfg: ExperimentConfig, n_symbols: int) -> dict:
    """Envelope statistics; writes pmepr.csv and a sample envelope trace."""
    samples, m_pulse = pmepr_samples(cfg, n_symbols)
    out = Path(cfg.output_dir)
    chash = cfg.config_hash()
    rows = [(cfg.scheme, m_pulse, i, repr(float(v))) for i, v in enumerate(samples)]
    _write_csv(out / "pmepr.csv", "scheme,m_pulse,symbol_index,pmepr_db", rows, chash)

    rng = substream(cfg.seed, rng_mod.PMEPR, 1)
    if cfg.scheme == "ppm":
        layout = make_layout(cfg, q=1)
        frame = random_ppm_frames(layout, 1, rng)[0]
        env = oversampled_envelope(frame, cfg.ofdm, OVERSAMPLE, dft_spread=True)
    else:
        frame = random_qpsk_frames(cfg.ofdm.m_bins, 1, rng)[0]
        if cfg.scheme == "obda":
            frame = frame * tci_gains(cfg, 1, rng)[0]
        env = oversampled_envelope(frame, cfg.ofdm, OVERSAMPLE, dft_spread=False)
    env_rows = [(cfg.scheme, i, repr(float(v))) for i, v in enumerate(env)]
    _write_csv(out / "envelope.csv", "scheme,sample_index,magnitude", env_rows, chash)
    return {"pmepr_csv": out / "pmepr.csv", "envelope_csv": out / "envelope.csv",
            "samples": samples}


def cmd_analyze(cfg: ExperimentConfig) -> dict:
    """Closed-form tables: convergence bound vs rounds, vote error vs SNR."""
    out = Path(cfg.output_dir)
    chash = cfg.config_hash()
    layout = compute_layout(cfg.ofdm.m_bins, cfg.ppm.m_pulse, cfg.ppm.m_gap, q=1)
    xi_cfg = xi(layout.m_pulse, layout.m_gap, layout.e_s, cfg.channel.sigma_n_sq)

    n_grid = np.unique(np.logspace(1, 5, 33).astype(int))
    bound_rows = []
    for n in n_grid:
        p = TheoremParams(n_rounds=int(n), k=cfg.train.k, gamma=1.0, l1_smoothness=1.0,
                          l1_sigma=1.0, f0_minus_fstar=1.0, xi=xi_cfg)
        bound_rows.append((int(n), repr(convergence_bound(p))))
    _write_csv(out / "bound_vs_rounds.csv", "rounds,bound", bound_rows, chash)

    xi_grid = np.logspace(-1, 3, 25)
    err_rows = []
    for x in xi_grid:
        for q_i in (0.0, 0.1, 0.25, 0.5):
            err_rows.append((repr(float(x)), cfg.train.k, q_i,
                             repr(mv_error_prob(cfg.train.k, q_i, float(x)))))
    _write_csv(out / "mv_error_vs_xi.csv", "xi,k,q_i,p_error", err_rows, chash)
    return {"bound_csv": out / "bound_vs_rounds.csv", "mv_error_csv": out / "mv_error_vs_xi.csv"}
