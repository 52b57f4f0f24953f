"""Experiment configuration: strict YAML loading and cross-field checks.

Configs are nested YAML mappings (sections: ofdm, ppm, channel, obda,
train). Loading is strict: unknown keys are rejected, a seed is
mandatory, and every violated constraint is reported at once. The
loaded object can build the channel profile, transport and task the
experiment commands need, and hashes itself so every output file can
be traced back to the exact configuration that produced it.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import PowerDelayProfile, epa_profile, flat_profile
from .dsp import OfdmConfig
from .obda import TciConfig, tci_power_scale

SCHEMES = ("ppm", "obda", "obda-no-tci", "ideal")
TASKS = ("synthetic-logistic", "mnist-subset-mlp")


class ConfigError(ValueError):
    """Invalid configuration; carries the full list of problems."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass(frozen=True)
class ChannelSection:
    profile: str = "epa"
    delays_ns: tuple[float, ...] | None = None
    powers_db: tuple[float, ...] | None = None
    t_sync_s: float = 55.6e-9
    snr_db: float = 20.0

    def make_profile(self) -> PowerDelayProfile:
        if self.profile == "epa":
            return epa_profile()
        if self.profile == "flat":
            return flat_profile()
        return PowerDelayProfile(
            delays_ns=np.asarray(self.delays_ns, dtype=float),
            powers_db=np.asarray(self.powers_db, dtype=float),
        )

    @property
    def sigma_n_sq(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class PpmSection:
    m_pulse: int = 1
    m_gap: int = 7


@dataclass(frozen=True)
class ObdaSection:
    threshold: float = 0.2
    power_scale: float | str = "auto"

    def make_tci(self) -> TciConfig:
        scale = tci_power_scale(self.threshold) if self.power_scale == "auto" else float(self.power_scale)
        return TciConfig(threshold=self.threshold, power_scale=scale)


@dataclass(frozen=True)
class TrainSection:
    eta: float = 0.01
    n_b: int = 64
    rounds: int = 300
    k: int = 10
    task: str = "synthetic-logistic"
    dataset_path: str | None = None
    record_timing: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    scheme: str = "ppm"
    output_dir: str = "runs/out"
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    ppm: PpmSection = field(default_factory=PpmSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    obda: ObdaSection = field(default_factory=ObdaSection)
    train: TrainSection = field(default_factory=TrainSection)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["version"] = __version__
        return out

    def config_hash(self) -> str:
        """Digest of the experiment identity (excludes the output location)."""
        ident = self.to_dict()
        ident.pop("output_dir")
        canon = json.dumps(ident, sort_keys=True, default=str)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def version_string(self) -> str:
        return f"{__version__}+cfg.{self.config_hash()[:7]}"


# Section -> field -> (python type, required). Everything else is defaulted.
_SCHEMA = {
    None: {"scheme": str, "seed": int, "output_dir": str},
    "ofdm": {"n_idft": int, "m_bins": int, "cp_len": int, "sample_rate_hz": float,
             "first_subcarrier": int},
    "ppm": {"m_pulse": int, "m_gap": int},
    "channel": {"profile": str, "delays_ns": list, "powers_db": list,
                "t_sync_s": float, "snr_db": float},
    "obda": {"threshold": float, "power_scale": (float, str)},
    "train": {"eta": float, "n_b": int, "rounds": int, "k": int, "task": str,
              "dataset_path": str, "record_timing": bool},
}


def _check_type(value, expected, where: str, problems: list[str]):
    types = expected if isinstance(expected, tuple) else (expected,)
    for t in types:
        if t is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if t is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if t in (str, bool, list) and isinstance(value, t):
            return value
    names = "/".join(t.__name__ for t in types)
    problems.append(f"{where}: expected {names}, got {type(value).__name__} ({value!r})")
    return None


def _parse_sections(raw: dict, problems: list[str]) -> dict:
    values: dict = {}
    for key, entry in raw.items():
        if key in _SCHEMA and key is not None:
            if not isinstance(entry, dict):
                problems.append(f"section '{key}' must be a mapping")
                continue
            for sub, sub_value in entry.items():
                if sub not in _SCHEMA[key]:
                    problems.append(f"unknown key '{key}.{sub}'")
                    continue
                checked = _check_type(sub_value, _SCHEMA[key][sub], f"{key}.{sub}", problems)
                if checked is not None:
                    values[(key, sub)] = checked
        elif key in _SCHEMA[None]:
            checked = _check_type(raw[key], _SCHEMA[None][key], key, problems)
            if checked is not None:
                values[(None, key)] = checked
        else:
            problems.append(f"unknown key '{key}'")
    return values


def _cross_checks(cfg: ExperimentConfig, problems: list[str]):
    try:
        profile = cfg.channel.make_profile()
    except (ValueError, TypeError) as exc:
        problems.append(f"channel profile: {exc}")
        return

    fs = cfg.ofdm.sample_rate_hz
    max_offset = int(round(cfg.channel.t_sync_s * fs))
    max_tap = int(np.rint(profile.delays_ns.max() * 1e-9 * fs))
    if max_tap + max_offset >= cfg.ofdm.cp_len:
        problems.append(
            f"channel paths reach sample {max_tap + max_offset}, beyond cp_len={cfg.ofdm.cp_len}"
        )

    if cfg.scheme == "ppm":
        t_chn = profile.max_excess_delay_s()
        min_gap = math.ceil((t_chn + cfg.channel.t_sync_s) / cfg.ofdm.bin_spacing_s)
        if cfg.ppm.m_gap < min_gap:
            problems.append(
                f"ppm.m_gap={cfg.ppm.m_gap} cannot absorb delay spread plus sync error; "
                f"minimum m_gap is {min_gap}"
            )
        if 2 * (cfg.ppm.m_pulse + cfg.ppm.m_gap) > cfg.ofdm.m_bins:
            problems.append("ppm: two slots do not fit into ofdm.m_bins")

    if cfg.train.task == "mnist-subset-mlp" and not cfg.train.dataset_path:
        problems.append("train.dataset_path is required for task mnist-subset-mlp")


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a raw mapping and assemble the experiment config.

    Raises ConfigError listing every violated constraint.
    """
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])
    values = _parse_sections(raw, problems)

    if (None, "seed") not in values and not any(p.startswith("seed:") for p in problems):
        problems.append("seed is required (determinism is mandatory)")
    scheme = values.get((None, "scheme"), "ppm")
    if scheme not in SCHEMES:
        problems.append(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    task = values.get(("train", "task"), "synthetic-logistic")
    if task not in TASKS:
        problems.append(f"train.task must be one of {TASKS}, got {task!r}")
    if values.get(("channel", "profile"), "epa") not in ("epa", "flat", "custom"):
        problems.append("channel.profile must be 'epa', 'flat' or 'custom'")
    if values.get(("channel", "profile")) == "custom":
        if ("channel", "delays_ns") not in values or ("channel", "powers_db") not in values:
            problems.append("channel.profile 'custom' needs delays_ns and powers_db")
    ps = values.get(("obda", "power_scale"))
    if isinstance(ps, str) and ps != "auto":
        problems.append(f"obda.power_scale must be a number or 'auto', got {ps!r}")

    if problems:
        raise ConfigError(problems)

    def section(name: str, cls):
        kwargs = {sub: v for (sec, sub), v in values.items() if sec == name}
        return kwargs if cls is None else cls(**kwargs)

    try:
        ofdm = OfdmConfig(**section("ofdm", None))
    except ValueError as exc:
        raise ConfigError([f"ofdm: {exc}"]) from exc

    chan_kwargs = section("channel", None)
    for key in ("delays_ns", "powers_db"):
        if key in chan_kwargs:
            chan_kwargs[key] = tuple(float(v) for v in chan_kwargs[key])

    cfg = ExperimentConfig(
        seed=values[(None, "seed")],
        scheme=scheme,
        output_dir=values.get((None, "output_dir"), "runs/out"),
        ofdm=ofdm,
        ppm=section("ppm", PpmSection),
        channel=ChannelSection(**chan_kwargs),
        obda=section("obda", ObdaSection),
        train=section("train", TrainSection),
    )
    _cross_checks(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Load and validate a YAML experiment config.

    overrides: flat {key: value} applied on top of the file, with dotted
    names for section fields (e.g. 'channel.snr_db').
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"YAML parse error: {exc}"]) from exc
    if raw is None:
        raw = {}
    for key, value in (overrides or {}).items():
        if "." in key:
            sec, sub = key.split(".", 1)
            raw.setdefault(sec, {})
            raw[sec][sub] = value
        else:
            raw[key] = value
    return build_config(raw)
