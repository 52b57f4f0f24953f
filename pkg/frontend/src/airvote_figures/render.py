"""Render experiment CSVs into publication-style figures.

Consumes the simulator's file outputs only (rounds.csv, pmepr.csv,
envelope.csv, bound_vs_rounds.csv; `#`-prefixed provenance comments are
skipped) and writes one image per figure spec. Four figure kinds:

  accuracy  test accuracy vs communication round, one curve per input
  envelope  instantaneous amplitude of a transmit symbol vs sample
  ccdf      empirical PMEPR CCDF on a log probability axis
  bound     convergence-bound decay vs number of rounds (log-log)

A spec is a JSON file (or CLI flags) naming the kind, the input CSVs
with optional labels, and the output image path. Missing columns fail
fast with the column named.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

KINDS = ("accuracy", "envelope", "ccdf", "bound")

REQUIRED_COLUMNS = {
    "accuracy": ("round", "test_accuracy"),
    "envelope": ("sample_index", "magnitude"),
    "ccdf": ("pmepr_db",),
    "bound": ("rounds", "bound"),
}

CCDF_FLOOR = 1e-4


class FigureError(ValueError):
    """Bad figure spec or unusable input data."""


@dataclass
class FigureInput:
    path: str
    label: str | None = None


@dataclass
class FigureSpec:
    kind: str
    inputs: list[FigureInput]
    output: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise FigureError("at least one input file is required")


def load_spec(path: str | Path) -> FigureSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FigureError(f"cannot read spec {path}: {exc}") from exc
    known = {"kind", "inputs", "output", "title", "xlabel", "ylabel"}
    unknown = set(raw) - known
    if unknown:
        raise FigureError(f"unknown spec keys: {sorted(unknown)}")
    for req in ("kind", "inputs", "output"):
        if req not in raw:
            raise FigureError(f"spec is missing required key '{req}'")
    inputs = [
        FigureInput(**entry) if isinstance(entry, dict) else FigureInput(path=entry)
        for entry in raw["inputs"]
    ]
    return FigureSpec(kind=raw["kind"], inputs=inputs, output=raw["output"],
                      title=raw.get("title"), xlabel=raw.get("xlabel"),
                      ylabel=raw.get("ylabel"))


def read_table(path: str | Path, required: tuple[str, ...]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, comment="#")
    except OSError as exc:
        raise FigureError(f"cannot read {path}: {exc}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise FigureError(f"malformed CSV {path}: {exc}") from exc
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise FigureError(f"{path}: missing required column(s) {', '.join(missing)}")
    if frame.empty:
        raise FigureError(f"{path}: no data rows")
    return frame


def _label(entry: FigureInput, frame: pd.DataFrame) -> str:
    if entry.label:
        return entry.label
    if "scheme" in frame.columns:
        return str(frame["scheme"].iloc[0])
    return Path(entry.path).stem


def _plot_accuracy(ax, spec: FigureSpec):
    for entry in spec.inputs:
        frame = read_table(entry.path, REQUIRED_COLUMNS["accuracy"])
        ax.plot(frame["round"], frame["test_accuracy"], label=_label(entry, frame))
    ax.set_xlabel(spec.xlabel or "communication round")
    ax.set_ylabel(spec.ylabel or "test accuracy")
    ax.set_ylim(0.0, 1.02)


def _plot_envelope(ax, spec: FigureSpec):
    for entry in spec.inputs:
        frame = read_table(entry.path, REQUIRED_COLUMNS["envelope"])
        ax.plot(frame["sample_index"], frame["magnitude"], label=_label(entry, frame),
                linewidth=0.8)
    ax.set_xlabel(spec.xlabel or "sample")
    ax.set_ylabel(spec.ylabel or "|x(t)|")


def empirical_ccdf(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(thresholds, P(X > threshold)) over the sample support."""
    ordered = np.sort(np.asarray(samples, dtype=float))
    n = ordered.size
    prob = 1.0 - np.arange(1, n + 1) / n
    return ordered, prob


def _plot_ccdf(ax, spec: FigureSpec):
    for entry in spec.inputs:
        frame = read_table(entry.path, REQUIRED_COLUMNS["ccdf"])
        x, p = empirical_ccdf(frame["pmepr_db"].to_numpy())
        keep = p >= CCDF_FLOOR
        ax.semilogy(x[keep], p[keep], label=_label(entry, frame))
    ax.set_ylim(CCDF_FLOOR, 1.0)
    ax.set_xlabel(spec.xlabel or "PMEPR threshold (dB)")
    ax.set_ylabel(spec.ylabel or "CCDF")


def _plot_bound(ax, spec: FigureSpec):
    for entry in spec.inputs:
        frame = read_table(entry.path, REQUIRED_COLUMNS["bound"])
        ax.loglog(frame["rounds"], frame["bound"], label=_label(entry, frame))
    ax.set_xlabel(spec.xlabel or "communication rounds")
    ax.set_ylabel(spec.ylabel or "gradient-norm bound")


_RENDERERS = {
    "accuracy": _plot_accuracy,
    "envelope": _plot_envelope,
    "ccdf": _plot_ccdf,
    "bound": _plot_bound,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written image path."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        _RENDERERS[spec.kind](ax, spec)
        if spec.title:
            ax.set_title(spec.title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=150, bbox_inches="tight")
        return out
    finally:
        plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airvote-figures",
        description="Render airvote experiment CSVs into figures",
    )
    parser.add_argument("--spec", help="JSON figure spec (overrides the flags below)")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument("--input", action="append", default=[],
                        metavar="PATH[:LABEL]", help="input CSV, repeatable")
    parser.add_argument("--output", help="output image path")
    parser.add_argument("--title")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    return parser


def spec_from_args(args) -> FigureSpec:
    if args.spec:
        return load_spec(args.spec)
    if not args.kind or not args.output:
        raise FigureError("either --spec or both --kind and --output are required")
    inputs = []
    for item in args.input:
        path, _, label = item.partition(":")
        inputs.append(FigureInput(path=path, label=label or None))
    return FigureSpec(kind=args.kind, inputs=inputs, output=args.output,
                      title=args.title, xlabel=args.xlabel, ylabel=args.ylabel)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(spec_from_args(args))
    except FigureError as exc:
        print(exc, file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
