import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from airvote_figures import FigureError, FigureInput, FigureSpec, empirical_ccdf, load_spec, render
from airvote_figures.render import main


def write_rounds_csv(path: Path, rounds=20, seed=0):
    rng = np.random.default_rng(seed)
    acc = np.minimum(1.0, np.linspace(0.5, 0.99, rounds) + rng.normal(0, 0.01, rounds))
    lines = ["# config=deadbeef0123", "round,test_accuracy,mv_error_rate,wall_ms"]
    lines += [f"{i},{a},{rng.uniform(0, 0.2)},0.0" for i, a in enumerate(acc)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_pmepr_csv(path: Path, n=200, mean=8.0, seed=1):
    rng = np.random.default_rng(seed)
    lines = ["# config=deadbeef0123", "scheme,m_pulse,symbol_index,pmepr_db"]
    lines += [f"ppm,1,{i},{v}" for i, v in enumerate(rng.normal(mean, 1.0, n))]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_envelope_csv(path: Path, n=256):
    t = np.arange(n)
    mag = np.abs(np.sin(2 * np.pi * t / 64)) + 0.1
    lines = ["# config=deadbeef0123", "scheme,sample_index,magnitude"]
    lines += [f"ppm,{i},{m}" for i, m in zip(t, mag)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_bound_csv(path: Path):
    lines = ["# config=deadbeef0123", "rounds,bound"]
    lines += [f"{n},{2.0 / np.sqrt(n)}" for n in (10, 100, 1000, 10000)]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestRenderKinds:
    def test_accuracy_two_curves(self, tmp_path):
        a = write_rounds_csv(tmp_path / "a.csv", seed=0)
        b = write_rounds_csv(tmp_path / "b.csv", seed=1)
        out = render(FigureSpec(
            kind="accuracy",
            inputs=[FigureInput(str(a), "ppm"), FigureInput(str(b), "ideal")],
            output=str(tmp_path / "acc.png"),
        ))
        assert out.exists() and out.stat().st_size > 0

    def test_envelope(self, tmp_path):
        env = write_envelope_csv(tmp_path / "envelope.csv")
        out = render(FigureSpec(kind="envelope", inputs=[FigureInput(str(env))],
                                output=str(tmp_path / "env.png")))
        assert out.exists()

    def test_ccdf(self, tmp_path):
        p = write_pmepr_csv(tmp_path / "pmepr.csv")
        out = render(FigureSpec(kind="ccdf", inputs=[FigureInput(str(p))],
                                output=str(tmp_path / "ccdf.png")))
        assert out.exists()

    def test_bound(self, tmp_path):
        b = write_bound_csv(tmp_path / "bound.csv")
        out = render(FigureSpec(kind="bound", inputs=[FigureInput(str(b))],
                                output=str(tmp_path / "bound.png")))
        assert out.exists()

    def test_deterministic_output(self, tmp_path):
        b = write_bound_csv(tmp_path / "bound.csv")
        spec = FigureSpec(kind="bound", inputs=[FigureInput(str(b))],
                          output=str(tmp_path / "bound.png"))
        first = render(spec).read_bytes()
        second = render(spec).read_bytes()
        assert first == second

    def test_label_falls_back_to_scheme_column(self, tmp_path):
        p = write_pmepr_csv(tmp_path / "pmepr.csv")
        render(FigureSpec(kind="ccdf", inputs=[FigureInput(str(p))],
                          output=str(tmp_path / "c.png")))  # label read from 'scheme'


class TestErrors:
    def test_missing_column_is_named(self, tmp_path):
        path = write_rounds_csv(tmp_path / "r.csv")
        text = path.read_text().replace("test_accuracy", "accuracy")
        path.write_text(text)
        spec = FigureSpec(kind="accuracy", inputs=[FigureInput(str(path))],
                          output=str(tmp_path / "x.png"))
        with pytest.raises(FigureError, match="test_accuracy"):
            render(spec)

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(FigureError, match="unknown figure kind"):
            FigureSpec(kind="sparkline", inputs=[FigureInput("x")], output="y")

    def test_no_inputs(self):
        with pytest.raises(FigureError, match="at least one input"):
            FigureSpec(kind="ccdf", inputs=[], output="y")

    def test_missing_file(self, tmp_path):
        spec = FigureSpec(kind="ccdf", inputs=[FigureInput(str(tmp_path / "nope.csv"))],
                          output=str(tmp_path / "x.png"))
        with pytest.raises(FigureError, match="cannot read"):
            render(spec)

    def test_empty_data(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("# config=x\npmepr_db\n")
        spec = FigureSpec(kind="ccdf", inputs=[FigureInput(str(p))],
                          output=str(tmp_path / "x.png"))
        with pytest.raises(FigureError, match="no data rows"):
            render(spec)

    def test_spec_validation(self, tmp_path):
        bad = tmp_path / "spec.json"
        bad.write_text(json.dumps({"kind": "ccdf", "inputs": ["a.csv"]}))
        with pytest.raises(FigureError, match="output"):
            load_spec(bad)
        bad.write_text(json.dumps({"kind": "ccdf", "inputs": ["a.csv"],
                                   "output": "x.png", "theme": "dark"}))
        with pytest.raises(FigureError, match="theme"):
            load_spec(bad)


class TestCli:
    def test_flags(self, tmp_path, capsys):
        b = write_bound_csv(tmp_path / "bound.csv")
        code = main(["--kind", "bound", "--input", str(b),
                     "--output", str(tmp_path / "out.png")])
        assert code == 0
        assert (tmp_path / "out.png").exists()

    def test_input_labels(self, tmp_path):
        a = write_rounds_csv(tmp_path / "a.csv")
        code = main(["--kind", "accuracy", "--input", f"{a}:ppm",
                     "--output", str(tmp_path / "out.png")])
        assert code == 0

    def test_spec_file(self, tmp_path):
        p = write_pmepr_csv(tmp_path / "p.csv")
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({
            "kind": "ccdf",
            "inputs": [{"path": str(p), "label": "ppm"}],
            "output": str(tmp_path / "ccdf.png"),
            "title": "PMEPR",
        }))
        assert main(["--spec", str(spec_path)]) == 0

    def test_missing_column_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("# config=x\nscheme,symbol_index,value\nppm,0,1.0\n")
        code = main(["--kind", "ccdf", "--input", str(p),
                     "--output", str(tmp_path / "x.png")])
        assert code == 1
        assert "pmepr_db" in capsys.readouterr().err

    def test_malformed_csv_exit_code(self, tmp_path, capsys):
        p = tmp_path / "garbage.csv"
        p.write_text('a,b\n1,2,3,"\n')
        code = main(["--kind", "ccdf", "--input", str(p),
                     "--output", str(tmp_path / "x.png")])
        assert code == 1


def test_empirical_ccdf_monotone():
    rng = np.random.default_rng(2)
    x, p = empirical_ccdf(rng.normal(size=500))
    assert np.all(np.diff(x) >= 0)
    assert np.all(np.diff(p) <= 0)
    assert p[0] == pytest.approx(1.0 - 1 / 500)


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    """Small real simulator outputs produced through the CLI."""
    root = tmp_path_factory.mktemp("artifacts")
    cfg = root / "cfg.yaml"
    cfg.write_text("\n".join([
        "scheme: ppm",
        "seed: 42",
        f"output_dir: {root / 'train-ppm'}",
        "channel: {profile: epa, t_sync_s: 55.6e-9, snr_db: 10.0}",
        "train: {rounds: 4, k: 2, n_b: 16}",
    ]))

    def run(*args):
        proc = subprocess.run(
            [sys.executable, "-m", "airvote.cli", *args],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
    run("train", "--config", str(cfg))
    run("train", "--config", str(cfg), "--scheme", "ideal",
        "--output", str(root / "train-ideal"))
    run("pmepr", "--config", str(cfg), "--symbols", "64",
        "--output", str(root / "pmepr-ppm"))
    run("pmepr", "--config", str(cfg), "--scheme", "obda", "--symbols", "64",
        "--output", str(root / "pmepr-obda"))
    run("analyze", "--config", str(cfg), "--output", str(root / "analysis"))
    return root


class TestAgainstSimulatorOutputs:
    """Render every figure kind from real simulator artifacts."""

    def test_all_four_kinds_render(self, artifacts, tmp_path):
        specs = [
            FigureSpec(kind="accuracy",
                       inputs=[FigureInput(str(artifacts / "train-ppm" / "rounds.csv"), "ppm"),
                               FigureInput(str(artifacts / "train-ideal" / "rounds.csv"), "ideal")],
                       output=str(tmp_path / "accuracy.png")),
            FigureSpec(kind="envelope",
                       inputs=[FigureInput(str(artifacts / "pmepr-ppm" / "envelope.csv")),
                               FigureInput(str(artifacts / "pmepr-obda" / "envelope.csv"))],
                       output=str(tmp_path / "envelope.png")),
            FigureSpec(kind="ccdf",
                       inputs=[FigureInput(str(artifacts / "pmepr-ppm" / "pmepr.csv")),
                               FigureInput(str(artifacts / "pmepr-obda" / "pmepr.csv"))],
                       output=str(tmp_path / "ccdf.png")),
            FigureSpec(kind="bound",
                       inputs=[FigureInput(str(artifacts / "analysis" / "bound_vs_rounds.csv"))],
                       output=str(tmp_path / "bound.png")),
        ]
        for spec in specs:
            assert render(spec).exists()

    def test_dropping_column_from_real_output_names_it(self, artifacts, tmp_path):
        src = (artifacts / "train-ppm" / "rounds.csv").read_text()
        lines = src.splitlines()
        header = lines[1].split(",")
        drop = header.index("mv_error_rate")
        rebuilt = [lines[0], ",".join(c for c in header if c != "mv_error_rate")]
        rebuilt += [",".join(v for i, v in enumerate(line.split(",")) if i != drop)
                    for line in lines[2:]]
        broken = tmp_path / "rounds.csv"
        broken.write_text("\n".join(rebuilt) + "\n")

        spec = FigureSpec(kind="accuracy", inputs=[FigureInput(str(broken))],
                          output=str(tmp_path / "x.png"))
        render(spec)   # accuracy does not need mv_error_rate

        text = broken.read_text().replace("test_accuracy", "ta")
        broken.write_text(text)
        with pytest.raises(FigureError, match="test_accuracy"):
            render(spec)
