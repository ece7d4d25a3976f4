import math
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from snfe import ConfigError, read_snapshot
from snfe.cli import main
from snfe.config import loads, parse_config, preset

DATA = Path(__file__).parent / "data"


class TestParseConfig:
    def test_preset_values(self):
        cfg = parse_config()
        g = cfg.model.grid
        assert (g.l, g.N, g.h) == (50.0, 100, 1.0)
        assert (cfg.time.h_t, cfg.time.n) == (0.02, 200)
        assert cfg.time.T == pytest.approx(4.0)
        assert cfg.model.alpha == 1.0 and math.isinf(cfg.model.v)
        assert cfg.model.kernel.variant == "paper-oscillatory"
        assert cfg.model.firing.variant == "heaviside"
        assert cfg.model.input.offset == -3.39967

    def test_golden(self):
        assert parse_config().dump() == (DATA / "paper-3.1.yaml").read_text()

    def test_preset_is_pure(self):
        a = preset("paper-3.1")
        a["model"]["l"] = 1.0
        assert parse_config().model.grid.l == 50.0

    def test_override(self):
        base = parse_config().to_dict()
        over = parse_config(overrides={"noise.epsilon": 0.05}).to_dict()
        assert over["noise"]["epsilon"] == 0.05
        over["noise"]["epsilon"] = 0.0
        assert over == base

    def test_negative_step(self):
        with pytest.raises(ConfigError) as info:
            parse_config(overrides={"time.h_t": -0.1})
        assert info.value.key == "time.h_t"

    @pytest.mark.parametrize(
        "doc, key",
        [
            ({"model": {"bogus": 1}}, "model.bogus"),
            ({"noise": {"epsilon": "lots"}}, "noise.epsilon"),
            ({"time": {"n": 2.5}}, "time.n"),
            ({"noise": {"master_seed": -1}}, "noise.master_seed"),
            ({"solver": {"nonlinear": "dense"}}, "solver.nonlinear"),
            ({"initial": {"kind": "snapshot"}}, "initial.path"),
            ({"model": {"N": 7}}, "model.N"),
            ({"noise": {"lambda_scale": "other"}}, "noise.lambda_scale"),
        ],
    )
    def test_schema_errors(self, tmp_path, doc, key):
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(doc))
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert info.value.key == key

    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("noise:\n  epsilon: 0.02\n  xi: 2.0\ntime:\n  n: 10\n")
        cfg = parse_config(path, overrides={"noise.xi": 3.0})
        assert (cfg.noise.epsilon, cfg.noise.xi, cfg.time.n) == (0.02, 3.0, 10)

    def test_finite_speed_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("model:\n  v: 12.5\n")
        assert parse_config(path).model.v == 12.5


finite = st.floats(0.01, 100, allow_nan=False)
initials = st.one_of(
    st.just({"kind": "zero"}),
    st.builds(lambda v: {"kind": "constant", "value": v}, st.floats(-50, 50)),
    st.builds(lambda w, h: {"kind": "rectangle", "half_width": w, "height": h}, finite, st.floats(-20, 20)),
    st.builds(lambda p: {"kind": "snapshot", "path": p}, st.text("abc/_.", min_size=1, max_size=12)),
)


@st.composite
def run_configs(draw):
    d = preset("paper-3.1")
    d["model"]["l"] = draw(finite)
    d["model"]["N"] = 2 * draw(st.integers(1, 200))
    d["model"]["alpha"] = draw(finite)
    d["model"]["v"] = draw(st.one_of(st.just(math.inf), finite))
    d["model"]["firing"]["variant"] = draw(st.sampled_from(["heaviside", "sigmoid", "linear"]))
    d["model"]["firing"]["beta"] = draw(finite)
    d["noise"]["epsilon"] = draw(st.floats(0, 1))
    d["noise"]["xi"] = draw(finite)
    d["noise"]["master_seed"] = draw(st.integers(0, 2**64 - 1))
    d["noise"]["lambda_scale"] = draw(st.sampled_from(["mode-index", "wavenumber"]))
    d["time"]["h_t"] = draw(st.floats(1e-4, 1))
    d["time"]["n"] = draw(st.integers(1, 10**6))
    d["initial"] = draw(initials)
    d["ensemble"]["n_paths"] = draw(st.integers(1, 10**4))
    d["ensemble"]["workers"] = draw(st.integers(0, 64))
    d["ensemble"]["record_times"] = draw(st.lists(st.floats(0, 10), max_size=4))
    d["solver"]["nonlinear"] = draw(st.sampled_from(["fft", "naive"]))
    d["stationary"]["seeds"]["three"] = draw(initials)
    return d


@settings(max_examples=100, deadline=None)
@given(run_configs())
def test_roundtrip(doc):
    cfg = parse_config(preset_name=None, overrides={k: v for k, v in _flatten(doc)})
    again = loads(cfg.dump())
    assert again == cfg
    assert again.dump() == cfg.dump()


def _flatten(d, prefix=""):
    for k, v in d.items():
        if isinstance(v, dict) and k not in ("initial", "one", "three", "five"):
            yield from _flatten(v, f"{prefix}{k}.")
        else:
            yield f"{prefix}{k}", v


def _read(path):
    return Path(path).read_bytes()


class TestCli:
    def test_simulate_deterministic(self, tmp_path, capsys):
        args = ["simulate", "--epsilon", "0.01", "--T", "1", "--seed", "7", "--record-times", "0.5"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("path.csv", "final.txt", "snapshot_0.5.txt"):
            assert _read(tmp_path / "a" / name) == _read(tmp_path / "b" / name)
        lines = (tmp_path / "a" / "path.csv").read_text().splitlines()
        assert lines[0] == "t,u_max,u_min" and len(lines) == 52

    def test_simulate_one_bump_profile(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path)]) == 0
        snap = read_snapshot(tmp_path / "final.txt")
        active = snap.values > 0
        # a single contiguous active region around the origin
        assert np.count_nonzero(np.diff(active.astype(int)) == 1) == 1
        assert active[np.argmin(np.abs(snap.x))]
        assert 15.8 <= snap.values.max() <= 16.6

    def test_three_bump_fixed_point(self, tmp_path):
        assert main(["find-stationary", "--which", "three", "--out", str(tmp_path)]) == 0
        snap_path = tmp_path / "stationary_three.txt"
        three = read_snapshot(snap_path)
        assert three.values.max() > 20 and three.values.min() < -12.5
        assert main(["simulate", "--initial-snapshot", str(snap_path), "--out", str(tmp_path / "re")]) == 0
        final = read_snapshot(tmp_path / "re" / "final.txt")
        assert np.max(np.abs(final.values - three.values)) < 1e-6

    def test_find_stationary_refeed(self, tmp_path, capsys):
        assert main(["find-stationary", "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        assert main(["find-stationary", "--initial-snapshot", str(tmp_path / "stationary_one.txt"), "--out", str(tmp_path / "r")]) == 0
        assert "steps=0" in capsys.readouterr().out

    def test_ensemble_single_path(self, tmp_path):
        assert main(["ensemble", "--paths", "1", "--epsilon", "0.01", "--T", "0.2", "--out", str(tmp_path)]) == 0
        rows = [list(map(float, r.split(","))) for r in (tmp_path / "stats.csv").read_text().splitlines()[1:]]
        for t, mm, nm, mn, nn, em, en in rows:
            assert mm == nm == em and mn == nn == en
        assert (tmp_path / "hist_min.csv").exists() and (tmp_path / "metadata.json").exists()
        assert (tmp_path / "meanfield_0.2.csv").exists()

    def test_exit_codes(self, tmp_path, capsys):
        assert main(["simulate", "--ht", "-1", "--out", str(tmp_path)]) == 2
        assert "time.h_t" in capsys.readouterr().err
        assert main(["simulate", "--T", "0.013", "--out", str(tmp_path)]) == 2
        assert main(["find-stationary", "--set", "stationary.max_steps=5", "--out", str(tmp_path)]) == 4
        assert main(["simulate", "--set", "model.input.offset=.inf", "--out", str(tmp_path)]) == 3
        assert main(["simulate", "--preset", "nope"]) == 2
        assert main(["simulate", "--set", "noise.nope=1"]) == 2
