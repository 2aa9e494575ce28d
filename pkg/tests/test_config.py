import json

import numpy as np
import pytest

from nlcsim.config import PRESETS, ConfigError, RunConfig, initial_fields, preset
from nlcsim.io import write_snapshot
from nlcsim.operators import divergence


def test_defaults_round_trip(tmp_path):
    cfg = RunConfig.from_dict({"params": {"sigmas": [0.5, 0.25]}, "noise": {"seed": 9}})
    cfg.save(tmp_path / "c.json")
    back = RunConfig.load(tmp_path / "c.json")
    assert back == cfg and back.hash == cfg.hash
    assert back.params.sigmas == (0.5, 0.25) and back.seed == 9


def test_hash_ignores_output_section():
    a = RunConfig.from_dict({"output": {"dir": "x"}})
    b = RunConfig.from_dict({"output": {"dir": "y"}})
    c = RunConfig.from_dict({"noise": {"seed": 1}})
    assert a.hash == b.hash != c.hash
    assert len(a.hash) == 64


@pytest.mark.parametrize("bad,path", [
    ({"params": {"mu": -1}}, "params.mu"),
    ({"params": {"sigmas": [0.1, "x"]}}, "params.sigmas[1]"),
    ({"solver": {"scheme": "rk4"}}, "solver.scheme"),
    ({"solver": {"dt": 0.5, "t_end": 0.1}}, "solver.t_end"),
    ({"domain": {"nx": 2}}, "domain.nx"),
    ({"domain": {"size": 2}}, "domain.size"),
    ({"initial": {"preset": "vortex"}}, "initial.preset"),
    ({"initial": {"preset": "snapshot"}}, "initial.velocity_path"),
    ({"initial": {"preset": "anticipating"}}, "initial.channel"),
    ({"noise": {"seed": 1.5}}, "noise.seed"),
    ({"initial": {"preset": "anticipating", "t1": 0.5}, "params": {"sigmas": [1.0]}}, "initial.t1"),
    ({"boundary": {"preset": "file"}}, "boundary.path"),
    ({"output": 3}, "output"),
])
def test_validation_names_field(bad, path):
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict(bad)
    assert e.value.path == path
    assert str(e.value).startswith(path)


def test_invalid_json_file(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "c.json")
    (tmp_path / "d.json").write_text(json.dumps([1]))
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "d.json")


@pytest.mark.parametrize("name", [p for p in PRESETS if p != "snapshot"])
def test_presets_give_admissible_fields(name):
    cfg = preset(name, domain={"nx": 8})
    v0, d0 = initial_fields(cfg)
    assert np.abs(divergence(v0)).max() < 1e-10 and v0.normal_boundary_max() < 1e-14
    assert np.allclose(np.linalg.norm(d0.values, axis=0), 1.0)


def test_equilibrium_preset_is_at_rest():
    v0, d0 = initial_fields(preset("equilibrium", domain={"nx": 8}))
    assert np.abs(v0.u1).max() == 0 and np.ptp(d0.values, axis=(1, 2)).max() == 0


def test_random_smooth_depends_on_seed_and_index():
    cfg = preset("random-smooth", domain={"nx": 8})
    a, _ = initial_fields(cfg, 0)
    b, _ = initial_fields(cfg, 0)
    c, _ = initial_fields(cfg, 1)
    d, _ = initial_fields(preset("random-smooth", domain={"nx": 8}, noise={"seed": 4}), 0)
    assert np.array_equal(a.u1, b.u1)
    assert not np.allclose(a.u1, c.u1) and not np.allclose(a.u1, d.u1)


def test_snapshot_preset_and_boundary_file(tmp_path):
    src = preset("taylor-vortex", domain={"nx": 8})
    v0, d0 = initial_fields(src)
    write_snapshot(tmp_path / "v.nlcf", v0)
    write_snapshot(tmp_path / "d.nlcf", d0)
    cfg = RunConfig.from_dict({"domain": {"nx": 8}, "initial": {
        "preset": "snapshot", "velocity_path": str(tmp_path / "v.nlcf"), "director_path": str(tmp_path / "d.nlcf")},
        "boundary": {"preset": "file", "path": str(tmp_path / "d.nlcf")}})
    v1, d1 = initial_fields(cfg)
    assert np.array_equal(v1.u1, v0.u1) and np.array_equal(d1.values, d0.values)
    wrong = RunConfig.from_dict({"domain": {"nx": 16}, "initial": {
        "preset": "snapshot", "velocity_path": str(tmp_path / "v.nlcf"), "director_path": str(tmp_path / "d.nlcf")}})
    with pytest.raises(ConfigError):
        initial_fields(wrong)


def test_vertical_boundary_override():
    cfg = preset("taylor-vortex", domain={"nx": 8}, initial={"tilt": 0.3}, boundary={"preset": "vertical"})
    _, d0 = initial_fields(cfg)
    m = d0.boundary_mask()
    assert np.array_equal(d0.values[:, m], np.repeat([[0.0], [0.0], [1.0]], m.sum(), axis=1))
