import json
import math
from pathlib import Path

import numpy as np
import pytest

import kpo

ROOT = Path(__file__).resolve().parents[2]


def dimer(delta=0.5, g=0.4):
    return kpo.NetworkParams.identical(2, delta, 1.0, g, kpo.chain_coupling(2, -0.25), 0.1)


def test_single_site_phase_states():
    p = kpo.NetworkParams.identical(1, 0.5, 1.0, 0.4, np.zeros((1, 1)), 0.1)
    stable = [s for s in kpo.find_steady_states(p) if s.stable and abs(s.amplitudes[0]) > 0]
    assert len(stable) == 2
    r2 = 0.5 + math.sqrt(0.4**2 - 0.1**2 / 4)
    for s in stable:
        assert abs(s.amplitudes[0]) ** 2 == pytest.approx(r2, rel=1e-8)


def test_normal_modes_and_threshold():
    basis = kpo.normal_modes(dimer())
    np.testing.assert_allclose(basis.eigen_detunings, [0.25, 0.75], atol=1e-12)
    g = kpo.origin_instability_drive(dimer(delta=0.0))
    assert g == pytest.approx(kpo.lobe_threshold(0.25, 0.1), rel=1e-9)


def test_fluctuation_spectrum_origin():
    p = dimer(delta=0.5, g=0.02)
    spec = kpo.fluctuation_spectrum(p, np.zeros(2, dtype=complex), 1e-3)
    assert spec.factorized
    assert spec.psd_s.shape == spec.freq_grid.shape
    assert np.all(spec.psd_s > 0)


def test_config_and_run(tmp_path):
    cfg = str(ROOT / "configs" / "dimer.json")
    params, digest = kpo.load_config(cfg)
    assert params.n_sites == 2
    assert len(digest) == 16
    assert "states" in kpo.subcommands()
    assert kpo.run("states", cfg, str(tmp_path)) == 0
    doc = json.loads((tmp_path / "states.json").read_text())
    assert doc["config_hash"] == digest


def test_config_error(tmp_path):
    cfg = str(ROOT / "configs" / "dimer.json")
    with pytest.raises(kpo.ConfigError):
        kpo.load_config(cfg, ["--model.no_such_key=1"])
    assert kpo.run("states", cfg, str(tmp_path / "out"), ["--model.no_such_key=1"]) == 2
    assert not (tmp_path / "out").exists()
