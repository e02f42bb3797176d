import numpy as np
import pytest

from dualband.channel import (ChannelSet, PathParams, gen_channels, load_channels,
                              save_channels, steering_alpha, steering_beta,
                              steering_gamma, steering_mm)
from dualband.errors import DualbandError
from dualband.geometry import ArrayConfig


CFG = ArrayConfig(n_row=14, n_col=14, n_s=4, h_s=6, v_s=6)


def test_steering_gamma_values():
    v = steering_gamma(2, 1.0, 1.0 / 6.0)
    assert v[0] == 1.0
    assert v[1] == pytest.approx(np.exp(1j * np.pi / 6))
    assert np.allclose(np.abs(v), 1.0)


def test_steering_alpha_half_wavelength():
    v = steering_alpha(4, 0.5)
    expect = np.exp(1j * np.pi * np.arange(4) * 0.5)
    assert np.allclose(v, expect)


def test_steering_norms():
    beta = steering_beta(CFG, 0.3, -0.7)
    assert beta.shape == (169,)
    assert np.linalg.norm(beta) ** 2 == pytest.approx(169.0)
    am = steering_mm(CFG, 0.3, -0.7)
    assert am.shape == (196,)
    assert np.linalg.norm(am) ** 2 == pytest.approx(196.0)


def test_steering_beta_kron_structure():
    el, az = 0.25, -0.4
    beta = steering_beta(CFG, el, az)
    manual = np.kron(steering_gamma(13, el, CFG.lambda_ratio),
                     steering_gamma(13, az, CFG.lambda_ratio))
    assert np.allclose(beta, manual)


def test_path_angle_validation():
    with pytest.raises(DualbandError):
        PathParams(gain=1.0, az=1.5, el=0.0)


def test_gen_channels_deterministic():
    a = gen_channels(CFG, k_s=4, k_m=4, l_s=5, l_m=3, seed=11)
    b = gen_channels(CFG, k_s=4, k_m=4, l_s=5, l_m=3, seed=11)
    c = gen_channels(CFG, k_s=4, k_m=4, l_s=5, l_m=3, seed=12)
    assert np.array_equal(a.h_sub, b.h_sub)
    assert np.array_equal(a.h_mm, b.h_mm)
    assert not np.allclose(a.h_sub, c.h_sub)


def test_channel_shapes_and_verify():
    chan = gen_channels(CFG, k_s=4, k_m=3, l_s=5, l_m=3, seed=0)
    assert chan.h_sub.shape == (169, 4)
    assert chan.h_mm.shape == (196, 3)
    assert len(chan.paths_sub) == 4 and len(chan.paths_sub[0]) == 5
    chan.verify()


def test_single_path_column_is_scaled_steering():
    chan = gen_channels(CFG, k_s=1, k_m=1, l_s=1, l_m=1, seed=3)
    p = chan.paths_sub[0][0]
    expect = p.gain * steering_beta(CFG, p.el, p.az)
    assert np.allclose(chan.h_sub[:, 0], expect)


def test_mean_channel_energy():
    # each entry is a sum of L unit-modulus terms with CN(0,1) gains / sqrt(L)
    acc = 0.0
    n = 40
    for seed in range(n):
        chan = gen_channels(CFG, k_s=1, k_m=1, l_s=5, l_m=3, seed=seed)
        acc += np.linalg.norm(chan.h_sub[:, 0]) ** 2
    assert acc / n == pytest.approx(169.0, rel=0.25)


def test_save_load_roundtrip(tmp_path):
    chan = gen_channels(CFG, k_s=2, k_m=2, l_s=4, l_m=3, seed=9)
    path = tmp_path / "chan.json"
    save_channels(chan, str(path))
    back = load_channels(str(path))
    assert np.array_equal(back.h_sub, chan.h_sub)
    assert np.array_equal(back.h_mm, chan.h_mm)
    assert back.seed == 9
    assert back.cfg == chan.cfg


def test_load_rejects_tampered_matrices(tmp_path):
    import json
    chan = gen_channels(CFG, k_s=2, k_m=2, l_s=4, l_m=3, seed=9)
    path = tmp_path / "chan.json"
    save_channels(chan, str(path))
    doc = json.loads(path.read_text())
    doc["h_sub"][0] += 0.5
    path.write_text(json.dumps(doc))
    with pytest.raises(DualbandError):
        load_channels(str(path))
