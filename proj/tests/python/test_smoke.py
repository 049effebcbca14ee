import math

import numpy as np
import pytest

import cbdbp


def test_complexity_paper_points():
    ov = cbdbp.default_overlap(cbdbp.beta2_from_D(17.0, 1550.0) * 1200.0, 93e9 * 9 / 8, 2)
    assert ov == 1792
    values = [cbdbp.rms_per_2d(9, 8, 16384, ov, nst, 2) for nst in (1, 3, 5, 15)]
    for got, paper in zip(values, (74, 161, 248, 681)):
        assert abs(got - paper) <= 2


def test_beta2():
    assert cbdbp.beta2_from_D(17.0, 1550.0) == pytest.approx(-21.682619391414892, rel=1e-12)


def test_config_and_errors():
    cfg = cbdbp.config({"wdm": {"num_channels": 1}})
    assert cfg["wdm"]["num_channels"] == 1
    assert cbdbp.preset("paper-full")["link"]["num_spans"] == 15
    with pytest.raises(ValueError, match="/wdm/bogus"):
        cbdbp.config({"wdm": {"bogus": 1}})


def test_zero_taps_match_edc():
    rng = np.random.default_rng(1)
    n = 4096
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    y = rng.normal(size=n) + 1j * rng.normal(size=n)
    fs = 36e9
    length = 800.0
    beta2 = cbdbp.beta2_from_D(17.0, 1550.0) * length
    ov = cbdbp.default_overlap(beta2, fs, 2)
    ex, ey = cbdbp.edc(x, y, fs, beta2, 1024, ov)
    cx, cy = cbdbp.cb_essfm(x, y, fs, 3, 2, 0.3, length, 1024, ov)
    assert ex.shape == (n,)
    assert np.max(np.abs(cx - ex)) < 1e-10 * np.max(np.abs(ex))
    assert np.max(np.abs(cy - ey)) < 1e-10 * np.max(np.abs(ey))
    # On a single circular block dispersion compensation is all-pass.
    wx, wy = cbdbp.edc(x, y, fs, beta2, n, 0)
    energy = np.sum(np.abs(x) ** 2 + np.abs(y) ** 2)
    assert np.sum(np.abs(wx) ** 2 + np.abs(wy) ** 2) == pytest.approx(energy, rel=1e-12)


def test_small_simulation():
    rows = cbdbp.simulate(
        {
            "wdm": {"num_channels": 1},
            "link": {"num_spans": 2, "forward_steps_per_span": 20},
            "dbp": {"receivers": ["edc"], "block_length": 1024},
            "power_grid_dbm": [0.0],
            "num_symbols": 4096,
            "train_symbols": 2048,
        }
    )
    assert len(rows) == 1
    assert rows[0]["receiver_kind"] == "edc"
    assert math.isfinite(rows[0]["snr_db"]) and rows[0]["snr_db"] > 15.0
