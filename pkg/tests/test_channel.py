import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mapcsim import (
    ChannelParams,
    DeploymentConfig,
    McsTable,
    PhyParams,
    data_rate,
    generate_deployment,
    path_loss_db,
    realize_channel,
    select_mcs,
    sinr,
)

P = ChannelParams()
PHY = PhyParams()
TABLE = McsTable.default()


def loss_oracle(d, walls, fc=6.0, bp=10.0):
    # independent evaluation of the enterprise model
    v = 40.05 + 20 * math.log10(min(d, bp) * fc / 2.4) + 7 * walls
    if d > bp:
        v += 35 * math.log10(d / bp)
    return v


@pytest.mark.parametrize(
    "d,walls,expected",
    [(1.0, 0, 48.01), (10.0, 0, 68.01), (30.0, 1, 91.71)],
)
def test_path_loss_reference_points(d, walls, expected):
    assert path_loss_db(d, walls, 0.0, P) == pytest.approx(expected, abs=0.01)
    assert path_loss_db(d, walls, 0.0, P) == pytest.approx(loss_oracle(d, walls), abs=1e-9)


def test_path_loss_continuous_at_breakpoint():
    eps = 1e-9
    below = path_loss_db(P.breakpoint_m - eps, 0, 0.0, P)
    above = path_loss_db(P.breakpoint_m + eps, 0, 0.0, P)
    assert abs(below - above) < 1e-6


def test_path_loss_shadowing_term_additive():
    assert path_loss_db(5.0, 2, 3.5, P) == pytest.approx(path_loss_db(5.0, 2, 0.0, P) + 3.5)


def test_path_loss_rejects_below_one_meter():
    with pytest.raises(ValueError):
        path_loss_db(0.99, 0, 0.0, P)


def test_realize_channel_gains_and_determinism():
    dep = generate_deployment(DeploymentConfig(), seed=2)
    a = realize_channel(dep, P, seed=5)
    b = realize_channel(dep, P, seed=5)
    assert np.array_equal(a.gain, b.gain)
    assert np.all(a.gain > 0) and np.all(a.gain < 1)
    c = realize_channel(dep, P, seed=6)
    assert not np.array_equal(a.gain, c.gain)


def test_realized_gain_matches_path_loss_when_unshadowed():
    dep = generate_deployment(DeploymentConfig(ap_count=1, stas_per_ap=1), seed=4)
    quiet = ChannelParams(shadowing_sigma_db=0.0)
    ch = realize_channel(dep, quiet, seed=1)
    d = dep.sta_ap_distance(0)
    assert ch.gain[0, 0] == pytest.approx(10 ** (-loss_oracle(d, 0) / 10), rel=1e-12)


def test_sinr_pure_snr_and_interference():
    dep = generate_deployment(DeploymentConfig(ap_count=2, stas_per_ap=1), seed=8)
    ch = realize_channel(dep, P, seed=8)
    snr = sinr(0, 0, frozenset(), ch, P)
    assert snr == pytest.approx(P.tx_power_w * ch.gain[0, 0] / P.noise_w, rel=1e-12)
    with_interf = sinr(0, 0, frozenset({1}), ch, P)
    assert with_interf < snr


def test_sinr_symmetric_interferer_near_unity():
    # identical gain and power on serving and interfering paths, no noise
    class OneGain:
        gain = np.array([[1e-6, 1e-6]])

    quiet = ChannelParams(noise_w=1e-30)
    assert sinr(0, 0, frozenset({1}), OneGain(), quiet) == pytest.approx(1.0, rel=1e-6)


def test_sinr_reference_value():
    class FixedGain:
        gain = np.array([[1.58e-5]])

    assert sinr(0, 0, frozenset(), FixedGain(), P) == pytest.approx(0.2 * 1.58e-5 / 3.2e-13, rel=1e-9)


def test_sinr_rejects_self_interference():
    dep = generate_deployment(DeploymentConfig(ap_count=2, stas_per_ap=1), seed=8)
    ch = realize_channel(dep, P, seed=8)
    with pytest.raises(ValueError):
        sinr(0, 0, frozenset({0}), ch, P)


def test_select_mcs_boundaries():
    assert select_mcs(TABLE.min_snr_db[0] - 0.1, TABLE) is None
    for k in range(len(TABLE)):
        assert select_mcs(float(TABLE.min_snr_db[k]), TABLE) == k  # inclusive threshold
    assert select_mcs(float("inf"), TABLE) == 13


@given(st.floats(-50, 100), st.floats(-50, 100))
def test_select_mcs_monotone(s1, s2):
    lo, hi = sorted((s1, s2))
    a, b = select_mcs(lo, TABLE), select_mcs(hi, TABLE)
    if a is not None:
        assert b is not None and a <= b


@pytest.mark.parametrize(
    "mcs,expected_mbps",
    [(0, 72.06), (11, 1201.0), (13, 1441.2)],
)
def test_data_rate_reference_points(mcs, expected_mbps):
    assert data_rate(mcs, TABLE, PHY) / 1e6 == pytest.approx(expected_mbps, abs=0.05)


def test_data_rate_strictly_increasing():
    rates = [data_rate(k, TABLE, PHY) for k in range(len(TABLE))]
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_mcs_csv_roundtrip(tmp_path):
    path = tmp_path / "mcs.csv"
    TABLE.to_csv(path)
    back = McsTable.from_csv(path)
    assert np.array_equal(back.bits_per_symbol, TABLE.bits_per_symbol)
    assert np.allclose(back.coding_rate, TABLE.coding_rate)
    assert np.array_equal(back.min_snr_db, TABLE.min_snr_db)


def test_mcs_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        McsTable.from_csv(path)


def test_mcs_csv_rejects_gaps(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text(
        "index,n_bps,coding_rate_num,coding_rate_den,min_snr_db\n"
        "0,1,1,2,0\n2,2,1,2,3\n"
    )
    with pytest.raises(ValueError, match="gaps"):
        McsTable.from_csv(path)


def test_mcs_table_validation_rejects_nonmonotone():
    t = McsTable.default()
    t.min_snr_db = t.min_snr_db.copy()
    t.min_snr_db[5] = t.min_snr_db[6]
    with pytest.raises(ValueError):
        t.validate()
