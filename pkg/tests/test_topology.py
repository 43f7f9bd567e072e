"""Network model: min-bandwidth rule, Pareto delays, arrival arithmetic."""

import json
import math

import numpy as np
import pytest

from chainsim.errors import DatasetError
from chainsim.rng import PARETO_ALPHA, new_stream, pareto_cv20, round_half_up
from chainsim.topology import (
    NetworkModel,
    Region,
    RelayOverlay,
    load_network_dataset,
)

MB = 1_000_000


def two_region_model(delay_ab=100.0):
    regions = [
        Region("Europe", 25 * MB, 30 * MB),
        Region("North America", 10 * MB, 8 * MB),
    ]
    delays = {
        "Europe": {"Europe": 20.0, "North America": delay_ab},
        "North America": {"Europe": delay_ab, "North America": 25.0},
    }
    return NetworkModel("test", regions, delays,
                        {"Europe": 0.5, "North America": 0.5})


def test_min_rule():
    m = two_region_model()
    # Europe upstream 25 Mb/s vs North America downstream 8 Mb/s
    assert m.link_bandwidth("Europe", "North America") == 8 * MB


def test_relay_pair_multiplies_bandwidth():
    m = two_region_model()
    overlay = RelayOverlay(members=frozenset({1, 2}), bandwidth_multiplier=10.0)
    bw = m.link_bandwidth(
        "Europe", "North America",
        sender_in_relay=True, receiver_in_relay=True, overlay=overlay,
    )
    assert bw == 80 * MB


def test_relay_single_member_no_multiplier():
    m = two_region_model()
    overlay = RelayOverlay(members=frozenset({1}), bandwidth_multiplier=10.0)
    bw = m.link_bandwidth(
        "Europe", "North America",
        sender_in_relay=True, receiver_in_relay=False, overlay=overlay,
    )
    assert bw == 8 * MB


def test_link_bandwidth_is_order_sensitive():
    m = two_region_model()
    assert m.link_bandwidth("Europe", "North America") != m.link_bandwidth(
        "North America", "Europe"
    )


def test_unknown_region_is_config_error():
    m = two_region_model()
    with pytest.raises(DatasetError):
        m.link_bandwidth("Europe", "Atlantis")
    with pytest.raises(DatasetError):
        Region("Atlantis", MB, MB)


def test_pareto_samples_bounded_below_by_xm():
    st = new_stream(3)
    mean = 100.0
    xm = mean * (PARETO_ALPHA - 1.0) / PARETO_ALPHA
    assert math.isclose(xm, 83.6, abs_tol=0.05)
    for _ in range(100_000):
        v = pareto_cv20(st, mean)
        assert xm <= v < float("inf")


def test_pareto_mean_and_cv_large_sample():
    st = new_stream(17)
    n = 1_000_000
    total = 0.0
    total2 = 0.0
    for _ in range(n):
        v = pareto_cv20(st, 100.0)
        total += v
        total2 += v * v
    mean = total / n
    std = math.sqrt(total2 / n - mean * mean)
    assert abs(mean - 100.0) < 1.0  # within 1%
    assert abs(std - 20.0) < 1.0  # CV 20% within 5%


def test_zero_mean_delay_rejected_at_load(tmp_path):
    raw = {
        "regions": [
            {"name": "Europe", "upstream_bps": MB, "downstream_bps": MB},
        ],
        "delay_ms": {"Europe": {"Europe": 0}},
        "region_weights": {"Europe": 1.0},
    }
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(DatasetError):
        load_network_dataset(p)


def test_incomplete_delay_matrix_rejected(tmp_path):
    raw = {
        "regions": [
            {"name": "Europe", "upstream_bps": MB, "downstream_bps": MB},
            {"name": "Asia", "upstream_bps": MB, "downstream_bps": MB},
        ],
        "delay_ms": {
            "Europe": {"Europe": 10, "Asia": 200},
            "Asia": {"Asia": 10},
        },
        "region_weights": {"Europe": 0.5, "Asia": 0.5},
    }
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(DatasetError):
        load_network_dataset(p)


def test_missing_dataset_file():
    with pytest.raises(DatasetError):
        load_network_dataset("no-such-dataset")


def test_bundled_dataset_loads_with_six_regions():
    m = load_network_dataset("network-2015")
    assert len(m.regions) == 6
    assert abs(sum(m.region_weights.values()) - 1.0) < 1e-9
    assert m.delay_mean_ms.shape == (6, 6)
    assert (m.delay_mean_ms > 0).all()


def test_control_message_arrival_is_delay_only():
    m = two_region_model()
    st_a = new_stream(5)
    st_b = new_stream(5)
    arrival = m.message_arrival_time(1000, 0, "Europe", "North America", st_a)
    expected = 1000 + round_half_up(pareto_cv20(st_b, 100.0))
    assert arrival == expected


def test_block_arrival_hand_arithmetic():
    # 534 KiB over 8 Mb/s: 546816 bytes * 8000 / 8e6 = 546.816 ms -> 547 ms
    m = two_region_model()
    size = 534 * 1024
    st_a = new_stream(5)
    st_b = new_stream(5)
    arrival = m.message_arrival_time(0, size, "Europe", "North America", st_a)
    delay = round_half_up(pareto_cv20(st_b, 100.0))
    assert arrival == 547 + delay


def test_relay_pair_transmission_term_tenth():
    m = two_region_model()
    size = 534 * 1024
    bw = m.link_bandwidth("Europe", "North America")
    overlay = RelayOverlay(bandwidth_multiplier=10.0)
    bw10 = m.link_bandwidth(
        "Europe", "North America",
        sender_in_relay=True, receiver_in_relay=True, overlay=overlay,
    )
    tx = size * 8000.0 / bw
    tx10 = size * 8000.0 / bw10
    assert tx10 == pytest.approx(tx / 10.0, rel=1e-12)


def test_multiplier_one_has_no_effect():
    m = two_region_model()
    overlay = RelayOverlay(bandwidth_multiplier=1.0)
    assert m.link_bandwidth(
        "Europe", "North America",
        sender_in_relay=True, receiver_in_relay=True, overlay=overlay,
    ) == m.link_bandwidth("Europe", "North America")


def test_multiplier_below_one_rejected():
    with pytest.raises(DatasetError):
        RelayOverlay(bandwidth_multiplier=0.5)


def test_weights_must_sum_to_one():
    regions = [Region("Europe", MB, MB)]
    delays = {"Europe": {"Europe": 10}}
    with pytest.raises(DatasetError):
        NetworkModel("w", regions, delays, {"Europe": 0.9})
