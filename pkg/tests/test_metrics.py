import numpy as np
import pytest
from hypothesis import given, strategies as st

from mapcsim import compute_metrics, discard_rule, percentile, priority_histogram
from mapcsim.mac import EpisodeResult
from mapcsim.metrics import worst_tail_delay


def test_percentile_nearest_rank_examples():
    assert percentile(list(range(1, 101)), 99) == 99
    assert percentile([7.5], 50) == 7.5
    assert percentile([7.5], 99) == 7.5
    assert percentile([5, 1, 3], 50) == 3
    assert percentile([], 99) is None


def test_percentile_rejects_bad_p():
    with pytest.raises(ValueError):
        percentile([1.0], 0)
    with pytest.raises(ValueError):
        percentile([1.0], 100)


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=200), st.floats(0.5, 99.5))
def test_percentile_is_an_order_statistic(samples, p):
    v = percentile(samples, p)
    assert v in samples
    assert sum(1 for s in samples if s <= v) >= np.ceil(p / 100 * len(samples))


def test_discard_rule_boundaries():
    assert discard_rule({"tat": 0.072, "mnp": 0.5})  # 72 ms best -> keep
    assert not discard_rule({"a": 0.2, "b": 0.15})
    assert not discard_rule({"a": 0.100})  # strictly below required
    assert discard_rule({"a": float("inf"), "b": 0.099})
    with pytest.raises(ValueError):
        discard_rule({})


def make_result(delays_per_sta, arrivals, trace=None):
    n = len(delays_per_sta)
    delays = [np.asarray(d, dtype=float) for d in delays_per_sta]
    delivered = np.array([len(d) for d in delays])
    return EpisodeResult(
        trace=trace or [],
        delays_per_sta=delays,
        arrivals=np.asarray(arrivals),
        delivered=delivered,
        dropped=np.zeros(n, dtype=int),
        residual=np.asarray(arrivals) - delivered,
        txop_count=len([r for r in (trace or []) if r.get("action") is not None]),
        collision_count=0,
        duration=1.0,
    )


def test_worst_tail_over_stas():
    per_sta, worst = worst_tail_delay(
        [np.linspace(0.001, 0.1, 100), np.linspace(0.001, 0.2, 100)],
        arrivals=np.array([100, 100]),
    )
    assert per_sta[0] == pytest.approx(0.099, abs=1e-9)
    assert worst == per_sta[1]


def test_starved_sta_has_infinite_tail():
    per_sta, worst = worst_tail_delay(
        [np.array([0.01]), np.empty(0)], arrivals=np.array([1, 5])
    )
    assert per_sta[1] == float("inf") and worst == float("inf")


def test_sta_with_no_traffic_is_skipped():
    per_sta, worst = worst_tail_delay(
        [np.array([0.01]), np.empty(0)], arrivals=np.array([1, 0])
    )
    assert per_sta[1] is None and worst == 0.01


def test_priority_histogram_normalized_and_binned():
    trace = [
        {"action": 0, "priority_rank": 1.0},
        {"action": 1, "priority_rank": 0.97},
        {"action": None},  # collision records are ignored
        {"action": 2, "priority_rank": 0.0},
        {"action": 3, "priority_rank": 0.5},
    ]
    hist = priority_histogram(trace, bins=5)
    assert sum(hist) == pytest.approx(1.0)
    assert hist[4] == pytest.approx(0.5)  # two in the top bin
    assert hist[0] == pytest.approx(0.25)
    assert hist[2] == pytest.approx(0.25)


def test_priority_histogram_empty_trace():
    assert priority_histogram([], bins=5) == [0.0] * 5


def test_compute_metrics_aggregates():
    trace = [{"action": 0, "priority_rank": 1.0}]
    res = make_result([[0.01, 0.02], [0.03]], [3, 1], trace=trace)
    m = compute_metrics(res)
    assert m.worst_p99 == 0.03
    assert m.mean_delay == pytest.approx(0.02)
    assert m.delay_count == 3
    assert m.priority_hist[4] == 1.0
