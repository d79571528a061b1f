import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mapcsim import ArrivalStream, StaQueue, TrafficProfile
from mapcsim.traffic import BURSTY, POISSON


def make_stream(model, load_mbps=12.0, seed=0, **kw):
    profile = TrafficProfile(model=model, load_bps=load_mbps * 1e6, **kw)
    return ArrivalStream(profile, np.random.default_rng(seed))


# -- arrival generation -------------------------------------------------


def test_poisson_rate_long_run():
    s = make_stream(POISSON, 12.0, seed=1)
    ts = s.arrivals_in(0.0, 100.0)
    # rate = 12e6 / 12000 = 1000 pkt/s; 3 sigma of Poisson(1e5)
    assert abs(len(ts) - 100_000) < 3 * np.sqrt(100_000)
    assert np.all(np.diff(ts) >= 0)
    assert ts[0] >= 0 and ts[-1] < 100.0


def test_bursty_matches_poisson_mean_rate():
    sp = make_stream(POISSON, 12.0, seed=2)
    sb = make_stream(BURSTY, 12.0, seed=3)
    n_p = len(sp.arrivals_in(0.0, 200.0))
    n_b = len(sb.arrivals_in(0.0, 200.0))
    assert n_b == pytest.approx(n_p, rel=0.05)
    assert n_b == pytest.approx(200_000 / 200 * 200, rel=0.05)


def test_bursty_on_fraction():
    s = make_stream(BURSTY, 12.0, seed=4)
    s.arrivals_in(0.0, 200.0)
    assert s.total_on_time / 200.0 == pytest.approx(1.0 / 11.0, rel=0.05)


def test_windows_are_half_open_and_contiguous():
    s = make_stream(POISSON, 50.0, seed=5)
    a = s.arrivals_in(0.0, 1.0)
    b = s.arrivals_in(1.0, 2.0)
    assert np.all(a < 1.0)
    assert np.all((b >= 1.0) & (b < 2.0))
    with pytest.raises(ValueError):
        s.arrivals_in(3.0, 2.0)


def test_realization_independent_of_query_windows():
    a = make_stream(POISSON, 30.0, seed=6)
    b = make_stream(POISSON, 30.0, seed=6)
    whole = a.arrivals_in(0.0, 2.0)
    rng = np.random.default_rng(1)
    cuts = np.concatenate([[0.0], np.sort(rng.uniform(0, 2.0, 17)), [2.0]])
    pieces = np.concatenate([b.arrivals_in(t0, t1) for t0, t1 in zip(cuts, cuts[1:])])
    assert np.array_equal(whole, pieces)


def test_bursty_realization_independent_of_query_windows():
    a = make_stream(BURSTY, 30.0, seed=7)
    b = make_stream(BURSTY, 30.0, seed=7)
    whole = a.arrivals_in(0.0, 2.0)
    cuts = np.linspace(0.0, 2.0, 201)
    pieces = np.concatenate([b.arrivals_in(t0, t1) for t0, t1 in zip(cuts, cuts[1:])])
    assert np.array_equal(whole, pieces)


def test_peek_next_does_not_consume():
    for model in (POISSON, BURSTY):
        s = make_stream(model, 8.0, seed=8)
        first = s.peek_next()
        assert s.peek_next() == first
        got = s.arrivals_in(0.0, first + 1e-9)
        assert got[0] == first


def test_zero_load_rejected():
    with pytest.raises(ValueError):
        TrafficProfile(model=POISSON, load_bps=0.0).validate()


def test_vanishing_rate_yields_empty_window():
    s = make_stream(POISSON, 1e-6, seed=9)  # ~1e-4 pkt/s
    assert len(s.arrivals_in(0.0, 1.0)) == 0


# -- queue dynamics ------------------------------------------------------


def test_enqueue_dequeue_basics():
    q = StaQueue(capacity=10)
    q.enqueue(np.array([1.0]))
    assert len(q) == 1 and q.hol_timestamp == 1.0
    q.enqueue(np.array([1.5]))
    delays = q.dequeue_delivered(1, now=2.0)
    assert delays.tolist() == [1.0]
    assert q.hol_timestamp == 1.5


def test_capacity_clamp_counts_drops():
    q = StaQueue(capacity=3)
    q.enqueue(np.array([0.1, 0.2, 0.3]))
    q.enqueue(np.array([0.4]))
    assert len(q) == 3 and q.drop_count == 1
    assert q.timestamps().tolist() == [0.1, 0.2, 0.3]


def test_queue_update_arithmetic():
    # length 5, 3 delivered, 2 arrivals -> 4
    q = StaQueue(capacity=100)
    q.enqueue(np.arange(5) * 0.1)
    q.dequeue_delivered(3, now=1.0)
    q.enqueue(np.array([1.1, 1.2]))
    assert len(q) == 4


def test_dequeue_clamps_and_empty_cases():
    q = StaQueue(capacity=10)
    q.enqueue(np.array([1.0, 2.0]))
    assert len(q.dequeue_delivered(5, now=3.0)) == 2
    assert len(q) == 0 and q.hol_timestamp is None
    assert len(q.dequeue_delivered(0, now=3.0)) == 0


def test_fifo_delays_oldest_first():
    q = StaQueue(capacity=100)
    ts = np.sort(np.random.default_rng(3).uniform(0, 1, 50))
    q.enqueue(ts)
    delays = q.dequeue_delivered(20, now=2.0)
    assert np.all(np.diff(delays) <= 0)  # oldest served first
    assert np.allclose(delays, 2.0 - ts[:20])


def test_ring_buffer_wraparound():
    q = StaQueue(capacity=5)
    t = 0.0
    for _ in range(40):
        q.enqueue(np.array([t, t + 0.01]))
        t += 1.0
        got = q.dequeue_delivered(2, now=t)
        assert np.all(got >= 0)
    assert len(q) == 0


@settings(max_examples=60)
@given(
    st.lists(st.integers(0, 6), min_size=1, max_size=30),
    st.lists(st.integers(0, 6), min_size=1, max_size=30),
)
def test_conservation_property(arrive_counts, serve_counts):
    q = StaQueue(capacity=17)
    t = 0.0
    total_in = 0
    total_out = 0
    for n_in, n_out in zip(arrive_counts, serve_counts):
        ts = t + np.linspace(0, 0.5, n_in, endpoint=False) if n_in else np.empty(0)
        q.enqueue(ts)
        total_in += n_in
        t += 1.0
        total_out += len(q.dequeue_delivered(n_out, now=t))
    assert total_in == total_out + q.drop_count + len(q)
