import pytest

from rocesim.engine import EventLoop
from rocesim.errors import SimulationError


def test_empty_queue_returns_zero():
    loop = EventLoop()
    assert loop.run_until_idle() == 0
    assert loop.now() == 0


def test_single_event_sets_clock():
    loop = EventLoop()
    fired = []
    loop.schedule(100, lambda t, _: fired.append(t))
    assert loop.run_until_idle() == 100
    assert fired == [100]
    assert loop.now() == 100


def test_events_pop_in_time_order():
    loop = EventLoop()
    order = []
    loop.schedule(500, lambda t, _: order.append(500))
    loop.schedule(25, lambda t, _: order.append(25))
    loop.run_until_idle()
    assert order == [25, 500]


def test_same_time_events_fire_in_schedule_order():
    loop = EventLoop()
    order = []
    loop.schedule(10, lambda t, _: order.append("first"))
    loop.schedule(10, lambda t, _: order.append("second"))
    loop.schedule(0, lambda t, _: order.append("zero"))
    loop.run_until_idle()
    assert order == ["zero", "first", "second"]


def test_zero_delay_fires_before_later_scheduled_same_time():
    loop = EventLoop()
    order = []

    def outer(t, _):
        order.append("outer")
        loop.schedule(0, lambda t2, _2: order.append("inner"))

    loop.schedule(5, outer)
    loop.schedule(5, lambda t, _: order.append("sibling"))
    loop.run_until_idle()
    # sibling was scheduled before inner existed
    assert order == ["outer", "sibling", "inner"]


def test_negative_delay_rejected():
    loop = EventLoop()
    with pytest.raises(ValueError):
        loop.schedule(-1, lambda t, _: None)


def test_clock_is_monotonic_through_events():
    loop = EventLoop()
    stamps = []
    for d in (300, 100, 200, 100):
        loop.schedule(d, lambda t, _: stamps.append(t))
    loop.run_until_idle()
    assert stamps == sorted(stamps)


def test_now_inside_event_matches_fire_time():
    loop = EventLoop()
    seen = {}
    loop.schedule(42, lambda t, _: seen.setdefault("now", loop.now()))
    loop.run_until_idle()
    assert seen["now"] == 42


def test_cancellation():
    loop = EventLoop()
    fired = []
    handle = loop.schedule(10, lambda t, _: fired.append("a"))
    loop.schedule(20, lambda t, _: fired.append("b"))
    handle.cancel()
    loop.run_until_idle()
    assert fired == ["b"]


def test_replay_produces_identical_trace():
    def scenario():
        loop = EventLoop(trace=True)

        def chain(t, depth):
            if depth < 5:
                loop.schedule(7 * depth + 1, chain, depth + 1)
                loop.schedule(3, lambda tt, _: None, label="leaf")

        loop.schedule(0, chain, 0)
        final = loop.run_until_idle()
        return final, list(loop.trace)

    assert scenario() == scenario()


def test_run_until_advances_clock_without_overshoot():
    loop = EventLoop()
    fired = []
    loop.schedule(10, lambda t, _: fired.append(10))
    loop.schedule(30, lambda t, _: fired.append(30))
    loop.run_until(20)
    assert fired == [10]
    assert loop.now() == 20
    loop.run_until_idle()
    assert fired == [10, 30]


def test_advance_to_rejects_backward_clock():
    loop = EventLoop()
    loop.advance_to(50)
    with pytest.raises(SimulationError):
        loop.advance_to(49)
