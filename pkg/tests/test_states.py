import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teachkit.classify import StateEvent
from teachkit.errors import NotContinuous, UnknownState, ValidationError
from teachkit.states import (
    ApplyKeyedScene,
    EnterTrigger,
    PlayAudio,
    SetParameterTarget,
    StateRuntime,
    StateSet,
    TransitionTrigger,
    TriggerBinding,
    staggered_param,
)


def make_set(kind="discrete", n=3, start=0.0, end=1.0, set_id="set0"):
    sset = StateSet(set_id=set_id, kind=kind, param_start=start, param_end=end)
    for i in range(n):
        sset.add_state(f"s{i}")
    return sset


def event(to, frm=None, t=0.0):
    return StateEvent(state_id=to, from_state_id=frm, timestamp_ms=t)


# -- staggered parameters -------------------------------------------------

def test_staggered_six_states_unit_range():
    sset = make_set("continuous", 6)
    values = [staggered_param(sset, f"s{i}") for i in range(6)]
    assert values == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]


def test_staggered_two_states_endpoints():
    sset = make_set("continuous", 2, start=-3.5, end=7.25)
    assert staggered_param(sset, "s0") == -3.5
    assert staggered_param(sset, "s1") == 7.25


def test_staggered_five_states_10_20():
    sset = make_set("continuous", 5, start=10.0, end=20.0)
    values = [staggered_param(sset, f"s{i}") for i in range(5)]
    assert values == [10.0, 12.5, 15.0, 17.5, 20.0]


def test_staggered_closed_form_k2_to_k10():
    for k in range(2, 11):
        sset = make_set("continuous", k, start=0.0, end=1.0)
        for i in range(k):
            assert staggered_param(sset, f"s{i}") == pytest.approx(i / (k - 1),
                                                                   abs=1e-15)


def test_staggered_rejects_discrete_and_unknown():
    with pytest.raises(NotContinuous):
        staggered_param(make_set("discrete", 3), "s0")
    with pytest.raises(UnknownState):
        staggered_param(make_set("continuous", 3), "nope")


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12),
       st.floats(-100, 100, allow_nan=False),
       st.floats(-100, 100, allow_nan=False))
def test_staggered_monotone_and_exact_endpoints(k, start, end):
    sset = make_set("continuous", k, start=start, end=end)
    values = [staggered_param(sset, f"s{i}") for i in range(k)]
    assert values[0] == start
    assert values[-1] == end
    # strict monotonicity needs a span float rounding cannot absorb
    if end - start > 1e-9 * max(1.0, abs(start)):
        assert all(a < b for a, b in zip(values, values[1:]))


# -- counters and bindings ---------------------------------------------------

def test_counters_follow_events():
    rt = StateRuntime([make_set("discrete", 2)])
    rt.on_state_event(event("s0"))
    rt.on_state_event(event("s1", "s0"))
    rt.on_state_event(event("s0", "s1"))
    assert rt.counter("s0") == 2
    assert rt.counter("s1") == 1


def test_counters_match_fold_oracle(rng):
    rt = StateRuntime([make_set("discrete", 4)])
    states = [f"s{i}" for i in range(4)]
    prev = None
    expected = {s: 0 for s in states}
    for _ in range(1000):
        to = states[int(rng.integers(4))]
        if to == prev:  # the smoother can never emit A->A
            continue
        rt.on_state_event(event(to, prev))
        expected[to] += 1
        prev = to
    for s in states:
        assert rt.counter(s) == expected[s]
    assert sum(rt.counters.values()) == sum(expected.values())


def test_reset_counters_idempotent():
    rt = StateRuntime([make_set("discrete", 2)])
    rt.on_state_event(event("s0"))
    rt.reset_counters()
    assert rt.counter("s0") == 0
    rt.reset_counters()
    assert rt.counter("s0") == 0
    rt.on_state_event(event("s0"))
    assert rt.counter("s0") == 1


def test_transition_binding_requires_matching_source():
    rt = StateRuntime([make_set("discrete", 3)])
    rt.add_binding(TriggerBinding(
        trigger=TransitionTrigger("s0", "s1"),
        actions=[PlayAudio("ding")],
    ))
    assert rt.on_state_event(event("s1", None)) == []
    assert rt.on_state_event(event("s0", "s1")) == []
    assert rt.on_state_event(event("s1", "s0")) == [PlayAudio("ding")]


def test_enter_binding_and_declaration_order():
    rt = StateRuntime([make_set("discrete", 2)])
    rt.add_binding(TriggerBinding(EnterTrigger("s0"), [PlayAudio("one")]))
    rt.add_binding(TriggerBinding(EnterTrigger("s0"),
                                  [ApplyKeyedScene("s1"), PlayAudio("two")]))
    actions = rt.on_state_event(event("s0"))
    assert actions == [PlayAudio("one"), ApplyKeyedScene("s1"), PlayAudio("two")]


def test_continuous_set_emits_parameter_first():
    rt = StateRuntime([make_set("continuous", 6)])
    rt.add_binding(TriggerBinding(EnterTrigger("s2"), [PlayAudio("x")]))
    actions = rt.on_state_event(event("s2"))
    assert actions == [SetParameterTarget(0.4), PlayAudio("x")]


def test_unmatched_event_empty_list():
    rt = StateRuntime([make_set("discrete", 2)])
    assert rt.on_state_event(event("s1")) == []


def test_binding_validation_at_bind_time():
    rt = StateRuntime([make_set("discrete", 2)])
    with pytest.raises(ValidationError):
        rt.add_binding(TriggerBinding(EnterTrigger("ghost"), []))
    with pytest.raises(ValidationError):
        rt.add_binding(
            TriggerBinding(EnterTrigger("s0"), [PlayAudio("missing")]),
            asset_ids=set(),
        )
    rt.add_binding(TriggerBinding(EnterTrigger("s0"), [PlayAudio("ok")]),
                   asset_ids={"ok"})


def test_action_evaluation_deterministic(rng):
    def build():
        rt = StateRuntime([make_set("continuous", 4)])
        rt.add_binding(TriggerBinding(EnterTrigger("s1"), [PlayAudio("a")]))
        rt.add_binding(TriggerBinding(TransitionTrigger("s1", "s2"),
                                      [PlayAudio("b")]))
        return rt

    events = []
    prev = None
    for _ in range(100):
        to = f"s{int(rng.integers(4))}"
        if to == prev:
            continue
        events.append(event(to, prev))
        prev = to
    r1, r2 = build(), build()
    out1 = [r1.on_state_event(e) for e in events]
    out2 = [r2.on_state_event(e) for e in events]
    assert out1 == out2


@pytest.fixture
def rng():
    return np.random.default_rng(5)
