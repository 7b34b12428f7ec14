from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todkit.codec import (
    ActItem,
    BeliefState,
    DialogueAct,
    IntentLabel,
    parse_act,
    parse_state,
    serialize_act,
    serialize_state,
)
from todkit.errors import ValidationError


def test_single_domain_rendering():
    state = BeliefState({"restaurant": {"food": "indian", "pricerange": "expensive"}})
    assert serialize_state(state) == "[restaurant] {food = indian, pricerange = expensive}"


def test_empty_state_renders_empty_string():
    assert serialize_state(BeliefState.empty()) == ""


def test_two_domain_rendering_is_lexicographic():
    state = BeliefState(
        {
            "hotel": {"stars": "3", "type": "hotel"},
            "restaurant": {"food": "indian", "pricerange": "expensive"},
        }
    )
    assert serialize_state(state) == (
        "[hotel] {stars = 3, type = hotel}; "
        "[restaurant] {food = indian, pricerange = expensive}"
    )


def test_dont_care_value_round_trips():
    state = BeliefState(
        {"restaurant": {"food": "indian", "pricerange": "expensive", "area": "don't care"}}
    )
    text = serialize_state(state)
    assert "area = don't care" in text
    parsed, warnings = parse_state(text)
    assert parsed == state and warnings == []


def test_parse_state_well_formed():
    parsed, warnings = parse_state("[restaurant] {food = indian, pricerange = expensive}")
    assert warnings == []
    assert parsed.entries == {"restaurant": {"food": "indian", "pricerange": "expensive"}}


def test_parse_state_empty_string():
    parsed, warnings = parse_state("")
    assert parsed.is_empty() and warnings == []


def test_parse_state_unclosed_brace_warns():
    parsed, warnings = parse_state("[restaurant] {food = indian")
    assert parsed.is_empty()
    assert len(warnings) >= 1
    assert "restaurant" in warnings[0]


def test_parse_state_recovers_good_segment_and_warns_on_bad():
    text = "[restaurant] {food = indian}; garbage here"
    parsed, warnings = parse_state(text)
    assert parsed.entries == {"restaurant": {"food": "indian"}}
    assert any("garbage" in w for w in warnings)


def test_parse_state_malformed_slot_is_skipped():
    parsed, warnings = parse_state("[restaurant] {food indian, pricerange = expensive}")
    assert parsed.entries == {"restaurant": {"pricerange": "expensive"}}
    assert any("food indian" in w for w in warnings)


def test_serialize_is_insertion_order_independent():
    a = BeliefState({"restaurant": {"food": "indian", "area": "west"}})
    b = BeliefState({"restaurant": {"area": "west", "food": "indian"}})
    assert a == b and serialize_state(a) == serialize_state(b)


def test_state_name_validation():
    with pytest.raises(ValidationError):
        BeliefState({"Restaurant": {"food": "indian"}})
    with pytest.raises(ValidationError):
        BeliefState({"restaurant": {"fo[od": "indian"}})
    with pytest.raises(ValidationError):
        BeliefState({"restaurant": {"food": ""}})
    with pytest.raises(ValidationError):
        BeliefState({"restaurant": {}})


def test_ambiguous_value_is_rejected():
    with pytest.raises(ValidationError):
        BeliefState({"restaurant": {"food": "thai, pricerange = cheap"}})


def test_act_rendering_and_round_trip():
    act = DialogueAct(
        {"restaurant": (ActItem("inform", ("choice",)), ActItem("request", ("area",)))}
    )
    text = serialize_act(act)
    assert text == "[restaurant] [inform] choice [request] area"
    parsed, warnings = parse_act(text)
    assert parsed == act and warnings == []


def test_empty_act_renders_empty_string():
    assert serialize_act(DialogueAct.empty()) == ""
    parsed, warnings = parse_act("")
    assert parsed.is_empty() and warnings == []


def test_act_multi_domain_round_trip():
    act = DialogueAct(
        {
            "hotel": (ActItem("inform", ("name", "stars")),),
            "general": (ActItem("bye"),),
        }
    )
    parsed, warnings = parse_act(serialize_act(act))
    assert parsed == act and warnings == []


def test_act_canonicalization_dedupes_and_sorts():
    a = DialogueAct(
        {"restaurant": (ActItem("request", ("area",)), ActItem("inform", ("choice",)),
                        ActItem("inform", ("choice",)))}
    )
    b = DialogueAct(
        {"restaurant": (ActItem("inform", ("choice",)), ActItem("request", ("area",)))}
    )
    assert a == b


def test_act_parse_garbage_warns_without_raising():
    parsed, warnings = parse_act("no brackets at all")
    assert parsed.is_empty() and warnings


def test_intent_label():
    assert IntentLabel("get_weather").render() == "[get_weather]"
    assert IntentLabel.parse(" [get_weather] ") == IntentLabel("get_weather")
    assert IntentLabel.parse("nonsense!") is None
    with pytest.raises(ValidationError):
        IntentLabel("Get Weather")


_names = st.from_regex(r"[a-z][a-z0-9_]{0,9}", fullmatch=True)
_value_alphabet = "abcdefghijklmnopqrstuvwxyz0123456789 '-."


def _valid_value(text: str) -> bool:
    try:
        BeliefState({"d": {"s": text}})
    except ValidationError:
        return False
    return True


_values = (
    st.text(alphabet=_value_alphabet, min_size=1, max_size=24)
    .map(lambda s: " ".join(s.split()))
    .filter(_valid_value)
)

_states = st.dictionaries(
    _names, st.dictionaries(_names, _values, min_size=1, max_size=4), max_size=3
).map(BeliefState)

_act_items = st.builds(
    ActItem, _names, st.lists(_names, max_size=3).map(tuple)
)
_acts = st.dictionaries(
    _names, st.lists(_act_items, min_size=1, max_size=3).map(tuple), max_size=3
).map(DialogueAct)


@settings(max_examples=400, deadline=None)
@given(_states)
def test_state_round_trip_property(state):
    parsed, warnings = parse_state(serialize_state(state))
    assert warnings == []
    assert parsed == state


@settings(max_examples=400, deadline=None)
@given(_acts)
def test_act_round_trip_property(act):
    parsed, warnings = parse_act(serialize_act(act))
    assert warnings == []
    assert parsed == act


@settings(max_examples=400, deadline=None)
@given(st.text(max_size=2000))
def test_parse_state_never_raises(text):
    state, warnings = parse_state(text)
    assert isinstance(state, BeliefState)
    assert isinstance(warnings, list)


@settings(max_examples=400, deadline=None)
@given(st.text(max_size=2000))
def test_parse_act_never_raises(text):
    act, warnings = parse_act(text)
    assert isinstance(act, DialogueAct)
    assert isinstance(warnings, list)
