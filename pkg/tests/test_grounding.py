from __future__ import annotations

import random

import pytest

from todkit.codec import BeliefState
from todkit.errors import SchemaError, ValidationError
from todkit.grounding import (
    DBState,
    DelexTokenSet,
    DomainTable,
    EntityDB,
    delexicalize,
    lexicalize,
    load_db,
    query,
    save_db,
)


@pytest.fixture()
def restaurant_db():
    entities = (
        {"name": "curry garden", "food": "indian", "pricerange": "expensive",
         "area": "centre", "phone": "01223302330"},
        {"name": "golden palace", "food": "indian", "pricerange": "expensive",
         "area": "north", "phone": "01223111111"},
        {"name": "blue anchor", "food": "british", "pricerange": "cheap",
         "area": "centre", "phone": "01223222222"},
        {"name": "old mill", "food": "italian", "pricerange": "moderate",
         "area": "west", "phone": "01223333333"},
        {"name": "red lantern", "food": "chinese", "pricerange": "expensive",
         "area": "south", "phone": "01223444444"},
    )
    return EntityDB(
        {"restaurant": DomainTable("restaurant", ("food", "pricerange", "area"), entities)}
    )


def test_query_counts_and_token(restaurant_db):
    state = BeliefState({"restaurant": {"food": "indian", "pricerange": "expensive"}})
    matches, db_state = query(restaurant_db, state, "restaurant")
    assert [m["name"] for m in matches] == ["curry garden", "golden palace"]
    assert db_state.match_count == 2 and db_state.token == "[db_2]"


def test_query_unconstrained_returns_all(restaurant_db):
    matches, db_state = query(restaurant_db, BeliefState.empty(), "restaurant")
    assert len(matches) == 5
    assert db_state.bucket == 3 and db_state.token == "[db_3]"


def test_query_impossible_value(restaurant_db):
    state = BeliefState({"restaurant": {"food": "martian"}})
    matches, db_state = query(restaurant_db, state, "restaurant")
    assert matches == [] and db_state.token == "[db_0]"


def test_query_dont_care_matches_anything(restaurant_db):
    state = BeliefState({"restaurant": {"food": "don't care", "area": "centre"}})
    matches, _ = query(restaurant_db, state, "restaurant")
    assert [m["name"] for m in matches] == ["blue anchor", "curry garden"]


def test_query_ignores_non_informable_constraints(restaurant_db):
    state = BeliefState({"restaurant": {"people": "4", "food": "indian"}})
    matches, _ = query(restaurant_db, state, "restaurant")
    assert len(matches) == 2


def test_query_unknown_domain_raises(restaurant_db):
    with pytest.raises(KeyError):
        query(restaurant_db, BeliefState.empty(), "taxi")


def test_bucket_clamp_and_monotonicity():
    buckets = [DBState("d", n).bucket for n in range(8)]
    assert buckets == [0, 1, 2, 3, 3, 3, 3, 3]
    assert all(a <= b for a, b in zip(buckets, buckets[1:]))
    assert DBState("d", 0).token == "[db_0]" and DBState("d", 9).token == "[db_3]"
    with pytest.raises(ValidationError):
        DBState("d", -1)


def _random_db(rng: random.Random) -> EntityDB:
    informable = tuple(rng.sample(["food", "pricerange", "area", "stars", "type"], 3))
    values = {slot: [f"{slot}{i}" for i in range(rng.randint(1, 4))] for slot in informable}
    entities = []
    for index in range(rng.randint(1, 30)):
        entity = {"name": f"entity {index:03d}"}
        for slot in informable:
            entity[slot] = rng.choice(values[slot])
        entities.append(entity)
    return EntityDB({"dom": DomainTable("dom", informable, tuple(entities))})


def _random_state(rng: random.Random, db: EntityDB) -> BeliefState:
    table = db.domains["dom"]
    constraints = {}
    for slot in table.informable:
        roll = rng.random()
        if roll < 0.4:
            continue
        if roll < 0.5:
            constraints[slot] = "don't care"
        elif roll < 0.85:
            constraints[slot] = rng.choice(table.entities)[slot]
        else:
            constraints[slot] = f"{slot}_absent"
    if not constraints:
        return BeliefState.empty()
    return BeliefState({"dom": constraints})


def test_query_matches_brute_force_oracle():
    rng = random.Random(2024)
    for _ in range(200):
        db = _random_db(rng)
        state = _random_state(rng, db)
        matches, db_state = query(db, state, "dom")
        # independent brute-force filter
        constraints = state.constraints("dom")
        expected = []
        for entity in db.domains["dom"].entities:
            keep = True
            for slot, value in constraints.items():
                if slot not in db.domains["dom"].informable:
                    continue
                if value == "don't care":
                    continue
                if entity[slot] != value:
                    keep = False
            if keep:
                expected.append(entity["name"])
        assert sorted(m["name"] for m in matches) == sorted(expected)
        assert {m["name"] for m in matches} == set(expected)
        assert db_state.match_count == len(expected)


ENTITY = {"name": "curry garden", "food": "indian", "pricerange": "expensive",
          "area": "centre", "phone": "01223302330"}


def test_delexicalize_multi_slot_response():
    response = "there are 14 expensive indian restaurants in cambridge ."
    out = delexicalize(response, ENTITY, DBState("restaurant", 14))
    assert out == "there are [value_choice] [value_price] [value_food] restaurants in cambridge ."


def test_delexicalize_without_mentions_is_identity():
    response = "how may i help you today ?"
    assert delexicalize(response, ENTITY, DBState("restaurant", 2)) == response


def test_delexicalize_multiword_longest_match():
    out = delexicalize("the curry garden is nice", ENTITY)
    assert out == "the [value_name] is nice"


def test_delexicalize_is_word_boundary_anchored():
    entity = {"name": "star", "stars": "3"}
    out = delexicalize("starlight is not a star but 3 is 34", entity, DBState("hotel", 7))
    assert out == "starlight is not a [value_name] but [value_stars] is 34"


def test_delexicalize_case_insensitive():
    out = delexicalize("Curry Garden serves Indian food", ENTITY)
    assert out == "[value_name] serves [value_food] food"


def test_lexicalize_fills_from_first_match():
    out, unfilled = lexicalize(
        "[value_name] is a [value_food] restaurant",
        [{"name": "curry garden", "food": "indian"}, {"name": "x", "food": "y"}],
    )
    assert out == "curry garden is a indian restaurant"
    assert unfilled == []


def test_lexicalize_identity_without_placeholders():
    out, unfilled = lexicalize("no placeholders here", [ENTITY], DBState("restaurant", 1))
    assert out == "no placeholders here" and unfilled == []


def test_lexicalize_reports_unfilled():
    out, unfilled = lexicalize("[value_phone]", [], None)
    assert out == "[value_phone]" and unfilled == ["[value_phone]"]


def test_lexicalize_choice_comes_from_match_count():
    out, unfilled = lexicalize("there are [value_choice] options", [ENTITY],
                               DBState("restaurant", 14))
    assert out == "there are 14 options" and unfilled == []


def test_delex_lex_round_trip():
    response = "curry garden is an expensive indian restaurant in the centre , phone 01223302330 ."
    db_state = DBState("restaurant", 1)
    delex = delexicalize(response, ENTITY, db_state)
    assert "[value_name]" in delex and "[value_phone]" in delex
    restored, unfilled = lexicalize(delex, [ENTITY], db_state)
    assert restored == response and unfilled == []


def test_ontology_validation():
    with pytest.raises(ValidationError):
        DelexTokenSet({"food": "[bad token]"})
    tokens = DelexTokenSet.default().placeholders()
    assert "[value_choice]" in tokens and "[value_name]" in tokens


def test_db_file_round_trip(tmp_path, restaurant_db):
    path = tmp_path / "db.jsonl"
    save_db(restaurant_db, path)
    loaded = load_db(path)
    assert loaded == restaurant_db
    first = path.read_bytes()
    save_db(loaded, path)
    assert path.read_bytes() == first


def test_db_file_unknown_field_rejected(tmp_path):
    path = tmp_path / "db.jsonl"
    path.write_text(
        '{"domain": "d", "informable": [], "entities": [], "extra": 1}\n', encoding="utf-8"
    )
    with pytest.raises(SchemaError) as excinfo:
        load_db(path)
    assert "extra" in str(excinfo.value)


def test_db_validation_errors():
    with pytest.raises(ValidationError):
        DomainTable("d", ("food",), ({"name": "a"},))  # missing informable slot
    with pytest.raises(ValidationError):
        DomainTable("d", (), ({"name": "a"}, {"name": "a"}))  # duplicate name
    with pytest.raises(ValidationError):
        DomainTable("d", (), ({"food": "x"},))  # no name
