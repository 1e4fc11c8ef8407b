import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from todpipe import spans
from randgen import random_act, random_belief, random_tokens


def test_encode_belief_empty():
    assert spans.encode_belief({}) == ["<sos_b>", "<eos_b>"]


def test_encode_belief_example():
    b = {"hotel": {"parking": "yes", "stars": "4"}}
    assert spans.encode_belief(b) == \
        ["<sos_b>", "[hotel]", "parking", "yes", "stars", "4", "<eos_b>"]


def test_encode_belief_domain_first_mention_order():
    b = {"train": {"day": "monday"}, "hotel": {"area": "north"}}
    toks = spans.encode_belief(b)
    assert toks.index("[train]") < toks.index("[hotel]")


def test_multiword_value_round_trip():
    b = {"restaurant": {"food": "modern european"}}
    toks = spans.encode_belief(b)
    assert toks.count("modern") == 1 and toks.count("european") == 1
    assert spans.parse_belief(toks).value == b


def test_belief_round_trip_random():
    rng = random.Random(7)
    for _ in range(1000):
        b = random_belief(rng)
        assert spans.parse_belief(spans.encode_belief(b)).value == b


def test_belief_encoding_deterministic():
    rng = random.Random(3)
    for _ in range(50):
        b = random_belief(rng)
        assert spans.encode_belief(b) == spans.encode_belief(b)


def test_tolerant_duplicate_slot_last_wins():
    toks = "<sos_b> [hotel] stars 4 stars 3 <eos_b>".split()
    assert spans.parse_belief(toks, "tolerant").value == \
        {"hotel": {"stars": "3"}}


def test_strict_missing_eos_raises():
    with pytest.raises(spans.MalformedSpan):
        spans.parse_belief("<sos_b> [hotel] stars 4".split(), "strict")


def test_strict_requires_sos():
    with pytest.raises(spans.MalformedSpan):
        spans.parse_belief("[hotel] stars 4 <eos_b>".split(), "strict")


def test_tolerant_closes_unterminated_span():
    res = spans.parse_belief("<sos_b> [hotel] stars 4".split(), "tolerant")
    assert res.value == {"hotel": {"stars": "4"}}
    assert res.diagnostics


def test_tolerant_drops_empty_value():
    res = spans.parse_belief("<sos_b> [hotel] stars <eos_b>".split(),
                             "tolerant")
    assert res.value == {}


def test_act_round_trip_random():
    rng = random.Random(11)
    for _ in range(1000):
        a = random_act(rng)
        assert spans.parse_act(spans.encode_act(a)).value == a


def test_encode_act_example():
    a = {"hotel": {"request": ["area", "pricerange"]}}
    assert spans.encode_act(a) == \
        ["<sos_a>", "[hotel]", "[request]", "area", "pricerange", "<eos_a>"]


def test_encode_act_empty():
    assert spans.encode_act({}) == ["<sos_a>", "<eos_a>"]


def test_tolerant_act_unknown_marker_skipped():
    toks = "<sos_a> [hotel] [offer] area <eos_a>".split()
    res = spans.parse_act(toks, "tolerant")
    assert res.value == {}
    assert any("[offer]" in d for d in res.diagnostics)


def test_db_encode_round_trip_all_buckets():
    for tok in spans.DB_TOKENS:
        assert spans.parse_db(spans.encode_db(tok)).value == tok


def test_db_encode_rejects_unknown():
    with pytest.raises(ValueError):
        spans.encode_db("[db_9]")


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(
    spans.SPECIAL_TOKENS + ["stars", "4", "[junk]", "<odd>", "north"]),
    max_size=30))
def test_tolerant_parsers_total(tokens):
    spans.parse_belief(tokens, "tolerant")
    spans.parse_act(tokens, "tolerant")
    spans.parse_db(tokens, "tolerant")


def test_tolerant_fuzz_never_raises():
    rng = random.Random(23)
    for _ in range(2000):
        toks = random_tokens(rng, rng.randint(0, 40))
        spans.parse_belief(toks, "tolerant")
        spans.parse_act(toks, "tolerant")


def test_registry_closed_and_unique():
    assert len(spans.SPECIAL_TOKENS) == len(set(spans.SPECIAL_TOKENS))
    assert len(spans.registry_version()) == 12


def test_registry_export(tmp_path):
    path = tmp_path / "registry.txt"
    spans.write_registry(path)
    lines = path.read_text().splitlines()
    assert lines == spans.SPECIAL_TOKENS
