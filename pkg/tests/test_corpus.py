import json
import random

import pytest

from todpipe import corpus as cm
from todpipe import fixtures


def test_canonical_round_trip_identity(tmp_path, corpus10):
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    cm.write_canonical(corpus10, p1)
    loaded = cm.load_corpus(p1)
    cm.write_canonical(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert loaded.session_ids() == corpus10.session_ids()


def test_load_two_session_fixture(tmp_path, db):
    small = fixtures.build_fixture_corpus(2, db=db)
    p = tmp_path / "two.json"
    cm.write_canonical(small, p)
    loaded = cm.load_corpus(p)
    assert len(loaded.sessions) == 2
    assert loaded.session_ids() == small.session_ids()


def test_unknown_act_type_rejected(tmp_path, corpus10):
    doc = corpus10.to_dict()
    doc["sessions"][0]["turns"][0]["act"] = {"hotel": {"persuade": []}}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(cm.UnknownActType):
        cm.load_corpus(p)


def test_duplicate_session_id_rejected(tmp_path, corpus10):
    doc = corpus10.to_dict()
    doc["sessions"][1]["session_id"] = doc["sessions"][0]["session_id"]
    p = tmp_path / "dup.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(cm.ParseFailure):
        cm.load_corpus(p)


def test_parse_failure_is_position_annotated(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"sessions": [')
    with pytest.raises(cm.ParseFailure) as exc:
        cm.load_corpus(p)
    assert "line" in str(exc.value)


def test_normalize_value_synonym():
    assert cm.normalize_value("hotel", "pricerange",
                              "  Moderately Priced ") == "moderate"


def test_normalize_value_already_canonical():
    assert cm.normalize_value("hotel", "stars", "4") == "4"


def test_normalize_idempotent():
    rng = random.Random(5)
    pieces = ["Moderately", "priced", "CENTRE", "center", "guest house",
              "any", "4", "  ", "don't care", "free wifi", "modern",
              "european"]
    for _ in range(1000):
        raw = " ".join(rng.sample(pieces, rng.randint(1, 3)))
        slot = rng.choice(["pricerange", "area", "type", "internet", "food"])
        once = cm.normalize_value("hotel", slot, raw)
        assert cm.normalize_value("hotel", slot, once) == once


def test_multiwoz_raw_adapter(tmp_path):
    raw = {
        "SNG001.json": {
            "goal": {
                "hotel": {"info": {"area": "north", "stars": "4"},
                          "reqt": ["phone"], "book": False},
            },
            "log": [
                {"text": "i need a hotel in the north .", "metadata": {}},
                {"text": "the acorn guest house is in the north .",
                 "metadata": {"hotel": {"semi": {"area": "north",
                                                 "stars": "4"},
                                        "book": {"booked": []}}},
                 "dialog_act": {"Hotel-Recommend": [["Name",
                                                     "acorn guest house"]]}},
            ],
        }
    }
    p = tmp_path / "raw.json"
    p.write_text(json.dumps(raw))
    corpus = cm.load_corpus(p, format="multiwoz-raw", version="2.0")
    assert len(corpus.sessions) == 1
    s = corpus.sessions[0]
    assert s.turns[0].belief == {"hotel": {"area": "north", "stars": "4"}}
    assert s.turns[0].act == {"hotel": {"recommend": ["name"]}}
    assert s.goal["hotel"].informable == {"area": "north", "stars": "4"}
    assert s.goal["hotel"].requestable == ["phone"]


def test_validate_clean_fixture(corpus10):
    assert cm.validate(corpus10).is_clean()


def test_validate_placeholder_leak(corpus10):
    import copy
    bad = copy.deepcopy(corpus10)
    bad.sessions[0].turns[0].response_lex = "the [value_name] is nice ."
    report = cm.validate(bad)
    assert len(report.placeholder_leaks) == 1


def test_validate_out_of_ontology(corpus10):
    import copy
    bad = copy.deepcopy(corpus10)
    bad.sessions[0].turns[0].belief["hotel"]["stars"] = "fife stars"
    report = cm.validate(bad)
    assert any(v[4] == "fife stars" for v in report.out_of_ontology)


def test_split_train_dev_test_partition(db):
    corpus = fixtures.build_fixture_corpus(30, db=db)
    train, dev, test = cm.split_train_dev_test(corpus, dev_n=5, test_n=5,
                                               seed=1)
    ids = [s.session_id for part in (train, dev, test) for s in part]
    assert sorted(ids) == sorted(corpus.session_ids())
    assert len(set(ids)) == len(ids)
    assert len(dev) == 5 and len(test) == 5


def test_leave_one_domain_out_exclusion(db):
    corpus = fixtures.build_fixture_corpus(25, db=db)
    parts = cm.split_leave_one_domain_out(corpus, "hotel", fewshot_n=2,
                                          seed=3)
    mentioning = {s.session_id for s in corpus.sessions
                  if "hotel" in s.domains()}
    for s in parts["train_without"]:
        assert s.session_id not in mentioning
        assert "hotel" not in s.domains()
    assert len(parts["fewshot"]) == 2
    for s in parts["fewshot"]:
        assert "hotel" in s.domains()


def test_leave_one_domain_out_partition_and_determinism(db):
    corpus = fixtures.build_fixture_corpus(25, db=db)
    a = cm.split_leave_one_domain_out(corpus, "train", fewshot_n=3, seed=9)
    b = cm.split_leave_one_domain_out(corpus, "train", fewshot_n=3, seed=9)
    for key in a:
        assert [s.session_id for s in a[key]] == \
            [s.session_id for s in b[key]]
    ids = [s.session_id for part in a.values() for s in part]
    assert sorted(ids) == sorted(corpus.session_ids())


def test_leave_one_domain_out_zero_shot(db):
    corpus = fixtures.build_fixture_corpus(10, db=db)
    parts = cm.split_leave_one_domain_out(corpus, "taxi", fewshot_n=0)
    assert parts["fewshot"] == []


def test_leave_one_domain_out_too_many(db):
    corpus = fixtures.build_fixture_corpus(10, db=db)
    with pytest.raises(ValueError):
        cm.split_leave_one_domain_out(corpus, "taxi", fewshot_n=99)


def test_leave_one_domain_out_bad_domain(corpus10):
    with pytest.raises(ValueError):
        cm.split_leave_one_domain_out(corpus10, "hospital", 0)
