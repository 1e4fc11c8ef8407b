"""Deterministic synthetic corpus and entity DB for tests and demos.

Every generated session's gold responses satisfy the session goal, so an
oracle replay scores 100/100 on Inform/Success by construction.
"""

from __future__ import annotations

import random

from . import dbquery
from .corpus import Corpus, DialogSession, GoalDomain, Turn, build_ontology
from .dbquery import EntityDb, booking_reference
from .delex import lexicalize

HOTELS = [
    {"name": "acorn guest house", "area": "north", "pricerange": "moderate",
     "stars": "4", "parking": "yes", "internet": "yes", "type": "guesthouse",
     "address": "154 chesterton road", "phone": "01223353888",
     "postcode": "cb41da"},
    {"name": "alpha milton guest house", "area": "north",
     "pricerange": "moderate", "stars": "3", "parking": "no",
     "internet": "no", "type": "guesthouse",
     "address": "63 milton road", "phone": "01223311625",
     "postcode": "cb41xa"},
    {"name": "gonville hotel", "area": "centre", "pricerange": "expensive",
     "stars": "3", "parking": "yes", "internet": "yes", "type": "hotel",
     "address": "gonville place", "phone": "01223366611",
     "postcode": "cb11ly"},
    {"name": "huntingdon marriott hotel", "area": "west",
     "pricerange": "expensive", "stars": "4", "parking": "yes",
     "internet": "yes", "type": "hotel",
     "address": "kingfisher way hinchinbrook business park",
     "phone": "01480446000", "postcode": "pe296fl"},
    {"name": "cityroomz", "area": "centre", "pricerange": "moderate",
     "stars": "0", "parking": "no", "internet": "yes", "type": "hotel",
     "address": "sleeperz hotel station road", "phone": "01223304050",
     "postcode": "cb12tz"},
    {"name": "arbury lodge guesthouse", "area": "north",
     "pricerange": "moderate", "stars": "4", "parking": "yes",
     "internet": "yes", "type": "guesthouse",
     "address": "82 arbury road", "phone": "01223364319",
     "postcode": "cb42je"},
]

RESTAURANTS = [
    {"name": "golden wok", "food": "chinese", "area": "north",
     "pricerange": "moderate", "address": "191 histon road chesterton",
     "phone": "01223350688", "postcode": "cb43hl"},
    {"name": "pizza hut city centre", "food": "italian", "area": "centre",
     "pricerange": "cheap", "address": "regent street city centre",
     "phone": "01223323737", "postcode": "cb21ab"},
    {"name": "cotto", "food": "british", "area": "centre",
     "pricerange": "moderate", "address": "183 east road city centre",
     "phone": "01223302010", "postcode": "cb11bg"},
    {"name": "curry prince", "food": "indian", "area": "east",
     "pricerange": "moderate", "address": "451 newmarket road fen ditton",
     "phone": "01223566388", "postcode": "cb58jj"},
    {"name": "midsummer house restaurant", "food": "british",
     "area": "centre", "pricerange": "expensive",
     "address": "midsummer common", "phone": "01223369299",
     "postcode": "cb41ha"},
    {"name": "nandos", "food": "portuguese", "area": "south",
     "pricerange": "cheap", "address": "cambridge leisure park",
     "phone": "01223327908", "postcode": "cb17dy"},
]

ATTRACTIONS = [
    {"name": "scott polar museum", "type": "museum", "area": "centre",
     "entrancefee": "free", "address": "lensfield road",
     "phone": "01223336540", "postcode": "cb21er"},
    {"name": "clare college", "type": "college", "area": "west",
     "entrancefee": "2.50 pounds", "address": "trinity lane",
     "phone": "01223333200", "postcode": "cb21tl"},
    {"name": "milton country park", "type": "park", "area": "north",
     "entrancefee": "free", "address": "milton country park milton",
     "phone": "01223420060", "postcode": "cb46az"},
    {"name": "funky fun house", "type": "entertainment", "area": "east",
     "entrancefee": "5 pounds", "address": "8 mercers row",
     "phone": "01223304705", "postcode": "cb58hy"},
]

TRAINS = [
    {"id": "tr1234", "departure": "cambridge",
     "destination": "london kings cross", "day": "monday",
     "leave": "05:00", "arrive": "05:51", "price": "23.60 pounds",
     "duration": "51 minutes"},
    {"id": "tr5678", "departure": "cambridge",
     "destination": "london kings cross", "day": "monday",
     "leave": "07:00", "arrive": "07:51", "price": "23.60 pounds",
     "duration": "51 minutes"},
    {"id": "tr2468", "departure": "norwich", "destination": "cambridge",
     "day": "tuesday", "leave": "09:16", "arrive": "10:35",
     "price": "17.60 pounds", "duration": "79 minutes"},
    {"id": "tr9999", "departure": "cambridge",
     "destination": "stansted airport", "day": "friday",
     "leave": "08:40", "arrive": "09:08", "price": "10.10 pounds",
     "duration": "28 minutes"},
]

TAXI_CARS = [
    {"type": "grey volkswagen", "phone": "07218068540"},
    {"type": "yellow skoda", "phone": "07239644669"},
    {"type": "black audi", "phone": "07520444101"},
]


def build_fixture_db() -> EntityDb:
    return EntityDb(domains={
        "hotel": [dict(e) for e in HOTELS],
        "restaurant": [dict(e) for e in RESTAURANTS],
        "attraction": [dict(e) for e in ATTRACTIONS],
        "train": [dict(e) for e in TRAINS],
    })


def _lex(template: str, entity: dict, booking_ref: str | None = None) -> str:
    text, report = lexicalize(template, entity=entity,
                              booking_ref=booking_ref)
    assert report.unfilled == 0, f"fixture template left holes: {template}"
    return text


def _hotel_session(sid: str, db: EntityDb, idx: int, book: bool) -> DialogSession:
    ent = HOTELS[idx % len(HOTELS)]
    belief0 = {"hotel": {"area": ent["area"], "stars": ent["stars"]}}
    goal = {"hotel": GoalDomain(
        informable={"area": ent["area"], "stars": ent["stars"]},
        requestable=["address", "phone"] + (["reference"] if book else []),
        book=book)}
    d0 = len(dbquery.query(db, belief0, "hotel"))
    r0 = "i recommend the [value_name] located in the [value_area] ."
    r1 = ("the address is [value_address] and the phone number is "
          "[value_phone] . can i help with anything else ?")
    turns = [
        Turn(user=f"i am looking for a hotel in the {ent['area']} "
                  f"with {ent['stars']} stars .",
             belief=belief0, db_match=d0,
             act={"hotel": {"recommend": ["name", "area"]}},
             response_delex=r0, response_lex=_lex(r0, ent)),
        Turn(user="what is the address and phone number ?",
             belief=belief0, db_match=d0,
             act={"hotel": {"inform": ["address", "phone"],
                            "reqmore": []}},
             response_delex=r1, response_lex=_lex(r1, ent)),
    ]
    if book:
        ref = booking_reference("hotel", sid, 2)
        belief2 = {"hotel": dict(belief0["hotel"], people="2")}
        r2 = ("booking was successful . your reference number is "
              "[value_reference] .")
        turns.append(Turn(
            user="yes , please book it for 2 people .",
            belief=belief2, db_match=len(dbquery.query(db, belief2, "hotel")),
            act={"hotel": {"offerbooked": ["reference"]}},
            response_delex=r2, response_lex=_lex(r2, ent, booking_ref=ref)))
    return DialogSession(session_id=sid, goal=goal, turns=turns)


def _restaurant_session(sid: str, db: EntityDb, idx: int) -> DialogSession:
    ent = RESTAURANTS[idx % len(RESTAURANTS)]
    belief = {"restaurant": {"food": ent["food"], "area": ent["area"],
                             "pricerange": ent["pricerange"]}}
    goal = {"restaurant": GoalDomain(
        informable=dict(belief["restaurant"]),
        requestable=["address", "postcode"])}
    d = len(dbquery.query(db, belief, "restaurant"))
    r0 = ("the [value_name] serves [value_food] food and is located "
          "in the [value_area] .")
    r1 = ("sure , the address is [value_address] and the postcode is "
          "[value_postcode] .")
    turns = [
        Turn(user=f"i want a {ent['pricerange']} {ent['food']} restaurant "
                  f"in the {ent['area']} .",
             belief=belief, db_match=d,
             act={"restaurant": {"recommend": ["name", "food", "area"]}},
             response_delex=r0, response_lex=_lex(r0, ent)),
        Turn(user="can i have the address and the postcode ?",
             belief=belief, db_match=d,
             act={"restaurant": {"inform": ["address", "postcode"]}},
             response_delex=r1, response_lex=_lex(r1, ent)),
    ]
    return DialogSession(session_id=sid, goal=goal, turns=turns)


def _attraction_session(sid: str, db: EntityDb, idx: int) -> DialogSession:
    ent = ATTRACTIONS[idx % len(ATTRACTIONS)]
    belief = {"attraction": {"type": ent["type"], "area": ent["area"]}}
    goal = {"attraction": GoalDomain(
        informable=dict(belief["attraction"]),
        requestable=["entrancefee"])}
    d = len(dbquery.query(db, belief, "attraction"))
    r0 = "you could visit the [value_name] in the [value_area] ."
    r1 = "the entrance fee is [value_entrancefee] ."
    turns = [
        Turn(user=f"is there a {ent['type']} to visit in the "
                  f"{ent['area']} ?",
             belief=belief, db_match=d,
             act={"attraction": {"recommend": ["name", "area"]}},
             response_delex=r0, response_lex=_lex(r0, ent)),
        Turn(user="what is the entrance fee ?",
             belief=belief, db_match=d,
             act={"attraction": {"inform": ["entrancefee"]}},
             response_delex=r1, response_lex=_lex(r1, ent)),
    ]
    return DialogSession(session_id=sid, goal=goal, turns=turns)


def _train_session(sid: str, db: EntityDb, idx: int) -> DialogSession:
    ent = TRAINS[idx % len(TRAINS)]
    belief = {"train": {"departure": ent["departure"],
                        "destination": ent["destination"],
                        "day": ent["day"]}}
    goal = {"train": GoalDomain(
        informable=dict(belief["train"]),
        requestable=["price", "duration"])}
    d = len(dbquery.query(db, belief, "train"))
    r0 = "[value_id] leaves at [value_leave] and arrives by [value_arrive] ."
    r1 = "the price is [value_price] and the trip takes [value_duration] ."
    turns = [
        Turn(user=f"i need a train from {ent['departure']} to "
                  f"{ent['destination']} on {ent['day']} .",
             belief=belief, db_match=d,
             act={"train": {"inform": ["id", "leave", "arrive"]}},
             response_delex=r0, response_lex=_lex(r0, ent)),
        Turn(user="how much does it cost and how long does it take ?",
             belief=belief, db_match=d,
             act={"train": {"inform": ["price", "duration"]}},
             response_delex=r1, response_lex=_lex(r1, ent)),
    ]
    return DialogSession(session_id=sid, goal=goal, turns=turns)


def _taxi_session(sid: str, idx: int) -> DialogSession:
    car = TAXI_CARS[idx % len(TAXI_CARS)]
    src = ["gonville hotel", "golden wok", "clare college"][idx % 3]
    dst = ["cityroomz", "nandos", "scott polar museum"][idx % 3]
    belief = {"taxi": {"departure": src, "destination": dst}}
    goal = {"taxi": GoalDomain(informable=dict(belief["taxi"]),
                               requestable=["phone", "type"])}
    r0 = ("a [value_type] will pick you up , the contact number is "
          "[value_phone] .")
    turns = [
        Turn(user=f"i need a taxi from {src} to {dst} .",
             belief=belief, db_match=0,
             act={"taxi": {"inform": ["type", "phone"]}},
             response_delex=r0, response_lex=_lex(r0, car)),
    ]
    return DialogSession(session_id=sid, goal=goal, turns=turns)


def build_fixture_corpus(n_sessions: int = 10, seed: int = 0,
                         db: EntityDb | None = None) -> Corpus:
    """Template-generated sessions cycling the five evaluation domains."""
    db = db or build_fixture_db()
    rng = random.Random(seed)
    sessions = []
    for i in range(n_sessions):
        sid = f"fix{i:04d}"
        kind = i % 5
        if kind == 0:
            sessions.append(_hotel_session(sid, db, i // 5,
                                           book=bool(rng.getrandbits(1))))
        elif kind == 1:
            sessions.append(_restaurant_session(sid, db, i // 5))
        elif kind == 2:
            sessions.append(_attraction_session(sid, db, i // 5))
        elif kind == 3:
            sessions.append(_train_session(sid, db, i // 5))
        else:
            sessions.append(_taxi_session(sid, i // 5))
    corpus = Corpus(sessions=sessions, version="2.0")
    corpus.ontology = build_ontology(sessions)
    return corpus
