"""Seeded random belief states, act frames and token soup for tests."""

import random

from todpipe import ontology, spans

VALUE_POOL = {
    "hotel": {"area": ["north", "centre", "west"], "stars": ["0", "3", "4"],
              "parking": ["yes", "no"], "internet": ["yes", "no"],
              "pricerange": ["cheap", "moderate", "expensive"],
              "type": ["hotel", "guesthouse"],
              "name": ["acorn guest house", "cityroomz", "gonville"],
              "people": ["1", "2", "6"], "stay": ["1", "3"],
              "day": ["monday", "friday"]},
    "restaurant": {"food": ["chinese", "modern european", "british"],
                   "area": ["north", "centre", "east"],
                   "pricerange": ["cheap", "moderate", "expensive"],
                   "name": ["golden wok", "cotto"],
                   "time": ["18:15", "12:00"], "day": ["tuesday"],
                   "people": ["2", "4"]},
    "attraction": {"type": ["museum", "college", "park"],
                   "area": ["centre", "west", "north"],
                   "name": ["scott polar museum", "clare college"]},
    "train": {"departure": ["cambridge", "norwich"],
              "destination": ["london kings cross", "stansted airport"],
              "day": ["monday", "friday"], "leave": ["05:00", "08:40"],
              "arrive": ["05:51", "09:08"], "people": ["1", "5"]},
    "taxi": {"departure": ["gonville", "golden wok"],
             "destination": ["cityroomz", "nandos"],
             "leave": ["09:00"], "arrive": ["09:30"]},
}


def random_belief(rng: random.Random) -> dict:
    belief = {}
    domains = rng.sample(list(VALUE_POOL), rng.randint(0, 3))
    for dom in domains:
        slots = rng.sample(list(VALUE_POOL[dom]),
                           rng.randint(1, len(VALUE_POOL[dom])))
        belief[dom] = {s: rng.choice(VALUE_POOL[dom][s]) for s in slots}
    return belief


def random_act(rng: random.Random) -> dict:
    frame = {}
    domains = rng.sample(ontology.ALL_DOMAINS, rng.randint(0, 2))
    for dom in domains:
        acts = {}
        for act in rng.sample(ontology.ACT_TYPES, rng.randint(1, 3)):
            n = rng.randint(0, 3)
            pool = ontology.BELIEF_SLOT_NAMES + ["address", "phone",
                                                 "postcode", "reference"]
            slots = []
            for s in rng.sample(pool, n):
                if s not in slots:
                    slots.append(s)
            acts[act] = slots
        if acts:
            frame[dom] = acts
    return frame


def random_tokens(rng: random.Random, n: int) -> list:
    pool = (spans.SPECIAL_TOKENS
            + ["stars", "4", "north", "area", "hello", "[junk]", "<weird>",
               "pricerange", "guesthouse", ""])
    return [rng.choice(pool) for _ in range(n)]
