"""Static dialog ontology: domains, slots, act types and DB bucket rules.

Everything here is part of the versioned vocabulary contract shared with the
LM service; changing any list is a breaking change to the token registry.
"""

from __future__ import annotations

ALL_DOMAINS = [
    "hotel",
    "restaurant",
    "attraction",
    "train",
    "taxi",
    "hospital",
    "police",
    "general",
]

# Domains backed by an entity database; the rest get [db_nores].
DB_DOMAINS = ["hotel", "restaurant", "attraction", "train"]
NO_DB_DOMAINS = ["taxi", "hospital", "police"]

# Domains that count toward Inform by offering a concrete entity.
ENTITY_DOMAINS = ["hotel", "restaurant", "attraction", "train"]

# Domains usable in evaluation and leave-one-domain-out splits.
EVAL_DOMAINS = ["hotel", "train", "attraction", "restaurant", "taxi"]

INFORMABLE_SLOTS = {
    "hotel": ["area", "day", "internet", "name", "parking", "people",
              "pricerange", "stars", "stay", "type"],
    "restaurant": ["area", "day", "food", "name", "people", "pricerange",
                   "time"],
    "attraction": ["area", "name", "type"],
    "train": ["arrive", "day", "departure", "destination", "leave", "people"],
    "taxi": ["arrive", "departure", "destination", "leave"],
    "hospital": ["department"],
    "police": [],
    "general": [],
}

REQUESTABLE_SLOTS = {
    "hotel": ["address", "area", "internet", "parking", "phone", "postcode",
              "pricerange", "reference", "stars", "type"],
    "restaurant": ["address", "area", "food", "phone", "postcode",
                   "pricerange", "reference"],
    "attraction": ["address", "area", "entrancefee", "phone", "postcode",
                   "type"],
    "train": ["arrive", "duration", "id", "leave", "price", "reference"],
    "taxi": ["phone", "type"],
    "hospital": ["address", "phone", "postcode"],
    "police": ["address", "phone", "postcode"],
    "general": [],
}

ACT_TYPES = [
    "inform",
    "request",
    "recommend",
    "select",
    "book",
    "offerbook",
    "offerbooked",
    "nooffer",
    "nobook",
    "reqmore",
    "bye",
    "greet",
    "welcome",
]

# Slot identifier that marks an entity offer in a delexicalized response.
OFFER_SLOT = {"hotel": "name", "restaurant": "name", "attraction": "name",
              "train": "id"}

# Every slot name that may appear inside a [value_<slot>] placeholder.
PLACEHOLDER_SLOTS = sorted(
    {s for slots in INFORMABLE_SLOTS.values() for s in slots}
    | {s for slots in REQUESTABLE_SLOTS.values() for s in slots}
    | {"choice", "reference"}
)

# Union of informable slot names, used by the span parser to recognize the
# start of a new slot-value pair inside a belief span.
BELIEF_SLOT_NAMES = sorted(
    {s for slots in INFORMABLE_SLOTS.values() for s in slots}
)


def known_domain(domain: str) -> bool:
    return domain in ALL_DOMAINS


def known_act(act: str) -> bool:
    return act in ACT_TYPES
