"""Entity databases: constraint queries, match-count buckets, selection."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import ontology
from .corpus import UnknownDomain, normalize_value


@dataclass
class EntityDb:
    """Per-domain entity lists; insertion order is the selection order."""

    domains: dict = field(default_factory=dict)  # domain -> [entity, ...]

    def entities(self, domain: str) -> list:
        if domain not in self.domains:
            raise UnknownDomain(f"no database for domain {domain!r}")
        return self.domains[domain]

    def to_dict(self):
        return {dom: [dict(e) for e in ents]
                for dom, ents in self.domains.items()}


def load_db(path, version: str = "2.0") -> EntityDb:
    """Load a DB file: one JSON document mapping domain -> entity array."""
    with open(Path(path), encoding="utf-8") as f:
        data = json.load(f)
    domains = {}
    for dom, ents in data.items():
        dom = dom.strip().lower()
        domains[dom] = [
            {slot: normalize_value(dom, slot, val, version)
             for slot, val in ent.items()}
            for ent in ents
        ]
    return EntityDb(domains=domains)


def write_db(db: EntityDb, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(db.to_dict(), f, ensure_ascii=False, indent=1)
        f.write("\n")


def query(db: EntityDb, belief: dict, domain: str) -> list:
    """Entities matching every constrained slot of ``belief[domain]``.

    Matching is exact string equality post-normalization; ``dontcare``
    matches everything; constraint slots that no entity of the domain
    carries (booking slots like people/stay) are ignored. Result order is
    DB insertion order.
    """
    ents = db.entities(domain)
    constraints = belief.get(domain, {})
    schema = set().union(*(e.keys() for e in ents)) if ents else set()
    active = {s: v for s, v in constraints.items()
              if v != "dontcare" and s in schema}
    return [e for e in ents
            if all(e.get(s) == v for s, v in active.items())]


def bucket(count: int, domain: str) -> str:
    """Match-count bucket token; no-database domains map to [db_nores]."""
    if domain is None or domain in ontology.NO_DB_DOMAINS \
            or domain not in ontology.DB_DOMAINS:
        return "[db_nores]"
    if count <= 0:
        return "[db_0]"
    if count == 1:
        return "[db_1]"
    if count <= 3:
        return "[db_2]"
    return "[db_3]"


def select_entity(results: list, policy: str = "first",
                  seed: int = 0) -> dict | None:
    """Pick one entity from query results; deterministic under a fixed seed."""
    if not results:
        return None
    if policy == "first":
        return results[0]
    if policy == "seeded-random":
        return random.Random(seed).choice(results)
    raise ValueError(f"unknown selection policy {policy!r}")


def booking_reference(domain: str, session_id: str, turn_index: int = 0) -> str:
    """Deterministic pseudo reference number for a simulated booking."""
    digest = hashlib.sha256(
        f"{domain}|{session_id}|{turn_index}".encode("utf-8")).hexdigest()
    return digest[:8].upper()
