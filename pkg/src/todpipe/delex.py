"""Domain-adaptive delexicalization and its inverse.

Slot values are replaced by bare ``[value_<slot>]`` placeholders with no
domain prefix, so surface patterns transfer across domains that share an
ontology.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import ontology
from .corpus import _synonym_table

PLACEHOLDER_RE = re.compile(r"\[value_([a-z_]+)\]")

# Requestable-only values that can be recognized without a DB entity.
PHONE_RE = re.compile(r"\b0\d{4,5}[ -]?\d{5,6}\b")
POSTCODE_RE = re.compile(r"\bcb\d{1,2}[ ]?[a-z]{2}\b", re.IGNORECASE)


@dataclass
class PlaceholderMap:
    """Replacements performed on one response, in span order."""

    entries: list = field(default_factory=list)  # (start, end, slot, surface, domain)

    def slots(self):
        return [e[2] for e in self.entries]


@dataclass
class FillReport:
    filled: int = 0
    unfilled: int = 0
    unfilled_slots: list = field(default_factory=list)


def _candidate_values(belief: dict, act: dict, entities: list,
                      version: str = "2.0"):
    """(surface, slot, domain) candidates, longest surface first."""
    seen = set()
    cands = []
    table = _synonym_table(version)
    # Inverse synonym lookup: canonical value -> surface variants, so that
    # matching still fires on non-canonical surface forms.
    variants: dict = {}
    for raw, canon in table["global"].items():
        variants.setdefault((None, canon), []).append(raw)
    for slot, pairs in table["slots"].items():
        for raw, canon in pairs.items():
            variants.setdefault((slot, canon), []).append(raw)

    def add(val, slot, dom):
        val = str(val).strip().lower()
        if not val or val == "dontcare" or slot not in \
                ontology.PLACEHOLDER_SLOTS:
            return
        surfaces = [val]
        surfaces += variants.get((slot, val), [])
        surfaces += variants.get((None, val), [])
        for surface in surfaces:
            key = (surface, slot)
            if key in seen:
                continue
            seen.add(key)
            cands.append((surface, slot, dom))

    for ent, dom in entities:
        for slot, val in ent.items():
            add(val, slot, dom)
    for dom, sv in belief.items():
        for slot, val in sv.items():
            add(val, slot, dom)
    cands.sort(key=lambda c: len(c[0]), reverse=True)
    return cands


def delexicalize(response_lex: str, belief: dict, act: dict,
                 entities: list | None = None,
                 version: str = "2.0") -> tuple[str, PlaceholderMap]:
    """Replace known slot values in a lexicalized response by placeholders.

    ``entities`` is a list of (entity, domain) pairs drawn from the DB for
    the domains active in this turn. Longest surface values are replaced
    first; replacements never overlap. Unmatchable text passes through.
    """
    entities = entities or []
    cands = _candidate_values(belief, act, entities, version)
    text = response_lex
    lower = text.lower()
    taken = [False] * len(text)
    pmap = PlaceholderMap()

    def claim(start, end):
        if any(taken[start:end]):
            return False
        for i in range(start, end):
            taken[i] = True
        return True

    for val, slot, dom in cands:
        digit_like = val.isdigit()
        pattern = re.escape(val)
        for m in re.finditer(pattern, lower):
            start, end = m.start(), m.end()
            before = lower[start - 1] if start > 0 else " "
            after = lower[end] if end < len(lower) else " "
            if before.isalnum() or after.isalnum():
                continue
            if digit_like and (before.isdigit() or after.isdigit()):
                continue
            if claim(start, end):
                pmap.entries.append((start, end, slot, text[start:end], dom))
    for regex, slot in ((PHONE_RE, "phone"), (POSTCODE_RE, "postcode")):
        for m in regex.finditer(text):
            if claim(m.start(), m.end()):
                pmap.entries.append(
                    (m.start(), m.end(), slot, m.group(0), None))

    pmap.entries.sort(key=lambda e: e[0])
    out = []
    pos = 0
    for start, end, slot, surface, dom in pmap.entries:
        out.append(text[pos:start])
        out.append(f"[value_{slot}]")
        pos = end
    out.append(text[pos:])
    return "".join(out), pmap


def lexicalize(response_delex: str, entity: dict | None = None,
               belief: dict | None = None,
               booking_ref: str | None = None) -> tuple[str, FillReport]:
    """Fill placeholders from entity fields, then belief values, then the
    booking reference; unresolvable placeholders are left as-is."""
    belief = belief or {}
    report = FillReport()

    def fill(m):
        slot = m.group(1)
        if entity and slot in entity:
            report.filled += 1
            return str(entity[slot])
        for dom, sv in belief.items():
            if slot in sv and sv[slot] != "dontcare":
                report.filled += 1
                return str(sv[slot])
        if slot == "reference" and booking_ref:
            report.filled += 1
            return booking_ref
        report.unfilled += 1
        report.unfilled_slots.append(slot)
        return m.group(0)

    return PLACEHOLDER_RE.sub(fill, response_delex), report
