"""Token-level span grammar for belief states, acts and DB result tokens.

Every structured component is serialized between ``<sos_?>``/``<eos_?>``
framing tokens; domains, act types, DB buckets and value placeholders are
bracketed special tokens. The full registry is versioned and exported for
the LM service so both sides share one vocabulary.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import ontology

SOS_U, EOS_U = "<sos_u>", "<eos_u>"
SOS_B, EOS_B = "<sos_b>", "<eos_b>"
SOS_DB, EOS_DB = "<sos_db>", "<eos_db>"
SOS_A, EOS_A = "<sos_a>", "<eos_a>"
SOS_R, EOS_R = "<sos_r>", "<eos_r>"

FRAMING_TOKENS = [SOS_U, EOS_U, SOS_B, EOS_B, SOS_DB, EOS_DB,
                  SOS_A, EOS_A, SOS_R, EOS_R]

DB_TOKENS = ["[db_0]", "[db_1]", "[db_2]", "[db_3]", "[db_nores]"]

DOMAIN_TOKENS = [f"[{d}]" for d in ontology.ALL_DOMAINS]
ACT_TOKENS = [f"[{a}]" for a in ontology.ACT_TYPES]
PLACEHOLDER_TOKENS = [f"[value_{s}]" for s in ontology.PLACEHOLDER_SLOTS]

SPECIAL_TOKENS = (FRAMING_TOKENS + DOMAIN_TOKENS + ACT_TOKENS
                  + DB_TOKENS + PLACEHOLDER_TOKENS)

_DOMAIN_BY_TOKEN = {f"[{d}]": d for d in ontology.ALL_DOMAINS}
_ACT_BY_TOKEN = {f"[{a}]": a for a in ontology.ACT_TYPES}
_BELIEF_SLOTS = set(ontology.BELIEF_SLOT_NAMES)


def registry_version() -> str:
    """Content fingerprint of the token registry."""
    h = hashlib.sha256("\n".join(SPECIAL_TOKENS).encode("utf-8"))
    return h.hexdigest()[:12]


def write_registry(path) -> None:
    """Export the registry as a plain-text list, one token per line."""
    with open(path, "w", encoding="utf-8") as f:
        for tok in SPECIAL_TOKENS:
            f.write(tok + "\n")


class MalformedSpan(Exception):
    def __init__(self, message, index=None):
        self.index = index
        where = f" at token {index}" if index is not None else ""
        super().__init__(message + where)


@dataclass
class ParseResult:
    value: object
    diagnostics: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Belief spans

def encode_belief(belief: dict) -> list[str]:
    """``<sos_b> [dom] slot value ... <eos_b>``.

    Domain order follows the first-mention order recorded in the state;
    slots are emitted in canonical (alphabetical) order.
    """
    toks = [SOS_B]
    for dom, sv in belief.items():
        if not sv:
            continue
        toks.append(f"[{dom}]")
        for slot in sorted(sv):
            toks.append(slot)
            toks.extend(str(sv[slot]).split())
    toks.append(EOS_B)
    return toks


def parse_belief(seq: list[str], strictness: str = "strict") -> ParseResult:
    """Inverse of :func:`encode_belief`.

    Strict mode raises :class:`MalformedSpan` on any structural defect.
    Tolerant mode never raises: unknown tokens are skipped, unterminated
    spans are closed at sequence end, empty values are dropped and the last
    value wins on duplicate slots.
    """
    strict = strictness == "strict"
    diags: list = []
    belief: dict = {}
    dom = None
    slot = None
    value_words: list = []

    def flush():
        nonlocal slot, value_words
        if dom and slot:
            if value_words:
                belief.setdefault(dom, {})[slot] = " ".join(value_words)
            elif strict:
                raise MalformedSpan(f"slot {slot!r} has no value")
            else:
                diags.append(f"dropped empty value for slot {slot!r}")
        slot = None
        value_words = []

    it = list(seq)
    if strict:
        if not it or it[0] != SOS_B:
            raise MalformedSpan(f"belief span must start with {SOS_B}",
                                index=0)
        if EOS_B not in it:
            raise MalformedSpan(f"belief span missing {EOS_B}")
    closed = False
    for i, tok in enumerate(it):
        if tok == SOS_B:
            if i != 0:
                if strict:
                    raise MalformedSpan("unexpected <sos_b>", index=i)
                diags.append(f"skipped stray {SOS_B} at {i}")
            continue
        if tok == EOS_B:
            flush()
            closed = True
            if strict and i != len(it) - 1:
                raise MalformedSpan("tokens after <eos_b>", index=i + 1)
            break
        if tok in _DOMAIN_BY_TOKEN:
            flush()
            dom = _DOMAIN_BY_TOKEN[tok]
            continue
        if tok.startswith("<") or (tok.startswith("[") and tok.endswith("]")):
            if strict:
                raise MalformedSpan(f"unexpected special token {tok!r}",
                                    index=i)
            diags.append(f"skipped unknown token {tok!r} at {i}")
            continue
        if dom is None:
            if strict:
                raise MalformedSpan(f"value token {tok!r} before any domain",
                                    index=i)
            diags.append(f"skipped token {tok!r} outside a domain at {i}")
            continue
        if tok in _BELIEF_SLOTS and (slot is None or value_words):
            flush()
            slot = tok
        elif slot is None:
            if strict:
                raise MalformedSpan(f"expected a slot name, got {tok!r}",
                                    index=i)
            diags.append(f"skipped token {tok!r} expecting a slot at {i}")
        else:
            value_words.append(tok)
    if not closed:
        flush()
        if not strict:
            diags.append("closed unterminated belief span")
    # Drop empty domain sub-maps introduced by dropped values.
    belief = {d: sv for d, sv in belief.items() if sv}
    return ParseResult(belief, diags)


# ---------------------------------------------------------------------------
# Act spans

def encode_act(act: dict) -> list[str]:
    """``<sos_a> [dom] [acttype] slot ... <eos_a>``; slot order preserved."""
    toks = [SOS_A]
    for dom, acts in act.items():
        if not acts:
            continue
        toks.append(f"[{dom}]")
        for a, slots in acts.items():
            toks.append(f"[{a}]")
            toks.extend(slots)
    toks.append(EOS_A)
    return toks


def parse_act(seq: list[str], strictness: str = "strict") -> ParseResult:
    strict = strictness == "strict"
    diags: list = []
    frame: dict = {}
    dom = None
    act = None

    it = list(seq)
    if strict:
        if not it or it[0] != SOS_A:
            raise MalformedSpan(f"act span must start with {SOS_A}", index=0)
        if EOS_A not in it:
            raise MalformedSpan(f"act span missing {EOS_A}")
    closed = False
    for i, tok in enumerate(it):
        if tok == SOS_A:
            if i != 0:
                if strict:
                    raise MalformedSpan("unexpected <sos_a>", index=i)
                diags.append(f"skipped stray {SOS_A} at {i}")
            continue
        if tok == EOS_A:
            closed = True
            if strict and i != len(it) - 1:
                raise MalformedSpan("tokens after <eos_a>", index=i + 1)
            break
        if tok in _DOMAIN_BY_TOKEN:
            dom = _DOMAIN_BY_TOKEN[tok]
            act = None
            frame.setdefault(dom, {})
            continue
        if tok in _ACT_BY_TOKEN:
            if dom is None:
                if strict:
                    raise MalformedSpan(f"act marker {tok!r} before any "
                                        "domain", index=i)
                diags.append(f"skipped act marker {tok!r} without domain")
                continue
            act = _ACT_BY_TOKEN[tok]
            frame[dom].setdefault(act, [])
            continue
        if tok.startswith("<") or (tok.startswith("[") and tok.endswith("]")):
            if strict:
                raise MalformedSpan(f"unknown marker {tok!r}", index=i)
            diags.append(f"skipped unknown marker {tok!r} at {i}")
            continue
        if dom is None or act is None:
            if strict:
                raise MalformedSpan(f"slot {tok!r} outside an act", index=i)
            diags.append(f"skipped slot {tok!r} outside an act at {i}")
            continue
        if tok not in frame[dom][act]:
            frame[dom][act].append(tok)
    if not closed and strict:
        raise MalformedSpan(f"act span missing {EOS_A}")
    if not closed:
        diags.append("closed unterminated act span")
    frame = {d: acts for d, acts in frame.items() if acts}
    return ParseResult(frame, diags)


# ---------------------------------------------------------------------------
# DB spans

def encode_db(db_token: str) -> list[str]:
    if db_token not in DB_TOKENS:
        raise ValueError(f"unknown db token {db_token!r}")
    return [SOS_DB, db_token, EOS_DB]


def parse_db(seq: list[str], strictness: str = "strict") -> ParseResult:
    strict = strictness == "strict"
    found = [t for t in seq if t in DB_TOKENS]
    if strict:
        if list(seq) != [SOS_DB, found[0] if found else None, EOS_DB]:
            raise MalformedSpan("malformed db span")
        return ParseResult(found[0])
    diags = []
    if not found:
        diags.append("no db token found, defaulting to [db_nores]")
        return ParseResult("[db_nores]", diags)
    if len(found) > 1:
        diags.append("multiple db tokens, keeping the last")
    return ParseResult(found[-1], diags)
