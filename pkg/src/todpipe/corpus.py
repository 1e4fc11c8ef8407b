"""Corpus ingestion, normalization, validation and splitting.

The canonical on-disk format is a single JSON document with a ``sessions``
array; the raw adapter reads the public MultiWOZ 2.0/2.1 annotation layout
(``data.json`` style: goal + alternating user/system log entries).
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import ontology

PLACEHOLDER_RE = re.compile(r"\[value_([a-z_]+)\]")

BeliefState = dict  # domain -> {slot -> canonical value}
ActFrame = dict     # domain -> {act type -> [slot, ...]}


class CorpusError(Exception):
    """Base error for corpus loading problems."""


class ParseFailure(CorpusError):
    def __init__(self, message, path=None, location=None):
        self.path = path
        self.location = location
        where = f" at {location}" if location else ""
        super().__init__(f"{message}{where}" + (f" ({path})" if path else ""))


class UnknownActType(CorpusError):
    pass


class UnknownDomain(CorpusError):
    pass


@dataclass
class GoalDomain:
    informable: dict = field(default_factory=dict)
    requestable: list = field(default_factory=list)
    book: bool = False

    def to_dict(self):
        return {"informable": dict(self.informable),
                "requestable": list(self.requestable),
                "book": self.book}

    @classmethod
    def from_dict(cls, d):
        return cls(informable=dict(d.get("informable", {})),
                   requestable=list(d.get("requestable", [])),
                   book=bool(d.get("book", False)))


@dataclass
class Turn:
    user: str
    belief: BeliefState
    act: ActFrame
    response_delex: str
    response_lex: str
    db_match: int | None = None

    def to_dict(self):
        d = {
            "user": self.user,
            "belief": {dom: dict(sv) for dom, sv in self.belief.items()},
            "db_match": self.db_match,
            "act": {dom: {a: list(s) for a, s in acts.items()}
                    for dom, acts in self.act.items()},
            "response_delex": self.response_delex,
            "response_lex": self.response_lex,
        }
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            user=d["user"],
            belief={dom: dict(sv) for dom, sv in d.get("belief", {}).items()},
            act={dom: {a: list(s) for a, s in acts.items()}
                 for dom, acts in d.get("act", {}).items()},
            response_delex=d.get("response_delex", ""),
            response_lex=d.get("response_lex", ""),
            db_match=d.get("db_match"),
        )


@dataclass
class DialogSession:
    session_id: str
    goal: dict  # domain -> GoalDomain
    turns: list  # list[Turn]

    def domains(self) -> set:
        """All domains mentioned in the goal or any belief state."""
        doms = set(self.goal)
        for t in self.turns:
            doms.update(t.belief)
        return doms

    def to_dict(self):
        return {
            "session_id": self.session_id,
            "goal": {dom: g.to_dict() for dom, g in self.goal.items()},
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            session_id=d["session_id"],
            goal={dom: GoalDomain.from_dict(g)
                  for dom, g in d.get("goal", {}).items()},
            turns=[Turn.from_dict(t) for t in d.get("turns", [])],
        )


@dataclass
class Corpus:
    sessions: list
    ontology: dict = field(default_factory=dict)  # domain -> slot -> [values]
    version: str = "2.0"

    def session_ids(self):
        return [s.session_id for s in self.sessions]

    def get(self, session_id: str) -> DialogSession:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        raise KeyError(session_id)

    def to_dict(self):
        return {
            "version": self.version,
            "ontology": {dom: {slot: list(vals)
                               for slot, vals in slots.items()}
                         for dom, slots in self.ontology.items()},
            "sessions": [s.to_dict() for s in self.sessions],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            sessions=[DialogSession.from_dict(s)
                      for s in d.get("sessions", [])],
            ontology=d.get("ontology", {}),
            version=d.get("version", "2.0"),
        )


@dataclass
class ValidationReport:
    out_of_ontology: list = field(default_factory=list)
    placeholder_leaks: list = field(default_factory=list)
    missing_placeholders: list = field(default_factory=list)

    def is_clean(self) -> bool:
        return not (self.out_of_ontology or self.placeholder_leaks
                    or self.missing_placeholders)

    def to_dict(self):
        return {
            "out_of_ontology": list(self.out_of_ontology),
            "placeholder_leaks": list(self.placeholder_leaks),
            "missing_placeholders": list(self.missing_placeholders),
        }


# ---------------------------------------------------------------------------
# Value normalization

_WS_RE = re.compile(r"\s+")
_synonym_cache: dict = {}


def _synonym_table(version: str) -> dict:
    key = "2.1" if version.startswith("2.1") else "2.0"
    if key not in _synonym_cache:
        name = "synonyms_21.json" if key == "2.1" else "synonyms_20.json"
        data = resources.files("todpipe.data").joinpath(name).read_text("utf-8")
        _synonym_cache[key] = json.loads(data)
    return _synonym_cache[key]


def normalize_value(domain: str, slot: str, raw: str,
                    version: str = "2.0") -> str:
    """Canonicalize a slot value: lowercase, collapse whitespace, synonyms.

    Idempotent: canonical forms are fixed points of the synonym table.
    Unknown values pass through normalized (``validate`` reports them).
    """
    v = _WS_RE.sub(" ", str(raw).strip().lower())
    table = _synonym_table(version)
    v = table["global"].get(v, v)
    v = table["slots"].get(slot, {}).get(v, v)
    return v


def normalize_belief(belief: BeliefState, version: str = "2.0") -> BeliefState:
    """Normalize every value, dropping empty values and empty domain maps."""
    out = {}
    for dom, sv in belief.items():
        clean = {}
        for slot, val in sv.items():
            nv = normalize_value(dom, slot, val, version)
            if nv:
                clean[slot] = nv
        if clean:
            out[dom] = clean
    return out


# ---------------------------------------------------------------------------
# Loading and writing

def _check_acts(act: ActFrame, session_id: str):
    for dom, acts in act.items():
        if not ontology.known_domain(dom):
            raise UnknownDomain(f"unknown domain {dom!r} in session "
                                f"{session_id}")
        for a in acts:
            if not ontology.known_act(a):
                raise UnknownActType(f"unknown act type {a!r} in session "
                                     f"{session_id}")


def load_corpus(path, format: str = "canonical",
                version: str | None = None) -> Corpus:
    """Load a corpus file in ``canonical`` or ``multiwoz-raw`` format."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseFailure(f"invalid JSON: {e.msg}", path=str(path),
                           location=f"line {e.lineno} col {e.colno}") from e
    if format == "canonical":
        corpus = Corpus.from_dict(data)
        if version:
            corpus.version = version
    elif format == "multiwoz-raw":
        corpus = _load_multiwoz_raw(data, version or "2.0", path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")

    seen = set()
    for s in corpus.sessions:
        if s.session_id in seen:
            raise ParseFailure(f"duplicate session_id {s.session_id!r}",
                               path=str(path))
        seen.add(s.session_id)
        if not s.turns:
            raise ParseFailure(f"session {s.session_id!r} has no turns",
                               path=str(path))
        for t in s.turns:
            t.belief = normalize_belief(t.belief, corpus.version)
            _check_acts(t.act, s.session_id)
    if not corpus.ontology:
        corpus.ontology = build_ontology(corpus.sessions)
    return corpus


def write_canonical(corpus: Corpus, path) -> None:
    """Write the canonical format with stable key ordering."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(corpus.to_dict(), f, ensure_ascii=False, indent=1)
        f.write("\n")


def build_ontology(sessions) -> dict:
    """Collect the value set observed per domain/slot across belief states."""
    onto: dict = {}
    for s in sessions:
        for t in s.turns:
            for dom, sv in t.belief.items():
                dslots = onto.setdefault(dom, {})
                for slot, val in sv.items():
                    dslots.setdefault(slot, set()).add(val)
    return {dom: {slot: sorted(vals) for slot, vals in sorted(slots.items())}
            for dom, slots in sorted(onto.items())}


# Raw MultiWOZ field mapping: annotation slot names -> canonical slot names.
_RAW_SLOT_MAP = {
    "price range": "pricerange",
    "pricerange": "pricerange",
    "leaveat": "leave",
    "leave at": "leave",
    "arriveby": "arrive",
    "arrive by": "arrive",
    "trainid": "id",
    "entrance fee": "entrancefee",
    "book people": "people",
    "book day": "day",
    "book stay": "stay",
    "book time": "time",
}

_RAW_ACT_MAP = {
    "inform": "inform",
    "request": "request",
    "recommend": "recommend",
    "select": "select",
    "book": "book",
    "offerbook": "offerbook",
    "offerbooked": "offerbooked",
    "nooffer": "nooffer",
    "nobook": "nobook",
    "reqmore": "reqmore",
    "bye": "bye",
    "greet": "greet",
    "welcome": "welcome",
}


def _canon_slot(slot: str) -> str:
    s = slot.strip().lower()
    return _RAW_SLOT_MAP.get(s, s)


def _raw_belief(metadata: dict, version: str) -> BeliefState:
    belief: BeliefState = {}
    for dom, parts in metadata.items():
        dom = dom.strip().lower()
        if not ontology.known_domain(dom):
            raise UnknownDomain(f"unknown domain {dom!r} in raw metadata")
        sv = {}
        semi = parts.get("semi", {})
        book = parts.get("book", {})
        for slot, val in semi.items():
            slot = _canon_slot(slot)
            nv = normalize_value(dom, slot, val, version)
            if nv:
                sv[slot] = nv
        for slot, val in book.items():
            if slot == "booked" or isinstance(val, (list, dict)):
                continue
            slot = _canon_slot(slot)
            nv = normalize_value(dom, slot, val, version)
            if nv:
                sv[slot] = nv
        if sv:
            belief[dom] = sv
    return belief


def _raw_acts(dialog_act: dict, version: str) -> ActFrame:
    frame: ActFrame = {}
    for key, pairs in dialog_act.items():
        try:
            dom, act = key.strip().lower().split("-", 1)
        except ValueError:
            raise ParseFailure(f"malformed act key {key!r}")
        if dom == "booking":
            dom = "general"
        if not ontology.known_domain(dom):
            raise UnknownDomain(f"unknown domain {dom!r} in dialog act")
        if act not in _RAW_ACT_MAP:
            raise UnknownActType(f"unknown act type {act!r}")
        act = _RAW_ACT_MAP[act]
        slots = frame.setdefault(dom, {}).setdefault(act, [])
        for pair in pairs:
            slot = _canon_slot(str(pair[0])) if pair else "none"
            if slot in ("none", "") or slot in slots:
                continue
            slots.append(slot)
    return frame


def _raw_goal(goal: dict, version: str) -> dict:
    out = {}
    for dom, spec in goal.items():
        dom = dom.strip().lower()
        if dom in ("message", "topic") or not isinstance(spec, dict) \
                or not spec:
            continue
        if not ontology.known_domain(dom):
            continue
        g = GoalDomain()
        for slot, val in spec.get("info", {}).items():
            slot = _canon_slot(slot)
            nv = normalize_value(dom, slot, val, version)
            if nv:
                g.informable[slot] = nv
        for slot in spec.get("reqt", []):
            slot = _canon_slot(slot)
            if slot not in g.requestable:
                g.requestable.append(slot)
        if spec.get("book"):
            g.book = True
            g.requestable.append("reference") \
                if "reference" not in g.requestable else None
        if g.informable or g.requestable or g.book:
            out[dom] = g
    return out


def _load_multiwoz_raw(data: dict, version: str, path) -> Corpus:
    sessions = []
    for dial_id, dial in data.items():
        log = dial.get("log", [])
        turns = []
        for i in range(0, len(log) - 1, 2):
            user_entry, sys_entry = log[i], log[i + 1]
            belief = _raw_belief(sys_entry.get("metadata", {}), version)
            act = _raw_acts(sys_entry.get("dialog_act", {}), version)
            resp = _WS_RE.sub(" ", sys_entry.get("text", "").strip())
            turns.append(Turn(
                user=_WS_RE.sub(" ", user_entry.get("text", "").strip()),
                belief=belief,
                act=act,
                response_delex=sys_entry.get("text_delex", resp),
                response_lex=resp,
            ))
        if not turns:
            continue
        sessions.append(DialogSession(
            session_id=dial_id,
            goal=_raw_goal(dial.get("goal", {}), version),
            turns=turns,
        ))
    return Corpus(sessions=sessions, version=version,
                  ontology=build_ontology(sessions))


# ---------------------------------------------------------------------------
# Validation

def validate(corpus: Corpus) -> ValidationReport:
    """Report out-of-ontology values and placeholder invariant breaches."""
    report = ValidationReport()
    onto = corpus.ontology
    for s in corpus.sessions:
        for ti, t in enumerate(s.turns):
            for dom, sv in t.belief.items():
                for slot, val in sv.items():
                    if val == "dontcare":
                        continue
                    known = onto.get(dom, {}).get(slot)
                    if known is not None and val not in known:
                        report.out_of_ontology.append(
                            (s.session_id, ti, dom, slot, val))
            if PLACEHOLDER_RE.search(t.response_lex):
                report.placeholder_leaks.append((s.session_id, ti))
            for dom, sv in t.belief.items():
                for slot, val in sv.items():
                    if len(val) > 3 and val != "dontcare" \
                            and re.search(rf"\b{re.escape(val)}\b",
                                          t.response_delex):
                        report.missing_placeholders.append(
                            (s.session_id, ti, slot, val))
    return report


# ---------------------------------------------------------------------------
# Splits

def split_train_dev_test(corpus: Corpus, dev_n: int = 1000,
                         test_n: int = 1000, seed: int = 0):
    """Partition sessions into train/dev/test.

    Dev and test exclude hospital and police sessions, mirroring the
    benchmark convention.
    """
    rng = random.Random(seed)
    eligible = [s for s in corpus.sessions
                if not s.domains() & {"hospital", "police"}]
    if dev_n + test_n > len(eligible):
        raise ValueError("not enough eligible sessions for dev/test")
    picked = rng.sample(eligible, dev_n + test_n)
    dev_ids = {s.session_id for s in picked[:dev_n]}
    test_ids = {s.session_id for s in picked[dev_n:]}
    train = [s for s in corpus.sessions
             if s.session_id not in dev_ids and s.session_id not in test_ids]
    dev = [s for s in corpus.sessions if s.session_id in dev_ids]
    test = [s for s in corpus.sessions if s.session_id in test_ids]
    return train, dev, test


def split_leave_one_domain_out(corpus: Corpus, held_out: str,
                               fewshot_n: int, seed: int = 0) -> dict:
    """Hold one domain out for zero/few-shot domain-transfer experiments."""
    if held_out not in ontology.EVAL_DOMAINS:
        raise ValueError(f"held-out domain must be one of "
                         f"{ontology.EVAL_DOMAINS}, got {held_out!r}")
    mentioning = [s for s in corpus.sessions if held_out in s.domains()]
    others = [s for s in corpus.sessions if held_out not in s.domains()]
    if fewshot_n > len(mentioning):
        raise ValueError(f"fewshot_n={fewshot_n} exceeds {len(mentioning)} "
                         f"sessions mentioning {held_out!r}")
    rng = random.Random(seed)
    fewshot = rng.sample(mentioning, fewshot_n)
    fewshot_ids = {s.session_id for s in fewshot}
    # 10% of the remaining-domain sessions are reserved for in-domain eval
    # so the four sets partition the input corpus.
    n_eval_in = max(1, len(others) // 10) if others else 0
    eval_in = rng.sample(others, n_eval_in) if n_eval_in else []
    eval_in_ids = {s.session_id for s in eval_in}
    return {
        "train_without": [s for s in others
                          if s.session_id not in eval_in_ids],
        "fewshot": fewshot,
        "eval_in_domain": eval_in,
        "eval_held_out": [s for s in mentioning
                          if s.session_id not in fewshot_ids],
    }
