"""Session-level training sequences, context construction and truncation.

A session is serialized turn by turn into blocks; each block covers one
full turn cycle. Truncation always drops whole blocks from the front so
the span grammar is never cut mid-component.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import dbquery, spans
from .corpus import Corpus, DialogSession, Turn

SEQUENCE_MODES = ("session_delex", "ur_only", "dst_lex")

CONTENT_MASKS = ("full", "ur_only", "bda_only")


class ContextError(Exception):
    """A context policy asked for material the history does not carry."""


@dataclass
class TokenBudget:
    max_len: int = 1024
    truncation: str = "pre"

    def __post_init__(self):
        if self.max_len <= 0:
            raise ValueError("max_len must be positive")


def default_measurer(tokens: list[str]) -> int:
    """Conservative offline estimate of the LM subword length."""
    return math.ceil(len(tokens) * 1.3)


@dataclass
class SessionSequence:
    blocks: list = field(default_factory=list)  # list[list[str]]

    @property
    def tokens(self) -> list[str]:
        return [t for block in self.blocks for t in block]

    def __len__(self):
        return sum(len(b) for b in self.blocks)


@dataclass
class TruncationResult:
    sequence: SessionSequence
    dropped: int = 0
    overflow_warning: bool = False


def active_domain(belief: dict, previous: str | None = None) -> str | None:
    """Last-mentioned domain of a belief state, carrying the previous
    turn's domain when the state is empty."""
    domains = [d for d, sv in belief.items() if sv]
    return domains[-1] if domains else previous


def turn_db_token(turn: Turn, domain: str | None,
                  db: dbquery.EntityDb | None = None) -> str:
    """Bucket token for a gold turn, preferring the annotated match count."""
    if domain is None:
        return "[db_nores]"
    count = turn.db_match
    if count is None:
        if db is not None and domain in db.domains:
            count = len(dbquery.query(db, turn.belief, domain))
        else:
            count = 0
    return dbquery.bucket(count, domain)


def _turn_block(turn: Turn, mode: str, domain: str | None,
                db: dbquery.EntityDb | None) -> list[str]:
    user = [spans.SOS_U] + turn.user.split() + [spans.EOS_U]
    if mode == "ur_only":
        resp = [spans.SOS_R] + turn.response_delex.split() + [spans.EOS_R]
        return user + resp
    response = turn.response_lex if mode == "dst_lex" else turn.response_delex
    return (
        user
        + spans.encode_belief(turn.belief)
        + spans.encode_db(turn_db_token(turn, domain, db))
        + spans.encode_act(turn.act)
        + [spans.SOS_R] + response.split() + [spans.EOS_R]
    )


def build_session_sequence(session: DialogSession, mode: str = "session_delex",
                           db: dbquery.EntityDb | None = None
                           ) -> SessionSequence:
    """Concatenate one block per turn in the order the dialog unfolds."""
    if mode not in SEQUENCE_MODES:
        raise ValueError(f"unknown sequence mode {mode!r}")
    blocks = []
    domain = None
    for turn in session.turns:
        domain = active_domain(turn.belief, domain)
        blocks.append(_turn_block(turn, mode, domain, db))
    return SessionSequence(blocks=blocks)


def truncate(seq: SessionSequence, budget: TokenBudget,
             measurer=default_measurer) -> TruncationResult:
    """Drop whole blocks from the front until the measured length fits.

    The most recent block is always retained; if it alone exceeds the
    budget it is returned with a warning flag.
    """
    blocks = list(seq.blocks)
    dropped = 0
    while len(blocks) > 1 and \
            measurer([t for b in blocks for t in b]) > budget.max_len:
        blocks.pop(0)
        dropped += 1
    warning = bool(blocks) and \
        measurer([t for b in blocks for t in b]) > budget.max_len
    return TruncationResult(SessionSequence(blocks=blocks), dropped, warning)


# ---------------------------------------------------------------------------
# Context construction

@dataclass
class HistoryTurn:
    """One realized turn as seen by later context construction.

    Oracle fields may be None when no ground truth exists (live chat).
    Response surfaces are stored as already chosen by the run setting
    (delexicalized or lexicalized).
    """

    user: str
    belief_generated: dict = field(default_factory=dict)
    belief_oracle: dict | None = None
    db_generated: str = "[db_nores]"
    db_oracle: str | None = None
    act_generated: dict = field(default_factory=dict)
    act_oracle: dict | None = None
    resp_generated: str = ""
    resp_oracle: str | None = None

    def pick(self, component: str, source: str):
        gen = getattr(self, component + "_generated")
        if source == "generated":
            return gen
        oracle = getattr(self, component + "_oracle")
        if oracle is None:
            raise ContextError(
                f"policy requests ground-truth {component} absent "
                "from history")
        return oracle


def _history_block(h: HistoryTurn, policy) -> list[str]:
    belief = h.pick("belief", policy.belief_source)
    db_tok = h.pick("db", policy.belief_source)
    act = h.pick("act", policy.act_resp_source)
    resp = h.pick("resp", policy.act_resp_source)
    user = [spans.SOS_U] + h.user.split() + [spans.EOS_U]
    b = spans.encode_belief(belief)
    d = spans.encode_db(db_tok)
    a = spans.encode_act(act)
    r = [spans.SOS_R] + resp.split() + [spans.EOS_R]
    if policy.content_mask == "ur_only":
        return user + r
    if policy.content_mask == "bda_only":
        return b + d + a
    return user + b + d + a + r


def build_context(history: list, current_user: str, policy,
                  budget: TokenBudget | None = None,
                  measurer=default_measurer) -> list[str]:
    """Assemble the decoding context for the current turn.

    Emits the policy-selected components of each retained history turn,
    then the current user utterance, ending with ``<sos_b>`` so belief
    decoding can start immediately.
    """
    retained = history if policy.window == "all" else history[-1:]
    blocks = [_history_block(h, policy) for h in retained]
    current = [spans.SOS_U] + current_user.split() + [spans.EOS_U, spans.SOS_B]
    blocks.append(current)
    if budget is not None:
        blocks = truncate(SessionSequence(blocks=blocks), budget,
                          measurer).sequence.blocks
    return [t for b in blocks for t in b]


# ---------------------------------------------------------------------------
# Export

def export_training_file(corpus: Corpus, mode: str, out,
                         db: dbquery.EntityDb | None = None) -> int:
    """One space-separated token sequence per line; returns the line count.

    A companion ``<out>.meta.json`` records mode, registry version and
    corpus version.
    """
    count = 0
    with open(out, "w", encoding="utf-8") as f:
        for session in corpus.sessions:
            seq = build_session_sequence(session, mode, db)
            f.write(" ".join(seq.tokens) + "\n")
            count += 1
    meta = {
        "mode": mode,
        "registry_version": spans.registry_version(),
        "corpus_version": corpus.version,
        "sequences": count,
    }
    with open(str(out) + ".meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=1)
        f.write("\n")
    return count
