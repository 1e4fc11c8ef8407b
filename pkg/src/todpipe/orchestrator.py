"""Turn-by-turn session execution over a pluggable decoder.

Within a turn the decode order is fixed: belief, then DB lookup, then act,
then response. Sessions are independent units of parallelism; each session
is strictly sequential internally.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import httpx

from . import dbquery, sequence, spans
from .corpus import Corpus, DialogSession, Turn
from .dbquery import EntityDb
from .sequence import HistoryTurn, TokenBudget

SETTINGS = ("response_generation", "policy_optimization", "end_to_end", "dst")


class DecoderError(Exception):
    """Decoder transport failure after retries."""


class RegistryMismatch(Exception):
    """The LM service was built against a different token registry."""


@dataclass
class ContextPolicy:
    window: str = "all"                 # all | prev
    belief_source: str = "generated"    # generated | oracle
    act_resp_source: str = "generated"  # generated | oracle
    content_mask: str = "full"          # full | ur_only | bda_only

    def __post_init__(self):
        if self.window not in ("all", "prev"):
            raise ValueError(f"bad window {self.window!r}")
        if self.belief_source not in ("generated", "oracle"):
            raise ValueError(f"bad belief_source {self.belief_source!r}")
        if self.act_resp_source not in ("generated", "oracle"):
            raise ValueError(f"bad act_resp_source {self.act_resp_source!r}")
        if self.content_mask not in sequence.CONTENT_MASKS:
            raise ValueError(f"bad content_mask {self.content_mask!r}")
        if self.content_mask != "full" and self.window != "all":
            raise ValueError("content masks require window=all")

    def to_dict(self):
        return {"window": self.window, "belief_source": self.belief_source,
                "act_resp_source": self.act_resp_source,
                "content_mask": self.content_mask}


@dataclass
class DecodeParams:
    greedy: bool = True
    temperature: float = 0.7
    max_new_belief: int = 80
    max_new_act: int = 40
    max_new_response: int = 120

    def max_new_for(self, stop: str) -> int:
        return {spans.EOS_B: self.max_new_belief,
                spans.EOS_A: self.max_new_act,
                spans.EOS_R: self.max_new_response}.get(stop, 120)


@dataclass
class DecodeResult:
    tokens: list
    stop_reason: str  # "stop_token" | "length"


@dataclass
class TurnRecord:
    user: str
    belief: dict
    db_token: str
    act: dict
    response: str
    provenance: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return {
            "user": self.user,
            "belief": {d: dict(sv) for d, sv in self.belief.items()},
            "db_token": self.db_token,
            "act": {d: {a: list(s) for a, s in acts.items()}
                    for d, acts in self.act.items()},
            "response": self.response,
            "provenance": dict(self.provenance),
            "diagnostics": list(self.diagnostics),
        }


@dataclass
class GeneratedSession:
    session_id: str
    setting: str
    policy: ContextPolicy
    turns: list = field(default_factory=list)

    def to_dict(self):
        return {
            "session_id": self.session_id,
            "setting": self.setting,
            "policy": self.policy.to_dict(),
            "turns": [t.to_dict() for t in self.turns],
        }


@dataclass
class SessionState:
    history: list = field(default_factory=list)  # list[HistoryTurn]
    last_domain: str | None = None
    last_belief: dict = field(default_factory=dict)


def _component_sources(setting: str) -> dict:
    """Which current-turn components are generated under each run setting."""
    if setting == "response_generation":
        return {"belief": "oracle", "act": "oracle", "response": "generated"}
    if setting == "policy_optimization":
        return {"belief": "oracle", "act": "generated",
                "response": "generated"}
    if setting == "end_to_end":
        return {"belief": "generated", "act": "generated",
                "response": "generated"}
    if setting == "dst":
        return {"belief": "generated", "act": "oracle", "response": "oracle"}
    raise ValueError(f"unknown setting {setting!r}")


def run_turn(state: SessionState, user: str, decoder, setting: str,
             policy: ContextPolicy, db: EntityDb,
             gold_turn: Turn | None = None,
             params: DecodeParams | None = None,
             budget: TokenBudget | None = None,
             measurer=None) -> TurnRecord:
    """Run one turn cycle (B, D, A, R) and append it to the state."""
    params = params or DecodeParams()
    measurer = measurer or getattr(decoder, "measurer", None) \
        or sequence.default_measurer
    budget = budget or TokenBudget()
    sources = _component_sources(setting)
    diagnostics: list = []

    def need_gold(component):
        if gold_turn is None:
            raise ValueError(f"setting {setting!r} needs oracle {component} "
                             "but no gold turn was given")

    context = sequence.build_context(state.history, user, policy,
                                     budget=budget, measurer=measurer)

    # Belief
    if sources["belief"] == "generated":
        res = decoder.generate_until(context, spans.EOS_B,
                                     params.max_new_for(spans.EOS_B))
        if res.stop_reason == "length":
            diagnostics.append("belief decode hit length limit")
        parsed = spans.parse_belief([spans.SOS_B] + list(res.tokens),
                                    strictness="tolerant")
        diagnostics.extend(parsed.diagnostics)
        belief = parsed.value
        if not belief and parsed.diagnostics and state.last_belief:
            belief = {d: dict(sv) for d, sv in state.last_belief.items()}
            diagnostics.append("carried previous belief forward")
        belief_tokens = list(res.tokens)
        if res.stop_reason != "stop_token":
            belief_tokens.append(spans.EOS_B)
    else:
        need_gold("belief")
        belief = gold_turn.belief
        belief_tokens = spans.encode_belief(belief)[1:]

    # DB result
    domain = sequence.active_domain(belief, state.last_domain)
    if sources["belief"] == "oracle":
        db_token = sequence.turn_db_token(gold_turn, domain, db)
        db_prov = "oracle"
    else:
        if domain is not None and domain in db.domains:
            count = len(dbquery.query(db, belief, domain))
        else:
            count = 0
        db_token = dbquery.bucket(count, domain)
        db_prov = "generated"

    prefix = context + belief_tokens + spans.encode_db(db_token)

    # Act
    if sources["act"] == "generated":
        res = decoder.generate_until(prefix + [spans.SOS_A], spans.EOS_A,
                                     params.max_new_for(spans.EOS_A))
        if res.stop_reason == "length":
            diagnostics.append("act decode hit length limit")
        parsed = spans.parse_act([spans.SOS_A] + list(res.tokens),
                                 strictness="tolerant")
        diagnostics.extend(parsed.diagnostics)
        act = parsed.value
        act_tokens = list(res.tokens)
        if res.stop_reason != "stop_token":
            act_tokens.append(spans.EOS_A)
    else:
        need_gold("act")
        act = gold_turn.act
        act_tokens = spans.encode_act(act)[1:]

    prefix = prefix + [spans.SOS_A] + act_tokens

    # Response
    if sources["response"] == "generated":
        res = decoder.generate_until(prefix + [spans.SOS_R], spans.EOS_R,
                                     params.max_new_for(spans.EOS_R))
        if res.stop_reason == "length":
            diagnostics.append("response decode hit length limit")
        resp_tokens = [t for t in res.tokens if t != spans.EOS_R]
        response = " ".join(resp_tokens)
    else:
        need_gold("response")
        response = gold_turn.response_lex if setting == "dst" \
            else gold_turn.response_delex

    record = TurnRecord(
        user=user, belief=belief, db_token=db_token, act=act,
        response=response,
        provenance={"belief": sources["belief"], "db": db_prov,
                    "act": sources["act"], "response": sources["response"]},
        diagnostics=diagnostics,
    )

    # Realized history entry for later context construction.
    if gold_turn is not None:
        oracle_domain = sequence.active_domain(gold_turn.belief,
                                               state.last_domain)
        h = HistoryTurn(
            user=user,
            belief_generated=belief, belief_oracle=gold_turn.belief,
            db_generated=db_token,
            db_oracle=sequence.turn_db_token(gold_turn, oracle_domain, db),
            act_generated=act, act_oracle=gold_turn.act,
            resp_generated=response,
            resp_oracle=(gold_turn.response_lex if setting == "dst"
                         else gold_turn.response_delex),
        )
    else:
        h = HistoryTurn(user=user, belief_generated=belief,
                        db_generated=db_token, act_generated=act,
                        resp_generated=response)
    state.history.append(h)
    state.last_domain = domain
    state.last_belief = belief
    return record


def run_session(session: DialogSession, decoder, setting: str,
                policy: ContextPolicy, db: EntityDb,
                params: DecodeParams | None = None,
                budget: TokenBudget | None = None,
                measurer=None) -> GeneratedSession:
    """Replay the gold user side through :func:`run_turn`."""
    bound = decoder.for_session(session.session_id) \
        if hasattr(decoder, "for_session") else decoder
    state = SessionState()
    gen = GeneratedSession(session_id=session.session_id, setting=setting,
                           policy=policy)
    for turn in session.turns:
        record = run_turn(state, turn.user, bound, setting, policy, db,
                          gold_turn=turn, params=params, budget=budget,
                          measurer=measurer)
        gen.turns.append(record)
    return gen


def run_sessions(sessions, decoder, setting: str, policy: ContextPolicy,
                 db: EntityDb, params: DecodeParams | None = None,
                 budget: TokenBudget | None = None, measurer=None,
                 workers: int | None = None) -> list:
    """Run many sessions, optionally in parallel; output order is input
    order regardless of worker count."""
    workers = workers or os.cpu_count() or 1

    def one(session):
        return run_session(session, decoder, setting, policy, db,
                           params=params, budget=budget, measurer=measurer)

    if workers <= 1:
        return [one(s) for s in sessions]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, sessions))


# ---------------------------------------------------------------------------
# Decoders

class OracleBoundDecoder:
    """Replays gold continuations for one session, component by component.

    Each component keeps its own request counter, so the replay stays
    correct under every context policy (the context itself is ignored).
    """

    def __init__(self, session: DialogSession, db: EntityDb | None):
        self.session = session
        self.db = db
        self._counts = {spans.EOS_B: 0, spans.EOS_A: 0, spans.EOS_R: 0}

    def generate_until(self, context, stop, max_new) -> DecodeResult:
        if stop not in self._counts:
            raise ValueError(f"oracle decoder cannot decode until {stop!r}")
        t = self._counts[stop]
        self._counts[stop] += 1
        if t >= len(self.session.turns):
            raise KeyError(f"no turn {t} in session "
                           f"{self.session.session_id}")
        turn = self.session.turns[t]
        if stop == spans.EOS_B:
            tokens = spans.encode_belief(turn.belief)[1:]
        elif stop == spans.EOS_A:
            tokens = spans.encode_act(turn.act)[1:]
        else:
            tokens = turn.response_delex.split() + [spans.EOS_R]
        return DecodeResult(tokens=tokens, stop_reason="stop_token")


class OracleDecoder:
    """Decoder factory replaying gold turns from a corpus; lets the whole
    orchestration and metric pipeline be exercised without an LM."""

    def __init__(self, corpus: Corpus, db: EntityDb | None = None):
        self.corpus = corpus
        self.db = db
        self._by_id = {s.session_id: s for s in corpus.sessions}

    def for_session(self, session_id: str) -> OracleBoundDecoder:
        if session_id not in self._by_id:
            raise KeyError(f"unknown session {session_id!r}")
        return OracleBoundDecoder(self._by_id[session_id], self.db)

    def generate_until(self, context, stop, max_new):
        raise RuntimeError("oracle decoder must be bound to a session via "
                           "for_session()")


def corpus_oracle_decoder(corpus: Corpus,
                          db: EntityDb | None = None) -> OracleDecoder:
    return OracleDecoder(corpus, db)


class LmDecoder:
    """Decoder over the LM service wire protocol.

    Transport failures are retried twice, then the session fails (the batch
    runner isolates per-session failures). A registry fingerprint mismatch
    is a hard error at construction time.
    """

    def __init__(self, endpoint: str, params: DecodeParams | None = None,
                 client: httpx.Client | None = None, retries: int = 2,
                 retry_wait: float = 0.5, check_registry: bool = True):
        self.endpoint = endpoint.rstrip("/")
        self.params = params or DecodeParams()
        self.client = client or httpx.Client(base_url=self.endpoint,
                                             timeout=60.0)
        self.retries = retries
        self.retry_wait = retry_wait
        if check_registry:
            manifest = self._request("GET", "/manifest")
            remote = manifest.get("registry_version")
            local = spans.registry_version()
            if remote != local:
                raise RegistryMismatch(
                    f"service registry {remote!r} != local {local!r}")

    def _request(self, method: str, path: str, json_body=None) -> dict:
        last = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.client.request(method, path, json=json_body)
                resp.raise_for_status()
                return resp.json()
            except (httpx.TransportError,
                    httpx.HTTPStatusError) as e:  # pragma: no cover - timing
                last = e
                if attempt < self.retries:
                    time.sleep(self.retry_wait)
        raise DecoderError(f"LM service request failed after "
                           f"{self.retries + 1} attempts: {last}")

    def generate_until(self, context, stop, max_new) -> DecodeResult:
        body = {
            "prompt": " ".join(context),
            "stop": stop,
            "max_new_tokens": max_new,
            "greedy": self.params.greedy,
            "temperature": self.params.temperature,
        }
        data = self._request("POST", "/generate", body)
        return DecodeResult(tokens=data["text"].split(),
                            stop_reason=data["stop_reason"])

    def subword_count(self, text: str) -> int:
        return self._request("POST", "/subword_count",
                             {"text": text})["subword_count"]

    def measurer(self, tokens: list) -> int:
        return self.subword_count(" ".join(tokens))


def lm_client(endpoint: str,
              params: DecodeParams | None = None, **kwargs) -> LmDecoder:
    return LmDecoder(endpoint, params=params, **kwargs)
