"""Evaluation: Inform, Success, corpus BLEU-4, combined score, joint goal
accuracy.

Inform follows the benchmark convention: a session informs a domain when
the last entity offer in that domain is compatible with the user's goal
constraints. Success additionally requires every requested slot to surface
as a placeholder in some generated response.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import dbquery, ontology
from .corpus import Corpus
from .dbquery import EntityDb

PLACEHOLDER_RE = re.compile(r"\[value_([a-z_]+)\]")


class AlignmentError(Exception):
    """Generated sessions do not line up with the gold corpus."""


@dataclass
class MetricReport:
    inform: float = 0.0
    success: float = 0.0
    bleu: float = 0.0
    combined_score: float = 0.0
    joint_goal_accuracy: float | None = None
    sessions: int = 0
    per_session: list = field(default_factory=list)

    def to_dict(self):
        d = {
            "inform": round(self.inform, 2),
            "success": round(self.success, 2),
            "bleu": round(self.bleu, 2),
            "combined": round(self.combined_score, 1),
            "sessions": self.sessions,
            "per_session": list(self.per_session),
        }
        if self.joint_goal_accuracy is not None:
            d["joint_goal_accuracy"] = round(self.joint_goal_accuracy, 4)
        return d

    def format_table(self) -> str:
        header = f"{'Inform':>8} {'Success':>8} {'BLEU':>8} {'Combined':>9}"
        row = (f"{self.inform:8.1f} {self.success:8.1f} "
               f"{self.bleu:8.1f} {self.combined_score:9.1f}")
        lines = [header, row]
        if self.joint_goal_accuracy is not None:
            lines.append(f"{'Joint goal accuracy:':>20} "
                         f"{self.joint_goal_accuracy:.4f}")
        return "\n".join(lines)


def combined(inform: float, success: float, bleu_score: float) -> float:
    """Single-number summary: 0.5 * (inform + success) + bleu."""
    return 0.5 * (inform + success) + bleu_score


# ---------------------------------------------------------------------------
# Inform / Success

def _canonical_belief(belief: dict) -> dict:
    return {d: {s: belief[d][s] for s in sorted(belief[d])}
            for d in sorted(belief) if belief[d]}


def _goal_matching_entities(db: EntityDb, goal_informable: dict,
                            domain: str) -> list:
    return dbquery.query(db, {domain: dict(goal_informable)}, domain)


def _session_inform_success(gen_session, gold_session,
                            db: EntityDb) -> tuple[bool, bool]:
    goal = gold_session.goal
    eval_domains = [d for d in goal if d in ontology.EVAL_DOMAINS]
    informed = True
    for domain in eval_domains:
        if domain not in ontology.ENTITY_DOMAINS:
            # Taxi has no database: it informs when its goal slots were
            # captured in the realized belief at some point.
            want = goal[domain].informable
            got = False
            for rec in gen_session.turns:
                sv = rec.belief.get(domain, {})
                if all(sv.get(s) == v for s, v in want.items()):
                    got = True
                    break
            informed = informed and (got or not want)
            continue
        offer_slot = ontology.OFFER_SLOT[domain]
        offers = [rec for rec in gen_session.turns
                  if f"[value_{offer_slot}]" in rec.response]
        if not offers:
            informed = False
            continue
        last = offers[-1]
        candidates = dbquery.query(db, last.belief, domain)
        satisfying = _goal_matching_entities(db, goal[domain].informable,
                                             domain)
        names = {tuple(sorted(e.items())) for e in candidates}
        good = {tuple(sorted(e.items())) for e in satisfying}
        if not names or not (names & good):
            informed = False

    if not informed:
        return False, False

    mentioned = set()
    booked_turn_slots = set()
    for rec in gen_session.turns:
        slots = set(PLACEHOLDER_RE.findall(rec.response))
        mentioned |= slots
        acts = {a for acts in rec.act.values() for a in acts}
        if acts & {"book", "offerbook", "offerbooked"}:
            booked_turn_slots |= slots
    success = True
    for domain in eval_domains:
        for slot in goal[domain].requestable:
            if slot == "reference":
                if "reference" not in booked_turn_slots:
                    success = False
            elif slot not in mentioned:
                success = False
    return True, success


def inform_success(gen_sessions, gold: Corpus, db: EntityDb,
                   workers: int = 1):
    """Session-level inform and success percentages."""
    pairs = _aligned(gen_sessions, gold)

    def one(pair):
        return _session_inform_success(pair[0], pair[1], db)

    if workers <= 1:
        flags = [one(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flags = list(pool.map(one, pairs))
    n = len(flags)
    if n == 0:
        return 0.0, 0.0
    inform = 100.0 * sum(1 for i, _ in flags if i) / n
    success = 100.0 * sum(1 for _, s in flags if s) / n
    return inform, success


def _aligned(gen_sessions, gold: Corpus):
    pairs = []
    for g in gen_sessions:
        try:
            gold_s = gold.get(g.session_id)
        except KeyError:
            raise AlignmentError(f"generated session {g.session_id!r} "
                                 "not present in gold corpus")
        if len(g.turns) != len(gold_s.turns):
            raise AlignmentError(
                f"session {g.session_id!r}: {len(g.turns)} generated turns "
                f"vs {len(gold_s.turns)} gold")
        pairs.append((g, gold_s))
    return pairs


# ---------------------------------------------------------------------------
# BLEU

def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list, references: list) -> float:
    """Corpus-level BLEU-4, uniform weights, standard brevity penalty, no
    smoothing, single reference per candidate. Returns 0-100."""
    if not candidates or len(candidates) != len(references):
        raise ValueError("need equal, non-empty candidate/reference lists")
    clipped = [0, 0, 0, 0]
    totals = [0, 0, 0, 0]
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        c = cand.split() if isinstance(cand, str) else list(cand)
        r = ref.split() if isinstance(ref, str) else list(ref)
        cand_len += len(c)
        ref_len += len(r)
        for n in range(1, 5):
            cc = _ngram_counts(c, n)
            rc = _ngram_counts(r, n)
            totals[n - 1] += sum(cc.values())
            clipped[n - 1] += sum(min(count, rc[ng])
                                  for ng, count in cc.items())
    if cand_len == 0:
        return 0.0
    precisions = []
    for n in range(4):
        if totals[n] == 0 or clipped[n] == 0:
            return 0.0
        precisions.append(clipped[n] / totals[n])
    log_avg = sum(0.25 * math.log(p) for p in precisions)
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * math.exp(log_avg)


# ---------------------------------------------------------------------------
# Joint goal accuracy

def joint_goal_accuracy(pred: list, gold: list) -> float:
    """Fraction of turns whose full belief state matches gold exactly."""
    if len(pred) != len(gold):
        raise AlignmentError(f"{len(pred)} predicted turns vs "
                             f"{len(gold)} gold")
    if not pred:
        return 0.0
    hits = sum(1 for p, g in zip(pred, gold)
               if _canonical_belief(p) == _canonical_belief(g))
    return hits / len(pred)


# ---------------------------------------------------------------------------
# Full report

def evaluate(gen_sessions, gold: Corpus, db: EntityDb,
             workers: int = 1) -> MetricReport:
    """Compute the full metric suite over aligned generated sessions.

    Per-session statistics may be computed in parallel; the final reduction
    is ordered, so reports are identical for any worker count.
    """
    pairs = _aligned(gen_sessions, gold)

    def one(pair):
        g, gold_s = pair
        inf, suc = _session_inform_success(g, gold_s, db)
        cands = [rec.response for rec in g.turns]
        refs = [t.response_delex for t in gold_s.turns]
        jga_hits = sum(
            1 for rec, t in zip(g.turns, gold_s.turns)
            if _canonical_belief(rec.belief) == _canonical_belief(t.belief))
        return (g.session_id, inf, suc, cands, refs, jga_hits, len(g.turns))

    if workers <= 1:
        stats = [one(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(one, pairs))

    n = len(stats)
    report = MetricReport(sessions=n)
    if n == 0:
        return report
    all_cands: list = []
    all_refs: list = []
    total_turns = 0
    total_hits = 0
    for sid, inf, suc, cands, refs, hits, turns in stats:
        all_cands.extend(cands)
        all_refs.extend(refs)
        total_turns += turns
        total_hits += hits
        report.per_session.append(
            {"session_id": sid, "inform": inf, "success": suc})
    report.inform = 100.0 * sum(1 for s in stats if s[1]) / n
    report.success = 100.0 * sum(1 for s in stats if s[2]) / n
    report.bleu = bleu(all_cands, all_refs)
    report.combined_score = combined(report.inform, report.success,
                                     report.bleu)
    report.joint_goal_accuracy = total_hits / total_turns if total_turns \
        else None
    return report
