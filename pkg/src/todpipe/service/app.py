"""FastAPI service wrapping the dialog pipeline.

The CLI is a thin client of this app; batch commands map one-to-one onto
endpoints and the chat REPL drives the ``/chat`` session endpoints.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import corpus as corpus_mod
from .. import dbquery, delex, metrics, orchestrator, sequence, spans
from ..corpus import CorpusError
from ..orchestrator import (ContextPolicy, DecodeParams, DecoderError,
                            RegistryMismatch, SessionState)
from . import models


def _policy(p: models.PolicyModel) -> ContextPolicy:
    return ContextPolicy(window=p.window, belief_source=p.belief_source,
                         act_resp_source=p.act_resp_source,
                         content_mask=p.content_mask)


def _build_decoder(spec: str, corpus, db, params=None):
    if spec == "oracle":
        return orchestrator.corpus_oracle_decoder(corpus, db)
    if spec.startswith("lm:"):
        url = os.environ.get("TODPIPE_LM_ENDPOINT") or spec[3:]
        return orchestrator.lm_client(url, params=params)
    raise ValueError(f"unknown decoder spec {spec!r}")


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


class ChatSession:
    def __init__(self, corpus, db, decoder, setting="end_to_end",
                 policy=None, seed=0, session_id=None):
        self.corpus = corpus
        self.db = db
        self.decoder = decoder
        self.setting = setting
        self.policy = policy or ContextPolicy()
        self.seed = seed
        self.state = SessionState()
        self.session_id = session_id
        self.transcript = []
        self.turn_index = 0


def create_app() -> FastAPI:
    app = FastAPI(title="todpipe", version="0.1.0")
    app.state.chats = {}
    app.state.chat_lock = threading.Lock()

    @app.exception_handler(CorpusError)
    async def _corpus_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422,
                            content={"error": str(exc), "kind": "data"})

    @app.exception_handler(DecoderError)
    async def _decoder_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=502,
                            content={"error": str(exc), "kind": "decoder"})

    @app.exception_handler(RegistryMismatch)
    async def _registry_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=502,
                            content={"error": str(exc), "kind": "decoder"})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=400,
                            content={"error": str(exc), "kind": "usage"})

    @app.get("/health")
    def health():
        return {"status": "ok", "registry_version": spans.registry_version()}

    @app.get("/registry", response_class=PlainTextResponse)
    def registry():
        return "\n".join(spans.SPECIAL_TOKENS) + "\n"

    @app.post("/preprocess", response_model=models.PreprocessResponse)
    def preprocess(req: models.PreprocessRequest):
        corpus = corpus_mod.load_corpus(req.input_path, format=req.format,
                                        version=req.version)
        report = corpus_mod.validate(corpus)
        Path(req.output_path).parent.mkdir(parents=True, exist_ok=True)
        corpus_mod.write_canonical(corpus, req.output_path)
        return models.PreprocessResponse(
            sessions=len(corpus.sessions), output_path=req.output_path,
            report=models.ValidationModel(**report.to_dict()))

    @app.post("/validate", response_model=models.ValidationModel)
    def validate(req: models.ValidateRequest):
        corpus = corpus_mod.load_corpus(req.corpus_path)
        return models.ValidationModel(**corpus_mod.validate(corpus).to_dict())

    @app.post("/export", response_model=models.ExportResponse)
    def export(req: models.ExportRequest):
        corpus = corpus_mod.load_corpus(req.corpus_path)
        db = dbquery.load_db(req.db_path) if req.db_path else None
        Path(req.output_path).parent.mkdir(parents=True, exist_ok=True)
        n = sequence.export_training_file(corpus, req.mode, req.output_path,
                                          db=db)
        return models.ExportResponse(
            sequences=n, output_path=req.output_path,
            metadata_path=req.output_path + ".meta.json")

    @app.post("/split", response_model=models.SplitResponse)
    def split(req: models.SplitRequest):
        corpus = corpus_mod.load_corpus(req.corpus_path)
        parts = corpus_mod.split_leave_one_domain_out(
            corpus, req.held_out, req.fewshot_n, req.seed)
        outdir = Path(req.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        files = {}
        for name, sessions in parts.items():
            sub = corpus_mod.Corpus(sessions=sessions,
                                    ontology=corpus.ontology,
                                    version=corpus.version)
            path = str(outdir / f"{name}.json")
            corpus_mod.write_canonical(sub, path)
            files[name] = path
        return models.SplitResponse(files=files)

    @app.post("/run", response_model=models.RunResponse)
    def run(req: models.RunRequest):
        corpus = corpus_mod.load_corpus(req.corpus_path)
        db = dbquery.load_db(req.db_path)
        policy = _policy(req.policy)
        params = DecodeParams(greedy=req.greedy,
                              temperature=req.temperature)
        decoder = _build_decoder(req.decoder, corpus, db, params)
        sessions = corpus.sessions[:req.max_sessions] \
            if req.max_sessions else corpus.sessions

        failed = []
        generated = []

        def one(session):
            try:
                return orchestrator.run_session(
                    session, decoder, req.setting, policy, db, params=params)
            except DecoderError as e:
                failed.append({"session_id": session.session_id,
                               "error": str(e)})
                return None

        if req.workers <= 1:
            results = [one(s) for s in sessions]
        else:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=req.workers) as pool:
                results = list(pool.map(one, sessions))
        generated = [g for g in results if g is not None]

        if sessions and len(failed) / len(sessions) > req.failure_threshold:
            raise DecoderError(
                f"{len(failed)}/{len(sessions)} sessions failed, above "
                f"threshold {req.failure_threshold}")

        report = metrics.evaluate(generated, corpus, db,
                                  workers=req.workers)
        outdir = Path(req.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "config_hash": _config_hash(req.model_dump()),
            "registry_version": spans.registry_version(),
            "corpus_version": corpus.version,
            "setting": req.setting,
            "policy": policy.to_dict(),
            "decoder": req.decoder,
            "seed": req.seed,
            "workers": req.workers,
        }
        archive_path = str(outdir / "sessions.json")
        with open(archive_path, "w", encoding="utf-8") as f:
            json.dump({"manifest": manifest,
                       "sessions": [g.to_dict() for g in generated]},
                      f, ensure_ascii=False, indent=1)
            f.write("\n")
        report_path = str(outdir / "report.json")
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump({"manifest": manifest, "metrics": report.to_dict()},
                      f, ensure_ascii=False, indent=1)
            f.write("\n")
        with open(outdir / "report.txt", "w", encoding="utf-8") as f:
            f.write(report.format_table() + "\n")
        d = report.to_dict()
        return models.RunResponse(
            report=models.MetricModel(
                inform=d["inform"], success=d["success"], bleu=d["bleu"],
                combined=d["combined"],
                joint_goal_accuracy=d.get("joint_goal_accuracy"),
                sessions=d["sessions"]),
            archive_path=archive_path, report_path=report_path,
            manifest=manifest, failed_sessions=failed)

    # ----------------------------------------------------------------- chat

    @app.post("/chat/start", response_model=models.ChatStartResponse)
    def chat_start(req: models.ChatStartRequest):
        corpus = corpus_mod.load_corpus(req.corpus_path)
        db = dbquery.load_db(req.db_path)
        decoder = _build_decoder(req.decoder, corpus, db)
        session_id = req.session_id or corpus.sessions[0].session_id
        if hasattr(decoder, "for_session"):
            decoder = decoder.for_session(session_id)
        chat = ChatSession(corpus, db, decoder, seed=req.seed,
                           session_id=session_id)
        chat_id = uuid.uuid4().hex[:12]
        with app.state.chat_lock:
            app.state.chats[chat_id] = chat
        return models.ChatStartResponse(chat_id=chat_id)

    def _get_chat(chat_id: str) -> ChatSession:
        with app.state.chat_lock:
            chat = app.state.chats.get(chat_id)
        if chat is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown chat {chat_id!r}")
        return chat

    @app.post("/chat/{chat_id}/message",
              response_model=models.ChatMessageResponse)
    def chat_message(chat_id: str, req: models.ChatMessageRequest):
        chat = _get_chat(chat_id)
        record = orchestrator.run_turn(
            chat.state, req.text, chat.decoder, "end_to_end", chat.policy,
            chat.db)
        domain = sequence.active_domain(record.belief, None)
        entity = None
        if domain and domain in chat.db.domains:
            results = dbquery.query(chat.db, record.belief, domain)
            entity = dbquery.select_entity(results, "first")
        ref = dbquery.booking_reference(domain or "general",
                                        chat.session_id or chat_id,
                                        chat.turn_index)
        text, _ = delex.lexicalize(record.response, entity=entity,
                                   belief=record.belief, booking_ref=ref)
        chat.turn_index += 1
        entry = {"user": req.text, "response": text,
                 "response_delex": record.response,
                 "belief_span": " ".join(spans.encode_belief(record.belief)),
                 "db_token": record.db_token,
                 "act_span": " ".join(spans.encode_act(record.act))}
        chat.transcript.append(entry)
        return models.ChatMessageResponse(
            response=text, response_delex=record.response,
            belief_span=entry["belief_span"], db_token=record.db_token,
            act_span=entry["act_span"], diagnostics=record.diagnostics)

    @app.get("/chat/{chat_id}/state", response_model=models.ChatStateResponse)
    def chat_state(chat_id: str):
        chat = _get_chat(chat_id)
        belief = chat.state.last_belief
        return models.ChatStateResponse(
            belief_span=" ".join(spans.encode_belief(belief)),
            turns=len(chat.transcript))

    @app.post("/chat/{chat_id}/end",
              response_model=models.ChatTranscriptResponse)
    def chat_end(chat_id: str):
        chat = _get_chat(chat_id)
        with app.state.chat_lock:
            app.state.chats.pop(chat_id, None)
        return models.ChatTranscriptResponse(turns=chat.transcript)

    return app
