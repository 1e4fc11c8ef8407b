"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class PolicyModel(BaseModel):
    window: str = "all"
    belief_source: str = "generated"
    act_resp_source: str = "generated"
    content_mask: str = "full"


class PreprocessRequest(BaseModel):
    input_path: str
    output_path: str
    format: str = "multiwoz-raw"
    version: str = "2.0"


class ValidationModel(BaseModel):
    out_of_ontology: list = Field(default_factory=list)
    placeholder_leaks: list = Field(default_factory=list)
    missing_placeholders: list = Field(default_factory=list)


class PreprocessResponse(BaseModel):
    sessions: int
    output_path: str
    report: ValidationModel


class ValidateRequest(BaseModel):
    corpus_path: str


class ExportRequest(BaseModel):
    corpus_path: str
    output_path: str
    mode: str = "session_delex"
    db_path: str | None = None


class ExportResponse(BaseModel):
    sequences: int
    output_path: str
    metadata_path: str


class SplitRequest(BaseModel):
    corpus_path: str
    held_out: str
    fewshot_n: int = 0
    seed: int = 0
    output_dir: str


class SplitResponse(BaseModel):
    files: dict


class RunRequest(BaseModel):
    corpus_path: str
    db_path: str
    setting: str = "end_to_end"
    policy: PolicyModel = Field(default_factory=PolicyModel)
    decoder: str = "oracle"
    seed: int = 0
    output_dir: str
    workers: int = 1
    max_sessions: int | None = None
    failure_threshold: float = 0.1
    greedy: bool = True
    temperature: float = 0.7


class MetricModel(BaseModel):
    inform: float
    success: float
    bleu: float
    combined: float
    joint_goal_accuracy: float | None = None
    sessions: int


class RunResponse(BaseModel):
    report: MetricModel
    archive_path: str
    report_path: str
    manifest: dict
    failed_sessions: list = Field(default_factory=list)


class ChatStartRequest(BaseModel):
    corpus_path: str
    db_path: str
    decoder: str = "oracle"
    session_id: str | None = None
    seed: int = 0


class ChatStartResponse(BaseModel):
    chat_id: str


class ChatMessageRequest(BaseModel):
    text: str


class ChatMessageResponse(BaseModel):
    response: str
    response_delex: str
    belief_span: str
    db_token: str
    act_span: str
    diagnostics: list = Field(default_factory=list)


class ChatStateResponse(BaseModel):
    belief_span: str
    turns: int


class ChatTranscriptResponse(BaseModel):
    turns: list


class ErrorBody(BaseModel):
    error: str
    kind: str = "error"
