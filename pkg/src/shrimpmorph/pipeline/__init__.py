"""Orchestration, persistence and the review HTTP API."""

from .service import (
    AWAITING_REVIEW,
    COMPLETED,
    FAILED,
    AlertRecord,
    ModelBundle,
    PipelineResult,
    PipelineService,
    Resolution,
    create_app,
    run_pipeline,
)
from .store import EventLog, encode_event

__all__ = [
    "AWAITING_REVIEW",
    "COMPLETED",
    "FAILED",
    "AlertRecord",
    "EventLog",
    "ModelBundle",
    "PipelineResult",
    "PipelineService",
    "Resolution",
    "create_app",
    "encode_event",
    "run_pipeline",
]
