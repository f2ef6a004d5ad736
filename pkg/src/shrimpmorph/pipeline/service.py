"""End-to-end orchestration: fusion gating, pose routing, alert workflow.

A sample is only routed to a pose network once human and AI agree on both
labels (or a human has resolved the disagreement); running the wrong-variant
model would silently poison the measurements, so alerts block.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

from ..data_io import SampleRecord
from ..discriminator import (
    Assessment,
    BinaryClassifierModel,
    FusionDecision,
    Kind,
    Source,
    fuse,
    predict,
)
from ..errors import AlreadyResolved, NotFound, ShrimpmorphError
from ..regression import RegressionModel, convert
from ..posenet.model import PoseRegistry, route_and_predict
from ..skeleton import (
    Keypoint,
    MeasurementSet,
    RostrumState,
    Unit,
    View,
    VirtualSkeleton,
    extract_pixel_measurements,
)
from .store import EventLog

COMPLETED = "completed"
AWAITING_REVIEW = "awaiting_review"
FAILED = "failed"


@dataclass
class ModelBundle:
    disc_pose: BinaryClassifierModel
    disc_rostrum: BinaryClassifierModel
    pose_registry: PoseRegistry
    regression: dict[str, RegressionModel]


@dataclass
class Resolution:
    resolved_value: bool
    resolver: str
    timestamp: float


@dataclass
class AlertRecord:
    alert_id: str
    sample_id: str
    kind: Kind
    human_value: bool
    ai_value: bool
    resolution: Resolution | None = None


@dataclass
class PipelineResult:
    sample_id: str
    fusion_pose: FusionDecision
    fusion_rostrum: FusionDecision
    skeleton: VirtualSkeleton | None = None
    measurements_px: MeasurementSet | None = None
    measurements_cm: MeasurementSet | None = None
    status: str = AWAITING_REVIEW
    failure_reason: str | None = None


def run_pipeline(
    sample: SampleRecord,
    models: ModelBundle,
    resolutions: dict[Kind, bool] | None = None,
) -> tuple[PipelineResult, list[AlertRecord]]:
    """Pure single-sample pipeline run; returns the result and any new alerts.

    ``resolutions`` carries already-resolved label values, which override
    both original assessments and suppress the corresponding alert.
    """
    resolutions = resolutions or {}
    human_pose = Assessment(Source.HUMAN, Kind.POSE, sample.human_view is View.LATERAL)
    human_rostrum = Assessment(
        Source.HUMAN, Kind.ROSTRUM, sample.human_rostrum is RostrumState.INTACT
    )
    ai_pose = predict(models.disc_pose, sample.raster)
    ai_rostrum = predict(models.disc_rostrum, sample.raster)
    fusion_pose = fuse(human_pose, ai_pose)
    fusion_rostrum = fuse(human_rostrum, ai_rostrum)

    result = PipelineResult(
        sample_id=sample.sample_id, fusion_pose=fusion_pose, fusion_rostrum=fusion_rostrum
    )
    alerts = []
    pending = False
    for fusion in (fusion_pose, fusion_rostrum):
        if fusion.alert and fusion.kind not in resolutions:
            pending = True
            alerts.append(
                AlertRecord(
                    alert_id=f"{sample.sample_id}:{fusion.kind.value}",
                    sample_id=sample.sample_id,
                    kind=fusion.kind,
                    human_value=fusion.human_value,
                    ai_value=fusion.ai_value,
                )
            )
    if pending:
        result.status = AWAITING_REVIEW
        return result, alerts

    pose_value = resolutions.get(Kind.POSE, fusion_pose.human_value)
    rostrum_value = resolutions.get(Kind.ROSTRUM, fusion_rostrum.human_value)
    view = View.LATERAL if pose_value else View.DORSAL
    rostrum = RostrumState.INTACT if rostrum_value else RostrumState.BROKEN
    try:
        skel = route_and_predict(models.pose_registry, sample.raster, view, rostrum)
        px = extract_pixel_measurements(skel)
        cm = convert(models.regression, px)
    except ShrimpmorphError as e:
        result.status = FAILED
        result.failure_reason = f"{type(e).__name__}: {e}"
        return result, alerts
    result.skeleton = skel
    result.measurements_px = px
    result.measurements_cm = cm
    result.status = COMPLETED
    return result, alerts


# --- event (de)serialization --------------------------------------------------


def _skeleton_to_json(skel: VirtualSkeleton | None):
    if skel is None:
        return None
    return {
        "view": skel.view.value,
        "rostrum": skel.rostrum.value,
        "keypoints": [
            [kp.index, kp.x, kp.y, kp.visible]
            for kp in sorted(skel.keypoints, key=lambda k: k.index)
        ],
    }


def _skeleton_from_json(doc):
    if doc is None:
        return None
    return VirtualSkeleton(
        view=View(doc["view"]),
        rostrum=RostrumState(doc["rostrum"]),
        keypoints=tuple(Keypoint(index=i, x=x, y=y, visible=v) for i, x, y, v in doc["keypoints"]),
    )


def _measurements_to_json(m: MeasurementSet | None):
    if m is None:
        return None
    return {
        "unit": m.unit.value,
        "values": {k: m.values[k] for k in sorted(m.values)},
        "clamped": sorted(m.clamped),
    }


def _measurements_from_json(doc):
    if doc is None:
        return None
    return MeasurementSet(
        unit=Unit(doc["unit"]), values=dict(doc["values"]), clamped=frozenset(doc["clamped"])
    )


def _fusion_to_json(f: FusionDecision):
    return {
        "kind": f.kind.value,
        "alert": f.alert,
        "human_value": f.human_value,
        "ai_value": f.ai_value,
    }


def _fusion_from_json(doc):
    return FusionDecision(
        kind=Kind(doc["kind"]),
        alert=doc["alert"],
        human_value=doc["human_value"],
        ai_value=doc["ai_value"],
    )


def result_to_json(r: PipelineResult) -> dict:
    return {
        "sample_id": r.sample_id,
        "fusion_pose": _fusion_to_json(r.fusion_pose),
        "fusion_rostrum": _fusion_to_json(r.fusion_rostrum),
        "skeleton": _skeleton_to_json(r.skeleton),
        "measurements_px": _measurements_to_json(r.measurements_px),
        "measurements_cm": _measurements_to_json(r.measurements_cm),
        "status": r.status,
        "failure_reason": r.failure_reason,
    }


def result_from_json(doc: dict) -> PipelineResult:
    return PipelineResult(
        sample_id=doc["sample_id"],
        fusion_pose=_fusion_from_json(doc["fusion_pose"]),
        fusion_rostrum=_fusion_from_json(doc["fusion_rostrum"]),
        skeleton=_skeleton_from_json(doc["skeleton"]),
        measurements_px=_measurements_from_json(doc["measurements_px"]),
        measurements_cm=_measurements_from_json(doc["measurements_cm"]),
        status=doc["status"],
        failure_reason=doc["failure_reason"],
    )


def alert_to_json(a: AlertRecord) -> dict:
    doc = {
        "alert_id": a.alert_id,
        "sample_id": a.sample_id,
        "kind": a.kind.value,
        "human_value": a.human_value,
        "ai_value": a.ai_value,
        "resolution": None,
    }
    if a.resolution is not None:
        doc["resolution"] = {
            "resolved_value": a.resolution.resolved_value,
            "resolver": a.resolution.resolver,
            "timestamp": a.resolution.timestamp,
        }
    return doc


def alert_from_json(doc: dict) -> AlertRecord:
    res = doc.get("resolution")
    return AlertRecord(
        alert_id=doc["alert_id"],
        sample_id=doc["sample_id"],
        kind=Kind(doc["kind"]),
        human_value=doc["human_value"],
        ai_value=doc["ai_value"],
        resolution=Resolution(**res) if res else None,
    )


# --- stateful service ----------------------------------------------------------


class PipelineService:
    """Single-node pipeline state on top of the append-only event log.

    All mutations go through one lock; reads are safe from any thread.
    """

    def __init__(self, models: ModelBundle, store_path, clock=time.time):
        self.models = models
        self.log = EventLog(store_path)
        self.clock = clock
        self.samples: dict[str, SampleRecord] = {}
        self.results: dict[str, PipelineResult] = {}
        self.alerts: dict[str, AlertRecord] = {}
        self._lock = threading.Lock()
        for event in self.log.read_all():
            self._apply(event)

    def _apply(self, event: dict) -> None:
        if event["event"] == "result":
            r = result_from_json(event["data"])
            self.results[r.sample_id] = r
        elif event["event"] == "alert":
            a = alert_from_json(event["data"])
            if a.alert_id not in self.alerts:
                self.alerts[a.alert_id] = a
        elif event["event"] == "resolution":
            a = self.alerts[event["alert_id"]]
            a.resolution = Resolution(
                resolved_value=event["resolved_value"],
                resolver=event["resolver"],
                timestamp=event["timestamp"],
            )

    def add_samples(self, corpus: list[SampleRecord]) -> None:
        for rec in corpus:
            self.samples[rec.sample_id] = rec

    def _resolutions_for(self, sample_id: str) -> dict[Kind, bool]:
        out = {}
        for a in self.alerts.values():
            if a.sample_id == sample_id and a.resolution is not None:
                out[a.kind] = a.resolution.resolved_value
        return out

    def process(self, sample_id: str) -> PipelineResult:
        with self._lock:
            if sample_id not in self.samples:
                raise NotFound(f"unknown sample {sample_id!r}")
            sample = self.samples[sample_id]
            result, new_alerts = run_pipeline(
                sample, self.models, self._resolutions_for(sample_id)
            )
            for a in new_alerts:
                if a.alert_id not in self.alerts:
                    self.alerts[a.alert_id] = a
                    self.log.append({"event": "alert", "data": alert_to_json(a)})
            self.results[sample_id] = result
            self.log.append({"event": "result", "data": result_to_json(result)})
            return result

    def process_all(self) -> list[PipelineResult]:
        # sample-id order keeps the stored log deterministic
        return [self.process(sid) for sid in sorted(self.samples)]

    def resolve_alert(self, alert_id: str, resolved_value: bool, resolver: str) -> AlertRecord:
        with self._lock:
            if alert_id not in self.alerts:
                raise NotFound(f"unknown alert {alert_id!r}")
            alert = self.alerts[alert_id]
            if alert.resolution is not None:
                raise AlreadyResolved(f"alert {alert_id!r} already resolved")
            alert.resolution = Resolution(
                resolved_value=resolved_value, resolver=resolver, timestamp=float(self.clock())
            )
            self.log.append(
                {
                    "event": "resolution",
                    "alert_id": alert_id,
                    "resolved_value": resolved_value,
                    "resolver": resolver,
                    "timestamp": alert.resolution.timestamp,
                }
            )
        # reprocess with the corrected label now that the alert is resolved
        if alert.sample_id in self.samples:
            self.process(alert.sample_id)
        return alert

    def open_alerts(self) -> list[AlertRecord]:
        return sorted(
            (a for a in self.alerts.values() if a.resolution is None),
            key=lambda a: a.alert_id,
        )

    def summary(self) -> dict:
        statuses = {COMPLETED: 0, AWAITING_REVIEW: 0, FAILED: 0}
        for r in self.results.values():
            statuses[r.status] = statuses.get(r.status, 0) + 1
        return {
            "samples": len(self.samples),
            "processed": len(self.results),
            "by_status": statuses,
            "alerts_total": len(self.alerts),
            "alerts_open": len(self.open_alerts()),
        }


# --- HTTP API -----------------------------------------------------------------

try:  # pydantic is only needed when the HTTP API is used
    from pydantic import BaseModel as _BaseModel
except ImportError:  # pragma: no cover
    _BaseModel = object


class ResolveBody(_BaseModel):
    # module scope so the postponed annotation on the route resolves
    resolved_value: bool
    resolver: str = "reviewer"


def create_app(service: PipelineService):
    """Review API consumed by the frontend; JSON in, JSON (or PPM) out."""
    from fastapi import FastAPI, HTTPException, Response

    app = FastAPI(title="shrimpmorph review API")

    @app.get("/api/alerts")
    def list_alerts(status: str = "open"):
        if status == "open":
            alerts = service.open_alerts()
        elif status == "all":
            alerts = sorted(service.alerts.values(), key=lambda a: a.alert_id)
        else:
            raise HTTPException(status_code=422, detail=f"unknown status filter {status!r}")
        return {"alerts": [alert_to_json(a) for a in alerts]}

    @app.get("/api/alerts/{alert_id}")
    def get_alert(alert_id: str):
        if alert_id not in service.alerts:
            raise HTTPException(status_code=404, detail=f"unknown alert {alert_id!r}")
        return alert_to_json(service.alerts[alert_id])

    @app.post("/api/alerts/{alert_id}/resolve")
    def resolve(alert_id: str, body: ResolveBody):
        try:
            alert = service.resolve_alert(alert_id, body.resolved_value, body.resolver)
        except NotFound as e:
            raise HTTPException(status_code=404, detail=str(e)) from e
        except AlreadyResolved as e:
            raise HTTPException(status_code=409, detail=str(e)) from e
        return alert_to_json(alert)

    @app.get("/api/samples/{sample_id}/image")
    def sample_image(sample_id: str):
        if sample_id not in service.samples:
            raise HTTPException(status_code=404, detail=f"unknown sample {sample_id!r}")
        from ..data_io import rgb_to_ppm

        ppm = rgb_to_ppm(service.samples[sample_id].raster.rgb)
        return Response(content=ppm, media_type="image/x-portable-pixmap")

    @app.get("/api/samples/{sample_id}/result")
    def sample_result(sample_id: str):
        if sample_id not in service.results:
            raise HTTPException(status_code=404, detail=f"no result for sample {sample_id!r}")
        return result_to_json(service.results[sample_id])

    @app.get("/api/metrics/summary")
    def metrics_summary():
        return service.summary()

    return app
