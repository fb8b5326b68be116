"""Case lifecycle: capture, quality gating, annotation, prediction,
clinician feedback and biopsy-confirmed labels.

Operations are pure functions ``CaseRecord -> CaseRecord`` so the whole
lifecycle is event-sourceable: :class:`CaseStore` wraps them with
single-writer-per-record locking and an append-only JSONL event log whose
replay reproduces records exactly (generated ids and timestamps live inside
the events).
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum

from .classify import Taxonomy, binary_risk, default_taxonomy, map_risk
from .errors import (
    AuthorizationError,
    IllegalTransitionError,
    NotFoundError,
    ValidationError,
)
from .imaging import RoiCircle
from .quality import INDICATORS, QualityReport

EVENT_SCHEMA_VERSION = 1

GENDERS = ("female", "male", "other", "unspecified")

DEFAULT_BODY_SITES = (
    "face", "scalp", "ear", "neck", "chest", "abdomen", "back",
    "shoulder", "upper arm", "forearm", "hand", "buttock",
    "thigh", "lower leg", "foot", "genital", "other",
)

ANNOTATOR_ROLES = ("dermatologist", "resident", "student", "supervisor")


class CaseState(str, Enum):
    CREATED = "created"
    CAPTURED = "captured"
    QUALITY_FAILED = "quality_failed"
    QUALITY_PASSED = "quality_passed"
    ANNOTATED = "annotated"
    PREDICTION_ISSUED = "prediction_issued"
    FEEDBACK_RECORDED = "feedback_recorded"
    BIOPSY_PENDING = "biopsy_pending"
    CONFIRMED = "confirmed"
    CLOSED = "closed"


_CAPTURE_STATES = (
    CaseState.CREATED,
    CaseState.CAPTURED,
    CaseState.QUALITY_FAILED,
    CaseState.QUALITY_PASSED,
)


@dataclass(frozen=True)
class PatientMeta:
    age: int
    gender: str
    fitzpatrick: int
    lesion_location: str
    record_id: str | None = None

    def validate(self, body_sites=DEFAULT_BODY_SITES) -> None:
        if not (0 <= self.age <= 120):
            raise ValidationError(f"age must be in [0, 120], got {self.age}")
        if not (1 <= self.fitzpatrick <= 6):
            raise ValidationError(f"fitzpatrick must be in [1, 6], got {self.fitzpatrick}")
        if self.gender not in GENDERS:
            raise ValidationError(f"gender must be one of {GENDERS}, got {self.gender!r}")
        if self.lesion_location not in body_sites:
            raise ValidationError(f"unknown body site {self.lesion_location!r}")

    def to_dict(self) -> dict:
        return {
            "age": self.age,
            "gender": self.gender,
            "fitzpatrick": self.fitzpatrick,
            "lesion_location": self.lesion_location,
            "record_id": self.record_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatientMeta":
        return cls(age=d["age"], gender=d["gender"], fitzpatrick=d["fitzpatrick"],
                   lesion_location=d["lesion_location"], record_id=d.get("record_id"))


@dataclass(frozen=True)
class DeviceMeta:
    model: str
    operating_system: str = ""
    camera: str = ""

    def validate(self) -> None:
        if not self.model:
            raise ValidationError("device model must be non-empty")

    def to_dict(self) -> dict:
        return {"model": self.model, "operating_system": self.operating_system,
                "camera": self.camera}

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceMeta":
        return cls(model=d["model"], operating_system=d.get("operating_system", ""),
                   camera=d.get("camera", ""))


@dataclass(frozen=True)
class Capture:
    original_ref: str
    cropped_ref: str
    device: DeviceMeta
    report: QualityReport
    timestamp: float
    override: bool = False
    roi_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "original_ref": self.original_ref,
            "cropped_ref": self.cropped_ref,
            "device": self.device.to_dict(),
            "report": self.report.to_dict(),
            "timestamp": self.timestamp,
            "override": self.override,
            "roi_ref": self.roi_ref,
        }


@dataclass(frozen=True)
class Annotation:
    roi: RoiCircle
    annotator_id: str
    role: str

    def to_dict(self) -> dict:
        return {
            "roi": {"center_x": self.roi.center_x, "center_y": self.roi.center_y,
                    "radius": self.roi.radius},
            "annotator_id": self.annotator_id,
            "role": self.role,
        }


@dataclass(frozen=True)
class FeedbackEntry:
    verdict: str  # confirm | disagree | uncertain
    clinician_id: str
    timestamp: float
    hypothesis: str | None = None

    def validate(self) -> None:
        if self.verdict not in ("confirm", "disagree", "uncertain"):
            raise ValidationError(f"unknown feedback verdict {self.verdict!r}")
        if self.verdict == "disagree" and not (self.hypothesis or "").strip():
            raise ValidationError("disagree feedback requires a diagnostic hypothesis")

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "clinician_id": self.clinician_id,
                "timestamp": self.timestamp, "hypothesis": self.hypothesis}


@dataclass(frozen=True)
class Prediction:
    member_probs: tuple  # K tuples of n_c floats, concatenation order fixed
    vote: int
    label: str
    risk: str
    binary: str
    model_version: str
    timestamp: float
    fusion_probs: tuple | None = None

    def to_dict(self) -> dict:
        return {
            "member_probs": [list(p) for p in self.member_probs],
            "vote": self.vote,
            "label": self.label,
            "risk": self.risk,
            "binary": self.binary,
            "model_version": self.model_version,
            "timestamp": self.timestamp,
            "fusion_probs": list(self.fusion_probs) if self.fusion_probs is not None else None,
        }


@dataclass(frozen=True)
class CaseRecord:
    record_id: str
    patient: PatientMeta
    state: CaseState = CaseState.CREATED
    captures: tuple = ()
    rejected_reports: tuple = ()  # (QualityReport, timestamp) for refused attempts
    recapture_count: int = 0
    annotation: Annotation | None = None
    preliminary: Prediction | None = None
    prediction_versions: tuple = ()
    feedback: tuple = ()
    malignant_suspect: bool = False
    biopsy_audit: str | None = None
    histopathology: tuple | None = None  # (result text, final class)
    imported_label: str | None = None  # dataset-sourced diagnostic, not model output
    created_at: float = 0.0

    @property
    def effective_label(self) -> str | None:
        """Histopathology-confirmed class first, then an imported dataset
        label, then the model's preliminary suggestion."""
        if self.histopathology is not None:
            return self.histopathology[1]
        if self.imported_label is not None:
            return self.imported_label
        if self.preliminary is not None:
            return self.preliminary.label
        return None

    def latest_capture(self) -> Capture:
        if not self.captures:
            raise ValidationError(f"case {self.record_id} has no stored captures")
        return self.captures[-1]


def _require_state(record: CaseRecord, allowed, op: str) -> None:
    if record.state not in allowed:
        raise IllegalTransitionError(
            f"{op} not allowed in state {record.state.value!r} "
            f"(case {record.record_id})"
        )


def create_case(patient: PatientMeta, record_id: str, timestamp: float,
                body_sites=DEFAULT_BODY_SITES) -> CaseRecord:
    patient.validate(body_sites)
    return CaseRecord(record_id=record_id, patient=patient, created_at=timestamp)


def attach_capture(record: CaseRecord, *, original_ref: str, cropped_ref: str,
                   device: DeviceMeta, report: QualityReport, timestamp: float,
                   override: bool = False) -> CaseRecord:
    """Store a capture on Pass (or override), else count a recapture demand."""
    _require_state(record, _CAPTURE_STATES, "attach_capture")
    device.validate()
    last_ts = max(
        [c.timestamp for c in record.captures] + [t for _, t in record.rejected_reports],
        default=None,
    )
    if last_ts is not None and timestamp < last_ts:
        raise ValidationError(
            f"capture timestamp {timestamp} precedes previous capture {last_ts}"
        )
    if report.passed or override:
        capture = Capture(original_ref=original_ref, cropped_ref=cropped_ref,
                          device=device, report=report, timestamp=timestamp,
                          override=override and not report.passed)
        return replace(record, captures=record.captures + (capture,),
                       state=CaseState.QUALITY_PASSED)
    return replace(record, rejected_reports=record.rejected_reports + ((report, timestamp),),
                   recapture_count=record.recapture_count + 1,
                   state=CaseState.QUALITY_FAILED)


def annotate(record: CaseRecord, roi: RoiCircle, annotator_id: str, role: str,
             roi_ref: str | None = None) -> CaseRecord:
    _require_state(record, (CaseState.QUALITY_PASSED,), "annotate")
    if role != "dermatologist":
        raise AuthorizationError(
            f"role {role!r} may not annotate; only dermatologists define the ROI"
        )
    if roi.radius <= 0:
        raise ValidationError(f"roi radius must be > 0, got {roi.radius}")
    latest = record.latest_capture()
    updated = replace(latest, roi_ref=roi_ref)
    return replace(record,
                   captures=record.captures[:-1] + (updated,),
                   annotation=Annotation(roi=roi, annotator_id=annotator_id, role=role),
                   state=CaseState.ANNOTATED)


def issue_prediction(record: CaseRecord, *, member_probs, vote: int, label: str,
                     risk: str, binary: str, model_version: str, timestamp: float,
                     fusion_probs=None) -> CaseRecord:
    """Attach (or overwrite) the preliminary block; versions accumulate."""
    _require_state(record, (CaseState.ANNOTATED, CaseState.PREDICTION_ISSUED),
                   "issue_prediction")
    pred = Prediction(
        member_probs=tuple(tuple(float(v) for v in p) for p in member_probs),
        vote=int(vote), label=label, risk=risk, binary=binary,
        model_version=model_version, timestamp=timestamp,
        fusion_probs=tuple(float(v) for v in fusion_probs) if fusion_probs is not None else None,
    )
    return replace(record, preliminary=pred,
                   prediction_versions=record.prediction_versions + (model_version,),
                   state=CaseState.PREDICTION_ISSUED)


def record_feedback(record: CaseRecord, entry: FeedbackEntry) -> CaseRecord:
    _require_state(record, (CaseState.PREDICTION_ISSUED, CaseState.FEEDBACK_RECORDED),
                   "record_feedback")
    entry.validate()
    return replace(record, feedback=record.feedback + (entry,),
                   state=CaseState.FEEDBACK_RECORDED)


def flag_malignant_suspect(record: CaseRecord) -> CaseRecord:
    """Idempotent clinician flag routing the case to biopsy follow-up."""
    if record.state == CaseState.BIOPSY_PENDING:
        return replace(record, malignant_suspect=True)
    _require_state(record, (CaseState.ANNOTATED, CaseState.PREDICTION_ISSUED,
                            CaseState.FEEDBACK_RECORDED), "flag_malignant_suspect")
    return replace(record, malignant_suspect=True, state=CaseState.BIOPSY_PENDING)


def order_biopsy(record: CaseRecord, supervisor_id: str, note: str) -> CaseRecord:
    """Supervisor-ordered biopsy for an unflagged case; leaves an audit note."""
    if record.state == CaseState.BIOPSY_PENDING:
        return record
    _require_state(record, (CaseState.ANNOTATED, CaseState.PREDICTION_ISSUED,
                            CaseState.FEEDBACK_RECORDED), "order_biopsy")
    if not note.strip():
        raise ValidationError("supervisor biopsy order requires an audit note")
    return replace(record, biopsy_audit=f"{supervisor_id}: {note}",
                   state=CaseState.BIOPSY_PENDING)


def attach_histopathology(record: CaseRecord, result: str, final_class: str,
                          taxonomy: Taxonomy) -> CaseRecord:
    _require_state(record, (CaseState.BIOPSY_PENDING,), "attach_histopathology")
    canonical = taxonomy.resolve(final_class)  # ValidationError on unknown class
    return replace(record, histopathology=(result, canonical),
                   state=CaseState.CONFIRMED)


def close_case(record: CaseRecord, supervisor_id: str) -> CaseRecord:
    _require_state(record, (CaseState.CONFIRMED,), "close_case")
    if not supervisor_id:
        raise AuthorizationError("closing a case requires a supervisor id")
    return replace(record, state=CaseState.CLOSED)


# --------------------------------------------------------------------------
# event sourcing


def _report_from_dict(d: dict) -> QualityReport:
    return QualityReport(
        scores=tuple(d["scores"][k] for k in INDICATORS),
        flags=tuple(d["flags"][k] for k in INDICATORS),
        verdict=d["verdict"],
        reasons=tuple(d["reasons"]),
    )


def apply_event(records: dict, event: dict, taxonomy: Taxonomy,
                body_sites=DEFAULT_BODY_SITES) -> CaseRecord:
    """Apply one event to the record map in place; returns the new record."""
    if event.get("v") != EVENT_SCHEMA_VERSION:
        raise ValidationError(f"unsupported event schema version {event.get('v')}")
    op = event["op"]
    rid = event["record_id"]
    ts = event["ts"]

    if op == "create_case":
        if rid in records:
            raise ValidationError(f"record id {rid} already exists")
        rec = create_case(PatientMeta.from_dict(event["patient"]), rid, ts, body_sites)
    else:
        if rid not in records:
            raise NotFoundError(f"unknown case {rid}")
        rec = records[rid]
        if op == "attach_capture":
            rec = attach_capture(
                rec,
                original_ref=event["original_ref"], cropped_ref=event["cropped_ref"],
                device=DeviceMeta.from_dict(event["device"]),
                report=_report_from_dict(event["report"]),
                timestamp=ts, override=event.get("override", False),
            )
        elif op == "annotate":
            roi = event["roi"]
            rec = annotate(rec, RoiCircle(roi["center_x"], roi["center_y"], roi["radius"]),
                           event["annotator_id"], event["role"], event.get("roi_ref"))
        elif op == "issue_prediction":
            rec = issue_prediction(
                rec, member_probs=event["member_probs"], vote=event["vote"],
                label=event["label"], risk=event["risk"], binary=event["binary"],
                model_version=event["model_version"], timestamp=ts,
                fusion_probs=event.get("fusion_probs"),
            )
        elif op == "record_feedback":
            rec = record_feedback(rec, FeedbackEntry(
                verdict=event["verdict"], clinician_id=event["clinician_id"],
                timestamp=ts, hypothesis=event.get("hypothesis")))
        elif op == "flag_malignant_suspect":
            rec = flag_malignant_suspect(rec)
        elif op == "order_biopsy":
            rec = order_biopsy(rec, event["supervisor_id"], event["note"])
        elif op == "attach_histopathology":
            rec = attach_histopathology(rec, event["result"], event["final_class"], taxonomy)
        elif op == "close_case":
            rec = close_case(rec, event["supervisor_id"])
        else:
            raise ValidationError(f"unknown event op {op!r}")
    records[rid] = rec
    return rec


def replay_events(events, taxonomy: Taxonomy | None = None,
                  body_sites=DEFAULT_BODY_SITES) -> dict:
    """Rebuild the full record map from an ordered event sequence."""
    taxonomy = taxonomy or default_taxonomy()
    records: dict = {}
    for event in events:
        apply_event(records, event, taxonomy, body_sites)
    return records


class CaseStore:
    """Record map with per-case single-writer locking and a JSONL event log."""

    def __init__(self, taxonomy: Taxonomy | None = None,
                 body_sites=DEFAULT_BODY_SITES, log_path=None):
        self.taxonomy = taxonomy or default_taxonomy()
        self.body_sites = body_sites
        self.log_path = log_path
        self._records: dict = {}
        self._events: list = []
        self._locks: dict = {}
        self._master = threading.Lock()

    def _lock_for(self, record_id: str) -> threading.Lock:
        with self._master:
            return self._locks.setdefault(record_id, threading.Lock())

    def _commit(self, event: dict) -> CaseRecord:
        rec = apply_event(self._records, event, self.taxonomy, self.body_sites)
        self._events.append(event)
        if self.log_path:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        return rec

    def get(self, record_id: str) -> CaseRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise NotFoundError(f"unknown case {record_id}") from None

    def all_records(self) -> list:
        return list(self._records.values())

    def events(self) -> list:
        return list(self._events)

    def submit(self, record_id: str, event: dict) -> CaseRecord:
        """Apply an op event to one case under its writer lock."""
        event = {"v": EVENT_SCHEMA_VERSION, "record_id": record_id, **event}
        with self._lock_for(record_id):
            return self._commit(event)

    def create_case(self, patient: PatientMeta, record_id: str | None = None,
                    timestamp: float = 0.0) -> CaseRecord:
        rid = record_id or patient.record_id or uuid.uuid4().hex
        with self._master:
            if rid in self._records:
                raise ValidationError(f"record id {rid} already exists")
        return self.submit(rid, {"op": "create_case", "ts": timestamp,
                                 "patient": patient.to_dict()})

    @classmethod
    def from_events(cls, events, taxonomy: Taxonomy | None = None,
                    body_sites=DEFAULT_BODY_SITES, log_path=None) -> "CaseStore":
        """Rebuild a store from a persisted event log."""
        store = cls(taxonomy=taxonomy, body_sites=body_sites, log_path=None)
        for event in events:
            apply_event(store._records, event, store.taxonomy, body_sites)
            store._events.append(event)
        store.log_path = log_path
        return store


def load_events(path) -> list:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events
