"""HTTP API binding the pipeline end to end.

Endpoints mirror the clinical flow: case creation, capture submission with
real-time quality verdicts, ROI annotation, ensemble prediction with risk
mapping, feedback, biopsy flagging, histopathology, review queue, summary
and dataset export. Every non-success response carries exactly one error
object ``{"error": {"code", "message", "details"}}``.
"""

from __future__ import annotations

import io
import json
import os
import time
import uuid
import zipfile

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from ..classify import binary_risk, map_risk, predict as member_predict
from ..datastore import DataStore, ManifestRow, export_dataset, summarize
from ..ensemble import fusion_forward, majority_vote
from ..errors import (
    AuthorizationError,
    DermkitError,
    IllegalTransitionError,
    NotFoundError,
    ValidationError,
)
from ..imaging import CropSpec, ImageBuffer, RoiCircle, center_square_region, \
    center_square_crop, roi_crop
from ..quality import assess
from ..workflow import CaseState, CaseStore, DeviceMeta, PatientMeta
from .config import ServiceConfig
from .registry import ModelRegistry


class QualityRejectedError(DermkitError):
    code = "quality_rejected"

    def __init__(self, message: str, report):
        super().__init__(message)
        self.report = report


_STATUS = {
    "not_found": 404,
    "illegal_transition": 409,
    "authorization_failed": 403,
    "quality_rejected": 422,
    "validation_failed": 400,
    "invalid_crop": 400,
    "invalid_roi": 400,
}


class BlobStorage:
    """PNG blobs under the storage directory, addressed by relative refs."""

    def __init__(self, root: str):
        self.root = root
        for sub in ("originals", "crops", "roi"):
            os.makedirs(os.path.join(root, sub), exist_ok=True)

    def save(self, kind: str, name: str, data: bytes) -> str:
        ref = f"{kind}/{name}.png"
        with open(os.path.join(self.root, ref), "wb") as fh:
            fh.write(data)
        return ref

    def read(self, ref: str) -> bytes:
        path = os.path.join(self.root, ref)
        if not os.path.exists(path):
            raise NotFoundError(f"stored image {ref} missing")
        with open(path, "rb") as fh:
            return fh.read()


def case_to_dict(rec) -> dict:
    return {
        "record_id": rec.record_id,
        "state": rec.state.value,
        "patient": rec.patient.to_dict(),
        "captures": [c.to_dict() for c in rec.captures],
        "rejected_reports": [
            {"report": r.to_dict(), "timestamp": ts} for r, ts in rec.rejected_reports
        ],
        "recapture_count": rec.recapture_count,
        "annotation": rec.annotation.to_dict() if rec.annotation else None,
        "preliminary": rec.preliminary.to_dict() if rec.preliminary else None,
        "prediction_versions": list(rec.prediction_versions),
        "feedback": [f.to_dict() for f in rec.feedback],
        "malignant_suspect": rec.malignant_suspect,
        "biopsy_audit": rec.biopsy_audit,
        "histopathology": (
            {"result": rec.histopathology[0], "final_class": rec.histopathology[1]}
            if rec.histopathology else None
        ),
        "effective_label": rec.effective_label,
        "created_at": rec.created_at,
    }


def dataset_from_cases(cases: CaseStore, storage: BlobStorage) -> DataStore:
    """Flat per-image dataset over every labeled case (crops are the images)."""
    store = DataStore(cases.taxonomy)
    for rec in sorted(cases.all_records(), key=lambda r: (r.created_at, r.record_id)):
        label = rec.effective_label
        if label is None or not rec.captures:
            continue
        for cap in rec.captures:
            image_id = os.path.splitext(os.path.basename(cap.cropped_ref))[0]
            row = ManifestRow(
                record_id=rec.record_id,
                lesion_id=rec.record_id,
                image_id=image_id,
                diagnostic=label,
                risk="",
                image_path="",
                age=rec.patient.age,
                gender=rec.patient.gender,
                fitzpatrick=rec.patient.fitzpatrick,
                body_site=rec.patient.lesion_location,
                device_model=cap.device.model,
                os=cap.device.operating_system,
                camera=cap.device.camera,
            )
            store.add_item(row, storage.read(cap.cropped_ref))
    return store


def create_app(config: ServiceConfig | None = None,
               registry: ModelRegistry | None = None,
               cases: CaseStore | None = None) -> FastAPI:
    cfg = config or ServiceConfig()
    reg = registry or ModelRegistry.from_config(cfg)
    case_store = cases or CaseStore(log_path=cfg.event_log)
    storage = BlobStorage(cfg.storage_dir)

    app = FastAPI(title="dermkit", docs_url=None, redoc_url=None)
    app.state.config = cfg
    app.state.registry = reg
    app.state.cases = case_store
    app.state.storage = storage
    idempotent: dict = {}

    @app.exception_handler(DermkitError)
    async def on_error(_request: Request, exc: DermkitError):
        details = {}
        if isinstance(exc, QualityRejectedError):
            details = exc.report.to_dict()
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 400),
            content={"error": {"code": exc.code, "message": str(exc), "details": details}},
        )

    @app.exception_handler(RequestValidationError)
    async def on_body_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "validation_failed",
                               "message": str(exc.errors()[:1]), "details": {}}},
        )

    @app.get("/meta")
    def meta():
        return {
            "crop_fraction": cfg.crop_fraction,
            "roi_padding": cfg.roi_padding,
            "classes": list(case_store.taxonomy.classes),
            "model_versions": reg.version_string(),
        }

    @app.post("/cases", status_code=201)
    async def create_case(request: Request):
        body = await request.json()
        patient = PatientMeta(
            age=body.get("age", -1),
            gender=body.get("gender", "unspecified"),
            fitzpatrick=body.get("fitzpatrick", 0),
            lesion_location=body.get("lesion_location", ""),
            record_id=body.get("record_id"),
        )
        rec = case_store.create_case(patient, timestamp=time.time())
        return case_to_dict(rec)

    @app.get("/cases/{case_id}")
    def get_case(case_id: str):
        return case_to_dict(case_store.get(case_id))

    @app.post("/cases/{case_id}/captures")
    async def submit_capture(case_id: str, request: Request,
                             image: UploadFile = File(...),
                             metadata: str = Form("{}")):
        key = request.headers.get("Idempotency-Key")
        if key and (case_id, key) in idempotent:
            status, payload = idempotent[(case_id, key)]
            return JSONResponse(status_code=status, content=payload)

        case_store.get(case_id)  # not_found before any decode work
        meta = json.loads(metadata or "{}")
        device = DeviceMeta.from_dict(meta.get("device", {"model": "unknown"}))
        override = bool(meta.get("override", False))
        raw = await image.read()
        img = ImageBuffer.decode_image(raw)

        crop = center_square_crop(img, CropSpec(cfg.crop_fraction))
        x0, y0, side = center_square_region(img.width, img.height, cfg.crop_fraction)
        model = reg.require_quality()
        report = assess(model, crop)

        capture_id = uuid.uuid4().hex[:12]
        ts = meta.get("timestamp", time.time())
        stored = report.passed or override
        original_ref = cropped_ref = None
        if stored:
            original_ref = storage.save("originals", capture_id, img.encode_png())
            cropped_ref = storage.save("crops", capture_id, crop.encode_png())

        rec = case_store.submit(case_id, {
            "op": "attach_capture", "ts": ts,
            "original_ref": original_ref or "", "cropped_ref": cropped_ref or "",
            "device": device.to_dict(), "report": report.to_dict(),
            "override": override,
        })

        preview = {"x": x0, "y": y0, "side": side,
                   "image_width": img.width, "image_height": img.height}
        if not stored:
            payload = {"error": {"code": "quality_rejected",
                                 "message": "image failed quality gate; recapture",
                                 "details": {**report.to_dict(), "crop_preview": preview,
                                             "state": rec.state.value}}}
            if key:
                idempotent[(case_id, key)] = (422, payload)
            return JSONResponse(status_code=422, content=payload)

        payload = {
            "state": rec.state.value,
            "report": report.to_dict(),
            "capture": rec.captures[-1].to_dict(),
            "crop_preview": preview,
        }
        if key:
            idempotent[(case_id, key)] = (200, payload)
        return payload

    @app.post("/cases/{case_id}/annotation")
    async def annotate_case(case_id: str, request: Request):
        body = await request.json()
        rec = case_store.get(case_id)
        roi = RoiCircle(body["center_x"], body["center_y"], body["radius"])
        latest = rec.latest_capture()
        crop_img = ImageBuffer.decode_image(storage.read(latest.cropped_ref))
        roi.validate_for(crop_img)
        roi_img = roi_crop(crop_img, roi, cfg.roi_padding)
        roi_ref = storage.save("roi", f"{case_id}_{len(rec.captures)}", roi_img.encode_png())
        rec = case_store.submit(case_id, {
            "op": "annotate", "ts": time.time(),
            "roi": {"center_x": roi.center_x, "center_y": roi.center_y,
                    "radius": roi.radius},
            "annotator_id": body.get("annotator_id", ""),
            "role": body.get("role", ""),
            "roi_ref": roi_ref,
        })
        return case_to_dict(rec)

    @app.post("/cases/{case_id}/predict")
    def predict_case(case_id: str):
        rec = case_store.get(case_id)
        if rec.state not in (CaseState.ANNOTATED, CaseState.PREDICTION_ISSUED):
            raise IllegalTransitionError(
                f"predict requires an annotated case, state is {rec.state.value!r}")
        members = reg.require_members()
        roi_ref = rec.latest_capture().roi_ref
        if not roi_ref:
            raise ValidationError("annotated case has no ROI crop stored")
        roi_img = ImageBuffer.decode_image(storage.read(roi_ref))

        vectors = [member_predict(clf, roi_img) for _, clf in members]
        vote = majority_vote(vectors)
        taxonomy = members[0][1].taxonomy
        fused = None
        if reg.fusion is not None:
            fused = fusion_forward(reg.fusion, vectors)
            label_ix = int(fused.argmax())
        else:
            label_ix = vote
        label = taxonomy.classes[label_ix]
        tier = map_risk(taxonomy, label)
        binary = binary_risk(tier)

        rec = case_store.submit(case_id, {
            "op": "issue_prediction", "ts": time.time(),
            "member_probs": [[float(v) for v in vec] for vec in vectors],
            "vote": vote, "label": label, "risk": tier, "binary": binary,
            "model_version": reg.version_string(),
            "fusion_probs": [float(v) for v in fused] if fused is not None else None,
        })
        return {
            "state": rec.state.value,
            "members": {name: [float(v) for v in vec]
                        for (name, _), vec in zip(members, vectors)},
            "vote": vote,
            "vote_label": taxonomy.classes[vote],
            "fusion": [float(v) for v in fused] if fused is not None else None,
            "label": label,
            "risk": tier,
            "binary_risk": binary,
            "model_version": reg.version_string(),
        }

    @app.post("/cases/{case_id}/feedback")
    async def record_feedback(case_id: str, request: Request):
        body = await request.json()
        rec = case_store.submit(case_id, {
            "op": "record_feedback", "ts": time.time(),
            "verdict": body.get("verdict", ""),
            "clinician_id": body.get("clinician_id", ""),
            "hypothesis": body.get("hypothesis"),
        })
        return case_to_dict(rec)

    @app.post("/cases/{case_id}/flag")
    def flag_case(case_id: str):
        rec = case_store.submit(case_id, {"op": "flag_malignant_suspect",
                                          "ts": time.time()})
        return case_to_dict(rec)

    @app.post("/cases/{case_id}/biopsy-order")
    async def biopsy_order(case_id: str, request: Request):
        body = await request.json()
        if body.get("role") != "supervisor":
            raise AuthorizationError("only supervisors may order an unflagged biopsy")
        rec = case_store.submit(case_id, {
            "op": "order_biopsy", "ts": time.time(),
            "supervisor_id": body.get("supervisor_id", ""),
            "note": body.get("note", ""),
        })
        return case_to_dict(rec)

    @app.post("/cases/{case_id}/histopathology")
    async def attach_histopathology(case_id: str, request: Request):
        body = await request.json()
        rec = case_store.submit(case_id, {
            "op": "attach_histopathology", "ts": time.time(),
            "result": body.get("result", ""),
            "final_class": body.get("final_class", ""),
        })
        return case_to_dict(rec)

    @app.get("/review/queue")
    def review_queue(state: str | None = None):
        records = sorted(case_store.all_records(),
                         key=lambda r: (r.created_at, r.record_id))
        if state:
            records = [r for r in records if r.state.value == state]
        return {"cases": [
            {"record_id": r.record_id, "state": r.state.value,
             "malignant_suspect": r.malignant_suspect,
             "captures": len(r.captures), "created_at": r.created_at,
             "effective_label": r.effective_label}
            for r in records
        ]}

    @app.get("/summary")
    def dataset_summary():
        store = dataset_from_cases(case_store, storage)
        states: dict = {}
        for rec in case_store.all_records():
            states[rec.state.value] = states.get(rec.state.value, 0) + 1
        return {"dataset": summarize(store).to_dict(), "case_states": states}

    @app.get("/export")
    def export_archive():
        store = dataset_from_cases(case_store, storage)
        if len(store) == 0:
            raise ValidationError("nothing to export: no labeled cases")
        export_dir = os.path.join(cfg.storage_dir, "export")
        manifest_path = export_dataset(store, export_dir)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            zf.write(manifest_path, "manifest.csv")
            for row in store.rows:
                zf.write(os.path.join(export_dir, row.image_path), row.image_path)
        return Response(content=buf.getvalue(), media_type="application/zip",
                        headers={"Content-Disposition": "attachment; filename=dataset.zip"})

    return app
