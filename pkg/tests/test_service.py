import io
import json
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dermkit.imaging import DistortionSpec, apply_distortion
from dermkit.service import ModelRegistry, ServiceConfig, create_app
from dermkit.synth import texture
from dermkit.workflow import CaseStore

PATIENT = {"age": 61, "gender": "male", "fitzpatrick": 5, "lesion_location": "forearm"}


@pytest.fixture()
def client(tmp_path, quality_model, trained_members):
    m1, m2, fusion = trained_members
    registry = ModelRegistry()
    registry.set_quality(quality_model, "q-test")
    registry.add_member("m1", m1)
    registry.add_member("m2", m2)
    registry.set_fusion(fusion, "f-test")
    cfg = ServiceConfig(storage_dir=str(tmp_path / "storage"),
                        event_log=str(tmp_path / "events.jsonl"))
    app = create_app(cfg, registry, CaseStore(log_path=cfg.event_log))
    return TestClient(app)


def clean_png(seed=3000):
    return texture(size=64, seed=seed).encode_png()


def blurred_png(seed=3100):
    img = apply_distortion(texture(size=64, seed=seed), DistortionSpec("blur", 5.0), 0)
    return img.encode_png()


def make_case(client):
    res = client.post("/cases", json=PATIENT)
    assert res.status_code == 201
    return res.json()["record_id"]


def submit(client, case_id, png, override=False, key=None):
    headers = {"Idempotency-Key": key} if key else {}
    meta = {"device": {"model": "phone-x", "operating_system": "android"},
            "override": override}
    return client.post(f"/cases/{case_id}/captures",
                       files={"image": ("shot.png", png, "image/png")},
                       data={"metadata": json.dumps(meta)}, headers=headers)


def annotate(client, case_id, cx=32, cy=32, r=10, role="dermatologist"):
    return client.post(f"/cases/{case_id}/annotation",
                       json={"center_x": cx, "center_y": cy, "radius": r,
                             "annotator_id": "derm-1", "role": role})


class TestCases:
    def test_create_and_fetch(self, client):
        case_id = make_case(client)
        res = client.get(f"/cases/{case_id}")
        assert res.status_code == 200
        assert res.json()["state"] == "created"

    def test_invalid_patient(self, client):
        res = client.post("/cases", json={**PATIENT, "fitzpatrick": 7})
        assert res.status_code == 400
        assert res.json()["error"]["code"] == "validation_failed"

    def test_unknown_case(self, client):
        res = client.get("/cases/nope")
        assert res.status_code == 404
        assert res.json()["error"]["code"] == "not_found"


class TestCaptures:
    def test_clean_image_passes(self, client, tmp_path):
        case_id = make_case(client)
        res = submit(client, case_id, clean_png())
        assert res.status_code == 200
        body = res.json()
        assert body["state"] == "quality_passed"
        assert body["report"]["verdict"] == "pass"
        assert body["crop_preview"] == {"x": 0, "y": 0, "side": 64,
                                        "image_width": 64, "image_height": 64}
        case = client.get(f"/cases/{case_id}").json()
        cap = case["captures"][0]
        assert cap["original_ref"] and cap["cropped_ref"]
        # both the original and the crop are materialized on disk
        assert (tmp_path / "storage" / cap["original_ref"]).exists()
        assert (tmp_path / "storage" / cap["cropped_ref"]).exists()

    def test_blurred_image_rejected_with_reasons(self, client):
        case_id = make_case(client)
        res = submit(client, case_id, blurred_png())
        assert res.status_code == 422
        err = res.json()["error"]
        assert err["code"] == "quality_rejected"
        assert "blur" in err["details"]["reasons"]
        case = client.get(f"/cases/{case_id}").json()
        assert case["state"] == "quality_failed"
        assert case["recapture_count"] == 1
        assert case["captures"] == []

    def test_override_stores_failing_capture(self, client):
        case_id = make_case(client)
        res = submit(client, case_id, blurred_png(), override=True)
        assert res.status_code == 200
        case = client.get(f"/cases/{case_id}").json()
        assert case["state"] == "quality_passed"
        assert case["captures"][0]["override"] is True

    def test_undecodable_image(self, client):
        case_id = make_case(client)
        res = submit(client, case_id, b"garbage-bytes")
        assert res.status_code == 400
        assert res.json()["error"]["code"] == "validation_failed"

    def test_capture_on_unknown_case(self, client):
        res = submit(client, "missing", clean_png())
        assert res.status_code == 404

    def test_idempotency_key_replays_response(self, client):
        case_id = make_case(client)
        first = submit(client, case_id, clean_png(), key="abc")
        again = submit(client, case_id, clean_png(3001), key="abc")
        assert again.json() == first.json()
        case = client.get(f"/cases/{case_id}").json()
        assert len(case["captures"]) == 1

    def test_nonsquare_image_crop_preview(self, client):
        case_id = make_case(client)
        rng = np.random.default_rng(0)
        from dermkit.imaging import ImageBuffer
        wide = ImageBuffer(np.tile(texture(size=64, seed=3005).array, (1, 2, 1)))
        res = submit(client, case_id, wide.encode_png())
        assert res.status_code == 200
        assert res.json()["crop_preview"] == {"x": 32, "y": 0, "side": 64,
                                              "image_width": 128, "image_height": 64}


class TestAnnotationAndPrediction:
    def passed_case(self, client):
        case_id = make_case(client)
        assert submit(client, case_id, clean_png()).status_code == 200
        return case_id

    def test_annotate(self, client):
        case_id = self.passed_case(client)
        res = annotate(client, case_id)
        assert res.status_code == 200
        assert res.json()["state"] == "annotated"
        assert res.json()["captures"][0]["roi_ref"]

    def test_student_cannot_annotate(self, client):
        case_id = self.passed_case(client)
        res = annotate(client, case_id, role="student")
        assert res.status_code == 403

    def test_roi_outside_crop(self, client):
        case_id = self.passed_case(client)
        res = annotate(client, case_id, cx=500, cy=500)
        assert res.status_code == 400

    def test_predict_payload(self, client):
        case_id = self.passed_case(client)
        annotate(client, case_id)
        res = client.post(f"/cases/{case_id}/predict")
        assert res.status_code == 200
        body = res.json()
        assert set(body["members"]) == {"m1", "m2"}
        assert all(len(v) == 7 for v in body["members"].values())
        assert isinstance(body["vote"], int)
        assert len(body["fusion"]) == 7
        assert body["risk"] in ("benign", "pre-malignant", "malignant")
        assert body["binary_risk"] in ("benign", "potentially-malignant")
        again = client.post(f"/cases/{case_id}/predict")
        assert again.json() == body

    def test_predict_requires_annotation(self, client):
        case_id = make_case(client)
        res = client.post(f"/cases/{case_id}/predict")
        assert res.status_code == 409
        assert res.json()["error"]["code"] == "illegal_transition"


class TestReviewFlow:
    def predicted_case(self, client):
        case_id = make_case(client)
        submit(client, case_id, clean_png())
        annotate(client, case_id)
        client.post(f"/cases/{case_id}/predict")
        return case_id

    def test_feedback_flag_histopathology(self, client):
        case_id = self.predicted_case(client)
        res = client.post(f"/cases/{case_id}/feedback",
                          json={"verdict": "disagree", "hypothesis": "suspect SCC",
                                "clinician_id": "derm-1"})
        assert res.json()["state"] == "feedback_recorded"

        res = client.post(f"/cases/{case_id}/flag")
        assert res.json()["state"] == "biopsy_pending"

        res = client.post(f"/cases/{case_id}/histopathology",
                          json={"result": "SCC confirmed",
                                "final_class": "squamous cell carcinoma"})
        body = res.json()
        assert body["state"] == "confirmed"
        assert body["effective_label"] == "squamous cell carcinoma"

    def test_disagree_requires_hypothesis(self, client):
        case_id = self.predicted_case(client)
        res = client.post(f"/cases/{case_id}/feedback",
                          json={"verdict": "disagree", "clinician_id": "d"})
        assert res.status_code == 400

    def test_review_queue_filter(self, client):
        case_id = self.predicted_case(client)
        other = make_case(client)
        res = client.get("/review/queue", params={"state": "prediction_issued"})
        ids = [c["record_id"] for c in res.json()["cases"]]
        assert case_id in ids
        assert other not in ids

    def test_supervisor_biopsy_order(self, client):
        case_id = self.predicted_case(client)
        res = client.post(f"/cases/{case_id}/biopsy-order",
                          json={"role": "supervisor", "supervisor_id": "sup-1",
                                "note": "consistency audit"})
        assert res.json()["state"] == "biopsy_pending"
        res = client.post(f"/cases/{case_id}/biopsy-order",
                          json={"role": "dermatologist", "supervisor_id": "x",
                                "note": "nope"})
        assert res.status_code == 403


class TestSummaryAndExport:
    def test_summary_and_export(self, client):
        case_id = make_case(client)
        submit(client, case_id, clean_png())
        annotate(client, case_id)
        client.post(f"/cases/{case_id}/predict")
        client.post(f"/cases/{case_id}/flag")
        client.post(f"/cases/{case_id}/histopathology",
                    json={"result": "ok", "final_class": "nevus"})

        summary = client.get("/summary").json()
        assert summary["dataset"]["total"] == 1
        assert summary["dataset"]["by_class"] == {"nevus": 1}
        assert summary["case_states"]["confirmed"] == 1

        res = client.get("/export")
        assert res.status_code == 200
        archive = zipfile.ZipFile(io.BytesIO(res.content))
        names = archive.namelist()
        assert "manifest.csv" in names
        assert any(name.startswith("images/") for name in names)
        manifest = archive.read("manifest.csv").decode()
        assert "nevus" in manifest

    def test_export_without_labels(self, client):
        res = client.get("/export")
        assert res.status_code == 400

    def test_meta(self, client):
        body = client.get("/meta").json()
        assert body["crop_fraction"] == 1.0
        assert len(body["classes"]) == 7
