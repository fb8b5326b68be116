import numpy as np
import pytest

from dermkit.classify import default_taxonomy
from dermkit.errors import (
    AuthorizationError,
    DermkitError,
    IllegalTransitionError,
    NotFoundError,
    ValidationError,
)
from dermkit.imaging import RoiCircle
from dermkit.quality import gate_scores
from dermkit.workflow import (
    CaseRecord,
    CaseState,
    CaseStore,
    DeviceMeta,
    FeedbackEntry,
    PatientMeta,
    annotate,
    apply_event,
    attach_capture,
    attach_histopathology,
    close_case,
    create_case,
    flag_malignant_suspect,
    issue_prediction,
    load_events,
    order_biopsy,
    record_feedback,
    replay_events,
)

TAX = default_taxonomy()
PASS_REPORT = gate_scores((0.1, 0.1, 0.1, 0.1), (0.5,) * 4)
FAIL_REPORT = gate_scores((0.1, 0.9, 0.1, 0.1), (0.5,) * 4)
DEVICE = DeviceMeta(model="phone-x", operating_system="android 14", camera="12MP f/1.8")


def patient(**overrides):
    base = dict(age=55, gender="female", fitzpatrick=4, lesion_location="forearm")
    base.update(overrides)
    return PatientMeta(**base)


def fresh_case():
    return create_case(patient(), "case-1", 0.0)


def case_at_quality_passed():
    return attach_capture(fresh_case(), original_ref="o1", cropped_ref="c1",
                          device=DEVICE, report=PASS_REPORT, timestamp=1.0)


def case_at_annotated():
    return annotate(case_at_quality_passed(), RoiCircle(30, 30, 10), "derm-1",
                    "dermatologist", roi_ref="r1")


def case_at_prediction():
    return issue_prediction(case_at_annotated(),
                            member_probs=[[0.7, 0.1, 0.05, 0.05, 0.05, 0.03, 0.02]],
                            vote=0, label="melanoma", risk="malignant",
                            binary="potentially-malignant", model_version="v1",
                            timestamp=3.0)


class TestCreate:
    def test_valid_patient(self):
        rec = fresh_case()
        assert rec.state == CaseState.CREATED
        assert rec.record_id == "case-1"

    def test_store_generates_distinct_ids(self):
        store = CaseStore()
        a = store.create_case(patient())
        b = store.create_case(patient())
        assert a.record_id != b.record_id

    def test_fitzpatrick_out_of_range(self):
        with pytest.raises(ValidationError):
            create_case(patient(fitzpatrick=7), "x", 0.0)

    def test_age_out_of_range(self):
        with pytest.raises(ValidationError):
            create_case(patient(age=130), "x", 0.0)

    def test_unknown_body_site(self):
        with pytest.raises(ValidationError):
            create_case(patient(lesion_location="elsewhere"), "x", 0.0)


class TestAttachCapture:
    def test_pass_stores_capture(self):
        rec = case_at_quality_passed()
        assert rec.state == CaseState.QUALITY_PASSED
        assert len(rec.captures) == 1
        assert rec.recapture_count == 0

    def test_fail_rejects_and_counts(self):
        rec = attach_capture(fresh_case(), original_ref="", cropped_ref="",
                             device=DEVICE, report=FAIL_REPORT, timestamp=1.0)
        assert rec.state == CaseState.QUALITY_FAILED
        assert len(rec.captures) == 0
        assert rec.recapture_count == 1
        assert rec.rejected_reports[0][0] == FAIL_REPORT

    def test_override_stores_flagged_capture(self):
        rec = attach_capture(fresh_case(), original_ref="o", cropped_ref="c",
                             device=DEVICE, report=FAIL_REPORT, timestamp=1.0,
                             override=True)
        assert rec.state == CaseState.QUALITY_PASSED
        assert rec.captures[0].override

    def test_retake_after_failure(self):
        rec = attach_capture(fresh_case(), original_ref="", cropped_ref="",
                             device=DEVICE, report=FAIL_REPORT, timestamp=1.0)
        rec = attach_capture(rec, original_ref="o2", cropped_ref="c2",
                             device=DEVICE, report=PASS_REPORT, timestamp=2.0)
        assert rec.state == CaseState.QUALITY_PASSED
        assert rec.recapture_count == 1

    def test_attach_after_annotation_is_illegal(self):
        with pytest.raises(IllegalTransitionError):
            attach_capture(case_at_annotated(), original_ref="o", cropped_ref="c",
                           device=DEVICE, report=PASS_REPORT, timestamp=5.0)

    def test_timestamps_must_be_monotone(self):
        rec = case_at_quality_passed()
        with pytest.raises(ValidationError):
            attach_capture(rec, original_ref="o2", cropped_ref="c2", device=DEVICE,
                           report=PASS_REPORT, timestamp=0.5)


class TestAnnotate:
    def test_dermatologist_annotates(self):
        rec = case_at_annotated()
        assert rec.state == CaseState.ANNOTATED
        assert rec.annotation.annotator_id == "derm-1"
        assert rec.captures[-1].roi_ref == "r1"

    def test_student_is_rejected(self):
        with pytest.raises(AuthorizationError):
            annotate(case_at_quality_passed(), RoiCircle(30, 30, 10), "stud-1", "student")

    def test_wrong_state(self):
        with pytest.raises(IllegalTransitionError):
            annotate(fresh_case(), RoiCircle(30, 30, 10), "derm-1", "dermatologist")

    def test_bad_radius(self):
        with pytest.raises(ValidationError):
            annotate(case_at_quality_passed(), RoiCircle(30, 30, 0), "derm-1",
                     "dermatologist")


class TestPrediction:
    def test_issue(self):
        rec = case_at_prediction()
        assert rec.state == CaseState.PREDICTION_ISSUED
        assert rec.preliminary.label == "melanoma"
        assert rec.prediction_versions == ("v1",)

    def test_reissue_replaces_and_keeps_history(self):
        rec = case_at_prediction()
        rec = issue_prediction(rec, member_probs=[[0.1, 0.9, 0, 0, 0, 0, 0]],
                               vote=1, label="basal cell carcinoma", risk="malignant",
                               binary="potentially-malignant", model_version="v2",
                               timestamp=4.0)
        assert rec.preliminary.model_version == "v2"
        assert rec.prediction_versions == ("v1", "v2")

    def test_wrong_state(self):
        failed = attach_capture(fresh_case(), original_ref="", cropped_ref="",
                                device=DEVICE, report=FAIL_REPORT, timestamp=1.0)
        with pytest.raises(IllegalTransitionError):
            issue_prediction(failed, member_probs=[[1.0]], vote=0, label="melanoma",
                             risk="malignant", binary="potentially-malignant",
                             model_version="v1", timestamp=2.0)


class TestFeedback:
    def test_confirm(self):
        rec = record_feedback(case_at_prediction(),
                              FeedbackEntry("confirm", "derm-1", 5.0))
        assert rec.state == CaseState.FEEDBACK_RECORDED
        assert len(rec.feedback) == 1

    def test_disagree_with_hypothesis(self):
        rec = record_feedback(case_at_prediction(),
                              FeedbackEntry("disagree", "derm-1", 5.0,
                                            hypothesis="suspect SCC"))
        assert rec.feedback[0].hypothesis == "suspect SCC"

    def test_disagree_requires_hypothesis(self):
        with pytest.raises(ValidationError):
            record_feedback(case_at_prediction(),
                            FeedbackEntry("disagree", "derm-1", 5.0, hypothesis="  "))

    def test_wrong_state(self):
        with pytest.raises(IllegalTransitionError):
            record_feedback(case_at_annotated(), FeedbackEntry("confirm", "d", 5.0))


class TestBiopsyFlow:
    def test_flag_moves_to_biopsy_pending(self):
        rec = record_feedback(case_at_prediction(), FeedbackEntry("confirm", "d", 5.0))
        rec = flag_malignant_suspect(rec)
        assert rec.state == CaseState.BIOPSY_PENDING
        assert rec.malignant_suspect

    def test_flag_from_created_is_illegal(self):
        with pytest.raises(IllegalTransitionError):
            flag_malignant_suspect(fresh_case())

    def test_flag_is_idempotent(self):
        rec = flag_malignant_suspect(case_at_prediction())
        again = flag_malignant_suspect(rec)
        assert again.state == CaseState.BIOPSY_PENDING
        assert again.malignant_suspect

    def test_histopathology_confirms(self):
        rec = flag_malignant_suspect(case_at_prediction())
        rec = attach_histopathology(rec, "BCC confirmed", "basal cell carcinoma", TAX)
        assert rec.state == CaseState.CONFIRMED
        assert rec.histopathology == ("BCC confirmed", "basal cell carcinoma")
        assert rec.effective_label == "basal cell carcinoma"

    def test_histopathology_requires_biopsy_pending(self):
        rec = record_feedback(case_at_prediction(), FeedbackEntry("confirm", "d", 5.0))
        with pytest.raises(IllegalTransitionError):
            attach_histopathology(rec, "BCC", "basal cell carcinoma", TAX)

    def test_unknown_final_class(self):
        rec = flag_malignant_suspect(case_at_prediction())
        with pytest.raises(ValidationError):
            attach_histopathology(rec, "odd", "not-a-class", TAX)

    def test_supervisor_ordered_biopsy(self):
        rec = order_biopsy(case_at_prediction(), "sup-1", "routine audit")
        assert rec.state == CaseState.BIOPSY_PENDING
        assert not rec.malignant_suspect
        assert rec.biopsy_audit.startswith("sup-1")
        confirmed = attach_histopathology(rec, "nevus confirmed", "nevus", TAX)
        assert confirmed.malignant_suspect or confirmed.biopsy_audit

    def test_order_biopsy_requires_note(self):
        with pytest.raises(ValidationError):
            order_biopsy(case_at_prediction(), "sup-1", "  ")

    def test_close_after_confirmation(self):
        rec = flag_malignant_suspect(case_at_prediction())
        rec = attach_histopathology(rec, "ok", "nevus", TAX)
        assert close_case(rec, "sup-1").state == CaseState.CLOSED

    def test_close_requires_confirmed(self):
        with pytest.raises(IllegalTransitionError):
            close_case(case_at_prediction(), "sup-1")


class TestEventSourcing:
    def test_store_round_trip_with_log_file(self, tmp_path):
        log = tmp_path / "events.jsonl"
        store = CaseStore(log_path=str(log))
        rec = store.create_case(patient(), record_id="case-9", timestamp=0.0)
        store.submit("case-9", {"op": "attach_capture", "ts": 1.0,
                                "original_ref": "o", "cropped_ref": "c",
                                "device": DEVICE.to_dict(),
                                "report": PASS_REPORT.to_dict(), "override": False})
        store.submit("case-9", {"op": "annotate", "ts": 2.0,
                                "roi": {"center_x": 30, "center_y": 30, "radius": 10},
                                "annotator_id": "derm-1", "role": "dermatologist",
                                "roi_ref": "r"})
        replayed = replay_events(load_events(log), TAX)
        assert replayed == {"case-9": store.get("case-9")}

    def test_from_events_matches_live_store(self, tmp_path):
        log = tmp_path / "events.jsonl"
        store = CaseStore(log_path=str(log))
        store.create_case(patient(), record_id="case-a", timestamp=0.0)
        store.submit("case-a", {"op": "attach_capture", "ts": 1.0,
                                "original_ref": "o", "cropped_ref": "c",
                                "device": DEVICE.to_dict(),
                                "report": PASS_REPORT.to_dict(), "override": False})
        rebuilt = CaseStore.from_events(load_events(log))
        assert rebuilt.get("case-a") == store.get("case-a")
        assert rebuilt.events() == store.events()

    def test_unknown_case(self):
        store = CaseStore()
        with pytest.raises(NotFoundError):
            store.get("missing")

    def test_duplicate_record_id(self):
        store = CaseStore()
        store.create_case(patient(), record_id="dup", timestamp=0.0)
        with pytest.raises(ValidationError):
            store.create_case(patient(), record_id="dup", timestamp=1.0)


# --------------------------------------------------------------------------
# exhaustive model check


OP_TEMPLATES = [
    {"op": "attach_capture", "original_ref": "o", "cropped_ref": "c",
     "device": DEVICE.to_dict(), "report": PASS_REPORT.to_dict(), "override": False},
    {"op": "attach_capture", "original_ref": "", "cropped_ref": "",
     "device": DEVICE.to_dict(), "report": FAIL_REPORT.to_dict(), "override": False},
    {"op": "attach_capture", "original_ref": "o", "cropped_ref": "c",
     "device": DEVICE.to_dict(), "report": FAIL_REPORT.to_dict(), "override": True},
    {"op": "annotate", "roi": {"center_x": 30, "center_y": 30, "radius": 10},
     "annotator_id": "derm-1", "role": "dermatologist", "roi_ref": "r"},
    {"op": "issue_prediction", "member_probs": [[0.7, 0.3]], "vote": 0,
     "label": "melanoma", "risk": "malignant", "binary": "potentially-malignant",
     "model_version": "v1", "fusion_probs": None},
    {"op": "record_feedback", "verdict": "disagree", "clinician_id": "derm-1",
     "hypothesis": "suspect SCC"},
    {"op": "flag_malignant_suspect"},
    {"op": "order_biopsy", "supervisor_id": "sup-1", "note": "audit"},
    {"op": "attach_histopathology", "result": "BCC confirmed",
     "final_class": "basal cell carcinoma"},
    {"op": "close_case", "supervisor_id": "sup-1"},
]


def test_exhaustive_model_check_depth_6():
    """Walk every error-free op sequence up to length 6.

    An op that raises leaves the record unchanged, so any sequence with
    errors collapses to a shorter error-free one; enumerating the error-free
    tree therefore covers all reachable states of length-6 sequences.
    """
    create = {"v": 1, "record_id": "mc", "op": "create_case", "ts": 0.0,
              "patient": patient().to_dict()}
    root_map: dict = {}
    root = apply_event(root_map, create, TAX)

    stats = {"nodes": 0, "confirmed": 0, "closed": 0}

    def walk(record, depth, seen_biopsy, events):
        if depth == 6:
            return
        for template in OP_TEMPLATES:
            event = {"v": 1, "record_id": "mc", "ts": float(depth + 1), **template}
            scratch = {"mc": record}
            try:
                child = apply_event(scratch, event, TAX)
            except DermkitError:
                continue
            stats["nodes"] += 1
            biopsy = seen_biopsy or child.state == CaseState.BIOPSY_PENDING

            if child.state == CaseState.CONFIRMED:
                stats["confirmed"] += 1
                assert biopsy, "Confirmed reached without passing BiopsyPending"
                assert child.histopathology is not None
                assert child.malignant_suspect or child.biopsy_audit
            if child.state == CaseState.CLOSED:
                stats["closed"] += 1
            for cap in child.captures:
                assert cap.report.passed or cap.override, \
                    "failing capture stored without override"
            ts_list = [c.timestamp for c in child.captures]
            assert ts_list == sorted(ts_list)

            trail = events + [event]
            replayed = replay_events([create] + trail, TAX)["mc"]
            assert replayed == child, "event replay diverged from live op"

            walk(child, depth + 1, biopsy, trail)

    walk(root, 0, False, [])
    assert stats["nodes"] > 1000
    assert stats["confirmed"] > 0
    assert stats["closed"] > 0
