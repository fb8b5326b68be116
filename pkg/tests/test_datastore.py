import os

import numpy as np
import pytest

from dermkit.classify import default_taxonomy
from dermkit.datastore import (
    MANIFEST_COLUMNS,
    DataStore,
    ManifestRow,
    export_dataset,
    import_dataset,
    materialize_cases,
    quality_filter_dataset,
    split_dataset,
    summarize,
    write_filter_report,
)
from dermkit.errors import NotFoundError, ValidationError
from dermkit.imaging import DistortionSpec, apply_distortion
from dermkit.synth import texture


def row(image_id, diagnostic="nevus", lesion=None, **kw):
    return ManifestRow(
        record_id=kw.pop("record_id", f"rec-{image_id}"),
        lesion_id=lesion or f"les-{image_id}",
        image_id=image_id,
        diagnostic=diagnostic,
        risk="",
        image_path="",
        age=kw.pop("age", 60),
        fitzpatrick=kw.pop("fitzpatrick", 3),
        body_site=kw.pop("body_site", "forearm"),
        device_model=kw.pop("device_model", "phone-x"),
        text_description=kw.pop("text_description", "small pigmented lesion"),
        **kw,
    )


def small_store(n=3):
    store = DataStore()
    for i in range(n):
        store.add_item(row(f"img{i}"), texture(size=32, seed=100 + i))
    return store


class TestStore:
    def test_duplicate_image_id(self):
        store = small_store(1)
        with pytest.raises(ValidationError):
            store.add_item(row("img0"), texture(size=32, seed=5))

    def test_alias_and_risk_normalization(self):
        store = DataStore()
        added = store.add_item(row("x", diagnostic="seborrheic keratosis"),
                               texture(size=32, seed=1))
        assert added.diagnostic == "benign keratosis"
        assert added.risk == "benign"
        assert added.image_path == "images/x.png"

    def test_unknown_diagnostic(self):
        store = DataStore()
        with pytest.raises(ValidationError):
            store.add_item(row("x", diagnostic="mystery"), None)

    def test_missing_image_lookup(self):
        store = DataStore()
        store.add_item(row("x"), None)
        with pytest.raises(NotFoundError):
            store.image_bytes("x")


class TestExportImport:
    def test_export_writes_header_and_rows(self, tmp_path):
        manifest = export_dataset(small_store(3), tmp_path / "out")
        lines = open(manifest, encoding="utf-8").read().splitlines()
        assert lines[0] == ",".join(MANIFEST_COLUMNS)
        assert len(lines) == 4
        for i in range(3):
            assert os.path.exists(tmp_path / "out" / "images" / f"img{i}.png")

    def test_empty_store_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            export_dataset(DataStore(), tmp_path / "out")

    def test_round_trip_byte_identical(self, tmp_path):
        store = small_store(4)
        m1 = export_dataset(store, tmp_path / "one")
        imported, report = import_dataset(tmp_path / "one")
        assert not report.skipped
        m2 = export_dataset(imported, tmp_path / "two")
        assert open(m1, "rb").read() == open(m2, "rb").read()
        for image_id in store.image_ids():
            a = (tmp_path / "one" / "images" / f"{image_id}.png").read_bytes()
            b = (tmp_path / "two" / "images" / f"{image_id}.png").read_bytes()
            assert a == b

    def test_summaries_survive_round_trip(self, tmp_path):
        store = small_store(5)
        export_dataset(store, tmp_path / "d")
        imported, _ = import_dataset(tmp_path / "d")
        assert summarize(imported) == summarize(store)

    def test_import_applies_alias(self, tmp_path):
        store = DataStore()
        store.add_item(row("sk1", diagnostic="benign keratosis"), texture(size=32, seed=2))
        export_dataset(store, tmp_path / "d")
        # rewrite the manifest with the alias name
        manifest = tmp_path / "d" / "manifest.csv"
        manifest.write_text(manifest.read_text().replace("benign keratosis",
                                                         "seborrheic keratosis"))
        imported, report = import_dataset(tmp_path / "d")
        assert imported.get_row("sk1").diagnostic == "benign keratosis"
        assert not report.skipped

    def test_missing_image_file_skips_row(self, tmp_path):
        store = small_store(3)
        export_dataset(store, tmp_path / "d")
        os.remove(tmp_path / "d" / "images" / "img1.png")
        imported, report = import_dataset(tmp_path / "d")
        assert len(imported) == 2
        assert any("img1" == item[0] for item in report.skipped)

    def test_unknown_diagnostic_skips_row(self, tmp_path):
        store = small_store(2)
        export_dataset(store, tmp_path / "d")
        manifest = tmp_path / "d" / "manifest.csv"
        manifest.write_text(manifest.read_text().replace("nevus", "weird thing", 1))
        imported, report = import_dataset(tmp_path / "d")
        assert len(imported) == 1
        assert "not in taxonomy" in report.skipped[0][1]

    def test_column_mapping_and_unknown_column_warning(self, tmp_path):
        d = tmp_path / "pad"
        os.makedirs(d / "imgs")
        texture(size=32, seed=9).save(d / "imgs" / "p1.png")
        (d / "manifest.csv").write_text(
            "img_id,diagnostic_name,path,extra\n"
            "p1,nevus,imgs/p1.png,whatever\n"
        )
        imported, report = import_dataset(
            d, column_mapping={"image_id": "img_id", "diagnostic": "diagnostic_name",
                               "image_path": "path"})
        assert len(imported) == 1
        assert imported.get_row("p1").diagnostic == "nevus"
        assert any("extra" in w for w in report.warnings)

    def test_missing_required_column(self, tmp_path):
        d = tmp_path / "bad"
        os.makedirs(d)
        (d / "manifest.csv").write_text("foo,bar\n1,2\n")
        with pytest.raises(ValidationError):
            import_dataset(d)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(NotFoundError):
            import_dataset(tmp_path / "nowhere")


class TestMaterializeCases:
    def test_preliminary_label_records(self):
        store = small_store(3)
        records = materialize_cases(store)
        assert len(records) == 3
        rec = records["rec-img0"]
        assert rec.state.value == "quality_passed"
        assert rec.imported_label == "nevus"
        assert rec.effective_label == "nevus"
        assert rec.histopathology is None
        assert len(rec.captures) == 1

    def test_confirmed_records_use_histopathology(self):
        store = small_store(2)
        records = materialize_cases(store, confirmed=True)
        rec = records["rec-img1"]
        assert rec.state.value == "confirmed"
        assert rec.histopathology == ("imported", "nevus")
        assert rec.effective_label == "nevus"

    def test_rows_sharing_a_record_become_captures(self):
        store = DataStore()
        for i in range(3):
            store.add_item(row(f"multi{i}", record_id="rec-shared",
                               lesion="les-shared"), None)
        records = materialize_cases(store)
        assert len(records) == 1
        assert len(records["rec-shared"].captures) == 3


class TestQualityFilter:
    def test_clean_store_unchanged(self, quality_model):
        store = DataStore()
        for i in range(6):
            store.add_item(row(f"clean{i}"), texture(size=64, seed=3000 + i))
        kept, removed = quality_filter_dataset(store, quality_model)
        assert kept.image_ids() == store.image_ids()
        assert removed == []

    def test_blurred_images_removed(self, quality_model, tmp_path):
        store = DataStore()
        for i in range(10):
            store.add_item(row(f"clean{i}"), texture(size=64, seed=3000 + i))
        for i in range(10):
            img = apply_distortion(texture(size=64, seed=3100 + i),
                                   DistortionSpec("blur", 5.0), seed=0)
            store.add_item(row(f"blur{i}"), img)
        kept, removed = quality_filter_dataset(store, quality_model)
        removed_ids = {image_id for image_id, _ in removed}
        assert sum(1 for rid in removed_ids if rid.startswith("blur")) >= 8
        assert all(not rid.startswith("clean") for rid in removed_ids)
        assert set(kept.image_ids()) <= set(store.image_ids())

        report_path = tmp_path / "removals.txt"
        write_filter_report(removed, report_path)
        lines = report_path.read_text().splitlines()
        assert len(lines) == len(removed)
        assert all("," in line for line in lines)

    def test_filter_is_idempotent(self, quality_model):
        store = DataStore()
        for i in range(5):
            store.add_item(row(f"c{i}"), texture(size=64, seed=3000 + i))
        img = apply_distortion(texture(size=64, seed=3200),
                               DistortionSpec("blur", 5.0), seed=0)
        store.add_item(row("b0"), img)
        once, _ = quality_filter_dataset(store, quality_model)
        twice, removed_again = quality_filter_dataset(once, quality_model)
        assert twice.image_ids() == once.image_ids()
        assert removed_again == []


class TestSummaries:
    def test_empty_store(self):
        summary = summarize(DataStore())
        assert summary.total == 0
        assert summary.by_class == {}

    def test_risk_distribution_fixture(self):
        # tier counts 2273 benign / 608 malignant / 520 pre-malignant over
        # 3401 images, spread across classes inside each tier
        store = DataStore()
        plan = [("nevus", 1500), ("benign keratosis", 500), ("solar lentigo", 273),
                ("basal cell carcinoma", 400), ("melanoma", 108),
                ("squamous cell carcinoma", 100), ("actinic keratosis", 520)]
        n = 0
        for diagnostic, count in plan:
            for _ in range(count):
                store.add_item(row(f"i{n}", diagnostic=diagnostic,
                                   lesion=f"l{n % 200}"), None)
                n += 1
        summary = summarize(store)
        assert summary.total == 3401
        assert summary.by_risk == {"benign": 2273, "malignant": 608,
                                   "pre-malignant": 520}
        assert sum(summary.by_class.values()) == summary.total
        assert sum(summary.by_risk.values()) == summary.total


class TestSplit:
    def build(self, lesions, images_per=1):
        store = DataStore()
        n = 0
        for les in range(lesions):
            for _ in range(images_per):
                store.add_item(row(f"img{n}", lesion=f"les{les}"), None)
                n += 1
        return store

    def test_hundred_single_image_lesions(self):
        train, val, test = split_dataset(self.build(100), (0.8, 0.1, 0.1), seed=1)
        assert (len(train), len(val), len(test)) == (80, 10, 10)

    def test_lesion_grouping(self):
        store = self.build(9)
        for i in range(5):
            store.add_item(row(f"extra{i}", lesion="les0"), None)
        parts = split_dataset(store, (0.8, 0.1, 0.1), seed=0)
        locations = [i for i, part in enumerate(parts)
                     if any(r.lesion_id == "les0" for r in part.rows)]
        assert len(locations) == 1
        chosen = parts[locations[0]]
        assert sum(1 for r in chosen.rows if r.lesion_id == "les0") == 6

    def test_deterministic(self):
        store = self.build(37, images_per=2)
        a = split_dataset(store, (0.8, 0.1, 0.1), seed=42)
        b = split_dataset(store, (0.8, 0.1, 0.1), seed=42)
        for pa, pb in zip(a, b):
            assert pa.image_ids() == pb.image_ids()

    def test_disjoint_union(self):
        store = self.build(23, images_per=3)
        parts = split_dataset(store, (0.8, 0.1, 0.1), seed=7)
        ids = [set(p.image_ids()) for p in parts]
        assert ids[0] | ids[1] | ids[2] == set(store.image_ids())
        assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])

    def test_ratio_validation(self):
        with pytest.raises(ValidationError):
            split_dataset(self.build(10), (0.8, 0.3, 0.1), seed=0)

    def test_too_few_lesions(self):
        with pytest.raises(ValidationError):
            split_dataset(self.build(2), (0.8, 0.1, 0.1), seed=0)
