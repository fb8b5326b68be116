"""Dataset persistence: manifest export/import, quality filtering,
summaries and lesion-grouped splits.

Images are held as PNG bytes (the canonical stored form), so a round trip
through export/import preserves files byte for byte.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .classify import Taxonomy, default_taxonomy, map_risk
from .errors import NotFoundError, ValidationError
from .imaging import ImageBuffer
from .quality import QualityModel, assess

MANIFEST_COLUMNS = (
    "record_id", "lesion_id", "image_id", "age", "gender", "fitzpatrick",
    "body_site", "diagnostic", "risk", "device_model", "os", "camera",
    "image_path", "text_description",
)

MANIFEST_NAME = "manifest.csv"


@dataclass(frozen=True)
class ManifestRow:
    record_id: str
    lesion_id: str
    image_id: str
    diagnostic: str
    risk: str
    image_path: str
    age: int | None = None
    gender: str = "unspecified"
    fitzpatrick: int | None = None
    body_site: str = ""
    device_model: str = ""
    os: str = ""
    camera: str = ""
    text_description: str = ""

    def to_csv_values(self) -> list:
        return [
            self.record_id, self.lesion_id, self.image_id,
            "" if self.age is None else str(self.age),
            self.gender,
            "" if self.fitzpatrick is None else str(self.fitzpatrick),
            self.body_site, self.diagnostic, self.risk,
            self.device_model, self.os, self.camera,
            self.image_path, self.text_description,
        ]


@dataclass(frozen=True)
class DatasetSummary:
    total: int
    by_class: dict
    by_risk: dict
    by_fitzpatrick: dict
    by_device: dict

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "by_class": dict(self.by_class),
            "by_risk": dict(self.by_risk),
            "by_fitzpatrick": dict(self.by_fitzpatrick),
            "by_device": dict(self.by_device),
        }


@dataclass
class ImportReport:
    warnings: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (image_id or row number, reason)


class DataStore:
    """Ordered per-image manifest rows plus their PNG payloads."""

    def __init__(self, taxonomy: Taxonomy | None = None):
        self.taxonomy = taxonomy or default_taxonomy()
        self.rows: list = []
        self._row_index: dict = {}
        self._png: dict = {}

    def __len__(self) -> int:
        return len(self.rows)

    def image_ids(self) -> list:
        return [row.image_id for row in self.rows]

    def add_item(self, row: ManifestRow, image=None) -> ManifestRow:
        """Validate and append one image row; image may be ImageBuffer, PNG bytes or None."""
        if row.image_id in self._row_index:
            raise ValidationError(f"duplicate image_id {row.image_id}")
        canonical = self.taxonomy.resolve(row.diagnostic)
        tier = map_risk(self.taxonomy, canonical)
        row = replace(row, diagnostic=canonical, risk=tier,
                      image_path=f"images/{row.image_id}.png")
        self._row_index[row.image_id] = len(self.rows)
        self.rows.append(row)
        if image is not None:
            self.set_image(row.image_id, image)
        return row

    def set_image(self, image_id: str, image) -> None:
        if isinstance(image, ImageBuffer):
            self._png[image_id] = image.encode_png()
        elif isinstance(image, (bytes, bytearray)):
            self._png[image_id] = bytes(image)
        else:
            raise ValidationError(f"unsupported image payload {type(image)!r}")

    def has_image(self, image_id: str) -> bool:
        return image_id in self._png

    def image_bytes(self, image_id: str) -> bytes:
        try:
            return self._png[image_id]
        except KeyError:
            raise NotFoundError(f"no image stored for {image_id}") from None

    def get_image(self, image_id: str) -> ImageBuffer:
        return ImageBuffer.decode_image(self.image_bytes(image_id))

    def get_row(self, image_id: str) -> ManifestRow:
        try:
            return self.rows[self._row_index[image_id]]
        except KeyError:
            raise NotFoundError(f"no row for image {image_id}") from None

    def subset(self, image_ids) -> "DataStore":
        """New store holding the given images, preserving row order."""
        wanted = set(image_ids)
        out = DataStore(self.taxonomy)
        for row in self.rows:
            if row.image_id in wanted:
                out._row_index[row.image_id] = len(out.rows)
                out.rows.append(row)
                if row.image_id in self._png:
                    out._png[row.image_id] = self._png[row.image_id]
        return out


def export_dataset(store: DataStore, directory) -> str:
    """Write manifest.csv plus lossless images/<image_id>.png; returns manifest path."""
    if len(store) == 0:
        raise ValidationError("cannot export an empty store")
    os.makedirs(directory, exist_ok=True)
    images_dir = os.path.join(directory, "images")
    os.makedirs(images_dir, exist_ok=True)

    missing = [row.image_id for row in store.rows if not store.has_image(row.image_id)]
    if missing:
        raise ValidationError(f"cannot export, images not materialized: {missing[:5]}")

    manifest_path = os.path.join(directory, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for row in store.rows:
            writer.writerow(row.to_csv_values())
    for row in store.rows:
        with open(os.path.join(directory, row.image_path), "wb") as fh:
            fh.write(store.image_bytes(row.image_id))
    return manifest_path


def import_dataset(directory, column_mapping=None, taxonomy: Taxonomy | None = None):
    """Read a manifest directory into a fresh store.

    ``column_mapping`` maps canonical column names to the source's column
    names (identity by default); it must cover at least ``diagnostic`` and
    ``image_path``. Returns (store, ImportReport); unresolvable rows are
    skipped and reported, never fatal.
    """
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise NotFoundError(f"no {MANIFEST_NAME} in {directory}")

    store = DataStore(taxonomy)
    report = ImportReport()

    with open(manifest_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{manifest_path}: empty manifest")
        mapping = dict(column_mapping or {})
        for col in MANIFEST_COLUMNS:
            mapping.setdefault(col, col)
        for required in ("diagnostic", "image_path"):
            if mapping[required] not in header:
                raise ValidationError(f"manifest missing required column {mapping[required]!r}")
        source_index = {name: i for i, name in enumerate(header)}
        used = {mapping[c] for c in MANIFEST_COLUMNS if mapping[c] in source_index}
        for name in header:
            if name not in used:
                report.warnings.append(f"ignoring unknown column {name!r}")

        def get(fields, canonical, default=""):
            src = mapping.get(canonical)
            if src in source_index and source_index[src] < len(fields):
                return fields[source_index[src]]
            return default

        for line_no, fields in enumerate(reader, start=2):
            if not fields:
                continue
            image_path = get(fields, "image_path")
            image_id = get(fields, "image_id") or os.path.splitext(os.path.basename(image_path))[0]
            diagnostic = get(fields, "diagnostic")
            try:
                canonical = store.taxonomy.resolve(diagnostic)
            except ValidationError:
                report.skipped.append((image_id or f"line {line_no}",
                                       f"diagnostic {diagnostic!r} not in taxonomy"))
                continue
            full_image = os.path.join(directory, image_path)
            if not os.path.exists(full_image):
                report.skipped.append((image_id, f"image file missing: {image_path}"))
                continue
            declared_risk = get(fields, "risk")
            actual_risk = map_risk(store.taxonomy, canonical)
            if declared_risk and declared_risk != actual_risk:
                report.warnings.append(
                    f"{image_id}: declared risk {declared_risk!r} recomputed as {actual_risk!r}")
            age_text = get(fields, "age")
            fitz_text = get(fields, "fitzpatrick")
            row = ManifestRow(
                record_id=get(fields, "record_id") or image_id,
                lesion_id=get(fields, "lesion_id") or image_id,
                image_id=image_id,
                diagnostic=canonical,
                risk=actual_risk,
                image_path=image_path,
                age=int(age_text) if age_text else None,
                gender=get(fields, "gender") or "unspecified",
                fitzpatrick=int(fitz_text) if fitz_text else None,
                body_site=get(fields, "body_site"),
                device_model=get(fields, "device_model"),
                os=get(fields, "os"),
                camera=get(fields, "camera"),
                text_description=get(fields, "text_description"),
            )
            with open(full_image, "rb") as img_fh:
                store.add_item(row, img_fh.read())
    return store, report


def materialize_cases(store: DataStore, confirmed: bool = False) -> dict:
    """Case records for imported rows, one per record_id, keyed by it.

    With ``confirmed`` the diagnostic lands in the histopathology slot
    (gold label, Confirmed state); otherwise it is kept as an imported
    preliminary label on a quality-passed record. Rows sharing a record_id
    become successive captures of that case.
    """
    from .quality import gate_scores
    from .workflow import Capture, CaseRecord, CaseState, DeviceMeta, PatientMeta

    neutral = gate_scores((0.0, 0.0, 0.0, 0.0), (0.5, 0.5, 0.5, 0.5))
    records: dict = {}
    for i, row in enumerate(store.rows):
        capture = Capture(
            original_ref=row.image_path, cropped_ref=row.image_path,
            device=DeviceMeta(model=row.device_model or "unknown",
                              operating_system=row.os, camera=row.camera),
            report=neutral, timestamp=float(i),
        )
        rec = records.get(row.record_id)
        if rec is None:
            patient = PatientMeta(
                age=row.age if row.age is not None else 0,
                gender=row.gender or "unspecified",
                fitzpatrick=row.fitzpatrick if row.fitzpatrick is not None else 1,
                lesion_location=row.body_site or "other",
                record_id=row.record_id,
            )
            if confirmed:
                rec = CaseRecord(record_id=row.record_id, patient=patient,
                                 state=CaseState.CONFIRMED,
                                 histopathology=("imported", row.diagnostic),
                                 captures=(capture,))
            else:
                rec = CaseRecord(record_id=row.record_id, patient=patient,
                                 state=CaseState.QUALITY_PASSED,
                                 imported_label=row.diagnostic,
                                 captures=(capture,))
        else:
            rec = replace(rec, captures=rec.captures + (capture,))
        records[row.record_id] = rec
    return records


def quality_filter_dataset(store: DataStore, model: QualityModel):
    """Keep exactly the images whose gate verdict is Pass.

    Returns (filtered store, removals) where removals is a list of
    (image_id, reasons tuple) for every dropped image.
    """
    kept = []
    removed = []
    for row in store.rows:
        report = assess(model, store.get_image(row.image_id))
        if report.passed:
            kept.append(row.image_id)
        else:
            removed.append((row.image_id, report.reasons))
    return store.subset(kept), removed


def write_filter_report(removals, path) -> None:
    """Newline-delimited ``image_id,reason`` rows for dropped images."""
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, reasons in removals:
            fh.write(f"{image_id},{';'.join(reasons)}\n")


def summarize(store: DataStore) -> DatasetSummary:
    by_class: dict = {}
    by_risk: dict = {}
    by_fitz: dict = {}
    by_device: dict = {}
    for row in store.rows:
        by_class[row.diagnostic] = by_class.get(row.diagnostic, 0) + 1
        by_risk[row.risk] = by_risk.get(row.risk, 0) + 1
        fitz = "unspecified" if row.fitzpatrick is None else str(row.fitzpatrick)
        by_fitz[fitz] = by_fitz.get(fitz, 0) + 1
        device = row.device_model or "unspecified"
        by_device[device] = by_device.get(device, 0) + 1
    return DatasetSummary(total=len(store.rows), by_class=by_class, by_risk=by_risk,
                          by_fitzpatrick=by_fitz, by_device=by_device)


def _partition_counts(n: int, ratios) -> list:
    """Largest-remainder allocation of n items to the given ratios."""
    exact = [r * n for r in ratios]
    base = [int(e) for e in exact]
    leftover = n - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def split_dataset(store: DataStore, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Deterministic lesion-grouped train/val/test split.

    All images of one lesion_id land in the same partition; partition sizes
    (in lesions) follow the ratios to within one lesion.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"split ratios must sum to 1, got {ratios}")
    lesions: dict = {}
    for row in store.rows:
        lesions.setdefault(row.lesion_id, []).append(row.image_id)
    ids = sorted(lesions)
    if len(ids) < len(ratios):
        raise ValidationError(
            f"need at least {len(ratios)} lesions to split, got {len(ids)}")

    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    counts = _partition_counts(len(ids), ratios)

    stores = []
    start = 0
    for count in counts:
        chunk = order[start:start + count]
        start += count
        image_ids = [img for lid in chunk for img in lesions[lid]]
        stores.append(store.subset(image_ids))
    return tuple(stores)
