"""Command-line interface mirroring the HTTP API for headless use."""

from __future__ import annotations

import json
import os
import sys

import click

from . import synth
from .classify import (
    ClassifierTrainConfig,
    compute_metrics,
    default_taxonomy,
    load_probability_table,
    pad_overlap_taxonomy,
    predict as member_predict,
    train_baseline,
)
from .datastore import (
    export_dataset,
    import_dataset,
    quality_filter_dataset,
    split_dataset,
    summarize,
    write_filter_report,
)
from .classify import BaselineClassifier
from .ensemble import FusionTrainConfig, train_fusion
from .imaging import default_distortion_grid
from .quality import QualityModel, QualityTrainConfig, train_quality_model
from .workflow import CaseStore, load_events
from .service import ServiceConfig, create_app, dataset_from_cases, load_config
from .service.app import BlobStorage


def _taxonomy(name: str):
    if name == "pad6":
        return pad_overlap_taxonomy()
    return default_taxonomy()


@click.group()
def main():
    """Lesion capture QC, triage and dataset curation toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    cfg = load_config(config_path)
    uvicorn.run(create_app(cfg), host=host, port=port, log_level="warning")


@main.command("train-quality")
@click.option("--out", required=True, type=click.Path())
@click.option("--corpus-size", default=60, show_default=True)
@click.option("--image-size", default=64, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=300, show_default=True)
@click.option("--learning-rate", default=0.05, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--hidden", default=16, show_default=True)
def train_quality(out, corpus_size, image_size, seed, epochs, learning_rate,
                  batch_size, hidden):
    """Train the quality gate on a seeded synthetic corpus."""
    corpus = synth.clean_corpus(corpus_size, size=image_size, seed=seed)
    cfg = QualityTrainConfig(learning_rate=learning_rate, epochs=epochs,
                             batch_size=batch_size, seed=seed, hidden_width=hidden)
    model = train_quality_model(corpus, default_distortion_grid(), cfg)
    model.save(out)
    click.echo(f"quality model -> {out} (loss {model.initial_loss:.4f} -> "
               f"{model.final_loss:.4f})")


@main.command("train-baseline")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--taxonomy", "taxonomy_name", default="default", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=200, show_default=True)
@click.option("--learning-rate", default=0.1, show_default=True)
@click.option("--batch-size", default=16, show_default=True)
def train_baseline_cmd(data_dir, out, taxonomy_name, seed, epochs, learning_rate,
                       batch_size):
    """Train the desk-scale baseline classifier from a manifest directory."""
    taxonomy = _taxonomy(taxonomy_name)
    store, report = import_dataset(data_dir, taxonomy=taxonomy)
    for item in report.skipped:
        click.echo(f"skipped {item[0]}: {item[1]}", err=True)
    dataset = [(store.get_image(r.image_id), taxonomy.index_of(r.diagnostic))
               for r in store.rows]
    cfg = ClassifierTrainConfig(learning_rate=learning_rate, epochs=epochs,
                                batch_size=batch_size, seed=seed)
    clf = train_baseline(dataset, taxonomy, cfg)
    clf.save(out)
    click.echo(f"baseline -> {out} (loss {clf.initial_loss:.4f} -> {clf.final_loss:.4f})")


@main.command("train-fusion")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              help="validation manifest never seen by the member classifiers")
@click.option("--member", "member_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=300, show_default=True)
@click.option("--learning-rate", default=0.2, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--hidden", default=32, show_default=True)
def train_fusion_cmd(data_dir, member_paths, out, seed, epochs, learning_rate,
                     batch_size, hidden):
    """Train the fusion head on member outputs over held-out data."""
    members = [(os.path.splitext(os.path.basename(p))[0], BaselineClassifier.load(p))
               for p in member_paths]
    taxonomy = members[0][1].taxonomy
    store, _ = import_dataset(data_dir, taxonomy=taxonomy)
    fold = []
    for row in store.rows:
        img = store.get_image(row.image_id)
        vectors = [member_predict(clf, img) for _, clf in members]
        fold.append((vectors, taxonomy.index_of(row.diagnostic)))
    cfg = FusionTrainConfig(learning_rate=learning_rate, epochs=epochs,
                            batch_size=batch_size, seed=seed, hidden_width=hidden)
    model = train_fusion(fold, cfg, member_order=[name for name, _ in members])
    model.save(out)
    click.echo(f"fusion -> {out} (loss {model.initial_loss:.4f} -> {model.final_loss:.4f})")


@main.command("import")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--dest", required=True, type=click.Path())
@click.option("--map", "mappings", multiple=True,
              help="canonical=source column mapping, repeatable")
@click.option("--taxonomy", "taxonomy_name", default="default", show_default=True)
def import_cmd(source, dest, mappings, taxonomy_name):
    """Ingest a foreign manifest into the canonical layout."""
    mapping = dict(m.split("=", 1) for m in mappings)
    store, report = import_dataset(source, column_mapping=mapping,
                                   taxonomy=_taxonomy(taxonomy_name))
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    for item in report.skipped:
        click.echo(f"skipped {item[0]}: {item[1]}", err=True)
    manifest = export_dataset(store, dest)
    click.echo(f"{len(store)} images -> {manifest}")


@main.command("export")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
def export_cmd(config_path, out):
    """Export the labeled cases of a service store as a dataset."""
    cfg = load_config(config_path) if config_path else ServiceConfig()
    if not cfg.event_log or not os.path.exists(cfg.event_log):
        raise click.ClickException("config must point at an existing event_log")
    cases = CaseStore.from_events(load_events(cfg.event_log))
    store = dataset_from_cases(cases, BlobStorage(cfg.storage_dir))
    manifest = export_dataset(store, out)
    click.echo(f"{len(store)} images -> {manifest}")


@main.command("filter")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
def filter_cmd(data_dir, model_path, out, report_path):
    """Keep only the images that pass the quality gate."""
    store, _ = import_dataset(data_dir)
    model = QualityModel.load(model_path)
    kept, removed = quality_filter_dataset(store, model)
    if len(kept) == 0:
        raise click.ClickException("quality filter removed every image; nothing to export")
    export_dataset(kept, out)
    if report_path:
        write_filter_report(removed, report_path)
    click.echo(f"kept {len(kept)}/{len(store)}; removed {len(removed)}")


@main.command("split")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
def split_cmd(data_dir, out, ratios, seed):
    """Lesion-grouped train/val/test split of a manifest directory."""
    store, _ = import_dataset(data_dir)
    parts = split_dataset(store, tuple(float(r) for r in ratios.split(",")), seed=seed)
    names = ("train", "val", "test")[:len(parts)]
    for name, part in zip(names, parts):
        if len(part):
            export_dataset(part, os.path.join(out, name))
        click.echo(f"{name}: {len(part)} images")


@main.command("eval")
@click.option("--manifest", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--predictions", required=True, type=click.Path(exists=True),
              help="CSV: image_id,p0,...,p{n-1}")
@click.option("--taxonomy", "taxonomy_name", default="default", show_default=True)
def eval_cmd(data_dir, predictions, taxonomy_name):
    """Metrics for an externally produced probability table."""
    taxonomy = _taxonomy(taxonomy_name)
    store, _ = import_dataset(data_dir, taxonomy=taxonomy)
    table = load_probability_table(predictions, taxonomy.n_classes)
    preds, labels = [], []
    missing = []
    for row in store.rows:
        if row.image_id not in table:
            missing.append(row.image_id)
            continue
        preds.append(int(table[row.image_id].argmax()))
        labels.append(taxonomy.index_of(row.diagnostic))
    if missing:
        click.echo(f"warning: {len(missing)} images without predictions", err=True)
    report = compute_metrics(preds, labels, taxonomy.n_classes)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command("summary")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
def summary_cmd(data_dir):
    """Dataset summary for a manifest directory."""
    store, _ = import_dataset(data_dir)
    click.echo(json.dumps(summarize(store).to_dict(), indent=2))


if __name__ == "__main__":
    sys.exit(main())
