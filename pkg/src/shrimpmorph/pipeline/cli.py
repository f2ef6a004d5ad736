"""Command line entry points.

Model files live in a single directory with fixed names so the later stages
can find what the earlier ones produced:

    disc-pose.bin, disc-rostrum.bin      view / rostrum classifiers
    pose-<variant>.bin                   one checkpoint per skeleton variant
    regression.tsv                       per-variable pixel-to-cm lines

Exit codes: 0 success, 1 runtime failure (one-line diagnostic on stderr),
2 usage error.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from ..data_io import (
    SampleRecord,
    load_corpus,
    parse_variant,
    save_corpus,
    variant_name,
)
from ..discriminator import (
    Kind,
    evaluate_discrimination,
    load_classifier,
    save_classifier,
    train_classifier,
)
from ..errors import ShrimpmorphError
from ..metrics import report_tables, rows_to_csv
from ..posenet import (
    TrainHyper,
    desk_config,
    load_checkpoint,
    new_model,
    save_checkpoint,
    train,
)
from ..posenet.model import PoseRegistry, route_and_predict
from ..regression import (
    ScaleFactor,
    SvrHyper,
    compare_methods,
    fit_svr,
    load_models,
    save_models,
)
from ..skeleton import RostrumState, View, extract_pixel_measurements
from ..synth import SynthParams, generate_corpus
from .service import AWAITING_REVIEW, ModelBundle, PipelineService, create_app


def _coerce(value: str):
    try:
        v = json.loads(value)
    except json.JSONDecodeError:
        return value
    return tuple(v) if isinstance(v, list) else v


def _apply_config(obj, overrides: tuple[str, ...], label: str):
    """Apply repeated ``key=value`` options to a (frozen) dataclass."""
    fields = {f.name for f in dataclasses.fields(obj)}
    updates = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.UsageError(f"--{label} expects key=value, got {item!r}")
        if key not in fields:
            raise click.UsageError(
                f"unknown {label} key {key!r}; valid keys: {', '.join(sorted(fields))}"
            )
        updates[key] = _coerce(value)
    return dataclasses.replace(obj, **updates) if updates else obj


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Shrimp morphometry pipeline."""


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--n", "count", default=240, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", "-c", "overrides", multiple=True, metavar="KEY=VALUE")
def synth(out_dir: Path, count: int, seed: int, overrides):
    """Generate a synthetic corpus into OUT."""
    params = _apply_config(SynthParams(seed=seed), overrides, "config")
    try:
        corpus = generate_corpus(params, count)
        save_corpus(corpus, out_dir)
    except (ShrimpmorphError, ValueError, OSError) as e:
        _fail(str(e))
    click.echo(f"wrote {count} samples to {out_dir}")


@main.command("train-disc")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path))
@click.option(
    "--kind", "kinds", multiple=True, type=click.Choice(["pose", "rostrum"]),
    help="Default: both.",
)
@click.option("--seed", default=0, show_default=True, type=int)
def train_disc(corpus_dir: Path, models_dir: Path, kinds, seed: int):
    """Train the view / rostrum classifiers from ground-truth labels."""
    kinds = kinds or ("pose", "rostrum")
    try:
        corpus = load_corpus(corpus_dir)
        models_dir.mkdir(parents=True, exist_ok=True)
        for kind_name in kinds:
            kind = Kind(kind_name)
            if kind is Kind.POSE:
                labelled = [(r.raster, r.gt_view is View.LATERAL) for r in corpus]
            else:
                labelled = [(r.raster, r.gt_rostrum is RostrumState.INTACT) for r in corpus]
            model = train_classifier(kind, labelled, seed=seed)
            report = evaluate_discrimination(corpus, model)
            save_classifier(model, models_dir / f"disc-{kind_name}.bin")
            click.echo(
                f"{kind_name}: human {report.human_error_pct:.2f}% "
                f"ai {report.ai_error_pct:.2f}% "
                f"hybrid-undetected {report.hybrid_undetected_error_pct:.2f}%"
            )
    except (ShrimpmorphError, OSError) as e:
        _fail(str(e))


@main.command("train-pose")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path))
@click.option(
    "--variant", "variants", multiple=True,
    type=click.Choice(["lateral-23", "lateral-22", "dorsal-23", "dorsal-22"]),
    help="Default: every variant present in the corpus.",
)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--config", "-c", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Training hyperparameters (lr, epochs, batch_size, optimizer).")
def train_pose(corpus_dir: Path, models_dir: Path, variants, seed: int, overrides):
    """Train one keypoint network per skeleton variant."""
    hyper = _apply_config(TrainHyper(seed=seed), overrides, "config")
    try:
        corpus = load_corpus(corpus_dir)
        models_dir.mkdir(parents=True, exist_ok=True)
        present = sorted({r.gt_skeleton.variant for r in corpus if r.gt_skeleton})
        for variant in variants or present:
            subset = [
                (r.raster, r.gt_skeleton)
                for r in corpus
                if r.gt_skeleton is not None and r.gt_skeleton.variant == variant
            ]
            if not subset:
                click.echo(f"{variant}: no samples, skipped")
                continue
            _, rostrum = parse_variant(variant)
            nk = 23 if rostrum is RostrumState.INTACT else 22
            model = new_model(desk_config(num_keypoints=nk, seed=seed))
            model, curve = train(model, subset, hyper)
            save_checkpoint(model, models_dir / f"pose-{variant}.bin")
            click.echo(f"{variant}: {len(subset)} samples, final loss {curve[-1]:.3e}")
    except (ShrimpmorphError, OSError) as e:
        _fail(str(e))


@main.command("fit-regression")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path))
@click.option("--epsilon", default=0.05, show_default=True, type=float)
@click.option("--c", "c_value", default=10.0, show_default=True, type=float)
def fit_regression(corpus_dir: Path, models_dir: Path, epsilon: float, c_value: float):
    """Fit the per-variable pixel-to-centimeter lines from ground truth."""
    hyper = SvrHyper(epsilon=epsilon, c=c_value)
    try:
        corpus = load_corpus(corpus_dir)
        pairs: dict[str, list[tuple[float, float]]] = {}
        for rec in corpus:
            if rec.gt_skeleton is None or rec.gt_measurements_cm is None:
                continue
            px = extract_pixel_measurements(rec.gt_skeleton)
            for name, cm in rec.gt_measurements_cm.values.items():
                if name in px.values:
                    pairs.setdefault(name, []).append((px.values[name], cm))
        models = {name: fit_svr(name, p, hyper) for name, p in sorted(pairs.items())}
        models_dir.mkdir(parents=True, exist_ok=True)
        save_models(models, models_dir / "regression.tsv")
    except (ShrimpmorphError, OSError) as e:
        _fail(str(e))
    click.echo(f"fitted {len(models)} variables")


def _load_bundle(models_dir: Path) -> ModelBundle:
    registry: PoseRegistry = {}
    for path in sorted(models_dir.glob("pose-*.bin")):
        view, rostrum = parse_variant(path.stem.removeprefix("pose-"))
        registry[(view, rostrum)] = load_checkpoint(path)
    return ModelBundle(
        disc_pose=load_classifier(models_dir / "disc-pose.bin"),
        disc_rostrum=load_classifier(models_dir / "disc-rostrum.bin"),
        pose_registry=registry,
        regression=load_models(models_dir / "regression.tsv"),
    )


@main.command("eval")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path))
@click.option("--csv", "csv_path", type=click.Path(path_type=Path),
              help="Also write the report rows as CSV.")
@click.option("--scale", default=0.1, show_default=True, type=float,
              help="Baseline conversion factor, cm per pixel.")
def eval_command(corpus_dir: Path, models_dir: Path, csv_path: Path | None, scale: float):
    """Evaluate pose, discrimination and conversion on a labelled corpus."""
    try:
        corpus = load_corpus(corpus_dir)
        bundle = _load_bundle(models_dir)

        disc_reports = [
            evaluate_discrimination(corpus, bundle.disc_pose),
            evaluate_discrimination(corpus, bundle.disc_rostrum),
        ]

        by_variant: dict[str, tuple[list, list]] = {}
        conversion_pairs = []
        for rec in corpus:
            if rec.gt_skeleton is None:
                continue
            key = (rec.gt_view, rec.gt_rostrum)
            if key not in bundle.pose_registry:
                continue
            pred = route_and_predict(bundle.pose_registry, rec.raster, *key)
            preds, gts = by_variant.setdefault(rec.gt_skeleton.variant, ([], []))
            preds.append(pred)
            gts.append(rec.gt_skeleton)
            if rec.gt_measurements_cm is not None:
                conversion_pairs.append(
                    (extract_pixel_measurements(pred), rec.gt_measurements_cm)
                )

        conversion = None
        if conversion_pairs:
            conversion = compare_methods(
                conversion_pairs, bundle.regression, ScaleFactor(cm_per_px=scale)
            )
        first = corpus[0].raster
        normalizer = (first.width**2 + first.height**2) ** 0.5
        tables = report_tables(
            by_variant,
            keypoint_normalizer=normalizer,
            conversion_report=conversion,
            discrimination_reports=disc_reports,
        )
        click.echo(tables.text, nl=False)
        if csv_path is not None:
            csv_path.write_text(rows_to_csv(tables.rows), encoding="utf-8")
    except (ShrimpmorphError, OSError) as e:
        _fail(str(e))


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path))
@click.option("--store", "store_path", required=True, type=click.Path(path_type=Path))
def pipeline(corpus_dir: Path, models_dir: Path, store_path: Path):
    """Run every sample through the pipeline, logging to the event store."""
    try:
        service = PipelineService(_load_bundle(models_dir), store_path)
        service.add_samples(load_corpus(corpus_dir))
        results = service.process_all()
    except (ShrimpmorphError, OSError) as e:
        _fail(str(e))
    for r in results:
        if r.status == AWAITING_REVIEW:
            click.echo(f"{r.sample_id}: awaiting review")
        else:
            click.echo(f"{r.sample_id}: {r.status}")
    s = service.summary()
    click.echo(
        f"{s['processed']} processed, {s['by_status']['completed']} completed, "
        f"{s['alerts_open']} open alerts"
    )


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path))
@click.option("--store", "store_path", required=True, type=click.Path(path_type=Path))
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(corpus_dir: Path, models_dir: Path, store_path: Path, port: int, host: str):
    """Process the corpus, then serve the review API."""
    import uvicorn

    try:
        service = PipelineService(_load_bundle(models_dir), store_path)
        service.add_samples(load_corpus(corpus_dir))
        service.process_all()
    except (ShrimpmorphError, OSError) as e:
        _fail(str(e))
    uvicorn.run(create_app(service), host=host, port=port)


if __name__ == "__main__":
    main()
