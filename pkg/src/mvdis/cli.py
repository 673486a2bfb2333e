"""Command-line front end: fit, predict, dissim, bench and synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Diagnostics go to stderr; data goes to files or stdout.
"""

import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import bench as bench_mod
from . import pipeline as pipeline_mod
from .config import RunConfig
from .data import DataError, load_multiview, save_multiview
from .dissim import MEASURES, DissimilarityMatrix, save_matrix
from .model_io import load_model, save_model
from .synth import SYNTH_KINDS, make_synth

logger = logging.getLogger(__name__)


def _parse_mtry(ctx, param, value):
    if value == "sqrt":
        return value
    try:
        v = int(value)
    except ValueError:
        raise click.BadParameter(f"expected 'sqrt' or a positive integer, got {value!r}")
    if v < 1:
        raise click.BadParameter(f"must be >= 1, got {v}")
    return v


def _parse_methods(ctx, param, value):
    methods = [m.strip() for m in value.split(",") if m.strip()]
    if not methods:
        raise click.BadParameter("no methods given")
    for m in methods:
        if m not in MEASURES:
            raise click.BadParameter(
                f"unknown method {m!r}; valid methods: {', '.join(MEASURES)}"
            )
    return methods


def _forest_options(fn):
    opts = [
        click.option("--trees", default=512, show_default=True,
                     type=click.IntRange(min=1), help="Trees per forest."),
        click.option("--mtry", default="sqrt", show_default=True, callback=_parse_mtry,
                     help="Features drawn per split: 'sqrt' or a positive integer "
                          "(capped at the view's feature count)."),
        click.option("--k", default=5, show_default=True, type=click.IntRange(min=1),
                     help="Neighborhood size for the instance-hardness measure."),
        click.option("--w", default=1.0, show_default=True,
                     type=click.FloatRange(min=0, min_open=True),
                     help="Decay rate for the path-based measure."),
        click.option("--seed", default=0, show_default=True, type=int,
                     help="Seed for all randomness."),
        click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1),
                     help="Parallel workers for tree building."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(measure, trees, mtry, k, w, seed, jobs, train_frac=0.5, repeats=10):
    return RunConfig(
        measure=measure,
        p_trees=trees,
        mtry=mtry,
        k=k,
        w=w,
        train_frac=train_frac,
        repeats=repeats,
        seed=seed,
        n_jobs=jobs,
    ).validate()


@click.group()
def cli():
    """Multi-view classification through forest dissimilarity spaces."""


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--model-out", required=True, type=click.Path(dir_okay=False),
              help="Where to write the fitted model.")
@click.option("--measure", default="plain", show_default=True,
              type=click.Choice(MEASURES), help="Dissimilarity measure.")
@_forest_options
def fit(manifest, model_out, measure, trees, mtry, k, w, seed, jobs):
    """Fit the joint multi-view model on a dataset manifest."""
    config = _config(measure, trees, mtry, k, w, seed, jobs)
    ds = load_multiview(manifest)
    logger.info("fitting %s on %s (n=%d, %d views)",
                measure, ds.name, ds.n_instances, ds.n_views)
    model = pipeline_mod.fit_mvl(ds, config)
    save_model(model, model_out)
    logger.info("model written to %s", model_out)


@cli.command()
@click.argument("model_path", metavar="MODEL", type=click.Path(exists=True, dir_okay=False))
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="-", show_default=True,
              help="Output file for predicted labels; '-' for stdout.")
def predict(model_path, manifest, out):
    """Predict labels for every instance in a dataset manifest."""
    model = load_model(model_path)
    ds = load_multiview(manifest)
    pred = pipeline_mod.predict_mvl_batch(model, ds.views)
    names = [model.class_table[i] for i in pred]
    text = "\n".join(names) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        logger.info("predictions written to %s", out)


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Output CSV path (a .meta.json sidecar is written next to it).")
@click.option("--measure", default="plain", show_default=True,
              type=click.Choice(MEASURES), help="Dissimilarity measure.")
@click.option("--view", default=None, type=click.IntRange(min=0),
              help="Write this view's matrix instead of the joint average.")
@_forest_options
def dissim(manifest, out, measure, view, trees, mtry, k, w, seed, jobs):
    """Compute the train-vs-train dissimilarity matrix of a dataset."""
    config = _config(measure, trees, mtry, k, w, seed, jobs)
    ds = load_multiview(manifest)
    model = pipeline_mod.fit_mvl(ds, config)
    if view is None:
        mat = DissimilarityMatrix(model.d_joint, measure).validate()
    else:
        if view >= ds.n_views:
            raise click.BadParameter(f"dataset has {ds.n_views} views, got --view {view}")
        forest = None if measure == "euclidean" else model.view_forests[view]
        X_train = model.train_views[view] if measure == "euclidean" else None
        mat = pipeline_mod._view_matrix(
            measure, forest, X_train, None, ds.views[view], model.caches[view],
            config.k, config.w,
        )
        mat.view_id = view
    save_matrix(mat, out, k=config.k, w=config.w, seed=config.seed)
    logger.info("matrix written to %s", out)


@cli.command()
@click.argument("manifests", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--methods", default=",".join(MEASURES), show_default=True,
              callback=_parse_methods,
              help="Comma-separated measure tags to compare.")
@click.option("--out", required=True, help="Report base path; one file per format "
                                           "(<out>.json / <out>.md / <out>.csv).")
@click.option("--format", "formats", multiple=True,
              type=click.Choice(bench_mod.REPORT_FORMATS), default=("json",),
              show_default=True, help="Report format; repeatable.")
@click.option("--train-frac", default=0.5, show_default=True,
              type=click.FloatRange(min=0, max=1, min_open=True, max_open=True),
              help="Training fraction per stratified split.")
@click.option("--repeats", default=10, show_default=True, type=click.IntRange(min=1),
              help="Repetitions per dataset.")
@_forest_options
def bench(manifests, methods, out, formats, train_frac, repeats,
          trees, mtry, k, w, seed, jobs):
    """Run the paired repeated-split benchmark over datasets."""
    config = _config("plain", trees, mtry, k, w, seed, jobs,
                     train_frac=train_frac, repeats=repeats)
    report = bench_mod.run_experiment(list(manifests), methods, config)
    if not report.datasets:
        raise DataError(
            "no dataset loaded; " + "; ".join(
                f"{ref}: {msg}" for ref, msg in sorted(report.errors.items())
            )
        )
    ext = {"json": "json", "markdown": "md", "csv": "csv"}
    for fmt in dict.fromkeys(formats):
        path = bench_mod.emit_report(report, f"{out}.{ext[fmt]}", fmt)
        logger.info("report written to %s", path)


@cli.command()
@click.argument("kind", type=click.Choice(SYNTH_KINDS))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False),
              help="Directory for the manifest, view CSVs and labels.")
@click.option("--n", default=None, type=click.IntRange(min=4),
              help="Number of instances (kind-specific default).")
@click.option("--views", default=None, type=click.IntRange(min=1),
              help="Number of views (blobs and noisyleaf).")
@click.option("--classes", default=None, type=click.IntRange(min=2),
              help="Number of classes (blobs only).")
@click.option("--noise", default=None,
              type=click.FloatRange(min=0, max=0.5, max_open=True),
              help="Label-noise fraction (noisyleaf only).")
@click.option("--seed", default=0, show_default=True, type=int,
              help="Seed for all randomness.")
def synth(kind, out_dir, n, views, classes, noise, seed):
    """Generate a synthetic dataset and write it as manifest + CSVs."""
    params = {}
    if kind == "blobs":
        if n is not None:
            params["n"] = n
        if views is not None:
            params["n_views"] = views
        if classes is not None:
            params["n_classes"] = classes
    elif kind == "noisyleaf":
        if n is not None:
            params["n"] = n
        if views is not None:
            params["n_views"] = views
        if noise is not None:
            params["noise_frac"] = noise
    else:
        if n is not None:
            if n % 3:
                raise click.BadParameter("irislike needs n divisible by 3")
            params["n_per_class"] = n // 3
    ds = make_synth(kind, seed=seed, **params)
    manifest = save_multiview(ds, out_dir)
    click.echo(str(manifest))


def main(argv=None):
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cli.main(args=argv, prog_name="mvdis", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:
        logger.exception("internal error")
        click.echo(f"internal error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
