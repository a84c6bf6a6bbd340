"""Command-line interface: generate, train, evaluate, explain, index, rank, serve.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import json
import sys
from datetime import date as Date
from pathlib import Path

import click

from .dataset import default_city_profiles, generate_synthetic, load_csv, write_csv, CityProfile
from .errors import SiteScreenError
from .pipeline import (
    PipelineConfig,
    bundle_to_json,
    load_bundle,
    reports_to_doc,
    run_pipeline,
    run_scenario,
)


@click.group()
def cli():
    """Site-suitability screening pipeline."""


def _load_dataset(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return load_csv(fh)


def _load_config(path: str | None, seed: int | None) -> PipelineConfig:
    doc = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if seed is not None:
        doc["seed"] = seed
    return PipelineConfig.from_dict(doc)


@cli.command()
@click.option("--profiles", type=str, default=None, help="JSON file of city profiles (defaults to the built-in ten cities).")
@click.option("--start", type=str, default="2020-01-01", show_default=True)
@click.option("--end", type=str, default="2024-12-31", show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=str, required=True, help="Output CSV path.")
def generate(profiles, start, end, seed, out):
    """Generate a synthetic city-day dataset and write it as CSV."""
    if profiles is None:
        profile_list = default_city_profiles()
    else:
        with open(profiles, "r", encoding="utf-8") as fh:
            profile_list = [CityProfile(**p) for p in json.load(fh)]
    dataset = generate_synthetic(profile_list, Date.fromisoformat(start), Date.fromisoformat(end), seed)
    Path(out).write_text(write_csv(dataset), encoding="utf-8")
    click.echo(f"wrote {len(dataset)} records to {out}")


@cli.command()
@click.option("--data", type=str, required=True, help="Training CSV.")
@click.option("--config", "config_path", type=str, default=None, help="JSON config mirroring PipelineConfig.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=str, required=True, help="Bundle output path.")
@click.option("--reports", "reports_path", type=str, default=None, help="Write run reports JSON here (defaults to <out>.reports.json).")
def train(data, config_path, seed, out, reports_path):
    """Run the full pipeline on a CSV and persist the model bundle."""
    dataset = _load_dataset(data)
    config = _load_config(config_path, seed)
    bundle, reports = run_pipeline(dataset, config)
    Path(out).write_text(bundle_to_json(bundle), encoding="utf-8")
    if reports_path is None:
        reports_path = str(out) + ".reports.json"
    Path(reports_path).write_text(json.dumps(reports_to_doc(reports), indent=1), encoding="utf-8")
    click.echo(f"chosen_k={reports.k_selection.chosen_k} accuracy={reports.evaluation.accuracy:.4f}")
    click.echo(f"bundle: {out}")
    click.echo(f"reports: {reports_path}")


@cli.command()
@click.option("--bundle", "bundle_path", type=str, required=True)
@click.option("--data", type=str, required=True, help="CSV with records to evaluate (labels come from the bundle's clustering).")
def evaluate(bundle_path, data):
    """Re-derive proxy labels for a CSV with the bundle's clustering, then report classifier metrics."""
    from . import cluster as clustering
    from . import gbt
    from .preprocess import interpolate_missing, to_matrix, transform

    bundle = load_bundle(bundle_path)
    dataset = interpolate_missing(_load_dataset(data))
    scaled = transform(bundle.scaler, to_matrix(dataset))
    labels = bundle.labeling.classes_for(clustering.assign(bundle.kmeans, scaled))
    report = gbt.evaluate(bundle.ensemble, scaled, labels)
    click.echo(json.dumps({
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "weighted_f1": report.weighted_f1,
        "per_class_f1": list(report.f1),
        "confusion": report.confusion.tolist(),
    }, indent=1))


def _feature_options(fn):
    for name in (
        "month", "elevation", "water_proximity", "land_cover_class",
        "aod", "wind_speed", "temperature", "solar_irradiance",
    ):
        fn = click.option(f"--{name.replace('_', '-')}", name, type=float, required=True)(fn)
    return fn


@cli.command()
@click.option("--bundle", "bundle_path", type=str, required=True)
@_feature_options
def explain(bundle_path, **features):
    """Shapley attribution for one raw-unit scenario row."""
    from .gbt import predict_margins
    from .preprocess import row_from_values, transform_row

    bundle = load_bundle(bundle_path)
    result = run_scenario(bundle, features)
    margins = predict_margins(bundle.ensemble, transform_row(bundle.scaler, row_from_values(features)))
    result["margin"] = float(margins[result["proxy_class"]])
    click.echo(json.dumps(result, indent=1))


@cli.command(name="index")
@click.option("--bundle", "bundle_path", type=str, required=True)
@click.option("--data", type=str, required=True)
@click.option("--out", type=str, default=None, help="Output CSV (stdout when omitted).")
def index_cmd(bundle_path, data, out):
    """Per-record composite index and class for a CSV."""
    from .index import compute_sci
    from .preprocess import directional_adjust, interpolate_missing, to_matrix, transform

    bundle = load_bundle(bundle_path)
    dataset = interpolate_missing(_load_dataset(data))
    scaled = transform(bundle.scaler, to_matrix(dataset))
    adjusted = directional_adjust(scaled, bundle.schema)
    lines = ["city,date,sci,sci_class"]
    for record, row in zip(dataset.records, adjusted.values):
        result = compute_sci(row, bundle.weights, bundle.bins)
        lines.append(f"{record.city},{record.date.isoformat()},{result.sci!r},{result.label}")
    text = "\n".join(lines) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {len(dataset)} rows to {out}")


@cli.command()
@click.option("--bundle", "bundle_path", type=str, required=True)
@click.option("--data", type=str, required=True)
def rank(bundle_path, data):
    """Rank cities in a CSV by mean composite index."""
    from .index import rank_sites

    bundle = load_bundle(bundle_path)
    dataset = _load_dataset(data)
    rankings = rank_sites(dataset, bundle)
    click.echo(json.dumps({
        "cities": [
            {"city": r.city, "mean_sci": r.mean_sci, "modal_class": r.modal_class, "histogram": r.histogram}
            for r in rankings
        ]
    }, indent=1))


@cli.command()
@click.option("--bundle", "bundle_path", type=str, required=True)
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--static", "static_dir", type=str, default=None, help="Directory of built dashboard assets to serve under /app.")
def serve(bundle_path, host, port, static_dir):
    """Serve the scenario API over HTTP."""
    from .service import serve as run_service

    bundle = load_bundle(bundle_path)
    click.echo(f"serving bundle {bundle_path} on http://{host}:{port}")
    run_service(bundle, host=host, port=port, static_dir=static_dir)


def main(argv=None) -> int:
    """Run the CLI, mapping failures to the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except SiteScreenError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except json.JSONDecodeError as exc:
        click.echo(f"error: invalid JSON input ({exc})", err=True)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
