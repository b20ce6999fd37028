"""Batch command-line interface.

``run`` writes one JSON record per found slice (line-delimited) plus a
machine-readable summary record; timings go to stderr so identical runs
produce byte-identical output. ``report`` additionally renders figures
next to the records. ``serve`` starts the HTTP service and ``eval``
reproduces the benchmark tables.
"""

from __future__ import annotations

import csv as csv_mod
import json
import sys
import time
from pathlib import Path

import click

from .dataset import DataError, load, parse_schema_options, sample
from .engine import ALGORITHMS, SearchSession, SessionError
from .fdr import FdrError
from .stats import StatsError, loss_vector_for

SCHEMA_VERSION = 1

_ERRORS = (DataError, StatsError, FdrError, SessionError, OSError)


def _read_config(ctx, param, value):
    """Seed default values from a key=value config file; flags still win."""
    if not value:
        return None
    defaults = {}
    for lineno, line in enumerate(Path(value).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.BadParameter(f"line {lineno}: expected key = value")
        key, _, raw = line.partition("=")
        defaults[key.strip().replace("-", "_")] = raw.strip()
    ctx.default_map = {**defaults, **(ctx.default_map or {})}
    return value


def data_options(fn):
    decorators = [
        click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False),
                     help="Delimited text table with a header row."),
        click.option("--label-column", default="label", show_default=True),
        click.option("--score-column", default="score", show_default=True),
        click.option("--delimiter", default=",", show_default=True),
        click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False),
                     help="Per-feature options file (feature.key = value)."),
        click.option("--bins", default=10, show_default=True,
                     help="Default bin count for numeric features."),
        click.option("--top-values", default=50, show_default=True,
                     help="Keep this many categorical values; the rest share OTHER."),
        click.option("--loss-kind", type=click.Choice(["log_loss", "generic_score"]),
                     default="log_loss", show_default=True,
                     help="Treat the score column as a probability or as a precomputed loss."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def search_options(fn):
    decorators = [
        click.option("--algorithm", type=click.Choice(ALGORITHMS), default="lattice",
                     show_default=True),
        click.option("--k", default=10, show_default=True, help="Maximum slices to return."),
        click.option("--min-effect-size", "-T", default=0.4, show_default=True),
        click.option("--alpha", default=0.05, show_default=True),
        click.option("--fdr", type=click.Choice(["investing", "fixed", "bonferroni", "bh"]),
                     default="investing", show_default=True),
        click.option("--min-size", default=2, show_default=True,
                     help="Smallest testable slice/counterpart size."),
        click.option("--sample-fraction", default=1.0, show_default=True),
        click.option("--seed", default=0, show_default=True),
        click.option("--workers", default=1, show_default=True,
                     help="Worker threads for effect-size evaluation."),
        click.option("--max-depth", type=int, default=None,
                     help="Literal-count cap (lattice) or depth cap (tree)."),
        click.option("--min-leaf", default=10, show_default=True,
                     help="Tree: smallest allowed leaf."),
        click.option("--num-clusters", default=10, show_default=True,
                     help="Cluster baseline: number of clusters."),
        click.option("--config", callback=_read_config, is_eager=True, expose_value=False,
                     type=click.Path(exists=True, dir_okay=False),
                     help="Config file supplying default values for any flag."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


@click.group(context_settings={"auto_envvar_prefix": "SLICELENS"})
@click.version_option(package_name="slicelens")
def main():
    """Find large, interpretable data slices where a model underperforms."""


def _build_session(kw):
    schema_options = parse_schema_options(kw["schema_path"]) if kw.get("schema_path") else None
    dataset, report = load(
        kw["data"], kw["label_column"], kw["score_column"],
        delimiter=kw["delimiter"], schema_options=schema_options,
        num_bins=kw["bins"], top_values=kw["top_values"], loss_kind=kw["loss_kind"],
    )
    if kw["sample_fraction"] < 1.0:
        dataset = sample(dataset, kw["sample_fraction"], kw["seed"])
    loss = loss_vector_for(dataset, kw["loss_kind"])
    session = SearchSession(
        dataset, loss, algorithm=kw["algorithm"], alpha=kw["alpha"], fdr=kw["fdr"],
        workers=kw["workers"], min_size=kw["min_size"], max_depth=kw["max_depth"],
        min_leaf=kw["min_leaf"], num_clusters=kw["num_clusters"], seed=kw["seed"],
        loss_kind=kw["loss_kind"],
    )
    return session, report


def _slice_record(view: dict) -> dict:
    return {
        "record": "slice",
        "schema_version": SCHEMA_VERSION,
        "rank": view["rank"],
        "predicate": view["predicate"],
        "interpretable": view["interpretable"],
        "literals": view["literals"],
        "num_literals": view["num_literals"],
        "size": view["size"],
        "mean_loss": view["metric"],
        "counterpart_loss": view["counterpart_metric"],
        "effect_size": view["effect_size"],
        "t_stat": view["t_stat"],
        "p_value": view["p_value"],
        "alpha_spent": view["alpha_spent"],
        "decision": "rejected" if view["rejected"] else "accepted",
    }


def _summary_record(session: SearchSession, views, kw, ingestion) -> dict:
    return {
        "record": "summary",
        "schema_version": SCHEMA_VERSION,
        "algorithm": kw["algorithm"],
        "n": session.dataset.n,
        "k": kw["k"],
        "min_effect_size": kw["min_effect_size"],
        "alpha": kw["alpha"],
        "fdr": kw["fdr"],
        "sample_fraction": kw["sample_fraction"],
        "seed": kw["seed"],
        "returned": len(views),
        "explored": session.explored_count,
        "evaluations": session.eval_count,
        "tested": sum(1 for r in session.driver.records if r.decision is not None),
        "rejected": sum(1 for r in session.driver.records if r.problematic),
        "exhausted": session.exhausted,
        "ingestion": ingestion,
    }


def _execute(kw):
    started = time.perf_counter()
    session, ingestion = _build_session(kw)
    views = session.query(kw["k"], kw["min_effect_size"])
    elapsed = time.perf_counter() - started
    lines = [json.dumps(_slice_record(v), ensure_ascii=False) for v in views]
    lines.append(json.dumps(_summary_record(session, views, kw, ingestion.to_dict()),
                            ensure_ascii=False))
    return session, views, lines, elapsed, ingestion


def _emit(lines, output):
    text = "\n".join(lines) + "\n"
    if output == "-":
        click.echo(text, nl=False)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _stderr_summary(session, views, elapsed, ingestion):
    click.echo(ingestion.summary_text(), err=True)
    click.echo(
        f"returned {len(views)} slice(s) in {elapsed:.3f}s "
        f"({session.eval_count} evaluations, {session.explored_count} explored)",
        err=True,
    )


@main.command()
@data_options
@search_options
@click.option("--output", "-o", default="-", show_default=True,
              help="Records file; '-' writes to stdout.")
def run(output, **kw):
    """Search once and write line-delimited slice records."""
    try:
        session, views, lines, elapsed, ingestion = _execute(kw)
    except _ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    _emit(lines, output)
    _stderr_summary(session, views, elapsed, ingestion)


@main.command()
@data_options
@search_options
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Directory receiving records and figures.")
def report(out_dir, **kw):
    """Search once, then write records plus rendered figures."""
    from . import report as figures

    try:
        session, views, lines, elapsed, ingestion = _execute(kw)
    except _ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _emit(lines, str(out / "slices.ndjson"))
    figures.render_slice_scatter(views, out / "slices.png", threshold=kw["min_effect_size"])
    _stderr_summary(session, views, elapsed, ingestion)
    click.echo(f"wrote {out / 'slices.ndjson'} and {out / 'slices.png'}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8250, show_default=True)
@click.option("--cors-origin", multiple=True, default=("*",), show_default=True)
@click.option("--session-ttl", default=3600.0, show_default=True,
              help="Idle seconds before a session is reclaimed.")
@click.option("--query-budget", default=0.0, show_default=True,
              help="Seconds a slice query may wait before answering 'searching'.")
def serve(host, port, cors_origin, session_ttl, query_budget):
    """Start the HTTP service backing the browser UI."""
    import uvicorn

    from .service import create_app

    app = create_app(session_ttl=session_ttl, query_budget=query_budget,
                     cors_origins=list(cors_origin))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.group(name="eval")
def eval_group():
    """Benchmark tables (and optional figures) on synthetic data."""


def _write_table(rows, path, fieldnames):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv_mod.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


@eval_group.command()
@click.option("--n", default=10_000, show_default=True)
@click.option("--seeds", default=20, show_default=True)
@click.option("--values-per-feature", default=10, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--min-effect-size", "-T", default=0.4, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
def benchmark(n, seeds, values_per_feature, k, min_effect_size, out_dir, figures):
    """Compare lattice/tree/cluster accuracy on injected problem slices."""
    from . import report as figmod
    from .harness import mean_accuracy, method_comparison

    rows = method_comparison(n, range(seeds), values_per_feature=values_per_feature,
                             k=k, T=min_effect_size)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_table(rows, out / "benchmark.csv",
                 ["method", "seed", "n", "precision", "recall", "accuracy", "found"])
    means = mean_accuracy(rows)
    for method, acc in means.items():
        click.echo(f"{method}: mean accuracy {acc:.4f}")
    if figures:
        figmod.render_method_bars(means, out / "benchmark.png")
    click.echo(f"wrote {out / 'benchmark.csv'}", err=True)


@eval_group.command()
@click.option("--n", default=30_000, show_default=True)
@click.option("--values-per-feature", default=5, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--min-effect-size", "-T", default=0.4, show_default=True)
@click.option("--seed", default=11, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
def sampling(n, values_per_feature, k, min_effect_size, seed, out_dir, figures):
    """Relative accuracy and runtime across sample fractions."""
    from . import report as figmod
    from .harness import gen_synthetic, inject, random_injection, sampling_curve
    from .stats import log_loss_vector

    base = gen_synthetic(n, values_per_feature, seed)
    perturbed, _ = inject(base, random_injection(base, seed=seed + 1))
    loss = log_loss_vector(perturbed.labels, perturbed.scores)
    fractions = [1 / 128, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0]
    rows = sampling_curve(perturbed, loss, fractions, seed=seed, k=k, T=min_effect_size)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_table(rows, out / "sampling.csv",
                 ["algorithm", "fraction", "relative_accuracy", "seconds", "found"])
    for row in rows:
        click.echo(f"{row['algorithm']} f={row['fraction']:.5f} "
                   f"rel={row['relative_accuracy']:.3f} t={row['seconds']:.4f}s")
    if figures:
        figmod.render_sampling_curve(rows, out / "sampling.png")
    click.echo(f"wrote {out / 'sampling.csv'}", err=True)


@eval_group.command()
@click.option("--runs", default=10_000, show_default=True)
@click.option("--alphas", default="0.001,0.005,0.01", show_default=True)
@click.option("--seed", default=99, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
def fdr(runs, alphas, seed, out_dir, figures):
    """Estimated mFDR and power for the shipped testing procedures."""
    from . import report as figmod
    from .harness import fdr_power_sim

    grid = [float(a) for a in alphas.split(",")]
    outcomes = fdr_power_sim(("investing", "bonferroni", "bh"), grid, runs, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [vars(o) for o in outcomes]
    _write_table(rows, out / "fdr.csv",
                 ["policy", "alpha", "runs", "mfdr", "mfdr_se", "power"])
    for o in outcomes:
        click.echo(f"{o.policy} alpha={o.alpha} mfdr={o.mfdr:.5f} power={o.power:.4f}")
    if figures:
        figmod.render_fdr_power(outcomes, out / "fdr.png")
    click.echo(f"wrote {out / 'fdr.csv'}", err=True)


if __name__ == "__main__":
    main()
