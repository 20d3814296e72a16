"""Command-line entry points: run experiments, tune, generate data, plot."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .runner import ConfigError, RunConfig, run_seed, tune as tune_grid, \
    write_event_log, write_metrics_csv
from .streams import HstaggerConfig, StreamError, hstagger_generate, next_example, \
    save_dataset

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            return RunConfig.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, ConfigError, TypeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Streaming hierarchical classification under knowledge drift."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def run_cmd(config_path, out_dir):
    """Execute the configured method on every evaluation seed."""
    cfg = _load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        results = {}
        for seed in cfg.eval_seeds:
            engine = run_seed(cfg, seed)
            results[seed] = engine.records
            write_event_log(engine, out / f"events_seed{seed}.jsonl")
        write_metrics_csv(results, out / "metrics.csv")
    except Exception as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"wrote {out / 'metrics.csv'}")


@main.command("tune")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--grid", "grid_json", default=None,
              help='JSON list of config overrides, e.g. \'[{"tau":0.04,"k":3}]\'')
def tune_cmd(config_path, grid_json):
    """Pick hyperparameters on the tuning seeds (mean final-third micro-F1)."""
    cfg = _load_config(config_path)
    if grid_json:
        try:
            grid = json.loads(grid_json)
        except json.JSONDecodeError as exc:
            click.echo(f"config error: bad grid: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    else:
        grid = [{"tau": tau, "k": k} for tau in (0.04, 0.05) for k in (3, 5, 11)]
    try:
        best = tune_grid(cfg, grid)
    except Exception as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(json.dumps(best))


@main.command("generate")
@click.option("--hstagger", is_flag=True, required=True)
@click.option("--seed", default=0, type=int)
@click.option("--n", default=570, type=int, help="number of examples to sample")
@click.option("--out", "out_path", required=True, type=click.Path())
def generate_cmd(hstagger, seed, n, out_path):
    """Write a synthetic stream as CSV plus sidecar hierarchy JSON."""
    try:
        gt = hstagger_generate(HstaggerConfig(seed=seed))
        examples = [next_example(gt, t, seed) for t in range(n)]
        save_dataset(examples, gt.hierarchy, out_path)
    except StreamError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except Exception as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"wrote {out_path}")


@main.command("plot")
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=False))
@click.option("--out", "out_path", default=None, type=click.Path())
def plot_cmd(metrics_path, out_path):
    """SVG of micro-F1 vs iteration with standard-error bands across seeds."""
    import csv

    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    path = Path(metrics_path)
    if not path.exists():
        click.echo(f"config error: no such file {path}", err=True)
        sys.exit(EXIT_CONFIG)
    by_seed: dict[int, dict[int, float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            by_seed.setdefault(int(row["seed"]), {})[int(row["t"])] = float(row["micro_f1"])
    if not by_seed:
        click.echo("config error: metrics file has no rows", err=True)
        sys.exit(EXIT_CONFIG)
    ts = sorted(set.intersection(*(set(v) for v in by_seed.values())))
    curves = np.asarray([[by_seed[s][t] for t in ts] for s in sorted(by_seed)])
    mean = curves.mean(axis=0)
    sem = curves.std(axis=0, ddof=1) / np.sqrt(len(by_seed)) if len(by_seed) > 1 else 0 * mean
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ts, mean, label=f"micro-F1 ({len(by_seed)} seeds)")
    ax.fill_between(ts, mean - sem, mean + sem, alpha=0.3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("micro-F1")
    ax.set_ylim(0, 1.02)
    ax.legend()
    out = Path(out_path) if out_path else path.with_suffix(".svg")
    fig.savefig(out, format="svg", bbox_inches="tight")
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
