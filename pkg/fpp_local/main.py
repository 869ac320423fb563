import json
import os
from dataclasses import asdict
from pathlib import Path

import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.prompt import Confirm

# Load environment variables from .env file
load_dotenv()

from fpp_local.core.errors import (  # noqa: E402
    CapExceededError,
    ConfigError,
    ConvergenceError,
    ModelError,
)
from fpp_local.core.models import ExperimentConfig, validate  # noqa: E402
from fpp_local.core.rng import GRAPH, RngStream  # noqa: E402
from fpp_local.exploration.experiments import (  # noqa: E402
    TRACE_COLUMNS,
    exploration_coupling,
    exploration_traces,
)
from fpp_local.graph.config_graph import (  # noqa: E402
    configuration_graph,
    dump_edge_list,
    multigraph_stats,
)
from fpp_local.graph.scaling import distance_scaling  # noqa: E402
from fpp_local.limit.tree import dump_coloured_tree  # noqa: E402
from fpp_local.local.histogram import CodeHistogram  # noqa: E402
from fpp_local.local.report import (  # noqa: E402
    CSV_COLUMNS,
    convergence_report,
    graph_plan,
    iter_graph_neighbourhoods,
    iter_limit_trees,
    limit_params,
    neighbourhood_code,
)
from fpp_local.renderer.template import TemplateRenderer  # noqa: E402
from fpp_local.stochastic.laws import derive as derive_quantities  # noqa: E402
from fpp_local.utils.console import console, print_quantities, setup_logging  # noqa: E402
from fpp_local.utils.file_io import (  # noqa: E402
    read_config_data,
    write_csv,
    write_json,
)

app = typer.Typer(
    name="fpp-local",
    help="Local limits of first passage percolation on configuration models",
    add_completion=False,
)

CONFIG_ERROR = 2
CAP_EXCEEDED = 3

DEFAULT_CONFIG_YAML = """# D uniform on {1, 3} with Exponential(1) weights: nu = 1.5, lambda = 0.5
degree:
  kind: pmf
  atoms:
    1: 0.5
    3: 0.5
weight:
  kind: exponential
  rate: 1.0
regime: malthusian
n_grid: [1000, 10000]
R: 1
samples: 1000
pairsPerGraph: 10
eps: 0.1
N_max: 10000
horizon: 12
weightBins: 0
seed: 0
workers: 1
out: output
"""

ConfigOption = typer.Option(Path("experiment.yaml"), "--config", "-c", help="Experiment config (JSON or YAML)")
SeedOption = typer.Option(None, "--seed", "-s", help="Override the master seed")
WorkersOption = typer.Option(None, "--workers", "-w", help="Worker processes (falls back to FPP_LOCAL_WORKERS)")
OutOption = typer.Option(None, "--out", "-o", help="Override the output directory")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Debug logging")


def _fail(message: str, code: int) -> typer.Exit:
    console.print(f"[error]{message}[/error]")
    return typer.Exit(code=code)


def _load_config(
    path: Path,
    seed: int | None = None,
    workers: int | None = None,
    out: Path | None = None,
    check: bool = True,
) -> ExperimentConfig:
    """Parse, apply command-line overrides and (optionally) check regime preconditions."""
    try:
        data = read_config_data(path)
        config = ExperimentConfig.model_validate(data)
        overrides: dict = {}
        if seed is not None:
            overrides["seed"] = seed
        if out is not None:
            overrides["out"] = str(out)
        if workers is not None:
            overrides["workers"] = workers
        elif "workers" not in data and os.getenv("FPP_LOCAL_WORKERS"):
            try:
                overrides["workers"] = int(os.environ["FPP_LOCAL_WORKERS"])
            except ValueError as e:
                raise ConfigError("FPP_LOCAL_WORKERS must be an integer") from e
        if overrides:
            dumped = config.model_dump(mode="json", by_alias=True)
            config = ExperimentConfig.model_validate({**dumped, **overrides})
    except ConfigError as e:
        raise _fail(str(e), CONFIG_ERROR) from e
    except ValidationError as e:
        raise _fail(f"Invalid config {path}:\n{e}", CONFIG_ERROR) from e

    if check:
        violations = validate(config)
        if violations:
            for v in violations:
                console.print(f"[error]- {v}[/error]")
            raise _fail(f"Config {path} violates regime preconditions", CONFIG_ERROR)
    return config


def _out_dir(config: ExperimentConfig) -> Path:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    return config.out_dir


@app.command()
def init(
    path: Path = typer.Option(Path("."), "--path", "-p", help="Directory to initialize"),
):
    """
    Write a default experiment config.
    """
    path.mkdir(parents=True, exist_ok=True)
    config_path = path / "experiment.yaml"
    if config_path.exists() and not Confirm.ask(
        f"{config_path} already exists. Overwrite it?"
    ):
        console.print("Skipped creating experiment.yaml")
        return
    config_path.write_text(DEFAULT_CONFIG_YAML, encoding="utf-8")
    console.print(f"[success]Created {config_path}[/success]")


@app.command("validate")
def validate_command(
    config_file: Path = ConfigOption,
):
    """
    Check a config against the schema and its regime preconditions.
    """
    config = _load_config(config_file, check=False)
    violations = validate(config)
    if violations:
        for v in violations:
            console.print(f"[error]- {v}[/error]")
        raise typer.Exit(code=CONFIG_ERROR)
    console.print(f"[success]{config_file} is valid ({config.regime} regime)[/success]")


@app.command()
def derive(
    config_file: Path = ConfigOption,
    as_json: bool = typer.Option(False, "--json", help="Print JSON instead of a table"),
):
    """
    Print nu, lambda, zeta* and zeta for the configured laws.
    """
    config = _load_config(config_file, check=False)
    try:
        q = derive_quantities(config.degree_model(), config.weight_model(), config.tol)
    except (ModelError, ConvergenceError) as e:
        raise _fail(str(e), CONFIG_ERROR) from e

    if as_json:
        typer.echo(json.dumps(asdict(q), sort_keys=True))
        return
    print_quantities(
        "Derived quantities",
        {
            "E[D]": q.mean_degree,
            "nu": q.nu,
            "lambda": q.malthusian if q.malthusian is not None else q.malthusian_note,
            "zeta*": q.zeta_star,
            "zeta": q.zeta,
            "regular": q.regular,
        },
    )


@app.command()
def convergence(
    config_file: Path = ConfigOption,
    seed: int = SeedOption,
    workers: int = WorkersOption,
    out: Path = OutOption,
    verbose: bool = VerboseOption,
):
    """
    TV between coloured neighbourhoods of G_n and of the limit tree, per n.
    Exits with code 3 when maxSeconds runs out.
    """
    setup_logging(verbose)
    config = _load_config(config_file, seed, workers, out)
    try:
        with console.status("[bold green]Sampling neighbourhoods...[/bold green]"):
            report = convergence_report(config)
    except CapExceededError as e:
        raise _fail(str(e), CAP_EXCEEDED) from e

    out_dir = _out_dir(config)
    write_csv(CSV_COLUMNS, (r.csv_values() for r in report.rows), out_dir / "convergence.csv")
    write_json(report.to_json(), out_dir / "convergence.json")
    hist_dir = out_dir / "histograms"
    hist_dir.mkdir(exist_ok=True)
    write_json(report.limit.histogram.to_json(), hist_dir / "limit.json")
    for n, side in report.graphs.items():
        write_json(side.histogram.to_json(), hist_dir / f"n{n}.json")
    (out_dir / "summary.md").write_text(TemplateRenderer().render(report), encoding="utf-8")

    for r in report.rows:
        console.print(f"n={r.n}: tv={r.tv:.4f} (se {r.tv_se:.4f}, null {r.tv_null:.4f})")
    console.print(f"[success]Report written to {out_dir}[/success]")


@app.command("limit-sample")
def limit_sample(
    config_file: Path = ConfigOption,
    count: int = typer.Option(None, "--count", "-n", help="Trees to sample (default: samples)"),
    seed: int = SeedOption,
    out: Path = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Dump coloured limit trees truncated at R.
    """
    setup_logging(verbose)
    config = _load_config(config_file, seed, 1, out)
    d, w = config.degree_model(), config.weight_model()
    params = limit_params(config, d, w)
    blocks = []
    h = CodeHistogram(meta={"n": "limit", "R": config.radius, "regime": config.regime, "seed": config.seed})
    try:
        with console.status("[bold green]Sampling limit trees...[/bold green]"):
            for i, ct in iter_limit_trees(config, range(count or config.samples), params):
                h.add(neighbourhood_code(ct.rooted(), config, w))
                header = f"# tree {i} coin={ct.coin} infinite={ct.infinite} red={ct.red}\n"
                blocks.append(header + dump_coloured_tree(ct))
    except CapExceededError as e:
        raise _fail(str(e), CAP_EXCEEDED) from e

    out_dir = _out_dir(config)
    (out_dir / "limit_trees.txt").write_text("".join(blocks), encoding="utf-8")
    write_json(h.to_json(), out_dir / "limit_histogram.json")
    console.print(f"[success]{len(blocks)} trees written to {out_dir}[/success]")


@app.command("neighbourhood-sample")
def neighbourhood_sample(
    config_file: Path = ConfigOption,
    n: int = typer.Option(None, "--n", help="Graph size (default: first entry of n_grid)"),
    count: int = typer.Option(None, "--count", help="Neighbourhoods to sample (default: samples)"),
    edge_list: bool = typer.Option(False, "--edge-list", help="Also dump the first graph's edge list"),
    seed: int = SeedOption,
    out: Path = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Dump coloured R-neighbourhoods of uniform roots in configuration graphs.
    """
    setup_logging(verbose)
    config = _load_config(config_file, seed, 1, out)
    n = n or config.n_grid[0]
    w = config.weight_model()
    plan = graph_plan(count or config.samples, config.pairs_per_graph)
    blocks = []
    h = CodeHistogram(meta={"n": n, "R": config.radius, "regime": config.regime, "seed": config.seed})
    try:
        with console.status(f"[bold green]Sampling neighbourhoods at n={n}...[/bold green]"):
            for j, (k, _, nb) in enumerate(iter_graph_neighbourhoods(config, n, plan)):
                h.add(neighbourhood_code(nb, config, w))
                lines = "".join(
                    f"{nb.labels[a]} {nb.labels[b]} {x!r} {c}\n" for a, b, x, c in nb.edges
                )
                blocks.append(f"# sample {j} graph {k} root {nb.labels[0]} red={nb.red_count}\n{lines}")
    except CapExceededError as e:
        raise _fail(str(e), CAP_EXCEEDED) from e

    out_dir = _out_dir(config)
    (out_dir / f"neighbourhoods_n{n}.txt").write_text("".join(blocks), encoding="utf-8")
    write_json(h.to_json(), out_dir / f"neighbourhood_histogram_n{n}.json")
    if edge_list:
        g = configuration_graph(
            n, config.degree_model(), w, RngStream(config.seed, (GRAPH, 0, n, 0))
        )
        dump_edge_list(g, out_dir / f"graph_n{n}.txt")
        stats = multigraph_stats(g)
        console.print(
            f"[info]graph 0: {stats['self_loops']} self-loops, "
            f"{stats['parallel_surplus']} surplus parallel edges[/info]"
        )
    console.print(f"[success]{len(blocks)} neighbourhoods written to {out_dir}[/success]")


@app.command()
def explore(
    config_file: Path = ConfigOption,
    target: str = typer.Option("limit", "--target", "-t", help="'graph' or 'limit'"),
    replicas: int = typer.Option(10, "--replicas", "-r", help="Host replicas to trace"),
    coupling: int = typer.Option(0, "--coupling", help="Also compare explored subgraphs over this many samples"),
    seed: int = SeedOption,
    workers: int = WorkersOption,
    out: Path = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Exploration traces: active-set classification and stub counts per step.
    Exits with code 3 when any exploration is stopped by maxSeconds.
    """
    setup_logging(verbose)
    if target not in ("graph", "limit"):
        raise _fail(f"Unknown target '{target}' (use 'graph' or 'limit')", CONFIG_ERROR)
    config = _load_config(config_file, seed, workers, out)
    n = config.n_grid[0]
    try:
        with console.status("[bold green]Exploring...[/bold green]"):
            traces = exploration_traces(config, target, replicas, n)
            result = exploration_coupling(config, n, config.explore_steps, coupling) if coupling else None
    except CapExceededError as e:
        raise _fail(str(e), CAP_EXCEEDED) from e

    out_dir = _out_dir(config)
    write_csv(
        TRACE_COLUMNS,
        ([row[c] for c in TRACE_COLUMNS] for row in traces.rows),
        out_dir / f"explore_{target}.csv",
    )
    if result is not None:
        write_json(
            {"n": n, "steps": result.steps, "samples": coupling, "tv": result.tv},
            out_dir / "explore_coupling.json",
        )
        console.print(f"explored-subgraph TV after {result.steps} steps: {result.tv:.4f}")
    console.print(f"[success]Traces written to {out_dir}[/success]")

    if traces.capped:
        raise _fail(f"{traces.capped} exploration(s) stopped by the wall-clock cap", CAP_EXCEEDED)


@app.command()
def scaling(
    config_file: Path = ConfigOption,
    pairs: int = typer.Option(None, "--pairs", help="Vertex pairs per graph (default: pairsPerGraph)"),
    seed: int = SeedOption,
    workers: int = WorkersOption,
    out: Path = OutOption,
    verbose: bool = VerboseOption,
):
    """
    Typical distances against log n; the slope should approach 1/lambda.
    """
    setup_logging(verbose)
    config = _load_config(config_file, seed, workers, out)
    if config.regime != "malthusian":
        raise _fail("distance scaling needs the Malthusian regime", CONFIG_ERROR)
    with console.status("[bold green]Measuring distances...[/bold green]"):
        report = distance_scaling(
            config.degree_model(),
            config.weight_model(),
            config.n_grid,
            config.scaling_graphs,
            pairs or config.pairs_per_graph,
            config.seed,
            config.workers,
        )

    out_dir = _out_dir(config)
    columns = ("n", "graphs", "pairs", "mean_distance", "distance_se", "giant_frac", "giant_frac_expected")
    write_csv(columns, ([getattr(r, c) for c in columns] for r in report.rows), out_dir / "scaling.csv")
    write_json(
        {
            "slope": report.slope,
            "intercept": report.intercept,
            "target_slope": report.target_slope,
            **report.meta,
        },
        out_dir / "scaling.json",
    )
    console.print(f"slope {report.slope:.4f} against 1/lambda = {report.target_slope:.4f}")
    console.print(f"[success]Scaling report written to {out_dir}[/success]")


if __name__ == "__main__":
    app()
