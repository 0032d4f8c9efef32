"""
Analysis commands - NFE difficulty, adjoint stability and model accounting.
"""

from pathlib import Path

import click

from odesr.cli import get_ctx_value, handle_errors, verbose_echo
from odesr.export.tables import export_table, table_to_markdown


def _out_dir(ctx: click.Context) -> Path:
    return Path(str(get_ctx_value(ctx, "out_dir") or "."))


def _parse_floats(
    ctx: click.Context, param: click.Parameter | None, value: str | None
) -> tuple[float, ...] | None:
    """Parse a comma-separated list of numbers."""
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"Expected comma-separated numbers, got {value!r}") from None


@click.command("nfe-report")
@click.argument("ode_checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("rrdb_checkpoints", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test-dir", required=True, type=click.Path(exists=True, file_okay=False), help="Folder of HR test PNGs")
@click.option("--workers", default=0, show_default=True, help="Loader threads")
@click.pass_context
@handle_errors
def nfe_report(
    ctx: click.Context,
    ode_checkpoint: str,
    rrdb_checkpoints: tuple[str, ...],
    test_dir: str,
    workers: int,
) -> None:
    """Bucket test images by ODE solver steps and compare RRDB depths per bucket."""
    from odesr.models.checkpoint import load_checkpoint
    from odesr.training.evaluation import load_test_set
    from odesr.training.nfe_report import nfe_difficulty_report

    ode_model, _ = load_checkpoint(ode_checkpoint)
    rrdb_models = [load_checkpoint(path)[0] for path in rrdb_checkpoints]
    pairs = load_test_set(test_dir, workers)
    verbose_echo(ctx, f"{len(pairs)} test images, RRDB depths {[m.config.rrdb_blocks for m in rrdb_models]}")

    report = nfe_difficulty_report(ode_model, rrdb_models, pairs, workers)
    table = report.to_table()
    path = export_table(table, _out_dir(ctx) / "nfe_report.csv")
    for line in table.notes:
        click.echo(line)
    click.echo(f"Report: {path}")


@click.command("stability-bench")
@click.option("--family", type=click.Choice(["linear", "cubic"]), default="cubic", show_default=True)
@click.option("--lambdas", callback=_parse_floats, help="Comma-separated contraction rates [0,5,10,20,50,100]")
@click.option("--tolerances", callback=_parse_floats, help="Comma-separated solver tolerances [1e-3]")
@click.option("--budget", default=10_000, show_default=True, help="Adjoint backward evaluation budget")
@click.option("--seeds", default=1, show_default=True, help="Random initial states per scenario")
@click.pass_context
@handle_errors
def stability_bench(
    ctx: click.Context,
    family: str,
    lambdas: tuple[float, ...] | None,
    tolerances: tuple[float, ...] | None,
    budget: int,
    seeds: int,
) -> None:
    """Run adjoint, discrete and checkpointed gradients over a stiffness sweep."""
    from odesr.training.stability import DEFAULT_LAMBDAS, DEFAULT_TOLERANCE, default_scenarios, stability_bench as bench

    seed = get_ctx_value(ctx, "seed")
    first_seed = 0 if seed is None else int(str(seed))
    scenarios = default_scenarios(
        lambdas or DEFAULT_LAMBDAS,
        tolerances or (DEFAULT_TOLERANCE,),
        family,
        budget,
        range(first_seed, first_seed + seeds),
    )
    verbose_echo(ctx, f"{len(scenarios)} scenario(s)")

    result = bench(scenarios)
    table = result.to_table()
    path = export_table(table, _out_dir(ctx) / "stability.csv")
    for line in table.notes:
        click.echo(line)
    click.echo(f"Table: {path}")


@click.command("model-table")
@click.argument("run_dirs", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--preset", "presets", multiple=True, help="Also count parameters of a generator preset")
@click.pass_context
@handle_errors
def model_table(ctx: click.Context, run_dirs: tuple[str, ...], presets: tuple[str, ...]) -> None:
    """Parameters, relative epoch time and best PSNR of finished runs."""
    from odesr.core.config import generator_preset
    from odesr.training.accounting import model_table as build_table, parameter_table, read_run

    if not run_dirs and not presets:
        raise click.UsageError("Give at least one run directory or --preset")

    if run_dirs:
        table = build_table([read_run(d) for d in run_dirs])
        path = export_table(table, _out_dir(ctx) / "model_table.csv")
        click.echo(table_to_markdown(table))
        click.echo(f"Table: {path}")
    if presets:
        configs = {name: generator_preset(*name.split("+")) for name in presets}
        click.echo(table_to_markdown(parameter_table(configs)))
