"""
Training and evaluation commands.
"""

from pathlib import Path

import click

from odesr.cli import get_ctx_value, handle_errors, run_config, verbose_echo
from odesr.export.tables import export_table, table_to_markdown


@click.command()
@click.option("--train-dir", type=click.Path(exists=True, file_okay=False), help="Folder of HR training PNGs")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), help="Dataset manifest JSON")
@click.option("--epochs", type=int, help="Override max_epochs")
@click.pass_context
@handle_errors
def train(ctx: click.Context, train_dir: str | None, manifest: str | None, epochs: int | None) -> None:
    """Train a generator and write metrics, reports and checkpoints."""
    from odesr.training import train as run_training

    config = run_config(ctx)
    if train_dir:
        config.data.train_dir = train_dir
    if manifest:
        config.data.manifest = manifest
    if epochs is not None:
        config.train.max_epochs = epochs
    config.validate()

    generator = config.train.generator
    verbose_echo(ctx, f"Core: {generator.core}, backend: {generator.backend}, seed: {config.train.seed}")
    click.echo(f"Training into {config.out_dir}")

    result = run_training(config)

    click.echo(f"Parameters:      {result.parameter_count}")
    click.echo(f"Bicubic PSNR:    {result.baseline_psnr:.4f} dB")
    click.echo(f"Best val PSNR:   {result.best_psnr:.4f} dB (epoch {result.best_epoch})")
    click.echo(f"Stopped:         {result.stop_reason} after {len(result.epochs)} epoch(s)")
    if result.skipped_batches:
        click.echo(f"Skipped batches: {len(result.skipped_batches)}")


@click.command("eval")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("test_dirs", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--compare", type=click.Path(exists=True, dir_okay=False), help="Second checkpoint to compare against")
@click.option("--top", default=5, show_default=True, help="Largest per-image differences to list")
@click.option("--workers", default=0, show_default=True, help="Loader threads")
@click.pass_context
@handle_errors
def eval_cmd(
    ctx: click.Context,
    checkpoint: str,
    test_dirs: tuple[str, ...],
    compare: str | None,
    top: int,
    workers: int,
) -> None:
    """Evaluate a checkpoint on one or more folders of HR test PNGs."""
    from odesr.models.checkpoint import load_checkpoint
    from odesr.training import compare_reports, evaluate_test_sets

    config = run_config(ctx)
    out_dir = Path(config.out_dir)
    value = get_ctx_value(ctx, "precision")
    precision = str(value) if value else None

    generator, extra = load_checkpoint(checkpoint, precision)
    verbose_echo(ctx, f"Loaded {checkpoint} ({generator.config.core}, epoch {extra.get('epoch', '?')})")
    report = evaluate_test_sets(generator, test_dirs, workers)

    click.echo(table_to_markdown(report.summary_table()))
    path = export_table(report.per_image_table(), out_dir / "eval_per_image.csv")
    click.echo(f"Per-image PSNR: {path}")

    if compare:
        other, _ = load_checkpoint(compare, precision)
        other_report = evaluate_test_sets(other, test_dirs, workers)
        differences = compare_reports(report, other_report, top)
        click.echo(table_to_markdown(differences))
        export_table(differences, out_dir / "eval_compare.csv")
