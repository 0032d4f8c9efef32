"""
upscale - super-resolve one PNG with a trained checkpoint.
"""

import click

from odesr.cli import get_ctx_value, handle_errors, run_config, verbose_echo


@click.command()
@click.argument("input_png", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_png", type=click.Path(dir_okay=False))
@click.option("--checkpoint", "-k", type=click.Path(exists=True, dir_okay=False), help="Trained generator")
@click.pass_context
@handle_errors
def upscale(ctx: click.Context, input_png: str, output_png: str, checkpoint: str | None) -> None:
    """Write a x4 super-resolved copy of INPUT_PNG to OUTPUT_PNG.

    Without --checkpoint an untrained generator built from the run config is
    used (its ODE core starts as the identity flow).
    """
    from odesr.data.image_io import load_png, save_png
    from odesr.models.checkpoint import load_checkpoint
    from odesr.models.generator import Generator
    from odesr.training.evaluation import super_resolve

    if checkpoint:
        value = get_ctx_value(ctx, "precision")
        generator, _ = load_checkpoint(checkpoint, str(value) if value else None)
    else:
        config = run_config(ctx)
        generator = Generator(config.train.generator, seed=config.train.seed, precision=config.train.precision)

    image = load_png(input_png).data
    output, metadata = super_resolve(generator, image)
    path = save_png(output, output_png)

    verbose_echo(ctx, f"{metadata.core} core: {metadata.nfe} evaluations, {metadata.steps} steps")
    click.echo(f"{image.shape[2]}x{image.shape[1]} -> {output.shape[2]}x{output.shape[1]}: {path}")
