"""
make-fixtures - write the synthetic image set.
"""

from pathlib import Path

import click

from odesr.cli import get_ctx_value, handle_errors


@click.command("make-fixtures")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--count", default=10, show_default=True, help="Number of images")
@click.option("--size", default=64, show_default=True, help="Side length (multiple of 4)")
@click.option("--manifest", is_flag=True, help="Also write manifest.json with the train/val split")
@click.pass_context
@handle_errors
def make_fixtures(ctx: click.Context, out_dir: str, count: int, size: int, manifest: bool) -> None:
    """Write gradients, stripes and checkerboards as PNGs into OUT_DIR."""
    from odesr.data.dataset import Manifest
    from odesr.data.fixtures import write_fixture_set

    seed = get_ctx_value(ctx, "seed")
    paths = write_fixture_set(out_dir, count, size, 0 if seed is None else int(str(seed)))
    click.echo(f"Wrote {len(paths)} image(s) to {out_dir}")
    if manifest:
        root = Path(out_dir).resolve()
        path = Manifest.from_directory(root).save(root / "manifest.json")
        click.echo(f"Manifest: {path}")
