"""
grad-check - finite-difference verification of every gradient backend.
"""

import click

from odesr.cli import get_ctx_value, handle_errors, verbose_echo
from odesr.core.exceptions import ConfigurationError


@click.command("grad-check")
@click.option("--filters", default=8, show_default=True, help="Feature channels of the check field")
@click.option("--augment", default=4, show_default=True, help="Augmented channels of the p>0 cells")
@click.option("--size", default=8, show_default=True, help="State height and width")
@click.option("--per-param", default=6, show_default=True, help="Sampled coordinates per parameter tensor")
@click.option("--threshold", default=1e-4, show_default=True, help="Maximum relative error")
@click.pass_context
@handle_errors
def grad_check(
    ctx: click.Context,
    filters: int,
    augment: int,
    size: int,
    per_param: int,
    threshold: float,
) -> None:
    """Compare all backends with central differences (12 cells, 64-bit)."""
    from odesr.training.grad_suite import assert_suite, gradient_check_suite

    precision = get_ctx_value(ctx, "precision")
    if precision not in (None, "f64"):
        raise ConfigurationError("grad-check runs in 64-bit only", field_name="precision", value=precision)
    seed = get_ctx_value(ctx, "seed")
    seed = 0 if seed is None else int(str(seed))

    verbose_echo(ctx, f"F={filters}, p={augment}, {size}x{size} state, {per_param} coordinates per tensor")
    result = gradient_check_suite(filters, augment, size, per_param=per_param, seed=seed)

    for cell in result.cells:
        verbose_echo(ctx, f"{cell.name}: {cell.rel_error:.3g}")
    for method in sorted({c.method for c in result.cells}):
        click.echo(f"{method:<14} max rel. error {result.max_error(method):.3e}")
    for key, value in sorted(result.agreement.items()):
        verbose_echo(ctx, f"discrete vs checkpointed {key}: {value:.3g}")

    assert_suite(result, threshold)
    click.echo(f"All {len(result.cells)} cells below {threshold:g}")
