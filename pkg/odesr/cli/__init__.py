"""
odesr CLI - Main entry point.

Usage:
    python -m odesr [global options] [command]
    odesr --config run.json --backend adjoint train
"""

import functools
import logging
import platform
import sys
from collections.abc import Callable
from importlib.metadata import PackageNotFoundError, version as get_pkg_version
from typing import Any, TypeVar

import click

import odesr
from odesr.core.config import BACKENDS, Precision, RunConfig, load_run_config
from odesr.core.exceptions import ConfigurationError, NumericError, OdesrError

F = TypeVar("F", bound=Callable[..., Any])

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def verbose_echo(ctx: click.Context, msg: str) -> None:
    """Print debug message if verbose mode is enabled.

    Args:
        ctx: Click context object (may have None obj in tests)
        msg: Message to print when verbose mode is enabled
    """
    if ctx.obj and ctx.obj.get("verbose"):
        click.echo(click.style(f"[verbose] {msg}", dim=True))


def get_ctx_value(ctx: click.Context, key: str, default: object = None) -> object:
    """Safely get a value from the Click context object.

    Handles the case where ctx.obj is None (e.g., in tests).
    """
    if ctx.obj is None:
        return default
    return ctx.obj.get(key, default)


def exit_code_for(error: OdesrError) -> int:
    """2 for configuration errors, 3 for numeric errors, 1 otherwise."""
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(error, NumericError):
        return EXIT_NUMERIC
    return EXIT_ERROR


def handle_errors(command: F) -> F:
    """Report OdesrError on stderr and exit with its code."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except OdesrError as e:
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(exit_code_for(e)) from None

    return wrapper  # type: ignore[return-value]


def run_config(ctx: click.Context) -> RunConfig:
    """The run configuration: --config file (or defaults) with global overrides applied.

    Raises:
        ConfigFileError: If --config names a missing or malformed file.
    """
    path = get_ctx_value(ctx, "config")
    config = load_run_config(str(path)) if path else RunConfig()
    seed = get_ctx_value(ctx, "seed")
    if seed is not None:
        config.train.seed = int(str(seed))
    precision = get_ctx_value(ctx, "precision")
    if precision is not None:
        config.train.precision = Precision.parse(str(precision))
    backend = get_ctx_value(ctx, "backend")
    if backend is not None:
        config.train.generator.backend = str(backend)
    out_dir = get_ctx_value(ctx, "out_dir")
    if out_dir is not None:
        config.out_dir = str(out_dir)
    verbose_echo(ctx, f"Config: {path or 'defaults'}, out dir {config.out_dir}")
    return config.validate()


# Create main CLI group
@click.group(invoke_without_command=True)
@click.option("--config", "-c", "config_path", type=click.Path(), help="Run config (JSON or YAML)")
@click.option("--seed", type=int, help="Override the run seed")
@click.option("--precision", type=click.Choice([p.value for p in Precision]), help="Numeric precision")
@click.option("--backend", type=click.Choice(list(BACKENDS)), help="Gradient backend of the ODE core")
@click.option("--out-dir", "-o", type=click.Path(), help="Output directory")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose debug output")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: str | None,
    seed: int | None,
    precision: str | None,
    backend: str | None,
    out_dir: str | None,
    verbose: bool,
) -> None:
    """odesr - neural-ODE super-resolution toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["config"] = config_path
    ctx.obj["seed"] = seed
    ctx.obj["precision"] = precision
    ctx.obj["backend"] = backend
    ctx.obj["out_dir"] = out_dir

    if verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(levelname)s %(name)s: %(message)s")

    # Show help if no command given
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


# Import and register commands
from odesr.cli.commands import analysis, fixtures, gradcheck, train, upscale  # noqa: E402

cli.add_command(train.train)
cli.add_command(train.eval_cmd)
cli.add_command(gradcheck.grad_check)
cli.add_command(analysis.nfe_report)
cli.add_command(analysis.stability_bench)
cli.add_command(analysis.model_table)
cli.add_command(upscale.upscale)
cli.add_command(fixtures.make_fixtures)


def _get_version(package_name: str) -> str | None:
    """Get version of a package, or None if not installed."""
    try:
        return get_pkg_version(package_name)
    except PackageNotFoundError:
        return None


@cli.command()
def version() -> None:
    """Show version information for odesr and dependencies."""
    click.echo(f"odesr {odesr.__version__}")
    click.echo(f"Python {sys.version.split()[0]} ({platform.system()} {platform.machine()})")
    click.echo()
    click.echo("Dependencies:")
    for display_name, pkg_name in [("numpy", "numpy"), ("pillow", "pillow"), ("click", "click"), ("pyyaml", "pyyaml")]:
        ver = _get_version(pkg_name)
        click.echo(f"  {display_name:<16} {ver if ver else 'not installed'}")


def main() -> None:
    """Entry point for the CLI."""
    cli(obj={})


if __name__ == "__main__":
    main()
