# click command group
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from src.cli.formats import parse_instance
from src.cli.schemas import WHICH_CHOICES
from src.cli.service import render_report, render_summary, run_command, run_corpus
from src.config import overrides
from src.errors import BLError
from src.logger import set_level, setup_logger

logger = setup_logger(__name__)


def _settings_overrides(ctx: click.Context) -> dict:
    return ctx.obj["overrides"]


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _run(ctx: click.Context, instance_path: Path, command: str, which: str = "all", out: Optional[Path] = None,
         csv_dir: Optional[Path] = None) -> None:
    with overrides(**_settings_overrides(ctx)):
        try:
            instance = parse_instance(instance_path)
        except BLError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)
        report = run_command(instance, command, which=which, csv_dir=csv_dir, timestamp=ctx.obj["timestamp"])
    _emit(render_report(report), out)
    ctx.exit(report.exit_code)


instance_argument = click.argument("instance", type=click.Path(exists=True, dir_okay=False, path_type=Path))
out_option = click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
                          help="Write the report here instead of stdout.")


@click.group()
@click.option("--tol-rank", type=float, default=None, help="Relative singular-value cut for ranks.")
@click.option("--tol-eq", type=float, default=None, help="Tolerance for subset-sum equalities.")
@click.option("--grid-1d", type=int, default=None, help="Cells of 1-dim density grids.")
@click.option("--grid-2d", type=int, default=None, help="Cells per axis of 2-dim grids.")
@click.option("--timestamp", is_flag=True, default=False, help="Stamp reports with the UTC time.")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Console log level (stderr).")
@click.pass_context
def cli(ctx, tol_rank, tol_eq, grid_1d, grid_2d, timestamp, log_level):
    """Rank-one Brascamp-Lieb constants, extremizers and entropy checks."""
    ctx.ensure_object(dict)
    changes = {"RANK_TOL": tol_rank, "EQ_TOL": tol_eq, "GRID_1D": grid_1d, "GRID_2D": grid_2d}
    changes = {key: value for key, value in changes.items() if value is not None}
    try:
        with overrides(**changes):
            pass
    except ValidationError as e:
        raise click.BadParameter(e.errors()[0]["msg"])
    if log_level:
        set_level(log_level)
    ctx.obj["overrides"] = changes
    ctx.obj["timestamp"] = timestamp


@cli.command()
@instance_argument
@out_option
@click.pass_context
def feasibility(ctx, instance, out):
    """Membership of c in the polytope K_A."""
    _run(ctx, instance, "feasibility", out=out)


@cli.command()
@instance_argument
@out_option
@click.pass_context
def constant(ctx, instance, out):
    """D(A, c) with its splitting tree."""
    _run(ctx, instance, "constant", out=out)


@cli.command()
@instance_argument
@out_option
@click.pass_context
def frame(ctx, instance, out):
    """Frame matrix R turning the family into a tight frame."""
    _run(ctx, instance, "frame", out=out)


@cli.command()
@instance_argument
@out_option
@click.pass_context
def extremizers(ctx, instance, out):
    """Block structure and Gaussian covariance of the extremizers."""
    _run(ctx, instance, "extremizers", out=out)


@cli.command()
@instance_argument
@click.option("--which", type=click.Choice(WHICH_CHOICES + ("all",)), default="all", show_default=True)
@out_option
@click.option("--csv", "csv_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for heat-scan and box-sweep CSV series.")
@click.pass_context
def verify(ctx, instance, which, out, csv_dir):
    """Grid verification of the entropy, BL, Fisher and eigenvalue inequalities."""
    if csv_dir is not None:
        csv_dir.mkdir(parents=True, exist_ok=True)
    _run(ctx, instance, "verify", which=which, out=out, csv_dir=csv_dir)


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--which", type=click.Choice(WHICH_CHOICES + ("all", "none")), default="all", show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@out_option
@click.pass_context
def corpus(ctx, directory, which, jobs, out):
    """One summary line per *.inst file in DIRECTORY, sorted by name."""
    rows = run_corpus(directory, which=which, jobs=jobs, settings_overrides=_settings_overrides(ctx))
    _emit(render_summary(rows), out)
