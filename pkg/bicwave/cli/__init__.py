"""
Command-line front end.

Every command takes ``--config`` (a JSON run config or the name of a
bundled recipe), writes its outputs plus ``metadata.json`` to ``--out``,
and exits 0 on success, 2 on invalid input and 3 on numerical failure.
"""

import functools
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Type

import click
import numpy as np
import scipy
from rich.console import Console
from rich.table import Table

from bicwave import Runtime, __version__, create_runtime
from bicwave.cli.runconfig import RunConfig, bundled_recipes, load_run_config
from bicwave.core.config import Config
from bicwave.core.errors import BicwaveError
from bicwave.core.logging import WarningCollector
from bicwave.services import io

logger = logging.getLogger(__name__)

console = Console()


@dataclass
class RunContext:
    """Everything a command handler needs, plus what it reports back."""

    runtime: Runtime
    run: RunConfig
    out: Path
    workers: int
    timings: Dict[str, float] = field(default_factory=dict)
    geometry_hash: Optional[str] = None
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def config(self) -> Type[Config]:
        return self.runtime.config

    def path(self, name: str) -> Path:
        return self.out / name

    def timed(self, label: str):
        return _Timer(self.timings, label)


class _Timer:
    def __init__(self, sink: Dict[str, float], label: str):
        self.sink, self.label = sink, label

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.sink[self.label] = self.sink.get(self.label, 0.0) + time.perf_counter() - self.start


Handler = Callable[[RunContext], Dict[str, object]]


def versions() -> Dict[str, str]:
    return {
        "bicwave": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _default_out(source: str, command: str) -> Path:
    return Path("runs") / f"{command}-{Path(source).stem}"


def _metadata(run_ctx: Optional[RunContext], command: str, source: str, status: str,
              warnings, elapsed: float, summary: Optional[Dict] = None) -> Dict:
    record = {
        "command": command,
        "status": status,
        "config_source": source,
        "versions": versions(),
        "warnings": list(warnings),
        "timings": {"total": elapsed},
    }
    if run_ctx is not None:
        record["config"] = run_ctx.run.resolved()
        record["geometry_hash"] = run_ctx.geometry_hash
        record["timings"].update(run_ctx.timings)
        record["cache"] = {"hits": run_ctx.runtime.cache.hits, "misses": run_ctx.runtime.cache.misses}
        record.update(run_ctx.extra)
    if summary is not None:
        record["summary"] = summary
    return record


def print_summary(title: str, summary: Dict[str, object]) -> None:
    table = Table(title=title)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for key, value in summary.items():
        if isinstance(value, complex):
            value = f"{value.real:.10g} {value.imag:+.10g}i"
        elif isinstance(value, float):
            value = f"{value:.10g}"
        table.add_row(str(key), str(value))
    console.print(table)


def execute(command: str, handler: Handler, source: str, out: Optional[str],
            workers: Optional[int]) -> int:
    """
    Load the run config, run ``handler`` and record metadata.

    Errors are logged, written to ``error.json`` next to any partial
    outputs, and mapped to the exit code of their family.
    """
    runtime: Runtime = click.get_current_context().obj
    out_dir = Path(out) if out else _default_out(source, command)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    run_ctx: Optional[RunContext] = None

    with WarningCollector() as collected:
        try:
            run = load_run_config(source, command)
            run_ctx = RunContext(runtime, run, out_dir,
                                 workers or run.data.get("workers") or runtime.workers)
            logger.info(f"Running {command} from {run.source} into {out_dir}")
            summary = handler(run_ctx)
        except BicwaveError as exc:
            logger.error(f"{command} failed: [{exc.code}] {exc.message}")
            io.write_json(out_dir / "error.json", exc.to_dict())
            io.write_json(out_dir / "metadata.json", _metadata(
                run_ctx, command, source, "error", collected.messages,
                time.perf_counter() - start))
            console.print(f"[bold red]Error[/bold red] {exc.code}: {exc.message}")
            return exc.exit_code
        except Exception as exc:
            logger.exception(f"Unexpected error in {command}")
            payload = {
                "status": "error",
                "error": {"code": "INTERNAL_ERROR", "message": str(exc), "details": {}},
            }
            io.write_json(out_dir / "error.json", payload)
            console.print(f"[bold red]Unexpected error[/bold red]: {exc}")
            return 1

    io.write_json(out_dir / "metadata.json", _metadata(
        run_ctx, command, source, "ok", collected.messages, time.perf_counter() - start, summary))
    print_summary(f"{command} -> {out_dir}", summary)
    return 0


def run_options(func):
    """Shared --config / --out / --workers options."""

    @click.option("--config", "config_path", required=True,
                  help="Run config JSON file or bundled recipe name")
    @click.option("--out", "out", default=None, type=click.Path(file_okay=False),
                  help="Output directory (default: runs/<command>-<config>)")
    @click.option("--workers", type=click.IntRange(min=1), default=None,
                  help="Worker threads for contour solves")
    @functools.wraps(func)
    def wrapper(config_path, out, workers):
        code = func(config_path, out, workers)
        click.get_current_context().exit(code)

    return wrapper


@click.group()
@click.option("--env", default=None, help="Configuration environment (development, testing, production)")
@click.version_option(__version__, prog_name="bicwave")
@click.pass_context
def cli(ctx: click.Context, env: Optional[str]):
    """Resonant modes and bound states in the continuum of acoustic waveguides."""
    ctx.obj = create_runtime(env)


@cli.command("recipes")
def list_recipes():
    """List the bundled run configs."""
    for name in bundled_recipes():
        click.echo(name)


# Register commands
from bicwave.cli import commands  # noqa: E402,F401
