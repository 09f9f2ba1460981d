"""Main entry point for the seqeb CLI."""
from importlib import metadata

import typer
from rich.console import Console
from rich.panel import Panel

from . import __version__
from .cli import filter as filter_cmd
from .cli import mcmc, predict, report, simulate
from .diagnostics import JSON_ERRORS, handle_errors
from .log import configure_logging
from .output import OutputFormat, print_output

app = typer.Typer(
    name="seqeb",
    help="seqeb - online empirical Bayes filtering for spatiotemporal count data",
    add_completion=True,
)
console = Console()

DEPENDENCIES = ("numpy", "scipy", "pandas", "typer", "rich")


@app.callback()
def main(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="-v for info, -vv for debug logging"),
    json_errors: bool = typer.Option(False, "--json-errors", help="Print errors as JSON on stderr"),
) -> None:
    """Sequential EB estimation of the spatial range with SMC chains."""
    configure_logging(verbose)
    JSON_ERRORS["enabled"] = json_errors


app.command("simulate")(handle_errors(simulate.simulate_command))
app.command("filter")(handle_errors(filter_cmd.filter_command))
app.command("mcmc")(handle_errors(mcmc.mcmc_command))
app.command("predict")(handle_errors(predict.predict_command))
app.command("report")(handle_errors(report.report_command))


def _installed(name: str) -> str:
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return "not installed"


@app.command()
def version(
    output_format: OutputFormat = typer.Option(OutputFormat.TEXT, "--format", "-f", help="Output format"),
) -> None:
    """Show version and dependency info."""
    if output_format == OutputFormat.JSON:
        info = {"seqeb": __version__, "dependencies": {name: _installed(name) for name in DEPENDENCIES}}
        print_output(info, output_format, console=console)
        return
    deps = "\n".join(f"  [cyan]{name}[/] {_installed(name)}" for name in DEPENDENCIES)
    console.print(Panel(
        f"[bold bright_cyan]seqeb[/bold bright_cyan]\n\n"
        f"[bold]Version:[/] {__version__}\n\n"
        "[bold bright_magenta]Dependencies:[/bold bright_magenta]\n"
        f"{deps}",
        title="[bold]About[/]",
        border_style="bright_cyan",
    ))


if __name__ == "__main__":
    app()
