import logging

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.theme import Theme

custom_theme = Theme({
    "info": "dim cyan",
    "warning": "yellow",
    "error": "bold red",
    "success": "bold green",
})

console = Console(theme=custom_theme)


def setup_logging(verbose: bool = False) -> None:
    """Route library logging through the shared console."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=verbose, markup=False)],
        force=True,
    )


def print_quantities(title: str, values: dict[str, object]) -> None:
    """Two-column table of named scalars."""
    table = Table(title=title, show_header=False)
    table.add_column("quantity", style="bold")
    table.add_column("value")
    for name, value in values.items():
        if isinstance(value, float):
            value = f"{value:.12g}"
        table.add_row(name, str(value))
    console.print(table)
