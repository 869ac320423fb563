from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from fpp_local.local.report import ConvergenceReport


def _fmt(value: float, digits: int = 4) -> str:
    return "n/a" if value != value else f"{value:.{digits}f}"


class TemplateRenderer:
    def __init__(self):
        # fpp_local/renderer/templates
        self.template_path = Path(__file__).parent / "templates"
        self.env = Environment(
            loader=FileSystemLoader(self.template_path),
            autoescape=False,
            undefined=StrictUndefined,
            keep_trailing_newline=True,
        )
        self.env.filters["fmt"] = _fmt

    def render(self, report: ConvergenceReport) -> str:
        template = self.env.get_template("convergence.md.j2")
        data = report.to_json()
        return template.render(
            meta=data["meta"],
            limit=data["limit"],
            rows=data["rows"],
        )
