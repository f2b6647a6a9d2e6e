"""
Template loader for the plain-text reports.
Templates live next to this file and are rendered with Jinja2.
"""
import math
from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound

TEMPLATES_DIR = Path(__file__).parent


def format_number(value: Any) -> str:
    """Fixed rendering for report values: 12 significant digits, inf for infinity, yes/no for flags."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if value == 0.0:
            return "0"
        return f"{value:.12g}"
    return str(value)


def _environment() -> Environment:
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
        autoescape=False,
    )
    env.filters["num"] = format_number
    return env


_env = _environment()


def load_template(template_name: str):
    """
    Look up a template in the templates folder.

    Args:
        template_name: file name, with or without the .j2 extension
    """
    if not template_name.endswith(".j2"):
        template_name += ".j2"
    try:
        return _env.get_template(template_name)
    except TemplateNotFound:
        raise FileNotFoundError(f"Template {template_name} not found in {TEMPLATES_DIR}")


def render_template(template_name: str, **context: Any) -> str:
    """
    Render a template with the given context.

    Undefined variables raise instead of rendering empty.
    """
    return load_template(template_name).render(**context)


def get_available_templates() -> list[str]:
    return sorted(f.name for f in TEMPLATES_DIR.glob("*.j2"))
