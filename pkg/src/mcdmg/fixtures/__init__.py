"""Bundled graph files for the figures discussed in the documentation."""

from __future__ import annotations

from importlib import resources

NAMES = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig3")


def fixture_path(name: str):
    """Filesystem path of a bundled ``.mcg`` fixture (``fig2b`` etc.)."""
    if not name.endswith(".mcg"):
        name = f"{name}.mcg"
    return resources.files(__package__).joinpath(name)


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")
