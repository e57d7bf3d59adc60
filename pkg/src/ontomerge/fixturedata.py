"""Access to the bibliography fixtures shipped with the package."""

from importlib import resources
from pathlib import Path

RUBY = "Ruby_bibliography"
NIAGARA = "Niagara_bib"
SIGMOD = "SigmodRecord"


def fixture_path(name: str) -> Path:
    """Absolute path of a shipped fixture file."""
    path = Path(str(resources.files("ontomerge") / "fixtures" / name))
    if not path.exists():
        raise FileNotFoundError(f"no shipped fixture named {name!r}")
    return path


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")
