"""Frozen constant budgets for the bound certifications.

The decay statements being verified carry unspecified constants, so each
certification compares its measured sup ratio against a budget frozen at 10x
the observed sup of a reference run (see data/budgets.json).  Regressions
show up as budget violations; genuine unboundedness shows up as a growth
trend regardless of budget.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

_override_path: Path | None = None


def _budget_file():
    return resources.files("decaylab.data").joinpath("budgets.json")


def use_budgets_file(path=None) -> None:
    """Point load_budgets at an external JSON file (None restores the frozen
    packaged budgets)."""
    global _override_path
    _override_path = Path(path) if path else None
    load_budgets.cache_clear()


@lru_cache(maxsize=1)
def load_budgets() -> dict:
    if _override_path is not None:
        return json.loads(_override_path.read_text())
    with _budget_file().open("r") as fh:
        return json.load(fh)


def save_budgets(budgets: dict) -> None:
    """Rewrite the frozen budget file (calibration runs only)."""
    with _budget_file().open("w") as fh:
        json.dump(budgets, fh, indent=2, sort_keys=True)
        fh.write("\n")
    load_budgets.cache_clear()
