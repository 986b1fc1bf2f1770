"""The shipped corpus of small categories used throughout the test batteries.

See README.md in this directory for what each category exercises.
"""
from __future__ import annotations

import json
from importlib import resources

from ..fincat import FiniteCategory, validate_category

NAMES = ("ONE", "ARROW", "PAR", "DISC2", "Z2", "CHAIN3", "SPLIT")

_LOADED: dict[str, FiniteCategory] = {}


def load(name: str) -> FiniteCategory:
    if name not in _LOADED:
        if name not in NAMES:
            raise KeyError(f"unknown corpus category {name!r}; have {NAMES}")
        raw = json.loads(resources.files(__package__).joinpath(f"{name}.json").read_text())
        _LOADED[name] = validate_category(raw)
    return _LOADED[name]


def all_categories() -> dict[str, FiniteCategory]:
    return {name: load(name) for name in NAMES}
