"""Read-only reference tables (published figures, not reproduction targets)."""
import json
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def reference_tables() -> dict:
    text = resources.files(__name__).joinpath("reference_tables.json").read_text(encoding="utf-8")
    return json.loads(text)


def table(name: str) -> dict:
    return reference_tables()[name]
