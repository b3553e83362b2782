"""Flat key-value config text format shared by the anthropometric override
and scenario files.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Values are kept as strings here; callers convert. Floats are written with
``repr`` so a write/parse round trip is bit-exact.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Malformed config text; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(lineno, "empty key")
        if key in out:
            raise ConfigError(lineno, f"duplicate key {key!r}")
        out[key] = value
    return out


def format_kv(items: dict[str, object], header: str | None = None) -> str:
    lines = [] if header is None else [f"# {header}"]
    for key, value in items.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def get_float(kv: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in kv:
        if default is None:
            raise ConfigError(0, f"missing required key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigError(0, f"key {key!r}: {exc}") from exc


def get_bool(kv: dict[str, str], key: str, default: bool) -> bool:
    if key not in kv:
        return default
    value = kv[key].lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(0, f"key {key!r}: not a boolean: {kv[key]!r}")
