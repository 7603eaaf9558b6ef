"""Component-value configuration.

Component values are configuration, not ground truth: stage builders and the
validation oracles read the same flat key/value file, so the digital model is
always compared against an analog prototype computed from identical values.

File format: one ``name = value`` pair per line, ``#`` starts a comment.
Values are floats with an optional SI suffix (k, M, m, u, n, p).
"""

from __future__ import annotations

from importlib import resources

_SI_SUFFIXES = {
    "k": 1e3,
    "M": 1e6,
    "m": 1e-3,
    "u": 1e-6,
    "n": 1e-9,
    "p": 1e-12,
}


class ConfigError(ValueError):
    """Malformed configuration file or value."""


def parse_si(text: str) -> float:
    """Parse a numeric literal with an optional SI suffix, e.g. '4.7k'."""
    text = text.strip()
    if not text:
        raise ConfigError("empty value")
    scale = 1.0
    if text[-1] in _SI_SUFFIXES:
        scale = _SI_SUFFIXES[text[-1]]
        text = text[:-1]
    try:
        return float(text) * scale
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {text!r}") from exc


def parse_config(text: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'name = value', got {raw!r}")
        name, _, value = line.partition("=")
        name = name.strip()
        if not name:
            raise ConfigError(f"line {lineno}: missing name")
        values[name] = parse_si(value)
    return values


def default_config() -> dict[str, float]:
    """The component values shipped with the package."""
    text = resources.files("centaur.data").joinpath("components.cfg").read_text()
    return parse_config(text)


def load_config(path: str | None = None) -> dict[str, float]:
    """Load component values from `path`, or the shipped defaults if None.

    A user file only needs to list the keys it overrides; everything else
    falls back to the defaults.
    """
    values = default_config()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config(fh.read()))
    return values
