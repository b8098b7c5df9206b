"""Run configuration: built-in defaults, TOML config files, CLI overlay."""

from __future__ import annotations

from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

MODES = ("sum", "max")
COLUMN_ORDERS = ("sro", "ors")
UNLIMITED_WORDS = ("unlimited", "none", "inf")

# Fields that accept an integer or "unlimited" (stored as None).
_COUNT_FIELDS = ("alpha", "beta", "answer_cap", "top_k")


def parse_count(value) -> int | None:
    """Parse an int-or-unlimited knob from CLI/TOML input."""
    if value is None:
        return None
    if isinstance(value, str):
        if value.lower() in UNLIMITED_WORDS:
            return None
        try:
            value = int(value)
        except ValueError:
            raise ValueError(
                f"expected an integer or 'unlimited', got {value!r}"
            ) from None
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"expected an integer or 'unlimited', got {value!r}")
    if value < 1:
        raise ValueError(f"count parameters must be >= 1, got {value}")
    return value


@dataclass
class RunConfig:
    """All knobs of a mining/evaluation run.

    Defaults are the settings the standard benchmarks are usually run with;
    per-dataset config files override them (WN18RR wants max_len 6, FB15K-237
    wants beta 200), and CLI flags override config files.
    """

    train: str | None = None
    valid: str | None = None
    test: str | None = None
    max_len: int = 3
    alpha: int | None = 100
    beta: int | None = 100
    answer_cap: int | None = 5
    top_k: int | None = 300
    mode: str = "sum"
    seed: int = 0
    path_weight: str = "markov"
    workers: int = 1
    column_order: str = "sro"
    rules_out: str | None = None
    metrics_out: str | None = None
    report_out: str | None = None

    def validate(self) -> "RunConfig":
        from .mining import PATH_WEIGHTS

        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")
        for name in _COUNT_FIELDS:
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1 or unlimited, got {value}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.path_weight not in PATH_WEIGHTS:
            raise ValueError(
                f"path_weight must be one of {PATH_WEIGHTS}, got {self.path_weight!r}"
            )
        if not isinstance(self.seed, int) or abs(self.seed) >= 2**64:
            raise ValueError(f"seed must be a 64-bit integer, got {self.seed!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.column_order not in COLUMN_ORDERS:
            raise ValueError(
                f"column_order must be one of {COLUMN_ORDERS}, got {self.column_order!r}"
            )
        return self

    def summary(self) -> dict:
        """Config as a JSON-friendly dict (for metrics/timing reports).

        Output locations are omitted: they say where a report went, not what
        was run, and identical runs should serialize identically.
        """
        out = {}
        for field in fields(self):
            if field.name.endswith("_out"):
                continue
            value = getattr(self, field.name)
            if field.name in _COUNT_FIELDS and value is None:
                value = "unlimited"
            out[field.name] = value
        return out


def load_config_file(path) -> dict:
    """Read a flat TOML config; keys must match RunConfig fields."""
    with open(path, "rb") as handle:
        raw = tomllib.load(handle)
    valid_names = {field.name for field in fields(RunConfig)}
    unknown = sorted(set(raw) - valid_names)
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {', '.join(unknown)}")
    for name in _COUNT_FIELDS:
        if name in raw:
            raw[name] = parse_count(raw[name])
    return raw


def make_config(file_values: dict | None = None, cli_values: dict | None = None) -> RunConfig:
    """Defaults, overridden by config-file values, overridden by CLI values.

    Each layer must contain only keys that were explicitly set (a None value
    means "unlimited" for count fields, not "unset").
    """
    merged: dict = {}
    for layer in (file_values, cli_values):
        if layer:
            merged.update(layer)
    config = RunConfig(**merged)
    return config.validate()
