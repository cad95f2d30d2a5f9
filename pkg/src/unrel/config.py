"""Run configuration: flat ``key=value`` files with ``UNREL_<KEY>`` environment overrides."""

from __future__ import annotations

import hashlib
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .graph import GraphInputError


@dataclass(frozen=True)
class RecursionConfig:
    seed: int = 0
    # base case and Monte Carlo
    n0: int = 13
    mc_prepass_const: float = 48.0
    mc_groups: int = 9
    mc_boost_const: float = 4.0
    # packing and layering
    delta: float | None = None
    pack_rounds: int | None = None
    surrogate_slack: float = 8.0
    # reliable sampler
    j_cap_const: float = 8.0
    load_cap_const: float = 2.0
    sparse_trees_const: float = 8.0
    reliable_samples_const: float = 8.0
    reliable_log_power: float = 3.0
    bootstrap_groups: int = 9
    bootstrap_const: float = 4.0
    shape_hard_const: float = 64.0
    retries: int = 3
    # very reliable sampler
    vr_c0: float = 20.0
    vr_delta: float = 0.03
    vr_pack_rounds: int | None = None
    vr_cut_factor: float = 1.1
    # recursion
    c_s: float = 6.0
    c_alpha: float = 6.0
    c_R: float = 4.0
    c_V: float = 1.0
    depth_factor: float = 4.0
    time_budget: float | None = None
    query_cap: int = 64

    def with_(self, **kw) -> "RecursionConfig":
        return replace(self, **kw)

    def digest(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def as_text(self) -> str:
        return "".join(f"{k}={'' if v is None else v}\n" for k, v in asdict(self).items())


_TYPES = {f.name: f.type for f in fields(RecursionConfig)}


def _coerce(key: str, raw: str):
    kind = str(_TYPES[key])
    raw = raw.strip()
    if "None" in kind and raw.lower() in ("", "none"):
        return None
    try:
        if kind.startswith("int"):
            return int(raw)
        return float(raw)
    except ValueError:
        raise GraphInputError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or key not in _TYPES:
            raise GraphInputError(f"config line {lineno}: unknown or malformed entry {line!r}")
        out[key] = _coerce(key, val)
    return out


def load_config(path: str | Path | None = None, env=None, **overrides) -> RecursionConfig:
    """Defaults, then the file, then UNREL_* variables, then explicit keyword overrides."""
    values: dict = {}
    if path:
        values.update(parse_config_text(Path(path).read_text()))
    env = os.environ if env is None else env
    for key in _TYPES:
        var = f"UNREL_{key.upper()}"
        if var in env:
            values[key] = _coerce(key, env[var])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RecursionConfig(**values)
