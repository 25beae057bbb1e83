"""Tracker configuration and its ``key = value`` text form."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import InvalidValue, UnknownKey
from .optflow import LkParams


@dataclass(frozen=True)
class Config:
    L: int = 5  # detection interval, frames
    M: int = 10  # frames an unmatched track may coast
    Q: int = 10  # interest points sampled per track
    R: int = 3  # fewer surviving points than this ends the track
    epsilon: float = 0.7  # association gate on 1 - IoU
    tau_var: float = 2.0
    score_thresh: float = 0.2
    head_frac: float = 0.3
    erosion_iters: int = 2
    hotelling_confidence: float = 0.99
    seed: int = 0
    enable_segmentation: bool = True
    enable_continuation: bool = True
    enable_termination: bool = True
    lk: LkParams = field(default_factory=LkParams)

    def __post_init__(self):
        checks = [
            ("L", self.L >= 1),
            ("M", self.M >= 0),
            ("R", self.R >= 1),
            ("Q", self.Q >= self.R),
            ("epsilon", 0.0 <= self.epsilon <= 1.0),
            ("tau_var", self.tau_var > 0),
            ("score_thresh", 0.0 <= self.score_thresh <= 1.0),
            ("head_frac", 0.0 < self.head_frac <= 1.0),
            ("erosion_iters", self.erosion_iters >= 0),
            ("hotelling_confidence", 0.0 < self.hotelling_confidence < 1.0),
        ]
        for key, ok in checks:
            if not ok:
                raise InvalidValue(f"value {getattr(self, key)!r} out of range", key)


_LK_KEYS = {
    "lk_window_half": "window_half",
    "lk_levels": "levels",
    "lk_max_iters": "max_iters",
    "lk_epsilon": "epsilon",
    "lk_min_eigen": "min_eigen",
    "lk_max_residual": "max_residual",
}
_TYPES = {f.name: f.type for f in fields(Config) if f.name != "lk"}
_TYPES.update({k: f.type for f in fields(LkParams) for k, v in _LK_KEYS.items() if v == f.name})

CONFIG_KEYS = tuple(_TYPES)


def _convert(key: str, raw: str, kind: str):
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise InvalidValue(f"cannot parse {raw!r} as {kind}", key) from None


def parse_config(text: str, base: Config | None = None) -> Config:
    """Parse ``key = value`` lines (``#`` starts a comment) over the defaults."""
    values = {}
    lk_values = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidValue(f"expected 'key = value', got {line!r}", line)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise UnknownKey("unknown configuration key", key)
        value = _convert(key, raw, _TYPES[key])
        if key in _LK_KEYS:
            lk_values[_LK_KEYS[key]] = value
        else:
            values[key] = value
    base = base or Config()
    try:
        lk = replace(base.lk, **lk_values)
    except ValueError as exc:
        key = next(iter(lk_values), "lk")
        raise InvalidValue(str(exc), f"lk_{key}") from None
    return replace(base, lk=lk, **values)


def format_config(cfg: Config) -> str:
    lines = []
    for key in CONFIG_KEYS:
        value = getattr(cfg.lk, _LK_KEYS[key]) if key in _LK_KEYS else getattr(cfg, key)
        lines.append(f"{key} = {str(value).lower() if isinstance(value, bool) else value}")
    return "\n".join(lines) + "\n"
