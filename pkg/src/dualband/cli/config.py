"""Scenario configuration: schema, YAML loading, validation, hashing."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

import yaml

from ..errors import ConfigError
from ..geometry import ArrayConfig


def _angle_pairs(raw, name):
    pairs = []
    for item in raw:
        if len(item) != 2:
            raise ConfigError(f"{name} entries must be [elevation, azimuth]")
        pairs.append((float(item[0]), float(item[1])))
    return tuple(pairs)


def _per_item(raw, count, name):
    """Scalar broadcast or explicit per-item list."""
    if isinstance(raw, (int, float)):
        return [float(raw)] * count
    vals = [float(v) for v in raw]
    if len(vals) != count:
        raise ConfigError(f"{name} needs one value per item ({count})")
    return vals


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated experiment description (see the bundled example configs)."""

    array: dict
    users: dict
    thresholds: dict
    power: dict
    algorithm: dict
    run: dict
    figures: dict = field(default_factory=dict)

    def array_config(self, n_row: int | None = None,
                     n_s: int | None = None) -> ArrayConfig:
        a = self.array
        n = int(n_row if n_row is not None else a["n_row"])
        return ArrayConfig(
            n_row=n,
            n_col=int(n_row if n_row is not None else a["n_col"]),
            n_s=int(n_s if n_s is not None else a["n_s"]),
            n_rf=int(a.get("n_rf", 1)),
            h_s=int(a.get("h_s", 1)), v_s=int(a.get("v_s", 1)),
            lambda_ratio=float(a.get("lambda_ratio", 1.0 / 6.0)))

    @property
    def seeds(self) -> list[int]:
        return [int(s) for s in self.run["seeds"]]

    @property
    def pipelines(self) -> list[str]:
        return list(self.run.get("pipelines", ["sub6g", "mmwave"]))

    def sub6g_thresholds(self, k_s: int):
        t = self.thresholds
        targets = _angle_pairs(t.get("targets_sub", []), "targets_sub")
        gammas = _per_item(t.get("gamma", 10.0), k_s, "gamma")
        ups = _per_item(t.get("upsilon_s", 0.0), len(targets), "upsilon_s")
        return gammas, targets, ups

    def mm_thresholds(self):
        t = self.thresholds
        targets = _angle_pairs(t.get("targets_mm", []), "targets_mm")
        ups = _per_item(t.get("upsilon_m", 0.0), len(targets), "upsilon_m")
        return targets, ups

    @property
    def gain_convention(self) -> str:
        return str(self.thresholds.get("gain_convention", "squared"))

    def figure_block(self, figure_id: str) -> dict:
        return dict(self.figures.get(figure_id, {}))


_REQUIRED = {
    "array": ("n_row", "n_col", "n_s"),
    "users": ("k_s", "k_m", "l_s", "l_m"),
    "power": ("p_t",),
    "run": ("seeds",),
}
_BLOCKS = ("array", "users", "thresholds", "power", "algorithm", "run",
           "figures")


def parse_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(doc) - set(_BLOCKS)
    if unknown:
        raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
    for block, keys in _REQUIRED.items():
        if block not in doc or not isinstance(doc[block], dict):
            raise ConfigError(f"missing config block '{block}'")
        for key in keys:
            if key not in doc[block]:
                raise ConfigError(f"missing '{block}.{key}'")
    if not doc["run"]["seeds"]:
        raise ConfigError("run.seeds must be non-empty")
    cfg = ScenarioConfig(
        array=dict(doc["array"]), users=dict(doc["users"]),
        thresholds=dict(doc.get("thresholds", {})),
        power=dict(doc["power"]), algorithm=dict(doc.get("algorithm", {})),
        run=dict(doc["run"]), figures=dict(doc.get("figures", {})))
    try:
        cfg.array_config()
        cfg.sub6g_thresholds(int(cfg.users["k_s"]))
        cfg.mm_thresholds()
    except ConfigError:
        raise
    except Exception as exc:                     # consistency errors surface as config errors
        raise ConfigError(str(exc)) from exc
    if float(cfg.power["p_t"]) <= 0:
        raise ConfigError("power.p_t must be positive")
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return parse_config(doc)


def config_hash(cfg: ScenarioConfig) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def with_overrides(cfg: ScenarioConfig, **block_updates) -> ScenarioConfig:
    """New config with some blocks shallow-updated (sweeps use this)."""
    fields = {}
    for name, update in block_updates.items():
        merged = dict(getattr(cfg, name))
        merged.update(update)
        fields[name] = merged
    return replace(cfg, **fields)
