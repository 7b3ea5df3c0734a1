"""JSON tool configuration: model spectra, strategies, scan and NoRepeat settings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Union

import jsonschema

from .aliasing import DEFAULT_ALIAS_THRESHOLD, AliasScanParams
from .diagnostics import identify_intrinsic, period
from .errors import ConfigError, RiflexError
from .norepeat import NoRepeatConfig
from .rope import AxisRope, FrequencySpec, ModelRopeConfig, make_frequencies
from .serialize import load_schema
from .strategies import ExtrapolationParams, StrategyCall, TasrParams, YarnParams

PRESETS = ("hunyuan-temporal", "failure-modes-64")


@dataclass
class ToolConfig:
    model: ModelRopeConfig
    intrinsic: Dict[str, int] = field(default_factory=dict)
    observed_n: Dict[str, int] = field(default_factory=dict)
    strategies: Dict[str, StrategyCall] = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    norepeat: Optional[NoRepeatConfig] = None
    reference: dict = field(default_factory=dict)
    name: str = ""

    def scan_params(self, axis: str) -> AliasScanParams:
        sim = self.simulation
        subset = sim.get("component_subset")
        return AliasScanParams(
            alias_threshold=sim.get("alias_threshold", DEFAULT_ALIAS_THRESHOLD),
            min_separation=sim.get("min_separation") or math.ceil(self.model.axis(axis).train_len / 4),
            component_subset=frozenset(subset) if subset else None,
        )

    def sim_axis(self) -> str:
        return self.simulation.get("axis") or self.model.axes[0].axis_id

    def effective(self) -> dict:
        """The config with every default filled in, in config-file shape."""
        axes = []
        for a in self.model.axes:
            entry = {"axis": a.axis_id, "d_prime": a.spec.d_prime, "train_len": a.train_len}
            if a.spec.base is not None:
                entry["base"] = a.spec.base
            else:
                entry["thetas"] = list(a.spec.thetas)
            axes.append(entry)
        out = {"model": {"axes": axes}}
        if self.name:
            out["model"]["name"] = self.name
        if self.intrinsic:
            out["intrinsic"] = {}
            for axis, k in self.intrinsic.items():
                item = {"k": k, "period": period(self.model.axis(axis).spec.theta(k))}
                if axis in self.observed_n:
                    item["observed_n"] = self.observed_n[axis]
                out["intrinsic"][axis] = item
        if self.strategies:
            out["strategies"] = {axis: call_to_dict(c) for axis, c in self.strategies.items()}
        axis = self.sim_axis()
        scan = self.scan_params(axis)
        out["simulation"] = {
            "axis": axis,
            "positions": self.simulation.get("positions"),
            "alias_threshold": scan.alias_threshold,
            "min_separation": scan.min_separation,
            "component_subset": sorted(scan.component_subset) if scan.component_subset else None,
        }
        if self.norepeat is not None:
            out["norepeat"] = {
                "expected_period": self.norepeat.expected_period,
                "threshold": self.norepeat.threshold,
                "search_window": self.norepeat.search_window,
                "normalize": self.norepeat.normalize,
            }
        if self.reference:
            out["reference"] = self.reference
        return out


def call_to_dict(call: StrategyCall) -> dict:
    d = {"name": call.name, "scale": call.params.scale}
    if call.params.scale == call.params.target_len / call.params.train_len:
        d["target_len"] = call.params.target_len
    if call.k is not None:
        d["k"] = call.k
    if call.name == "yarn":
        yp = call.yarn or YarnParams()
        d.update(alpha=yp.alpha, beta=yp.beta)
    if call.tasr is not None:
        d.update(total_timesteps=call.tasr.total_timesteps, switch_timestep=call.tasr.switch_timestep)
    if call.timestep is not None:
        d["timestep"] = call.timestep
    return d


def _where(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _axis_spec(entry: dict, where: str) -> FrequencySpec:
    try:
        if "base" in entry:
            if "d_prime" not in entry:
                raise ConfigError(f"{where}.d_prime: required together with base")
            return make_frequencies(entry["base"], entry["d_prime"])
        if "thetas" in entry:
            spec = FrequencySpec.from_thetas(entry["thetas"])
        elif "periods" in entry:
            spec = FrequencySpec.from_periods(entry["periods"])
        else:
            raise ConfigError(f"{where}: one of base, thetas or periods is required")
    except ConfigError:
        raise
    except RiflexError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if "d_prime" in entry and entry["d_prime"] != spec.d_prime:
        raise ConfigError(f"{where}.d_prime: {entry['d_prime']} does not match {spec.n_components} components")
    return spec


def strategy_call(block: dict, axis: AxisRope, default_k: Optional[int] = None) -> StrategyCall:
    """Build a :class:`StrategyCall` from a config or CLI strategy block."""
    if "target_len" in block and block["target_len"] is not None:
        params = ExtrapolationParams(axis.train_len, block["target_len"])
    elif block.get("scale") is not None:
        params = ExtrapolationParams.from_scale(axis.train_len, block["scale"])
    else:
        raise ConfigError(f"strategies.{axis.axis_id}: scale or target_len is required")
    name = block["name"]
    yarn = None
    if name == "yarn":
        yarn = YarnParams(block.get("alpha", 1.0), block.get("beta", 32.0))
    tasr = None
    if name == "tasr":
        if "total_timesteps" not in block or "timestep" not in block:
            raise ConfigError(f"strategies.{axis.axis_id}: tasr needs total_timesteps and timestep")
        tasr = TasrParams(block["total_timesteps"], block.get("switch_timestep"))
    k = block.get("k", default_k)
    return StrategyCall(name=name, params=params, k=k, yarn=yarn, tasr=tasr, timestep=block.get("timestep"))


def parse_config(raw: dict) -> ToolConfig:
    validator = jsonschema.Draft202012Validator(load_schema("config"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_where(err.absolute_path)}: {err.message}")

    axes = []
    for i, entry in enumerate(raw["model"]["axes"]):
        where = f"model.axes[{i}]"
        try:
            axes.append(AxisRope(entry["axis"], _axis_spec(entry, where), entry["train_len"]))
        except ConfigError:
            raise
        except (RiflexError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    try:
        model = ModelRopeConfig(tuple(axes))
    except ValueError as exc:
        raise ConfigError(f"model.axes: {exc}") from None
    cfg = ToolConfig(model=model, name=raw["model"].get("name", ""), reference=raw.get("reference", {}))

    for axis_id, block in raw.get("intrinsic", {}).items():
        where = f"intrinsic.{axis_id}"
        try:
            spec = model.axis(axis_id).spec
        except RiflexError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if "observed_n" in block:
            cfg.observed_n[axis_id] = block["observed_n"]
            found = identify_intrinsic(spec, block["observed_n"]).k
            if "k" in block and block["k"] != found:
                raise ConfigError(f"{where}.k: {block['k']} disagrees with observed_n (closest period is k={found})")
            cfg.intrinsic[axis_id] = found
        elif "k" in block:
            if not 1 <= block["k"] <= spec.n_components:
                raise ConfigError(f"{where}.k: must lie in [1, {spec.n_components}]")
            cfg.intrinsic[axis_id] = block["k"]
        else:
            raise ConfigError(f"{where}: k or observed_n is required")

    for axis_id, block in raw.get("strategies", {}).items():
        where = f"strategies.{axis_id}"
        try:
            cfg.strategies[axis_id] = strategy_call(block, model.axis(axis_id), cfg.intrinsic.get(axis_id))
        except ConfigError:
            raise
        except (RiflexError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    cfg.simulation = dict(raw.get("simulation", {}))
    if "axis" in cfg.simulation:
        try:
            model.axis(cfg.simulation["axis"])
        except RiflexError as exc:
            raise ConfigError(f"simulation.axis: {exc}") from None
    subset = cfg.simulation.get("component_subset")
    if subset:
        n = model.axis(cfg.sim_axis()).spec.n_components
        if any(not 1 <= j <= n for j in subset):
            raise ConfigError(f"simulation.component_subset: indices must lie in [1, {n}]")

    if "norepeat" in raw:
        try:
            cfg.norepeat = NoRepeatConfig(**raw["norepeat"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"norepeat: {exc}") from None
    return cfg


def preset_path(name: str):
    return resources.files("riflex").joinpath("data", "presets", f"{name}.json")


def load_config(path: Union[str, Path]) -> ToolConfig:
    """Load and validate a config file; bare preset names resolve to bundled files."""
    path_str = str(path)
    p = Path(path_str)
    if not p.exists() and path_str in PRESETS:
        text = preset_path(path_str).read_text()
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path_str}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path_str}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)
