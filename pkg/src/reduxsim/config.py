"""Scenario configuration files (JSON).

Errors carry the line of the offending key so the CLI can point at it.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .dynamics import CurrentModel, compile_scenario
from .kernels import CompiledScenario
from .minkowski import BoundaryStrategy, LorentzFrame, SpacetimeEvent
from .rules import EDGE_KEYS
from .state import MeasurementMode, Superposition, build_objective_template, build_observed_template

KNOWN_KEYS = {
    "name", "description", "mode", "allow_direct_fourth", "selection_rule", "currents", "t_end", "dt",
    "strategy", "frames", "seed", "x_a", "x_b", "hits", "causality",
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class CausalityConfig:
    a_edge: str = "00->10"
    b_time: float = 0.5
    factor: float = 0.5


@dataclass(frozen=True)
class ScenarioConfig:
    mode: MeasurementMode = MeasurementMode.OBSERVED
    allow_direct_fourth: bool = False
    selection_rule: bool = False
    currents: CurrentModel = field(default_factory=CurrentModel)
    t_end: float = 1.0
    dt: float = 0.01
    strategy: BoundaryStrategy = BoundaryStrategy.HELLWIG_KRAUS
    frames: tuple[float, ...] = ()
    seed: Optional[int] = None
    x_a: float = 0.0
    x_b: float = 10.0
    hits: tuple[Optional[SpacetimeEvent], Optional[SpacetimeEvent]] = (None, None)
    causality: Optional[CausalityConfig] = None
    name: str = ""

    def template(self) -> Superposition:
        positions = (self.x_a, self.x_b)
        if self.mode is MeasurementMode.OBSERVED:
            return build_observed_template(positions=positions)
        return build_objective_template(allow_direct_fourth=self.allow_direct_fourth,
                                        selection_rule=self.selection_rule, positions=positions)

    def compiled(self) -> CompiledScenario:
        return compile_scenario(self.template(), self.currents, self.t_end, self.dt)

    def lorentz_frames(self) -> list[LorentzFrame]:
        return [LorentzFrame(v) for v in self.frames]

    def with_currents(self, currents: CurrentModel) -> "ScenarioConfig":
        return replace(self, currents=currents)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "mode": self.mode.value,
            "allow_direct_fourth": self.allow_direct_fourth,
            "selection_rule": self.selection_rule,
            "currents": self.currents.to_dict(),
            "t_end": self.t_end,
            "dt": self.dt,
            "strategy": self.strategy.value,
            "frames": list(self.frames),
            "seed": self.seed,
            "x_a": self.x_a,
            "x_b": self.x_b,
        }
        if self.causality is not None:
            c = self.causality
            d["causality"] = {"a_edge": c.a_edge, "b_time": c.b_time, "factor": c.factor}
        return d


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def _number(d: dict, key: str, default, fail) -> float:
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        fail(key, f"{key!r} must be a number")
    return float(v)


def _flag(d: dict, key: str, fail) -> bool:
    v = d.get(key, False)
    if not isinstance(v, bool):
        fail(key, f"{key!r} must be true or false")
    return v


def parse_config(data: dict, text: str = "", source: str = "<config>") -> ScenarioConfig:
    def fail(key, msg):
        raise ConfigError(msg, _line_of(text, key), source)

    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", 1, source)
    for key in data:
        if key not in KNOWN_KEYS:
            fail(key, f"unknown key {key!r}")

    try:
        mode = MeasurementMode(data.get("mode", "observed"))
    except ValueError:
        fail("mode", f"mode must be 'observed' or 'objective', got {data.get('mode')!r}")
    try:
        strategy = BoundaryStrategy(data.get("strategy", "hellwig_kraus"))
    except ValueError:
        fail("strategy", "strategy must be 'hellwig_kraus' or 'aharonov_albert'")

    allow = _flag(data, "allow_direct_fourth", fail)
    rule = _flag(data, "selection_rule", fail)
    if mode is MeasurementMode.OBSERVED and (allow or rule):
        fail("allow_direct_fourth" if allow else "selection_rule",
             "allow_direct_fourth and selection_rule apply to objective mode only")

    raw = data.get("currents", {})
    if not isinstance(raw, dict):
        fail("currents", "'currents' must map edge keys to profiles")
    profiles = {}
    for key, entry in raw.items():
        if key not in EDGE_KEYS:
            fail(key, f"unknown edge {key!r}; expected one of {list(EDGE_KEYS)}")
        if not isinstance(entry, dict):
            fail(key, f"profile for {key!r} must be an object")
        try:
            profiles[key] = CurrentModel.from_dict({key: entry}).profiles[key]
        except (KeyError, TypeError, ValueError) as exc:
            fail(key, f"bad profile for {key!r}: {exc}")
    if "00->11" in profiles and not allow:
        fail("00->11", "current on 00->11 requires allow_direct_fourth")

    t_end = _number(data, "t_end", 1.0, fail)
    dt = _number(data, "dt", 0.01, fail)
    if not t_end > 0:
        fail("t_end", "t_end must be positive")
    if not dt > 0:
        fail("dt", "dt must be positive")

    frames = data.get("frames", [])
    if not isinstance(frames, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in frames):
        fail("frames", "'frames' must be a list of velocities")
    if any(not abs(v) < 1 for v in frames):
        fail("frames", "every frame velocity must satisfy |v| < 1")

    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        fail("seed", "seed must be a nonnegative integer")

    hits: list[Optional[SpacetimeEvent]] = [None, None]
    if "hits" in data:
        h = data["hits"]
        if not isinstance(h, dict) or not set(h) <= {"a", "b"}:
            fail("hits", "'hits' must be an object with optional 'a' and 'b' [t, x] pairs")
        for i, k in enumerate(("a", "b")):
            if k in h:
                pair = h[k]
                if not (isinstance(pair, list) and len(pair) == 2
                        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)):
                    fail("hits", f"hit {k!r} must be a [t, x] pair")
                hits[i] = SpacetimeEvent(float(pair[0]), float(pair[1]))

    causality = None
    if "causality" in data:
        c = data["causality"]
        if not isinstance(c, dict):
            fail("causality", "'causality' must be an object")
        causality = CausalityConfig(
            a_edge=c.get("a_edge", "00->10"),
            b_time=_number(c, "b_time", 0.5, fail),
            factor=_number(c, "factor", 0.5, fail),
        )
        if causality.a_edge not in ("00->10", "00->01"):
            fail("a_edge", "a_edge must be a first-order capture edge")
        if not causality.factor >= 0:
            fail("factor", "factor must be nonnegative")

    return ScenarioConfig(
        mode=mode, allow_direct_fourth=allow, selection_rule=rule, currents=CurrentModel(profiles),
        t_end=t_end, dt=dt, strategy=strategy, frames=tuple(float(v) for v in frames), seed=seed,
        x_a=_number(data, "x_a", 0.0, fail), x_b=_number(data, "x_b", 10.0, fail),
        hits=tuple(hits), causality=causality, name=str(data.get("name", "")),
    )


def bundled_names() -> list[str]:
    pkg = resources.files("reduxsim") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def _resolve(path_or_name: str) -> tuple[str, str]:
    p = Path(path_or_name)
    if p.exists():
        return p.read_text(), str(p)
    name = path_or_name[:-5] if path_or_name.endswith(".json") else path_or_name
    res = resources.files("reduxsim") / "scenarios" / f"{name}.json"
    if res.is_file():
        return res.read_text(), f"{name}.json"
    raise ConfigError(f"no such config file or bundled scenario: {path_or_name}", source=path_or_name)


def load_config(path_or_name: str) -> ScenarioConfig:
    """Load a config file, or a bundled scenario by name (e.g. ``observed_sequential``)."""
    text, source = _resolve(path_or_name)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    cfg = parse_config(data, text, source)
    if not cfg.name:
        cfg = replace(cfg, name=Path(source).stem)
    return cfg
