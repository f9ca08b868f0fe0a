"""Weight transport along coupling edges and stochastic hit sampling.

Hits follow the hazard ``sum(J_n) / s`` over components with positive net
inflow. A run draws a unit-exponential clock, accumulates the integrated
hazard step by step and fires a hit where the clock is crossed; the hit time
is interpolated inside the step and the chosen component is drawn in
proportion to each component's share of that step's hazard. Per-step
integrals of the current profiles are exact, so the only discretisation is
the within-step interpolation and the explicit weight update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import kernels
from .kernels import (
    KIND_CONSTANT,
    KIND_GAUSSIAN,
    KIND_WINDOW,
    STEP_GUARD,
    CompiledScenario,
    StepSizeError,
    profile_antideriv,
    profile_rate,
    profile_tail,
)
from .minkowski import BoundaryStrategy, SpacetimeEvent
from .rules import EDGE_KEYS, ReductionEvent, apply_reduction, capture_events
from .state import CODES, SLOT, MeasurementMode, Superposition, mark_phantom, total_modulus

__all__ = [
    "Constant",
    "CurrentModel",
    "GaussianPulse",
    "RunLog",
    "StepSizeError",
    "Window",
    "compile_scenario",
    "hazard",
    "run_scenario",
    "sample_hit",
    "step",
]


# -- current profiles ---------------------------------------------------------

class _Profile:
    kind: int = 0

    def params(self) -> tuple[float, float, float]:
        raise NotImplementedError

    def at(self, t: float) -> float:
        return profile_rate(self.kind, *self.params(), t)

    def integral(self, a: float, b: float) -> float:
        p = self.params()
        return profile_antideriv(self.kind, *p, b) - profile_antideriv(self.kind, *p, a)

    def tail(self, t: float) -> float:
        return profile_tail(self.kind, *self.params(), t)

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Constant(_Profile):
    rate: float

    kind = KIND_CONSTANT

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")

    def params(self):
        return (float(self.rate), 0.0, 0.0)

    def scaled(self, factor: float) -> "Constant":
        return Constant(self.rate * factor)

    def to_dict(self) -> dict:
        return {"kind": "constant", "rate": self.rate}


@dataclass(frozen=True)
class GaussianPulse(_Profile):
    peak: float
    center: float
    width: float

    kind = KIND_GAUSSIAN

    def __post_init__(self):
        if self.peak < 0:
            raise ValueError("peak must be nonnegative")
        if not self.width > 0:
            raise ValueError("width must be positive")

    def params(self):
        return (float(self.peak), float(self.center), float(self.width))

    def breakpoints(self):
        return (self.center,)

    def scaled(self, factor: float) -> "GaussianPulse":
        return GaussianPulse(self.peak * factor, self.center, self.width)

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "peak": self.peak, "center": self.center, "width": self.width}


@dataclass(frozen=True)
class Window(_Profile):
    rate: float
    start: float
    stop: float

    kind = KIND_WINDOW

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if not self.stop > self.start:
            raise ValueError("window stop must exceed start")

    def params(self):
        return (float(self.rate), float(self.start), float(self.stop))

    def breakpoints(self):
        return (self.start, self.stop)

    def scaled(self, factor: float) -> "Window":
        return Window(self.rate * factor, self.start, self.stop)

    def to_dict(self) -> dict:
        return {"kind": "window", "rate": self.rate, "start": self.start, "stop": self.stop}


Profile = Union[Constant, GaussianPulse, Window]


def profile_from_dict(d: dict) -> Profile:
    kind = d.get("kind")
    if kind == "constant":
        return Constant(float(d["rate"]))
    if kind == "gaussian":
        return GaussianPulse(float(d["peak"]), float(d["center"]), float(d["width"]))
    if kind == "window":
        return Window(float(d["rate"]), float(d["start"]), float(d["stop"]))
    raise ValueError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class CurrentModel:
    """Current profile per coupling edge, keyed like ``"00->10"``. Missing edges carry no current."""

    profiles: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = set(self.profiles) - set(EDGE_KEYS)
        if bad:
            raise ValueError(f"unknown edge keys {sorted(bad)}; expected a subset of {list(EDGE_KEYS)}")

    def get(self, key: str) -> Optional[Profile]:
        return self.profiles.get(key)

    def rate(self, key: str, t: float) -> float:
        p = self.profiles.get(key)
        return 0.0 if p is None else p.at(t)

    def antideriv(self, key: str, t: float) -> float:
        p = self.profiles.get(key)
        return 0.0 if p is None else profile_antideriv(p.kind, *p.params(), t)

    def tail(self, key: str, t: float) -> float:
        p = self.profiles.get(key)
        return 0.0 if p is None else p.tail(t)

    def inflow_profiles(self, code: str) -> list[Profile]:
        return [p for k, p in self.profiles.items() if k.endswith("->" + code)]

    def scaled(self, factor: float, keys=None) -> "CurrentModel":
        keys = set(self.profiles) if keys is None else set(keys)
        return CurrentModel({k: (p.scaled(factor) if k in keys else p) for k, p in self.profiles.items()})

    def to_dict(self) -> dict:
        return {k: p.to_dict() for k, p in self.profiles.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "CurrentModel":
        return cls({k: profile_from_dict(v) for k, v in d.items()})


# -- per-interval transport ---------------------------------------------------------

@dataclass
class _Interval:
    s: float
    transfers: list[float]     # per state edge, same order as state.edges
    exposure: list[float]      # per slot
    dl: float


def _interval(state: Superposition, model: CurrentModel, a: float, b: float) -> _Interval:
    comps = state.components
    s = total_modulus(state)
    nominal = []
    for e in state.edges:
        nominal.append(model.antideriv(e.key, b) - model.antideriv(e.key, a) if e.active else 0.0)
    out_tot = [0.0] * len(comps)
    for e, n in zip(state.edges, nominal):
        out_tot[e.from_idx] += n
    scale = [c.weight / o if o > c.weight else 1.0 for c, o in zip(comps, out_tot)]
    transfers = [n * scale[e.from_idx] for e, n in zip(state.edges, nominal)]
    net = [0.0] * len(comps)
    for e, tr in zip(state.edges, transfers):
        net[e.to_idx] += tr
        net[e.from_idx] -= tr
    exposure = [0.0] * len(CODES)
    for c, n in zip(comps, net):
        if n > 0.0 and not c.phantom:
            exposure[c.slot] = n / s
    dl = 0.0
    for x in exposure:
        dl += x
    return _Interval(s, transfers, exposure, dl)


def _apply_transfers(state: Superposition, transfers: list[float], t_new: float) -> Superposition:
    w = [c.weight for c in state.components]
    for e, tr in zip(state.edges, transfers):
        w[e.from_idx] -= tr
        w[e.to_idx] += tr
    comps = tuple(replace(c, weight=(x if x >= 0.0 else 0.0)) for c, x in zip(state.components, w))
    return replace(state, components=comps, time=t_new)


def _guard(iv: _Interval, dt: float) -> None:
    if iv.dl >= STEP_GUARD:
        raise StepSizeError(f"integrated hazard {iv.dl:.4g} per step reached {STEP_GUARD}; reduce dt (now {dt})")


def step(state: Superposition, model: CurrentModel, dt: float) -> Superposition:
    """Move weight along active edges over ``[t, t + dt]``.

    Each transfer is the exact integral of the edge's profile over the step,
    scaled down proportionally when a source would otherwise go negative.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    iv = _interval(state, model, state.time, state.time + dt)
    _guard(iv, dt)
    return _apply_transfers(state, iv.transfers, state.time + dt)


def hazard(state: Superposition, model: CurrentModel, t: float) -> tuple[float, dict[int, float]]:
    """Instantaneous hit rate: positive net inflow over total modulus, per component index."""
    s = total_modulus(state)
    if not s > 0:
        raise ValueError("total modulus is zero")
    net = [0.0] * len(state.components)
    for e in state.edges:
        if not e.active or state.components[e.from_idx].weight <= 0.0:
            continue
        j = model.rate(e.key, t)
        net[e.to_idx] += j
        net[e.from_idx] -= j
    per = {}
    for i, (c, n) in enumerate(zip(state.components, net)):
        per[i] = n / s if (n > 0.0 and not c.phantom) else 0.0
    return sum(per.values()), per


def _choose_slot(exposure: list[float], u: float, dl: float) -> int:
    target = u * dl
    acc = 0.0
    chosen = -1
    for slot, x in enumerate(exposure):
        if x > 0.0:
            chosen = slot
            acc += x
            if target < acc:
                break
    return chosen


def sample_hit(state: Superposition, model: CurrentModel, dt: float,
               rng: np.random.Generator) -> Optional[tuple[int, float]]:
    """At most one hit in ``[t, t + dt]``: ``(component index, hit time)`` or ``None``.

    The step fires with probability ``1 - exp(-H)`` where ``H`` is the
    integrated hazard over the step; the time inside the step follows the
    truncated exponential law for a constant rate.
    """
    iv = _interval(state, model, state.time, state.time + dt)
    _guard(iv, dt)
    if iv.dl <= 0.0:
        return None
    p = -math.expm1(-iv.dl)
    if rng.random() >= p:
        return None
    slot = _choose_slot(iv.exposure, rng.random(), iv.dl)
    frac = -math.log1p(-rng.random() * p) / iv.dl
    return state.index(CODES[slot]), state.time + frac * dt


# -- full runs ---------------------------------------------------------------------

@dataclass
class RunLog:
    seed: Optional[int]
    strategy: BoundaryStrategy
    positions: tuple[float, float]
    hits: list[ReductionEvent] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    weights: list[dict[str, float]] = field(default_factory=list)
    phantoms: list[tuple[float, str]] = field(default_factory=list)
    final_state: Optional[Superposition] = None
    max_step_drift: float = 0.0
    total_drift: float = 0.0
    max_w11_before_hit: float = 0.0

    def hit_events(self) -> tuple[Optional[SpacetimeEvent], Optional[SpacetimeEvent]]:
        """First capture event on detector 1 (A) and detector 2 (B)."""
        found: dict[int, SpacetimeEvent] = {}
        for h in self.hits:
            for det, ev in h.captures:
                found.setdefault(det, ev)
        return found.get(0), found.get(1)

    def to_dict(self) -> dict:
        final = self.final_state
        return {
            "seed": self.seed,
            "strategy": self.strategy.value,
            "positions": list(self.positions),
            "hits": [
                {
                    "index": h.chosen_idx,
                    "code": h.code,
                    "time": h.time,
                    "dual": h.dual,
                    "strategy": h.strategy.value,
                    "captures": [{"detector": d, "t": ev.t, "x": ev.x} for d, ev in h.captures],
                }
                for h in self.hits
            ],
            "trajectory": {"t": self.times, "weights": self.weights},
            "phantoms": [{"t": t, "code": c} for t, c in self.phantoms],
            "final_state": [
                {"code": c.code, "label": c.describe(), "weight": c.weight, "phantom": c.phantom}
                for c in (final.components if final is not None else ())
            ],
            "max_step_drift": self.max_step_drift,
            "total_drift": self.total_drift,
        }


def compile_scenario(template: Superposition, model: CurrentModel, t_end: float, dt: float) -> CompiledScenario:
    kinds = np.zeros(len(EDGE_KEYS), np.int64)
    params = np.zeros((len(EDGE_KEYS), 3))
    for i, key in enumerate(EDGE_KEYS):
        p = model.get(key)
        if p is not None:
            kinds[i] = p.kind
            params[i] = p.params()
    ham = np.array([True, True, True, True, template.allow_direct_fourth])
    rule_on = template.mode is MeasurementMode.OBSERVED or template.selection_rule
    return CompiledScenario(kinds, params, ham, bool(rule_on), float(t_end), float(dt))


def run_scenario(template: Superposition, model: CurrentModel, mode: Optional[MeasurementMode] = None,
                 strategy: BoundaryStrategy = BoundaryStrategy.HELLWIG_KRAUS, t_end: float = 1.0,
                 dt: float = 0.01, rng: Union[None, int, np.random.Generator] = None) -> RunLog:
    """Evolve ``template`` to ``t_end``, reducing at every sampled hit.

    ``rng`` may be a seed or a Generator; a run consumes exactly
    ``kernels.DRAWS_PER_RUN`` uniforms, drawn up front.
    """
    if mode is not None and mode is not template.mode:
        raise ValueError(f"template is in {template.mode.value} mode, not {mode.value}")
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be positive")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    uniforms = gen.random(kernels.DRAWS_PER_RUN)
    log = _simulate(template, model, strategy, t_end, dt, uniforms)
    log.seed = None if seed is None else int(seed)
    return log


def _simulate(template: Superposition, model: CurrentModel, strategy: BoundaryStrategy,
              t_end: float, dt: float, uniforms: np.ndarray) -> RunLog:
    log = RunLog(seed=None, strategy=strategy, positions=template.positions)
    state = replace(template, time=0.0)
    s_init = total_modulus(state)
    lam = 0.0
    thresh = kernels.clock_threshold(float(uniforms[0]))
    m11 = 0.0
    mdrift = 0.0
    log.times.append(0.0)
    log.weights.append(state.weights())

    for k in range(kernels.n_steps(t_end, dt)):
        t0 = k * dt
        t1 = min((k + 1) * dt, t_end)
        s_step = total_modulus(state)
        a = t0
        state = replace(state, time=a)
        while True:
            iv = _interval(state, model, a, t1)
            _guard(iv, dt)
            if iv.dl > 0.0 and lam + iv.dl >= thresh:
                frac = (thresh - lam) / iv.dl
                th = a + frac * (t1 - a)
                n = len(log.hits)
                slot = _choose_slot(iv.exposure, float(uniforms[2 * n + 1]), iv.dl)
                idx = state.index(CODES[slot])
                caps = capture_events(state, idx, th)
                ev = ReductionEvent(idx, th, strategy, CODES[slot], caps)
                state = apply_reduction(state, ev)
                log.hits.append(ev)
                lam = 0.0
                n += 1
                thresh = (kernels.clock_threshold(float(uniforms[2 * n]))
                          if n < kernels.MAX_HITS else math.inf)
                a = th
                continue
            state = _apply_transfers(state, iv.transfers, t1)
            lam += iv.dl
            break

        if not log.hits:
            m11 = max(m11, state.weight_of("11"))
        state = _mark_phantoms(state, model, t1, log)
        mdrift = max(mdrift, abs(total_modulus(state) - s_step))
        log.times.append(t1)
        log.weights.append(state.weights())

    log.final_state = state
    log.max_step_drift = mdrift
    log.total_drift = abs(total_modulus(state) - s_init)
    log.max_w11_before_hit = m11
    return log


def _mark_phantoms(state: Superposition, model: CurrentModel, t: float, log: RunLog) -> Superposition:
    """Freeze never-chosen components whose remaining in- and outflow integrate to zero."""
    for code in CODES:
        idx = state.index(code)
        if idx is None:
            continue
        comp = state.components[idx]
        if comp.realized or comp.phantom:
            continue
        fut = 0.0
        for e in state.edges:
            if e.active and idx in (e.from_idx, e.to_idx):
                fut += model.tail(e.key, t)
        if fut == 0.0:
            state = mark_phantom(state, idx)
            log.phantoms.append((t, code))
    return state


def batch_row_matches(log: RunLog, res: kernels.BatchResult, r: int) -> bool:
    """True if run ``r`` of a kernel batch reproduces ``log`` exactly."""
    if res.n_hits[r] != len(log.hits):
        return False
    for i, h in enumerate(log.hits):
        if res.hit_slot[r, i] != SLOT[h.code] or res.hit_time[r, i] != h.time:
            return False
        if res.hit_ncap[r, i] != len(h.captures):
            return False
    final = log.final_state
    for code in CODES:
        slot = SLOT[code]
        comp = final.get(code)
        if bool(res.final_exists[r, slot]) != (comp is not None):
            return False
        if comp is not None and res.final_weight[r, slot] != comp.weight:
            return False
    return (res.max_step_drift[r] == log.max_step_drift
            and res.total_drift[r] == log.total_drift
            and res.max_w11_before_hit[r] == log.max_w11_before_hit)
