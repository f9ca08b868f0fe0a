"""Superposition components for two detectors watched by zero or two observers.

Amplitudes are never stored. A component carries its square modulus
(``weight``) and its labels; the two-particle wavefunction only ever moves
weight between labelled components.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

# Canonical slot order used everywhere weights are summed (and by the kernels).
CODES = ("00", "10", "01", "11")
SLOT = {code: i for i, code in enumerate(CODES)}

DEFAULT_POSITIONS = (0.0, 10.0)


class Level(enum.Enum):
    GROUND = 0
    CAPTURE = 1


class BrainStatus(enum.Enum):
    ABSENT = "absent"
    READY = "ready"
    CONSCIOUS = "conscious"


class MeasurementMode(enum.Enum):
    OBSERVED = "observed"
    OBJECTIVE = "objective"


class StateError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorState:
    level: Level
    capture_coordinate: Optional[float] = None

    def __post_init__(self):
        if (self.level is Level.CAPTURE) != (self.capture_coordinate is not None):
            raise StateError("capture_coordinate must be set exactly when the detector has captured")


@dataclass(frozen=True)
class BrainState:
    observer_id: int
    status: BrainStatus


@dataclass(frozen=True)
class Component:
    detectors: tuple[DetectorState, ...]
    brains: tuple[BrainState, ...]
    weight: float = 0.0
    phantom: bool = False
    born_at: float = 0.0
    # Chosen by a reduction (or the prepared initial state). Drives the
    # objective-mode selection rule; in observed mode it mirrors "no ready brain".
    realized: bool = False
    decoherent: bool = False

    def __post_init__(self):
        if self.weight < 0:
            raise StateError(f"negative weight {self.weight!r}")
        ids = [b.observer_id for b in self.brains]
        if len(set(ids)) != len(ids):
            raise StateError("duplicate observer_id in component")

    @property
    def code(self) -> str:
        return "".join(str(d.level.value) for d in self.detectors)

    @property
    def slot(self) -> int:
        return SLOT[self.code]

    @property
    def n_captured(self) -> int:
        return sum(d.level is Level.CAPTURE for d in self.detectors)

    def label(self) -> tuple:
        return (self.code, tuple(b.status for b in self.brains))

    def describe(self) -> str:
        """Render like ``D1B1_D0B0_`` where a trailing underscore marks a conscious brain."""
        parts = []
        for i, det in enumerate(self.detectors):
            s = f"D{det.level.value}"
            brain = next((b for b in self.brains if b.observer_id == i), None)
            if brain is not None and brain.status is not BrainStatus.ABSENT:
                s += f"B{det.level.value}" + ("_" if brain.status is BrainStatus.CONSCIOUS else "")
            parts.append(s)
        return "".join(parts)

    def ready_observers(self) -> set[int]:
        return {b.observer_id for b in self.brains if b.status is BrainStatus.READY}


@dataclass(frozen=True)
class Superposition:
    components: tuple[Component, ...]
    edges: tuple = ()
    time: float = 0.0
    mode: MeasurementMode = MeasurementMode.OBJECTIVE
    allow_direct_fourth: bool = False
    selection_rule: bool = False
    positions: tuple[float, float] = DEFAULT_POSITIONS

    def index(self, code: str) -> Optional[int]:
        for i, comp in enumerate(self.components):
            if comp.code == code:
                return i
        return None

    def get(self, code: str) -> Optional[Component]:
        i = self.index(code)
        return None if i is None else self.components[i]

    def weight_of(self, code: str) -> float:
        """Weight of the component with detector code ``code``; 0.0 if it does not exist."""
        comp = self.get(code)
        return 0.0 if comp is None else comp.weight

    def weights(self) -> dict[str, float]:
        return {c.code: c.weight for c in self.components}


def total_modulus(state: Superposition) -> float:
    """Sum of square moduli, phantoms included, in canonical slot order."""
    total = 0.0
    for comp in sorted(state.components, key=lambda c: c.slot):
        total += comp.weight
    return total


def make_component(code: str, mode: MeasurementMode, positions: Sequence[float],
                   status: BrainStatus, weight: float = 0.0, born_at: float = 0.0,
                   realized: bool = False) -> Component:
    detectors = tuple(
        DetectorState(Level.CAPTURE, float(positions[i])) if ch == "1" else DetectorState(Level.GROUND)
        for i, ch in enumerate(code)
    )
    if mode is MeasurementMode.OBJECTIVE:
        status = BrainStatus.ABSENT
    brains = tuple(BrainState(i, status) for i in range(len(code)))
    return Component(detectors, brains, weight=weight, born_at=born_at, realized=realized,
                     decoherent=(mode is MeasurementMode.OBJECTIVE and "1" in code))


def build_objective_template(n_detectors: int = 2, allow_direct_fourth: bool = False,
                             selection_rule: bool = False,
                             positions: Sequence[float] = DEFAULT_POSITIONS,
                             t0: float = 0.0) -> Superposition:
    """Four components D0D0, D1D0, D0D1, D1D1 with no observers, weights (1, 0, 0, 0).

    Edges are the Hamiltonian's first-order captures plus the second-order
    routes through D1D0 and D0D1; ``allow_direct_fourth`` adds D0D0 -> D1D1.
    With ``selection_rule`` the second-order routes are closed until a
    reduction has realized one of the single-capture components.
    """
    if n_detectors != 2:
        raise StateError("only two detectors are supported")
    from .rules import derive_graph

    mode = MeasurementMode.OBJECTIVE
    root = make_component("00", mode, positions, BrainStatus.ABSENT, weight=1.0,
                          born_at=t0, realized=True)
    state = Superposition((root,), time=t0, mode=mode, allow_direct_fourth=allow_direct_fourth,
                          selection_rule=selection_rule, positions=tuple(map(float, positions)))
    return derive_graph(state)


def build_observed_template(positions: Sequence[float] = DEFAULT_POSITIONS,
                            t0: float = 0.0) -> Superposition:
    """Both detectors watched from the start: D0B0_D0B0_, D1B1D0B0, D0B0D1B1 with weights (1, 0, 0).

    No D1D1 component is created; the selection rule leaves it unreachable.
    """
    from .rules import derive_graph

    mode = MeasurementMode.OBSERVED
    root = make_component("00", mode, positions, BrainStatus.CONSCIOUS, weight=1.0,
                          born_at=t0, realized=True)
    state = Superposition((root,), time=t0, mode=mode, positions=tuple(map(float, positions)))
    return derive_graph(state)


def mark_phantom(state: Superposition, idx: int) -> Superposition:
    if not 0 <= idx < len(state.components):
        raise IndexError(f"component index {idx} out of range")
    comp = state.components[idx]
    if comp.phantom:
        return state
    comps = list(state.components)
    comps[idx] = replace(comp, phantom=True)
    edges = tuple(
        replace(e, active=False) if idx in (e.from_idx, e.to_idx) else e for e in state.edges
    )
    return replace(state, components=tuple(comps), edges=edges)
