"""Selection rule, ready-state tagging and reductions on a :class:`Superposition`."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .minkowski import BoundaryStrategy, SpacetimeEvent
from .state import (
    CODES,
    BrainStatus,
    Component,
    MeasurementMode,
    StateError,
    Superposition,
    make_component,
    total_modulus,
)

# Hamiltonian couplings between detector codes, in the canonical edge order
# shared with the batch kernels. The last one is the direct second-order edge.
HAMILTONIAN_EDGES = (("00", "10"), ("00", "01"), ("10", "11"), ("01", "11"), ("00", "11"))
EDGE_KEYS = tuple(f"{a}->{b}" for a, b in HAMILTONIAN_EDGES)
DIRECT_EDGE = EDGE_KEYS[4]


class ReductionError(StateError):
    pass


@dataclass(frozen=True)
class TransitionEdge:
    from_idx: int
    to_idx: int
    key: str
    active: bool = True

    def __post_init__(self):
        if self.from_idx == self.to_idx:
            raise StateError("self-loop edge")


@dataclass(frozen=True)
class ReductionEvent:
    chosen_idx: int
    time: float
    strategy: BoundaryStrategy = BoundaryStrategy.HELLWIG_KRAUS
    code: str = ""
    # One event per detector that captured with this hit; two for a dual hit.
    captures: tuple[tuple[int, SpacetimeEvent], ...] = ()

    @property
    def event(self) -> Optional[SpacetimeEvent]:
        return self.captures[0][1] if self.captures else None

    @property
    def dual(self) -> bool:
        return len(self.captures) > 1


def _endpoint_forbidden(src: Component, tgt: Component, state: Superposition) -> bool:
    if src.ready_observers() & tgt.ready_observers():
        return True
    return (state.selection_rule and state.mode is MeasurementMode.OBJECTIVE
            and not src.realized and not tgt.realized)


def is_forbidden(edge: TransitionEdge, state: Superposition) -> bool:
    """True if both endpoints hold a ready brain of the same observer.

    In objective mode with ``state.selection_rule`` the same prohibition
    applies to transitions between two components that no reduction has
    realized yet.
    """
    comps = state.components
    return _endpoint_forbidden(comps[edge.from_idx], comps[edge.to_idx], state)


def tag_new_components(state: Superposition, new_idxs: Iterable[int]) -> Superposition:
    status = BrainStatus.READY if state.mode is MeasurementMode.OBSERVED else BrainStatus.ABSENT
    comps = list(state.components)
    for i in new_idxs:
        c = comps[i]
        comps[i] = replace(c, brains=tuple(replace(b, status=status) for b in c.brains))
    return replace(state, components=tuple(comps))


def derive_graph(state: Superposition) -> Superposition:
    """Instantiate every component the Hamiltonian can reach and rebuild the edge list.

    Successors are created with zero weight at ``state.time`` and tagged ready (observed) or
    without brains (objective). A successor whose only incoming couplings are forbidden is never
    created; forbidden couplings between existing components are dropped.
    """
    comps = list(state.components)
    by_code = {c.code: i for i, c in enumerate(comps)}
    pairs = HAMILTONIAN_EDGES if state.allow_direct_fourth else HAMILTONIAN_EDGES[:4]
    raw_edges = []
    for (src_code, tgt_code), key in zip(pairs, EDGE_KEYS):
        si = by_code.get(src_code)
        if si is None or comps[si].phantom:
            continue
        ti = by_code.get(tgt_code)
        if ti is None:
            candidate = make_component(tgt_code, state.mode, state.positions, BrainStatus.READY,
                                       born_at=state.time)
            probe = replace(state, components=(comps[si], candidate))
            probe = tag_new_components(probe, [1])
            candidate = probe.components[1]
            if _endpoint_forbidden(comps[si], candidate, state):
                continue
            comps.append(candidate)
            ti = by_code[tgt_code] = len(comps) - 1
        elif _endpoint_forbidden(comps[si], comps[ti], state):
            continue
        raw_edges.append((src_code, tgt_code, key, not comps[ti].phantom))

    comps.sort(key=lambda c: c.slot)
    order = {c.code: i for i, c in enumerate(comps)}
    edges = tuple(TransitionEdge(order[s], order[t], key, active) for s, t, key, active in raw_edges)
    return replace(state, components=tuple(comps), edges=edges)


def capture_events(state: Superposition, chosen_idx: int, t: float) -> tuple[tuple[int, SpacetimeEvent], ...]:
    """Detectors that capture when ``chosen_idx`` is selected, relative to the realized root."""
    root = next((c for c in state.components if c.realized), None)
    chosen = state.components[chosen_idx]
    out = []
    for i, det in enumerate(chosen.detectors):
        before = root.detectors[i].level if root is not None else None
        if det.capture_coordinate is not None and before is not det.level:
            out.append((i, SpacetimeEvent(t, det.capture_coordinate)))
    return tuple(out)


def apply_reduction(state: Superposition, ev: ReductionEvent) -> Superposition:
    """Keep only the chosen component, carrying the whole pre-hit modulus.

    Ready brains in the chosen component become conscious, all other
    components (phantoms included) drop to zero and are removed, then the
    Hamiltonian graph is re-derived from the survivor at ``ev.time``.
    """
    if not 0 <= ev.chosen_idx < len(state.components):
        raise IndexError(f"component index {ev.chosen_idx} out of range")
    chosen = state.components[ev.chosen_idx]
    if chosen.phantom:
        raise ReductionError(f"component {chosen.code} is a phantom and cannot be chosen")
    has_inflow = any(e.active and e.to_idx == ev.chosen_idx for e in state.edges)
    if chosen.weight == 0.0 and not has_inflow:
        raise ReductionError(f"component {chosen.code} has neither weight nor inflow")
    if (state.mode is MeasurementMode.OBJECTIVE and len(state.components) > 1
            and not chosen.decoherent and not chosen.realized):
        raise ReductionError(f"component {chosen.code} is not environmentally decoherent")

    s = total_modulus(state)
    brains = chosen.brains
    if state.mode is MeasurementMode.OBSERVED:
        brains = tuple(
            replace(b, status=BrainStatus.CONSCIOUS) if b.status is BrainStatus.READY else b
            for b in brains
        )
    survivor = replace(chosen, weight=s, brains=brains, realized=True, phantom=False)
    reduced = replace(state, components=(survivor,), edges=(), time=ev.time)
    return derive_graph(reduced)


def reachable_codes(state: Superposition) -> set[str]:
    """Detector codes reachable from the current components along admissible couplings.

    Walks the Hamiltonian graph symbolically (creating ready/absent-tagged
    candidates the way reductions do) without touching weights.
    """
    seen = {c.code for c in state.components if not c.phantom}
    frontier = [c for c in state.components if not c.phantom]
    pairs = HAMILTONIAN_EDGES if state.allow_direct_fourth else HAMILTONIAN_EDGES[:4]
    while frontier:
        src = frontier.pop()
        for a, b in pairs:
            if a != src.code or b in seen:
                continue
            cand = make_component(b, state.mode, state.positions, BrainStatus.READY)
            if not _endpoint_forbidden(src, cand, state):
                seen.add(b)
                frontier.append(cand)
    return seen


__all__ = [
    "CODES",
    "DIRECT_EDGE",
    "EDGE_KEYS",
    "HAMILTONIAN_EDGES",
    "ReductionError",
    "ReductionEvent",
    "TransitionEdge",
    "apply_reduction",
    "capture_events",
    "derive_graph",
    "is_forbidden",
    "reachable_codes",
    "tag_new_components",
]
