"""1+1 Minkowski geometry (c = 1): boosts, intervals and reduction boundaries.

Two ways of placing the boundary a reduction imposes on spacetime:

* Hellwig-Kraus: the backward light cone of the hit. The surface itself and
  everything forward of it carry the reduced solution. Frame independent.
* Aharonov-Albert: the constant-time line through the hit in whatever frame
  is used for evaluation. Frame dependent by construction.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class BoundaryStrategy(enum.Enum):
    AHARONOV_ALBERT = "aharonov_albert"
    HELLWIG_KRAUS = "hellwig_kraus"


class RegionLabel(enum.Enum):
    PRE_BOTH = "PreBoth"
    POST_A_ONLY = "PostAOnly"
    POST_B_ONLY = "PostBOnly"
    POST_BOTH = "PostBoth"

    @classmethod
    def from_flags(cls, post_a: bool, post_b: bool) -> "RegionLabel":
        if post_a and post_b:
            return cls.POST_BOTH
        if post_a:
            return cls.POST_A_ONLY
        if post_b:
            return cls.POST_B_ONLY
        return cls.PRE_BOTH


class IntervalKind(enum.Enum):
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class SpacetimeEvent:
    t: float
    x: float


@dataclass(frozen=True)
class LorentzFrame:
    v: float = 0.0

    def __post_init__(self):
        if not abs(self.v) < 1.0:
            raise ValueError(f"frame velocity must satisfy |v| < 1, got {self.v!r}")

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.v * self.v)


HOME = LorentzFrame(0.0)


def _frame(frame) -> LorentzFrame:
    return frame if isinstance(frame, LorentzFrame) else LorentzFrame(float(frame))


def boost(ev: SpacetimeEvent, frame) -> SpacetimeEvent:
    """Coordinates of ``ev`` seen from a frame moving with velocity ``frame.v``."""
    f = _frame(frame)
    if f.v == 0.0:
        return ev
    g = f.gamma
    return SpacetimeEvent(g * (ev.t - f.v * ev.x), g * (ev.x - f.v * ev.t))


@dataclass(frozen=True)
class Interval:
    kind: IntervalKind
    proper_time: Optional[float] = None


def interval(ev1: SpacetimeEvent, ev2: SpacetimeEvent) -> Interval:
    dt = ev2.t - ev1.t
    dx = ev2.x - ev1.x
    sq = dt * dt - dx * dx
    if sq > 0:
        return Interval(IntervalKind.TIMELIKE, math.sqrt(sq))
    if sq == 0:
        return Interval(IntervalKind.LIGHTLIKE)
    return Interval(IntervalKind.SPACELIKE)


def hk_boundary_time(hit: SpacetimeEvent, x: float) -> float:
    """Time of the hit's backward light cone above position ``x``."""
    return hit.t - abs(x - hit.x)


def classify_hk(ev: SpacetimeEvent, hit_a: Optional[SpacetimeEvent],
                hit_b: Optional[SpacetimeEvent]) -> RegionLabel:
    post_a = hit_a is not None and ev.t >= hk_boundary_time(hit_a, ev.x)
    post_b = hit_b is not None and ev.t >= hk_boundary_time(hit_b, ev.x)
    return RegionLabel.from_flags(post_a, post_b)


def classify_aa(ev: SpacetimeEvent, hit_a: Optional[SpacetimeEvent],
                hit_b: Optional[SpacetimeEvent], frame=HOME) -> RegionLabel:
    """Label ``ev`` against constant-time boundaries through each hit, in ``frame``."""
    f = _frame(frame)
    t_ev = boost(ev, f).t
    post_a = hit_a is not None and t_ev >= boost(hit_a, f).t
    post_b = hit_b is not None and t_ev >= boost(hit_b, f).t
    return RegionLabel.from_flags(post_a, post_b)


def classify(ev: SpacetimeEvent, hit_a: Optional[SpacetimeEvent], hit_b: Optional[SpacetimeEvent],
             strategy: BoundaryStrategy, frame=HOME) -> RegionLabel:
    if strategy is BoundaryStrategy.HELLWIG_KRAUS:
        return classify_hk(ev, hit_a, hit_b)
    return classify_aa(ev, hit_a, hit_b, frame)


# -- hit-count invariance ----------------------------------------------------

def _distinct_times(times: Sequence[float], tol: float) -> int:
    out: list[float] = []
    for t in sorted(times):
        if not out or t - out[-1] > tol:
            out.append(t)
    return len(out)


def boundary_count(capture_groups: Sequence[Sequence[SpacetimeEvent]], frame=HOME,
                   tol: float = 1e-12) -> int:
    """Number of distinct reduction instants implied by a sequence of hits in ``frame``.

    Each group holds the capture events produced by one stochastic hit. A
    group whose captures share one time in ``frame`` counts once; captures
    that the boost pulls apart count separately.
    """
    f = _frame(frame)
    total = 0
    for group in capture_groups:
        times = [boost(ev, f).t for ev in group]
        scale = max([1.0] + [abs(t) for t in times])
        total += _distinct_times(times, tol * scale)
    return total


def invariance_report(log, frames: Iterable = ()) -> dict:
    """Compare boundary counts of a run log across frames.

    ``log`` is a :class:`~reduxsim.dynamics.RunLog` or any sequence of capture
    groups. The home frame (v = 0) is always included.
    """
    groups = _capture_groups(log)
    vs = [0.0] + [float(_frame(f).v) for f in frames if _frame(f).v != 0.0]
    vs = sorted(set(vs))
    counts = [boundary_count(groups, v) for v in vs]
    home = counts[vs.index(0.0)]
    anomalies = []
    for i, group in enumerate(groups):
        per_frame = {v: boundary_count([group], v) for v in vs}
        if len(set(per_frame.values())) > 1:
            anomalies.append({
                "hit_index": i,
                "home_count": per_frame[0.0],
                "boosted_counts": sorted(set(per_frame.values())),
                "kind": "simultaneous dual capture" if len(group) > 1 else "frame-dependent",
            })
    invariant = len(set(counts)) == 1
    return {
        "frames": vs,
        "counts": counts,
        "home_count": home,
        "invariant": invariant,
        "count": home if invariant else None,
        "anomalies": anomalies,
    }


def _capture_groups(log) -> list[list[SpacetimeEvent]]:
    hits = getattr(log, "hits", log)
    groups = []
    for h in hits:
        caps = getattr(h, "captures", h)
        groups.append([ev for _, ev in caps] if caps and isinstance(caps[0], tuple) else list(caps))
    return groups


# -- assumption D ------------------------------------------------------------

def fractional_change_report(s_before: float, s_after: float, total: float,
                             ev_before: SpacetimeEvent, ev_after: SpacetimeEvent,
                             frames: Iterable) -> list[dict]:
    """Fractional modulus change and proper-time rate between two logged events, per frame.

    The moduli are frame scalars, so the fractional change is the same number
    in every frame; the proper time is recomputed from boosted coordinates.
    """
    out = []
    for f in frames:
        f = _frame(f)
        a, b = boost(ev_before, f), boost(ev_after, f)
        iv = interval(a, b)
        if iv.kind is not IntervalKind.TIMELIKE:
            raise ValueError("events must be timelike separated")
        frac = (s_after - s_before) / total
        out.append({"v": f.v, "fractional_change": frac, "proper_time": iv.proper_time,
                    "rate": frac / iv.proper_time})
    return out


# -- region maps ---------------------------------------------------------------

def region_grid(hit_a: Optional[SpacetimeEvent], hit_b: Optional[SpacetimeEvent],
                strategy: BoundaryStrategy, grid: Sequence[float], frame=HOME) -> list[tuple[float, float, str]]:
    """Label every node of a home-frame (t, x) grid ``(t0, t1, x0, x1, nt, nx)``."""
    t0, t1, x0, x1, nt, nx = grid
    rows = []
    for t in np.linspace(t0, t1, int(nt)):
        for x in np.linspace(x0, x1, int(nx)):
            ev = SpacetimeEvent(float(t), float(x))
            rows.append((float(t), float(x), classify(ev, hit_a, hit_b, strategy, frame).value))
    return rows


def write_region_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "label"])
        for t, x, label in rows:
            w.writerow([repr(t), repr(x), label])
