import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reduxsim.minkowski import (
    BoundaryStrategy,
    IntervalKind,
    LorentzFrame,
    RegionLabel,
    SpacetimeEvent,
    boost,
    boundary_count,
    classify,
    classify_aa,
    classify_hk,
    fractional_change_report,
    hk_boundary_time,
    interval,
    invariance_report,
    region_grid,
    write_region_csv,
)

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
events = st.builds(SpacetimeEvent, coord, coord)
velocity = st.floats(-0.99, 0.99, allow_nan=False)

A, B = SpacetimeEvent(0.0, 0.0), SpacetimeEvent(0.5, 2.0)


def test_boost_example():
    ev = boost(SpacetimeEvent(5.0, 2.0), 0.6)
    assert ev.t == pytest.approx(4.75) and ev.x == pytest.approx(-1.25)


def test_home_frame_is_identity():
    ev = SpacetimeEvent(1.234, -5.6)
    assert boost(ev, 0.0) is ev


def test_frame_speed_limit():
    for v in (1.0, -1.0, 1.5):
        with pytest.raises(ValueError):
            LorentzFrame(v)


@given(events, events, velocity)
def test_interval_kind_is_frame_independent(a, b, v):
    k0 = interval(a, b)
    kv = interval(boost(a, v), boost(b, v))
    dt, dx = b.t - a.t, b.x - a.x
    # far from the light cone the classification cannot flip through rounding
    if abs(dt * dt - dx * dx) > 1e-6 * (dt * dt + dx * dx) + 1e-9:
        assert k0.kind is kv.kind
        if k0.kind is IntervalKind.TIMELIKE:
            assert kv.proper_time == pytest.approx(k0.proper_time, rel=1e-9, abs=1e-9)


def test_interval_kinds():
    assert interval(A, SpacetimeEvent(1.0, 1.0)).kind is IntervalKind.LIGHTLIKE
    assert interval(A, SpacetimeEvent(2.0, 1.0)).proper_time == pytest.approx(math.sqrt(3))
    assert interval(A, SpacetimeEvent(1.0, 2.0)).kind is IntervalKind.SPACELIKE


@given(events)
def test_apex_identity(hit):
    assert hk_boundary_time(hit, hit.x) == hit.t


def test_hk_boundary_on_cone_is_post():
    hit = SpacetimeEvent(1.0, 0.0)
    assert classify_hk(SpacetimeEvent(0.0, 1.0), hit, None) is RegionLabel.POST_A_ONLY
    assert classify_hk(SpacetimeEvent(-1e-9, 1.0), hit, None) is RegionLabel.PRE_BOTH


def test_hk_four_regions():
    a, b = SpacetimeEvent(1.0, 0.0), SpacetimeEvent(1.5, 10.0)
    labels = {lab for _, _, lab in region_grid(a, b, BoundaryStrategy.HELLWIG_KRAUS, (-12, 12, -2, 12, 49, 57))}
    assert labels == {r.value for r in RegionLabel}


def test_single_hit_two_regions():
    labels = {lab for _, _, lab in region_grid(SpacetimeEvent(1.0, 0.0), None, BoundaryStrategy.HELLWIG_KRAUS,
                                               (0, 3, -2, 12, 31, 29))}
    assert labels == {"PreBoth", "PostAOnly"}


def test_event_x_flips_between_frames():
    x = SpacetimeEvent(-0.1, 0.0)
    assert classify_aa(x, A, B, 0.0) is RegionLabel.PRE_BOTH
    assert classify_aa(x, A, B, 0.5) is RegionLabel.POST_B_ONLY
    assert classify(x, A, B, BoundaryStrategy.AHARONOV_ALBERT, 0.5) is RegionLabel.POST_B_ONLY


def test_boundary_count_for_sequential_and_dual():
    seq = [[SpacetimeEvent(0.3, 0.0)], [SpacetimeEvent(0.7, 10.0)]]
    dual = [[SpacetimeEvent(0.3, 0.0), SpacetimeEvent(0.3, 10.0)]]
    assert boundary_count(seq, 0.0) == boundary_count(seq, 0.8) == 2
    assert boundary_count(dual, 0.0) == 1
    assert boundary_count(dual, 0.5) == 2


def test_invariance_report_home_only():
    rep = invariance_report([[SpacetimeEvent(0.3, 0.0)]], [])
    assert rep["frames"] == [0.0] and rep["invariant"] and rep["count"] == 1


def test_invariance_report_flags_dual():
    rep = invariance_report([[SpacetimeEvent(0.3, 0.0), SpacetimeEvent(0.3, 10.0)]], [-0.5, 0.5])
    assert not rep["invariant"] and rep["count"] is None
    assert rep["anomalies"][0]["home_count"] == 1 and rep["anomalies"][0]["boosted_counts"] == [1, 2]


def test_fractional_change_report():
    rows = fractional_change_report(0.2, 0.5, 1.0, SpacetimeEvent(0.0, 0.0), SpacetimeEvent(2.0, 0.5),
                                    [0.0, 0.3, -0.7])
    assert len({r["fractional_change"] for r in rows}) == 1
    taus = [r["proper_time"] for r in rows]
    assert max(taus) - min(taus) < 1e-12
    with pytest.raises(ValueError):
        fractional_change_report(0.0, 1.0, 1.0, SpacetimeEvent(0, 0), SpacetimeEvent(1, 5), [0.0])


def test_region_csv(tmp_path):
    rows = region_grid(A, B, BoundaryStrategy.HELLWIG_KRAUS, (0, 1, 0, 2, 3, 3))
    path = tmp_path / "r.csv"
    write_region_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,label" and len(lines) == 10


@settings(max_examples=300)
@given(events, events, events, velocity)
def test_hk_labels_frame_independent(ev, a, b, v):
    # Boundaries are light cones: boost everything together and the labels match.
    def safe(hit):
        return abs(abs(ev.x - hit.x) - (hit.t - ev.t)) > 1e-6
    if safe(a) and safe(b):
        assert classify_hk(ev, a, b) is classify_hk(boost(ev, v), boost(a, v), boost(b, v))
