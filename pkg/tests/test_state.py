import pytest

from reduxsim.state import (
    CODES,
    BrainState,
    BrainStatus,
    Component,
    DetectorState,
    Level,
    MeasurementMode,
    StateError,
    Superposition,
    build_objective_template,
    build_observed_template,
    make_component,
    mark_phantom,
    total_modulus,
)


def test_objective_template_has_four_components_and_unit_root():
    st = build_objective_template()
    assert [c.code for c in st.components] == list(CODES)
    assert [c.weight for c in st.components] == [1.0, 0.0, 0.0, 0.0]
    assert all(b.status is BrainStatus.ABSENT for c in st.components for b in c.brains)
    assert total_modulus(st) == 1.0
    assert [e.key for e in st.edges] == ["00->10", "00->01", "10->11", "01->11"]


def test_objective_direct_edge_is_opt_in():
    st = build_objective_template(allow_direct_fourth=True)
    assert "00->11" in [e.key for e in st.edges]


def test_observed_template_never_creates_both_captured():
    st = build_observed_template()
    assert [c.code for c in st.components] == ["00", "10", "01"]
    assert st.get("11") is None and st.weight_of("11") == 0.0
    assert st.components[0].describe() == "D0B0_D0B0_"
    assert st.components[1].describe() == "D1B1D0B0"
    assert {e.key for e in st.edges} == {"00->10", "00->01"}


def test_only_two_detectors_supported():
    with pytest.raises(StateError):
        build_objective_template(n_detectors=3)


def test_negative_weight_rejected():
    with pytest.raises(StateError):
        make_component("10", MeasurementMode.OBJECTIVE, (0.0, 1.0), BrainStatus.ABSENT, weight=-0.1)


def test_duplicate_observer_rejected():
    det = (DetectorState(Level.GROUND), DetectorState(Level.GROUND))
    brains = (BrainState(0, BrainStatus.READY), BrainState(0, BrainStatus.READY))
    with pytest.raises(StateError):
        Component(det, brains)


def test_capture_coordinate_only_when_captured():
    with pytest.raises(StateError):
        DetectorState(Level.GROUND, 1.0)
    with pytest.raises(StateError):
        DetectorState(Level.CAPTURE)


def test_capture_coordinates_follow_positions():
    c = make_component("11", MeasurementMode.OBJECTIVE, (2.0, 7.5), BrainStatus.ABSENT)
    assert [d.capture_coordinate for d in c.detectors] == [2.0, 7.5]
    assert c.decoherent and c.n_captured == 2


def test_total_modulus_of_empty_state_is_zero():
    assert total_modulus(Superposition(())) == 0.0


def test_mark_phantom_is_idempotent_and_freezes_edges():
    st = build_objective_template()
    idx = st.index("10")
    once = mark_phantom(st, idx)
    assert once.components[idx].phantom
    assert all(not e.active for e in once.edges if idx in (e.from_idx, e.to_idx))
    assert all(e.active for e in once.edges if idx not in (e.from_idx, e.to_idx))
    assert mark_phantom(once, idx) == once


def test_mark_phantom_bad_index():
    with pytest.raises(IndexError):
        mark_phantom(build_objective_template(), 9)
