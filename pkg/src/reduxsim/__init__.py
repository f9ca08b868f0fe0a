"""Stochastic wavefunction-reduction simulator for two detectors in 1+1 Minkowski spacetime."""
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .dynamics import (
    Constant,
    CurrentModel,
    GaussianPulse,
    RunLog,
    Window,
    hazard,
    run_scenario,
    sample_hit,
    step,
)
from .ensemble import EnsembleStats, causality_demo, run_ensemble, selection_probability_oracle
from .kernels import StepSizeError, run_batch
from .minkowski import (
    BoundaryStrategy,
    LorentzFrame,
    RegionLabel,
    SpacetimeEvent,
    boost,
    classify,
    classify_aa,
    classify_hk,
    hk_boundary_time,
    interval,
    invariance_report,
)
from .rules import ReductionEvent, apply_reduction, derive_graph, is_forbidden
from .state import (
    BrainStatus,
    Component,
    MeasurementMode,
    StateError,
    Superposition,
    build_objective_template,
    build_observed_template,
    mark_phantom,
    total_modulus,
)

__version__ = "0.1.0"
