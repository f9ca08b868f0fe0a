import numpy as np
import pytest

from reduxsim import kernels
from reduxsim.config import load_config
from reduxsim.dynamics import _simulate, batch_row_matches

PARITY_CONFIGS = ["observed_sequential", "objective_dual", "objective_second_order", "objective_cured",
                  "gaussian_pulse", "mixed"]


@pytest.mark.parametrize("name", PARITY_CONFIGS)
def test_object_model_matches_kernel_bit_for_bit(name):
    cfg = load_config(name)
    u = np.random.default_rng(99).random((60, kernels.DRAWS_PER_RUN))
    res = kernels.run_batch(cfg.compiled(), u, "numpy")
    for r in range(len(u)):
        log = _simulate(cfg.template(), cfg.currents, cfg.strategy, cfg.t_end, cfg.dt, u[r])
        assert batch_row_matches(log, res, r), f"row {r}"


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")
@pytest.mark.parametrize("name", PARITY_CONFIGS)
def test_numba_and_numpy_backends_agree(name):
    cfg = load_config(name)
    u = np.random.default_rng(5).random((5000, kernels.DRAWS_PER_RUN))
    a = kernels.run_batch(cfg.compiled(), u, "numba")
    b = kernels.run_batch(cfg.compiled(), u, "numpy")
    assert a.equals(b)


def test_uniform_shape_checked():
    cfg = load_config("symmetric")
    with pytest.raises(ValueError):
        kernels.run_batch(cfg.compiled(), np.zeros((3, 2)))


def test_unknown_backend():
    cfg = load_config("symmetric")
    with pytest.raises(ValueError):
        kernels.run_batch(cfg.compiled(), np.zeros((1, kernels.DRAWS_PER_RUN)), "fortran")


@pytest.mark.parametrize("backend", ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else []))
def test_batch_step_guard(backend):
    from reduxsim.config import parse_config
    cfg = parse_config({"currents": {"00->10": {"kind": "constant", "rate": 20.0}}, "dt": 0.01})
    with pytest.raises(kernels.StepSizeError):
        kernels.run_batch(cfg.compiled(), np.full((2, kernels.DRAWS_PER_RUN), 0.5), backend)


def test_threshold_edge_cases():
    assert kernels.clock_threshold(0.0) == 0.0
    assert kernels.clock_threshold(1 - 2**-53) > 36


def test_n_steps():
    assert kernels.n_steps(1.0, 0.01) == 100
    assert kernels.n_steps(1.0, 0.3) == 4
