import numpy as np
import pytest

from reduxsim.config import load_config
from reduxsim.dynamics import run_scenario


def simulate(name_or_cfg, seed=None):
    cfg = load_config(name_or_cfg) if isinstance(name_or_cfg, str) else name_or_cfg
    return run_scenario(cfg.template(), cfg.currents, strategy=cfg.strategy, t_end=cfg.t_end,
                        dt=cfg.dt, rng=cfg.seed if seed is None else seed)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
