"""Shared fixtures. The desk-scale session fixtures are built once and only
when the acceptance tests request them."""

import numpy as np
import pytest

from nudge2d.config import config_from_dict
from nudge2d.harness import run_experiment, run_spinup

DESK_SEED = 1069

DESK_PHYSICS = {
    "nu": 1e-3,
    "grashof": 5e4,
    "dt": 0.005,
    "t_spin": 200.0,
    "t_run": 100.0,
    "forcing_band": [6, 8],
}


def desk_config(out_dir, checkpoint, *, mu=10.0, t_run=100.0, sample_every=10,
                log_trajectories=False, **strategy):
    physics = dict(DESK_PHYSICS)
    physics["t_run"] = t_run
    return config_from_dict({
        "grid": {"n": 128},
        "physics": physics,
        "nudging": {"mu": mu, "error_sample_every": sample_every},
        "strategy": {**strategy, "seed": DESK_SEED},
        "io": {"output_dir": str(out_dir), "checkpoint_path": str(checkpoint),
               "log_trajectories": log_trajectories},
    })


@pytest.fixture(scope="session")
def desk_spinup(tmp_path_factory):
    """Desk-scale spin-up checkpoint plus its kinetic-energy trace."""
    root = tmp_path_factory.mktemp("desk")
    ckpt = root / "spinup.ckpt"
    cfg = desk_config(root / "spin", ckpt, kind="static", m=16)
    result = run_spinup(cfg, checkpoint_path=ckpt)
    return {"checkpoint": ckpt, "trace": np.array(result.energy_trace), "root": root}


@pytest.fixture(scope="session")
def desk_static_run(desk_spinup, tmp_path_factory):
    """The static 16 x 16 desk run, shared by the convergence criteria."""
    out = tmp_path_factory.mktemp("desk-static")
    cfg = desk_config(out, desk_spinup["checkpoint"], kind="static", m=16)
    return run_experiment(cfg, name="desk-static")
