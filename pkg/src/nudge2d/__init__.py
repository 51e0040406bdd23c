"""Nudging data assimilation for 2D incompressible flow with moving observers."""

__version__ = "0.1.0"

from .spectral import (  # noqa: F401
    Grid,
    advection_rhs,
    advection_terms,
    dealias,
    energy_spectrum,
    kinetic_energy,
    l2_norm,
    linf_norm,
    make_grid,
    norms,
    streamfunction,
    to_physical,
    to_spectral,
    velocity,
    velocity_spectral,
)
from .stepping import BlowUpError, Stepper, if_ab2_update, if_ab3_update, if_euler_update  # noqa: F401
from .observers import (  # noqa: F401
    BleepsObservers,
    CreepsObservers,
    LagrangianObservers,
    ObserverSet,
    RandomSweepObservers,
    Region,
    StaticGridObservers,
    ThickSweepObservers,
    ThinSweepObservers,
    apply_window_mask,
    make_observers,
    sample_bilinear,
    scatter_to_grid,
    thin_sweep_region,
)
from .assimilation import (  # noqa: F401
    CoupledRun,
    ErrorRecord,
    ReferenceBlowUpError,
    build_forcing,
    nudging_increment,
    spin_up,
)
from .checkpoint import load_checkpoint, save_checkpoint, stepper_from_checkpoint  # noqa: F401
from .config import RunConfig, config_from_dict, load_preset, parse_config  # noqa: F401
from .harness import RunSummary, run_comparison, run_experiment, run_spinup  # noqa: F401
