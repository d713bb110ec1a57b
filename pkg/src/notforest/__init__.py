"""Game-theoretic forest-fire simulator: many players plant trees on a shared
grid, each maximizing expected surviving trees minus planting cost against a
fixed lightning-strike distribution.  Equilibria are approximated with
best-response dynamics over players and a sampled-fictitious-play inner
optimizer per player."""

__version__ = "0.1.0"

from .grid import (
    ComponentLabeling,
    GridConfig,
    PlayerPartition,
    label_components,
    player_utility,
    survival_prob,
    welfare,
)
from .lightning import (
    LightningField,
    build_gaussian_field,
    build_uniform_field,
    recenter_random,
)
from .dynamics import (
    DynamicsParams,
    NashCheck,
    RunResult,
    best_response_dynamics,
    choose_actions,
    default_iterations,
    is_nash,
    opt_sampled_fp,
)
from .metrics import (
    CascadeDistribution,
    FragilityResult,
    cascade_distribution,
    cascade_percentile,
    empty_centroid,
    fines_experiment,
    fire_break_correlation,
    fragility_eval,
)
from . import oned
from .runner import ExperimentConfig, run_sweep, validate_and_load
