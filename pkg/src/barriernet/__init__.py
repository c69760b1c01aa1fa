"""Safety-guaranteed learning control with trainable barrier-constrained QPs.

Subpackages follow the processing chain: ``dynamics`` (vehicle model and path
geometry), ``hocbf`` (barrier functions and their control constraints),
``diffqp`` (differentiable QP solver), ``scenario`` (obstacle covering and
constraint slotting), ``policy`` (the trainable QP-layer controller),
``nominal_mpc`` (expert label generation), ``harness`` (closed-loop rollouts
and metrics).
"""

__version__ = "0.1.0"

from .dynamics import (
    Control,
    CurvilinearState,
    ReferencePath,
    VehicleParams,
    load_path,
    save_path,
    stadium_track,
    straight_path,
)
from .hocbf import BarrierSpec, ClassK, Penalties, hocbf_constraint
from .diffqp import QPProblem, QPSolution, qp_backward, qp_solve
from .scenario import ObstacleDisk, ObstacleFootprint, Scenario, cover_obstacle, sort_and_slot
from .policy import BarrierNetPolicy, NoiseConfig, Observation, positive_map
from .nominal_mpc import DatasetSpec, MPCConfig, generate_dataset, nmpc_solve
from .harness import Metrics, RolloutResult, TrackingPolicy, clearance, evaluate, rollout

__all__ = [
    "BarrierNetPolicy",
    "BarrierSpec",
    "ClassK",
    "Control",
    "CurvilinearState",
    "DatasetSpec",
    "MPCConfig",
    "Metrics",
    "NoiseConfig",
    "Observation",
    "ObstacleDisk",
    "ObstacleFootprint",
    "Penalties",
    "QPProblem",
    "QPSolution",
    "ReferencePath",
    "RolloutResult",
    "Scenario",
    "TrackingPolicy",
    "VehicleParams",
    "clearance",
    "cover_obstacle",
    "evaluate",
    "generate_dataset",
    "hocbf_constraint",
    "load_path",
    "nmpc_solve",
    "positive_map",
    "qp_backward",
    "qp_solve",
    "rollout",
    "save_path",
    "sort_and_slot",
    "stadium_track",
    "straight_path",
]
