"""Forward and inverse dynamics of parallel-serial manipulators.

Manipulators are serial chains of 1-DoF modules: linearly actuated four-joint
closed loops and single revolute or prismatic joints. The forward dynamics
runs in time linear in the number of modules.
"""

from .assembly import SerialModuleParams
from .closed_loop import ParallelModuleParams, solve_closure, solve_closure_from_x
from .errors import (
    ConfigurationError,
    DegenerateInertia,
    ModelDefinitionError,
    ParseError,
    PSMError,
    RangeError,
    SingularConfiguration,
    UnreachableConfiguration,
    ValidationError,
)
from .model_io import (
    Trajectory,
    generate_sinusoid_trajectory,
    load_demo,
    load_model,
    load_model_file,
    read_trajectory,
    serialize_model,
    write_trajectory,
)
from .simulate import SimulationConfig, simulate, validate
from .solver import (
    ActuatorState,
    DynamicsResult,
    ManipulatorModel,
    forward_dynamics,
    inverse_dynamics,
    mass_matrix_oracle,
    mechanical_energy,
)
from .spatial import S_X, S_Z, SpatialInertia, Transform

__version__ = "0.1.0"

__all__ = [
    "ActuatorState",
    "ConfigurationError",
    "DegenerateInertia",
    "DynamicsResult",
    "ManipulatorModel",
    "ModelDefinitionError",
    "PSMError",
    "ParallelModuleParams",
    "ParseError",
    "RangeError",
    "S_X",
    "S_Z",
    "SerialModuleParams",
    "SimulationConfig",
    "SingularConfiguration",
    "SpatialInertia",
    "Trajectory",
    "Transform",
    "UnreachableConfiguration",
    "ValidationError",
    "forward_dynamics",
    "generate_sinusoid_trajectory",
    "inverse_dynamics",
    "load_demo",
    "load_model",
    "load_model_file",
    "mass_matrix_oracle",
    "mechanical_energy",
    "read_trajectory",
    "serialize_model",
    "simulate",
    "solve_closure",
    "solve_closure_from_x",
    "validate",
    "write_trajectory",
]
