"""Viscoelastic Cosserat rods with evolving natural configurations."""

from .constitutive import (
    INDETERMINATE,
    Constraint,
    ConstitutiveVariant,
    constrained_wrench_and_rates,
    contact_wrench,
    maximizer_rates,
    maximizer_value,
    natural_rate_local,
    natural_rate_uniform,
    natural_rates,
)
from .energetics import (
    CustomEnergy,
    DissipationTensors,
    NaturalVariant,
    QuadraticEnergy,
    energy_eval,
    energy_grad,
    gradient_check,
    natural_state_check,
    pointwise_dissipation,
    total_dissipation,
)
from .errors import (
    InsufficientGridError,
    InvalidFrameError,
    InvalidParameterError,
    MissingContextError,
    NatrodError,
    NonConvergenceError,
    PreconditionError,
)
from .grid import RodGrid
from .kinematics import (
    ConfigurationPair,
    DirectorFrame,
    NaturalState,
    StrainState,
    apply_frame_change,
    darboux_of_rotation_field,
    elastic_decompose,
    rotation_field_of_darboux,
)
from .torsion import (
    DynamicState,
    InputHistory,
    SmoothedStep,
    Tabulated,
    TorsionParams,
    creep_mu_zero,
    creep_response,
    dynamic_pde_solve,
    nondimensionalize,
    redimensionalize,
    relaxation_response,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationPair",
    "ConstitutiveVariant",
    "Constraint",
    "CustomEnergy",
    "DirectorFrame",
    "DissipationTensors",
    "DynamicState",
    "INDETERMINATE",
    "InputHistory",
    "InsufficientGridError",
    "InvalidFrameError",
    "InvalidParameterError",
    "MissingContextError",
    "NatrodError",
    "NaturalState",
    "NaturalVariant",
    "NonConvergenceError",
    "PreconditionError",
    "QuadraticEnergy",
    "RodGrid",
    "SmoothedStep",
    "StrainState",
    "Tabulated",
    "TorsionParams",
    "apply_frame_change",
    "constrained_wrench_and_rates",
    "contact_wrench",
    "creep_mu_zero",
    "creep_response",
    "darboux_of_rotation_field",
    "dynamic_pde_solve",
    "elastic_decompose",
    "energy_eval",
    "energy_grad",
    "gradient_check",
    "maximizer_rates",
    "maximizer_value",
    "natural_rate_local",
    "natural_rate_uniform",
    "natural_rates",
    "natural_state_check",
    "nondimensionalize",
    "pointwise_dissipation",
    "redimensionalize",
    "relaxation_response",
    "rotation_field_of_darboux",
    "total_dissipation",
]
