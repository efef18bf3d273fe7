"""Hamiltonian flows on thermodynamic phase space.

Equilibrium states of a simple system form the surface ``p = grad Phi(q)`` in
the cotangent bundle with coordinates ``q = (S, V, N)``, ``p = (T, -P, mu)``.
Quasi-static processes are Hamiltonian flows that keep this surface invariant.
"""

__version__ = "0.1.0"

from .errors import (
    ChartMismatchError,
    ConfigError,
    ConvergenceError,
    DomainError,
    HamThermoError,
    NonFiniteDerivativeError,
    RegularityError,
    StepError,
)
from .geometry import (
    HYDROSTATIC,
    FunctionHamiltonian,
    Hamiltonian,
    PhasePoint,
    TangentVector,
    canonical_matrix,
    canonical_pairing,
    energy_rate,
    hamiltonian_field,
    symplectic_defect,
)
from .potentials import (
    FunctionPotential,
    IdealGasEnergy,
    IdealGasParams,
    LinearPotential,
    Potential,
    QuadraticPotential,
    embed,
    eos_residual,
    euler_residual,
    ideal_gas_entropy,
    make_potential,
    onshell_residual,
)
from .ensembles import (
    LegendreSpec,
    TransformedPotential,
    compose,
    hydrostatic_preset,
    legendre_eval,
    pushforward_check,
    regularity_indicator,
)
from .dynamics import (
    GeneralProcessHamiltonian,
    IntegratorConfig,
    InteractingMapHamiltonian,
    IsochoricHamiltonian,
    IsothermalIsochoricHamiltonian,
    ProcessSpec,
    Trajectory,
    closed_form_interacting,
    closed_form_isochoric,
    closed_form_isothermal_isochoric,
    diagnose,
    integrate,
)

__all__ = [
    "__version__",
    "ChartMismatchError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "HamThermoError",
    "NonFiniteDerivativeError",
    "RegularityError",
    "StepError",
    "HYDROSTATIC",
    "FunctionHamiltonian",
    "Hamiltonian",
    "PhasePoint",
    "TangentVector",
    "canonical_matrix",
    "canonical_pairing",
    "energy_rate",
    "hamiltonian_field",
    "symplectic_defect",
    "FunctionPotential",
    "IdealGasEnergy",
    "IdealGasParams",
    "LinearPotential",
    "Potential",
    "QuadraticPotential",
    "embed",
    "eos_residual",
    "euler_residual",
    "ideal_gas_entropy",
    "make_potential",
    "onshell_residual",
    "LegendreSpec",
    "TransformedPotential",
    "compose",
    "hydrostatic_preset",
    "legendre_eval",
    "pushforward_check",
    "regularity_indicator",
    "GeneralProcessHamiltonian",
    "IntegratorConfig",
    "InteractingMapHamiltonian",
    "IsochoricHamiltonian",
    "IsothermalIsochoricHamiltonian",
    "ProcessSpec",
    "Trajectory",
    "closed_form_interacting",
    "closed_form_isochoric",
    "closed_form_isothermal_isochoric",
    "diagnose",
    "integrate",
]
