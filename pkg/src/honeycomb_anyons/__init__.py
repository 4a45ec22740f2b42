"""Abelian anyons of the honeycomb spin model: spectra, strings, braiding and transport."""
from .dynamics import (
    TrapSchedule,
    adiabatic_transport,
    hubbard_ising_coupling,
    trap_well,
    trapped_coupling,
    trapped_state,
)
from .lattice import (
    EffectiveLattice,
    HoneycombLattice,
    StringPath,
    build_honeycomb,
    effective_lattice,
    loop_around,
    string_between,
)
from .pauli import PauliString, commutation_phase, from_sites, identity, multiply, single
from .sectors import SectorBasis, commuting_generators, sector_spectrum
from .spectra import (
    ConvergenceError,
    CouplingConfig,
    OperatorHandle,
    SpectrumResult,
    assemble_effective,
    assemble_honeycomb,
    dense_eigenvalues,
    gap_above_ground_multiplet,
    j_eff,
    lowest_eigenvalues,
)
from .toric import (
    FUSION,
    AnyonConfiguration,
    RegisterLayout,
    StateVector,
    braid_phase,
    controlled_phase_experiment,
    create_pair,
    exchange_overlap,
    exchange_phase_xx,
    fuse,
    ground_state,
    logical_state,
    one_qubit_rotation,
)

__version__ = "0.1.0"

__all__ = [
    "adiabatic_transport",
    "AnyonConfiguration",
    "assemble_effective",
    "assemble_honeycomb",
    "braid_phase",
    "build_honeycomb",
    "commutation_phase",
    "commuting_generators",
    "controlled_phase_experiment",
    "ConvergenceError",
    "CouplingConfig",
    "create_pair",
    "dense_eigenvalues",
    "effective_lattice",
    "EffectiveLattice",
    "exchange_overlap",
    "exchange_phase_xx",
    "from_sites",
    "fuse",
    "FUSION",
    "gap_above_ground_multiplet",
    "ground_state",
    "HoneycombLattice",
    "hubbard_ising_coupling",
    "identity",
    "j_eff",
    "logical_state",
    "loop_around",
    "lowest_eigenvalues",
    "multiply",
    "one_qubit_rotation",
    "OperatorHandle",
    "PauliString",
    "RegisterLayout",
    "sector_spectrum",
    "SectorBasis",
    "single",
    "SpectrumResult",
    "StateVector",
    "string_between",
    "StringPath",
    "trap_well",
    "trapped_coupling",
    "trapped_state",
    "TrapSchedule",
]
