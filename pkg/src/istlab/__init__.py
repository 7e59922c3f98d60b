"""Numerical inverse scattering for defocusing NLS (1D) and Davey-Stewartson II (2D)."""
from .grids import Field1D, Field2D, Grid1D, Grid2D
from .zs_direct import Potential1D, ReflectionCoefficient, TransitionData, direct_scattering, transition_data
from .rhp_inverse import a_from_r, bc_solve, inverse_scattering
from .nls_flows import deift_zhou_profile, evolve_reflection, ist_solve, splitstep_nls
from .dsii_scatter import Potential2D, cgo_solve, scattering_transform
from .dsii_flows import dsii_ist_solution, dsii_splitstep

__version__ = "0.1.0"

__all__ = [
    "Field1D",
    "Field2D",
    "Grid1D",
    "Grid2D",
    "Potential1D",
    "Potential2D",
    "ReflectionCoefficient",
    "TransitionData",
    "a_from_r",
    "bc_solve",
    "cgo_solve",
    "deift_zhou_profile",
    "direct_scattering",
    "dsii_ist_solution",
    "dsii_splitstep",
    "evolve_reflection",
    "inverse_scattering",
    "ist_solve",
    "scattering_transform",
    "splitstep_nls",
    "transition_data",
]
