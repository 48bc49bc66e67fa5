"""Flux reconstruction analysis toolkit: operators, filtering, von Neumann and error analysis, 1D solver."""
from .core import (
    CorrectionScheme, FrOperators, MeshSpec, SolutionBasis, assemble_operators, diff_matrix,
    fr_operators, gauss_points, interface_interp, iota_huynh, vcjh_correction_derivs,
)
from .filtering import (
    FilterMatrix, FilterMode, FilterSpec, apply_filter_mode, filter_reynolds, filtered_operators,
    gaussian_filter_matrix,
)
from .vonneumann import (
    CflMap, SpectralConfig, SpectralResult, assemble_q, cfl_limit, cfl_scan, dispersion, is_stable,
    locate_iota_plus, stable_window, update_matrix,
)

__version__ = "0.1.0"
