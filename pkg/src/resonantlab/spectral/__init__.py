"""Grids, transforms, projectors, norms and the linear Strichartz lab."""
from .grid import (
    Field3D,
    GridSpec,
    boundary_mass_fraction,
    fourier_forward,
    fourier_inverse,
    from_function,
    integrate,
    l2_norm_sq,
    set_workers,
    spectral_tail_fraction,
    zeros,
)
from .norms import NormReport, h1_norm, l2_norm, linear_propagate, sobolev_norm, z_norm
from .projectors import (
    ProjectorSpec,
    apply_projector,
    dyadic_levels,
    eta_cutoff,
    multiplier,
)
from .strichartz import (
    admissible_q,
    strichartz_ratio,
    weyl_kernel,
    weyl_kernel_direct,
    weyl_kernel_sup,
)
