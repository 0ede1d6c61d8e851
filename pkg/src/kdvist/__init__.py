"""KdV Cauchy-problem solver via scattering data and Fredholm determinants.

Pipeline: potential -> direct scattering (Jost/Weyl) -> linear time
evolution of the data -> half-line integral operator -> solution recovery
q(x,t) = -2 d^2/dx^2 log det(I+H), with an independent pseudospectral PDE
oracle for cross-validation.
"""

from .backend import BACKEND
from .errors import (
    CatalogError,
    ConfigError,
    DiscretizationError,
    IntegrationError,
    KdvistError,
    ResolutionError,
    ScatteringError,
)
from .hankel import (
    HankelKernelSpec,
    NystromDiscretization,
    ReflectionTransform,
    SolutionGrid,
    assemble,
    build_fourier_table,
    default_truncation,
    fredholm_logdet,
    kernel_eval,
    make_kernel_spec,
    positivity_report,
    singular_spectrum,
    solve_grid,
    solve_q,
)
from .oracle import OracleConfig, evolve_pde
from .potentials import (
    Potential,
    TailDescriptor,
    make_catalog_potential,
    make_sampled_potential,
    sample,
    truncate_left,
)
from .scattering import (
    JostValue,
    ScatteringData,
    bound_states,
    evolve_data,
    faddeev_right,
    scatter_short_range,
)
from .steplike import (
    analytic_split_check,
    reflection_steplike,
    rho_measure,
    scattering_map,
    spectral_floor,
    weyl_m_minus,
)

__version__ = "0.1.0"
