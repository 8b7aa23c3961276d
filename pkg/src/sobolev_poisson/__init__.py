"""Poisson brackets on Sobolev phase spaces.

Reproducing kernels of H^1(0,1), H^1(R) and a modified H^2(R^3), a bracket
engine on H^1(0,1) x H^1(0,1), and holonomy/flux variables on R^3 with their
brackets and the Jacobi identity.
"""

from .errors import (
    CapabilityError,
    DomainError,
    EvaluationError,
    GeometryError,
    ParseError,
    SingularPointError,
    SobolevError,
    UnknownNameError,
    UnsupportedObservableError,
)
from .fields import (
    LINE,
    R3,
    UNIT,
    DomainTag,
    SobolevFunction,
    expression_field,
    field_from_config,
    inner_product_h1,
    inner_product_h2r3,
    parse_field,
    symbolic_field,
)
from .kernels import KernelPoint, kernel_eval, kernel_field, reproducing_check
from .phase import (
    Observable1D,
    PhasePoint1D,
    TangentVector1D,
    hamiltonian_vector_field,
    jacobi_residual_1d,
    make_evaluation_observable,
    make_K_observable,
    make_V_observable,
    poisson_bracket,
    symplectic_eval,
)
from .holoflux import (
    Curve,
    FluxSpec,
    PhasePoint3D,
    SurfacePatch,
    flux,
    holonomy,
    holonomy_flux_bracket,
    jacobi_verifier,
    load_scene,
)
from .quadrature import QuadratureScheme

__version__ = "0.1.0"
