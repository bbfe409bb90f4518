from .forms import (
    assemble_scaled,
    assemble_skew,
    assemble_weighted,
    element_matrices,
    skew_element_matrices,
)
from .matrix_io import read_matrix, write_matrix
from .quadrature import QuadratureRule, collapsed_gauss_rule, seven_point_rule
from .system import (
    CONSTRAINED,
    AssembledSystem,
    Formulation,
    apply_dirichlet,
    dirichlet_tags,
    symmetrize,
)
