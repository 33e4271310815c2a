"""Norms of basic operators on finite-dimensional vector-valued model spaces.

The package builds rational matrix inner functions (Blaschke-Potapov
products) over the unit disc, the upper half-plane and the right half-plane,
discretizes the compressed multiplication operator ``A_alpha`` on the model
space ``H(Theta)`` and compares its numerical norm against the closed form in
terms of the singular values of ``Theta(alpha)``.  The same machinery covers
rational de Branges spaces ``B(E)``.
"""

from modelnorm.domains import DomainKind, BoundaryGrid, boundary_grid, blaschke, rho, phi_alpha, sharp
from modelnorm.rational import MatRational, inner_product
from modelnorm.inner import BPFactor, BlaschkePotapov, PointSVD, build, point_svd, n_alpha
from modelnorm.modelspace import ModelSpaceBasis, build_basis, kernel_section, project, backward_shift, subspace_dims
from modelnorm.basicop import (
    OperatorMatrix,
    ClosedFormNorm,
    assemble,
    assemble_adjoint,
    assemble_explicit,
    apply_basic_explicit,
    adjoint_norm_identity,
    closed_form_norm,
    verify_norm,
)
from modelnorm.transfer import TransferMap, recenter, cayley, limit_vector_check, transfer_report
from modelnorm.debranges import (
    DeBrangesMatrix,
    DeBrangesSpace,
    make_matrix,
    from_inner,
    build_space,
    weighted_inner,
    basic_operator_B,
    closed_form_norm_B,
    debranges_identity,
)

__version__ = "0.1.0"

__all__ = [
    "DomainKind",
    "BoundaryGrid",
    "boundary_grid",
    "blaschke",
    "rho",
    "phi_alpha",
    "sharp",
    "MatRational",
    "inner_product",
    "BPFactor",
    "BlaschkePotapov",
    "PointSVD",
    "build",
    "point_svd",
    "n_alpha",
    "ModelSpaceBasis",
    "build_basis",
    "kernel_section",
    "project",
    "backward_shift",
    "subspace_dims",
    "OperatorMatrix",
    "ClosedFormNorm",
    "assemble",
    "assemble_adjoint",
    "assemble_explicit",
    "apply_basic_explicit",
    "adjoint_norm_identity",
    "closed_form_norm",
    "verify_norm",
    "TransferMap",
    "recenter",
    "cayley",
    "limit_vector_check",
    "transfer_report",
    "DeBrangesMatrix",
    "DeBrangesSpace",
    "make_matrix",
    "from_inner",
    "build_space",
    "weighted_inner",
    "basic_operator_B",
    "closed_form_norm_B",
    "debranges_identity",
]
