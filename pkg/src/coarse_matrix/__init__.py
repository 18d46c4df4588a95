"""Set-valued matrix algebra over finite metric spaces, with verified
scale-r decompositions and profile arithmetic."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .algebra import (
    IndexMismatchError,
    IndexSet,
    SubsetArray,
    SubsetMatrix,
    cap_dot,
    is_cover,
    matmul_cap,
    matmul_cross,
    set_norm,
    transpose,
)
from .covers import grid_bricks, interval_bricks, net_cover
from .decomposition import (
    AugmentedMatrix,
    asdim_matrix,
    check_perp,
    check_union_bound,
    perp_array,
    perp_split,
    product_split,
    refine_disjoint,
    truncated_product_decomposition,
    verify_asdim_matrix,
)
from .disjointness import array_scale_disjoint, arrays_orthogonal, matrix_orthogonal, sets_scale_disjoint
from .products import WeightFn, asymptotic_metric, build_product_space, coarse_envelope, reduced_metric
from .profiles import Profile, ProfileFn, apc_schedule, product_profile, union_profile
from .report import ConstructionDefect, DecompositionReport
from .space import (
    INF,
    Dim0Certificate,
    FiniteMetricSpace,
    MetricValidationError,
    Subset,
    ball,
    chain_metric,
    components,
    components_norm,
    disjoint_union,
    from_graph,
    from_table,
    grid,
    interval,
    product,
)

__all__ = [
    "AugmentedMatrix", "BACKEND", "ConstructionDefect", "DecompositionReport", "Dim0Certificate",
    "FiniteMetricSpace", "INF", "IndexMismatchError", "IndexSet", "MetricValidationError", "Profile",
    "ProfileFn", "Subset", "SubsetArray", "SubsetMatrix", "WeightFn", "apc_schedule", "array_scale_disjoint",
    "arrays_orthogonal", "asdim_matrix", "asymptotic_metric", "ball", "build_product_space", "cap_dot",
    "chain_metric", "check_perp", "check_union_bound", "coarse_envelope", "components", "components_norm",
    "disjoint_union", "from_graph", "from_table", "grid", "grid_bricks", "interval", "interval_bricks",
    "is_cover", "matmul_cap", "matmul_cross", "matrix_orthogonal", "net_cover", "perp_array", "perp_split",
    "product", "product_profile", "product_split", "reduced_metric", "refine_disjoint", "set_norm",
    "sets_scale_disjoint", "transpose", "truncated_product_decomposition", "union_profile",
    "verify_asdim_matrix",
]
