from .solver import (
    EigenSolveParams,
    Pencil,
    ResidualReport,
    Spectrum,
    degenerate_clusters,
    residual_report,
    solve_dense,
    solve_lowest,
)
