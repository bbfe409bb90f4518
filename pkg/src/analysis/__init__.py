from .bounds import CylinderBound, count_below, cylinder_count_bound
from .derivative import (
    DerivativeEstimate,
    ScaledBranchSolver,
    eigenvalue_derivative_fd,
    eigenvalue_derivative_fh,
)
from .layer import ConvergencePolicy, LayerResult, initial_s_max, solve_layer
from .nodal import NodalData, node_spacing_report, nodal_extract, tip_clearance
from .profile import extent_report, profile_report
from .sweep import SweepResult, sweep
