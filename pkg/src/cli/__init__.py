from .commands import build_parser, cmd_bound, cmd_mesh_export, cmd_plot_modes, cmd_solve, cmd_sweep, main
from .config import RunConfig, build_config, parse_angles, read_config_file
