"""``conelayer`` command line: solve, sweep, plot-modes, bound, mesh-export"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..analysis.bounds import cylinder_count_bound
from ..analysis.layer import LayerResult, initial_s_max, solve_layer
from ..analysis.nodal import node_spacing_report, nodal_extract, tip_clearance
from ..analysis.profile import profile_report
from ..analysis.sweep import sweep
from ..assembly.forms import assemble_weighted
from ..assembly.matrix_io import write_matrix
from ..database.operations import ResultsDatabase
from ..geometry.domain import build_domain
from ..geometry.mesh import generate_mesh
from ..geometry.mesh_io import write_mesh
from ..utils.errors import ConfigError, ConeLayerError, SolverError
from ..utils.logging_setup import configure_logging
from . import plots
from .config import RunConfig, build_config, read_config_file
from .manifest import Manifest
from .tables import read_table, spectrum_table, table_json, write_json, write_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
ERROR_FILE = "error.json"
FEM_ANGLE_TOL = 1e-12


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _convergence(result: LayerResult) -> dict:
    return {
        "converged": result.converged,
        "solver_converged": result.spectrum.converged,
        "truncation_ok": result.truncation_ok,
        "refinement_ok": result.refinement_ok,
        "error_estimates": result.error_estimates,
        "ambiguous": result.spectrum.ambiguous,
        "smallest_ritz": result.spectrum.smallest_ritz,
        "doublings": result.doublings,
    }


def _archive(config: RunConfig, command: str, results: list, failures: Sequence = ()) -> None:
    if config.archive is None:
        return
    db = ResultsDatabase(str(config.archive))
    try:
        for result in results:
            ok, message, run_id = db.record_spectrum(command, result, config.resolved(), mesh_h=config.h)
            if ok:
                logger.info("archived theta=%.5f deg as run %d", result.aperture.theta_deg, run_id)
            else:
                logger.warning(message)
        for aperture, error in failures:
            ok, message, _ = db.record_failure(command, aperture, config.m, error)
            if not ok:
                logger.warning(message)
    finally:
        db.close()


def _solve(config: RunConfig) -> LayerResult:
    return solve_layer(config.aperture, config.m, config.solver_params(), config.policy())


def cmd_solve(config: RunConfig) -> int:
    """spectrum.csv, spectrum.json and manifest.json for a single angle"""
    started = time.perf_counter()
    out = _out_dir(config)
    result = _solve(config)
    table = spectrum_table(result)

    manifest = Manifest("solve", config.resolved(), mesh=result.mesh.stats(),
                        convergence=_convergence(result))
    manifest.add_file(write_table(table, out / "spectrum.csv"))
    manifest.add_file(table_json(table, {**result.summary(), **config.aperture.describe()}, out / "spectrum.json"))
    _archive(config, "solve", [result])
    manifest.timings = {**result.timings, "total_seconds": time.perf_counter() - started}
    manifest.write(out)
    if not len(table):
        logger.info("no discrete eigenvalues below %.6g for m=%d", config.threshold, config.m)
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    """Long-format sweep.csv and the branch diagram sweep.svg over all configured angles"""
    started = time.perf_counter()
    out = _out_dir(config)
    result = sweep(config.apertures, config.k, config.solver_params(), config.policy(), m=config.m)
    if result.succeeded == 0:
        raise SolverError(f"all {len(result.entries)} angles failed")
    table = result.table()

    manifest = Manifest("sweep", config.resolved())
    manifest.add_file(write_table(table, out / "sweep.csv"))
    manifest.add_file(plots.plot_sweep(result, out / "sweep.svg"))
    gaps = result.min_gaps()
    report = {
        "min_gap": {"theta_rad": gaps.index.tolist(), "value": gaps.to_numpy()},
        "smallest_gap": float(np.nanmin(gaps.to_numpy())) if gaps.notna().any() else None,
        "monotonicity_violations": result.monotonicity_report().to_dict(orient="records"),
        "failed": [{"theta_rad": e.aperture.theta, "error": e.error} for e in result.entries if not e.ok],
    }
    manifest.add_file(write_json(report, out / "sweep_report.json"))
    ok_results = [e.result for e in result.entries if e.ok]
    manifest.mesh = {f"{r.aperture.theta:.17g}": r.mesh.stats() for r in ok_results}
    manifest.convergence = {f"{r.aperture.theta:.17g}": _convergence(r) for r in ok_results}
    _archive(config, "sweep", ok_results, [(e.aperture, e.error) for e in result.entries if not e.ok])
    manifest.timings = {
        "per_angle_seconds": {f"{r.aperture.theta:.17g}": r.timings.get("solve_layer_seconds") for r in ok_results},
        "total_seconds": time.perf_counter() - started,
    }
    manifest.write(out)
    return EXIT_OK


def cmd_plot_modes(config: RunConfig) -> int:
    """mode_j.svg contour plots with nodal lines, profiles.svg and a nodal summary"""
    started = time.perf_counter()
    out = _out_dir(config)
    result = _solve(config)
    mesh, system, spectrum = result.mesh, result.system, result.spectrum
    domain = mesh.domain or build_domain(result.aperture, result.s_max)

    manifest = Manifest("plot-modes", config.resolved(), mesh=mesh.stats(), convergence=_convergence(result))
    rows, profiles = [], []
    for j in range(1, len(spectrum) + 1):
        field = system.expand(spectrum.vector(j))
        nodal = nodal_extract(mesh, field)
        spacing = node_spacing_report(nodal)
        clearance = tip_clearance(nodal, domain)
        profile = profile_report(mesh, result.aperture, field)
        profiles.append(profile)
        manifest.add_file(plots.plot_mode(domain, nodal, j, float(result.eigenvalues[j - 1]),
                                          out / f"mode_{j}.svg", config.vertical_scale, config.contour_levels))
        rows.append({
            "j": j,
            "lambda": result.eigenvalues[j - 1],
            "sign_domains": nodal.sign_domains,
            "nodal_lines": nodal.line_count,
            "midline_nodes": spacing.positions,
            "spacings": spacing.spacings,
            "cap_spacings": spacing.cap_spacings,
            "spacings_increasing": spacing.increasing,
            "tip_distance": clearance.distance,
            "nodal_line_in_tip_cap": clearance.in_cap,
            "dominant_peak_z": profile.dominant_peak,
            "farthest_peak_z": profile.farthest_peak,
        })
    manifest.add_file(plots.plot_profiles(profiles, out / "profiles.svg"))
    manifest.add_file(write_json({"aperture": result.aperture.describe(), "modes": rows}, out / "nodal.json"))
    manifest.timings = {**result.timings, "total_seconds": time.perf_counter() - started}
    manifest.write(out)
    return EXIT_OK


def _fem_count(sweep_file: Path, theta: float, lambda_bar: float) -> Optional[int]:
    table = read_table(sweep_file)
    if "status" in table.columns:
        table = table[table["status"] == "ok"]
    rows = table[np.abs(table["angle_theta_rad"] - theta) <= FEM_ANGLE_TOL]
    if rows.empty:
        return None
    below = (rows["lambda"] < lambda_bar) & rows["converged"].astype(bool)
    return int(below.sum())


def cmd_bound(config: RunConfig) -> int:
    """bound.json with the inscribed-cylinder count, compared with FEM results if given"""
    out = _out_dir(config)
    aperture = config.aperture
    bound = cylinder_count_bound(aperture, config.lambda_bar)
    payload = bound.as_dict()
    if config.sweep_file is not None:
        fem = _fem_count(Path(config.sweep_file), aperture.theta, config.lambda_bar)
        payload["fem_count"] = fem
        payload["fem_count_ge_N"] = None if fem is None else fem >= bound.N
        if fem is None:
            logger.warning("no row for theta=%.17g in %s", aperture.theta, config.sweep_file)
    manifest = Manifest("bound", config.resolved())
    manifest.add_file(write_json(payload, out / "bound.json"))
    manifest.write(out)
    return EXIT_OK


def cmd_mesh_export(config: RunConfig) -> int:
    """mesh.txt for the configured angle; A.txt and B.txt with ``matrices``"""
    started = time.perf_counter()
    out = _out_dir(config)
    aperture = config.aperture
    policy = config.policy()
    s_max = config.s_max if config.s_max is not None else initial_s_max(aperture, policy)
    mesh = generate_mesh(build_domain(aperture, s_max), policy.h, policy.grading, policy.min_angle_deg)

    manifest = Manifest("mesh-export", config.resolved(), mesh={**mesh.stats(), "s_max": s_max})
    manifest.add_file(write_mesh(mesh, out / "mesh.txt"))
    if config.matrices:
        system = assemble_weighted(mesh, aperture, config.m)
        manifest.add_file(write_matrix(system.A, out / "A.txt"))
        manifest.add_file(write_matrix(system.B, out / "B.txt"))
        manifest.mesh["n_free"] = system.n_free
    manifest.timings = {"total_seconds": time.perf_counter() - started}
    manifest.write(out)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "plot-modes": cmd_plot_modes,
    "bound": cmd_bound,
    "mesh-export": cmd_mesh_export,
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file or an earlier manifest.json")
    angle = common.add_mutually_exclusive_group()
    angle.add_argument("--theta-rad", help="cone angle theta in radians")
    angle.add_argument("--theta-deg", help="cone angle theta in degrees")
    angle.add_argument("--beta-deg", help="opening beta = 90 - theta in degrees")
    common.add_argument("--m", type=int, help="partial wave (default 0)")
    common.add_argument("--k", type=int, help="number of eigenpairs (default 7)")
    common.add_argument("--h", type=float, help="mesh size away from the tip (default 0.25)")
    common.add_argument("--grading", type=float, help="tip refinement factor (default 4)")
    common.add_argument("--s-max", help="truncation, or 'auto' for doubling (default auto)")
    common.add_argument("--no-refine", dest="refine", action="store_const", const=False,
                        help="skip the refinement check and extrapolation")
    common.add_argument("--sigma", type=float, help="shift for shift-invert")
    common.add_argument("--tol", type=float, help="relative residual tolerance (default 1e-9)")
    common.add_argument("--max-iter", type=int, help="eigensolver iteration cap")
    common.add_argument("--out", type=Path, help="output directory (default ./out)")
    common.add_argument("--archive", type=Path, help="SQLite results archive to append to")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conelayer", description="Bound states of conical layers")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common_options()

    sub.add_parser("solve", parents=[common], help="lowest eigenvalues at one angle")
    sub.add_parser("sweep", parents=[common], help="eigenvalue branches over angles",
                   description="angles: '2.5', '1,2,5' or an inclusive range 'start:stop:step'")
    p = sub.add_parser("plot-modes", parents=[common], help="contour plots of the eigenfunctions")
    p.add_argument("--vertical-scale", type=float, help="z-axis compression factor (default 1)")
    p.add_argument("--contour-levels", type=int, help="number of filled contour levels")
    p = sub.add_parser("bound", parents=[common], help="inscribed-cylinder eigenvalue count")
    p.add_argument("--lambda-bar", type=float, help="level in (lambda_0, 1)")
    p.add_argument("--sweep-file", type=Path, help="sweep.csv or spectrum.csv for the FEM comparison")
    p = sub.add_parser("mesh-export", parents=[common], help="write the mesh and optionally A, B")
    p.add_argument("--matrices", action="store_const", const=True, help="also write A.txt and B.txt")
    return parser


def _error_file(out: Optional[Path], exc: BaseException) -> None:
    if out is None:
        return
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json({"error": type(exc).__name__, "message": str(exc)}, out / ERROR_FILE)
    except OSError as write_exc:
        logger.error("cannot write %s: %s", ERROR_FILE, write_exc)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    options = vars(args).copy()
    command = options.pop("command")
    options.pop("log_level")
    config_path = options.pop("config", None)
    try:
        file_values = read_config_file(config_path) if config_path else {}
        config = build_config(command, file_values, options)
    except ConfigError as exc:
        print(f"conelayer {command}: error: {exc}", file=sys.stderr)
        _error_file(options.get("out"), exc)
        return EXIT_USAGE

    logger.info("running %s with %s", command, config.resolved())
    try:
        return COMMANDS[command](config)
    except ConeLayerError as exc:
        logger.error("%s failed: %s", command, exc)
        _error_file(Path(config.out), exc)
        return EXIT_FAILURE
    except Exception as exc:
        logger.exception("%s failed unexpectedly", command)
        _error_file(Path(config.out), exc)
        return EXIT_FAILURE
