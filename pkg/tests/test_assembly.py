import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import pytest

from src.assembly import (
    CONSTRAINED,
    Formulation,
    apply_dirichlet,
    assemble_scaled,
    assemble_skew,
    assemble_weighted,
    collapsed_gauss_rule,
    element_matrices,
    read_matrix,
    seven_point_rule,
    write_matrix,
)
from src.assembly.forms import skew_metric
from src.assembly.quadrature import subdivision_rule
from src.assembly.system import unconstrained
from src.eigensolve import EigenSolveParams, solve_lowest
from src.geometry import Aperture, BoundaryTag, rectangle_mesh, weight_r
from src.geometry.mesh import build_p2
from src.oracles import cylinder_spectrum, rectangle_spectrum
from src.utils.errors import AssemblyError, EmptySystemError

from conftest import CYLINDER_SIDES, flat_weight, radial_weight

P2_REFERENCE_MASS = np.array([
    [6, -1, -1, 0, -4, 0],
    [-1, 6, -1, 0, 0, -4],
    [-1, -1, 6, -4, 0, 0],
    [0, 0, -4, 32, 16, 16],
    [-4, 0, 0, 16, 32, 16],
    [0, -4, 0, 16, 16, 32],
]) / 180.0


def _single_triangle(corners=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))):
    return build_p2(
        np.array(corners), np.array([[0, 1, 2]]),
        lambda v, e: np.full(e.shape[0], int(BoundaryTag.WALL_OUTER)),
    )


def _exact_monomial(a, b):
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def _integrate(rule, a, b):
    x, y = rule.points[:, 1], rule.points[:, 2]
    return float(np.sum(rule.weights * x ** a * y ** b))


@pytest.mark.parametrize("rule", [seven_point_rule(), collapsed_gauss_rule(4), subdivision_rule(seven_point_rule(), 2)])
def test_quadrature_exact_to_its_degree(rule):
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(rule.points.sum(axis=1), 1.0)
    for a in range(rule.degree + 1):
        for b in range(rule.degree + 1 - a):
            assert _integrate(rule, a, b) == pytest.approx(_exact_monomial(a, b), rel=1e-12, abs=1e-15)


def test_subdivision_multiplies_points():
    assert subdivision_rule(seven_point_rule(), 3).size == 7 * 64


def test_p2_reference_mass_matrix():
    mesh = _single_triangle()
    K, M = element_matrices(mesh, flat_weight)
    assert np.allclose(M[0], 0.5 * P2_REFERENCE_MASS, atol=1e-15)
    # constants lie in the kernel of the stiffness
    assert np.allclose(K[0] @ np.ones(6), 0.0, atol=1e-13)
    assert np.allclose(K[0], K[0].T, atol=1e-14)


def test_mass_scales_with_area():
    mesh = _single_triangle(((1.0, 1.0), (4.0, 1.0), (1.0, 3.0)))
    _, M = element_matrices(mesh, flat_weight)
    assert np.allclose(M[0], 3.0 * P2_REFERENCE_MASS, atol=1e-14)


def test_assembled_matrices_are_bitwise_symmetric(coarse_mesh_80, aperture_80):
    system = assemble_weighted(coarse_mesh_80, aperture_80)
    assert (system.A - system.A.T).nnz == 0
    assert (system.B - system.B.T).nnz == 0
    assert system.formulation is Formulation.WEIGHTED_SU
    assert np.all(system.A.diagonal() > 0.0)
    assert np.all(system.B.diagonal() > 0.0)


def test_axis_is_natural_only_for_m_zero(coarse_mesh_80, aperture_80):
    axis_nodes = coarse_mesh_80.nodes_on([BoundaryTag.AXIS])
    wall_nodes = coarse_mesh_80.nodes_on([BoundaryTag.WALL_OUTER, BoundaryTag.WALL_INNER, BoundaryTag.TRUNCATION])
    m0 = assemble_weighted(coarse_mesh_80, aperture_80, m=0)
    m1 = assemble_weighted(coarse_mesh_80, aperture_80, m=1)
    interior_axis = np.setdiff1d(axis_nodes, wall_nodes)
    assert np.all(m0.dof_map[interior_axis] != CONSTRAINED)
    assert np.all(m1.dof_map[axis_nodes] == CONSTRAINED)
    assert np.all(m0.dof_map[wall_nodes] == CONSTRAINED)
    assert m1.n_free == m0.n_free - interior_axis.size
    assert BoundaryTag.AXIS in m1.constrained_tags


def test_expand_restrict_inverse(coarse_mesh_80, aperture_80):
    system = assemble_weighted(coarse_mesh_80, aperture_80, m=1)
    x = np.arange(system.n_free, dtype=float)
    field = system.expand(x)
    assert field.shape == (coarse_mesh_80.n_nodes,)
    assert np.array_equal(system.restrict(field), x)


def test_scaled_form_at_same_angle_is_weighted_form(coarse_mesh_80, aperture_80):
    weighted = assemble_weighted(coarse_mesh_80, aperture_80, m=2)
    scaled = assemble_scaled(coarse_mesh_80, aperture_80, aperture_80.theta, m=2)
    assert scaled.formulation is Formulation.SCALED_SU
    assert abs(scaled.A - weighted.A).max() <= 1e-13 * abs(weighted.A).max()
    assert abs(scaled.B - weighted.B).max() == 0.0


def test_scaling_the_weight_scales_the_pencil(coarse_mesh_80, aperture_80):
    plain = assemble_weighted(coarse_mesh_80, aperture_80)
    tripled = assemble_weighted(
        coarse_mesh_80, aperture_80, weight_override=lambda s, u: 3.0 * weight_r(s, u, aperture_80)
    )
    assert abs(tripled.A - 3.0 * plain.A).max() <= 1e-12 * abs(plain.A).max()
    assert abs(tripled.B - 3.0 * plain.B).max() <= 1e-12 * abs(plain.B).max()
    params = EigenSolveParams(k=2, threshold=10.0)
    assert np.allclose(solve_lowest(tripled, params).eigenvalues, solve_lowest(plain, params).eigenvalues, rtol=1e-10)


def test_scaled_form_rejects_bad_angle(coarse_mesh_80, aperture_80):
    with pytest.raises(ValueError):
        assemble_scaled(coarse_mesh_80, aperture_80, math.pi / 2)


def test_unknown_tag_and_empty_system():
    mesh = _single_triangle()
    K, M = element_matrices(mesh, flat_weight)
    system = unconstrained(sp.csr_matrix(K[0]), sp.csr_matrix(M[0]), mesh, 0, Formulation.WEIGHTED_SU)
    with pytest.raises(ValueError):
        apply_dirichlet(system, [BoundaryTag.AXIS])
    with pytest.raises(EmptySystemError):
        apply_dirichlet(system, [BoundaryTag.WALL_OUTER])


def test_dirichlet_constraints_raise_every_eigenvalue():
    mesh = rectangle_mesh(1.0, 1.0, 4, 4, CYLINDER_SIDES)
    natural = assemble_weighted(mesh, Aperture.from_theta(math.pi / 4), weight_override=flat_weight)
    clamped = apply_dirichlet(natural, [BoundaryTag.AXIS])
    before = sla.eigh(natural.A.toarray(), natural.B.toarray(), eigvals_only=True)
    after = sla.eigh(clamped.A.toarray(), clamped.B.toarray(), eigvals_only=True)
    assert 0 < after.size < before.size
    assert np.all(after >= before[: after.size] * (1.0 - 1e-10))


def _transverse_sine_quotient(n):
    mesh = rectangle_mesh(2.0, math.pi, n, n, CYLINDER_SIDES)
    system = assemble_weighted(mesh, Aperture.from_theta(math.pi / 4), weight_override=flat_weight, constrain=False)
    x = np.sin(mesh.points[:, 1])
    return float(x @ (system.A @ x)) / float(x @ (system.B @ x))


def test_transverse_sine_quotient_is_fourth_order():
    coarse = abs(_transverse_sine_quotient(4) - 1.0)
    fine = abs(_transverse_sine_quotient(8) - 1.0)
    assert fine < 1e-3
    assert fine < coarse / 8.0


def test_potential_rejects_quadrature_points_on_the_axis():
    # a triangle lying across r = 0 puts interior quadrature points at negative radius
    mesh = _single_triangle(((-0.5, 0.0), (1.0, 0.0), (0.0, 1.0)))
    with pytest.raises(AssemblyError):
        element_matrices(mesh, radial_weight, m=1)


def test_unit_square_matches_dirichlet_spectrum(unit_square_mesh):
    system = assemble_weighted(unit_square_mesh, Aperture.from_theta(math.pi / 4), weight_override=flat_weight)
    spectrum = solve_lowest(system, EigenSolveParams(k=3, sigma=5.0, threshold=1000.0))
    exact = rectangle_spectrum(1.0, 1.0, 3)
    assert exact[0] == pytest.approx(2.0 * math.pi ** 2)
    assert spectrum.eigenvalues[0] == pytest.approx(exact[0], rel=1e-3)
    assert np.allclose(spectrum.eigenvalues, exact, rtol=5e-3)
    # conforming elements approximate from above
    assert np.all(spectrum.eigenvalues >= exact - 1e-9)
    assert spectrum.all_converged


def test_axisymmetric_cylinder_matches_bessel_spectrum():
    mesh = rectangle_mesh(1.0, 1.0, 8, 8, CYLINDER_SIDES)
    system = assemble_weighted(mesh, Aperture.from_theta(math.pi / 4), weight_override=radial_weight)
    spectrum = solve_lowest(system, EigenSolveParams(k=2, sigma=5.0, threshold=1000.0))
    exact = cylinder_spectrum(1.0, 1.0, 2)
    assert exact[0] == pytest.approx(15.6528, abs=1e-4)
    assert spectrum.eigenvalues[0] == pytest.approx(exact[0], rel=1e-3)
    assert np.allclose(spectrum.eigenvalues, exact, rtol=5e-3)
    assert np.all(spectrum.eigenvalues >= exact - 1e-9)


def test_long_cylinder_of_radius_pi():
    mesh = rectangle_mesh(math.pi, 40.0, 16, 160, CYLINDER_SIDES)
    system = assemble_weighted(mesh, Aperture.from_theta(math.pi / 4), weight_override=radial_weight)
    spectrum = solve_lowest(system, EigenSolveParams(k=5, threshold=10.0))
    exact = cylinder_spectrum(math.pi, 40.0, 5)
    # transverse ground level plus the first five axial harmonics
    assert np.allclose(exact - exact[0], (math.pi / 40.0) ** 2 * (np.arange(1, 6) ** 2 - 1))
    assert np.allclose(spectrum.eigenvalues, exact, rtol=1e-3)
    assert np.all(spectrum.eigenvalues >= exact - 1e-9)
    assert spectrum.all_converged


def test_skew_metric_is_unimodular(aperture_80):
    g = skew_metric(aperture_80)
    assert np.allclose(g, g.T)
    assert np.linalg.det(g) == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.linalg.eigvalsh(g) > 0.0)


def test_skew_form_is_symmetric_with_natural_axis(aperture_80):
    system = assemble_skew(aperture_80, 20.0, 10, 4)
    assert system.formulation is Formulation.SKEW_YV
    assert (system.A - system.A.T).nnz == 0
    axis = system.mesh.nodes_on([BoundaryTag.AXIS])
    walls = system.mesh.nodes_on([BoundaryTag.WALL_OUTER, BoundaryTag.WALL_INNER, BoundaryTag.TRUNCATION])
    assert np.all(system.dof_map[np.setdiff1d(axis, walls)] != CONSTRAINED)
    assert np.all(system.dof_map[walls] == CONSTRAINED)


def test_skew_rejects_empty_rectangle(aperture_80):
    with pytest.raises(ValueError):
        assemble_skew(aperture_80, 0.0, 4, 4)


def test_matrix_export_round_trip(tmp_path, coarse_mesh_80, aperture_80):
    system = assemble_weighted(coarse_mesh_80, aperture_80)
    path = write_matrix(system.A, tmp_path / "A.txt")
    header = path.read_text().splitlines()[0].split()
    assert header[:2] == ["conelayer-matrix", "v1"]
    assert header[-1] == "sym"
    back = read_matrix(path)
    assert back.shape == system.A.shape
    assert abs(back - system.A).max() == 0.0


@pytest.mark.slow
def test_skew_and_weighted_forms_share_the_ground_state(aperture_80):
    from src.geometry import build_domain, generate_mesh

    params = EigenSolveParams(k=1, threshold=10.0)
    skew = solve_lowest(assemble_skew(aperture_80, 60.0, 480, 24), params)
    mesh = generate_mesh(build_domain(aperture_80, 60.0 + aperture_80.tip_s), h=0.25)
    weighted = solve_lowest(assemble_weighted(mesh, aperture_80), params)
    assert skew.eigenvalues[0] == pytest.approx(weighted.eigenvalues[0], rel=1e-3)


@pytest.mark.slow
def test_skew_and_weighted_forms_share_the_bound_states_at_sixty_degrees():
    from src.geometry import build_domain, generate_mesh

    ap = Aperture.from_theta(math.radians(60.0))
    params = EigenSolveParams(k=3, threshold=1.0)
    skew = solve_lowest(assemble_skew(ap, 40.0, 320, 24), params)
    mesh = generate_mesh(build_domain(ap, 40.0 + ap.tip_s), h=0.25)
    weighted = solve_lowest(assemble_weighted(mesh, ap), params)
    n = min(len(skew), len(weighted))
    assert n >= 1
    assert np.allclose(skew.eigenvalues[:n], weighted.eigenvalues[:n], rtol=1e-3)
