"""One-form fields, covariant calculus, and the normal-field correspondence."""

import numpy as np
import pytest

import soliton_stability as ss
import soliton_stability.jets as J
from soliton_stability.errors import ConfigurationError, UnsupportedChartError
from soliton_stability.geometry import curvature_tensor
from soliton_stability.variations import (
    FormJets,
    frame_covariant_matrix,
    ricci_identity_residual,
    window_jet,
)


@pytest.fixture(scope="module")
def support(gr_support):
    return gr_support


def interior_points(support, n=7):
    axes = [np.linspace(lo, hi, n + 2)[1:-1] for lo, hi in support]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def test_window_vanishes_to_third_order(support):
    lo, hi = support[0]
    pts = np.array([[lo, 0.0], [hi, 0.0]])
    s, _ = J.variables(pts, order=3)
    w = window_jet(s, lo, hi)
    assert np.allclose(w.val, 0.0)
    assert np.allclose(w.d1, 0.0)
    assert np.allclose(w.d2, 0.0)


def test_field_zero_outside_support(support):
    phi = ss.random_polynomial_field(support, seed=2)
    outside = np.array([[support[0, 1] + 0.05, 0.0], [0.0, support[1, 1] + 0.2]])
    j = phi.eval_jets(outside, order=3)
    for arr in (j.val, j.d1, j.d2, j.d3):
        assert np.all(arr == 0.0)


def test_polynomial_fast_path_matches_builder(support):
    phi = ss.random_polynomial_field(support, seed=5)
    pts = interior_points(support, 5)
    fast = phi.eval_jets(pts, order=3)
    slow_field = ss.ScalarField(phi.support, phi.builder, name="slow")
    slow = slow_field.eval_jets(pts, order=3)
    for a, b in ((fast.val, slow.val), (fast.d1, slow.d1), (fast.d2, slow.d2), (fast.d3, slow.d3)):
        assert np.allclose(a, b, atol=1e-12)


def test_exact_forms_are_closed(support):
    pts = interior_points(support)
    for seed in range(5):
        theta = ss.random_hamiltonian_variation(support, seed=seed)
        assert ss.lagrangian_defect(theta, pts) <= 1e-12
    zero = ss.hamiltonian_variation(ss.scalar_field_from_expression("0", support))
    assert ss.lagrangian_defect(zero, pts) == 0.0


def test_hand_differentiated_potential(support):
    # phi = cos(x) * window(y): theta_x = -sin(x) * window(y) inside the support
    phi = ss.scalar_field_from_expression("cos(x)", support, window=(False, True))
    theta = ss.hamiltonian_variation(phi)
    pts = interior_points(support, 5)
    fj = theta.eval_jets(pts, order=1)
    lo, hi = support[1]
    s, t = J.variables(pts, order=1)
    taper = window_jet(t, lo, hi)
    assert np.allclose(fj.val[:, 0], -np.sin(pts[:, 0]) * taper.val, atol=1e-13)


def test_generic_form_is_not_closed(support):
    theta = ss.generic_variation(
        [ss.bump_field(support), ss.scalar_field_from_expression("0", support)]
    )
    pts = interior_points(support)
    assert theta.kind == "generic"
    assert ss.lagrangian_defect(theta, pts) > 1e-3


def test_components_must_share_support(support):
    other = support + 0.01
    with pytest.raises(ConfigurationError):
        ss.generic_variation([ss.bump_field(support), ss.bump_field(other)])


def test_covariant_divergence_on_flat_plane(fp_geometry_small):
    gg = fp_geometry_small
    support = gg.grid.box
    phi = ss.random_polynomial_field(support, seed=9)
    theta = ss.hamiltonian_variation(phi)
    cov = ss.covariant_calculus(theta, gg.pg)
    # flat coordinates: divergence of d(phi) is the coordinate Laplacian
    pj = phi.eval_jets(gg.pg.points, order=2)
    flat_lap = pj.d2[:, 0, 0] + pj.d2[:, 1, 1]
    assert np.max(np.abs(cov.div - flat_lap)) < 1e-11


def test_ricci_identity(gr_geometry_small, grim_reaper, structure):
    """Rough Laplacian vs gradient-of-divergence plus Ricci, for closed forms."""
    gg = gr_geometry_small
    _, _, ricci = curvature_tensor(grim_reaper, structure, None, pg=gg.pg)
    for seed in range(10):
        theta = ss.random_hamiltonian_variation(gg.grid.box, seed=seed)
        resid = ricci_identity_residual(theta, gg.pg, ricci)
        assert resid < 1e-7


def test_ricci_identity_on_curved_chart(perturbed, structure):
    """Same identity where the Ricci term is genuinely nonzero."""
    support = ss.default_support_box(perturbed.domain)
    grid = ss.tensor_rule(support, cells=6, points_per_cell=5)
    gg = ss.grid_geometry(perturbed, structure, grid)
    _, _, ricci = curvature_tensor(perturbed, structure, None, pg=gg.pg)
    assert np.max(np.abs(ricci)) > 1e-4
    theta = ss.random_hamiltonian_variation(support, seed=3)
    assert ricci_identity_residual(theta, gg.pg, ricci) < 1e-7


def test_frame_covariant_symmetry_for_closed_forms(gr_geometry_small):
    gg = gr_geometry_small
    theta = ss.random_hamiltonian_variation(gg.grid.box, seed=4)
    cov = ss.covariant_calculus(theta, gg.pg)
    nf = frame_covariant_matrix(cov.nabla, gg.pg)
    assert np.max(np.abs(nf - nf.swapaxes(1, 2))) < 1e-9


def test_round_trip_form_field_form(gr_geometry_small):
    gg = gr_geometry_small
    theta = ss.random_hamiltonian_variation(gg.grid.box, seed=8)
    fj = theta.eval_jets(gg.pg.points, order=1)
    v = ss.normal_field_from_form(fj, gg.pg)
    back = ss.one_form_pullback(gg.pg, v)
    assert np.max(np.abs(back - fj.val)) < 1e-12
    # V is normal: orthogonal to both tangents
    tang = np.einsum("np,npa->na", v, gg.pg.tangents)
    assert np.max(np.abs(tang)) < 1e-12


def test_unit_form_gives_unit_normal(grim_reaper, structure):
    # theta = dx at the origin corresponds to V = J e_1 = (1, 0, 0, 0)
    pg = ss.point_geometry(grim_reaper, structure, np.array([[0.0, 0.0]]))
    fj = FormJets(1, np.array([[1.0, 0.0]]), np.zeros((1, 2, 2)))
    v = ss.normal_field_from_form(fj, pg)
    assert np.allclose(v, [[1.0, 0.0, 0.0, 0.0]], atol=1e-14)
    assert np.isclose(np.linalg.norm(v), 1.0)


def test_correspondence_requires_lagrangian(structure):
    patch = ss.non_lagrangian_patch()
    pg = ss.point_geometry(patch, structure, np.array([[0.1, 0.1]]))
    fj = FormJets(1, np.array([[1.0, 0.0]]), np.zeros((1, 2, 2)))
    with pytest.raises(UnsupportedChartError):
        ss.normal_field_from_form(fj, pg)


def test_variation_field_jets_match_correspondence(gr_geometry_small, grim_reaper, structure):
    gg = gr_geometry_small
    theta = ss.random_hamiltonian_variation(gg.grid.box, seed=12)
    v_val, v_d1 = ss.variation_field_jets(theta, grim_reaper, structure, gg.pg.points, gg.jets)
    v_direct = ss.normal_field_from_form(theta.eval_jets(gg.pg.points, order=1), gg.pg)
    assert np.max(np.abs(v_val - v_direct)) < 1e-12
    # derivative slot cross-checked by finite differences at one interior node
    idx = len(gg.pg.points) // 2
    u0 = gg.pg.points[idx]
    h = 1e-5
    for axis in range(2):
        up, um = u0.copy(), u0.copy()
        up[axis] += h
        um[axis] -= h
        pts = np.array([up, um])
        pg_pair = ss.point_geometry(grim_reaper, structure, pts)
        v_pair = ss.normal_field_from_form(theta.eval_jets(pts, order=1), pg_pair)
        fd = (v_pair[0] - v_pair[1]) / (2 * h)
        assert np.max(np.abs(v_d1[idx, :, axis] - fd)) < 1e-8


def test_non_finite_field_is_reported(support):
    bad = ss.scalar_field_from_expression("log(x - 100)", support)
    with pytest.raises(ss.EvaluationError):
        bad.eval_jets(np.array([[0.0, 0.0]]), order=2)


def test_support_margin_validation(grim_reaper):
    domain = grim_reaper.domain
    ss.variations.require_support_inside(domain, ss.default_support_box(domain))
    hugging = domain.copy()  # zero margin
    with pytest.raises(ConfigurationError):
        ss.variations.require_support_inside(domain, hugging)
