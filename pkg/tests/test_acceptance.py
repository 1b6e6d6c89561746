"""End-to-end acceptance criteria at their contractual tolerances.

Each test prints one ``ACCEPTANCE <n> <name>: PASS`` line (run with ``-s`` to
see them live).  Criteria that share expensive artifacts (the default-grid
geometry and the 20-variation suite) reuse module-scoped fixtures; the
determinism criterion rebuilds everything from scratch by design.
"""

import time

import numpy as np
import pytest

import soliton_stability as ss
from soliton_stability.geometry import curvature_tensor
from soliton_stability.reports import reports_to_json
from soliton_stability.stability import (
    default_grid_for_support,
    first_variation_fd,
    integration_by_parts_report,
    prepare_variation,
)
from soliton_stability.variations import ricci_identity_residual
from soliton_stability.wirtinger import closed_form_deviations

SUITE_SEED = 1
SUITE_COUNT = 20


def report(n, name, detail=""):
    print(f"\nACCEPTANCE {n} {name}: PASS {detail}")


@pytest.fixture(scope="module")
def default_gg(grim_reaper, structure, gr_support):
    grid = default_grid_for_support(grim_reaper, gr_support, cells=40, points_per_cell=8)
    return ss.grid_geometry(grim_reaper, structure, grid)


@pytest.fixture(scope="module")
def suite(grim_reaper, structure, gr_support, default_gg):
    t0 = time.perf_counter()
    reports, _ = ss.run_variation_suite(
        grim_reaper,
        structure,
        count=SUITE_COUNT,
        base_seed=SUITE_SEED,
        support=gr_support,
        geometry=default_gg,
    )
    return reports, time.perf_counter() - t0


def test_criterion_1_geometry_oracle(grim_reaper, structure):
    t0 = time.perf_counter()
    dev = closed_form_deviations(grim_reaper, structure, n=50)
    elapsed = time.perf_counter() - t0
    assert max(dev.values()) <= 1e-10, dev
    assert elapsed < 5.0
    report(1, "geometry-oracle", f"(max deviation {max(dev.values()):.2e}, {elapsed:.2f}s)")


def test_criterion_2_soliton_certificate(grim_reaper, flat_plane, structure):
    rep = ss.soliton_residual(grim_reaper, structure, ss.uniform_grid(grim_reaper, 50))
    assert rep.max_soliton_residual <= 1e-10
    assert rep.max_lagrangian_defect <= 1e-12
    rep_fp = ss.soliton_residual(flat_plane, structure, ss.uniform_grid(flat_plane, 50))
    assert rep_fp.max_soliton_residual <= 1e-14  # zero up to round-off
    report(
        2,
        "soliton-certificate",
        f"(cylinder residual {rep.max_soliton_residual:.2e}, "
        f"defect {rep.max_lagrangian_defect:.2e}, plane residual {rep_fp.max_soliton_residual:.2e})",
    )


def test_criterion_3_identity_suite(suite):
    reports, elapsed = suite
    assert len(reports) == SUITE_COUNT
    worst_pair = max(r.max_pairwise_rel_diff for r in reports)
    worst_fd = max(r.fd_rel_diff for r in reports)
    for r in reports:
        assert r.max_pairwise_rel_diff <= 1e-6
        assert r.fd_rel_diff <= 1e-4
        assert r.Fpp_square >= 0.0
        assert r.Fpp_operator >= -1e-6 * r.scale
    assert elapsed < 60.0
    report(
        3,
        "second-variation-identity",
        f"(20 variations, pairwise {worst_pair:.2e}, fd {worst_fd:.2e}, {elapsed:.1f}s)",
    )


def test_criterion_4_lagrangian_hypothesis_necessary(default_gg, suite):
    reports, _ = suite
    assert all(r.max_pairwise_rel_diff < 1e-6 for r in reports)
    theta = ss.random_generic_variation(default_gg.grid.box, seed=7)
    data = prepare_variation(default_gg, theta)
    op = ss.second_variation_operator(default_gg, theta, data=data)
    sq = ss.second_variation_square(default_gg, theta, data=data)
    scale = ss.variation_scale(default_gg, theta, data=data)
    gap = abs(sq - op) / scale
    assert gap > 1e-2
    report(4, "closedness-hypothesis", f"(non-closed gap {gap:.2e} vs closed < 1e-6)")


def test_criterion_5_proof_step_identities(default_gg, grim_reaper, structure):
    _, _, ricci = curvature_tensor(grim_reaper, structure, None, pg=default_gg.pg)
    worst_ricci = 0.0
    worst_parts = 0.0
    for seed in range(SUITE_SEED, SUITE_SEED + 10):
        theta = ss.random_hamiltonian_variation(default_gg.grid.box, seed=seed)
        worst_ricci = max(worst_ricci, ricci_identity_residual(theta, default_gg.pg, ricci))
        rep = integration_by_parts_report(default_gg, theta)
        scale = ss.variation_scale(default_gg, theta)
        worst_parts = max(worst_parts, rep.max_mismatch() / scale)
    assert worst_ricci <= 1e-7
    assert worst_parts <= 1e-6
    gauss_worst = 0.0
    for chart in (grim_reaper, ss.perturbed_grim_reaper(0.05), ss.flat_lagrangian_plane()):
        r_int, r_gauss, _ = curvature_tensor(chart, structure, ss.uniform_grid(chart, 20))
        gauss_worst = max(gauss_worst, float(np.max(np.abs(r_int - r_gauss))))
    assert gauss_worst <= 1e-8
    report(
        5,
        "proof-step-identities",
        f"(ricci {worst_ricci:.2e}, gauss {gauss_worst:.2e}, by-parts {worst_parts:.2e})",
    )


def test_criterion_6_cylinder_stability_pipeline(gr_support):
    grid = ss.tensor_rule(gr_support, cells=20, points_per_cell=8)
    for i in range(10):
        v3 = ss.random_polynomial_field(gr_support, seed=SUITE_SEED + i)
        v4 = ss.random_polynomial_field(gr_support, seed=SUITE_SEED + 100 + i)
        res = ss.cylinder_stability_integrals(v3, v4, grid)
        assert res.curvature_integral <= res.gradient_integral
        assert np.all(res.slice_lhs <= res.slice_rhs + 1e-12)
    gap = ss.dirichlet_gap(2000)
    assert abs(gap - 1.0) <= 1e-3
    report(6, "cylinder-stability", f"(10 pairs ok, dirichlet gap {gap:.6f})")


def test_criterion_7_criticality(suite, flat_plane, structure, perturbed):
    reports, _ = suite
    worst = max(abs(r.first_var) / r.scale for r in reports)
    assert worst <= 1e-9
    fp_reports, _ = ss.run_variation_suite(
        flat_plane, structure, count=10, base_seed=SUITE_SEED, cells=12, points_per_cell=6
    )
    worst_fp = max(abs(r.first_var) / r.scale for r in fp_reports)
    assert worst_fp <= 1e-9
    support = ss.default_support_box(perturbed.domain)
    grid = default_grid_for_support(perturbed, support, cells=20, points_per_cell=8)
    gg = ss.grid_geometry(perturbed, structure, grid)
    worst_fd = 0.0
    for seed in (SUITE_SEED, SUITE_SEED + 1):
        theta = ss.random_hamiltonian_variation(support, seed=seed)
        fv = ss.first_variation(gg, theta)
        fd = first_variation_fd(gg, theta)
        worst_fd = max(worst_fd, abs(fv - fd) / abs(fd))
    assert worst_fd <= 1e-6
    report(
        7,
        "criticality",
        f"(soliton {max(worst, worst_fp):.2e} rel, non-soliton fd match {worst_fd:.2e})",
    )


def test_criterion_8_determinism(grim_reaper, structure, gr_support, suite):
    reports_a, _ = suite
    json_a = reports_to_json(reports_a)
    reports_b, _ = ss.run_variation_suite(
        grim_reaper,
        structure,
        count=SUITE_COUNT,
        base_seed=SUITE_SEED,
        support=gr_support,
        workers=1,
    )
    json_b = reports_to_json(reports_b)
    assert json_a.encode() == json_b.encode()
    report(8, "determinism", f"({len(json_a)} bytes, identical)")
