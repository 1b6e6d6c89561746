"""Weighted-area functional and its first/second variations by several routes.

The functional is ``F = integral of exp(<T, x>) d(area)``.  On a noncompact
chart only box-local values are finite, and since all variations here are
compactly supported, box-local values carry the full variational content:
everything outside the support box is constant along the deformation.

Second variation of F at a critical point (translator), for a variation with
associated one-form theta, by four routes:

* ``operator``    second-order route: pairs theta against the rough Laplacian
                  plus drift and curvature terms,
                  -int( <theta, lap theta + grad_{T^top} theta>_g + |h . V|^2 ) w dmu
* ``divergence``  first-order route after integration by parts,
                  int( |nabla theta|_g^2 - |h . V|^2 ) w dmu
* ``square``      the perfect-square route, valid for closed theta,
                  int( div theta^sharp + theta(T^top) )^2 w dmu  >= 0
* ``fd``          Richardson-extrapolated second difference of the box-local
                  functional along the straight-line flow Phi + s V.

The straight-line flow is justified exactly at critical points, where the
second derivative of F depends only on the first-order variation field; off
critical points the fd route is meaningless and the analytic routes refuse.

The drift term reads ``<T, grad V_i>`` as the covariant derivative of theta
along the tangential part of T, evaluated on the frame; the fd oracle is the
arbiter for that reading and validates it in the test suite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .charts import AmbientStructure, Chart, eval_jets
from .errors import NotASolitonError
from .geometry import PointGeometry, mean_curvature_vector, point_geometry
from .quadrature import QuadratureGrid, tensor_rule
from .variations import (
    OneFormField,
    covariant_calculus,
    default_support_box,
    normal_field_from_form,
    require_support_inside,
    variation_field_jets,
)

log = logging.getLogger("soliton_stability")

__all__ = [
    "GridGeometry",
    "grid_geometry",
    "VariationData",
    "prepare_variation",
    "functional_value",
    "first_variation",
    "first_variation_fd",
    "second_variation_operator",
    "second_variation_divergence",
    "second_variation_square",
    "second_variation_fd_oracle",
    "variation_scale",
    "integration_by_parts_report",
    "IntegrationByPartsReport",
    "scalar_laplacian",
    "scalar_gradient_pairing",
    "default_grid_for_support",
    "DEFAULT_SOLITON_TOL",
    "DEFAULT_CLOSED_TOL",
]

DEFAULT_SOLITON_TOL = 1e-8
DEFAULT_CLOSED_TOL = 1e-9


@dataclass
class GridGeometry:
    """Chart geometry evaluated once at the nodes of a quadrature grid."""

    chart: Chart
    structure: AmbientStructure
    grid: QuadratureGrid
    jets: object            # order-3 MapJets at the nodes
    pg: PointGeometry
    soliton_residual: float
    functional_at_rest: float

    @property
    def area_weight(self) -> np.ndarray:
        """Quadrature factor  exp(<T, Phi>) sqrt(det g)  at the nodes."""
        return self.pg.weight * self.pg.sqrt_det_g


def grid_geometry(chart: Chart, structure: AmbientStructure, grid: QuadratureGrid) -> GridGeometry:
    jets = eval_jets(chart, grid.nodes, order=3)
    pg = point_geometry(chart, structure, jets=jets)
    t_perp = structure.T[None, :] - np.einsum("ni,npi->np", pg.T_tan, pg.e)
    resid = float(np.max(np.linalg.norm(t_perp - mean_curvature_vector(pg), axis=1)))
    f0 = grid.integrate(pg.weight * pg.sqrt_det_g)
    return GridGeometry(chart, structure, grid, jets, pg, resid, f0)


def functional_value(
    chart: Chart,
    structure: AmbientStructure,
    box,
    cells: int = 40,
    points_per_cell: int = 8,
) -> float:
    """Box-local weighted area  int_box exp(<T, Phi>) sqrt(det g) du."""
    grid = tensor_rule(box, cells, points_per_cell)
    jets = eval_jets(chart, grid.nodes, order=1)
    g = np.einsum("nma,nmb->nab", jets.d1, jets.d1)
    weight = np.exp(np.einsum("p,np->n", structure.T, jets.val))
    return grid.integrate(weight * np.sqrt(np.linalg.det(g)))


def _deformed_functional(gg: GridGeometry, v_val, v_d1, s: float) -> float:
    tang = gg.jets.d1 + s * v_d1
    g = np.einsum("nma,nmb->nab", tang, tang)
    weight = np.exp(np.einsum("p,np->n", gg.structure.T, gg.jets.val + s * v_val))
    return gg.grid.integrate(weight * np.sqrt(np.linalg.det(g)))


def _require_soliton(gg: GridGeometry, tol: float) -> None:
    if gg.soliton_residual > tol:
        raise NotASolitonError(gg.soliton_residual, tol)


@dataclass
class VariationData:
    """One variation evaluated once at the grid nodes, shared by all routes."""

    theta: OneFormField
    fj: object               # order-2 FormJets
    cov: object              # CovariantData

    @property
    def defect(self) -> float:
        curl = self.fj.d1 - self.fj.d1.swapaxes(1, 2)
        return float(np.max(np.abs(curl)))


def prepare_variation(gg: GridGeometry, theta: OneFormField) -> VariationData:
    fj = theta.eval_jets(gg.pg.points, order=2)
    return VariationData(theta, fj, covariant_calculus(fj, gg.pg))


def _data(gg: GridGeometry, theta: OneFormField, data: VariationData | None) -> VariationData:
    return data if data is not None else prepare_variation(gg, theta)


def _field_on_grid(gg: GridGeometry, theta_or_field):
    """Ambient variation field values at the grid nodes."""
    if isinstance(theta_or_field, OneFormField):
        return normal_field_from_form(theta_or_field, gg.pg)
    return np.asarray(theta_or_field(gg.grid.nodes), dtype=float)


def first_variation(gg: GridGeometry, theta_or_field, data: VariationData | None = None) -> float:
    """d/ds of box-local F: the pairing  int <T^perp - H, V> w dmu."""
    pg = gg.pg
    if data is not None:
        v = normal_field_from_form(data.fj, pg)
    else:
        v = _field_on_grid(gg, theta_or_field)
    t_perp = gg.structure.T[None, :] - np.einsum("ni,npi->np", pg.T_tan, pg.e)
    integrand = np.einsum("np,np->n", t_perp - mean_curvature_vector(pg), v)
    return gg.grid.integrate(integrand * gg.area_weight)


def first_variation_fd(gg: GridGeometry, theta: OneFormField, step: float = 2e-3) -> float:
    """Richardson-extrapolated central difference of s -> F(Phi + s V)."""
    v_val, v_d1 = variation_field_jets(theta, gg.chart, gg.structure, gg.grid.nodes, gg.jets)

    def central(h):
        return (_deformed_functional(gg, v_val, v_d1, h) - _deformed_functional(gg, v_val, v_d1, -h)) / (
            2 * h
        )

    d1, d2 = central(step), central(step / 2)
    return (4 * d2 - d1) / 3


def variation_scale(
    gg: GridGeometry, theta: OneFormField, data: VariationData | None = None
) -> float:
    """Size of the variation:  int (|theta|_g^2 + |nabla theta|_g^2) w dmu.

    Used as the denominator of all relative agreement tolerances so that tiny
    fields cannot pass checks by accident.
    """
    pg = gg.pg
    d = _data(gg, theta, data)
    fj, cov = d.fj, d.cov
    sq_theta = np.einsum("nab,na,nb->n", pg.g_inv, fj.val, fj.val)
    sq_nabla = np.einsum("nac,nbd,nab,ncd->n", pg.g_inv, pg.g_inv, cov.nabla, cov.nabla)
    return gg.grid.integrate((sq_theta + sq_nabla) * gg.area_weight)


def second_variation_operator(
    gg: GridGeometry,
    theta: OneFormField,
    soliton_tol: float = DEFAULT_SOLITON_TOL,
    data: VariationData | None = None,
) -> float:
    """Second-order route through the rough Laplacian of theta.

    The curvature term is assembled from the frame components h_ijk, pairing
    the variation against itself through the full second fundamental form.
    """
    _require_soliton(gg, soliton_tol)
    pg = gg.pg
    d = _data(gg, theta, data)
    fj, cov = d.fj, d.cov
    pair_lap = np.einsum("nab,na,nb->n", pg.g_inv, fj.val, cov.laplacian)
    drift = np.einsum("nc,ncb->nb", pg.T_coord, cov.nabla)
    pair_drift = np.einsum("nab,na,nb->n", pg.g_inv, fj.val, drift)
    v_frame = np.einsum("nai,na->ni", pg.frame_coeff, fj.val)
    curv = np.einsum("nklp,nklq,np,nq->n", pg.h3, pg.h3, v_frame, v_frame)
    return -gg.grid.integrate((pair_lap + pair_drift + curv) * gg.area_weight)


def second_variation_divergence(
    gg: GridGeometry,
    theta: OneFormField,
    soliton_tol: float = DEFAULT_SOLITON_TOL,
    data: VariationData | None = None,
) -> float:
    """First-order route:  int (|nabla theta|^2 - |h paired with V|^2) w dmu.

    The curvature term here goes through the ambient-valued second
    fundamental form and the ambient variation field, independent of the
    frame route used by the operator form.
    """
    _require_soliton(gg, soliton_tol)
    pg = gg.pg
    d = _data(gg, theta, data)
    fj, cov = d.fj, d.cov
    sq_nabla = np.einsum("nac,nbd,nab,ncd->n", pg.g_inv, pg.g_inv, cov.nabla, cov.nabla)
    v = normal_field_from_form(fj, pg)
    h_v = np.einsum("nmab,nm->nab", pg.h_coord, v)
    curv = np.einsum("nik,njl,nij,nkl->n", pg.g_inv, pg.g_inv, h_v, h_v)
    return gg.grid.integrate((sq_nabla - curv) * gg.area_weight)


def second_variation_square(
    gg: GridGeometry,
    theta: OneFormField,
    soliton_tol: float = DEFAULT_SOLITON_TOL,
    closed_tol: float = DEFAULT_CLOSED_TOL,
    data: VariationData | None = None,
) -> float:
    """Perfect-square route:  int (div theta^sharp + theta(T^top))^2 w dmu.

    Nonnegative by construction.  Equals the other routes only for closed
    theta; a defect above ``closed_tol`` logs a warning instead of refusing,
    because the mismatch for non-closed forms is itself a test subject.
    """
    _require_soliton(gg, soliton_tol)
    d = _data(gg, theta, data)
    defect = d.defect
    if defect > closed_tol:
        log.warning(
            "square-form route on a non-closed form (defect %.3e > %.3e); "
            "its value will not match the other routes",
            defect,
            closed_tol,
        )
    pg = gg.pg
    fj, cov = d.fj, d.cov
    q = cov.div + np.einsum("na,na->n", fj.val, pg.T_coord)
    return gg.grid.integrate(q * q * gg.area_weight)


def second_variation_fd_oracle(
    gg: GridGeometry,
    theta: OneFormField,
    steps: tuple[float, float] = (2e-3, 1e-3),
    soliton_tol: float = DEFAULT_SOLITON_TOL,
    instability_tol: float | None = None,
    data: VariationData | None = None,
) -> float:
    """Second difference of the box-local functional along Phi + s V.

    Richardson-extrapolated over the two given steps.  Valid only at critical
    points, where the value depends on the variation field alone.
    """
    _require_soliton(gg, soliton_tol)
    fj = data.fj if data is not None else None
    v_val, v_d1 = variation_field_jets(
        theta, gg.chart, gg.structure, gg.grid.nodes, gg.jets, form_jets=fj
    )
    f0 = gg.functional_at_rest

    def second_difference(h):
        return (
            _deformed_functional(gg, v_val, v_d1, h)
            - 2 * f0
            + _deformed_functional(gg, v_val, v_d1, -h)
        ) / h**2

    h1, h2 = steps
    d1, d2 = second_difference(h1), second_difference(h2)
    r2 = (h1 / h2) ** 2
    value = (r2 * d2 - d1) / (r2 - 1)
    if instability_tol is not None and abs(value - d2) > instability_tol:
        log.warning(
            "fd oracle extrapolation levels disagree by %.3e (> %.3e); "
            "step sizes %s may be unreliable",
            abs(value - d2),
            instability_tol,
            steps,
        )
    return value


@dataclass(frozen=True)
class IntegrationByPartsReport:
    """Both sides of the two integration-by-parts identities in the square-form proof.

    ``divergence``: moving the gradient off the divergence scalar,
    ``drift``: moving the derivative off the drift pairing (uses the
    translator identity H_p = <T, nu_p> and the symmetry of nabla theta).
    """

    lhs_divergence: float
    rhs_divergence: float
    lhs_drift: float
    rhs_drift: float

    def max_mismatch(self) -> float:
        return max(
            abs(self.lhs_divergence - self.rhs_divergence),
            abs(self.lhs_drift - self.rhs_drift),
        )


def integration_by_parts_report(
    gg: GridGeometry, theta: OneFormField, data: VariationData | None = None
) -> IntegrationByPartsReport:
    pg = gg.pg
    d = _data(gg, theta, data)
    fj, cov = d.fj, d.cov
    w = gg.area_weight
    theta_t = np.einsum("na,na->n", fj.val, pg.T_coord)
    pair_grad_div = np.einsum("nab,na,nb->n", pg.g_inv, fj.val, cov.div_grad)
    lhs_div = -gg.grid.integrate(pair_grad_div * w)
    rhs_div = gg.grid.integrate((cov.div**2 + cov.div * theta_t) * w)

    drift = np.einsum("nc,ncb->nb", pg.T_coord, cov.nabla)
    lhs_drift = -gg.grid.integrate(np.einsum("nab,na,nb->n", pg.g_inv, fj.val, drift) * w)
    v_frame = np.einsum("nai,na->ni", pg.frame_coeff, fj.val)
    mean_curv_pair = np.einsum("np,nijp,ni,nj->n", pg.H_frame, pg.h3, v_frame, v_frame)
    rhs_drift = gg.grid.integrate((cov.div * theta_t + mean_curv_pair + theta_t**2) * w)
    return IntegrationByPartsReport(lhs_div, rhs_div, lhs_drift, rhs_drift)


# ---------------------------------------------------------------------------
# scalar helpers (drift-divergence identity, flat-plane cross-checks)


def scalar_laplacian(pg: PointGeometry, scalar_jet) -> np.ndarray:
    """Laplace-Beltrami of a scalar:  g^{ab} (d_a d_b v - Gamma^l_ab d_l v)."""
    hess = scalar_jet.d2 - np.einsum("nlab,nl->nab", pg.Gamma, scalar_jet.d1)
    return np.einsum("nab,nab->n", pg.g_inv, hess)


def scalar_gradient_pairing(pg: PointGeometry, a_jet, b_jet) -> np.ndarray:
    """<grad a, grad b>_g at each point."""
    return np.einsum("nab,na,nb->n", pg.g_inv, a_jet.d1, b_jet.d1)


def default_grid_for_support(
    chart: Chart,
    support=None,
    cells: int = 40,
    points_per_cell: int = 8,
) -> QuadratureGrid:
    """Quadrature grid over the (validated) support box of a variation."""
    box = default_support_box(chart.domain) if support is None else np.asarray(support, float)
    require_support_inside(chart.domain, box)
    return tensor_rule(box, cells, points_per_cell)
