"""Closed-form stability integrals for the grim reaper cylinder.

For that chart the weighted stability inequality collapses to unweighted
plane integrals: the curvature side is the plain square integral of the
first normal component, and the gradient side picks up a 1/cos^2 x factor
on the y-derivatives only,

    int (V3)^2 dx dy   <=   int [(V3_x)^2 + (V4_x)^2] dx dy
                           + int (1/cos^2 x) [(V3_y)^2 + (V4_y)^2] dx dy.

Slice by slice in y this is the Wirtinger inequality on an interval of
length pi (first Dirichlet eigenvalue 1, extremal cos x), which is what the
per-slice report and the discrete Dirichlet-gap solver certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets as J
from .charts import uniform_grid
from .errors import ConvergenceError
from .geometry import mean_curvature_vector, point_geometry
from .quadrature import QuadratureGrid
from .variations import OneFormField, ScalarField

__all__ = [
    "CylinderIntegrals",
    "cylinder_stability_integrals",
    "cylinder_form_from_normal_components",
    "closed_form_deviations",
    "dirichlet_ground_state",
    "dirichlet_gap",
]


@dataclass(frozen=True)
class CylinderIntegrals:
    """Both sides of the cylinder stability inequality plus per-slice data."""

    curvature_integral: float
    gradient_integral: float
    wirtinger_lhs: float
    wirtinger_rhs: float
    y_nodes: np.ndarray
    slice_lhs: np.ndarray
    slice_rhs: np.ndarray

    def slices_hold(self) -> bool:
        return bool(np.all(self.slice_lhs <= self.slice_rhs + 1e-12))


def cylinder_stability_integrals(
    v3: ScalarField, v4: ScalarField, grid: QuadratureGrid
) -> CylinderIntegrals:
    """Evaluate the closed-form integrals on a tensor quadrature grid.

    ``v3``/``v4`` are the normal components of the variation in the cylinder's
    natural normal frame; both must be supported inside the grid box.
    """
    if len(grid.shape) != 2:
        raise ValueError("cylinder integrals need a 2-d tensor grid")
    nx, ny = grid.shape
    j3 = v3.eval_jets(grid.nodes, order=1)
    j4 = v4.eval_jets(grid.nodes, order=1)
    x = grid.nodes[:, 0].reshape(nx, ny)
    sec2 = 1.0 / np.cos(x) ** 2
    wx = grid.axis_weights[0]
    wy = grid.axis_weights[1]

    val3 = j3.val.reshape(nx, ny)
    dx3 = j3.d1[:, 0].reshape(nx, ny)
    dy3 = j3.d1[:, 1].reshape(nx, ny)
    dx4 = j4.d1[:, 0].reshape(nx, ny)
    dy4 = j4.d1[:, 1].reshape(nx, ny)

    slice_lhs = np.einsum("i,ij->j", wx, val3**2)
    slice_rhs = np.einsum("i,ij->j", wx, dx3**2)
    wirtinger_lhs = float(np.sum(wy * slice_lhs))
    wirtinger_rhs = float(np.sum(wy * slice_rhs))

    curvature = wirtinger_lhs
    grad_plain = np.einsum("i,ij,j->", wx, dx3**2 + dx4**2, wy)
    grad_weighted = np.einsum("i,ij,j->", wx, sec2 * (dy3**2 + dy4**2), wy)
    return CylinderIntegrals(
        curvature_integral=curvature,
        gradient_integral=float(grad_plain + grad_weighted),
        wirtinger_lhs=wirtinger_lhs,
        wirtinger_rhs=wirtinger_rhs,
        y_nodes=grid.axis_nodes[1].copy(),
        slice_lhs=slice_lhs,
        slice_rhs=slice_rhs,
    )


def cylinder_form_from_normal_components(v3: ScalarField, v4: ScalarField) -> OneFormField:
    """One-form matching the variation V = v3 nu_1 + v4 nu_2 on the cylinder.

    In the cylinder's deterministic frames the coordinate components are
    theta = (v3 / cos x) dx + v4 dy.  The result is generic (not closed for
    generic v3, v4), which is exactly what the cross-check against the
    closed-form integrals needs: the first-order variation routes are
    insensitive to closedness.
    """

    def sec_scaled(pts, order):
        seeds = J.variables(pts, order)
        return v3.eval_jets(pts, order) / J.cos(seeds[0])

    comp_x = ScalarField(v3.support, jet_evaluator=sec_scaled, name="v3/cos(x)")
    return OneFormField(np.asarray(v3.support, float), "generic", fields=(comp_x, v4))


def closed_form_deviations(chart, structure, n: int = 50) -> dict[str, float]:
    """Max deviation of numeric cylinder geometry from its closed forms.

    On the grim reaper cylinder the metric is diag(1/cos^2 x, 1), the area
    density and translation weight are both 1/cos x, the only nonzero
    second-fundamental-form component (against the first normal vector) is
    1/cos x, and |H| = cos x.  Returns one max-abs deviation per quantity.
    """
    pts = uniform_grid(chart, n)
    pg = point_geometry(chart, structure, pts)
    x = pts[:, 0]
    sec = 1.0 / np.cos(x)

    g_exact = np.zeros_like(pg.g)
    g_exact[:, 0, 0] = sec**2
    g_exact[:, 1, 1] = 1.0
    h_num = np.einsum("nqab,nqp->nabp", pg.h_coord, pg.nu)
    h_exact = np.zeros_like(h_num)
    h_exact[:, 0, 0, 0] = sec
    return {
        "metric": float(np.max(np.abs(pg.g - g_exact))),
        "area_density": float(np.max(np.abs(pg.sqrt_det_g - sec))),
        "second_fundamental_form": float(np.max(np.abs(h_num - h_exact))),
        "mean_curvature": float(
            np.max(np.abs(np.linalg.norm(mean_curvature_vector(pg), axis=1) - np.cos(x)))
        ),
        "weight": float(np.max(np.abs(pg.weight - sec))),
    }


def _thomas_solve(lower: float, diag: float, upper: float, rhs: np.ndarray) -> np.ndarray:
    """Tridiagonal solve with constant bands (Thomas algorithm)."""
    n = rhs.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = upper / diag
    dp[0] = rhs[0] / diag
    for i in range(1, n):
        denom = diag - lower * cp[i - 1]
        cp[i] = upper / denom
        dp[i] = (rhs[i] - lower * dp[i - 1]) / denom
    x = np.empty(n)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def dirichlet_ground_state(n: int, max_iter: int = 500, rtol: float = 1e-14):
    """Lowest Dirichlet eigenpair of -d^2/dx^2 on (-pi/2, pi/2).

    Second-order central differences on ``n`` subintervals, smallest
    eigenvalue by (unshifted) inverse iteration with the Rayleigh quotient as
    the eigenvalue estimate.  Returns ``(eigenvalue, nodes, eigenvector)``;
    the continuum limit is eigenvalue 1 with eigenfunction cos x.
    """
    if n < 100:
        raise ValueError("need at least 100 subintervals")
    h = math.pi / n
    nodes = -math.pi / 2 + h * np.arange(1, n)
    inv_h2 = 1.0 / h**2

    def apply_a(v):
        out = 2.0 * inv_h2 * v
        out[:-1] -= inv_h2 * v[1:]
        out[1:] -= inv_h2 * v[:-1]
        return out

    v = np.ones(n - 1)
    v /= np.linalg.norm(v)
    lam_old = np.inf
    for _ in range(max_iter):
        w = _thomas_solve(-inv_h2, 2.0 * inv_h2, -inv_h2, v)
        w /= np.linalg.norm(w)
        lam = float(w @ apply_a(w))
        if abs(lam - lam_old) <= rtol * max(1.0, abs(lam)):
            return lam, nodes, w
        lam_old = lam
        v = w
    raise ConvergenceError(f"inverse iteration did not converge in {max_iter} iterations")


def dirichlet_gap(n: int) -> float:
    """Smallest discrete Dirichlet eigenvalue on (-pi/2, pi/2); tends to 1."""
    lam, _, _ = dirichlet_ground_state(n)
    return lam
