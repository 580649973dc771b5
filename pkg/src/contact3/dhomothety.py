"""D-homothetic deformations.

For a positive constant alpha the deformed structure is

    eta' = alpha eta,  xi' = xi / alpha,  phi' = phi,  g' = alpha g + alpha (alpha - 1) eta (x) eta,

and h' is recomputed as L_xi' phi' / 2 rather than rescaled, so the
scaling h' = h / alpha becomes a checked property instead of an assumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import Compiled, as_expr, diff
from .fields import DIM, OneForm, TensorField11, VectorField
from .nullity import lambda_expr, nullity_sweep
from .structure import (AxiomResult, ContactStructure, ValidationReport, _h_of, safe_evaluate,
                        validate, worst)


@dataclass(frozen=True)
class DHomothetyParams:
    alpha: float

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive real, got {self.alpha!r}")


def _outer(u, v):
    out = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            out[i, j] = u[i] * v[j]
    return out


def apply(s: ContactStructure, alpha: float) -> ContactStructure:
    """The D-homothetic deformation of ``s`` by ``alpha``."""
    alpha = DHomothetyParams(float(alpha)).alpha
    if alpha == 1.0:
        return s.with_name(s.name)
    coords = s.coords
    a = as_expr(alpha)
    eta, xi = s.eta.components, s.xi.components
    g = s.g * a + _outer(eta, eta) * as_expr(alpha * (alpha - 1))
    # (alpha g + alpha(alpha-1) eta eta)^-1 = (g^-1 - (alpha-1)/alpha xi xi) / alpha
    g_inv = (s.g_inv - _outer(xi, xi) * as_expr((alpha - 1) / alpha)) * as_expr(1 / alpha)
    xi_bar = VectorField(xi * as_expr(1 / alpha), coords)
    eta_bar = OneForm(eta * a, coords)
    phi = TensorField11(s.phi.components, coords)
    frame = None
    if s.frame is not None:
        k = as_expr(1 / math.sqrt(alpha))
        frame = (xi_bar, s.frame[1].scale(k), s.frame[2].scale(k))
    name = f"{s.name} [alpha={alpha:g}]" if s.name else f"alpha={alpha:g}"
    return ContactStructure(s.chart, g, g_inv, phi, xi_bar, eta_bar, _h_of(phi, xi_bar), frame, name)


def kappa_bar(kappa: float, alpha: float) -> float:
    return (kappa + alpha ** 2 - 1) / alpha ** 2


def mu_bar(mu: float, alpha: float) -> float:
    return (mu + 2 * (alpha - 1)) / alpha


def grad_norm(s: ContactStructure, f, points):
    """|grad f|_g at ``points``; returns ``(norms, kept_points)``."""
    df = np.empty(DIM, dtype=object)
    df[:] = [diff(f, c) for c in s.coords]
    arrays = np.empty(DIM + DIM * DIM, dtype=object)
    arrays[:DIM] = df
    arrays[DIM:] = s.g_inv.reshape(-1)
    vals, kept, _ = safe_evaluate(Compiled(arrays, s.coords), points)
    d, gi = vals[:, :DIM], vals[:, DIM:].reshape(-1, DIM, DIM)
    sq = np.einsum("ni,nij,nj->n", d, gi, d)
    return np.sqrt(np.maximum(sq, 0.0)), kept


def verify_transform(original: ContactStructure, alpha: float, points, tol: float = 1e-8,
                     lam=None) -> ValidationReport:
    """Check the deformation laws of ``apply(original, alpha)`` at ``points``.

    ``lam`` optionally supplies a closed-form lambda of the original (used for
    the gradient law where sqrt(tr h^2 / 2) is not smooth).
    """
    alpha = DHomothetyParams(float(alpha)).alpha
    points = np.asarray(points, dtype=float)
    deformed = apply(original, alpha)
    rows = list(validate(deformed, points=points, tol=tol).axioms)

    ev = Compiled(np.array([original.h.components, deformed.h.components]), original.coords)
    hv, pts, _ = safe_evaluate(ev, points)
    h0, h1 = hv[:, 0], hv[:, 1]
    rows.append(worst("h_scaling", np.max(np.abs(h1 - h0 / alpha).reshape(len(pts), -1), axis=1), pts, tol,
                      "h' = h / alpha"))
    lam0 = np.sqrt(np.maximum(0.5 * np.trace(h0 @ h0, axis1=1, axis2=2), 0.0))
    lam1 = np.sqrt(np.maximum(0.5 * np.trace(h1 @ h1, axis1=1, axis2=2), 0.0))
    rows.append(worst("lambda_scaling", np.abs(lam1 - lam0 / alpha), pts, tol, "lambda' = lambda / alpha"))

    before, _ = nullity_sweep(original, points)
    after, _ = nullity_sweep(deformed, points)
    dk, dm, used = [], [], []
    for r0, r1 in zip(before, after):
        if r0.residual < tol and not r0.degenerate and not r1.degenerate:
            dk.append(abs(r1.kappa - kappa_bar(r0.kappa, alpha)))
            dm.append(abs(r1.mu - mu_bar(r0.mu, alpha)))
            used.append(r0.point)
    if used:
        rows.append(worst("kappa_law", dk, used, tol, "kappa' = (kappa + alpha^2 - 1) / alpha^2"))
        rows.append(worst("mu_law", dm, used, tol, "mu' = (mu + 2(alpha - 1)) / alpha"))
    else:
        rows.append(AxiomResult("kappa_mu_law", 0.0, True, None, "no points satisfy the nullity condition"))

    if np.min(lam0, initial=np.inf) > 1e-6:
        f0 = lambda_expr(original) if lam is None else as_expr(lam)
        n0, k0 = grad_norm(original, f0, points)
        n1, k1 = grad_norm(deformed, f0 * as_expr(1 / alpha), points)
        if len(k0) == len(k1):
            rows.append(worst("grad_lambda_law", np.abs(n1 - alpha ** -1.5 * n0), k0, tol,
                              "|grad lambda'|_g' = alpha^(-3/2) |grad lambda|_g"))
    return ValidationReport(rows, tol, len(points), [])
