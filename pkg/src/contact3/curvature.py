"""Levi-Civita connection, curvature, Ricci operator and the tau tensors.

Curvature convention: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
so a Sasakian structure has R(X,Y)xi = eta(Y)X - eta(X)Y.

Index layout of the symbolic arrays:

* ``gamma[k, i, j]``  = Gamma^k_ij
* ``R[l, i, j, k]``   = dx^l(R(d_i, d_j) d_k)
* ``S[j, k]``         = Ricci tensor, S(X, Y) = g(QX, Y)
* ``tau[i, j]``       = tau(d_i, d_j) = 2 g(phi d_i, h d_j)
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .expr import as_expr, diff
from .fields import DIM, TensorField11, VectorField, directional_derivative
from .structure import ArrayEvaluator, ContactStructure, ValidationReport, integrability_residual, worst


@dataclass(frozen=True, eq=False)
class Connection:
    gamma: np.ndarray
    coords: tuple


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    R: np.ndarray
    S: np.ndarray
    Q: TensorField11
    l: TensorField11
    tau: np.ndarray
    nabla_xi_tau: np.ndarray


def christoffel(s: ContactStructure) -> Connection:
    """Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)."""
    coords = s.coords
    g, g_inv = s.g, s.g_inv
    dg = np.empty((DIM, DIM, DIM), dtype=object)  # dg[m, i, j] = d_m g_ij
    for m in range(DIM):
        for i in range(DIM):
            for j in range(i, DIM):
                dg[m, i, j] = dg[m, j, i] = diff(g[i, j], coords[m])
    gamma = np.empty((DIM, DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(i, DIM):
            lowered = [dg[i, j, l] + dg[j, i, l] - dg[l, i, j] for l in range(DIM)]
            for k in range(DIM):
                acc = as_expr(0)
                for l in range(DIM):
                    acc = acc + g_inv[k, l] * lowered[l]
                gamma[k, i, j] = gamma[k, j, i] = acc * 0.5
    return Connection(gamma, coords)


def covariant_derivative(conn: Connection, X: VectorField, Y: VectorField) -> VectorField:
    """(nabla_X Y)^k = X(Y^k) + Gamma^k_ij X^i Y^j."""
    out = []
    for k in range(DIM):
        acc = directional_derivative(X, Y.components[k])
        for i in range(DIM):
            for j in range(DIM):
                acc = acc + conn.gamma[k, i, j] * X.components[i] * Y.components[j]
        out.append(acc)
    return VectorField(out, conn.coords)


def riemann(conn: Connection) -> np.ndarray:
    """R^l_ijk = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^m_jk Gamma^l_im - Gamma^m_ik Gamma^l_jm."""
    G, coords = conn.gamma, conn.coords
    R = np.empty((DIM,) * 4, dtype=object)
    zero = as_expr(0)
    for l in range(DIM):
        for k in range(DIM):
            for i in range(DIM):
                R[l, i, i, k] = zero
                for j in range(i + 1, DIM):
                    acc = diff(G[l, j, k], coords[i]) - diff(G[l, i, k], coords[j])
                    for m in range(DIM):
                        acc = acc + G[m, j, k] * G[l, i, m] - G[m, i, k] * G[l, j, m]
                    R[l, i, j, k] = acc
                    R[l, j, i, k] = -acc
    return R


def ricci_tensor(R: np.ndarray) -> np.ndarray:
    """S(Y, Z) = trace of X -> R(X, Y)Z."""
    S = np.empty((DIM, DIM), dtype=object)
    for j in range(DIM):
        for k in range(DIM):
            S[j, k] = R[0, 0, j, k] + R[1, 1, j, k] + R[2, 2, j, k]
    return S


def ricci_operator(R: np.ndarray, s: ContactStructure) -> TensorField11:
    """Q with g(QX, Y) = S(X, Y)."""
    return TensorField11(s.g_inv @ ricci_tensor(R), s.coords)


def l_operator(R: np.ndarray, s: ContactStructure) -> TensorField11:
    """l(X) = R(X, xi) xi."""
    xi = s.xi.components
    out = np.empty((DIM, DIM), dtype=object)
    for a in range(DIM):
        for b in range(DIM):
            acc = as_expr(0)
            for j in range(DIM):
                for k in range(DIM):
                    acc = acc + R[a, b, j, k] * xi[j] * xi[k]
            out[a, b] = acc
    return TensorField11(out, s.coords)


def tau_tensors(s: ContactStructure, conn: Connection):
    """tau = 2 g(phi ., h .) and its covariant derivative along xi, both as (0,2) arrays."""
    tau = (s.phi.components.T @ s.g @ s.h.components) * 2
    xi, G = s.xi.components, conn.gamma
    # xi_gamma[m, i] = Gamma^m_ki xi^k = (nabla_{d_i} along xi) coefficient
    xi_gamma = np.empty((DIM, DIM), dtype=object)
    for m in range(DIM):
        for i in range(DIM):
            acc = as_expr(0)
            for k in range(DIM):
                acc = acc + G[m, k, i] * xi[k]
            xi_gamma[m, i] = acc
    nxt = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            acc = directional_derivative(s.xi, tau[i, j])
            for m in range(DIM):
                acc = acc - tau[m, j] * xi_gamma[m, i] - tau[i, m] * xi_gamma[m, j]
            nxt[i, j] = acc
    return tau, nxt


def tau_phi(tau, phi):
    """The (0,2) tensor tau.phi = g(phi tau^ X, Y), with tau^ = g^-1 tau.

    Equals -tau(X, phi Y) = 2 g(X, hY). Works on single matrices and on
    stacks with a leading point axis.
    """
    return -(tau @ phi)


def curvature_bundle(s: ContactStructure) -> CurvatureBundle:
    conn = s.connection
    R = riemann(conn)
    tau, nxt = tau_tensors(s, conn)
    return CurvatureBundle(R, ricci_tensor(R), ricci_operator(R, s), l_operator(R, s), tau, nxt)


# ---------------------------------------------------------------- pointwise evaluation

_EVALUATORS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def geometry_arrays(s: ContactStructure) -> dict:
    from .structure import structure_arrays
    arrays = structure_arrays(s)
    coords = s.coords
    cb = s.curvature
    arrays.update({
        "gamma": s.connection.gamma,
        "d_h": np.array([[[diff(s.h.components[a, b], coords[i]) for b in range(DIM)]
                          for a in range(DIM)] for i in range(DIM)], dtype=object),
        "d_xi": np.array([[diff(s.xi.components[a], coords[i]) for i in range(DIM)]
                          for a in range(DIM)], dtype=object),
        "R": cb.R,
        "S": cb.S,
        "Q": cb.Q.components,
        "l": cb.l.components,
        "tau": cb.tau,
        "nabla_xi_tau": cb.nabla_xi_tau,
    })
    return arrays


def evaluate_geometry(s: ContactStructure, points):
    """All structure and curvature arrays at ``points``.

    Returns ``(values, kept_points, skipped_points)``; ``values`` maps names to
    arrays with a leading point axis, plus derived entries ``nabla_h``
    ([n, i, a, b] = (nabla_i h)^a_b) and ``nabla_xi`` ([n, a, i] = (nabla_i xi)^a).
    """
    ev = _EVALUATORS.get(s)
    if ev is None:
        ev = _EVALUATORS[s] = ArrayEvaluator(geometry_arrays(s), s.coords)
    from .structure import nabla_tensor11
    v, kept, skipped = ev(points)
    v["nabla_h"] = nabla_tensor11(v["gamma"], v["d_h"], v["h"])
    v["nabla_xi"] = v["d_xi"] + np.einsum("naim,nm->nai", v["gamma"], v["xi"])
    return v, kept, skipped


def _maxabs(a):
    a = np.asarray(a)
    return np.max(np.abs(a.reshape(a.shape[0], -1)), axis=1)


def check_B_identities(s: ContactStructure, points, tol: float = 1e-8) -> ValidationReport:
    """Worst residual of the standard contact metric curvature identities."""
    v, pts, skipped = evaluate_geometry(s, points)
    g, phi, h, xi, eta, l, Q = (v[k] for k in ("g", "phi", "h", "xi", "eta", "l", "Q"))
    eye = np.eye(DIM)[None]
    out = []

    def add(name, per_point, detail=""):
        out.append(worst(name, per_point, pts, tol, detail))

    add("nabla_X_xi", _maxabs(v["nabla_xi"] + phi + phi @ h), "nabla_X xi = -phi X - phi h X")
    nabla_xi_h = np.einsum("ni,niab->nab", xi, v["nabla_h"])
    add("nabla_xi_h", _maxabs(nabla_xi_h - phi @ (eye - h @ h - l)), "nabla_xi h = phi(I - h^2 - l)")
    add("l_phi_l_phi", _maxabs(l - phi @ l @ phi + 2 * (h @ h + phi @ phi)),
        "l - phi l phi = -2(h^2 + phi^2)")
    tr_l = np.trace(l, axis1=1, axis2=2)
    q_xi_xi = np.einsum("na,nab,nbc,nc->n", xi, g, Q, xi)
    tr_h2 = np.trace(h @ h, axis1=1, axis2=2)
    add("trace_l", np.maximum(np.abs(tr_l - q_xi_xi), np.abs(tr_l - (2 - tr_h2))),
        "tr l = g(Q xi, xi) = 2 - tr h^2")
    tau = v["tau"]
    add("tau_symmetric", _maxabs(tau - tau.transpose(0, 2, 1)), "tau = 2 g(phi ., h .) is symmetric")
    add("nabla_xi_tau", _maxabs(v["nabla_xi_tau"] - 2 * phi.transpose(0, 2, 1) @ g @ nabla_xi_h),
        "nabla_xi tau = 2 g(phi ., nabla_xi h .)")
    g_inv = v["g_inv"]
    norm_tau = np.einsum("nij,nkl,nik,njl->n", tau, tau, g_inv, g_inv)
    add("tau_norm", np.abs(norm_tau - 4 * tr_h2), "|tau|^2 = 4 tr h^2")
    add("integrability", _maxabs(integrability_residual(v["gamma"], v["d_phi"], phi, h, g, xi, eta)),
        "(nabla_X phi) Y = g(X + hX, Y) xi - eta(Y)(X + hX)")
    return ValidationReport(out, tol, len(points), [tuple(p) for p in skipped])


def connection_residuals(s: ContactStructure, points) -> dict:
    """Per-point torsion, metric compatibility and curvature symmetry residuals."""
    v, pts, _ = evaluate_geometry(s, points)
    G, g = v["gamma"], v["g"]
    coords = s.coords
    ev = ArrayEvaluator({"dg": np.array([[[diff(s.g[i, j], c) for j in range(DIM)] for i in range(DIM)]
                                         for c in coords], dtype=object)}, coords)
    dg = ev(pts)[0]["dg"]  # [n, m, i, j] = d_m g_ij
    # d_m g_ij - g(nabla_m d_i, d_j) - g(d_i, nabla_m d_j)
    compat = dg - np.einsum("nkmi,nkj->nmij", G, g) - np.einsum("nkmj,nik->nmij", G, g)
    torsion = G - G.transpose(0, 1, 3, 2)
    R = v["R"]
    antisym = R + R.transpose(0, 1, 3, 2, 4)
    bianchi = R + R.transpose(0, 1, 3, 4, 2) + R.transpose(0, 1, 4, 2, 3)
    return {"points": pts, "metric_compatibility": _maxabs(compat), "torsion": _maxabs(torsion),
            "antisymmetry": _maxabs(antisym), "bianchi": _maxabs(bianchi)}
