"""Pointwise phi-bases, connection coefficients and (kappa, mu, nu) extraction.

On the open set where h does not vanish, h has eigenvalues 0, lambda, -lambda
with a g-orthonormal eigenframe {xi, e, phi e}. Everything here works at
sample points with numeric values taken from the symbolic pipeline.

Derivatives of the eigenvector field e are never differentiated directly.
Differentiating h e = lambda e and pairing with phi e gives

    g(nabla_X e, phi e) = g((nabla_X h) e, phi e) / (2 lambda),

and g(nabla_X e, xi) = -g(e, nabla_X xi), which fixes nabla_X e completely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .curvature import evaluate_geometry, tau_phi
from .expr import Compiled, Expr, Sqrt, diff
from .fields import DIM, VectorField
from .structure import ContactStructure, safe_evaluate

LAMBDA_MIN = 1e-6

LABELS = ("Sasakian", "K-contact", "(kappa,mu)", "generalized (kappa,mu)", "(kappa,mu,nu)", "generic")


class DegeneratePointError(ValueError):
    """h (nearly) vanishes at the point, so the phi-basis is not determined by h."""


@dataclass
class PhiBasis:
    point: tuple
    e: np.ndarray
    phie: np.ndarray
    lam: float
    xi: np.ndarray


@dataclass
class ABCReport:
    point: tuple
    a: float
    b: float
    c: float
    A: float
    B: float
    lam: float
    e_lambda: float
    phie_lambda: float
    xi_lambda: float
    residuals: dict = field(default_factory=dict)

    def to_dict(self):
        out = {k: getattr(self, k) for k in ("a", "b", "c", "A", "B", "lam", "e_lambda", "phie_lambda", "xi_lambda")}
        return {"point": list(self.point), **out, "residuals": dict(self.residuals)}


@dataclass
class NullityReport:
    point: tuple
    kappa: float
    mu: float | None
    nu: float | None
    residual: float
    lam: float
    degenerate: bool = False

    def to_dict(self):
        return {"point": list(self.point), "kappa": self.kappa, "mu": self.mu, "nu": self.nu,
                "residual": self.residual, "lambda": self.lam, "degenerate": self.degenerate}


def s_tensor(basis: PhiBasis, g: np.ndarray) -> np.ndarray:
    """s with s xi = 0, s e = e, s phi e = -phi e, as a numeric matrix."""
    return np.outer(basis.e, g @ basis.e) - np.outer(basis.phie, g @ basis.phie)


def _single(s, p):
    v, kept, _ = evaluate_geometry(s, np.asarray(p, dtype=float).reshape(1, DIM))
    if len(kept) == 0:
        raise ValueError(f"point {tuple(p)} is outside the domain of the structure")
    return {k: a[0] for k, a in v.items()}


def _reference_vector(reference, p):
    if reference is None:
        return None
    if isinstance(reference, VectorField):
        return reference.evaluate(np.asarray(p, dtype=float).reshape(1, DIM))[0]
    return np.asarray(reference, dtype=float)


def basis_from_values(v: dict, p, reference=None, lam_min: float = LAMBDA_MIN) -> PhiBasis:
    g, h, phi = v["g"], v["h"], v["phi"]
    lam = float(np.sqrt(max(0.5 * np.trace(h @ h), 0.0)))
    if lam < lam_min:
        raise DegeneratePointError(f"lambda = {lam:.3g} < {lam_min:g} at {tuple(map(float, p))}")
    gh = g @ h
    w, vecs = scipy.linalg.eigh(0.5 * (gh + gh.T), g)
    e = vecs[:, int(np.argmax(w))]
    e = e / np.sqrt(e @ g @ e)
    ref = _reference_vector(reference, p)
    if ref is not None:
        sign = np.sign(e @ g @ ref) or 1.0
    else:
        nz = np.flatnonzero(np.abs(e) > 1e-12)
        sign = np.sign(e[nz[0]]) if len(nz) else 1.0
    e = sign * e
    return PhiBasis(tuple(map(float, p)), e, phi @ e, lam, v["xi"])


def phi_basis_at(s: ContactStructure, p, reference=None, lam_min: float = LAMBDA_MIN) -> PhiBasis:
    """Orthonormal eigenframe {xi, e, phi e} of h at ``p`` with h e = lambda e.

    The sign of e is fixed so that its first nonzero coordinate component is
    positive, or so that g(e, reference) > 0 when ``reference`` is given.
    """
    return basis_from_values(_single(s, p), p, reference, lam_min)


def _lambda_gradient(v, lam):
    # d_i lambda = tr(h d_i h) / (2 lambda), from lambda^2 = tr(h^2) / 2
    return np.einsum("ab,iba->i", v["h"], v["d_h"]) / (2 * lam)


def _nabla_e_coeff(v, basis, X):
    """g((nabla_X h) e, phi e) / (2 lambda) = g(nabla_X e, phi e)."""
    nXh = np.einsum("i,iab->ab", X, v["nabla_h"])
    return float(basis.phie @ v["g"] @ nXh @ basis.e) / (2 * basis.lam)


def abc_from_values(v: dict, basis: PhiBasis, check_tau: bool = False) -> ABCReport:
    g, S, nabla_xi, h, phi = v["g"], v["S"], v["nabla_xi"], v["h"], v["phi"]
    xi, e, pe, lam = basis.xi, basis.e, basis.phie, basis.lam
    a = _nabla_e_coeff(v, basis, xi)
    b = _nabla_e_coeff(v, basis, e)
    c = -_nabla_e_coeff(v, basis, pe)
    A = float(xi @ S @ e)
    B = float(xi @ S @ pe)
    dlam = _lambda_gradient(v, lam)
    e_l, pe_l, xi_l = float(dlam @ e), float(dlam @ pe), float(dlam @ xi)

    def nab_xi(X):
        return nabla_xi @ X

    def norm(u):
        return float(np.sqrt(max(u @ g @ u, 0.0)))

    res = {
        # xi-components of nabla e and nabla phi e, via g(nabla_X e, xi) = -g(e, nabla_X xi)
        "nabla_xi_e_xi": abs(float(e @ g @ nab_xi(xi))),
        "nabla_e_e_xi": abs(float(e @ g @ nab_xi(e))),
        "nabla_phie_e_xi": abs(-float(e @ g @ nab_xi(pe)) - (lam - 1)),
        "nabla_xi_phie_xi": abs(float(pe @ g @ nab_xi(xi))),
        "nabla_e_phie_xi": abs(-float(pe @ g @ nab_xi(e)) - (1 + lam)),
        "nabla_phie_phie_xi": abs(float(pe @ g @ nab_xi(pe))),
        "nabla_xi_xi": norm(nab_xi(xi)),
        "nabla_e_xi": norm(nab_xi(e) + (1 + lam) * pe),
        "nabla_phie_xi": norm(nab_xi(pe) - (1 - lam) * e),
        "nabla_xi_h": float(np.max(np.abs(
            np.einsum("i,iab->ab", xi, v["nabla_h"]) + 2 * a * h @ phi - xi_l * s_tensor(basis, g)))),
        "b_formula": abs(b - (pe_l + A) / (2 * lam)),
        "c_formula": abs(c - (e_l + B) / (2 * lam)),
    }
    if check_tau:
        res["nabla_xi_tau_2a"] = float(np.max(np.abs(v["nabla_xi_tau"] - 2 * a * tau_phi(v["tau"], phi))))
    return ABCReport(basis.point, a, b, c, A, B, lam, e_l, pe_l, xi_l, res)


def abc_at(s: ContactStructure, p, basis: PhiBasis | None = None, reference=None,
           check_tau: bool = False) -> ABCReport:
    """Coefficients a, b, c and A = S(xi, e), B = S(xi, phi e) with frame-derivative residuals."""
    v = _single(s, p)
    if basis is None:
        basis = basis_from_values(v, p, reference)
    return abc_from_values(v, basis, check_tau)


def _r_xi(R, xi, X, Y):
    """R(X, Y) xi as a component vector."""
    return np.einsum("lijk,i,j,k->l", R, X, Y, xi)


def nullity_from_values(v: dict, p, reference=None, lam_min: float = LAMBDA_MIN) -> NullityReport:
    R, g, h, phi, xi, eta = (v[k] for k in ("R", "g", "h", "phi", "xi", "eta"))

    def gnorm(u):
        return float(np.sqrt(max(u @ g @ u, 0.0)))

    try:
        basis = basis_from_values(v, p, reference, lam_min)
        e, pe, lam, degenerate = basis.e, basis.phie, basis.lam, False
    except DegeneratePointError:
        lam = float(np.sqrt(max(0.5 * np.trace(h @ h), 0.0)))
        degenerate = True
        # any unit vector g-orthogonal to xi
        cand = np.eye(DIM)[int(np.argmin(np.abs(eta)))]
        e = cand - (eta @ cand) * xi
        e = e / gnorm(e)
        pe = phi @ e
    r_e = _r_xi(R, xi, e, xi)
    r_pe = _r_xi(R, xi, pe, xi)
    c1, c2 = float(e @ g @ r_e), float(pe @ g @ r_pe)
    c3, c4 = float(pe @ g @ r_e), float(e @ g @ r_pe)
    kappa = 0.5 * (c1 + c2)
    if degenerate:
        mu = nu = None
        m, n = 0.0, 0.0
    else:
        mu = (c1 - c2) / (2 * lam)
        nu = (c3 + c4) / (2 * lam)
        m, n = mu, nu
    parts = [abs(c3 - c4), gnorm(_r_xi(R, xi, e, pe)), abs(float(eta @ r_e)), abs(float(eta @ r_pe))]
    phih = phi @ h
    for i in range(DIM):
        for j in range(i + 1, DIM):
            X, Y = np.eye(DIM)[i], np.eye(DIM)[j]
            lhs = _r_xi(R, xi, X, Y)
            rhs = (kappa * (eta[j] * X - eta[i] * Y) + m * (eta[j] * h @ X - eta[i] * h @ Y)
                   + n * (eta[j] * phih @ X - eta[i] * phih @ Y))
            parts.append(gnorm(lhs - rhs))
    return NullityReport(tuple(map(float, p)), kappa, mu, nu, max(parts), lam, degenerate)


def extract_kmn_at(s: ContactStructure, p, reference=None, lam_min: float = LAMBDA_MIN) -> NullityReport:
    """kappa, mu, nu of R(X,Y)xi = kappa(..) + mu(..h..) + nu(..phi h..) at ``p``, with fit residual."""
    return nullity_from_values(_single(s, p), p, reference, lam_min)


def nullity_sweep(s: ContactStructure, points, reference=None, lam_min: float = LAMBDA_MIN):
    v, kept, skipped = evaluate_geometry(s, points)
    reports = []
    for n, p in enumerate(kept):
        reports.append(nullity_from_values({k: a[n] for k, a in v.items()}, p, reference, lam_min))
    return reports, skipped


# ---------------------------------------------------------------- grad lambda

def lambda_expr(s: ContactStructure) -> Expr:
    """lambda = sqrt(tr(h^2) / 2) as an expression."""
    h = s.h.components
    return Sqrt((h @ h)[0, 0] * 0.5 + (h @ h)[1, 1] * 0.5 + (h @ h)[2, 2] * 0.5)


@dataclass
class GradLambdaReport:
    point: tuple
    grad: np.ndarray
    norm: float
    e_lambda: float
    phie_lambda: float
    xi_lambda: float

    @property
    def eq1_residual(self) -> float:
        """|(e.lambda)^2 + (phi e.lambda)^2 - |grad lambda|^2|, the xi-free split."""
        return abs(self.e_lambda ** 2 + self.phie_lambda ** 2 - self.norm ** 2)

    def to_dict(self):
        return {"point": list(self.point), "grad": [float(t) for t in self.grad], "norm": self.norm,
                "e_lambda": self.e_lambda, "phie_lambda": self.phie_lambda, "xi_lambda": self.xi_lambda}


def grad_lambda(s: ContactStructure, points, reference=None, lam=None):
    """grad lambda = g^-1 d lambda and its frame components at each point.

    ``lam`` overrides the default sqrt(tr h^2 / 2) profile (e.g. a chart's
    closed-form lambda). Returns ``(reports, skipped_points)``.
    """
    lam = lambda_expr(s) if lam is None else lam
    dl = np.empty(DIM, dtype=object)
    dl[:] = [diff(lam, c) for c in s.coords]
    vals, kept, skipped = safe_evaluate(Compiled(dl, s.coords), points)
    geo, kept2, _ = evaluate_geometry(s, kept)
    if len(kept2) != len(kept):
        raise ValueError("structure undefined at a point where lambda is defined")
    out = []
    for n, p in enumerate(kept):
        v = {k: a[n] for k, a in geo.items()}
        basis = basis_from_values(v, p, reference)
        d = vals[n]
        grad = v["g_inv"] @ d
        out.append(GradLambdaReport(tuple(map(float, p)), grad, float(np.sqrt(max(d @ grad, 0.0))),
                                    float(d @ basis.e), float(d @ basis.phie), float(d @ basis.xi)))
    return out, skipped


# ---------------------------------------------------------------- classification

@dataclass
class Classification:
    label: str
    reports: list
    details: dict

    def to_dict(self):
        return {"label": self.label, "details": self.details, "reports": [r.to_dict() for r in self.reports]}


DEFAULT_THRESHOLDS = {"residual": 1e-8, "nu": 1e-8, "lambda_min": LAMBDA_MIN, "constancy": 1e-6, "kappa": 1e-8}


def _constant(values, rel):
    values = np.asarray(values, dtype=float)
    return bool(np.std(values) < rel * (1 + abs(np.mean(values))))


def classify(s: ContactStructure, points, thresholds: dict | None = None, reference=None) -> Classification:
    t = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    reports, skipped = nullity_sweep(s, points, reference, t["lambda_min"])
    reports.sort(key=lambda r: r.point)
    details = {"n_points": len(reports), "n_skipped": len(skipped)}
    if not reports:
        return Classification("generic", reports, {**details, "reason": "no admissible points"})
    lam_max = max(r.lam for r in reports)
    worst = max(r.residual for r in reports)
    details.update({"max_lambda": lam_max, "max_residual": worst})
    if lam_max < t["lambda_min"]:
        sasakian = worst < t["residual"] and all(abs(r.kappa - 1) < t["kappa"] for r in reports)
        return Classification("Sasakian" if sasakian else "K-contact", reports, details)
    regular = [r for r in reports if not r.degenerate]
    details["n_degenerate"] = len(reports) - len(regular)
    if worst >= t["residual"]:
        return Classification("generic", reports, details)
    max_nu = max(abs(r.nu) for r in regular)
    details["max_abs_nu"] = max_nu
    if max_nu >= t["nu"]:
        return Classification("(kappa,mu,nu)", reports, details)
    const = _constant([r.kappa for r in reports], t["constancy"]) and _constant(
        [r.mu for r in regular], t["constancy"])
    details["constant"] = const
    return Classification("(kappa,mu)" if const else "generalized (kappa,mu)", reports, details)
