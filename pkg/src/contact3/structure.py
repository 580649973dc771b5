"""Contact metric structures (g, phi, xi, eta, h) on a 3-dimensional chart."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import Compiled, DomainError, Expr, as_expr, diff, render
from .fields import DIM, OneForm, TensorField11, VectorField, expr_array, lie_derivative_11

MAX_ATTEMPTS = 10_000


class SamplingError(RuntimeError):
    pass


class SingularFrameError(ValueError):
    pass


@dataclass(frozen=True)
class ChartSpec:
    """Coordinates, domain constraints and sampling box of a chart.

    ``constraints`` holds ``(kind, expr)`` pairs with kind ``"nonzero"`` or
    ``"positive"``; ``box`` maps each coordinate to a closed interval.
    """

    coords: tuple = ("x", "y", "z")
    box: dict = field(default_factory=lambda: {"x": (-1.0, 1.0), "y": (-1.0, 1.0), "z": (0.5, 2.0)})
    constraints: tuple = ()

    def __post_init__(self):
        if len(self.coords) != DIM:
            raise ValueError("charts are 3-dimensional")
        for c in self.coords:
            lo, hi = self.box[c]
            if not lo < hi:
                raise ValueError(f"degenerate sampling interval for {c}: [{lo}, {hi}]")
        for kind, _ in self.constraints:
            if kind not in ("nonzero", "positive"):
                raise ValueError(f"unknown constraint kind {kind!r}")

    def admissible(self, points) -> np.ndarray:
        """Boolean mask of points satisfying every domain constraint."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        checks = [(kind, Compiled(e, self.coords)) for kind, e in self.constraints]
        return np.array([_passes(checks, p) for p in pts], dtype=bool)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """``n`` seeded uniform points in the box that satisfy the constraints."""
        if n < 1:
            raise ValueError("need at least one point")
        rng = np.random.default_rng(seed)
        lo = np.array([self.box[c][0] for c in self.coords], dtype=float)
        hi = np.array([self.box[c][1] for c in self.coords], dtype=float)
        checks = [(kind, Compiled(e, self.coords)) for kind, e in self.constraints]
        out = np.empty((n, DIM))
        for i in range(n):
            for _ in range(MAX_ATTEMPTS):
                p = lo + (hi - lo) * rng.random(DIM)
                if _passes(checks, p):
                    out[i] = p
                    break
            else:
                raise SamplingError(f"no admissible point after {MAX_ATTEMPTS} attempts")
        return out


def _passes(checks, p):
    for kind, fn in checks:
        try:
            v = fn(p[None, :])[0]
        except DomainError:
            return False
        if (kind == "positive" and not v > 0) or (kind == "nonzero" and v == 0):
            return False
    return True


def safe_evaluate(compiled: Compiled, points):
    """Evaluate, dropping points where some expression leaves its domain.

    Returns ``(values, kept_points, skipped_points)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    keep = np.arange(len(pts))
    while True:
        if len(keep) == 0:
            return compiled(np.zeros((0, pts.shape[1]))), pts[keep], pts
        try:
            vals = compiled(pts[keep])
        except DomainError as err:
            keep = np.delete(keep, list(err.indices))
            continue
        skipped = np.setdiff1d(np.arange(len(pts)), keep)
        return vals, pts[keep], pts[skipped]


def symbolic_inverse(m: np.ndarray):
    """Adjugate / determinant inverse of a 3x3 Expr matrix. Returns (inverse, det)."""
    cof = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            r = [k for k in range(DIM) if k != i]
            c = [k for k in range(DIM) if k != j]
            minor = m[r[0], c[0]] * m[r[1], c[1]] - m[r[0], c[1]] * m[r[1], c[0]]
            cof[i, j] = minor if (i + j) % 2 == 0 else -minor
    det = m[0, 0] * cof[0, 0] + m[0, 1] * cof[0, 1] + m[0, 2] * cof[0, 2]
    inv = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            inv[i, j] = cof[j, i] / det
    return inv, det


@dataclass(frozen=True, eq=False)
class ContactStructure:
    """Structure tensors in coordinate components.

    ``g`` and ``g_inv`` are 3x3 Expr arrays (covariant / contravariant);
    ``frame`` is ``(xi, e, phie)`` when the structure was built from a frame.
    """

    chart: ChartSpec
    g: np.ndarray
    g_inv: np.ndarray
    phi: TensorField11
    xi: VectorField
    eta: OneForm
    h: TensorField11
    frame: tuple | None = None
    name: str = ""

    @property
    def coords(self):
        return self.chart.coords

    def metric(self, X: VectorField, Y: VectorField) -> Expr:
        return as_expr(X.components @ self.g @ Y.components)

    @cached_property
    def connection(self):
        from .curvature import christoffel
        return christoffel(self)

    @cached_property
    def curvature(self):
        from .curvature import curvature_bundle
        return curvature_bundle(self)

    def with_name(self, name: str) -> "ContactStructure":
        return dataclasses.replace(self, name=name)


def _h_of(phi: TensorField11, xi: VectorField) -> TensorField11:
    return lie_derivative_11(xi, phi).scale(0.5)


def _check_nonsingular(det: Expr, chart: ChartSpec, what: str, n: int = 16, seed: int = 0):
    pts = chart.sample(n, seed)
    vals, kept, skipped = safe_evaluate(Compiled(det, chart.coords), pts)
    if len(skipped) or np.any(np.abs(vals) < 1e-12):
        bad = skipped[0] if len(skipped) else kept[np.argmin(np.abs(vals))]
        raise SingularFrameError(f"{what} is singular near {tuple(float(v) for v in bad)}")


def build_from_frame(chart: ChartSpec, xi, e, phie, name: str = "") -> ContactStructure:
    """Structure making the frame (xi, e, phie) orthonormal, with phi: xi->0, e->phie, phie->-e."""
    xi, e, phie = (VectorField(v, chart.coords) for v in (xi, e, phie))
    E = np.empty((DIM, DIM), dtype=object)
    for col, v in enumerate((xi, e, phie)):
        E[:, col] = v.components
    E_inv, det = symbolic_inverse(E)
    _check_nonsingular(det, chart, "frame")
    g = E_inv.T @ E_inv
    g_inv = E @ E.T
    image = np.empty((DIM, DIM), dtype=object)
    image[:, 0] = expr_array([0, 0, 0])
    image[:, 1] = phie.components
    image[:, 2] = -e.components
    phi = TensorField11(image @ E_inv, chart.coords)
    eta = OneForm(E_inv[0, :], chart.coords)
    return ContactStructure(chart, g, g_inv, phi, xi, eta, _h_of(phi, xi), (xi, e, phie), name)


def build_from_tensors(chart: ChartSpec, g, phi, xi, name: str = "", g_inv=None) -> ContactStructure:
    """Structure from metric, phi and xi components; eta = g(xi, .) and h = L_xi phi / 2."""
    g = expr_array(g, (DIM, DIM), chart.coords)
    for i in range(DIM):
        for j in range(i + 1, DIM):
            if g[i, j] is not g[j, i]:
                pts = chart.sample(8, 0)
                vals = safe_evaluate(Compiled(g, chart.coords), pts)[0]
                if np.max(np.abs(vals - vals.transpose(0, 2, 1))) > 1e-12:
                    raise ValueError("metric components are not symmetric")
                break
    phi = TensorField11(phi, chart.coords)
    xi = VectorField(xi, chart.coords)
    if g_inv is None:
        g_inv, det = symbolic_inverse(g)
        _check_nonsingular(det, chart, "metric")
    eta = OneForm(g @ xi.components, chart.coords)
    return ContactStructure(chart, g, g_inv, phi, xi, eta, _h_of(phi, xi), None, name)


# ---------------------------------------------------------------- validation

@dataclass
class AxiomResult:
    name: str
    residual: float
    passed: bool
    witness: tuple | None = None
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "residual": self.residual, "passed": self.passed,
                "witness": list(self.witness) if self.witness is not None else None,
                "detail": self.detail}


@dataclass
class ValidationReport:
    axioms: list
    tol: float
    n_points: int
    skipped: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms)

    def __getitem__(self, name) -> AxiomResult:
        for a in self.axioms:
            if a.name == name:
                return a
        raise KeyError(name)

    def failures(self):
        return [a for a in self.axioms if not a.passed]

    def to_dict(self):
        return {"passed": self.passed, "tol": self.tol, "n_points": self.n_points,
                "axioms": [a.to_dict() for a in self.axioms],
                "skipped": [list(map(float, p)) for p in self.skipped]}


def worst(name, per_point, points, tol, detail=""):
    """AxiomResult from per-point non-negative residuals."""
    per_point = np.asarray(per_point, dtype=float)
    if per_point.size == 0:
        return AxiomResult(name, 0.0, False, None, "no admissible points")
    k = int(np.argmax(per_point))
    r = float(per_point[k])
    return AxiomResult(name, r, bool(r < tol), tuple(float(v) for v in points[k]), detail)


def _maxabs(a):
    a = np.asarray(a)
    return np.max(np.abs(a.reshape(a.shape[0], -1)), axis=1)


def structure_arrays(s: ContactStructure) -> dict:
    """Symbolic arrays needed by the axiom suite, keyed by name."""
    coords = s.coords
    return {
        "g": s.g,
        "g_inv": s.g_inv,
        "phi": s.phi.components,
        "xi": s.xi.components,
        "eta": s.eta.components,
        "h": s.h.components,
        "d_eta": np.array([[diff(s.eta.components[j], coords[i]) - diff(s.eta.components[i], coords[j])
                            for j in range(DIM)] for i in range(DIM)], dtype=object),
        "d_phi": np.array([[[diff(s.phi.components[a, b], coords[i]) for b in range(DIM)]
                            for a in range(DIM)] for i in range(DIM)], dtype=object),
    }


class ArrayEvaluator:
    """Evaluate a dict of symbolic arrays together, sharing subexpressions."""

    def __init__(self, arrays: dict, coords):
        self.names = list(arrays)
        self.shapes = [np.shape(arrays[k]) for k in self.names]
        flat = []
        for k in self.names:
            flat.extend(np.asarray(arrays[k], dtype=object).reshape(-1))
        holder = np.empty(len(flat), dtype=object)
        holder[:] = flat
        self.compiled = Compiled(holder, coords)

    def __call__(self, points):
        vals, kept, skipped = safe_evaluate(self.compiled, points)
        out, pos = {}, 0
        for k, shp in zip(self.names, self.shapes):
            size = int(np.prod(shp))
            out[k] = vals[:, pos:pos + size].reshape((len(kept),) + shp)
            pos += size
        return out, kept, skipped


def validate(s: ContactStructure, n_points: int = 64, seed: int = 42, tol: float = 1e-9,
             points=None) -> ValidationReport:
    """Check the contact metric axioms at seeded sample points."""
    if points is None:
        points = s.chart.sample(n_points, seed)
    arrays = structure_arrays(s)
    arrays["gamma"] = s.connection.gamma
    v, pts, skipped = ArrayEvaluator(arrays, s.coords)(points)
    g, g_inv, phi, xi, eta, h = (v[k] for k in ("g", "g_inv", "phi", "xi", "eta", "h"))
    eye = np.eye(DIM)
    res = []

    def add(name, per_point, detail=""):
        res.append(worst(name, per_point, pts, tol, detail))

    add("metric_symmetric", _maxabs(g - g.transpose(0, 2, 1)))
    minors = np.stack([g[:, 0, 0], np.linalg.det(g[:, :2, :2]), np.linalg.det(g)], axis=1)
    pd = minors.min(axis=1) if len(pts) else np.zeros(0)
    r = worst("metric_positive_definite", np.maximum(0.0, -pd), pts, tol,
              "leading principal minors must be positive")
    r.passed = bool(len(pts) and np.all(pd > 0))
    res.append(r)
    add("metric_inverse", _maxabs(g @ g_inv - eye))
    add("eta_xi_is_one", np.abs(np.einsum("ni,ni->n", eta, xi) - 1.0))
    add("phi_xi_zero", _maxabs(np.einsum("nij,nj->ni", phi, xi)))
    add("phi_squared", _maxabs(phi @ phi + eye - np.einsum("ni,nj->nij", xi, eta)),
        "phi^2 = -I + eta (x) xi")
    add("eta_phi_zero", _maxabs(np.einsum("ni,nij->nj", eta, phi)))
    phiT = phi.transpose(0, 2, 1)
    add("compatible_metric", _maxabs(phiT @ g @ phi - g + np.einsum("ni,nj->nij", eta, eta)),
        "g(phi X, phi Y) = g(X, Y) - eta(X) eta(Y)")
    add("contact_metric", _maxabs(0.5 * v["d_eta"] - g @ phi),
        "d eta(X, Y) = g(X, phi Y), d eta with the 1/2 convention")
    vol = (eta[:, 0] * v["d_eta"][:, 1, 2] + eta[:, 1] * v["d_eta"][:, 2, 0]
           + eta[:, 2] * v["d_eta"][:, 0, 1])
    absvol = np.abs(vol)
    k = int(np.argmin(absvol)) if len(pts) else 0
    res.append(AxiomResult(
        "contact_nondegenerate", float(absvol[k]) if len(pts) else 0.0,
        bool(len(pts) and np.all(absvol > tol)),
        tuple(float(t) for t in pts[k]) if len(pts) else None,
        "min |eta ^ d eta| over samples; must exceed tol"))
    add("reeb_kernel", _maxabs(np.einsum("ni,nij->nj", xi, v["d_eta"])), "d eta(xi, .) = 0")
    add("h_xi_zero", _maxabs(np.einsum("nij,nj->ni", h, xi)))
    add("eta_h_zero", _maxabs(np.einsum("ni,nij->nj", eta, h)))
    add("h_anticommutes_phi", _maxabs(phi @ h + h @ phi))
    add("h_traceless", np.maximum(np.abs(np.trace(h, axis1=1, axis2=2)),
                                  np.abs(np.trace(phi @ h, axis1=1, axis2=2))), "tr h = tr phi h = 0")
    gh = g @ h
    add("h_symmetric", _maxabs(gh - gh.transpose(0, 2, 1)))
    gph = g @ phi @ h
    add("phi_h_symmetric", _maxabs(gph - gph.transpose(0, 2, 1)))
    add("integrability", _maxabs(integrability_residual(v["gamma"], v["d_phi"], phi, h, g, xi, eta)),
        "(nabla_X phi) Y = g(X + hX, Y) xi - eta(Y)(X + hX)")
    return ValidationReport(res, tol, len(points), [tuple(p) for p in skipped])


def nabla_tensor11(gamma, d_T, T):
    """Pointwise (nabla_i T)^a_b = d_i T^a_b + Gamma^a_im T^m_b - T^a_m Gamma^m_ib.

    ``gamma[n, k, i, j]`` is Gamma^k_ij, ``d_T[n, i, a, b]`` is d_i T^a_b.
    Result indexed ``[n, i, a, b]``.
    """
    return (d_T + np.einsum("naim,nmb->niab", gamma, T)
            - np.einsum("nam,nmib->niab", T, gamma))


def integrability_residual(gamma, d_phi, phi, h, g, xi, eta):
    nphi = nabla_tensor11(gamma, d_phi, phi)  # [n, i(X), a, b(Y)]
    X_hX = np.eye(DIM)[None] + h  # column i is X + hX for X = d_i
    gXY = np.einsum("nmi,nmb->nib", X_hX, g)  # g(X + hX, Y)
    rhs = (np.einsum("nib,na->niab", gXY, xi) - np.einsum("nb,nai->niab", eta, X_hX))
    return nphi - rhs


def describe(s: ContactStructure) -> dict:
    """Rendered components, for reports and spec emission."""
    def mat(m):
        return [[render(x) for x in row] for row in m]
    return {"g": mat(s.g), "phi": mat(s.phi.components), "xi": [render(x) for x in s.xi.components],
            "eta": [render(x) for x in s.eta.components], "h": mat(s.h.components)}
