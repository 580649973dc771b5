"""Charts realising the classification with |grad lambda| = 1 and xi(lambda) = 0,
plus the catalog of reference structures.

Both cases take xi = d/dx, a lambda profile lambda(z) = int dz / k3 + const and
a function H(y, z) whose y-derivative F enters the Ricci components:

* case 1: phi e = d/dy, e = (-2y + r, 2x lambda - (H + y) / (2 lambda) + beta, k3),
  with A = S(xi, e) = 0 and B = S(xi, phi e) = F;
* case 2: e = d/dy, phi e = (2y + r, 2x lambda - (H + y) / (2 lambda) + beta, k3),
  with A = F and B = 0.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curvature import evaluate_geometry, tau_phi
from .expr import (Add, Compiled, Const, Div, Expr, Mul, Neg, Pow, Sub, Symbol, add, as_expr, diff, div,
                   free_symbols, func, mul, parse, power, simplify, sub)
from .fields import DIM, VectorField, lie_bracket
from .nullity import abc_from_values, basis_from_values, grad_lambda
from .specfile import ManifoldSpec, loads, spec_from_structure_inputs
from .structure import AxiomResult, ValidationReport, safe_evaluate, validate, worst

COORDS = ("x", "y", "z")
DEFAULT_BOX = {"x": (-1.0, 1.0), "y": (-1.0, 1.0), "z": (0.5, 3.0)}
# sample points are kept where lambda exceeds this, away from the umbilical set h = 0
LAMBDA_FLOOR = 0.25


class IntegrationError(ValueError):
    """1/k3 is outside the supported table (sums of constant multiples of z^n)."""


def _as_param(value, allowed, what) -> Expr:
    e = value if isinstance(value, Expr) else parse(str(value), COORDS)
    extra = free_symbols(e) - set(allowed)
    if extra:
        raise ValueError(f"{what} may only depend on {', '.join(allowed)}; found {', '.join(sorted(extra))}")
    return simplify(e)


@dataclass(frozen=True)
class ChartParams:
    case: int
    k3: object = "1"
    r: object = "0"
    beta: object = "0"
    H: object = "0"
    lambda_const: float = 0.0
    box: dict | None = None

    def __post_init__(self):
        if self.case not in (1, 2):
            raise ValueError(f"case must be 1 or 2, got {self.case!r}")
        object.__setattr__(self, "k3", _as_param(self.k3, ("z",), "k3"))
        object.__setattr__(self, "r", _as_param(self.r, ("z",), "r"))
        object.__setattr__(self, "beta", _as_param(self.beta, ("z",), "beta"))
        object.__setattr__(self, "H", _as_param(self.H, ("y", "z"), "H"))


# ---------------------------------------------------------------- 1/k3 integration

def laurent(e: Expr, var: str = "z") -> dict | None:
    """Coefficients {n: c} if ``e`` is a finite sum of c * var^n, else None."""
    if isinstance(e, Const):
        return {0: e.value} if e.value else {}
    if isinstance(e, Symbol):
        return {1: 1.0} if e.name == var else None
    if isinstance(e, Neg):
        inner = laurent(e.arg, var)
        return None if inner is None else {n: -c for n, c in inner.items()}
    if isinstance(e, (Add, Sub)):
        a, b = laurent(e.left, var), laurent(e.right, var)
        if a is None or b is None:
            return None
        sign = 1.0 if isinstance(e, Add) else -1.0
        out = dict(a)
        for n, c in b.items():
            out[n] = out.get(n, 0.0) + sign * c
        return {n: c for n, c in out.items() if c}
    if isinstance(e, Mul):
        a, b = laurent(e.left, var), laurent(e.right, var)
        if a is None or b is None:
            return None
        out: dict = {}
        for n, c in a.items():
            for m, d in b.items():
                out[n + m] = out.get(n + m, 0.0) + c * d
        return {n: c for n, c in out.items() if c}
    if isinstance(e, Div):
        a, b = laurent(e.left, var), laurent(e.right, var)
        if a is None or b is None or len(b) != 1:
            return None
        (m, d), = b.items()
        return {n - m: c / d for n, c in a.items()}
    if isinstance(e, Pow):
        base = laurent(e.base, var)
        if base is None:
            return None
        k = e.exponent
        if k < 0:
            if len(base) != 1:
                return None
            (m, d), = base.items()
            return {m * k: d ** k}
        out = {0: 1.0}
        for _ in range(k):
            out = laurent_mul(out, base)
        return out
    return None


def laurent_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for n, c in a.items():
        for m, d in b.items():
            out[n + m] = out.get(n + m, 0.0) + c * d
    return {n: c for n, c in out.items() if c}


def reciprocal_laurent(k3: Expr, var: str = "z") -> dict:
    """Laurent coefficients of 1/k3, when it has a finite expansion."""
    direct = laurent(k3, var)
    if direct is not None and len(direct) == 1:
        (m, d), = direct.items()
        return {-m: 1.0 / d}
    if isinstance(k3, Div):
        num, den = laurent(k3.left, var), laurent(k3.right, var)
        if num is not None and den is not None and len(num) == 1:
            (m, d), = num.items()
            return {n - m: c / d for n, c in den.items()}
    if direct == {}:
        raise IntegrationError("k3 vanishes identically")
    raise IntegrationError(
        f"cannot integrate 1/k3 for k3 = {k3}: supported forms are c*z^n and "
        "reciprocals of sums of such terms")


def integrate_reciprocal(k3: Expr, var: str = "z", constant: float = 0.0) -> Expr:
    """int dz / k3 in closed form; the z^-1 term integrates to ln(z)."""
    terms = reciprocal_laurent(k3, var)
    z = Symbol(var)
    out = as_expr(constant)
    for n in sorted(terms):
        c = terms[n]
        piece = mul(as_expr(c), func("ln", z)) if n == -1 else mul(as_expr(c / (n + 1)), power(z, n + 1))
        out = add(out, piece)
    return out


# ---------------------------------------------------------------- generated charts

@dataclass
class GeneratedChart:
    params: ChartParams
    spec: ManifoldSpec
    lam: Expr
    F: Expr
    k: tuple

    @property
    def case(self) -> int:
        return self.params.case

    @cached_property
    def structure(self):
        return self.spec.build()

    @property
    def e(self) -> VectorField:
        return VectorField(self.spec.fields["e"], COORDS)


def _build(params: ChartParams, name: str) -> GeneratedChart:
    lam = integrate_reciprocal(params.k3, "z", params.lambda_const)
    y = Symbol("y")
    k2 = simplify(add(sub(mul(mul(as_expr(2), Symbol("x")), lam), div(add(params.H, y), mul(as_expr(2), lam))),
                      params.beta))
    F = simplify(diff(params.H, "y"))
    if params.case == 1:
        k1 = simplify(add(mul(as_expr(-2), y), params.r))
        fields = {"xi": [1, 0, 0], "e": [k1, k2, params.k3], "phie": [0, 1, 0]}
    else:
        k1 = simplify(add(mul(as_expr(2), y), params.r))
        fields = {"xi": [1, 0, 0], "e": [0, 1, 0], "phie": [k1, k2, params.k3]}
    box = dict(params.box or DEFAULT_BOX)
    constraints = [("nonzero", params.k3)] if free_symbols(params.k3) else []
    constraints.append(("positive", sub(lam, as_expr(LAMBDA_FLOOR))))
    spec = spec_from_structure_inputs(name, COORDS, "frame", fields, box, constraints)
    _check_k3(spec, params.k3)
    return GeneratedChart(params, spec, lam, F, (k1, k2, params.k3))


def _check_k3(spec: ManifoldSpec, k3: Expr):
    if not free_symbols(k3):
        if float(Compiled(k3, COORDS)(np.zeros((1, DIM)))[0]) == 0.0:
            raise ValueError("k3 must not vanish (k3 = 0 given)")
        return
    spec.chart().sample(16, 0)


def build_case1(params: ChartParams, name: str = "") -> GeneratedChart:
    """Frame xi = d/dx, phi e = d/dy, e = (k1, k2, k3)."""
    if params.case != 1:
        raise ValueError("build_case1 needs case = 1")
    return _build(params, name or "chart-case1")


def build_case2(params: ChartParams, name: str = "") -> GeneratedChart:
    """Frame xi = d/dx, e = d/dy, phi e = (k1', k2', k3)."""
    if params.case != 2:
        raise ValueError("build_case2 needs case = 2")
    return _build(params, name or "chart-case2")


def build_chart(params: ChartParams, name: str = "") -> GeneratedChart:
    return (build_case1 if params.case == 1 else build_case2)(params, name)


def _values(exprs, points):
    arr = np.empty(len(exprs), dtype=object)
    arr[:] = list(exprs)
    return Compiled(arr, COORDS)(points)


def verify_theorem4(gen: GeneratedChart, points, tol: float = 1e-8) -> ValidationReport:
    """Every relation the classification asserts for the generated chart, as report rows."""
    s = gen.structure
    pts = np.asarray(points, dtype=float)
    rows = list(validate(s, points=pts, tol=tol).axioms)
    xi, e, pe = s.frame
    lam = gen.lam
    one = as_expr(1)

    # case 1: [e, phi e] = -b e + c phi e + 2 xi, [e, xi] = -2 lambda phi e, [phi e, xi] = 0, b = 0, c = (F + 1) / 2 lambda
    # case 2: [e, phi e] = -b e + c phi e + 2 xi, [e, xi] = 0, [phi e, xi] = -2 lambda e, b = (F + 1) / 2 lambda, c = 0
    two_lam = mul(as_expr(2), lam)
    if gen.case == 1:
        b, c = as_expr(0), div(add(gen.F, one), two_lam)
        exp_e_xi, exp_pe_xi = pe.scale(mul(as_expr(-1), two_lam)), VectorField([0, 0, 0], COORDS)
    else:
        b, c = div(add(gen.F, one), two_lam), as_expr(0)
        exp_e_xi, exp_pe_xi = VectorField([0, 0, 0], COORDS), e.scale(mul(as_expr(-1), two_lam))
    exp_e_pe = e.scale(mul(as_expr(-1), b)) + pe.scale(c) + xi.scale(2)
    brackets = [
        ("bracket_e_phie", lie_bracket(e, pe) - exp_e_pe, "[e, phi e] = -b e + c phi e + 2 xi"),
        ("bracket_e_xi", lie_bracket(e, xi) - exp_e_xi,
         "[e, xi] = -2 lambda phi e" if gen.case == 1 else "[e, xi] = 0"),
        ("bracket_phie_xi", lie_bracket(pe, xi) - exp_pe_xi,
         "[phi e, xi] = 0" if gen.case == 1 else "[phi e, xi] = -2 lambda e"),
    ]
    scalars = [lam, gen.F, diff(lam, "z"), gen.params.k3]
    flat = [c for _, v, _ in brackets for c in v.components] + scalars + list(e.components)
    vals, kept, skipped = safe_evaluate(Compiled(np.array(flat, dtype=object), COORDS), pts)
    for n, (name, _, detail) in enumerate(brackets):
        rows.append(worst(name, np.max(np.abs(vals[:, 3 * n:3 * n + 3]), axis=1), kept, tol, detail))
    lam_v, F_v, dlam_v, k3_v = (vals[:, 9 + i] for i in range(4))
    e_ref = vals[:, 13:16]
    rows.append(worst("lambda_prime_k3", np.abs(dlam_v * k3_v - 1), kept, tol, "lambda'(z) k3 = 1"))

    geo, kept2, _ = evaluate_geometry(s, kept)
    if len(kept2) != len(kept):
        raise ValueError("structure undefined at a sampled point")
    a_th = lam_v - 1 if gen.case == 1 else -1 - lam_v
    lam_err, a_err, A_err, B_err, bc_err, tau_err = [], [], [], [], [], []
    for n, p in enumerate(kept):
        v = {k: arr[n] for k, arr in geo.items()}
        basis = basis_from_values(v, p, e_ref[n])
        r = abc_from_values(v, basis)
        lam_err.append(abs(r.lam - lam_v[n]))
        a_err.append(abs(r.a - a_th[n]))
        if gen.case == 1:
            A_err.append(abs(r.A))
            B_err.append(abs(r.B - F_v[n]))
            bc_err.append(max(abs(r.b - r.A / (2 * r.lam)), abs(r.c - (r.B + 1) / (2 * r.lam))))
        else:
            A_err.append(abs(r.A - F_v[n]))
            B_err.append(abs(r.B))
            bc_err.append(max(abs(r.b - (r.A + 1) / (2 * r.lam)), abs(r.c - r.B / (2 * r.lam))))
        tau_err.append(float(np.max(np.abs(v["nabla_xi_tau"] - 2 * a_th[n] * tau_phi(v["tau"], v["phi"])))))
    a_name = "a = lambda - 1" if gen.case == 1 else "a = -1 - lambda"
    rows.append(worst("lambda_profile", lam_err, kept, tol, "eigenvalue of h equals int dz / k3"))
    rows.append(worst("a_value", a_err, kept, tol, a_name))
    rows.append(worst("A_pattern", A_err, kept, tol, "A = 0" if gen.case == 1 else "A = F"))
    rows.append(worst("B_pattern", B_err, kept, tol, "B = F" if gen.case == 1 else "B = 0"))
    rows.append(worst("b_c_formula", bc_err, kept, tol,
                      "b = A / 2 lambda, c = (B + 1) / 2 lambda" if gen.case == 1
                      else "b = (A + 1) / 2 lambda, c = B / 2 lambda"))
    rows.append(worst("nabla_xi_tau_2a", tau_err, kept, tol, f"nabla_xi tau = 2 a tau.phi with {a_name}"))

    grads, _ = grad_lambda(s, kept, reference=gen.e, lam=lam)
    rows.append(worst("grad_lambda_norm", [abs(gr.norm - 1) for gr in grads], kept, tol, "|grad lambda| = 1"))
    rows.append(worst("xi_lambda", [abs(gr.xi_lambda) for gr in grads], kept, tol, "xi(lambda) = 0"))

    det = Compiled(_det(s.g), COORDS)(kept)
    rows.append(worst("metric_det", np.abs(det - 1 / k3_v ** 2), kept, tol, "det g = 1 / k3^2"))
    return ValidationReport(rows, tol, len(pts), [tuple(map(float, p)) for p in skipped])


def _det(m):
    return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


# ---------------------------------------------------------------- catalog

@dataclass
class CatalogEntry:
    name: str
    spec: ManifoldSpec
    expected: dict = field(default_factory=dict)
    source: str = "literature"
    note: str = ""

    @cached_property
    def structure(self):
        return self.spec.build()


# Published values. Scalar entries are expressions in the entry's coordinates;
# "lambda" may list several candidates when the published data disagree.
EXPECTATIONS = {
    "example1": {
        "kappa": "(x3^4 - 1)/x3^4",
        "mu": "2*(1 - 1/x3^2)",
        "nu": "0",
        "tau_coefficient": "2*(1 - 1/x3^2)",
        "label": "generalized (kappa,mu)",
    },
    "example3": {"lambda": ["z"], "tau_coefficient": "2*(z - 1)", "a": "z - 1"},
    "example3-tensor": {
        "lambda": ["z"],
        "tau_coefficient": "2*(z - 1)",
        "h": [["0", "0", "-2*y*z"], ["0", "-z", "2*z*(2*x*z - 1)"], ["0", "0", "z"]],
    },
    "example4": {
        "lambda": ["ln(z)", "z"],
        "kappa": "1 - ln(z)^2",
        "mu": "2*(-1 - ln(z))",
        "nu": "0",
        "tau_coefficient": "2*(-ln(z) - 1)",
        "h": [["0", "0", "-L*2*y/z"], ["0", "L", "-2*L*(2*x*z - (2*z + y)/(2*z))/z"], ["0", "0", "-L"]],
    },
    "sasakian": {"label": "Sasakian", "kappa": "1"},
}

CATALOG_NAMES = ("example1", "example3", "example3-tensor", "example4", "sasakian")
_SOURCES = {"sasakian": "synthetic"}
_NOTES = {
    "example4": "published data disagree: the published phi gives an h with eigenvalue z, the text states ln(z)",
    "sasakian": "standard structure on R^3, not taken from the literature examples",
}


def catalog_text(name: str) -> str:
    res = importlib.resources.files("contact3") / "catalog" / f"{name}.cmm"
    return res.read_text(encoding="utf-8")


def catalog() -> list:
    return [catalog_entry(n) for n in CATALOG_NAMES]


def catalog_entry(name: str) -> CatalogEntry:
    if name not in CATALOG_NAMES:
        raise KeyError(f"unknown catalog entry {name!r}; available: {', '.join(CATALOG_NAMES)}")
    return CatalogEntry(name, loads(catalog_text(name), f"catalog:{name}"), EXPECTATIONS.get(name, {}),
                        _SOURCES.get(name, "literature"), _NOTES.get(name, ""))
