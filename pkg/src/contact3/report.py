"""Report assembly for the command-line tool.

Every report is a plain dict with a fixed key order, so JSON output is stable
and the text renderer is a deterministic walk over the same data.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import dhomothety
from .charts import CATALOG_NAMES, GeneratedChart, catalog_entry, verify_theorem4
from .curvature import check_B_identities, evaluate_geometry, tau_phi
from .expr import Compiled, as_expr, diff, parse
from .nullity import abc_from_values, basis_from_values, classify, DegeneratePointError
from .structure import ContactStructure, ValidationReport, validate

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    n_points: int = 64
    seed: int = 42
    tol: float = 1e-8
    fd_step: float = 1e-6
    alpha: float | None = None
    fmt: str = "text"
    verbose: bool = False
    claim_tol: float = 1e-6

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("--points must be at least 1")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError("--tol must be a positive number")
        if not (self.fd_step > 0 and math.isfinite(self.fd_step)):
            raise ValueError("--fd-step must be a positive number")

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if k not in ("fmt", "verbose")}


def _f(v):
    return None if v is None else float(v)


def _point(p):
    return None if p is None else [float(t) for t in p]


def _rows(report: ValidationReport):
    return [{"name": a.name, "residual": float(a.residual), "passed": bool(a.passed),
             "witness": _point(a.witness), "detail": a.detail} for a in report.axioms]


def _section(report: ValidationReport):
    return {"passed": report.passed, "checks": _rows(report),
            "skipped_points": [_point(p) for p in report.skipped]}


def _header(command, name, cfg: RunConfig):
    return {"schema": SCHEMA_VERSION, "command": command, "structure": name, "config": cfg.to_dict()}


# ---------------------------------------------------------------- verify / nullity

def verify(s: ContactStructure, cfg: RunConfig) -> dict:
    pts = s.chart.sample(cfg.n_points, cfg.seed)
    axioms = validate(s, points=pts, tol=cfg.tol)
    out = _header("verify", s.name, cfg)
    out["axioms"] = _section(axioms)
    if axioms.passed:
        out["identities"] = _section(check_B_identities(s, pts, cfg.tol))
    else:
        out["identities"] = {"passed": False, "checks": [], "skipped_points": [],
                             "reason": "axioms failed; curvature identities not evaluated"}
    out["passed"] = axioms.passed and out["identities"]["passed"]
    return out


def nullity(s: ContactStructure, cfg: RunConfig) -> dict:
    pts = s.chart.sample(cfg.n_points, cfg.seed)
    axioms = validate(s, points=pts, tol=cfg.tol)
    out = _header("nullity", s.name, cfg)
    out["axioms"] = _section(axioms)
    if not axioms.passed:
        out["passed"] = False
        return out
    ref = s.frame[1] if s.frame is not None else None
    cls = classify(s, pts, {"residual": cfg.tol, "nu": cfg.tol}, reference=ref)
    out["classification"] = cls.label
    out["details"] = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in cls.details.items()}
    out["points"] = [{"point": _point(r.point), "kappa": _f(r.kappa), "mu": _f(r.mu), "nu": _f(r.nu),
                      "residual": _f(r.residual), "lambda": _f(r.lam), "degenerate": r.degenerate}
                     for r in cls.reports]
    out["passed"] = True
    return out


# ---------------------------------------------------------------- dhomothety / chart

def dhomothety_report(s: ContactStructure, alpha: float, cfg: RunConfig, lam=None) -> dict:
    pts = s.chart.sample(cfg.n_points, cfg.seed)
    rep = dhomothety.verify_transform(s, alpha, pts, cfg.tol, lam=lam)
    out = _header("dhomothety", s.name, cfg)
    out["alpha"] = float(alpha)
    out["laws"] = _section(rep)
    out["passed"] = rep.passed
    return out


def chart_report(gen: GeneratedChart, cfg: RunConfig) -> dict:
    pts = gen.spec.chart().sample(cfg.n_points, cfg.seed)
    rep = verify_theorem4(gen, pts, cfg.tol)
    p = gen.params
    out = _header("chart", gen.spec.name, cfg)
    out["case"] = p.case
    out["parameters"] = {"k3": str(p.k3), "r": str(p.r), "beta": str(p.beta), "H": str(p.H),
                         "lambda_const": float(p.lambda_const)}
    out["lambda"] = str(gen.lam)
    out["F"] = str(gen.F)
    out["frame"] = {k: [str(e) for e in v] for k, v in gen.spec.fields.items()}
    out["chart_identities"] = _section(rep)
    out["passed"] = rep.passed
    return out


# ---------------------------------------------------------------- catalog regression

KNOWN_DISCREPANCIES = {
    # the published relation for this entry uses the opposite sign convention for tau.phi
    "example1": ("tau_coefficient",),
    # the published data of this entry are mutually inconsistent
    "example4": ("lambda", "kappa", "mu", "nu", "tau_coefficient", "h"),
}


def _claim_values(text, coords, pts, defs=None):
    return Compiled(parse(text, coords, defs), coords)(pts)


def _compare(name, claim, computed, claim_values, tol):
    diff = np.abs(np.asarray(computed, dtype=float) - claim_values)
    scale = np.maximum(1.0, np.abs(claim_values))
    k = int(np.argmax(diff / scale)) if len(diff) else 0
    rel = float(np.max(diff / scale)) if len(diff) else 0.0
    return {"quantity": name, "claim": claim, "max_abs_error": float(np.max(diff)) if len(diff) else 0.0,
            "max_rel_error": rel, "agrees": bool(rel < tol), "worst_index": k}


def catalog_run(name: str, cfg: RunConfig) -> dict:
    entry = catalog_entry(name)
    s = entry.structure
    coords = s.coords
    pts = s.chart.sample(cfg.n_points, cfg.seed)
    axioms = validate(s, points=pts, tol=cfg.tol)
    ids = check_B_identities(s, pts, cfg.tol)
    ref = s.frame[1] if s.frame is not None else None
    cls = classify(s, pts, {"residual": cfg.tol, "nu": cfg.tol}, reference=ref)
    reports = {r.point: r for r in cls.reports}
    v, kept, _ = evaluate_geometry(s, pts)
    kept_t = [tuple(map(float, p)) for p in kept]
    exp = entry.expected
    comparisons = []
    self_checks = {"axioms": axioms.passed, "identities": ids.passed}
    extra = {}

    lam = np.array([reports[p].lam for p in kept_t])
    if "lambda" in exp:
        for cand in exp["lambda"]:
            comparisons.append(_compare("lambda", cand, lam, _claim_values(cand, coords, kept), cfg.claim_tol))
    for q in ("kappa", "mu", "nu"):
        if q in exp:
            vals = [getattr(reports[p], q) for p in kept_t]
            if any(x is None for x in vals):
                continue
            comparisons.append(_compare(q, exp[q], vals, _claim_values(exp[q], coords, kept), cfg.claim_tol))
    if "tau_coefficient" in exp or "a" in exp:
        T = tau_phi(v["tau"], v["phi"])
        N = v["nabla_xi_tau"]
        tt = np.einsum("nij,nij->n", T, T)
        coef = np.where(tt > 0, np.einsum("nij,nij->n", N, T) / np.where(tt > 0, tt, 1), 0.0)
        fit = float(np.max(np.abs(N - coef[:, None, None] * T))) if len(kept) else 0.0
        self_checks["tau_proportional"] = fit < cfg.tol
        extra["tau_fit_residual"] = fit
        if "tau_coefficient" in exp:
            c = _compare("tau_coefficient", exp["tau_coefficient"], coef,
                         _claim_values(exp["tau_coefficient"], coords, kept), cfg.claim_tol)
            c["fit_residual"] = fit
            comparisons.append(c)
        if "a" in exp:
            a_vals = []
            for n, p in enumerate(kept):
                vv = {k: arr[n] for k, arr in v.items()}
                try:
                    basis = basis_from_values(vv, p, ref.evaluate(p[None])[0] if ref is not None else None)
                except DegeneratePointError:
                    a_vals.append(float("nan"))
                    continue
                a_vals.append(abc_from_values(vv, basis).a)
            comparisons.append(_compare("a", exp["a"], a_vals, _claim_values(exp["a"], coords, kept),
                                        cfg.claim_tol))
    if "h" in exp:
        for cand in exp.get("lambda", [None]):
            err = 0.0
            for i in range(3):
                for j in range(3):
                    text = exp["h"][i][j]
                    if cand is not None:
                        text = text.replace("L", f"({cand})")
                    err = max(err, float(np.max(np.abs(v["h"][:, i, j] - _claim_values(text, coords, kept)))))
            comparisons.append({"quantity": "h", "claim": f"published h with lambda = {cand}",
                                "max_abs_error": err, "max_rel_error": err, "agrees": err < cfg.claim_tol,
                                "worst_index": 0})
    if "label" in exp:
        comparisons.append({"quantity": "label", "claim": exp["label"], "computed": cls.label,
                            "agrees": cls.label == exp["label"]})
    if all(x is y for x, y in zip(s.xi.components, (as_expr(1), as_expr(0), as_expr(0)))):
        # xi = d/dx, so L_xi phi is the x-derivative of the components
        half_dx = np.vectorize(lambda e: diff(e, coords[0]) * 0.5, otypes=[object])(s.phi.components)
        hv = Compiled(half_dx, coords)(kept)
        err = float(np.max(np.abs(v["h"] - hv))) if len(kept) else 0.0
        self_checks["h_equals_half_dx_phi"] = err < min(cfg.tol, 1e-10)
        extra["h_half_dx_phi_error"] = err
    known = KNOWN_DISCREPANCIES.get(name, ())
    for c in comparisons:
        c["known_discrepancy"] = (not c["agrees"]) and c["quantity"] in known
        c.pop("worst_index", None)
    unexpected = [c["quantity"] for c in comparisons if not c["agrees"] and not c["known_discrepancy"]]
    passed = all(self_checks.values()) and not unexpected
    return {
        "name": name,
        "source": entry.source,
        "note": entry.note,
        "classification": cls.label,
        "self_consistency": {"axioms": _section(axioms), "identities": _section(ids),
                             **{k: ok for k, ok in self_checks.items() if k not in ("axioms", "identities")},
                             **extra},
        "comparisons": comparisons,
        "discrepancies": [c for c in comparisons if not c["agrees"]],
        "passed": passed,
    }


def examples(cfg: RunConfig, names=CATALOG_NAMES) -> dict:
    out = _header("examples", "catalog", cfg)
    out["entries"] = [catalog_run(n, cfg) for n in names]
    out["passed"] = all(e["passed"] for e in out["entries"])
    return out


# ---------------------------------------------------------------- rendering

def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


def _num(v):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _fmt_point(p):
    return "-" if p is None else "(" + ", ".join(f"{t:.6g}" for t in p) + ")"


def _text_section(title, sec, lines, verbose):
    lines.append(f"{title}: {'PASS' if sec['passed'] else 'FAIL'}")
    if "reason" in sec:
        lines.append(f"  {sec['reason']}")
    for row in sec["checks"]:
        mark = "ok  " if row["passed"] else "FAIL"
        line = f"  {mark} {row['name']:<28} {_num(row['residual']):>10}  at {_fmt_point(row['witness'])}"
        if verbose and row["detail"]:
            line += f"  [{row['detail']}]"
        lines.append(line)
    if sec["skipped_points"]:
        lines.append(f"  skipped points: {len(sec['skipped_points'])}")


def to_text(report: dict, verbose: bool = False) -> str:
    lines = [f"contact3 {report['command']}: {report['structure']}"]
    cfg = report["config"]
    lines.append(f"points={cfg['n_points']} seed={cfg['seed']} tol={cfg['tol']:g}")
    cmd = report["command"]
    if cmd in ("verify", "nullity"):
        _text_section("axioms", report["axioms"], lines, verbose)
    if cmd == "verify":
        _text_section("identities", report["identities"], lines, verbose)
    if cmd == "nullity" and "classification" in report:
        lines.append(f"classification: {report['classification']}")
        rows = report["points"] if verbose else report["points"][:0]
        d = report["details"]
        lines.append(f"  max residual {_num(d.get('max_residual'))}, max lambda {_num(d.get('max_lambda'))}")
        if rows:
            lines.append(f"  {'point':<36} {'kappa':>11} {'mu':>11} {'nu':>11} {'residual':>11}")
            for r in rows:
                lines.append(f"  {_fmt_point(r['point']):<36} {_num(r['kappa']):>11} {_num(r['mu']):>11} "
                             f"{_num(r['nu']):>11} {_num(r['residual']):>11}")
    if cmd == "dhomothety":
        lines.append(f"alpha = {report['alpha']:g}")
        _text_section("laws", report["laws"], lines, verbose)
    if cmd == "chart":
        lines.append(f"case {report['case']}: lambda = {report['lambda']}, F = {report['F']}")
        for k, v in report["frame"].items():
            lines.append(f"  {k} = ({', '.join(v)})")
        _text_section("chart_identities", report["chart_identities"], lines, verbose)
    if cmd == "examples":
        for e in report["entries"]:
            lines.append("")
            lines.append(f"[{e['name']}] {'PASS' if e['passed'] else 'FAIL'}  classification: {e['classification']}")
            if e["note"]:
                lines.append(f"  note: {e['note']}")
            sc = e["self_consistency"]
            for key in ("axioms", "identities"):
                sec = sc[key]
                worst_row = max(sec["checks"], key=lambda r: (not r["passed"], r["residual"] if r["name"] !=
                                                              "contact_nondegenerate" else 0.0))
                lines.append(f"  {key}: {'PASS' if sec['passed'] else 'FAIL'}"
                             + ("" if sec["passed"] else f" ({worst_row['name']})"))
                if verbose:
                    _text_section(f"  {key}", sec, lines, verbose)
            if "tau_proportional" in sc:
                lines.append(f"  nabla_xi tau proportional to tau.phi: {'PASS' if sc['tau_proportional'] else 'FAIL'}"
                             f" (fit residual {_num(sc['tau_fit_residual'])})")
            if "h_equals_half_dx_phi" in sc:
                lines.append(f"  h = (1/2) d_x phi: {'PASS' if sc['h_equals_half_dx_phi'] else 'FAIL'}"
                             f" (max error {_num(sc['h_half_dx_phi_error'])})")
            for c in e["comparisons"]:
                status = "agrees" if c["agrees"] else ("DISAGREES (known)" if c["known_discrepancy"] else "DISAGREES")
                if c["quantity"] == "label":
                    lines.append(f"  label: claim {c['claim']!r}, computed {c['computed']!r}: {status}")
                else:
                    lines.append(f"  {c['quantity']}: claim {c['claim']}: max abs error "
                                 f"{_num(c['max_abs_error'])}: {status}")
            if e["discrepancies"]:
                lines.append(f"  discrepancy report: {len(e['discrepancies'])} published claim(s) not reproduced")
    lines.append("")
    lines.append(f"result: {'PASS' if report['passed'] else 'FAIL'}")
    return "\n".join(lines) + "\n"
