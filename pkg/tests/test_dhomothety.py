import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contact3.charts import CATALOG_NAMES, catalog_entry
from contact3.dhomothety import DHomothetyParams, apply, grad_norm, kappa_bar, mu_bar, verify_transform
from contact3.expr import Compiled, parse
from contact3.structure import validate

from conftest import points


def values(s, arr, pts):
    return Compiled(np.asarray(arr, dtype=object), s.coords)(pts)


def test_alpha_one_is_identity(ex3):
    d = apply(ex3, 1.0)
    pts = points(ex3, 8)
    np.testing.assert_array_equal(values(d, d.g, pts), values(ex3, ex3.g, pts))
    np.testing.assert_array_equal(values(d, d.h.components, pts), values(ex3, ex3.h.components, pts))


def test_deformed_metric_formula(ex3):
    d = apply(ex3, 4.0)
    pts = points(ex3, 16)
    g, eta = values(ex3, ex3.g, pts), values(ex3, ex3.eta.components, pts)
    expected = 4 * g + 12 * np.einsum("ni,nj->nij", eta, eta)
    np.testing.assert_allclose(values(d, d.g, pts), expected, atol=1e-12)
    gi = values(d, d.g_inv, pts)
    np.testing.assert_allclose(np.einsum("nij,njk->nik", values(d, d.g, pts), gi),
                               np.broadcast_to(np.eye(3), gi.shape), atol=1e-10)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
def test_inverse_deformation_restores(ex1, alpha):
    back = apply(apply(ex1, alpha), 1 / alpha)
    pts = points(ex1, 16)
    for name in ("g", "g_inv"):
        np.testing.assert_allclose(values(back, getattr(back, name), pts), values(ex1, getattr(ex1, name), pts),
                                   atol=1e-10)
    np.testing.assert_allclose(values(back, back.xi.components, pts), values(ex1, ex1.xi.components, pts),
                               atol=1e-12)


@pytest.mark.parametrize("name", CATALOG_NAMES)
@pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
def test_deformed_structures_validate(name, alpha):
    s = catalog_entry(name).structure
    assert validate(apply(s, alpha), n_points=32, seed=42, tol=1e-8).passed


@pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
def test_example1_laws(ex1, alpha):
    rep = verify_transform(ex1, alpha, points(ex1), 1e-8)
    names = {a.name for a in rep.axioms}
    assert {"kappa_law", "mu_law", "h_scaling", "lambda_scaling", "grad_lambda_law"} <= names
    assert rep.passed, [(a.name, a.residual) for a in rep.failures()]


def test_closed_forms():
    assert kappa_bar(1.0, 3.0) == pytest.approx(1.0)
    assert mu_bar(0.0, 1.0) == 0.0
    assert kappa_bar(0.0, 2.0) == pytest.approx(3 / 4)
    assert mu_bar(2.0, 2.0) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 1), st.floats(-5, 5), st.floats(0.1, 10), st.floats(0.1, 10))
def test_closed_forms_compose(kappa, mu, a, b):
    assert kappa_bar(kappa_bar(kappa, a), b) == pytest.approx(kappa_bar(kappa, a * b), abs=1e-9)
    assert mu_bar(mu_bar(mu, a), b) == pytest.approx(mu_bar(mu, a * b), abs=1e-9)


def test_grad_norm_scaling(ex3):
    lam = parse("z", ex3.coords)
    pts = points(ex3, 16)
    n0, _ = grad_norm(ex3, lam, pts)
    n1, _ = grad_norm(apply(ex3, 4.0), lam * 0.25, pts)
    np.testing.assert_allclose(n1, 4.0 ** -1.5 * n0, rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_alpha(ex1, alpha):
    with pytest.raises(ValueError):
        DHomothetyParams(alpha)
    with pytest.raises(ValueError):
        apply(ex1, alpha)
