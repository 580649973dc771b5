import numpy as np
import pytest

from contact3.nullity import (DegeneratePointError, abc_at, classify, extract_kmn_at, grad_lambda,
                              nullity_sweep, phi_basis_at)

from conftest import points


def test_phi_basis_example3(ex3):
    b = phi_basis_at(ex3, (0.3, -0.2, 2.0), reference=ex3.frame[1])
    assert b.lam == pytest.approx(2.0, abs=1e-12)
    E = ex3.frame[1].evaluate(np.array([[0.3, -0.2, 2.0]]))[0]
    np.testing.assert_allclose(b.e, E, atol=1e-12)


def test_phi_basis_is_orthonormal(ex1):
    from contact3.curvature import evaluate_geometry
    for p in points(ex1, 8):
        b = phi_basis_at(ex1, p)
        v, _, _ = evaluate_geometry(ex1, p[None])
        g, h = v["g"][0], v["h"][0]
        F = np.stack([b.xi, b.e, b.phie], axis=1)
        np.testing.assert_allclose(F.T @ g @ F, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(h @ b.e, b.lam * b.e, atol=1e-10)
        np.testing.assert_allclose(h @ b.phie, -b.lam * b.phie, atol=1e-10)


def test_sign_rule_without_reference(ex3):
    b = phi_basis_at(ex3, (0.3, -0.2, 2.0))
    assert b.e[np.flatnonzero(np.abs(b.e) > 1e-12)[0]] > 0


def test_degenerate_point_raises(sasakian):
    with pytest.raises(DegeneratePointError):
        phi_basis_at(sasakian, (0.1, 0.2, 0.3))


def test_example1_at_x3_equal_2(ex1):
    r = extract_kmn_at(ex1, (0.1, 0.2, 2.0))
    assert r.kappa == pytest.approx(15 / 16, abs=1e-10)
    assert r.mu == pytest.approx(3 / 2, abs=1e-10)
    assert abs(r.nu) < 1e-10
    assert r.residual < 1e-8
    assert r.lam == pytest.approx(1 / 4, abs=1e-12)


def test_example1_closed_forms(ex1):
    for r in nullity_sweep(ex1, points(ex1))[0]:
        x3 = r.point[2]
        assert r.kappa == pytest.approx((x3 ** 4 - 1) / x3 ** 4, abs=1e-9)
        assert r.mu == pytest.approx(2 * (1 - 1 / x3 ** 2), abs=1e-9)


def test_example1_ricci_components_vanish(ex1):
    for p in points(ex1, 16):
        r = abc_at(ex1, p, reference=ex1.frame[1])
        assert abs(r.A) < 1e-9 and abs(r.B) < 1e-9
        assert max(r.residuals.values()) < 1e-9


def test_example3_coefficients(ex3):
    for p in points(ex3, 16):
        r = abc_at(ex3, p, reference=ex3.frame[1], check_tau=True)
        z = p[2]
        assert r.lam == pytest.approx(z, abs=1e-10)
        assert r.a == pytest.approx(z - 1, abs=1e-10)
        assert abs(r.A) < 1e-9
        assert r.B == pytest.approx(-1, abs=1e-9)
        assert r.e_lambda == pytest.approx(1, abs=1e-9)
        assert abs(r.phie_lambda) < 1e-9 and abs(r.xi_lambda) < 1e-9
        assert max(r.residuals.values()) < 1e-8


def test_example3_is_generic(ex3):
    c = classify(ex3, points(ex3))
    assert c.label == "generic"
    assert c.details["max_residual"] > 1e-3


def test_example1_classification(ex1):
    assert classify(ex1, points(ex1)).label == "generalized (kappa,mu)"


def test_sasakian_classification(sasakian):
    c = classify(sasakian, points(sasakian))
    assert c.label == "Sasakian"
    assert all(r.degenerate and r.mu is None for r in c.reports)


def test_flat_stub_is_constant_kappa_mu(flat):
    c = classify(flat, points(flat))
    assert c.label == "(kappa,mu)"
    for r in c.reports:
        assert abs(r.kappa) < 1e-12 and abs(r.mu) < 1e-12 and abs(r.nu) < 1e-12


@pytest.mark.parametrize("fixture", ["ex1", "flat"])
def test_lambda_squared_is_one_minus_kappa(fixture, request):
    s = request.getfixturevalue(fixture)
    reports, _ = nullity_sweep(s, points(s))
    checked = [r for r in reports if r.residual < 1e-8]
    assert checked
    for r in checked:
        assert r.lam ** 2 == pytest.approx(1 - r.kappa, abs=1e-9)


def test_reconstruction_matches_within_residual(ex1):
    # residual already bounds the reconstruction error over all coordinate pairs
    for r in nullity_sweep(ex1, points(ex1, 16))[0]:
        assert r.residual < 1e-9


def test_grad_lambda_example3(ex3):
    reps, skipped = grad_lambda(ex3, points(ex3, 16), reference=ex3.frame[1])
    assert len(skipped) == 0
    for r in reps:
        assert r.e_lambda == pytest.approx(1, abs=1e-9)
        assert r.eq1_residual < 1e-9
        assert abs(r.xi_lambda) < 1e-9


def test_grad_lambda_with_explicit_profile(charts):
    gen = charts[0]
    s = gen.structure
    reps, _ = grad_lambda(s, points(s, 16), reference=gen.e, lam=gen.lam)
    for r in reps:
        assert r.eq1_residual < 1e-9


@pytest.mark.parametrize("fixture", ["ex1", "ex3", "ex3_tensor", "ex4"])
def test_tau_relation_follows_from_xi_lambda_zero(fixture, request):
    s = request.getfixturevalue(fixture)
    checked = 0
    for p in points(s, 16):
        r = abc_at(s, p, check_tau=True)
        if abs(r.xi_lambda) < 1e-9:
            checked += 1
            assert r.residuals["nabla_xi_tau_2a"] < 1e-8
    assert checked
