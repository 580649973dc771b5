import numpy as np
import pytest

from contact3.charts import catalog_entry
from contact3.expr import Compiled, parse
from contact3.structure import (ChartSpec, SamplingError, SingularFrameError, build_from_frame,
                                build_from_tensors, describe, validate)

from conftest import points

XYZ = ("x", "y", "z")


def ev(arr, p, coords=XYZ):
    return Compiled(arr, coords)(np.asarray([p], dtype=float))[0]


def test_frame_build_reproduces_published_metric(ex3):
    p = (0.3, -0.2, 1.7)
    a1, a2 = 2 * p[1], 1 - 2 * p[0] * p[2]
    np.testing.assert_allclose(ev(ex3.g, p), [[1, 0, a1], [0, 1, a2], [a1, a2, 1 + a1 ** 2 + a2 ** 2]], atol=1e-13)
    np.testing.assert_allclose(ev(ex3.phi.components, p),
                               [[0, a1, a1 * a2], [0, a2, a2 ** 2 + 1], [0, -1, -a2]], atol=1e-13)
    np.testing.assert_allclose(ev(ex3.eta.components, p), [1, 0, 2 * p[1]], atol=1e-15)


def test_identity_frame():
    s = build_from_frame(ChartSpec(), [1, 0, 0], [0, 1, 0], [0, 0, 1])
    np.testing.assert_array_equal(ev(s.g, (0.1, 0.2, 0.9)), np.eye(3))
    np.testing.assert_array_equal(ev(s.phi.components, (0.1, 0.2, 0.9)), [[0, 0, 0], [0, 0, -1], [0, 1, 0]])


def test_example1_frame_is_orthonormal(ex1):
    for p in points(ex1, 16):
        g = ev(ex1.g, p, ex1.coords)
        E = np.column_stack([ev(v.components, p, ex1.coords) for v in ex1.frame])
        np.testing.assert_allclose(E.T @ g @ E, np.eye(3), atol=1e-10)


def test_published_tensors_give_published_h(ex3_tensor):
    for p in points(ex3_tensor, 16):
        x, y, z = p
        published = [[0, 0, -2 * y * z], [0, -z, 2 * z * (2 * x * z - 1)], [0, 0, z]]
        np.testing.assert_allclose(ev(ex3_tensor.h.components, p), published, atol=1e-12)


def test_tensor_and_frame_entries_agree(ex3, ex3_tensor):
    for p in points(ex3, 8):
        for a, b in ((ex3.g, ex3_tensor.g), (ex3.g_inv, ex3_tensor.g_inv),
                     (ex3.phi.components, ex3_tensor.phi.components), (ex3.h.components, ex3_tensor.h.components)):
            np.testing.assert_allclose(ev(a, p), ev(b, p), atol=1e-12)


@pytest.mark.parametrize("name", ["example1", "example3", "example3-tensor", "example4", "sasakian"])
def test_catalog_entries_validate(name):
    s = catalog_entry(name).structure
    rep = validate(s, points=points(s), tol=1e-9)
    assert rep.passed, rep.failures()
    assert len({a.name for a in rep.axioms}) == len(rep.axioms)
    assert all(a.residual >= 0 for a in rep.axioms)


def test_degenerate_phi_builds_but_fails_validation():
    s = build_from_tensors(ChartSpec(), np.eye(3).tolist(), np.zeros((3, 3)).tolist(), [1, 0, 0])
    rep = validate(s, n_points=16)
    assert not rep.passed
    failed = {a.name for a in rep.failures()}
    assert {"phi_squared", "contact_nondegenerate"} <= failed


def test_singular_frame_rejected():
    with pytest.raises(SingularFrameError):
        build_from_frame(ChartSpec(), [1, 0, 0], [1, 0, 0], [0, 0, 1])


def test_asymmetric_metric_rejected():
    with pytest.raises(ValueError):
        build_from_tensors(ChartSpec(), [[1, "x", 0], [0, 1, 0], [0, 0, 1]], np.zeros((3, 3)).tolist(), [1, 0, 0])


def test_sampling_respects_constraints_and_is_seeded():
    ch = ChartSpec(XYZ, {"x": (-1, 1), "y": (-1, 1), "z": (-1, 1)}, (("positive", parse("z")),))
    a, b = ch.sample(32, 5), ch.sample(32, 5)
    np.testing.assert_array_equal(a, b)
    assert np.all(a[:, 2] > 0)
    assert not np.array_equal(a, ch.sample(32, 6))


def test_sampling_exhaustion():
    ch = ChartSpec(XYZ, {"x": (-1, 1), "y": (-1, 1), "z": (-1, 1)}, (("positive", parse("-1 - z^2")),))
    with pytest.raises(SamplingError):
        ch.sample(1, 0)


def test_domain_violations_are_skipped():
    ch = ChartSpec(XYZ, {"x": (-1, 1), "y": (-1, 1), "z": (0.5, 2)}, ())
    s = build_from_frame(ch, [1, 0, 0], ["-2*y", "2*x*z - 1", 1], [0, 1, 0])
    pts = np.vstack([points(s, 4), [[0.1, 0.1, 0.0]]])
    s2 = build_from_frame(ch, [1, 0, 0], ["-2*y", "2*x*z - 1", "z/z"], [0, 1, 0])
    rep = validate(s2, points=pts)
    assert rep.passed
    assert len(rep.skipped) == 1


def test_describe_lists_components(ex3):
    d = describe(ex3)
    assert set(d) == {"g", "phi", "xi", "eta", "h"}
    assert d["xi"] == ["1", "0", "0"]
