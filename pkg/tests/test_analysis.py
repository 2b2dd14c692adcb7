import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexsaddle.analysis import certify, maxwell_count, self_stresses, stress_test
from flexsaddle.fixtures import LETTERS, four_bar, heptagon_1, heptagon_1_saddle, heptagon_2
from flexsaddle.framework import nontrivial_flex_basis, rigidity_matrix

pytestmark = pytest.mark.usefixtures("backend")

SQRT5 = np.sqrt(5.0)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _same_line(u, w, tol=1e-8):
    return abs(abs(_unit(u) @ _unit(w)) - 1.0) < tol


def test_four_bar_saddle_certificate():
    # second-order expansion of |CD|^2 in the two rotation angles gives tangent
    # eigenvalues 2 -+ sqrt(5) in the ambient metric (velocity = 2 * angle rate)
    cert = certify(four_bar(0.0, 0.0))
    assert cert.kkt_residual < 1e-12
    np.testing.assert_allclose(cert.eigenvalues, [2 - SQRT5, 2 + SQRT5], atol=1e-12)
    assert cert.index == 1 and not cert.degenerate
    assert (cert.rigidity_rank, cert.nontrivial_flex_dim, cert.self_stress_dim) == (3, 2, 1)
    assert len(cert.realizable_directions) == 2
    assert cert.certified_singular_flexible


def test_four_bar_other_saddles():
    np.testing.assert_allclose(certify(four_bar(np.pi, np.pi)).eigenvalues, [2 - SQRT5, 2 + SQRT5], atol=1e-12)
    np.testing.assert_allclose(certify(four_bar(0.0, np.pi)).eigenvalues, [-3.0, 1.0], atol=1e-12)
    assert certify(four_bar(np.pi, 0.0)).index == 2  # the maximum of |CD|


def test_generic_configuration_not_certified():
    cert = certify(four_bar())
    assert cert.kkt_residual > 1e-3
    assert (cert.rigidity_rank, cert.nontrivial_flex_dim, cert.self_stress_dim) == (4, 1, 0)
    assert cert.stress_test_status == "solved"  # one flex, nothing to test it against


def test_self_stress_is_equilibrium():
    fw = four_bar(0.0, 0.0)
    w = self_stresses(fw).matrix
    assert w.shape == (1, 4)
    np.testing.assert_allclose(w @ rigidity_matrix(fw), 0.0, atol=1e-12)
    # vertex equilibrium on the line A=0, B=1, D=2, C=3 with edges (CD, AB, BC, DA)
    np.testing.assert_allclose(abs(w[0] @ _unit([2, -2, -1, 1])), 1.0, atol=1e-12)


def test_four_bar_realizable_rays_in_pinned_gauge():
    cert = certify(four_bar(0.0, 0.0))
    got = [np.asarray(u).reshape(4, 2) for u in cert.realizable_pinned]
    for u in got:
        np.testing.assert_allclose(u[:2], 0.0, atol=1e-12)  # A and B held
        np.testing.assert_allclose(u[2:, 0], 0.0, atol=1e-12)  # C, D move vertically
    ratios = sorted(u[2, 1] / u[3, 1] for u in got)
    np.testing.assert_allclose(ratios, [1.0, 3.0], atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_stress_test_invariant_under_rebasing(angle, scale):
    fw = four_bar(0.0, 0.0)
    v = nontrivial_flex_basis(fw)
    w = self_stresses(fw)
    base = stress_test(fw, v, w)
    q = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    other = stress_test(fw, v @ q, scale * w.matrix)
    assert len(other.ambient) == len(base.ambient) == 2
    for u in base.ambient:
        assert any(_same_line(u, z) for z in other.ambient)


def test_definite_form_has_no_rays():
    fw = four_bar(0.0, 0.0)
    v = nontrivial_flex_basis(fw)
    res = stress_test(fw, v, np.ones((1, 4)))  # all-tension weights: positive definite here
    assert res.status == "definite" and res.directions == []


def test_stress_test_degenerate_inputs():
    fw = four_bar()
    v = nontrivial_flex_basis(fw)
    assert stress_test(fw, v[:, :0], self_stresses(fw)).status == "no_flex"
    one = stress_test(fw, v, np.ones((1, 4)))
    assert one.status == "definite"


def _arrow_vertices(fw, direction, threshold=1e-3):
    u = np.asarray(direction).reshape(-1, 2)
    mags = np.linalg.norm(u, axis=1)
    return {LETTERS[i] for i in np.flatnonzero(mags > threshold * mags.max())}


def test_heptagon_saddle_certificates():
    for fw, movers in [(heptagon_1_saddle(), set("DEF")), (heptagon_2(), set("CDE"))]:
        cert = certify(fw)
        assert cert.kkt_residual < 1e-6
        assert cert.index == 1 and cert.certified_singular_flexible
        assert (cert.rigidity_rank, cert.nontrivial_flex_dim, cert.self_stress_dim) == (9, 2, 1)
        assert len(cert.realizable_pinned) == 2
        for u in cert.realizable_pinned:
            assert _arrow_vertices(fw, u) == movers


def test_heptagon_start_is_regular():
    cert = certify(heptagon_1())
    assert (cert.rigidity_rank, cert.nontrivial_flex_dim, cert.self_stress_dim) == (10, 1, 0)
    assert not cert.certified_singular_flexible


def test_certificate_serializes():
    import json

    d = certify(four_bar(0.0, 0.0)).to_dict()
    json.dumps(d)
    for key in ("kkt_residual", "licq_margin", "tangent_dim", "eigenvalues", "index", "degenerate",
                "rigidity_rank", "nontrivial_flex_dim", "self_stress_dim", "realizable_directions"):
        assert key in d


def test_maxwell_count():
    m = maxwell_count(heptagon_1())
    assert m == {"n": 7, "m": 10, "d": 2, "nd": 14, "trivial": 3, "under_constrained": True,
                 "generic_internal_dof": 1}
