import json
import math

import numpy as np
import pytest

from plurex import hartogs_domain as hd
from plurex.hartogs_domain import DomainPoint, Region


def test_transition_endpoints_and_symmetry():
    x = np.linspace(0, 1, 101)
    s = hd.smooth_transition(x)
    assert s[0] == 0.0 and s[-1] == 1.0
    assert np.allclose(s + s[::-1], 1.0, atol=1e-14)
    assert np.all(np.diff(s) >= 0)
    assert hd.smooth_transition(-0.5) == 0.0 and hd.smooth_transition(1.5) == 1.0


def test_transition_derivative_matches_difference():
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (hd.smooth_transition(x + h) - hd.smooth_transition(x - h)) / (2 * h)
    assert np.allclose(fd, hd.smooth_transition_deriv(x), rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("t, r", [(0.0, -1.0), (2.0, 2.0), (5.0, 1.0), (9.0, 2.0), (12.0, 1.0), (16.0, 2.0), (18.0, -1.0)])
def test_r_anchor_values(t, r):
    assert hd.eval_r(t) == pytest.approx(r, abs=1e-12)


@pytest.mark.parametrize("t, ph", [(1.0, -2.0), (5.5, 102.0), (9.0, 98.0), (12.5, 102.0), (15.0, -2.0)])
def test_phi_plateaus(t, ph):
    assert hd.eval_phi(t) == pytest.approx(ph, abs=1e-12)


def test_r_at_one_is_nonpositive():
    # -1 + 3 psi(1/3)
    assert hd.eval_r(1.0) == pytest.approx(-1 + 3 * hd.smooth_transition(1 / 3), abs=1e-12)
    assert hd.eval_r(1.0) < 0


def test_ramp_anchor_order_validated():
    with pytest.raises(ValueError):
        hd.RampProfile(((0.0, 1.0), (0.0, 2.0)))


def test_profile_json_roundtrip():
    prof = hd.RadialProfile.from_json(hd.DEFAULT_PROFILE.to_json())
    assert prof == hd.DEFAULT_PROFILE


def test_rho_at_reference_points():
    assert hd.rho(DomainPoint(9.0, 0.0)) == pytest.approx(-1.0, abs=1e-12)
    # w = 0 is on the boundary over the flat part r = 1
    assert hd.rho(DomainPoint(5.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert hd.classify(DomainPoint(9.0, 0.0), 1e-12) == Region.INTERIOR
    assert hd.classify(DomainPoint(5.0, 0.0), 1e-9) == Region.BOUNDARY
    assert hd.classify(DomainPoint(0.0, 0.0), 1e-9) == Region.EXTERIOR


def test_classify_rejects_bad_tol():
    with pytest.raises(ValueError):
        hd.classify(DomainPoint(9.0, 0.0), 0.0)


def test_rho_rotation_invariant():
    rng = np.random.default_rng(3)
    for _ in range(20):
        t = rng.uniform(0, 18)
        w = complex(*rng.normal(size=2))
        base = hd.rho(DomainPoint(t, w))
        th = rng.uniform(0, 2 * math.pi)
        assert hd.rho(DomainPoint(t * complex(math.cos(th), math.sin(th)), w)) == pytest.approx(base, abs=1e-12)


def test_rho_gradient_matches_differences():
    rng = np.random.default_rng(5)
    for _ in range(10):
        t = rng.uniform(0.5, 17.5)
        th = rng.uniform(0, 2 * math.pi)
        p = DomainPoint(t * complex(math.cos(th), math.sin(th)), complex(*rng.normal(size=2)))
        x = p.as_real()
        h = 1e-6
        fd = np.array([(hd.rho(DomainPoint.from_real(x + h * e)) - hd.rho(DomainPoint.from_real(x - h * e))) / (2 * h)
                       for e in np.eye(4)])
        assert np.allclose(fd, hd.rho_gradient(p), atol=1e-4 * (1 + np.abs(fd).max()))


def test_point_real_roundtrip():
    p = DomainPoint(3 - 4j, 0.5j)
    assert p.t == 5.0
    assert DomainPoint.from_real(p.as_real()) == p


def test_in_V_examples():
    assert hd.in_V(DomainPoint(9.0, 0.0), 0.1)
    assert not hd.in_V(DomainPoint(9.0, 0.2), 0.1)
    # sqrt(r(8.01)) - 1 is essentially zero: the ramp is flat at its ends
    assert math.sqrt(hd.eval_r(8.01)) - 1 < 1e-10
    assert not hd.in_V(DomainPoint(8.01, 0.09), 0.1)
    with pytest.raises(ValueError):
        hd.in_V(DomainPoint(9.0, 0.0), 0.0)


def test_V_points_are_interior():
    rng = np.random.default_rng(11)
    t = rng.uniform(8, 10, 2000)
    w = 0.1 * np.sqrt(rng.uniform(0, 1, t.size)) * np.exp(2j * np.pi * rng.uniform(0, 1, t.size))
    inside = hd.in_V_reduced(t, w.real, w.imag, 0.1)
    assert inside.any()
    for ti, wi in zip(t[inside], w[inside]):
        assert hd.classify(DomainPoint(ti, wi), 1e-12) == Region.INTERIOR


def test_in_annulus_examples():
    w0 = 0.01 + 0.02j
    assert hd.in_annulus_Aw(DomainPoint(9.0, w0), w0)
    assert not hd.in_annulus_Aw(DomainPoint(1.5, w0), w0)
    assert hd.in_annulus_Aw(DomainPoint(16.0, w0), w0)
    assert not hd.in_annulus_Aw(DomainPoint(9.0, w0 + 0.01), w0)


def test_K_distance_and_membership():
    ph = hd.eval_phi(2.0)
    xi = DomainPoint(2.0, complex(math.cos(ph), math.sin(ph)) + math.sqrt(2))
    assert hd.in_K(xi, 1e-9)
    assert not hd.in_K(DomainPoint(9.0, 0.0), 0.5)
    d = hd.distance_to_K_reduced(np.array([2.0]), np.array([xi.w.real]), np.array([xi.w.imag]))
    assert float(np.ravel(d)[0]) == pytest.approx(0.0, abs=1e-9)


def _boundary_point(t=5.5, ang=0.7):
    ph = hd.eval_phi(t)
    c = complex(math.cos(ph), math.sin(ph))
    return DomainPoint(complex(t, 0), c + math.sqrt(hd.eval_r(t)) * complex(math.cos(ang), math.sin(ang)))


def test_tangent_plane_distance_examples():
    xi = _boundary_point()
    assert hd.classify(xi, 1e-9) == Region.BOUNDARY
    assert hd.tangent_plane_distance(xi, xi) == 0.0
    n = -hd.inward_normal(xi)
    s = 0.03
    assert hd.tangent_plane_distance(xi, DomainPoint.from_real(xi.as_real() + s * n)) == pytest.approx(s, abs=1e-12)
    tang = np.array([n[1], -n[0], n[3], -n[2]])
    tang -= (tang @ n) * n
    tang /= np.linalg.norm(tang)
    assert hd.tangent_plane_distance(xi, DomainPoint.from_real(xi.as_real() + 0.1 * tang)) < 1e-9


def test_degenerate_boundary_point():
    # z-gradient vanishes (flat profiles) and w = centre: zero gradient
    p = DomainPoint(5.5, complex(math.cos(102.0), math.sin(102.0)))
    with pytest.raises(hd.DegenerateBoundaryPoint):
        hd.tangent_plane_distance(p, DomainPoint(5.5, 0.0))


def test_approach_region_examples():
    xi = _boundary_point()
    n = hd.inward_normal(xi)
    x = xi.as_real()
    assert hd.in_approach_region(DomainPoint.from_real(x + 0.01 * n), xi, 1.5)
    tang = np.array([n[1], -n[0], n[3], -n[2]])
    tang -= (tang @ n) * n
    tang /= np.linalg.norm(tang)
    assert not hd.in_approach_region(DomainPoint.from_real(x + 0.01 * tang), xi, 3.0)
    diag = (n + tang) / math.sqrt(2)
    assert hd.in_approach_region(DomainPoint.from_real(x + 0.01 * diag), xi, 2.0)
    with pytest.raises(ValueError):
        hd.in_approach_region(DomainPoint.from_real(x + 0.01 * n), xi, 0.5)


def test_certify_default_profile():
    rep = hd.certify_profiles(1e-3)
    assert rep.passed
    assert rep["phi_at_most_108"].margin >= 6 - 1e-12
    # bounds attained by construction, and equalities checked to EXACT_TOL
    attained = {"r_lower_bound", "r_upper_bound", "r_equals_one", "r_peak_values"}
    assert all(c.margin > 1e-6 for c in rep.checks if c.constraint_id not in attained)


def test_certify_rejects_corrupted_peak():
    table = hd.DEFAULT_PROFILE.node_table
    table["r"] = [[t, 1.9 if t == 9.0 else v] for t, v in table["r"]]
    rep = hd.certify_profiles(1e-3, hd.RadialProfile.from_node_table(table))
    assert not rep.passed
    assert not rep["r_peak_values"].passed
    assert rep["r_peak_values"].margin < 0


def test_certify_step_validated():
    with pytest.raises(ValueError):
        hd.certify_profiles(1e-2)


def test_report_serialises():
    rep = hd.certify_profiles(1e-3)
    d = json.loads(rep.to_json())
    assert d["pass"] is True
    assert {c["constraint_id"] for c in d["checks"]} >= {"r_lower_bound", "phi_at_most_108"}
    with pytest.raises(KeyError):
        rep["nope"]


def test_sample_interior_points_inside():
    rng = np.random.default_rng(0)
    t, w = hd.sample_interior(rng, 500)
    assert t.size == 500
    assert np.all(hd.rho_reduced(t, w.real, w.imag) < 0)
