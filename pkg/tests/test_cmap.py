from fractions import Fraction

import numpy as np
import pytest

from conftest import SEED, TOL, cone, flat
from specialcone import gallery
from specialcone.cmap import (TangentLift, cmap_report, flatness_implication, lift_hypercomplex, quaternion_residuals,
                              rotate_connection, rotated_formula, rotation_angle, tm_points, triple_bracket_norm,
                              witness, wq_horizontal)
from specialcone.fields import nijenhuis
from specialcone.scm import special_check


@pytest.fixture(scope="module")
def flat_c2_triple():
    return lift_hypercomplex(cone("flat_c2").special)


def test_quaternion_relations_at_100_points(flat_c2_triple):
    pts = tm_points(flat_c2_triple.lift, 100, SEED)
    res = quaternion_residuals(flat_c2_triple, pts)
    assert set(res) >= {"I1^2+Id", "I2^2+Id", "I3^2+Id", "I1I2-I3", "I1I2I3+Id"}
    assert max(res.values()) < 1e-12


def test_nijenhuis_on_flat_c2_tangent_bundle(flat_c2_triple):
    pts = tm_points(flat_c2_triple.lift, 64, SEED)
    for I in flat_c2_triple.fields():
        assert np.abs(nijenhuis(I).at(pts)).max() < 1e-7


def test_flat_base_gives_product_structure():
    h = lift_hypercomplex(flat())
    pts = tm_points(h.lift, 8, SEED)
    for I in h.fields():
        assert np.abs(nijenhuis(I).at(pts)).max() == 0.0


def test_horizontal_lift_formula():
    s = cone("product+1").special
    lift = TangentLift(s)
    m = lift.m
    rng = np.random.default_rng(SEED)
    x = cone("product+1").sample(1, SEED)[0]
    u = rng.uniform(-1, 1, m)
    X = rng.normal(size=m)
    G = s.nabla.at(x)
    expect = np.concatenate([X, -np.einsum("kij,i,j->k", G, X, u)])
    assert np.allclose(lift.horizontal(X, np.concatenate([x, u])), expect, atol=1e-14)
    # I1 X^h = (JX)^h and I2 X^h = -X^v
    h = lift_hypercomplex(s)
    p = np.concatenate([x, u])
    J = s.J.at(x)
    assert np.allclose(h.I1.at(p) @ expect, lift.horizontal(J @ X, p), atol=1e-12)
    assert np.allclose(h.I2.at(p) @ expect, -lift.vertical(X), atol=1e-12)


def test_rotation_angle_reduces_fractions():
    assert rotation_angle(Fraction(0)) == 0.0
    assert rotation_angle(Fraction(1)) == 0.0
    assert rotation_angle(Fraction(9, 8)) == rotation_angle(Fraction(1, 8))
    assert rotation_angle(0.5) == 0.5


def test_rotation_identities():
    c = cone("flat_c2")
    s = c.special
    pts = c.sample(16, SEED)
    G = s.nabla.at(pts)
    assert np.array_equal(rotate_connection(s, Fraction(0)).nabla.at(pts), G)
    assert np.array_equal(rotate_connection(s, Fraction(1)).nabla.at(pts), G)
    quarter = rotate_connection(s, Fraction(1, 4))
    assert np.abs(quarter.nabla.at(pts) - rotated_formula(s, Fraction(1, 4)).at(pts)).max() < 1e-12
    assert np.abs(quarter.D.at(pts) - s.D.at(pts)).max() < 1e-12
    assert special_check(quarter, pts).passed
    assert np.abs(quarter.nabla.at(pts) - G).max() > 0.1


def test_pi_periodicity_is_exact():
    s = cone("product+1").special
    pts = cone("product+1").sample(8, SEED)
    for q in range(8):
        t = Fraction(q, 8)
        assert np.array_equal(rotate_connection(s, t).nabla.at(pts), rotate_connection(s, t + 1).nabla.at(pts))


def test_wq_horizontal_examples():
    X, Y, Z = np.eye(6)[0], np.eye(6)[2], np.eye(6)[3]
    hopf = cone("hopf2")
    p = hopf.sample(1, SEED)[0]
    assert not wq_horizontal(hopf, X, Y, Z, p).any()
    fam = gallery.make_oneform_family((2, 1))
    p = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])  # z0 = w1 = w2 = 1
    vals = [wq_horizontal(fam, a, b, c, p) for a in np.eye(6) for b in np.eye(6) for c in np.eye(6)]
    assert np.abs(vals).max() > 0.1
    lifted = wq_horizontal(cone("product+1"), X[:6], Y[:6], Z[:6], cone("product+1").sample(1, SEED)[0],
                           u=np.full(6, 0.5))
    assert lifted.shape == (12,)


def test_triple_bracket_cases():
    assert triple_bracket_norm(cone("hopf2"), cone("hopf2").sample(8, SEED)) == 0.0
    assert triple_bracket_norm(cone("flat_c2"), cone("flat_c2").sample(16, SEED)) < 1e-10
    assert triple_bracket_norm(cone("product+1"), cone("product+1").sample(16, SEED)) > 0.1


def test_witness():
    c = cone("product+1")
    pts = c.sample(8, SEED)
    assert witness(c.special, Fraction(1, 4), Fraction(1, 4), pts) == 0.0
    assert witness(c.special, Fraction(1, 4), Fraction(0), pts) > 0.1
    assert witness(c.special, Fraction(1), Fraction(0), pts) == 0.0


def test_flatness_implication_rows():
    hopf = flatness_implication(cone("hopf2"), cone("hopf2").sample(8, SEED))
    assert hopf.passed
    assert hopf.get("W^Q horizontal proxy").residual == 0.0
    assert hopf.get("Weyl residual").residual < TOL and hopf.get("Bgram residual").residual == 0.0
    fam = gallery.make_oneform_family((2, 1))
    rep = flatness_implication(fam, fam.chart.sample(8, SEED))
    assert rep.passed and rep.get("W^Q horizontal proxy").residual > 1.0


def test_cmap_report_on_flat_c2():
    c = cone("flat_c2")
    rep = cmap_report(c, c.sample(16, SEED), t_grid=4)
    assert rep.passed, rep.failures()
    assert rep.get("pi-periodicity [t=1/4pi]").verdict == "PASS"
