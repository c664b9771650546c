import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import SEED, affine_form, certificate, fs_data
from specialcone import gallery
from specialcone.cproj import (CProjError, cotton_york, cproj_change, cproj_invariants, cweyl, relating_form,
                               rho_class_residual, rho_tensor, weyl_from_rho)
from specialcone.fields import curvature


def test_fs_rho_and_weyl():
    d = fs_data(2)
    pts = d.chart.sample(8, SEED)
    assert np.allclose(rho_tensor(d).at(pts), 2 * gallery.fs_metric(2).at(pts), atol=1e-12)
    assert np.abs(cweyl(d).at(pts)).max() < 1e-12
    inv = cproj_invariants(d, pts)
    assert max(inv.values()) < 1e-13


def test_rho_needs_dimension_four():
    with pytest.raises(CProjError):
        rho_tensor(fs_data(1))


@pytest.fixture(scope="module")
def product_base():
    return certificate("product+1").base


def test_product_weyl_nonzero_trace_free_and_complex(product_base):
    d = product_base
    pts = d.chart.sample(8, SEED)
    W = cweyl(d).at(pts)
    J = d.J.at(pts)
    assert np.abs(W).max() > 0.5
    assert np.abs(np.einsum("...lljk->...jk", W)).max() < 1e-12
    assert np.abs(np.einsum("...lijl->...ij", W)).max() < 1e-12
    assert np.abs(np.einsum("...lilk->...ik", W)).max() < 1e-12
    comm = np.einsum("...la,...aijk->...lijk", J, W) - np.einsum("...lija,...ak->...lijk", W, J)
    assert np.abs(comm).max() < 1e-12


def test_weyl_matches_slot_oracle(product_base):
    d = product_base
    pts = d.chart.sample(4, SEED)
    R, P, J = curvature(d.D).at(pts), rho_tensor(d).at(pts), d.J.at(pts)
    W = weyl_from_rho(R, P, J)
    for q in range(len(pts)):
        assert np.allclose(W[q], oracles.loop_weyl(R[q], P[q], J[q]), atol=1e-13)


def test_cotton_york_vanishes_on_symmetric_product(product_base):
    pts = product_base.chart.sample(6, SEED)
    assert np.abs(cotton_york(product_base).at(pts)).max() < 1e-12


def test_cotton_york_antisymmetric_fs_after_change():
    d = cproj_change(fs_data(2), affine_form([0.1, 0, -0.2, 0.3], 0.2 * np.eye(4), 4))
    C = cotton_york(d).at(d.chart.sample(4, SEED))
    assert np.abs(C + np.swapaxes(C, -3, -2)).max() < 1e-12


def test_relating_form_recovers_theta(product_base):
    theta = affine_form([0.3, -0.1, 0.2, 0.5], np.zeros((4, 4)), 4)
    d2 = cproj_change(product_base, theta)
    pts = product_base.chart.sample(5, SEED)
    th, res = relating_form(product_base.D.at(pts), d2.D.at(pts), product_base.J.at(pts))
    assert np.allclose(th, theta.at(pts), atol=1e-12)
    assert res.max() < 1e-12


coef = st.floats(-0.4, 0.4)


@settings(max_examples=20)
@given(st.lists(coef, min_size=4, max_size=4), st.lists(coef, min_size=16, max_size=16))
def test_weyl_invariant_under_change(c, M):
    d = certificate("product+1").base
    theta = affine_form(c, np.reshape(M, (4, 4)), 4)
    d2 = cproj_change(d, theta)
    pts = d.chart.sample(3, SEED)
    assert np.abs(cweyl(d2).at(pts) - cweyl(d).at(pts)).max() < 1e-11
    # the first argument is the changed connection
    assert rho_class_residual(d2, d, theta, pts) < 1e-11
    inv = cproj_invariants(d2, pts)
    assert inv["torsion"] < 1e-14 and inv["DJ"] < 1e-12


def test_rho_class_on_fs_and_zero_theta():
    d = fs_data(2)
    pts = d.chart.sample(6, SEED)
    zero = affine_form(np.zeros(4), np.zeros((4, 4)), 4)
    assert rho_class_residual(d, d, zero, pts) == 0.0
    theta = affine_form([0.2, -0.1, 0.0, 0.3], np.random.default_rng(SEED).normal(scale=0.3, size=(4, 4)), 4)
    assert rho_class_residual(cproj_change(d, theta), d, theta, pts) < 1e-11
    # swapping the roles is detected for a non-closed J-twist
    assert rho_class_residual(d, cproj_change(d, theta), theta, pts) > 1e-3
