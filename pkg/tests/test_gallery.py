import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import SEED, TOL, certificate
from specialcone import gallery
from specialcone.fields import ricci
from specialcone.pscb import CertificateError, check_certificate
from specialcone.tensor import triple_bracket


def test_registry_and_build():
    assert set(gallery.GALLERY) == {"hopf", "flat_c2", "product", "surface2", "oneform"}
    with pytest.raises(KeyError):
        gallery.build("nope")
    assert gallery.build("hopf", n=1).n == 1


def test_flat_c2_rejects_nonconstant_modulus():
    with pytest.raises(CertificateError):
        gallery.make_flat_c2("x1", "0")


def test_flat_c2_accepts_other_constant_modulus():
    cert = gallery.make_flat_c2("2*cos(x1 + y2)", "2*sin(x1 + y2)")
    assert check_certificate(cert, cert.chart.sample(16, SEED)).passed


def test_dim2_quantisation():
    s = 4 / np.sqrt(3)
    cert = gallery.make_surface_dim2(1, s, 0.0)
    assert cert.meta["case"] == "16/3"
    with pytest.raises(CertificateError):
        gallery.make_surface_dim2(1, s * (1 + 1e-9), 0.0)
    with pytest.raises(CertificateError):
        gallery.make_surface_dim2(0, 1.0, 0.0)
    with pytest.raises(CertificateError):
        gallery.make_surface_dim2(-1, s, 0.0)
    with pytest.raises(CertificateError):
        gallery.make_surface_dim2(2, 0.0, 0.0)
    with pytest.raises(CertificateError):
        gallery.make_surface_dim2(1, "x1", "0")


def test_dim2_rotated_generator_is_accepted():
    c = gallery.make_surface_dim2(1, "4/sqrt(3)*cos(x1)", "4/sqrt(3)*sin(x1)")
    assert check_certificate(c, c.chart.sample(16, SEED)).passed


def test_product_rejects_mismatched_factors():
    with pytest.raises(CertificateError):
        gallery.make_surface_product(1.0, (gallery.hyperbolic_disk(-4.0), gallery.hyperbolic_disk(-4.0)))
    with pytest.raises(CertificateError):
        gallery.make_surface_product(2.0, (gallery.hyperbolic_disk(-4.0), gallery.round_sphere(4.0)))


def test_product_with_phase_passes():
    cert = gallery.make_surface_product(1.0, None, "x2 - y1/2")
    assert check_certificate(cert, cert.chart.sample(16, SEED)).passed


@pytest.mark.parametrize("K", [4.0, -4.0, 0.0, -4.0 / 3.0])
def test_surface_frame_residuals(K):
    S = gallery.surface_for_curvature(K)
    pts = S.chart.sample(16, SEED)
    assert max(S.residuals(pts).values()) < TOL
    u = S.u.at(pts)
    Ric = np.einsum("...a,...ab,...b->...", u, ricci(S.D).at(pts), u)
    assert np.allclose(Ric, S.ric_uu, atol=1e-12)


def test_surface_constructors_validate_sign():
    with pytest.raises(ValueError):
        gallery.hyperbolic_disk(1.0)
    with pytest.raises(ValueError):
        gallery.round_sphere(-1.0)


def test_hopf_fundamental_tensor():
    cert = certificate("hopf2")
    pts = cert.chart.sample(16, SEED)
    assert np.abs(cert.abar.at(pts) + gallery.fs_metric(2).at(pts)).max() < 1e-12
    assert all(np.abs(p.B.at(pts)).max() == 0.0 for p in cert.patches)


def test_tensor_field_helper():
    T = gallery.tensor_field({(0, 1): "x1*y1", (1, 0): 2.0}, 2, (2, 2), ("x1", "y1"))
    v = T.at(np.array([3.0, 0.5]))
    assert np.allclose(v, [[0.0, 1.5], [2.0, 0.0]])


@pytest.mark.parametrize("l", [(2, 1), (1, 1), (3, 0, 1), (0, 2)])
def test_oneform_A_matches_flat_coordinate_oracle(l):
    fam = gallery.make_oneform_family(l)
    pts = fam.chart.sample(4, SEED)
    A = fam.A.at(pts)
    for q, p in enumerate(pts):
        assert np.allclose(A[q], oracles.oneform_A(l, p), atol=1e-12, rtol=0)


def test_oneform_zero_exponent_gives_zero_block_triple():
    fam = gallery.make_oneform_family((0, 2))
    pts = fam.chart.sample(8, SEED)
    assert np.abs(fam.block_triple(1, pts)).max() == 0.0
    assert np.abs(triple_bracket(fam.A.at(pts))).max() > 1.0


def test_oneform_rejects_small_degree():
    with pytest.raises(ValueError):
        gallery.make_oneform_family((1, 0))
    with pytest.raises(ValueError):
        gallery.make_oneform_family((-1, 3))


@settings(max_examples=10)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=3).filter(lambda l: sum(l) > 1))
def test_oneform_triple_bracket_is_nontrivial(l):
    fam = gallery.make_oneform_family(tuple(l))
    A = fam.A.at(fam.chart.sample(4, SEED))
    assert np.abs(triple_bracket(A)).max() > 1e-3
    # A is symmetric and anti-commutes with J
    J = fam.J.at(np.zeros(fam.dim))
    assert np.abs(A - np.swapaxes(A, -1, -2)).max() < 1e-12
    assert np.abs(np.einsum("...kim,mj->...kij", A, J) + np.einsum("km,...mij->...kij", J, A)).max() < 1e-12
