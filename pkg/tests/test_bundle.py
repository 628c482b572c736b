import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangeo.bundle import (
    BundleVector,
    TangentPoint,
    assemble,
    bundle_christoffel,
    bundle_metric,
    bundle_metric_matrix,
    horizontal_lift,
    split,
    split_metric_matrix,
    vertical_lift,
)
from tangeo.gnatural import GeneratorSet, OutOfDomain, cheeger_gromoll, const, construct_recurrent_example, sasaki
from tangeo.manifold import SingularMetric, euclidean, poincare_half_plane, sphere

v2 = st.lists(st.floats(min_value=-1.5, max_value=1.5), min_size=2, max_size=2).map(np.array)
pt = st.tuples(st.floats(min_value=0.3, max_value=2.8), st.floats(min_value=0.1, max_value=6.0)).map(np.array)


@given(pt, v2, v2)
def test_split_inverts_assemble(x, u, X):
    M, z = sphere(), TangentPoint.of(x, u)
    P = BundleVector(X, np.array([0.2, -0.1]))
    back = split(M, assemble(M, P, z), z)
    np.testing.assert_allclose(back.as_array(), P.as_array(), atol=1e-12)


@given(pt, v2, v2)
def test_lifts_project_correctly(x, u, X):
    M, z = sphere(), TangentPoint.of(x, u)
    h = split(M, horizontal_lift(M, X, z), z)
    np.testing.assert_allclose(h.hor, X)
    np.testing.assert_allclose(h.ver, 0.0, atol=1e-12)
    v = split(M, vertical_lift(X), z)
    np.testing.assert_allclose(v.hor, 0.0)
    np.testing.assert_allclose(v.ver, X)


@given(pt, v2, v2, v2)
def test_sasaki_on_lifts(x, u, X, Y):
    M, z = sphere(), TangentPoint.of(x, u)
    g = M.metric(x)
    hh = bundle_metric(M, sasaki(), z, BundleVector(X, 0 * X), BundleVector(Y, 0 * Y))
    hv = bundle_metric(M, sasaki(), z, BundleVector(X, 0 * X), BundleVector(0 * Y, Y))
    assert hh == pytest.approx(X @ g @ Y, abs=1e-12)
    assert hv == 0.0


def test_cheeger_gromoll_vertical_block():
    M, z = euclidean(2), TangentPoint.of([0.0, 0.0], [0.6, 0.8])
    Gs = split_metric_matrix(M, cheeger_gromoll(), z)
    # t = 1: a1 = b1 = 1/2
    np.testing.assert_allclose(Gs[2:, 2:], 0.5 * (np.eye(2) + np.outer([0.6, 0.8], [0.6, 0.8])))
    np.testing.assert_allclose(Gs[:2, :2], np.eye(2) + np.outer([0.6, 0.8], [0.6, 0.8]))


def test_coordinate_metric_matches_split():
    M, z = poincare_half_plane(), TangentPoint.of([0.3, 1.2], [0.4, -0.2])
    gen = cheeger_gromoll()
    W = np.array([0.3, 0.1, -0.7, 0.25])
    Q = np.array([-0.5, 0.4, 0.2, 0.9])
    G = bundle_metric_matrix(M, gen, z)
    assert W @ G @ Q == pytest.approx(bundle_metric(M, gen, z, split(M, W, z), split(M, Q, z)))


@settings(max_examples=10, deadline=None)
@given(pt, v2)
def test_oracle_connection_is_metric_and_symmetric(x, u):
    M, z = sphere(), TangentPoint.of(x, u)
    gen = cheeger_gromoll()
    gam = bundle_christoffel(M, gen, z)
    np.testing.assert_allclose(gam, np.transpose(gam, (0, 2, 1)), atol=1e-14)
    # d_c G_ab = G_db Gamma^d_ac + G_ad Gamma^d_bc
    c0 = z.coords
    G = bundle_metric_matrix(M, gen, z)
    h = 1e-5
    for c in range(4):
        e = np.zeros(4)
        e[c] = h * max(1.0, abs(c0[c]))
        Gp = bundle_metric_matrix(M, gen, TangentPoint(c0[:2] + e[:2], c0[2:] + e[2:]))
        Gm = bundle_metric_matrix(M, gen, TangentPoint(c0[:2] - e[:2], c0[2:] - e[2:]))
        dG = (Gp - Gm) / (2 * e[c])
        rhs = np.einsum("db,da->ab", G, gam[:, :, c]) + np.einsum("ad,db->ab", G, gam[:, :, c])
        np.testing.assert_allclose(dG, rhs, atol=1e-7)


def test_flat_sasaki_bundle_is_flat():
    M, z = euclidean(2), TangentPoint.of([0.1, 0.2], [0.3, 0.4])
    assert np.max(np.abs(bundle_christoffel(M, sasaki(), z))) < 1e-9


def test_degenerate_generators_raise():
    M, z = euclidean(2), TangentPoint.of([0.0, 0.0], [0.5, 0.5])
    with pytest.raises(SingularMetric):
        bundle_christoffel(M, GeneratorSet(a1=const(1), a2=const(1), a3=const(0)), z)


def test_out_of_domain_generators_raise():
    M, z = euclidean(2), TangentPoint.of([0.0, 0.0], [0.1, 0.0])
    with pytest.raises(OutOfDomain):
        split_metric_matrix(M, construct_recurrent_example(1.0, 1.0, eps=0.1), z)


def test_bundle_vector_algebra():
    a = BundleVector(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    b = BundleVector.from_array([0.5, 0.5, 0.5, 0.5])
    np.testing.assert_allclose((2 * a - b).as_array(), [1.5, 3.5, 5.5, 7.5])
