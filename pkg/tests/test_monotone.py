import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partinv import (
    AffineSet,
    Box,
    DimensionError,
    EuclideanBall,
    L1Norm,
    LinearMonotone,
    Quadratic,
    SubspaceProjectorPair,
    ZeroFunction,
    inverse,
    partial_inverse,
    product,
    shift_graph,
    shift_input,
)
from partinv.checks import firm_nonexpansive_margin, random_catalog
from partinv.oracles import LinearOperatorOracle, grid_argmin, partial_inverse_matrix


def r(op, *z):
    return op.resolve(np.array(z, dtype=float))


def test_catalog_examples():
    assert r(Quadratic(np.eye(1)), 4.0)[0] == pytest.approx(2.0, abs=1e-15)
    assert r(L1Norm(1), 3.0)[0] == 2.0
    assert r(L1Norm(1), -0.5)[0] == 0.0
    assert r(Box([0.0], [1.0]), 2.5)[0] == 1.0
    np.testing.assert_array_equal(r(ZeroFunction(2), 1.5, -2.0), [1.5, -2.0])


def test_scaled_catalog():
    assert r(L1Norm(1, scale=0.5), 3.0)[0] == 2.5
    # (1 + w M) p = z + w c
    assert r(Quadratic([[2.0]], [1.0], scale=3.0), 4.0)[0] == pytest.approx(7.0 / 7.0)
    # indicators ignore the weight
    assert r(Box([0.0], [1.0], scale=7.0), 2.5)[0] == 1.0


def test_ball_prox():
    ball = EuclideanBall([1.0, 1.0], 1.0)
    np.testing.assert_array_equal(r(ball, 1.0, 1.0), [1.0, 1.0])
    np.testing.assert_array_equal(r(ball, 1.5, 1.0), [1.5, 1.0])
    np.testing.assert_allclose(r(ball, 4.0, 5.0), [1.6, 1.8], atol=1e-15)


def test_affine_prox(rng):
    E = rng.standard_normal((2, 4))
    d = E @ rng.standard_normal(4)
    aff = AffineSet(E, d)
    for _ in range(10):
        z = rng.standard_normal(4)
        p = aff.resolve(z)
        assert np.linalg.norm(E @ p - d) <= 1e-12
        # z - p lies in range(E^T)
        coef, *_ = np.linalg.lstsq(E.T, z - p, rcond=None)
        assert np.linalg.norm(E.T @ coef - (z - p)) <= 1e-12
    assert aff.value(aff.resolve(np.zeros(4))) == 0.0
    with pytest.raises(ValueError, match="empty"):
        AffineSet([[1.0, 0.0], [2.0, 0.0]], [1.0, 0.0])


def test_constructor_validation():
    with pytest.raises(ValueError):
        Quadratic([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        Quadratic([[-1.0]])
    with pytest.raises(ValueError):
        Box([1.0], [0.0])
    with pytest.raises(ValueError):
        EuclideanBall([0.0], 0.0)
    with pytest.raises(ValueError):
        L1Norm(2, scale=0.0)
    with pytest.raises(ValueError):
        LinearMonotone([[-1.0]])
    with pytest.raises(DimensionError):
        L1Norm(2).resolve([1.0])


def test_shift_input():
    C = LinearMonotone(np.eye(1))
    assert r(shift_input(C, [2.0]), 0.0)[0] == 1.0
    assert r(shift_input(Quadratic(np.eye(1)), [4.0]), 2.0)[0] == pytest.approx(3.0, abs=1e-15)
    l1 = L1Norm(3)
    z = np.array([0.3, -2.0, 4.0])
    np.testing.assert_array_equal(shift_input(l1, np.zeros(3)).resolve(z), l1.resolve(z))
    with pytest.raises(DimensionError):
        shift_input(l1, [1.0])


def test_shift_graph():
    assert r(shift_graph(LinearMonotone(np.eye(1)), [2.0]), 2.0)[0] == 2.0
    assert r(shift_graph(L1Norm(1), [1.0]), 4.0)[0] == 3.0
    l1 = L1Norm(2)
    np.testing.assert_array_equal(shift_graph(l1, [0.0, 0.0]).resolve([3.0, -0.2]), l1.resolve([3.0, -0.2]))


def test_inverse():
    assert r(inverse(LinearMonotone(np.eye(1))), 4.0)[0] == 2.0
    assert r(inverse(LinearMonotone(2 * np.eye(1))), 3.0)[0] == pytest.approx(2.0, abs=1e-15)
    # direct resolvent of 0.5 Id
    assert r(LinearMonotone(0.5 * np.eye(1)), 3.0)[0] == pytest.approx(2.0, abs=1e-15)
    A = L1Norm(2)
    assert inverse(inverse(A)) is A


def test_moreau_identity(rng):
    for op in random_catalog(rng, 4).values():
        inv = inverse(op)
        for _ in range(20):
            z = 3 * rng.standard_normal(4)
            p = op.resolve(z)
            np.testing.assert_allclose(p + inv.resolve(z), z, rtol=1e-15, atol=1e-15)


def test_product():
    l1 = L1Norm(1)
    assert r(product([l1]), 3.0)[0] == 2.0
    P = product([LinearMonotone(np.eye(1)), LinearMonotone(2 * np.eye(1))])
    np.testing.assert_allclose(r(P, 4.0, 3.0), [2.0, 1.0], atol=1e-15)
    np.testing.assert_array_equal(r(product([l1, l1, l1]), 3.0, 0.0, -3.0), [2.0, 0.0, -2.0])
    with pytest.raises(ValueError):
        product([])
    with pytest.raises(DimensionError):
        P.resolve([1.0, 2.0, 3.0])


def test_partial_inverse_examples(rng):
    A = LinearMonotone(2 * np.eye(1))
    assert r(partial_inverse(A, SubspaceProjectorPair.trivial(1)), 3.0)[0] == pytest.approx(2.0, abs=1e-15)
    D = LinearMonotone(np.diag([1.0, 3.0]))
    V = SubspaceProjectorPair.from_basis([[1.0], [0.0]])
    # graph computation: A_V(a, b) = (a, b/3), resolvent (z1/2, 3 z2/4)
    np.testing.assert_allclose(r(partial_inverse(D, V), 2.0, 4.0), [1.0, 3.0], atol=1e-15)
    with pytest.raises(DimensionError):
        partial_inverse(D, SubspaceProjectorPair.whole(3))


def test_partial_inverse_extremes(rng):
    for name, op in random_catalog(rng, 4).items():
        whole = partial_inverse(op, SubspaceProjectorPair.whole(4))
        triv = partial_inverse(op, SubspaceProjectorPair.trivial(4))
        inv = inverse(op)
        for _ in range(10):
            z = rng.standard_normal(4)
            np.testing.assert_allclose(whole.resolve(z), op.resolve(z), atol=1e-12, err_msg=name)
            np.testing.assert_allclose(triv.resolve(z), inv.resolve(z), atol=1e-12, err_msg=name)


def test_partial_inverse_characterization(rng):
    # P_V p + P_Vperp (z - p) = J_A z
    for op in random_catalog(rng, 5).values():
        V = SubspaceProjectorPair.from_basis(rng.standard_normal((5, 2)))
        pi = partial_inverse(op, V)
        for _ in range(5):
            z = rng.standard_normal(5)
            p = pi.resolve(z)
            lhs = V.project_V(p) + V.project_Vperp(z - p)
            np.testing.assert_allclose(lhs, op.resolve(z), atol=1e-12)


def test_partial_inverse_matches_graph_oracle(rng):
    for _ in range(30):
        n = int(rng.integers(1, 7))
        orc = LinearOperatorOracle.random(rng, n)
        J = partial_inverse_matrix(orc)
        op = partial_inverse(LinearMonotone(orc.A_matrix), SubspaceProjectorPair.from_basis(orc.V_basis, n))
        for _ in range(5):
            z = rng.standard_normal(n)
            np.testing.assert_allclose(op.resolve(z), J @ z, atol=1e-8)


def test_subspace_pair_from_basis(rng):
    V = SubspaceProjectorPair.from_basis(rng.standard_normal((6, 3)))
    for _ in range(10):
        z = rng.standard_normal(6)
        np.testing.assert_allclose(V.project_V(z) + V.project_Vperp(z), z, atol=1e-12)
        np.testing.assert_allclose(V.project_V(V.project_V(z)), V.project_V(z), atol=1e-12)
        np.testing.assert_allclose(V.project_Vperp(V.project_Vperp(z)), V.project_Vperp(z), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_firm_nonexpansive(n, seed):
    rng = np.random.default_rng(seed)
    for name, op in random_catalog(rng, n).items():
        for _ in range(5):
            z, zp = 3 * rng.standard_normal(n), 3 * rng.standard_normal(n)
            assert firm_nonexpansive_margin(op, z, zp) >= -1e-10, name


def _grid_prox(f, z, box, steps):
    obj = lambda p: np.array([f(q) for q in p]) + 0.5 * ((p - z) ** 2).sum(axis=1)
    return grid_argmin(obj, box, steps)


def _vectorized_grid_prox(fvec, z, box, steps):
    return grid_argmin(lambda p: fvec(p) + 0.5 * ((p - z) ** 2).sum(axis=1), box, steps)


@pytest.mark.parametrize("z", [-2.3, -0.4, 0.0, 0.7, 3.1])
def test_prox_matches_grid_1d(z):
    steps = 20000
    h = 10.0 / steps
    zz = np.array([z])
    cases = [
        (L1Norm(1, scale=0.8), lambda p: 0.8 * np.abs(p[:, 0]), [(-5, 5)]),
        (Quadratic([[2.0]], [1.0], scale=0.5), lambda p: 0.5 * (p[:, 0] ** 2 - p[:, 0]), [(-5, 5)]),
        (ZeroFunction(1), lambda p: 0 * p[:, 0], [(-5, 5)]),
    ]
    for op, fvec, box in cases:
        g = _vectorized_grid_prox(fvec, zz, box, steps)
        assert abs(op.resolve(zz)[0] - g[0]) <= 2 * h
    # indicators: grid restricted to the set
    g = _vectorized_grid_prox(lambda p: 0 * p[:, 0], zz, [(-0.5, 1.5)], steps)
    assert abs(Box([-0.5], [1.5]).resolve(zz)[0] - g[0]) <= 2 * 2.0 / steps
    g = _vectorized_grid_prox(lambda p: 0 * p[:, 0], zz, [(-1.0, 1.0)], steps)
    assert abs(EuclideanBall([0.0], 1.0).resolve(zz)[0] - g[0]) <= 2 * 2.0 / steps


@pytest.mark.parametrize("z", [(1.7, -0.2), (-0.3, 0.4), (2.5, 2.5)])
def test_prox_matches_grid_2d(z):
    steps = 2000
    box = [(-4.0, 4.0), (-4.0, 4.0)]
    h = 8.0 / steps
    zz = np.array(z)
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    c = np.array([0.3, -0.6])
    cases = [
        (L1Norm(2, scale=0.7), lambda p: 0.7 * np.abs(p).sum(axis=1)),
        (Quadratic(M, c), lambda p: 0.5 * np.einsum("ki,ij,kj->k", p, M, p) - p @ c),
        # indicator of the ball, approximated with a large finite penalty
        (EuclideanBall([0.5, 0.0], 1.2), lambda p: 1e9 * (np.linalg.norm(p - [0.5, 0.0], axis=1) > 1.2)),
        (Box([-1.0, 0.0], [1.0, 2.0]), lambda p: 1e9 * ((np.abs(p[:, 0]) > 1) | (p[:, 1] < 0) | (p[:, 1] > 2))),
    ]
    for op, fvec in cases:
        g = _vectorized_grid_prox(fvec, zz, box, steps)
        # grid points inside a curved boundary sit up to about 3h from it
        tol = 3 * h if isinstance(op, EuclideanBall) else 2 * h
        assert np.abs(op.resolve(zz) - g).max() <= tol, type(op).__name__


def test_values():
    assert L1Norm(2, scale=2.0).value([1.0, -2.0]) == 6.0
    assert Quadratic(np.eye(1), [3.0]).value([2.0]) == pytest.approx(-4.0)
    assert Box([0.0], [1.0]).value([2.0]) == np.inf
    assert EuclideanBall([0.0], 1.0).value([0.5]) == 0.0
