import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from mtdc.errors import ModelError
from mtdc.graph import NetworkModel, build_laplacian, laplacian_spectrum

from conftest import models


def _exact_spectrum(L_rational):
    """Roots of det(x I - L) computed symbolically: independent of LAPACK."""
    M = sympy.Matrix(L_rational)
    x = sympy.symbols("x")
    roots = sympy.roots(M.charpoly(x).as_expr(), x)
    out = []
    for r, mult in roots.items():
        out += [float(r)] * mult
    return sorted(out)


def test_single_edge_laplacian():
    m = NetworkModel(2, ((1, 2, 1.0),), (1.0, 1.0))
    np.testing.assert_array_equal(build_laplacian(m), [[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_allclose(laplacian_spectrum(m.L_R), [0.0, 2.0], atol=1e-15)


def test_fourbus_laplacian(fourbus_model):
    L = fourbus_model.L_R
    g = 1 / 0.0065
    assert L[0, 1] == pytest.approx(-153.846, abs=1e-3)
    # oracle: exact characteristic polynomial of the unit 4-cycle, scaled by g
    unit = [[2, -1, -1, 0], [-1, 2, 0, -1], [-1, 0, 2, -1], [0, -1, -1, 2]]
    assert _exact_spectrum(unit) == [0.0, 2.0, 2.0, 4.0]
    expected = [0.0, 307.692307692, 307.692307692, 615.384615385]
    np.testing.assert_allclose(laplacian_spectrum(L), expected, atol=1e-6)
    np.testing.assert_allclose(laplacian_spectrum(L), g * np.array([0, 2, 2, 4.0]), rtol=1e-12, atol=1e-10)


def test_path_graph_spectrum():
    # three buses in a line, unit conductances
    m = NetworkModel(3, ((1, 2, 1.0), (2, 3, 1.0)), (1.0,) * 3)
    assert _exact_spectrum([[1, -1, 0], [-1, 2, -1], [0, -1, 1]]) == [0.0, 1.0, 3.0]
    np.testing.assert_allclose(laplacian_spectrum(m.L_R), [0.0, 1.0, 3.0], atol=1e-14)


def test_spectrum_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        laplacian_spectrum(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_comm_graph_defaults_to_conductances(fourbus_model):
    np.testing.assert_allclose(fourbus_model.L_C, fourbus_model.L_R, rtol=1e-15)
    assert fourbus_model.same_topology_weights()


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(n=1, edges=(), capacitances=(1.0,)), "bus count"),
        (dict(n=2, edges=((1, 2, -1.0),), capacitances=(1.0, 1.0)), "> 0"),
        (dict(n=2, edges=((1, 1, 1.0),), capacitances=(1.0, 1.0)), "self-loop"),
        (dict(n=2, edges=((1, 3, 1.0),), capacitances=(1.0, 1.0)), "outside"),
        (dict(n=2, edges=((1, 2, 1.0), (2, 1, 2.0)), capacitances=(1.0, 1.0)), "duplicate"),
        (dict(n=2, edges=((1, 2, 1.0),), capacitances=(1.0, 0.0)), "capacitance"),
        (dict(n=3, edges=((1, 2, 1.0),), capacitances=(1.0,) * 3), "disconnected"),
        (dict(n=3, edges=((1, 2, 1.0), (2, 3, 1.0)), capacitances=(1.0,) * 3, comm_edges=((1, 2, 1.0),)), "communication"),
    ],
)
def test_invalid_models_rejected(kwargs, msg):
    with pytest.raises(ModelError, match=msg):
        NetworkModel(**kwargs)


@given(models())
def test_laplacian_properties(model):
    for L in (model.L_R, model.L_C):
        np.testing.assert_array_equal(L, L.T)
        assert np.abs(L.sum(axis=1)).max() <= 1e-12 * np.abs(L).max()
        lam = laplacian_spectrum(L)
        assert lam[0] >= -1e-9 * lam[-1]
        assert lam[1] > 0
        assert np.linalg.matrix_rank(L) == model.n - 1


@given(models(), st.randoms(use_true_random=False))
def test_permutation_equivariance(model, rnd):
    perm = list(range(1, model.n + 1))
    rnd.shuffle(perm)
    P = np.zeros((model.n, model.n))
    for old, new in enumerate(perm):
        P[new - 1, old] = 1.0
    relabeled = model.permuted(perm)
    np.testing.assert_allclose(relabeled.L_R, P @ model.L_R @ P.T, rtol=1e-14, atol=1e-14 * np.abs(model.L_R).max())
    np.testing.assert_allclose(relabeled.L_C, P @ model.L_C @ P.T, rtol=1e-14, atol=1e-14 * np.abs(model.L_C).max())


def test_disconnected_graph_has_zero_second_eigenvalue():
    # built by hand: a Laplacian of two separate edges
    L = np.zeros((4, 4))
    for i, j in ((0, 1), (2, 3)):
        L[i, i] += 1
        L[j, j] += 1
        L[i, j] -= 1
        L[j, i] -= 1
    assert abs(laplacian_spectrum(L)[1]) < 1e-12
