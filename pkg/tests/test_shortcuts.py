import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from qsl import gates as G
from qsl import shortcuts as sc
from qsl.qudit import Circuit, RegisterShape, equal_up_to_global_phase, unitary_of


def patterns(n):
    return list(itertools.product((0, 1), repeat=n))


def qubit_block(c):
    return sc.restrict_to_qubits(unitary_of(c), c.shape)


def test_ts_fires_on_101():
    u = qubit_block(sc.build_ts())
    expected = np.ones(8)
    expected[0b101] = -1
    assert np.allclose(u, np.diag(expected), atol=1e-12)


@pytest.mark.parametrize("n,p", [(n, p) for n in (1, 2, 3) for p in patterns(n)])
def test_n_toffoli_sign(n, p):
    c = sc.build_n_toffoli_sign(n, p)
    assert c.two_qubit_gate_count() == 2 * n - 1
    assert c.shape.dims[-1] == n + 1
    assert np.allclose(qubit_block(c), sc.ideal_multi_controlled(n, G.Z, p), atol=1e-12)
    assert sc.leakage(unitary_of(c), c.shape) < 1e-12


@pytest.mark.parametrize("central", [False, True])
@pytest.mark.parametrize("theta", [0.3, math.pi / 2, math.pi])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_cn_z_theta(n, theta, central):
    p = (1, 0, 1)[:n]
    c = sc.build_cn_z_theta(n, theta, p, central_two_qubit=central)
    assert c.two_qubit_gate_count() == 2 * n - (1 if central else 0)
    assert np.allclose(qubit_block(c), sc.ideal_multi_controlled(n, G.z_theta_matrix(theta), p), atol=1e-12)


@pytest.mark.parametrize("fire", [0, 1])
def test_cu_theta(fire):
    u = qubit_block(sc.build_cu_theta(0.9, fire))
    idx = 3 if fire else 1
    expected = np.ones(4, dtype=complex)
    expected[idx] = np.exp(0.9j)
    assert np.allclose(u, np.diag(expected))


@pytest.mark.parametrize("bad", [(0, 2), (1,), (1, 1, 1)])
def test_bad_patterns(bad):
    with pytest.raises(ValueError):
        sc.build_n_toffoli_sign(2, bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_spectral_decomposition_reconstructs(seed):
    u = unitary_group.rvs(2, random_state=seed)
    dec = sc.spectral_decompose_2x2(u)
    assert np.allclose(dec.reconstruct(), u, atol=1e-9)
    assert np.allclose(dec.V.conj().T @ dec.V, np.eye(2), atol=1e-9)


@pytest.mark.parametrize("name", sorted(G.NAMED))
@pytest.mark.parametrize("n", [1, 2])
def test_cn_u_named(name, n):
    u = G.NAMED[name].matrix
    p = (1,) * n
    c, alpha = sc.build_cn_u(n, u, p)
    ideal = sc.ideal_multi_controlled(n, np.exp(-1j * alpha) * u, p)
    assert np.allclose(qubit_block(c), ideal, atol=1e-9)


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_add_controls(k, n):
    inner, u = sc.single_control_fixture(k)
    for q in patterns(n):
        c = sc.add_controls(inner, n, q)
        assert c.two_qubit_gate_count() - inner.two_qubit_gate_count() == 2 * n
        assert c.shape.dims[n] == 2 + n
        assert np.allclose(qubit_block(c), sc.ideal_multi_controlled(n + 1, u, (1,) + q), atol=1e-12)


def test_add_controls_associative_on_qubits():
    inner, u = sc.single_control_fixture(1)
    once = sc.add_controls(inner, 2, (1, 0))
    twice = sc.add_controls(sc.add_controls(inner, 1, (1,)), 1, (0,), c1=1)
    assert np.allclose(qubit_block(once), qubit_block(twice), atol=1e-12)


def test_add_controls_rejects_zero_control():
    inner = Circuit(RegisterShape((2, 2)), (G.cx(0, 1, 0),))
    with pytest.raises(ValueError):
        sc.add_controls(inner, 1, (1,))


@pytest.mark.parametrize("f", patterns(2))
def test_toffoli_from_ts(f):
    u = sc.circuit_unitary_restricted(sc.toffoli_from_ts(f))
    assert np.allclose(u, sc.ideal_multi_controlled(2, G.X, (f[1], f[0])), atol=1e-12)


def test_textbook_toffoli():
    u = sc.circuit_unitary_restricted(sc.textbook_toffoli_6cnot())
    assert equal_up_to_global_phase(u, sc.ideal_multi_controlled(2, G.X, (1, 1)))
    assert sc.textbook_toffoli_6cnot().two_qubit_gate_count() == 6


@pytest.mark.parametrize("kind,n,count", [("nT", 2, 13), ("nT", 5, 49), ("cnU", 5, 50), ("cnU", 3, 26)])
def test_qubit_only_cost(kind, n, count):
    c = sc.qubit_only_cost(kind, n)
    assert c.two_qubit_gate_count == count
    assert c.ancilla_count == n - 1


@pytest.mark.parametrize("kind,n", [("nT", 1), ("xx", 3)])
def test_qubit_only_cost_errors(kind, n):
    with pytest.raises(ValueError):
        sc.qubit_only_cost(kind, n)


def test_shortcut_cost_n5():
    assert sc.shortcut_cost("nT", 5).two_qubit_gate_count == 9
    assert sc.shortcut_cost("cnU", 5).two_qubit_gate_count == 10
    assert sc.cost_of(sc.build_ts()).max_carrier_dimension == 3


def test_shelf_inputs_are_permuted_not_leaked():
    c = sc.build_ts()
    u = unitary_of(c)
    assert sc.leakage(u, c.shape) == 0
    assert sc.shelf_deviation(u, c.shape) > 0
