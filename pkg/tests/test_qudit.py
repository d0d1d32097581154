import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsl import gates as G
from qsl.circuit_io import CircuitFormatError, dumps, loads
from qsl.qudit import (
    Circuit,
    GateMatrix,
    LevelSwap,
    PlacedGate,
    PlacementError,
    RegisterShape,
    ShapeMismatchError,
    StateVector,
    apply,
    embed_gate,
    equal_up_to_global_phase,
    is_unitary,
    local_phase_equivalence,
    local_z,
    max_deviation_up_to_phase,
    unitary_of,
)

dims_st = st.lists(st.integers(2, 4), min_size=1, max_size=4).map(tuple)


@given(dims_st, st.data())
def test_index_levels_round_trip(dims, data):
    shape = RegisterShape(dims)
    i = data.draw(st.integers(0, shape.total_dim - 1))
    assert shape.index(shape.levels(i)) == i
    assert tuple(shape.all_levels()[i]) == shape.levels(i)


def test_big_endian_index():
    shape = RegisterShape((2, 2, 3))
    assert shape.index((1, 0, 2)) == 1 * 6 + 0 * 3 + 2


@pytest.mark.parametrize("dims", [(), (1, 2), (2, 0)])
def test_bad_shapes(dims):
    with pytest.raises(ValueError):
        RegisterShape(dims)


def test_state_vector_checks():
    shape = RegisterShape((2, 3))
    with pytest.raises(ShapeMismatchError):
        StateVector(shape, np.ones(5))
    with pytest.raises(ValueError):
        StateVector(shape, np.ones(6))
    assert StateVector(shape, np.ones(6), unnormalized=True).unnormalized


def test_gate_matrix_validation():
    with pytest.raises(ValueError):
        GateMatrix(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        GateMatrix(np.eye(3))
    assert np.allclose(G.T.dagger().matrix, G.TDG.matrix)


@pytest.mark.parametrize("placement", [
    lambda: PlacedGate(G.X, (0, 0)),
    lambda: PlacedGate(G.X, (0,), ((0, 1),)),
    lambda: PlacedGate(G.X, (0,), ((1, 2),)),
    lambda: PlacedGate(LevelSwap(0, 2), (0,), ((1, 1),)),
    lambda: PlacedGate(G.X, (0, 1)),
])
def test_placement_errors(placement):
    with pytest.raises(PlacementError):
        placement()


def test_level_swap_needs_dimension():
    with pytest.raises(PlacementError):
        Circuit(RegisterShape((2,)), (G.swap_levels(0, 0, 2),))


def test_gates_skip_shelf_levels():
    shape = RegisterShape((2, 3))
    u = embed_gate(G.cx(0, 1), shape)
    # |1,2> is untouched, |1,0> <-> |1,1>
    assert u[shape.index((1, 2)), shape.index((1, 2))] == 1
    assert u[shape.index((1, 1)), shape.index((1, 0))] == 1
    assert is_unitary(u)


def test_level_swap_embedding():
    shape = RegisterShape((4,))
    u = embed_gate(G.swap_levels(0, 1, 3), shape)
    assert np.array_equal(np.abs(u), np.eye(4)[[0, 3, 2, 1]])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_circuits_are_unitary_and_apply_matches(seed):
    rng = np.random.default_rng(seed)
    shape = RegisterShape((2, 3, 4))
    pool = [G.cx(0, 1), G.cz(1, 2, 0), G.single(G.H, 2), G.swap_levels(1, 0, 2),
            G.swap_levels(2, 1, 3), G.controlled(G.z_theta(0.3), 2, 0)]
    c = Circuit(shape, tuple(pool[i] for i in rng.integers(0, len(pool), 8)))
    u = unitary_of(c)
    assert is_unitary(u)
    amps = rng.normal(size=shape.total_dim) + 1j * rng.normal(size=shape.total_dim)
    s = StateVector(shape, amps / np.linalg.norm(amps))
    assert np.allclose(apply(c, s).amplitudes, u @ s.amplitudes)


def test_global_phase_helpers():
    u = np.diag([1, 1j])
    assert equal_up_to_global_phase(u, np.exp(0.4j) * u)
    assert max_deviation_up_to_phase(u, np.exp(0.4j) * u) < 1e-12
    assert not equal_up_to_global_phase(u, np.diag([1, -1j]))


def test_local_phase_equivalence():
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    v = np.exp(0.2j) * local_z([0.3, -1.1]) @ cz
    found = local_phase_equivalence(cz, v)
    assert found is not None
    assert local_phase_equivalence(cz, np.eye(4)) is None


@pytest.mark.parametrize("circuit", [
    Circuit(RegisterShape((2, 2, 3)), (G.swap_levels(2, 0, 2), G.cx(0, 2, 0),
                                       G.controlled(G.z_theta(math.pi / 3), 1, 2))),
    Circuit(RegisterShape((2, 2)), (G.single(G.matrix_gate(G.H_MAT @ G.z_theta_matrix(0.1), "W"), 0),)),
])
def test_circuit_text_round_trip(circuit):
    again = loads(dumps(circuit))
    assert again.shape == circuit.shape
    assert np.allclose(unitary_of(again), unitary_of(circuit))
    assert dumps(again) == dumps(circuit)


@pytest.mark.parametrize("text", ["", "# wrong\n", "# qsl-circuit v1\ndims=[2]\nBOGUS targets=[0]\n"])
def test_circuit_text_errors(text):
    with pytest.raises(CircuitFormatError):
        loads(text)
