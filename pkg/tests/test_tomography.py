import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsl.metrics import fidelity
from qsl.records import (
    CountRecord,
    MeasurementSetting,
    RecordFormatError,
    basis_group,
    dumps_counts,
    group_records,
    loads_counts,
    tomography_settings,
)
from qsl.tomography import (
    TomographyError,
    chi_from_kraus,
    chi_of_unitary,
    density,
    monte_carlo_errors,
    preparation_labels,
    process_fidelity,
    process_tomography,
    process_tomography_from_records,
    project_to_density,
    projector,
    simulate_state_counts,
    state_tomography,
)

CZ = np.diag([1, 1, 1, -1]).astype(complex)


def random_density(rng, d=4, rank=None):
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    r = g @ g.conj().T
    return r / np.trace(r).real


def exact_records(rho, prep="x", shots=10**12):
    n = int(round(math.log2(rho.shape[0])))
    return [CountRecord(prep, s, shots, int(round(shots * np.trace(projector(s) @ rho).real)))
            for s in tomography_settings(n)]


# -- records ---------------------------------------------------------------------------


def test_settings_counts():
    assert len(tomography_settings(2)) == 36
    assert [s.spec for s in basis_group("Z-")] == ["H-", "V-"]
    assert MeasurementSetting.parse("H-R").bases == "Z-Y"


def test_counts_round_trip():
    recs = [CountRecord("HD", s, 100, i) for i, s in enumerate(basis_group("XY"))]
    text = dumps_counts(recs)
    assert text.splitlines()[:2] == ["# qsl-counts v1", "setting_id,projector_spec,shots,counts"]
    assert loads_counts(text) == recs
    assert list(group_records(recs)) == ["HD"]


@pytest.mark.parametrize("text", [
    "",
    "# qsl-counts v1\n",
    "# qsl-counts v1\nsetting_id,projector_spec,shots,counts\nHH|ZX,HH,10,1\n",
    "# qsl-counts v1\nsetting_id,projector_spec,shots,counts\nHH|ZZ,HQ,10,1\n",
    "# qsl-counts v1\nsetting_id,projector_spec,shots,counts\nHH|ZZ,HH,10,-1\n",
    "# qsl-counts v1\nsetting_id,projector_spec,shots\n",
])
def test_counts_format_errors(text):
    with pytest.raises(RecordFormatError):
        loads_counts(text)


# -- state tomography ------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_gives_density_matrix(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = project_to_density(m)
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1)
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    assert np.allclose(project_to_density(rho), rho)


@pytest.mark.parametrize("method", ["lsq", "mle"])
@pytest.mark.parametrize("label", ["H", "R", "HD", "VL"])
def test_exact_frequencies_recover_state(method, label):
    rho = density(label)
    est = state_tomography(exact_records(rho), method=method)
    assert fidelity(est, rho) == pytest.approx(1, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_sampled_round_trip(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, rank=1 + seed % 4)
    est = state_tomography(simulate_state_counts(rho, 10**5, rng))
    assert fidelity(est, rho) >= 0.995


def test_unanalysed_qubit_is_dropped():
    rho = density("D")
    recs = [CountRecord("x", MeasurementSetting((None,) + r.setting.projectors), r.shots, r.counts)
            for r in exact_records(rho)]
    assert fidelity(state_tomography(recs), rho) == pytest.approx(1, abs=1e-6)


def test_incomplete_or_mixed_records_fail():
    recs = exact_records(density("HH"))
    with pytest.raises(TomographyError):
        state_tomography(recs[:-1])
    with pytest.raises(TomographyError):
        state_tomography(recs + [CountRecord("y", recs[0].setting, 1, 1)])
    with pytest.raises(TomographyError):
        state_tomography([r.with_counts(0) for r in recs])


# -- process tomography ----------------------------------------------------------------


def test_chi_of_unitary_is_rank_one():
    chi = chi_of_unitary(CZ)
    assert np.trace(chi).real == pytest.approx(1)
    assert np.linalg.matrix_rank(chi, tol=1e-9) == 1
    # CZ = (II + IZ + ZI - ZZ) / 2
    assert chi[0, 0].real == pytest.approx(0.25)


def test_chi_of_mixture():
    chi = chi_from_kraus([np.eye(2) / math.sqrt(2), np.diag([1, -1]) / math.sqrt(2)])
    assert np.allclose(np.diag(chi).real, [0.5, 0, 0, 0.5])


@pytest.mark.parametrize("u", [CZ, np.diag([1, 1, 1, 1j]), np.kron(np.eye(2), [[0, 1], [1, 0]])])
def test_process_from_exact_outputs(u):
    outs = {p: u @ density(p) @ u.conj().T for p in preparation_labels(2)}
    est = process_tomography(outs, success_probability=0.1)
    assert process_fidelity(est.chi, chi_of_unitary(u)) == pytest.approx(1, abs=1e-9)
    assert est.trace_residual < 1e-9
    assert est.success_probability == 0.1


def test_process_from_records():
    recs = []
    for p in preparation_labels(2):
        recs += exact_records(CZ @ density(p) @ CZ.conj().T, prep=p)
    est = process_tomography_from_records(recs)
    assert est.fidelity(chi_of_unitary(CZ)) == pytest.approx(1, abs=1e-6)


def test_process_needs_complete_preparations():
    with pytest.raises(TomographyError):
        process_tomography({"HH": density("HH")})


# -- Monte Carlo -----------------------------------------------------------------------


def test_monte_carlo_is_deterministic_and_counts_failures():
    rng = np.random.default_rng(1)
    rho = random_density(rng)
    recs = simulate_state_counts(rho, 10**4, rng)

    def est(r):
        return {"f": fidelity(state_tomography(r), rho)}

    a = monte_carlo_errors(recs, est, 6, seed=9)
    b = monte_carlo_errors(recs, est, 6, seed=9)
    assert a.std == b.std and a.n_failed == 0
    assert 0 < a.std["f"] < 0.05

    def flaky(r):
        if r[0].counts % 2:
            raise TomographyError("odd")
        return {"f": 1.0}

    c = monte_carlo_errors(recs, flaky, 20, seed=9)
    assert c.n_failed + len(c.samples.get("f", [])) == 20
    with pytest.raises(ValueError):
        monte_carlo_errors(recs, est, 1, seed=0)
