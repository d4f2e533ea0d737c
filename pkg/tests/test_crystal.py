import math

import numpy as np
import pytest

from iongate.crystal import (
    Crystal,
    EquilibriumError,
    build_coupling,
    local_frequency,
    restricted_modes,
    solve_equilibrium,
    solve_modes,
    thermal_betas,
)

# analytic force balance: N=2 gives u^3 = 1/4, N=3 gives u^3 = 5/4
U2 = 0.25 ** (1.0 / 3.0)
U3 = 1.25 ** (1.0 / 3.0)


def test_equilibrium_two_ions():
    u = solve_equilibrium(2)
    assert u == pytest.approx([-U2, U2], abs=1e-12)


def test_equilibrium_three_ions():
    u = solve_equilibrium(3)
    assert u == pytest.approx([-U3, 0.0, U3], abs=1e-12)


@pytest.mark.parametrize("n", range(2, 21))
def test_equilibrium_residual_and_symmetry(n):
    u = solve_equilibrium(n)
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    residual = u - np.sum(np.sign(d) / d**2, axis=1)
    assert np.max(np.abs(residual)) < 1e-12
    assert np.all(np.diff(u) > 0)
    assert u == pytest.approx(-u[::-1], abs=1e-12)


def test_equilibrium_rejects_tiny_chain():
    with pytest.raises(ValueError):
        solve_equilibrium(1)


def test_coupling_two_ion_closed_form():
    u = solve_equilibrium(2)
    d = 2.0 * U2
    a = build_coupling(u)
    expected = np.array([[1 + 2 / d**3, -2 / d**3], [-2 / d**3, 1 + 2 / d**3]])
    assert a == pytest.approx(expected, abs=1e-12)
    assert np.linalg.eigvalsh(a) == pytest.approx([1.0, 3.0], abs=1e-12)


@pytest.mark.parametrize("n", [2, 5, 11, 20])
def test_coupling_row_sums_are_unity(n):
    a = build_coupling(solve_equilibrium(n))
    assert a.sum(axis=1) == pytest.approx(np.ones(n), abs=1e-12)
    assert a == pytest.approx(a.T, abs=1e-14)


def test_coupling_rejects_bad_positions():
    with pytest.raises(ValueError):
        build_coupling(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        build_coupling(np.array([1.0, -1.0]))


def test_modes_trap_and_stretch(crystal20):
    modes = crystal20.modes
    assert modes.eigenvalues[0] == pytest.approx(1.0, abs=1e-9)
    assert modes.eigenvalues[1] == pytest.approx(3.0, abs=1e-9)
    uniform = np.ones(20) / np.sqrt(20)
    assert np.abs(modes.vectors[:, 0]) == pytest.approx(uniform, abs=1e-9)
    # the stretch eigenvector is proportional to the positions
    stretch = crystal20.positions / np.linalg.norm(crystal20.positions)
    overlap = abs(stretch @ modes.vectors[:, 1])
    assert overlap == pytest.approx(1.0, abs=1e-9)


def test_modes_reconstruction_and_orthonormality(crystal20):
    a = crystal20.coupling
    modes = crystal20.modes
    for k in range(modes.n_modes):
        res = a @ modes.vectors[:, k] - modes.eigenvalues[k] * modes.vectors[:, k]
        assert np.linalg.norm(res) < 1e-10
    gram = modes.vectors.T @ modes.vectors
    assert gram == pytest.approx(np.eye(20), abs=1e-10)


def test_modes_two_ion_spectrum(crystal2):
    assert crystal2.modes.eigenvalues == pytest.approx([1.0, 3.0], abs=1e-12)


def test_mode_sign_convention(crystal20):
    vecs = crystal20.modes.vectors
    lead = np.argmax(np.abs(vecs), axis=0)
    assert np.all(vecs[lead, np.arange(vecs.shape[1])] > 0)


def test_local_frequency_two_ions(crystal2):
    # pinning one ion leaves curvature 1 + 2/d^3 = 2, hence sqrt(2)
    assert local_frequency(crystal2, 1) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_local_frequency_center_values(crystal20, crystal40):
    assert local_frequency(crystal20, 10) == pytest.approx(9.2, abs=0.1)
    assert local_frequency(crystal20, 11) == pytest.approx(9.2, abs=0.1)
    assert local_frequency(crystal40, 20) == pytest.approx(16.7, abs=0.1)


def test_local_frequency_consistency_with_coupling(crystal20):
    # the 9.2 figure pins down the center diagonal entry to about 2%
    assert crystal20.coupling[9, 9] == pytest.approx(9.2**2, rel=0.02)
    assert local_frequency(crystal20, 1) >= 1.0
    with pytest.raises(ValueError):
        local_frequency(crystal20, 21)


def test_thermal_betas_ground_state(crystal20):
    assert thermal_betas(0.0, crystal20.modes) == pytest.approx(
        np.ones(20), abs=1e-15
    )


def test_thermal_betas_com_identity(crystal20):
    betas = thermal_betas(3.0, crystal20.modes)
    assert betas[0] == pytest.approx(7.0, abs=1e-12)


def test_thermal_betas_stretch_mode_value(crystal2):
    betas = thermal_betas(3.0, crystal2.modes)
    x = math.sqrt(3.0) / 2.0 * math.log(4.0 / 3.0)
    independent = (math.exp(x) + math.exp(-x)) / (math.exp(x) - math.exp(-x))
    assert betas[1] == pytest.approx(independent, abs=1e-12)


def test_thermal_betas_monotone_and_bounded(crystal20):
    betas = thermal_betas(2.5, crystal20.modes)
    assert np.all(betas >= 1.0)
    assert np.all(np.diff(betas) < 0)


def test_thermal_betas_rejects_negative(crystal20):
    with pytest.raises(ValueError):
        thermal_betas(-0.1, crystal20.modes)


def test_restricted_modes_full_set_matches(crystal20):
    sub = restricted_modes(crystal20, tuple(range(1, 21)))
    assert sub.eigenvalues == pytest.approx(crystal20.modes.eigenvalues, abs=1e-10)


def test_restricted_modes_single_ion(crystal20):
    sub = restricted_modes(crystal20, (7,))
    assert sub.frequencies[0] == pytest.approx(local_frequency(crystal20, 7), abs=1e-12)


def test_restricted_modes_center_pair_closed_form(crystal20):
    sub = restricted_modes(crystal20, (10, 11))
    a_ii = crystal20.coupling[9, 9]
    a_jj = crystal20.coupling[10, 10]
    a_ij = crystal20.coupling[9, 10]
    assert a_ii == pytest.approx(a_jj, abs=1e-10)
    expected = np.sort(np.sqrt([a_ii + a_ij, a_ii - a_ij]))
    assert sub.frequencies == pytest.approx(expected, abs=1e-10)


def test_restricted_modes_requires_gate_ions(crystal20):
    with pytest.raises(ValueError):
        restricted_modes(crystal20, (5, 6, 7), require_ions=(10, 11))


def test_coupling_row_lookup(crystal20):
    sub = restricted_modes(crystal20, (9, 10, 11, 12))
    row = sub.coupling_row(10)
    assert row.shape == (4,)
    with pytest.raises(ValueError):
        sub.coupling_row(5)


def test_crystal_json_schema(crystal2):
    blob = crystal2.to_json_dict()
    assert set(blob) == {
        "n",
        "positions",
        "mode_eigenvalues",
        "mode_vectors",
        "local_frequencies",
    }
    assert blob["n"] == 2
    assert len(blob["positions"]) == 2
    assert len(blob["mode_vectors"]) == 2
