import numpy as np
import pytest

from iongate.gate import GatePair, build_model, fidelity_exact
from iongate.optimize import exact_null
from iongate.oracle import (
    CutoffError,
    OracleConfig,
    evolve_branch,
    thermal_fidelity,
)
from iongate.pulses import PulseSchedule

TAU0 = 2.0 * np.pi


def _coherent(alpha: complex, dim: int) -> np.ndarray:
    vec = np.zeros(dim, complex)
    vec[0] = 1.0
    for k in range(1, dim):
        vec[k] = vec[k - 1] * alpha / np.sqrt(k)
    return vec * np.exp(-0.5 * abs(alpha) ** 2)


def test_zero_amplitude_is_identity(crystal2):
    model = build_model(crystal2, GatePair(1, 2), TAU0, 2.0, 1)
    states = evolve_branch(model, np.zeros(1), (1, 1), (0, 0), cutoff=12)
    for psi in states:
        expected = np.zeros(12, complex)
        expected[0] = 1.0
        assert psi == pytest.approx(expected, abs=1e-10)


def test_branch_reaches_predicted_coherent_state(crystal2):
    model = build_model(crystal2, GatePair(1, 2), 2.0 * TAU0, 2.0, 1)
    out = model.outcome(np.ones(1), normalize=True)
    for signs in ((1, 1), (1, -1), (-1, -1)):
        states = evolve_branch(model, out.amps, signs, (0, 0), cutoff=50)
        for k, psi in enumerate(states):
            target = signs[0] * out.alpha_i[k] + signs[1] * out.alpha_j[k]
            deficit = 1.0 - abs(np.vdot(_coherent(target, 50), psi))
            assert deficit < 1e-6


def test_branch_phases_encode_conditional_phase(crystal2):
    model = build_model(crystal2, GatePair(1, 2), 2.0 * TAU0, 2.0, 1)
    out = model.outcome(np.ones(1), normalize=True)
    phases = {}
    for signs in ((1, 1), (1, -1)):
        total = 0.0
        for k, psi in enumerate(
            evolve_branch(model, out.amps, signs, (0, 0), cutoff=50)
        ):
            target = signs[0] * out.alpha_i[k] + signs[1] * out.alpha_j[k]
            total += np.angle(np.vdot(_coherent(target, 50), psi))
        phases[signs] = total
    diff = phases[(1, 1)] - phases[(1, -1)]
    assert diff == pytest.approx(2.0 * out.phi_total, abs=1e-6)


def test_initial_occupation_guard(crystal2):
    model = build_model(crystal2, GatePair(1, 2), TAU0, 2.0, 1)
    with pytest.raises(ValueError):
        evolve_branch(model, np.ones(1), (1, 1), (50, 0), cutoff=12)


def test_config_validation(crystal2):
    sched = PulseSchedule(TAU0, 2.0, [1.0])
    with pytest.raises(ValueError):
        OracleConfig(2, sched, GatePair(1, 2), fock_cutoff=1)
    with pytest.raises(ValueError):
        OracleConfig(2, sched, GatePair(1, 2), thermal_tail=0.5)


def test_exact_null_schedule_scores_unity(crystal2):
    model = build_model(crystal2, GatePair(1, 2), 1.3 * TAU0, 2.31, 5, nbar=1.0)
    amps = model.outcome(exact_null(model)).amps
    config = OracleConfig(
        2, PulseSchedule(1.3 * TAU0, 2.31, amps), GatePair(1, 2), nbar=1.0
    )
    report = thermal_fidelity(config, crystal2)
    assert report.fidelity_numeric == pytest.approx(1.0, abs=1e-5)
    assert report.fidelity_analytic == pytest.approx(1.0, abs=1e-9)


def test_ground_state_case_matches_exact_decay(crystal2):
    model = build_model(crystal2, GatePair(1, 2), 2.0 * TAU0, 1.77, 1, nbar=0.0)
    out = model.outcome(np.ones(1), normalize=True)
    config = OracleConfig(
        2, PulseSchedule(2.0 * TAU0, 1.77, out.amps), GatePair(1, 2), nbar=0.0
    )
    report = thermal_fidelity(config, crystal2)
    assert report.abs_difference_exact_decay < 1e-5
    # the report evaluates the schedule raw (no sign gauge), against the
    # fixed +pi/4 target, exactly like the integrator does
    raw = model.outcome(out.amps, normalize=False)
    assert report.fidelity_analytic_exact_decay == pytest.approx(
        fidelity_exact(raw, np.ones(2)), abs=1e-12
    )


def test_thermal_case_adjudicates_decay_exponent(crystal2):
    """The reference case separating the two closed-form decay laws."""
    model = build_model(crystal2, GatePair(1, 2), 2.0 * TAU0, 3.1, 1, nbar=1.0)
    out = model.outcome(np.ones(1), normalize=True)
    config = OracleConfig(
        2, PulseSchedule(2.0 * TAU0, 3.1, out.amps), GatePair(1, 2), nbar=1.0
    )
    report = thermal_fidelity(config, crystal2)
    assert report.abs_difference_exact_decay < 1e-4
    # the design metric deliberately decays 4x slower; at this operating
    # point the gap is macroscopic
    assert report.abs_difference > 1e-2


def test_mode_factorization():
    """Joint two-mode integration agrees with per-mode factors."""
    from scipy.integrate import solve_ivp

    from iongate.crystal import ModeSet
    from iongate.gate import GateModel

    freqs = np.array([1.0, 1.6])
    vecs = np.array([[0.8, 0.3], [0.6, -0.9]])
    modes = ModeSet(
        eigenvalues=freqs**2,
        frequencies=freqs,
        vectors=vecs,
        couplings=vecs / np.sqrt(2.0 * freqs),
    )
    model = GateModel(modes, GatePair(1, 2), 0.8 * TAU0, 1.9, 1)
    out = model.outcome(np.ones(1), normalize=True)
    amps = out.amps
    signs = (1, 1)
    dim = 18
    per_mode = evolve_branch(model, amps, signs, (0, 0), cutoff=dim)
    product = np.kron(per_mode[0], per_mode[1])

    freqs = model.modes.frequencies
    coefs = signs[0] * model.g_i + signs[1] * model.g_j
    sched = PulseSchedule(model.tau, model.mu, amps)
    root = np.sqrt(np.arange(1, dim))

    def ladder(psi2, k, conj):
        psi2 = psi2.reshape(dim, dim)
        out2 = np.zeros_like(psi2)
        if k == 0:
            if conj:
                out2[1:, :] = root[:, None] * psi2[:-1, :]
            else:
                out2[:-1, :] = root[:, None] * psi2[1:, :]
        else:
            if conj:
                out2[:, 1:] = root[None, :] * psi2[:, :-1]
            else:
                out2[:, :-1] = root[None, :] * psi2[:, 1:]
        return out2

    def rhs(t, flat):
        psi2 = flat.view(complex).reshape(dim, dim)
        dpsi = np.zeros_like(psi2)
        f = sched.force(t)
        for k in range(2):
            phase = np.exp(1j * freqs[k] * t)
            dpsi += 1j * coefs[k] * f * (
                phase * ladder(psi2, k, True) + ladder(psi2, k, False) / phase
            )
        return dpsi.ravel().view(float)

    start = np.zeros((dim, dim), complex)
    start[0, 0] = 1.0
    sol = solve_ivp(
        rhs, (0.0, model.tau), start.ravel().view(float),
        method="DOP853", rtol=1e-10, atol=1e-12,
    )
    joint = sol.y[:, -1].view(complex)
    assert np.max(np.abs(joint - product)) < 1e-8


def test_cutoff_convergence_trace(crystal2):
    model = build_model(crystal2, GatePair(1, 2), 1.5 * TAU0, 2.6, 1, nbar=1.0)
    out = model.outcome(np.ones(1), normalize=True)
    config = OracleConfig(
        2, PulseSchedule(1.5 * TAU0, 2.6, out.amps), GatePair(1, 2), nbar=1.0,
        fock_cutoff=24,
    )
    report = thermal_fidelity(config, crystal2)
    assert len(report.convergence) >= 2
    assert abs(report.convergence[-1][1] - report.convergence[-2][1]) < 1e-6
    blob = report.to_json_dict()
    assert set(blob) == {
        "fidelity_numeric",
        "fidelity_analytic",
        "abs_difference",
        "fidelity_analytic_exact_decay",
        "abs_difference_exact_decay",
        "convergence",
    }
