"""Brute-force verification by direct Schrodinger integration.

For a small chain the driven Hamiltonian is block diagonal over the four
spin-sign branches (s_i, s_j) of the gate pair, and within a branch it is
diagonal over modes, so each (branch, mode) factor is a driven oscillator
integrated exactly in a truncated Fock space. Thermal averaging is an
explicit Boltzmann-weighted sum over initial occupations. Nothing here uses
the closed-form displacement or phase expressions, which makes this module
the referee for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from iongate.crystal import Crystal
from iongate.gate import GateModel, GatePair, build_model, fidelity_exact
from iongate.pulses import PulseSchedule

_BRANCHES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class CutoffError(RuntimeError):
    """Fock cutoff or integrator tolerance insufficient."""


@dataclass(frozen=True)
class OracleConfig:
    """One brute-force verification run."""

    n_ions: int
    schedule: PulseSchedule
    pair: GatePair
    nbar: float = 0.0
    fock_cutoff: int = 40
    thermal_tail: float = 1e-7
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be at least 2")
        if not 0.0 < self.thermal_tail < 0.1:
            raise ValueError("thermal_tail must lie in (0, 0.1)")


@dataclass(frozen=True)
class OracleReport:
    """Numeric vs closed-form fidelity for one configuration."""

    fidelity_numeric: float
    fidelity_analytic: float
    abs_difference: float
    fidelity_analytic_exact_decay: float
    abs_difference_exact_decay: float
    convergence: tuple[tuple[int, float], ...] = field(default=())

    def to_json_dict(self) -> dict:
        return {
            "fidelity_numeric": self.fidelity_numeric,
            "fidelity_analytic": self.fidelity_analytic,
            "abs_difference": self.abs_difference,
            "fidelity_analytic_exact_decay": self.fidelity_analytic_exact_decay,
            "abs_difference_exact_decay": self.abs_difference_exact_decay,
            "convergence": [[int(n), float(f)] for n, f in self.convergence],
        }


def _propagate(
    schedule: PulseSchedule,
    omega: float,
    force_coef: float,
    cutoff: int,
    n_columns: int,
    rtol: float,
    atol: float,
) -> np.ndarray:
    """Columns 0..n_columns-1 of the propagator of one driven mode.

    H(t) = -force_coef * F(t) * (a^dag e^{i omega t} + a e^{-i omega t}),
    integrated over [0, tau] in a Fock space of dimension ``cutoff``.
    """
    if force_coef == 0.0:
        return np.eye(cutoff, n_columns, dtype=complex)
    root = np.sqrt(np.arange(1, cutoff))
    shape = (cutoff, n_columns)

    def rhs(t: float, flat: np.ndarray) -> np.ndarray:
        psi = flat.view(complex).reshape(shape)
        drive = 1j * force_coef * schedule.force(t)
        out = np.zeros_like(psi)
        phase = np.exp(1j * omega * t)
        out[1:, :] = (drive * phase) * root[:, None] * psi[:-1, :]
        out[:-1, :] += (drive / phase) * root[:, None] * psi[1:, :]
        return out.ravel().view(float)

    start = np.eye(cutoff, n_columns, dtype=complex).ravel().view(float)
    sol = solve_ivp(
        rhs, (0.0, schedule.tau), start, method="DOP853", rtol=rtol, atol=atol
    )
    if not sol.success:
        raise CutoffError(f"integrator failed: {sol.message}")
    return sol.y[:, -1].view(complex).reshape(shape)


def _branch_coefs(model: GateModel, signs: tuple[int, int]) -> np.ndarray:
    return signs[0] * model.g_i + signs[1] * model.g_j


def evolve_branch(
    model: GateModel,
    amps: np.ndarray,
    signs: tuple[int, int],
    initial: tuple[int, ...],
    cutoff: int = 40,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> list[np.ndarray]:
    """Evolve one spin branch from a product Fock state, one vector per mode.

    The Hamiltonian does not couple modes, so the product structure is
    preserved; the branch state is the tensor product of the returned
    vectors. Raises if the truncation bleeds more than 1e-6 of the norm.
    """
    schedule = PulseSchedule(model.tau, model.mu, amps)
    coefs = _branch_coefs(model, signs)
    states = []
    for k, wk in enumerate(model.modes.frequencies):
        n0 = initial[k]
        if n0 >= cutoff:
            raise ValueError(f"initial occupation {n0} exceeds cutoff {cutoff}")
        prop = _propagate(schedule, wk, coefs[k], cutoff, n0 + 1, rtol, atol)
        psi = prop[:, n0]
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > 1e-6:
            raise CutoffError(
                f"cutoff or tolerance insufficient: norm drift {drift:.2e} "
                f"in mode {k} at cutoff {cutoff}"
            )
        states.append(psi)
    return states


def _thermal_weights(omega: float, nbar_com: float, tail: float) -> np.ndarray:
    """Boltzmann weights of one mode, truncated to total tail mass < tail."""
    if nbar_com == 0.0:
        return np.array([1.0])
    q = (1.0 + 1.0 / nbar_com) ** (-omega)
    n_keep = max(1, int(np.ceil(np.log(tail) / np.log(q))))
    weights = (1.0 - q) * q ** np.arange(n_keep + 1)
    return weights / weights.sum()


def _numeric_fidelity(
    model: GateModel, amps: np.ndarray, config: OracleConfig, cutoff: int
) -> float:
    """Thermally averaged overlap with the ideal gate output, brute force."""
    schedule = PulseSchedule(model.tau, model.mu, amps)
    weights = [
        _thermal_weights(wk, config.nbar, config.thermal_tail)
        for wk in model.modes.frequencies
    ]
    props: dict[tuple[int, int], list[np.ndarray]] = {}
    for signs in _BRANCHES:
        coefs = _branch_coefs(model, signs)
        mats = []
        for k, wk in enumerate(model.modes.frequencies):
            ncols = weights[k].size
            if ncols + 8 > cutoff:
                raise CutoffError(
                    f"cutoff {cutoff} too small for {ncols} thermal levels"
                )
            mat = _propagate(
                schedule, wk, coefs[k], cutoff, ncols, config.rtol, config.atol
            )
            drift = np.max(np.abs(np.linalg.norm(mat, axis=0) - 1.0))
            if drift > 1e-6:
                raise CutoffError(
                    f"cutoff or tolerance insufficient: norm drift {drift:.2e}"
                )
            mats.append(mat)
        props[signs] = mats

    total = 0.0 + 0.0j
    for s in _BRANCHES:
        for sp in _BRANCHES:
            ideal = np.exp(-1j * np.pi * (s[0] * s[1] - sp[0] * sp[1]) / 4.0)
            factor = 1.0 + 0.0j
            for k in range(model.modes.n_modes):
                cols = np.sum(np.conj(props[sp][k]) * props[s][k], axis=0)
                factor *= np.sum(weights[k] * cols)
            total += ideal * factor
    return float(np.real(total) / 16.0)


def thermal_fidelity(
    config: OracleConfig,
    crystal: Crystal | None = None,
    max_rounds: int = 6,
) -> OracleReport:
    """Brute-force fidelity with cutoff escalation, against the closed forms.

    The cutoff grows until two consecutive estimates differ by less than
    1e-6; the report carries the whole convergence trace plus the comparison
    with both closed-form decay laws evaluated at the same raw schedule.
    """
    if crystal is None:
        crystal = Crystal.build(config.n_ions)
    model = build_model(
        crystal,
        config.pair,
        config.schedule.tau,
        config.schedule.mu,
        config.schedule.segments,
        config.nbar,
    )
    amps = config.schedule.amps
    trace: list[tuple[int, float]] = []
    cutoff = config.fock_cutoff
    previous = None
    for _ in range(max_rounds):
        try:
            value = _numeric_fidelity(model, amps, config, cutoff)
        except CutoffError:
            cutoff += max(16, cutoff // 2)
            continue
        trace.append((cutoff, value))
        if previous is not None and abs(value - previous) < 1e-6:
            break
        previous = value
        cutoff += max(16, cutoff // 2)
    else:
        raise CutoffError(
            f"no cutoff convergence after {max_rounds} rounds; trace {trace}"
        )

    outcome = model.outcome(amps, normalize=False)
    analytic = outcome.fidelity
    analytic_exact = fidelity_exact(outcome, model.betas)
    numeric = trace[-1][1]
    return OracleReport(
        fidelity_numeric=numeric,
        fidelity_analytic=analytic,
        abs_difference=abs(numeric - analytic),
        fidelity_analytic_exact_decay=analytic_exact,
        abs_difference_exact_decay=abs(numeric - analytic_exact),
        convergence=tuple(trace),
    )
