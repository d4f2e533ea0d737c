"""Phase-space displacements, conditional phase, and thermal gate fidelity.

A schedule drives the pair with the identical force F(t) on both ions. Each
mode k picks up a displacement alpha_n^k = i g_n^k * sum_p amps[p] G_{p,k}
per ion and the pair accumulates the conditional phase x^T K x, quadratic in
the amplitudes. The gate target is a conditional phase of pi/4 with all
displacements back at the origin.

Two fidelity metrics are provided:

* ``fidelity``       - the design metric used by every optimizer and sweep,
                       Gamma_x = exp(-sum_k beta_k |alpha_x^k|^2 / 2);
* ``fidelity_exact`` - the decay law of exact Schrodinger evolution under
                       the +/-1 spin-sign convention, whose exponents are 4x
                       larger. The brute-force integrator in
                       :mod:`iongate.oracle` reproduces this one to ~1e-6.

Both share the corrected overall normalization (perfect closure gives 1, a
fully scrambled motional register gives 1/4).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from iongate.crystal import Crystal, ModeSet, thermal_betas
from iongate.pulses import PulseSchedule, all_moments, mode_phase_kernels

TAU0 = 2.0 * np.pi


class PhaseNullError(ValueError):
    """The schedule accumulates no conditional phase; nothing to normalize."""


@dataclass(frozen=True)
class GatePair:
    """Gate ion labels, 1-based (ion 1 is the leftmost)."""

    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("gate ions must be distinct")
        if self.i < 1 or self.j < 1:
            raise ValueError("ion labels are 1-based")

    def validate(self, n_ions: int) -> None:
        if self.i > n_ions or self.j > n_ions:
            raise ValueError(f"pair {(self.i, self.j)} out of range 1..{n_ions}")


@dataclass(frozen=True)
class GateOutcome:
    """Result of running one schedule on one pair."""

    alpha_i: np.ndarray
    alpha_j: np.ndarray
    phi_per_mode: np.ndarray
    phi_total: float
    fidelity: float
    amp_scale: float
    required_amp: float
    amps: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "alpha_i_re": self.alpha_i.real.tolist(),
            "alpha_i_im": self.alpha_i.imag.tolist(),
            "alpha_j_re": self.alpha_j.real.tolist(),
            "alpha_j_im": self.alpha_j.imag.tolist(),
            "phi_per_mode": self.phi_per_mode.tolist(),
            "phi_total": self.phi_total,
            "fidelity": self.fidelity,
            "amp_scale": self.amp_scale,
            "required_amp": self.required_amp,
        }


class GateModel:
    """Precomputed integrals for one (mode set, pair, tau, mu, m) geometry.

    Everything downstream of the segment amplitudes is linear algebra on the
    cached moment matrix and phase kernels, which keeps amplitude
    optimization loops cheap.
    """

    def __init__(
        self,
        modes: ModeSet,
        pair: GatePair,
        tau: float,
        mu: float,
        segments: int,
        nbar: float = 0.0,
    ):
        if tau <= 0 or mu <= 0 or segments < 1:
            raise ValueError("need tau > 0, mu > 0, segments >= 1")
        self.modes = modes
        self.pair = pair
        self.tau = tau
        self.mu = mu
        self.segments = segments
        self.nbar = nbar
        self.g_i = modes.coupling_row(pair.i)
        self.g_j = modes.coupling_row(pair.j)
        self.betas = thermal_betas(nbar, modes)
        probe = PulseSchedule(tau, mu, np.ones(segments))
        self.moments = all_moments(probe, modes)                    # (m, K)
        self.kernels = mode_phase_kernels(tau, segments, mu, modes)  # (K, m, m)
        self.pair_weights = 2.0 * self.g_i * self.g_j               # (K,)

    def displacements(self, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-mode displacements of each gate ion for the given amplitudes."""
        drive = amps @ self.moments                                 # (K,)
        return 1j * self.g_i * drive, 1j * self.g_j * drive

    def phase_per_mode(self, amps: np.ndarray) -> np.ndarray:
        quad = np.einsum("p,kpq,q->k", amps, self.kernels, amps)
        return self.pair_weights * quad

    def phase(self, amps: np.ndarray) -> float:
        return float(np.sum(self.phase_per_mode(amps)))

    def outcome(self, amps: np.ndarray, normalize: bool = True) -> GateOutcome:
        """Evaluate the schedule; optionally rescale it onto the pi/4 target."""
        amps = np.asarray(amps, float)
        phi_modes = self.phase_per_mode(amps)
        phi = float(np.sum(phi_modes))
        scale = 1.0
        if normalize:
            if phi == 0.0:
                raise PhaseNullError("phase-null schedule")
            scale = float(np.sqrt((np.pi / 4.0) / abs(phi)))
            amps = amps * scale
            phi_modes = phi_modes * scale**2
            if phi < 0.0:
                # relabeling one qubit's basis states flips every conditional
                # phase sign at identical cost, so report the +pi/4 gauge
                phi_modes = -phi_modes
            phi = float(np.sum(phi_modes))
        a_i, a_j = self.displacements(amps)
        fid = _decay_fidelity(a_i, a_j, self.betas, phi, exponent=0.5)
        return GateOutcome(
            alpha_i=a_i,
            alpha_j=a_j,
            phi_per_mode=phi_modes,
            phi_total=phi,
            fidelity=fid,
            amp_scale=scale,
            required_amp=float(abs(amps[0])),
            amps=amps,
        )

    def fidelity_of(self, amps: np.ndarray) -> float:
        """Fast path: design fidelity of the pi/4-normalized schedule."""
        phi = self.phase(amps)
        if phi == 0.0:
            return 0.0
        amps = amps * np.sqrt((np.pi / 4.0) / abs(phi))
        a_i, a_j = self.displacements(amps)
        return _decay_fidelity(a_i, a_j, self.betas, np.pi / 4.0, exponent=0.5)


def build_model(
    crystal: Crystal,
    pair: GatePair,
    tau: float,
    mu: float,
    segments: int = 1,
    nbar: float = 0.0,
    moving_set: tuple[int, ...] | None = None,
) -> GateModel:
    """GateModel over the full chain or over a pinned-background subset."""
    pair.validate(crystal.n_ions)
    if moving_set is None:
        modes = crystal.modes
    else:
        from iongate.crystal import restricted_modes

        modes = restricted_modes(crystal, moving_set, require_ions=(pair.i, pair.j))
    return GateModel(modes, pair, tau, mu, segments, nbar)


def _as_modes(source: Crystal | ModeSet) -> ModeSet:
    return source.modes if isinstance(source, Crystal) else source


def mode_displacements(
    schedule: PulseSchedule, source: Crystal | ModeSet, ion: int
) -> np.ndarray:
    """Displacement left in every mode by the schedule acting on one ion."""
    modes = _as_modes(source)
    g = modes.coupling_row(ion)
    return 1j * g * (schedule.amps @ all_moments(schedule, modes))


def conditional_phase(
    schedule: PulseSchedule, source: Crystal | ModeSet, pair: GatePair
) -> tuple[float, np.ndarray]:
    """Total conditional phase and its per-mode breakdown."""
    modes = _as_modes(source)
    kernels = mode_phase_kernels(schedule.tau, schedule.segments, schedule.mu, modes)
    weights = 2.0 * modes.coupling_row(pair.i) * modes.coupling_row(pair.j)
    per_mode = weights * np.einsum(
        "p,kpq,q->k", schedule.amps, kernels, schedule.amps
    )
    return float(np.sum(per_mode)), per_mode


def normalize_phase(outcome: GateOutcome) -> GateOutcome:
    """Rescale an outcome so the conditional phase is exactly +pi/4."""
    phi = outcome.phi_total
    if phi == 0.0:
        raise PhaseNullError("phase-null schedule")
    scale = float(np.sqrt((np.pi / 4.0) / abs(phi)))
    sign = 1.0 if phi > 0 else -1.0
    return replace(
        outcome,
        alpha_i=outcome.alpha_i * scale,
        alpha_j=outcome.alpha_j * scale,
        phi_per_mode=outcome.phi_per_mode * sign * scale**2,
        phi_total=float(abs(phi) * scale**2),
        amp_scale=outcome.amp_scale * scale,
        required_amp=outcome.required_amp * scale,
        amps=outcome.amps * scale,
    )


def _decay_fidelity(
    alpha_i: np.ndarray,
    alpha_j: np.ndarray,
    betas: np.ndarray,
    phi_total: float,
    exponent: float,
) -> float:
    """Shared fidelity expression; ``exponent`` scales |alpha|^2 in the decay."""

    def decay(a: np.ndarray) -> float:
        return float(np.exp(-exponent * np.sum(betas * np.abs(a) ** 2)))

    g_i = decay(alpha_i)
    g_j = decay(alpha_j)
    g_plus = decay(alpha_i + alpha_j)
    g_minus = decay(alpha_i - alpha_j)
    phase_match = np.cos(2.0 * (phi_total - np.pi / 4.0))
    return float((2.0 + 2.0 * phase_match * (g_i + g_j) + g_plus + g_minus) / 8.0)


def fidelity(outcome: GateOutcome, betas: np.ndarray) -> float:
    """Design-metric gate fidelity of a (normalized) outcome.

    Decay exponents are beta_k |alpha|^2 / 2 per displacement; the overall
    normalization gives 1 for perfect closure and 1/4 for a completely
    scrambled motional register.
    """
    return _decay_fidelity(
        outcome.alpha_i, outcome.alpha_j, betas, outcome.phi_total, exponent=0.5
    )


def fidelity_exact(outcome: GateOutcome, betas: np.ndarray) -> float:
    """Exact-evolution gate fidelity of a (normalized) outcome.

    This is the decay law the brute-force Schrodinger integrator reproduces:
    branch displacements are s_i alpha_i + s_j alpha_j with spin signs +/-1,
    so each pairwise coherence decays with exponent 2 beta_k |alpha|^2, four
    times the design-metric rate.
    """
    return _decay_fidelity(
        outcome.alpha_i, outcome.alpha_j, betas, outcome.phi_total, exponent=2.0
    )


def spectator_fraction(outcome: GateOutcome, com_index: int = 0) -> float:
    """Share of the conditional phase carried by the non-uniform modes."""
    if outcome.phi_total == 0.0:
        raise PhaseNullError("phase-null schedule")
    others = np.sum(np.delete(outcome.phi_per_mode, com_index))
    return float(others / outcome.phi_total)
