"""Segment-amplitude optimization for the conditional-phase gate.

Three layers, all deterministic:

* ``exact_null``         - with m = 2K+1 segments the K complex closure
                           constraints are a square linear system in the
                           amplitude ratios; every mode returns to the origin.
* ``surrogate_optimize`` - for smaller m, minimize the leading-order
                           infidelity (a positive quadratic form in the
                           amplitudes) at fixed conditional phase. The
                           stationary points are generalized eigenvectors;
                           each candidate is rescaled onto the pi/4 target
                           and scored with the full fidelity metric.
* ``refine``             - derivative-free polish of the full fidelity over
                           the amplitude ratios, for the regime where the
                           residuals are not small.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize as sciopt

from iongate.crystal import Crystal
from iongate.gate import GateModel, GatePair, _decay_fidelity, build_model

_NULL_REL_TOL = 1e-12


class DegenerateConstraintsError(np.linalg.LinAlgError):
    """The closure constraint system cannot be satisfied."""


@dataclass(frozen=True)
class OptimizeSpec:
    """One amplitude-optimization problem."""

    n_ions: int
    pair: GatePair
    tau: float
    mu: float
    segments: int
    nbar: float = 0.0
    scope: int | None = None        # None = full chain, n = n moving neighbors
    refine: bool = False
    objective: str = "surrogate"    # "surrogate" or "exact" (forces refinement)

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError("need at least one segment")
        if self.mu <= 0:
            raise ValueError("detuning must be positive")
        if self.objective not in ("surrogate", "exact"):
            raise ValueError(f"unknown objective {self.objective!r}")

    @property
    def want_refine(self) -> bool:
        return self.refine or self.objective == "exact"

    def scope_label(self) -> str:
        return "full" if self.scope is None else f"n={self.scope}"


@dataclass(frozen=True)
class OptimizeResult:
    """Normalized amplitude sequence with its scores and diagnostics."""

    amps: np.ndarray
    fidelity: float
    surrogate_infidelity: float
    mu: float
    tau: float
    segments: int
    scope: str
    eigenvalue: float | None = None
    refine_steps: int = 0

    def ratios(self) -> np.ndarray:
        """Amplitudes normalized to the first segment."""
        return self.amps / self.amps[0]

    def to_json_dict(self) -> dict:
        return {
            "amps": self.amps.tolist(),
            "fidelity": self.fidelity,
            "mu": self.mu,
            "tau_over_tau0": self.tau / (2.0 * np.pi),
            "segments": self.segments,
            "scope": self.scope,
        }


def neighbor_moving_set(pair: GatePair, n_neighbors: int, n_ions: int) -> tuple[int, ...]:
    """The gate pair plus its ``n_neighbors`` closest ions, by index distance."""
    if n_neighbors < 0 or n_neighbors > n_ions - 2:
        raise ValueError(f"need 0 <= n <= {n_ions - 2}, got {n_neighbors}")
    others = [k for k in range(1, n_ions + 1) if k not in (pair.i, pair.j)]
    others.sort(key=lambda k: (min(abs(k - pair.i), abs(k - pair.j)), k))
    return tuple(sorted((pair.i, pair.j, *others[:n_neighbors])))


def _constraint_matrix(model: GateModel) -> np.ndarray:
    """Real (2K, m) matrix of the per-mode closure constraints."""
    return np.vstack([model.moments.T.real, model.moments.T.imag])


def exact_null(model: GateModel) -> np.ndarray:
    """Amplitude ratios closing every mode's loop, first segment fixed at 1.

    Requires m = 2K+1 segments for K modes; the null direction of the real
    constraint matrix is taken from its SVD and rescaled onto f_1 = 1.
    Raises if the system is degenerate at this detuning (the closure
    solution carries no weight on the first segment, so the ratios blow up).
    """
    k = model.modes.n_modes
    m = model.segments
    if m != 2 * k + 1:
        raise ValueError(f"exact null needs m = 2K+1 = {2 * k + 1} segments, got {m}")
    c = _constraint_matrix(model)
    _, _, vt = np.linalg.svd(c)
    vec = vt[-1]
    if abs(vec[0]) < 1e-12 * np.max(np.abs(vec)):
        # attribute the pinned first segment to the mode whose response
        # concentrates there
        conc = np.abs(model.moments[0, :]) / np.maximum(
            np.linalg.norm(model.moments, axis=0), 1e-300
        )
        worst = int(np.argmax(conc))
        raise DegenerateConstraintsError(
            f"degenerate closure system at mu={model.mu:g}: mode {worst} pins "
            "the first segment to zero, ratios to it are undefined"
        )
    ratios = vec / vec[0]
    residual = np.abs(model.moments.T @ ratios)
    scale = max(np.max(np.abs(model.moments)), 1e-300)
    if np.max(residual) > 1e-10 * scale * max(1.0, np.max(np.abs(ratios))):
        worst = int(np.argmax(residual))
        raise DegenerateConstraintsError(
            f"closure constraints unsatisfiable at mu={model.mu:g}: mode {worst} "
            f"keeps residual {residual[worst]:.3e}"
        )
    return ratios


def _surrogate_quadratic(model: GateModel) -> np.ndarray:
    """(m, m) matrix of the leading-order infidelity quadratic form."""
    w = model.betas * (model.g_i**2 + model.g_j**2)          # (K,)
    return 0.25 * np.real((model.moments * w) @ model.moments.conj().T)


def _score(model: GateModel, amps: np.ndarray) -> tuple[float, float]:
    """(fidelity, required amplitude) of the pi/4-normalized schedule."""
    phi = model.phase(amps)
    if phi == 0.0:
        return -1.0, np.inf
    scaled = amps * np.sqrt((np.pi / 4.0) / abs(phi))
    a_i, a_j = model.displacements(scaled)
    fid = _decay_fidelity(a_i, a_j, model.betas, np.pi / 4.0, exponent=0.5)
    return fid, float(abs(scaled[0]))


def surrogate_optimize(model: GateModel) -> OptimizeResult:
    """Best amplitude vector from the quadratic surrogate, scored exactly.

    Exact-closure directions (null space of the surrogate form) win when they
    carry conditional phase; otherwise every generalized eigenvector with a
    nonzero phase is rescaled onto pi/4 and the highest-fidelity one is kept,
    ties broken by the smaller required first-segment amplitude.
    """
    m = model.segments
    quad = _surrogate_quadratic(model)
    kernel = np.tensordot(model.pair_weights, model.kernels, axes=(0, 0))
    kernel_scale = max(np.max(np.abs(kernel)), 1e-300)

    candidates: list[tuple[np.ndarray, float | None]] = []
    vals, vecs = np.linalg.eigh(quad)
    null_mask = vals < max(vals[-1], 1e-300) * 1e-10
    if np.any(null_mask):
        basis = vecs[:, null_mask]
        proj = basis.T @ kernel @ basis
        pvals, pvecs = np.linalg.eigh(proj)
        lead = int(np.argmax(np.abs(pvals)))
        if abs(pvals[lead]) > kernel_scale * _NULL_REL_TOL:
            candidates.append((basis @ pvecs[:, lead], 0.0))
    if not candidates:
        regular = quad if vals[0] > vals[-1] * 1e-10 else quad + np.eye(m) * (
            max(vals[-1], 1e-300) * 1e-10
        )
        try:
            gvals, gvecs = linalg.eigh(kernel, regular)
        except np.linalg.LinAlgError:
            gvals, gvecs = np.empty(0), np.empty((m, 0))
        for col in range(gvecs.shape[1]):
            candidates.append((gvecs[:, col], float(gvals[col])))

    best = None
    for vec, eig in candidates:
        phi = model.phase(vec)
        if abs(phi) < kernel_scale * np.sum(vec**2) * _NULL_REL_TOL:
            continue  # phase-null candidate, unusable
        fid, amp1 = _score(model, vec)
        key = (-fid, amp1)
        if best is None or key < best[0]:
            best = (key, vec, eig)
    if best is None:
        raise DegenerateConstraintsError(
            f"every surrogate candidate is phase-null at mu={model.mu:g}"
        )
    _, vec, eig = best
    outcome = model.outcome(vec, normalize=True)
    return OptimizeResult(
        amps=outcome.amps,
        fidelity=outcome.fidelity,
        surrogate_infidelity=float(outcome.amps @ _surrogate_quadratic(model) @ outcome.amps),
        mu=model.mu,
        tau=model.tau,
        segments=m,
        scope="full" if model.modes.ions is None else f"n={len(model.modes.ions) - 2}",
        eigenvalue=eig,
    )


def refine(result: OptimizeResult, model: GateModel, max_evals: int = 2000) -> OptimizeResult:
    """Polish the full fidelity over the ratios f_2..f_m, first segment fixed.

    Deterministic Nelder-Mead from the given result; stops on simplex size
    1e-8 or ``max_evals`` evaluations, and never returns a worse result.
    """
    m = model.segments
    if m == 1:
        return result
    amps0 = result.amps
    if abs(amps0[0]) < 1e-8 * np.max(np.abs(amps0)):
        return result  # ratio parametrization ill-conditioned here
    x0 = amps0[1:] / amps0[0]

    def objective(x: np.ndarray) -> float:
        return 1.0 - model.fidelity_of(np.concatenate(([1.0], x)))

    sol = sciopt.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "maxfev": max_evals,
            "xatol": 1e-8,
            "fatol": 1e-14,
            "initial_simplex": None,
        },
    )
    refined = np.concatenate(([1.0], sol.x))
    outcome = model.outcome(refined, normalize=True)
    if outcome.fidelity <= result.fidelity:
        return result
    return OptimizeResult(
        amps=outcome.amps,
        fidelity=outcome.fidelity,
        surrogate_infidelity=float(
            outcome.amps @ _surrogate_quadratic(model) @ outcome.amps
        ),
        mu=model.mu,
        tau=model.tau,
        segments=m,
        scope=result.scope,
        eigenvalue=result.eigenvalue,
        refine_steps=int(sol.nfev),
    )


def optimize(spec: OptimizeSpec, crystal: Crystal | None = None) -> OptimizeResult:
    """Run the full pipeline described by ``spec``."""
    if crystal is None:
        crystal = Crystal.build(spec.n_ions)
    moving = (
        None
        if spec.scope is None
        else neighbor_moving_set(spec.pair, spec.scope, crystal.n_ions)
    )
    model = build_model(
        crystal, spec.pair, spec.tau, spec.mu, spec.segments, spec.nbar, moving
    )
    result = surrogate_optimize(model)
    if spec.want_refine:
        result = refine(result, model)
    return result
