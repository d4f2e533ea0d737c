"""Linear Coulomb crystal: equilibrium positions, normal modes, thermal factors.

Dimensionless trap units throughout (hbar = M = omega = 1). Axial modes only.
Ion labels at the public surface are 1-based, matching the data formats; the
arrays underneath are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EquilibriumError(RuntimeError):
    """Newton iteration for the equilibrium positions failed to converge."""


@dataclass(frozen=True)
class CrystalConfig:
    """Chain size; the unit convention (hbar = M = omega = 1) is implicit."""

    n_ions: int

    def __post_init__(self):
        if self.n_ions < 2:
            raise ValueError(f"need at least 2 ions, got {self.n_ions}")


@dataclass(frozen=True)
class ModeSet:
    """Axial normal modes of a chain (or of a pinned sub-chain).

    eigenvalues : (K,) dimensionless, ascending (trap mode has value 1)
    frequencies : (K,) sqrt(eigenvalues), in units of omega
    vectors     : (N, K) orthonormal columns, sign fixed so the largest
                  magnitude component of each column is positive
    couplings   : (N, K) vectors / sqrt(2 * frequencies)
    ions        : 1-based labels of the rows; None means the full chain
    """

    eigenvalues: np.ndarray
    frequencies: np.ndarray
    vectors: np.ndarray
    couplings: np.ndarray
    ions: tuple[int, ...] | None = None

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def coupling_row(self, ion: int) -> np.ndarray:
        """Coupling constants of one ion (1-based label) to every mode."""
        if self.ions is None:
            return self.couplings[ion - 1]
        try:
            row = self.ions.index(ion)
        except ValueError:
            raise ValueError(f"ion {ion} is not part of this mode set") from None
        return self.couplings[row]


@dataclass(frozen=True)
class Crystal:
    """Equilibrium chain with its coupling matrix and normal modes."""

    n_ions: int
    positions: np.ndarray
    coupling: np.ndarray
    modes: ModeSet = field(repr=False)

    @classmethod
    def build(cls, n_ions: int) -> "Crystal":
        u = solve_equilibrium(n_ions)
        a = build_coupling(u)
        return cls(n_ions=n_ions, positions=u, coupling=a, modes=solve_modes(a))

    def local_frequencies(self) -> np.ndarray:
        return np.sqrt(np.diag(self.coupling))

    def to_json_dict(self) -> dict:
        return {
            "n": self.n_ions,
            "positions": self.positions.tolist(),
            "mode_eigenvalues": self.modes.eigenvalues.tolist(),
            "mode_vectors": self.modes.vectors.tolist(),
            "local_frequencies": self.local_frequencies().tolist(),
        }


def _force_residual(u: np.ndarray) -> np.ndarray:
    """Net dimensionless force on each ion: trap pull plus Coulomb pushes."""
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def solve_equilibrium(n_ions: int, tol: float = 1e-13, max_iter: int = 200) -> np.ndarray:
    """Equilibrium positions of ``n_ions`` ions in a harmonic axial trap.

    Damped Newton iteration on the force balance, started from the
    asymptotic spacing heuristic. The Jacobian of the residual is exactly
    the mode coupling matrix, so it is reused here.

    Returns positions sorted ascending; they are antisymmetric about the
    trap center, and the final residual is below 1e-12 on every ion.
    """
    if n_ions < 2:
        raise ValueError(f"need at least 2 ions, got {n_ions}")
    idx = np.arange(1, n_ions + 1)
    u = 2.018 * (idx - (n_ions + 1) / 2) / n_ions**0.559
    res = _force_residual(u)
    norm = np.max(np.abs(res))
    for _ in range(max_iter):
        if norm < tol:
            break
        step = np.linalg.solve(build_coupling(u), res)
        scale = 1.0
        for _ in range(60):
            trial = u - scale * step
            if np.all(np.diff(trial) > 0):
                trial_res = _force_residual(trial)
                trial_norm = np.max(np.abs(trial_res))
                if trial_norm < norm:
                    break
            scale *= 0.5
        else:
            # large chains bottom out against the rounding floor of the
            # Coulomb sums slightly above tol; accept if the contract holds
            if norm < 1e-12:
                break
            raise EquilibriumError(
                f"line search stalled for N={n_ions}, residual norm {norm:.3e}"
            )
        u, res, norm = trial, trial_res, trial_norm
    else:
        raise EquilibriumError(
            f"no convergence after {max_iter} iterations for N={n_ions}, "
            f"residual norm {norm:.3e}"
        )
    # the potential is reflection-symmetric; remove the last rounding skew
    u = 0.5 * (u - u[::-1])
    if np.max(np.abs(_force_residual(u))) > 1e-12:
        raise EquilibriumError(f"symmetrized residual above 1e-12 for N={n_ions}")
    return u


def build_coupling(positions: np.ndarray) -> np.ndarray:
    """Symmetric mode coupling matrix of a chain at the given positions.

    Off-diagonal entries are -2/|u_l - u_n|^3; each diagonal entry is 1 plus
    the same Coulomb curvature terms, so every row sums to exactly 1.
    """
    u = np.asarray(positions, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise ValueError("positions must be a 1-d array of at least 2 entries")
    if np.any(np.diff(u) <= 0):
        raise ValueError("positions must be strictly ascending")
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    a = -2.0 / np.abs(d) ** 3
    np.fill_diagonal(a, 1.0 + 2.0 * np.sum(1.0 / np.abs(d) ** 3, axis=1))
    return a


def solve_modes(coupling: np.ndarray, ions: tuple[int, ...] | None = None) -> ModeSet:
    """Eigen-decomposition of a (sub-)coupling matrix into a ModeSet."""
    a = np.asarray(coupling, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("coupling matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("coupling matrix must be symmetric")
    eigval, eigvec = np.linalg.eigh(a)
    # fix each eigenvector's global sign: largest-magnitude component positive
    lead = np.argmax(np.abs(eigvec), axis=0)
    signs = np.sign(eigvec[lead, np.arange(eigvec.shape[1])])
    signs[signs == 0] = 1.0
    eigvec = eigvec * signs[None, :]
    freq = np.sqrt(eigval)
    return ModeSet(
        eigenvalues=eigval,
        frequencies=freq,
        vectors=eigvec,
        couplings=eigvec / np.sqrt(2.0 * freq)[None, :],
        ions=ions,
    )


def local_frequency(crystal: Crystal, ion: int) -> float:
    """Oscillation frequency of one ion (1-based) with all others pinned."""
    if not 1 <= ion <= crystal.n_ions:
        raise ValueError(f"ion index {ion} out of range 1..{crystal.n_ions}")
    return float(np.sqrt(crystal.coupling[ion - 1, ion - 1]))


def restricted_modes(
    crystal: Crystal,
    moving_set: tuple[int, ...],
    require_ions: tuple[int, ...] = (),
) -> ModeSet:
    """Modes of the sub-chain where only ``moving_set`` (1-based) may move.

    The pinned ions still contribute their static curvature through the
    diagonal of the coupling matrix, so this is the eigenproblem of the
    principal submatrix on ``moving_set``.
    """
    ions = tuple(sorted(set(int(i) for i in moving_set)))
    if not ions:
        raise ValueError("moving_set must not be empty")
    for i in ions:
        if not 1 <= i <= crystal.n_ions:
            raise ValueError(f"ion index {i} out of range 1..{crystal.n_ions}")
    for i in require_ions:
        if i not in ions:
            raise ValueError(f"gate ion {i} missing from moving set {ions}")
    sel = np.array(ions) - 1
    sub = crystal.coupling[np.ix_(sel, sel)]
    return solve_modes(sub, ions=ions)


def thermal_betas(nbar_com: float, modes: ModeSet) -> np.ndarray:
    """Thermal weighting factors per mode for a given trap-mode occupation.

    The chain is taken at the temperature at which the lowest (uniform) mode
    holds ``nbar_com`` phonons on average; each mode's factor is
    coth(omega_k / 2 k_B T) >= 1, equal to 1 in the ground state.
    """
    if nbar_com < 0:
        raise ValueError(f"mean occupation must be >= 0, got {nbar_com}")
    if nbar_com == 0:
        return np.ones(modes.n_modes)
    half_log = 0.5 * np.log1p(1.0 / nbar_com)
    return 1.0 / np.tanh(modes.frequencies * half_log)
