"""Segmented sinusoidal drives and their oscillatory time integrals.

The drive is F(t) = amps[p] * sin(mu t) on the p-th of m equal segments of a
gate of duration tau. Everything downstream needs two families of integrals:

* first order, per segment and mode:  integral of sin(mu t) e^{i w t},
* second order, per segment pair:     the time-ordered double integral of
  sin(mu t2) sin(mu t1) sin(w (t2 - t1)).

Both are evaluated in closed form through exponential building blocks that
stay accurate across the resonance mu = w (no catastrophic cancellation and
no discontinuity). Adaptive-quadrature twins of both are provided as an
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from iongate.crystal import ModeSet

_SERIES_CUT = 1e-2  # |lambda * h| below which the inner integral is expanded
_POLY_ORDER = 8     # series terms kept; error < (1e-2)^8 / 9! of the leading one


@dataclass(frozen=True)
class PulseSchedule:
    """Gate drive: duration tau, detuning mu, one amplitude per segment."""

    tau: float
    mu: float
    amps: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        object.__setattr__(self, "amps", np.atleast_1d(np.asarray(self.amps, float)))
        if self.tau <= 0:
            raise ValueError(f"gate time must be positive, got {self.tau}")
        if self.mu <= 0:
            raise ValueError(f"detuning must be positive, got {self.mu}")
        if self.amps.ndim != 1 or self.amps.size < 1:
            raise ValueError("need at least one segment amplitude")

    @property
    def segments(self) -> int:
        return self.amps.size

    def boundaries(self) -> np.ndarray:
        """Segment edges t_p = p tau / m, p = 0..m."""
        return np.arange(self.segments + 1) * (self.tau / self.segments)

    def scaled(self, factor: float) -> "PulseSchedule":
        return PulseSchedule(self.tau, self.mu, self.amps * factor)

    def force(self, t: np.ndarray) -> np.ndarray:
        """F(t) sampled at times t (vectorized); zero outside [0, tau]."""
        t = np.asarray(t, float)
        p = np.clip((t * self.segments / self.tau).astype(int), 0, self.segments - 1)
        out = self.amps[p] * np.sin(self.mu * t)
        return np.where((t < 0) | (t > self.tau), 0.0, out)


def _expm1_over(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z for complex z, stable down to z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-5
    zb = np.where(small, 1.0, z)
    generic = (np.exp(zb) - 1.0) / zb
    series = 1.0 + z / 2.0 + z * z / 6.0 + z**3 / 24.0
    return np.where(small, series, generic)


def _interval_exp(lam: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """integral of e^{i lam t} over [t0, t1], any real lam including 0."""
    h = t1 - t0
    lam = np.asarray(lam, float)
    return np.exp(1j * lam * t0) * h * _expm1_over(1j * lam * h)


def _poly_moments(z: np.ndarray, kmax: int) -> np.ndarray:
    """m_k(z) = integral of x^k e^{z x} over [0, 1], k = 0..kmax, stacked.

    Series for small |z|, upward recurrence otherwise; both vectorized.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty((kmax + 1,) + z.shape, dtype=complex)
    small = np.abs(z) < 2.0
    zs = np.where(small, z, 0.0)
    for k in range(kmax + 1):
        term = np.ones_like(zs)
        acc = term / (k + 1)
        fact = 1.0
        for j in range(1, 36):
            term = term * zs
            fact *= j
            acc = acc + term / (fact * (k + j + 1))
        out[k] = acc
    zb = np.where(small, 1.0, z)
    ez = np.exp(zb)
    cur = (ez - 1.0) / zb
    out[0] = np.where(small, out[0], cur)
    for k in range(1, kmax + 1):
        cur = (ez - k * cur) / zb
        out[k] = np.where(small, out[k], cur)
    return out


def _double_exp_integral(lam2: np.ndarray, lam1: np.ndarray, h: float) -> np.ndarray:
    """J = integral over 0 <= v <= u <= h of e^{i lam2 u} e^{i lam1 v}.

    Difference quotient of interval integrals when |lam1 h| is large enough;
    a short series in lam1 with polynomial moments otherwise.
    """
    lam2, lam1 = np.broadcast_arrays(np.asarray(lam2, float), np.asarray(lam1, float))
    small = np.abs(lam1) * h < _SERIES_CUT
    lam1_safe = np.where(small, 1.0, lam1)
    generic = (_interval_exp(lam1 + lam2, 0.0, h) - _interval_exp(lam2, 0.0, h)) / (
        1j * lam1_safe
    )
    moments = _poly_moments(1j * lam2 * h, _POLY_ORDER + 1)
    series = np.zeros_like(generic)
    z1 = 1j * lam1 * h
    zp = np.ones_like(series)
    fact = 1.0
    for k in range(_POLY_ORDER):
        if k > 0:
            zp = zp * z1
        fact *= k + 1
        series = series + zp / fact * h * h * moments[k + 1]
    return np.where(small, series, generic)


def segment_moment(mu: float, omega, t_start: float, t_end: float):
    """integral of sin(mu t) e^{i omega t} over [t_start, t_end].

    ``mu`` and ``omega`` broadcast; the result is continuous in mu across the
    resonance mu = omega, where the secular i*t/2 branch takes over smoothly.
    """
    if np.any(np.asarray(t_end) < np.asarray(t_start)):
        raise ValueError("t_end must be >= t_start")
    omega = np.asarray(omega, float)
    up = _interval_exp(omega + mu, t_start, t_end)
    down = _interval_exp(omega - mu, t_start, t_end)
    return (up - down) / 2j


def _antiderivative_generic(mu: float, omega: float, t: float) -> complex:
    """Textbook antiderivative of sin(mu t) e^{i omega t}, away from resonance."""
    return (
        np.exp(1j * omega * t)
        * (mu * np.cos(mu * t) - 1j * omega * np.sin(mu * t))
        / (omega**2 - mu**2)
    )


def _antiderivative_resonant(mu: float, t: float) -> complex:
    """Antiderivative of sin(mu t) e^{i mu t}: -e^{2 i mu t}/(4 mu) + i t / 2."""
    return -np.exp(2j * mu * t) / (4.0 * mu) + 0.5j * t


def segment_moment_quadrature(mu: float, omega: float, t_start: float, t_end: float) -> complex:
    """Adaptive-quadrature twin of segment_moment (independent oracle)."""
    re = integrate.quad(
        lambda t: np.sin(mu * t) * np.cos(omega * t), t_start, t_end,
        epsabs=1e-13, epsrel=1e-12, limit=800,
    )[0]
    im = integrate.quad(
        lambda t: np.sin(mu * t) * np.sin(omega * t), t_start, t_end,
        epsabs=1e-13, epsrel=1e-12, limit=800,
    )[0]
    return re + 1j * im


def all_moments(schedule: PulseSchedule, modes: ModeSet) -> np.ndarray:
    """(m, K) matrix of segment moments for every segment and mode."""
    edges = schedule.boundaries()
    m = schedule.segments
    rows = [
        segment_moment(schedule.mu, modes.frequencies, edges[p], edges[p + 1])
        for p in range(m)
    ]
    return np.asarray(rows)


def _triangle_integrals(mu: float, omegas: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """(m, K) equal-time-segment double integrals (the t1 < t2 triangles)."""
    m = edges.size - 1
    h = edges[1] - edges[0]
    w = np.asarray(omegas, float)[None, :]
    a = edges[:-1][:, None]
    total = np.zeros((m, w.size), dtype=complex)
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            for s3 in (1.0, -1.0):
                lam2 = s1 * mu + s3 * w
                lam1 = s2 * mu - s3 * w
                total += (
                    s1 * s2 * s3
                    * np.exp(1j * (lam1 + lam2) * a)
                    * _double_exp_integral(lam2, lam1, h)
                )
    return np.real(1j / 8.0 * total)


def single_segment_tables(
    tau: float, mu_values: np.ndarray, omegas: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """First moments and triangle integrals of an unsegmented drive.

    Vectorized over a whole detuning grid: returns the (M, K) complex moment
    table and the (M, K) real double-integral table for a single segment
    spanning [0, tau]. This is the fast path for m = 1 sweeps.
    """
    mu = np.asarray(mu_values, float)[:, None]
    w = np.asarray(omegas, float)[None, :]
    moments = segment_moment(mu, w, 0.0, tau)
    total = np.zeros(np.broadcast_shapes(mu.shape, w.shape), dtype=complex)
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            for s3 in (1.0, -1.0):
                lam2 = s1 * mu + s3 * w
                lam1 = s2 * mu - s3 * w
                total += s1 * s2 * s3 * _double_exp_integral(lam2, lam1, tau)
    return moments, np.real(1j / 8.0 * total)


def mode_phase_kernels(tau: float, m: int, mu: float, modes: ModeSet) -> np.ndarray:
    """(K, m, m) symmetric kernels B so that x^T B_k x is the time-ordered
    double force integral of mode k for amplitude vector x (couplings not
    yet applied)."""
    edges = np.arange(m + 1) * (tau / m)
    sched = PulseSchedule(tau, mu, np.ones(m))
    moments = all_moments(sched, modes)                       # (m, K)
    cross = np.imag(moments[:, None, :] * np.conj(moments[None, :, :]))  # (m, m, K)
    kern = np.transpose(cross, (2, 0, 1)) / 2.0
    # lower triangle of the ordered integral only; symmetrization halves it
    kern = np.where(
        np.arange(m)[None, :, None] >= np.arange(m)[None, None, :], kern, -kern
    )
    kern = 0.5 * (kern + np.transpose(kern, (0, 2, 1)))
    tri = _triangle_integrals(mu, modes.frequencies, edges)   # (m, K)
    kern[:, np.arange(m), np.arange(m)] = tri.T
    return kern


def phase_kernel(
    tau: float, m: int, mu: float, modes: ModeSet, g_i: np.ndarray, g_j: np.ndarray
) -> np.ndarray:
    """Total (m, m) kernel K with x^T K x = conditional phase for amps x."""
    kern = mode_phase_kernels(tau, m, mu, modes)
    weights = 2.0 * np.asarray(g_i) * np.asarray(g_j)
    return np.tensordot(weights, kern, axes=(0, 0))


def phase_kernel_quadrature(
    tau: float, m: int, mu: float, modes: ModeSet, g_i: np.ndarray, g_j: np.ndarray
) -> np.ndarray:
    """Nested-quadrature twin of phase_kernel (independent oracle, slow)."""
    edges = np.arange(m + 1) * (tau / m)
    weights = 2.0 * np.asarray(g_i) * np.asarray(g_j)
    out = np.zeros((m, m))

    def pair_block(wk: float, p: int, q: int) -> float:
        f = lambda t1, t2: np.sin(mu * t2) * np.sin(mu * t1) * np.sin(wk * (t2 - t1))
        if p == q:
            lo, hi = edges[p], edges[p + 1]
            val, _ = integrate.dblquad(
                f, lo, hi, lambda t2: lo, lambda t2: t2, epsabs=1e-12, epsrel=1e-10
            )
            return val
        val, _ = integrate.dblquad(
            f, edges[p], edges[p + 1],
            lambda t2: edges[q], lambda t2: edges[q + 1],
            epsabs=1e-12, epsrel=1e-10,
        )
        return val

    for k, wk in enumerate(modes.frequencies):
        blk = np.zeros((m, m))
        for p in range(m):
            blk[p, p] = pair_block(wk, p, p)
            for q in range(p):
                blk[p, q] = blk[q, p] = 0.5 * pair_block(wk, p, q)
        out += weights[k] * blk
    return out
