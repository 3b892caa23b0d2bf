"""Linearized fluctuations about a steady state and their spectrum.

Bosonizing the collective spin about a mean-field steady state gives a
quadratic Hamiltonian for the photonic fluctuation c and the atomic
fluctuation d, with a shifted atomic frequency omega0' and couplings g1, g2
that depend on the scaled steady-state amplitudes.  Cavity damping enters
the c rows of the resulting 4x4 dynamical matrix.

Eigenvalues mu of the dynamical matrix are reported as complex frequencies
omega_k = i*mu (dynamics ~ exp(-i omega_k t)), so a positive damping rate
appears as a negative imaginary part, matching the plotted spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .meanfield import (MeanFieldState, _continue_branch, critical_coupling,
                        newton_steady_state, superradiant_states, trivial_state)
from .params import DickeParams


class ValidityError(ValueError):
    """Inputs outside the validity region of an expansion or formula."""


@dataclass(frozen=True)
class HPCoefficients:
    """Coefficients of the quadratic fluctuation Hamiltonian.

    omega0_prime : shifted atomic frequency
    g1           : atomic self-coupling (d + d^dag)^2 term
    g2           : light-matter coupling (c + c^dag)(d + d^dag) term
    alpha_tilde  : alpha_ss / sqrt(N)
    beta_tilde   : scaled displacement of the atomic mode; equals
                   beta_ss/N to leading order in the order parameter
    """

    omega0_prime: float
    g1: float
    g2: float
    alpha_tilde: complex
    beta_tilde: float


def hp_coefficients(ss: MeanFieldState, p: DickeParams) -> HPCoefficients:
    """Expansion coefficients about the given steady state.

    The atomic mode is displaced by the scaled bosonic amplitude s with
    s*sqrt(1 - s^2) = beta_ss/N, equivalently s^2 = 1/2 + w_ss/N, which
    reduces to beta_ss/N for weak order.  Using the displacement rather
    than beta_ss/N itself keeps the linearized spectrum consistent with
    the mean-field linearization on the whole symmetry-broken branch.
    Requires |beta_ss/N| < 1/2 strictly (validity of the bosonization).
    """
    n = p.atom_number
    alpha_t = ss.alpha / math.sqrt(n)
    beta_t_c = ss.beta / n
    if abs(beta_t_c.imag) > 1e-9 * (1.0 + abs(beta_t_c)):
        raise ValidityError(
            f"beta_ss must be real at a steady state, got Im = {beta_t_c.imag:.3e}")
    if abs(beta_t_c.real) >= 0.5:
        raise ValidityError(
            f"|beta_ss|/N = {abs(beta_t_c.real)} >= 1/2 is outside validity")
    pop = 0.5 + ss.w / n
    if pop >= 0.5:
        raise ValidityError("excited-mode population >= N/2 is outside validity")
    bt = math.copysign(math.sqrt(max(pop, 0.0)), beta_t_c.real)
    residual = abs(bt * math.sqrt(1.0 - bt * bt) - beta_t_c.real)
    if residual > 1e-6 * (1.0 + abs(bt)):
        raise ValidityError(
            f"state is off the conservation manifold (residual {residual:.3e})")
    s = math.sqrt(1.0 - bt * bt)
    re_a = alpha_t.real
    omega0_prime = p.omega0 - 2.0 * p.lam * bt / s * re_a
    g1 = -p.lam * bt * (2.0 - bt * bt) / (2.0 * s ** 3) * re_a
    g2 = p.lam * (1.0 - 2.0 * bt * bt) / s - p.lam_prime * bt
    return HPCoefficients(omega0_prime, g1, g2, alpha_t, bt)


def dynamical_matrix(c: HPCoefficients, p: DickeParams) -> np.ndarray:
    """Generator M of d/dt (c, c^dag, d, d^dag) = M (c, c^dag, d, d^dag).

    dc/dt = -(i omega + kappa) c - i g2 (d + d^dag)
    dd/dt = -i omega0' d - 2 i g1 (d + d^dag) - i g2 (c + c^dag)
    plus the conjugate rows; the trace is -2 kappa for any parameters.
    """
    w, k = p.omega, p.kappa
    w0p, g1, g2 = c.omega0_prime, c.g1, c.g2
    return np.array([
        [-(1j * w + k), 0.0, -1j * g2, -1j * g2],
        [0.0, (1j * w - k), 1j * g2, 1j * g2],
        [-1j * g2, -1j * g2, -1j * w0p - 2j * g1, -2j * g1],
        [1j * g2, 1j * g2, 2j * g1, 1j * w0p + 2j * g1],
    ], dtype=complex)


@dataclass
class ExcitationSpectrum:
    """Eigenfrequencies omega_k = i*mu_k of the dynamical matrix.

    ``frequencies`` is deterministically sorted by (|Re|, Im).  The
    polariton index is only known in the context of a coupling sweep and is
    None for an isolated matrix.
    """

    frequencies: np.ndarray
    polariton_index: int | None = None
    eigenvectors: np.ndarray | None = None


def _sorted_spectrum(freqs: np.ndarray, vecs: np.ndarray | None = None):
    order = np.lexsort((freqs.imag, np.abs(freqs.real)))
    if vecs is None:
        return freqs[order], None
    return freqs[order], vecs[:, order]


def spectrum(m: np.ndarray) -> ExcitationSpectrum:
    """Exact eigenfrequencies of a 4x4 fluctuation matrix."""
    mu, vecs = np.linalg.eig(m)
    freqs, vecs = _sorted_spectrum(1j * mu, vecs)
    return ExcitationSpectrum(freqs, None, vecs)


def _steady_state_for(p: DickeParams, lam: float, prev: MeanFieldState | None,
                      prev_lam: float | None) -> MeanFieldState:
    q = p.with_coupling(lam)
    if p.lam_prime == 0.0:
        if lam <= critical_coupling(p):
            return trivial_state(p)
        return superradiant_states(q)[0]
    if prev is None or prev_lam is None:
        n = p.atom_number
        alpha0 = -1j * p.lam_prime * math.sqrt(n) / (p.kappa + 1j * p.omega)
        return newton_steady_state(q, MeanFieldState(alpha0, 0j, -n / 2.0))
    return _continue_branch(p, prev, prev_lam, lam, lambda _: p.lam_prime)


@dataclass
class TrackedSpectrum:
    """Branch-tracked eigenfrequencies along a coupling sweep.

    ``frequencies[i, b]`` is branch b at ``lam_grid[i]``; branch labels are
    continuous in lam (matched by eigenvector overlap).  ``polariton_index``
    labels the branch connected to +omega0 at lam = 0.
    """

    lam_grid: np.ndarray
    frequencies: np.ndarray
    polariton_index: int

    def polariton(self) -> np.ndarray:
        return self.frequencies[:, self.polariton_index]


def spectrum_sweep(p: DickeParams, lam_grid) -> TrackedSpectrum:
    """Eigenfrequency branches over a coupling sweep with continuity labels.

    The sweep is anchored at lam = 0, where the four modes are the bare
    cavity pair omega - i kappa, -omega - i kappa and the bare atomic pair
    +/- omega0; branches across the grid are matched by maximal eigenvector
    overlap against the previous grid point.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if np.any(np.diff(lam_grid) < 0):
        raise ValueError("coupling grid must be sorted ascending")
    work_grid = lam_grid
    n_approach = 0
    if lam_grid.size == 0 or lam_grid[0] > 0.0:
        # ramp up from the anchor at lam = 0 so eigenvector-overlap matching
        # stays unambiguous even when the requested grid starts near lam_c
        first = lam_grid[0] if lam_grid.size else 0.0
        approach = np.linspace(0.0, first, 33)[:-1]
        n_approach = approach.size
        work_grid = np.concatenate([approach, lam_grid])

    freqs_out = np.empty((work_grid.size, 4), dtype=complex)
    prev_vecs = None
    prev_freqs = None
    prev_state: MeanFieldState | None = None
    prev_lam: float | None = None
    pol_index = 0
    for i, lam in enumerate(work_grid):
        lam = float(lam)
        ss = _steady_state_for(p, lam, prev_state, prev_lam)
        prev_state, prev_lam = ss, lam
        q = p.with_coupling(lam)
        m = dynamical_matrix(hp_coefficients(ss, q), q)
        mu, vecs = np.linalg.eig(m)
        freqs = 1j * mu
        vecs = vecs / np.linalg.norm(vecs, axis=0)
        if prev_vecs is None:
            # anchor: order deterministically; the polariton branch starts
            # as the mode closest to the bare atomic frequency +omega0
            order = np.lexsort((freqs.imag, np.abs(freqs.real)))
            freqs, vecs = freqs[order], vecs[:, order]
            pol_index = int(np.argmin(np.abs(freqs - p.omega0)))
        else:
            overlap = np.abs(prev_vecs.conj().T @ vecs)
            row, col = linear_sum_assignment(-overlap)
            perm = np.empty(4, dtype=int)
            perm[row] = col
            freqs, vecs = freqs[perm], vecs[:, perm]
            if np.min(overlap[row, col]) < 0.99:
                # eigenvectors coalesce where the soft pair collides; fall
                # back to frequency continuity across the degeneracy
                swap = _refine_by_frequency(prev_freqs, freqs)
                freqs, vecs = freqs[swap], vecs[:, swap]
        freqs_out[i] = freqs
        prev_vecs, prev_freqs = vecs, freqs
    if n_approach:
        freqs_out = freqs_out[n_approach:]
    return TrackedSpectrum(lam_grid, freqs_out, pol_index)


def _refine_by_frequency(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    cost = np.abs(cur[None, :] - prev[:, None])
    row, col = linear_sum_assignment(cost)
    perm = np.empty(4, dtype=int)
    perm[row] = col
    return perm


def soft_mode_perturbative(p: DickeParams, lam: float) -> complex:
    """Dispersive-regime approximation of the soft polaritonic frequency.

    omega_ex = omega0 sqrt(1 - r) (1 + eps r / 2) - i kappa omega0^2 r /
    (omega^2 + kappa^2), with r = (lam/lam_c)^2 and eps = omega0^2 /
    (omega^2 + kappa^2).  Valid below the overdamped region and for
    eps < 1e-2.
    """
    eps = p.omega0 ** 2 / (p.omega ** 2 + p.kappa ** 2)
    if eps >= 1e-2:
        raise ValidityError(f"dispersive-regime check failed: eps = {eps:.3e} >= 1e-2")
    window = overdamped_window(p)
    if lam >= window.lam1:
        raise ValidityError(
            f"lam = {lam} is inside or above the overdamped region "
            f"starting at lam1 = {window.lam1}")
    r = (lam / critical_coupling(p)) ** 2
    re = p.omega0 * math.sqrt(1.0 - r) * (1.0 + 0.5 * eps * r)
    im = -p.kappa * p.omega0 ** 2 / (p.omega ** 2 + p.kappa ** 2) * r
    return complex(re, im)


@dataclass(frozen=True)
class OverdampedWindow:
    """Overdamped region (lam1, lam2) around the critical point.

    lam1 = lam_c [1 - kappa^2 omega0^2 / (omega^2+kappa^2)^2]
    lam2 = lam_c [1 + kappa^2 omega0^2 / (2 (omega^2+kappa^2)^2)]

    ``soft_frequency`` evaluates the purely damped near-critical eigenvalue
    -i (omega^2+kappa^2)/(2 kappa) (1 - lam^2/lam_c^2) valid inside the
    window below threshold.
    """

    lam1: float
    lam2: float
    lam_c: float
    rate_scale: float

    def soft_frequency(self, lam: float) -> complex:
        return -1j * self.rate_scale * (1.0 - (lam / self.lam_c) ** 2)


def overdamped_window(p: DickeParams) -> OverdampedWindow:
    lc = critical_coupling(p)
    s2 = p.omega ** 2 + p.kappa ** 2
    half = p.kappa ** 2 * p.omega0 ** 2 / s2 ** 2
    rate = s2 / (2.0 * p.kappa) if p.kappa > 0 else math.inf
    return OverdampedWindow(lc * (1.0 - half), lc * (1.0 + 0.5 * half), lc, rate)
