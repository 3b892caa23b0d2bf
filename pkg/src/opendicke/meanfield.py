"""Semiclassical dynamics, steady states and the bifurcation structure.

The mean fields are the cavity amplitude alpha = <a>, the atomic coherence
beta = <J-> and the inversion w = <Jz>.  Their equations of motion conserve
the pseudo angular momentum |beta|^2 + w^2 = N^2/4, which is used to
eliminate w (negative root, the physically stable branch) in the steady
state solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .params import DickeParams


class IntegrationError(RuntimeError):
    """Integrator failure; carries the last accepted state for diagnosis."""

    def __init__(self, message: str, t: float | None = None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class ConvergenceError(RuntimeError):
    pass


@dataclass
class MeanFieldState:
    alpha: complex
    beta: complex
    w: float

    def pseudo_momentum(self) -> float:
        """Conserved quantity |beta|^2 + w^2."""
        return abs(self.beta) ** 2 + self.w ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha.real, self.alpha.imag,
                         self.beta.real, self.beta.imag, self.w])

    @classmethod
    def from_vector(cls, y) -> "MeanFieldState":
        return cls(complex(y[0], y[1]), complex(y[2], y[3]), float(y[4]))


@dataclass
class SteadyStateBranch:
    """Steady states along a coupling grid with stability flags.

    ``states[i]`` is the list of (MeanFieldState, flag) pairs found at
    ``lam_grid[i]``; flags are "stable", "unstable" or "marginal".
    """

    lam_grid: np.ndarray
    states: list[list[tuple[MeanFieldState, str]]]


def critical_coupling(p: DickeParams) -> float:
    """Coupling at which the normal phase loses stability.

    lam_c = (1/2) sqrt((omega0/omega) (kappa^2 + omega^2)); for kappa = 0
    this reduces to the closed-system value (1/2) sqrt(omega*omega0).
    """
    return 0.5 * math.sqrt((p.omega0 / p.omega) * (p.kappa ** 2 + p.omega ** 2))


def eom_rhs(state: MeanFieldState, p: DickeParams) -> MeanFieldState:
    """Right-hand sides of the mean-field equations of motion.

    d alpha/dt = -(kappa + i omega) alpha - i (lam/sqrt(N)) (beta + beta*)
                 - i (lam'/sqrt(N)) (N/2 - w)
    d beta/dt  = -i omega0 beta + 2 i (lam/sqrt(N)) (alpha + alpha*) w
                 + i (lam'/sqrt(N)) beta (alpha + alpha*)
    d w/dt     = i (lam/sqrt(N)) (alpha + alpha*) (beta - beta*)
    """
    rn = math.sqrt(p.atom_number)
    a2re = state.alpha + state.alpha.conjugate()
    d_alpha = (-(p.kappa + 1j * p.omega) * state.alpha
               - 1j * (p.lam / rn) * (state.beta + state.beta.conjugate())
               - 1j * (p.lam_prime / rn) * (p.atom_number / 2.0 - state.w))
    d_beta = (-1j * p.omega0 * state.beta
              + 2j * (p.lam / rn) * a2re * state.w
              + 1j * (p.lam_prime / rn) * state.beta * a2re)
    d_w = (1j * (p.lam / rn) * a2re * (state.beta - state.beta.conjugate())).real
    return MeanFieldState(d_alpha, d_beta, d_w)


def _rhs_vector(t, y, p: DickeParams, lam_of_t=None):
    lam = p.lam if lam_of_t is None else lam_of_t(t)
    rn = math.sqrt(p.atom_number)
    ar, ai, br, bi, w = y
    a2re = 2.0 * ar
    b2im = 2.0 * bi
    k_l = lam / rn
    k_lp = p.lam_prime / rn
    d_ar = -p.kappa * ar + p.omega * ai
    d_ai = -p.kappa * ai - p.omega * ar - k_l * 2.0 * br - k_lp * (p.atom_number / 2.0 - w)
    d_br = p.omega0 * bi - k_lp * bi * a2re
    d_bi = -p.omega0 * br + 2.0 * k_l * a2re * w + k_lp * br * a2re
    d_w = -k_l * a2re * b2im
    return [d_ar, d_ai, d_br, d_bi, d_w]


@dataclass
class Trajectory:
    t: np.ndarray
    states: list[MeanFieldState]

    def component(self, name: str) -> np.ndarray:
        if name in ("alpha", "beta"):
            return np.array([getattr(s, name) for s in self.states])
        return np.array([s.w for s in self.states])


def integrate(state0: MeanFieldState, p: DickeParams, t_span,
              rtol: float = 1e-10, t_eval=None, method: str = "RK45",
              lam_of_t=None) -> Trajectory:
    """Adaptive integration of the mean-field equations.

    ``lam_of_t`` optionally replaces the static coupling by lam(t) (used by
    the modulated drive).  Raises IntegrationError on step-size underflow,
    reporting the last accepted state.
    """
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    scale = max(1.0, math.sqrt(p.atom_number))
    sol = solve_ivp(_rhs_vector, t_span, state0.as_vector(), method=method,
                    rtol=rtol, atol=rtol * scale * 1e-2, t_eval=t_eval,
                    args=(p, lam_of_t), dense_output=t_eval is None)
    if not sol.success:
        last = MeanFieldState.from_vector(sol.y[:, -1]) if sol.y.size else state0
        raise IntegrationError(f"integration failed: {sol.message}",
                               t=float(sol.t[-1]) if sol.t.size else None,
                               state=last)
    states = [MeanFieldState.from_vector(sol.y[:, i]) for i in range(sol.y.shape[1])]
    return Trajectory(sol.t, states)


def trivial_state(p: DickeParams) -> MeanFieldState:
    return MeanFieldState(0j, 0j, -p.atom_number / 2.0)


def superradiant_states(p: DickeParams, lam: float | None = None
                        ) -> tuple[MeanFieldState, MeanFieldState]:
    """Closed-form symmetry-broken steady states (lam' = 0, lam > lam_c)."""
    lam = p.lam if lam is None else lam
    lc = critical_coupling(p)
    if lam <= lc:
        raise ValueError(f"no symmetry-broken solutions below lam_c = {lc}")
    n = p.atom_number
    root = math.sqrt(1.0 - (lc / lam) ** 4)
    alpha = math.sqrt(n) * lam / (p.omega - 1j * p.kappa) * root
    beta = -n / 2.0 * root
    w = -n / 2.0 * (lc / lam) ** 2
    return (MeanFieldState(alpha, beta, w),
            MeanFieldState(-alpha, -beta, w))


def _w_from_beta(beta: complex, n: float) -> float:
    # negative root of the conservation constraint
    return -math.sqrt(max(n * n / 4.0 - abs(beta) ** 2, 0.0))


def _reduced_residual(z: np.ndarray, p: DickeParams, lam: float) -> np.ndarray:
    q = p.with_coupling(lam)
    beta = complex(z[2], z[3])
    state = MeanFieldState(complex(z[0], z[1]), beta, _w_from_beta(beta, p.atom_number))
    d = eom_rhs(state, q)
    return np.array([d.alpha.real, d.alpha.imag, d.beta.real, d.beta.imag])


def newton_steady_state(p: DickeParams, seed: MeanFieldState, lam: float | None = None,
                        tol: float | None = None, max_iter: int = 60) -> MeanFieldState:
    """Newton solve of the fixed-point equations with w eliminated.

    The inversion is slaved to beta through the conserved pseudo angular
    momentum (negative root).  The seed fixes which solution branch the
    iteration converges to.
    """
    lam = p.lam if lam is None else lam
    n = p.atom_number
    tol = 1e-11 * n if tol is None else tol
    z = np.array([seed.alpha.real, seed.alpha.imag, seed.beta.real, seed.beta.imag])
    f = _reduced_residual(z, p, lam)
    for _ in range(max_iter):
        if np.linalg.norm(f, ord=np.inf) < tol:
            break
        jac = np.empty((4, 4))
        for j in range(4):
            h = 1e-7 * max(abs(z[j]), 1e-3 * n)
            zp = z.copy()
            zp[j] += h
            jac[:, j] = (_reduced_residual(zp, p, lam) - f) / h
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian at lam = {lam}") from exc
        # keep beta inside the physical disc |beta| < N/2
        damping = 1.0
        for _ in range(40):
            z_new = z + damping * step
            if complex(z_new[2], z_new[3]).__abs__() < 0.5 * n:
                f_new = _reduced_residual(z_new, p, lam)
                if np.linalg.norm(f_new) <= np.linalg.norm(f) or damping < 1e-3:
                    break
            damping *= 0.5
        z, f = z_new, f_new
    else:
        raise ConvergenceError(
            f"Newton iteration did not converge at lam = {lam} "
            f"(|residual| = {np.linalg.norm(f, ord=np.inf):.3e})")
    beta = complex(z[2], z[3])
    return MeanFieldState(complex(z[0], z[1]), beta, _w_from_beta(beta, n))


def _stability_flag(state: MeanFieldState, p: DickeParams, lam: float) -> str:
    # local import: fluctuations builds on the steady states defined here
    from .fluctuations import dynamical_matrix, hp_coefficients

    q = p.with_coupling(lam)
    coeffs = hp_coefficients(state, q)
    mu = np.linalg.eigvals(dynamical_matrix(coeffs, q))
    marginal_tol = 1e-12 * p.omega0
    max_re = float(np.max(mu.real))
    if max_re < -marginal_tol:
        return "stable"
    if max_re > marginal_tol:
        return "unstable"
    return "marginal"


def steady_states(p: DickeParams, lam_grid, lam_prime_over_lam: float | None = None
                  ) -> SteadyStateBranch:
    """Steady states over a sorted coupling grid.

    With lam' = 0 the trivial branch is returned everywhere together with
    the pair of closed-form symmetry-broken states above threshold.  With
    lam' != 0 the unique low-energy branch is continued by Newton from the
    linear-response seed, so no bifurcation appears.  If
    ``lam_prime_over_lam`` is given, the bias scales with the coupling
    (both are proportional to the pump strength for a fixed geometry).
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if lam_grid.size == 0:
        raise ValueError("empty coupling grid")
    if np.any(np.diff(lam_grid) < 0):
        raise ValueError("coupling grid must be sorted ascending")

    n = p.atom_number
    lc = critical_coupling(p)
    per_lam: list[list[tuple[MeanFieldState, str]]] = []

    def bias(lam: float) -> float:
        if lam_prime_over_lam is not None:
            return lam_prime_over_lam * lam
        return p.lam_prime

    if p.lam_prime == 0.0 and lam_prime_over_lam is None:
        for lam in lam_grid:
            q = p.with_coupling(float(lam))
            entries = [(trivial_state(p), _stability_flag(trivial_state(p), p, float(lam)))]
            if lam > lc:
                for st in superradiant_states(q):
                    entries.append((st, _stability_flag(st, p, float(lam))))
            per_lam.append(entries)
        return SteadyStateBranch(lam_grid, per_lam)

    prev: MeanFieldState | None = None
    prev_lam: float | None = None
    for lam in lam_grid:
        lam = float(lam)
        if prev is None:
            lp = bias(lam)
            alpha0 = -1j * lp * math.sqrt(n) / (p.kappa + 1j * p.omega)
            seed = MeanFieldState(alpha0, 0j, -n / 2.0)
            st = newton_steady_state(
                DickeParams(p.omega, p.omega0, lam, lp, p.kappa, n), seed)
        else:
            st = _continue_branch(p, prev, prev_lam, lam, bias)
        prev, prev_lam = st, lam
        q = DickeParams(p.omega, p.omega0, lam, bias(lam), p.kappa, n)
        per_lam.append([(st, _stability_flag(st, q, lam))])
    return SteadyStateBranch(lam_grid, per_lam)


def _continue_branch(p: DickeParams, state: MeanFieldState, lam_from: float,
                     lam_to: float, bias, depth: int = 0) -> MeanFieldState:
    """One continuation step with adaptive bisection.

    Near the smoothed critical region the connected branch bends sharply;
    a Newton step seeded across the bend can capture a coexisting root, so
    steps that move the state too far are re-done in halves.
    """
    n = p.atom_number
    q = DickeParams(p.omega, p.omega0, lam_to, bias(lam_to), p.kappa, n)
    new = newton_steady_state(q, state)
    jump = max(abs(new.alpha - state.alpha) / math.sqrt(n),
               abs(new.beta - state.beta) / n)
    if jump < 0.05 or depth >= 24:
        return new
    lam_mid = 0.5 * (lam_from + lam_to)
    mid = _continue_branch(p, state, lam_from, lam_mid, bias, depth + 1)
    return _continue_branch(p, mid, lam_mid, lam_to, bias, depth + 1)
