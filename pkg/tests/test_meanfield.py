"""Mean-field dynamics, steady states and the bifurcation structure."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opendicke import meanfield as mfd
from opendicke.params import DickeParams

OMEGA, KAPPA = 300.0, 200.0


def params(lam=0.0, lam_prime=0.0, n=1e4):
    return DickeParams(OMEGA, 1.0, lam, lam_prime, KAPPA, n)


def state_norm(s: mfd.MeanFieldState) -> float:
    return max(abs(s.alpha), abs(s.beta), abs(s.w))


class TestCriticalCoupling:
    def test_dispersive_operating_point(self):
        # lam_c/omega0 = 10.41 at omega = 300, kappa = 200
        assert abs(mfd.critical_coupling(params()) - 10.4083) < 1e-4

    def test_lossless_limit(self):
        p = DickeParams(OMEGA, 1.0, 0.0, 0.0, 0.0, 1e4)
        assert mfd.critical_coupling(p) == pytest.approx(0.5 * math.sqrt(OMEGA))

    def test_resonant_lossless(self):
        p = DickeParams(1.0, 1.0, 0.0, 0.0, 0.0, 1e4)
        assert mfd.critical_coupling(p) == pytest.approx(0.5)


class TestEquationsOfMotion:
    def test_trivial_fixed_point(self):
        p = params(lam=5.0)
        d = mfd.eom_rhs(mfd.trivial_state(p), p)
        assert d.alpha == 0 and d.beta == 0 and d.w == 0

    def test_bias_drives_cavity_only(self):
        p = params(lam=5.0, lam_prime=0.02)
        d = mfd.eom_rhs(mfd.trivial_state(p), p)
        assert d.alpha == pytest.approx(-1j * 0.02 * math.sqrt(p.atom_number))
        assert d.beta == 0 and d.w == 0

    def test_symmetry_broken_closed_forms_are_fixed_points(self):
        p = params()
        lc = mfd.critical_coupling(p)
        for lam in (1.05 * lc, math.sqrt(2) * lc, 3.0 * lc):
            q = p.with_coupling(lam)
            for ss in mfd.superradiant_states(q):
                d = mfd.eom_rhs(ss, q)
                assert state_norm(d) < 1e-12 * p.atom_number

    def test_order_parameter_value_at_sqrt2_lambda_c(self):
        # |beta_ss| = (N/2) sqrt(1 - 1/4) at lam = sqrt(2) lam_c
        p = params()
        q = p.with_coupling(math.sqrt(2) * mfd.critical_coupling(p))
        ss = mfd.superradiant_states(q)[0]
        assert abs(ss.beta) == pytest.approx(p.atom_number / 2 * math.sqrt(3) / 2)

    @settings(max_examples=40, deadline=None)
    @given(ar=st.floats(-1, 1), ai=st.floats(-1, 1),
           br=st.floats(-0.45, 0.45), bi=st.floats(-0.45, 0.45),
           lam=st.floats(0, 20), lam_prime=st.floats(-0.1, 0.1))
    def test_rhs_conserves_pseudo_momentum(self, ar, ai, br, bi, lam, lam_prime):
        # d/dt (|beta|^2 + w^2) = 2 Re(beta* dbeta) + 2 w dw = 0 identically
        p = params(lam=lam, lam_prime=lam_prime)
        n = p.atom_number
        beta = complex(br, bi) * n
        w_mag2 = n * n / 4.0 - abs(beta) ** 2
        w = -math.sqrt(max(w_mag2, 0.0))
        s = mfd.MeanFieldState(complex(ar, ai) * math.sqrt(n), beta, w)
        d = mfd.eom_rhs(s, p)
        rate = 2.0 * (beta.conjugate() * d.beta).real + 2.0 * w * d.w
        assert abs(rate) < 1e-9 * n * n


class TestIntegration:
    def test_decoupled_cavity_decay(self):
        p = params(lam=0.0)
        alpha0 = 1.0 + 0.0j
        s0 = mfd.MeanFieldState(alpha0, 0j, -p.atom_number / 2)
        t_eval = np.linspace(0.0, 0.05, 21)
        traj = mfd.integrate(s0, p, (0.0, 0.05), rtol=1e-12, method="DOP853",
                             t_eval=t_eval)
        for t, s in zip(traj.t, traj.states):
            assert abs(s.alpha - alpha0 * np.exp(-(KAPPA + 1j * OMEGA) * t)) < 1e-8

    def test_pseudo_momentum_conservation(self):
        p = params(lam=1.2 * mfd.critical_coupling(params()))
        n = p.atom_number
        s0 = mfd.MeanFieldState(1e-3 * math.sqrt(n), 1e-3 * n,
                                -math.sqrt(n * n / 4 - (1e-3 * n) ** 2))
        traj = mfd.integrate(s0, p, (0.0, 100.0),
                             t_eval=np.linspace(0.0, 100.0, 51))
        j0 = s0.pseudo_momentum()
        drift = max(abs(s.pseudo_momentum() - j0) for s in traj.states)
        assert drift < 1e-8 * n * n

    def test_relaxes_to_symmetry_broken_state(self):
        p = params(lam=1.2 * mfd.critical_coupling(params()))
        n = p.atom_number
        s0 = mfd.MeanFieldState(1e-4 * math.sqrt(n) * (1 + 0.3j), 1e-4 * n,
                                -math.sqrt(n * n / 4 - (1e-4 * n) ** 2))
        traj = mfd.integrate(s0, p, (0.0, 9600.0), rtol=1e-10, method="LSODA",
                             t_eval=[9600.0])
        end = traj.states[-1]
        dist = min(
            max(abs(end.alpha - c.alpha), abs(end.beta - c.beta), abs(end.w - c.w))
            for c in mfd.superradiant_states(p))
        assert dist < 1e-6 * n

    def test_below_threshold_perturbation_decays(self):
        # a cavity kick leaks into the slow atomic mode, so full contraction
        # takes ~1/(soft-mode damping), far longer than 1/kappa; assert a
        # monotone-envelope decay over a moderate horizon instead
        p = params(lam=0.5 * mfd.critical_coupling(params()))
        n = p.atom_number
        s0 = mfd.MeanFieldState(0.01 * math.sqrt(n), 0j, -n / 2)
        traj = mfd.integrate(s0, p, (0.0, 1000.0), rtol=1e-10, method="LSODA",
                             t_eval=np.linspace(0.0, 1000.0, 101))
        scaled = np.array([max(abs(s.alpha) / math.sqrt(n), abs(s.beta) / n)
                           for s in traj.states])
        assert scaled[-1] < 0.75 * scaled[0]
        assert np.max(scaled) < 2.0 * scaled[0]

    def test_parity_map_commutes_with_flow(self):
        p = params(lam=1.1 * mfd.critical_coupling(params()))
        n = p.atom_number
        s0 = mfd.MeanFieldState(2e-3 * math.sqrt(n) * (0.8 - 0.1j),
                                1e-3 * n * (1 + 0.2j),
                                -math.sqrt(n * n / 4 - abs(1e-3 * n * (1 + 0.2j)) ** 2))
        flipped = mfd.MeanFieldState(-s0.alpha, -s0.beta, s0.w)
        t_eval = np.linspace(0.0, 50.0, 26)
        t1 = mfd.integrate(s0, p, (0.0, 50.0), t_eval=t_eval)
        t2 = mfd.integrate(flipped, p, (0.0, 50.0), t_eval=t_eval)
        for a, b in zip(t1.states, t2.states):
            assert abs(a.alpha + b.alpha) < 1e-6 * math.sqrt(n)
            assert abs(a.beta + b.beta) < 1e-6 * n
            assert abs(a.w - b.w) < 1e-6 * n

    def test_invalid_tolerance_rejected(self):
        p = params()
        with pytest.raises(ValueError):
            mfd.integrate(mfd.trivial_state(p), p, (0.0, 1.0), rtol=-1.0)


class TestSteadyStateBranches:
    def test_symmetric_branch_structure(self):
        p = params()
        lc = mfd.critical_coupling(p)
        grid = np.array([0.5, 0.9, 1.1, 1.5]) * lc
        branch = mfd.steady_states(p, grid)
        assert [len(e) for e in branch.states] == [1, 1, 3, 3]
        for lam, entries in zip(grid, branch.states):
            trivial_flag = entries[0][1]
            if lam < lc:
                assert trivial_flag == "stable"
            else:
                assert trivial_flag == "unstable"
                assert all(flag == "stable" for _, flag in entries[1:])

    def test_newton_recovers_closed_form_above_threshold(self):
        p = params()
        lc = mfd.critical_coupling(p)
        q = p.with_coupling(1.4 * lc)
        target = mfd.superradiant_states(q)[0]
        seed = mfd.MeanFieldState(1.15 * target.alpha, 1.1 * target.beta, target.w)
        found = mfd.newton_steady_state(q, seed)
        n = p.atom_number
        assert abs(found.alpha - target.alpha) < 1e-9 * n
        assert abs(found.beta - target.beta) < 1e-9 * n
        assert abs(found.w - target.w) < 1e-9 * n

    def test_branch_residuals_below_spec(self):
        p = params(lam_prime=0.0)
        lc = mfd.critical_coupling(p)
        biased = DickeParams(OMEGA, 1.0, 0.0, 0.03, KAPPA, p.atom_number)
        branch = mfd.steady_states(biased, np.linspace(0.2, 1.6, 15) * lc)
        for lam, entries in zip(branch.lam_grid, branch.states):
            q = biased.with_coupling(float(lam))
            for st_, _ in entries:
                assert state_norm(mfd.eom_rhs(st_, q)) < 1e-10 * p.atom_number

    def test_bias_removes_bifurcation(self):
        p = DickeParams(OMEGA, 1.0, 0.0, 0.05, KAPPA, 1e4)
        lc = mfd.critical_coupling(p)
        grid = np.linspace(0.2, 1.8, 33) * lc
        branch = mfd.steady_states(p, grid)
        alphas = np.array([e[0][0].alpha for e in branch.states])
        assert np.all(np.abs(alphas) > 0.0)
        assert all(flag == "stable" for e in branch.states for _, flag in e)
        # smooth in lam: no jumps between neighbouring grid points
        steps = np.abs(np.diff(alphas))
        scale = np.max(np.abs(alphas))
        assert np.all(steps < 0.15 * scale)

    def test_bias_sign_selects_branch(self):
        lc = mfd.critical_coupling(params())
        grid = np.linspace(0.5, 1.5, 9) * lc
        left = mfd.steady_states(DickeParams(OMEGA, 1.0, 0.0, 0.05, KAPPA, 1e4), grid)
        right = mfd.steady_states(DickeParams(OMEGA, 1.0, 0.0, -0.05, KAPPA, 1e4), grid)
        for (sl, _), (sr, _) in zip((e[0] for e in left.states),
                                    (e[0] for e in right.states)):
            assert sl.alpha.real * sr.alpha.real < 0
            assert sl.beta.real * sr.beta.real < 0
            # atomic coherence sign opposite to the field quadrature sign
            assert sl.alpha.real * sl.beta.real < 0

    def test_grid_validation(self):
        p = params()
        with pytest.raises(ValueError):
            mfd.steady_states(p, [])
        with pytest.raises(ValueError):
            mfd.steady_states(p, [2.0, 1.0])
