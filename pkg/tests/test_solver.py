"""Solver tests against independent physical-space and closed-form oracles."""

import math

import numpy as np
import pytest

from kdvlab.hamiltonians import H3, gradient
from kdvlab.solver import (SolverConfig, SolverDivergenceError, diagnostics_of,
                           envelope_evolve, evolve, kdv_step, nonlinear_term,
                           soliton_mean, soliton_reference, stability_budget)
from kdvlab.spectral import (GridFunction, ModeLattice, SpectralSequence,
                             l2s_norm, linear_phase, sequence_from_modes,
                             weighted_from_physical)

LAT = ModeLattice(16, 49)


def random_real_sequence(lat, rng, scale=0.1):
    pos = scale * (rng.standard_normal(lat.n_max) + 1j * rng.standard_normal(lat.n_max))
    pos /= np.arange(1, lat.n_max + 1)
    vals = np.zeros(lat.size, dtype=np.complex128)
    vals[lat.n_max + 1:] = pos
    vals[:lat.n_max] = pos[::-1].conj()
    return SpectralSequence(lat, vals, real_type=True)


class TestNonlinearTerm:
    def test_pinned_two_mode(self):
        # u(+-1) = 1: only pair (1, 1) feeds mode 2, so N(2) = 3 i sqrt(2)
        u = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        nl = nonlinear_term(u)
        assert nl.value_at(2) == pytest.approx(3j * math.sqrt(2), abs=1e-14)
        assert nl.value_at(-2) == pytest.approx(-3j * math.sqrt(2), abs=1e-14)
        assert nl.value_at(1) == 0.0  # pairs (0,1) and (2,-1) are absent
        assert nl.value_at(0) == 0.0

    def test_physical_space_oracle(self):
        # N(u) must be the weighted transform of 6 v v_x (alias-free on the
        # 3 n_max + 1 grid since the product is band-limited to 2 n_max)
        rng = np.random.default_rng(31)
        u = random_real_sequence(LAT, rng, scale=0.5)
        n = LAT.modes.astype(np.float64)
        vhat = np.sqrt(np.abs(n)) * u.values
        x = LAT.grid()
        phase = np.exp(1j * np.outer(x, n))
        v = (phase @ vhat).real
        vx = (phase @ (1j * n * vhat)).real
        w = 6.0 * v * vx
        expected = weighted_from_physical(GridFunction(LAT, w - np.mean(w)))
        got = nonlinear_term(u)
        assert np.max(np.abs(got.values - expected.values)) < 1e-11

    def test_matches_h3_gradient(self):
        # the evolution is Hamiltonian: N(u)(n) = sigma(n) dH3/du(-n)
        rng = np.random.default_rng(32)
        u = random_real_sequence(LAT, rng, scale=0.5)
        g = gradient(H3, u).values
        expected = np.sign(LAT.modes) * g
        assert np.max(np.abs(nonlinear_term(u).values - expected)) < 1e-12


class TestStepper:
    def test_linear_limit(self):
        # tiny amplitude: one step must match the exact Airy phase to O(amp^2)
        amp = 1e-8
        u = sequence_from_modes(LAT, {3: amp, -3: amp})
        stepped = kdv_step(u, 0.01)
        free = linear_phase(u, 0.01)
        assert np.max(np.abs(stepped.values - free.values)) < 1e-16

    def test_kdv_step_matches_evolve(self):
        rng = np.random.default_rng(33)
        u = random_real_sequence(LAT, rng)
        one = kdv_step(u, 1e-3)
        traj, _ = evolve(u, SolverConfig(dt=1e-3, t_final=1e-3, lattice=LAT))
        assert np.max(np.abs(one.values - traj[-1][1].values)) < 1e-15

    def test_budget_guard(self):
        u = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        # ||u||_{l^1_{1/2}} = 2, so the budget is 6 sqrt(16) = 24
        assert stability_budget(u, LAT) == pytest.approx(24.0, rel=1e-14)
        with pytest.raises(ValueError):
            evolve(u, SolverConfig(dt=0.1, t_final=1.0, lattice=LAT))

    def test_evolve_validation(self):
        u = SpectralSequence(LAT, np.zeros(LAT.size, dtype=np.complex128),
                             real_type=False)
        with pytest.raises(ValueError):
            evolve(u, SolverConfig(dt=1e-3, t_final=1.0, lattice=LAT))
        other = ModeLattice(8, 25)
        w = sequence_from_modes(other, {1: 0.1, -1: 0.1})
        with pytest.raises(ValueError):
            evolve(w, SolverConfig(dt=1e-3, t_final=1.0, lattice=LAT))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(dt=0.0, t_final=1.0, lattice=LAT)
        with pytest.raises(ValueError):
            SolverConfig(dt=1e-3, t_final=1.0, lattice=LAT, record_every=0)


class TestDiagnostics:
    def test_cosine_oracle(self):
        # v = 2 cos x: K = int v^2 = 4 pi, H = int (v_x^2 / 2 + v^3) = 2 pi
        u = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        p, k, h = diagnostics_of(u)
        assert p == 0.0
        assert k == pytest.approx(4.0 * math.pi, rel=1e-13)
        assert h == pytest.approx(2.0 * math.pi, rel=1e-13)

    def test_energy_physical_quadrature(self):
        # H agrees with the trapezoidal (spectrally exact) integral of
        # v_x^2 / 2 + v^3 for band-limited v
        rng = np.random.default_rng(34)
        u = random_real_sequence(LAT, rng, scale=0.5)
        n = LAT.modes.astype(np.float64)
        vhat = np.sqrt(np.abs(n)) * u.values
        x = LAT.grid()
        phase = np.exp(1j * np.outer(x, n))
        v = (phase @ vhat).real
        vx = (phase @ (1j * n * vhat)).real
        expected = 2.0 * math.pi * np.mean(0.5 * vx**2 + v**3)
        _, _, h = diagnostics_of(u)
        assert h == pytest.approx(expected, rel=1e-12)


class TestSoliton:
    LAT_S = ModeLattice(128, 385)

    def _spectral(self, kappa, t):
        return weighted_from_physical(soliton_reference(kappa, t, 0.0, self.LAT_S))

    def test_reference_properties(self):
        prof = soliton_reference(3.0, 0.0, 0.0, self.LAT_S)
        assert np.mean(prof.samples) == pytest.approx(0.0, abs=1e-13)
        # trough equals -2 kappa^2 - mean up to the half-grid-spacing offset
        # (x = 0 is not a sample point)
        assert np.min(prof.samples) == pytest.approx(
            -2.0 * 9.0 - soliton_mean(3.0), rel=2e-3)
        with pytest.raises(ValueError):
            soliton_reference(2.0, 0.0, 0.0, self.LAT_S)

    def test_short_propagation(self):
        # in the zero-momentum frame the profile travels at 4 kappa^2 + 6 mean
        kappa, t_end = 3.0, 0.02
        u0 = self._spectral(kappa, 0.0)
        traj, _ = evolve(u0, SolverConfig(dt=1e-4, t_final=t_end,
                                          lattice=self.LAT_S, record_every=10**9))
        u_end = traj[-1][1]
        shift = 6.0 * soliton_mean(kappa) * t_end
        ref = weighted_from_physical(
            soliton_reference(kappa, t_end, shift, self.LAT_S))
        rel = (l2s_norm(SpectralSequence(self.LAT_S, u_end.values - ref.values,
                                         real_type=False), 0.5)
               / l2s_norm(ref, 0.5))
        assert rel < 1e-4

    def test_conservation(self):
        u0 = self._spectral(3.0, 0.0)
        traj, diags = evolve(u0, SolverConfig(dt=1e-4, t_final=0.02,
                                              lattice=self.LAT_S,
                                              record_every=10**9))
        for series in (diags.K, diags.H):
            drift = abs(series[-1] - series[0]) / abs(series[0])
            assert drift < 1e-7
        assert max(abs(p) for p in diags.P) == 0.0


class TestEnvelope:
    def test_matches_direct_integration(self):
        # carrier-10 pair, where direct stepping can fully resolve the triad
        # phases: both integrators must land on the same state
        lat = ModeLattice(64, 193)
        amp = math.sqrt(0.05)
        u0 = sequence_from_modes(lat, {10: amp, -10: amp})
        t_end = 1.0
        traj_d, _ = evolve(u0, SolverConfig(dt=2e-5, t_final=t_end,
                                            lattice=lat, record_every=10**9))
        traj_e, _ = envelope_evolve(u0, t_end, steps=512)
        direct = traj_d[-1][1].values
        env = traj_e[-1][1].values
        err = np.max(np.abs(direct - env)) / np.max(np.abs(direct))
        assert err < 2e-3

    def test_norm_conservation(self):
        lat = ModeLattice(64, 193)
        amp = math.sqrt(0.05)
        u0 = sequence_from_modes(lat, {10: amp, -10: amp})
        _, diags = envelope_evolve(u0, 1.0, steps=512)
        drift = abs(diags.K[-1] - diags.K[0]) / abs(diags.K[0])
        assert drift < 1e-3

    def test_guards(self):
        lat = ModeLattice(64, 193)
        u0 = sequence_from_modes(lat, {1: 0.1, -1: 0.1})
        with pytest.raises(ValueError):
            envelope_evolve(u0, 1.0, max_support=8)  # closure is dense
        with pytest.raises(ValueError):
            envelope_evolve(u0, 1.0, steps=0)
        bad = SpectralSequence(lat, np.zeros(lat.size, dtype=np.complex128),
                               real_type=False)
        with pytest.raises(ValueError):
            envelope_evolve(bad, 1.0)

    def test_zero_data(self):
        lat = ModeLattice(16, 49)
        u0 = SpectralSequence(lat, np.zeros(lat.size, dtype=np.complex128),
                              real_type=True)
        traj, _ = envelope_evolve(u0, 1.0)
        assert np.max(np.abs(traj[-1][1].values)) == 0.0
