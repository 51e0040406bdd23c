"""Forcing, feedback term, coupled-run, and checkpoint tests."""

import numpy as np
import pytest

from nudge2d.assimilation import (
    CoupledRun,
    ReferenceBlowUpError,
    build_forcing,
    derive_seed_streams,
    nudging_increment,
    spin_up,
)
from nudge2d.checkpoint import (
    load_checkpoint,
    save_checkpoint,
    stepper_from_checkpoint,
)
from nudge2d.observers import make_observers
from nudge2d.spectral import (
    TWO_PI,
    advection_rhs,
    dealias,
    l2_norm,
    linf_norm,
    make_grid,
    streamfunction,
    to_physical,
    to_spectral,
    velocity,
    velocity_spectral,
)
from nudge2d.stepping import BlowUpError, Stepper


@pytest.fixture(scope="module")
def grid64():
    return make_grid(64)


def smooth_state(grid, seed, kmax=6, amplitude=1.0):
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    coeffs *= (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax)
    coeffs = dealias(grid, coeffs)
    coeffs[0, 0] = 0.0
    phys = to_physical(grid, coeffs)
    coeffs = dealias(grid, to_spectral(grid, amplitude * phys / np.max(np.abs(phys))))
    coeffs[0, 0] = 0.0
    return coeffs


def low_band_forcing(grid, seed, amplitude=0.02):
    return amplitude * smooth_state(grid, seed, kmax=4)


class TestForcing:
    def test_velocity_norm_hits_grashof_target(self):
        g = make_grid(256)
        f = build_forcing(g, 1e6, 1e-4, 0)
        u1_hat, u2_hat = velocity_spectral(g, f)
        vel_norm = TWO_PI * np.sqrt(np.sum(np.abs(u1_hat) ** 2 + np.abs(u2_hat) ** 2))
        assert vel_norm == pytest.approx(1e-2, rel=1e-12)

    def test_desk_target(self):
        g = make_grid(128)
        f = build_forcing(g, 5e4, 1e-3, 3, band=(6, 8))
        u1_hat, u2_hat = velocity_spectral(g, f)
        vel_norm = TWO_PI * np.sqrt(np.sum(np.abs(u1_hat) ** 2 + np.abs(u2_hat) ** 2))
        assert vel_norm == pytest.approx(5e4 * 1e-6, rel=1e-12)

    def test_mean_free_and_band_limited(self):
        g = make_grid(128)
        f = build_forcing(g, 5e4, 1e-3, 5)
        assert f[0, 0] == 0
        k = np.sqrt(g.k2)
        outside = (k < 32) | (k > 34)
        assert np.all(f[outside] == 0)
        assert np.array_equal(f, dealias(g, f))

    def test_real_in_physical_space(self):
        g = make_grid(128)
        f = build_forcing(g, 5e4, 1e-3, 9)
        raw = np.fft.ifft2(f) * g.n**2
        assert np.max(np.abs(raw.imag)) < 1e-12 * np.max(np.abs(raw.real))

    def test_same_seed_bit_identical(self):
        g = make_grid(128)
        assert np.array_equal(build_forcing(g, 5e4, 1e-3, 11), build_forcing(g, 5e4, 1e-3, 11))
        assert not np.array_equal(build_forcing(g, 5e4, 1e-3, 11), build_forcing(g, 5e4, 1e-3, 12))

    def test_band_outside_grid_rejected(self):
        with pytest.raises(ValueError):
            build_forcing(make_grid(64), 5e4, 1e-3, 0)  # default band above 64/3

    def test_bad_parameters_rejected(self):
        g = make_grid(128)
        with pytest.raises(ValueError):
            build_forcing(g, -1.0, 1e-3, 0)
        with pytest.raises(ValueError):
            build_forcing(g, 5e4, 0.0, 0)


class TestSpinUp:
    def test_zero_duration_returns_zero_field(self):
        g = make_grid(128)
        res = spin_up(g, 1e-3, 5e4, 0.005, 0.0, 1)
        assert np.all(res.stepper.omega_hat == 0)
        assert res.energy_trace == [(0.0, 0.0)]

    def test_short_spin_up_is_finite_and_mean_free(self):
        g = make_grid(128)
        res = spin_up(g, 1e-3, 5e4, 0.005, 0.5, 1, band=(6, 8), trace_every=50)
        w = res.stepper.omega_hat
        assert np.all(np.isfinite(w))
        assert w[0, 0] == 0
        assert res.energy_trace[-1][1] > 0

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            spin_up(make_grid(128), 1e-3, 5e4, 0.005, -1.0, 1)


class TestNudgingIncrement:
    def test_zero_difference_gives_zero(self, grid64):
        rng = np.random.default_rng(0)
        u = (rng.standard_normal(grid64.shape), rng.standard_normal(grid64.shape))
        obs = make_observers(grid64, "bleeps", np.random.default_rng(1), count=20)
        out = nudging_increment(grid64, u, u, obs, 10.0)
        assert np.max(np.abs(out)) == 0

    def test_zero_gain_gives_zero(self, grid64):
        rng = np.random.default_rng(2)
        u = (rng.standard_normal(grid64.shape), rng.standard_normal(grid64.shape))
        v = (rng.standard_normal(grid64.shape), rng.standard_normal(grid64.shape))
        obs = make_observers(grid64, "static", np.random.default_rng(3), m=8)
        assert np.max(np.abs(nudging_increment(grid64, u, v, obs, 0.0))) == 0

    def test_dense_static_recovers_vorticity_difference(self, grid64):
        w_u = smooth_state(grid64, 4)
        w_v = smooth_state(grid64, 5)
        obs = make_observers(grid64, "static", np.random.default_rng(6), m=grid64.n)
        out = nudging_increment(grid64, velocity(grid64, w_u), velocity(grid64, w_v), obs, 7.0)
        expected = 7.0 * (w_u - w_v)
        assert np.max(np.abs(out - expected)) < 1e-12 * np.max(np.abs(expected))

    def test_antisymmetric_in_the_two_states(self, grid64):
        u = velocity(grid64, smooth_state(grid64, 7))
        v = velocity(grid64, smooth_state(grid64, 8))
        for kind, kwargs in [
            ("static", dict(m=8)),
            ("bleeps", dict(count=30)),
            ("random-sweep", dict(count=30)),
            ("thin-sweep", dict(a=4, b=4)),
            ("thick-sweep", dict(count=64)),
        ]:
            obs = make_observers(grid64, kind, np.random.default_rng(9), **kwargs)
            fwd = nudging_increment(grid64, u, v, obs, 3.0)
            rev = nudging_increment(grid64, v, u, obs, 3.0)
            assert np.allclose(fwd, -rev, atol=1e-14), kind

    def test_output_is_dealiased_and_mean_free(self, grid64):
        u = velocity(grid64, smooth_state(grid64, 10))
        v = velocity(grid64, smooth_state(grid64, 11))
        obs = make_observers(grid64, "creeps", np.random.default_rng(12), count=25)
        out = nudging_increment(grid64, u, v, obs, 5.0)
        assert out[0, 0] == 0
        assert np.array_equal(out, dealias(grid64, out))


class TestCoupledRun:
    def make_run(self, grid, mu, observers, seed=13, forcing=None):
        w0 = smooth_state(grid, seed)
        u = Stepper(grid, w0, nu=1e-3, dt=0.005)
        v = Stepper(grid, np.zeros(grid.shape, dtype=complex), nu=1e-3, dt=0.005)
        f = low_band_forcing(grid, seed + 1) if forcing is None else forcing
        return CoupledRun(grid, u, v, observers, mu, f)

    def test_zero_gain_decouples(self, grid64):
        obs = make_observers(grid64, "static", np.random.default_rng(14), m=8)
        run = self.make_run(grid64, 0.0, obs)
        solo = Stepper(grid64, run.u.omega_hat.copy(), nu=1e-3, dt=0.005)
        forcing = run.forcing_hat
        for _ in range(20):
            run.step()
            solo.step(advection_rhs(grid64, solo.omega_hat) + forcing)
        assert np.array_equal(run.u.omega_hat, solo.omega_hat)

    def test_reference_identical_across_strategies(self, grid64):
        states = []
        for kind, kwargs in [("bleeps", dict(count=16)), ("thin-sweep", dict(a=2, b=2))]:
            obs = make_observers(grid64, kind, np.random.default_rng(15), **kwargs)
            run = self.make_run(grid64, 10.0, obs, seed=21)
            for _ in range(15):
                run.step()
            states.append(run.u.omega_hat.copy())
        assert np.array_equal(states[0], states[1])

    def test_equal_initial_states_stay_locked(self, grid64):
        w0 = smooth_state(grid64, 16)
        u = Stepper(grid64, w0, nu=1e-3, dt=0.005)
        v = Stepper(grid64, w0.copy(), nu=1e-3, dt=0.005)
        obs = make_observers(grid64, "bleeps", np.random.default_rng(17), count=25)
        run = CoupledRun(grid64, u, v, obs, 10.0, low_band_forcing(grid64, 18))
        for _ in range(50):
            run.step()
            rec = run.error_record()
            assert rec.err_psi_l2 < 1e-12
            assert rec.err_omega_l2 < 1e-12

    def test_error_metrics_closed_form(self, grid64):
        w_u = smooth_state(grid64, 19)
        sin_x = to_spectral(grid64, np.sin(grid64.xx))
        u = Stepper(grid64, w_u + sin_x, nu=1e-3, dt=0.005)
        v = Stepper(grid64, w_u, nu=1e-3, dt=0.005)
        obs = make_observers(grid64, "static", np.random.default_rng(20), m=4)
        run = CoupledRun(grid64, u, v, obs, 10.0, low_band_forcing(grid64, 21))
        rec = run.error_record()
        assert rec.err_omega_l2 == pytest.approx(np.sqrt(2 * np.pi**2), rel=1e-12)
        assert rec.err_omega_linf == pytest.approx(1.0, rel=1e-10)
        assert rec.err_psi_l2 == pytest.approx(np.sqrt(2 * np.pi**2), rel=1e-12)

    def test_equal_states_give_zero_errors(self, grid64):
        w = smooth_state(grid64, 22)
        u = Stepper(grid64, w, nu=1e-3, dt=0.005)
        v = Stepper(grid64, w.copy(), nu=1e-3, dt=0.005)
        obs = make_observers(grid64, "static", np.random.default_rng(23), m=4)
        run = CoupledRun(grid64, u, v, obs, 1.0, low_band_forcing(grid64, 24))
        rec = run.error_record()
        assert rec.err_psi_l2 == 0 and rec.err_omega_l2 == 0 and rec.err_omega_linf == 0

    def test_aggressive_gain_blows_up(self, grid64):
        obs = make_observers(grid64, "static", np.random.default_rng(25), m=grid64.n)
        run = self.make_run(grid64, 500.0, obs)  # mu*dt = 2.5 > 2
        with pytest.raises(BlowUpError):
            for _ in range(400):
                run.step()

    def test_modest_gain_stays_stable(self, grid64):
        obs = make_observers(grid64, "static", np.random.default_rng(26), m=grid64.n)
        run = self.make_run(grid64, 10.0, obs)  # mu*dt = 0.05
        for _ in range(400):
            run.step()
        assert np.all(np.isfinite(run.v.omega_hat))
        assert run.error_record().err_psi_l2 < 1.0

    def test_mismatched_clocks_rejected(self, grid64):
        u = Stepper(grid64, smooth_state(grid64, 27), nu=1e-3, dt=0.005, t=1.0)
        v = Stepper(grid64, np.zeros(grid64.shape, dtype=complex), nu=1e-3, dt=0.005)
        obs = make_observers(grid64, "static", np.random.default_rng(28), m=4)
        with pytest.raises(ValueError):
            CoupledRun(grid64, u, v, obs, 1.0, low_band_forcing(grid64, 29))


class TestCheckpoint:
    def test_round_trip_bits(self, grid64, tmp_path):
        st = Stepper(grid64, smooth_state(grid64, 30), nu=1e-3, dt=0.005)
        f = low_band_forcing(grid64, 31)
        for _ in range(5):
            st.step(advection_rhs(grid64, st.omega_hat) + f)
        path = tmp_path / "state.ckpt"
        save_checkpoint(path, st, grashof=5e4, seed=77)
        ck = load_checkpoint(path)
        assert ck.n == grid64.n and ck.nu == 1e-3 and ck.grashof == 5e4 and ck.seed == 77
        assert ck.t == st.t and ck.step_index == st.step_index
        assert np.array_equal(ck.omega_hat, st.omega_hat)
        assert len(ck.history) == 2
        for (ta, ra), (tb, rb) in zip(ck.history, st.history):
            assert ta == tb
            assert np.array_equal(ra, rb)

    def test_restart_matches_continuous_run_bit_for_bit(self, grid64, tmp_path):
        forcing = low_band_forcing(grid64, 32)

        def rhs(st):
            return advection_rhs(grid64, st.omega_hat) + forcing

        cont = Stepper(grid64, smooth_state(grid64, 33), nu=1e-3, dt=0.005)
        for _ in range(200):
            cont.step(rhs(cont))

        first = Stepper(grid64, smooth_state(grid64, 33), nu=1e-3, dt=0.005)
        for _ in range(100):
            first.step(rhs(first))
        path = tmp_path / "mid.ckpt"
        save_checkpoint(path, first, grashof=5e4, seed=0)
        resumed = stepper_from_checkpoint(load_checkpoint(path), grid64, 0.005)
        for _ in range(100):
            resumed.step(rhs(resumed))

        assert np.array_equal(resumed.omega_hat, cont.omega_hat)
        assert resumed.step_index == cont.step_index

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_truncated_file_rejected(self, grid64, tmp_path):
        st = Stepper(grid64, smooth_state(grid64, 34), nu=1e-3, dt=0.005)
        path = tmp_path / "trunc.ckpt"
        save_checkpoint(path, st, grashof=1.0, seed=0)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_grid_mismatch_rejected(self, grid64, tmp_path):
        st = Stepper(grid64, smooth_state(grid64, 35), nu=1e-3, dt=0.005)
        path = tmp_path / "n64.ckpt"
        save_checkpoint(path, st, grashof=1.0, seed=0)
        with pytest.raises(ValueError):
            stepper_from_checkpoint(load_checkpoint(path), make_grid(32), 0.005)


class TestSeedStreams:
    def test_streams_are_deterministic_and_distinct(self):
        f1, o1 = derive_seed_streams(123)
        f2, o2 = derive_seed_streams(123)
        a = np.random.default_rng(f1).uniform(size=5)
        assert np.array_equal(a, np.random.default_rng(f2).uniform(size=5))
        assert not np.array_equal(a, np.random.default_rng(o1).uniform(size=5))


class TestReferenceBlowUp:
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_unstable_reference_raises_reference_error(self):
        g = make_grid(32)
        w0 = smooth_state(g, 36)
        u = Stepper(g, w0 * 1e12, nu=0.0, dt=50.0)  # absurd step size
        v = Stepper(g, np.zeros(g.shape, dtype=complex), nu=0.0, dt=50.0)
        obs = make_observers(g, "static", np.random.default_rng(37), m=4)
        run = CoupledRun(g, u, v, obs, 0.0, np.zeros(g.shape, dtype=complex))
        with pytest.raises((ReferenceBlowUpError, BlowUpError)):
            for _ in range(10000):
                run.step()
