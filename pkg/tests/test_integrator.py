"""Time stepping, initial conditions and checkpointing."""

import os

import numpy as np
import pytest

from mhddamp import (
    BlowUpError,
    DampingSpec,
    GridSpec,
    InitialCondition,
    SolverConfig,
    friedrichs_truncate,
    inverse_transform,
    load_checkpoint,
    make_initial,
    run,
    save_checkpoint,
    step,
)
from mhddamp.fields import hermitian_defect
from mhddamp.integrator import cfl_bound, config_hash, make_initial_from_config
from mhddamp.operators import h1_norm_pair


class TestMakeInitial:
    def test_random_divfree_hits_target_exactly(self, grid16):
        state = make_initial("random_divfree", grid16, seed=3, target_h1=0.01)
        assert abs(h1_norm_pair(state.u, state.b) - 0.01) <= 1e-12

    def test_zero_target_gives_zero_field(self, grid16):
        state = make_initial("random_divfree", grid16, seed=3, target_h1=0.0)
        assert np.all(state.u.coeffs == 0.0) and np.all(state.b.coeffs == 0.0)

    def test_same_seed_identical(self, grid16):
        a = make_initial("random_divfree", grid16, seed=5, target_h1=1.0)
        b = make_initial("random_divfree", grid16, seed=5, target_h1=1.0)
        assert np.array_equal(a.u.coeffs, b.u.coeffs)
        assert np.array_equal(a.b.coeffs, b.b.coeffs)

    def test_single_mode_is_sine(self, grid16):
        state = make_initial("single_mode", grid16, mode=(0, 0, 1), amplitude=0.7)
        _, _, x3 = grid16.mesh()
        u = inverse_transform(state.u)
        expected = 0.7 * np.sin(x3) + np.zeros_like(u.values[0])
        assert np.max(np.abs(u.values[0] - expected)) <= 1e-12
        assert np.max(np.abs(u.values[1:])) <= 1e-14
        assert np.all(state.b.coeffs == 0.0)

    def test_all_kinds_divergence_free(self, grid16):
        for kind, kw in [
            ("taylor_green_like", {}),
            ("random_divfree", {"target_h1": 1.0}),
            ("single_mode", {"mode": (1, 2, 0)}),
        ]:
            state = make_initial(kind, grid16, seed=1, **kw)
            assert state.max_divergence() <= 1e-10

    def test_random_field_is_hermitian(self, grid16):
        state = make_initial("random_divfree", grid16, seed=9, target_h1=1.0)
        assert hermitian_defect(state.u) <= 1e-12
        assert hermitian_defect(state.b) <= 1e-12


class TestStep:
    def test_zero_state_stays_zero(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=1e-2, t_end=1e-2,
            initial_condition=InitialCondition(kind="random_divfree", target_h1=0.0),
        )
        state = make_initial_from_config(cfg)
        out = step(state, cfg)
        assert np.all(out.u.coeffs == 0.0) and np.all(out.b.coeffs == 0.0)
        assert out.t == pytest.approx(1e-2)

    def test_viscous_decay_of_invariant_mode(self):
        # u = sin(x3) e1 is annihilated by the nonlinearity, so the
        # integrating factor reproduces exp(-nu_v t) exactly
        grid = GridSpec(n_modes=16)
        cfg = SolverConfig(
            grid=grid, dt=1e-3, t_end=1.0,
            initial_condition=InitialCondition(kind="single_mode", mode=(0, 0, 1)),
        )
        final, _ = run(cfg)
        _, _, x3 = grid.mesh()
        u = inverse_transform(final.u)
        exact = np.exp(-1.0) * np.sin(x3) + np.zeros_like(u.values[0])
        assert np.max(np.abs(u.values[0] - exact)) <= 1e-8

    def test_anisotropic_viscosity_decay(self):
        # a vertical mode decays at the vertical rate only
        grid = GridSpec(n_modes=16)
        cfg = SolverConfig(
            grid=grid, dt=1e-3, t_end=0.5, nu_h=5.0, nu_v=2.0,
            initial_condition=InitialCondition(kind="single_mode", mode=(0, 0, 1)),
        )
        final, _ = run(cfg)
        _, _, x3 = grid.mesh()
        u = inverse_transform(final.u)
        exact = np.exp(-2.0 * 0.5) * np.sin(x3) + np.zeros_like(u.values[0])
        assert np.max(np.abs(u.values[0] - exact)) <= 1e-10

    def test_cfl_violation_logged(self, grid16, caplog):
        import logging

        cfg = SolverConfig(
            grid=grid16, dt=0.5, t_end=0.5,
            initial_condition=InitialCondition(kind="single_mode", amplitude=50.0),
        )
        with caplog.at_level(logging.WARNING, logger="mhddamp.integrator"):
            try:
                run(cfg)
            except BlowUpError:
                pass
        assert any("stability bound" in rec.message for rec in caplog.records)

    def test_richardson_order(self, grid16):
        # two steps of dt/2 against one step of dt; local error is O(dt^5)
        ic = InitialCondition(kind="random_divfree", target_h1=40.0)
        errs = []
        dts = (4e-3, 2e-3, 1e-3)
        for dt in dts:
            one = SolverConfig(grid=grid16, dt=dt, t_end=dt, initial_condition=ic, seed=2)
            two = SolverConfig(grid=grid16, dt=dt / 2, t_end=dt, initial_condition=ic, seed=2)
            s1, _ = run(one)
            s2, _ = run(two)
            err = np.sqrt(
                np.sum(np.abs(s1.u.coeffs - s2.u.coeffs) ** 2)
                + np.sum(np.abs(s1.b.coeffs - s2.b.coeffs) ** 2)
            )
            errs.append(err)
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert slope >= 3.8

    def test_truncation_after_step_is_noop(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=2e-3, t_end=2e-2,
            initial_condition=InitialCondition(kind="taylor_green_like", amplitude=1.0),
            damping=DampingSpec(kind="power", alpha=1.0, beta=4.0),
        )
        state = make_initial_from_config(cfg)
        for _ in range(5):
            state = step(state, cfg)
        assert np.all(state.u.coeffs[:, ~grid16.keep_mask] == 0.0)
        assert np.all(state.b.coeffs[:, ~grid16.keep_mask] == 0.0)
        again = friedrichs_truncate(state.u)
        assert np.array_equal(again.coeffs, state.u.coeffs)

    def test_divergence_and_symmetry_preserved(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=2e-3, t_end=2e-2,
            initial_condition=InitialCondition(kind="random_divfree", target_h1=2.0),
            damping=DampingSpec(kind="generalized", alpha=1.0, f_id="log1"),
        )
        state = make_initial_from_config(cfg)
        for _ in range(10):
            state = step(state, cfg)
            assert state.max_divergence() <= 1e-10
            assert hermitian_defect(state.u) <= 1e-12

    def test_blow_up_signal(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=0.1, t_end=2.0,
            initial_condition=InitialCondition(kind="random_divfree", target_h1=1e3),
            seed=1,
        )
        with pytest.raises(BlowUpError) as info:
            run(cfg)
        assert info.value.time > 0
        assert info.value.ledger is not None
        assert len(info.value.ledger) >= 1


class TestRun:
    def test_t_end_zero_single_row(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=1e-2, t_end=0.0,
            initial_condition=InitialCondition(kind="single_mode"),
        )
        _, ledger = run(cfg)
        assert len(ledger) == 1
        assert ledger.times[0] == 0.0

    def test_ledger_row_times(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=1e-2, t_end=0.05, ledger_stride=2,
            initial_condition=InitialCondition(kind="single_mode"),
        )
        _, ledger = run(cfg)
        assert ledger.times == pytest.approx([0.0, 0.02, 0.04, 0.05])

    def test_deterministic_ledger(self, grid16):
        cfg = SolverConfig(
            grid=grid16, dt=2e-3, t_end=0.05,
            initial_condition=InitialCondition(kind="random_divfree", target_h1=1.0),
            damping=DampingSpec(kind="power", alpha=1.0, beta=4.0),
            seed=12,
        )
        _, led1 = run(cfg)
        _, led2 = run(cfg)
        assert led1.to_csv_string() == led2.to_csv_string()

    def test_config_validation(self, grid16):
        ic = InitialCondition(kind="single_mode")
        with pytest.raises(ValueError):
            SolverConfig(grid=grid16, dt=-1e-3, t_end=1.0, initial_condition=ic)
        with pytest.raises(ValueError):
            SolverConfig(grid=grid16, dt=3e-3, t_end=1e-2, initial_condition=ic)
        with pytest.raises(ValueError):
            SolverConfig(grid=grid16, dt=1e-3, t_end=1.0, initial_condition=ic, nu_h=0.0)
        with pytest.raises(ValueError):
            InitialCondition(kind="random_divfree")  # missing target

    def test_cfl_bound_scales_with_amplitude(self, grid16):
        ic_small = InitialCondition(kind="single_mode", amplitude=0.1)
        ic_big = InitialCondition(kind="single_mode", amplitude=10.0)
        cfg_s = SolverConfig(grid=grid16, dt=1e-3, t_end=0.0, initial_condition=ic_small)
        cfg_b = SolverConfig(grid=grid16, dt=1e-3, t_end=0.0, initial_condition=ic_big)
        bound_s = cfl_bound(make_initial_from_config(cfg_s), cfg_s)
        bound_b = cfl_bound(make_initial_from_config(cfg_b), cfg_b)
        assert bound_s == pytest.approx(100.0 * bound_b, rel=1e-6)

    def test_config_hash_sensitivity(self, grid16):
        ic = InitialCondition(kind="single_mode")
        a = SolverConfig(grid=grid16, dt=1e-3, t_end=1e-2, initial_condition=ic, seed=1)
        b = SolverConfig(grid=grid16, dt=1e-3, t_end=1e-2, initial_condition=ic, seed=2)
        assert config_hash(a) != config_hash(b)
        assert config_hash(a) == config_hash(
            SolverConfig(grid=grid16, dt=1e-3, t_end=1e-2, initial_condition=ic, seed=1)
        )


class TestCheckpoint:
    def test_bit_exact_round_trip(self, grid16, tmp_path):
        state = make_initial("random_divfree", grid16, seed=9, target_h1=1.0)
        state.t = 0.625
        path = tmp_path / "state.mhdf"
        save_checkpoint(path, state)
        loaded = load_checkpoint(path)
        assert loaded.t == state.t
        assert loaded.grid.n_modes == 16
        assert loaded.grid.truncation_radius == grid16.truncation_radius
        assert np.array_equal(
            loaded.u.coeffs.view(np.float64), state.u.coeffs.view(np.float64)
        )
        assert np.array_equal(
            loaded.b.coeffs.view(np.float64), state.b.coeffs.view(np.float64)
        )

    def test_restart_continues_trajectory(self, grid16, tmp_path):
        ic = InitialCondition(kind="taylor_green_like", amplitude=0.5)
        full = SolverConfig(grid=grid16, dt=1e-2, t_end=0.1, initial_condition=ic)
        final_full, _ = run(full)

        half = SolverConfig(grid=grid16, dt=1e-2, t_end=0.05, initial_condition=ic)
        mid, _ = run(half)
        path = tmp_path / "mid.mhdf"
        save_checkpoint(path, mid)
        resumed = SolverConfig(
            grid=grid16, dt=1e-2, t_end=0.1,
            initial_condition=InitialCondition(kind="from_checkpoint", path=str(path)),
        )
        final_resumed, _ = run(resumed)
        assert np.array_equal(final_resumed.u.coeffs, final_full.u.coeffs)
        assert np.array_equal(final_resumed.b.coeffs, final_full.b.coeffs)

    def test_grid_mismatch_rejected(self, grid8, grid16, tmp_path):
        state = make_initial("single_mode", grid8)
        path = tmp_path / "small.mhdf"
        save_checkpoint(path, state)
        with pytest.raises(ValueError, match="does not match"):
            make_initial("from_checkpoint", grid16, path=str(path))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.mhdf"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)
