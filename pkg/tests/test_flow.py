import numpy as np
import pytest

from twistedma import (BicomplexGrid, FlowState, ScalarField, admissibility,
                       barriers, flat_background, run, stable_dt, step,
                       twisted_rhs)
from twistedma.errors import NotAdmissible
from twistedma.flow import MONITOR_HEADER

from conftest import bandlimited_field, cos_axis_field


def independent_rhs_oracle(u, background, t=0.0):
    """Re-derive the right-hand side from scratch with numpy.linalg only."""
    grid = u.grid
    vals = u.values

    def d2(arr, a, b):
        ha, hb = grid.spacing[a], grid.spacing[b]
        if a == b:
            return (np.roll(arr, -1, a) - 2 * arr + np.roll(arr, 1, a)) / ha ** 2
        out = np.zeros_like(arr)
        for sa in (1, -1):
            for sb in (1, -1):
                out = out + sa * sb * np.roll(np.roll(arr, -sa, a), -sb, b)
        return out / (4 * ha * hb)

    def hess(block):
        axes = grid.block_axes(block)
        m = len(axes)
        H = np.zeros(grid.shape + (m, m), dtype=complex)
        for i, (xi, yi) in enumerate(axes):
            for j, (xj, yj) in enumerate(axes):
                re = d2(vals, xi, xj) + d2(vals, yi, yj)
                im = d2(vals, xi, yj) - d2(vals, yi, xj)
                H[..., i, j] = 0.25 * (re + 1j * im)
        return H

    plus = background.omega0_plus.values - t * background.chi_plus.values + hess("plus")
    minus = background.omega0_minus.values - t * background.chi_minus.values - hess("minus")
    return (np.log(np.linalg.det(plus).real) - np.log(np.linalg.det(minus).real)
            + background.zeta_minus.values - background.zeta_plus.values
            - background.F_at(t))


class TestTwistedRhs:
    def test_flat_zero(self, small_grid):
        bg = flat_background(small_grid)
        rhs = twisted_rhs(FlowState(0.0, ScalarField.zeros(small_grid), bg))
        assert np.abs(rhs.values).max() == 0.0

    def test_constant_forcing(self, small_grid):
        c = 0.7
        F = ScalarField(small_grid, np.full(small_grid.shape, c))
        bg = flat_background(small_grid, f_times=np.array([0.0]), f_fields=[F])
        rhs = twisted_rhs(FlowState(0.0, ScalarField.zeros(small_grid), bg))
        assert np.allclose(rhs.values, -c)

    def test_matches_independent_composition(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        u = cos_axis_field(g, 0, amplitude=0.01)
        rhs = twisted_rhs(FlowState(0.0, u, bg))
        oracle = independent_rhs_oracle(u, bg)
        assert np.abs(rhs.values - oracle).max() < 1e-12

    def test_not_admissible_raises(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        u = cos_axis_field(g, 0, amplitude=10.0)
        with pytest.raises(NotAdmissible) as exc:
            twisted_rhs(FlowState(0.0, u, bg))
        assert exc.value.block == "plus"
        assert exc.value.eigenvalue < 0


class TestAdmissibility:
    def test_flat_margins(self, small_grid):
        bg = flat_background(small_grid)
        rep = admissibility(FlowState(0.0, ScalarField.zeros(small_grid), bg))
        assert rep.plus_margin == pytest.approx(1.0)
        assert rep.minus_margin == pytest.approx(1.0)
        assert rep.admissible

    def test_large_cosine_negative_plus_margin(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        rep = admissibility(FlowState(0.0, cos_axis_field(g, 0, amplitude=10.0), bg))
        assert rep.plus_margin < 0
        assert not rep.admissible


class TestStableDt:
    def test_plug_in_formula(self):
        g = BicomplexGrid.regular(1, 1, 64)
        bg = flat_background(g)
        dt = stable_dt(FlowState(0.0, ScalarField.zeros(g), bg))
        h = 2 * np.pi / 64
        assert dt == pytest.approx(h * h / 16.0, rel=1e-12)

    def test_quarter_under_refinement(self):
        bg16 = flat_background(BicomplexGrid.regular(1, 1, 16))
        bg32 = flat_background(BicomplexGrid.regular(1, 1, 32))
        d16 = stable_dt(FlowState(0.0, ScalarField.zeros(bg16.grid), bg16))
        d32 = stable_dt(FlowState(0.0, ScalarField.zeros(bg32.grid), bg32))
        assert d32 == pytest.approx(d16 / 4.0, rel=1e-12)


class TestStep:
    def test_stationary_unchanged(self, small_grid):
        bg = flat_background(small_grid)
        st = FlowState(0.0, ScalarField.zeros(small_grid), bg)
        new = step(st, stable_dt(st))
        assert np.abs(new.u.values).max() == 0.0
        assert new.monitors["admissible"]

    def test_cosine_decays(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        st = FlowState(0.0, cos_axis_field(g, 0, amplitude=1e-3), bg)
        new = step(st, stable_dt(st))
        assert np.abs(new.u.values).max() < 1e-3

    def test_richardson_second_order_in_dt(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        u0 = cos_axis_field(g, 0, amplitude=0.1)
        dt = stable_dt(FlowState(0.0, u0, bg))
        full = step(FlowState(0.0, u0, bg), dt)
        half = step(step(FlowState(0.0, u0, bg), dt / 2), dt / 2)
        diff = np.abs(full.u.values - half.u.values).max()
        # forward Euler: one-step splitting error is O(dt^2)
        assert 0 < diff < 10 * dt * dt

    def test_scheme_comparison_small_amplitude(self, rng):
        g = BicomplexGrid.regular(1, 1, 8)
        bg = flat_background(g)
        u = bandlimited_field(g, rng, amp=1e-4)
        v = ScalarField(g, u.values + 1e-4)
        dt = stable_dt(FlowState(0.0, u, bg))
        un = step(FlowState(0.0, u, bg), dt)
        vn = step(FlowState(0.0, v, bg), dt)
        assert (un.u.values - vn.u.values).max() <= 1e-10


class TestBarriers:
    def test_stationary_zero_slope(self, small_grid):
        bg = flat_background(small_grid)
        bp = barriers(ScalarField.zeros(small_grid), bg)
        assert bp.A == 0.0
        assert np.array_equal(bp.lower(1.0), bp.upper(1.0))

    def test_constant_forcing_slope(self, small_grid):
        c = -0.4
        F = ScalarField(small_grid, np.full(small_grid.shape, c))
        bg = flat_background(small_grid, f_times=np.array([0.0]), f_fields=[F])
        bp = barriers(ScalarField.zeros(small_grid), bg)
        assert bp.A == pytest.approx(abs(c))

    def test_slope_equals_measured_rhs(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        u0 = cos_axis_field(g, 0, amplitude=0.01)
        bp = barriers(u0, bg)
        rhs = twisted_rhs(FlowState(0.0, u0, bg))
        assert bp.A == pytest.approx(np.abs(rhs.values).max())


class TestRun:
    def test_stationary_trajectory_constant(self, small_grid):
        bg = flat_background(small_grid)
        traj = run(FlowState(0.0, ScalarField.zeros(small_grid), bg), 0.1)
        for st in traj.states:
            assert np.abs(st.u.values).max() <= 1e-14

    def test_monitor_csv_format(self, small_grid, tmp_path):
        bg = flat_background(small_grid)
        traj = run(FlowState(0.0, ScalarField.zeros(small_grid), bg), 0.05)
        path = tmp_path / "monitor.csv"
        traj.write_monitor_csv(path, comment="test stamp")
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "# test stamp"
        assert lines[1] == ",".join(MONITOR_HEADER)
        assert len(lines) == 2 + len(traj.rows)

    def test_perturbation_decays_monotonically(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        u0 = cos_axis_field(g, 0, amplitude=1e-3)
        traj = run(FlowState(0.0, u0, bg), 0.5, emit_every=5)
        sup = np.array(traj.rows)[:, 1]
        assert np.all(np.diff(sup) <= 1e-15)

    def test_barrier_gaps_recorded_nonnegative(self):
        g = BicomplexGrid.regular(1, 1, 16)
        F = ScalarField(g, 0.5 * np.sin(g.axis_coords(0)).reshape(-1, 1, 1, 1)
                        * np.ones(g.shape))
        bg = flat_background(g, f_times=np.array([0.0]), f_fields=[F])
        traj = run(FlowState(0.0, ScalarField.zeros(g), bg), 0.2, emit_every=5)
        rows = np.array(traj.rows)
        assert rows[:, 6].min() >= -1e-12
        assert rows[:, 7].min() >= -1e-12

    def test_ellipticity_persistence(self):
        g = BicomplexGrid.regular(1, 1, 16)
        bg = flat_background(g)
        u0 = cos_axis_field(g, 0, amplitude=0.2)
        traj = run(FlowState(0.0, u0, bg), 0.3, emit_every=5)
        rows = np.array(traj.rows)
        margins = np.concatenate([rows[1:, 4], rows[1:, 5]])
        initial = min(rows[0, 4], rows[0, 5])
        assert margins.min() >= 0.5 * initial

    def test_finite_tau_star_scenario_completes(self):
        from twistedma import HermitianMatrixField
        g = BicomplexGrid.regular(1, 1, 8)
        bg = flat_background(
            g,
            chi_plus=HermitianMatrixField.constant(g, "plus", 2 * np.eye(1)),
            chi_minus=HermitianMatrixField.constant(g, "minus", -np.eye(1)))
        tau = bg.tau_star()
        traj = run(FlowState(0.0, ScalarField.zeros(g), bg), 0.9 * tau,
                   emit_every=50)
        rows = np.array(traj.rows)
        assert rows[-1, 4] > 0 and rows[-1, 5] > 0
