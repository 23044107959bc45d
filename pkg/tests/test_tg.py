import math

import numpy as np
import pytest

from pmtg.tg import (
    TWO_PI,
    GaitError,
    LegCommand,
    TgConfig,
    TgModulation,
    TgState,
    advance_phase,
    figure_eight,
    gait_table,
    leg_phase,
    tg_leg_targets,
    warp_time,
)

TOL = 1e-9


class TestAdvancePhase:
    def test_basic_step(self):
        out = advance_phase(TgState(0.0), 1.0, 0.01)
        assert out.phase == pytest.approx(2 * math.pi * 0.01, abs=TOL)

    def test_zero_frequency_freezes_phase(self):
        assert advance_phase(TgState(math.pi), 0.0, 0.01).phase == math.pi

    def test_wraparound(self):
        out = advance_phase(TgState(6.2), 2.0, 0.05)
        assert out.phase == pytest.approx(6.2 + 2 * math.pi * 0.1 - 2 * math.pi, abs=TOL)

    def test_result_always_wrapped(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            s = advance_phase(TgState(rng.uniform(0, TWO_PI)), rng.uniform(0, 5), rng.uniform(1e-4, 0.5))
            assert 0.0 <= s.phase < TWO_PI

    def test_additive_mod_2pi(self):
        # n small steps at constant f equal one big step, up to wrapping
        rng = np.random.default_rng(1)
        for _ in range(50):
            f = rng.uniform(0, 3)
            dt = rng.uniform(1e-3, 0.05)
            n = rng.integers(2, 40)
            s = TgState(rng.uniform(0, TWO_PI))
            stepped = s
            for _ in range(n):
                stepped = advance_phase(stepped, f, dt)
            direct = advance_phase(s, f, n * dt)
            diff = (stepped.phase - direct.phase) % TWO_PI
            assert min(diff, TWO_PI - diff) < 1e-8

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            advance_phase(TgState(0.0), float("nan"), 0.01)
        with pytest.raises(ValueError):
            advance_phase(TgState(0.0), -1.0, 0.01)
        with pytest.raises(ValueError):
            advance_phase(TgState(0.0), 1.0, 0.0)


class TestLegPhase:
    def test_offset(self):
        assert leg_phase(1.0, math.pi) == pytest.approx(1.0 + math.pi, abs=TOL)

    def test_reference_leg_identity(self):
        for phi in (0.0, 1.3, 5.9):
            assert leg_phase(phi, 0.0) == phi

    def test_wraparound(self):
        assert leg_phase(3 * math.pi / 2, math.pi) == pytest.approx(math.pi / 2, abs=TOL)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            leg_phase(float("inf"), 0.0)


class TestWarpTime:
    def test_identity_at_half(self):
        assert warp_time(math.pi / 2, 0.5) == pytest.approx(math.pi / 2, abs=TOL)
        grid = np.linspace(0, TWO_PI, 1000, endpoint=False)
        assert np.allclose(warp_time(grid, 0.5), grid, atol=TOL)

    def test_endpoint(self):
        assert warp_time(0.0, 0.3) == 0.0

    def test_boundary_maps_to_pi_under_both_branches(self):
        beta = 0.25
        boundary = TWO_PI * (1 - beta)
        assert warp_time(3 * math.pi / 2, beta) == pytest.approx(math.pi, abs=TOL)
        swing_branch = boundary / (2 * (1 - beta))
        stance_branch = TWO_PI - (TWO_PI - boundary) / (2 * beta)
        assert swing_branch == pytest.approx(math.pi, abs=TOL)
        assert stance_branch == pytest.approx(math.pi, abs=TOL)

    @pytest.mark.parametrize("beta", [0.2, 0.4, 0.5, 0.6, 0.8])
    def test_continuity_on_grid(self, beta):
        eps = 1e-6
        grid = np.linspace(0.0, TWO_PI - 2 * eps, 10_000)
        jump = np.abs(warp_time(grid + eps, beta) - warp_time(grid, beta))
        bound = eps / (2 * min(beta, 1 - beta)) + 1e-9
        assert jump.max() <= bound

    @pytest.mark.parametrize("beta", [0.2, 0.4, 0.5, 0.6, 0.8])
    def test_monotone_non_decreasing(self, beta):
        grid = np.linspace(0.0, TWO_PI, 10_000, endpoint=False)
        values = warp_time(grid, beta)
        assert np.all(np.diff(values) >= 0.0)
        assert values[0] == 0.0
        assert values[-1] < TWO_PI

    def test_rejects_bad_beta(self):
        for beta in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(GaitError):
                warp_time(1.0, beta)


class TestLegTargets:
    def test_constants_only(self):
        cfg = TgConfig(swing_center=0.1, extension_swing_amplitude=0.0)
        mod = TgModulation(frequency=1.0, swing_amplitude=0.0, walking_height=1.0)
        for phase in (0.0, 1.0, 4.5):
            cmd = tg_leg_targets(TgState(phase), mod, cfg)
            assert np.allclose(cmd.swing, 0.1, atol=TOL)
            assert np.allclose(cmd.extension, 1.0, atol=TOL)

    def test_bounding_offsets_at_zero_phase(self):
        cfg = TgConfig(
            swing_center=0.0,
            extension_swing_amplitude=0.2,
            stance_fraction=0.5,
            leg_phase_offsets=(0.0, 0.0, math.pi, math.pi),
        )
        mod = TgModulation(frequency=1.0, swing_amplitude=0.3, walking_height=1.0)
        cmd = tg_leg_targets(TgState(0.0), mod, cfg)
        assert np.allclose(cmd.swing[:2], 0.3, atol=TOL)
        assert np.allclose(cmd.swing[2:], -0.3, atol=TOL)
        assert np.allclose(cmd.extension, 1.0, atol=TOL)

    def test_quarter_phase(self):
        cfg = TgConfig(
            swing_center=0.0,
            extension_swing_amplitude=0.2,
            stance_fraction=0.5,
            leg_phase_offsets=(0.0, 0.0, math.pi, math.pi),
        )
        mod = TgModulation(frequency=1.0, swing_amplitude=0.3, walking_height=1.0)
        cmd = tg_leg_targets(TgState(math.pi / 2), mod, cfg)
        assert np.allclose(cmd.swing[:2], 0.0, atol=TOL)
        assert np.allclose(cmd.extension[:2], 1.2, atol=TOL)

    def test_equal_offsets_give_identical_commands(self):
        cfg = gait_table("bound")
        mod = TgModulation(frequency=2.0, swing_amplitude=0.25, walking_height=1.1)
        rng = np.random.default_rng(3)
        for _ in range(20):
            cmd = tg_leg_targets(TgState(rng.uniform(0, TWO_PI)), mod, cfg)
            assert cmd.swing[0] == cmd.swing[1]
            assert cmd.extension[0] == cmd.extension[1]
            assert cmd.swing[2] == cmd.swing[3]
            assert cmd.extension[2] == cmd.extension[3]

    def test_does_not_advance_phase(self):
        state = TgState(1.234)
        tg_leg_targets(state, TgModulation(3.0, 0.2, 1.0), gait_table("walk"))
        assert state.phase == 1.234


class TestFigureEight:
    def test_origin(self):
        assert figure_eight(0.0, 1.0, 1.0) == (0.0, 0.0)

    def test_quarter(self):
        x, y = figure_eight(0.25, 0.8, 0.6)
        assert x == pytest.approx(0.8, abs=TOL)
        assert y == pytest.approx(0.0, abs=TOL)

    def test_eighth(self):
        x, y = figure_eight(0.125, 1.0, 1.0)
        assert x == pytest.approx(math.sqrt(2) / 2, abs=TOL)
        assert y == pytest.approx(0.25, abs=TOL)

    def test_periodic_and_half_period_symmetry(self):
        # x is odd under a half-period shift; y (the doubled-frequency
        # component) returns to itself, which is what makes the two lobes
        rng = np.random.default_rng(4)
        for _ in range(100):
            t = rng.uniform(0, 1)
            ax, ay = rng.uniform(0.1, 2, size=2)
            x0, y0 = figure_eight(t, ax, ay)
            x1, y1 = figure_eight(t + 1.0, ax, ay)
            assert x1 == pytest.approx(x0, abs=1e-9) and y1 == pytest.approx(y0, abs=1e-9)
            xh, yh = figure_eight(t + 0.5, ax, ay)
            assert xh == pytest.approx(-x0, abs=1e-9)
            assert yh == pytest.approx(y0, abs=1e-9)

    def test_amplitude_bounds(self):
        ts = np.linspace(0, 1, 2000)
        for ax, ay in ((1.0, 1.0), (0.3, 2.0)):
            pts = np.array([figure_eight(t, ax, ay) for t in ts])
            assert np.abs(pts[:, 0]).max() <= ax + TOL
            assert np.abs(pts[:, 1]).max() <= ay / 4 + TOL


class TestGaitTable:
    def test_bound_offsets(self):
        cfg = gait_table("bound")
        assert cfg.leg_phase_offsets == (0.0, 0.0, math.pi, math.pi)

    def test_walk_offsets(self):
        cfg = gait_table("walk")
        assert cfg.leg_phase_offsets == (0.0, math.pi, math.pi, 0.0)
        assert cfg.stance_fraction == 0.5

    def test_unknown_gait(self):
        with pytest.raises(GaitError):
            gait_table("trot")

    def test_overrides(self):
        cfg = gait_table("walk", stance_fraction=0.4, dt=0.02)
        assert cfg.stance_fraction == 0.4
        assert cfg.dt == 0.02

    def test_config_validation(self):
        with pytest.raises(GaitError):
            TgConfig(stance_fraction=1.2)
        with pytest.raises(GaitError):
            TgConfig(leg_phase_offsets=(0.1, 0.0, 0.0, 0.0))  # reference leg must be 0
        with pytest.raises(GaitError):
            TgConfig(leg_phase_offsets=(0.0, 7.0, 0.0, 0.0))  # outside [0, 2*pi)


class TestLegCommand:
    def test_flat_roundtrip(self):
        cmd = LegCommand(swing=np.array([1.0, 2, 3, 4]), extension=np.array([5.0, 6, 7, 8]))
        flat = cmd.flat()
        assert list(flat) == [1, 5, 2, 6, 3, 7, 4, 8]
        back = LegCommand.from_flat(flat)
        assert np.array_equal(back.swing, cmd.swing)
        assert np.array_equal(back.extension, cmd.extension)

    def test_from_flat_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            LegCommand.from_flat([1.0, 2.0])
