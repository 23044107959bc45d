"""Acceptance suite: one test per gate, each printing a pass/fail line.

The training gates run real experiments from the checked-in preset
configs, so this module is the slow part of the suite (typically
10-20 minutes end to end). Seeds are fixed and documented in the
configs; every tolerance is asserted exactly as stated.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import record_criterion
from pmtg.config import apply_overrides, config_from_dict, load_config
from pmtg.evaluate import evaluate, moving_average
from pmtg.experiment import build_env, build_wiring, policy_shape_for
from pmtg.optim.ars import ArsConfig, ArsTrainer
from pmtg.optim.ppo import PpoBatch, PpoConfig, forward_cached, gaussian_logp, make_ppo_params, ppo_loss_and_grad
from pmtg.optim.rollout import RolloutRecord, rollout
from pmtg.policy import PolicyShape, init_params, param_count
from pmtg.tg import TWO_PI, advance_phase, figure_eight, gait_table, leg_phase, warp_time, TgState
from pmtg.train import read_curve, train

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def load_preset(name: str, *overrides: str):
    cfg = load_config(CONFIGS / name)
    if overrides:
        cfg = apply_overrides(cfg, list(overrides))
    return cfg


class TestCriterion1TgMath:
    def test_examples_and_warp_properties(self):
        t0 = time.perf_counter()
        tol = 1e-9
        # phase evolution
        assert abs(advance_phase(TgState(0.0), 1.0, 0.01).phase - 0.06283185307179587) < tol
        assert advance_phase(TgState(math.pi), 0.0, 0.01).phase == math.pi
        assert abs(advance_phase(TgState(6.2), 2.0, 0.05).phase - (6.2 + 0.2 * math.pi - TWO_PI)) < tol
        # per-leg phase
        assert abs(leg_phase(1.0, math.pi) - (1.0 + math.pi)) < tol
        assert leg_phase(2.2, 0.0) == 2.2
        assert abs(leg_phase(3 * math.pi / 2, math.pi) - math.pi / 2) < tol
        # time warp examples
        assert abs(warp_time(math.pi / 2, 0.5) - math.pi / 2) < tol
        assert warp_time(0.0, 0.3) == 0.0
        assert abs(warp_time(3 * math.pi / 2, 0.25) - math.pi) < tol
        # eight curve examples
        assert figure_eight(0.0, 1.0, 1.0) == (0.0, 0.0)
        x, y = figure_eight(0.25, 0.8, 0.6)
        assert abs(x - 0.8) < tol and abs(y) < tol
        x, y = figure_eight(0.125, 1.0, 1.0)
        assert abs(x - math.sqrt(0.5)) < tol and abs(y - 0.25) < tol
        # gait tables
        assert gait_table("bound").leg_phase_offsets == (0.0, 0.0, math.pi, math.pi)
        assert gait_table("walk").leg_phase_offsets == (0.0, math.pi, math.pi, 0.0)
        with pytest.raises(Exception):
            gait_table("trot")
        # warp continuity and monotonicity across the required grid
        eps = 1e-6
        for beta in (0.2, 0.4, 0.5, 0.6, 0.8):
            grid = np.linspace(0.0, TWO_PI - 2 * eps, 10_000)
            values = warp_time(grid, beta)
            jumps = np.abs(warp_time(grid + eps, beta) - values)
            assert jumps.max() <= eps / (2 * min(beta, 1 - beta)) + 1e-9
            assert np.all(np.diff(values) >= 0.0)
        elapsed = time.perf_counter() - t0
        ok = elapsed < 1.0
        record_criterion(1, ok, f"TG examples and warp grid properties in {elapsed:.3f}s (< 1s)")
        assert ok


class TestCriterion2Shapes:
    def test_observation_action_parameter_counts(self):
        cfg = config_from_dict({"env": {"kind": "quadruped", "wiring": "pmtg"}, "policy": {"kind": "linear"}})
        wiring = build_wiring(cfg)
        shape = policy_shape_for(cfg)
        n = param_count(shape)
        ok = wiring.obs_dim == 7 and wiring.act_dim == 11 and n == 77
        record_criterion(2, ok, f"obs_dim={wiring.obs_dim}, act_dim={wiring.act_dim}, linear params={n}")
        assert wiring.obs_dim == 7
        assert wiring.act_dim == 11
        assert n == 77


class TestCriterion3Reward:
    def test_reward_formula_points(self):
        from pmtg.quadruped import track_reward

        tol = 1e-9
        a = abs(track_reward(0.4, 0.4, 0.4) - 0.4) < tol
        b = abs(track_reward(0.0, 0.4, 0.4) - 0.4 * math.exp(-0.5)) < tol
        c = abs(track_reward(0.4, 0.48, 0.4) - 0.4 * math.exp(-0.02)) < tol
        twenty = track_reward(0.4 * 1.2, 0.4, 0.4) >= 0.98 * 0.4
        ok = a and b and c and twenty
        record_criterion(3, ok, f"three formula points to 1e-9; reward at 20% error = {track_reward(0.48, 0.4, 0.4):.6f} >= 0.392")
        assert ok


def _final_step_reward(cfg, result) -> float:
    report = evaluate(cfg, result.params, result.normalizer, num_episodes=4)
    return report.mean_step_reward


class TestCriterion4Pointmass:
    def test_ordering_over_three_seeds(self, tmp_path):
        results = []
        for seed in (0, 1, 2):
            arms = {}
            for name in ("pointmass_pmtg", "pointmass_vanilla", "pointmass_vanilla_time"):
                cfg = load_preset(f"{name}.yaml", f"run.master_seed={seed}")
                res = train(cfg, tmp_path / f"{name}_s{seed}", quiet=True)
                assert res.total_env_steps <= 200_000
                arms[name] = _final_step_reward(cfg, res)
            pm, va, vt = arms["pointmass_pmtg"], arms["pointmass_vanilla"], arms["pointmass_vanilla_time"]
            results.append((seed, pm, va, vt))
        ok = all(pm >= -0.05 and (pm - va) >= 0.10 and va < vt < pm for _, pm, va, vt in results)
        detail = "; ".join(f"seed {s}: pmtg={pm:.4f} vanilla={va:.4f} vanilla_time={vt:.4f}" for s, pm, va, vt in results)
        record_criterion(4, ok, detail)
        for seed, pm, va, vt in results:
            assert pm >= -0.05, f"seed {seed}: pmtg mean step reward {pm}"
            assert pm - va >= 0.10, f"seed {seed}: vanilla gap {pm - va}"
            assert va < vt < pm, f"seed {seed}: ordering {pm} > {vt} > {va} violated"


def _tail_mean(curve_path, frac=0.25, min_rows=3) -> float:
    curve = read_curve(curve_path)
    returns = curve["mean_return"]
    k = max(min_rows, int(len(returns) * frac))
    return float(np.mean(returns[-k:]))


class TestCriterion5SlowWalk:
    def test_tracking_and_vanilla_ordering(self, tmp_path):
        cfg = load_preset("slow_walk.yaml")
        res = train(cfg, tmp_path / "pmtg", quiet=True)
        report = evaluate(cfg, res.params, res.normalizer, num_episodes=4)
        gate = (
            report.tracking_error is not None
            and report.tracking_error <= 0.1
            and report.fall_rate == 0.0
            and res.total_rollouts <= 5000
        )
        # same rollout budget through the vanilla wiring, identical seed
        van_cfg = load_preset(
            "slow_walk.yaml",
            "env.wiring=vanilla",
            f"run.max_rollouts={res.total_rollouts}",
            "run.early_stop_metric=null",
            "run.early_stop_threshold=null",
        )
        van = train(van_cfg, tmp_path / "vanilla", quiet=True)
        pm_tail = _tail_mean(res.curve_path)
        van_tail = _tail_mean(van.curve_path)
        ordering = pm_tail > van_tail
        ok = gate and ordering
        record_criterion(
            5,
            ok,
            f"tracking_error={report.tracking_error:.4f} (<=0.1), falls={report.fall_rate:.0%}, "
            f"rollouts={res.total_rollouts} (<=5000, stretch <1000: {'met' if res.total_rollouts < 1000 else 'not met'}); "
            f"training return pmtg={pm_tail:.1f} > vanilla={van_tail:.1f}",
        )
        assert report.tracking_error <= 0.1
        assert report.fall_rate == 0.0
        assert res.total_rollouts <= 5000
        assert pm_tail > van_tail


class TestCriterion6TgOnlyBaselines:
    def test_walking_fails_tracking(self):
        cfg = load_preset("slow_walk.yaml")
        params = init_params(policy_shape_for(cfg))
        report = evaluate(cfg, params, num_episodes=4, tg_only=True)
        failures = [e.tracking_error > 0.1 for e in report.episodes]
        walk_ok = all(failures) and len(failures) == 4

        bound_cfg = load_preset("bound.yaml")
        bound_params = init_params(policy_shape_for(bound_cfg))
        bound_report = evaluate(bound_cfg, bound_params, num_episodes=4, tg_only=True)
        dt = bound_cfg.env.quadruped.control_dt
        fall_times = [e.length * dt for e in bound_report.episodes]
        bound_ok = all(e.fell for e in bound_report.episodes) and all(t <= 2.0 for t in fall_times)

        record_criterion(
            6,
            walk_ok and bound_ok,
            f"tg-only walk tracking errors {[f'{e.tracking_error:.2f}' for e in report.episodes]} all > 0.1; "
            f"tg-only bound falls at {[f'{t:.2f}s' for t in fall_times]} (all <= 2s)",
        )
        assert walk_ok
        assert bound_ok


class TestCriterion7BehaviorSignature:
    def test_fast_walk_frequency_follows_speed(self, tmp_path):
        cfg = load_preset("fast_walk.yaml")
        res = train(cfg, tmp_path / "fast", quiet=True)
        report = evaluate(cfg, res.params, res.normalizer, num_episodes=4)
        assert report.tracking_error <= 0.1, "fast-walk policy must pass the tracking gate first"
        assert report.fall_rate == 0.0
        assert res.total_rollouts <= 5000

        corrs = []
        for ep in range(4):
            env = build_env(cfg, training=False)
            wiring = build_wiring(cfg)
            rec = rollout(res.params, env, wiring, ep, normalizer=res.normalizer, record_diagnostics=True)
            d = rec.diagnostics
            corrs.append(float(np.corrcoef(d["v_target"], d["f_tg"])[0, 1]))
        ok = corrs[0] > 0.3
        record_criterion(
            7,
            ok,
            f"corr(v_target, f_tg) on eval rollout = {corrs[0]:.3f} (> 0.3); all episodes: "
            + ", ".join(f"{c:.3f}" for c in corrs),
        )
        assert corrs[0] > 0.3


class TestCriterion8OptimizerCorrectness:
    def test_ars_quadratic_oracle(self):
        def make_record(ret):
            return RolloutRecord(
                observations=np.zeros((1, 1)),
                raw_actions=np.zeros((1, 1)),
                rewards=np.array([ret]),
                episode_return=ret,
                length=1,
                seed=0,
                terminated=False,
                final_observation=np.zeros(1),
            )

        iters_used = []
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            target = rng.uniform(-1, 1, size=10)

            def ev(tasks):
                return [make_record(-float(np.sum((t.flat_params - target) ** 2))) for t in tasks]

            cfg = ArsConfig(step_size=0.005, noise_std=0.01, num_directions=8, top_directions=4)
            trainer = ArsTrainer(np.zeros(10), cfg, master_seed=seed, obs_dim=1, evaluate_many=ev)
            converged_at = None
            for it in range(500):
                trainer.run_iteration()
                if np.linalg.norm(trainer.flat - target) < 1e-2:
                    converged_at = it + 1
                    break
            iters_used.append(converged_at)
        ars_ok = all(n is not None for n in iters_used)
        self._ars_detail = f"ARS quadratic converged in {iters_used} iterations (5/5 seeds)"
        assert ars_ok, self._ars_detail

        # gradient check on 100 random tiny networks
        worst = 0.0
        rng = np.random.default_rng(1234)
        for trial in range(100):
            obs_dim = int(rng.integers(2, 5))
            act_dim = int(rng.integers(1, 4))
            h = int(rng.integers(2, 6))
            kind = "mlp" if trial % 2 == 0 else "linear"
            shape = PolicyShape(kind, obs_dim, act_dim, (h, h) if kind == "mlp" else ())
            cfg = PpoConfig(value_hidden=(h, h), entropy_coef=0.01)
            params = make_ppo_params(shape, cfg, trial)
            vec0 = params.to_vector() + 0.3 * rng.standard_normal(params.to_vector().size)
            params.load_vector(vec0)
            n = 8
            obs = rng.standard_normal((n, obs_dim))
            mean = forward_cached(params.policy.flat, params.policy.shape, obs)[0]
            actions = mean + np.exp(params.log_std) * rng.standard_normal((n, act_dim))
            old_logp = gaussian_logp(actions, mean, params.log_std) + 0.1 * rng.standard_normal(n)
            batch = PpoBatch(obs, actions, old_logp, rng.standard_normal(n), rng.standard_normal(n))
            _, grad = ppo_loss_and_grad(params, batch, cfg)
            eps = 1e-6
            fd = np.zeros_like(grad)
            for i in range(vec0.size):
                for step, sign in ((eps, 1.0), (-eps, -1.0)):
                    v = vec0.copy()
                    v[i] += step
                    params.load_vector(v)
                    metrics, _ = ppo_loss_and_grad(params, batch, cfg)
                    fd[i] += sign * metrics["loss"]
                fd[i] /= 2 * eps
            params.load_vector(vec0)
            rel = np.abs(grad - fd) / np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-6)
            worst = max(worst, float(rel.max()))
        grad_ok = worst < 1e-4
        record_criterion(
            8,
            ars_ok and grad_ok,
            f"{self._ars_detail}; PPO gradcheck worst relative error over 100 nets = {worst:.2e} (< 1e-4)",
        )
        assert grad_ok, f"worst gradient relative error {worst}"


class TestCriterion9Determinism:
    def test_byte_identical_reruns_and_worker_invariance(self, tmp_path):
        cfg = load_preset(
            "pointmass_pmtg.yaml", "run.max_iterations=20", "run.timing=zero", "run.checkpoint_every=0"
        )
        train(cfg, tmp_path / "a", quiet=True)
        train(cfg, tmp_path / "b", quiet=True)
        bytes_a = (tmp_path / "a" / "learning_curve.csv").read_bytes()
        bytes_b = (tmp_path / "b" / "learning_curve.csv").read_bytes()
        byte_ok = bytes_a == bytes_b

        quad = load_preset(
            "slow_walk.yaml",
            "run.max_iterations=6",
            "run.eval_every=100",
            "run.timing=zero",
            "run.checkpoint_every=0",
            "run.early_stop_metric=null",
            "run.early_stop_threshold=null",
        )
        res_serial = train(quad, tmp_path / "serial", quiet=True)
        quad_par = load_preset(
            "slow_walk.yaml",
            "run.max_iterations=6",
            "run.eval_every=100",
            "run.timing=zero",
            "run.checkpoint_every=0",
            "run.early_stop_metric=null",
            "run.early_stop_threshold=null",
            "run.workers=4",
        )
        res_par = train(quad_par, tmp_path / "parallel", quiet=True)
        serial_curve = read_curve(res_serial.curve_path)["mean_return"]
        par_curve = read_curve(res_par.curve_path)["mean_return"]
        worker_ok = serial_curve == par_curve and len(serial_curve) == 6

        record_criterion(
            9,
            byte_ok and worker_ok,
            f"rerun CSVs byte-identical: {byte_ok}; serial vs 4-worker mean-return sequences equal: {worker_ok}",
        )
        assert byte_ok
        assert worker_ok
