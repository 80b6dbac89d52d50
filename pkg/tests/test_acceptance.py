"""Acceptance suite: one PASS/FAIL line per criterion, printed in the terminal summary.

The directional run trains four arms on ten seeds of the shipped standard config
and takes roughly a quarter of an hour on one core.
"""
from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
import pytest

import test_agents
import test_env
from semslice import nn
from semslice.agents import AgentConfig, ddpg_targets, dqn_targets, init_ddpg, project_to_simplex
from semslice.cli import main as cli_main
from semslice.env import NetworkObservation
from semslice.harness import build_agent, compare, load_preset, preset_path, run_experiment, substream
from semslice.traffic import (GanConfig, condition_vector, discriminator_forward, generator_forward,
                              init_gan, ks_distance, sample_demand, train_discriminator, train_gan)
from test_harness import calibration_rates

W = test_agents.W

ACTIVATIONS = ("relu", "tanh", "logistic", "identity", "softmax")


def test_feasibility_suite(acceptance_report):
    base = load_preset("standard")
    floored = [replace(s, min_bandwidth=2e6) for s in base.slices]
    rng = np.random.default_rng(0)
    total, bad = 0, {}
    for kind in ("gan_ddpg_semantic", "ddpg", "dqn", "equal", "proportional"):
        cfg = replace(base.with_agent(kind), slices=floored).resolved()
        agent = build_agent(cfg, substream(0, "agent"))
        agent_rng = np.random.default_rng(1)
        floors = np.array([s.min_bandwidth for s in cfg.slices])
        dim = 15 if cfg.semantic_obs else 10
        if hasattr(agent, "nets"):
            # a trained-looking actor: random weights rather than the zero start
            agent.nets.actor = nn.init_params([dim, 64, 64, 5], ["relu", "relu", "softmax"], rng)
        count = 0
        for i in range(100_000):
            scale = 50.0 if i % 10 == 0 else 3.0
            obs = NetworkObservation(tdp=rng.exponential(2e8, 5) * rng.integers(0, 2, 5), snr=rng.uniform(5, 30, 5))
            action, _ = agent.act(scale * rng.standard_normal(dim), True, agent_rng, obs=obs)
            count += not action.is_feasible(cfg.bandwidth, floors)
        bad[kind] = count
        total += count
    ok = total == 0
    acceptance_report("feasibility", ok, f"{len(bad)} agents x 1e5 actions, violations {bad}")
    assert ok


def test_gradient_suite(acceptance_report):
    rng = np.random.default_rng(2024)
    worst, seen = 0.0, set()
    n_arch = 60
    for trial in range(n_arch):
        depth = int(rng.integers(1, 4))
        sizes = [int(v) for v in rng.integers(2, 7, size=depth + 1)]
        acts = [ACTIVATIONS[(trial + k) % 4] for k in range(depth)]
        if trial % 3 == 0:
            acts[-1] = "softmax"
        seen.update(acts)
        params = nn.init_params(sizes, acts, rng)
        params = replace(params, biases=[rng.normal(0.0, 0.5, b.shape) for b in params.biases])
        worst = max(worst, nn.grad_check(params, rng.standard_normal((3, sizes[0])), h=1e-6, seed=trial))
    lin = 0.0
    for sizes in ([4, 3], [5, 4, 2], [3, 6, 6, 1]):
        p = nn.init_params(sizes, ["identity"] * (len(sizes) - 1), rng)
        p = replace(p, biases=[rng.standard_normal(b.shape) for b in p.biases])
        x = rng.standard_normal((5, sizes[0]))
        lin = max(lin, nn.grad_check(p, x, loss_tag="quadratic"), nn.grad_check(p, x, loss_tag="sum"))
    ok = worst < 1e-4 and lin < 1e-8 and seen == set(ACTIVATIONS)
    acceptance_report("gradient", ok, f"{n_arch} architectures over {sorted(seen)}, worst {worst:.2e} "
                                      f"(< 1e-4); linear/quadratic worst {lin:.2e} (< 1e-8)")
    assert ok


def test_oracle_equivalence(acceptance_report):
    parts = {}
    # scheduling: the env's semantic order attains the exhaustive-order optimum
    env = test_env.TestScheduling()._two_packet_env(True)
    _, m = env.step(np.array([1.0]))
    best = test_env.brute_force_best(np.array([0.1, 0.9]), np.ones(2), 1.0)
    parts["scheduling"] = abs(m.sme[0] * 2 - best) < 1e-12
    # projection
    raw = np.array([0.9, 0.3, -0.2]) * W
    err = float(np.max(np.abs(project_to_simplex(raw, W).bandwidth - test_agents.qp_grid_oracle(raw))))
    parts["projection"] = err <= 2e-3 * W
    # DQN chain against value iteration
    try:
        test_agents.TestDQNTraining().test_two_state_chain()
        parts["dqn_chain"] = True
    except AssertionError:
        parts["dqn_chain"] = False
    # gamma 0 targets
    rng = np.random.default_rng(3)
    batch = {"reward": rng.normal(size=64), "next_state": rng.random((64, 10)), "terminal": np.zeros(64, bool),
             "state": rng.random((64, 10))}
    nets = init_ddpg(10, 5, AgentConfig(), rng)
    q = nn.init_params([10, 8, 4], ["relu", "identity"], rng)
    parts["gamma0"] = (np.array_equal(ddpg_targets(nets, batch, 0.0, W, np.zeros(5)), batch["reward"])
                       and np.array_equal(dqn_targets(q, batch, 0.0), batch["reward"]))
    ok = all(parts.values())
    acceptance_report("oracle equivalence", ok,
                      ", ".join(f"{k} {'ok' if v else 'MISMATCH'}" for k, v in parts.items())
                      + f" (projection error {err / W:.1e} W)")
    assert ok


def test_determinism(acceptance_report, tmp_path):
    outs = []
    for d in ("first", "second"):
        code = cli_main(["train", str(preset_path("standard")), "--seeds", "4", "--episodes", "3",
                         "--out", str(tmp_path / d), "--quiet"])
        assert code == 0
        outs.append(tmp_path / d)
    files = ["seed_4_train.csv", "seed_4_eval.csv"]
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    acceptance_report("determinism", same, f"two `train` runs of the standard config (GAN-DDPG arm, seed 4): "
                                           f"{' and '.join(files)} {'byte-identical' if same else 'DIFFER'}")
    assert same


def test_gan_fidelity(acceptance_report):
    cfg = GanConfig()
    t0 = time.perf_counter()
    state, _ = train_gan(cfg, ["eMBB"], [10], np.random.default_rng(0), profile="uniform")
    t_uniform = time.perf_counter() - t0
    rng = np.random.default_rng(1)
    fake = generator_forward(state.generator, rng.standard_normal((2000, cfg.latent_dim)), condition_vector("eMBB", 10))
    ks = ks_distance(fake, sample_demand("eMBB", rng, 2000, profile="uniform"))

    t0 = time.perf_counter()
    typed, _ = train_gan(cfg, ["eMBB", "mMTC"], [10, 50], np.random.default_rng(0), profile="typed")
    t_typed = time.perf_counter() - t0
    z = rng.standard_normal((5000, cfg.latent_dim))
    g_embb = generator_forward(typed.generator, z, condition_vector("eMBB", 10)).mean()
    g_mmtc = generator_forward(typed.generator, z, condition_vector("mMTC", 50)).mean()
    true_gap = sample_demand("eMBB", rng, 200_000).mean() - sample_demand("mMTC", rng, 200_000).mean()
    gap = g_embb - g_mmtc
    ok = ks < 0.1 and gap >= true_gap / 2 and max(t_uniform, t_typed) <= 300 and cfg.train_steps <= 5000
    acceptance_report("GAN fidelity", ok,
                      f"{cfg.train_steps} steps, KS {ks:.3f} (< 0.1) in {t_uniform:.0f} s; generated eMBB-mMTC gap "
                      f"{gap / 1e6:.2f} Mbps vs true {true_gap / 1e6:.2f} (>= half) in {t_typed:.0f} s")
    assert ok


def test_discriminator_equilibrium(acceptance_report):
    cfg = GanConfig()
    rng = np.random.default_rng(0)
    cond = condition_vector("eMBB", 10)

    def source(r, n):
        return sample_demand("eMBB", r, n, profile="uniform"), cond

    d = train_discriminator(cfg, init_gan(cfg, rng).discriminator, source, source, 2000, rng)
    mean = float(discriminator_forward(d, sample_demand("eMBB", rng, 10_000, profile="uniform"), cond).mean())
    ok = 0.4 <= mean <= 0.6
    acceptance_report("discriminator equilibrium", ok, f"mean D output {mean:.3f} on matched distributions (in [0.4, 0.6])")
    assert ok


def test_statistical_calibration(acceptance_report):
    rates = calibration_rates(np.random.default_rng(2024), batches=10)
    pooled = float(rates.mean())
    ok = 0.03 <= pooled <= 0.07
    acceptance_report("statistical calibration", ok,
                      f"Welch rejection rate {pooled:.2%} pooled over 10 x 200 same-distribution trials "
                      f"(5% +/- 2%); per batch {', '.join(f'{r:.1%}' for r in rates)}")
    assert ok


# ---------------------------------------------------------------------------
# directional reproduction on the shipped standard config

DIRECTIONAL_ARMS = ("gan_ddpg_semantic", "ddpg", "dqn", "equal")


@pytest.fixture(scope="module")
def directional_runs():
    cfg = load_preset("standard")
    t0 = time.perf_counter()
    runs = {}
    for kind in DIRECTIONAL_ARMS:
        arm = cfg.with_agent(kind)
        if kind == "equal":
            # static allocators do not learn; evaluation draws its own substream
            arm = replace(arm, episodes=0)
        runs[kind] = [run_experiment(arm, s) for s in cfg.seeds]
    fifo_cfg = replace(cfg.with_agent("equal"), episodes=0)
    runs["equal_semantic_sched"] = [run_experiment(replace(fifo_cfg, semantic_scheduling=True), s)
                                    for s in cfg.seeds]
    return runs, time.perf_counter() - t0, cfg


def test_directional_reproduction(acceptance_report, directional_runs):
    runs, elapsed, cfg = directional_runs
    n = len(cfg.seeds)
    util = compare(runs["gan_ddpg_semantic"], runs["ddpg"], "utility")
    se = compare(runs["gan_ddpg_semantic"], runs["ddpg"], "se")
    a = util.mean_a > util.mean_b and util.p_value < 0.05 and se.improvement_pct >= 5.0 and se.p_value < 0.05
    ddpg_dqn = compare(runs["ddpg"], runs["dqn"], "se")
    b = ddpg_dqn.mean_a >= ddpg_dqn.mean_b
    vs_eq = [compare(runs[k], runs["equal"], "se") for k in ("gan_ddpg_semantic", "ddpg")]
    c = all(r.mean_a > r.mean_b for r in vs_eq)
    hi = compare(runs["equal_semantic_sched"], runs["equal"], "hi_loss")
    d = hi.mean_a < hi.mean_b
    budget = elapsed <= 30 * 60
    ok = a and b and c and d and budget and n >= 10
    flag = {True: "ok", False: "FAIL"}
    detail = (f"{n} seeds/arm in {elapsed / 60:.1f} min ({flag[budget]}); "
              f"(a) {flag[a]}: utility {util.mean_a:.3f} vs {util.mean_b:.3f} p={util.p_value:.2g}, "
              f"SE {se.improvement_pct:+.2f}% (need >= +5%) p={se.p_value:.2g}; "
              f"(b) {flag[b]}: DDPG SE {ddpg_dqn.mean_a:.3f} vs DQN {ddpg_dqn.mean_b:.3f}; "
              f"(c) {flag[c]}: vs equal {vs_eq[1].mean_b:.3f}, GAN-DDPG {vs_eq[0].mean_a:.3f}, "
              f"DDPG {vs_eq[1].mean_a:.3f}; "
              f"(d) {flag[d]}: high-importance loss semantic {hi.mean_a:.4f} vs FIFO {hi.mean_b:.4f}")
    acceptance_report("directional reproduction", ok, detail)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
