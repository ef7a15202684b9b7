"""Scenario runner: config validation, CSV pipeline, determinism, outage
robustness, mode enforcement, and the eigenvector demo entry point."""

import json
from pathlib import Path

import numpy as np
import pytest

from georover.consensus import ScheduleError
from georover.experiments import (
    ConfigError,
    MetricsRecord,
    METRICS_HEADER,
    ScenarioConfig,
    emit_metrics,
    run_eigen_demo,
    run_scenario,
)
from georover.planner import PlannerParams
from georover.world import SensorParams, load_world
from georover import cli

ROOT = Path(__file__).resolve().parents[1]
WORLDS = ROOT / "worlds"
CONFIGS = ROOT / "configs"


def small_planner(**over):
    defaults = dict(
        eps_p=0.1,
        alpha_a=0.05,
        gamma_c=1e-3,
        gamma_q=1e-2,
        xi_max=0.6,
        fov_diameter=0.8,
        d_q=0.7,
        horizon=3,
        k_p=4,
        ground_plane=True,
    )
    defaults.update(over)
    return PlannerParams(**defaults)


def village_config(tmp_path, **over):
    cfg = dict(
        world=str(WORLDS / "village16.world"),
        n_robots=3,
        start_cells=[(2, 2), (2, 13), (13, 2)],
        start_yaws=[0.0, -1.2, 2.3],
        topology_kind="full",
        mode="collaborative",
        ticks=80,
        out_dir=str(tmp_path / "out"),
        seed=3,
        planner=small_planner(),
        planning_sensor=SensorParams(1.6, 2.0, 9, 3, max_range=1.6),
    )
    cfg.update(over)
    return ScenarioConfig(**cfg)


def test_config_validation_collects_all_errors(tmp_path):
    cfg = village_config(
        tmp_path,
        world="nope.world",
        n_robots=0,
        start_cells=[],
        mode="bogus",
        eps_m=1.5,
        thresh_p=0.0,
    )
    errors = cfg.validate()
    assert len(errors) >= 5
    joined = " ".join(errors)
    for needle in ("world file", "n_robots", "mode", "eps_m", "thresh_p"):
        assert needle in joined
    with pytest.raises(ConfigError):
        run_scenario(cfg)


def test_config_mode_enforcement(tmp_path):
    ego = village_config(tmp_path, mode="egocentric")
    assert ego.planner.eps_p == 0.0 and ego.planner.gamma_q == 0.0
    fro = village_config(tmp_path, mode="frontier")
    assert fro.planner.k_p == 0


def test_config_from_file_and_unknown_key(tmp_path):
    cfg = ScenarioConfig.from_file(CONFIGS / "tworoom_frontier.json")
    assert cfg.mode == "frontier"
    assert cfg.planner.k_p == 0  # enforced by the mode
    assert Path(cfg.world).exists()
    assert cfg.validate() == []
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"world": "w", "n_robots": 1, "start_cells": [[0, 0]], "bogus": 3}))
    with pytest.raises(ConfigError):
        ScenarioConfig.from_file(bad)


def test_emit_metrics_examples(tmp_path):
    path = tmp_path / "m.csv"
    emit_metrics([], path)
    assert path.read_text() == METRICS_HEADER + "\n"
    rec = MetricsRecord(3, 1, 1.25, 0.5, 1e-12, 0.0, 10, 20, 2.5)
    emit_metrics([rec], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[0] == "3" and fields[1] == "1"
    assert float(fields[2]) == 1.25 and int(fields[6]) == 10
    # round trip at nine significant digits
    assert float(fields[4]) == pytest.approx(1e-12, rel=1e-8)


def test_zero_tick_budget_initial_rows_only(tmp_path):
    cfg = village_config(tmp_path, ticks=0)
    res = run_scenario(cfg)
    assert len(res.records) == 3
    assert all(r.tick == 0 for r in res.records)
    assert res.final_phi_map == 0.0


def test_deterministic_csv_per_seed(tmp_path):
    noisy = SensorParams(1.6, 2.8, 11, 7, 2.0, range_noise_sigma=0.02, label_flip_prob=0.05)
    cfg_a = village_config(tmp_path, ticks=60, out_dir=str(tmp_path / "a"), seed=11, sensor=noisy)
    cfg_b = village_config(tmp_path, ticks=60, out_dir=str(tmp_path / "b"), seed=11, sensor=noisy)
    res_a = run_scenario(cfg_a)
    res_b = run_scenario(cfg_b)
    assert res_a.metrics_path.read_bytes() == res_b.metrics_path.read_bytes()
    assert res_a.envelope_path.read_bytes() == res_b.envelope_path.read_bytes()
    cfg_c = village_config(tmp_path, ticks=60, out_dir=str(tmp_path / "c"), seed=12, sensor=noisy)
    res_c = run_scenario(cfg_c)
    assert res_a.metrics_path.read_bytes() != res_c.metrics_path.read_bytes()


def reachable_columns(world_path, start_cell):
    """Ground-truth oracle: traversable columns reachable from the start by
    8-connected moves, plus the obstacle columns bordering them."""
    world = load_world(world_path)
    ground = world.labels[:, :, 0] == 1
    obstacle = (world.labels > 1).any(axis=2)
    trav = ground & ~obstacle
    mask = np.zeros_like(trav)
    stack = [start_cell]
    mask[start_cell] = True
    moves = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    while stack:
        cx, cy = stack.pop()
        for dx, dy in moves:
            nx, ny = cx + dx, cy + dy
            if 0 <= nx < trav.shape[0] and 0 <= ny < trav.shape[1]:
                if trav[nx, ny] and not mask[nx, ny]:
                    mask[nx, ny] = True
                    stack.append((nx, ny))
    edge = np.zeros_like(mask)
    for dx, dy in moves:
        shifted = np.roll(np.roll(mask, dx, axis=0), dy, axis=1)
        edge |= shifted & obstacle
    return mask | edge


def test_single_robot_frontier_tworoom_full_coverage(tmp_path):
    cfg = ScenarioConfig(
        world=str(WORLDS / "tworoom.world"),
        n_robots=1,
        start_cells=[(3, 3)],
        mode="frontier",
        ticks=800,
        out_dir=str(tmp_path / "two"),
        seed=1,
        planner=small_planner(),
        planning_sensor=SensorParams(1.6, 2.0, 9, 3, max_range=1.6),
    )
    res = run_scenario(cfg)
    rows = [r for r in res.records if r.robot == 0]
    covs = [r.coverage_m2 for r in rows]
    assert all(b >= a for a, b in zip(covs, covs[1:]))
    target = reachable_columns(cfg.world, (3, 3))
    covered_columns = covs[-1] / (0.2 * 0.2)
    assert covered_columns >= target.sum()  # 100% of reachable columns


def test_outage_scenario_still_converges(tmp_path):
    cfg = village_config(
        tmp_path,
        ticks=120,
        link_outages=[
            {"edge": [0, 1], "down": 10, "up": 60},
            {"edge": [1, 2], "down": 30, "up": 90},
        ],
    )
    res = run_scenario(cfg)
    assert res.final_phi_map <= 1e-8


def test_egocentric_never_runs_plan_consensus(tmp_path):
    cfg = village_config(tmp_path, mode="egocentric", ticks=100)
    res = run_scenario(cfg)
    assert res.plan_consensus_steps == 0
    cfg2 = village_config(tmp_path, mode="collaborative", ticks=100, out_dir=str(tmp_path / "c2"))
    res2 = run_scenario(cfg2)
    assert res2.plan_consensus_steps > 0


def test_eigen_demo_outputs(tmp_path):
    res = run_eigen_demo(n_points=120, seed=5, max_iters=15_000, out_dir=tmp_path)
    assert res.final_angle <= 1e-3
    assert res.final_phi <= 1e-8
    assert res.best_objective >= res.oracle_objective - 1e-4
    lines = res.trace_path.read_text().splitlines()
    assert lines[0] == "iter,phi,objective,angle"
    assert len(lines) > 100


def test_eigen_demo_step_gate():
    with pytest.raises(ScheduleError):
        run_eigen_demo(n_points=50, seed=0, epsilon=0.6, max_iters=10)
    with pytest.raises(ScheduleError):
        run_eigen_demo(n_points=50, seed=0, epsilon=0.5, max_iters=10)
    run_eigen_demo(n_points=50, seed=0, epsilon=0.49, max_iters=4000)


def test_cli_validate_and_eigen(tmp_path, capsys):
    rc = cli.main(["validate", "--config", str(CONFIGS / "village16_collab_full.json")])
    assert rc == 0
    assert "ok" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"world": "missing.world", "n_robots": 1, "start_cells": [[0, 0]]}))
    rc = cli.main(["validate", "--config", str(bad)])
    assert rc == 1
    assert "error" in capsys.readouterr().out
    rc = cli.main(["eigen-demo", "--points", "80", "--seed", "2", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "eigen_trace.csv").exists()


def test_cli_run_small_scenario(tmp_path):
    cfg = {
        "world": str(WORLDS / "tworoom.world"),
        "n_robots": 1,
        "start_cells": [[3, 3]],
        "mode": "frontier",
        "ticks": 30,
        "out_dir": str(tmp_path / "out"),
        "planner": {
            "eps_p": 0.1,
            "alpha_a": 0.05,
            "gamma_c": 1e-3,
            "gamma_q": 1e-2,
            "xi_max": 0.6,
            "fov_diameter": 0.8,
            "d_q": 0.7,
            "horizon": 2,
            "k_p": 2,
        },
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    rc = cli.main(["run", "--config", str(path), "--seed", "4"])
    assert rc == 0
    assert (tmp_path / "out" / "metrics.csv").exists()
    assert (tmp_path / "out" / "robot0.rmap").exists()
