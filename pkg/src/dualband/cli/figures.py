"""Seed-averaged experiment sweeps behind the `figure` verb.

Each figure id maps to one sweep:

* fig6 — beampattern of the reconfigurable hybrid design plus the
  communication/sensing trade-off (sum rate versus the sensing gain floor).
* fig7 — sum rate versus SNR for the five mmWave beamforming structures.
* fig8 — sub-6G transmit power versus panel size for the selection strategies.
* fig9 — sub-6G transmit power versus the number of served users.
* fig10 — joint-selection convergence from different initializations.

Outputs are long-format CSVs (sweep_value, series, statistic, value) so the
same plotting script serves every figure.
"""
from __future__ import annotations

import json
import os
import time

import numpy as np

from ..baselines import (MM_STRUCTURES, SUB6G_STRATEGIES, RAS_RS,
                         design_mm_suite, design_sub6g_strategy,
                         fixed_array_selection, random_selection)
from ..channel import gen_channels
from ..errors import ConfigError, DualbandError, InfeasibleSubproblem
from ..mmwave import MmWaveScenario, admm_rhb, beampattern_grid, sumrate
from ..sub6g import abas, fsjbas, solve_selection
from .config import ScenarioConfig, config_hash, with_overrides
from .runner import mm_scenario, sub6g_scenario, admm_kwargs, write_csv

FIGURE_IDS = ("fig6", "fig7", "fig8", "fig9", "fig10")


def _channels(cfg: ScenarioConfig, seed: int, arr=None):
    return gen_channels(arr if arr is not None else cfg.array_config(),
                        k_s=int(cfg.users["k_s"]), k_m=int(cfg.users["k_m"]),
                        l_s=int(cfg.users["l_s"]), l_m=int(cfg.users["l_m"]),
                        seed=seed)


def _mm_budget(cfg: ScenarioConfig) -> float:
    return float(cfg.power.get("p_m", cfg.power["p_t"]))


def _with_noise(scen: MmWaveScenario, noise: float) -> MmWaveScenario:
    return MmWaveScenario(
        h_mm=scen.h_mm, target_dirs=list(scen.target_dirs),
        gain_thresholds=scen.gain_thresholds, noise_power=noise,
        power_budget=scen.power_budget, cfg=scen.cfg,
        gain_convention=scen.gain_convention)


def _mean_rows(values: dict) -> list[list]:
    """values maps (sweep_value, series) -> list of per-seed numbers."""
    rows = []
    for (sweep, series), vals in sorted(values.items()):
        rows.append([sweep, series, "mean", float(np.mean(vals))])
        rows.append([sweep, series, "count", float(len(vals))])
    return rows


def figure_beampattern_tradeoff(cfg: ScenarioConfig) -> dict:
    """fig6: beampattern at the configured floor, then sweep the floor."""
    block = cfg.figure_block("fig6")
    resolution = int(block.get("resolution", 41))
    floors = [float(u) for u in block.get(
        "upsilon", [11.0, 60.0, 150.0, 300.0])]
    kwargs = admm_kwargs(cfg)
    pattern_rows = []
    tradeoff = {}
    for seed in cfg.seeds:
        chan = _channels(cfg, seed)
        scen = mm_scenario(cfg, chan, _mm_budget(cfg))
        design = admm_rhb(scen, **kwargs)
        if seed == cfg.seeds[0]:
            angles, gains = beampattern_grid(design.f_physical, scen,
                                             resolution=resolution)
            for i, el in enumerate(angles):
                for j, az in enumerate(angles):
                    pattern_rows.append([float(el), float(az),
                                         float(gains[i, j])])
        for floor in floors:
            swept = MmWaveScenario(
                h_mm=scen.h_mm, target_dirs=list(scen.target_dirs),
                gain_thresholds=np.full(scen.t_m, floor),
                noise_power=scen.noise_power,
                power_budget=scen.power_budget, cfg=scen.cfg,
                gain_convention=scen.gain_convention)
            d = admm_rhb(swept, **kwargs)
            tradeoff.setdefault((floor, "rhb"), []).append(
                sumrate(d.f_physical, swept))
    return {
        "fig6_beampattern.csv": (["elevation", "azimuth", "gain_squared"],
                                 pattern_rows),
        "fig6_tradeoff.csv": (["sweep_value", "series", "statistic", "value"],
                              _mean_rows(tradeoff)),
    }


def figure_snr_sweep(cfg: ScenarioConfig) -> dict:
    """fig7: seed-averaged sum rate of every structure across SNR.

    With reoptimize_per_point every structure is redesigned at each SNR;
    without it each structure is designed once per seed and its candidate
    portfolio re-scored at each point, which keeps the sweep cheap.
    """
    block = cfg.figure_block("fig7")
    snr_db = [float(s) for s in block.get("snr_db", [-10, -5, 0, 5, 10])]
    reopt = bool(block.get("reoptimize_per_point",
                           cfg.algorithm.get("reoptimize_per_point", True)))
    p_m = _mm_budget(cfg)
    kwargs = admm_kwargs(cfg)
    values = {}
    for seed in cfg.seeds:
        chan = _channels(cfg, seed)
        base = mm_scenario(cfg, chan, p_m)
        if not reopt:
            results = design_mm_suite(base, **kwargs)
        for snr in snr_db:
            scen = _with_noise(base, p_m / 10.0 ** (snr / 10.0))
            if reopt:
                results = design_mm_suite(scen, **kwargs)
            for kind in MM_STRUCTURES:
                rate = max(sumrate(f, scen) for f in results[kind].pool)
                values.setdefault((snr, kind), []).append(rate)
    return {"fig7_sumrate_vs_snr.csv":
            (["sweep_value", "series", "statistic", "value"],
             _mean_rows(values))}


def figure_size_sweep(cfg: ScenarioConfig) -> dict:
    """fig8: sub-6G transmit power of each strategy versus panel size."""
    block = cfg.figure_block("fig8")
    sizes = [int(n) for n in block.get("sizes", [13, 14, 15, 16])]
    strategies = list(block.get("strategies", SUB6G_STRATEGIES))
    values = {}
    for size in sizes:
        arr = cfg.array_config(n_row=size)
        for seed in cfg.seeds:
            chan = _channels(cfg, seed, arr=arr)
            scen = sub6g_scenario(cfg, chan)
            for kind in strategies:
                try:
                    design = design_sub6g_strategy(
                        scen, kind, rng=np.random.default_rng(seed))
                except DualbandError:
                    continue                     # strategy infeasible on this draw
                values.setdefault((size, kind), []).append(design.power)
    return {"fig8_power_vs_size.csv":
            (["sweep_value", "series", "statistic", "value"],
             _mean_rows(values))}


def figure_user_sweep(cfg: ScenarioConfig) -> dict:
    """fig9: sub-6G transmit power of each strategy versus user count."""
    block = cfg.figure_block("fig9")
    user_counts = [int(k) for k in block.get("users", [1, 2, 3, 4, 5])]
    n_s = int(block.get("n_s", cfg.array["n_s"]))
    strategies = list(block.get("strategies", SUB6G_STRATEGIES))
    values = {}
    for k_s in user_counts:
        swept = with_overrides(cfg, users={"k_s": k_s})
        arr = cfg.array_config(n_s=n_s)
        for seed in cfg.seeds:
            chan = _channels(swept, seed, arr=arr)
            scen = sub6g_scenario(swept, chan)
            for kind in strategies:
                try:
                    design = design_sub6g_strategy(
                        scen, kind, rng=np.random.default_rng(seed))
                except DualbandError:
                    continue
                values.setdefault((k_s, kind), []).append(design.power)
    return {"fig9_power_vs_users.csv":
            (["sweep_value", "series", "statistic", "value"],
             _mean_rows(values))}


def _random_feasible_design(scen, seed, attempts=50):
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        sel = random_selection(scen.cfg, rng)
        try:
            return solve_selection(scen, sel)
        except InfeasibleSubproblem:
            continue
    raise DualbandError("no feasible random initialization found")


def figure_init_convergence(cfg: ScenarioConfig) -> dict:
    """fig10: joint-selection power trace from three initializations."""
    block = cfg.figure_block("fig10")
    inits = list(block.get("inits", ["coarse", "random", "fixed"]))
    values = {}
    for seed in cfg.seeds:
        chan = _channels(cfg, seed)
        scen = sub6g_scenario(cfg, chan)
        for name in inits:
            try:
                if name == "coarse":
                    init = abas(scen)
                elif name == "random":
                    init = _random_feasible_design(scen, seed)
                elif name == "fixed":
                    init = solve_selection(scen,
                                           fixed_array_selection(scen.cfg))
                else:
                    raise ConfigError(f"unknown initialization '{name}'")
            except ConfigError:
                raise
            except DualbandError:
                continue
            trace = []
            fsjbas(scen, init, max_iters=cfg.algorithm.get("fsjbas_iters"),
                   trace=trace)
            # carry the final incumbent so every seed covers every iteration
            horizon = int(block.get("iterations", 3 * scen.cfg.n_s))
            powers = [r["best_power"] for r in trace]
            powers += [powers[-1]] * max(0, horizon + 1 - len(powers))
            for it in range(horizon + 1):
                values.setdefault((it, name), []).append(powers[it])
    return {"fig10_convergence.csv":
            (["sweep_value", "series", "statistic", "value"],
             _mean_rows(values))}


_FIGURES = {
    "fig6": figure_beampattern_tradeoff,
    "fig7": figure_snr_sweep,
    "fig8": figure_size_sweep,
    "fig9": figure_user_sweep,
    "fig10": figure_init_convergence,
}


def run_figure(cfg: ScenarioConfig, figure_id: str, out_dir: str) -> list[str]:
    """Produce one figure's CSVs under out_dir; returns the file names."""
    if figure_id not in _FIGURES:
        raise ConfigError(f"unknown figure id '{figure_id}' "
                          f"(expected one of {', '.join(FIGURE_IDS)})")
    t0 = time.perf_counter()
    tables = _FIGURES[figure_id](cfg)
    os.makedirs(out_dir, exist_ok=True)
    for name, (header, rows) in tables.items():
        write_csv(os.path.join(out_dir, name), header, rows)
    with open(os.path.join(out_dir, f"{figure_id}_manifest.json"), "w") as fh:
        json.dump({"figure": figure_id, "config_hash": config_hash(cfg),
                   "seeds": cfg.seeds, "files": sorted(tables),
                   "wall_time_s": time.perf_counter() - t0},
                  fh, indent=2, sort_keys=True)
    return sorted(tables)
