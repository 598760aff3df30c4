"""
Runner Commands

run            one federated experiment -> metrics.csv, summary.json, model.ckpt
sweep          cross product of benchmarks x alphas x modes x seeds
verify-bound   randomised top-k versus optimal error check
codec-bench    mean sparsification error per method over a sweep of ratios
"""

import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..benchmarks import build_split, client_sizes, get_benchmark
from ..common import SEED_NAMES, derive_seed
from ..compression import (
    OPTIMAL_GUARD,
    BoundReport,
    SparsifierKind,
    sparsify_vector,
    spline_error,
    verify_bound
)
from ..federation import ExperimentResult, run_experiment
from ..kan import save_checkpoint
from ..splines import GridSpec
from .config import ExperimentConfig, ExperimentMode, build_config, deep_merge
from .metrics_sink import CsvMetricsSink


logger = logging.getLogger(__name__)

DEFAULT_RATIOS = tuple(round(0.1 * i, 1) for i in range(11))
CODEC_METHODS = (SparsifierKind.TOP_K, SparsifierKind.RANDOM, SparsifierKind.FIXED, SparsifierKind.OPTIMAL)


@dataclass
class RunOutcome:
    run_dir: Path
    result: ExperimentResult
    summary: Dict[str, Any]


def _write_json(path: Path, data: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)


def cmd_run(cfg: ExperimentConfig, run_dir: Optional[Path] = None) -> RunOutcome:
    """
    Run one experiment and write its files.

    Args:
        cfg: Resolved configuration
        run_dir: Output directory; defaults to <output dir>/<run name>

    Returns:
        RunOutcome with the in-memory result and the summary written to disk
    """
    run_dir = Path(run_dir) if run_dir is not None else cfg.output_dir() / cfg.run_name
    run_dir.mkdir(parents=True, exist_ok=True)
    master = cfg.experiment.seed
    seeds = {name: derive_seed(master, name) for name in SEED_NAMES}

    bench = get_benchmark(cfg.experiment.benchmark)
    fl_cfg = cfg.fl_config()
    split = build_split(
        bench,
        cfg.data.n_train,
        cfg.data.n_test,
        fl_cfg.num_clients,
        cfg.partition_config(seeds["partition"]),
        data_seed=seeds["data"],
        test_seed=seeds["test-data"],
        cache_dir=cfg.data.cache_dir
    )

    logger.info("Run %s -> %s", cfg.run_name, run_dir)
    started = time.time()
    sink = CsvMetricsSink(run_dir / "metrics.csv")
    result = run_experiment(fl_cfg, cfg.grid_schedule(), split, bench.widths, sink=sink)
    elapsed = time.time() - started

    save_checkpoint(run_dir / "model.ckpt", result.final_model, result.metrics[-1].round_index)
    sparsified = [m for m in result.metrics if m.sparsified]
    summary = {
        "run_name": cfg.run_name,
        "benchmark": bench.name,
        "mode": cfg.mode.value,
        "seed": master,
        "seeds": seeds,
        "final_rmse": result.final_rmse,
        "final_grid": result.metrics[-1].grid,
        "total_bits": result.total_uplink_bits,
        "bits_budget": fl_cfg.budget,
        "rounds": len(result.metrics),
        "sparsified_rounds": len(sparsified),
        "max_sparsified_bits": max((m.bits_total for m in sparsified), default=None),
        "client_sizes": list(client_sizes(split)),
        "layout_fingerprint": result.metrics[-1].layout_fingerprint,
        "elapsed_seconds": elapsed,
        "config": cfg.echo()
    }
    _write_json(run_dir / "summary.json", summary)
    logger.info("Run %s finished: rmse %.6e, %d bits uploaded", cfg.run_name, result.final_rmse, result.total_uplink_bits)
    return RunOutcome(run_dir=run_dir, result=result, summary=summary)


def cmd_verify_bound(trials: int, g_max: int, o_max: int, seed: int = 0) -> BoundReport:
    """Run the randomised bound check and print its report."""
    report = verify_bound(trials, g_max, o_max, seed)
    print(f"trials: {report.trials} (skipped {report.skipped})")
    print(f"max ratio e_top / e_opt: {report.max_ratio_observed:.4f}  bound o*2^o at o={o_max}: {report.bound:g}")
    for order, ratio in report.max_ratio_by_order.items():
        print(f"  o={order}: max ratio {ratio:.4f} (bound {order * 2 ** order})")
    print(f"violations: {report.violations}")
    return report


def cmd_codec_bench(
    g: int = 10,
    o: int = 3,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    draws: int = 500,
    seed: int = 0,
    out_dir: Optional[Path] = None
) -> pd.DataFrame:
    """
    Mean spline-space error of each sparsifier against the retained ratio.

    k = round(ratio * (g + o)); coefficients are drawn from Normal(0, 1).
    Optimal is left empty when g + o exceeds the exhaustive-search guard.

    Returns:
        DataFrame with columns ratio, k, top-k, random, fixed, optimal
    """
    grid = GridSpec(order=o, grid=g)
    n = grid.num_basis
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((draws, n))
    methods = [m for m in CODEC_METHODS if m is not SparsifierKind.OPTIMAL or n <= OPTIMAL_GUARD]
    if len(methods) < len(CODEC_METHODS):
        logger.warning("g + o = %d exceeds %d; optimal column left empty", n, OPTIMAL_GUARD)

    rows = []
    for ratio in ratios:
        k = int(round(ratio * n))
        row: Dict[str, Any] = {"ratio": ratio, "k": k}
        for method in CODEC_METHODS:
            if method not in methods:
                row[method.value] = float("nan")
                continue
            errors = [
                spline_error(c, sparsify_vector(c, k, method, grid, seed=derive_seed(seed, f"codec-{ratio}-{i}")), grid)
                for i, c in enumerate(coeffs)
            ]
            row[method.value] = float(np.mean(errors))
        rows.append(row)

    table = pd.DataFrame(rows, columns=["ratio", "k"] + [m.value for m in CODEC_METHODS])
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_dir / "codec_bench.csv", index=False)
    print(table.to_csv(index=False), end="")
    return table


def sweep_cells(cfg: ExperimentConfig) -> List[Dict[str, Any]]:
    """Overrides of every sweep cell; fixed-grid expands over the grid list."""
    benchmarks = cfg.sweep.benchmarks or [cfg.experiment.benchmark]
    cells = []
    for bench, alpha, mode, seed in itertools.product(benchmarks, cfg.sweep.alphas, cfg.sweep.modes, cfg.sweep.seeds):
        grids = cfg.sweep.fixed_grids if mode is ExperimentMode.FIXED_GRID else [None]
        for grid in grids:
            experiment: Dict[str, Any] = {"benchmark": bench, "mode": mode.value, "seed": seed}
            if grid is not None:
                experiment["fixed_grid"] = grid
            cells.append({"experiment": experiment, "partition": {"alpha": alpha}})
    return cells


def _run_cell(config_data: Dict[str, Any], run_dir: str) -> Dict[str, Any]:
    cfg = build_config(config_data)
    row = {
        "benchmark": cfg.experiment.benchmark,
        "alpha": cfg.partition.alpha,
        "mode": cfg.mode.value,
        "grid": cfg.experiment.fixed_grid if cfg.mode is ExperimentMode.FIXED_GRID else None,
        "seed": cfg.experiment.seed,
        "run_dir": run_dir
    }
    try:
        outcome = cmd_run(cfg, Path(run_dir))
    except Exception as e:
        logger.warning("Sweep cell %s failed: %s", cfg.run_name, e)
        return {**row, "status": "failed", "final_rmse": math.nan, "total_bits": math.nan, "error": str(e)}
    return {
        **row,
        "status": "ok",
        "final_rmse": outcome.result.final_rmse,
        "total_bits": outcome.result.total_uplink_bits,
        "error": ""
    }


def summarize_sweep(cells: pd.DataFrame) -> pd.DataFrame:
    """
    Median over seeds per (benchmark, alpha, mode); fixed-grid keeps its best grid.

    Returns:
        DataFrame with benchmark, alpha, mode, grid, median_rmse, median_total_bits, seeds
    """
    columns = ["benchmark", "alpha", "mode", "grid", "median_rmse", "median_total_bits", "seeds"]
    ok = cells[cells["status"] == "ok"].copy()
    if ok.empty:
        return pd.DataFrame(columns=columns)
    ok["alpha"] = ok["alpha"].fillna("iid").astype(str)
    ok["grid"] = ok["grid"].fillna(-1).astype(int)

    grouped = (
        ok.groupby(["benchmark", "alpha", "mode", "grid"], sort=True)
        .agg(median_rmse=("final_rmse", "median"), median_total_bits=("total_bits", "median"), seeds=("seed", "count"))
        .reset_index()
    )
    best = grouped.loc[grouped.groupby(["benchmark", "alpha", "mode"], sort=True)["median_rmse"].idxmin()]
    best = best.sort_values(["benchmark", "alpha", "mode"]).reset_index(drop=True)
    best["grid"] = best["grid"].astype("Int64").where(best["grid"] >= 0, pd.NA)
    return best[columns]


def cmd_sweep(cfg: ExperimentConfig, out_dir: Optional[Path] = None, jobs: int = 1) -> pd.DataFrame:
    """
    Run every sweep cell, continue past failures, write sweep_cells.csv and sweep_summary.csv.

    Returns:
        The summary table
    """
    out_dir = Path(out_dir) if out_dir is not None else cfg.output_dir() / "sweep"
    out_dir.mkdir(parents=True, exist_ok=True)
    base = cfg.echo()
    base["output"] = {"dir": None, "name": None}

    work = []
    for overrides in sweep_cells(cfg):
        cell_cfg = build_config(deep_merge(base, overrides))
        work.append((cell_cfg.echo(), str(out_dir / "cells" / cell_cfg.run_name)))
    logger.info("Sweep: %d cells, %d parallel jobs", len(work), jobs)

    rows: List[Dict[str, Any]] = []
    if jobs <= 1:
        rows = [_run_cell(data, run_dir) for data, run_dir in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(_run_cell, data, run_dir): run_dir for data, run_dir in work}
            for future in as_completed(futures):
                rows.append(future.result())

    cells = pd.DataFrame(rows).sort_values(["benchmark", "alpha", "mode", "grid", "seed"], na_position="first")
    cells.to_csv(out_dir / "sweep_cells.csv", index=False)
    summary = summarize_sweep(cells)
    summary.to_csv(out_dir / "sweep_summary.csv", index=False)
    failed = int((cells["status"] != "ok").sum())
    if failed:
        logger.warning("Sweep finished with %d failed cells", failed)
    print(summary.to_csv(index=False), end="")
    return summary
