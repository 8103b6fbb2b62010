"""
Sample-Complexity Benchmark Module

Sweeps a grid over (mu, k, epsilon), compares the attenuated test function
ell with the exact-interpolation baseline ell_0, and records sample budgets,
Fourier L1 norms and the achieved recovery error per repetition.
"""

import csv
import itertools
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from noisypop.attenuated import build_ell, build_ell_zero, log_ell_norm_bound
from noisypop.downset import generate_downset
from noisypop.errors import NoisyPopError
from noisypop.estimators import inner_product_budget
from noisypop.hypercube import random_distribution, translate
from noisypop.noise import NoisySampler, make_rng
from noisypop.pipeline import choose_parameters, recover_distribution
from noisypop.schemas import RecoveryConfig

logger = logging.getLogger(__name__)

BENCH_COLUMNS = [
    "mu", "k", "epsilon", "repetition", "n", "status", "r", "r_uncapped", "downset_size",
    "ell_l1", "ell_log_bound", "ell_within_bound", "ell0_l1", "ell0_bound", "ell0_within_bound",
    "samples_ell", "samples_ell0", "samples_drawn", "max_error", "seconds", "error",
]


def _log10_or_inf(value: int) -> float:
    return math.log10(value) if value > 0 else float("-inf")


def bench_cell(
    mu: float,
    k: int,
    epsilon: float,
    repetition: int,
    n: int,
    kappa: float,
    seed: int,
    sample_cap: int,
    max_r: int,
    workers: int = 1,
) -> Dict[str, Any]:
    """
    One (cell, repetition) row

    Args:
        mu, k, epsilon: Grid cell
        repetition: Repetition index, folded into the seed
        n: Dimension of the planted instance
        kappa: Failure probability
        seed: Base seed
        sample_cap: Cap on the samples drawn per point
        max_r: Cap on r
        workers: Worker threads

    Returns:
        Row dict keyed by BENCH_COLUMNS
    """
    row: Dict[str, Any] = {"mu": mu, "k": k, "epsilon": epsilon, "repetition": repetition, "n": n}
    start = time.perf_counter()
    try:
        rng = make_rng(seed, (repetition, k, int(mu * 1000), int(epsilon * 1000)))
        dist = random_distribution(n, k, rng)
        config = RecoveryConfig(
            epsilon=epsilon, kappa=kappa, seed=seed, workers=workers,
            sample_cap=sample_cap, max_r=max_r,
        )
        params = choose_parameters(mu, k, n, config)
        frame = translate(dist, dist.points[0])
        ds = generate_downset([p for p in frame.points if p.weight <= params.r])
        ell = build_ell(ds, params.delta, params.eta)
        ell0 = build_ell_zero(ds)
        half = kappa / 2.0
        budget = inner_product_budget(mu, ell.character, epsilon / 16.0, half, max_samples=sys.maxsize)
        budget0 = inner_product_budget(mu, ell0.character, epsilon / 16.0, half, max_samples=sys.maxsize)
        ell0_bound = len(ds.generators) * 2 ** ds.max_weight

        sampler = NoisySampler(dist, mu, seed=seed, key=(repetition,))
        report = recover_distribution(sampler, list(dist.points), config, truth=list(dist.weights))
        row.update(
            status="ok" if report.failures == 0 else "failed",
            r=params.r,
            r_uncapped=params.r_uncapped,
            downset_size=len(ds),
            ell_l1=float(ell.character.l1_norm),
            ell_log_bound=log_ell_norm_bound(len(ds.generators), ds.max_weight, params.delta, params.eta),
            ell_within_bound=ell.within_norm_bound,
            ell0_l1=float(ell0.character.l1_norm),
            ell0_bound=ell0_bound,
            ell0_within_bound=float(ell0.character.l1_norm) <= ell0_bound,
            samples_ell=budget.required,
            samples_ell0=budget0.required,
            samples_drawn=sampler.drawn,
            max_error=report.max_error,
            error="",
        )
        logger.debug(
            f"cell mu={mu} k={k} eps={epsilon}: log10 M(ell)={_log10_or_inf(budget.required):.2f} "
            f"log10 M(ell0)={_log10_or_inf(budget0.required):.2f}"
        )
    except NoisyPopError as exc:
        logger.error(f"cell mu={mu} k={k} eps={epsilon} rep={repetition} failed: {exc}")
        row.update(status="failed", error=str(exc))
    row["seconds"] = time.perf_counter() - start
    return row


def run_benchmark(
    mus: Sequence[float],
    ks: Sequence[int],
    epsilons: Sequence[float],
    repetitions: int = 1,
    n: int = 10,
    kappa: float = 0.1,
    seed: int = 0,
    sample_cap: int = 20000,
    max_r: int = 6,
    workers: int = 1,
) -> List[Dict[str, Any]]:
    """Every grid cell times every repetition, in grid order."""
    rows = []
    cells = list(itertools.product(mus, ks, epsilons))
    print(f"\nBenchmarking {len(cells)} cells x {repetitions} repetitions at n={n}...")
    for mu, k, epsilon in cells:
        for rep in range(repetitions):
            rows.append(bench_cell(mu, k, epsilon, rep, n, kappa, seed, sample_cap, max_r, workers))

    ok = [r for r in rows if r["status"] == "ok"]
    print("=" * 60)
    print("BENCHMARK RESULTS")
    print("=" * 60)
    print(f"Rows: {len(rows)}  ok: {len(ok)}  failed: {len(rows) - len(ok)}")
    if ok:
        errors = [r["max_error"] for r in ok if r["max_error"] is not None]
        ratio = np.median([r["ell0_l1"] / r["ell_l1"] for r in ok if r["ell_l1"]])
        print(f"Median ||ell_0^|| / ||ell^||: {ratio:.3g}")
        if errors:
            print(f"Worst max error: {max(errors):.4f}")
    print("=" * 60)
    return rows


def save_benchmark_results(rows: List[Dict[str, Any]], output_path: Path) -> None:
    """
    Save benchmark rows to a tidy CSV file

    Args:
        rows: Rows from run_benchmark
        output_path: Path to output file
    """
    output_path.parent.mkdir(parents=True, exist_ok=True)

    with open(output_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in BENCH_COLUMNS})

    print(f"\nResults saved to {output_path}")
