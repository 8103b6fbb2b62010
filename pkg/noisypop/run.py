"""
noisypop command-line runner
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from noisypop.config import (
    DEFAULT_BENCH_PATH,
    DEFAULT_MAX_R,
    DEFAULT_REPORT_PATH,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    FAR_CONSTANT,
    LOG_LEVEL,
    PROCESSED_DIR,
    SAMPLE_CAP,
    VERIFY_MAX_N,
    setup_logging,
)
from noisypop.errors import InputFileError, InsufficientSamplesError, NoisyPopError, SampleBudgetError
from noisypop.files import (
    distribution_to_population,
    population_to_distribution,
    read_population,
    read_samples,
    read_support,
    write_population,
    write_report,
    write_samples,
)
from noisypop.hypercube import WEIGHT_PROFILES, SparseDistribution, random_distribution
from noisypop.noise import NoisySampler, make_rng
from noisypop.oracle import ExactSource
from noisypop.pipeline import recover_distribution
from noisypop.schemas import RecoveryConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RECOVERY_FAILURE = 1
EXIT_INPUT_ERROR = 2

REPORT_HELP = (
    "CSV report columns: point, estimate, normalized, truth, status, error, upsilon, "
    "inner_product, ell_l1, downset_size, r, r_uncapped, delta, eta, samples, "
    "samples_required, far_points, audit_bound"
)


def cmd_gen(n: int, k: int, profile: str, seed: int, output: Path, mu: Optional[float] = None) -> SparseDistribution:
    """
    Write a random population file

    Args:
        n: Dimension
        k: Support size
        profile: Weight profile
        seed: Seed
        output: Population file to write
        mu: Noise rate recorded in the header

    Returns:
        The generated distribution
    """
    dist = random_distribution(n, k, make_rng(seed), profile)
    write_population(distribution_to_population(dist, mu), output)
    print(f"Generated population n={n} k={k} ({profile}) -> {output}")
    return dist


def cmd_sample(population: Path, mu: Optional[float], count: int, seed: int, output: Path) -> int:
    """Draw ``count`` noisy samples of a population into a sample file."""
    pop = read_population(population)
    rate = mu if mu is not None else pop.mu
    if rate is None:
        raise InputFileError("no noise rate: pass --mu or put mu=<mu> in the header", path=str(population))
    sampler = NoisySampler(population_to_distribution(pop), rate, seed=seed)
    written = write_samples(output, sampler.draw_batch(count), pop.n, rate, seed)
    print(f"Wrote {written} samples at mu={rate} -> {output}")
    return written


def _recovery_config(args: argparse.Namespace) -> RecoveryConfig:
    return RecoveryConfig(
        epsilon=args.epsilon,
        kappa=args.kappa,
        delta_override=args.delta,
        eta_override=args.eta,
        r_override=args.r,
        far_constant=args.far_constant,
        gap_policy=args.gap_policy,
        max_r=args.max_r,
        seed=args.seed,
        workers=args.workers,
        sample_cap=args.sample_cap,
        construction=args.construction,
        normalize=args.normalize,
    )


def cmd_recover(args: argparse.Namespace) -> int:
    """Recover the weights of a known support and write the report; returns the exit code."""
    support, truth = read_support(Path(args.population))
    try:
        pop = read_population(Path(args.population))
    except InputFileError:
        # a bare support list
        pop = None
    header_mu = pop.mu if pop is not None else None
    config = _recovery_config(args)

    if args.samples:
        sampler = read_samples(Path(args.samples), args.mu)
    else:
        mu = args.mu if args.mu is not None else header_mu
        if mu is None:
            raise InputFileError("no noise rate: pass --mu or put mu=<mu> in the header")
        if truth is None:
            raise InputFileError("a live sampler needs weights in the population file")
        dist = population_to_distribution(pop) if pop is not None else SparseDistribution(support[0].n, tuple(support), tuple(truth))
        sampler = ExactSource(dist, mu) if args.exact else NoisySampler(dist, mu, seed=args.seed)

    dump_dir = Path(args.dump_dir) if args.dump_dir else None
    report = recover_distribution(sampler, support, config, truth=truth, dump_dir=dump_dir)
    output = Path(args.output) if args.output else DEFAULT_REPORT_PATH.with_suffix(f".{args.format}")
    write_report(report, output, args.format)

    print(f"Recovered {report.k - report.failures} of {report.k} points ({report.backend} backend)")
    for row in report.points:
        shown = "failed" if row.estimate is None else f"{row.estimate:.4f}"
        extra = f"  truth {row.truth:.4f}" if row.truth is not None else ""
        print(f"  {row.point}  {shown}{extra}")
    print(f"Report -> {output}")
    return EXIT_RECOVERY_FAILURE if report.failures else EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from bench.benchmark import run_benchmark, save_benchmark_results

    rows = run_benchmark(
        args.mu, args.k, args.epsilon,
        repetitions=args.repetitions, n=args.n, kappa=args.kappa, seed=args.seed,
        sample_cap=args.sample_cap, max_r=args.max_r, workers=args.workers,
    )
    save_benchmark_results(rows, Path(args.output) if args.output else DEFAULT_BENCH_PATH)
    return EXIT_OK


def cmd_verify(n: int, seed: int) -> int:
    """Run the oracle cross-check suite; nonzero exit on any failure."""
    from noisypop.verify import run_checks

    results = run_checks(n, seed)
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"  [{mark}] {res.name:<14} {res.seconds:7.2f}s  {res.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)} of {len(results)} checks passed")
    return EXIT_RECOVERY_FAILURE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Recover a sparse distribution from bit-flip-noised samples")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level (default: %(default)s)")
    parser.add_argument("--log-file", default=None, help="Also append log lines to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a random population file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--profile", choices=WEIGHT_PROFILES, default="dirichlet")
    gen.add_argument("--mu", type=float, default=None, help="Noise rate stored in the header")
    gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.add_argument("--output", default=str(PROCESSED_DIR / "population.txt"))

    sample = sub.add_parser("sample", help="Write noisy samples of a population")
    sample.add_argument("--population", required=True)
    sample.add_argument("--mu", type=float, default=None)
    sample.add_argument("--count", type=int, required=True)
    sample.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sample.add_argument("--output", default=str(PROCESSED_DIR / "samples.txt"))

    rec = sub.add_parser("recover", help="Recover the weights of a known support", epilog=REPORT_HELP)
    rec.add_argument("--population", required=True, help="Population or support file")
    rec.add_argument("--samples", default=None, help="Sample file (default: live sampler from the population)")
    rec.add_argument("--exact", action="store_true", help="Use exact oracle quantities instead of samples")
    rec.add_argument("--mu", type=float, default=None)
    rec.add_argument("--epsilon", type=float, default=0.1)
    rec.add_argument("--kappa", type=float, default=0.05)
    rec.add_argument("--delta", type=float, default=None)
    rec.add_argument("--eta", type=float, default=None)
    rec.add_argument("--r", type=int, default=None)
    rec.add_argument("--max-r", type=int, default=DEFAULT_MAX_R)
    rec.add_argument("--far-constant", type=float, default=FAR_CONSTANT)
    rec.add_argument(
        "--gap-policy",
        choices=["filter", "fail"],
        default="filter",
        help="Points between r and the far threshold that r cannot reach: filter them as far, or fail the row",
    )
    rec.add_argument("--construction", choices=["ell", "ell0"], default="ell")
    rec.add_argument("--sample-cap", type=int, default=SAMPLE_CAP)
    rec.add_argument("--normalize", action="store_true", help="Also project the estimates onto the simplex")
    rec.add_argument("--seed", type=int, default=DEFAULT_SEED)
    rec.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    rec.add_argument("--format", choices=["csv", "json"], default="json")
    rec.add_argument("--output", default=None)
    rec.add_argument("--dump-dir", default=None, help="Write ell coefficients and local inverses here")

    bench = sub.add_parser("bench", help="Sample-complexity sweep, ell against ell_0")
    bench.add_argument("--mu", type=float, nargs="+", default=[0.7, 0.9])
    bench.add_argument("--k", type=int, nargs="+", default=[2, 4])
    bench.add_argument("--epsilon", type=float, nargs="+", default=[0.2])
    bench.add_argument("--repetitions", type=int, default=2)
    bench.add_argument("--n", type=int, default=10)
    bench.add_argument("--kappa", type=float, default=0.1)
    bench.add_argument("--sample-cap", type=int, default=20000)
    bench.add_argument("--max-r", type=int, default=6)
    bench.add_argument("--seed", type=int, default=DEFAULT_SEED)
    bench.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    bench.add_argument("--output", default=None)

    ver = sub.add_parser("verify", help="Cross-check every component against brute-force oracles")
    ver.add_argument("--n", type=int, default=10, help=f"Instance dimension (at most {VERIFY_MAX_N})")
    ver.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI entry point
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, Path(args.log_file) if args.log_file else None)

    try:
        if args.command == "gen":
            cmd_gen(args.n, args.k, args.profile, args.seed, Path(args.output), args.mu)
            return EXIT_OK
        if args.command == "sample":
            cmd_sample(Path(args.population), args.mu, args.count, args.seed, Path(args.output))
            return EXIT_OK
        if args.command == "recover":
            return cmd_recover(args)
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_verify(args.n, args.seed)
    except InsufficientSamplesError as exc:
        print(f"Not enough samples: the budget needs M = {exc.required}, the file has {exc.available}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SampleBudgetError as exc:
        print(f"Sample budget too large: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (InputFileError, ValidationError, ValueError) as exc:
        print(f"Input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NoisyPopError as exc:
        print(f"Recovery failed: {exc}", file=sys.stderr)
        return EXIT_RECOVERY_FAILURE


if __name__ == "__main__":
    sys.exit(main())
