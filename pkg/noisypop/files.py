"""
Line-oriented ASCII formats: population files, sample files, recovery
reports and the test-function dumps
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from noisypop.attenuated import EllFunction
from noisypop.config import WEIGHT_SUM_TOL
from noisypop.errors import InputFileError
from noisypop.hypercube import BitVec, SparseDistribution
from noisypop.noise import SampleArraySource
from noisypop.schemas import PointReport, PopulationFile, RecoveryReport

logger = logging.getLogger(__name__)

# population files are checked more loosely than in-memory distributions
FILE_SUM_TOL = 1e-9

REPORT_COLUMNS = list(PointReport.model_fields)


def parse_header(line: str) -> Dict[str, str]:
    """Split "key=value key=value" into a dict."""
    fields = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise ValueError(f"malformed header token {token!r}")
        fields[key] = value
    return fields


def validate_population(rows, n=None, k=None):
    """
    Validate population rows before building a distribution.
    Returns (is_valid, error_message)
    """
    if not rows:
        return False, "Population has no rows"

    errors = []
    seen = set()
    total = 0.0
    for text, weight in rows:
        if not text or set(text) - {"0", "1"}:
            errors.append(f"Not a bit string: {text!r}")
            continue
        if n is not None and len(text) != n:
            errors.append(f"{text} has length {len(text)}, expected {n}")
        if text in seen:
            errors.append(f"Duplicate point {text}")
        seen.add(text)
        try:
            w = float(weight)
        except (TypeError, ValueError):
            errors.append(f"Weight of {text} is not a number")
            continue
        if not 0.0 <= w <= 1.0:
            errors.append(f"Weight of {text} outside [0, 1]")
        total += w

    if k is not None and len(rows) != k:
        errors.append(f"Header says k={k} but found {len(rows)} rows")
    if not errors and abs(total - 1.0) > FILE_SUM_TOL:
        errors.append(f"Weights sum to {total!r}, not 1")

    if errors:
        return False, "; ".join(errors)

    return True, None


def _read_lines(path: Path) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh]
    except OSError as exc:
        raise InputFileError(str(exc), path=str(path)) from exc
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines:
        raise InputFileError("file is empty", path=str(path))
    return lines


def read_population(path: Path) -> PopulationFile:
    lines = _read_lines(path)
    try:
        header = parse_header(lines[0])
        n, k = int(header["n"]), int(header["k"])
        mu = float(header["mu"]) if "mu" in header else None
    except (KeyError, ValueError) as exc:
        raise InputFileError(f"bad population header {lines[0]!r}: {exc}", path=str(path)) from exc

    rows = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise InputFileError(f"expected '<bitstring> <weight>', got {line!r}", path=str(path))
        rows.append((parts[0], parts[1]))

    is_valid, message = validate_population(rows, n, k)
    if not is_valid:
        raise InputFileError(message, path=str(path))
    return PopulationFile(n=n, k=k, mu=mu, rows=[(s, float(w)) for s, w in rows])


def read_support(path: Path) -> Tuple[List[BitVec], Optional[List[float]]]:
    """
    Candidate support from a population file, or from a bare list of bit
    strings (one per line, optional "n=<n>" header). Weights, when present,
    are returned as ground truth.
    """
    lines = _read_lines(path)
    if "=" in lines[0]:
        lines = lines[1:]
    points, weights = [], []
    for line in lines:
        parts = line.split()
        try:
            points.append(BitVec.from_string(parts[0]))
        except ValueError as exc:
            raise InputFileError(str(exc), path=str(path)) from exc
        if len(parts) > 1:
            weights.append(float(parts[1]))
    if not points:
        raise InputFileError("no support points", path=str(path))
    if len({p.n for p in points}) != 1:
        raise InputFileError("support points have different lengths", path=str(path))
    if len({p.bits for p in points}) != len(points):
        raise InputFileError("duplicate support points", path=str(path))
    if weights and len(weights) != len(points):
        raise InputFileError("weights given for only some points", path=str(path))
    return points, (weights or None)


def population_to_distribution(pop: PopulationFile) -> SparseDistribution:
    """Build the distribution, renormalizing rounding error below the file tolerance."""
    total = sum(w for _, w in pop.rows)
    weights = [w / total for _, w in pop.rows] if abs(total - 1.0) > WEIGHT_SUM_TOL else [w for _, w in pop.rows]
    return SparseDistribution(pop.n, tuple(BitVec.from_string(s) for s, _ in pop.rows), tuple(weights))


def distribution_to_population(dist: SparseDistribution, mu: Optional[float] = None) -> PopulationFile:
    return PopulationFile(
        n=dist.n,
        k=dist.k,
        mu=mu,
        rows=[(str(p), w) for p, w in zip(dist.points, dist.weights)],
    )


def write_population(pop: PopulationFile, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"n={pop.n} k={pop.k}" + (f" mu={pop.mu!r}" if pop.mu is not None else "")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for text, weight in pop.rows:
            fh.write(f"{text} {weight!r}\n")
    logger.info(f"wrote population n={pop.n} k={pop.k} to {path}")


def write_samples(path: Path, masks: Iterable[int], n: int, mu: float, seed: int) -> int:
    masks = [int(m) for m in masks]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={n} mu={mu!r} seed={seed} count={len(masks)}\n")
        for m in masks:
            fh.write(str(BitVec(n, m)) + "\n")
    logger.info(f"wrote {len(masks)} samples to {path}")
    return len(masks)


def read_samples(path: Path, mu: Optional[float] = None) -> SampleArraySource:
    """
    Load a sample file as a sample source

    Args:
        path: Sample file
        mu: Noise rate; taken from the header when omitted

    Returns:
        SampleArraySource over every sample in the file
    """
    lines = _read_lines(path)
    try:
        header = parse_header(lines[0])
        n = int(header["n"])
        rate = float(mu if mu is not None else header["mu"])
        count = int(header.get("count", len(lines) - 1))
    except (KeyError, ValueError) as exc:
        raise InputFileError(f"bad sample header {lines[0]!r}: {exc}", path=str(path)) from exc

    masks = []
    for line in lines[1:]:
        if len(line) != n:
            raise InputFileError(f"sample {line!r} does not have length {n}", path=str(path))
        try:
            masks.append(BitVec.from_string(line).bits)
        except ValueError as exc:
            raise InputFileError(str(exc), path=str(path)) from exc
    if count != len(masks):
        raise InputFileError(f"header says count={count} but found {len(masks)} samples", path=str(path))
    logger.info(f"loaded {len(masks)} samples (n={n}, mu={rate}) from {path}")
    return SampleArraySource(masks, n, rate)


def write_report(report: RecoveryReport, path: Path, fmt: str = "json") -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.model_dump_json(indent=2))
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            writer.writeheader()
            for row in report.points:
                writer.writerow(row.model_dump())
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    logger.info(f"report written to {path}")


def read_report(path: Path) -> RecoveryReport:
    with open(path, "r", encoding="utf-8") as fh:
        return RecoveryReport.model_validate(json.load(fh))


def write_ell_csv(ell: EllFunction, path: Path) -> None:
    """
    Both expansions of ell, one "mask,subset,monomial,character" row per
    downset member where either coefficient is nonzero
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    ds = ell.downset
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mask", "subset", "monomial", "character"])
        for mask, mono, char in zip(ds.masks, ell.monomial.coeffs, ell.character.coeffs):
            if mono == 0 and char == 0:
                continue
            writer.writerow([mask, str(BitVec(ds.n, mask)), repr(float(mono)), repr(float(char))])


def write_local_inverse_csv(v: Sequence[float], values: Sequence[float], path: Path) -> None:
    """v_j next to (A v)_j for j = 0..r."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "v", "Av"])
        for j, (vj, aj) in enumerate(zip(np.asarray(v), np.asarray(values))):
            writer.writerow([j, repr(float(vj)), repr(float(aj))])
