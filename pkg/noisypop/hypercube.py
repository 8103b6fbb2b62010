"""
Bit-level hypercube primitives: points, subsets-as-masks, characters,
Hamming geometry and translation
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from noisypop.config import WEIGHT_SUM_TOL
from noisypop.errors import DimensionMismatchError

# uint64 packing is exact up to this many coordinates
PACKED_MAX_N = 64


@dataclass(frozen=True)
class BitVec:
    """
    A point of {0,1}^n, or a subset of [n] through its characteristic vector.

    Coordinate i (1-based) is stored in bit i-1 of ``bits``. Python ints are
    arbitrary precision, so n > 64 needs no separate multi-word type.
    """

    n: int
    bits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bits", int(self.bits))
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits {self.bits:#x} do not fit in dimension {self.n}")

    @classmethod
    def zeros(cls, n: int) -> "BitVec":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "BitVec":
        return cls(n, (1 << n) - 1)

    @classmethod
    def unit(cls, n: int, i: int) -> "BitVec":
        """e_i, with i 1-based."""
        return cls.from_indices(n, [i])

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "BitVec":
        bits = 0
        for i in indices:
            if not 1 <= i <= n:
                raise ValueError(f"coordinate {i} outside [1, {n}]")
            bits |= 1 << (i - 1)
        return cls(n, bits)

    @classmethod
    def from_string(cls, text: str) -> "BitVec":
        """Parse an ASCII '0'/'1' string; leftmost character is coordinate 1."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        bits = 0
        for i, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << i
        return cls(len(text), bits)

    def __str__(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.n))

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> List[int]:
        return [i + 1 for i in range(self.n) if (self.bits >> i) & 1]

    def issubset(self, other: "BitVec") -> bool:
        _check_dim(self.n, other.n)
        return self.bits & other.bits == self.bits

    def __xor__(self, other: "BitVec") -> "BitVec":
        _check_dim(self.n, other.n)
        return BitVec(self.n, self.bits ^ other.bits)

    def __and__(self, other: "BitVec") -> "BitVec":
        _check_dim(self.n, other.n)
        return BitVec(self.n, self.bits & other.bits)

    def __or__(self, other: "BitVec") -> "BitVec":
        _check_dim(self.n, other.n)
        return BitVec(self.n, self.bits | other.bits)

    def __invert__(self) -> "BitVec":
        return BitVec(self.n, ~self.bits & ((1 << self.n) - 1))


Mask = Union[BitVec, int]


def _check_dim(left: int, right: int) -> None:
    if left != right:
        raise DimensionMismatchError(left, right)


def chi(S: BitVec, x: BitVec) -> int:
    """
    Walsh character chi_S(x) = (-1)^{|S & x|}

    Args:
        S: Subset of [n] as a bit vector
        x: Point of the cube

    Returns:
        +1 or -1
    """
    _check_dim(S.n, x.n)
    return -1 if (S.bits & x.bits).bit_count() & 1 else 1


def hamming_distance(x: BitVec, y: BitVec) -> int:
    _check_dim(x.n, y.n)
    return (x.bits ^ y.bits).bit_count()


def popcount_array(values: np.ndarray) -> np.ndarray:
    """
    Element-wise popcount of a packed mask array.

    uint64 arrays take the vectorized path; object arrays of Python ints
    (dimensions above 64) are counted one by one.
    """
    arr = np.asarray(values)
    if arr.dtype == object:
        counts = np.fromiter((int(v).bit_count() for v in arr.ravel()), dtype=np.int64, count=arr.size)
        return counts.reshape(arr.shape)
    x = arr.astype(np.uint64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(x).astype(np.int64)
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return ((x * np.uint64(0x0101010101010101)) >> np.uint64(56)).astype(np.int64)


def mask_array(masks: Sequence[int], n: int) -> np.ndarray:
    """Pack Python-int masks into uint64 (n <= 64) or an object array."""
    if n <= PACKED_MAX_N:
        return np.array([int(m) for m in masks], dtype=np.uint64)
    out = np.empty(len(masks), dtype=object)
    out[:] = [int(m) for m in masks]
    return out


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean (count, n) matrix into one mask per row."""
    count, n = bits.shape
    if n <= PACKED_MAX_N:
        place = np.uint64(1) << np.arange(n, dtype=np.uint64)
        return (bits.astype(np.uint64) * place).sum(axis=1, dtype=np.uint64)
    out = np.empty(count, dtype=object)
    out[:] = [sum(1 << int(j) for j in np.flatnonzero(row)) for row in bits]
    return out


@dataclass(frozen=True)
class SparseDistribution:
    """The unknown f: k distinct points of {0,1}^n with weights summing to 1."""

    n: int
    points: Tuple[BitVec, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.points:
            raise ValueError("a distribution needs at least one support point")
        if len(self.points) != len(self.weights):
            raise ValueError(f"{len(self.points)} points but {len(self.weights)} weights")
        for p in self.points:
            _check_dim(self.n, p.n)
        if len({p.bits for p in self.points}) != len(self.points):
            raise ValueError("support points must be distinct")
        if any(w < 0.0 or w > 1.0 for w in self.weights):
            raise ValueError("weights must lie in [0, 1]")
        total = sum(self.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def masks(self) -> List[int]:
        return [p.bits for p in self.points]

    def weight_of(self, point: BitVec) -> float:
        _check_dim(self.n, point.n)
        for p, w in zip(self.points, self.weights):
            if p.bits == point.bits:
                return w
        return 0.0

    @classmethod
    def from_strings(cls, rows: Sequence[Tuple[str, float]]) -> "SparseDistribution":
        points = [BitVec.from_string(s) for s, _ in rows]
        n = points[0].n if points else 0
        return cls(n, tuple(points), tuple(w for _, w in rows))


def translate(dist: SparseDistribution, x1: BitVec) -> SparseDistribution:
    """
    Shift every support point by XOR with ``x1``

    Translating by a support point moves it to the origin; applying the same
    translation twice gives back the input.
    """
    _check_dim(dist.n, x1.n)
    return SparseDistribution(dist.n, tuple(p ^ x1 for p in dist.points), dist.weights)


WEIGHT_PROFILES = ("uniform", "geometric", "dirichlet")


def profile_weights(k: int, profile: str, rng: np.random.Generator) -> List[float]:
    """Weights for k points: equal, halving, or a flat Dirichlet draw."""
    if profile == "uniform":
        weights = np.full(k, 1.0 / k)
    elif profile == "geometric":
        weights = 0.5 ** np.arange(k)
    elif profile == "dirichlet":
        weights = rng.dirichlet(np.ones(k))
    else:
        raise ValueError(f"unknown weight profile {profile!r}; expected one of {WEIGHT_PROFILES}")
    weights = weights / weights.sum()
    # push the rounding residue onto the largest weight so the sum is 1
    weights[int(np.argmax(weights))] += 1.0 - weights.sum()
    return [float(w) for w in weights]


def random_distribution(n: int, k: int, rng: np.random.Generator, profile: str = "dirichlet") -> SparseDistribution:
    """
    k distinct uniformly random points of {0,1}^n with profile weights

    Args:
        n: Dimension
        k: Support size, at most 2^n
        rng: Seeded generator
        profile: One of WEIGHT_PROFILES

    Returns:
        SparseDistribution
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    if n < 63 and k > (1 << n):
        raise ValueError(f"k = {k} exceeds 2^{n}")
    if n < 63:
        masks = [int(m) for m in rng.choice(1 << n, size=k, replace=False)]
    else:
        chosen = {}
        while len(chosen) < k:
            row = rng.random(n) < 0.5
            chosen.setdefault(sum(1 << int(j) for j in np.flatnonzero(row)), None)
        masks = list(chosen)
    points = tuple(BitVec(n, m) for m in masks)
    return SparseDistribution(n, points, tuple(profile_weights(k, profile, rng)))
