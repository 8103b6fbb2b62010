"""
Downward-closed families C-down and the zeta / Moebius transform pair on them
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

from noisypop.errors import DimensionMismatchError
from noisypop.hypercube import BitVec


def submasks(mask: int) -> Iterator[int]:
    """Every submask of ``mask``, from ``mask`` itself down to 0."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class Downset:
    """
    The downset generated by ``generators``.

    Members are kept as int masks, ordered by (popcount, mask value).
    """

    n: int
    generators: Tuple[BitVec, ...]
    masks: Tuple[int, ...]
    index: Dict[int, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.masks)

    def __contains__(self, item) -> bool:
        mask = item.bits if isinstance(item, BitVec) else int(item)
        return mask in self.index

    @property
    def members(self) -> Tuple[BitVec, ...]:
        return tuple(BitVec(self.n, m) for m in self.masks)

    @property
    def max_weight(self) -> int:
        return max(g.weight for g in self.generators)

    def position(self, item) -> int:
        mask = item.bits if isinstance(item, BitVec) else int(item)
        return self.index[mask]

    def supersets(self, mask: int) -> List[int]:
        """Positions of the members y with mask subset of y."""
        return [j for j, y in enumerate(self.masks) if y & mask == mask]


def generate_downset(C: Sequence[BitVec]) -> Downset:
    """
    All submasks of all generators, deduplicated

    Args:
        C: Generator list, all of one dimension

    Returns:
        Downset ordered by (popcount, mask)
    """
    if not C:
        raise ValueError("a downset needs at least one generator")
    n = C[0].n
    for c in C:
        if c.n != n:
            raise DimensionMismatchError(n, c.n)
    seen = set()
    for c in C:
        seen.update(submasks(c.bits))
    masks = tuple(sorted(seen, key=lambda m: (m.bit_count(), m)))
    return Downset(n=n, generators=tuple(C), masks=masks, index={m: j for j, m in enumerate(masks)})


def _check_values(ds: Downset, f: Sequence) -> None:
    if len(f) != len(ds):
        raise ValueError(f"{len(f)} values for a downset of {len(ds)} members")


def zeta_transform(ds: Downset, f: Sequence) -> List:
    """(zeta f)(x) = sum of f(y) over members y containing x."""
    _check_values(ds, f)
    out = []
    for x in ds.masks:
        total = 0
        for j, y in enumerate(ds.masks):
            if y & x == x:
                total = total + f[j]
        out.append(total)
    return out


def mobius_transform(ds: Downset, f: Sequence) -> List:
    """
    (mu f)(x) = sum over members y containing x of (-1)^{|y \\ x|} f(y)

    The exact inverse of ``zeta_transform`` on a downward-closed family.
    Arithmetic is generic, so integer or Fraction inputs stay exact.
    """
    _check_values(ds, f)
    out = []
    for x in ds.masks:
        total = 0
        for j, y in enumerate(ds.masks):
            if y & x == x:
                if (y & ~x).bit_count() & 1:
                    total = total - f[j]
                else:
                    total = total + f[j]
        out.append(total)
    return out
