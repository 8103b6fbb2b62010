"""
AND monomials, the noise-attenuated family AND_{delta,z}, and the test
functions ell and ell_0 in monomial and character form
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from noisypop.config import ETA_SLACK, ZEROTH_TOL
from noisypop.downset import Downset, generate_downset, zeta_transform
from noisypop.errors import EllBoundError
from noisypop.hypercube import BitVec, popcount_array
from noisypop.local_inverse import LocalInverse, build_noise_matrix, compute_local_inverse

logger = logging.getLogger(__name__)


def _mask(x) -> int:
    return x.bits if isinstance(x, BitVec) else int(x)


def _scalar_like(mask: int, arr: np.ndarray):
    return mask if arr.dtype == object else np.uint64(mask)


@dataclass(frozen=True)
class MonomialExpansion:
    """sum over members z of coeffs[z] * AND_z, with AND_z(x) = 1 iff z is a submask of x."""

    downset: Downset
    coeffs: Tuple

    def evaluate(self, x) -> float:
        xm = _mask(x)
        total = 0
        for m, c in zip(self.downset.masks, self.coeffs):
            if m & xm == m:
                total = total + c
        return total

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        out = np.zeros(len(xs))
        for m, c in zip(self.downset.masks, self.coeffs):
            if c:
                mm = _scalar_like(m, xs)
                out += float(c) * ((xs & mm) == mm)
        return out

    def values_on_downset(self) -> List:
        """Value at every member, in downset order."""
        masks = self.downset.masks
        out = []
        for y in masks:
            total = 0
            for m, c in zip(masks, self.coeffs):
                if m & y == m:
                    total = total + c
            out.append(total)
        return out


@dataclass(frozen=True)
class CharacterExpansion:
    """sum over members S of coeffs[S] * chi_S."""

    downset: Downset
    coeffs: Tuple
    l1_norm: float
    max_degree: int

    @classmethod
    def from_coeffs(cls, ds: Downset, coeffs: Sequence) -> "CharacterExpansion":
        coeffs = tuple(coeffs)
        l1 = sum((abs(c) for c in coeffs), 0)
        degree = max((m.bit_count() for m, c in zip(ds.masks, coeffs) if c != 0), default=0)
        return cls(downset=ds, coeffs=coeffs, l1_norm=l1, max_degree=degree)

    def support(self) -> List[Tuple[int, float]]:
        return [(m, c) for m, c in zip(self.downset.masks, self.coeffs) if c != 0]

    def evaluate(self, x) -> float:
        xm = _mask(x)
        total = 0
        for m, c in zip(self.downset.masks, self.coeffs):
            if (m & xm).bit_count() & 1:
                total = total - c
            else:
                total = total + c
        return total

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        out = np.zeros(len(xs))
        for m, c in self.support():
            signs = 1.0 - 2.0 * (popcount_array(xs & _scalar_like(m, xs)) & 1)
            out += float(c) * signs
        return out


Expansion = Union[MonomialExpansion, CharacterExpansion]


def evaluate(expansion: Expansion, x) -> float:
    """Value of either expansion at a point (BitVec or int mask)."""
    return expansion.evaluate(x)


@dataclass(frozen=True)
class EllFunction:
    """
    Test function: 1 at the origin, at most eta in absolute value on the rest
    of the downset. ``construction`` is "ell" (attenuated, LP-backed) or
    "ell0" (exact interpolation, delta = eta = 0).
    """

    delta: float
    eta: float
    r: int
    v: Optional[LocalInverse]
    monomial: MonomialExpansion
    character: CharacterExpansion
    construction: str
    log_norm_bound: float

    @property
    def downset(self) -> Downset:
        return self.monomial.downset

    @property
    def k(self) -> int:
        return len(self.downset.generators)

    @property
    def within_norm_bound(self) -> bool:
        l1 = float(self.character.l1_norm)
        return l1 == 0.0 or math.log(l1) <= self.log_norm_bound + 1e-9

    def evaluate(self, x) -> float:
        return self.character.evaluate(x)


def and_character_expansion(z: BitVec) -> CharacterExpansion:
    """
    AND_z = 2^{-|z|} sum over T subset of z of (-1)^{|T|} chi_T

    The expansion lives on z-down and its L1 norm is exactly 1.
    """
    ds = generate_downset([z])
    scale = 1 << z.weight
    coeffs = [(-1.0 if t.bit_count() & 1 else 1.0) / scale for t in ds.masks]
    return CharacterExpansion.from_coeffs(ds, coeffs)


def build_and_delta(ds: Downset, delta: float, z) -> MonomialExpansion:
    """
    AND_{delta,z} as a monomial expansion over ``ds``

    The coefficient of AND_m is (-delta)^{|m| - |z|} for every member m
    containing z, and 0 elsewhere. On the downset this evaluates to
    1_{y contains z} (1 - delta)^{|y| - |z|}.

    Args:
        ds: Downset
        delta: Attenuation in [0, 1]; 0 gives the plain AND_z
        z: A member of ds

    Returns:
        MonomialExpansion over ds
    """
    zm = _mask(z)
    if zm not in ds.index:
        raise ValueError(f"{z} is not a member of the downset")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    zw = zm.bit_count()
    coeffs = tuple(
        (-delta) ** (m.bit_count() - zw) if m & zm == zm else 0.0
        for m in ds.masks
    )
    return MonomialExpansion(ds, coeffs)


def to_character(m: MonomialExpansion) -> CharacterExpansion:
    """
    Substitute the character expansion of every AND_z and accumulate

    The coefficient of chi_T is (-1)^{|T|} times the zeta transform of
    c_z 2^{-|z|}, so the support stays inside the downset.
    """
    ds = m.downset
    scaled = [c / (1 << z.bit_count()) for z, c in zip(ds.masks, m.coeffs)]
    summed = zeta_transform(ds, scaled)
    coeffs = [-s if t.bit_count() & 1 else s for t, s in zip(ds.masks, summed)]
    return CharacterExpansion.from_coeffs(ds, coeffs)


def log_ell_norm_bound(k: int, r: int, delta: float, eta: float) -> float:
    """ln of k^2 (1+2 delta)^r (2/eta)^{(1/delta) ln(2/delta)}."""
    return (
        2.0 * math.log(k)
        + r * math.log1p(2.0 * delta)
        + (1.0 / delta) * math.log(2.0 / delta) * math.log(2.0 / eta)
    )


def level_values(ell: EllFunction) -> np.ndarray:
    """(A_{delta,r} v)_j for j = 0..r: the value of ell at any member of weight j."""
    if ell.v is None:
        raise ValueError("ell_0 has no local inverse")
    A = build_noise_matrix(ell.delta, ell.r)
    return A.scaled @ ell.v.u


def build_ell(ds: Downset, delta: float, eta: float) -> EllFunction:
    """
    ell = sum over z in ds of v_{|z|} delta^{|z|} AND_{delta,z}

    v is the eta-local inverse of A_{delta,r} with r the largest generator
    weight, so ell(y) = (A v)_{|y|} on the downset: 1 at the origin and at
    most eta elsewhere. Both facts are checked before returning.

    Args:
        ds: Downset generated by the nearby support C
        delta: Attenuation in (0, 1)
        eta: Interpolation accuracy in (0, 1)

    Returns:
        EllFunction with monomial and character forms

    Raises:
        EllBoundError: the built function misses its guarantee
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    r = ds.max_weight
    inverse = compute_local_inverse(delta, r, eta)

    coeffs = np.zeros(len(ds))
    for z in ds.masks:
        w = z.bit_count()
        scale = inverse.u[w]
        if scale != 0.0:
            coeffs += scale * np.asarray(build_and_delta(ds, delta, z).coeffs)
    monomial = MonomialExpansion(ds, tuple(float(c) for c in coeffs))
    character = to_character(monomial)

    values = monomial.values_on_downset()
    if abs(values[0] - 1.0) > ZEROTH_TOL:
        raise EllBoundError(f"ell(0) = {values[0]!r}, expected 1")
    worst = max((abs(x) for x in values[1:]), default=0.0)
    if worst > eta * (1.0 + ETA_SLACK):
        raise EllBoundError(f"|ell| reaches {worst:.6g} on the downset, above eta = {eta}")

    ell = EllFunction(
        delta=float(delta),
        eta=float(eta),
        r=r,
        v=inverse,
        monomial=monomial,
        character=character,
        construction="ell",
        log_norm_bound=log_ell_norm_bound(len(ds.generators), r, delta, eta),
    )
    if not ell.within_norm_bound:
        logger.warning(f"||ell^||_L1 = {character.l1_norm:.6g} exceeds exp({ell.log_norm_bound:.3f})")
    logger.info(
        f"ell: |C|={ell.k} |C_down|={len(ds)} r={r} delta={delta:.4g} eta={eta:.4g} "
        f"L1={float(character.l1_norm):.6g} degree={character.max_degree}"
    )
    return ell


def build_ell_zero(ds: Downset, exact: bool = False) -> EllFunction:
    """
    The exact-interpolation baseline ell_0 = sum over z of (-1)^{|z|} AND_z

    It is 1 at the origin and 0 on every other member. With ``exact`` the
    coefficients are Fractions, so evaluations on the downset are exact.
    """
    one = Fraction(1) if exact else 1.0
    coeffs = tuple(-one if z.bit_count() & 1 else one for z in ds.masks)
    monomial = MonomialExpansion(ds, coeffs)
    character = to_character(monomial)
    return EllFunction(
        delta=0.0,
        eta=0.0,
        r=ds.max_weight,
        v=None,
        monomial=monomial,
        character=character,
        construction="ell0",
        log_norm_bound=math.log(len(ds)),
    )
