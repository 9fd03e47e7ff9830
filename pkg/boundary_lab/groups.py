"""
Normal-form elements of the 2x2 affine matrix groups

    (1 f)
    (0 m)

where ``m`` is a diagonal monomial of a quotient ring and ``f`` a ring element.
Three families are provided: lamplighters ``Z^d wr Z`` and ``Z^d wr Z/m``
(``G_d(0)``), ``G_k(p)`` for a single relation ``p``, and the torsion-free
Baumslag group over ``Z[Y1, Y2, 1/Y1, 1/(1+Y1), 1/Y2, 1/(1+Y2)]``.

Generator names: ``d`` is the unipotent generator and ``D`` its inverse; the
diagonal generators are ``X1``..``Xk`` (``Y1``, ``Z1``, ``Y2``, ``Z2`` for the
Baumslag group, ``Z`` standing for ``Y + 1``) with the lowercase name for the
inverse.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

from .laurent import Context, ExpVec, LaurentPoly, choose_pivot, parse
from .quotient import (
    ElementIndex,
    FreeLaurent,
    LocalFraction,
    QuotientRing,
    RingElem,
    RingKind,
    SinglePoly,
    baumslag_localization,
)

LOG = logging.getLogger(__name__)


class GroupMismatch(ValueError):
    pass


class Family(Enum):
    LAMPLIGHTER = "lamplighter"
    GKP = "gkp"
    BAUMSLAG = "baumslag"


@dataclass(frozen=True)
class GroupElem:
    upper: RingElem
    exps: ExpVec


@dataclass(frozen=True)
class Homomorphism:
    """
    A coordinate projection of the diagonal exponents onto ``Z^r``.
    """

    name: str
    family: Family
    coords: Tuple[int, ...]

    @property
    def target_rank(self) -> int:
        return len(self.coords)


def _literal_zero(a: RingElem) -> bool:
    if isinstance(a, LocalFraction):
        return not a.numerator.terms
    return not a.terms


def project(h: Homomorphism, a: GroupElem) -> Tuple[int, ...]:
    return tuple(a.exps[i] for i in h.coords)


BAUMSLAG_DIAGONAL = ("Y1", "Z1", "Y2", "Z2")


@dataclass(eq=False)
class GroupSpec:
    family: Family
    ring: QuotientRing
    name: str = ""
    lamp: int = 0
    aliases: Mapping[str, str] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family == Family.GKP and self.ring.kind not in (
            RingKind.FREE_LAURENT,
            RingKind.SINGLE_POLY,
        ):
            raise GroupMismatch(f"G_k(p) needs a FreeLaurent or SinglePoly ring, got {self.ring!r}")
        if self.family == Family.BAUMSLAG:
            if self.ring.rank != 4:
                raise GroupMismatch("the Baumslag group needs a rank 4 localization")
            self.diagonal_names: Tuple[str, ...] = BAUMSLAG_DIAGONAL
        else:
            self.diagonal_names = tuple(f"X{i + 1}" for i in range(self.ring.rank))

        self.generators: Dict[str, GroupElem] = {}
        zero = (0,) * self.rank
        self.generators["d"] = GroupElem(self.ring.one(), zero)
        self.generators["D"] = GroupElem(self.ring.neg(self.ring.one()), zero)
        for i, name in enumerate(self.diagonal_names):
            e = [0] * self.rank
            e[i] = 1
            self.generators[name] = GroupElem(self.ring.zero(), tuple(e))
            e[i] = -1
            self.generators[name.lower()] = GroupElem(self.ring.zero(), tuple(e))
        if len(self.generators) != 2 + 2 * self.rank:
            raise GroupMismatch(f"generator names are not unique: {sorted(self.generators)}")
        self._index_exact = self.ring.canonical

    def __repr__(self) -> str:
        return f"GroupSpec({self.name or self.family.value}, {self.ring!r})"

    @property
    def rank(self) -> int:
        return self.ring.rank

    @property
    def generator_names(self) -> Tuple[str, ...]:
        """
        The positive generators: ``d`` then the diagonal ones.
        """
        return ("d",) + self.diagonal_names

    @property
    def signed_generator_names(self) -> Tuple[str, ...]:
        out: List[str] = ["d", "D"]
        for name in self.diagonal_names:
            out += [name, name.lower()]
        return tuple(out)

    # Elements

    def identity(self) -> GroupElem:
        return GroupElem(self.ring.zero(), (0,) * self.rank)

    def generator(self, name: str) -> GroupElem:
        name = self.aliases.get(name, name)
        try:
            return self.generators[name]
        except KeyError:
            raise GroupMismatch(
                f"unknown generator {name!r}, expected one of {', '.join(self.signed_generator_names)}"
            ) from None

    def diagonal(self, exps: Sequence[int]) -> GroupElem:
        return GroupElem(self.ring.zero(), tuple(exps))

    def _check(self, a: GroupElem) -> None:
        if len(a.exps) != self.rank:
            raise GroupMismatch(f"element with {len(a.exps)} exponents used in {self!r}")

    def multiply(self, a: GroupElem, b: GroupElem) -> GroupElem:
        self._check(a)
        self._check(b)
        exps = tuple(x + y for x, y in zip(a.exps, b.exps))
        if _literal_zero(b.upper):
            return GroupElem(a.upper, exps)
        if any(a.exps):
            moved = self.ring.mul(self.ring.monomial(a.exps), b.upper)
        else:
            moved = b.upper
        return GroupElem(self.ring.add(a.upper, moved), exps)

    def inverse(self, a: GroupElem) -> GroupElem:
        self._check(a)
        neg = tuple(-x for x in a.exps)
        upper = self.ring.neg(a.upper)
        if any(neg):
            upper = self.ring.mul(self.ring.monomial(neg), upper)
        return GroupElem(upper, neg)

    def equals(self, a: GroupElem, b: GroupElem) -> bool:
        return a.exps == b.exps and self.ring.eq_mod(a.upper, b.upper)

    def power(self, a: GroupElem, n: int) -> GroupElem:
        if n < 0:
            a, n = self.inverse(a), -n
        result = self.identity()
        base = a
        while n:
            if n & 1:
                result = self.multiply(result, base)
            n >>= 1
            if n:
                base = self.multiply(base, base)
        return result

    def commutator(self, a: GroupElem, b: GroupElem) -> GroupElem:
        """
        ``a b a^-1 b^-1``.
        """
        return self.multiply(
            self.multiply(a, b), self.multiply(self.inverse(a), self.inverse(b))
        )

    def conjugate(self, h: GroupElem, g: GroupElem) -> GroupElem:
        """
        ``h g h^-1``.
        """
        return self.multiply(self.multiply(h, g), self.inverse(h))

    def monomial_conjugate(self, exps: Sequence[int]) -> GroupElem:
        """
        ``h d h^-1`` for the diagonal ``h`` with exponents ``exps``: the
        element whose upper entry is that monomial.
        """
        return GroupElem(self.ring.monomial(exps), (0,) * self.rank)

    def word_to_elem(self, word: Sequence[str]) -> GroupElem:
        result = self.identity()
        for name in word:
            result = self.multiply(result, self.generator(name))
        return result

    def is_unipotent(self, a: GroupElem) -> bool:
        return not any(a.exps)

    # Projections

    def homomorphism(self, name: str) -> Homomorphism:
        if self.family == Family.BAUMSLAG:
            coords = {"pi": (0, 2), "phi": (0, 1, 2), "phi_prime": (0, 1, 2, 3)}
        else:
            coords = {"pi": tuple(range(self.rank))}
        if name not in coords:
            raise GroupMismatch(f"{self.family.value} groups have no homomorphism {name!r}")
        return Homomorphism(name, self.family, coords[name])

    @property
    def default_projection(self) -> Homomorphism:
        return self.homomorphism("phi" if self.family == Family.BAUMSLAG else "pi")

    def project(self, h: Homomorphism, a: GroupElem) -> Tuple[int, ...]:
        if h.family != self.family:
            raise GroupMismatch(f"{h.name} belongs to {h.family.value}, not {self.family.value}")
        return project(h, a)

    # Indexing

    def key(self, a: GroupElem, seed: int = 0) -> Hashable:
        return (a.exps, self.ring.key(a.upper, seed))

    def index(self, seed: int = 0) -> "ElementIndex[GroupElem]":
        return ElementIndex(
            key=lambda a: self.key(a, seed),
            equal=self.equals,
            exact=self._index_exact,
        )

    def random_word(self, rng: random.Random, length: int) -> List[str]:
        names = self.signed_generator_names
        return [rng.choice(names) for _ in range(length)]

    def describe_elem(self, a: GroupElem) -> Dict[str, object]:
        return {"upper": self.ring.format(a.upper), "exps": list(a.exps)}


def lamplighter_spec(base_rank: int, lamp: int = 0, name: str = "") -> GroupSpec:
    """
    ``Z^base_rank wr Z`` (lamp 0) or ``Z^base_rank wr Z/lamp``.
    """
    if base_rank < 1:
        raise ValueError(f"base rank must be positive, got {base_rank}")
    if lamp == 1 or lamp < 0:
        raise ValueError(f"lamp group Z/{lamp} is not supported")
    ctx = Context(tuple(f"x{i + 1}" for i in range(base_rank)), lamp or None)
    return GroupSpec(Family.LAMPLIGHTER, FreeLaurent(ctx), name=name, lamp=lamp)


def gkp_spec(
    vars: Sequence[str],
    relation: Optional[str] = None,
    pivot: Optional[str] = None,
    name: str = "",
) -> GroupSpec:
    ctx = Context(tuple(vars))
    ring: QuotientRing
    if relation is None:
        ring = FreeLaurent(ctx)
    else:
        p = parse(relation, ctx)
        if pivot is None:
            pivot_index = choose_pivot(p)
        else:
            pivot_index = ctx.index(pivot)
        ring = SinglePoly(p, pivot_index)
    return GroupSpec(Family.GKP, ring, name=name)


def baumslag_spec(name: str = "baumslag-tf") -> GroupSpec:
    return GroupSpec(Family.BAUMSLAG, baumslag_localization(), name=name)


RESTRICTED_ALIASES = {"Y1": "X1", "Z1": "X2", "Y2": "X3", "y1": "x1", "z1": "x2", "y2": "x3"}


def restricted_baumslag_spec() -> GroupSpec:
    """
    The restricted Baumslag group as ``G_3(1 + x1 - x2)``: ``Y1 -> X1``,
    ``Y1 + 1 -> X2``, ``Y2 -> X3``.
    """
    spec = gkp_spec(("x1", "x2", "x3"), "1 + x1 - x2", pivot="x2", name="g3-restricted")
    spec.aliases = dict(RESTRICTED_ALIASES)
    return spec


def lamp(spec: GroupSpec, site: Sequence[int], value: int = 1) -> GroupElem:
    """
    A unipotent element with a single lamp of ``value`` at ``site``.
    """
    upper = spec.ring.scale(spec.ring.monomial(site), value)
    return GroupElem(upper, (0,) * spec.rank)


def upper_poly(spec: GroupSpec, a: GroupElem) -> LaurentPoly:
    """
    The upper entry as a Laurent polynomial, for rings whose elements are
    polynomials.
    """
    if not isinstance(a.upper, LaurentPoly):
        raise GroupMismatch(f"{spec!r} does not store uppers as polynomials")
    return a.upper
