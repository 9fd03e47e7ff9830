"""
Cube independence: all 2^n products g1^e1 ... gn^en, e in {0,1}^n, distinct.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from vmodule import VLOG_1, VLOG_2

from .groups import Family, GroupElem, GroupSpec, Homomorphism
from .laurent import LaurentPoly, ResidueMap, divides
from .quotient import (
    LocalFraction,
    Localization,
    QuotientRing,
    RingElem,
    RingKind,
    SinglePoly,
)

LOG = logging.getLogger(__name__)

DEFAULT_CAP = 20
FLAT_CAP = 12

Eps = Tuple[int, ...]
Witness = Tuple[Eps, Eps]


class CubeCapExceeded(ValueError):
    pass


class NotUnipotent(ValueError):
    pass


class SamplingBudgetExceeded(ValueError):
    pass


class Method(Enum):
    BRUTE_FORCE = "brute_force"
    FLAT_COMBINATION = "flat_combination"


@dataclass
class CubeReport:
    independent: bool
    n: int
    method: Method
    witness: Optional[Witness] = None
    # lamp peel order for lamplighters over Z (diagnostic)
    peel_order: Optional[List[int]] = None

    def to_json(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "independent": self.independent,
            "n": self.n,
            "witness": [list(self.witness[0]), list(self.witness[1])] if self.witness else None,
            "method": self.method.value,
        }
        if self.peel_order is not None:
            out["peel_order"] = self.peel_order
        return out


@dataclass(frozen=True)
class DeltaPair:
    delta1: GroupElem
    delta2: GroupElem
    projection: Homomorphism


def make_delta_pair(
    spec: GroupSpec,
    delta1: GroupElem,
    delta2: GroupElem,
    projection: Optional[Homomorphism] = None,
) -> DeltaPair:
    projection = projection or spec.default_projection
    if spec.equals(delta1, delta2):
        raise ValueError("the two elements of a delta pair must differ")
    if spec.project(projection, delta1) != spec.project(projection, delta2):
        raise ValueError(f"delta pair elements have different {projection.name} images")
    return DeltaPair(delta1, delta2, projection)


def standard_delta_pair(spec: GroupSpec, projection: Optional[Homomorphism] = None) -> DeltaPair:
    """
    ``(e, d)`` for lamplighters and ``G_k(p)``; for the Baumslag group the
    pair ``(s s', s' s)`` with ``s = Y1 d`` and ``s' = Z1``, which share the
    same image under every homomorphism.
    """
    if spec.family != Family.BAUMSLAG:
        return make_delta_pair(spec, spec.identity(), spec.generator("d"), projection)
    s = spec.word_to_elem(("Y1", "d"))
    s_prime = spec.generator("Z1")
    return make_delta_pair(
        spec, spec.multiply(s, s_prime), spec.multiply(s_prime, s), projection
    )


def cube_product(spec: GroupSpec, gamma: Sequence[GroupElem], eps: Eps) -> GroupElem:
    result = spec.identity()
    for g, e in zip(gamma, eps):
        if e:
            result = spec.multiply(result, g)
    return result


def _verified(spec: GroupSpec, gamma: Sequence[GroupElem], witness: Witness) -> Witness:
    if witness[0] == witness[1] or not spec.equals(
        cube_product(spec, gamma, witness[0]), cube_product(spec, gamma, witness[1])
    ):
        raise AssertionError(f"cube witness {witness} does not verify")
    return witness


def _peel_order(spec: GroupSpec, gamma: Sequence[GroupElem]) -> Optional[List[int]]:
    if spec.family != Family.LAMPLIGHTER or spec.lamp != 0:
        return None
    if not all(spec.is_unipotent(g) and isinstance(g.upper, LaurentPoly) and g.upper for g in gamma):
        return None
    tops = [max(g.upper.terms) for g in gamma]  # type: ignore[union-attr]
    return sorted(range(len(gamma)), key=lambda i: tops[i], reverse=True)


def check_cube_independent(
    gamma: Sequence[GroupElem],
    spec: GroupSpec,
    cap: int = DEFAULT_CAP,
    seed: int = 0,
) -> CubeReport:
    """
    Enumerate all 2^n products depth first, each costing one multiplication
    from its parent prefix, and look for a repeat.
    """
    n = len(gamma)
    if n > cap:
        raise CubeCapExceeded(f"{n} elements exceeds the cube cap of {cap}")
    index = spec.index(seed)
    seen: Dict[int, Eps] = {}

    def visit(i: int, prefix: GroupElem, eps: Eps) -> Optional[Witness]:
        if i == n:
            hit = index.add(prefix)
            if hit is not None:
                return (seen[id(hit)], eps)
            seen[id(prefix)] = eps
            return None
        return visit(i + 1, prefix, eps + (0,)) or visit(
            i + 1, spec.multiply(prefix, gamma[i]), eps + (1,)
        )

    witness = visit(0, spec.identity(), ())
    LOG.log(VLOG_1, "brute force over %d products: %s", 2**n, "repeat" if witness else "distinct")
    if witness is not None:
        return CubeReport(False, n, Method.BRUTE_FORCE, _verified(spec, gamma, witness))
    return CubeReport(True, n, Method.BRUTE_FORCE, peel_order=_peel_order(spec, gamma))


def check_cube_along_image(
    pair: DeltaPair,
    h: Sequence[GroupElem],
    spec: GroupSpec,
    cap: int = DEFAULT_CAP,
    seed: int = 0,
) -> CubeReport:
    """
    Independence of the conjugates ``h_i d1^-1 d2 h_i^-1``.
    """
    images = [spec.project(pair.projection, x) for x in h]
    if len(set(images)) != len(images):
        raise ValueError(f"conjugating elements must have distinct {pair.projection.name} images")
    return check_cube_independent(conjugates(pair, h, spec), spec, cap, seed)


def conjugates(pair: DeltaPair, h: Sequence[GroupElem], spec: GroupSpec) -> List[GroupElem]:
    """
    ``h_i d1^-1 d2 h_i^-1`` for each ``h_i``.
    """
    delta_bar = spec.multiply(spec.inverse(pair.delta1), pair.delta2)
    return [spec.conjugate(x, delta_bar) for x in h]


def ternary_gray(m: int) -> Iterator[Tuple[int, int, int]]:
    """
    Walk all of {0, 1, 2}^m from zero in reflected Gray order, yielding
    ``(position, old_digit, new_digit)`` for each single-digit change.
    """
    digits = [0] * m
    direction = [1] * m
    for count in range(1, 3**m):
        i = 0
        c = count
        while c % 3 == 0:
            c //= 3
            i += 1
        old = digits[i]
        digits[i] += direction[i]
        if digits[i] in (0, 2):
            direction[i] = -direction[i]
        yield i, old, digits[i]


_SIGN = (0, 1, -1)


class _Lifted:
    """
    Uppers moved to plain Laurent polynomials over which a combination is
    zero in the ring iff ``relation`` divides it (or it is zero when
    ``relation`` is None).
    """

    def __init__(self, uppers: Sequence[RingElem], ring: QuotientRing) -> None:
        self.relation: Optional[LaurentPoly] = None
        if ring.kind == RingKind.FREE_LAURENT:
            self.polys = [u for u in uppers]
            free = range(ring.ctx.k)
        elif isinstance(ring, SinglePoly) and not ring.canonical:
            self.polys = [u for u in uppers]
            self.relation = ring.relation
            used = set(ring.relation.variables_used())
            free = [i for i in range(ring.ctx.k) if i not in used]
        else:
            local = ring.local if isinstance(ring, SinglePoly) else ring
            assert isinstance(local, Localization)
            fracs: List[LocalFraction] = [
                ring._as_local(u) if isinstance(ring, SinglePoly) else u  # type: ignore[misc]
                for u in uppers
            ]
            den = tuple(max(f.den[a] for f in fracs) for a in range(local.rank)) if fracs else ()
            self.polys = [local._lift(f.numerator, f.den, den) for f in fracs]
            involved = set()
            for a in local.other_atoms:
                involved.update(local.atoms[a].variables_used())
            free = [i for i in range(local.ctx.k) if i not in involved]
        self.free = list(free)

    def layers(self) -> List[List[int]]:
        """
        Split into classes of equal exponent in each free variable in which
        every polynomial has a single exponent.
        """
        split = []
        for v in self.free:
            exps = [{e[v] for e in p.terms} for p in self.polys]  # type: ignore[union-attr]
            if all(len(s) <= 1 for s in exps):
                split.append(v)
        groups: Dict[Tuple[int, ...], List[int]] = {}
        for i, p in enumerate(self.polys):
            if not p.terms:  # type: ignore[union-attr]
                key: Tuple[int, ...] = ()
            else:
                e = next(iter(p.terms))  # type: ignore[union-attr]
                key = tuple(e[v] for v in split)
            groups.setdefault(key, []).append(i)
        return [groups[k] for k in sorted(groups, key=repr)]


def _vanishing_signs(polys: Sequence[LaurentPoly], relation: Optional[LaurentPoly]) -> Optional[List[int]]:
    m = len(polys)
    if m == 0:
        return None
    digits = [0] * m
    if relation is None:
        acc = LaurentPoly.zero(polys[0].ctx)
        for i, old, new in ternary_gray(m):
            digits[i] = new
            acc = acc + polys[i].scale(_SIGN[new] - _SIGN[old])
            if not acc.terms:
                return [_SIGN[d] for d in digits]
        return None
    residues = ResidueMap(relation, polys)
    racc = LaurentPoly.zero(polys[0].ctx)
    for i, old, new in ternary_gray(m):
        digits[i] = new
        racc = racc + residues.residues[i].scale(_SIGN[new] - _SIGN[old])
        if racc.terms:
            continue
        combo = LaurentPoly.zero(polys[0].ctx)
        for p, d in zip(polys, digits):
            if d:
                combo = combo + p.scale(_SIGN[d])
        if divides(relation, combo):
            return [_SIGN[d] for d in digits]
        LOG.log(VLOG_2, "residue vanished but %s is not divisible", combo)
    return None


def flat_combination_check(
    uppers: Sequence[RingElem],
    ring: QuotientRing,
    cap: int = FLAT_CAP,
) -> CubeReport:
    """
    Independence of commuting unipotent elements from their upper entries: a
    repeat among the products is a nonzero {-1, 0, 1} combination that
    vanishes in the ring.
    """
    n = len(uppers)
    lifted = _Lifted(uppers, ring)
    layers = lifted.layers()
    for layer in layers:
        if len(layer) > cap:
            raise CubeCapExceeded(f"layer of {len(layer)} uppers exceeds the flat cap of {cap}")
    LOG.log(VLOG_1, "flat check: %d uppers in %d layers", n, len(layers))
    for layer in layers:
        signs = _vanishing_signs([lifted.polys[i] for i in layer], lifted.relation)  # type: ignore[misc]
        if signs is not None:
            eps1 = [0] * n
            eps2 = [0] * n
            for i, s in zip(layer, signs):
                if s == 1:
                    eps1[i] = 1
                elif s == -1:
                    eps2[i] = 1
            return CubeReport(False, n, Method.FLAT_COMBINATION, (tuple(eps1), tuple(eps2)))
    return CubeReport(True, n, Method.FLAT_COMBINATION)


def flat_check_elements(
    gamma: Sequence[GroupElem],
    spec: GroupSpec,
    cap: int = FLAT_CAP,
) -> CubeReport:
    for g in gamma:
        if not spec.is_unipotent(g):
            raise NotUnipotent(f"flat combination check needs unipotent elements, got exps {g.exps}")
    report = flat_combination_check([g.upper for g in gamma], spec.ring, cap)
    if report.witness is not None:
        _verified(spec, gamma, report.witness)
    return report


def sublattice_moduli(lattice: Union[int, Sequence[int]], rank: int) -> Tuple[int, ...]:
    if isinstance(lattice, int):
        if lattice < 1:
            raise ValueError(f"sublattice modulus must be positive, got {lattice}")
        return (lattice,) * rank
    if len(lattice) != rank:
        raise ValueError(f"need {rank} sublattice moduli, got {len(lattice)}")
    return tuple(lattice)


def in_sublattice(point: Sequence[int], moduli: Sequence[int]) -> bool:
    return all(m <= 1 or x % m == 0 for x, m in zip(point, moduli))


def _diagonal_word(spec: GroupSpec, exps: Sequence[int], rng: random.Random) -> List[str]:
    word: List[str] = []
    for name, e in zip(spec.diagonal_names, exps):
        word += [name if e > 0 else name.lower()] * abs(e)
    rng.shuffle(word)
    for _ in range(rng.randint(0, 2)):
        word.insert(rng.randint(0, len(word)), rng.choice("dD"))
    return word


def sample_sublattice_elements(
    spec: GroupSpec,
    lattice: Union[int, Sequence[int]],
    count: int,
    seed: int,
    projection: Optional[Homomorphism] = None,
    max_word_length: int = 64,
) -> List[GroupElem]:
    """
    ``count`` random short words whose projections are pairwise distinct
    points of the sublattice (modulus 0 or 1 leaves a coordinate free).
    """
    projection = projection or spec.default_projection
    moduli = sublattice_moduli(lattice, projection.target_rank)
    rng = random.Random(seed)
    seen = set()
    out: List[GroupElem] = []
    radius = 1
    misses = 0
    while len(out) < count:
        exps = [rng.randint(-1, 1) for _ in range(spec.rank)]
        for c, m in zip(projection.coords, moduli):
            exps[c] = max(m, 1) * rng.randint(-radius, radius)
        image = tuple(exps[c] for c in projection.coords)
        if image in seen:
            misses += 1
            if misses > 20:
                radius += 1
                misses = 0
            continue
        word = _diagonal_word(spec, exps, rng)
        if len(word) > max_word_length:
            raise SamplingBudgetExceeded(
                f"found only {len(out)} of {count} elements within word length {max_word_length}"
            )
        seen.add(image)
        out.append(spec.word_to_elem(word))
    return out


@dataclass
class CommutingFamily:
    n: int
    elements: List[GroupElem]
    sites: List[Tuple[int, ...]]
    max_word_length: int

    @property
    def constant(self) -> float:
        """
        The C with every word length at most C * n.
        """
        return self.max_word_length / self.n


def commuting_cube_family(spec: GroupSpec, n: int, N: int) -> CommutingFamily:
    """
    The n^k conjugates of ``d`` by the diagonal elements over
    ``{0, N, ..., N(n - 1)}^k``.
    """
    if spec.family == Family.BAUMSLAG:
        raise ValueError("commuting families are built for G_k(p) and lamplighters")
    sites = [tuple(N * c for c in s) for s in itertools.product(range(n), repeat=spec.rank)]
    elements = [spec.monomial_conjugate(s) for s in sites]
    longest = max(1 + 2 * sum(abs(c) for c in s) for s in sites)
    return CommutingFamily(n, elements, sites, longest)


def lamp_spacing(delta_bar: GroupElem, spec: GroupSpec) -> int:
    """
    The largest coordinate extent of the lamp support of a unipotent
    lamplighter element.
    """
    if spec.family != Family.LAMPLIGHTER:
        raise ValueError("lamp spacing is defined for lamplighter groups")
    if not spec.is_unipotent(delta_bar):
        raise NotUnipotent("lamp spacing needs a unipotent element")
    upper = delta_bar.upper
    assert isinstance(upper, LaurentPoly)
    if not upper.terms:
        return 0
    return max(upper.degree(i) - upper.min_degree(i) for i in range(spec.rank))
