"""
Quotient rings of Laurent polynomial rings, with an equality test for each.

Three kinds of ring are supported:

* ``FreeLaurent``: the full Laurent ring; the reduced polynomial is canonical.
* ``Localization``: a polynomial ring with finitely many coprime prime atoms
  inverted (this covers the Baumslag ring).  Elements are ``LocalFraction``
  values in lowest terms, which are canonical.
* ``SinglePoly``: a Laurent ring modulo one irreducible relation.  When the
  relation is linear in its pivot with coefficients that are units times
  linear atoms, elements are carried as fractions over the remaining
  variables and are canonical; otherwise equality goes through ``divides`` and
  indexing through random fingerprints.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import (
    Callable,
    Dict,
    Generic,
    Hashable,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

from vmodule import VLOG_1, VLOG_2

from . import fields
from .laurent import (
    Context,
    ExpVec,
    LaurentPoly,
    content_and_primitive,
    divides,
    evaluate,
    exact_divide,
    serialize,
    strip_monomial,
)

LOG = logging.getLogger(__name__)

ROOT_ATTEMPTS = 32


class RepresentationError(ValueError):
    pass


class NoRootFound(ValueError):
    pass


class RingKind(Enum):
    FREE_LAURENT = "free_laurent"
    SINGLE_POLY = "single_poly"
    LOCALIZATION = "localization"


@dataclass(frozen=True)
class LocalFraction:
    """
    ``numerator / prod(atoms[i] ** den[i])`` with a polynomial numerator.
    """

    numerator: LaurentPoly
    den: Tuple[int, ...]


RingElem = Union[LaurentPoly, LocalFraction]


@dataclass(frozen=True)
class Fingerprint:
    values: Tuple[int, ...]
    primes: Tuple[int, ...]


class QuotientRing:
    kind: RingKind
    ctx: Context
    canonical: bool

    # The number of coordinates of the diagonal torus, i.e. the length of the
    # exponent vectors accepted by ``monomial``.
    rank: int

    def zero(self) -> RingElem:
        raise NotImplementedError

    def one(self) -> RingElem:
        raise NotImplementedError

    def embed(self, f: LaurentPoly) -> RingElem:
        raise NotImplementedError

    def monomial(self, exps: Sequence[int]) -> RingElem:
        raise NotImplementedError

    def add(self, a: RingElem, b: RingElem) -> RingElem:
        raise NotImplementedError

    def neg(self, a: RingElem) -> RingElem:
        raise NotImplementedError

    def mul(self, a: RingElem, b: RingElem) -> RingElem:
        raise NotImplementedError

    def sub(self, a: RingElem, b: RingElem) -> RingElem:
        return self.add(a, self.neg(b))

    def scale(self, a: RingElem, c: int) -> RingElem:
        return self.mul(a, self.embed(LaurentPoly.constant(self.ctx, c)))

    def is_zero(self, a: RingElem) -> bool:
        raise NotImplementedError

    def eq_mod(self, a: RingElem, b: RingElem) -> bool:
        raise NotImplementedError

    def canonicalize(self, a: RingElem) -> RingElem:
        raise NotImplementedError

    def evaluate(self, a: RingElem, point: Sequence[int], q: int) -> int:
        raise NotImplementedError

    def sample_point(self, seed: int, coordinate: int) -> Tuple[int, Tuple[int, ...]]:
        raise NotImplementedError

    def fingerprint(self, a: RingElem, seed: int = 0) -> Fingerprint:
        """
        Evaluations at two sampled points; equal elements always agree.
        """
        values = []
        primes = []
        for coordinate in range(2):
            q, point = self.sample_point(seed, coordinate)
            values.append(self.evaluate(a, point, q))
            primes.append(q)
        return Fingerprint(tuple(values), tuple(primes))

    def key(self, a: RingElem, seed: int = 0) -> Hashable:
        if self.canonical:
            return self.canonicalize(a)
        return self.fingerprint(a, seed).values

    def describe(self) -> Dict[str, object]:
        raise NotImplementedError

    def format(self, a: RingElem) -> str:
        if isinstance(a, LocalFraction):
            return format_fraction(a, self.fraction_atoms())
        return serialize(a)

    def fraction_atoms(self) -> Sequence[LaurentPoly]:
        return ()


def _nonzero_point(rng: random.Random, k: int, q: int) -> List[int]:
    return [rng.randrange(1, q) for _ in range(k)]


def _prime_for(seed: int, coordinate: int) -> int:
    return fields.FINGERPRINT_PRIMES[(2 * seed + coordinate) % len(fields.FINGERPRINT_PRIMES)]


def format_fraction(a: LocalFraction, atoms: Sequence[LaurentPoly]) -> str:
    num = serialize(a.numerator)
    parts = []
    for atom, d in zip(atoms, a.den):
        if d:
            text = serialize(atom)
            if not atom.is_monomial():
                text = f"({text})"
            parts.append(text if d == 1 else f"{text}^{d}")
    if not parts:
        return num
    return f"({num}) / ({'*'.join(parts)})"


class FreeLaurent(QuotientRing):
    kind = RingKind.FREE_LAURENT
    canonical = True

    def __init__(self, ctx: Context) -> None:
        self.ctx = ctx
        self.rank = ctx.k

    def __repr__(self) -> str:
        return f"FreeLaurent({self.ctx.vars}, modulus={self.ctx.modulus})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FreeLaurent) and other.ctx == self.ctx

    def __hash__(self) -> int:
        return hash(("free", self.ctx))

    def zero(self) -> LaurentPoly:
        return LaurentPoly.zero(self.ctx)

    def one(self) -> LaurentPoly:
        return LaurentPoly.one(self.ctx)

    def embed(self, f: LaurentPoly) -> LaurentPoly:
        if f.ctx != self.ctx:
            f = f.with_context(self.ctx)
        return f

    def monomial(self, exps: Sequence[int]) -> LaurentPoly:
        return LaurentPoly.monomial(self.ctx, exps)

    def add(self, a: RingElem, b: RingElem) -> LaurentPoly:
        return a + b  # type: ignore[operator]

    def neg(self, a: RingElem) -> LaurentPoly:
        return -a  # type: ignore[operator]

    def mul(self, a: RingElem, b: RingElem) -> LaurentPoly:
        return a * b  # type: ignore[operator]

    def scale(self, a: RingElem, c: int) -> LaurentPoly:
        return a.scale(c)  # type: ignore[union-attr]

    def is_zero(self, a: RingElem) -> bool:
        return not a

    def eq_mod(self, a: RingElem, b: RingElem) -> bool:
        return a == b

    def canonicalize(self, a: RingElem) -> LaurentPoly:
        return a  # type: ignore[return-value]

    def evaluate(self, a: RingElem, point: Sequence[int], q: int) -> int:
        return evaluate(a, point, q)  # type: ignore[arg-type]

    def sample_point(self, seed: int, coordinate: int) -> Tuple[int, Tuple[int, ...]]:
        q = self.ctx.modulus or _prime_for(seed, coordinate)
        rng = random.Random(seed * 1_000_003 + coordinate)
        return q, tuple(_nonzero_point(rng, self.ctx.k, q))

    def describe(self) -> Dict[str, object]:
        return {"kind": self.kind.value, "vars": list(self.ctx.vars), "modulus": self.ctx.modulus}


class Localization(QuotientRing):
    """
    ``Z[vars]`` with ``atoms`` inverted.  Every variable must itself be an
    atom, and the atoms must be pairwise coprime primes for the reduced
    fractions to be canonical.
    """

    kind = RingKind.LOCALIZATION
    canonical = True

    def __init__(self, ctx: Context, atoms: Sequence[LaurentPoly]) -> None:
        self.ctx = ctx
        self.atoms = tuple(atoms)
        self.rank = len(self.atoms)
        self.var_atom: Dict[int, int] = {}
        for a, atom in enumerate(self.atoms):
            if atom.ctx != ctx:
                raise ValueError(f"atom {atom} is not over {ctx.vars}")
            if atom.is_monomial() and atom.lead_term()[1] == 1:
                e = atom.lead_term()[0]
                if sorted(e) == [0] * (ctx.k - 1) + [1]:
                    self.var_atom[e.index(1)] = a
        missing = [ctx.vars[i] for i in range(ctx.k) if i not in self.var_atom]
        if missing:
            raise ValueError(f"variables {missing} must be among the inverted atoms")
        self.other_atoms = tuple(a for a in range(self.rank) if a not in self.var_atom.values())
        self._powers: Dict[Tuple[int, int], LaurentPoly] = {}
        self._monomials: Dict[ExpVec, LocalFraction] = {}

    def __repr__(self) -> str:
        return f"Localization({self.ctx.vars}, atoms={[serialize(a) for a in self.atoms]})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Localization) and (other.ctx, other.atoms) == (self.ctx, self.atoms)

    def __hash__(self) -> int:
        return hash(("loc", self.ctx, self.atoms))

    def fraction_atoms(self) -> Sequence[LaurentPoly]:
        return self.atoms

    def atom_power(self, a: int, e: int) -> LaurentPoly:
        key = (a, e)
        if key not in self._powers:
            self._powers[key] = self.atoms[a] ** e
        return self._powers[key]

    def _lift(self, num: LaurentPoly, den: Sequence[int], target: Sequence[int]) -> LaurentPoly:
        for a, (have, want) in enumerate(zip(den, target)):
            if want > have:
                num = num * self.atom_power(a, want - have)
        return num

    def fraction(self, num: LaurentPoly, den: Optional[Sequence[int]] = None) -> LocalFraction:
        """
        Reduce ``num / prod(atoms ** den)`` to lowest terms.
        """
        den_list = list(den) if den is not None else [0] * self.rank
        if not num.terms:
            return LocalFraction(num, (0,) * self.rank)
        mins, num = strip_monomial(num)
        for v, m in enumerate(mins):
            den_list[self.var_atom[v]] -= m
        shift = [0] * self.ctx.k
        for v, a in self.var_atom.items():
            if den_list[a] < 0:
                shift[v] = -den_list[a]
                den_list[a] = 0
        num = num.shift(shift)
        for a in self.other_atoms:
            while den_list[a] > 0:
                q = exact_divide(num, self.atoms[a])
                if q is None:
                    break
                num = q
                den_list[a] -= 1
        return LocalFraction(num, tuple(den_list))

    def zero(self) -> LocalFraction:
        return LocalFraction(LaurentPoly.zero(self.ctx), (0,) * self.rank)

    def one(self) -> LocalFraction:
        return LocalFraction(LaurentPoly.one(self.ctx), (0,) * self.rank)

    def embed(self, f: LaurentPoly) -> LocalFraction:
        return self.fraction(f)

    def monomial(self, exps: Sequence[int]) -> LocalFraction:
        exps = tuple(exps)
        if len(exps) != self.rank:
            raise ValueError(f"expected {self.rank} atom exponents, got {exps}")
        if exps not in self._monomials:
            num = LaurentPoly.one(self.ctx)
            for a, e in enumerate(exps):
                if e > 0:
                    num = num * self.atom_power(a, e)
            # atoms are coprime, so this is already in lowest terms
            self._monomials[exps] = LocalFraction(num, tuple(max(-e, 0) for e in exps))
        return self._monomials[exps]

    def add(self, a: RingElem, b: RingElem) -> LocalFraction:
        assert isinstance(a, LocalFraction) and isinstance(b, LocalFraction)
        if not a.numerator.terms:
            return b
        if not b.numerator.terms:
            return a
        den = tuple(max(x, y) for x, y in zip(a.den, b.den))
        num = self._lift(a.numerator, a.den, den) + self._lift(b.numerator, b.den, den)
        return self.fraction(num, den)

    def neg(self, a: RingElem) -> LocalFraction:
        assert isinstance(a, LocalFraction)
        return LocalFraction(-a.numerator, a.den)

    def mul(self, a: RingElem, b: RingElem) -> LocalFraction:
        assert isinstance(a, LocalFraction) and isinstance(b, LocalFraction)
        if not a.numerator.terms or not b.numerator.terms:
            return self.zero()
        den = tuple(x + y for x, y in zip(a.den, b.den))
        return self.fraction(a.numerator * b.numerator, den)

    def scale(self, a: RingElem, c: int) -> LocalFraction:
        assert isinstance(a, LocalFraction)
        return self.fraction(a.numerator.scale(c), a.den)

    def is_zero(self, a: RingElem) -> bool:
        assert isinstance(a, LocalFraction)
        return not a.numerator.terms

    def eq_mod(self, a: RingElem, b: RingElem) -> bool:
        assert isinstance(a, LocalFraction) and isinstance(b, LocalFraction)
        return a.numerator * self._lift_all(b.den) == b.numerator * self._lift_all(a.den)

    def _lift_all(self, den: Sequence[int]) -> LaurentPoly:
        out = LaurentPoly.one(self.ctx)
        for a, d in enumerate(den):
            if d:
                out = out * self.atom_power(a, d)
        return out

    def canonicalize(self, a: RingElem) -> LocalFraction:
        assert isinstance(a, LocalFraction)
        return self.fraction(a.numerator, a.den)

    def key(self, a: RingElem, seed: int = 0) -> Hashable:
        # ring operations only ever produce fractions in lowest terms
        return a

    def evaluate(self, a: RingElem, point: Sequence[int], q: int) -> int:
        assert isinstance(a, LocalFraction)
        value = evaluate(a.numerator, point, q)
        for atom, d in zip(self.atoms, a.den):
            if d:
                at = evaluate(atom, point, q)
                if at == 0:
                    raise ZeroDivisionError(f"{atom} vanishes at the sample point")
                value = value * pow(at, -d, q) % q
        return value

    def admissible(self, point: Sequence[int], q: int) -> bool:
        return all(evaluate(atom, point, q) != 0 for atom in self.atoms)

    def sample_point(self, seed: int, coordinate: int) -> Tuple[int, Tuple[int, ...]]:
        q = _prime_for(seed, coordinate)
        rng = random.Random(seed * 1_000_003 + coordinate)
        for _ in range(ROOT_ATTEMPTS):
            point = _nonzero_point(rng, self.ctx.k, q)
            if self.admissible(point, q):
                return q, tuple(point)
        raise NoRootFound(f"no admissible point for {self!r}")

    def describe(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value,
            "vars": list(self.ctx.vars),
            "atoms": [serialize(a) for a in self.atoms],
        }


def baumslag_localization(names: Tuple[str, str] = ("y1", "y2")) -> Localization:
    """
    ``Z[Y1, Y2, 1/Y1, 1/(1+Y1), 1/Y2, 1/(1+Y2)]``, with the atoms in the
    order Y1, 1+Y1, Y2, 1+Y2.
    """
    ctx = Context(names)
    y1 = LaurentPoly.variable(ctx, 0)
    y2 = LaurentPoly.variable(ctx, 1)
    return Localization(ctx, (y1, y1 + 1, y2, y2 + 1))


def _linear_atom(c: LaurentPoly) -> Optional[Tuple[int, ExpVec, Optional[LaurentPoly]]]:
    """
    Write ``c`` as sign * x^m * atom with atom 1 or a primitive linear
    polynomial; None if impossible.
    """
    mono, rest = strip_monomial(c)
    if rest.is_constant():
        v = rest.constant_value()
        return (v, mono, None) if v in (1, -1) else None
    if rest.total_degree() != 1:
        return None
    content, _ = content_and_primitive(rest)
    if content != 1:
        return None
    sign = 1 if rest.lead_term()[1] > 0 else -1
    return sign, mono, rest.scale(sign)


class SinglePoly(QuotientRing):
    """
    ``Z[x^+-1] / (p)`` for an irreducible, primitive ``p`` (irreducibility is
    asserted by the caller, not checked).
    """

    kind = RingKind.SINGLE_POLY

    def __init__(self, p: LaurentPoly, pivot: Union[int, str]) -> None:
        if not p.terms:
            raise ValueError("relation must be nonzero")
        if p.ctx.modulus is not None:
            raise ValueError("relations are taken over the integers")
        self.ctx = p.ctx
        self.rank = p.ctx.k
        self.pivot = p.ctx.index(pivot)
        _, self.relation = strip_monomial(p)
        if content_and_primitive(self.relation)[0] != 1:
            raise ValueError(f"relation {p} is not primitive")
        if self.relation.degree(self.pivot) == 0:
            raise ValueError(f"relation {p} does not involve {self.ctx.vars[self.pivot]}")
        self.irreducible_asserted = True
        self.local: Optional[Localization] = None
        self._points: Dict[Tuple[int, int], Tuple[int, Tuple[int, ...]]] = {}
        self._monomials: Dict[ExpVec, RingElem] = {}
        self._setup_canonical()
        self.canonical = self.local is not None
        LOG.log(
            VLOG_1,
            "ring %s: %s forms",
            self,
            "canonical" if self.canonical else "fingerprinted",
        )

    def __repr__(self) -> str:
        return f"SinglePoly({serialize(self.relation)!r}, pivot={self.ctx.vars[self.pivot]})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SinglePoly) and (other.relation, other.pivot) == (
            self.relation,
            self.pivot,
        )

    def __hash__(self) -> int:
        return hash(("single", self.relation, self.pivot))

    def _drop(self, f: LaurentPoly, ctx: Context) -> LaurentPoly:
        return LaurentPoly(
            ctx, {e[: self.pivot] + e[self.pivot + 1 :]: c for e, c in f.terms.items()}
        )

    def _setup_canonical(self) -> None:
        if self.relation.degree(self.pivot) != 1:
            return
        coeffs = self.relation.coefficients_in(self.pivot)
        sub = self.ctx.dropping(self.pivot)
        lead = _linear_atom(self._drop(coeffs[1], sub))
        const = _linear_atom(self._drop(coeffs[0], sub))
        if lead is None or const is None:
            return
        atoms: List[LaurentPoly] = [LaurentPoly.variable(sub, i) for i in range(sub.k)]
        for _, _, atom in (lead, const):
            if atom is not None and atom not in atoms:
                atoms.append(atom)
        self.local = Localization(sub, atoms)

        # relation is lead * t + const, so t = -const / lead
        def quotient(n: Tuple[int, ExpVec, Optional[LaurentPoly]], d: Tuple[int, ExpVec, Optional[LaurentPoly]]) -> LocalFraction:
            assert self.local is not None
            alpha = [0] * self.local.rank
            for i in range(sub.k):
                alpha[i] = n[1][i] - d[1][i]
            if n[2] is not None:
                alpha[atoms.index(n[2])] += 1
            if d[2] is not None:
                alpha[atoms.index(d[2])] -= 1
            m = self.local.monomial(alpha)
            return self.local.scale(m, -n[0] * d[0])

        self._t = quotient(const, lead)
        self._t_inv = quotient(lead, const)
        self._t_powers: Dict[int, LocalFraction] = {0: self.local.one()}

    def fraction_atoms(self) -> Sequence[LaurentPoly]:
        return self.local.atoms if self.local is not None else ()

    def _t_power(self, d: int) -> LocalFraction:
        assert self.local is not None
        if d not in self._t_powers:
            step = self._t if d > 0 else self._t_inv
            prev = self._t_power(d - 1 if d > 0 else d + 1)
            self._t_powers[d] = self.local.mul(prev, step)
        return self._t_powers[d]

    def zero(self) -> RingElem:
        return self.local.zero() if self.local is not None else LaurentPoly.zero(self.ctx)

    def one(self) -> RingElem:
        return self.local.one() if self.local is not None else LaurentPoly.one(self.ctx)

    def embed(self, f: LaurentPoly) -> RingElem:
        if f.ctx != self.ctx:
            raise ValueError(f"{f} is not over {self.ctx.vars}")
        if self.local is None:
            return f
        out = self.local.zero()
        for d, coeff in sorted(f.coefficients_in(self.pivot).items()):
            term = self.local.embed(self._drop(coeff, self.local.ctx))
            out = self.local.add(out, self.local.mul(term, self._t_power(d)))
        return out

    def _as_local(self, a: RingElem) -> LocalFraction:
        if isinstance(a, LaurentPoly):
            return self.embed(a)  # type: ignore[return-value]
        return a

    def monomial(self, exps: Sequence[int]) -> RingElem:
        exps = tuple(exps)
        if len(exps) != self.rank:
            raise ValueError(f"expected {self.rank} exponents, got {exps}")
        if self.local is None:
            return LaurentPoly.monomial(self.ctx, exps)
        if exps not in self._monomials:
            alpha = list(exps[: self.pivot] + exps[self.pivot + 1 :]) + [0] * (
                self.local.rank - self.local.ctx.k
            )
            self._monomials[exps] = self.local.mul(
                self.local.monomial(alpha), self._t_power(exps[self.pivot])
            )
        return self._monomials[exps]

    def add(self, a: RingElem, b: RingElem) -> RingElem:
        if self.local is None:
            return a + b  # type: ignore[operator]
        return self.local.add(self._as_local(a), self._as_local(b))

    def neg(self, a: RingElem) -> RingElem:
        if self.local is None:
            return -a  # type: ignore[operator]
        return self.local.neg(self._as_local(a))

    def mul(self, a: RingElem, b: RingElem) -> RingElem:
        if self.local is None:
            return a * b  # type: ignore[operator]
        return self.local.mul(self._as_local(a), self._as_local(b))

    def scale(self, a: RingElem, c: int) -> RingElem:
        if self.local is None:
            return a.scale(c)  # type: ignore[union-attr]
        return self.local.scale(self._as_local(a), c)

    def is_zero(self, a: RingElem) -> bool:
        if isinstance(a, LocalFraction):
            return not a.numerator.terms
        return divides(self.relation, a)

    def eq_mod(self, a: RingElem, b: RingElem) -> bool:
        if isinstance(a, LaurentPoly) and isinstance(b, LaurentPoly):
            return divides(self.relation, a - b)
        assert self.local is not None
        return self.local.eq_mod(self._as_local(a), self._as_local(b))

    def canonicalize(self, a: RingElem) -> RingElem:
        if self.local is None:
            raise RepresentationError(f"{self!r} has no canonical forms")
        return self.local.canonicalize(self._as_local(a))

    def key(self, a: RingElem, seed: int = 0) -> Hashable:
        if self.local is None:
            return self.fingerprint(a, seed).values
        return self._as_local(a)

    def evaluate(self, a: RingElem, point: Sequence[int], q: int) -> int:
        if isinstance(a, LocalFraction):
            assert self.local is not None
            return self.local.evaluate(a, point[: self.pivot] + tuple(point[self.pivot + 1 :]), q)
        return evaluate(a, point, q)

    def _univariate(self, values: Dict[int, int], q: int) -> List[int]:
        low = self.relation.min_degree(self.pivot)
        coeffs = [0] * (self.relation.degree(self.pivot) - low + 1)
        for e, c in self.relation.terms.items():
            v = c % q
            for i, d in enumerate(e):
                if i != self.pivot and d:
                    v = v * pow(values[i], d, q) % q
            coeffs[e[self.pivot] - low] = (coeffs[e[self.pivot] - low] + v) % q
        return coeffs

    def sample_point(self, seed: int, coordinate: int) -> Tuple[int, Tuple[int, ...]]:
        """
        A point on the zero set of the relation over F_q: the non-pivot
        variables are drawn at random and the pivot is the smallest nonzero
        root of the resulting univariate polynomial.
        """
        cache_key = (seed, coordinate)
        if cache_key in self._points:
            return self._points[cache_key]
        q = _prime_for(seed, coordinate)
        rng = random.Random(seed * 1_000_003 + coordinate)
        for attempt in range(ROOT_ATTEMPTS):
            values = {i: rng.randrange(1, q) for i in range(self.ctx.k) if i != self.pivot}
            found = [r for r in fields.roots(self._univariate(values, q), q) if r]
            if not found:
                LOG.log(VLOG_2, "no root mod %d on attempt %d, resampling", q, attempt)
                continue
            values[self.pivot] = found[0]
            point = tuple(values[i] for i in range(self.ctx.k))
            if self.local is not None and not self.local.admissible(
                point[: self.pivot] + point[self.pivot + 1 :], q
            ):
                continue
            self._points[cache_key] = (q, point)
            return q, point
        raise NoRootFound(f"{self!r}: no F_q point found after {ROOT_ATTEMPTS} attempts")

    def describe(self) -> Dict[str, object]:
        return {
            "kind": self.kind.value,
            "vars": list(self.ctx.vars),
            "relation": serialize(self.relation),
            "pivot": self.ctx.vars[self.pivot],
            "canonical": self.canonical,
        }


T = TypeVar("T")


class ElementIndex(Generic[T]):
    """
    A set of values up to an equality that may be expensive.  With exact keys
    a key match is equality; otherwise keys are fingerprints and every match
    is confirmed with ``equal``.
    """

    def __init__(
        self,
        key: Callable[[T], Hashable],
        equal: Callable[[T, T], bool],
        exact: bool,
    ) -> None:
        self._key = key
        self._equal = equal
        self.exact = exact
        self._buckets: Dict[Hashable, List[T]] = {}
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def find(self, x: T) -> Optional[T]:
        bucket = self._buckets.get(self._key(x))
        if not bucket:
            return None
        if self.exact:
            return bucket[0]
        for y in bucket:
            if self._equal(x, y):
                return y
        return None

    def add(self, x: T) -> Optional[T]:
        """
        Insert ``x`` unless an equal value is present; return that value.
        """
        k = self._key(x)
        bucket = self._buckets.setdefault(k, [])
        if bucket and self.exact:
            return bucket[0]
        for y in bucket:
            if self._equal(x, y):
                return y
        bucket.append(x)
        self._size += 1
        return None
