"""
The spaced polynomial property.

A Laurent polynomial ``p`` over the integers has the property (for ``N``) when
no flat polynomial ``u`` (all coefficients +1 or -1) has ``p | u(x^N)``.
This module decides it in one variable, refutes it for generalized
cyclotomics, searches boxes for flat multiples in several variables, and
recomputes the exact identities the Baumslag and ``1 + x + y`` arguments rest
on.
"""

from __future__ import annotations

import itertools
import logging
import math
import random
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import iv
from mpmath.libmp import NoConvergence
from sympy import cyclotomic_poly
from sympy.ntheory import totient as euler_totient
from vmodule import VLOG_1, VLOG_2

from .laurent import (
    Context,
    content_and_primitive,
    divides,
    ExpVec,
    FlatPattern,
    iter_box,
    LaurentPoly,
    parse,
    pseudo_divide,
    ResidueMap,
    serialize,
    strip_monomial,
    substitute_power,
)
from .runner import Runner

LOG = logging.getLogger(__name__)

DEFAULT_SEARCH_CAP = 3**20
WITNESS_NS = (1, 2, 3, 5)
PRECISIONS = (15, 30, 60, 120, 240)
MAX_N = 10_000

NINE_PRODUCT = (
    "x1^9 + 3*x1^6*x2^3 + 3*x1^6 + 3*x1^3*x2^6 - 21*x1^3*x2^3 + 3*x1^3"
    " + x2^9 + 3*x2^6 + 3*x2^3 + 1"
)


class SearchCapExceeded(ValueError):
    pass


class Status(Enum):
    HAS_SPP = "has_spp"
    NO_SPP = "no_spp"
    UNKNOWN = "unknown"


class CertificateKind(Enum):
    LEADING_OBSTRUCTION = "leading_obstruction"
    ROOT_MODULUS = "root_modulus"
    EXHAUSTIVE_BOUND = "exhaustive_bound"
    GENERALIZED_CYCLOTOMIC = "generalized_cyclotomic"
    FLAT_SEARCH = "flat_search"


@dataclass(frozen=True)
class GenCycDecomposition:
    """
    ``p == sign * x^monomial_factor * Phi_n(x^direction)``.
    """

    monomial_factor: ExpVec
    direction: ExpVec
    cyclotomic_index: int
    sign: int = 1

    def reconstruct(self, ctx: Context) -> LaurentPoly:
        terms = {}
        for j, c in enumerate(cyclotomic_polynomial(self.cyclotomic_index)):
            if c:
                e = tuple(m + j * v for m, v in zip(self.monomial_factor, self.direction))
                terms[e] = self.sign * c
        return LaurentPoly(ctx, terms)

    def to_json(self) -> Dict[str, object]:
        return {
            "monomial_factor": list(self.monomial_factor),
            "direction": list(self.direction),
            "cyclotomic_index": self.cyclotomic_index,
            "sign": self.sign,
        }


@dataclass
class SppVerdict:
    status: Status
    ctx: Context
    N: Optional[int] = None
    certificate: Optional[CertificateKind] = None
    root: Optional[complex] = None
    # certified lower bound on max(|root|, 1/|root|) over the roots
    rho: Optional[float] = None
    counterexample: Optional[FlatPattern] = None
    tested_N: Tuple[int, ...] = ()
    decomposition: Optional[GenCycDecomposition] = None
    bound: Optional[int] = None
    note: str = ""

    def to_json(self) -> Dict[str, object]:
        certificate: Optional[Dict[str, object]] = None
        if self.certificate is not None:
            certificate = {"kind": self.certificate.value}
            if self.root is not None:
                certificate["root"] = [self.root.real, self.root.imag]
                certificate["rho_lower"] = self.rho
            if self.decomposition is not None:
                certificate["decomposition"] = self.decomposition.to_json()
            if self.bound is not None:
                certificate["bound"] = self.bound
        counterexample: Optional[Dict[str, object]] = None
        if self.counterexample is not None:
            counterexample = self.counterexample.to_json(self.ctx)
            counterexample["tested_N"] = list(self.tested_N)
        return {
            "status": self.status.value,
            "N": self.N,
            "certificate": certificate,
            "counterexample": counterexample,
            "note": self.note,
        }


# Cyclotomic polynomials


def totient(n: int) -> int:
    if n < 1:
        raise ValueError(f"totient of {n}")
    return int(euler_totient(n))


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> Tuple[int, ...]:
    """
    Coefficients of Phi_n, lowest degree first.
    """
    if n < 1:
        raise ValueError(f"no cyclotomic polynomial of index {n}")
    return tuple(int(c) for c in reversed(cyclotomic_poly(n, polys=True).all_coeffs()))


def cyclotomic_index_bound(deg: int) -> int:
    return int(3 * deg * math.log(math.log(deg + 16)) + 30)


def _progression(support: Sequence[ExpVec]) -> Optional[Tuple[ExpVec, List[int]]]:
    # support sorted ascending; returns (primitive v, j for each point)
    e0 = support[0]
    d1 = tuple(a - b for a, b in zip(support[1], e0))
    g = 0
    for c in d1:
        g = math.gcd(g, c)
    v = tuple(c // g for c in d1)
    lead = next(i for i, c in enumerate(v) if c)
    steps = []
    for e in support:
        diff = tuple(a - b for a, b in zip(e, e0))
        if diff[lead] % v[lead]:
            return None
        j = diff[lead] // v[lead]
        if tuple(j * c for c in v) != diff:
            return None
        steps.append(j)
    return v, steps


def detect_generalized_cyclotomic(p: LaurentPoly) -> Optional[GenCycDecomposition]:
    """
    Whether ``p`` is a unit times ``Phi_n(x^v)`` for a primitive ``v``.
    """
    if not p.terms:
        raise ValueError("the zero polynomial is not a generalized cyclotomic")
    mono, f = strip_monomial(p)
    if len(f.terms) < 2:
        return None
    support = f.support()
    found = _progression(support)
    if found is None:
        LOG.log(VLOG_2, "support of %s is not on a line", p)
        return None
    v, steps = found
    deg = max(steps)
    coeffs = [0] * (deg + 1)
    for e, j in zip(support, steps):
        coeffs[j] = f.terms[e]
    if coeffs[-1] not in (1, -1):
        return None
    sign = coeffs[-1]
    target = tuple(sign * c for c in coeffs)
    for n in range(1, cyclotomic_index_bound(deg) + 1):
        if totient(n) == deg and cyclotomic_polynomial(n) == target:
            e0 = tuple(m + s for m, s in zip(mono, support[0]))
            LOG.log(VLOG_1, "%s is Phi_%d along %s", p, n, v)
            return GenCycDecomposition(e0, v, n, sign)
    return None


def counterexample_family(decomp: GenCycDecomposition, ctx: Context) -> FlatPattern:
    """
    ``u = x^(n v) - 1``; ``Phi_n(x^v)`` divides ``u(x^N)`` for every ``N``.
    """
    top = tuple(decomp.cyclotomic_index * c for c in decomp.direction)
    return FlatPattern.from_poly(LaurentPoly(ctx, {top: 1, ctx.zero_exps(): -1}))


def _no_spp_from_decomposition(p: LaurentPoly, decomp: GenCycDecomposition) -> SppVerdict:
    u = counterexample_family(decomp, p.ctx)
    poly = u.to_poly(p.ctx)
    tested = tuple(n for n in WITNESS_NS if divides(p, substitute_power(poly, n)))
    if tested != WITNESS_NS:
        LOG.warning("counterexample %s fails for some N in %s", serialize(poly), WITNESS_NS)
    return SppVerdict(
        Status.NO_SPP,
        p.ctx,
        certificate=CertificateKind.GENERALIZED_CYCLOTOMIC,
        counterexample=u,
        tested_N=tested,
        decomposition=decomp,
        note=f"Phi_{decomp.cyclotomic_index} along {list(decomp.direction)}",
    )


def _check_integer(p: LaurentPoly) -> None:
    if p.ctx.modulus is not None:
        raise ValueError("the spaced polynomial property is decided over the integers")
    if not p.terms:
        raise ValueError("the zero polynomial divides nothing flat")


def leading_obstruction(p: LaurentPoly) -> bool:
    """
    Flat polynomials have content 1 and lex-extreme coefficients +1 or -1, so
    no flat polynomial is a multiple of ``p`` when ``p`` fails either.
    """
    _, f = strip_monomial(p)
    content, prim = content_and_primitive(f)
    if content > 1:
        return True
    return abs(prim.lead_term()[1]) != 1 or abs(prim.trail_term()[1]) != 1


def _unit_verdict(p: LaurentPoly) -> SppVerdict:
    u = FlatPattern(((p.ctx.zero_exps(), 1),))
    return SppVerdict(
        Status.NO_SPP,
        p.ctx,
        certificate=CertificateKind.FLAT_SEARCH,
        counterexample=u,
        tested_N=WITNESS_NS,
        note="units divide every polynomial",
    )


def _obstruction_verdict(p: LaurentPoly) -> SppVerdict:
    return SppVerdict(
        Status.HAS_SPP,
        p.ctx,
        N=1,
        certificate=CertificateKind.LEADING_OBSTRUCTION,
        note="content or an extreme coefficient is not a unit",
    )


# Univariate decision


def _dominant_modulus(coeffs: Sequence[int]) -> Optional[Tuple[complex, mpmath.mpf]]:
    # coeffs highest degree first; returns (root, lower bound of rho > 1)
    for dps in PRECISIONS:
        with mpmath.workdps(dps):
            try:
                roots, err = mpmath.polyroots(
                    coeffs, maxsteps=50 + 10 * dps, extraprec=2 * dps, error=True
                )
            except NoConvergence:
                LOG.log(VLOG_2, "polyroots did not converge at %d digits", dps)
                continue
            slack = err + mpmath.mpf(10) ** (5 - dps)
            best: Optional[Tuple[complex, mpmath.mpf]] = None
            for r in roots:
                m = abs(r)
                if m - slack > 1:
                    lower = m - slack
                elif m + slack < 1 and m > slack:
                    lower = 1 / (m + slack)
                else:
                    continue
                if best is None or lower > best[1]:
                    best = (complex(r), lower)
            if best is not None:
                LOG.log(VLOG_2, "rho >= %s at %d digits", best[1], dps)
                return best
            LOG.log(VLOG_2, "no root modulus separated from 1 at %d digits", dps)
    return None


def smallest_spacing(rho: mpmath.mpf) -> int:
    """
    The least ``N`` with ``rho^N > 2``, checked in interval arithmetic.
    """
    base = iv.mpf(rho)
    n = 1
    while n <= MAX_N:
        if (base**n).a > 2:
            return n
        n += 1
    raise ValueError(f"rho = {rho} is too close to 1")


def univariate_spp_decide(p: LaurentPoly) -> SppVerdict:
    _check_integer(p)
    used = p.variables_used()
    if len(used) > 1:
        raise ValueError(f"{p} involves {len(used)} variables")
    _, f = strip_monomial(p)
    if f.is_constant():
        if abs(f.constant_value()) == 1:
            return _unit_verdict(p)
        return _obstruction_verdict(p)
    if leading_obstruction(p):
        return _obstruction_verdict(p)
    decomp = detect_generalized_cyclotomic(p)
    if decomp is not None:
        return _no_spp_from_decomposition(p, decomp)

    (i,) = used
    by_degree = {e[i]: c for e, c in f.terms.items()}
    coeffs = [by_degree.get(d, 0) for d in range(f.degree(i), -1, -1)]
    found = _dominant_modulus(coeffs)
    if found is None:
        return SppVerdict(
            Status.UNKNOWN,
            p.ctx,
            note=f"no root modulus separated from 1 at {PRECISIONS[-1]} digits",
        )
    root, rho = found
    N = smallest_spacing(rho)
    LOG.info("%s: |root| %s gives N = %d", serialize(p), mpmath.nstr(rho, 8), N)
    return SppVerdict(
        Status.HAS_SPP,
        p.ctx,
        N=N,
        certificate=CertificateKind.ROOT_MODULUS,
        root=root,
        rho=float(rho),
    )


# Flat multiple search


@dataclass
class _SearchTask:
    p: LaurentPoly
    N: int
    cells: List[ExpVec]
    residues: List[Dict[ExpVec, int]]
    slack: List[Dict[ExpVec, int]]
    prefix: Tuple[int, ...]


def _apply(acc: Dict[ExpVec, int], residue: Mapping[ExpVec, int], s: int) -> None:
    for e, c in residue.items():
        v = acc.get(e, 0) + s * c
        if v:
            acc[e] = v
        else:
            del acc[e]


def _pattern(task: _SearchTask, signs: Sequence[int]) -> LaurentPoly:
    return LaurentPoly(task.p.ctx, {e: s for e, s in zip(task.cells, signs) if s})


def _search_subtree(task: _SearchTask) -> Optional[Tuple[int, ...]]:
    count = len(task.cells)
    acc: Dict[ExpVec, int] = {}
    signs = [0] * count
    for t, s in enumerate(task.prefix):
        signs[t] = s
        if s:
            _apply(acc, task.residues[t], s)

    def visit(t: int) -> Optional[Tuple[int, ...]]:
        bound = task.slack[t]
        if any(abs(v) > bound.get(e, 0) for e, v in acc.items()):
            return None
        if t == count:
            if any(signs) and divides(task.p, substitute_power(_pattern(task, signs), task.N)):
                return tuple(signs)
            return None
        for s in (0, 1, -1):
            signs[t] = s
            if s:
                _apply(acc, task.residues[t], s)
            found = visit(t + 1)
            if s:
                _apply(acc, task.residues[t], -s)
            if found is not None:
                return found
        signs[t] = 0
        return None

    return visit(len(task.prefix))


Box = Union[int, Sequence[Tuple[int, int]]]


def box_bounds(p: LaurentPoly, box: Box) -> List[Tuple[int, int]]:
    """
    Per-variable exponent ranges; an integer ``b`` means ``[0, b]`` in each
    variable ``p`` involves and ``[0, 0]`` in the others.
    """
    if isinstance(box, int):
        if box < 0:
            raise ValueError(f"box size must be non-negative, got {box}")
        used = set(p.variables_used())
        return [(0, box) if i in used else (0, 0) for i in range(p.ctx.k)]
    bounds = [tuple(b) for b in box]
    if len(bounds) != p.ctx.k:
        raise ValueError(f"box has {len(bounds)} ranges for {p.ctx.k} variables")
    for lo, hi in bounds:
        if lo > hi:
            raise ValueError(f"empty range [{lo}, {hi}]")
    return bounds  # type: ignore[return-value]


def search_cells(p: LaurentPoly, box: Box) -> List[ExpVec]:
    return list(iter_box(box_bounds(p, box)))


def spp_search_counterexample(
    p: LaurentPoly,
    N: int,
    box: Box,
    cap: int = DEFAULT_SEARCH_CAP,
    runner: Optional[Runner] = None,
) -> Optional[FlatPattern]:
    """
    The first flat ``u`` supported in the box with ``p | u(x^N)``, with sign
    assignments ordered lexicographically by cell and ``0 < +1 < -1`` per
    cell.  The pattern is returned with its monomial factor divided out.
    """
    _check_integer(p)
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    cells = search_cells(p, box)
    if 3 ** len(cells) > cap:
        raise SearchCapExceeded(f"3^{len(cells)} sign patterns exceed the cap {cap}")
    if p.is_constant() or len(strip_monomial(p)[1].terms) == 1:
        # units and constants need no residues
        for signs in itertools.product((0, 1, -1), repeat=len(cells)):
            u = LaurentPoly(p.ctx, {e: s for e, s in zip(cells, signs) if s})
            if u.terms and divides(p, substitute_power(u, N)):
                return FlatPattern.from_poly(strip_monomial(u)[1])
        return None

    family = [LaurentPoly.monomial(p.ctx, tuple(N * d for d in e)) for e in cells]
    rmap = ResidueMap(p, family)
    residues = [dict(r.terms) for r in rmap.residues]
    slack: List[Dict[ExpVec, int]] = [{} for _ in range(len(cells) + 1)]
    for t in range(len(cells) - 1, -1, -1):
        s = dict(slack[t + 1])
        for e, c in residues[t].items():
            s[e] = s.get(e, 0) + abs(c)
        slack[t] = s

    runner = runner or Runner(1)
    depth = min(2, len(cells)) if runner.threads > 1 else 0
    tasks = [
        _SearchTask(p, N, cells, residues, slack, prefix)
        for prefix in itertools.product((0, 1, -1), repeat=depth)
    ]
    LOG.log(VLOG_1, "searching %d cells for N = %d in %d tasks", len(cells), N, len(tasks))
    found = runner.first(_search_subtree, tasks)
    if found is None:
        return None
    signs = found[1]
    return FlatPattern.from_poly(strip_monomial(_pattern(tasks[0], signs))[1])


def budget_box(p: LaurentPoly, budget: int) -> int:
    """
    The largest ``b`` with ``3^((b + 1)^d) <= budget`` for ``d`` used
    variables.
    """
    d = len(p.variables_used())
    if d == 0 or budget < 3:
        return 0
    b = 0
    while 3 ** ((b + 2) ** d) <= budget:
        b += 1
    return b


def spp_certify_pair(
    p: LaurentPoly,
    N: int,
    budget: int = 3**9,
    box: Optional[Box] = None,
    runner: Optional[Runner] = None,
) -> SppVerdict:
    """
    Decide in one variable; in several, refute or search up to ``budget``
    sign patterns over the variables ``p`` involves.
    """
    _check_integer(p)
    if len(p.variables_used()) <= 1:
        return univariate_spp_decide(p)
    decomp = detect_generalized_cyclotomic(p)
    if decomp is not None:
        return _no_spp_from_decomposition(p, decomp)
    if leading_obstruction(p):
        return _obstruction_verdict(p)

    if box is None:
        box = budget_box(p, budget)
    cells = search_cells(p, box)
    # nonzero sign patterns
    bound = 3 ** len(cells) - 1
    cap = max(budget, min(bound + 1, DEFAULT_SEARCH_CAP))
    found = spp_search_counterexample(p, N, box, cap=cap, runner=runner)
    if found is not None:
        return SppVerdict(
            Status.NO_SPP,
            p.ctx,
            N=N,
            certificate=CertificateKind.FLAT_SEARCH,
            counterexample=found,
            tested_N=(N,),
        )
    return SppVerdict(
        Status.UNKNOWN,
        p.ctx,
        N=N,
        certificate=CertificateKind.EXHAUSTIVE_BOUND,
        bound=bound,
        note=f"no flat multiple among {bound} sign patterns; consistent with the property",
    )


# Exact identities


def _reduce_zeta(f: LaurentPoly, relation: LaurentPoly) -> LaurentPoly:
    return pseudo_divide(f, relation, 2)[1]


def verify_nine_product() -> Tuple[LaurentPoly, bool]:
    """
    The product of ``1 + z^i x1 + z^j x2`` over ``i, j`` in ``0..2`` with
    ``z`` a primitive cube root of unity, computed twice: factor by factor,
    and grouped as ``prod_i ((1 + z^i x1)^3 + x2^3)``.
    """
    ctx = Context(("x1", "x2", "z"))
    relation = parse("z^2 + z + 1", ctx)
    one = LaurentPoly.one(ctx)
    x1 = LaurentPoly.variable(ctx, "x1")
    x2 = LaurentPoly.variable(ctx, "x2")
    z = LaurentPoly.variable(ctx, "z")

    direct = one
    for i in range(3):
        for j in range(3):
            direct = _reduce_zeta(direct * (one + z**i * x1 + z**j * x2), relation)

    grouped = one
    for i in range(3):
        a = _reduce_zeta((one + z**i * x1) ** 3, relation)
        grouped = _reduce_zeta(grouped * (a + x2**3), relation)

    free_of_z = not direct.terms or direct.degree(2) == direct.min_degree(2) == 0
    plain = Context(("x1", "x2"))
    result = direct.reorder(plain, (0, 1, 0))
    expected = parse(NINE_PRODUCT, plain)
    ok = direct == grouped and free_of_z and result == expected
    if not ok:
        LOG.warning("nine-fold product came out as %s", serialize(result))
    return result, ok


BaumslagPattern = Mapping[Tuple[int, int, int, int], int]


def verify_baumslag_flat_nonzero(pattern: BaumslagPattern) -> bool:
    """
    Whether ``sum C * Y1^(3a) (Y1 + 1)^(3b) Y2^c (Y2 + 1)^d`` is nonzero, for
    signs ``C`` keyed by ``(a, b, c, d)`` with at most one ``d`` per
    ``(a, b, c)``.
    """
    if not pattern:
        raise ValueError("empty pattern")
    seen: Dict[Tuple[int, int, int], int] = {}
    for (a, b, c, d), s in pattern.items():
        if min(a, b, c, d) < 0:
            raise ValueError(f"negative exponent in {(a, b, c, d)}")
        if s not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {s}")
        if (a, b, c) in seen:
            raise ValueError(f"{(a, b, c)} has exponents d = {seen[(a, b, c)]} and {d}")
        seen[(a, b, c)] = d

    ctx = Context(("y1", "y2"))
    y1 = LaurentPoly.variable(ctx, "y1")
    y2 = LaurentPoly.variable(ctx, "y2")
    powers: Dict[Tuple[int, int], LaurentPoly] = {}

    def power(which: int, e: int) -> LaurentPoly:
        # which: 0 -> y1, 1 -> 1 + y1, 2 -> y2, 3 -> 1 + y2
        if (which, e) not in powers:
            base = (y1, y1 + 1, y2, y2 + 1)[which]
            powers[(which, e)] = base**e
        return powers[(which, e)]

    f = LaurentPoly.zero(ctx)
    for (a, b, c, d), s in sorted(pattern.items()):
        term = power(0, 3 * a) * power(1, 3 * b) * power(2, c) * power(3, d)
        f = f + term.scale(s)
    LOG.log(VLOG_2, "Baumslag pattern of %d terms expands to %d terms", len(pattern), len(f.terms))
    return bool(f.terms)


def random_baumslag_pattern(
    rng: random.Random, abc_max: Tuple[int, int, int] = (2, 2, 3), d_max: int = 3
) -> Dict[Tuple[int, int, int, int], int]:
    triples = list(
        itertools.product(*(range(m + 1) for m in abc_max))
    )
    size = rng.randint(1, len(triples))
    return {
        (a, b, c, rng.randint(0, d_max)): rng.choice((1, -1))
        for a, b, c in rng.sample(triples, size)
    }
