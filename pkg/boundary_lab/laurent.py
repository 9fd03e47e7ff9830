"""
Sparse multivariate Laurent polynomials with exact coefficients.

Coefficients are Python integers, optionally reduced modulo ``Context.modulus``
(a prime for division, any modulus >= 2 for plain ring arithmetic).  Values are
immutable once built, so they can be shared freely between workers.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from math import gcd
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from vmodule import VLOG_2

LOG = logging.getLogger(__name__)

ExpVec = Tuple[int, ...]


class ParseError(ValueError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


class ContextMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Context:
    """
    The ordered variable names and coefficient domain shared by a family of
    polynomials.  ``modulus=None`` means the integers.
    """

    vars: Tuple[str, ...]
    modulus: Optional[int] = None

    def __post_init__(self) -> None:
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"duplicate variable names in {self.vars}")
        if self.modulus is not None and self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")

    @property
    def k(self) -> int:
        return len(self.vars)

    def index(self, name: Union[str, int]) -> int:
        if isinstance(name, int):
            if not 0 <= name < len(self.vars):
                raise ValueError(f"variable index {name} out of range")
            return name
        try:
            return self.vars.index(name)
        except ValueError:
            raise ValueError(f"unknown variable {name!r}") from None

    def zero_exps(self) -> ExpVec:
        return (0,) * len(self.vars)

    def unit_exps(self, i: int, power: int = 1) -> ExpVec:
        e = [0] * len(self.vars)
        e[i] = power
        return tuple(e)

    def dropping(self, i: int) -> "Context":
        return Context(self.vars[:i] + self.vars[i + 1 :], self.modulus)


def integers(*names: str) -> Context:
    return Context(tuple(names))


Coercible = Union["LaurentPoly", int]


class LaurentPoly:
    """
    A finite mapping from exponent vectors to nonzero coefficients.
    """

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: Context, terms: Mapping[ExpVec, int] = {}) -> None:
        clean: Dict[ExpVec, int] = {}
        m = ctx.modulus
        for e, c in terms.items():
            e = tuple(e)
            if len(e) != ctx.k:
                raise ContextMismatch(f"exponent {e} has wrong length for {ctx.vars}")
            if m is not None:
                c %= m
            if c:
                clean[e] = c
        self.ctx = ctx
        self.terms = clean
        self._hash: Optional[int] = None

    @classmethod
    def _make(cls, ctx: Context, terms: Dict[ExpVec, int]) -> "LaurentPoly":
        # terms must already be normalized
        obj = cls.__new__(cls)
        obj.ctx = ctx
        obj.terms = terms
        obj._hash = None
        return obj

    # Constructors

    @classmethod
    def zero(cls, ctx: Context) -> "LaurentPoly":
        return cls._make(ctx, {})

    @classmethod
    def constant(cls, ctx: Context, c: int) -> "LaurentPoly":
        return cls(ctx, {ctx.zero_exps(): c})

    @classmethod
    def one(cls, ctx: Context) -> "LaurentPoly":
        return cls.constant(ctx, 1)

    @classmethod
    def monomial(cls, ctx: Context, exps: Sequence[int], c: int = 1) -> "LaurentPoly":
        return cls(ctx, {tuple(exps): c})

    @classmethod
    def variable(cls, ctx: Context, name: Union[str, int]) -> "LaurentPoly":
        return cls.monomial(ctx, ctx.unit_exps(ctx.index(name)))

    # Protocol

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.constant(self.ctx, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"LaurentPoly({serialize(self)!r}, vars={self.ctx.vars})"

    def __str__(self) -> str:
        return serialize(self)

    def __getstate__(self) -> Tuple[Context, Dict[ExpVec, int]]:
        return (self.ctx, self.terms)

    def __setstate__(self, state: Tuple[Context, Dict[ExpVec, int]]) -> None:
        self.ctx, self.terms = state
        self._hash = None

    def _coerce(self, other: Coercible) -> "LaurentPoly":
        if isinstance(other, int):
            return LaurentPoly.constant(self.ctx, other)
        if not isinstance(other, LaurentPoly):
            raise TypeError(f"cannot combine LaurentPoly with {type(other).__name__}")
        if other.ctx != self.ctx:
            raise ContextMismatch(f"{self.ctx} vs {other.ctx}")
        return other

    # Ring operations

    def __add__(self, other: Coercible) -> "LaurentPoly":
        other = self._coerce(other)
        if len(other.terms) > len(self.terms):
            big, small = other, self
        else:
            big, small = self, other
        terms = dict(big.terms)
        m = self.ctx.modulus
        for e, c in small.terms.items():
            v = terms.get(e, 0) + c
            if m is not None:
                v %= m
            if v:
                terms[e] = v
            else:
                terms.pop(e, None)
        return LaurentPoly._make(self.ctx, terms)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return self.scale(-1)

    def __sub__(self, other: Coercible) -> "LaurentPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Coercible) -> "LaurentPoly":
        return self._coerce(other) - self

    def scale(self, c: int) -> "LaurentPoly":
        m = self.ctx.modulus
        if m is not None:
            c %= m
        if c == 0:
            return LaurentPoly.zero(self.ctx)
        if c == 1:
            return self
        if m is None:
            return LaurentPoly._make(self.ctx, {e: v * c for e, v in self.terms.items()})
        return LaurentPoly(self.ctx, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other: Coercible) -> "LaurentPoly":
        if isinstance(other, int):
            return self.scale(other)
        other = self._coerce(other)
        if len(other.terms) == 1:
            ((e, c),) = other.terms.items()
            return self.shift(e).scale(c)
        if len(self.terms) == 1:
            ((e, c),) = self.terms.items()
            return other.shift(e).scale(c)
        out: Dict[ExpVec, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return LaurentPoly(self.ctx, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            inv = unit_inverse(self)
            if inv is None:
                raise ValueError(f"{self} is not a unit, cannot raise to {n}")
            return inv**-n
        result = LaurentPoly.one(self.ctx)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def shift(self, exps: Sequence[int]) -> "LaurentPoly":
        """
        Multiply by the monomial with exponent vector ``exps``.
        """
        if not any(exps):
            return self
        return LaurentPoly._make(
            self.ctx,
            {tuple(a + b for a, b in zip(e, exps)): c for e, c in self.terms.items()},
        )

    # Inspection

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (
            len(self.terms) == 1 and self.ctx.zero_exps() in self.terms
        )

    def constant_value(self) -> int:
        return self.terms.get(self.ctx.zero_exps(), 0)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def degree(self, i: int) -> int:
        if not self.terms:
            raise ValueError("degree of the zero polynomial")
        return max(e[i] for e in self.terms)

    def min_degree(self, i: int) -> int:
        if not self.terms:
            raise ValueError("degree of the zero polynomial")
        return min(e[i] for e in self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            raise ValueError("degree of the zero polynomial")
        return max(sum(e) for e in self.terms)

    def coefficients_in(self, i: int) -> Dict[int, "LaurentPoly"]:
        """
        Group terms by the exponent of variable ``i``; the returned
        coefficients have that exponent zeroed.
        """
        groups: Dict[int, Dict[ExpVec, int]] = {}
        for e, c in self.terms.items():
            groups.setdefault(e[i], {})[e[:i] + (0,) + e[i + 1 :]] = c
        return {d: LaurentPoly._make(self.ctx, t) for d, t in groups.items()}

    def lead_term(self) -> Tuple[ExpVec, int]:
        e = max(self.terms)
        return e, self.terms[e]

    def trail_term(self) -> Tuple[ExpVec, int]:
        e = min(self.terms)
        return e, self.terms[e]

    def sorted_terms(self) -> List[Tuple[ExpVec, int]]:
        return sorted(self.terms.items(), reverse=True)

    def variables_used(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.ctx.k) if any(e[i] for e in self.terms))

    def support(self) -> Tuple[ExpVec, ...]:
        return tuple(sorted(self.terms))

    def max_abs_coefficient(self) -> int:
        m = self.ctx.modulus
        if m is None:
            return max((abs(c) for c in self.terms.values()), default=0)
        return max((min(c, m - c) for c in self.terms.values()), default=0)

    # Transformations

    def substitute_power(self, n: int) -> "LaurentPoly":
        return substitute_power(self, n)

    def is_flat(self) -> bool:
        return is_flat(self)

    def evaluate(self, point: Sequence[int], q: int) -> int:
        return evaluate(self, point, q)

    def with_context(self, ctx: Context) -> "LaurentPoly":
        if ctx.k != self.ctx.k:
            raise ContextMismatch(f"cannot move {self.ctx.vars} to {ctx.vars}")
        return LaurentPoly(ctx, self.terms)

    def reorder(self, ctx: Context, mapping: Sequence[int]) -> "LaurentPoly":
        """
        Move into ``ctx``, sending variable ``i`` to ``mapping[i]``.
        """
        out: Dict[ExpVec, int] = {}
        for e, c in self.terms.items():
            ne = [0] * ctx.k
            for i, d in enumerate(e):
                if d:
                    ne[mapping[i]] += d
            out[tuple(ne)] = out.get(tuple(ne), 0) + c
        return LaurentPoly(ctx, out)


# Parsing and serialization

TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^()]))"
)


class _Parser:
    def __init__(self, text: str, ctx: Context) -> None:
        self.text = text
        self.ctx = ctx
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
            kind = m.lastgroup
            assert kind is not None
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def pos(self) -> int:
        tok = self.peek()
        return tok[2] if tok else len(self.text)

    def take_op(self, op: str) -> bool:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == op:
            self.i += 1
            return True
        return False

    def parse(self) -> LaurentPoly:
        if not self.tokens:
            raise ParseError("empty polynomial", 0)
        result = self.expr()
        if self.peek() is not None:
            raise ParseError(f"unexpected {self.peek()[1]!r}", self.pos())  # type: ignore[index]
        return result

    def expr(self) -> LaurentPoly:
        sign = 1
        if self.take_op("-"):
            sign = -1
        else:
            self.take_op("+")
        acc = self.term().scale(sign)
        while True:
            if self.take_op("+"):
                acc = acc + self.term()
            elif self.take_op("-"):
                acc = acc - self.term()
            else:
                return acc

    def term(self) -> LaurentPoly:
        acc = self.factor()
        while self.take_op("*"):
            acc = acc * self.factor()
        return acc

    def integer(self, signed: bool) -> int:
        sign = 1
        if signed:
            if self.take_op("-"):
                sign = -1
            else:
                self.take_op("+")
        tok = self.peek()
        if not tok or tok[0] != "int":
            raise ParseError("expected integer", self.pos())
        self.i += 1
        return sign * int(tok[1])

    def factor(self) -> LaurentPoly:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.text))
        kind, value, pos = tok
        if kind == "int":
            self.i += 1
            return LaurentPoly.constant(self.ctx, int(value))
        if kind == "name":
            self.i += 1
            if value not in self.ctx.vars:
                raise ParseError(f"unknown variable {value!r}", pos)
            power = self.integer(signed=True) if self.take_op("^") else 1
            return LaurentPoly.monomial(self.ctx, self.ctx.unit_exps(self.ctx.index(value), power))
        if self.take_op("("):
            inner = self.expr()
            if not self.take_op(")"):
                raise ParseError("expected ')'", self.pos())
            if self.take_op("^"):
                return inner ** self.integer(signed=True)
            return inner
        raise ParseError(f"unexpected {value!r}", pos)


def parse(text: str, vars: Union[Sequence[str], Context]) -> LaurentPoly:
    ctx = vars if isinstance(vars, Context) else Context(tuple(vars))
    return _Parser(text, ctx).parse()


def _name_key(name: str) -> Tuple[str, int]:
    m = re.fullmatch(r"(.*?)(\d*)", name)
    assert m is not None
    return m.group(1), int(m.group(2) or 0)


def variables_in(text: str) -> Tuple[str, ...]:
    """
    The distinct names in ``text``, ordered so that ``x2`` precedes ``x10``.
    """
    names = {m.group("name") for m in TOKEN_RE.finditer(text) if m.group("name")}
    return tuple(sorted(names, key=_name_key))


def _monomial_text(ctx: Context, e: ExpVec) -> str:
    parts = []
    for name, d in zip(ctx.vars, e):
        if d == 1:
            parts.append(name)
        elif d:
            parts.append(f"{name}^{d}")
    return "*".join(parts)


def serialize(f: LaurentPoly) -> str:
    """
    Canonical text: descending lexicographic exponent order, explicit ``*``,
    ``^`` only for exponents other than 1.
    """
    if not f.terms:
        return "0"
    out: List[str] = []
    for e, c in f.sorted_terms():
        mono = _monomial_text(f.ctx, e)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not out:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


# Pure operations


def substitute_power(f: LaurentPoly, n: int) -> LaurentPoly:
    if n < 1:
        raise ValueError(f"power must be positive, got {n}")
    if n == 1:
        return f
    return LaurentPoly._make(
        f.ctx, {tuple(n * d for d in e): c for e, c in f.terms.items()}
    )


def is_flat(f: LaurentPoly) -> bool:
    if not f.terms:
        return False
    m = f.ctx.modulus
    units = {1, -1} if m is None else {1, m - 1}
    return all(c in units for c in f.terms.values())


def strip_monomial(f: LaurentPoly) -> Tuple[ExpVec, LaurentPoly]:
    """
    Split ``f`` as x^e * g where g is a polynomial divisible by no variable.
    """
    if not f.terms:
        return f.ctx.zero_exps(), f
    mins = tuple(min(e[i] for e in f.terms) for i in range(f.ctx.k))
    return mins, f.shift(tuple(-d for d in mins))


def content_and_primitive(f: LaurentPoly) -> Tuple[int, LaurentPoly]:
    if f.ctx.modulus is not None:
        raise ValueError("content is only defined over the integers")
    if not f.terms:
        raise ValueError("content of the zero polynomial")
    c = 0
    for v in f.terms.values():
        c = gcd(c, v)
    if c == 1:
        return 1, f
    return c, LaurentPoly._make(f.ctx, {e: v // c for e, v in f.terms.items()})


def unit_inverse(f: LaurentPoly) -> Optional[LaurentPoly]:
    """
    Inverse of ``f`` when it is a unit of the Laurent ring (an invertible
    constant times a monomial), else None.
    """
    if len(f.terms) != 1:
        return None
    ((e, c),) = f.terms.items()
    m = f.ctx.modulus
    if m is None:
        if c not in (1, -1):
            return None
        inv = c
    else:
        if gcd(c, m) != 1:
            return None
        inv = pow(c, -1, m)
    return LaurentPoly.monomial(f.ctx, tuple(-d for d in e), inv)


def choose_pivot(p: LaurentPoly) -> int:
    """
    The variable in which ``p`` has the smallest positive degree span, ties
    broken by the lowest index.
    """
    best: Optional[Tuple[int, int]] = None
    for i in range(p.ctx.k):
        if not p.terms:
            break
        span = p.degree(i) - p.min_degree(i)
        if span > 0 and (best is None or span < best[0]):
            best = (span, i)
    if best is None:
        raise ValueError(f"{p} involves no variable")
    return best[1]


def pseudo_divide(
    f: LaurentPoly, p: LaurentPoly, pivot: int
) -> Tuple[LaurentPoly, LaurentPoly, int]:
    """
    Return ``(q, r, e)`` with ``lc^e * f == q * p + r`` and the pivot degree of
    ``r`` below that of ``p``, where ``lc`` is the leading coefficient of ``p``
    in the pivot.  When ``lc`` is a unit no multiplier is needed and ``e``
    stays 0.
    """
    if f.ctx != p.ctx:
        raise ContextMismatch(f"{f.ctx} vs {p.ctx}")
    if not p.terms:
        raise ZeroDivisionError("pseudo_divide by the zero polynomial")
    if p.degree(pivot) == p.min_degree(pivot):
        raise ValueError(f"{p} does not involve {p.ctx.vars[pivot]}")
    dp = p.degree(pivot)
    lc = p.coefficients_in(pivot)[dp]
    inv = unit_inverse(lc)
    q = LaurentPoly.zero(f.ctx)
    r = f
    e = 0
    while r.terms:
        d = r.degree(pivot)
        if d < dp:
            break
        lr = r.coefficients_in(pivot)[d]
        step = f.ctx.unit_exps(pivot, d - dp)
        if inv is not None:
            t = (lr * inv).shift(step)
            q = q + t
            r = r - t * p
        else:
            t = lr.shift(step)
            q = q * lc + t
            r = r * lc - t * p
            e += 1
    return q, r, e


def _exact_coefficient(c: int, d: int, modulus: Optional[int]) -> Optional[int]:
    if modulus is None:
        return c // d if c % d == 0 else None
    return c * pow(d, -1, modulus) % modulus


def _exact_polynomial_divide(f: LaurentPoly, p: LaurentPoly) -> Optional[LaurentPoly]:
    # f, p are polynomials; lex leading terms multiply in a domain
    lt_e, lt_c = p.lead_term()
    m = f.ctx.modulus
    r = dict(f.terms)
    q: Dict[ExpVec, int] = {}
    while r:
        e = max(r)
        d = tuple(a - b for a, b in zip(e, lt_e))
        if min(d, default=0) < 0:
            return None
        qc = _exact_coefficient(r[e], lt_c, m)
        if qc is None:
            return None
        q[d] = qc
        for pe, pc in p.terms.items():
            ee = tuple(a + b for a, b in zip(pe, d))
            v = r.get(ee, 0) - qc * pc
            if m is not None:
                v %= m
            if v:
                r[ee] = v
            else:
                r.pop(ee, None)
    return LaurentPoly._make(f.ctx, q)


def exact_divide(f: LaurentPoly, p: LaurentPoly) -> Optional[LaurentPoly]:
    """
    The quotient ``f / p`` in the Laurent ring if it exists, else None.
    """
    if f.ctx != p.ctx:
        raise ContextMismatch(f"{f.ctx} vs {p.ctx}")
    if not p.terms:
        raise ZeroDivisionError("exact_divide by the zero polynomial")
    if not f.terms:
        return f
    mf, f0 = strip_monomial(f)
    mp, p0 = strip_monomial(p)
    q0 = _exact_polynomial_divide(f0, p0)
    if q0 is None:
        return None
    return q0.shift(tuple(a - b for a, b in zip(mf, mp)))


def divides(p: LaurentPoly, f: LaurentPoly) -> bool:
    """
    Whether ``p`` divides ``f`` in the Laurent ring over the same coefficient
    domain.
    """
    if f.ctx != p.ctx:
        raise ContextMismatch(f"{f.ctx} vs {p.ctx}")
    if not p.terms:
        raise ZeroDivisionError("divides() with p = 0")
    if not f.terms:
        return True
    _, p0 = strip_monomial(p)
    _, f0 = strip_monomial(f)
    m = f.ctx.modulus
    if p0.is_constant():
        c = p0.constant_value()
        if m is not None:
            return gcd(c, m) == 1 or all(v % gcd(c, m) == 0 for v in f0.terms.values())
        return all(v % c == 0 for v in f0.terms.values())
    if m is None:
        content, prim = content_and_primitive(p0)
        if any(v % content for v in f0.terms.values()):
            return False
    else:
        prim = p0
    pivot = choose_pivot(p0)
    _, r, _ = pseudo_divide(f0, prim, pivot)
    if r.terms:
        LOG.log(VLOG_2, "pseudo-remainder of %s by %s is nonzero", f0, prim)
        return False
    return _exact_polynomial_divide(f0, p0) is not None


def evaluate(f: LaurentPoly, point: Sequence[int], q: int) -> int:
    """
    Evaluate at a point of (Z/qZ)^k, q prime.
    """
    if len(point) != f.ctx.k:
        raise ContextMismatch(f"point has {len(point)} coordinates, need {f.ctx.k}")
    acc = 0
    for e, c in f.terms.items():
        term = c % q
        for x, d in zip(point, e):
            if d:
                if d < 0 and x % q == 0:
                    raise ZeroDivisionError("negative exponent at a zero coordinate")
                term = term * pow(x, d, q) % q
        acc += term
    return acc % q


@dataclass(frozen=True)
class FlatPattern:
    """
    A nonempty signed support: the data of a flat Laurent polynomial.
    """

    signed_support: Tuple[Tuple[ExpVec, int], ...]

    def __post_init__(self) -> None:
        if not self.signed_support:
            raise ValueError("flat patterns are nonempty")
        for _, s in self.signed_support:
            if s not in (1, -1):
                raise ValueError(f"flat pattern sign must be +1 or -1, got {s}")

    @classmethod
    def from_poly(cls, f: LaurentPoly) -> "FlatPattern":
        if not is_flat(f):
            raise ValueError(f"{f} is not flat")
        return cls(
            tuple((e, 1 if c == 1 else -1) for e, c in f.sorted_terms())
        )

    def to_poly(self, ctx: Context) -> LaurentPoly:
        return LaurentPoly(ctx, dict(self.signed_support))

    def to_json(self, ctx: Context) -> Dict[str, object]:
        return {
            "polynomial": serialize(self.to_poly(ctx)),
            "terms": [[list(e), s] for e, s in self.signed_support],
        }


class ResidueMap:
    """
    A linear map on Laurent polynomials whose vanishing is necessary for
    divisibility by ``p``: f -> lc^(E - e) * prem(x_pivot^s * f), with the
    shift ``s`` and exponent ``E`` fixed across a family so that residues of a
    linear combination are the same combination of residues.
    """

    def __init__(
        self,
        p: LaurentPoly,
        family: Sequence[LaurentPoly],
        pivot: Optional[int] = None,
    ) -> None:
        _, self.p = strip_monomial(p)
        self.pivot = choose_pivot(self.p) if pivot is None else pivot
        nonzero = [f for f in family if f.terms]
        self.shift = max([0] + [-f.min_degree(self.pivot) for f in nonzero])
        self.lc = self.p.coefficients_in(self.pivot)[self.p.degree(self.pivot)]
        raw = [self._prem(f) for f in family]
        self.exponent = max([0] + [e for _, e in raw])
        self.residues = [self._scale(r, e) for r, e in raw]

    def _prem(self, f: LaurentPoly) -> Tuple[LaurentPoly, int]:
        if not f.terms:
            return f, 0
        shifted = f.shift(f.ctx.unit_exps(self.pivot, self.shift))
        _, r, e = pseudo_divide(shifted, self.p, self.pivot)
        return r, e

    def _scale(self, r: LaurentPoly, e: int) -> LaurentPoly:
        if e == self.exponent:
            return r
        return r * self.lc ** (self.exponent - e)

    def residue(self, f: LaurentPoly) -> LaurentPoly:
        if f.terms and f.min_degree(self.pivot) + self.shift < 0:
            raise ValueError(f"{f} lies outside the family this map was built for")
        r, e = self._prem(f)
        if e > self.exponent:
            raise ValueError(f"{f} needs a larger multiplier than the family")
        return self._scale(r, e)


def iter_box(bounds: Sequence[Tuple[int, int]]) -> Iterator[ExpVec]:
    """
    Exponent vectors of a box in ascending lexicographic order.
    """
    if not bounds:
        yield ()
        return
    lo, hi = bounds[0]
    for d in range(lo, hi + 1):
        for rest in iter_box(bounds[1:]):
            yield (d,) + rest
