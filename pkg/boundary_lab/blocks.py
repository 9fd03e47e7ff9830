"""
Basic blocks of upper-triangular matrix groups with monomial diagonals.

Positions are 0-based internally and reported 1-based.  A position ``(i, j)``
is a valid block when some unipotent element of the group has a nonzero
``(i, j)`` entry and zeros at every ``(i', j') != (i, j)`` with ``i' <= i``
and ``j' >= j``.  Witnesses are searched among short words and commutators of
short words, so "not valid" means "no witness up to the bound".
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from vmodule import VLOG_1, VLOG_2

from .groups import GroupSpec, gkp_spec
from .laurent import (
    Context,
    ExpVec,
    LaurentPoly,
    serialize,
    unit_inverse,
)
from .lattice import hermite_normal_form, nullspace, primitive_integer_vector
from .spp import detect_generalized_cyclotomic

LOG = logging.getLogger(__name__)

DEFAULT_WORD_BOUND = 6
DEFAULT_DEGREE_BOUND = 4
MAX_BALL = 20000


class BlockError(ValueError):
    pass


class UTMatrix:
    """
    An invertible upper-triangular matrix of Laurent polynomials whose
    diagonal entries are units (signed monomials).
    """

    __slots__ = ("ctx", "rows", "_hash")

    def __init__(self, ctx: Context, rows: Sequence[Sequence[LaurentPoly]]) -> None:
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise BlockError("matrices must be square and nonempty")
        for i, r in enumerate(rows):
            for j, entry in enumerate(r):
                if entry.ctx != ctx:
                    raise BlockError(f"entry ({i + 1}, {j + 1}) is over {entry.ctx.vars}")
                if j < i and entry.terms:
                    raise BlockError(f"entry ({i + 1}, {j + 1}) is below the diagonal")
            if unit_inverse(r[i]) is None:
                raise BlockError(f"diagonal entry ({i + 1}, {i + 1}) = {r[i]} is not a unit monomial")
        self.ctx = ctx
        self.rows: Tuple[Tuple[LaurentPoly, ...], ...] = tuple(tuple(r) for r in rows)
        self._hash = hash(self.rows)

    @classmethod
    def identity(cls, ctx: Context, n: int) -> "UTMatrix":
        one, zero = LaurentPoly.one(ctx), LaurentPoly.zero(ctx)
        return cls(ctx, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def size(self) -> int:
        return len(self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UTMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return "UTMatrix(" + "; ".join(", ".join(str(e) for e in r) for r in self.rows) + ")"

    def entry(self, i: int, j: int) -> LaurentPoly:
        return self.rows[i][j]

    def __mul__(self, other: "UTMatrix") -> "UTMatrix":
        if self.size != other.size or self.ctx != other.ctx:
            raise BlockError("matrices of different shapes or contexts")
        n = self.size
        zero = LaurentPoly.zero(self.ctx)
        out = [[zero] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                acc = zero
                for k in range(i, j + 1):
                    a, b = self.rows[i][k], other.rows[k][j]
                    if a.terms and b.terms:
                        acc = acc + a * b
                out[i][j] = acc
        return UTMatrix(self.ctx, out)

    def inverse(self) -> "UTMatrix":
        n = self.size
        zero = LaurentPoly.zero(self.ctx)
        inv_diag = [unit_inverse(self.rows[i][i]) for i in range(n)]
        out = [[zero] * n for _ in range(n)]
        for j in range(n):
            d = inv_diag[j]
            assert d is not None
            out[j][j] = d
            for i in range(j - 1, -1, -1):
                acc = zero
                for k in range(i + 1, j + 1):
                    a = self.rows[i][k]
                    if a.terms and out[k][j].terms:
                        acc = acc + a * out[k][j]
                di = inv_diag[i]
                assert di is not None
                out[i][j] = -(di * acc)
        return UTMatrix(self.ctx, out)

    def is_unipotent(self) -> bool:
        return all(self.rows[i][i] == 1 for i in range(self.size))

    def diagonal_exps(self, i: int) -> ExpVec:
        ((e, _),) = self.rows[i][i].terms.items()
        return e

    def ratio(self, i: int, j: int) -> ExpVec:
        """
        Exponents of ``g_ii / g_jj``.
        """
        return tuple(a - b for a, b in zip(self.diagonal_exps(i), self.diagonal_exps(j)))


@dataclass
class BlockInput:
    ctx: Context
    names: List[str]
    generators: List[UTMatrix]
    # formal diagonal variable -> value in another Laurent ring
    values: Optional[Dict[str, LaurentPoly]] = None

    def __post_init__(self) -> None:
        if not self.generators:
            raise BlockError("no generators")
        if len(self.names) != len(self.generators):
            raise BlockError("every generator needs a name")
        sizes = {g.size for g in self.generators}
        if len(sizes) != 1:
            raise BlockError(f"generators of different sizes {sorted(sizes)}")
        if self.values is not None:
            missing = [v for v in self.ctx.vars if v not in self.values]
            if missing:
                raise BlockError(f"no value for {', '.join(missing)}")

    @property
    def size(self) -> int:
        return self.generators[0].size


@dataclass
class BlockSpec:
    position: Tuple[int, int]
    valid: bool
    diagonal_ratio_exponents: List[ExpVec]
    lattice_rank: int
    basis: List[List[int]] = field(default_factory=list)
    witness_word: Optional[List[str]] = None
    relation: Optional[LaurentPoly] = None
    generalized_cyclotomic: Optional[bool] = None
    note: str = ""

    def to_json(self) -> Dict[str, object]:
        return {
            "position": [self.position[0] + 1, self.position[1] + 1],
            "valid": self.valid,
            "witness_word": self.witness_word,
            "diagonal_ratio_exponents": [list(e) for e in self.diagonal_ratio_exponents],
            "lattice_rank": self.lattice_rank,
            "basis": self.basis,
            "relation": serialize(self.relation) if self.relation is not None else None,
            "generalized_cyclotomic": self.generalized_cyclotomic,
            "note": self.note,
        }


def _inverse_name(name: str) -> str:
    return name[:-3] if name.endswith("^-1") else name + "^-1"


def _inverse_word(word: Sequence[str]) -> List[str]:
    return [_inverse_name(w) for w in reversed(word)]


def unipotent_candidates(
    data: BlockInput, word_bound: int = DEFAULT_WORD_BOUND
) -> Iterator[Tuple[UTMatrix, List[str]]]:
    """
    Unipotent elements of the ball of radius ``word_bound`` in order of word
    length, then commutators of pairs from the ball of half the radius.
    """
    letters: List[Tuple[str, UTMatrix]] = []
    for name, g in zip(data.names, data.generators):
        letters.append((name, g))
        letters.append((_inverse_name(name), g.inverse()))
    one = UTMatrix.identity(data.ctx, data.size)
    seen: Dict[UTMatrix, List[str]] = {one: []}
    frontier = [one]
    for length in range(1, word_bound + 1):
        nxt = []
        for x in frontier:
            for name, g in letters:
                y = x * g
                if y in seen:
                    continue
                seen[y] = seen[x] + [name]
                nxt.append(y)
                if y.is_unipotent():
                    yield y, seen[y]
        LOG.log(VLOG_2, "ball of radius %d has %d elements", length, len(seen))
        frontier = nxt
        if len(seen) >= MAX_BALL:
            LOG.warning("stopping the ball at radius %d with %d elements", length, len(seen))
            break

    half = [(x, w) for x, w in seen.items() if 0 < len(w) <= max(1, word_bound // 2)]
    for (a, wa), (b, wb) in itertools.combinations(half, 2):
        c = a * b * a.inverse() * b.inverse()
        yield c, wa + wb + _inverse_word(wa) + _inverse_word(wb)


def _witnesses(u: UTMatrix, i: int, j: int) -> bool:
    if not u.entry(i, j).terms:
        return False
    for i2 in range(0, i + 1):
        for j2 in range(j, u.size):
            if (i2, j2) != (i, j) and u.entry(i2, j2).terms:
                return False
    return True


def exponent_lattice_rank(ratios: Sequence[ExpVec]) -> Tuple[int, List[List[int]]]:
    basis = hermite_normal_form(ratios)
    return len(basis), basis


def _monomials(k: int, degree: int) -> List[ExpVec]:
    out = []
    for d in range(degree + 1):
        out += sorted(
            (e for e in itertools.product(range(d + 1), repeat=k) if sum(e) == d),
            reverse=True,
        )
    return out


def bounded_relation_search(
    values: Sequence[LaurentPoly],
    degree_bound: int = DEFAULT_DEGREE_BOUND,
    names: Optional[Sequence[str]] = None,
) -> Optional[LaurentPoly]:
    """
    The first nonzero integer polynomial ``p`` of lowest total degree with
    ``p(values) == 0``, made primitive with a positive lex-leading
    coefficient.  Variables are named ``x1..xk`` unless ``names`` is given.
    """
    if not values:
        return None
    k = len(values)
    names = names or tuple(f"x{i + 1}" for i in range(k))
    ctx = Context(tuple(names))
    vctx = values[0].ctx
    for v in values:
        if v.ctx != vctx:
            raise BlockError("relation values live in different rings")

    powers: Dict[Tuple[int, int], LaurentPoly] = {}

    def power(i: int, d: int) -> LaurentPoly:
        if (i, d) not in powers:
            powers[(i, d)] = values[i] ** d
        return powers[(i, d)]

    for degree in range(1, degree_bound + 1):
        monos = _monomials(k, degree)
        columns = []
        for e in monos:
            col = LaurentPoly.one(vctx)
            for i, d in enumerate(e):
                if d:
                    col = col * power(i, d)
            columns.append(col)
        support = sorted({s for c in columns for s in c.terms})
        matrix = [[c.terms.get(s, 0) for c in columns] for s in support]
        kernel = nullspace(matrix, len(monos))
        LOG.log(VLOG_1, "degree %d: %d monomials, kernel dimension %d", degree, len(monos), len(kernel))
        if not kernel:
            continue
        coeffs = primitive_integer_vector(kernel[0])
        relation = LaurentPoly(ctx, {e: c for e, c in zip(monos, coeffs) if c})
        if relation.lead_term()[1] < 0:
            relation = -relation
        return relation
    return None


def block_values(data: BlockInput, basis: Sequence[Sequence[int]]) -> List[LaurentPoly]:
    """
    The value of ``x^b`` for each basis vector ``b``, through the input's
    value map when it has one.
    """
    out = []
    for b in basis:
        if data.values is None:
            out.append(LaurentPoly.monomial(data.ctx, b))
            continue
        acc: Optional[LaurentPoly] = None
        for var, d in zip(data.ctx.vars, b):
            if not d:
                continue
            v = data.values[var]
            if d < 0:
                inv = unit_inverse(v)
                if inv is None:
                    raise BlockError(f"{var} = {serialize(v)} is not invertible in its ring")
                v, d = inv, -d
            term = v**d
            acc = term if acc is None else acc * term
        if acc is None:
            raise BlockError("zero basis vector")
        out.append(acc)
    return out


def extract_blocks(
    data: BlockInput,
    word_bound: int = DEFAULT_WORD_BOUND,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
) -> List[BlockSpec]:
    n = data.size
    positions = [(i, j) for i in range(n) for j in range(i + 1, n)]
    witness: Dict[Tuple[int, int], List[str]] = {}
    for u, word in unipotent_candidates(data, word_bound):
        for pos in positions:
            if pos not in witness and _witnesses(u, *pos):
                LOG.log(VLOG_1, "block %s has witness %s", pos, " ".join(word))
                witness[pos] = word
        if len(witness) == len(positions):
            break

    blocks = []
    for i, j in positions:
        ratios = [g.ratio(i, j) for g in data.generators]
        rank, basis = exponent_lattice_rank(ratios)
        block = BlockSpec((i, j), (i, j) in witness, ratios, rank, basis, witness.get((i, j)))
        if block.valid and rank:
            try:
                values = block_values(data, basis)
            except BlockError as e:
                block.note = f"no relation search: {e}"
            else:
                block.relation = bounded_relation_search(values, degree_bound)
                if block.relation is not None:
                    block.generalized_cyclotomic = (
                        detect_generalized_cyclotomic(block.relation) is not None
                    )
        if not block.valid:
            block.note = f"no witness up to word length {word_bound}"
        blocks.append(block)
    return blocks


def modified_block_to_gk(block: BlockSpec) -> GroupSpec:
    """
    ``G_k`` over the ratio lattice of a valid block, with the relation found
    for it if any.
    """
    if not block.valid:
        raise BlockError(f"block {block.position} is not valid")
    k = block.lattice_rank
    if k == 0:
        raise BlockError("block has a trivial diagonal")
    name = f"block-{block.position[0] + 1}-{block.position[1] + 1}"
    if block.relation is None:
        spec = gkp_spec(tuple(f"x{i + 1}" for i in range(k)), name=name)
    else:
        spec = gkp_spec(block.relation.ctx.vars, serialize(block.relation), name=name)
    spec.metadata["basis"] = block.basis
    return spec

