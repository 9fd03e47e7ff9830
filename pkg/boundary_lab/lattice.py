"""
Exact integer and rational linear algebra on small dense matrices, on top
of sympy's ``DomainMatrix``.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from math import gcd
from typing import List, Sequence, Tuple

from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import hermite_normal_form as column_hnf
from vmodule import VLOG_2

LOG = logging.getLogger(__name__)

IntMatrix = List[List[int]]


def _width(rows: Sequence[Sequence[int]]) -> int:
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise ValueError("ragged matrix")
    return ncols


def _fractions(dm: DomainMatrix) -> List[List[Fraction]]:
    m = dm.to_Matrix()
    return [[Fraction(int(m[i, j].p), int(m[i, j].q)) for j in range(m.cols)] for i in range(m.rows)]


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """
    Row-style Hermite normal form of the lattice spanned by ``rows``.

    The nonzero rows are returned, echelon with positive pivots and the
    entries above each pivot reduced into ``[0, pivot)``.
    """
    m = [[int(v) for v in r] for r in rows if any(r)]
    if not m:
        return []
    ncols = _width(m)
    # sympy reduces columns with pivots at the bottom; reversing coordinates
    # turns its output into the top-down row echelon shape
    cols = DomainMatrix(
        [[ZZ(r[ncols - 1 - i]) for r in m] for i in range(ncols)], (ncols, len(m)), ZZ
    )
    h = column_hnf(cols).to_Matrix()
    result = [[int(h[ncols - 1 - c, j]) for c in range(ncols)] for j in reversed(range(h.cols))]
    LOG.log(VLOG_2, "hnf of %d rows has rank %d", len(rows), len(result))
    return result


def lattice_rank(rows: Sequence[Sequence[int]]) -> int:
    return len(hermite_normal_form(rows))


def _rational(matrix: Sequence[Sequence[int]]) -> DomainMatrix:
    ncols = _width(matrix)
    return DomainMatrix([[QQ(int(v)) for v in r] for r in matrix], (len(matrix), ncols), QQ)


def rational_rref(matrix: Sequence[Sequence[int]]) -> Tuple[List[List[Fraction]], List[int]]:
    """
    Reduced row echelon form over the rationals, and the pivot columns.
    """
    if not matrix:
        return [], []
    rref, pivots = _rational(matrix).rref()
    return _fractions(rref), list(pivots)


def nullspace(matrix: Sequence[Sequence[int]], ncols: int) -> List[List[Fraction]]:
    """
    A basis of the right kernel, one vector per free column in increasing
    column order.
    """
    if not matrix:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    if _width(matrix) != ncols:
        raise ValueError(f"matrix has {len(matrix[0])} columns, expected {ncols}")
    return _fractions(_rational(matrix).nullspace())


def primitive_integer_vector(v: Sequence[Fraction]) -> List[int]:
    """
    Clear denominators and divide by the gcd.
    """
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return [x // g for x in ints]
