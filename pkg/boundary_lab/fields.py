"""
Root finding over prime fields, on top of sympy's galoistools.

Callers pass coefficient lists lowest degree first; galoistools wants them
highest degree first over ``ZZ``.
"""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

from sympy import prevprime
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import (
    gf_degree,
    gf_edf_zassenhaus,
    gf_gcd,
    gf_monic,
    gf_pow_mod,
    gf_strip,
    gf_sub,
)
from vmodule import VLOG_2

LOG = logging.getLogger(__name__)

UPoly = List[int]

_X = [ZZ(1), ZZ(0)]


def primes_below(bound: int, count: int) -> Tuple[int, ...]:
    found: List[int] = []
    n = bound
    while len(found) < count:
        n = int(prevprime(n))
        found.append(n)
    return tuple(found)


# The fixed primes fingerprints are taken modulo, largest first.
FINGERPRINT_PRIMES = primes_below(2**61, 8)


def roots(f: Sequence[int], q: int) -> List[int]:
    """
    The distinct roots of ``f`` in F_q, sorted, for an odd prime ``q``.
    """
    g = gf_strip([ZZ(c % q) for c in reversed(f)])
    if not g:
        raise ValueError("the zero polynomial has every element as a root")
    if gf_degree(g) == 0:
        return []
    _, g = gf_monic(g, q, ZZ)
    x_q = gf_pow_mod(_X, q, g, q, ZZ)
    linear = gf_gcd(g, gf_sub(x_q, _X, q, ZZ), q, ZZ)
    LOG.log(VLOG_2, "degree %d has %d roots mod %d", gf_degree(g), gf_degree(linear), q)
    if gf_degree(linear) == 0:
        return []
    return sorted(int(-factor[-1] % q) for factor in gf_edf_zassenhaus(linear, 1, q, ZZ))
