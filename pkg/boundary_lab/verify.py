"""
Named consistency checks over the finite computations the library relies on.

Each check is a class with a ``name`` and an ``order``; ``run()`` returns a
``CheckResult``.  ``verify-paper --only NAME`` selects checks the way a path
prefix selects a directory: ``flat`` matches ``flat`` and ``flat/...`` but
not ``flat-search``.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Type

import moreorless.click
from vmodule import VLOG_1

from .groups import baumslag_spec, gkp_spec, GroupSpec, restricted_baumslag_spec
from .laurent import Context, parse, serialize
from .runner import Runner
from .spp import (
    NINE_PRODUCT,
    random_baumslag_pattern,
    spp_certify_pair,
    spp_search_counterexample,
    Status,
    verify_baumslag_flat_nonzero,
    verify_nine_product,
)

LOG = logging.getLogger(__name__)

PATTERN_COUNT = 200
PATTERN_SEED = 5


def check_name_re(prefix: str) -> str:
    """
    A regular expression matching ``prefix`` itself or anything below
    ``prefix/``.
    """
    return f"^({re.escape(prefix)}$|{re.escape(prefix)}/.*)$"


@dataclass
class CheckResult:
    name: str
    success: bool
    message: str = ""
    detail: str = ""


class BaseCheck:
    name: str = ""
    order: int = 50

    def __init__(self, runner: Runner, tamper: bool = False) -> None:
        self.runner = runner
        self.tamper = tamper

    def run(self) -> CheckResult:
        raise NotImplementedError

    def result(self, success: bool, message: str, detail: str = "") -> CheckResult:
        return CheckResult(self.name, success, message, detail)


class NineProductCheck(BaseCheck):
    name = "nine-product"
    order = 10

    def run(self) -> CheckResult:
        poly, ok = verify_nine_product()
        text = serialize(poly)
        exps_ok = len(poly.terms) == 10 and all(
            d % 3 == 0 for e in poly.terms for d in e
        )
        if not (ok and exps_ok):
            moreorless.click.echo_color_unified_diff(
                NINE_PRODUCT + "\n", text + "\n", "nine-product"
            )
            return self.result(False, "product differs from the expected polynomial", text)
        return self.result(True, f"{len(poly.terms)} terms, exponents divisible by 3", text)


class FlatSearchCheck(BaseCheck):
    name = "flat-search"
    order = 20

    def run(self) -> CheckResult:
        ctx = Context(("x1", "x2"))
        p = parse("1 + x1 + x2", ctx)
        found = spp_search_counterexample(p, 3, 2, runner=self.runner)
        if found is not None:
            return self.result(
                False, "found a flat multiple at N = 3", serialize(found.to_poly(ctx))
            )
        control = spp_search_counterexample(p, 1, 2, runner=self.runner)
        if control is None:
            return self.result(False, "negative control at N = 1 found nothing")
        return self.result(
            True,
            "no flat u on {0,1,2}^2 with p | u(x^3); N = 1 finds "
            + serialize(control.to_poly(ctx)),
        )


class BaumslagFlatCheck(BaseCheck):
    name = "baumslag-flat"
    order = 30

    def run(self) -> CheckResult:
        rng = random.Random(PATTERN_SEED)
        for i in range(PATTERN_COUNT):
            pattern = random_baumslag_pattern(rng)
            if not verify_baumslag_flat_nonzero(pattern):
                return self.result(False, f"pattern {i} expands to zero", repr(sorted(pattern.items())))
            LOG.log(VLOG_1, "pattern %d of %d: %d terms, nonzero", i + 1, PATTERN_COUNT, len(pattern))
        return self.result(True, f"{PATTERN_COUNT} random sign patterns are nonzero")


def _holds(spec: GroupSpec, shifted: Sequence[int], base: Sequence[int]) -> bool:
    """
    Whether conjugating ``d`` by the diagonal at ``shifted`` equals ``d``
    times its conjugate by the diagonal at ``base``.
    """
    lhs = spec.monomial_conjugate(shifted)
    rhs = spec.multiply(spec.generator("d"), spec.monomial_conjugate(base))
    return spec.equals(lhs, rhs)


class RestrictedRelationCheck(BaseCheck):
    name = "restricted-relation"
    order = 40

    def run(self) -> CheckResult:
        if self.tamper:
            restricted = gkp_spec(("x1", "x2", "x3"), "2 + x1 - x2", pivot="x2", name="tampered")
        else:
            restricted = restricted_baumslag_spec()
        if not _holds(restricted, (0, 1, 0), (1, 0, 0)):
            return self.result(False, f"X2 is not 1 + X1 in {restricted!r}")
        if not _holds(baumslag_spec(), (0, 1, 0, 0), (1, 0, 0, 0)):
            return self.result(False, "Z1 is not Y1 + 1 in the Baumslag group")
        return self.result(True, "X2 = 1 + X1 and Z1 = Y1 + 1 on the lamps")


class RestrictedSppCheck(BaseCheck):
    name = "restricted-spp"
    order = 50

    def run(self) -> CheckResult:
        ctx = Context(("x1", "x2", "x3"))
        p = parse("1 + x1 - x2", ctx)
        verdict = spp_certify_pair(p, 3, box=2, runner=self.runner)
        if verdict.status == Status.NO_SPP:
            return self.result(False, "1 + x1 - x2 has a flat multiple at N = 3", str(verdict.to_json()))
        return self.result(True, verdict.note or verdict.status.value)


CHECKS: List[Type[BaseCheck]] = [
    NineProductCheck,
    FlatSearchCheck,
    BaumslagFlatCheck,
    RestrictedRelationCheck,
    RestrictedSppCheck,
]


def select_checks(only: Iterable[str] = ()) -> List[Type[BaseCheck]]:
    only = list(only)
    pattern: Optional[re.Pattern[str]] = None
    if only:
        pattern = re.compile("|".join(check_name_re(name) for name in only))
    selected = []
    for cls in sorted(CHECKS, key=lambda c: (c.order, c.name)):
        if pattern is not None and not pattern.fullmatch(cls.name):
            LOG.log(VLOG_1, "%s: name does not match, skip", cls.name)
            continue
        selected.append(cls)
    if only and not selected:
        raise ValueError(f"no check matches {', '.join(only)}")
    return selected


def run_checks(
    only: Iterable[str] = (), runner: Optional[Runner] = None, tamper: bool = False
) -> List[CheckResult]:
    runner = runner or Runner(1)
    results = []
    for cls in select_checks(only):
        LOG.info("Running %s", cls.name)
        try:
            results.append(cls(runner, tamper).run())
        except ValueError as e:
            LOG.warning("%s raised %r", cls.name, e)
            results.append(CheckResult(cls.name, False, f"error: {e}"))
    return results
