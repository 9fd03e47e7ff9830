import math
import random

import mpmath
import pytest

from boundary_lab.laurent import Context, divides, LaurentPoly, parse, substitute_power
from boundary_lab.runner import Runner
from boundary_lab.spp import (
    box_bounds,
    budget_box,
    CertificateKind,
    counterexample_family,
    cyclotomic_polynomial,
    detect_generalized_cyclotomic,
    GenCycDecomposition,
    leading_obstruction,
    random_baumslag_pattern,
    SearchCapExceeded,
    smallest_spacing,
    spp_certify_pair,
    spp_search_counterexample,
    Status,
    totient,
    univariate_spp_decide,
    verify_baumslag_flat_nonzero,
    verify_nine_product,
    WITNESS_NS,
)

X = Context(("x",))
X12 = Context(("x1", "x2"))


def test_cyclotomic_no_spp():
    p = parse("x^2 + x + 1", X)
    verdict = univariate_spp_decide(p)
    assert verdict.status == Status.NO_SPP
    assert verdict.certificate == CertificateKind.GENERALIZED_CYCLOTOMIC
    assert verdict.tested_N == WITNESS_NS
    u = verdict.counterexample.to_poly(X)
    assert u == parse("x^3 - 1", X)
    for n in (1, 2, 7):
        assert divides(p, substitute_power(u, n))


def test_binomial_no_spp():
    verdict = spp_certify_pair(parse("x1*x2 - 1", X12), 3)
    assert verdict.status == Status.NO_SPP
    assert verdict.decomposition.cyclotomic_index == 1
    assert verdict.decomposition.direction == (1, 1)


def test_golden_ratio_spacing():
    verdict = univariate_spp_decide(parse("x^2 - x - 1", X))
    assert verdict.status == Status.HAS_SPP
    assert verdict.N == 2
    assert verdict.certificate == CertificateKind.ROOT_MODULUS
    assert verdict.rho == pytest.approx(1.618, abs=1e-3)
    out = verdict.to_json()
    assert out["status"] == "has_spp"
    assert out["certificate"]["kind"] == "root_modulus"
    # nothing flat of low degree is divisible at that spacing
    assert spp_search_counterexample(parse("x^2 - x - 1", X), 2, 6) is None


def test_leading_obstructions():
    verdict = univariate_spp_decide(parse("x - 2", X))
    assert verdict.status == Status.HAS_SPP
    assert verdict.N == 1
    assert verdict.certificate == CertificateKind.LEADING_OBSTRUCTION
    assert spp_search_counterexample(parse("x - 2", X), 1, 4) is None

    xy = Context(("x", "y"))
    verdict = spp_certify_pair(parse("2 + x + y", xy), 3)
    assert verdict.status == Status.HAS_SPP
    assert verdict.N == 1
    assert leading_obstruction(parse("6*x + 4", xy))
    assert not leading_obstruction(parse("1 + x - y", xy))


def test_restricted_relation_is_unknown():
    ctx = Context(("x1", "x2"))
    p = parse("1 + x1 - x2", ctx)
    verdict = spp_certify_pair(p, 3, box=2)
    assert verdict.status == Status.UNKNOWN
    assert verdict.certificate == CertificateKind.EXHAUSTIVE_BOUND
    assert verdict.bound == 3**9 - 1
    assert verdict.note.startswith("no flat multiple among 19682 sign patterns")
    assert spp_search_counterexample(p, 3, 2) is None


def test_restricted_relation_fails_without_spacing():
    # at N = 1 the relation itself is flat
    p = parse("1 + x1 - x2", X12)
    found = spp_search_counterexample(p, 1, 1)
    assert found is not None
    assert found.to_poly(X12) == parse("1 + x1 - x2", X12)
    assert divides(p, found.to_poly(X12))


def test_units():
    verdict = univariate_spp_decide(parse("-x^3", X))
    assert verdict.status == Status.NO_SPP
    assert verdict.note == "units divide every polynomial"
    verdict = univariate_spp_decide(parse("3", X))
    assert verdict.status == Status.HAS_SPP


def test_search_order():
    found = spp_search_counterexample(parse("x^2 + x + 1", X), 1, 3)
    assert found.to_poly(X) == parse("1 + x + x^2", X)


def test_search_divides_out_monomials():
    p = parse("1 + x1 + x2", X12)
    control = spp_search_counterexample(p, 1, 2)
    assert control.to_poly(X12) == parse("1 + x1 + x2", X12)
    assert control == spp_search_counterexample(p, 1, 2, runner=Runner(2))
    u = spp_search_counterexample(parse("x1^2 - x2^2", X12), 1, 2).to_poly(X12)
    assert min(e[0] for e in u.terms) == 0
    assert min(e[1] for e in u.terms) == 0


def test_search_parallel_matches_serial():
    p = parse("x^2 + x + 1", X)
    serial = spp_search_counterexample(p, 1, 4)
    parallel = spp_search_counterexample(p, 1, 4, runner=Runner(2))
    assert serial == parallel


def test_search_validation():
    p = parse("1 + x1 - x2", X12)
    with pytest.raises(SearchCapExceeded):
        spp_search_counterexample(p, 3, 3, cap=1000)
    with pytest.raises(ValueError):
        spp_search_counterexample(p, 0, 1)
    with pytest.raises(ValueError):
        univariate_spp_decide(p)
    with pytest.raises(ValueError):
        univariate_spp_decide(parse("x + 1", Context(("x",), 3)))
    with pytest.raises(ValueError):
        spp_certify_pair(LaurentPoly.zero(X12), 3)


def test_box_helpers():
    ctx = Context(("x1", "x2", "x3"))
    p = parse("1 + x1 - x2", ctx)
    assert box_bounds(p, 2) == [(0, 2), (0, 2), (0, 0)]
    assert budget_box(p, 3**9) == 2
    assert budget_box(p, 2) == 0
    with pytest.raises(ValueError):
        box_bounds(p, [(0, 1)])
    with pytest.raises(ValueError):
        box_bounds(p, [(0, 1), (2, 1), (0, 0)])


def test_cyclotomic_polynomials():
    assert cyclotomic_polynomial(1) == (-1, 1)
    assert cyclotomic_polynomial(3) == (1, 1, 1)
    assert cyclotomic_polynomial(6) == (1, -1, 1)
    assert cyclotomic_polynomial(12) == (1, 0, -1, 0, 1)
    assert len(cyclotomic_polynomial(9)) == 7
    with pytest.raises(ValueError):
        cyclotomic_polynomial(0)
    assert [totient(n) for n in (1, 2, 9, 12)] == [1, 1, 6, 4]
    with pytest.raises(ValueError):
        totient(0)


def test_detect_generalized_cyclotomic():
    decomp = detect_generalized_cyclotomic(parse("x^5 - x^4 + x^3", X))
    assert decomp.cyclotomic_index == 6
    assert decomp.monomial_factor == (3,)
    decomp = detect_generalized_cyclotomic(parse("-1 - x - x^2", X))
    assert decomp.sign == -1
    assert decomp.reconstruct(X) == parse("-1 - x - x^2", X)
    assert detect_generalized_cyclotomic(parse("x^2 - x - 1", X)) is None
    assert detect_generalized_cyclotomic(parse("1 + x1 - x2", X12)) is None


def test_smallest_spacing():
    assert smallest_spacing(mpmath.mpf(3)) == 1
    assert smallest_spacing(mpmath.mpf("1.5")) == 2
    with pytest.raises(ValueError):
        smallest_spacing(mpmath.mpf(1))


def test_nine_product():
    poly, ok = verify_nine_product()
    assert ok
    assert len(poly.terms) == 10
    assert poly.terms[(3, 3)] == -21
    assert all(e % 3 == 0 for exps in poly.terms for e in exps)


def test_baumslag_patterns_are_nonzero():
    rng = random.Random(5)
    for _ in range(200):
        assert verify_baumslag_flat_nonzero(random_baumslag_pattern(rng))


def test_baumslag_pattern_validation():
    with pytest.raises(ValueError):
        verify_baumslag_flat_nonzero({})
    with pytest.raises(ValueError):
        verify_baumslag_flat_nonzero({(0, 0, 0, 1): 1, (0, 0, 0, 2): -1})
    with pytest.raises(ValueError):
        verify_baumslag_flat_nonzero({(0, 0, 0, 1): 2})


def test_detected_cyclotomics_fail_at_every_spacing():
    rng = random.Random(41)
    for _ in range(60):
        n = rng.randint(1, 15)
        v = (0, 0)
        while not (v > (0, 0) and math.gcd(*v) == 1):
            v = (rng.randint(0, 2), rng.randint(-2, 2))
        shift = (rng.randint(-2, 2), rng.randint(-2, 2))
        p = GenCycDecomposition(shift, v, n, rng.choice((1, -1))).reconstruct(X12)
        decomp = detect_generalized_cyclotomic(p)
        assert decomp is not None
        assert (decomp.cyclotomic_index, decomp.direction) == (n, v)
        u = counterexample_family(decomp, X12).to_poly(X12)
        for N in (1, 2, 3):
            assert divides(p, substitute_power(u, N))


def test_has_spp_verdicts_survive_exhaustive_search():
    rng = random.Random(43)
    checked = 0
    for _ in range(60):
        coeffs = [rng.randint(-3, 3) for _ in range(rng.randint(2, 4))]
        if not (coeffs[0] and coeffs[-1]):
            continue
        p = LaurentPoly(X, {(i,): c for i, c in enumerate(coeffs) if c})
        verdict = univariate_spp_decide(p)
        if verdict.status != Status.HAS_SPP:
            continue
        checked += 1
        assert spp_search_counterexample(p, verdict.N, 8) is None
    assert checked >= 10
