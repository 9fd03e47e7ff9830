import pytest

from boundary_lab.cube import standard_delta_pair
from boundary_lab.groups import (
    Family,
    gkp_spec,
    GroupMismatch,
    GroupSpec,
    lamp,
    lamplighter_spec,
    upper_poly,
)
from boundary_lab.quotient import baumslag_localization


@pytest.fixture(params=["restricted", "baumslag", "lamp_z2"])
def spec(request):
    return request.getfixturevalue(request.param)


def test_group_axioms(spec, rng):
    for _ in range(1000):
        a, b, c = (spec.word_to_elem(spec.random_word(rng, 4)) for _ in range(3))
        assert spec.equals(
            spec.multiply(spec.multiply(a, b), c), spec.multiply(a, spec.multiply(b, c))
        )
        assert spec.equals(spec.multiply(a, spec.inverse(a)), spec.identity())
        assert spec.equals(spec.multiply(spec.identity(), a), a)


def test_projection_is_a_homomorphism(spec, rng):
    h = spec.default_projection
    for _ in range(15):
        a, b = (spec.word_to_elem(spec.random_word(rng, 5)) for _ in range(2))
        expected = tuple(x + y for x, y in zip(spec.project(h, a), spec.project(h, b)))
        assert spec.project(h, spec.multiply(a, b)) == expected


def test_power_matches_repeated_multiplication(spec):
    g = spec.word_to_elem(["d", spec.diagonal_names[0], "d"])
    repeated = spec.identity()
    for _ in range(5):
        repeated = spec.multiply(repeated, g)
    assert spec.equals(spec.power(g, 5), repeated)
    assert spec.equals(spec.power(g, -2), spec.inverse(spec.power(g, 2)))


def test_equal_phi_prime_gives_equal_conjugates(baumslag, rng):
    # elements with the same diagonal differ by a unipotent, and unipotents
    # commute with the unipotent delta1^-1 delta2
    pair = standard_delta_pair(baumslag)
    delta_bar = baumslag.multiply(baumslag.inverse(pair.delta1), pair.delta2)
    assert baumslag.is_unipotent(delta_bar)
    phi_prime = baumslag.homomorphism("phi_prime")
    for _ in range(200):
        g = baumslag.word_to_elem(baumslag.random_word(rng, 5))
        a, b = (baumslag.word_to_elem(baumslag.random_word(rng, 3)) for _ in range(2))
        g_prime = baumslag.multiply(g, baumslag.commutator(a, b))
        assert baumslag.project(phi_prime, g) == baumslag.project(phi_prime, g_prime)
        assert baumslag.equals(
            baumslag.conjugate(g, delta_bar), baumslag.conjugate(g_prime, delta_bar)
        )


def test_restricted_relation(restricted):
    # conjugating d by Z1 gives the same lamp as conjugating by Y1, plus d
    shifted = restricted.monomial_conjugate((0, 1, 0))
    base = restricted.multiply(restricted.monomial_conjugate((1, 0, 0)), restricted.generator("d"))
    assert restricted.equals(shifted, base)
    assert not restricted.equals(shifted, restricted.monomial_conjugate((1, 0, 0)))


def test_baumslag_relation(baumslag):
    shifted = baumslag.monomial_conjugate((0, 1, 0, 0))
    base = baumslag.multiply(baumslag.monomial_conjugate((1, 0, 0, 0)), baumslag.generator("d"))
    assert baumslag.equals(shifted, base)
    assert not baumslag.equals(
        baumslag.monomial_conjugate((0, 0, 0, 1)), baumslag.monomial_conjugate((0, 0, 1, 0))
    )


def test_restricted_aliases(restricted):
    assert restricted.name == "g3-restricted"
    assert restricted.generator("Y1") == restricted.generator("X1")
    assert restricted.generator("z1") == restricted.generator("x2")
    assert restricted.equals(
        restricted.word_to_elem(["Y2", "d", "y2"]), restricted.monomial_conjugate((0, 0, 1))
    )


def test_lamp_order_two(lamp_z2):
    light = lamp(lamp_z2, (3,))
    assert lamp_z2.equals(lamp_z2.multiply(light, light), lamp_z2.identity())
    assert lamp_z2.equals(lamp_z2.power(lamp_z2.generator("d"), 2), lamp_z2.identity())
    assert not lamp_z2.equals(light, lamp_z2.identity())


def test_unipotents_commute(lamp_z2, restricted):
    for spec in (lamp_z2, restricted):
        u = spec.monomial_conjugate((1,) + (0,) * (spec.rank - 1))
        assert spec.equals(spec.commutator(spec.generator("d"), u), spec.identity())
    c = lamp_z2.commutator(lamp_z2.generator("d"), lamp_z2.generator("X1"))
    assert not lamp_z2.equals(c, lamp_z2.identity())
    assert lamp_z2.is_unipotent(c)


def test_generators(restricted, baumslag):
    assert restricted.generator_names == ("d", "X1", "X2", "X3")
    assert baumslag.signed_generator_names == ("d", "D", "Y1", "y1", "Z1", "z1", "Y2", "y2", "Z2", "z2")
    with pytest.raises(GroupMismatch):
        restricted.generator("Q")


def test_homomorphisms(restricted, baumslag):
    assert restricted.default_projection.coords == (0, 1, 2)
    assert baumslag.default_projection.name == "phi"
    assert baumslag.homomorphism("pi").target_rank == 2
    assert baumslag.homomorphism("phi_prime").coords == (0, 1, 2, 3)
    with pytest.raises(GroupMismatch):
        restricted.homomorphism("phi")
    with pytest.raises(GroupMismatch):
        restricted.project(baumslag.default_projection, restricted.identity())


def test_factories_validate():
    with pytest.raises(ValueError):
        lamplighter_spec(0)
    with pytest.raises(ValueError):
        lamplighter_spec(1, 1)
    with pytest.raises(GroupMismatch):
        GroupSpec(Family.GKP, baumslag_localization())
    spec = gkp_spec(("x1", "x2"), "1 + x1 + x2")
    assert spec.ring.pivot == 0


def test_element_mismatch(restricted, lamp_z2):
    with pytest.raises(GroupMismatch):
        restricted.multiply(restricted.identity(), lamp_z2.identity())


def test_index_finds_equal_elements(restricted):
    index = restricted.index()
    a = restricted.monomial_conjugate((0, 1, 0))
    b = restricted.word_to_elem(["Y1", "d", "y1", "d"])
    assert index.add(a) is None
    assert index.find(b) is not None


def test_describe_elem(lamp_z2):
    g = lamp_z2.word_to_elem(["X1", "d"])
    assert lamp_z2.describe_elem(g) == {"upper": "x1", "exps": [1]}
    assert upper_poly(lamp_z2, g) == lamp_z2.ring.monomial((1,))
