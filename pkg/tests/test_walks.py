import math
from fractions import Fraction

import numpy as np
import pytest

from boundary_lab.groups import lamplighter_spec
from boundary_lab.runner import Runner
from boundary_lab.walks import (
    AffineCombination,
    Atom,
    build_delta_pair_via_semigroup,
    delta_ratio,
    delta_swap_check,
    endpoint_entropy_estimate,
    entropy_from_counts,
    first_visits,
    fresh_delta_count,
    Measure,
    range_stats,
    run_experiment,
    sample_trajectory,
    SearchBudgetExhausted,
    sublattice_mask,
    swap_checks,
    trial_rng,
    two_point_entropy,
)


def test_measure_validation():
    with pytest.raises(ValueError):
        Measure(())
    with pytest.raises(ValueError):
        Measure((Atom(("d",), Fraction(1, 2)),))
    with pytest.raises(ValueError):
        Measure((Atom(("d",), Fraction(3, 2)), Atom(("D",), Fraction(-1, 2))))
    assert Measure.point_mass(["d", "X1"]).atoms[0].probability == 1


def test_masses(restricted):
    mu = Measure.uniform(restricted)
    assert mu.mass_of(restricted, restricted.generator("d")) == Fraction(1, 8)
    assert mu.mass_of(restricted, restricted.identity()) == 0

    spec = lamplighter_spec(1)
    mu = Measure.uniform(spec)
    nu = AffineCombination(mu, ((1, Fraction(1, 2)), (2, Fraction(1, 2))))
    # four ways to step and step back
    assert nu.mass_of(spec, spec.identity()) == Fraction(1, 8)
    assert nu.max_power == 2
    assert nu.to_json()["powers"] == {"1": "1/2", "2": "1/2"}
    with pytest.raises(ValueError):
        AffineCombination(mu, ((1, Fraction(1, 3)),))
    with pytest.raises(ValueError):
        AffineCombination(mu, ())


def test_two_point_entropy():
    assert two_point_entropy(Fraction(1, 16), Fraction(1, 16)) == pytest.approx(math.log(2))
    assert two_point_entropy(Fraction(1, 4), Fraction(0)) == 0
    with pytest.raises(ValueError):
        two_point_entropy(Fraction(0), Fraction(0))


def test_trial_rng_is_reproducible():
    a = trial_rng(7, 3).integers(0, 1000, size=10)
    b = trial_rng(7, 3).integers(0, 1000, size=10)
    c = trial_rng(7, 4).integers(0, 1000, size=10)
    assert (a == b).all()
    assert not (a == c).all()


def test_trajectory_positions_match_states(restricted):
    mu = Measure.uniform(restricted)
    traj = sample_trajectory(restricted, mu, 60, seed=2)
    assert traj.n == 60
    assert len(traj.states) == 61
    for row, state in zip(traj.positions, traj.states):
        assert tuple(int(x) for x in row) == state.exps
    again = sample_trajectory(restricted, mu, 60, seed=2)
    assert restricted.equals(traj.endpoint, again.endpoint)
    with pytest.raises(ValueError):
        sample_trajectory(restricted, mu, 0, seed=2)


def test_semigroup_pair(lamp_z2):
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(lamp_z2), lamp_z2)
    assert nu.weights == ((1, Fraction(1, 2)), (2, Fraction(1, 2)))
    assert lamp_z2.equals(pair.delta1, lamp_z2.word_to_elem(["d", "X1"]))
    assert lamp_z2.equals(pair.delta2, lamp_z2.word_to_elem(["X1", "d"]))
    # d and D agree when lamps have order two
    assert nu.delta_masses(lamp_z2, pair) == (Fraction(1, 16), Fraction(1, 16))


def test_semigroup_pair_needs_non_commuting_support(restricted):
    with pytest.raises(SearchBudgetExhausted):
        build_delta_pair_via_semigroup(Measure.point_mass(["d"]), restricted)


def test_run_experiment(lamp_z2):
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(lamp_z2), lamp_z2)
    exp = run_experiment(lamp_z2, nu, [50, 100], trials=3, seed=11, pair=pair)
    assert len(exp.rows) == 6
    assert [r["n"] for r in exp.rows] == [50, 50, 50, 100, 100, 100]
    for r in exp.rows:
        assert 0 <= r["k_n"] <= r["delta_steps"] <= r["n"]
        assert r["k_n"] <= r["fresh_visits"] <= r["n"]
        assert r["range_count"] <= r["n"]
    for small, big in zip(exp.rows[:3], exp.rows[3:]):
        assert small["trial"] == big["trial"]
        assert small["k_n"] <= big["k_n"]
    stats = exp.stats[0]
    assert stats.h_nu == pytest.approx(math.log(2))
    assert stats.delta_mass == pytest.approx(0.125)
    assert stats.lower_bound_rate == pytest.approx(stats.mean_rate * stats.h_nu)
    assert set(stats.to_json()) >= {"mean_rate", "h_nu", "lower_bound_rate", "delta_ratio"}


def test_run_experiment_matches_trajectory(lamp_z2):
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(lamp_z2), lamp_z2)
    exp = run_experiment(lamp_z2, nu, [80], trials=2, seed=3, pair=pair)
    for trial in (0, 1):
        traj = sample_trajectory(lamp_z2, nu, 80, seed=3, trial=trial)
        assert exp.rows[trial]["k_n"] == fresh_delta_count(traj, pair, 1, lamp_z2)


def test_run_experiment_independent_of_workers(lamp_z2):
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(lamp_z2), lamp_z2)
    serial = run_experiment(lamp_z2, nu, [40], trials=4, seed=9, pair=pair)
    parallel = run_experiment(lamp_z2, nu, [40], trials=4, seed=9, pair=pair, runner=Runner(2))
    assert serial.rows == parallel.rows


def test_run_experiment_validation(lamp_z2):
    mu = Measure.uniform(lamp_z2)
    with pytest.raises(ValueError):
        run_experiment(lamp_z2, mu, [], trials=1, seed=0)
    with pytest.raises(ValueError):
        run_experiment(lamp_z2, mu, [0, 5], trials=1, seed=0)
    with pytest.raises(ValueError):
        run_experiment(lamp_z2, mu, [5], trials=0, seed=0)


def test_swap_check(lamp_z2):
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(lamp_z2), lamp_z2)
    traj = sample_trajectory(lamp_z2, nu, 300, seed=1)
    check = delta_swap_check(lamp_z2, traj, pair, 1, cap=20)
    assert check.k == fresh_delta_count(traj, pair, 1, lamp_z2)
    assert check.distinct
    with pytest.raises(ValueError):
        delta_swap_check(lamp_z2, traj, pair, 1, cap=-1)


def test_swap_checks_across_trials(lamp_z2, caplog):
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(lamp_z2), lamp_z2)
    serial = swap_checks(lamp_z2, nu, pair, 120, trials=4, seed=6)
    assert serial == swap_checks(lamp_z2, nu, pair, 120, trials=4, seed=6, runner=Runner(2))
    assert [c.trial for c in serial] == [0, 1, 2, 3]
    for check in serial:
        traj = sample_trajectory(lamp_z2, nu, 120, seed=6, trial=check.trial)
        assert check.k == fresh_delta_count(traj, pair, 1, lamp_z2)
        assert check.distinct
    assert serial[0].to_json()["endpoints"] == 2 ** serial[0].k

    assert swap_checks(lamp_z2, nu, pair, 120, trials=2, seed=6, cap=-1) == []
    assert caplog.text.count("exceeds the swap cap of -1") == 2


def test_delta_ratio_matches_pair_mass(restricted):
    # each fresh visit is followed by a delta step with probability m,
    # independently of the past
    nu, pair = build_delta_pair_via_semigroup(Measure.uniform(restricted), restricted)
    exp = run_experiment(restricted, nu, [2000], trials=20, seed=13, pair=pair)
    stats = exp.stats[0]
    visits = sum(stats.fresh_visits)
    m = stats.delta_mass
    assert 0 < m < 1
    sigma = math.sqrt(m * (1 - m) / visits)
    assert abs(delta_ratio(stats) - m) <= 3 * sigma


def test_first_visits_and_mask():
    points = np.array([[0, 0], [3, 0], [0, 0], [3, 1]])
    assert first_visits(points).tolist() == [True, True, False, True]
    assert sublattice_mask(points, (3, 0)).tolist() == [True, True, True, True]
    assert sublattice_mask(points, (3, 3)).tolist() == [True, True, True, False]
    assert first_visits(np.zeros((0, 2), dtype=np.int64)).tolist() == []


def test_entropy_from_counts():
    ee = entropy_from_counts([2, 2, 0])
    assert ee.plug_in == pytest.approx(math.log(2))
    assert ee.miller_madow == pytest.approx(math.log(2) + 1 / 8)
    assert (ee.distinct, ee.trials) == (2, 4)
    ee = entropy_from_counts(np.ones(50, dtype=int))
    assert ee.plug_in == pytest.approx(math.log(50))
    assert ee.miller_madow == pytest.approx(math.log(50) + 49 / 100)
    assert entropy_from_counts([0, 7, 0]).plug_in == 0
    with pytest.raises(ValueError):
        entropy_from_counts([0])


def test_endpoint_entropy(lamp_z2):
    ee = endpoint_entropy_estimate(lamp_z2, Measure.uniform(lamp_z2), 6, trials=40, seed=1)
    assert ee.trials == 40
    assert 1 < ee.distinct <= 40
    assert 0 < ee.plug_in <= math.log(40)


def test_range_on_z3_is_positive():
    spec = lamplighter_spec(3)
    fraction = range_stats(spec, Measure.uniform(spec), spec.default_projection, 400, 4, seed=5)
    assert 0.2 < fraction <= 1


def test_range_rate_is_stable_across_n():
    # transient base: fresh points grow linearly, so the rate settles
    spec = lamplighter_spec(3)
    exp = run_experiment(spec, Measure.uniform(spec), [400, 1600], trials=6, seed=9)
    short, long = (s.range_fraction for s in exp.stats)
    assert long > 0.2
    assert abs(short - long) < 0.1
