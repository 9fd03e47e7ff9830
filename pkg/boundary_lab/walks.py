"""
Random walks on the configured groups.

Trials draw their randomness from ``numpy`` generators seeded in counter mode:
trial ``t`` of master seed ``s`` uses ``SeedSequence(s, spawn_key=(t,))``, so a
trial's path does not depend on how many trials run or on which worker runs
it.

Experiments only need the diagonal exponents of the positions and whether an
increment is one of the two elements of a delta pair, so the bulk statistics
are computed on exponent arrays; full group elements are multiplied out only
for endpoints and the swap check.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from vmodule import VLOG_1, VLOG_2

from .cube import DeltaPair, make_delta_pair, sublattice_moduli
from .groups import GroupElem, GroupSpec, Homomorphism
from .runner import Runner

LOG = logging.getLogger(__name__)

SWAP_CAP = 12
MAX_CONVOLUTION = 10**6
CSV_COLUMNS = ("seed", "trial", "n", "k_n", "fresh_visits", "delta_steps", "range_count")


class SearchBudgetExhausted(ValueError):
    pass


class SwapCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    word: Tuple[str, ...]
    probability: Fraction


@dataclass(frozen=True)
class Measure:
    """
    A finitely supported probability measure; each atom is a generator word.
    """

    atoms: Tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("a measure needs at least one atom")
        for a in self.atoms:
            if a.probability <= 0:
                raise ValueError(f"atom {' '.join(a.word)} has probability {a.probability}")
        total = sum((a.probability for a in self.atoms), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def uniform(cls, spec: GroupSpec) -> "Measure":
        names = spec.signed_generator_names
        p = Fraction(1, len(names))
        return cls(tuple(Atom((name,), p) for name in names))

    @classmethod
    def point_mass(cls, word: Sequence[str]) -> "Measure":
        return cls((Atom(tuple(word), Fraction(1)),))

    @property
    def base(self) -> "Measure":
        return self

    @property
    def max_power(self) -> int:
        return 1

    def elements(self, spec: GroupSpec) -> List[GroupElem]:
        return [spec.word_to_elem(a.word) for a in self.atoms]

    def mass_of(self, spec: GroupSpec, g: GroupElem) -> Fraction:
        return _power_mass(spec, self, 1, g)

    def delta_masses(self, spec: GroupSpec, pair: DeltaPair) -> Tuple[Fraction, Fraction]:
        return self.mass_of(spec, pair.delta1), self.mass_of(spec, pair.delta2)

    def to_json(self) -> Dict[str, object]:
        return {"atoms": [{"word": list(a.word), "weight": str(a.probability)} for a in self.atoms]}


@dataclass(frozen=True)
class AffineCombination:
    """
    ``sum_j w_j mu^(*j)``: a step picks ``j`` with probability ``w_j`` and
    takes ``j`` steps of ``base``.
    """

    base: Measure
    weights: Tuple[Tuple[int, Fraction], ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("an affine combination needs at least one power")
        for j, w in self.weights:
            if j < 0 or w <= 0:
                raise ValueError(f"bad power/weight {j}: {w}")
        total = sum((w for _, w in self.weights), Fraction(0))
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")

    @property
    def max_power(self) -> int:
        return max(j for j, _ in self.weights)

    def mass_of(self, spec: GroupSpec, g: GroupElem) -> Fraction:
        return sum(
            (w * _power_mass(spec, self.base, j, g) for j, w in self.weights), Fraction(0)
        )

    def delta_masses(self, spec: GroupSpec, pair: DeltaPair) -> Tuple[Fraction, Fraction]:
        return self.mass_of(spec, pair.delta1), self.mass_of(spec, pair.delta2)

    def to_json(self) -> Dict[str, object]:
        out = self.base.to_json()
        out["powers"] = {str(j): str(w) for j, w in self.weights}
        return out


StepLaw = Union[Measure, AffineCombination]


def _power_mass(spec: GroupSpec, mu: Measure, j: int, g: GroupElem) -> Fraction:
    """
    ``mu^(*j)(g)`` by enumerating atom sequences.
    """
    if len(mu.atoms) ** j > MAX_CONVOLUTION:
        raise ValueError(f"mu^{j} has too many atom sequences to enumerate")
    elems = mu.elements(spec)
    total = Fraction(0)

    def visit(depth: int, prefix: GroupElem, p: Fraction) -> None:
        nonlocal total
        if depth == j:
            if spec.equals(prefix, g):
                total += p
            return
        for a, e in zip(mu.atoms, elems):
            visit(depth + 1, spec.multiply(prefix, e), p * a.probability)

    visit(0, spec.identity(), Fraction(1))
    return total


def two_point_entropy(m1: Fraction, m2: Fraction) -> float:
    """
    The entropy of the two-point measure proportional to ``(m1, m2)``.
    """
    if m1 + m2 == 0:
        raise ValueError("the delta pair has no mass")
    h = 0.0
    for m in (m1, m2):
        if m:
            q = float(m / (m1 + m2))
            h -= q * math.log(q)
    return h


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


class _Sampler:
    def __init__(self, spec: GroupSpec, mu: StepLaw) -> None:
        self.spec = spec
        self.mu = mu
        base = mu.base
        self.atom_elems = base.elements(spec)
        self.atom_exps = np.array([e.exps for e in self.atom_elems], dtype=np.int64).reshape(
            len(self.atom_elems), spec.rank
        )
        p = np.array([float(a.probability) for a in base.atoms])
        self.atom_p = p / p.sum()
        if isinstance(mu, AffineCombination):
            self.powers: Optional[np.ndarray] = np.array([j for j, _ in mu.weights])
            w = np.array([float(w) for _, w in mu.weights])
            self.power_p = w / w.sum()
        else:
            self.powers = None
        self._products: Dict[Tuple[int, ...], GroupElem] = {}

    def draw(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Atoms per step and the flat sequence of atom draws.
        """
        if self.powers is None:
            counts = np.ones(n, dtype=np.int64)
        else:
            counts = self.powers[rng.choice(len(self.powers), size=n, p=self.power_p)]
        draws = rng.choice(len(self.atom_elems), size=int(counts.sum()), p=self.atom_p)
        return counts, draws

    def positions(self, counts: np.ndarray, draws: np.ndarray) -> np.ndarray:
        """
        Exponent vectors of X_0 .. X_n, one row each.
        """
        flat = np.zeros((len(draws) + 1, self.spec.rank), dtype=np.int64)
        if len(draws):
            np.cumsum(self.atom_exps[draws], axis=0, out=flat[1:])
        ends = np.concatenate([[0], np.cumsum(counts)])
        return flat[ends]

    def paths(self, counts: np.ndarray, draws: np.ndarray) -> List[Tuple[int, ...]]:
        return [tuple(int(a) for a in chunk) for chunk in np.split(draws, np.cumsum(counts)[:-1])]

    def product(self, path: Tuple[int, ...]) -> GroupElem:
        if path not in self._products:
            result = self.spec.identity()
            for a in path:
                result = self.spec.multiply(result, self.atom_elems[a])
            self._products[path] = result
        return self._products[path]


class _DeltaFlags:
    """
    Classifies step paths: 1 for delta1, 2 for delta2, else 0.
    """

    def __init__(self, sampler: _Sampler, pair: Optional[DeltaPair]) -> None:
        self.sampler = sampler
        self.pair = pair
        self._cache: Dict[Tuple[int, ...], int] = {}

    def flag(self, path: Tuple[int, ...]) -> int:
        if self.pair is None:
            return 0
        if path not in self._cache:
            g = self.sampler.product(path)
            spec = self.sampler.spec
            if spec.equals(g, self.pair.delta1):
                self._cache[path] = 1
            elif spec.equals(g, self.pair.delta2):
                self._cache[path] = 2
            else:
                self._cache[path] = 0
        return self._cache[path]

    def flags(self, paths: Sequence[Tuple[int, ...]]) -> np.ndarray:
        return np.array([self.flag(p) for p in paths], dtype=np.int8)


def first_visits(points: np.ndarray) -> np.ndarray:
    """
    True at rows whose value has not occurred in an earlier row.
    """
    mask = np.zeros(len(points), dtype=bool)
    if len(points):
        _, first = np.unique(points, axis=0, return_index=True)
        mask[first] = True
    return mask


def sublattice_mask(points: np.ndarray, moduli: Sequence[int]) -> np.ndarray:
    m = np.array([x if x > 1 else 1 for x in moduli], dtype=np.int64)
    return np.all(points % m == 0, axis=1)


def _fresh_delta_mask(
    proj: np.ndarray, flags: np.ndarray, moduli: Sequence[int]
) -> Tuple[np.ndarray, np.ndarray]:
    # proj: X_0..X_n; flags: increments 1..n
    n = len(flags)
    chi = first_visits(proj[:n]) & sublattice_mask(proj[:n], moduli)
    return chi, chi & (flags > 0)


@dataclass
class Trajectory:
    """
    ``states[i]`` is X_i with ``states[0]`` the identity, and
    ``increments[i]`` takes X_i to X_(i+1).
    """

    increments: List[GroupElem]
    states: List[GroupElem]
    paths: List[Tuple[int, ...]]
    positions: np.ndarray

    @property
    def n(self) -> int:
        return len(self.increments)

    @property
    def endpoint(self) -> GroupElem:
        return self.states[-1]


def sample_trajectory(spec: GroupSpec, mu: StepLaw, n: int, seed: int, trial: int = 0) -> Trajectory:
    if n < 1:
        raise ValueError(f"a trajectory needs at least one step, got {n}")
    sampler = _Sampler(spec, mu)
    counts, draws = sampler.draw(trial_rng(seed, trial), n)
    paths = sampler.paths(counts, draws)
    increments = [sampler.product(p) for p in paths]
    states = [spec.identity()]
    for g in increments:
        states.append(spec.multiply(states[-1], g))
    return Trajectory(increments, states, paths, sampler.positions(counts, draws))


def _trajectory_flags(spec: GroupSpec, trajectory: Trajectory, pair: DeltaPair) -> np.ndarray:
    out = []
    for g in trajectory.increments:
        if spec.equals(g, pair.delta1):
            out.append(1)
        elif spec.equals(g, pair.delta2):
            out.append(2)
        else:
            out.append(0)
    return np.array(out, dtype=np.int8)


def fresh_delta_positions(
    trajectory: Trajectory,
    pair: DeltaPair,
    lattice: Union[int, Sequence[int]],
    spec: GroupSpec,
) -> List[int]:
    """
    The ``i < n`` where X_i is in the sublattice preimage with a projection
    not seen before, and increment ``i + 1`` is in the pair.
    """
    moduli = sublattice_moduli(lattice, pair.projection.target_rank)
    proj = trajectory.positions[:, list(pair.projection.coords)]
    _, marked = _fresh_delta_mask(proj, _trajectory_flags(spec, trajectory, pair), moduli)
    return [int(i) for i in np.flatnonzero(marked)]


def fresh_delta_count(
    trajectory: Trajectory,
    pair: DeltaPair,
    lattice: Union[int, Sequence[int]],
    spec: GroupSpec,
) -> int:
    return len(fresh_delta_positions(trajectory, pair, lattice, spec))


@dataclass
class SwapCheck:
    k: int
    endpoints: int
    trial: int = 0

    @property
    def distinct(self) -> bool:
        return self.endpoints == 2**self.k

    def to_json(self) -> Dict[str, object]:
        return {"trial": self.trial, "k": self.k, "endpoints": self.endpoints, "distinct": self.distinct}


def delta_swap_check(
    spec: GroupSpec,
    trajectory: Trajectory,
    pair: DeltaPair,
    lattice: Union[int, Sequence[int]],
    cap: int = SWAP_CAP,
) -> SwapCheck:
    """
    Re-run the trajectory with each fresh delta increment set to delta1 or
    delta2 in all ``2^k`` ways and count distinct endpoints.
    """
    marked = fresh_delta_positions(trajectory, pair, lattice, spec)
    k = len(marked)
    if k > cap:
        raise SwapCapExceeded(f"{k} marked positions exceeds the swap cap of {cap}")
    bounds = [0] + [i for i in marked] + [trajectory.n]
    segments = []
    for j in range(k + 1):
        lo = bounds[j] if j == 0 else bounds[j] + 1
        seg = spec.identity()
        for g in trajectory.increments[lo : bounds[j + 1]]:
            seg = spec.multiply(seg, g)
        segments.append(seg)

    index = spec.index()
    count = 0

    def visit(j: int, prefix: GroupElem) -> None:
        nonlocal count
        if j == k:
            if index.add(prefix) is None:
                count += 1
            return
        for delta in (pair.delta1, pair.delta2):
            visit(j + 1, spec.multiply(spec.multiply(prefix, delta), segments[j + 1]))

    visit(0, segments[0])
    LOG.log(VLOG_1, "%d swaps give %d distinct endpoints", k, count)
    return SwapCheck(k, count)


@dataclass
class _SwapTask:
    spec: GroupSpec
    mu: StepLaw
    pair: DeltaPair
    lattice: Union[int, Tuple[int, ...]]
    n: int
    seed: int
    trial: int
    cap: int


def _run_swap(task: _SwapTask) -> Union[SwapCheck, SwapCapExceeded]:
    traj = sample_trajectory(task.spec, task.mu, task.n, task.seed, task.trial)
    try:
        check = delta_swap_check(task.spec, traj, task.pair, task.lattice, task.cap)
    except SwapCapExceeded as e:
        return e
    check.trial = task.trial
    return check


def swap_checks(
    spec: GroupSpec,
    mu: StepLaw,
    pair: DeltaPair,
    n: int,
    trials: int,
    seed: int,
    lattice: Union[int, Sequence[int]] = 1,
    cap: int = SWAP_CAP,
    runner: Optional[Runner] = None,
) -> List[SwapCheck]:
    """
    ``delta_swap_check`` on the length-``n`` trajectory of each trial, the
    same trajectories ``run_experiment`` samples.  Trials over the cap are
    logged and left out.
    """
    lattice = lattice if isinstance(lattice, int) else tuple(lattice)
    tasks = [_SwapTask(spec, mu, pair, lattice, n, seed, t, cap) for t in range(trials)]
    checks = []
    for t, result in enumerate((runner or Runner(1)).map(_run_swap, tasks)):
        if isinstance(result, SwapCapExceeded):
            LOG.warning("trial %d: %s", t, result)
            continue
        checks.append(result)
    return checks


def build_delta_pair_via_semigroup(
    mu: StepLaw,
    spec: GroupSpec,
    max_length: int = 3,
    projection: Optional[Homomorphism] = None,
) -> Tuple[AffineCombination, DeltaPair]:
    """
    Find non-commuting ``s``, ``s'`` among products of support atoms and
    return ``(1/2 mu + 1/2 mu^(a+b), {s s', s' s})`` for word lengths ``a``
    and ``b``.
    """
    base = mu.base
    elems = base.elements(spec)
    words: List[Tuple[Tuple[int, ...], GroupElem]] = []
    for length in range(1, max_length + 1):
        for path in itertools.product(range(len(elems)), repeat=length):
            g = spec.identity()
            for a in path:
                g = spec.multiply(g, elems[a])
            words.append((path, g))
        for (p1, s1), (p2, s2) in itertools.combinations(words, 2):
            d1 = spec.multiply(s1, s2)
            d2 = spec.multiply(s2, s1)
            if spec.equals(d1, d2):
                continue
            LOG.info(
                "delta pair from %s and %s",
                " ".join(base.atoms[a].word[0] for a in p1),
                " ".join(base.atoms[a].word[0] for a in p2),
            )
            pair = make_delta_pair(spec, d1, d2, projection)
            power = len(p1) + len(p2)
            weights = ((1, Fraction(1, 2)), (power, Fraction(1, 2)))
            return AffineCombination(base, weights), pair
    raise SearchBudgetExhausted(
        f"support products up to length {max_length} all commute"
    )


@dataclass
class EndpointEntropy:
    plug_in: float
    miller_madow: float
    distinct: int
    trials: int

    def to_json(self) -> Dict[str, object]:
        return {
            "plug_in": self.plug_in,
            "miller_madow": self.miller_madow,
            "distinct": self.distinct,
            "trials": self.trials,
        }


def entropy_from_counts(counts: Sequence[int]) -> EndpointEntropy:
    c = np.asarray(counts, dtype=np.int64)
    total = int(c.sum())
    if total == 0:
        raise ValueError("no samples")
    p = c[c > 0] / total
    h = float(-np.sum(p * np.log(p)))
    distinct = int(p.size)
    return EndpointEntropy(h, h + (distinct - 1) / (2 * total), distinct, total)


@dataclass
class WalkStats:
    n: int
    trials: int
    fresh_delta_counts: List[int]
    fresh_visits: List[int]
    delta_steps: List[int]
    range_counts: List[int]
    h_nu: float
    delta_mass: float
    endpoint_entropy: Optional[EndpointEntropy] = None

    @property
    def mean_rate(self) -> float:
        return float(np.mean(self.fresh_delta_counts)) / self.n

    @property
    def lower_bound_rate(self) -> float:
        return delta_restriction_lower_bound(self)

    @property
    def range_fraction(self) -> float:
        return float(np.mean(self.range_counts)) / self.n

    def to_json(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "trials": self.trials,
            "mean_rate": self.mean_rate,
            "h_nu": self.h_nu,
            "lower_bound_rate": self.lower_bound_rate,
            "range_fraction": self.range_fraction,
            "delta_mass": self.delta_mass,
            "delta_ratio": delta_ratio(self),
            "endpoint_entropy": (
                self.endpoint_entropy.to_json() if self.endpoint_entropy else None
            ),
        }


def delta_restriction_lower_bound(stats: WalkStats) -> float:
    return stats.mean_rate * stats.h_nu


def delta_ratio(stats: WalkStats) -> Optional[float]:
    """
    Fresh delta steps per fresh visit; its expectation is the mass of the
    pair.
    """
    visits = sum(stats.fresh_visits)
    if not visits:
        return None
    return sum(stats.fresh_delta_counts) / visits


@dataclass
class _TrialTask:
    spec: GroupSpec
    mu: StepLaw
    pair: Optional[DeltaPair]
    coords: Tuple[int, ...]
    moduli: Tuple[int, ...]
    ns: Tuple[int, ...]
    seed: int
    trial: int
    endpoint: bool = False


@dataclass
class TrialResult:
    trial: int
    k_n: List[int]
    fresh_visits: List[int]
    delta_steps: List[int]
    range_count: List[int]
    endpoints: List[GroupElem] = field(default_factory=list)


def _run_trial(task: _TrialTask) -> TrialResult:
    sampler = _Sampler(task.spec, task.mu)
    n_max = max(task.ns)
    counts, draws = sampler.draw(trial_rng(task.seed, task.trial), n_max)
    paths = sampler.paths(counts, draws)
    flags = _DeltaFlags(sampler, task.pair).flags(paths)
    proj = sampler.positions(counts, draws)[:, list(task.coords)]

    chi, chi_delta = _fresh_delta_mask(proj, flags, task.moduli)
    visits = np.cumsum(chi)
    marked = np.cumsum(chi_delta)
    steps = np.cumsum(flags > 0)
    ranged = np.cumsum(first_visits(proj[1:]))
    idx = [n - 1 for n in task.ns]

    endpoints: List[GroupElem] = []
    if task.endpoint:
        wanted = set(task.ns)
        x = task.spec.identity()
        for i, path in enumerate(paths, 1):
            x = task.spec.multiply(x, sampler.product(path))
            if i in wanted:
                endpoints.append(x)
    LOG.log(VLOG_2, "trial %d: k_n %s", task.trial, marked[idx].tolist())
    return TrialResult(
        task.trial,
        [int(marked[i]) for i in idx],
        [int(visits[i]) for i in idx],
        [int(steps[i]) for i in idx],
        [int(ranged[i]) for i in idx],
        endpoints,
    )


def _endpoint_entropy(spec: GroupSpec, endpoints: Sequence[GroupElem], seed: int) -> EndpointEntropy:
    index = spec.index(seed)
    counts: Dict[int, int] = {}
    for x in endpoints:
        hit = index.add(x)
        key = id(hit if hit is not None else x)
        counts[key] = counts.get(key, 0) + 1
    return entropy_from_counts(list(counts.values()))


@dataclass
class Experiment:
    rows: List[Dict[str, int]]
    stats: List[WalkStats]


def run_experiment(
    spec: GroupSpec,
    mu: StepLaw,
    ns: Sequence[int],
    trials: int,
    seed: int,
    pair: Optional[DeltaPair] = None,
    lattice: Union[int, Sequence[int]] = 1,
    projection: Optional[Homomorphism] = None,
    endpoint_entropy: bool = False,
    runner: Optional[Runner] = None,
) -> Experiment:
    """
    One trajectory of length ``max(ns)`` per trial; every ``n`` in ``ns``
    reads statistics off its prefix.
    """
    if not ns or min(ns) < 1:
        raise ValueError(f"step counts must be positive, got {list(ns)}")
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    ns = tuple(sorted(set(ns)))
    if pair is not None:
        projection = pair.projection
    projection = projection or spec.default_projection
    moduli = sublattice_moduli(lattice, projection.target_rank)

    if pair is not None:
        m1, m2 = mu.delta_masses(spec, pair)
        h_nu = two_point_entropy(m1, m2)
        mass = float(m1 + m2)
    else:
        h_nu, mass = 0.0, 0.0
    LOG.info("walk on %r, n %s, %d trials, h(nu) %.4f", spec, list(ns), trials, h_nu)

    tasks = [
        _TrialTask(spec, mu, pair, projection.coords, moduli, ns, seed, t, endpoint_entropy)
        for t in range(trials)
    ]
    results = (runner or Runner(1)).map(_run_trial, tasks)

    rows: List[Dict[str, int]] = []
    for j, n in enumerate(ns):
        for r in results:
            rows.append(
                {
                    "seed": seed,
                    "trial": r.trial,
                    "n": n,
                    "k_n": r.k_n[j],
                    "fresh_visits": r.fresh_visits[j],
                    "delta_steps": r.delta_steps[j],
                    "range_count": r.range_count[j],
                }
            )
    stats = []
    for j, n in enumerate(ns):
        ee = None
        if endpoint_entropy:
            ee = _endpoint_entropy(spec, [r.endpoints[j] for r in results], seed)
        stats.append(
            WalkStats(
                n,
                trials,
                [r.k_n[j] for r in results],
                [r.fresh_visits[j] for r in results],
                [r.delta_steps[j] for r in results],
                [r.range_count[j] for r in results],
                h_nu,
                mass,
                ee,
            )
        )
    return Experiment(rows, stats)


def endpoint_entropy_estimate(
    spec: GroupSpec,
    mu: StepLaw,
    n: int,
    trials: int,
    seed: int,
    runner: Optional[Runner] = None,
) -> EndpointEntropy:
    """
    Plug-in and Miller-Madow entropy of the empirical endpoint law; biased
    low when the endpoint law is spread over many more points than trials.
    """
    exp = run_experiment(spec, mu, [n], trials, seed, endpoint_entropy=True, runner=runner)
    ee = exp.stats[0].endpoint_entropy
    assert ee is not None
    return ee


def range_stats(
    spec: GroupSpec,
    mu: StepLaw,
    projection: Homomorphism,
    n: int,
    trials: int,
    seed: int,
    runner: Optional[Runner] = None,
) -> float:
    """
    Mean fraction of distinct projected positions among X_1 .. X_n.
    """
    exp = run_experiment(spec, mu, [n], trials, seed, projection=projection, runner=runner)
    return exp.stats[0].range_fraction
