"""
Loading of group, measure, block and experiment files.

Everything here serves the command line, so bad input is reported as
``click.ClickException``.  A name that is not an existing path is looked up
among the example files shipped in ``boundary_lab/data``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import tomlkit
from click import ClickException
from tomlkit.exceptions import TOMLKitError

from .blocks import BlockInput, UTMatrix
from .groups import (
    baumslag_spec,
    Family,
    gkp_spec,
    GroupSpec,
    Homomorphism,
    lamplighter_spec,
)
from .laurent import Context, exact_divide, LaurentPoly, parse, serialize
from .quotient import SinglePoly
from .walks import AffineCombination, Atom, Measure, StepLaw

LOG = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"


def resolve_data_path(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    for candidate in (DATA_DIR / value, DATA_DIR / f"{value}.json"):
        if candidate.exists():
            LOG.info("Using packaged %s", candidate.name)
            return candidate
    raise ClickException(f"{value}: no such file or packaged example")


def read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ClickException(f"{path}: {e}") from None


def parse_int_list(text: str, what: str = "list") -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ClickException(f"bad {what} {text!r}: expected comma-separated integers") from None


def _fraction(value: Any) -> Fraction:
    if isinstance(value, float):
        raise ValueError(f"weight {value} must be an integer or a fraction string")
    return Fraction(value)


def parse_measure(obj: Optional[Mapping[str, Any]], spec: GroupSpec) -> StepLaw:
    """
    ``{"atoms": [{"word": [...], "weight": "1/8"}], "powers": {"1": "1/2"}}``;
    missing atoms mean uniform on the generators and their inverses.
    """
    if not obj:
        return Measure.uniform(spec)
    raw_atoms = obj.get("atoms")
    if raw_atoms:
        atoms = []
        for a in raw_atoms:
            word = tuple(a["word"])
            spec.word_to_elem(word)
            atoms.append(Atom(word, _fraction(a["weight"])))
        base = Measure(tuple(atoms))
    else:
        base = Measure.uniform(spec)
    powers = obj.get("powers")
    if not powers:
        return base
    weights = tuple(sorted((int(j), _fraction(w)) for j, w in powers.items()))
    return AffineCombination(base, weights)


@dataclass
class GroupConfig:
    spec: GroupSpec
    measure: Optional[StepLaw] = None
    lattice: Optional[Tuple[int, ...]] = None
    projection: Optional[str] = None

    @property
    def step_law(self) -> StepLaw:
        return self.measure or Measure.uniform(self.spec)

    @property
    def homomorphism(self) -> Homomorphism:
        if self.projection is None:
            return self.spec.default_projection
        return self.spec.homomorphism(self.projection)


def reducible_factor(p: LaurentPoly) -> Optional[LaurentPoly]:
    """
    A factor ``x_i - 1`` or ``x_i + 1`` of ``p`` other than ``p`` itself, if
    there is one.  Relations are assumed irreducible and this only catches
    the common slips.
    """
    for i in p.variables_used():
        x = LaurentPoly.variable(p.ctx, i)
        for candidate in (x - 1, x + 1):
            if p in (candidate, -candidate):
                continue
            if exact_divide(p, candidate) is not None:
                return candidate
    return None


def spec_from_json(obj: Mapping[str, Any], name: str = "") -> GroupConfig:
    try:
        family = Family(obj["family"])
        name = obj.get("name", name)
        if family == Family.LAMPLIGHTER:
            spec = lamplighter_spec(int(obj.get("base_rank", 1)), int(obj.get("lamp", 0)), name)
        elif family == Family.BAUMSLAG:
            spec = baumslag_spec(name or "baumslag-tf")
        else:
            spec = gkp_spec(obj["vars"], obj.get("relation"), obj.get("pivot"), name)
        if isinstance(spec.ring, SinglePoly):
            factor = reducible_factor(spec.ring.relation)
            if factor is not None:
                LOG.warning(
                    "relation %s is divisible by %s; quotient is not a domain",
                    serialize(spec.ring.relation),
                    serialize(factor),
                )
        if "aliases" in obj:
            spec.aliases = dict(obj["aliases"])
        measure = parse_measure(obj.get("measure"), spec) if obj.get("measure") else None
        lattice = tuple(obj["lattice"]) if obj.get("lattice") is not None else None
        projection = obj.get("projection")
        if projection is not None:
            spec.homomorphism(projection)
    except (KeyError, TypeError, ValueError) as e:
        raise ClickException(f"invalid group config {name!r}: {e}") from None
    return GroupConfig(spec, measure, lattice, projection)


def dump_spec(config: GroupConfig) -> Dict[str, Any]:
    spec = config.spec
    out: Dict[str, Any] = {"family": spec.family.value, "name": spec.name}
    if spec.family == Family.LAMPLIGHTER:
        out["base_rank"] = spec.rank
        out["lamp"] = spec.lamp
    elif spec.family == Family.GKP:
        out["vars"] = list(spec.ring.ctx.vars)
        if isinstance(spec.ring, SinglePoly):
            out["relation"] = serialize(spec.ring.relation)
            out["pivot"] = spec.ring.ctx.vars[spec.ring.pivot]
        else:
            out["relation"] = None
            out["pivot"] = None
    if spec.aliases:
        out["aliases"] = dict(spec.aliases)
    out["measure"] = config.measure.to_json() if config.measure else None
    out["lattice"] = list(config.lattice) if config.lattice is not None else None
    out["projection"] = config.projection
    return out


def load_group(value: str) -> GroupConfig:
    path = resolve_data_path(value)
    config = spec_from_json(read_json(path), path.stem)
    LOG.info("Loaded group %r from %s", config.spec, path)
    return config


def load_block_input(value: str) -> BlockInput:
    """
    ``{"vars": [...], "generators": [{"name": ..., "rows": [[...]]}],
    "values": {"vars": [...], "map": {var: poly}}}``
    """
    path = resolve_data_path(value)
    obj = read_json(path)
    try:
        ctx = Context(tuple(obj["vars"]))
        names: List[str] = []
        generators = []
        for g in obj["generators"]:
            names.append(g["name"])
            rows = [[parse(str(entry), ctx) for entry in row] for row in g["rows"]]
            generators.append(UTMatrix(ctx, rows))
        values = None
        if obj.get("values"):
            vctx = Context(tuple(obj["values"]["vars"]))
            values = {k: parse(v, vctx) for k, v in obj["values"]["map"].items()}
        return BlockInput(ctx, names, generators, values)
    except (KeyError, TypeError, ValueError) as e:
        raise ClickException(f"{path}: invalid block input: {e}") from None


@dataclass
class ExperimentConfig:
    group: Optional[str] = None
    n: Tuple[int, ...] = ()
    trials: int = 1
    seed: Optional[int] = None
    csv: Optional[str] = None
    json: Optional[str] = None
    lattice: Optional[Tuple[int, ...]] = None
    endpoint_entropy: bool = False

    def merged(self, **overrides: Any) -> "ExperimentConfig":
        """
        Command-line values that were given replace file values.
        """
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def validate(self) -> None:
        if self.group is None:
            raise ClickException("no group given (--group or 'group' in the config file)")
        if not self.n or min(self.n) < 1:
            raise ClickException("step counts must be positive integers")
        if self.trials < 1:
            raise ClickException("trials must be positive")
        if self.seed is None:
            raise ClickException("a seed is required (--seed or 'seed' in the config file)")


def _tuple(value: Any) -> Optional[Tuple[int, ...]]:
    if value is None:
        return None
    if isinstance(value, int):
        return (value,)
    if isinstance(value, str):
        return parse_int_list(value)
    return tuple(int(x) for x in value)


def load_experiment_config(path: str) -> ExperimentConfig:
    try:
        doc = tomlkit.parse(Path(path).read_text()).unwrap()
    except (OSError, TOMLKitError) as e:
        raise ClickException(f"{path}: {e}") from None
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ClickException(f"{path}: unknown keys {', '.join(unknown)}")
    try:
        return ExperimentConfig(
            group=doc.get("group"),
            n=_tuple(doc.get("n")) or (),
            trials=int(doc.get("trials", 1)),
            seed=doc.get("seed"),
            csv=doc.get("csv"),
            json=doc.get("json"),
            lattice=_tuple(doc.get("lattice")),
            endpoint_entropy=bool(doc.get("endpoint_entropy", False)),
        )
    except (TypeError, ValueError) as e:
        raise ClickException(f"{path}: {e}") from None


def dump_experiment_config(config: ExperimentConfig) -> str:
    doc = tomlkit.document()
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        doc[f.name] = list(value) if isinstance(value, tuple) else value
    return tomlkit.dumps(doc)


def lattice_for(config: GroupConfig, override: Optional[Sequence[int]]) -> Tuple[int, ...]:
    rank = config.homomorphism.target_rank
    if override is not None:
        lattice = tuple(override)
    elif config.lattice is not None:
        lattice = config.lattice
    else:
        lattice = (1,) * rank
    if len(lattice) == 1 and rank > 1:
        lattice = lattice * rank
    if len(lattice) != rank:
        raise ClickException(f"lattice {list(lattice)} needs {rank} moduli")
    return lattice
