from fractions import Fraction

import pytest
from click import ClickException

from boundary_lab.config import (
    dump_experiment_config,
    dump_spec,
    ExperimentConfig,
    lattice_for,
    load_experiment_config,
    load_group,
    parse_int_list,
    parse_measure,
    reducible_factor,
    resolve_data_path,
    spec_from_json,
)
from boundary_lab.groups import Family
from boundary_lab.laurent import Context, parse
from boundary_lab.walks import AffineCombination, Measure


def test_packaged_groups():
    config = load_group("g3-restricted")
    assert config.spec.name == "g3-restricted"
    assert config.spec.generator("Y1") == config.spec.generator("X1")
    assert config.lattice == (3, 3, 3)
    assert lattice_for(config, None) == (3, 3, 3)

    config = load_group("g3-baumslag")
    assert config.spec.family == Family.GKP
    assert config.measure.mass_of(config.spec, config.spec.generator("d")) == Fraction(1, 4)

    config = load_group("baumslag-tf.json")
    assert config.spec.family == Family.BAUMSLAG
    assert config.homomorphism.name == "phi"
    assert lattice_for(config, None) == (3, 3, 0)


def test_resolve_data_path(tmp_path):
    path = tmp_path / "mine.json"
    path.write_text("{}")
    assert resolve_data_path(str(path)) == path
    with pytest.raises(ClickException):
        resolve_data_path(str(tmp_path / "missing.json"))


def test_bad_group_files(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ClickException):
        load_group(str(path))
    with pytest.raises(ClickException):
        spec_from_json({"family": "klein"})
    with pytest.raises(ClickException):
        spec_from_json({"family": "gkp", "vars": ["x"], "projection": "phi"})
    with pytest.raises(ClickException):
        spec_from_json(
            {"family": "lamplighter", "measure": {"atoms": [{"word": ["d"], "weight": 0.5}]}}
        )


def test_parse_measure(lamp_z2):
    assert parse_measure(None, lamp_z2) == Measure.uniform(lamp_z2)
    nu = parse_measure({"powers": {"1": "1/2", "2": "1/2"}}, lamp_z2)
    assert isinstance(nu, AffineCombination)
    assert nu.weights == ((1, Fraction(1, 2)), (2, Fraction(1, 2)))
    mu = parse_measure(
        {"atoms": [{"word": ["d"], "weight": "1/2"}, {"word": ["X1", "d"], "weight": "1/2"}]},
        lamp_z2,
    )
    assert [a.word for a in mu.atoms] == [("d",), ("X1", "d")]
    with pytest.raises(ValueError):
        parse_measure({"atoms": [{"word": ["Q"], "weight": 1}]}, lamp_z2)


def test_dump_spec_round_trips():
    config = load_group("g3-restricted")
    again = spec_from_json(dump_spec(config))
    assert dump_spec(again) == dump_spec(config)
    out = dump_spec(config)
    assert out["relation"] == "x1 - x2 + 1"
    assert out["pivot"] == "x2"


def test_reducible_relation_warns(caplog):
    ctx = Context(("x1", "x2"))
    assert reducible_factor(parse("x1^2 - 1", ctx)) == parse("x1 - 1", ctx)
    assert reducible_factor(parse("1 + x1 - x2", ctx)) is None
    assert reducible_factor(parse("x1 - 1", ctx)) is None

    config = spec_from_json({"family": "gkp", "vars": ["x1", "x2"], "relation": "x1^2 - 1"})
    assert config.spec.rank == 2
    assert "is divisible by x1 - 1" in caplog.text


def test_lattice_for():
    config = load_group("g3-restricted")
    assert lattice_for(config, (2,)) == (2, 2, 2)
    with pytest.raises(ClickException):
        lattice_for(config, (2, 2))
    assert lattice_for(load_group("lamp-z2-z2"), None) == (1, 1)


def test_parse_int_list():
    assert parse_int_list("500, 1000,") == (500, 1000)
    with pytest.raises(ClickException):
        parse_int_list("5,x")


def test_experiment_config(tmp_path):
    path = tmp_path / "walk.toml"
    path.write_text('group = "baumslag-tf"\nn = [500, 1000]\ntrials = 20\nseed = 1\nlattice = "3,3,0"\n')
    config = load_experiment_config(str(path))
    assert config.n == (500, 1000)
    assert config.lattice == (3, 3, 0)
    config.validate()

    merged = config.merged(seed=7, trials=None, n=(10,))
    assert (merged.seed, merged.trials, merged.n) == (7, 20, (10,))
    assert load_experiment_config_text(tmp_path, dump_experiment_config(merged)) == merged


def load_experiment_config_text(tmp_path, text):
    path = tmp_path / "again.toml"
    path.write_text(text)
    return load_experiment_config(str(path))


def test_experiment_config_errors(tmp_path):
    with pytest.raises(ClickException) as e:
        ExperimentConfig(group="g3-restricted", n=(10,)).validate()
    assert "seed is required" in e.value.message
    with pytest.raises(ClickException):
        ExperimentConfig(group="g3-restricted", n=(0,), seed=1).validate()
    with pytest.raises(ClickException):
        ExperimentConfig(n=(10,), seed=1).validate()

    path = tmp_path / "broken.toml"
    path.write_text("group = \n")
    with pytest.raises(ClickException):
        load_experiment_config(str(path))
