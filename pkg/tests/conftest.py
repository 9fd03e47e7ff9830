import random

import pytest

from boundary_lab.groups import baumslag_spec, lamplighter_spec, restricted_baumslag_spec
from boundary_lab.laurent import Context


@pytest.fixture()
def xy():
    return Context(("x", "y"))


@pytest.fixture()
def rng():
    return random.Random(12345)


@pytest.fixture()
def restricted():
    return restricted_baumslag_spec()


@pytest.fixture()
def baumslag():
    return baumslag_spec()


@pytest.fixture()
def lamp_z2():
    return lamplighter_spec(1, 2, "lamplighter-z2")


@pytest.fixture()
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    yield tmp_path
