import sys
from pathlib import Path

import numpy as np
import pytest

from rxnsim import NetworkSpec, ReactionSpec, compile_network, parse_network

NETWORKS = Path(__file__).resolve().parents[1] / "networks"

ENZYME_TEXT = """\
species: E, S, ES, P
init: E=5e-5, S=2e-4
E + S <-> ES : k1, k2
ES -> E + P : k3
params: k1=1, k2=1, k3=1
"""

ROBERTSON_TEXT = """\
A -> B : 0.04
2 B -> B + C : 3e7
B + C -> A + C : 1e4
init: A=1
"""


def enzyme_spec(k=(1.0, 1.0, 1.0), x0=(5e-5, 2e-4, 0.0, 0.0)) -> NetworkSpec:
    return NetworkSpec(
        ("E", "S", "ES", "P"),
        (
            ReactionSpec(((0, 1), (1, 1)), ((2, 1),), k[0]),
            ReactionSpec(((2, 1),), ((0, 1), (1, 1)), k[1]),
            ReactionSpec(((2, 1),), ((0, 1), (3, 1)), k[2]),
        ),
        x0,
    )


@pytest.fixture
def enzyme():
    return compile_network(enzyme_spec())


@pytest.fixture
def robertson():
    return compile_network(parse_network(ROBERTSON_TEXT))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
