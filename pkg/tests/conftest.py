from pathlib import Path

import numpy as np
import pytest

from domcert.automata import Transition
from domcert.system import load_automaton, load_system

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"


@pytest.fixture
def systems_dir():
    return SYSTEMS


@pytest.fixture
def diag():
    return load_system(SYSTEMS / "diag_pair.yaml")


@pytest.fixture
def bacteria():
    return load_system(SYSTEMS / "bacteria.yaml")


@pytest.fixture
def five_state():
    return load_system(SYSTEMS / "five_state.yaml")


@pytest.fixture
def langs():
    return {name: load_automaton(SYSTEMS / f"lang_{name}.yaml") for name in ("free", "no11", "alternating")}


# cone forms certifying the diagonal pair under strict alternation
P_A = np.diag([-1.0, 8.0])
P_B = np.diag([-0.5, 0.25])

BACTERIA_RATES = {
    Transition("a", 2, "a"): 0.75,
    Transition("a", 1, "b"): 0.25,
    Transition("b", 2, "a"): 0.25,
    Transition("b", 1, "b"): 0.75,
    Transition("b", 3, "b"): 0.75,
}

DIAG_UNIT_RATES = {Transition("a", 1, "b"): 1.0, Transition("b", 2, "a"): 1.0}


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])
