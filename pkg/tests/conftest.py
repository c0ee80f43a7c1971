from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

from filtered_weights import FilteredSpace, load_instance

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

F = Fraction


@pytest.fixture
def s2():
    return FilteredSpace([[[0, 1]], [[0], [1]]], [F(1, 2), F(1, 2)], exact=True)


@pytest.fixture
def s4():
    return FilteredSpace([[[0, 1, 2, 3]], [[0, 1], [2, 3]], [[0], [1], [2], [3]]], [F(1, 4)] * 4, exact=True)


@pytest.fixture
def s2_instance():
    return load_instance(ROOT / "instances" / "s2.json")


@pytest.fixture
def s4_instance():
    return load_instance(ROOT / "instances" / "s4.json")


@st.composite
def tree_partitions(draw, max_depth: int = 3, max_children: int = 3, max_atoms: int = 8):
    """Random tower of refining partitions with a discrete finest level."""
    depth = draw(st.integers(1, max_depth))
    splits = []
    width = 1
    for _ in range(depth):
        kids = [draw(st.integers(1, max_children)) for _ in range(width)]
        if sum(kids) > max_atoms:
            kids = [1] * width
        splits.append(kids)
        width = sum(kids)
    # build from the discrete level upwards; children of a node are consecutive
    bounds = list(range(width + 1))
    levels = [[[x] for x in range(width)]]
    for kids in reversed(splits):
        cuts, pos = [0], 0
        for c in kids:
            pos += c
            cuts.append(bounds[pos])
        bounds = cuts
        levels.append([list(range(bounds[a], bounds[a + 1])) for a in range(len(bounds) - 1)])
    return list(reversed(levels))


@st.composite
def spaces(draw, exact: bool = False, max_atoms: int = 8, max_depth: int = 3):
    parts = draw(tree_partitions(max_depth=max_depth, max_atoms=max_atoms))
    n = len(parts[-1])
    masses = draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
    mu = [F(m, sum(masses)) for m in masses] if exact else [m / sum(masses) for m in masses]
    return FilteredSpace(parts, mu, exact=exact)


def positive_values(n: int, exact: bool = False):
    if exact:
        return st.lists(st.fractions(min_value=F(1, 8), max_value=8, max_denominator=8), min_size=n, max_size=n)
    return st.lists(st.floats(min_value=0.125, max_value=8.0), min_size=n, max_size=n)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
