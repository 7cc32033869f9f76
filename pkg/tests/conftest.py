from functools import lru_cache

import pytest

from dotinc.incidence import build_graph, nnt_decompose
from dotinc.spectral import gram_side_eigen


@lru_cache(maxsize=None)
def preset_graph(q, n, k, h):
    return build_graph(q, n, k, h)


@lru_cache(maxsize=None)
def preset_spectrum(q, n, k, h):
    return gram_side_eigen(preset_graph(q, n, k, h))


@lru_cache(maxsize=None)
def preset_decomposition(q, n, k, h):
    return nnt_decompose(preset_graph(q, n, k, h))


@pytest.fixture(scope="session")
def graphs():
    return preset_graph


@pytest.fixture(scope="session")
def spectra():
    return preset_spectrum


@pytest.fixture(scope="session")
def decompositions():
    return preset_decomposition


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
