import numpy as np
import pytest

from rivet.fem2d import MaterialParams, Mesh, rectangle

# Lines appended by test_acceptance.py; echoed in the terminal summary so a
# plain `pytest -v` run shows one verdict per criterion.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params():
    return MaterialParams(E=100.0, nu=0.3, gc=1.0, l=0.3)


@pytest.fixture
def mesh3():
    """3x3 quads on a slightly distorted unit square."""
    m = rectangle(np.linspace(0, 1, 4), np.linspace(0, 1, 4))
    nodes = m.nodes.copy()
    nodes[5] += [0.04, -0.03]
    nodes[10] += [-0.02, 0.05]
    return Mesh(nodes, m.quads, node_sets=m.node_sets)


@pytest.fixture
def mixed_mesh():
    """Unit square: two quads on the left, four triangles on the right."""
    nodes = np.array([[0, 0], [0.5, 0], [1, 0], [0, 0.5], [0.5, 0.5], [1, 0.5],
                      [0, 1], [0.5, 1], [1, 1]], dtype=float)
    quads = np.array([[0, 1, 4, 3], [3, 4, 7, 6]])
    tris = np.array([[1, 2, 5], [1, 5, 4], [4, 5, 8], [4, 8, 7]])
    return Mesh(nodes, quads, tris, node_sets={"left": np.array([0, 3, 6]),
                                               "right": np.array([2, 5, 8])})


def central_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
