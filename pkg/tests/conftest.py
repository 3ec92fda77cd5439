import numpy as np
import pytest

from nsaug import FlowProblem, newton_solve
from nsaug.mesh import rectangle_mesh, unit_square_mesh
from nsaug.problems import make_problem

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def _zero(mu, x, y):
    return np.zeros((2,) + np.shape(x))


def tiny_box(n=6, nu=0.05):
    """Square driven by a lid and a through-flow; parameters (lid, jet) in [0.5, 2] x [0, 1].

    All walls are Dirichlet, so the pressure is pinned.
    """
    mesh = unit_square_mesh(n)

    def lid(mu, x, y):
        return np.stack([mu[0] * 16 * x**2 * (1 - x) ** 2, np.zeros_like(x)])

    def side(mu, x, y):
        return np.stack([mu[1] * 4 * y * (1 - y), np.zeros_like(x)])

    return FlowProblem(
        mesh=mesh,
        viscosity=lambda mu: nu,
        dirichlet={"bottom": _zero, "left": side, "right": side, "top": lid},
        parameter_box=[[0.5, 2.0], [0.0, 1.0]],
        name="tiny_box",
    )


def tiny_channel(nx=8, ny=4, nu=0.05):
    """Poiseuille channel [0, 2] x [0, 1] with a free outlet; parameter = peak inflow."""
    mesh = rectangle_mesh(np.linspace(0, 2, nx + 1), np.linspace(0, 1, ny + 1))

    def inflow(mu, x, y):
        return np.stack([mu[0] * 4 * y * (1 - y), np.zeros_like(x)])

    return FlowProblem(
        mesh=mesh,
        viscosity=lambda mu: nu,
        dirichlet={"left": inflow, "bottom": _zero, "top": _zero},
        neumann={"right": _zero},
        parameter_box=[[0.5, 2.0]],
        force_tags=("bottom",),
        name="tiny_channel",
    )


@pytest.fixture(scope="session")
def box_problem():
    return tiny_box()


@pytest.fixture(scope="session")
def channel_problem():
    return tiny_channel()


@pytest.fixture(scope="session")
def box_solutions(box_problem):
    """Full-order solutions at the corners and centre of the tiny box."""
    pts = np.array([[0.5, 0.0], [2.0, 0.0], [0.5, 1.0], [2.0, 1.0], [1.25, 0.5]])
    return pts, [newton_solve(box_problem, mu) for mu in pts]


@pytest.fixture(scope="session")
def cylinder():
    return make_problem("cylinder_jets", 0)


@pytest.fixture(scope="session")
def cavity():
    return make_problem("lid_cavity", 0)
