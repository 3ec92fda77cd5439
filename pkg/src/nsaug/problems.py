"""Benchmark problem registry: cylinder with jets, lid-driven cavity with jets."""

import numpy as np

from .errors import UnknownProblem
from .fom import FlowProblem
from .mesh import cavity_mesh, cylinder_mesh

__all__ = ["make_problem", "PROBLEMS", "cylinder_jets", "lid_cavity", "parameter_grid"]

NU = 0.01
CYL_CENTER = (8.0, 8.0)
CYL_DIAMETER = 1.0
JET_OPENING = 5 * np.pi / 36


def _zero(mu, x, y):
    return np.zeros((2,) + np.shape(x))


def inlet_speed(re):
    return re * NU / CYL_DIAMETER


def jet_profile(x, y, centre_angle):
    """Radial jet shape ``2 cos(pi/omega (theta - centre)) (x - 8, y - 8)``.

    The angle is unwrapped around ``centre_angle`` so that the profile
    vanishes at both ends of each jet opening.
    """
    dx, dy = x - CYL_CENTER[0], y - CYL_CENTER[1]
    theta = np.arctan2(dy, dx)
    delta = np.mod(theta - centre_angle + np.pi, 2 * np.pi) - np.pi
    amp = 2.0 * np.cos(np.pi / JET_OPENING * delta)
    return amp * np.stack([dx, dy])


def cylinder_jets(level=0):
    """Flow past a cylinder with two radial jets; parameters ``(Re, gamma)``."""
    mesh = cylinder_mesh(level)

    def inlet(mu, x, y):
        return np.stack([np.full(np.shape(x), inlet_speed(mu[0])), np.zeros(np.shape(x))])

    def jet1(mu, x, y):
        return mu[1] * inlet_speed(mu[0]) * jet_profile(x, y, np.pi / 2)

    def jet2(mu, x, y):
        return -mu[1] * inlet_speed(mu[0]) * jet_profile(x, y, 3 * np.pi / 2)

    return FlowProblem(
        mesh=mesh,
        viscosity=lambda mu: NU,
        dirichlet={"inlet": inlet, "cyl_wall": _zero, "jet1": jet1, "jet2": jet2},
        neumann={"outlet": _zero},
        slip={"sym": 1},
        parameter_box=[[5.0, 30.0], [0.0, 4.0]],
        force_tags=("cyl_wall", "jet1", "jet2"),
        name="cylinder_jets",
    )


def lid_speed(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.06, 10 * x / 0.06, np.where(x >= 0.94, 10 * (1 - x) / 0.06, 10.0))


def cavity_jet_top(y):
    return 1 - np.cos(2 * np.pi * (y - 0.88) / 0.12)


def cavity_jet_bottom(y):
    return -1 + np.cos(2 * np.pi * y / 0.12)


def lid_cavity(level=0):
    """Lid-driven cavity with three horizontal jets scaled by ``mu``."""
    mesh = cavity_mesh(level)

    def horizontal(vals):
        return np.stack([vals, np.zeros_like(vals)])

    return FlowProblem(
        mesh=mesh,
        viscosity=lambda mu: NU,
        dirichlet={
            "wall": _zero,
            "lid": lambda mu, x, y: horizontal(lid_speed(x)),
            "jet1": lambda mu, x, y: horizontal(mu[0] * cavity_jet_top(y)),
            "jet2": lambda mu, x, y: horizontal(mu[0] * cavity_jet_top(y)),
            "jet3": lambda mu, x, y: horizontal(mu[0] * cavity_jet_bottom(y)),
        },
        neumann={"outlet": _zero},
        parameter_box=[[0.0, 1.0]],
        picard_tol=1e-3,
        name="lid_cavity",
    )


PROBLEMS = {"cylinder_jets": cylinder_jets, "lid_cavity": lid_cavity}


def make_problem(name, mesh_level=0):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(mesh_level)


def parameter_grid(box, counts):
    """Tensor grid over ``box`` with ``counts[d]`` uniform points per axis.

    Points are ordered with the first parameter varying slowest.
    """
    box = np.atleast_2d(np.asarray(box, dtype=float))
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(box, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])
