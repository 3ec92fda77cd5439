"""Online stage: reduced Newton solve, pressure recovery, local bases, forces.

The reduced velocity takes the prescribed Dirichlet values on constrained
dofs and ``mean_u + U z_u`` on the free ones; the pressure is
``mean_p + P z_p``. Let ``W`` be ``U`` with its constrained rows set to zero.
Every Newton step assembles the full-order Jacobian at the current velocity
and projects it, giving the dense saddle system

    [W^T J W    W^T B^T P] [dz_u]   [W^T r_u]
    [P^T B W        0    ] [dz_p] = [P^T r_p]

Because the test directions vanish on the Dirichlet boundary, only the
momentum rows of free dofs enter. The pressure block does not degenerate:
``B U`` is zero for modes of weakly incompressible snapshots, but ``B W``
is not once the boundary part has been split off.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonConvergence, SingularMatrix, SingularReducedSystem
from .fem import apply_dirichlet, boundary_force
from .fom import FomSolution, increment
from .linalg import SparseLU, dense_solve

__all__ = ["RomSolution", "rom_solve", "recover_pressure", "select_local_snapshots", "qoi", "reduced_system"]


@dataclass
class RomSolution:
    """Reduced solution at ``mu``.

    ``bc_deviation`` is the relative mismatch between the plain POD
    reconstruction ``mean_u + U z_u`` and the Dirichlet data; the returned
    ``velocity`` carries the exact data.
    """

    mu: np.ndarray
    z_u: np.ndarray
    z_p: np.ndarray
    velocity: np.ndarray
    pressure: np.ndarray
    recovered_pressure: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    bc_deviation: float = 0.0
    converged: bool = True


def _rel(d, x):
    nx = np.linalg.norm(x)
    nd = np.linalg.norm(d)
    if nx == 0.0:
        return 0.0 if nd == 0.0 else np.inf
    return nd / nx


def _free_modes(problem, basis_u):
    W = basis_u.modes.copy()
    W[problem.constrained_dofs] = 0.0
    return W


def reconstruct_velocity(problem, mu, basis_u, z_u):
    u = basis_u.reconstruct(z_u)
    u[problem.constrained_dofs] = problem.dirichlet_values(mu)
    return u


def reduced_system(problem, mu, basis_u, basis_p, u, p, linear=False, W=None):
    """Projected Jacobian and residual at the state ``(u, p)``.

    Returns ``(M, rhs)`` where ``M`` has the block layout
    ``[[K*, B*^T], [B*, 0]]`` with ``B*`` of shape (n_p, n_u).
    """
    fe = problem.fe
    nu = problem.nu(mu)
    W = _free_modes(problem, basis_u) if W is None else W
    P = basis_p.modes
    if linear:
        A = nu * fe.laplacian
        J = A
    else:
        C1, C2 = fe.convection(u)
        A = nu * fe.laplacian + C1
        J = A + C2
    r_u = problem.load_vector(mu) - A @ u - fe.B.T @ p
    r_p = -(fe.B @ u)
    BW = fe.B @ W
    n_u, n_p = W.shape[1], P.shape[1]
    M = np.zeros((n_u + n_p, n_u + n_p))
    M[:n_u, :n_u] = W.T @ (J @ W)
    M[:n_u, n_u:] = BW.T @ P
    M[n_u:, :n_u] = P.T @ BW
    rhs = np.concatenate([W.T @ r_u, P.T @ r_p])
    return M, rhs


def rom_solve(problem, mu, basis_u, basis_p, tol=1e-8, max_iter=50):
    """Reduced Newton iterations at ``mu``.

    The starting state is the reduced Stokes solution (the same projected
    system without convection), then Newton steps run until
    ``max(|du|/|u|, |dp|/|p|) <= tol`` for the reconstructed increments.

    Raises
    ------
    SingularReducedSystem
        If the projected saddle matrix is singular, e.g. when the pressure
        modes are not controlled by the velocity modes.
    NonConvergence
    """
    mu = problem.check_mu(mu)
    if basis_u.ndof != problem.fe.nu_dofs or basis_p.ndof != problem.fe.np_dofs:
        raise ConfigError("bases do not match the problem's velocity/pressure spaces")
    n_u = basis_u.n
    W = _free_modes(problem, basis_u)
    z_u, z_p = np.zeros(n_u), np.zeros(basis_p.n)
    u = reconstruct_velocity(problem, mu, basis_u, z_u)
    p = basis_p.reconstruct(z_p)

    def step(u, p, linear):
        M, rhs = reduced_system(problem, mu, basis_u, basis_p, u, p, linear=linear, W=W)
        try:
            d = dense_solve(M, rhs)
        except SingularMatrix as exc:
            raise SingularReducedSystem(f"reduced saddle system is singular at mu={mu.tolist()}: {exc}") from exc
        return d[:n_u], d[n_u:]

    du, dp = step(u, p, linear=True)
    z_u, z_p = z_u + du, z_p + dp
    u, p = u + W @ du, p + basis_p.modes @ dp
    history = []
    converged = False
    for it in range(1, max_iter + 1):
        du, dp = step(u, p, linear=False)
        z_u, z_p = z_u + du, z_p + dp
        vu, vp = W @ du, basis_p.modes @ dp
        u, p = u + vu, p + vp
        inc = increment(vu, vp, u, p)
        history.append(inc)
        if inc <= tol:
            converged = True
            break
        if not np.isfinite(inc):
            break
    if not converged:
        raise NonConvergence(f"reduced Newton did not converge in {max_iter} iterations", history, (z_u, z_p))
    D = problem.constrained_dofs
    g = u[D]
    plain = basis_u.reconstruct(z_u)[D]
    bc_dev = float(_rel(plain - g, g)) if np.any(g) else float(np.linalg.norm(plain))
    p_rec = recover_pressure(problem, mu, u)
    return RomSolution(mu, z_u, z_p, u, p, p_rec, it, history, bc_dev, True)


def _recovery_lu(problem):
    cache = problem.__dict__.setdefault("_recovery", {})
    if "lu" not in cache:
        F = problem.free_dofs
        BF = problem.fe.B[:, F].tocsr()
        A = (BF @ BF.T).tocsr()
        if problem.pin_pressure:
            A, _ = apply_dirichlet(A, np.zeros(A.shape[0]), [0], [0.0])
        cache["BF"] = BF
        cache["lu"] = SparseLU(A)
    return cache["BF"], cache["lu"]


def recover_pressure(problem, mu, velocity):
    """Pressure from the momentum equation: ``B B^T p = B (f - K(u) u)``.

    Only the momentum rows of unconstrained velocity dofs enter, since the
    constrained rows carry unknown reaction forces rather than the balance
    law. With no Neumann boundary the first pressure dof is set to zero.
    """
    mu = problem.check_mu(mu)
    fe = problem.fe
    u = np.asarray(velocity, float)
    r = problem.load_vector(mu) - (problem.nu(mu) * fe.laplacian + fe.c1(u)) @ u
    BF, lu = _recovery_lu(problem)
    b = BF @ r[problem.free_dofs]
    if problem.pin_pressure:
        b[0] = 0.0
    return lu.solve(b)


def select_local_snapshots(training_params, mu, k, box=None):
    """Indices of the ``k`` training points nearest to ``mu``.

    Distances are Euclidean after mapping each coordinate to [0, 1] with
    ``box`` (rows of [lo, hi]); axes of zero width are ignored. Ties keep
    the lower index first.
    """
    X = np.atleast_2d(np.asarray(training_params, float))
    mu = np.atleast_1d(np.asarray(mu, float))
    if k > len(X):
        raise ValueError(f"k={k} exceeds the {len(X)} training points")
    if box is None:
        lo, hi = X.min(axis=0), X.max(axis=0)
    else:
        lo, hi = np.asarray(box, float).T
    width = np.where(hi > lo, hi - lo, np.inf)
    d = np.linalg.norm((X - mu) / width, axis=1)
    return np.argsort(d, kind="stable")[:k]


def qoi(problem, solution, tags=None, mu=None):
    """(drag, lift) on ``tags`` (default: the problem's force tags).

    ``solution`` is a RomSolution (its recovered pressure is used), a
    FomSolution, or a ``(u, p)`` pair together with ``mu``.
    """
    tags = problem.force_tags if tags is None else tags
    if isinstance(solution, RomSolution):
        u, p, mu = solution.velocity, solution.recovered_pressure, solution.mu
    elif isinstance(solution, FomSolution):
        u, p, mu = solution.velocity, solution.pressure, solution.mu
    else:
        u, p = solution
    return boundary_force(problem.V, problem.Q, u, p, tags, problem.nu(mu))
