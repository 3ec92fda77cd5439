"""Full-order solvers: Stokes, Newton-Raphson Navier-Stokes, Oseen, Neumann-Poisson."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, IncompatibleData, NonConvergence
from .fem import TaylorHood, apply_dirichlet, assemble_load, assemble_neumann, EDGE_RULE
from .linalg import SparseLU, sparse_solve

__all__ = [
    "SolveCounter",
    "FlowProblem",
    "FomSolution",
    "solve_stokes",
    "newton_solve",
    "solve_oseen",
    "solve_poisson_neumann",
    "boundary_trace_data",
]


@dataclass
class SolveCounter:
    """Tally of large linear systems solved, by kind."""

    stokes: int = 0
    picard: int = 0
    newton: int = 0
    oseen: int = 0
    poisson: int = 0
    projection: int = 0

    def as_dict(self):
        return {k: getattr(self, k) for k in ("stokes", "picard", "newton", "oseen", "poisson", "projection")}

    def __iadd__(self, other):
        for k, v in other.as_dict().items():
            setattr(self, k, getattr(self, k) + v)
        return self


def _bump(counter, kind, n=1):
    if counter is not None:
        setattr(counter, kind, getattr(counter, kind) + n)


@dataclass(eq=False)
class FlowProblem:
    """Parametric steady incompressible flow on a tagged mesh.

    Boundary data callables take ``(mu, x, y)`` with coordinate arrays and
    return an array broadcastable to ``(2, *x.shape)``.

    Parameters
    ----------
    mesh : Mesh
    viscosity : callable mu -> float
    dirichlet : dict tag -> callable, full velocity prescribed
    neumann : dict tag -> callable, pseudo-traction (nu grad u - p I) n
    slip : dict tag -> component (0 or 1) whose velocity is set to zero;
        the tangential traction is left natural (axis-aligned walls only)
    parameter_box : (n_p, 2) array of [lo, hi]
    body_force : optional callable, volume forcing (used by manufactured tests)
    force_tags : tags integrated for drag and lift
    picard_tol : if set, Newton is preceded by Picard (Oseen fixed-point)
        sweeps until the relative increment drops below this value
    """

    mesh: object
    viscosity: Callable
    dirichlet: dict
    parameter_box: np.ndarray
    neumann: dict = field(default_factory=dict)
    slip: dict = field(default_factory=dict)
    body_force: Optional[Callable] = None
    force_tags: tuple = ()
    picard_tol: Optional[float] = None
    name: str = "problem"

    def __post_init__(self):
        self.parameter_box = np.atleast_2d(np.asarray(self.parameter_box, dtype=float))
        if self.parameter_box.shape[1] != 2 or np.any(self.parameter_box[:, 0] > self.parameter_box[:, 1]):
            raise ConfigError("parameter_box must be a list of [lo, hi] with lo <= hi")
        present = {int(t) for t in np.unique(self.mesh.facet_tags)}
        seen = {}
        for kind, spec in (("dirichlet", self.dirichlet), ("neumann", self.neumann), ("slip", self.slip)):
            for t in spec:
                t = self._tag(t)
                if t in seen:
                    raise ConfigError(f"tag {t} appears in both {seen[t]} and {kind}")
                seen[t] = kind
        missing = present - set(seen)
        if missing:
            raise ConfigError(f"boundary tags without a condition: {sorted(missing)}")

    def _tag(self, t):
        return int(self.mesh.tag_names[t]) if isinstance(t, str) else int(t)

    @property
    def n_params(self):
        return self.parameter_box.shape[0]

    @cached_property
    def fe(self):
        return TaylorHood(self.mesh)

    @property
    def V(self):
        return self.fe.V

    @property
    def Q(self):
        return self.fe.Q

    def nu(self, mu):
        return float(self.viscosity(np.asarray(mu, float)))

    @property
    def pin_pressure(self):
        """Pressure is only fixed up to a constant without a Neumann boundary."""
        return len(self.neumann) == 0

    def check_mu(self, mu):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.shape != (self.n_params,):
            raise ConfigError(f"expected {self.n_params} parameters, got {mu.shape}")
        lo, hi = self.parameter_box.T
        tol = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
        if np.any(mu < lo - tol) or np.any(mu > hi + tol):
            raise ConfigError(f"parameter {mu} outside box {self.parameter_box.tolist()}")
        return mu

    @cached_property
    def _constraint_layout(self):
        """Constrained velocity dofs and, per Dirichlet tag, the nodes it sets.

        Slip constraints are applied first and Dirichlet tags afterwards in
        insertion order, so a node shared by two tags takes the later value.
        """
        V = self.V
        owner = {}
        for t, comp in self.slip.items():
            for n in V.boundary_dofs(self._tag(t)):
                owner[2 * n + comp] = ("slip", None)
        per_tag = []
        for t in self.dirichlet:
            nodes = V.boundary_dofs(self._tag(t))
            per_tag.append((t, nodes))
            for n in nodes:
                owner[2 * n] = ("dir", t)
                owner[2 * n + 1] = ("dir", t)
        dofs = np.array(sorted(owner), dtype=np.int64)
        final_tag = {d: o[1] for d, o in owner.items()}
        return dofs, per_tag, final_tag

    @property
    def constrained_dofs(self):
        return self._constraint_layout[0]

    @cached_property
    def free_dofs(self):
        mask = np.ones(2 * self.V.ndof, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    def dirichlet_values(self, mu):
        """Values at ``constrained_dofs`` for parameter ``mu``."""
        dofs, per_tag, final_tag = self._constraint_layout
        full = np.zeros(2 * self.V.ndof)
        xy = self.V.dof_coords
        for t, nodes in per_tag:
            g = np.asarray(self.dirichlet[t](mu, xy[nodes, 0], xy[nodes, 1]), dtype=float)
            g = np.broadcast_to(g, (2, len(nodes)))
            for c in range(2):
                sel = np.array([final_tag[2 * n + c] == t for n in nodes], dtype=bool)
                full[2 * nodes[sel] + c] = g[c, sel]
        return full[dofs]

    def lift(self, mu):
        """Velocity vector that is zero except for the Dirichlet values."""
        u = np.zeros(2 * self.V.ndof)
        u[self.constrained_dofs] = self.dirichlet_values(mu)
        return u

    def load_vector(self, mu):
        """Neumann and body-force contributions to the momentum rhs."""
        f = np.zeros(2 * self.V.ndof)
        for t, fn in self.neumann.items():
            f += assemble_neumann(self.V, lambda x, y, fn=fn: fn(mu, x, y), self._tag(t))
        if self.body_force is not None:
            qp = self.V.quad_points
            val = np.asarray(self.body_force(mu, qp[..., 0], qp[..., 1]), dtype=float)
            val = np.broadcast_to(val, (2,) + qp.shape[:2])
            f += assemble_load(self.V, np.moveaxis(val, 0, -1))
        return f


@dataclass
class FomSolution:
    mu: np.ndarray
    velocity: np.ndarray
    pressure: np.ndarray
    residual_history: list
    converged: bool
    iterations: int = 0


def _solve_saddle(problem, K, rhs_u, rhs_p, bc_values, p_pin_value=0.0):
    fe = problem.fe
    nu_ = fe.nu_dofs
    A = sp.bmat([[K, fe.B.T], [fe.B, None]], format="csr")
    b = np.concatenate([rhs_u, rhs_p])
    dofs = problem.constrained_dofs
    vals = bc_values
    if problem.pin_pressure:
        dofs = np.append(dofs, nu_)
        vals = np.append(vals, p_pin_value)
    A, b = apply_dirichlet(A, b, dofs, vals)
    x = sparse_solve(A, b)
    return x[:nu_], x[nu_:]


def solve_stokes(problem, mu, counter=None):
    """Stokes solution (no convection) with the Dirichlet data at ``mu``."""
    mu = problem.check_mu(mu)
    K = problem.nu(mu) * problem.fe.laplacian
    u, p = _solve_saddle(problem, K, problem.load_vector(mu), np.zeros(problem.fe.np_dofs), problem.dirichlet_values(mu))
    _bump(counter, "stokes")
    return u, p


def _rel(d, x):
    nx = np.linalg.norm(x)
    nd = np.linalg.norm(d)
    if nx == 0.0:
        return 0.0 if nd == 0.0 else np.inf
    return nd / nx


def increment(du, dp, u, p):
    """``max(|du|/|u|, |dp|/|p|)``, skipping a field that is zero up to round-off.

    Such a field (e.g. the pressure of a pure shear flow) would otherwise
    give increments of order one forever.
    """
    floor = 1e-13 * (np.linalg.norm(u) + np.linalg.norm(p))
    parts = [_rel(d, x) for d, x in ((du, u), (dp, p)) if np.linalg.norm(x) > floor]
    return max(parts, default=0.0)


def newton_solve(problem, mu, tol=1e-8, max_iter=25, counter=None, initial=None, picard_tol="auto", picard_max=50):
    """Newton-Raphson for the steady Navier-Stokes equations.

    Starts from the Stokes solution (or ``initial=(u, p)``, which must carry
    the Dirichlet data). Each step solves
    ``[D + C1(u) + C2(u), B^T; B, 0] [du; dp] = [f - (D + C1(u)) u - B^T p; -B u]``
    with homogeneous constraints on ``du``. Stops when both relative
    increments ``|du|/|u|`` and ``|dp|/|p|`` are below ``tol``.

    When ``picard_tol`` is set (by default taken from the problem), Picard
    sweeps ``[D + C1(u), B^T; B, 0] [u'; p'] = [f; 0]`` first bring the
    iterate inside the Newton basin. Their increments are not part of the
    returned history.
    """
    mu = problem.check_mu(mu)
    fe = problem.fe
    nu = problem.nu(mu)
    if initial is None:
        u, p = solve_stokes(problem, mu, counter)
    else:
        u, p = (np.array(v, dtype=float, copy=True) for v in initial)
    if picard_tol == "auto":
        picard_tol = problem.picard_tol
    if picard_tol is not None:
        for _ in range(picard_max):
            u_new, p_new = _picard_step(problem, mu, u, counter)
            inc = increment(u_new - u, p_new - p, u_new, p_new)
            u, p = u_new, p_new
            if inc <= picard_tol:
                break
    f = problem.load_vector(mu)
    zeros = np.zeros(len(problem.constrained_dofs))
    history = []
    for it in range(1, max_iter + 1):
        C1, C2 = fe.convection(u)
        A = nu * fe.laplacian + C1
        ru = f - A @ u - fe.B.T @ p
        rp = -(fe.B @ u)
        du, dp = _solve_saddle(problem, A + C2, ru, rp, zeros)
        _bump(counter, "newton")
        u = u + du
        p = p + dp
        inc = increment(du, dp, u, p)
        history.append(inc)
        if inc <= tol:
            return FomSolution(mu, u, p, history, True, it)
        if not np.isfinite(inc):
            break
    raise NonConvergence(
        f"Newton did not converge in {max_iter} iterations (last increment {history[-1]:.3e})",
        history,
        FomSolution(mu, u, p, history, False, len(history)),
    )


def _picard_step(problem, mu, w, counter):
    fe = problem.fe
    K = problem.nu(mu) * fe.laplacian + fe.c1(w)
    u, p = _solve_saddle(problem, K, problem.load_vector(mu), np.zeros(fe.np_dofs), problem.dirichlet_values(mu))
    _bump(counter, "picard")
    return u, p


def solve_oseen(problem, mu_eff, w, counter=None):
    """Oseen problem with frozen convective field ``w``.

    Solves ``[D + C1(w), B^T; B, 0] [u; p] = [f; 0]`` with the Dirichlet
    data evaluated at ``mu_eff``. Only the C1 block enters.
    """
    mu_eff = problem.check_mu(mu_eff)
    fe = problem.fe
    K = problem.nu(mu_eff) * fe.laplacian + fe.c1(w)
    u, p = _solve_saddle(problem, K, problem.load_vector(mu_eff), np.zeros(fe.np_dofs), problem.dirichlet_values(mu_eff))
    _bump(counter, "oseen")
    return u, p


def boundary_trace_data(space):
    """Quadrature data on every boundary edge of a scalar/vector space.

    Returns a dict with ``points`` (nb, nq, 2), ``weights`` (nb, nq),
    ``normals`` (nb, 2) pointing out of the domain, ``dofs`` (nb, 3) as
    [start, end, midpoint] in counter-clockwise cell order, and the edge
    ``basis`` (nq, 3).
    """
    cache = space.__dict__.setdefault("_btrace", {})
    if "data" in cache:
        return cache["data"]
    mesh = space.mesh
    edges = mesh.boundary_edges
    eidx = mesh.edge_index(edges)
    flat = mesh.cell_edges.ravel()
    order = np.argsort(flat, kind="stable")
    hit = order[np.searchsorted(flat[order], eidx)]
    cells, le = hit // 3, hit % 3
    tri = mesh.triangles[cells]
    ia = tri[np.arange(len(cells)), le]
    ib = tri[np.arange(len(cells)), (le + 1) % 3]
    a, b = mesh.nodes[ia], mesh.nodes[ib]
    d = b - a
    length = np.linalg.norm(d, axis=1)
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    s = EDGE_RULE.points
    pts = a[:, None, :] + s[None, :, None] * d[:, None, :]
    weights = length[:, None] * EDGE_RULE.weights[None, :]
    if space.degree == 2:
        dofs = np.column_stack([ia, ib, mesh.nv + eidx])
        basis = np.column_stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])
    else:
        dofs = np.column_stack([ia, ib])
        basis = np.column_stack([1 - s, s])
    data = dict(points=pts, weights=weights, normals=normals, dofs=dofs, basis=basis)
    cache["data"] = data
    return data


def _pinned_stiffness_lu(space, pin_node):
    cache = space.__dict__.setdefault("_pinned_lu", {})
    if pin_node not in cache:
        A, _ = apply_dirichlet(space.stiffness, np.zeros(space.ndof), [pin_node], [0.0])
        cache[pin_node] = SparseLU(A)
    return cache[pin_node]


def solve_poisson_neumann(space, rhs, flux, pin_node, counter=None, check_tol=1e-6):
    """Pure-Neumann Poisson problem ``-lap(psi) = rhs``, ``grad(psi).n = flux``.

    Parameters
    ----------
    space : FeSpace
        Scalar P2 (or P1) space.
    rhs : array
        Nodal values (ndof,) or samples at quadrature points (nt, nq).
    flux : callable or array
        ``flux(x, y, nx, ny)`` evaluated at boundary quadrature points, or an
        array of such values with shape (n_boundary_edges, nq).
    pin_node : int
        Dof where ``psi = 0``.

    Raises
    ------
    IncompatibleData
        If ``int rhs + int flux`` is not zero to ``check_tol`` relative.
    """
    rhs = np.asarray(rhs, float)
    if rhs.ndim == 1:
        b_vol = space.mass @ rhs
    else:
        b_vol = assemble_load(space, rhs)
    bt = boundary_trace_data(space)
    if callable(flux):
        pts, nrm = bt["points"], bt["normals"]
        g = np.asarray(
            flux(pts[..., 0], pts[..., 1], nrm[:, None, 0] + 0 * pts[..., 0], nrm[:, None, 1] + 0 * pts[..., 1]),
            dtype=float,
        )
        g = np.broadcast_to(g, pts.shape[:2])
    else:
        g = np.asarray(flux, float)
    loc = np.einsum("bq,qa,bq->ba", bt["weights"], bt["basis"], g)
    b_bnd = np.bincount(bt["dofs"].ravel(), loc.ravel(), minlength=space.ndof)
    b = b_vol + b_bnd
    scale = np.abs(b_vol).sum() + np.abs(b_bnd).sum()
    if scale > 0 and abs(b.sum()) > check_tol * scale:
        raise IncompatibleData(f"Neumann compatibility violated: {abs(b.sum()) / scale:.3e} relative")
    b[pin_node] = 0.0
    psi = _pinned_stiffness_lu(space, pin_node).solve(b)
    _bump(counter, "poisson")
    return psi
