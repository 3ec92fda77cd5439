"""P2/P1 (Taylor-Hood) finite elements on triangles.

Vector-valued velocity fields are stored interleaved: the x component of
node ``i`` is entry ``2*i`` and the y component is ``2*i + 1``.

P2 nodes are the mesh vertices (indices ``0..nv-1``) followed by one
midpoint per mesh edge (``nv + edge_index``).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .linalg import SparseLU, as_csr

__all__ = [
    "QuadratureRule",
    "TRIANGLE_RULE",
    "EDGE_RULE",
    "FeSpace",
    "TaylorHood",
    "assemble_form",
    "assemble_neumann",
    "assemble_load",
    "apply_dirichlet",
    "l2_project",
    "boundary_force",
    "to_vector",
    "from_vector",
]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # barycentric coordinates, (nq, 3) on triangles, (nq,) in [0, 1] on edges
    weights: np.ndarray  # sum to the reference measure (1/2 on triangles, 1 on edges)
    degree: int


_a, _b = 0.445948490915965, 0.091576213509771
_wa, _wb = 0.223381589678011, 0.109951743655322
TRIANGLE_RULE = QuadratureRule(
    points=np.array(
        [
            [1 - 2 * _a, _a, _a],
            [_a, 1 - 2 * _a, _a],
            [_a, _a, 1 - 2 * _a],
            [1 - 2 * _b, _b, _b],
            [_b, 1 - 2 * _b, _b],
            [_b, _b, 1 - 2 * _b],
        ]
    ),
    weights=0.5 * np.array([_wa, _wa, _wa, _wb, _wb, _wb]),
    degree=4,
)

_g = 0.5 * np.sqrt(3.0 / 5.0)
EDGE_RULE = QuadratureRule(
    points=np.array([0.5 - _g, 0.5, 0.5 + _g]),
    weights=np.array([5.0, 8.0, 5.0]) / 18.0,
    degree=5,
)

# d(lambda_0, lambda_1, lambda_2) / d(xi, eta)
_DLAM = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


def _p1_values(lam):
    return np.asarray(lam, float)


def _p2_values(lam):
    lam = np.asarray(lam, float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack(
        [l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0],
        axis=-1,
    )


def _p2_ref_grads(lam):
    """Reference gradients, shape (..., 6, 2)."""
    lam = np.asarray(lam, float)
    dphi_dlam = np.zeros(lam.shape[:-1] + (6, 3))
    for i in range(3):
        dphi_dlam[..., i, i] = 4 * lam[..., i] - 1
    for k, (i, j) in enumerate(_P2_EDGES):
        dphi_dlam[..., 3 + k, i] = 4 * lam[..., j]
        dphi_dlam[..., 3 + k, j] = 4 * lam[..., i]
    return dphi_dlam @ _DLAM


def _p1_ref_grads(lam):
    lam = np.asarray(lam, float)
    return np.broadcast_to(_DLAM, lam.shape[:-1] + (3, 2)).copy()


class FeSpace:
    """Continuous Lagrange space of degree 1 or 2 on a triangle mesh."""

    def __init__(self, mesh, degree, rule=TRIANGLE_RULE):
        if degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        self.mesh = mesh
        self.degree = degree
        self.rule = rule
        nv = mesh.nv
        if degree == 1:
            self.ndof = nv
            self.dof_coords = mesh.nodes
            self.cell_dofs = mesh.triangles
        else:
            edges = mesh.edges
            self.ndof = nv + len(edges)
            self.dof_coords = np.concatenate([mesh.nodes, 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])])
            self.cell_dofs = np.concatenate([mesh.triangles, nv + mesh.cell_edges], axis=1)
        self.nloc = self.cell_dofs.shape[1]

    def __repr__(self):
        return f"FeSpace(P{self.degree}, ndof={self.ndof})"

    # reference basis
    def values(self, lam):
        return _p2_values(lam) if self.degree == 2 else _p1_values(lam)

    def ref_grads(self, lam):
        return _p2_ref_grads(lam) if self.degree == 2 else _p1_ref_grads(lam)

    # geometry
    @cached_property
    def jacobian(self):
        p = self.mesh.nodes[self.mesh.triangles]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)  # (nt, 2, 2), columns

    @cached_property
    def det(self):
        J = self.jacobian
        return J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]

    @cached_property
    def inv_jacobian_t(self):
        return np.linalg.inv(self.jacobian).transpose(0, 2, 1)

    @cached_property
    def phi(self):
        """Basis values at quadrature points, (nq, nloc)."""
        return self.values(self.rule.points)

    @cached_property
    def grad(self):
        """Physical basis gradients at quadrature points, (nt, nq, nloc, 2)."""
        g = self.ref_grads(self.rule.points)  # (nq, nloc, 2)
        return np.einsum("eij,qaj->eqai", self.inv_jacobian_t, g)

    @cached_property
    def wdet(self):
        """Quadrature weights times |det J|, (nt, nq)."""
        return np.abs(self.det)[:, None] * self.rule.weights[None, :]

    @cached_property
    def quad_points(self):
        p0 = self.mesh.nodes[self.mesh.triangles[:, 0]]
        ref = self.rule.points[:, 1:]
        return p0[:, None, :] + np.einsum("eij,qj->eqi", self.jacobian, ref)

    # boundary
    @cached_property
    def facet_dofs(self):
        """Dofs on each facet: (nf, 2) for P1, (nf, 3) with midpoint last for P2."""
        f = self.mesh.facets
        if self.degree == 1:
            return f.copy()
        return np.column_stack([f, self.mesh.nv + self.mesh.edge_index(f)])

    def boundary_dofs(self, tags):
        idx = self.mesh.facets_with(tags)
        return np.unique(self.facet_dofs[idx])

    @cached_property
    def all_boundary_dofs(self):
        f = self.mesh.boundary_edges
        if self.degree == 1:
            return np.unique(f)
        return np.unique(np.concatenate([f.ravel(), self.mesh.nv + self.mesh.edge_index(f)]))

    # field helpers
    def interpolate(self, func):
        """Nodal interpolant of ``func(x, y)``; scalar or 2-vector valued (interleaved)."""
        x, y = self.dof_coords[:, 0], self.dof_coords[:, 1]
        v = np.asarray(func(x, y), dtype=float)
        if v.ndim == 0:
            return np.full(self.ndof, float(v))
        if v.shape == (self.ndof,):
            return v.copy()
        v = np.broadcast_to(v, (2, self.ndof))
        return to_vector(v[0], v[1])

    def at_quad(self, nodal):
        """Values at quadrature points: (nt, nq) for scalar, (nt, nq, 2) for vector input."""
        nodal = np.asarray(nodal, float)
        if nodal.shape[0] == 2 * self.ndof:
            cell = nodal.reshape(-1, 2)[self.cell_dofs]  # (nt, nloc, 2)
            return np.einsum("qa,eac->eqc", self.phi, cell)
        return nodal[self.cell_dofs] @ self.phi.T

    def grad_at_quad(self, nodal):
        """Gradients at quadrature points: (nt, nq, 2) scalar, (nt, nq, 2, 2) vector [comp, dir]."""
        nodal = np.asarray(nodal, float)
        if nodal.shape[0] == 2 * self.ndof:
            cell = nodal.reshape(-1, 2)[self.cell_dofs]
            return np.einsum("eqad,eac->eqcd", self.grad, cell)
        return np.einsum("eqad,ea->eqd", self.grad, nodal[self.cell_dofs])

    def integrate(self, values_at_quad):
        return float(np.sum(self.wdet * values_at_quad))

    # cached operators
    @cached_property
    def mass(self):
        return assemble_form("mass", self)

    @cached_property
    def stiffness(self):
        return assemble_form("stiffness", self)

    @cached_property
    def mass_lu(self):
        return SparseLU(self.mass)

    @cached_property
    def _scalar_pattern(self):
        d = self.cell_dofs
        rows = np.broadcast_to(d[:, :, None], d.shape + (self.nloc,)).ravel()
        cols = np.broadcast_to(d[:, None, :], d.shape[:1] + (self.nloc, self.nloc)).ravel()
        return rows, cols

    @cached_property
    def _vector_blockdiag_pattern(self):
        r, c = self._scalar_pattern
        return np.concatenate([2 * r, 2 * r + 1]), np.concatenate([2 * c, 2 * c + 1])

    @cached_property
    def _vector_full_pattern(self):
        d = self.cell_dofs
        nt, n = d.shape
        comp = np.arange(2)
        rows = 2 * d[:, :, None, None, None] + comp[None, None, :, None, None]
        cols = 2 * d[:, None, None, :, None] + comp[None, None, None, None, :]
        shape = (nt, n, 2, n, 2)
        return np.broadcast_to(rows, shape).ravel(), np.broadcast_to(cols, shape).ravel()

    def scalar_matrix(self, local):
        r, c = self._scalar_pattern
        return as_csr(sp.coo_matrix((local.ravel(), (r, c)), shape=(self.ndof, self.ndof)))

    def blockdiag_matrix(self, local):
        r, c = self._vector_blockdiag_pattern
        v = local.ravel()
        n = 2 * self.ndof
        return as_csr(sp.coo_matrix((np.concatenate([v, v]), (r, c)), shape=(n, n)))

    def coupled_matrix(self, local):
        r, c = self._vector_full_pattern
        n = 2 * self.ndof
        return as_csr(sp.coo_matrix((local.ravel(), (r, c)), shape=(n, n)))


def to_vector(ux, uy):
    return np.column_stack([ux, uy]).ravel()


def from_vector(u):
    u = np.asarray(u).reshape(-1, 2)
    return u[:, 0].copy(), u[:, 1].copy()


def _check_vector(space, w):
    w = np.asarray(w, float)
    if w.shape != (2 * space.ndof,):
        raise DimensionMismatch(f"expected a velocity vector of length {2 * space.ndof}, got {w.shape}")
    return w


def assemble_form(kind, space, pspace=None, nu=1.0, w=None):
    """Assemble a bilinear form.

    Parameters
    ----------
    kind : str
        ``"diffusion"`` (vector, nu * grad u : grad v), ``"convection_c1"``
        ([C1(w)]_ij = c(w, N_j, N_i)), ``"convection_c2"`` ([C2(w)]_ij =
        c(N_j, w, N_i)), ``"divergence"`` (pressure rows, velocity columns),
        ``"mass"`` / ``"stiffness"`` (scalar, on ``space``), ``"vector_mass"``.
    space : FeSpace
        Velocity space (scalar space for ``mass``/``stiffness``).
    pspace : FeSpace, optional
        Pressure space, required for ``divergence``.
    nu : float
        Viscosity for ``diffusion``.
    w : array, optional
        Interleaved nodal convective field for the convection forms.

    Notes
    -----
    The divergence matrix carries a minus sign, ``[B]_kj = -(psi_k, div N_j)``,
    so the momentum rows read ``K u + B^T p = f`` and continuity ``B u = 0``.
    """
    W = space.wdet
    if kind == "mass":
        return space.scalar_matrix(np.einsum("eq,qa,qb->eab", W, space.phi, space.phi))
    if kind == "stiffness":
        return space.scalar_matrix(np.einsum("eq,eqad,eqbd->eab", W, space.grad, space.grad))
    if kind == "vector_mass":
        return space.blockdiag_matrix(np.einsum("eq,qa,qb->eab", W, space.phi, space.phi))
    if kind == "diffusion":
        return space.blockdiag_matrix(nu * np.einsum("eq,eqad,eqbd->eab", W, space.grad, space.grad))
    if kind == "convection_c1":
        w = _check_vector(space, w)
        wq = space.at_quad(w)
        loc = np.einsum("eq,qa,eqd,eqbd->eab", W, space.phi, wq, space.grad)
        return space.blockdiag_matrix(loc)
    if kind == "convection_c2":
        w = _check_vector(space, w)
        gw = space.grad_at_quad(w)
        loc = np.einsum("eq,qa,qb,eqcd->eacbd", W, space.phi, space.phi, gw)
        return space.coupled_matrix(loc)
    if kind == "divergence":
        if pspace is None:
            raise DimensionMismatch("divergence needs a pressure space")
        if pspace.mesh is not space.mesh:
            raise DimensionMismatch("velocity and pressure spaces live on different meshes")
        loc = -np.einsum("eq,qk,eqbd->ekbd", W, pspace.phi, space.grad)  # (nt, np_loc, nu_loc, 2)
        dp, du = pspace.cell_dofs, space.cell_dofs
        nt = dp.shape[0]
        rows = np.broadcast_to(dp[:, :, None, None], loc.shape).ravel()
        cols = np.broadcast_to(2 * du[:, None, :, None] + np.arange(2)[None, None, None, :], loc.shape).ravel()
        del nt
        return as_csr(sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(pspace.ndof, 2 * space.ndof)))
    raise ValueError(f"unknown form kind {kind!r}")


def _edge_geometry(space, facet_idx):
    """Quadrature data on selected facets: points (nf, nq, 2), weights (nf, nq), basis (nq, nloc_edge)."""
    f = space.mesh.facets[facet_idx]
    a = space.mesh.nodes[f[:, 0]]
    b = space.mesh.nodes[f[:, 1]]
    s = EDGE_RULE.points
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    length = np.linalg.norm(b - a, axis=1)
    wts = length[:, None] * EDGE_RULE.weights[None, :]
    if space.degree == 2:
        basis = np.column_stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])
    else:
        basis = np.column_stack([1 - s, s])
    return pts, wts, basis


def assemble_neumann(space, traction, tags):
    """Load vector ``[f]_i = int_{tags} t . N_i`` for a vector space.

    ``traction(x, y)`` returns an array broadcastable to (2, n).
    """
    idx = space.mesh.facets_with(tags)
    out = np.zeros(2 * space.ndof)
    if len(idx) == 0:
        return out
    pts, wts, basis = _edge_geometry(space, idx)
    t = np.asarray(traction(pts[..., 0], pts[..., 1]), dtype=float)
    t = np.broadcast_to(t, (2,) + pts.shape[:2])
    dofs = space.facet_dofs[idx]
    for c in range(2):
        loc = np.einsum("fq,qa,fq->fa", wts, basis, t[c])
        np.add.at(out, 2 * dofs.ravel() + c, loc.ravel())
    return out


def assemble_load(space, values_at_quad):
    """Load vector ``int f . N_i`` from values at quadrature points.

    Scalar input has shape (nt, nq); vector input (nt, nq, 2) gives an
    interleaved vector.
    """
    f = np.asarray(values_at_quad, float)
    d = space.cell_dofs
    if f.ndim == 2:
        loc = np.einsum("eq,qa,eq->ea", space.wdet, space.phi, f)
        return np.bincount(d.ravel(), loc.ravel(), minlength=space.ndof)
    loc = np.einsum("eq,qa,eqc->eac", space.wdet, space.phi, f)
    return np.bincount((2 * d[:, :, None] + np.arange(2)).ravel(), loc.ravel(), minlength=2 * space.ndof)


def apply_dirichlet(A, b, dofs, values):
    """Replace constrained rows by identity rows and set the rhs to the values.

    Columns are left untouched, so a symmetric matrix loses its symmetry.
    Returns new ``(A, b)``; the inputs are not modified.
    """
    A = as_csr(A)
    b = np.array(b, dtype=float, copy=True)
    dofs = np.asarray(dofs, dtype=np.int64)
    if dofs.size == 0:
        return A, b
    if dofs.min() < 0 or dofs.max() >= A.shape[0]:
        raise IndexError("Dirichlet dof out of range")
    keep = np.ones(A.shape[0])
    keep[dofs] = 0.0
    fixed = 1.0 - keep
    A = as_csr(sp.diags(keep) @ A + sp.diags(fixed))
    b[dofs] = values
    return A, b


def l2_project(samples, space):
    """L2 projection of quadrature-point samples onto ``space``.

    ``samples`` has shape (nt, nq) for a scalar field or (nt, nq, 2) for a
    vector field (returned interleaved).
    """
    samples = np.asarray(samples, float)
    rhs = assemble_load(space, samples)
    lu = space.mass_lu
    if samples.ndim == 2:
        return lu.solve(rhs)
    r = rhs.reshape(-1, 2)
    return to_vector(lu.solve(r[:, 0]), lu.solve(r[:, 1]))


def boundary_force(vspace, pspace, u, p, tags, nu):
    """Integrate the traction (nu grad u - p I) n over tagged facets.

    ``n`` is the unit normal pointing out of the fluid domain. Returns the
    (x, y) components, i.e. (drag, lift) for a body in a horizontal stream.
    """
    mesh = vspace.mesh
    idx = mesh.facets_with(tags)
    u = _check_vector(vspace, u)
    cells, loc_edge = mesh.facet_cells[idx, 0], mesh.facet_cells[idx, 1]
    s = EDGE_RULE.points
    lam = np.zeros((len(idx), len(s), 3))
    rows = np.arange(len(idx))
    lam[rows, :, loc_edge] = (1 - s)[None, :]
    lam[rows, :, (loc_edge + 1) % 3] = s[None, :]

    tri = mesh.triangles[cells]
    va = mesh.nodes[tri[rows, loc_edge]]
    vb = mesh.nodes[tri[rows, (loc_edge + 1) % 3]]
    d = vb - va
    length = np.linalg.norm(d, axis=1)
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]

    gref = vspace.ref_grads(lam)  # (nf, nq, 6, 2)
    invt = vspace.inv_jacobian_t[cells]
    g = np.einsum("fij,fqaj->fqai", invt, gref)
    ucell = u.reshape(-1, 2)[vspace.cell_dofs[cells]]  # (nf, 6, 2)
    grad_u = np.einsum("fqad,fac->fqcd", g, ucell)
    pcell = np.asarray(p, float)[pspace.cell_dofs[cells]]
    pq = np.einsum("fqa,fa->fq", pspace.values(lam), pcell)

    traction = nu * np.einsum("fqcd,fd->fqc", grad_u, normal) - pq[..., None] * normal[:, None, :]
    wts = length[:, None] * EDGE_RULE.weights[None, :]
    force = np.einsum("fq,fqc->c", wts, traction)
    return float(force[0]), float(force[1])


class TaylorHood:
    """P2 velocity / P1 pressure pair with the parameter-independent operators cached."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.V = FeSpace(mesh, 2)
        self.Q = FeSpace(mesh, 1)

    @property
    def nu_dofs(self):
        return 2 * self.V.ndof

    @property
    def np_dofs(self):
        return self.Q.ndof

    @cached_property
    def laplacian(self):
        """Vector diffusion operator with unit viscosity."""
        return assemble_form("diffusion", self.V, nu=1.0)

    @cached_property
    def B(self):
        return assemble_form("divergence", self.V, self.Q)

    def convection(self, w):
        """Return (C1(w), C2(w))."""
        return (
            assemble_form("convection_c1", self.V, w=w),
            assemble_form("convection_c2", self.V, w=w),
        )

    def c1(self, w):
        return assemble_form("convection_c1", self.V, w=w)
