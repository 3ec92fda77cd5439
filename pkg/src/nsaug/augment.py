"""Artificial velocity snapshots built from pairs of computed ones.

Three strategies are available:

``solenoidal``
    Stream functions of both snapshots are averaged geometrically and the
    rotated gradient of the average is projected onto the velocity space.
``solenoidal_oseen``
    As above, then the result is used as the frozen convective field of an
    Oseen problem whose solution is kept.
``linear_oseen``
    The convective field is the plain convex combination of the pair.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateSet, DimensionMismatch
from .fem import l2_project
from .fom import _bump, boundary_trace_data, solve_oseen, solve_poisson_neumann
from .pod import ARTIFICIAL

__all__ = [
    "STRATEGIES",
    "PairList",
    "AugmentConfig",
    "pair_snapshots",
    "stream_function",
    "geometric_average",
    "velocity_from_stream",
    "linear_combination",
    "oseen_enhance",
    "augment_dataset",
    "divergence_ratio",
    "stream_pin_node",
]

STRATEGIES = ("solenoidal", "solenoidal_oseen", "linear_oseen")
DEFAULT_ALPHAS = tuple(np.round(np.arange(1, 10) * 0.1, 12))


@dataclass(frozen=True)
class PairList:
    pairs: tuple

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def as_array(self):
        return np.array(self.pairs, dtype=np.int64).reshape(-1, 2)


@dataclass
class AugmentConfig:
    strategy: str = "linear_oseen"
    alphas: tuple = DEFAULT_ALPHAS
    positivity_shift_floor: float = 1.0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        a = np.asarray(self.alphas, dtype=float).ravel()
        if np.any((a <= 0) | (a >= 1)):
            raise ConfigError("alphas must lie strictly inside (0, 1)")
        if len(np.unique(a)) != len(a):
            raise ConfigError("duplicate alphas")
        self.alphas = tuple(float(x) for x in a)


def pair_snapshots(params, box=None):
    """Pair every point with its nearest neighbour along each parameter axis.

    Coordinates are first mapped to [0, 1] with ``box`` (default: the
    bounding box of the points). Points are visited in lexicographic order.
    Along axis ``d`` the candidates are the points whose displacement is
    strictly dominated by its ``d`` component; if there are none, any point
    with a different ``d`` coordinate qualifies. The closest candidate
    wins. Candidates equidistant up to round-off (1e-9 relative) are
    ranked: one with no partner yet, then one not yet paired with the
    current point, then the earliest visited.
    """
    X = np.atleast_2d(np.asarray(params, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1 and np.ndim(params) == 1:
        X = X.T
    n = len(X)
    if n < 2:
        raise DegenerateSet("pairing needs at least two points")
    if box is None:
        lo, hi = X.min(axis=0), X.max(axis=0)
    else:
        lo, hi = np.asarray(box, float).T
    width = hi - lo
    Y = np.where(width > 0, (X - lo) / np.where(width > 0, width, 1.0), 0.0)
    if np.all(Y == Y[0]):
        raise DegenerateSet("all parameter points coincide")
    order = np.lexsort(Y.T[::-1])
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    axes = [d for d in range(Y.shape[1]) if np.ptp(Y[:, d]) > 0]

    pairs = set()
    has_partner = np.zeros(n, dtype=bool)
    for i in order:
        delta = Y - Y[i]
        dist = np.linalg.norm(delta, axis=1)
        for d in axes:
            along = np.abs(delta[:, d])
            other = np.delete(np.abs(delta), d, axis=1).max(axis=1) if Y.shape[1] > 1 else np.zeros(n)
            cand = np.flatnonzero((along > 0) & (along > other))
            if cand.size == 0:
                cand = np.flatnonzero(along > 0)
            if cand.size == 0:
                continue
            best = dist[cand].min()
            tied = cand[dist[cand] <= best * (1 + 1e-9)]
            j = min(tied, key=lambda j: (has_partner[j], (min(i, j), max(i, j)) in pairs, rank[j]))
            key = (int(min(i, j)), int(max(i, j)))
            if key not in pairs:
                pairs.add(key)
                has_partner[[i, j]] = True
    return PairList(tuple(sorted(pairs)))


def stream_pin_node(mesh):
    """Lowest-index boundary vertex, where every stream function is zero."""
    return int(mesh.boundary_edges.min())


def stream_function(problem, u, counter=None):
    """Solve ``-lap(psi) = d(u_y)/dx - d(u_x)/dy`` with ``grad(psi).n = (-u_y, u_x).n``."""
    V = problem.V
    u = np.asarray(u, float)
    if u.shape != (2 * V.ndof,):
        raise DimensionMismatch(f"velocity of length {2 * V.ndof} expected, got {u.shape}")
    g = V.grad_at_quad(u)  # (nt, nq, comp, dir)
    vort = g[..., 1, 0] - g[..., 0, 1]
    bt = boundary_trace_data(V)
    ub = u.reshape(-1, 2)[bt["dofs"]]  # (nb, 3, 2)
    uq = np.einsum("qa,bac->bqc", bt["basis"], ub)
    nrm = bt["normals"]
    flux = -uq[..., 1] * nrm[:, None, 0] + uq[..., 0] * nrm[:, None, 1]
    return solve_poisson_neumann(V, vort, flux, stream_pin_node(problem.mesh), counter=counter)


def geometric_average(psi_i, psi_j, alpha, floor=1.0):
    """Nodal ``a**alpha * b**(1 - alpha)`` after shifting both minima to ``floor``."""
    a = np.asarray(psi_i, float)
    b = np.asarray(psi_j, float)
    a = a + (floor - a.min())
    b = b + (floor - b.min())
    return np.exp(alpha * np.log(a) + (1 - alpha) * np.log(b))


def velocity_from_stream(problem, psi, counter=None):
    """L2 projection of ``(d(psi)/dy, -d(psi)/dx)`` onto the velocity space."""
    V = problem.V
    g = V.grad_at_quad(np.asarray(psi, float))  # (nt, nq, 2)
    samples = np.stack([g[..., 1], -g[..., 0]], axis=-1)
    _bump(counter, "projection")
    return l2_project(samples, V)


def linear_combination(u_i, u_j, alpha):
    return alpha * np.asarray(u_i, float) + (1 - alpha) * np.asarray(u_j, float)


def oseen_enhance(problem, u_star, mu_i, mu_j, alpha, counter=None):
    """Oseen solution convected by ``u_star`` with data at the blended parameter."""
    mu_eff = alpha * np.asarray(mu_i, float) + (1 - alpha) * np.asarray(mu_j, float)
    u, _ = solve_oseen(problem, mu_eff, u_star, counter=counter)
    return u


def divergence_ratio(problem, u):
    """Weak divergence ``|B u| / |u|``."""
    nu = np.linalg.norm(u)
    return float(np.linalg.norm(problem.fe.B @ u) / nu) if nu > 0 else 0.0


def augment_dataset(snapshots, problem, config, counter=None, pairs=None):
    """Append ``|pairs| * |alphas|`` artificial velocities to ``snapshots``.

    Pairs are formed among the full-order columns only (indices refer to
    the full set). Stream functions are computed once per snapshot used.
    """
    if snapshots.field_kind != "velocity":
        raise ConfigError("only velocity snapshots are augmented")
    orig = np.flatnonzero(snapshots.fullorder_mask)
    if len(orig) < 2:
        raise DegenerateSet("augmentation needs at least two full-order snapshots")
    if not config.alphas:
        return snapshots
    if pairs is None:
        local = pair_snapshots(snapshots.parameters[orig], problem.parameter_box)
        pairs = PairList(tuple((int(orig[a]), int(orig[b])) for a, b in local))
    X, M = snapshots.data, snapshots.parameters
    psi = {}

    def stream(k):
        if k not in psi:
            psi[k] = stream_function(problem, X[:, k], counter)
        return psi[k]

    cols, params = [], []
    for i, j in pairs:
        for a in config.alphas:
            if config.strategy == "linear_oseen":
                u_star = linear_combination(X[:, i], X[:, j], a)
            else:
                avg = geometric_average(stream(i), stream(j), a, config.positivity_shift_floor)
                u_star = velocity_from_stream(problem, avg, counter)
            if config.strategy != "solenoidal":
                u_star = oseen_enhance(problem, u_star, M[i], M[j], a, counter)
            cols.append(u_star)
            params.append(a * M[i] + (1 - a) * M[j])
    return snapshots.extended(np.column_stack(cols), np.array(params), ARTIFICIAL)
