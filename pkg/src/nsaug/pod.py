"""Snapshot sets and POD bases.

Snapshots are centred by their column mean, optionally scaled, and
decomposed by a thin SVD. The number of retained modes is the smallest
``n`` with ``sum(s[:n]) >= (1 - eps) * sum(s)``; note the criterion uses
singular values, not their squares.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AllZero, DimensionMismatch, ZeroSnapshot
from .linalg import thin_svd

__all__ = [
    "FULLORDER",
    "ARTIFICIAL",
    "SnapshotSet",
    "ReducedBasis",
    "center",
    "scale",
    "unscale",
    "truncate",
    "build_basis",
]

FULLORDER = "fullorder"
ARTIFICIAL = "artificial"


@dataclass
class SnapshotSet:
    """Columns of nodal vectors together with their parameter points.

    ``data`` has shape (ndof, nS) and ``parameters`` (nS, n_p). ``origin``
    marks each column as full-order or artificial.
    """

    field_kind: str
    data: np.ndarray
    parameters: np.ndarray
    origin: list = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim == 1:
            self.data = self.data[:, None]
        ns = self.data.shape[1]
        params = np.asarray(self.parameters, dtype=float)
        if params.ndim == 1:
            params = params.reshape(ns, -1) if ns else params.reshape(0, 1)
        self.parameters = params
        if self.origin is None:
            self.origin = [FULLORDER] * ns
        self.origin = list(self.origin)
        if len(self.parameters) != ns or len(self.origin) != ns:
            raise DimensionMismatch(
                f"{ns} columns but {len(self.parameters)} parameter points and {len(self.origin)} origin flags"
            )
        if self.field_kind not in ("velocity", "pressure"):
            raise ValueError(f"field_kind must be 'velocity' or 'pressure', got {self.field_kind!r}")

    @property
    def ndof(self):
        return self.data.shape[0]

    @property
    def n_snapshots(self):
        return self.data.shape[1]

    def __len__(self):
        return self.n_snapshots

    @property
    def fullorder_mask(self):
        return np.array([o == FULLORDER for o in self.origin], dtype=bool)

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return SnapshotSet(self.field_kind, self.data[:, idx], self.parameters[idx], [self.origin[i] for i in idx])

    def extended(self, columns, parameters, origin=ARTIFICIAL):
        columns = np.asarray(columns, dtype=float).reshape(self.ndof, -1)
        parameters = np.asarray(parameters, dtype=float).reshape(columns.shape[1], self.parameters.shape[1])
        return SnapshotSet(
            self.field_kind,
            np.hstack([self.data, columns]),
            np.vstack([self.parameters, parameters]),
            self.origin + [origin] * columns.shape[1],
        )


def center(snapshots):
    """Column mean and the centred snapshot matrix."""
    X = snapshots.data if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots, float)
    if X.shape[1] < 1:
        raise DimensionMismatch("need at least one snapshot")
    mean = X.mean(axis=1)
    return mean, X - mean[:, None]


def scale(snapshots, mode="none"):
    """Scale each column; returns the scaled set and the per-column factors.

    ``per_snapshot_max`` divides each column by its largest absolute entry.
    """
    X = snapshots.data if isinstance(snapshots, SnapshotSet) else np.asarray(snapshots, float)
    if mode == "none":
        factors = np.ones(X.shape[1])
    elif mode == "per_snapshot_max":
        factors = np.abs(X).max(axis=0)
        if np.any(factors == 0):
            raise ZeroSnapshot(f"columns {np.flatnonzero(factors == 0).tolist()} are identically zero")
    else:
        raise ValueError(f"unknown scaling mode {mode!r}")
    Y = X / factors
    if isinstance(snapshots, SnapshotSet):
        Y = SnapshotSet(snapshots.field_kind, Y, snapshots.parameters, snapshots.origin)
    return Y, factors


def unscale(snapshots, factors):
    if isinstance(snapshots, SnapshotSet):
        return SnapshotSet(snapshots.field_kind, snapshots.data * factors, snapshots.parameters, snapshots.origin)
    return np.asarray(snapshots, float) * factors


def truncate(singular_values, epsilon):
    """Smallest ``n`` with ``sum(s[:n]) >= (1 - epsilon) * sum(s)``."""
    s = np.asarray(singular_values, dtype=float)
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if s.size == 0 or not np.any(s > 0):
        raise AllZero("all singular values are zero")
    total = s.sum()
    cum = np.cumsum(s)
    # the last partial sum can differ from ``total`` by round-off
    cum[-1] = total
    return int(np.searchsorted(cum, (1 - epsilon) * total, side="left") + 1)


@dataclass
class ReducedBasis:
    """Mean plus the retained left singular vectors of the centred snapshots."""

    mean: np.ndarray
    modes: np.ndarray
    singular_values: np.ndarray
    epsilon: float
    field_kind: str = "velocity"

    @property
    def n(self):
        return self.modes.shape[1]

    @property
    def ndof(self):
        return self.modes.shape[0]

    def project(self, x):
        """Reduced coordinates ``U^T (x - mean)``."""
        return self.modes.T @ (np.asarray(x, float) - self.mean[..., None] if np.ndim(x) == 2 else np.asarray(x, float) - self.mean)

    def reconstruct(self, z):
        return self.mean + self.modes @ np.asarray(z, float)

    def captured_fraction(self):
        s = self.singular_values
        return s[: self.n].sum() / s.sum() if s.sum() > 0 else 1.0


def build_basis(snapshots, epsilon, scaling="none"):
    """Centre, optionally scale, decompose and truncate.

    With ``per_snapshot_max`` the centred columns are scaled before the SVD;
    columns that vanish after centring are left as they are. If every
    centred column is zero (a single snapshot, or identical ones) the basis
    is the mean alone with no modes.
    """
    mean, Xc = center(snapshots)
    kind = snapshots.field_kind if isinstance(snapshots, SnapshotSet) else "velocity"
    if scaling == "per_snapshot_max":
        f = np.abs(Xc).max(axis=0)
        f[f == 0] = 1.0
        Xc = Xc / f
    elif scaling != "none":
        raise ValueError(f"unknown scaling mode {scaling!r}")
    svd = thin_svd(Xc)
    s = svd.singular_values
    if not np.any(s > 0):
        return ReducedBasis(mean, np.zeros((len(mean), 0)), s, epsilon, kind)
    n = truncate(s, epsilon)
    return ReducedBasis(mean, svd.U[:, :n].copy(), s, epsilon, kind)
