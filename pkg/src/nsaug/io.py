"""File formats: SNAP1 snapshot files, basis archives, run configs, VTK, CSV.

SNAP1 layout (all little-endian)::

    b"SNAP1"
    int64 ndof, int64 nS, int64 n_p
    float64[nS * n_p]   parameter points, one point after another
    float64[ndof * nS]  snapshot matrix in column-major order
"""

import csv
import struct

import numpy as np

from .errors import IoError, ParseError
from .pod import FULLORDER, ReducedBasis, SnapshotSet

__all__ = [
    "write_snapshots",
    "read_snapshots",
    "save_basis",
    "load_basis",
    "read_config",
    "write_config",
    "write_vtk",
    "read_vtk",
    "write_csv",
]

SNAP_MAGIC = b"SNAP1"


def write_snapshots(path, snapshots):
    X = np.asarray(snapshots.data, dtype="<f8")
    params = np.asarray(snapshots.parameters, dtype="<f8")
    params = params.reshape(X.shape[1], params.shape[-1] if params.ndim == 2 else -1)
    header = SNAP_MAGIC + struct.pack("<3q", X.shape[0], X.shape[1], params.shape[1])
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(params.tobytes(order="C"))
            fh.write(X.tobytes(order="F"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_snapshots(path, field_kind="velocity", origin=FULLORDER):
    """Read a SNAP1 file; every column gets the same ``origin`` flag."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:5] != SNAP_MAGIC:
        raise ParseError(f"{path}: not a SNAP1 file")
    if len(raw) < 29:
        raise ParseError(f"{path}: truncated header")
    ndof, ns, n_p = struct.unpack("<3q", raw[5:29])
    if min(ndof, ns, n_p) < 0:
        raise ParseError(f"{path}: negative counts in header")
    expected = 29 + 8 * (ns * n_p + ndof * ns)
    if len(raw) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=29)
    params = body[: ns * n_p].reshape(ns, n_p).astype(float)
    data = body[ns * n_p :].reshape(ndof, ns, order="F").astype(float)
    return SnapshotSet(field_kind, data, params, [origin] * ns)


def save_basis(path, basis):
    try:
        with open(path, "wb") as fh:
            np.savez(
                fh,
                mean=basis.mean,
                modes=basis.modes,
                singular_values=basis.singular_values,
                epsilon=np.array(basis.epsilon),
                field_kind=np.array(basis.field_kind),
            )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_basis(path):
    try:
        with np.load(path) as z:
            return ReducedBasis(
                z["mean"], z["modes"], z["singular_values"], float(z["epsilon"]), str(z["field_kind"])
            )
    except (OSError, KeyError, ValueError) as exc:
        raise IoError(f"cannot read basis {path}: {exc}") from exc


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment. Returns a dict of strings."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if not key:
            raise ParseError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def write_config(path, mapping):
    with open(path, "w") as fh:
        for k, v in mapping.items():
            fh.write(f"{k} = {v}\n")


# VTK -------------------------------------------------------------------------

VTK_TRIANGLE = 5


def _refined(mesh, space2):
    cd = space2.cell_dofs  # v0 v1 v2 e01 e12 e20
    sub = np.concatenate(
        [cd[:, [0, 3, 5]], cd[:, [3, 1, 4]], cd[:, [5, 4, 2]], cd[:, [3, 4, 5]]], axis=0
    )
    return space2.dof_coords, sub


def _classify(arr, nv, ndof2):
    n = arr.shape[0]
    if n in (nv, ndof2):
        return "scalar"
    if n in (2 * nv, 2 * ndof2):
        return "vector"
    raise IoError(f"field of length {n} matches neither {nv}/{ndof2} scalars nor interleaved vectors")


def _to_points(arr, kind, nv, ndof2, refine, mesh):
    """Values at the output points (vertices, or P2 nodes when refined)."""
    vals = arr.reshape(-1, 2) if kind == "vector" else arr[:, None]
    if not refine:
        return vals[:nv]
    if len(vals) == ndof2:
        return vals
    # P1 data on the refined points: midpoints take the edge average
    e = mesh.edges
    return np.vstack([vals, 0.5 * (vals[e[:, 0]] + vals[e[:, 1]])])


def write_vtk(mesh, fields, path, refine=False, title="nsaug fields"):
    """Legacy ASCII unstructured grid with point data.

    ``fields`` maps names to nodal arrays. Length ``nv`` or ``ndof(P2)`` is
    a scalar, twice either is an interleaved vector. Without ``refine`` P2
    data are written at the vertices only; with it every triangle is split
    into four through its edge midpoints so all P2 nodes appear.
    """
    from .fem import FeSpace

    nv = mesh.nv
    ndof2 = nv + len(mesh.edges)
    if refine:
        pts, tris = _refined(mesh, FeSpace(mesh, 2))
    else:
        pts, tris = mesh.nodes, mesh.triangles
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {len(pts)} double")
    lines.extend(f"{x:.17g} {y:.17g} 0" for x, y in pts)
    lines.append(f"CELLS {len(tris)} {4 * len(tris)}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in tris)
    lines.append(f"CELL_TYPES {len(tris)}")
    lines.extend([str(VTK_TRIANGLE)] * len(tris))
    if fields:
        lines.append(f"POINT_DATA {len(pts)}")
        for name, arr in fields.items():
            arr = np.asarray(arr, dtype=float)
            kind = _classify(arr, nv, ndof2)
            vals = _to_points(arr, kind, nv, ndof2, refine, mesh)
            safe = "_".join(str(name).split())
            if kind == "vector":
                lines.append(f"VECTORS {safe} double")
                lines.extend(f"{a:.17g} {b:.17g} 0" for a, b in vals)
            else:
                lines.append(f"SCALARS {safe} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(f"{v:.17g}" for v in vals[:, 0])
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_vtk(path):
    """Minimal reader for files produced by :func:`write_vtk`.

    Returns ``(points, triangles, fields)``.
    """
    with open(path) as fh:
        tokens = fh.read().split("\n")
    it = iter(tokens[4:])
    points, tris, fields = None, None, {}
    for line in it:
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "POINTS":
            n = int(parts[1])
            points = np.array([next(it).split()[:2] for _ in range(n)], dtype=float)
        elif key == "CELLS":
            n = int(parts[1])
            tris = np.array([next(it).split()[1:] for _ in range(n)], dtype=np.int64)
        elif key == "CELL_TYPES":
            for _ in range(int(parts[1])):
                next(it)
        elif key == "VECTORS":
            fields[parts[1]] = np.array([next(it).split()[:2] for _ in range(len(points))], dtype=float)
        elif key == "SCALARS":
            next(it)
            fields[parts[1]] = np.array([next(it) for _ in range(len(points))], dtype=float)
    return points, tris, fields


def write_csv(path, header, rows):
    """Comma-separated table; floats use full round-trip precision."""

    def fmt(v):
        return repr(float(v)) if isinstance(v, (float, np.floating)) else v

    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows([fmt(v) for v in row] for row in rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
