"""Piecewise-linear FEM operators on embedded triangle meshes.

Stiffness is the cotangent Laplacian assembled face by face from the
embedded geometry; mass is the consistent P1 matrix (A/6 diagonal, A/12
off-diagonal contributions per face).  The lumped mass vector is the row
sum of the consistent matrix and is used wherever an inverse is needed.

All quadratic-form helpers accept either a plain value array of length
``vertex_count`` or a :class:`NodalFunction`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import MeshError, TriMesh, face_areas

__all__ = [
    "FemOperators",
    "NodalFunction",
    "assemble",
    "interpolate",
    "coordinate_function",
    "rayleigh",
    "project_mean_zero",
    "mean_curvature",
    "vertex_normals",
    "willmore_energy",
    "takahashi_residual",
    "face_gradient_sq",
    "coordinate_gradient_identity",
    "export_coo",
]

# A face whose area falls below this is treated as degenerate: the cotangent
# weights blow up and the element matrices lose meaning.
_AREA_FLOOR = 1e-14

_ZERO_NORM_TOL = 1e-14


@dataclass(frozen=True)
class NodalFunction:
    """Vertex-sampled scalar function on a fixed mesh."""

    values: np.ndarray
    mesh: TriMesh

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.vertex_count,):
            raise ValueError(
                "values must have one entry per vertex, got shape %r for %d vertices"
                % (values.shape, self.mesh.vertex_count)
            )
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class FemOperators:
    """Assembled stiffness/mass pair for one mesh."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    mass_lumped: np.ndarray
    dim: int


def _values(u, dim=None):
    if isinstance(u, NodalFunction):
        v = u.values
    else:
        v = np.asarray(u, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a one-dimensional nodal value array")
    if dim is not None and v.shape[0] != dim:
        raise ValueError("nodal array has length %d, expected %d" % (v.shape[0], dim))
    if not np.all(np.isfinite(v)):
        raise ValueError("nodal values contain non-finite entries")
    return v


def _face_geometry(mesh):
    """Edge vectors, Gram entries and areas for every face."""
    V, F = mesh.vertices, mesh.faces
    u = V[F[:, 1]] - V[F[:, 0]]
    v = V[F[:, 2]] - V[F[:, 0]]
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    gram = uu * vv - uv * uv
    areas = 0.5 * np.sqrt(np.maximum(gram, 0.0))
    return u, v, uu, vv, uv, areas


def assemble(mesh: TriMesh) -> FemOperators:
    """Build cotangent stiffness and consistent mass for ``mesh``.

    Raises :class:`MeshError` naming the first degenerate face if any
    triangle has (numerically) zero area.
    """
    V, F = mesh.vertices, mesh.faces
    nv = mesh.vertex_count
    _, _, _, _, _, areas = _face_geometry(mesh)
    bad = np.nonzero(areas < _AREA_FLOOR)[0]
    if bad.size:
        raise MeshError("degenerate face %d has zero area" % bad[0])

    p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]

    def cot(a, b):
        # cotangent of the angle between edge vectors a and b
        cross_sq = (
            np.einsum("ij,ij->i", a, a) * np.einsum("ij,ij->i", b, b)
            - np.einsum("ij,ij->i", a, b) ** 2
        )
        return np.einsum("ij,ij->i", a, b) / np.sqrt(np.maximum(cross_sq, _AREA_FLOOR**2))

    c0 = cot(p1 - p0, p2 - p0)  # angle at vertex 0, opposite edge (1,2)
    c1 = cot(p2 - p1, p0 - p1)
    c2 = cot(p0 - p2, p1 - p2)

    rows, cols, vals = [], [], []
    for (a, b), c in (
        ((F[:, 1], F[:, 2]), c0),
        ((F[:, 2], F[:, 0]), c1),
        ((F[:, 0], F[:, 1]), c2),
    ):
        half = 0.5 * c
        rows += [a, b, a, b]
        cols += [b, a, a, b]
        vals += [-half, -half, half, half]
    stiffness = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv),
    )

    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(F[:, a])
            cols.append(F[:, b])
            vals.append(areas * (1.0 / 6.0 if a == b else 1.0 / 12.0))
    mass = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv),
    )

    lumped = np.asarray(mass.sum(axis=1)).ravel()
    return FemOperators(stiffness=stiffness, mass=mass, mass_lumped=lumped, dim=nv)


def interpolate(mesh: TriMesh, f) -> NodalFunction:
    """Sample a callable of the ambient position at every vertex."""
    values = np.empty(mesh.vertex_count)
    for i, vertex in enumerate(mesh.vertices):
        values[i] = f(vertex)
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        raise ValueError("interpolated value at vertex %d is not finite" % bad[0])
    return NodalFunction(values, mesh)


def coordinate_function(mesh: TriMesh, index: int) -> NodalFunction:
    """Restriction of the ambient coordinate ``index`` (1-based) to the mesh."""
    if not 1 <= index <= mesh.vertices.shape[1]:
        raise ValueError("coordinate index must be in 1..%d" % mesh.vertices.shape[1])
    return NodalFunction(mesh.vertices[:, index - 1].copy(), mesh)


def rayleigh(ops: FemOperators, u) -> float:
    """Rayleigh quotient u'Su / u'Mu.  Rejects (numerically) zero functions."""
    v = _values(u, ops.dim)
    num = float(v @ (ops.stiffness @ v))
    den = float(v @ (ops.mass @ v))
    if den <= _ZERO_NORM_TOL * float(v @ v):
        raise ValueError("Rayleigh quotient of a numerically zero function")
    return num / den


def project_mean_zero(ops: FemOperators, u):
    """Remove the M-weighted mean: w = u - (1'Mu / 1'M1) 1."""
    v = _values(u, ops.dim)
    ones = np.ones(ops.dim)
    shift = float(ones @ (ops.mass @ v)) / float(ones @ (ops.mass @ ones))
    w = v - shift
    if isinstance(u, NodalFunction):
        return NodalFunction(w, u.mesh)
    return w


def _face_normals(mesh):
    """Unit normal of each face within the tangent space of the 3-sphere.

    In four ambient dimensions a triangle has a 2-plane of directions
    orthogonal to it; the face normal used here is the generalized cross
    product of (centroid, edge1, edge2), the unique direction orthogonal
    to both edges and to the radial direction at the centroid.
    """
    V, F = mesh.vertices, mesh.faces
    A = (V[F[:, 0]] + V[F[:, 1]] + V[F[:, 2]]) / 3.0
    B = V[F[:, 1]] - V[F[:, 0]]
    C = V[F[:, 2]] - V[F[:, 0]]

    def det3(i, j, k):
        return (
            A[:, i] * (B[:, j] * C[:, k] - B[:, k] * C[:, j])
            - A[:, j] * (B[:, i] * C[:, k] - B[:, k] * C[:, i])
            + A[:, k] * (B[:, i] * C[:, j] - B[:, j] * C[:, i])
        )

    n = np.stack([det3(1, 2, 3), -det3(0, 2, 3), det3(0, 1, 3), -det3(0, 1, 2)], axis=1)
    norms = np.linalg.norm(n, axis=1, keepdims=True)
    if np.any(norms <= _AREA_FLOOR):
        raise MeshError("degenerate face %d has no well-defined normal"
                        % int(np.nonzero(norms.ravel() <= _AREA_FLOOR)[0][0]))
    return n / norms


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Area-weighted vertex normals, tangent to the 3-sphere, consistent sign.

    The orientation of the face list fixes the field up to one global sign;
    that sign is pinned by requiring the first sufficiently nonzero entry of
    vertex 0's normal, scanned in coordinate order 3, 4, 1, 2, to be positive.
    """
    if mesh.vertices.shape[1] != 4:
        raise ValueError("vertex normals are defined for 4-dimensional ambient meshes")
    areas = face_areas(mesh.vertices, mesh.faces)
    fn = _face_normals(mesh)
    vn = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(vn, mesh.faces[:, k], fn * areas[:, None])
    # keep the field tangent to the unit 3-sphere
    vn -= np.einsum("ij,ij->i", vn, mesh.vertices)[:, None] * mesh.vertices
    norms = np.linalg.norm(vn, axis=1, keepdims=True)
    if np.any(norms <= _AREA_FLOOR):
        raise MeshError("vertex %d has no well-defined normal"
                        % int(np.nonzero(norms.ravel() <= _AREA_FLOOR)[0][0]))
    vn /= norms
    for c in (2, 3, 0, 1):
        if abs(vn[0, c]) > 1e-9:
            if vn[0, c] < 0:
                vn = -vn
            break
    return vn


def mean_curvature(mesh: TriMesh, ops: FemOperators) -> np.ndarray:
    """Signed discrete mean curvature at each vertex.

    Applies L x = -(lumped mass)^{-1} S x to the coordinate columns, forms
    w = (L x + 2 x) / 2 and reports its component along the unit normal
    field from :func:`vertex_normals`.  For a minimal surface w is normal
    and equals the mean curvature vector, so the report is zero up to
    discretization; the signed component discards the tangential part,
    which is pure discretization noise.
    """
    if mesh.vertices.shape[1] != 4:
        raise ValueError("mean curvature is defined for 4-dimensional ambient meshes")
    Lx = -(ops.stiffness @ mesh.vertices) / ops.mass_lumped[:, None]
    w = 0.5 * (Lx + 2.0 * mesh.vertices)
    normals = vertex_normals(mesh)
    return np.einsum("ij,ij->i", w, normals)


def willmore_energy(mesh: TriMesh, ops: FemOperators) -> float:
    """Integral of (1 + H^2) against the lumped mass."""
    H = mean_curvature(mesh, ops)
    return float(np.sum((1.0 + H * H) * ops.mass_lumped))


def takahashi_residual(ops: FemOperators, u, n: int) -> float:
    """Relative eigenfunction residual ||S u - n M u|| / (n ||u||_M).

    The residual norm is the lumped-mass dual norm sqrt(sum r_i^2 / m_i),
    so the report is scale invariant and mesh-size consistent.  A function
    that vanishes identically satisfies the identity trivially and reports
    zero.
    """
    if n <= 0:
        raise ValueError("n must be a positive integer")
    v = _values(u, ops.dim)
    mnorm_sq = float(v @ (ops.mass @ v))
    if mnorm_sq <= _ZERO_NORM_TOL * max(float(v @ v), 1.0):
        return 0.0
    r = ops.stiffness @ v - n * (ops.mass @ v)
    dual = float(np.sum(r * r / ops.mass_lumped))
    return float(np.sqrt(dual) / (n * np.sqrt(mnorm_sq)))


def face_gradient_sq(mesh: TriMesh, u) -> np.ndarray:
    """Squared norm of the piecewise-constant gradient of ``u`` per face."""
    v = _values(u, mesh.vertex_count)
    eu, ev, uu, vv, uv, areas = _face_geometry(mesh)
    bad = np.nonzero(areas < _AREA_FLOOR)[0]
    if bad.size:
        raise MeshError("degenerate face %d has zero area" % bad[0])
    F = mesh.faces
    d1 = v[F[:, 1]] - v[F[:, 0]]
    d2 = v[F[:, 2]] - v[F[:, 0]]
    det = uu * vv - uv * uv
    a = (vv * d1 - uv * d2) / det
    b = (uu * d2 - uv * d1) / det
    return a * a * uu + 2.0 * a * b * uv + b * b * vv


def coordinate_gradient_identity(mesh: TriMesh) -> np.ndarray:
    """Per-face sum of |grad x_i|^2 over all ambient coordinates.

    On any surface embedded in a round sphere the tangential gradients of
    the ambient coordinates satisfy sum_i |grad x_i|^2 = dim(surface), here
    2.  For piecewise-linear interpolation the identity is exact face by
    face: the gradient of each coordinate is the projection of a standard
    basis vector onto the face plane, and the squared norms sum to the
    trace of that projection.
    """
    total = np.zeros(mesh.face_count)
    for i in range(mesh.vertices.shape[1]):
        total += face_gradient_sq(mesh, mesh.vertices[:, i])
    return total


def export_coo(matrix) -> str:
    """Serialize a sparse matrix as 'row col value' lines, row-major order."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    buf = io.StringIO()
    buf.write("%d %d %d\n" % (coo.shape[0], coo.shape[1], coo.nnz))
    for idx in order:
        buf.write("%d %d %s\n" % (coo.row[idx], coo.col[idx], repr(float(coo.data[idx]))))
    return buf.getvalue()
