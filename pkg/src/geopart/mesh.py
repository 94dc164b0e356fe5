"""Closed triangulated surfaces: generation, refinement, validation and OFF I/O.

Meshes are immutable once constructed. Implicit surfaces are meshed by
uniform-grid contouring followed by a Newton projection onto the zero level
set; spheres use icosahedral subdivision so that refinement hierarchies are
exact.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sparse

from . import geom


class MeshError(ValueError):
    """Raised when a triangle soup fails the closed-manifold contract."""


@dataclass(frozen=True)
class ImplicitSurface:
    """Scalar field with analytic gradient; the surface is the zero level set."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    bbox: np.ndarray  # (2, 3): min corner, max corner

    def projector(self, f_tol: float) -> Callable[[np.ndarray], np.ndarray]:
        """Newton projection of points onto {f = 0} along grad f."""

        def project(points):
            p = np.array(points, dtype=float)
            for _ in range(50):
                fv = self.f(p)
                if np.max(np.abs(fv)) <= f_tol:
                    break
                g = self.grad(p)
                g2 = np.maximum(np.einsum("ij,ij->i", g, g), 1e-300)
                p -= (fv / g2)[:, None] * g
            return p

        return project


class SurfaceMesh:
    """Closed oriented triangle mesh embedded in 3-space.

    Attributes
    ----------
    vertices : (N, 3) float array
    triangles : (T, 3) int array, consistently oriented
    edges : (E, 2) int array, each row sorted, unique
    edge_triangles : (E, 2) int array, the two incident triangles
    tri_edges : (T, 3) int array, edge ids; entry k is the edge from
        vertex k to vertex (k + 1) mod 3 of the triangle
    projection : optional handle mapping points back onto the smooth surface
    """

    def __init__(self, vertices, triangles, projection=None, name=""):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.projection = projection
        self.name = name
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must have shape (N, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (T, 3)")
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle index exceeds vertex count")
        self._build_edges()
        self.validate()

    def _build_edges(self):
        t = self.triangles
        directed = np.concatenate(
            [t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=0
        )
        undirected = np.sort(directed, axis=1)
        self.edges, inverse = np.unique(undirected, axis=0, return_inverse=True)
        ntri = len(t)
        self.tri_edges = np.stack(
            [inverse[:ntri], inverse[ntri:2 * ntri], inverse[2 * ntri:]], axis=1
        )
        counts = np.bincount(inverse, minlength=len(self.edges))
        if not np.all(counts == 2):
            bad = int(np.sum(counts != 2))
            raise MeshError(f"{bad} edges are not shared by exactly 2 triangles")
        # forward flag: directed occurrence already sorted (tail < head)
        forward = directed[:, 0] < directed[:, 1]
        orient_sum = np.zeros(len(self.edges), dtype=np.int64)
        np.add.at(orient_sum, inverse, np.where(forward, 1, -1))
        if np.any(orient_sum != 0):
            raise MeshError("inconsistently oriented triangles")
        tri_of = np.tile(np.arange(ntri), 3)
        order = np.argsort(inverse, kind="stable")
        self.edge_triangles = tri_of[order].reshape(-1, 2)

    # -- basic quantities ------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def euler_characteristic(self):
        return self.num_vertices - self.num_edges + self.num_triangles

    def triangle_areas(self):
        return geom.triangle_areas(self.vertices, self.triangles)

    def area(self):
        return float(self.triangle_areas().sum())

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    def mean_edge_length(self):
        return float(self.edge_lengths().mean())

    def validate(self):
        areas = self.triangle_areas()
        if len(areas) and areas.min() <= 1e-14 * areas.mean():
            raise MeshError("degenerate triangle (area below 1e-14 x mean)")

    def statistics(self):
        return {
            "vertices": self.num_vertices,
            "edges": self.num_edges,
            "triangles": self.num_triangles,
            "area": self.area(),
            "mean_edge_length": self.mean_edge_length(),
            "euler_characteristic": self.euler_characteristic,
        }


# -- sphere meshes -------------------------------------------------------


def _icosahedron():
    r = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, r, 0], [1, r, 0], [-1, -r, 0], [1, -r, 0],
            [0, -1, r], [0, 1, r], [0, -1, -r], [0, 1, -r],
            [r, 0, -1], [r, 0, 1], [-r, 0, -1], [-r, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v, f


def _sphere_projection(points):
    p = np.asarray(points, dtype=float)
    return p / np.linalg.norm(p, axis=1)[:, None]


def generate_icosphere(subdivisions: int) -> SurfaceMesh:
    """Icosahedral sphere mesh with 10 * 4**s + 2 vertices on the unit sphere."""
    if not 0 <= subdivisions <= 8:
        raise ValueError("subdivisions must be in [0, 8]")
    v, f = _icosahedron()
    mesh = SurfaceMesh(v, f, projection=_sphere_projection, name="sphere")
    for _ in range(subdivisions):
        mesh, _ = refine(mesh)
    return mesh


# -- refinement ----------------------------------------------------------


def refine(mesh: SurfaceMesh):
    """Uniform 1-to-4 subdivision.

    New vertices are edge midpoints, projected back to the underlying
    surface when the mesh carries a projection handle. Returns the refined
    mesh and the sparse P1 prolongation matrix (N_fine x N_coarse).
    """
    nv = mesh.num_vertices
    mids = 0.5 * (
        mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]]
    )
    if mesh.projection is not None:
        mids = mesh.projection(mids)
    fine_vertices = np.vstack([mesh.vertices, mids])

    t = mesh.triangles
    m01 = nv + mesh.tri_edges[:, 0]
    m12 = nv + mesh.tri_edges[:, 1]
    m20 = nv + mesh.tri_edges[:, 2]
    fine_triangles = np.concatenate(
        [
            np.stack([t[:, 0], m01, m20], axis=1),
            np.stack([t[:, 1], m12, m01], axis=1),
            np.stack([t[:, 2], m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ],
        axis=0,
    )
    fine = SurfaceMesh(
        fine_vertices, fine_triangles, projection=mesh.projection, name=mesh.name
    )

    ne = mesh.num_edges
    rows = np.concatenate(
        [np.arange(nv), nv + np.arange(ne), nv + np.arange(ne)]
    )
    cols = np.concatenate([np.arange(nv), mesh.edges[:, 0], mesh.edges[:, 1]])
    vals = np.concatenate([np.ones(nv), np.full(2 * ne, 0.5)])
    prolong = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(nv + ne, nv)
    )
    return fine, prolong


# -- implicit surfaces ---------------------------------------------------


def torus_surface(outer_radius: float = 1.0, inner_radius: float = 0.6) -> ImplicitSurface:
    R, r = float(outer_radius), float(inner_radius)

    def f(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        q = x * x + y * y + z * z + R * R - r * r
        return q * q - 4.0 * R * R * (x * x + y * y)

    def grad(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        q = x * x + y * y + z * z + R * R - r * r
        gx = 4.0 * q * x - 8.0 * R * R * x
        gy = 4.0 * q * y - 8.0 * R * R * y
        gz = 4.0 * q * z
        return np.stack([gx, gy, gz], axis=-1)

    pad = 0.15
    bbox = np.array(
        [[-(R + r) - pad, -(R + r) - pad, -r - pad],
         [R + r + pad, R + r + pad, r + pad]]
    )
    return ImplicitSurface("torus", f, grad, bbox)


def double_torus_surface() -> ImplicitSurface:
    def poly(x):
        return x * (x - 1.0) ** 2 * (x - 2.0)

    def dpoly(x):
        return (x - 1.0) * (2.0 * x * (x - 2.0) + (x - 1.0) * (2.0 * x - 2.0))

    def f(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        w = poly(x) + y * y
        return w * w + z * z - 0.03

    def grad(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        w = poly(x) + y * y
        return np.stack(
            [2.0 * w * dpoly(x), 4.0 * w * y, 2.0 * z], axis=-1
        )

    bbox = np.array([[-0.25, -0.85, -0.35], [2.25, 0.85, 0.35]])
    return ImplicitSurface("double-torus", f, grad, bbox)


def banchoff_chmutov_surface() -> ImplicitSurface:
    """Zero level set of T4(x) + T4(y) + T4(z), T4(t) = 8t^4 - 8t^2 + 1."""

    def t4(t):
        return 8.0 * t ** 4 - 8.0 * t ** 2 + 1.0

    def dt4(t):
        return 32.0 * t ** 3 - 16.0 * t

    def f(p):
        return t4(p[..., 0]) + t4(p[..., 1]) + t4(p[..., 2])

    def grad(p):
        return np.stack(
            [dt4(p[..., 0]), dt4(p[..., 1]), dt4(p[..., 2])], axis=-1
        )

    bbox = np.array([[-1.15, -1.15, -1.15], [1.15, 1.15, 1.15]])
    return ImplicitSurface("bc4", f, grad, bbox)


NAMED_SURFACES = {
    "torus": torus_surface,
    "double-torus": double_torus_surface,
    "bc4": banchoff_chmutov_surface,
}


def generate_implicit(surface: ImplicitSurface, resolution: int) -> SurfaceMesh:
    """Mesh the zero level set on a uniform grid with `resolution` cells per axis.

    Contouring is followed by a Newton projection of every vertex onto
    {f = 0}; a grid too coarse for the topology raises MeshError.
    """
    from skimage import measure

    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    lo, hi = surface.bbox[0], surface.bbox[1]
    axes = [np.linspace(lo[k], hi[k], resolution + 1) for k in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = surface.f(grid)
    f_scale = float(np.max(np.abs(values)))
    f_tol = 1e-12 * f_scale

    spacing = tuple((hi - lo) / resolution)
    try:
        verts, faces, _, _ = measure.marching_cubes(
            values, level=0.0, spacing=spacing, allow_degenerate=False
        )
    except (ValueError, RuntimeError) as exc:
        raise MeshError(f"contouring failed on {surface.name}: {exc}") from exc
    verts = verts + lo

    projector = surface.projector(f_tol)
    verts = projector(verts)
    residual = float(np.max(np.abs(surface.f(verts))))
    if residual > 1e-10 * f_scale:
        raise MeshError(
            f"Newton projection stalled on {surface.name}: |f| = {residual:.3e}"
        )

    # orient outward: positive enclosed volume
    vol = np.einsum(
        "ij,ij->i",
        verts[faces[:, 0]],
        np.cross(verts[faces[:, 1]], verts[faces[:, 2]]),
    ).sum() / 6.0
    if vol < 0:
        faces = faces[:, ::-1]

    try:
        return SurfaceMesh(
            verts, faces, projection=projector, name=surface.name
        )
    except MeshError as exc:
        raise MeshError(
            f"non-manifold contour for {surface.name} at resolution "
            f"{resolution}; increase the resolution ({exc})"
        ) from exc


def mesh_statistics(mesh: SurfaceMesh) -> dict:
    return mesh.statistics()


# -- OFF interchange -----------------------------------------------------


def write_off(mesh: SurfaceMesh, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.num_vertices} {mesh.num_triangles} {mesh.num_edges}\n")
        for p in mesh.vertices:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_off(path, projection=None, name="") -> SurfaceMesh:
    with open(path, "r", encoding="ascii") as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(tokens[pos])
        if k != 3:
            raise MeshError("only triangle faces are supported")
        faces.append([int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])])
        pos += 4
    return SurfaceMesh(verts, np.array(faces, dtype=np.int64), projection=projection, name=name)
