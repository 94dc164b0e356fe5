"""P1 surface finite elements: mass and stiffness matrices, lumped weights.

Gradients of the hat functions are taken in each triangle's own plane, which
is exact on the piecewise-linear geometry (equivalently, cotangent weights).
Matrices are assembled once per mesh level; everything downstream is
matrix-vector products.
"""

import numpy as np
import scipy.sparse as sparse

from .mesh import MeshError, SurfaceMesh


def assemble_mass(mesh: SurfaceMesh) -> sparse.csr_matrix:
    """Consistent P1 mass matrix: per-triangle block area/6 diag, area/12 off."""
    t = mesh.triangles
    areas = mesh.triangle_areas()
    if len(areas) and areas.min() <= 1e-14 * areas.mean():
        raise MeshError("degenerate triangle in mass assembly")
    local = np.array(
        [[1 / 6, 1 / 12, 1 / 12],
         [1 / 12, 1 / 6, 1 / 12],
         [1 / 12, 1 / 12, 1 / 6]]
    )
    vals = areas[:, None, None] * local
    rows = np.repeat(t, 3, axis=1).reshape(-1)
    cols = np.tile(t, (1, 3)).reshape(-1)
    n = mesh.num_vertices
    return sparse.coo_matrix(
        (vals.reshape(-1), (rows, cols)), shape=(n, n)
    ).tocsr()


def _hat_gradients(mesh: SurfaceMesh):
    """In-plane gradients of the three hat functions per triangle, (T, 3, 3)."""
    p = mesh.vertices[mesh.triangles]
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    normal = np.cross(e2, -e1)
    dbl_area = np.linalg.norm(normal, axis=1)
    unit_n = normal / dbl_area[:, None]
    g = np.stack(
        [np.cross(unit_n, e0), np.cross(unit_n, e1), np.cross(unit_n, e2)],
        axis=1,
    )
    return g / dbl_area[:, None, None], 0.5 * dbl_area


def assemble_stiffness(mesh: SurfaceMesh) -> sparse.csr_matrix:
    """P1 stiffness matrix of the tangential Dirichlet form."""
    t = mesh.triangles
    grads, areas = _hat_gradients(mesh)
    if len(areas) and areas.min() <= 1e-14 * areas.mean():
        raise MeshError("degenerate triangle in stiffness assembly")
    local = np.einsum("tik,tjk,t->tij", grads, grads, areas)
    rows = np.repeat(t, 3, axis=1).reshape(-1)
    cols = np.tile(t, (1, 3)).reshape(-1)
    n = mesh.num_vertices
    return sparse.coo_matrix(
        (local.reshape(-1), (rows, cols)), shape=(n, n)
    ).tocsr()


def lumped_weights(mass: sparse.spmatrix) -> np.ndarray:
    """Row sums of the mass matrix; sums to the mesh area."""
    return np.asarray(mass.sum(axis=1)).ravel()


def dump_matrix(matrix: sparse.spmatrix, path):
    """Coordinate text dump: one `row col value` line per nonzero."""
    coo = matrix.tocoo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
