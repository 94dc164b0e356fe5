import numpy as np
import pytest

from geopart import fem, mesh, relax


class FlatPatch:
    """Duck-typed open triangle patch for assembling FEM matrices in tests."""

    def __init__(self, vertices, triangles):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)

    @property
    def num_vertices(self):
        return len(self.vertices)

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(
            np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1
        )


@pytest.fixture(scope="session")
def icosphere3():
    return mesh.generate_icosphere(3)


@pytest.fixture(scope="session")
def icosphere4():
    return mesh.generate_icosphere(4)


@pytest.fixture(scope="session")
def icosphere5():
    return mesh.generate_icosphere(5)


@pytest.fixture(scope="session")
def sphere4_level(icosphere4):
    return relax.LevelData.from_mesh(icosphere4)


@pytest.fixture(scope="session")
def sphere5_level(icosphere5):
    return relax.LevelData.from_mesh(icosphere5)


@pytest.fixture(scope="session")
def torus24():
    return mesh.generate_implicit(mesh.torus_surface(), 24)


def lune_labeling(m, n):
    """n longitude slices of a sphere mesh, as a PhaseLabeling."""
    from geopart import contour

    phi = np.arctan2(m.vertices[:, 1], m.vertices[:, 0])
    labels = np.floor((phi + np.pi) / (2 * np.pi / n)).astype(np.int64) % n
    return contour.PhaseLabeling(labels, n)
