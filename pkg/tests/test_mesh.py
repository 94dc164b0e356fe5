import numpy as np
import pytest

from geopart import mesh


def test_icosahedron_base():
    m = mesh.generate_icosphere(0)
    assert m.num_vertices == 12
    assert m.num_triangles == 20
    assert m.euler_characteristic == 2


@pytest.mark.parametrize("s,expected", [(1, 42), (2, 162), (3, 642), (5, 10242)])
def test_icosphere_vertex_counts(s, expected):
    assert mesh.generate_icosphere(s).num_vertices == 10 * 4 ** s + 2


def test_icosphere_unit_radius():
    m = mesh.generate_icosphere(4)
    r = np.linalg.norm(m.vertices, axis=1)
    assert np.max(np.abs(r - 1.0)) < 1e-12


def test_icosphere_area_converges(icosphere3):
    # area oracle: sum of flat triangle areas vs 4*pi
    # measured deficits of the inscribed polyhedron: 0.48% (s=3), 0.12% (s=4)
    assert abs(icosphere3.area() - 4 * np.pi) / (4 * np.pi) < 0.01
    m4 = mesh.generate_icosphere(4)
    assert abs(m4.area() - 4 * np.pi) / (4 * np.pi) < 0.0013
    errs = [abs(mesh.generate_icosphere(s).area() - 4 * np.pi) for s in range(5)]
    assert all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))


def test_icosphere_subdivision_bound():
    with pytest.raises(ValueError):
        mesh.generate_icosphere(9)


def test_refine_matches_next_icosphere():
    m2 = mesh.generate_icosphere(2)
    fine, _ = mesh.refine(m2)
    m3 = mesh.generate_icosphere(3)
    assert fine.num_vertices == m3.num_vertices
    assert fine.num_triangles == m3.num_triangles
    a = np.array(sorted(map(tuple, np.round(fine.vertices, 12))))
    b = np.array(sorted(map(tuple, np.round(m3.vertices, 12))))
    assert np.allclose(a, b, atol=1e-12)


def test_refine_prolongation_constant_and_linear(icosphere3):
    fine, p = mesh.refine(icosphere3)
    ones = np.ones(icosphere3.num_vertices)
    assert np.allclose(p @ ones, 1.0)
    # P1 prolongation averages edge endpoints; exact for linears at midpoints
    x = icosphere3.vertices[:, 0]
    fx = p @ x
    mids = 0.5 * (icosphere3.vertices[icosphere3.edges[:, 0], 0]
                  + icosphere3.vertices[icosphere3.edges[:, 1], 0])
    assert np.allclose(fx[icosphere3.num_vertices:], mids)


def test_refine_preserves_euler_and_quadruples(torus24):
    fine, _ = mesh.refine(torus24)
    assert fine.num_triangles == 4 * torus24.num_triangles
    assert fine.euler_characteristic == torus24.euler_characteristic == 0


def test_torus_mesh_geometry(torus24):
    assert torus24.euler_characteristic == 0
    target = 4 * np.pi ** 2 * 1.0 * 0.6
    assert abs(torus24.area() - target) / target < 0.01


def test_torus_vertices_on_level_set(torus24):
    surf = mesh.torus_surface()
    vals = surf.f(torus24.vertices)
    lo, hi = surf.bbox
    axes = [np.linspace(lo[k], hi[k], 25) for k in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    scale = float(np.max(np.abs(surf.f(grid))))
    assert np.max(np.abs(vals)) < 1e-10 * scale


def test_double_torus_euler():
    m = mesh.generate_implicit(mesh.double_torus_surface(), 48)
    assert m.euler_characteristic == -2


def test_banchoff_chmutov_euler():
    # chi confirmed from generated meshes at several resolutions (genus 5)
    m = mesh.generate_implicit(mesh.banchoff_chmutov_surface(), 48)
    assert m.euler_characteristic == -8
    surf = mesh.banchoff_chmutov_surface()
    assert np.max(np.abs(surf.f(m.vertices))) < 1e-8


def test_implicit_resolution_floor():
    with pytest.raises(ValueError):
        mesh.generate_implicit(mesh.torus_surface(), 8)


def test_every_edge_has_two_triangles(icosphere3, torus24):
    for m in (icosphere3, torus24):
        directed = np.concatenate([
            m.triangles[:, [0, 1]], m.triangles[:, [1, 2]], m.triangles[:, [2, 0]]
        ])
        und = np.sort(directed, axis=1)
        _, counts = np.unique(und, axis=0, return_counts=True)
        assert np.all(counts == 2)


def test_open_mesh_rejected():
    verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
    with pytest.raises(mesh.MeshError):
        mesh.SurfaceMesh(verts, [[0, 1, 2]])


def test_inconsistent_orientation_rejected():
    # doubled triangle with both copies facing the same way
    verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
    with pytest.raises(mesh.MeshError):
        mesh.SurfaceMesh(verts, [[0, 1, 2], [0, 1, 2]])


def test_statistics(icosphere4, torus24):
    stats = mesh.mesh_statistics(icosphere4)
    assert abs(stats["area"] - 4 * np.pi) / (4 * np.pi) < 1.3e-3
    assert stats["mean_edge_length"] > 0
    assert mesh.mesh_statistics(torus24)["euler_characteristic"] == 0


def test_off_roundtrip(tmp_path, icosphere3):
    path = tmp_path / "m.off"
    mesh.write_off(icosphere3, path)
    back = mesh.read_off(path)
    assert np.array_equal(back.triangles, icosphere3.triangles)
    assert np.allclose(back.vertices, icosphere3.vertices)
