import math

import numpy as np
import pytest

from geopart import contour, mesh, relax, spherearc as sa
from conftest import lune_labeling

FOUR_PI = 4 * math.pi


def normalized(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def geodesic_mid(u, v):
    return normalized(np.asarray(u, dtype=float) + np.asarray(v, dtype=float))


def two_arc_circle(nodes4, kinds=(sa.NODE_AUX, sa.NODE_MID, sa.NODE_AUX, sa.NODE_MID)):
    """Closed circle through 4 points as two arcs bounding two faces."""
    arcs = np.array([[0, 1, 2], [2, 3, 0]])
    faces = [
        [[(0, True), (1, True)]],
        [[(1, False), (0, False)]],
    ]
    return sa.ArcPartition(np.array(nodes4, dtype=float),
                           np.array(kinds, dtype=np.int8), arcs, faces)


def tetra_partition():
    verts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    nodes = list(verts)
    kinds = [sa.NODE_TRIPLE] * 4
    arcs = []
    for i, j in pairs:
        nodes.append(geodesic_mid(verts[i], verts[j]))
        kinds.append(sa.NODE_MID)
        arcs.append((i, len(nodes) - 1, j))

    def arc_of(i, j):
        for k, (a, b) in enumerate(pairs):
            if {a, b} == {i, j}:
                return k, (a, b) == (i, j)
        raise KeyError

    faces = []
    for tri in [(1, 3, 2), (0, 2, 3), (0, 3, 1), (0, 1, 2)]:
        loop = []
        for s in range(3):
            k, fwd = arc_of(tri[s], tri[(s + 1) % 3])
            loop.append((k, fwd))
        faces.append([loop])
    return sa.ArcPartition(np.array(nodes), np.array(kinds, dtype=np.int8),
                           np.array(arcs), faces)


# -- arc geometry -------------------------------------------------------------


def test_great_circle_arc():
    g = sa.arc_geometry((1, 0, 0), (0, 1, 0), (-1, 0, 0))
    assert abs(g.kg) < 1e-12
    assert abs(g.rho - math.pi / 2) < 1e-12
    assert abs(g.length - math.pi) < 1e-12


def test_small_circle_curvature():
    # circle at spherical radius pi/6:  kg = cot(pi/6) = sqrt(3)
    rho = math.pi / 6
    z, r = math.cos(rho), math.sin(rho)
    pts = [(r * math.cos(a), r * math.sin(a), z) for a in (0.0, 0.4, 0.9)]
    g = sa.arc_geometry(*pts)
    assert abs(g.kg - math.sqrt(3)) < 1e-12
    assert abs(g.rho - rho) < 1e-12
    assert abs(g.length - 0.9 * math.sin(rho)) < 1e-12


def test_full_small_circle_length():
    # two arcs covering a circle at radius rho: total length 2*pi*sin(rho)
    rho = 0.8
    z, r = math.cos(rho), math.sin(rho)
    pts = [(r * math.cos(a), r * math.sin(a), z)
           for a in (0, math.pi / 2, math.pi, 3 * math.pi / 2)]
    part = two_arc_circle(pts)
    total = sa.single_count_perimeter(part)
    assert abs(total - 2 * math.pi * math.sin(rho)) < 1e-12


def test_degenerate_arc_rejected():
    with pytest.raises(sa.ArcError):
        sa.arc_geometry((1, 0, 0), (1, 0, 0), (0, 1, 0))
    with pytest.raises(sa.ArcError):
        sa.arc_geometry((1, 0, 0), (0, 1, 0), (-1e-18, 1, 0))


# -- Gauss-Bonnet areas --------------------------------------------------------


def test_hemisphere_area():
    part = two_arc_circle([(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)])
    areas = sa.face_areas(part)
    assert np.allclose(areas, 2 * math.pi, atol=1e-12)


def test_octant_area():
    ex, ey, ez = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    nodes = np.array([ex, ey, ez, geodesic_mid(ex, ey), geodesic_mid(ey, ez),
                      geodesic_mid(ez, ex)])
    kinds = np.array([0, 0, 0, 1, 1, 1], dtype=np.int8)
    arcs = np.array([[0, 3, 1], [1, 4, 2], [2, 5, 0]])
    faces = [[[(0, True), (1, True), (2, True)]]]
    part = sa.ArcPartition(nodes, kinds, arcs, faces)
    assert abs(sa.face_area(0, part) - math.pi / 2) < 1e-12


def test_cap_area_against_monte_carlo():
    rho = 0.7
    z, r = math.cos(rho), math.sin(rho)
    pts = [(r * math.cos(a), r * math.sin(a), z)
           for a in (0, math.pi / 2, math.pi, 3 * math.pi / 2)]
    part = two_arc_circle(pts)
    areas = sa.face_areas(part)
    exact = 2 * math.pi * (1 - math.cos(rho))
    assert abs(areas[0] - exact) < 1e-12
    # Monte-Carlo point-in-cap oracle
    rng = np.random.default_rng(0)
    samples = rng.normal(size=(200000, 3))
    samples /= np.linalg.norm(samples, axis=1)[:, None]
    frac = np.mean(samples[:, 2] > math.cos(rho))
    assert abs(areas[0] - frac * FOUR_PI) < 1e-3 * FOUR_PI


def dense_polygon_area(part, face_id, samples_per_arc=2000):
    """Independent oracle: spherical polygon area by fanned signed excesses
    over a dense geodesic discretization of the boundary."""
    loops = part.faces[face_id]
    total = 0.0
    for loop in loops:
        pts = []
        for aid, fwd in loop:
            i, j, k = part.arcs[aid]
            p, m, q = part.nodes[i], part.nodes[j], part.nodes[k]
            if not fwd:
                p, q = q, p
            g = sa.arc_geometry(p, m, q)
            axis = g.axis if np.dot(g.axis, np.cross(p, q) if g.kg >= 0 else -np.cross(p, q)) != 0 else g.axis
            # rebuild the sweep by rotating p about the arc axis
            data = sa._arc_data(tuple(p), tuple(m), tuple(q))
            length, kg_int, ts, te, raw_axis = data
            c = np.dot(raw_axis, p)
            sinr = math.sqrt(1 - c * c)
            sweep = length / sinr
            f1 = (np.asarray(p) - c * np.asarray(raw_axis)) / sinr
            f2 = np.cross(raw_axis, f1)
            for t in np.linspace(0.0, sweep, samples_per_arc, endpoint=False):
                pts.append(c * np.asarray(raw_axis) + sinr * (math.cos(t) * f1
                                                              + math.sin(t) * f2))
        pts = np.array(pts)
        ref = normalized(pts.mean(axis=0))
        nxt = np.roll(pts, -1, axis=0)
        num = np.einsum("ij,ij->i", ref[None, :].repeat(len(pts), 0),
                        np.cross(pts, nxt))
        den = (1.0 + pts @ ref + np.einsum("ij,ij->i", pts, nxt) + nxt @ ref)
        total += float(np.sum(2.0 * np.arctan2(num, den)))
    return total


def test_face_area_against_dense_polygon_oracle():
    part = tetra_partition()
    rng = np.random.default_rng(3)
    pert = part.copy()
    pert.nodes = pert.nodes + 0.15 * rng.normal(size=pert.nodes.shape)
    pert.nodes /= np.linalg.norm(pert.nodes, axis=1)[:, None]
    areas = sa.face_areas(pert)
    for f in range(4):
        oracle = dense_polygon_area(pert, f)
        assert abs(areas[f] - oracle) < 1e-3 * FOUR_PI
    assert abs(areas.sum() - FOUR_PI) < 1e-8


def test_face_areas_sum_on_random_partitions():
    rng = np.random.default_rng(9)
    for _ in range(10):
        pert = tetra_partition()
        pert.nodes = pert.nodes + 0.1 * rng.normal(size=pert.nodes.shape)
        pert.nodes /= np.linalg.norm(pert.nodes, axis=1)[:, None]
        areas = sa.face_areas(pert)
        assert abs(areas.sum() - FOUR_PI) < 1e-8
        assert np.all(areas > 0)


def banded_sphere(rho1=0.5, rho2=1.2):
    """Cap, annulus, cap partition by two circles around the z axis."""
    def circle_nodes(rho):
        z, r = math.cos(rho), math.sin(rho)
        return [(r * math.cos(a), r * math.sin(a), z)
                for a in (0, math.pi / 2, math.pi, 3 * math.pi / 2)]

    nodes = np.array(circle_nodes(rho1) + circle_nodes(rho2))
    kinds = np.array([2, 1, 2, 1] * 2, dtype=np.int8)
    arcs = np.array([[0, 1, 2], [2, 3, 0], [4, 5, 6], [6, 7, 4]])
    faces = [
        [[(0, True), (1, True)]],                       # cap around +z
        [[(1, False), (0, False)], [(2, True), (3, True)]],  # annulus
        [[(3, False), (2, False)]],                     # opposite cap
    ]
    return sa.ArcPartition(nodes, kinds, arcs, faces)


def test_annulus_face_area():
    rho1, rho2 = 0.5, 1.2
    part = banded_sphere(rho1, rho2)
    areas = sa.face_areas(part)
    expected = [2 * math.pi * (1 - math.cos(rho1)),
                2 * math.pi * (math.cos(rho1) - math.cos(rho2)),
                2 * math.pi * (1 + math.cos(rho2))]
    assert np.allclose(areas, expected, atol=1e-12)
    assert abs(areas.sum() - FOUR_PI) < 1e-12


def test_inconsistent_orientation_rejected():
    part = banded_sphere()
    # both annulus loops reversed: oriented area goes negative
    part.faces[1] = [[(a, not f) for a, f in reversed(loop)]
                     for loop in part.faces[1]]
    with pytest.raises(sa.ArcError):
        sa.face_areas(part)


# -- cost ----------------------------------------------------------------------


def test_cost_tetrahedron():
    part = tetra_partition()
    sc = sa.single_count_perimeter(part)
    assert abs(sc - 6 * math.acos(-1.0 / 3.0)) < 1e-12
    assert abs(sc - 11.4637) < 1e-3  # tabulated value
    # equal areas: penalty vanishes, cost is the double count
    assert abs(sa.cost(part, 1e-3) - 2 * sc) < 1e-9


def test_cost_great_circle_two_cells():
    part = two_arc_circle([(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)])
    assert abs(sa.cost(part, 1.0) - 2 * (2 * math.pi)) < 1e-12


def test_cost_rotation_invariant():
    part = tetra_partition()
    rng = np.random.default_rng(2)
    axis = normalized(rng.normal(size=3))
    angle = 1.1
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    R = np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)
    rot = part.copy()
    rot.nodes = part.nodes @ R.T
    c1, c2 = sa.cost(part, 0.01), sa.cost(rot, 0.01)
    assert abs(c1 - c2) / abs(c1) < 1e-10


def test_cost_penalizes_unequal_areas():
    rho = 0.7
    z, r = math.cos(rho), math.sin(rho)
    pts = [(r * math.cos(a), r * math.sin(a), z)
           for a in (0, math.pi / 2, math.pi, 3 * math.pi / 2)]
    part = two_arc_circle(pts)
    per = 2 * sa.single_count_perimeter(part)
    a1 = 2 * math.pi * (1 - math.cos(rho))
    penalty = (a1 - (FOUR_PI - a1)) ** 2
    assert abs(sa.cost(part, 0.5) - (per + penalty / 0.5)) < 1e-9


# -- pattern search --------------------------------------------------------------


def test_pattern_search_stationary_at_tetrahedron():
    part = tetra_partition()
    c0 = sa.cost(part, 1.0)
    ev = sa._Evaluator(part, 1.0)
    rng = np.random.default_rng(0)
    # probe: no single-node move of size 1e-4 improves the exact optimum
    for node in range(len(part.nodes)):
        x = ev.pos[node]
        e1, e2 = sa._tangent_basis(x)
        for k in range(12):
            phi = 2 * math.pi * k / 12
            cand = sa._normalized((
                x[0] + 1e-4 * (math.cos(phi) * e1[0] + math.sin(phi) * e2[0]),
                x[1] + 1e-4 * (math.cos(phi) * e1[1] + math.sin(phi) * e2[1]),
                x[2] + 1e-4 * (math.cos(phi) * e1[2] + math.sin(phi) * e2[2]),
            ))
            res = ev.try_move(node, cand)
            assert res is None or res[0] >= c0 - 1e-12


def test_pattern_search_recovers_tetrahedron():
    part = tetra_partition()
    rng = np.random.default_rng(5)
    part.nodes = part.nodes + 0.08 * rng.normal(size=part.nodes.shape)
    part.nodes /= np.linalg.norm(part.nodes, axis=1)[:, None]
    cfg = sa.PatternSearchConfig(seed=11)
    opt, info = sa.pattern_search(part, cfg)
    assert abs(info["single_count_perimeter"] - 11.4637) < 1e-3
    assert info["max_pairwise_area_diff"] <= cfg.area_tol
    angles = sa.triple_point_angles(opt)
    assert len(angles) == 4
    for _, sect in angles:
        assert max(abs(s - 2 * math.pi / 3) for s in sect) < 1e-3


def test_pattern_search_never_increases_cost():
    part = tetra_partition()
    rng = np.random.default_rng(8)
    part.nodes = part.nodes + 0.05 * rng.normal(size=part.nodes.shape)
    part.nodes /= np.linalg.norm(part.nodes, axis=1)[:, None]
    cfg = sa.PatternSearchConfig(seed=1, max_rounds=1, step_min=1e-4)
    opt, info = sa.pattern_search(part, cfg)
    assert sa.cost(opt, cfg.penalty_init) <= sa.cost(part, cfg.penalty_init) + 1e-12


# -- lifting ---------------------------------------------------------------------


def test_lift_three_lunes(icosphere4):
    topo = contour.extract(lune_labeling(icosphere4, 3), icosphere4)
    part = sa.lift_from_mesh(topo, icosphere4)
    assert int(np.sum(part.kinds == sa.NODE_TRIPLE)) == 2
    assert len(part.arcs) == 3
    assert len(part.faces) == 3
    areas = sa.face_areas(part)
    assert abs(areas.sum() - FOUR_PI) < 1e-8


def test_lift_two_caps(icosphere4):
    lab = contour.PhaseLabeling(
        (icosphere4.vertices[:, 2] < 0).astype(np.int64), 2)
    topo = contour.extract(lab, icosphere4)
    part = sa.lift_from_mesh(topo, icosphere4)
    assert int(np.sum(part.kinds == sa.NODE_TRIPLE)) == 0
    assert int(np.sum(part.kinds == sa.NODE_AUX)) == 2
    assert len(part.arcs) == 2
    areas = sa.face_areas(part)
    assert abs(areas.sum() - FOUR_PI) < 1e-8


def test_lift_rejects_non_sphere(torus24):
    topo = contour.extract(
        contour.PhaseLabeling((torus24.vertices[:, 2] < 0).astype(np.int64), 2),
        torus24)
    with pytest.raises(ValueError):
        sa.lift_from_mesh(topo, torus24)


def test_lift_degree_three_junctions(icosphere4):
    cfg = relax.RelaxConfig(n_phases=4, seed=0, max_iterations=400)
    u, lvl, _ = relax.continuation(icosphere4, cfg, levels=1)
    topo = contour.extract(contour.label(u), lvl.mesh)
    part = sa.lift_from_mesh(topo, lvl.mesh)
    degree = np.zeros(len(part.nodes), dtype=int)
    for a in part.arcs:
        degree[a[0]] += 1
        degree[a[2]] += 1
    for node in np.nonzero(part.kinds == sa.NODE_TRIPLE)[0]:
        assert degree[node] == 3
    # every arc borders exactly two faces
    count = np.zeros(len(part.arcs), dtype=int)
    for loops in part.faces:
        for loop in loops:
            for aid, _ in loop:
                count[aid] += 1
    assert np.all(count == 2)


# -- serialization -----------------------------------------------------------------


def test_arc_roundtrip(tmp_path):
    part = tetra_partition()
    path = tmp_path / "arcs.txt"
    sa.write_arcs(path, part)
    back = sa.read_arcs(path)
    assert np.allclose(back.nodes, part.nodes)
    assert np.array_equal(back.arcs, part.arcs)
    assert back.faces == part.faces
    assert np.array_equal(back.kinds, part.kinds)
    report = tmp_path / "report.txt"
    sa.write_arc_report(report, part)
    assert "single_count_perimeter 11.46" in report.read_text()
