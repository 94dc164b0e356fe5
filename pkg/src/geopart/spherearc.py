"""Exact-cost refinement on the unit sphere.

A partition is a graph of circle arcs: triple points plus one free point
per arc (three points on the sphere determine the circle). Cell areas come
from Gauss-Bonnet with piecewise-constant geodesic curvature and turning
angles at the corners, so the area constraint can be driven to near machine
precision by penalization. The optimizer is a derivative-free pattern
search: equiangular tangential probes for junction nodes, the two
arc-normal probes for midpoints, greedy acceptance, step halving on
stagnation, and a penalty weight that tightens by 10x per outer round until
the cell areas agree.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .contour import PartitionTopology
from .mesh import SurfaceMesh

FOUR_PI = 4.0 * math.pi

NODE_TRIPLE = 0  # genuine junction of three cells
NODE_MID = 1  # free point in the interior of an arc
NODE_AUX = 2  # artificial endpoint splitting a junction-free loop


class ArcError(ValueError):
    """Degenerate arc or inconsistently oriented face."""


@dataclass
class ArcGeometry:
    """Circle arc through three sphere points, oriented by traversal order."""

    axis: np.ndarray  # unit vector toward the near pole
    rho: float  # spherical radius in (0, pi/2]
    length: float
    kg: float  # signed geodesic curvature, cot(rho) up to sign
    tangent_start: np.ndarray
    tangent_end: np.ndarray


@dataclass
class ArcPartition:
    nodes: np.ndarray  # (V, 3) unit vectors
    kinds: np.ndarray  # (V,) int8, NODE_* tags
    arcs: np.ndarray  # (A, 3) int: start node, mid node, end node
    faces: list  # per cell: list of loops; loop = list of (arc_id, forward)

    @property
    def n_faces(self):
        return len(self.faces)

    def copy(self):
        return ArcPartition(self.nodes.copy(), self.kinds.copy(),
                            self.arcs.copy(), [ [list(l) for l in f] for f in self.faces])


# -- scalar kernels (hot path of the pattern search) -----------------------


def _arc_data(p, m, q):
    """(length, kg integral, start tangent, end tangent, axis) or None.

    The axis is oriented so that the traversal p -> m -> q is
    counterclockwise around it; the geodesic-curvature integral along the
    arc is then sweep * (axis . p).
    """
    ux, uy, uz = m[0] - p[0], m[1] - p[1], m[2] - p[2]
    wx, wy, wz = q[0] - m[0], q[1] - m[1], q[2] - m[2]
    ax = uy * wz - uz * wy
    ay = uz * wx - ux * wz
    az = ux * wy - uy * wx
    nrm = math.sqrt(ax * ax + ay * ay + az * az)
    if nrm < 1e-13:
        return None
    ax, ay, az = ax / nrm, ay / nrm, az / nrm
    c = ax * p[0] + ay * p[1] + az * p[2]
    s2 = 1.0 - c * c
    if s2 < 1e-20:
        return None
    sinr = math.sqrt(s2)
    f1x, f1y, f1z = (p[0] - c * ax) / sinr, (p[1] - c * ay) / sinr, (p[2] - c * az) / sinr
    f2x = ay * f1z - az * f1y
    f2y = az * f1x - ax * f1z
    f2z = ax * f1y - ay * f1x
    tq = math.atan2(q[0] * f2x + q[1] * f2y + q[2] * f2z,
                    q[0] * f1x + q[1] * f1y + q[2] * f1z) % (2.0 * math.pi)
    if tq < 1e-12:
        return None
    length = tq * sinr
    kg_int = tq * c
    ts = ((ay * p[2] - az * p[1]) / sinr,
          (az * p[0] - ax * p[2]) / sinr,
          (ax * p[1] - ay * p[0]) / sinr)
    te = ((ay * q[2] - az * q[1]) / sinr,
          (az * q[0] - ax * q[2]) / sinr,
          (ax * q[1] - ay * q[0]) / sinr)
    return length, kg_int, ts, te, (ax, ay, az)


def _turn(node, t_in, t_out):
    """Turning angle at a corner, in (-pi, pi], positive for a left turn."""
    cx = t_in[1] * t_out[2] - t_in[2] * t_out[1]
    cy = t_in[2] * t_out[0] - t_in[0] * t_out[2]
    cz = t_in[0] * t_out[1] - t_in[1] * t_out[0]
    s = node[0] * cx + node[1] * cy + node[2] * cz
    c = t_in[0] * t_out[0] + t_in[1] * t_out[1] + t_in[2] * t_out[2]
    return math.atan2(s, c)


def arc_geometry(p, m, q) -> ArcGeometry:
    """Oriented circle arc through three distinct sphere points (traversal p->m->q)."""
    p = tuple(map(float, p))
    m = tuple(map(float, m))
    q = tuple(map(float, q))
    data = _arc_data(p, m, q)
    if data is None:
        raise ArcError("degenerate point triple for an arc")
    length, kg_int, ts, te, axis = data
    c = axis[0] * p[0] + axis[1] * p[1] + axis[2] * p[2]
    sinr = math.sqrt(max(1.0 - c * c, 0.0))
    kg = c / sinr
    rho = math.acos(min(abs(c), 1.0))
    near_axis = np.array(axis) if c >= 0 else -np.array(axis)
    return ArcGeometry(
        axis=near_axis,
        rho=rho if rho > 0 else math.pi / 2,
        length=length,
        kg=kg,
        tangent_start=np.array(ts),
        tangent_end=np.array(te),
    )


# -- evaluation -------------------------------------------------------------


class _Evaluator:
    """Caches arc geometry and face areas; supports single-node trial moves."""

    def __init__(self, partition: ArcPartition, penalty_eps: float):
        self.pos = [tuple(map(float, x)) for x in partition.nodes]
        self.kinds = partition.kinds.copy()
        self.arcs = [tuple(map(int, a)) for a in partition.arcs]
        self.faces = partition.faces
        self.eps = penalty_eps
        self.node_arcs = [[] for _ in self.pos]
        for aid, (i, j, k) in enumerate(self.arcs):
            for n in {i, j, k}:
                self.node_arcs[n].append(aid)
        self.arc_faces = [[] for _ in self.arcs]
        for fid, loops in enumerate(self.faces):
            for loop in loops:
                for aid, _ in loop:
                    if fid not in self.arc_faces[aid]:
                        self.arc_faces[aid].append(fid)
        self.rebuild()

    def rebuild(self):
        self.arc_cache = []
        for (i, j, k) in self.arcs:
            data = _arc_data(self.pos[i], self.pos[j], self.pos[k])
            if data is None:
                raise ArcError(f"degenerate arc through nodes {i}, {j}, {k}")
            self.arc_cache.append(data)
        self.areas = [self._face_area(f, self.arc_cache) for f in range(len(self.faces))]
        for fid, a in enumerate(self.areas):
            if not 0.0 < a < FOUR_PI:
                raise ArcError(f"face {fid} has invalid oriented area {a}")
        self.sum_len = sum(d[0] for d in self.arc_cache)
        self.sum_a = sum(self.areas)
        self.sum_a2 = sum(a * a for a in self.areas)

    def _face_area(self, fid, cache, override=None, moved=-1, moved_pos=None):
        loops = self.faces[fid]
        total_kg = 0.0
        total_turn = 0.0
        for loop in loops:
            k = len(loop)
            for idx, (aid, fwd) in enumerate(loop):
                data = override.get(aid) if override and aid in override else cache[aid]
                _, kg_int, ts, te, _ = data
                total_kg += kg_int if fwd else -kg_int
                n_aid, n_fwd = loop[(idx + 1) % k]
                n_data = override.get(n_aid) if override and n_aid in override else cache[n_aid]
                t_in = te if fwd else tuple(-x for x in ts)
                t_out = n_data[2] if n_fwd else tuple(-x for x in n_data[3])
                node_id = self.arcs[aid][2] if fwd else self.arcs[aid][0]
                node = moved_pos if node_id == moved else self.pos[node_id]
                total_turn += _turn(node, t_in, t_out)
        return 2.0 * math.pi * (2 - len(loops)) - total_kg - total_turn

    def cost(self):
        n = len(self.faces)
        penalty = n * self.sum_a2 - self.sum_a * self.sum_a
        return 2.0 * self.sum_len + penalty / self.eps

    def try_move(self, node_id, new_pos):
        """Cost after moving one node, or None if the move is invalid."""
        arcs_aff = self.node_arcs[node_id]
        override = {}
        d_len = 0.0
        for aid in arcs_aff:
            i, j, k = self.arcs[aid]
            p = new_pos if i == node_id else self.pos[i]
            m = new_pos if j == node_id else self.pos[j]
            q = new_pos if k == node_id else self.pos[k]
            data = _arc_data(p, m, q)
            if data is None:
                return None
            override[aid] = data
            d_len += data[0] - self.arc_cache[aid][0]
        faces_aff = sorted({f for aid in arcs_aff for f in self.arc_faces[aid]})
        new_areas = {}
        d_a = 0.0
        d_a2 = 0.0
        for fid in faces_aff:
            a = self._face_area(fid, self.arc_cache, override,
                                moved=node_id, moved_pos=new_pos)
            if not 0.0 < a < FOUR_PI:
                return None
            new_areas[fid] = a
            d_a += a - self.areas[fid]
            d_a2 += a * a - self.areas[fid] ** 2
        n = len(self.faces)
        sum_len = self.sum_len + d_len
        sum_a = self.sum_a + d_a
        sum_a2 = self.sum_a2 + d_a2
        cost = 2.0 * sum_len + (n * sum_a2 - sum_a * sum_a) / self.eps
        return cost, (node_id, new_pos, override, new_areas, sum_len, sum_a, sum_a2)

    def apply(self, payload):
        node_id, new_pos, override, new_areas, sum_len, sum_a, sum_a2 = payload
        self.pos[node_id] = new_pos
        for aid, data in override.items():
            self.arc_cache[aid] = data
        for fid, a in new_areas.items():
            self.areas[fid] = a
        self.sum_len = sum_len
        self.sum_a = sum_a
        self.sum_a2 = sum_a2

    def to_partition(self, template: ArcPartition) -> ArcPartition:
        out = template.copy()
        out.nodes = np.array(self.pos)
        return out


def face_areas(partition: ArcPartition) -> np.ndarray:
    """Gauss-Bonnet area of every face (steradians on the unit sphere)."""
    ev = _Evaluator(partition, penalty_eps=1.0)
    return np.array(ev.areas)


def face_area(face_index: int, partition: ArcPartition) -> float:
    return float(face_areas(partition)[face_index])


def single_count_perimeter(partition: ArcPartition) -> float:
    ev = _Evaluator(partition, penalty_eps=1.0)
    return float(ev.sum_len)


def cost(partition: ArcPartition, penalty_eps: float) -> float:
    """Sum of cell perimeters (each interface twice) plus the pairwise
    squared-area-difference penalty weighted by 1/penalty_eps."""
    ev = _Evaluator(partition, penalty_eps=penalty_eps)
    return float(ev.cost())


def triple_point_angles(partition: ArcPartition):
    """Sector angles between incident boundaries at every triple point."""
    ev = _Evaluator(partition, penalty_eps=1.0)
    out = []
    for node_id, kind in enumerate(partition.kinds):
        if kind != NODE_TRIPLE:
            continue
        tangents = []
        for aid in ev.node_arcs[node_id]:
            i, _, k = ev.arcs[aid]
            _, _, ts, te, _ = ev.arc_cache[aid]
            if i == node_id:
                tangents.append(ts)
            elif k == node_id:
                tangents.append(tuple(-x for x in te))
        if len(tangents) != 3:
            continue
        x = np.array(ev.pos[node_id])
        e1 = np.array(tangents[0])
        e1 -= np.dot(e1, x) * x
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(x, e1)
        az = sorted(
            math.atan2(float(np.dot(t, e2)), float(np.dot(t, e1))) % (2 * math.pi)
            for t in tangents
        )
        sect = [az[1] - az[0], az[2] - az[1], 2 * math.pi - (az[2] - az[0])]
        out.append((node_id, sect))
    return out


# -- pattern search ---------------------------------------------------------


@dataclass
class PatternSearchConfig:
    directions: int = 8  # equiangular tangential probes per junction node
    step_init: float = 0.05
    step_min: float = 1e-7
    step_shrink: float = 0.5
    penalty_init: float = 1.0
    penalty_factor: float = 0.1
    area_tol: float = 5e-7 * FOUR_PI  # max pairwise area difference
    max_rounds: int = 9
    seed: int = 0


def _tangent_basis(x):
    h = (1.0, 0.0, 0.0) if abs(x[0]) < 0.9 else (0.0, 1.0, 0.0)
    d = h[0] * x[0] + h[1] * x[1] + h[2] * x[2]
    e1 = (h[0] - d * x[0], h[1] - d * x[1], h[2] - d * x[2])
    n = math.sqrt(e1[0] ** 2 + e1[1] ** 2 + e1[2] ** 2)
    e1 = (e1[0] / n, e1[1] / n, e1[2] / n)
    e2 = (x[1] * e1[2] - x[2] * e1[1],
          x[2] * e1[0] - x[0] * e1[2],
          x[0] * e1[1] - x[1] * e1[0])
    return e1, e2


def _normalized(p):
    n = math.sqrt(p[0] ** 2 + p[1] ** 2 + p[2] ** 2)
    return (p[0] / n, p[1] / n, p[2] / n)


def pattern_search(partition: ArcPartition, schedule: PatternSearchConfig,
                   rng: Optional[np.random.Generator] = None):
    """Derivative-free minimization of the penalized arc-partition cost.

    Returns (optimized partition, info dict). The cost never increases
    between accepted moves; the penalty weight follows the schedule until
    the areas agree to schedule.area_tol.
    """
    if rng is None:
        rng = np.random.default_rng(schedule.seed)
    ev = _Evaluator(partition, schedule.penalty_init)
    junctions = [i for i, k in enumerate(partition.kinds) if k in (NODE_TRIPLE, NODE_AUX)]
    mids = [i for i, k in enumerate(partition.kinds) if k == NODE_MID]
    mid_arc = {}
    for aid, (_, j, _) in enumerate(ev.arcs):
        mid_arc[j] = aid

    total_moves = 0
    rounds_run = 0
    for rnd in range(schedule.max_rounds):
        rounds_run += 1
        step = schedule.step_init
        while step >= schedule.step_min:
            improved = False
            for node in junctions:
                x = ev.pos[node]
                e1, e2 = _tangent_basis(x)
                phi0 = float(rng.uniform(0.0, 2.0 * math.pi))
                best = None
                cur = ev.cost()
                for k in range(schedule.directions):
                    phi = phi0 + 2.0 * math.pi * k / schedule.directions
                    cph, sph = math.cos(phi), math.sin(phi)
                    cand = _normalized((
                        x[0] + step * (cph * e1[0] + sph * e2[0]),
                        x[1] + step * (cph * e1[1] + sph * e2[1]),
                        x[2] + step * (cph * e1[2] + sph * e2[2]),
                    ))
                    res = ev.try_move(node, cand)
                    if res is not None and res[0] < cur - 1e-14 and (
                            best is None or res[0] < best[0]):
                        best = res
                if best is not None:
                    ev.apply(best[1])
                    improved = True
                    total_moves += 1
            for node in mids:
                x = ev.pos[node]
                aid = mid_arc[node]
                axis = ev.arc_cache[aid][4]
                tm = (axis[1] * x[2] - axis[2] * x[1],
                      axis[2] * x[0] - axis[0] * x[2],
                      axis[0] * x[1] - axis[1] * x[0])
                n = math.sqrt(tm[0] ** 2 + tm[1] ** 2 + tm[2] ** 2)
                tm = (tm[0] / n, tm[1] / n, tm[2] / n)
                u = (x[1] * tm[2] - x[2] * tm[1],
                     x[2] * tm[0] - x[0] * tm[2],
                     x[0] * tm[1] - x[1] * tm[0])
                best = None
                cur = ev.cost()
                for sgn in (1.0, -1.0):
                    cand = _normalized((
                        x[0] + sgn * step * u[0],
                        x[1] + sgn * step * u[1],
                        x[2] + sgn * step * u[2],
                    ))
                    res = ev.try_move(node, cand)
                    if res is not None and res[0] < cur - 1e-14 and (
                            best is None or res[0] < best[0]):
                        best = res
                if best is not None:
                    ev.apply(best[1])
                    improved = True
                    total_moves += 1
            if not improved:
                step *= schedule.step_shrink
        areas = np.array(ev.areas)
        imbalance = float(areas.max() - areas.min())
        if imbalance <= schedule.area_tol and rnd >= 1:
            break
        ev.eps *= schedule.penalty_factor
    out = ev.to_partition(partition)
    info = {
        "moves": total_moves,
        "rounds": rounds_run,
        "single_count_perimeter": float(ev.sum_len),
        "double_count_perimeter": 2.0 * float(ev.sum_len),
        "areas": np.array(ev.areas),
        "max_pairwise_area_diff": float(np.max(ev.areas) - np.min(ev.areas)),
        "penalty_eps": ev.eps,
    }
    return out, info


# -- lifting from mesh topology ---------------------------------------------


def lift_from_mesh(topology: PartitionTopology, mesh: SurfaceMesh) -> ArcPartition:
    """Arc-partition skeleton from the extracted mesh topology.

    Triple points sit at the normalized centroids of the void triangles;
    each interface contributes one arc whose free point is the normalized
    midpoint of its middle chain edge. Junction-free loops are split by two
    auxiliary nodes so every face is a loop of well-defined arcs.
    """
    radii = np.linalg.norm(mesh.vertices, axis=1)
    if np.max(np.abs(radii - 1.0)) > 1e-6:
        raise ValueError("sphere-arc lifting requires a unit-sphere mesh")

    void_ids = {int(t) for t, _ in topology.voids}
    edge_mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])

    nodes: List[np.ndarray] = []
    kinds: List[int] = []
    arcs: List[Tuple[int, int, int]] = []
    void_node = {}

    def add_node(p, kind):
        nodes.append(np.asarray(p, dtype=float) / np.linalg.norm(p))
        kinds.append(kind)
        return len(nodes) - 1

    for t in sorted(void_ids):
        centroid = mesh.vertices[mesh.triangles[t]].mean(axis=0)
        void_node[t] = add_node(centroid, NODE_TRIPLE)

    registry = {}  # canonical interface key -> (arc ids, node order info)
    faces = []
    cells = topology.cells()
    for cell in cells:
        cell_loops = []
        for chain in topology.loops[cell]:
            cuts = [i for i, (_, t) in enumerate(chain) if t in void_ids]
            loop_arcs = []
            if not cuts:
                # junction-free loop: split with two auxiliary endpoints
                edges_cyc = [e for e, _ in chain]
                L = len(edges_cyc)
                if L < 4:
                    raise ValueError("loop too short to lift (needs >= 4 edges)")
                start = int(np.argmin(edges_cyc))
                rot = edges_cyc[start:] + edges_cyc[:start]
                other = sorted(
                    lab for lab in _loop_partner(topology, mesh, rot[0]) if lab != cell
                )[0]
                key = (min(cell, other), max(cell, other), tuple(sorted(rot)))
                if key not in registry:
                    a0 = add_node(edge_mid[rot[0]], NODE_AUX)
                    a1 = add_node(edge_mid[rot[L // 2]], NODE_AUX)
                    m1 = add_node(edge_mid[rot[L // 4]], NODE_MID)
                    m2 = add_node(edge_mid[rot[L // 2 + (L - L // 2) // 2]], NODE_MID)
                    i1 = len(arcs)
                    arcs.append((a0, m1, a1))
                    i2 = len(arcs)
                    arcs.append((a1, m2, a0))
                    registry[key] = (cell, [i1, i2])
                owner, arc_ids = registry[key]
                if owner == cell:
                    loop_arcs = [(arc_ids[0], True), (arc_ids[1], True)]
                else:
                    loop_arcs = [(arc_ids[1], False), (arc_ids[0], False)]
            else:
                L = len(chain)
                runs = []
                for ci, cut in enumerate(cuts):
                    nxt = cuts[(ci + 1) % len(cuts)]
                    start_void = chain[cut][1]
                    end_void = chain[nxt][1]
                    idxs = []
                    j = (cut + 1) % L
                    while True:
                        idxs.append(j)
                        if j == nxt:
                            break
                        j = (j + 1) % L
                    run_edges = [chain[j][0] for j in idxs]
                    runs.append((start_void, run_edges, end_void))
                for start_void, run_edges, end_void in runs:
                    if start_void == end_void:
                        # teardrop: split with one auxiliary endpoint
                        other = _other_cell(topology, mesh, run_edges[0], cell)
                        key = (min(cell, other), max(cell, other),
                               tuple(sorted(run_edges)))
                        if key not in registry:
                            Lr = len(run_edges)
                            if Lr < 3:
                                raise ValueError("teardrop interface too short to lift")
                            a0 = add_node(edge_mid[run_edges[Lr // 2]], NODE_AUX)
                            m1 = add_node(edge_mid[run_edges[Lr // 4]], NODE_MID)
                            m2 = add_node(
                                edge_mid[run_edges[Lr // 2 + (Lr - Lr // 2) // 2]],
                                NODE_MID,
                            )
                            tnode = void_node[start_void]
                            i1 = len(arcs)
                            arcs.append((tnode, m1, a0))
                            i2 = len(arcs)
                            arcs.append((a0, m2, tnode))
                            registry[key] = (cell, [i1, i2])
                        owner, arc_ids = registry[key]
                        if owner == cell:
                            loop_arcs.extend([(arc_ids[0], True), (arc_ids[1], True)])
                        else:
                            loop_arcs.extend([(arc_ids[1], False), (arc_ids[0], False)])
                    else:
                        other = _other_cell(topology, mesh, run_edges[0], cell)
                        canon = tuple(run_edges)
                        rev = tuple(reversed(run_edges))
                        key = (min(cell, other), max(cell, other), min(canon, rev))
                        if key not in registry:
                            mid_edge = run_edges[len(run_edges) // 2]
                            mnode = add_node(edge_mid[mid_edge], NODE_MID)
                            aid = len(arcs)
                            arcs.append((void_node[start_void], mnode,
                                         void_node[end_void]))
                            registry[key] = (cell, [aid])
                        owner, arc_ids = registry[key]
                        loop_arcs.append((arc_ids[0], owner == cell))
            cell_loops.append(loop_arcs)
        faces.append(cell_loops)

    return ArcPartition(
        nodes=np.array(nodes),
        kinds=np.array(kinds, dtype=np.int8),
        arcs=np.array(arcs, dtype=np.int64),
        faces=faces,
    )


def _other_cell(topology, mesh, edge_id, cell):
    a, b = mesh.edges[edge_id]
    la, lb = int(topology.labels[a]), int(topology.labels[b])
    return lb if la == cell else la


def _loop_partner(topology, mesh, edge_id):
    a, b = mesh.edges[edge_id]
    return (int(topology.labels[a]), int(topology.labels[b]))


# -- serialization -----------------------------------------------------------


def write_arcs(path, partition: ArcPartition):
    kind_names = {NODE_TRIPLE: "triple", NODE_MID: "mid", NODE_AUX: "aux"}
    with open(path, "w", encoding="ascii") as fh:
        fh.write("arcpartition\n")
        fh.write(f"nodes {len(partition.nodes)}\n")
        for p, k in zip(partition.nodes, partition.kinds):
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g} {kind_names[int(k)]}\n")
        fh.write(f"arcs {len(partition.arcs)}\n")
        for a in partition.arcs:
            fh.write(f"{a[0]} {a[1]} {a[2]}\n")
        fh.write(f"faces {len(partition.faces)}\n")
        for loops in partition.faces:
            fh.write(f"face {len(loops)}\n")
            for loop in loops:
                body = " ".join(f"{aid}:{'f' if fwd else 'b'}" for aid, fwd in loop)
                fh.write(f"loop {len(loop)} {body}\n")


def read_arcs(path) -> ArcPartition:
    kind_codes = {"triple": NODE_TRIPLE, "mid": NODE_MID, "aux": NODE_AUX}
    with open(path, "r", encoding="ascii") as fh:
        if fh.readline().strip() != "arcpartition":
            raise ValueError("not an arc-partition file")
        nv = int(fh.readline().split()[1])
        nodes, kinds = [], []
        for _ in range(nv):
            parts = fh.readline().split()
            nodes.append([float(parts[0]), float(parts[1]), float(parts[2])])
            kinds.append(kind_codes[parts[3]])
        na = int(fh.readline().split()[1])
        arcs = []
        for _ in range(na):
            arcs.append([int(x) for x in fh.readline().split()])
        nf = int(fh.readline().split()[1])
        faces = []
        for _ in range(nf):
            n_loops = int(fh.readline().split()[1])
            loops = []
            for _ in range(n_loops):
                parts = fh.readline().split()
                loop = []
                for tok in parts[2:]:
                    aid, flag = tok.split(":")
                    loop.append((int(aid), flag == "f"))
                loops.append(loop)
            faces.append(loops)
    return ArcPartition(
        nodes=np.array(nodes),
        kinds=np.array(kinds, dtype=np.int8),
        arcs=np.array(arcs, dtype=np.int64),
        faces=faces,
    )


def write_arc_report(path, partition: ArcPartition):
    areas = face_areas(partition)
    per = single_count_perimeter(partition)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("arc partition report\n")
        fh.write(f"faces {len(areas)}\n")
        for i, a in enumerate(areas):
            fh.write(f"area {i} {a:.12g}\n")
        fh.write(f"single_count_perimeter {per:.12g}\n")
        fh.write(f"double_count_perimeter {2 * per:.12g}\n")
        for node_id, sect in triple_point_angles(partition):
            fh.write(
                "triple {} {:.8f} {:.8f} {:.8f}\n".format(node_id, *sect)
            )
