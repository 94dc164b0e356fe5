"""Partition topology and raw boundary contours from converged densities.

Vertices are labeled by the largest density. The 0.5 level of each 0/1
indicator crosses mixed edges at their midpoints, so topology is stored as
ordered loops of mesh-edge ids; geometry is deferred to the refinement
stage, which owns one parameter per edge. Triangles whose three vertices
carry three distinct labels are the small voids left around triple points.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from . import geom
from .mesh import SurfaceMesh


class UnresolvableJunctionError(ValueError):
    """A vertex umbrella touches 4 or more phases; there is no contour rule."""


@dataclass
class PhaseLabeling:
    labels: np.ndarray  # (N,) int, argmax phase per vertex
    n_phases: int


@dataclass
class PartitionTopology:
    """Cells as closed edge loops, plus the triple-void triangles.

    loops[cell] is a list of closed chains; each chain entry is
    (edge_id, triangle_id) where the triangle connects this edge to the
    next one in the chain. Chains are oriented so the cell lies to the
    left. crossed_* and void_* tabulate the two kinds of mixed triangles.
    """

    labels: np.ndarray
    n_phases: int
    boundary_edges: np.ndarray
    loops: Dict[int, List[List[Tuple[int, int]]]]
    voids: List[Tuple[int, Tuple[int, int, int]]]
    adjacency: set
    crossed_triangles: np.ndarray  # (S,) ids of 2-label triangles
    crossed_edges: np.ndarray  # (S, 2) their mixed edge ids
    void_triangles: np.ndarray  # (W,) ids of 3-label triangles
    void_edges: np.ndarray  # (W, 3) edge ids opposite to nothing: ab, bc, ca

    def cells(self):
        return sorted(self.loops.keys())


def label(densities) -> PhaseLabeling:
    """Vertex labels by largest density; ties go to the lowest phase index."""
    u = np.asarray(densities, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("densities contain non-finite values")
    return PhaseLabeling(np.argmax(u, axis=1).astype(np.int64), u.shape[1])


def extract(labeling: PhaseLabeling, mesh: SurfaceMesh) -> PartitionTopology:
    """Partition topology of the argmax labeling."""
    lab = labeling.labels
    tri = mesh.triangles
    tl = lab[tri]  # (T, 3)
    distinct = np.ones(len(tri), dtype=np.int64)
    distinct += (tl[:, 1] != tl[:, 0]).astype(np.int64)
    distinct += ((tl[:, 2] != tl[:, 0]) & (tl[:, 2] != tl[:, 1])).astype(np.int64)

    boundary_mask = lab[mesh.edges[:, 0]] != lab[mesh.edges[:, 1]]
    boundary_edges = np.nonzero(boundary_mask)[0]

    # umbrella check: distinct labels among a vertex and its edge neighbors
    star_labels: Dict[int, set] = {}
    for e in boundary_edges:
        a, b = mesh.edges[e]
        star_labels.setdefault(int(a), {int(lab[a])}).add(int(lab[b]))
        star_labels.setdefault(int(b), {int(lab[b])}).add(int(lab[a]))
    for vtx, labs in star_labels.items():
        if len(labs) >= 4:
            raise UnresolvableJunctionError(
                f"vertex {vtx} touches {len(labs)} phases"
            )

    # successor map: within each mixed triangle, the contour of cell L runs
    # from the directed edge whose tail is labeled L to the one whose head is
    successor: Dict[Tuple[int, int], Tuple[int, int]] = {}
    mixed_ids = np.nonzero(distinct > 1)[0]
    crossed, crossed_edges = [], []
    voids, void_edges = [], []
    for t in mixed_ids:
        a, b, c = tri[t]
        la, lb, lc = int(lab[a]), int(lab[b]), int(lab[c])
        e_ab, e_bc, e_ca = mesh.tri_edges[t]
        directed = ((la, lb, int(e_ab)), (lb, lc, int(e_bc)), (lc, la, int(e_ca)))
        tails = {}
        heads = {}
        for tail_lab, head_lab, eid in directed:
            if tail_lab == head_lab:
                continue
            tails[tail_lab] = eid
            heads[head_lab] = eid
        for cell, start_edge in tails.items():
            successor[(cell, start_edge)] = (heads[cell], int(t))
        if distinct[t] == 2:
            crossed.append(int(t))
            mixed_e = sorted({eid for _, _, eid in directed
                              if lab[mesh.edges[eid, 0]] != lab[mesh.edges[eid, 1]]})
            crossed_edges.append(mixed_e)
        else:
            voids.append((int(t), (la, lb, lc)))
            void_edges.append([int(e_ab), int(e_bc), int(e_ca)])

    # assemble closed loops per cell
    loops: Dict[int, List[List[Tuple[int, int]]]] = {}
    by_cell: Dict[int, List[int]] = {}
    for (cell, eid) in successor:
        by_cell.setdefault(cell, []).append(eid)
    for cell in sorted(by_cell):
        remaining = set(by_cell[cell])
        cell_loops = []
        while remaining:
            start = min(remaining)
            chain = []
            eid = start
            while True:
                nxt, through = successor[(cell, eid)]
                chain.append((eid, through))
                remaining.discard(eid)
                eid = nxt
                if eid == start:
                    break
            cell_loops.append(chain)
        loops[cell] = cell_loops

    adjacency = {
        (min(int(lab[mesh.edges[e, 0]]), int(lab[mesh.edges[e, 1]])),
         max(int(lab[mesh.edges[e, 0]]), int(lab[mesh.edges[e, 1]])))
        for e in boundary_edges
    }
    return PartitionTopology(
        labels=lab,
        n_phases=labeling.n_phases,
        boundary_edges=boundary_edges,
        loops=loops,
        voids=voids,
        adjacency=adjacency,
        crossed_triangles=np.asarray(crossed, dtype=np.int64),
        crossed_edges=np.asarray(crossed_edges, dtype=np.int64).reshape(-1, 2),
        void_triangles=np.asarray([t for t, _ in voids], dtype=np.int64),
        void_edges=np.asarray(void_edges, dtype=np.int64).reshape(-1, 3),
    )


def raw_perimeter(topology: PartitionTopology, mesh: SurfaceMesh) -> float:
    """Total interface length with every edge parameter at 0.5, counted once.

    Two-label triangles contribute the segment between their two edge
    midpoints; triple voids contribute the Fermat tree of their three edge
    midpoints.
    """
    mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    total = 0.0
    if len(topology.crossed_edges):
        seg = mid[topology.crossed_edges[:, 0]] - mid[topology.crossed_edges[:, 1]]
        total += float(np.linalg.norm(seg, axis=1).sum())
    if len(topology.void_edges):
        corners = mid[topology.void_edges]  # (W, 3, 3)
        x, _ = geom.fermat_points(corners)
        spokes = corners - x[:, None, :]
        total += float(np.linalg.norm(spokes, axis=2).sum())
    return total


def level_set_length(values, mesh: SurfaceMesh, level: float = 0.5) -> float:
    """Length of the linear-interpolation level set of a vertex field.

    Diagnostic: on converged smooth densities this tracks the true
    interface length far better than the zigzag indicator contours.
    """
    u = np.asarray(values, dtype=float) - level
    tri = mesh.triangles
    total = 0.0
    signs = u[tri] > 0.0
    crossing = np.nonzero((signs.sum(axis=1) % 3) != 0)[0]
    for t in crossing:
        pts = []
        for k in range(3):
            i, j = tri[t, k], tri[t, (k + 1) % 3]
            ui, uj = u[i], u[j]
            if (ui > 0.0) != (uj > 0.0):
                s = ui / (ui - uj)
                pts.append((1 - s) * mesh.vertices[i] + s * mesh.vertices[j])
        if len(pts) == 2:
            total += float(np.linalg.norm(pts[0] - pts[1]))
    return total


# -- structured text dump --------------------------------------------------


def write_topology(path, topology: PartitionTopology):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("topology\n")
        fh.write(f"phases {topology.n_phases}\n")
        fh.write(f"labels {' '.join(str(int(l)) for l in topology.labels)}\n")
        fh.write(f"cells {len(topology.loops)}\n")
        for cell in topology.cells():
            chains = topology.loops[cell]
            fh.write(f"cell {cell} loops {len(chains)}\n")
            for chain in chains:
                body = " ".join(f"{e}:{t}" for e, t in chain)
                fh.write(f"loop {len(chain)} {body}\n")
        fh.write(f"voids {len(topology.voids)}\n")
        for t, (la, lb, lc) in topology.voids:
            fh.write(f"void {t} {la} {lb} {lc}\n")


def read_labels(path):
    """Labels back from a topology dump (enough to rebuild via extract)."""
    with open(path, "r", encoding="ascii") as fh:
        if fh.readline().strip() != "topology":
            raise ValueError("not a topology dump")
        n_phases = int(fh.readline().split()[1])
        parts = fh.readline().split()
        labels = np.array(parts[1:], dtype=np.int64)
    return PhaseLabeling(labels, n_phases)
