"""Constrained minimization of total boundary length on the triangulated surface.

One parameter per mesh edge places the contour crossing point
x = lambda * a + (1 - lambda) * b on the edge (a, b); parameters on
non-boundary edges are inert. Two-label triangles contribute one straight
segment and a bilinear split of their area; triple-void triangles are closed
with the Fermat point of their three crossing points, whose length and area
contributions are differentiated by central finite differences. The
constrained solve is an augmented Lagrangian with box-clamped LBFGS inner
iterations followed by a Gauss-Newton restoration of the equal-area
constraints. After convergence the two switch rules relabel vertices whose
contour points hit an edge endpoint or whose triple point reaches its
triangle's boundary, and the optimization restarts on the new topology.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.optimize

from . import contour as contour_mod
from . import geom
from .contour import PartitionTopology
from .mesh import SurfaceMesh

logger = logging.getLogger("geopart")

_FD_STEP = 1e-6  # central-difference step for Fermat-tree contributions
_SWITCH_TOL = 1e-6  # lambda within this of 0/1 triggers a relabel


@dataclass
class RefineReport:
    single_count_length: float
    double_count_length: float
    cell_areas: np.ndarray
    max_area_residual: float
    restarts: int
    converged: bool
    perimeter_history: list = field(default_factory=list)


class MeshPartitionState:
    """Edge parameters plus the tables needed to evaluate length and areas."""

    def __init__(self, topology: PartitionTopology, mesh: SurfaceMesh,
                 lambdas: Optional[np.ndarray] = None):
        self.mesh = mesh
        self.topology = topology
        self.labels = topology.labels
        self.n_cells = topology.n_phases
        self.lambdas = (np.full(mesh.num_edges, 0.5)
                        if lambdas is None else np.asarray(lambdas, float).copy())
        self._build_tables()

    # -- static tables ----------------------------------------------------

    def _build_tables(self):
        mesh, lab = self.mesh, self.labels
        self.boundary = topo_be = self.topology.boundary_edges
        self.n_var = len(topo_be)
        local = np.full(mesh.num_edges, -1, dtype=np.int64)
        local[topo_be] = np.arange(self.n_var)
        self.local_index = local
        self.ea = mesh.vertices[mesh.edges[topo_be, 0]]
        self.eb = mesh.vertices[mesh.edges[topo_be, 1]]

        areas = mesh.triangle_areas()
        self.total_area = float(areas.sum())
        self.const_area = np.zeros(self.n_cells)

        tl = lab[mesh.triangles]
        distinct = np.ones(len(mesh.triangles), dtype=np.int64)
        distinct += (tl[:, 1] != tl[:, 0]).astype(np.int64)
        distinct += ((tl[:, 2] != tl[:, 0]) & (tl[:, 2] != tl[:, 1])).astype(np.int64)
        interior = distinct == 1
        np.add.at(self.const_area, tl[interior, 0], areas[interior])

        # two-label triangles: segment + bilinear corner split
        seg_pairs = []
        bil = {"e1": [], "e2": [], "c1": [], "s1": [], "c2": [], "s2": [],
               "coef": [], "odd": [], "majority": []}
        for t in np.nonzero(distinct == 2)[0]:
            vs = mesh.triangles[t]
            ls = lab[vs]
            if ls[0] == ls[1]:
                odd_pos = 2
            elif ls[0] == ls[2]:
                odd_pos = 1
            else:
                odd_pos = 0
            w = vs[odd_pos]
            edges3 = mesh.tri_edges[t]
            mixed = [e for e in edges3
                     if lab[mesh.edges[e, 0]] != lab[mesh.edges[e, 1]]]
            e1, e2 = int(mixed[0]), int(mixed[1])
            seg_pairs.append((local[e1], local[e2]))
            for key, e in (("1", e1), ("2", e2)):
                if mesh.edges[e, 1] == w:  # t = lambda
                    bil["c" + key].append(0.0)
                    bil["s" + key].append(1.0)
                else:  # t = 1 - lambda
                    bil["c" + key].append(1.0)
                    bil["s" + key].append(-1.0)
            bil["e1"].append(local[e1])
            bil["e2"].append(local[e2])
            bil["coef"].append(areas[t])
            bil["odd"].append(ls[odd_pos])
            bil["majority"].append(ls[(odd_pos + 1) % 3])
            self.const_area[ls[(odd_pos + 1) % 3]] += areas[t]
        self.seg = np.asarray(seg_pairs, dtype=np.int64).reshape(-1, 2)
        self.bil = {k: np.asarray(v) for k, v in bil.items()}
        self.bil["odd"] = self.bil["odd"].astype(np.int64)
        self.bil["majority"] = self.bil["majority"].astype(np.int64)
        self.bil["e1"] = self.bil["e1"].astype(np.int64)
        self.bil["e2"] = self.bil["e2"].astype(np.int64)

        # triple voids: edges in (ab, bc, ca) order, labels in vertex order
        self.void_tris = self.topology.void_triangles
        self.void_edges_local = local[self.topology.void_edges].reshape(-1, 3)
        self.void_labels = np.asarray(
            [labs for _, labs in self.topology.voids], dtype=np.int64
        ).reshape(-1, 3)
        self.void_corners = mesh.vertices[mesh.triangles[self.void_tris]].reshape(-1, 3, 3)
        if len(self.void_tris):
            nrm = np.cross(self.void_corners[:, 1] - self.void_corners[:, 0],
                           self.void_corners[:, 2] - self.void_corners[:, 0])
            self.void_normals = nrm / np.linalg.norm(nrm, axis=1)[:, None]
        else:
            self.void_normals = np.zeros((0, 3))

    # -- geometry ----------------------------------------------------------

    def points(self, lam_local):
        return lam_local[:, None] * self.ea + (1.0 - lam_local)[:, None] * self.eb

    def lam_local(self):
        return self.lambdas[self.boundary]

    def set_lam_local(self, lam_local):
        self.lambdas[self.boundary] = lam_local

    def _void_eval(self, pts):
        """Steiner length and per-corner cell areas for every void.

        pts: (W, 3, 3) crossing points in (ab, bc, ca) order.
        Returns (steiner (W,), cell_areas (W, 3)) where column k is the
        area handed to the cell of void vertex k.
        """
        if len(pts) == 0:
            return np.zeros(0), np.zeros((0, 3))
        x, _ = geom.fermat_points(pts)
        spokes = pts - x[:, None, :]
        steiner = np.linalg.norm(spokes, axis=2).sum(axis=1)
        v = self.void_corners
        n = self.void_normals

        def quad(p0, p1, p2, p3):
            s = (np.cross(p0, p1) + np.cross(p1, p2)
                 + np.cross(p2, p3) + np.cross(p3, p0))
            return 0.5 * np.einsum("ij,ij->i", s, n)

        a0 = quad(v[:, 0], pts[:, 0], x, pts[:, 2])
        a1 = quad(v[:, 1], pts[:, 1], x, pts[:, 0])
        a2 = quad(v[:, 2], pts[:, 2], x, pts[:, 1])
        return steiner, np.stack([a0, a1, a2], axis=1)

    def _void_tables(self, lam_local):
        """Void lengths/areas and their FD gradients w.r.t. the 3 edge parameters."""
        W = len(self.void_tris)
        if W == 0:
            zero = np.zeros(0)
            return zero, np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3, 3))
        lv = lam_local[self.void_edges_local]  # (W, 3)
        variants = [lv]
        for k in range(3):
            for sgn in (1.0, -1.0):
                pert = lv.copy()
                pert[:, k] += sgn * _FD_STEP
                variants.append(pert)
        all_lam = np.concatenate(variants, axis=0)  # (7W, 3)
        ea = self.ea[self.void_edges_local]  # (W, 3, 3)
        eb = self.eb[self.void_edges_local]
        ea7 = np.tile(ea, (7, 1, 1))
        eb7 = np.tile(eb, (7, 1, 1))
        pts = all_lam[:, :, None] * ea7 + (1.0 - all_lam)[:, :, None] * eb7

        # _void_eval expects per-void corner/normal tables; tile them
        saved = (self.void_corners, self.void_normals)
        self.void_corners = np.tile(saved[0], (7, 1, 1))
        self.void_normals = np.tile(saved[1], (7, 1))
        steiner, cell_areas = self._void_eval(pts)
        self.void_corners, self.void_normals = saved

        steiner = steiner.reshape(7, W)
        cell_areas = cell_areas.reshape(7, W, 3)
        len_grad = np.stack(
            [(steiner[1 + 2 * k] - steiner[2 + 2 * k]) / (2 * _FD_STEP)
             for k in range(3)], axis=1
        )  # (W, 3)
        area_grad = np.stack(
            [(cell_areas[1 + 2 * k] - cell_areas[2 + 2 * k]) / (2 * _FD_STEP)
             for k in range(3)], axis=1
        )  # (W, 3 params, 3 corners)
        return steiner[0], cell_areas[0], len_grad, area_grad

    # -- objective pieces ----------------------------------------------------

    def _segments_and_grad(self, lam_local):
        pts = self.points(lam_local)
        grad = np.zeros(self.n_var)
        total = 0.0
        if len(self.seg):
            d = pts[self.seg[:, 0]] - pts[self.seg[:, 1]]
            lens = np.linalg.norm(d, axis=1)
            tiny = lens < 1e-12
            if tiny.any():
                warnings.warn("zero-length contour segment; perturbing parameters")
                lam_local = lam_local.copy()
                lam_local[self.seg[tiny, 0]] += 1e-9
                pts = self.points(lam_local)
                d = pts[self.seg[:, 0]] - pts[self.seg[:, 1]]
                lens = np.linalg.norm(d, axis=1)
            total += float(lens.sum())
            unit = d / lens[:, None]
            dir1 = self.ea[self.seg[:, 0]] - self.eb[self.seg[:, 0]]
            dir2 = self.ea[self.seg[:, 1]] - self.eb[self.seg[:, 1]]
            np.add.at(grad, self.seg[:, 0], np.einsum("ij,ij->i", unit, dir1))
            np.add.at(grad, self.seg[:, 1], -np.einsum("ij,ij->i", unit, dir2))
        return total, grad

    def _bilinear_areas_and_grads(self, lam_local):
        areas = self.const_area.copy()
        grads = np.zeros((self.n_cells, self.n_var))
        b = self.bil
        if len(b["coef"]):
            t1 = b["c1"] + b["s1"] * lam_local[b["e1"]]
            t2 = b["c2"] + b["s2"] * lam_local[b["e2"]]
            corner = b["coef"] * t1 * t2
            np.add.at(areas, b["odd"], corner)
            np.add.at(areas, b["majority"], -corner)
            d1 = b["coef"] * b["s1"] * t2
            d2 = b["coef"] * b["s2"] * t1
            np.add.at(grads, (b["odd"], b["e1"]), d1)
            np.add.at(grads, (b["odd"], b["e2"]), d2)
            np.add.at(grads, (b["majority"], b["e1"]), -d1)
            np.add.at(grads, (b["majority"], b["e2"]), -d2)
        return areas, grads

    def _scatter_void_areas(self, areas, grads, cell_areas, area_grad):
        if not len(self.void_tris):
            return
        w = len(self.void_tris)
        np.add.at(areas, self.void_labels.ravel(), cell_areas.ravel())
        rows = np.broadcast_to(self.void_labels[:, None, :], (w, 3, 3))
        cols = np.broadcast_to(self.void_edges_local[:, :, None], (w, 3, 3))
        np.add.at(grads, (rows.ravel(), cols.ravel()), area_grad.ravel())

    def perimeter_and_grad(self, lam_local=None):
        """Single-count total interface length and its gradient."""
        if lam_local is None:
            lam_local = self.lam_local()
        total, grad = self._segments_and_grad(lam_local)
        steiner, _, len_grad, _ = self._void_tables(lam_local)
        total += float(steiner.sum())
        if len(self.void_tris):
            np.add.at(grad, self.void_edges_local.ravel(), len_grad.ravel())
        return total, grad

    def areas_and_grads(self, lam_local=None):
        """Cell areas (n,) and their gradients (n, n_var)."""
        if lam_local is None:
            lam_local = self.lam_local()
        areas, grads = self._bilinear_areas_and_grads(lam_local)
        _, cell_areas, _, area_grad = self._void_tables(lam_local)
        self._scatter_void_areas(areas, grads, cell_areas, area_grad)
        return areas, grads

    def full_eval(self, lam_local=None):
        """Perimeter, cell areas and both gradients off one void evaluation."""
        if lam_local is None:
            lam_local = self.lam_local()
        total, grad = self._segments_and_grad(lam_local)
        steiner, cell_areas, len_grad, area_grad = self._void_tables(lam_local)
        total += float(steiner.sum())
        if len(self.void_tris):
            np.add.at(grad, self.void_edges_local.ravel(), len_grad.ravel())
        areas, grads = self._bilinear_areas_and_grads(lam_local)
        self._scatter_void_areas(areas, grads, cell_areas, area_grad)
        return total, grad, areas, grads

    def cell_perimeters(self):
        """Per-cell boundary lengths (chords plus Fermat corrections)."""
        lam_local = self.lam_local()
        pts = self.points(lam_local)
        void_pts = (pts[self.void_edges_local]
                    if len(self.void_tris) else np.zeros((0, 3, 3)))
        fermat, _ = geom.fermat_points(void_pts)
        void_of_tri = {int(t): k for k, t in enumerate(self.void_tris)}
        per = np.zeros(self.n_cells)
        for cell in self.topology.cells():
            total = 0.0
            for chain in self.topology.loops[cell]:
                k = len(chain)
                for i, (e, through) in enumerate(chain):
                    e_next = chain[(i + 1) % k][0]
                    p1 = pts[self.local_index[e]]
                    p2 = pts[self.local_index[e_next]]
                    chord = float(np.linalg.norm(p1 - p2))
                    if through in void_of_tri:
                        x = fermat[void_of_tri[through]]
                        total += float(np.linalg.norm(p1 - x)
                                       + np.linalg.norm(x - p2))
                    else:
                        total += chord
            per[cell] = total
        return per


def build_state(topology: PartitionTopology, mesh: SurfaceMesh) -> MeshPartitionState:
    """Initial refinement state with every edge parameter at 0.5."""
    return MeshPartitionState(topology, mesh)


# -- public per-operation views ---------------------------------------------


def perimeter_with_grad(state: MeshPartitionState):
    """Single-count interface length and d/d(lambda) over all mesh edges."""
    total, grad_local = state.perimeter_and_grad()
    grad = np.zeros(state.mesh.num_edges)
    grad[state.boundary] = grad_local
    return total, grad


def area_with_grad(state: MeshPartitionState, cell: int):
    areas, grads = state.areas_and_grads()
    grad = np.zeros(state.mesh.num_edges)
    grad[state.boundary] = grads[cell]
    return float(areas[cell]), grad


def fermat_contrib(state: MeshPartitionState, void_index: int):
    """Cell-resolved Fermat corrections for one void triangle.

    Returns a dict with the Fermat point, per-cell area additions, per-cell
    length corrections (spoke pair minus the bypassed chord) and their
    central-difference gradients w.r.t. the three edge parameters.
    """
    lam_local = state.lam_local()
    labs = state.void_labels[void_index]
    les = state.void_edges_local[void_index]

    def one(lams):
        ll = lam_local.copy()
        ll[les] = lams
        pts = ll[les][:, None] * state.ea[les] + (1 - ll[les])[:, None] * state.eb[les]
        x, flag = geom.fermat_point(pts[0], pts[1], pts[2])
        spokes = [float(np.linalg.norm(x - p)) for p in pts]
        # corner k of the void belongs to cell labs[k]; its contour bypasses
        # the chord joining the points on its two incident edges
        v = state.void_corners[void_index]
        n = state.void_normals[void_index]

        def quad(p0, p1, p2, p3):
            s = (np.cross(p0, p1) + np.cross(p1, p2)
                 + np.cross(p2, p3) + np.cross(p3, p0))
            return 0.5 * float(np.dot(s, n))

        area = [quad(v[0], pts[0], x, pts[2]),
                quad(v[1], pts[1], x, pts[0]),
                quad(v[2], pts[2], x, pts[1])]
        # cell at corner 0 crosses points on edges ab (0) and ca (2)
        length = [spokes[0] + spokes[2] - float(np.linalg.norm(pts[0] - pts[2])),
                  spokes[1] + spokes[0] - float(np.linalg.norm(pts[1] - pts[0])),
                  spokes[2] + spokes[1] - float(np.linalg.norm(pts[2] - pts[1]))]
        return x, flag, np.array(area), np.array(length)

    base = lam_local[les]
    x, flag, area, length = one(base)
    area_grad = np.zeros((3, 3))
    length_grad = np.zeros((3, 3))
    for k in range(3):
        up, dn = base.copy(), base.copy()
        up[k] += _FD_STEP
        dn[k] -= _FD_STEP
        _, _, a_up, l_up = one(up)
        _, _, a_dn, l_dn = one(dn)
        area_grad[k] = (a_up - a_dn) / (2 * _FD_STEP)
        length_grad[k] = (l_up - l_dn) / (2 * _FD_STEP)
    return {
        "fermat_point": x,
        "at_corner": flag,
        "cells": labs,
        "area_additions": dict(zip(labs.tolist(), area.tolist())),
        "length_additions": dict(zip(labs.tolist(), length.tolist())),
        "area_gradients": area_grad,
        "length_gradients": length_grad,
    }


# -- constrained minimization -------------------------------------------------


@dataclass
class MeshOptConfig:
    area_tol: float = 1e-9  # relative to total mesh area
    inner_maxiter: int = 250
    outer_rounds: int = 4
    rho_init: float = 1e3
    rho_growth: float = 10.0
    max_restarts: int = 50
    seed: int = 0


def constrained_minimize(state: MeshPartitionState,
                         config: Optional[MeshOptConfig] = None) -> MeshPartitionState:
    """Minimize total length under equal areas; lambdas clamped to [0, 1].

    Augmented Lagrangian outer loop, LBFGS-B inner solves, and a final
    Gauss-Newton restoration of the area constraints. The contract is the
    residual, not the algorithm: |Area_i - A/n| < area_tol * A on success.
    """
    if config is None:
        config = MeshOptConfig()
    A = state.total_area
    n = state.n_cells
    target = np.full(n, A / n)
    mu = np.zeros(n)
    rho = config.rho_init
    lam = state.lam_local().copy()

    def eval_all(x):
        per, per_g, areas, area_g = state.full_eval(x)
        c = (areas - target) / A
        return per, per_g, c, area_g / A

    def objective(x):
        per, per_g, c, jac = eval_all(x)
        f = per + mu @ c + 0.5 * rho * (c @ c)
        g = per_g + (mu + rho * c) @ jac
        return f, g

    prev_norm = np.inf
    prev_per = np.inf
    for _ in range(config.outer_rounds):
        res = scipy.optimize.minimize(
            objective, lam, jac=True, method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * state.n_var,
            options={"maxiter": config.inner_maxiter, "ftol": 1e-16,
                     "gtol": 1e-10, "maxcor": 20},
        )
        lam = np.clip(res.x, 0.0, 1.0)
        per, _, c, _ = eval_all(lam)
        cnorm = float(np.max(np.abs(c)))
        stalled = abs(prev_per - per) < 1e-8 * (1.0 + abs(per))
        if cnorm < 0.5 * config.area_tol or (cnorm < 1e-7 and stalled):
            break
        mu = mu + rho * c
        if cnorm > 0.25 * prev_norm:
            rho *= config.rho_growth
        prev_norm = cnorm
        prev_per = per

    # Gauss-Newton restoration of the (redundant) equal-area system
    for _ in range(8):
        _, _, c, jac = eval_all(lam)
        if np.max(np.abs(c)) < 1e-12:
            break
        J = jac[: n - 1]
        rhs = -c[: n - 1]
        gram = J @ J.T + 1e-14 * np.eye(n - 1)
        delta = J.T @ np.linalg.solve(gram, rhs)
        lam = np.clip(lam + delta, 0.0, 1.0)

    out = MeshPartitionState(state.topology, state.mesh, state.lambdas)
    out.set_lam_local(lam)
    return out


def switch_restart(state: MeshPartitionState):
    """Apply the two relabeling rules to a converged state.

    Rule 1: a parameter at 0 or 1 hands the touched vertex to the adjacent
    cell. Rule 2: a Fermat point on its triangle boundary migrates the void
    across that edge. Returns (new state, switched). The new state keeps the
    previous parameters on edges that remain boundary edges.
    """
    mesh = state.mesh
    lab = state.labels
    lam_local = state.lam_local()
    proposals: Dict[int, Tuple[float, int]] = {}

    hi = np.nonzero(lam_local >= 1.0 - _SWITCH_TOL)[0]
    lo = np.nonzero(lam_local <= _SWITCH_TOL)[0]
    for idx in hi:
        e = state.boundary[idx]
        a, b = mesh.edges[e]
        extremity = lam_local[idx] - (1.0 - _SWITCH_TOL)
        cur = proposals.get(int(a))
        if cur is None or extremity > cur[0]:
            proposals[int(a)] = (extremity, int(lab[b]))
    for idx in lo:
        e = state.boundary[idx]
        a, b = mesh.edges[e]
        extremity = _SWITCH_TOL - lam_local[idx]
        cur = proposals.get(int(b))
        if cur is None or extremity > cur[0]:
            proposals[int(b)] = (extremity, int(lab[a]))

    # rule 2: Fermat point absorbed by a void corner
    if len(state.void_tris):
        pts = state.points(lam_local)[state.void_edges_local]
        _, at_corner = geom.fermat_points(pts)
        for w in np.nonzero(at_corner >= 0)[0]:
            corner = int(at_corner[w])
            e = state.topology.void_edges[w, corner]
            opposite_label = int(state.void_labels[w, (corner + 2) % 3])
            t0, t1 = mesh.edge_triangles[e]
            t_adj = int(t1) if int(t0) == int(state.void_tris[w]) else int(t0)
            a, b = mesh.edges[e]
            vd = [v for v in mesh.triangles[t_adj] if v != a and v != b][0]
            if int(lab[vd]) != opposite_label and int(vd) not in proposals:
                proposals[int(vd)] = (0.0, opposite_label)

    if not proposals:
        return state, False

    new_labels = lab.copy()
    for vtx, (_, new_lab) in proposals.items():
        new_labels[vtx] = new_lab
    labeling = contour_mod.PhaseLabeling(new_labels, state.n_cells)
    new_topo = contour_mod.extract(labeling, mesh)
    lambdas = np.full(mesh.num_edges, 0.5)
    keep = np.intersect1d(state.boundary, new_topo.boundary_edges)
    lambdas[keep] = state.lambdas[keep]
    return MeshPartitionState(new_topo, mesh, lambdas), True


def optimize_partition(mesh: SurfaceMesh, labeling, config: Optional[MeshOptConfig] = None):
    """Full on-mesh refinement: optimize, switch, repeat until stable.

    Returns (final state, RefineReport).
    """
    if config is None:
        config = MeshOptConfig()
    # intermediate solves between switches run light; the final labeling is
    # re-solved at full quality so the residual contract holds on the output
    light = MeshOptConfig(
        area_tol=max(config.area_tol, 1e-7),
        inner_maxiter=min(100, config.inner_maxiter),
        outer_rounds=2,
        rho_init=config.rho_init,
        rho_growth=config.rho_growth,
        max_restarts=config.max_restarts,
        seed=config.seed,
    )
    topo = contour_mod.extract(labeling, mesh)
    state = build_state(topo, mesh)
    history = []
    per_at_switch = []
    restarts = 0
    converged = False
    best_state, best_per = state, np.inf
    seen = {state.labels.tobytes()}
    full_pass = False
    while restarts <= config.max_restarts:
        state = constrained_minimize(state, config if full_pass else light)
        per, _ = state.perimeter_and_grad()
        history.append(per)
        if per < best_per:
            best_state, best_per = state, per
        try:
            nxt, switched = switch_restart(state)
        except contour_mod.UnresolvableJunctionError as exc:
            logger.warning("refinement aborted: %s", exc)
            break
        if not switched:
            if not full_pass:
                full_pass = True
                continue
            converged = True
            break
        full_pass = False
        key = nxt.labels.tobytes()
        if key in seen:
            logger.warning("switch restarts entered a cycle; keeping best state")
            break
        per_at_switch.append(per)
        if (len(per_at_switch) >= 4
                and per_at_switch[-4] - per < 1e-4 * abs(per)):
            logger.warning("switch restarts stopped making progress; "
                           "keeping best state")
            break
        seen.add(key)
        state = nxt
        restarts += 1
    else:
        logger.warning("switch restarts exceeded the cap (%d)", config.max_restarts)
    if not converged:
        state = constrained_minimize(best_state, config)
        per, _ = state.perimeter_and_grad()
        history.append(per)
    areas, _ = state.areas_and_grads()
    single, _ = state.perimeter_and_grad()
    report = RefineReport(
        single_count_length=float(single),
        double_count_length=2.0 * float(single),
        cell_areas=areas,
        max_area_residual=float(
            np.max(np.abs(areas - state.total_area / state.n_cells))
        ),
        restarts=restarts,
        converged=converged,
        perimeter_history=history,
    )
    return state, report


# -- polyline export -----------------------------------------------------------


def write_contours_obj(path, state: MeshPartitionState):
    """Final contours as OBJ line elements (one polyline per chain)."""
    lam_local = state.lam_local()
    pts = state.points(lam_local)
    void_pts = (pts[state.void_edges_local]
                if len(state.void_tris) else np.zeros((0, 3, 3)))
    fermat, _ = geom.fermat_points(void_pts)
    void_of_tri = {int(t): k for k, t in enumerate(state.void_tris)}

    vertices = []
    lines = []

    def add_vertex(p):
        vertices.append(p)
        return len(vertices)

    point_id = {}
    for cell in state.topology.cells():
        for chain in state.topology.loops[cell]:
            ids = []
            for (e, through) in chain:
                key = ("e", int(e))
                if key not in point_id:
                    point_id[key] = add_vertex(pts[state.local_index[e]])
                ids.append(point_id[key])
                if through in void_of_tri:
                    key = ("f", through)
                    if key not in point_id:
                        point_id[key] = add_vertex(fermat[void_of_tri[through]])
                    ids.append(point_id[key])
            ids.append(ids[0])
            lines.append(ids)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# contour polylines\n")
        for p in vertices:
            fh.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
        for ids in lines:
            fh.write("l " + " ".join(str(i) for i in ids) + "\n")


def write_refine_report(path, report: RefineReport):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("mesh refinement report\n")
        fh.write(f"single_count_length {report.single_count_length:.12g}\n")
        fh.write(f"double_count_length {report.double_count_length:.12g}\n")
        for i, a in enumerate(report.cell_areas):
            fh.write(f"area {i} {a:.12g}\n")
        fh.write(f"max_area_residual {report.max_area_residual:.6e}\n")
        fh.write(f"restarts {report.restarts}\n")
        fh.write(f"converged {report.converged}\n")
