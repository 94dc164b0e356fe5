"""Multiphase perimeter relaxation on a surface mesh.

Minimizes, per phase, eps * u'Ku + (1/eps) * w'Mw with w = u(1-u), plus a
penalty that keeps phases away from constants, under the partition
constraint (rows of the density matrix sum to 1) and the equal-area
constraint (mass-weighted column sums all equal area/n). Both constraints
are affine, so descent runs in their tangent space with an orthogonal
projection after every step. The interface width eps follows the mesh:
each continuation level refines the mesh, halves eps, and warm starts from
the prolonged previous minimizer.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import fem
from .mesh import SurfaceMesh, refine

logger = logging.getLogger("geopart")


@dataclass
class RelaxConfig:
    n_phases: int
    epsilons: Optional[Sequence[float]] = None  # one per level; None = mean edge length
    penalty_weight: Optional[float] = None  # None = 0.01 * E0 / starget**2
    starget: Optional[float] = None  # None = sqrt((1/n)(1 - 1/n))
    lbfgs_memory: int = 10
    grad_tol_factor: float = 1e-6  # tolerance = factor * area
    max_iterations: int = 2000
    stagnation_window: int = 50
    stagnation_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.n_phases < 2:
            raise ValueError("need at least 2 phases")

    def starget_value(self):
        if self.starget is not None:
            return self.starget
        n = self.n_phases
        return np.sqrt((1.0 / n) * (1.0 - 1.0 / n))


@dataclass
class LevelData:
    """Everything the optimizer needs on one mesh level."""

    mesh: SurfaceMesh
    mass: "object"
    stiffness: "object"
    weights: np.ndarray
    area: float

    @classmethod
    def from_mesh(cls, mesh):
        M = fem.assemble_mass(mesh)
        K = fem.assemble_stiffness(mesh)
        v = fem.lumped_weights(M)
        return cls(mesh, M, K, v, float(v.sum()))


# -- constraint projection (rank-one correction from the KKT system) ------


def project(values, row_targets, col_targets, weights):
    """Euclidean projection of an N x n array onto the affine set

        sum_j a_ij = row_targets_i  and  sum_i weights_i a_ij = col_targets_j.

    The correction has the form eta * 1' + weights * lambda'; the singular
    n x n multiplier system is gauge fixed by lambda_n = 0 and its leading
    (n-1) x (n-1) block solved directly.
    """
    a = np.asarray(values, dtype=float)
    n = a.shape[1]
    v = np.asarray(weights, dtype=float)
    v2 = float(v @ v)
    if v2 <= 0.0:
        raise ValueError("projection weights are identically zero")
    row_t = np.broadcast_to(np.asarray(row_targets, dtype=float), a.shape[:1])
    col_t = np.broadcast_to(np.asarray(col_targets, dtype=float), (n,))

    e = a.sum(axis=1) - row_t
    f = v @ a - col_t
    q = f - (v @ e) / n
    lam = np.zeros(n)
    if n > 1:
        reduced = v2 * (np.eye(n - 1) - np.full((n - 1, n - 1), 1.0 / n))
        lam[: n - 1] = np.linalg.solve(reduced, q[: n - 1])
    eta = (e - lam.sum() * v) / n
    return a - eta[:, None] - np.outer(v, lam)


def tangent_project(gradient, weights):
    """Projection onto the homogeneous constraint tangent space."""
    return project(gradient, 0.0, np.zeros(gradient.shape[1]), weights)


# -- energy and gradient ---------------------------------------------------


def _std_terms(densities, weights, area):
    mean = (weights @ densities) / area
    centered = densities - mean[None, :]
    var = (weights @ (centered * centered)) / area
    return mean, centered, np.sqrt(np.maximum(var, 0.0))


def energy(densities, mass, stiffness, weights, area, eps, lam, starget):
    u = densities
    ku = stiffness @ u
    w = u * (1.0 - u)
    mw = mass @ w
    dirichlet = float(np.einsum("ij,ij->", u, ku))
    potential = float(np.einsum("ij,ij->", w, mw))
    _, _, std = _std_terms(u, weights, area)
    penalty = float(np.sum((std - starget) ** 2))
    return eps * dirichlet + potential / eps + lam * penalty


def gradient(densities, mass, stiffness, weights, area, eps, lam, starget):
    u = densities
    w = u * (1.0 - u)
    mw = mass @ w
    g = 2.0 * eps * (stiffness @ u) + (2.0 / eps) * mw * (1.0 - 2.0 * u)
    if lam != 0.0:
        _, centered, std = _std_terms(u, weights, area)
        safe = np.maximum(std, 1e-30)
        coef = 2.0 * lam * (std - starget) / (area * safe)
        g += coef[None, :] * weights[:, None] * centered
    return g


def energy_and_gradient(densities, level, eps, lam, starget):
    e = energy(densities, level.mass, level.stiffness, level.weights,
               level.area, eps, lam, starget)
    g = gradient(densities, level.mass, level.stiffness, level.weights,
                 level.area, eps, lam, starget)
    return e, g


# -- initialization --------------------------------------------------------


def random_init(n_vertices, n_phases, seed, weights, area):
    """I.i.d. uniform densities projected onto the constraints (PCG64 stream)."""
    rng = np.random.default_rng(seed)
    raw = rng.uniform(size=(n_vertices, n_phases))
    return project(raw, 1.0, np.full(n_phases, area / n_phases), weights)


# -- projected LBFGS -------------------------------------------------------


def minimize(u0, level, eps, config, lam=None):
    """Projected LBFGS descent at fixed eps.

    The gradient is projected onto the constraint tangent space, every
    accepted iterate is re-projected, and a backtracking line search keeps
    the energy non-increasing. Returns (densities, info dict).
    """
    n = config.n_phases
    starget = config.starget_value()
    col_targets = np.full(n, level.area / n)
    u = project(u0, 1.0, col_targets, level.weights)

    if lam is None:
        if config.penalty_weight is not None:
            lam = config.penalty_weight
        else:
            e0 = energy(u, level.mass, level.stiffness, level.weights,
                        level.area, eps, 0.0, starget)
            lam = 0.01 * e0 / starget ** 2

    tol = config.grad_tol_factor * level.area
    mem_s, mem_y = [], []
    e, g_raw = energy_and_gradient(u, level, eps, lam, starget)
    g = tangent_project(g_raw, level.weights)
    energies = [e]
    status = "max_iterations"

    for it in range(config.max_iterations):
        if not np.isfinite(e):
            raise FloatingPointError("non-finite relaxation energy")
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            status = "gradient_tolerance"
            break
        if (len(energies) > config.stagnation_window
                and energies[-config.stagnation_window - 1] - e
                < config.stagnation_tol):
            status = "stagnation"
            break

        # two-loop recursion on tangent-space pairs
        d = -g
        if mem_s:
            alphas = []
            for s, y, rho in reversed(mem_s):
                a_k = rho * np.einsum("ij,ij->", s, d)
                alphas.append((y, a_k))
                d -= a_k * y
            s, y, rho = mem_s[-1]
            d *= np.einsum("ij,ij->", s, y) / np.einsum("ij,ij->", y, y)
            for (y, a_k), (s2, y2, rho2) in zip(reversed(alphas), mem_s):
                b_k = rho2 * np.einsum("ij,ij->", y2, d)
                d += (a_k - b_k) * s2
        slope = np.einsum("ij,ij->", g, d)
        if slope >= 0.0:
            d = -g
            slope = -gnorm ** 2
            mem_s.clear()

        step = 1.0 if mem_s else min(1.0, 1.0 / max(gnorm, 1e-30))
        accepted = False
        for _ in range(40):
            u_try = project(u + step * d, 1.0, col_targets, level.weights)
            e_try = energy(u_try, level.mass, level.stiffness, level.weights,
                           level.area, eps, lam, starget)
            if e_try <= e + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "line_search_failure"
            break

        g_try = tangent_project(
            gradient(u_try, level.mass, level.stiffness, level.weights,
                     level.area, eps, lam, starget),
            level.weights,
        )
        s_pair = u_try - u
        y_pair = g_try - g
        sy = np.einsum("ij,ij->", s_pair, y_pair)
        if sy > 1e-10 * np.linalg.norm(s_pair) * np.linalg.norm(y_pair):
            mem_s.append((s_pair, y_pair, 1.0 / sy))
            if len(mem_s) > config.lbfgs_memory:
                mem_s.pop(0)
        u, e, g = u_try, e_try, g_try
        energies.append(e)

    info = {
        "energy": e,
        "iterations": len(energies) - 1,
        "status": status,
        "grad_norm": float(np.linalg.norm(g)),
        "penalty_weight": lam,
        "energies": energies,
    }
    return u, info


def continuation(mesh, config, levels):
    """Relaxation across `levels` meshes, refining and halving eps each time.

    Returns (densities, finest level data, per-level trace).
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    level = LevelData.from_mesh(mesh)
    u = random_init(mesh.num_vertices, config.n_phases, config.seed,
                    level.weights, level.area)
    trace = []
    for k in range(levels):
        if config.epsilons is not None:
            eps = float(config.epsilons[k])
        else:
            eps = level.mesh.mean_edge_length()
        u, info = minimize(u, level, eps, config)
        trace.append({
            "level": k,
            "vertices": level.mesh.num_vertices,
            "eps": eps,
            "energy": info["energy"],
            "iterations": info["iterations"],
            "status": info["status"],
        })
        logger.info("level %d: %d vertices, eps=%.4g, energy=%.8g (%s)",
                    k, level.mesh.num_vertices, eps, info["energy"],
                    info["status"])
        if k + 1 < levels:
            fine_mesh, prolong = refine(level.mesh)
            level = LevelData.from_mesh(fine_mesh)
            u = project(prolong @ u, 1.0,
                        np.full(config.n_phases, level.area / config.n_phases),
                        level.weights)
    return u, level, trace


def constraint_residuals(densities, weights, area):
    """(max row-sum error, max weighted column error) for diagnostics."""
    n = densities.shape[1]
    row = float(np.max(np.abs(densities.sum(axis=1) - 1.0)))
    col = float(np.max(np.abs(weights @ densities - area / n)))
    return row, col


# -- VTK export ------------------------------------------------------------


def write_density_vtk(path, mesh, densities, field_prefix="phase"):
    """Legacy-ASCII VTK polydata with one scalar field per phase."""
    n_pts = mesh.num_vertices
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("relaxed phase densities\n")
        fh.write("ASCII\n")
        fh.write("DATASET POLYDATA\n")
        fh.write(f"POINTS {n_pts} double\n")
        for p in mesh.vertices:
            fh.write(f"{p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
        nt = mesh.num_triangles
        fh.write(f"POLYGONS {nt} {4 * nt}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        fh.write(f"POINT_DATA {n_pts}\n")
        for j in range(densities.shape[1]):
            fh.write(f"SCALARS {field_prefix}_{j} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            for val in densities[:, j]:
                fh.write(f"{val:.12g}\n")


def write_relax_report(path, trace, residuals):
    """Structured text run report: eps per level, energy trace, residuals."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("relaxation report\n")
        for row in trace:
            fh.write(
                "level {level}: vertices={vertices} eps={eps:.12g} "
                "energy={energy:.12g} iterations={iterations} "
                "status={status}\n".format(**row)
            )
        fh.write(f"row_residual {residuals[0]:.6e}\n")
        fh.write(f"column_residual {residuals[1]:.6e}\n")
