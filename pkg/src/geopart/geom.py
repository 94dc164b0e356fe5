"""Small geometric primitives shared by the contour and refinement stages."""

import numpy as np

# cos(120 deg): a triangle corner at least this blunt absorbs the Fermat point
_FERMAT_COS_CUTOFF = -0.5


def triangle_areas(vertices, triangles):
    """Flat areas of the given triangles, shape (T,)."""
    p = vertices[triangles]
    return 0.5 * np.linalg.norm(
        np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1
    )


def polygon_area(points):
    """Area of a planar polygon given by ordered 3D points (k, 3)."""
    pts = np.asarray(points, dtype=float)
    s = np.sum(np.cross(pts, np.roll(pts, -1, axis=0)), axis=0)
    return 0.5 * np.linalg.norm(s)


def signed_polygon_area(points, normal):
    """Signed area of a planar polygon w.r.t. the given unit normal."""
    pts = np.asarray(points, dtype=float)
    s = np.sum(np.cross(pts, np.roll(pts, -1, axis=0)), axis=0)
    return 0.5 * float(np.dot(s, normal))


def fermat_points(corners):
    """Fermat (Torricelli) points of a batch of triangles.

    Parameters
    ----------
    corners : array (m, 3, 3)
        Triangle corners ``corners[k, i]`` in 3-space.

    Returns
    -------
    points : array (m, 3)
    at_corner : int array (m,)
        Index of the corner absorbing the point when some angle is at
        least 120 degrees, otherwise -1. Collinear triangles report the
        median corner.
    """
    corners = np.asarray(corners, dtype=float)
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    m = corners.shape[0]
    out = (a + b + c) / 3.0
    at_corner = np.full(m, -1, dtype=np.int64)
    if m == 0:
        return out, at_corner

    def _cos(u, v):
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        return np.einsum("ij,ij->i", u, v) / np.maximum(nu * nv, 1e-300)

    cos_a = _cos(b - a, c - a)
    cos_b = _cos(a - b, c - b)
    cos_c = _cos(a - c, b - c)

    d_ab = np.einsum("ij,ij->i", b - a, b - a)
    d_bc = np.einsum("ij,ij->i", c - b, c - b)
    d_ca = np.einsum("ij,ij->i", a - c, a - c)
    scale2 = np.maximum(d_ab, np.maximum(d_bc, d_ca))
    cross = np.cross(b - a, c - a)
    area2 = np.einsum("ij,ij->i", cross, cross)
    degenerate = area2 <= 1e-28 * np.maximum(scale2, 1e-300) ** 2

    # two coincident corners absorb the point (doubled distance term wins)
    merge_tol = 1e-24 * np.maximum(scale2, 1e-300)
    for idx, d2 in ((0, d_bc), (1, d_ca), (2, d_ab)):
        # d2 is the squared distance between the OTHER two corners
        mask = degenerate & (d2 <= merge_tol) & (at_corner < 0)
        other = (idx + 1) % 3
        at_corner[mask] = other
        out[mask] = corners[mask, other]
        degenerate[mask] = False
    coincident = at_corner >= 0

    for idx, cos_v in enumerate((cos_a, cos_b, cos_c)):
        mask = (~degenerate) & (~coincident) & (cos_v <= _FERMAT_COS_CUTOFF)
        at_corner[mask] = idx
        out[mask] = corners[mask, idx]

    # collinear: the point minimizing summed distances is the middle corner
    if degenerate.any():
        idxs = np.nonzero(degenerate)[0]
        for k in idxs:
            d = corners[k, 1] - corners[k, 0]
            n2 = float(np.dot(d, d))
            if n2 <= 0.0:
                at_corner[k] = 0
                out[k] = corners[k, 0]
                continue
            t = (corners[k] - corners[k, 0]) @ d / n2
            mid = int(np.argsort(t)[1])
            at_corner[k] = mid
            out[k] = corners[k, mid]

    interior = np.nonzero((at_corner < 0) & (~degenerate))[0]
    if interior.size == 0:
        return out, at_corner

    p = corners[interior]
    x = out[interior]
    scale = np.sqrt(scale2[interior])

    # short Weiszfeld warmup into the Newton basin; Newton finishes, and any
    # straggler falls back to the slow fixed-point path
    for _ in range(10):
        diff = x[:, None, :] - p
        d = np.maximum(np.linalg.norm(diff, axis=2), 1e-300)
        w = 1.0 / d
        x = np.einsum("mk,mkj->mj", w, p) / w.sum(axis=1)[:, None]

    e1 = p[:, 1] - p[:, 0]
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    e2 = np.cross(nrm, e1)
    p2 = np.stack(
        [np.einsum("mkj,mj->mk", p - p[:, :1], e1),
         np.einsum("mkj,mj->mk", p - p[:, :1], e2)], axis=2
    )
    x2 = np.stack(
        [np.einsum("mj,mj->m", x - p[:, 0], e1),
         np.einsum("mj,mj->m", x - p[:, 0], e2)], axis=1
    )

    def _dist_sum(x2v):
        return np.linalg.norm(x2v[:, None, :] - p2, axis=2).sum(axis=1)

    x2_best = x2.copy()
    f_best = _dist_sum(x2_best)
    step_cap2 = 0.25 * scale2[interior]
    last_step2 = np.zeros(len(x2))
    with np.errstate(all="ignore"):
        for _ in range(12):
            diff = x2[:, None, :] - p2
            d = np.maximum(np.linalg.norm(diff, axis=2), 1e-300)
            u = diff / d[:, :, None]
            g = u.sum(axis=1)
            h11 = np.sum((1.0 - u[:, :, 0] ** 2) / d, axis=1)
            h22 = np.sum((1.0 - u[:, :, 1] ** 2) / d, axis=1)
            h12 = np.sum(-u[:, :, 0] * u[:, :, 1] / d, axis=1)
            det = np.maximum(h11 * h22 - h12 * h12, 1e-300)
            dx = -(h22 * g[:, 0] - h12 * g[:, 1]) / det
            dy = -(-h12 * g[:, 0] + h11 * g[:, 1]) / det
            step2 = dx * dx + dy * dy
            bad = ~np.isfinite(step2) | (step2 > step_cap2)
            dx[bad] = 0.0
            dy[bad] = 0.0
            last_step2 = np.where(bad, np.inf, step2)
            x2[:, 0] += dx
            x2[:, 1] += dy
            f_new = _dist_sum(x2)
            better = np.isfinite(f_new) & (f_new <= f_best)
            x2_best[better] = x2[better]
            f_best[better] = f_new[better]
            if np.all(bad | (step2 <= 1e-30 * scale2[interior])):
                last_step2 = np.where(bad, last_step2, 0.0)
                break

    rough = last_step2 > 1e-24 * scale2[interior]
    if rough.any():
        sub = np.nonzero(rough)[0]
        xr = (p[sub, 0] + x2_best[sub, 0, None] * e1[sub]
              + x2_best[sub, 1, None] * e2[sub])
        for _ in range(100):
            diff = xr[:, None, :] - p[sub]
            d = np.maximum(np.linalg.norm(diff, axis=2), 1e-300)
            w = 1.0 / d
            x_new = np.einsum("mk,mkj->mj", w, p[sub]) / w.sum(axis=1)[:, None]
            move = np.linalg.norm(x_new - xr, axis=1)
            xr = x_new
            if np.all(move <= 1e-13 * scale[sub]):
                break
        x2_best[sub, 0] = np.einsum("mj,mj->m", xr - p[sub, 0], e1[sub])
        x2_best[sub, 1] = np.einsum("mj,mj->m", xr - p[sub, 0], e2[sub])

    out[interior] = (
        p[:, 0] + x2_best[:, 0, None] * e1 + x2_best[:, 1, None] * e2
    )
    return out, at_corner


def fermat_point(a, b, c):
    """Fermat point of a single triangle; returns (point, at_corner)."""
    pts, flags = fermat_points(np.asarray([[a, b, c]], dtype=float))
    return pts[0], int(flags[0])
