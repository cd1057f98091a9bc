"""Pure numpy versions of the compiled kernels (same signatures)."""
import numpy as np


def gauss_linking_circles(c1, u1, v1, r1, c2, u2, v2, r2, m):
    t = 2.0 * np.pi * np.arange(m) / m
    ct, st = np.cos(t)[:, None], np.sin(t)[:, None]
    x1 = c1 + r1 * (ct * u1 + st * v1)
    d1 = r1 * (-st * u1 + ct * v1)
    x2 = c2 + r2 * (ct * u2 + st * v2)
    d2 = r2 * (-st * u2 + ct * v2)
    # (x1 - x2) . (d1 x d2) = (x1 x d1) . d2 - d1 . (d2 x x2), as two m x m products
    num = np.cross(x1, d1) @ d2.T - d1 @ np.cross(d2, x2).T
    dist2 = (x1 * x1).sum(1)[:, None] + (x2 * x2).sum(1)[None, :] - 2.0 * (x1 @ x2.T)
    total = num / (dist2 * np.sqrt(dist2))
    h = 2.0 * np.pi / m
    return float(total.sum() * h * h / (4.0 * np.pi))


def circle_pair_distances(c1, u1, v1, r1, c2, u2, v2, r2, theta, phi):
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    dc = c1 - c2
    a, b, c, d = r1 * u1, r1 * v1, r2 * u2, r2 * v2
    out = np.zeros(len(ct))
    # one coordinate at a time keeps the temporaries one-dimensional
    for i in range(3):
        diff = dc[i] + a[i] * ct + b[i] * st - c[i] * cp - d[i] * sp
        out += diff * diff
    return np.sqrt(out)


def max_core_distance_on_torus(pc, pa, pmajor, c, e1, e2, ax, major, minor, grid):
    t = 2.0 * np.pi * np.arange(grid) / grid
    nrm = np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2
    cp = np.cos(t)[None, :, None]
    sp = np.sin(t)[None, :, None]
    p = c + (major + minor * cp) * nrm[:, None, :] + minor * sp * ax
    w = p - pc
    z = w @ pa
    rad = np.linalg.norm(w - z[..., None] * pa, axis=-1)
    return float(np.sqrt((rad - pmajor) ** 2 + z**2).max())
