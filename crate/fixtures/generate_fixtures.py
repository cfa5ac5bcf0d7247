"""Regenerates the Voronoi mesh fixtures (requires numpy and scipy).

voronoi_1000.mesh  : 1000 bounded Voronoi cells filling (-0.5, 0.5)^3
polygons_109.mesh  : 109 Voronoi polygons of (-2, 2)^2 extruded to z in (-0.05, 0.05)
"""
from fractions import Fraction

import numpy as np
from scipy.spatial import Voronoi

SNAP = 1e-12


def mirrored(points, lo, hi):
    out = [points]
    for d in range(points.shape[1]):
        for b in (lo[d], hi[d]):
            m = points.copy()
            m[:, d] = 2 * b - m[:, d]
            out.append(m)
    return np.vstack(out)


def snap(v, lo, hi):
    v = v.copy()
    for d in range(len(lo)):
        v[np.abs(v[:, d] - lo[d]) < SNAP, d] = lo[d]
        v[np.abs(v[:, d] - hi[d]) < SNAP, d] = hi[d]
    return v


def exact_vertices(vor):
    """Voronoi vertices recomputed in rational arithmetic from their generators."""
    gens = [set() for _ in vor.vertices]
    for (p, q), rv in zip(vor.ridge_points, vor.ridge_vertices):
        for v in rv:
            if v >= 0:
                gens[v].update((p, q))
    dim = vor.points.shape[1]
    out = vor.vertices.copy()
    for v, g in enumerate(gens):
        g = sorted(g)
        pts = [[Fraction(float(c)) for c in vor.points[i]] for i in g]
        base = pts[0]
        # |x - p_i|^2 = |x - p_0|^2  ->  2 (p_i - p_0).x = |p_i|^2 - |p_0|^2
        rows, rhs = [], []
        for p in pts[1:]:
            rows.append([2 * (p[d] - base[d]) for d in range(dim)])
            rhs.append(sum(c * c for c in p) - sum(c * c for c in base))
        x = solve_rational(rows, rhs, dim)
        out[v] = [float(c) for c in x]
    return out


def solve_rational(rows, rhs, dim):
    # least-squares normal equations are exact when the system is consistent
    a = [[sum(r[i] * r[j] for r in rows) for j in range(dim)] for i in range(dim)]
    b = [sum(r[i] * y for r, y in zip(rows, rhs)) for i in range(dim)]
    for c in range(dim):
        piv = next(k for k in range(c, dim) if a[k][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        b[c], b[piv] = b[piv], b[c]
        for k in range(dim):
            if k != c and a[k][c] != 0:
                f = a[k][c] / a[c][c]
                a[k] = [x - f * y for x, y in zip(a[k], a[c])]
                b[k] -= f * b[c]
    return [b[i] / a[i][i] for i in range(dim)]


def lloyd(points, lo, hi, iters):
    for _ in range(iters):
        vor = Voronoi(mirrored(points, lo, hi))
        new = points.copy()
        for i in range(len(points)):
            reg = vor.regions[vor.point_region[i]]
            new[i] = vor.vertices[reg].mean(axis=0)
        points = new
    return points


def write_mesh(path, verts, faces, cells):
    with open(path, "w") as f:
        f.write("polymesh 1\n")
        f.write(f"vertices {len(verts)}\n")
        for v in verts:
            f.write(" ".join(repr(float(c)) for c in v) + "\n")
        f.write(f"faces {len(faces)}\n")
        for cyc in faces:
            f.write(f"{len(cyc)} " + " ".join(map(str, cyc)) + "\n")
        f.write(f"cells {len(cells)}\n")
        for refs in cells:
            f.write(f"{len(refs)} " + " ".join(map(str, refs)) + "\n")


class Renumber:
    def __init__(self, coords):
        self.coords = coords
        self.map = {}
        self.out = []

    def __call__(self, i):
        if i not in self.map:
            self.map[i] = len(self.out)
            self.out.append(self.coords[i])
        return self.map[i]


def voronoi_3d(n_side, seed):
    lo, hi = np.full(3, -0.5), np.full(3, 0.5)
    rng = np.random.default_rng(seed)
    h = 1.0 / n_side
    g = (np.arange(n_side) + 0.5) * h - 0.5
    pts = np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T
    pts += rng.uniform(-0.3 * h, 0.3 * h, pts.shape)
    pts = lloyd(pts, lo, hi, 2)
    n = len(pts)
    vor = Voronoi(mirrored(pts, lo, hi))
    coords = snap(exact_vertices(vor), lo, hi)
    ren = Renumber(coords)
    faces, cells = [], [[] for _ in range(n)]
    for (p, q), rv in zip(vor.ridge_points, vor.ridge_vertices):
        if p >= n and q >= n:
            continue
        if -1 in rv:
            raise RuntimeError("unbounded ridge inside the box")
        owner, other = (p, q) if (q >= n or (p < n and p < q)) else (q, p)
        normal = vor.points[other] - vor.points[owner]
        normal /= np.linalg.norm(normal)
        c = coords[rv].mean(axis=0)
        u = coords[rv[0]] - c
        u -= normal * normal.dot(u)
        u /= np.linalg.norm(u)
        w = np.cross(normal, u)
        ang = [np.arctan2((coords[v] - c).dot(w), (coords[v] - c).dot(u)) for v in rv]
        cyc = [rv[k] for k in np.argsort(ang)]
        fid = len(faces)
        faces.append([ren(v) for v in cyc])
        cells[owner].append(fid)
        if other < n:
            cells[other].append(-fid - 1)
    return ren.out, faces, cells


def polygons_2d(count, seed):
    lo, hi = np.array([-2.0, -2.0]), np.array([2.0, 2.0])
    rng = np.random.default_rng(seed)
    pts = lloyd(rng.uniform(lo, hi, (count, 2)), lo, hi, 4)
    n = len(pts)
    vor = Voronoi(mirrored(pts, lo, hi))
    coords2 = snap(exact_vertices(vor), lo, hi)
    z0, z1 = -0.05, 0.05
    used = sorted({v for i in range(n) for v in vor.regions[vor.point_region[i]]})
    idx = {v: k for k, v in enumerate(used)}
    verts = [np.array([*coords2[v], z0]) for v in used] + [np.array([*coords2[v], z1]) for v in used]
    m = len(used)
    faces, cells = [], [[] for _ in range(n)]
    for i in range(n):
        reg = vor.regions[vor.point_region[i]]
        ctr = coords2[reg].mean(axis=0)
        ang = [np.arctan2(*(coords2[v] - ctr)[::-1]) for v in reg]
        ccw = [idx[reg[k]] for k in np.argsort(ang)]
        faces.append(ccw[::-1])
        cells[i].append(len(faces) - 1)
        faces.append([v + m for v in ccw])
        cells[i].append(len(faces) - 1)
    for (p, q), rv in zip(vor.ridge_points, vor.ridge_vertices):
        if p >= n and q >= n:
            continue
        owner, other = (p, q) if (q >= n or (p < n and p < q)) else (q, p)
        a, b = idx[rv[0]], idx[rv[1]]
        d = coords2[rv[1]] - coords2[rv[0]]
        out = vor.points[other] - vor.points[owner]
        if d[0] * out[1] - d[1] * out[0] > 0:
            a, b = b, a
        faces.append([a, b, b + m, a + m])
        fid = len(faces) - 1
        cells[owner].append(fid)
        if other < n:
            cells[other].append(-fid - 1)
    return verts, faces, cells


if __name__ == "__main__":
    import os

    here = os.path.dirname(os.path.abspath(__file__))
    write_mesh(os.path.join(here, "voronoi_1000.mesh"), *voronoi_3d(10, 20240607))
    write_mesh(os.path.join(here, "polygons_109.mesh"), *polygons_2d(109, 20240607))
