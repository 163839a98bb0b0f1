"""Triangular mesh kernel.

Delaunay triangulation by incremental insertion (Bowyer-Watson cavities)
with adaptively exact predicates, point location by walking, barycentric
P1 interpolation, and rasterization of a valued mesh back onto the pixel
grid. Pixel (row i, col j) lives at continuous coordinate (x=j, y=i); the
mesh domain is the tight rectangle of pixel centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgio import GrayImage
from .predicates import incircle, orient2d

__all__ = ["TriMesh", "BarycentricCoords", "delaunay", "build_neighbors", "load_mesh_text"]

_CONTAIN_TOL = 1e-9  # barycentric slack for pixel containment during rasterize


@dataclass
class BarycentricCoords:
    """Containing triangle index plus the three barycentric weights."""

    triangle: int
    weights: np.ndarray  # (3,), sums to 1, aligned with the triangle's vertices


def build_neighbors(triangles: np.ndarray) -> np.ndarray:
    """Neighbor triangle across the edge opposite each local vertex (-1 = hull).

    Entry [t, k] is the triangle sharing edge (tri[t, k+1], tri[t, k+2]).
    """
    tris = np.asarray(triangles, dtype=np.int64)
    nt = tris.shape[0]
    u = tris[:, [1, 2, 0]].reshape(-1)
    v = tris[:, [2, 0, 1]].reshape(-1)
    a = np.minimum(u, v)
    b = np.maximum(u, v)
    order = np.lexsort((b, a))
    nbr = np.full(3 * nt, -1, dtype=np.int64)
    if nt:
        eq = (a[order][1:] == a[order][:-1]) & (b[order][1:] == b[order][:-1])
        i1 = order[:-1][eq]
        i2 = order[1:][eq]
        nbr[i1] = i2 // 3
        nbr[i2] = i1 // 3
    return nbr.reshape(nt, 3)


def _canonical_rows(tris: np.ndarray) -> np.ndarray:
    """Rotate each row so the smallest vertex leads (cyclic order preserved),
    then sort rows lexicographically. Makes triangle numbering reproducible."""
    tris = np.asarray(tris, dtype=np.int64)
    k = np.argmin(tris, axis=1)
    rot = np.stack([np.roll(row, -kk) for row, kk in zip(tris, k)])
    order = np.lexsort((rot[:, 2], rot[:, 1], rot[:, 0]))
    return rot[order]


class TriMesh:
    """Vertices, CCW triangles, optional per-vertex grey values.

    Completed meshes are treated as immutable by queries; the adaptation
    code builds fresh instances instead of mutating shared ones.
    """

    def __init__(self, vertices, triangles, values=None, neighbors=None):
        self.vertices = np.array(vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        self.triangles = np.array(triangles, dtype=np.int64)
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be an (m, 3) array")
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValueError("triangle vertex index out of range")
        if values is None:
            self.values = None
        else:
            self.values = np.array(values, dtype=np.float64)
            if self.values.shape != (len(self.vertices),):
                raise ValueError("values must have one entry per vertex")
        self.neighbors = (
            np.array(neighbors, dtype=np.int64)
            if neighbors is not None
            else build_neighbors(self.triangles)
        )
        self.boundary_flags = self._compute_boundary_flags()
        self._walk_start = 0

    # -- derived structure -------------------------------------------------

    def _compute_boundary_flags(self) -> np.ndarray:
        flags = np.zeros(len(self.vertices), dtype=bool)
        hull = self.neighbors < 0  # (nt, 3) mask; edge opposite k is hull
        if hull.any():
            t_idx, k_idx = np.nonzero(hull)
            flags[self.triangles[t_idx, (k_idx + 1) % 3]] = True
            flags[self.triangles[t_idx, (k_idx + 2) % 3]] = True
        return flags

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted (min, max) index pairs."""
        u = self.triangles[:, [1, 2, 0]].reshape(-1)
        v = self.triangles[:, [2, 0, 1]].reshape(-1)
        pairs = np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1)
        return np.unique(pairs, axis=0)

    def vertex_adjacency(self) -> list[np.ndarray]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for a, b in self.edges():
            adj[a].append(b)
            adj[b].append(a)
        return [np.array(sorted(nb), dtype=np.int64) for nb in adj]

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.vertices,
            self.triangles,
            None if self.values is None else self.values,
            neighbors=self.neighbors,
        )

    # -- validation ---------------------------------------------------------

    def validate(self, width: int | None = None, height: int | None = None) -> None:
        """Check the mesh invariants; raise ValueError on the first violation.

        With width/height given, also checks that the triangle set tiles the
        pixel-center rectangle and that the four corners are vertices.
        """
        tris = self.triangles
        if len(tris) == 0:
            raise ValueError("mesh has no triangles")
        for row in tris:
            if len(set(row.tolist())) != 3:
                raise ValueError(f"degenerate triangle {row.tolist()}")
        areas = self.signed_areas()
        suspect = np.nonzero(areas < 1e-12)[0]
        for t in suspect:
            a, b, c = self.vertices[tris[t]]
            if orient2d(a[0], a[1], b[0], b[1], c[0], c[1]) <= 0:
                raise ValueError(f"triangle {t} has non-positive area")
        u = tris[:, [1, 2, 0]].reshape(-1)
        v = tris[:, [2, 0, 1]].reshape(-1)
        pairs = np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        if counts.max(initial=0) > 2:
            raise ValueError("non-manifold edge (used by more than 2 triangles)")
        if width is not None and height is not None:
            xmax, ymax = float(width - 1), float(height - 1)
            corners = [(0.0, 0.0), (xmax, 0.0), (xmax, ymax), (0.0, ymax)]
            vx = self.vertices[:, 0]
            vy = self.vertices[:, 1]
            for cx, cy in corners:
                if not np.any((vx == cx) & (vy == cy)):
                    raise ValueError(f"corner ({cx}, {cy}) is not a mesh vertex")
            hull_edges = uniq[counts == 1]
            for a, b in hull_edges:
                pa, pb = self.vertices[a], self.vertices[b]
                on_side = (
                    (pa[0] == pb[0] and pa[0] in (0.0, xmax))
                    or (pa[1] == pb[1] and pa[1] in (0.0, ymax))
                )
                if not on_side:
                    raise ValueError(
                        f"hull edge ({a}, {b}) does not lie on the rectangle border"
                    )
            total = float(areas.sum())
            rect = xmax * ymax
            if abs(total - rect) > 1e-8 * rect:
                raise ValueError(f"triangle areas sum to {total}, rectangle is {rect}")

    # -- queries ------------------------------------------------------------

    def _orients(self, t: int, qx: float, qy: float) -> list[int]:
        a, b, c = self.vertices[self.triangles[t]]
        return [
            orient2d(b[0], b[1], c[0], c[1], qx, qy),
            orient2d(c[0], c[1], a[0], a[1], qx, qy),
            orient2d(a[0], a[1], b[0], b[1], qx, qy),
        ]

    def _walk(self, qx: float, qy: float) -> tuple[int, list[int]]:
        t = self._walk_start
        nt = self.n_triangles
        for _ in range(4 * nt + 16):
            o = self._orients(t, qx, qy)
            step = next((k for k in range(3) if o[k] < 0), None)
            if step is None:
                self._walk_start = t
                return t, o
            nb = int(self.neighbors[t, step])
            if nb < 0:
                raise ValueError(f"point ({qx}, {qy}) outside the mesh domain")
            t = nb
        # adapted meshes are not Delaunay, where a visibility walk may cycle;
        # fall back to a deterministic scan
        for t in range(nt):
            o = self._orients(t, qx, qy)
            if all(ok >= 0 for ok in o):
                return t, o
        raise ValueError(f"point ({qx}, {qy}) outside the mesh domain")

    def locate(self, q) -> BarycentricCoords:
        """Containing triangle and barycentric weights for point q.

        Points on shared edges or vertices resolve to the lowest-index
        containing triangle.
        """
        qx, qy = float(q[0]), float(q[1])
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        if not (lo[0] <= qx <= hi[0] and lo[1] <= qy <= hi[1]):
            raise ValueError(f"point ({qx}, {qy}) outside the mesh domain")
        t, o = self._walk(qx, qy)
        if 0 in o:
            # on an edge or vertex: collect every containing triangle reachable
            # across the degenerate edges and keep the lowest index
            seen = {t}
            stack = [(t, o)]
            best = t
            while stack:
                cur, oc = stack.pop()
                best = min(best, cur)
                for k in range(3):
                    if oc[k] == 0:
                        nb = int(self.neighbors[cur, k])
                        if nb >= 0 and nb not in seen:
                            onb = self._orients(nb, qx, qy)
                            if all(v >= 0 for v in onb):
                                seen.add(nb)
                                stack.append((nb, onb))
            t = best
        return BarycentricCoords(t, self._bary_weights(t, qx, qy))

    def _bary_weights(self, t: int, qx: float, qy: float) -> np.ndarray:
        (ax, ay), (bx, by), (cx, cy) = self.vertices[self.triangles[t]]
        det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        l1 = ((by - cy) * (qx - cx) + (cx - bx) * (qy - cy)) / det
        l2 = ((cy - ay) * (qx - cx) + (ax - cx) * (qy - cy)) / det
        l3 = 1.0 - l1 - l2
        return np.array([l1, l2, l3])

    def interpolate(self, q) -> float:
        """P1 interpolation of the vertex values at point q."""
        if self.values is None:
            raise ValueError("mesh has no vertex values")
        bc = self.locate(q)
        return float(bc.weights @ self.values[self.triangles[bc.triangle]])

    def assign_values(self, img: GrayImage) -> "TriMesh":
        """Sample the image bilinearly at every vertex (exact on pixel centers)."""
        x = self.vertices[:, 0]
        y = self.vertices[:, 1]
        w, h = img.width, img.height
        if x.min() < -1e-9 or x.max() > w - 1 + 1e-9 or y.min() < -1e-9 or y.max() > h - 1 + 1e-9:
            raise ValueError("vertex outside the image rectangle")
        xc = np.clip(x, 0.0, w - 1.0)
        yc = np.clip(y, 0.0, h - 1.0)
        ix = np.clip(np.floor(xc).astype(np.int64), 0, w - 2)
        iy = np.clip(np.floor(yc).astype(np.int64), 0, h - 2)
        fx = xc - ix
        fy = yc - iy
        p = img.pixels
        self.values = (
            (1 - fx) * (1 - fy) * p[iy, ix]
            + fx * (1 - fy) * p[iy, ix + 1]
            + (1 - fx) * fy * p[iy + 1, ix]
            + fx * fy * p[iy + 1, ix + 1]
        )
        return self

    def rasterize(self, width: int, height: int, precision_bits: int = 8) -> GrayImage:
        """Evaluate the P1 field at every integer pixel center.

        Pixels on shared edges take the lowest-index containing triangle,
        matching locate. Raises if some pixel center is not covered.
        """
        if self.values is None:
            raise ValueError("mesh has no vertex values")
        out = np.zeros((height, width))
        claimed = np.zeros((height, width), dtype=bool)
        verts = self.vertices
        vals = self.values
        for t in range(self.n_triangles):
            i0, i1, i2 = self.triangles[t]
            (ax, ay), (bx, by), (cx, cy) = verts[i0], verts[i1], verts[i2]
            x0 = max(0, int(np.ceil(min(ax, bx, cx) - _CONTAIN_TOL)))
            x1 = min(width - 1, int(np.floor(max(ax, bx, cx) + _CONTAIN_TOL)))
            y0 = max(0, int(np.ceil(min(ay, by, cy) - _CONTAIN_TOL)))
            y1 = min(height - 1, int(np.floor(max(ay, by, cy) + _CONTAIN_TOL)))
            if x0 > x1 or y0 > y1:
                continue
            region = claimed[y0 : y1 + 1, x0 : x1 + 1]
            if region.all():
                continue
            xs = np.arange(x0, x1 + 1, dtype=np.float64)
            ys = np.arange(y0, y1 + 1, dtype=np.float64)[:, None]
            det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            l1 = ((by - cy) * (xs - cx) + (cx - bx) * (ys - cy)) / det
            l2 = ((cy - ay) * (xs - cx) + (ax - cx) * (ys - cy)) / det
            l3 = 1.0 - l1 - l2
            inside = (
                (l1 >= -_CONTAIN_TOL)
                & (l2 >= -_CONTAIN_TOL)
                & (l3 >= -_CONTAIN_TOL)
                & ~region
            )
            if not inside.any():
                continue
            patch = l1 * vals[i0] + l2 * vals[i1] + l3 * vals[i2]
            out[y0 : y1 + 1, x0 : x1 + 1][inside] = patch[inside]
            region |= inside
        if not claimed.all():
            ys, xs = np.nonzero(~claimed)
            raise ValueError(
                f"mesh does not cover pixel center ({xs[0]}, {ys[0]})"
            )
        peak = float(2**precision_bits - 1)
        return GrayImage(np.clip(out, 0.0, peak), precision_bits)

    # -- text export ---------------------------------------------------------

    def export_text(self, path) -> None:
        """Plain-text dump: 'OFF-like: nv nt', nv 'x y value' lines, nt 'i j k' lines."""
        vals = self.values if self.values is not None else np.zeros(self.n_vertices)
        lines = [f"OFF-like: {self.n_vertices} {self.n_triangles}"]
        for (x, y), v in zip(self.vertices, vals):
            lines.append(f"{x!r} {y!r} {v!r}")
        for i, j, k in self.triangles:
            lines.append(f"{i} {j} {k}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")


def load_mesh_text(path) -> TriMesh:
    """Read a mesh written by TriMesh.export_text."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split("\n")
    header = tokens[0].split()
    if len(header) != 3 or header[0] != "OFF-like:":
        raise ValueError(f"bad mesh header {tokens[0]!r}")
    nv, nt = int(header[1]), int(header[2])
    verts = np.zeros((nv, 2))
    vals = np.zeros(nv)
    for i in range(nv):
        x, y, v = tokens[1 + i].split()
        verts[i] = (float(x), float(y))
        vals[i] = float(v)
    tris = np.zeros((nt, 3), dtype=np.int64)
    for j in range(nt):
        tris[j] = [int(s) for s in tokens[1 + nv + j].split()]
    return TriMesh(verts, tris, vals)


# -- Delaunay construction ----------------------------------------------------


def _find_corner(pts: np.ndarray, cx: float, cy: float) -> int:
    hit = np.nonzero((pts[:, 0] == cx) & (pts[:, 1] == cy))[0]
    if len(hit) == 0:
        raise ValueError(
            f"point set must include its bounding-box corner ({cx}, {cy})"
        )
    return int(hit[0])


class _Builder:
    """Incremental Bowyer-Watson state: triangle and neighbor rows as lists,
    dead rows marked None and compacted at the end."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        self.tris: list[list[int] | None] = []
        self.nbrs: list[list[int]] = []
        self.last = 0

    def _orient_edge(self, u: int, v: int, p: int) -> int:
        a, b, c = self.pts[u], self.pts[v], self.pts[p]
        return orient2d(a[0], a[1], b[0], b[1], c[0], c[1])

    def _locate(self, ip: int) -> int:
        qx, qy = self.pts[ip]
        t = self.last
        for _ in range(4 * len(self.tris) + 16):
            tri = self.tris[t]
            moved = False
            for k in range(3):
                u, v = tri[(k + 1) % 3], tri[(k + 2) % 3]
                a, b = self.pts[u], self.pts[v]
                if orient2d(a[0], a[1], b[0], b[1], qx, qy) < 0:
                    nb = self.nbrs[t][k]
                    if nb < 0:
                        raise ValueError(f"point ({qx}, {qy}) outside the corner rectangle")
                    t = nb
                    moved = True
                    break
            if not moved:
                return t
        raise RuntimeError("point location walk failed to terminate")

    def _in_circumdisk(self, t: int, ip: int) -> bool:
        a, b, c = (self.pts[i] for i in self.tris[t])
        d = self.pts[ip]
        return incircle(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]) > 0

    def insert(self, ip: int) -> None:
        t0 = self._locate(ip)
        cavity = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for k in range(3):
                nb = self.nbrs[t][k]
                if nb >= 0 and nb not in cavity and self._in_circumdisk(nb, ip):
                    cavity.add(nb)
                    stack.append(nb)
        boundary: list[tuple[int, int, int]] = []
        for t in cavity:
            tri = self.tris[t]
            for k in range(3):
                nb = self.nbrs[t][k]
                if nb in cavity:
                    continue
                boundary.append((tri[(k + 1) % 3], tri[(k + 2) % 3], nb))

        new_ids: list[int] = []
        kept: list[tuple[int, int, int]] = []
        for u, v, nb in boundary:
            s = self._orient_edge(u, v, ip)
            if s > 0:
                kept.append((u, v, nb))
            elif s == 0 and nb < 0:
                continue  # inserting on a hull edge: the edge splits, no sliver
            else:
                raise RuntimeError("cavity boundary not star-shaped")
        by_first: dict[int, int] = {}
        by_second: dict[int, int] = {}
        for u, v, nb in kept:
            tid = len(self.tris)
            self.tris.append([u, v, ip])
            self.nbrs.append([-1, -1, nb])
            new_ids.append(tid)
            by_first[u] = tid
            by_second[v] = tid
            if nb >= 0:
                nbt = self.tris[nb]
                for k in range(3):
                    e = {nbt[(k + 1) % 3], nbt[(k + 2) % 3]}
                    if e == {u, v}:
                        self.nbrs[nb][k] = tid
                        break
        for tid in new_ids:
            u, v, _ = self.tris[tid]
            # local 0 is u: opposite edge (v, ip); local 1 is v: opposite (ip, u)
            self.nbrs[tid][0] = by_first.get(v, -1)
            self.nbrs[tid][1] = by_second.get(u, -1)
        for t in cavity:
            self.tris[t] = None
        self.last = new_ids[0]

    def compact(self) -> np.ndarray:
        return np.array([t for t in self.tris if t is not None], dtype=np.int64)


def _canonicalize_cocircular(pts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Resolve exactly-cocircular quads to the diagonal with the lowest
    (min, max) vertex-index pair. Leaves the Delaunay property intact because
    both diagonals of a concyclic quad share the same circumcircle."""
    for _ in range(64):
        nbrs = build_neighbors(tris)
        touched = np.zeros(len(tris), dtype=bool)
        flips = 0
        edge_list = []
        for t in range(len(tris)):
            for k in range(3):
                nb = nbrs[t, k]
                if nb > t:
                    edge_list.append((t, k, int(nb)))
        edge_list.sort(
            key=lambda e: (
                min(tris[e[0], (e[1] + 1) % 3], tris[e[0], (e[1] + 2) % 3]),
                max(tris[e[0], (e[1] + 1) % 3], tris[e[0], (e[1] + 2) % 3]),
            )
        )
        for t, k, nb in edge_list:
            if touched[t] or touched[nb]:
                continue
            a = int(tris[t, (k + 1) % 3])
            b = int(tris[t, (k + 2) % 3])
            c = int(tris[t, k])
            d = -1
            for kk in range(3):
                if tris[nb, kk] not in (a, b):
                    d = int(tris[nb, kk])
                    break
            pa, pb, pc, pd = pts[a], pts[b], pts[c], pts[d]
            if incircle(pa[0], pa[1], pb[0], pb[1], pc[0], pc[1], pd[0], pd[1]) != 0:
                continue
            if (min(c, d), max(c, d)) < (min(a, b), max(a, b)):
                tris[t] = [c, a, d]
                tris[nb] = [c, d, b]
                touched[t] = touched[nb] = True
                flips += 1
        if flips == 0:
            break
    return tris


def delaunay(points) -> TriMesh:
    """Delaunay triangulation of a point set that includes its bounding-box
    corners. Every triangle's open circumdisk contains no input point; values
    are left unset.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    n = len(pts)
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")

    from scipy.spatial import cKDTree

    pairs = cKDTree(pts).query_pairs(1e-9)
    if pairs:
        i, j = sorted(next(iter(pairs)))
        raise ValueError(f"duplicate points {i} and {j} (closer than 1e-9)")

    p0, p1 = pts[0], pts[1]
    if all(
        orient2d(p0[0], p0[1], p1[0], p1[1], q[0], q[1]) == 0 for q in pts[2:]
    ):
        raise ValueError("all points are collinear")

    minx, miny = pts.min(axis=0)
    maxx, maxy = pts.max(axis=0)
    c00 = _find_corner(pts, minx, miny)
    c10 = _find_corner(pts, maxx, miny)
    c11 = _find_corner(pts, maxx, maxy)
    c01 = _find_corner(pts, minx, maxy)

    builder = _Builder(pts)
    builder.tris = [[c00, c10, c11], [c00, c11, c01]]
    builder.nbrs = [[-1, 1, -1], [-1, -1, 0]]
    corner_set = {c00, c10, c11, c01}
    for ip in range(n):
        if ip in corner_set:
            continue
        builder.insert(ip)

    tris = _canonicalize_cocircular(pts, builder.compact())
    return TriMesh(pts, _canonical_rows(tris))
