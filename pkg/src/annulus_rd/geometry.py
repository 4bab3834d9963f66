"""Annulus geometry, polar spectral grids and unstructured triangulation.

The annulus a < r < b is the stage for everything else in this package.
Two discretisations live here:

* a tensor grid of Chebyshev-Gauss-Lobatto radii times a uniform periodic
  angular grid, used by the spectral verification of the closed-form
  eigenpairs, and
* an unstructured Delaunay triangulation produced by a signed-distance
  force-equilibrium relaxation (the classic distmesh iteration of Persson
  and Strang), used by the finite element solver.

The mesher is fully deterministic: the initial point set is a fixed
hexagonal lattice, the relaxation has no random component, and boundary
nodes are projected exactly onto the two circles, so identical inputs give
bitwise-identical meshes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay


# Calibrated target edge lengths for the reference annulus (a, b) = (1/2, 1).
# PAPER_FIDELITY_H reproduces the reference discretisation of 6340 triangles
# on 3333 vertices to within half a percent; DESK_SCALE_H gives a coarser
# mesh of about 1600 triangles for quick runs.
PAPER_FIDELITY_H = 0.0286
DESK_SCALE_H = 0.0554


class GeometryError(ValueError):
    """Invalid geometric input (radii, grid sizes, target edge length)."""


class MeshConvergenceError(RuntimeError):
    """Relaxation failed to settle; carries statistics of the last iterate."""

    def __init__(self, message, stats):
        super().__init__(f"{message} ({stats})")
        self.stats = stats


@dataclass(frozen=True)
class AnnulusGeometry:
    """The annular region a < sqrt(x^2 + y^2) < b."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0):
            raise GeometryError(f"inner radius must be positive, got a={self.a}")
        if not (self.b > self.a):
            raise GeometryError(f"outer radius must exceed inner, got a={self.a}, b={self.b}")

    @property
    def rho(self) -> float:
        """Thickness b - a."""
        return self.b - self.a

    @property
    def area(self) -> float:
        return np.pi * (self.b**2 - self.a**2)


def make_annulus(a: float, b: float) -> AnnulusGeometry:
    """Validate radii and build the annulus record."""
    return AnnulusGeometry(float(a), float(b))


@dataclass(frozen=True)
class PolarSpectralGrid:
    """Chebyshev (radial) x uniform Fourier (angular) tensor grid.

    radial_nodes are the N Chebyshev-Gauss-Lobatto points mapped to [a, b],
    sorted ascending with both endpoints included. angular_nodes are
    theta_j = 2 pi j / M for j = 0..M-1, M even.
    """

    a: float
    b: float
    radial_nodes: np.ndarray
    angular_nodes: np.ndarray
    N: int
    M: int


def build_polar_grid(geom: AnnulusGeometry, N: int, M: int) -> PolarSpectralGrid:
    """Build the N x M polar tensor grid on the annulus.

    N is the radial node count (N >= 4); M is the even angular node count
    (M >= 4). The radial rule is cos(pi j/(N-1)) affinely mapped to [a, b].
    """
    N = int(N)
    M = int(M)
    if N < 4:
        raise GeometryError(f"radial node count must be at least 4, got {N}")
    if M < 4 or M % 2 != 0:
        raise GeometryError(f"angular node count must be even and at least 4, got {M}")
    j = np.arange(N)
    x = np.cos(np.pi * j / (N - 1))  # 1 .. -1
    r = geom.a + (geom.b - geom.a) * (1.0 - x) / 2.0  # ascending, endpoints exact
    theta = 2.0 * np.pi * np.arange(M) / M
    r.setflags(write=False)
    theta.setflags(write=False)
    return PolarSpectralGrid(geom.a, geom.b, r, theta, N, M)


# ---------------------------------------------------------------------------
# unstructured triangulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TriMesh:
    """Triangulation of the annulus.

    vertices: (n, 2) float array. triangles: (m, 3) int array, positively
    oriented. boundary_flags: per-vertex int8, 0 interior / 1 inner circle /
    2 outer circle.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_flags: np.ndarray
    a: float
    b: float
    h: float


def _signed_distance(p: np.ndarray, a: float, b: float) -> np.ndarray:
    r = np.hypot(p[:, 0], p[:, 1])
    return np.maximum(r - b, a - r)


def _hex_lattice(b: float, h: float) -> np.ndarray:
    """Deterministic hexagonal seed lattice covering the bounding box."""
    dy = h * np.sqrt(3.0) / 2.0
    xs = np.arange(-b - h, b + h + 0.5 * h, h)
    ys = np.arange(-b - h, b + h + 0.5 * dy, dy)
    X, Y = np.meshgrid(xs, ys)
    X[1::2, :] += h / 2.0  # shift every other row
    return np.column_stack([X.ravel(), Y.ravel()])


def _project_to_annulus(p: np.ndarray, a: float, b: float) -> np.ndarray:
    """Pull outside points radially back onto the nearest circle (exact)."""
    r = np.hypot(p[:, 0], p[:, 1])
    out_b = r > b
    out_a = r < a
    scale = np.ones_like(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale[out_b] = b / r[out_b]
        scale[out_a] = a / np.maximum(r[out_a], 1e-300)
    return p * scale[:, None]


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Signed areas (positive for counter-clockwise triangles)."""
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangle_quality(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Radius ratio quality 2 r_in / r_circ; 1 for equilateral triangles."""
    p = vertices[triangles]
    e1 = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    e2 = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    e3 = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    return ((e2 + e3 - e1) * (e3 + e1 - e2) * (e1 + e2 - e3)) / (e1 * e2 * e3)


def mesh_edges(triangles: np.ndarray) -> np.ndarray:
    """Unique undirected edges of a triangle list, as sorted index pairs."""
    e = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def triangulate_annulus(geom: AnnulusGeometry, h: float, *, max_iter: int = 2000,
                        fscale: float = 1.2, step: float = 0.2,
                        dptol: float = 1e-3, ttol: float = 0.1) -> TriMesh:
    """Force-equilibrium triangulation with target edge length h.

    Starting from a fixed hexagonal lattice clipped to the annulus, bars of
    the Delaunay triangulation push their endpoints apart when shorter than
    the scaled target length; points leaving the annulus are projected back
    along the signed-distance gradient (radially, which is exact for two
    concentric circles). The mesh is re-triangulated whenever any point has
    drifted more than ttol*h since the last triangulation, and the
    iteration terminates when no interior point moves more than dptol*h in
    one step. A cap of max_iter iterations guards against stagnation; on
    failure the last iterate's statistics are attached to the error.
    """
    a, b = geom.a, geom.b
    h = float(h)
    if not (0.0 < h < geom.rho):
        raise GeometryError(f"target edge length must lie in (0, rho), got h={h}")
    geps = 1e-3 * h

    p = _hex_lattice(b, h)
    p = p[_signed_distance(p, a, b) < geps]

    pold = np.full_like(p, np.inf)
    tri = bars = None
    maxdp = np.inf
    for iteration in range(max_iter):
        if np.max(np.hypot(*(p - pold).T)) > ttol * h:
            pold = p.copy()
            tri = Delaunay(p).simplices
            centroids = p[tri].mean(axis=1)
            tri = tri[_signed_distance(centroids, a, b) < -geps]
            bars = mesh_edges(tri)

        vec = p[bars[:, 0]] - p[bars[:, 1]]
        L = np.hypot(vec[:, 0], vec[:, 1])
        L0 = fscale * np.sqrt(np.sum(L**2) / len(L))
        force = np.maximum(L0 - L, 0.0)
        fvec = vec * (force / L)[:, None]
        total = np.zeros_like(p)
        np.add.at(total, bars[:, 0], fvec)
        np.add.at(total, bars[:, 1], -fvec)

        p = p + step * total
        p = _project_to_annulus(p, a, b)

        interior = _signed_distance(p, a, b) < -geps
        move = step * np.hypot(total[:, 0], total[:, 1])
        maxdp = move[interior].max() if interior.any() else 0.0
        if maxdp < dptol * h:
            break
    else:
        stats = {"iterations": max_iter, "max_displacement_over_h": float(maxdp / h),
                 "vertices": int(len(p))}
        raise MeshConvergenceError("mesh relaxation did not settle", stats)

    # final clean-up: snap boundary nodes exactly onto the circles,
    # re-triangulate once, drop exterior triangles, orient positively
    r = np.hypot(p[:, 0], p[:, 1])
    snap_in = np.abs(r - a) < 10 * geps
    snap_out = np.abs(r - b) < 10 * geps
    p[snap_in] *= (a / r[snap_in])[:, None]
    p[snap_out] *= (b / r[snap_out])[:, None]

    tri = Delaunay(p).simplices
    centroids = p[tri].mean(axis=1)
    tri = tri[_signed_distance(centroids, a, b) < -geps]

    used = np.unique(tri)
    remap = -np.ones(len(p), dtype=np.int64)
    remap[used] = np.arange(len(used))
    p = p[used]
    tri = remap[tri]

    areas = triangle_areas(p, tri)
    flip = areas < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]

    r = np.hypot(p[:, 0], p[:, 1])
    flags = np.zeros(len(p), dtype=np.int8)
    flags[np.abs(r - a) < 1e-9] = 1
    flags[np.abs(r - b) < 1e-9] = 2

    mesh = TriMesh(p, tri, flags, a, b, h)
    q = triangle_quality(p, tri)
    if q.min() < 0.3:
        stats = {"iterations": iteration + 1, "min_quality": float(q.min()),
                 "vertices": int(len(p)), "triangles": int(len(tri))}
        raise MeshConvergenceError("mesh quality below 0.3", stats)
    return mesh


def export_mesh(mesh: TriMesh, node_path, ele_path) -> None:
    """Write the plain-text node and element files.

    Node file: one `x y flag` line per vertex. Element file: one `i j k`
    line per triangle, 0-based indices. Both start with a header comment
    recording geometry and target edge length.
    """
    from ._util import fmt, write_text

    head = (f"# annulus mesh: a={fmt(mesh.a)} b={fmt(mesh.b)} h={fmt(mesh.h)} "
            f"vertices={len(mesh.vertices)} triangles={len(mesh.triangles)}\n")
    lines = [head]
    for (x, y), f in zip(mesh.vertices, mesh.boundary_flags):
        lines.append(f"{fmt(x)} {fmt(y)} {int(f)}\n")
    write_text(node_path, "".join(lines))
    lines = [head]
    for i, j, k in mesh.triangles:
        lines.append(f"{int(i)} {int(j)} {int(k)}\n")
    write_text(ele_path, "".join(lines))


def read_mesh(node_path, ele_path) -> TriMesh:
    """Read mesh files written by export_mesh.

    Header comments are optional; without one the radii are inferred from
    the vertex coordinates and h is reported as 0.
    """
    with open(node_path, encoding="utf-8") as f:
        node_lines = f.readlines()
    with open(ele_path, encoding="utf-8") as f:
        ele_lines = f.readlines()

    fields = {}
    for ln in node_lines:
        if ln.startswith("#"):
            for token in ln.lstrip("# ").split():
                if "=" in token:
                    key, _, val = token.partition("=")
                    fields[key] = val

    rows = [ln.split() for ln in node_lines if ln.strip() and not ln.startswith("#")]
    verts = np.array([[float(r[0]), float(r[1])] for r in rows])
    flags = np.array([int(r[2]) for r in rows], dtype=np.int8)
    tris = np.array([[int(v) for v in ln.split()] for ln in ele_lines
                     if ln.strip() and not ln.startswith("#")], dtype=np.int64)

    radii = np.hypot(verts[:, 0], verts[:, 1])
    a = float(fields.get("a", radii.min()))
    b = float(fields.get("b", radii.max()))
    return TriMesh(verts, tris, flags, a, b, float(fields.get("h", 0.0)))
