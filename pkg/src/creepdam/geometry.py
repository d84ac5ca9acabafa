"""Triangular meshes of planar domains, mesh file I/O and distance queries."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MeshFormatError

MAX_MESH_NODES = 50_000_000


def signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0 = nodes[triangles[:, 0]]
    p1 = nodes[triangles[:, 1]]
    p2 = nodes[triangles[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


def topological_boundary(triangles: np.ndarray) -> np.ndarray:
    """Nodes lying on an edge that belongs to fewer than two triangles."""
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return np.unique(uniq[counts < 2].ravel())


@dataclass(frozen=True, eq=False)
class Mesh:
    """Linear triangle mesh with counterclockwise connectivity.

    Construct through :meth:`from_arrays`, which validates the invariants and
    derives the boundary node set and element areas.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    element_areas: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, nodes, triangles, boundary_nodes=None) -> "Mesh":
        nodes = np.array(nodes, dtype=float, copy=True).reshape(-1, 2)
        triangles = np.array(triangles, dtype=np.int64, copy=True).reshape(-1, 3)
        if len(nodes) == 0 or len(triangles) == 0:
            raise MeshFormatError("mesh needs at least one node and one triangle")
        if not np.all(np.isfinite(nodes)):
            raise MeshFormatError("node coordinates must be finite")
        if triangles.min() < 0 or triangles.max() >= len(nodes):
            bad = int(np.nonzero((triangles < 0).any(1) | (triangles >= len(nodes)).any(1))[0][0])
            raise MeshFormatError(f"element {bad} references a node index out of range")
        used = np.bincount(triangles.ravel(), minlength=len(nodes))
        if np.any(used == 0):
            raise MeshFormatError(f"node {int(np.argmin(used))} belongs to no triangle")
        areas = signed_areas(nodes, triangles)
        if np.any(areas <= 0.0):
            bad = int(np.nonzero(areas <= 0.0)[0][0])
            raise MeshFormatError(
                f"element {bad} has non-positive signed area {areas[bad]:g}")
        boundary = topological_boundary(triangles)
        if boundary_nodes is not None:
            given = np.unique(np.asarray(boundary_nodes, dtype=np.int64))
            if given.shape != boundary.shape or np.any(given != boundary):
                raise MeshFormatError("boundary node set does not match the mesh topology")
        for arr in (nodes, triangles, boundary, areas):
            arr.setflags(write=False)
        return cls(nodes, triangles, boundary, areas)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def area(self) -> float:
        return float(self.element_areas.sum())

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.nonzero(mask)[0]

    def element_centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def scaled(self, factor: float, shift=(0.0, 0.0)) -> "Mesh":
        """Copy with coordinates mapped ``x -> factor * x + shift``."""
        if factor <= 0:
            raise GeometryError("scale factor must be positive")
        return Mesh.from_arrays(self.nodes * factor + np.asarray(shift, float), self.triangles)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.boundary_nodes, other.boundary_nodes))

    __hash__ = None


def _grid_triangles(nx: int, ny: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n00 = (j * (nx + 1) + i).ravel()
    n10 = n00 + 1
    n01 = n00 + nx + 1
    n11 = n01 + 1
    lower = np.stack([n00, n10, n11], axis=1)
    upper = np.stack([n00, n11, n01], axis=1)
    return np.stack([lower, upper], axis=1).reshape(-1, 3)


def _check_grid(nx, ny):
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise GeometryError(f"grid divisions must be positive integers, got {nx}, {ny}")
    if (nx + 1) * (ny + 1) > MAX_MESH_NODES:
        raise GeometryError("requested mesh is too large")


def structured_rect_mesh(width: float, height: float, nx: int, ny: int) -> Mesh:
    """Rectangle ``[0, width] x [0, height]`` split into ``2*nx*ny`` right triangles."""
    _check_grid(nx, ny)
    if width <= 0 or height <= 0:
        raise GeometryError("rectangle sides must be positive")
    x = np.linspace(0.0, width, nx + 1)
    y = np.linspace(0.0, height, ny + 1)
    xx, yy = np.meshgrid(x, y, indexing="xy")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    return Mesh.from_arrays(nodes, _grid_triangles(nx, ny))


def notched_rect_mesh(width: float, height: float, notch_depth: float,
                      notch_tip_angle: float, nx: int, ny: int) -> Mesh:
    """Rectangle with a V-notch cut into the bottom edge at ``x = width/2``.

    ``notch_tip_angle`` is the full opening angle in degrees. The structured
    grid is mapped column by column so that the bottom edge follows the
    notch, which keeps the topology of :func:`structured_rect_mesh`. The tip
    is a mesh node when ``nx`` is even.
    """
    _check_grid(nx, ny)
    if width <= 0 or height <= 0:
        raise GeometryError("rectangle sides must be positive")
    if not 0.0 <= notch_depth < height:
        raise GeometryError("notch depth must lie in [0, height)")
    if not 0.0 < notch_tip_angle < 180.0:
        raise GeometryError("notch tip angle must lie in (0, 180) degrees")
    half_opening = notch_depth * math.tan(math.radians(notch_tip_angle) / 2.0)
    if notch_depth > 0 and half_opening >= width / 2:
        raise GeometryError("notch is wider than the specimen")
    x = np.linspace(0.0, width, nx + 1)
    if notch_depth > 0:
        bottom = notch_depth * np.clip(1.0 - np.abs(x - width / 2) / half_opening, 0.0, None)
    else:
        bottom = np.zeros_like(x)
    t = np.linspace(0.0, 1.0, ny + 1)
    yy = bottom[None, :] + t[:, None] * (height - bottom[None, :])
    xx = np.broadcast_to(x[None, :], yy.shape)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    return Mesh.from_arrays(nodes, _grid_triangles(nx, ny))


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise GeometryError("a polyline needs at least two points")
        if np.any(np.all(np.diff(pts, axis=0) == 0.0, axis=1)):
            raise GeometryError("consecutive polyline points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def dist_to_polyline(x, line: Polyline):
    """Euclidean distance from point(s) ``x`` to the polyline."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    best = np.full(len(pts), np.inf)
    for a, b in zip(line.points[:-1], line.points[1:]):
        ab = b - a
        s = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        foot = a + s[:, None] * ab
        best = np.minimum(best, np.hypot(*(pts - foot).T))
    return float(best[0]) if single else best


# mesh text format

def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"nodes {mesh.n_nodes}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines.append(f"elements {mesh.n_elements}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines.append(f"boundary {len(mesh.boundary_nodes)}")
    lines += [str(i) for i in mesh.boundary_nodes.tolist()]
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _records(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield lineno, body.split()


def read_mesh(path) -> Mesh:
    with open(os.fspath(path), encoding="utf-8") as fh:
        text = fh.read()
    records = list(_records(text))
    if not records:
        raise MeshFormatError(f"{path}: empty mesh file")
    pos = 0

    def header(name):
        nonlocal pos
        if pos >= len(records):
            raise MeshFormatError(f"{path}: missing '{name}' section")
        lineno, tok = records[pos]
        if len(tok) != 2 or tok[0] != name:
            raise MeshFormatError(f"{path}:{lineno}: expected '{name} <count>'")
        try:
            count = int(tok[1])
        except ValueError:
            raise MeshFormatError(f"{path}:{lineno}: bad count {tok[1]!r}") from None
        if count < 0:
            raise MeshFormatError(f"{path}:{lineno}: negative count")
        pos += 1
        return count

    def rows(count, width, conv, what):
        nonlocal pos
        out = []
        for _ in range(count):
            if pos >= len(records):
                raise MeshFormatError(f"{path}: file ends inside the {what} section")
            lineno, tok = records[pos]
            if len(tok) != width:
                raise MeshFormatError(f"{path}:{lineno}: expected {width} values for {what}")
            try:
                out.append([conv(t) for t in tok])
            except ValueError:
                raise MeshFormatError(f"{path}:{lineno}: cannot parse {what} entry") from None
            pos += 1
        return out

    nodes = rows(header("nodes"), 2, float, "nodes")
    elements = rows(header("elements"), 3, int, "elements")
    boundary = [r[0] for r in rows(header("boundary"), 1, int, "boundary")]
    if pos != len(records):
        raise MeshFormatError(f"{path}:{records[pos][0]}: unexpected trailing content")
    try:
        return Mesh.from_arrays(nodes, elements, boundary)
    except MeshFormatError as exc:
        raise MeshFormatError(f"{path}: {exc}") from None
