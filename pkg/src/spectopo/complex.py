"""Simplicial 2-complexes: construction, signed boundary operators, Hodge Laplacians.

Edges are stored in canonical orientation (low vertex index -> high). Faces
keep the vertex order they were given in, and their induced edge signs follow
that traversal order. Boundary operators are sparse integer matrices:

    B1 : |V| x |E|   vertex-edge incidence (-1 at tail, +1 at head)
    B2 : |E| x |F|   edge-face incidence (+1 when the face traverses the
                     edge low -> high, -1 otherwise)

so that B1 @ B2 == 0 exactly.  The Laplacians follow the shape-consistent
convention

    L0 = B1 B1^T,   L1 = B1^T B1 + B2 B2^T,   L2 = B2^T B2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError, ParseError, StructuralError

__all__ = [
    "SurfaceComplex",
    "HodgeLaplacians",
    "parse_obj",
    "to_obj",
    "to_text",
    "build_knn_graph",
    "boundary_operators",
    "hodge_laplacians",
    "component_labels",
]


def _canonical(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class SurfaceComplex:
    """Immutable vertex/edge/face complex with lazily built incidence matrices.

    Use :meth:`from_simplices` rather than the raw constructor; it derives the
    edge set from faces, canonicalises orientation and validates indices.
    """

    vertices: np.ndarray  # (|V|, 3) float
    edges: np.ndarray  # (|E|, 2) int, edges[:, 0] < edges[:, 1]
    faces: np.ndarray  # (|F|, 3) int

    @classmethod
    def from_simplices(
        cls,
        vertices: np.ndarray | Sequence[Sequence[float]] | int,
        edges: Iterable[Sequence[int]] = (),
        faces: Iterable[Sequence[int]] = (),
    ) -> "SurfaceComplex":
        """Build a complex from vertex positions, extra edges and triangles.

        ``vertices`` may be an integer count, in which case positions are
        placed at the origin (purely combinatorial complexes). Edges implied by
        faces are added automatically; duplicates are removed. Edge order is
        first-seen order over ``edges`` then faces.
        """
        if isinstance(vertices, (int, np.integer)):
            pos = np.zeros((int(vertices), 3))
        else:
            pos = np.asarray(vertices, dtype=float)
            if pos.ndim != 2 or pos.shape[1] not in (2, 3):
                raise ParameterError(f"vertices must be (N, 3), got shape {pos.shape}")
            if pos.shape[1] == 2:
                pos = np.column_stack([pos, np.zeros(len(pos))])
        n = len(pos)

        face_list: list[tuple[int, int, int]] = []
        for f in faces:
            tri = tuple(int(x) for x in f)
            if len(tri) != 3:
                raise StructuralError(f"face {f!r} is not a triangle")
            if len(set(tri)) != 3:
                raise StructuralError(f"degenerate face {tri}")
            face_list.append(tri)  # type: ignore[arg-type]

        seen: dict[tuple[int, int], int] = {}
        edge_list: list[tuple[int, int]] = []

        def add(a: int, b: int) -> None:
            if a == b:
                raise StructuralError(f"self-loop edge at vertex {a}")
            e = _canonical(a, b)
            if e not in seen:
                seen[e] = len(edge_list)
                edge_list.append(e)

        for e in edges:
            a, b = (int(x) for x in e)
            add(a, b)
        for a, b, c in face_list:
            add(a, b)
            add(b, c)
            add(c, a)

        E = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
        F = np.array(face_list, dtype=np.int64).reshape(-1, 3)
        for arr, what in ((E, "edge"), (F, "face")):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise StructuralError(f"{what} references vertex outside [0, {n})")
        return cls(pos, E, F)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    @cached_property
    def _boundaries(self) -> tuple[sp.csr_array, sp.csr_array]:
        return boundary_operators(self)

    @property
    def B1(self) -> sp.csr_array:
        return self._boundaries[0]

    @property
    def B2(self) -> sp.csr_array:
        return self._boundaries[1]

    @cached_property
    def laplacians(self) -> "HodgeLaplacians":
        return hodge_laplacians(self)

    @cached_property
    def adjacency(self) -> sp.csr_array:
        n = self.n_vertices
        if not self.n_edges:
            return sp.csr_array((n, n))
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(i))
        return sp.csr_array((data, (np.r_[i, j], np.r_[j, i])), shape=(n, n))

    def __repr__(self) -> str:
        return (
            f"SurfaceComplex(|V|={self.n_vertices}, |E|={self.n_edges}, "
            f"|F|={self.n_faces})"
        )


@dataclass(frozen=True)
class HodgeLaplacians:
    L0: sp.csr_array
    L1: sp.csr_array
    L2: sp.csr_array


def boundary_operators(cx: SurfaceComplex) -> tuple[sp.csr_array, sp.csr_array]:
    """Signed incidence matrices ``(B1, B2)`` of a complex.

    Raises:
        StructuralError: a face uses an edge missing from ``cx.edges``, or
            the product B1 @ B2 is not identically zero.
    """
    nv, ne, nf = cx.n_vertices, cx.n_edges, cx.n_faces
    if ne:
        cols = np.repeat(np.arange(ne), 2)
        rows = cx.edges.reshape(-1)
        vals = np.tile(np.array([-1, 1], dtype=np.int64), ne)
        B1 = sp.csr_array((vals, (rows, cols)), shape=(nv, ne), dtype=np.int64)
    else:
        B1 = sp.csr_array((nv, 0), dtype=np.int64)

    index = cx.edge_index
    rows, cols, vals = [], [], []
    for j, (a, b, c) in enumerate(cx.faces):
        for u, v in ((a, b), (b, c), (c, a)):
            u, v = int(u), int(v)
            key = _canonical(u, v)
            if key not in index:
                raise StructuralError(f"face {j} references missing edge {key}")
            rows.append(index[key])
            cols.append(j)
            vals.append(1 if u < v else -1)
    B2 = sp.csr_array(
        (np.array(vals, dtype=np.int64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(ne, nf),
        dtype=np.int64,
    )
    if nf and (B1 @ B2).count_nonzero():
        raise StructuralError("B1 @ B2 != 0; face orientation is inconsistent")
    return B1, B2


def hodge_laplacians(cx: SurfaceComplex) -> HodgeLaplacians:
    B1, B2 = cx.B1, cx.B2
    L0 = (B1 @ B1.T).tocsr()
    L1 = (B1.T @ B1 + B2 @ B2.T).tocsr()
    L2 = (B2.T @ B2).tocsr()
    return HodgeLaplacians(L0, L1, L2)


def component_labels(cx: SurfaceComplex) -> tuple[int, np.ndarray]:
    """Connected components of the 1-skeleton: ``(count, label per vertex)``."""
    n, labels = connected_components(cx.adjacency, directed=False)
    return int(n), labels


# -- OBJ subset I/O ----------------------------------------------------------

_IGNORED = {"vt", "vn", "vp", "g", "o", "s", "usemtl", "mtllib"}


def _obj_index(token: str, n_vertices: int, lineno: int) -> int:
    head = token.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise ParseError(f"bad vertex reference {token!r}", lineno) from None
    if idx == 0:
        raise ParseError("vertex index 0 is invalid (OBJ is 1-based)", lineno)
    # negative indices are relative to the vertices read so far
    return idx - 1 if idx > 0 else n_vertices + idx


def parse_obj(text: str) -> SurfaceComplex:
    """Parse ``v``/``f`` (and ``l``) records of Wavefront OBJ text.

    Polygons with more than three corners are fan-triangulated from their
    first corner. Texture/normal indices and material records are ignored.

    Raises:
        ParseError: malformed record, with its line number.
        StructuralError: a face or line references a vertex that does not exist.
    """
    verts: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    lines: list[tuple[int, int]] = []
    refs: list[tuple[int, int]] = []  # (index, lineno) checked after reading

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "v":
            if len(rest) < 3:
                raise ParseError("vertex record needs 3 coordinates", lineno)
            try:
                verts.append([float(x) for x in rest[:3]])
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {raw.strip()!r}", lineno) from None
        elif tag == "f":
            if len(rest) < 3:
                raise ParseError("face record needs at least 3 vertices", lineno)
            idx = [_obj_index(t, len(verts), lineno) for t in rest]
            refs.extend((i, lineno) for i in idx)
            for a, b in zip(idx[1:-1], idx[2:]):
                faces.append((idx[0], a, b))
        elif tag == "l":
            if len(rest) < 2:
                raise ParseError("line record needs at least 2 vertices", lineno)
            idx = [_obj_index(t, len(verts), lineno) for t in rest]
            refs.extend((i, lineno) for i in idx)
            lines.extend(zip(idx[:-1], idx[1:]))
        elif tag in _IGNORED:
            continue
        else:
            raise ParseError(f"unknown record type {tag!r}", lineno)

    n = len(verts)
    for i, lineno in refs:
        if not 0 <= i < n:
            raise StructuralError(f"line {lineno}: vertex index {i + 1} out of range (|V|={n})")
    return SurfaceComplex.from_simplices(np.array(verts).reshape(-1, 3), lines, faces)


def to_obj(cx: SurfaceComplex) -> str:
    """Serialise to OBJ text. Edges not bounding any face become ``l`` records."""
    out = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in cx.vertices]
    on_face = set()
    for a, b, c in cx.faces:
        out.append(f"f {a + 1} {b + 1} {c + 1}")
        on_face.update({_canonical(a, b), _canonical(b, c), _canonical(c, a)})
    for a, b in cx.edges:
        if (int(a), int(b)) not in on_face:
            out.append(f"l {a + 1} {b + 1}")
    return "\n".join(out) + "\n"


def to_text(cx: SurfaceComplex) -> str:
    """Plain edge/face listing (0-based) for debugging."""
    out = [f"# |V|={cx.n_vertices} |E|={cx.n_edges} |F|={cx.n_faces}"]
    out += [f"e {a} {b}" for a, b in cx.edges]
    out += [f"t {a} {b} {c}" for a, b, c in cx.faces]
    return "\n".join(out) + "\n"


# -- point clouds --------------------------------------------------------------


def build_knn_graph(points: np.ndarray | Sequence[Sequence[float]], k: int) -> SurfaceComplex:
    """Symmetrised k-nearest-neighbour graph (edge if either end selects the other).

    Distance ties are broken by the lower vertex index, so coincident points
    are allowed.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ParameterError("need at least 2 points as an (N, d) array")
    n = len(pts)
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < N={n}, got {k}")

    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    edges = {_canonical(i, int(j)) for i in range(n) for j in order[i]}
    return SurfaceComplex.from_simplices(pts, sorted(edges))
