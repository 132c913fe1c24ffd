"""Deterministic synthetic complexes used by the experiments and tests.

Descriptor strings follow ``name(arg, ...)``, e.g. ``grid(10,10)`` or
``figure_eight(3,3)``; :func:`gen_family` also accepts ``(name, *args)``.

* ``path(N)``, ``cycle(N)``: 1-skeleton only.
* ``grid(n, m)``: triangulated n x m patch (all triangles filled, beta1 = 0).
* ``figure_eight(l_a, l_b)``: two cycles sharing vertex 0.
* ``separated_cycles(l, bridge_len[, l_b])``: two disjoint cycles joined by
  a path of ``bridge_len`` edges.
* ``channeled(N, n_cross)``: triangulated grid with an incised channel
  network and ``n_cross`` unfilled junction cross-links, one cycle each.
* ``crater(rim_len, base)``: ``base`` x ``base`` grid with a rim cycle of
  ``rim_len`` vertices hanging off one corner (beta1 = 1).
"""

from __future__ import annotations

import math
import re

import numpy as np

from .complex import SurfaceComplex
from .errors import ParameterError

__all__ = [
    "path",
    "cycle",
    "grid",
    "figure_eight",
    "separated_cycles",
    "channeled",
    "crater",
    "gen_family",
    "grid_shape",
]


def path(n: int) -> SurfaceComplex:
    if n < 1:
        raise ParameterError("path needs N >= 1")
    pos = np.column_stack([np.arange(n, dtype=float), np.zeros(n), np.zeros(n)])
    return SurfaceComplex.from_simplices(pos, [(i, i + 1) for i in range(n - 1)])


def _ring(n: int, center=(0.0, 0.0), radius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    t = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t), np.zeros(n)])


def cycle(n: int) -> SurfaceComplex:
    if n < 3:
        raise ParameterError("cycle needs N >= 3")
    return SurfaceComplex.from_simplices(_ring(n), [(i, (i + 1) % n) for i in range(n)])


def _grid_parts(n: int, m: int, offset: int = 0):
    idx = lambda i, j: offset + i * m + j  # noqa: E731
    pos = [(float(j), float(i), 0.0) for i in range(n) for j in range(m)]
    edges, faces = [], []
    for i in range(n):
        for j in range(m):
            if j + 1 < m:
                edges.append((idx(i, j), idx(i, j + 1)))
            if i + 1 < n:
                edges.append((idx(i, j), idx(i + 1, j)))
            if i + 1 < n and j + 1 < m:
                faces.append((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)))
                faces.append((idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)))
    return pos, edges, faces


def grid(n: int, m: int) -> SurfaceComplex:
    if n < 1 or m < 1:
        raise ParameterError("grid needs n, m >= 1")
    return SurfaceComplex.from_simplices(*_grid_parts(n, m))


def figure_eight(l_a: int, l_b: int | None = None) -> SurfaceComplex:
    """Cycles of length ``l_a`` and ``l_b`` meeting at articulation vertex 0."""
    l_b = l_a if l_b is None else l_b
    if l_a < 3 or l_b < 3:
        raise ParameterError("cycle lengths must be >= 3")
    a = [0] + list(range(1, l_a))
    b = [0] + list(range(l_a, l_a + l_b - 1))
    edges = [(a[i], a[(i + 1) % l_a]) for i in range(l_a)]
    edges += [(b[i], b[(i + 1) % l_b]) for i in range(l_b)]
    pos = np.zeros((l_a + l_b - 1, 3))
    pos[a] = _ring(l_a, center=(-1.0, 0.0), phase=0.0)
    pos[b] = _ring(l_b, center=(1.0, 0.0), phase=np.pi)
    return SurfaceComplex.from_simplices(pos, edges)


def separated_cycles(l: int, bridge_len: int, l_b: int | None = None) -> SurfaceComplex:
    """Cycle A (vertices ``0..l-1``) and cycle B joined by a ``bridge_len``-edge path."""
    l_b = l if l_b is None else l_b
    if l < 3 or l_b < 3:
        raise ParameterError("cycle lengths must be >= 3")
    if bridge_len < 1:
        raise ParameterError("bridge_len must be >= 1")
    a = list(range(l))
    b = list(range(l, l + l_b))
    edges = [(a[i], a[(i + 1) % l]) for i in range(l)]
    edges += [(b[i], b[(i + 1) % l_b]) for i in range(l_b)]
    n = l + l_b
    pos = [*_ring(l, center=(0.0, 0.0)), *_ring(l_b, center=(bridge_len + 2.0, 0.0), phase=np.pi)]
    prev = a[0]
    for step in range(bridge_len - 1):
        edges.append((prev, n))
        pos.append((1.0 + step + 1.0, 0.0, 0.0))
        prev = n
        n += 1
    edges.append((prev, b[0]))
    return SurfaceComplex.from_simplices(np.array(pos), edges)


def grid_shape(n_vertices: int) -> tuple[int, int]:
    """Most square ``rows x cols`` factorisation with ``rows <= cols``."""
    for rows in range(math.isqrt(n_vertices), 0, -1):
        if n_vertices % rows == 0:
            return rows, n_vertices // rows
    raise ParameterError(f"cannot factor {n_vertices}")


def channeled(n_vertices: int = 512, n_cross: int = 3, depth: float = 3.0) -> SurfaceComplex:
    """Flat triangulated terrain with an incised channel network and junction loops.

    The channel tree is a trunk along the middle row plus one tributary per
    junction, running to the top or bottom edge in alternation; its vertices
    sit ``depth`` below the plateau (z = 0). At each junction a cross-link
    joins ``(r, c)`` to ``(r + 2, c + 3)``. It bounds no triangle, so each
    link adds one independent cycle.
    """
    rows, cols = grid_shape(n_vertices)
    if rows < 4 or cols < 5 * max(n_cross, 1):
        raise ParameterError(f"grid {rows}x{cols} too small for {n_cross} cross-links")
    pos, edges, faces = _grid_parts(rows, cols)
    pos = np.array(pos)
    mid = rows // 2 - 1
    channel = {(mid, j) for j in range(cols)}
    for t in range(n_cross):
        c = (t + 1) * cols // (n_cross + 1) - 1
        r = mid + (1 if t % 2 else -1)
        edges.append((r * cols + c, (r + 2) * cols + c + 3))
        rows_t = range(mid + 1, rows) if t % 2 else range(0, mid)
        channel |= {(i, c) for i in rows_t}
    for i, j in channel:
        pos[i * cols + j, 2] -= depth
    return SurfaceComplex.from_simplices(pos, edges, faces)


def crater(rim_len: int = 8, base: int = 6) -> SurfaceComplex:
    """Grid patch with a pendant rim cycle of ``rim_len`` vertices sharing its last corner."""
    if rim_len < 3 or base < 2:
        raise ParameterError("crater needs rim_len >= 3 and base >= 2")
    pos, edges, faces = _grid_parts(base, base)
    anchor = base * base - 1
    ring = [anchor] + list(range(base * base, base * base + rim_len - 1))
    edges += [(ring[i], ring[(i + 1) % rim_len]) for i in range(rim_len)]
    rim_pos = _ring(rim_len, center=(base + 1.0, base + 1.0), radius=1.5, phase=np.pi * 1.25)
    pos = np.array(pos + [tuple(p) for p in rim_pos[1:]])
    pos[base * base :, 2] = 1.0
    return SurfaceComplex.from_simplices(pos, edges, faces)


_BUILDERS = {
    "path": path,
    "cycle": cycle,
    "grid": grid,
    "figure_eight": figure_eight,
    "separated_cycles": separated_cycles,
    "channeled": channeled,
    "crater": crater,
}

_DESCRIPTOR = re.compile(r"^\s*(\w+)\s*(?:\(([^)]*)\))?\s*$")


def gen_family(spec) -> SurfaceComplex:
    """Build a family member from ``"name(a,b)"`` or ``("name", a, b)``."""
    if isinstance(spec, str):
        m = _DESCRIPTOR.match(spec)
        if not m:
            raise ParameterError(f"bad family descriptor {spec!r}")
        name = m.group(1)
        args = [int(a) for a in m.group(2).split(",") if a.strip()] if m.group(2) else []
    else:
        name, *args = spec
    if name not in _BUILDERS:
        raise ParameterError(f"unknown family {name!r}; choose from {sorted(_BUILDERS)}")
    try:
        return _BUILDERS[name](*args)
    except TypeError as exc:
        raise ParameterError(f"bad arguments for {name}: {exc}") from None
