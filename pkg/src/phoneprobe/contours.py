"""Marching-squares level-set extraction from a 2-D accuracy grid.

Crossing points are linearly interpolated on cell edges and computed once per
grid edge, so adjacent cells share bit-identical vertices and segments chain
into polylines exactly.  Saddle cells are disambiguated by the cell average.
Closed polylines repeat their first vertex at the end.
"""

from __future__ import annotations

import numpy as np

# segments per marching-squares case, in (top, right, bottom, left) edge names;
# case bit order: 8*top-left + 4*top-right + 2*bottom-right + 1*bottom-left
_CASE_SEGMENTS = {
    0: [],
    1: [("l", "b")],
    2: [("b", "r")],
    3: [("l", "r")],
    4: [("t", "r")],
    6: [("t", "b")],
    7: [("t", "l")],
    8: [("t", "l")],
    9: [("t", "b")],
    11: [("t", "r")],
    12: [("l", "r")],
    13: [("b", "r")],
    14: [("l", "b")],
    15: [],
}


def marching_squares(values: np.ndarray, threshold: float) -> list[np.ndarray]:
    """Extract iso-level polylines from a grid of point samples.

    Returns a list of (k, 2) float arrays of fractional (row, col) vertices.
    The list is empty when no value crosses the threshold.
    """
    V = np.asarray(values, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError(f"grid must be 2-D, got shape {V.shape}")
    n_rows, n_cols = V.shape
    if n_rows < 2 or n_cols < 2:
        return []
    inside = V >= threshold

    points: dict[tuple, tuple[float, float]] = {}

    def edge_point(kind: str, i: int, j: int) -> tuple:
        node = (kind, i, j)
        if node not in points:
            if kind == "h":
                v0, v1 = V[i, j], V[i, j + 1]
                frac = (threshold - v0) / (v1 - v0)
                points[node] = (float(i), j + float(frac))
            else:
                v0, v1 = V[i, j], V[i + 1, j]
                frac = (threshold - v0) / (v1 - v0)
                points[node] = (i + float(frac), float(j))
        return node

    adjacency: dict[tuple, list[tuple]] = {}
    segments: set[tuple] = set()

    def add_segment(n0: tuple, n1: tuple) -> None:
        key = (n0, n1) if n0 <= n1 else (n1, n0)
        if key in segments:
            return
        segments.add(key)
        adjacency.setdefault(n0, []).append(n1)
        adjacency.setdefault(n1, []).append(n0)

    for i in range(n_rows - 1):
        for j in range(n_cols - 1):
            case = (
                8 * int(inside[i, j])
                + 4 * int(inside[i, j + 1])
                + 2 * int(inside[i + 1, j + 1])
                + 1 * int(inside[i + 1, j])
            )
            if case in (5, 10):
                center_inside = V[i : i + 2, j : j + 2].mean() >= threshold
                if case == 5:
                    pairs = [("t", "l"), ("b", "r")] if center_inside else [("t", "r"), ("l", "b")]
                else:
                    pairs = [("t", "r"), ("l", "b")] if center_inside else [("t", "l"), ("b", "r")]
            else:
                pairs = _CASE_SEGMENTS[case]
            if not pairs:
                continue
            edge_nodes = {
                "t": ("h", i, j),
                "b": ("h", i + 1, j),
                "l": ("v", i, j),
                "r": ("v", i, j + 1),
            }
            for e0, e1 in pairs:
                k0, i0, j0 = edge_nodes[e0]
                k1, i1, j1 = edge_nodes[e1]
                add_segment(edge_point(k0, i0, j0), edge_point(k1, i1, j1))

    unused = set(segments)

    def take(n0: tuple, n1: tuple) -> None:
        unused.discard((n0, n1) if n0 <= n1 else (n1, n0))

    def walk(start: tuple) -> list[tuple]:
        path = [start]
        current = start
        while True:
            step = None
            for nxt in sorted(adjacency[current]):
                key = (current, nxt) if current <= nxt else (nxt, current)
                if key in unused:
                    step = nxt
                    break
            if step is None:
                return path
            take(current, step)
            path.append(step)
            current = step

    polylines: list[list[tuple]] = []
    for node in sorted(n for n, nbrs in adjacency.items() if len(nbrs) == 1):
        if any(((node, n) if node <= n else (n, node)) in unused for n in adjacency[node]):
            polylines.append(walk(node))
    while unused:  # remaining segments form closed loops
        start = min(min(seg) for seg in unused)
        polylines.append(walk(start))  # walk ends back at start, closing the loop

    return [np.array([points[n] for n in path]) for path in polylines]
