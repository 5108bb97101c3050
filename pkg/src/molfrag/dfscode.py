"""Minimum DFS codes for connected labeled graphs (gSpan canonical form).

A DFS code is a list of 5-tuples ``(i, j, label_i, bond, label_j)`` where
``i``/``j`` are discovery indices.  Forward edges have ``i < j``, backward
edges ``i > j``.  At each step the candidate extensions of a shared prefix are
ordered: backward before forward; backward by target index then bond;
forward by *deeper* source first, then bond, then new vertex label.  Vertex
labels compare as strings and bonds by their integer code.
"""
from __future__ import annotations

from typing import Sequence

DFSEdge = tuple  # (i, j, label_i, bond, label_j)


def rightmost_path(code: Sequence[DFSEdge]) -> list[int]:
    """Discovery indices on the rightmost path, rightmost vertex first."""
    if not code:
        return []
    cur = max(max(e[0], e[1]) for e in code)
    path = [cur]
    for i, j, *_ in reversed(code):
        if i < j and j == cur:
            path.append(i)
            cur = i
    return path


def step_key(edge: DFSEdge):
    """Sort key comparing two valid extensions of the same code prefix."""
    i, j, _, b, lj = edge
    if i > j:
        return (0, j, b)
    return (1, -i, b, lj)


def _adjacency(n: int, edges) -> list[dict[int, int]]:
    adj: list[dict[int, int]] = [{} for _ in range(n)]
    for u, v, b in edges:
        adj[u][v] = int(b)
        adj[v][u] = int(b)
    return adj


def _search(labels: Sequence[str], edges, target: Sequence[DFSEdge] | None):
    """Build the minimum code; with ``target`` abort as soon as it is beaten.

    Returns ``(code, order)`` or, in target mode, a bool telling whether the
    target is minimal.
    """
    n = len(labels)
    adj = _adjacency(n, edges)
    n_edges = len(edges)
    if n_edges == 0:
        raise ValueError("pattern needs at least one edge")
    first = min((labels[u], b, labels[v]) for u in range(n) for v, b in adj[u].items())
    if target is not None:
        t0 = (target[0][2], target[0][3], target[0][4])
        if first < t0:
            return False
    states = [
        ([u, v], {u: 0, v: 1}, {(min(u, v), max(u, v))})
        for u in range(n)
        for v, b in adj[u].items()
        if (labels[u], b, labels[v]) == first
    ]
    code = [(0, 1) + first]
    for step in range(1, n_edges):
        rmpath = rightmost_path(code)
        rm = rmpath[0]
        best = None
        realized = []
        for mapping, inv, used in states:
            cands = []
            u = mapping[rm]
            for j in reversed(rmpath[1:]):
                v = mapping[j]
                b = adj[u].get(v)
                if b is not None and (min(u, v), max(u, v)) not in used:
                    cands.append(((0, j, b), (rm, j, labels[u], b, labels[v]), None, (u, v)))
            for i in rmpath:
                x = mapping[i]
                for w, b in adj[x].items():
                    if w not in inv:
                        cands.append(((1, -i, b, labels[w]), (i, len(mapping), labels[x], b, labels[w]), w, (x, w)))
            for key, edge, new_v, e in cands:
                if best is None or key < best:
                    best = key
                    realized = [(mapping, inv, used, edge, new_v, e)]
                elif key == best:
                    realized.append((mapping, inv, used, edge, new_v, e))
        if best is None:
            raise ValueError("graph is not connected")
        edge = realized[0][3]
        if target is not None:
            tkey = step_key(target[step])
            if best < tkey:
                return False
            if best > tkey:  # target is not a DFS code of this graph
                return False
        code.append(edge)
        new_states = []
        for mapping, inv, used, _, new_v, (a, c) in realized:
            used2 = set(used)
            used2.add((min(a, c), max(a, c)))
            if new_v is not None:
                inv2 = dict(inv)
                inv2[new_v] = len(mapping)
                new_states.append((mapping + [new_v], inv2, used2))
            else:
                new_states.append((mapping, inv, used2))
        states = new_states
    if target is not None:
        return True
    return code, states[0][0]


def min_dfs_code(labels: Sequence[str], edges) -> tuple[list[DFSEdge], list[int]]:
    """Minimum DFS code and the discovery order (discovery index -> vertex)."""
    return _search(labels, edges, None)


def is_min(code: Sequence[DFSEdge]) -> bool:
    """Whether ``code`` is the minimum DFS code of the graph it describes."""
    labels, edges = code_to_graph(code)
    return _search(labels, edges, code)


def code_to_graph(code: Sequence[DFSEdge]) -> tuple[list[str], list[tuple[int, int, int]]]:
    n = max(max(e[0], e[1]) for e in code) + 1
    labels: list[str | None] = [None] * n
    edges = []
    for i, j, li, b, lj in code:
        labels[i] = li
        labels[j] = lj
        edges.append((i, j, b))
    return labels, edges
