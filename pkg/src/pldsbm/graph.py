"""Immutable undirected simple graph with degree queries and text loaders.

Graphs are stored with dense node ids in [0, N). Loaders accept arbitrary
integer ids and return the dense relabeling alongside the graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphParseError(ValueError):
    """Raised on malformed edge-list or GML input."""


@dataclass(frozen=True)
class Graph:
    """Undirected binary graph: N nodes, set of unordered edges (i<j).

    No self-loops, each unordered pair stored at most once. `edge_array`
    is an (E, 2) int array with edge_array[:, 0] < edge_array[:, 1],
    sorted lexicographically.
    """

    n_nodes: int
    edge_array: np.ndarray
    _neighbors: list = field(repr=False, compare=False, default=None)
    _edge_set: frozenset = field(repr=False, compare=False, default=None)

    @staticmethod
    def from_edges(n_nodes, edges):
        """Build a Graph from an iterable of (i, j) pairs.

        Pairs are normalized to i<j, deduplicated; self-loops are rejected.
        """
        norm = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop ({i},{i}) not allowed")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError(f"edge ({i},{j}) outside [0,{n_nodes})")
            norm.add((min(i, j), max(i, j)))
        arr = np.array(sorted(norm), dtype=np.int64).reshape(-1, 2)
        return Graph(n_nodes=int(n_nodes), edge_array=arr)

    def __post_init__(self):
        nbrs = [[] for _ in range(self.n_nodes)]
        for i, j in self.edge_array:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(
            self, "_neighbors", [np.array(sorted(a), dtype=np.int64) for a in nbrs]
        )
        object.__setattr__(
            self, "_edge_set", frozenset((int(i), int(j)) for i, j in self.edge_array)
        )

    @property
    def n_edges(self):
        return self.edge_array.shape[0]

    @property
    def n_nonedges(self):
        n = self.n_nodes
        return n * (n - 1) // 2 - self.n_edges

    def has_edge(self, i, j):
        a, b = (i, j) if i < j else (j, i)
        return (a, b) in self._edge_set

    def neighbors(self, i):
        return self._neighbors[i]

    def degree(self, i=None):
        if i is not None:
            return len(self._neighbors[i])
        return np.array([len(a) for a in self._neighbors], dtype=np.int64)

    def adjacency_matrix(self):
        """Dense boolean adjacency matrix (symmetric, zero diagonal)."""
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        if self.n_edges:
            a[self.edge_array[:, 0], self.edge_array[:, 1]] = True
            a[self.edge_array[:, 1], self.edge_array[:, 0]] = True
        return a

    def edges(self):
        return [(int(i), int(j)) for i, j in self.edge_array]


@dataclass(frozen=True)
class LoadReport:
    """Bookkeeping from a loader: dense id map plus dropped-item counts."""

    id_map: dict  # original id -> dense id
    self_loops_dropped: int = 0
    duplicates_collapsed: int = 0
    isolated_dropped: int = 0


def load_edge_list(text, drop_isolated=False):
    """Parse whitespace-separated edge-list text into a Graph.

    Lines starting with '#' are comments. Node ids are arbitrary
    non-negative integers; they are relabeled densely (ascending order).
    Duplicate edges collapse, self-loops drop (counted in the report).
    With drop_isolated, nodes that end up with no edges are removed.

    Returns (Graph, LoadReport).
    """
    raw_edges = []
    ids = set()
    n_lines = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        n_lines += 1
        toks = s.split()
        if len(toks) < 2:
            raise GraphParseError(f"line {lineno}: expected two node ids, got {s!r}")
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            raise GraphParseError(f"line {lineno}: non-integer token in {s!r}") from None
        if u < 0 or v < 0:
            raise GraphParseError(f"line {lineno}: negative node id in {s!r}")
        raw_edges.append((u, v))
        ids.add(u)
        ids.add(v)
    if n_lines == 0:
        raise GraphParseError("empty edge-list input")
    return _assemble(raw_edges, ids, drop_isolated)


def _assemble(raw_edges, ids, drop_isolated):
    self_loops = sum(1 for u, v in raw_edges if u == v)
    pairs = {(min(u, v), max(u, v)) for u, v in raw_edges if u != v}
    duplicates = (len(raw_edges) - self_loops) - len(pairs)
    if drop_isolated:
        used = {u for e in pairs for u in e}
        isolated = len(ids - used)
        ids = used
    else:
        isolated = 0
    id_map = {orig: new for new, orig in enumerate(sorted(ids))}
    edges = {(id_map[u], id_map[v]) for u, v in pairs}
    g = Graph.from_edges(len(id_map), edges)
    report = LoadReport(
        id_map=id_map,
        self_loops_dropped=self_loops,
        duplicates_collapsed=duplicates,
        isolated_dropped=isolated,
    )
    return g, report


def write_edge_list(g):
    """Serialize a Graph to edge-list text (one 'i j' line per edge)."""
    return "".join(f"{i} {j}\n" for i, j in g.edge_array)


def _tokenize_gml(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise GraphParseError(f"unterminated string at position {i}")
            toks.append((i, text[i + 1 : j]))
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "[]":
            j += 1
        if j == i:  # '[' or ']'
            toks.append((i, c))
            i += 1
        else:
            toks.append((i, text[i:j]))
            i = j
    return toks


def load_gml_subset(text, drop_isolated=False):
    """Parse the GML subset `graph [ node [...] edge [...] ]`.

    Only `id`, `value` (node) and `source`, `target` (edge) keys are
    interpreted; everything else is skipped. Directed duplicates merge
    into one undirected edge; self-loops drop.

    Returns (Graph, labels, LoadReport) where labels[k] is the integer
    `value` of dense node k (0 when absent).
    """
    toks = _tokenize_gml(text)
    node_ids = []
    node_values = {}
    raw_edges = []
    stack = []  # context names
    cur = {}
    pending_key = None
    for pos, tok in toks:
        if tok == "[":
            if pending_key is None:
                raise GraphParseError(f"position {pos}: '[' without a key")
            stack.append((pending_key, cur))
            cur = {}
            pending_key = None
        elif tok == "]":
            if not stack:
                raise GraphParseError(f"position {pos}: unbalanced ']'")
            name, parent = stack.pop()
            if name == "node":
                if "id" not in cur:
                    raise GraphParseError(f"position {pos}: node block without id")
                nid = cur["id"]
                node_ids.append(nid)
                if "value" in cur:
                    node_values[nid] = cur["value"]
            elif name == "edge":
                if "source" not in cur or "target" not in cur:
                    raise GraphParseError(
                        f"position {pos}: edge block missing source/target"
                    )
                raw_edges.append((cur["source"], cur["target"]))
            cur = parent
        elif pending_key is None:
            pending_key = tok
        else:
            if pending_key in ("id", "value", "source", "target"):
                try:
                    cur[pending_key] = int(tok)
                except (TypeError, ValueError):
                    if pending_key in ("id", "source", "target"):
                        raise GraphParseError(
                            f"non-integer {pending_key} {tok!r}"
                        ) from None
            pending_key = None
    if stack:
        raise GraphParseError("unbalanced '[': document ended inside a block")
    if not node_ids:
        raise GraphParseError("no node blocks found")
    known = set(node_ids)
    for u, v in raw_edges:
        if u not in known or v not in known:
            raise GraphParseError(f"edge ({u},{v}) references unknown node id")
    g, report = _assemble(raw_edges, known, drop_isolated)
    labels = np.zeros(g.n_nodes, dtype=np.int64)
    for orig, new in report.id_map.items():
        labels[new] = node_values.get(orig, 0)
    return g, labels, report


def largest_connected_component(g):
    """Induced subgraph on the largest component, densely relabeled.

    Ties between equal-sized components break toward the one containing
    the smallest original node id. Returns (Graph, id_map).
    """
    if g.n_nodes == 0:
        return g, {}
    comp = np.full(g.n_nodes, -1, dtype=np.int64)
    comp_nodes = []
    for start in range(g.n_nodes):
        if comp[start] >= 0:
            continue
        cid = len(comp_nodes)
        members = [start]
        comp[start] = cid
        q = deque([start])
        while q:
            u = q.popleft()
            for v in g.neighbors(u):
                if comp[v] < 0:
                    comp[v] = cid
                    members.append(int(v))
                    q.append(int(v))
        comp_nodes.append(members)
    # components discovered in ascending min-node order, so max() with
    # key=len keeps the first (smallest min id) on ties
    best = max(comp_nodes, key=len)
    id_map = {orig: new for new, orig in enumerate(sorted(best))}
    edges = [
        (id_map[i], id_map[j])
        for i, j in g.edge_array
        if i in id_map and j in id_map
    ]
    return Graph.from_edges(len(id_map), edges), id_map


def write_id_map_csv(id_map):
    """CSV text `orig_id,new_id` sorted by original id."""
    lines = ["orig_id,new_id"]
    for orig in sorted(id_map):
        lines.append(f"{orig},{id_map[orig]}")
    return "\n".join(lines) + "\n"


def load_labels(text):
    """One integer label per line; line k labels dense node k."""
    labels = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            labels.append(int(s))
        except ValueError:
            raise GraphParseError(f"line {lineno}: non-integer label {s!r}") from None
    return np.array(labels, dtype=np.int64)
