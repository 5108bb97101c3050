"""Fragment languages (sequences, free trees, graphs) with canonical codes.

Canonical code grammar (ASCII; ``LABEL`` is ``[A-Za-z0-9_]+``, ``BOND`` one
of ``- = # :`` for single/double/triple/aromatic)::

    S:LABEL(BOND LABEL)+                 sequence, orientation <= its reversal
    T:NODE   NODE := LABEL["(" BOND NODE ("," BOND NODE)* ")"]
                                         free tree rooted at its centre,
                                         children sorted by their string
    G:("(" i "," j "," LABEL "," BOND "," LABEL ")")+
                                         minimum DFS code
    W:LABEL(BOND LABEL)+                 walk fragment of the path baseline

All matching is non-induced: a pattern occurs in a molecule when an injective
vertex map preserves vertex labels and maps every pattern edge onto a
molecule edge with the same bond label.
"""
from __future__ import annotations

import enum
import re
from functools import cached_property
from typing import Callable, Iterable, Sequence

from . import _kernels as K
from . import dfscode
from .molgraph import BondLabel, LabeledDataset, MolecularGraph


class PatternLanguage(str, enum.Enum):
    SEQUENCE = "sequence"
    TREE = "tree"
    GRAPH = "graph"

    @classmethod
    def parse(cls, value) -> "PatternLanguage":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        aliases = {"seq": "sequence", "sequences": "sequence", "trees": "tree", "graphs": "graph"}
        return cls(aliases.get(v, v))


class PatternError(ValueError):
    pass


_SYMBOL = {b: b.symbol for b in BondLabel}


def _sym(b) -> str:
    return _SYMBOL[BondLabel(b)]


def _adjacency(n: int, edges) -> list[dict[int, BondLabel]]:
    adj: list[dict[int, BondLabel]] = [{} for _ in range(n)]
    for u, v, b in edges:
        if u == v or v in adj[u]:
            raise PatternError("patterns must be simple graphs")
        b = BondLabel(b)
        adj[u][v] = b
        adj[v][u] = b
    return adj


def _connected(adj) -> bool:
    if not adj:
        return False
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(adj)


class Pattern:
    """Common base: ``labels`` and ``edges`` use a connected vertex order."""

    language: PatternLanguage
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int, BondLabel], ...]
    code: str

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_cyclic(self) -> bool:
        return self.n_edges >= self.n_vertices

    @cached_property
    def plan(self) -> K.Plan:
        return K.Plan(self.labels, self.edges)

    def __eq__(self, other) -> bool:
        return isinstance(other, Pattern) and self.code == other.code

    def __hash__(self) -> int:
        return hash(self.code)

    def __lt__(self, other: "Pattern") -> bool:
        return self.code < other.code

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.code!r})"

    def as_graph(self) -> "GraphPattern":
        return GraphPattern.from_graph(self.labels, self.edges)

    # refinement hooks ------------------------------------------------------
    def _masks(self):
        raise NotImplementedError

    def _candidate(self, src: int, dst: int, bond: int, label: str | None) -> "Pattern":
        raise NotImplementedError

    def is_canonical_child(self, child: "Pattern") -> bool:
        raise NotImplementedError


# --------------------------------------------------------------------------
# sequences
# --------------------------------------------------------------------------

def _orient(atoms, bonds):
    fwd = []
    for a, b in zip(atoms, bonds):
        fwd += [a, int(b)]
    fwd.append(atoms[-1])
    rev = fwd[::-1]
    if rev < fwd:
        return tuple(atoms[::-1]), tuple(bonds[::-1])
    return tuple(atoms), tuple(bonds)


def _linear_code(tag: str, atoms, bonds) -> str:
    parts = [atoms[0]]
    for b, a in zip(bonds, atoms[1:]):
        parts.append(_sym(b))
        parts.append(a)
    return tag + ":" + "".join(parts)


def _path_order(adj) -> list[int] | None:
    n = len(adj)
    if n < 2 or any(len(a) > 2 for a in adj):
        return None
    ends = [v for v in range(n) if len(adj[v]) == 1]
    if len(ends) != 2:
        return None
    order = [ends[0]]
    prev = -1
    while len(order) < n:
        cur = order[-1]
        nxt = [w for w in adj[cur] if w != prev]
        if not nxt:
            return None
        prev = cur
        order.append(nxt[0])
    return order


class SequencePattern(Pattern):
    """Simple path of atoms; stored in canonical orientation."""

    language = PatternLanguage.SEQUENCE

    def __init__(self, atoms: Sequence[str], bonds: Sequence):
        atoms = tuple(str(a) for a in atoms)
        bonds = tuple(BondLabel(b) for b in bonds)
        if len(atoms) < 2 or len(bonds) != len(atoms) - 1:
            raise PatternError("a sequence needs m >= 2 atoms and m - 1 bonds")
        self.atoms, self.bonds = _orient(atoms, bonds)
        self.labels = self.atoms
        self.edges = tuple((i, i + 1, b) for i, b in enumerate(self.bonds))
        self.code = _linear_code("S", self.atoms, self.bonds)

    @classmethod
    def from_graph(cls, labels, edges) -> "SequencePattern":
        adj = _adjacency(len(labels), edges)
        order = _path_order(adj)
        if order is None or not _connected(adj):
            raise PatternError("graph is not a simple path")
        return cls([labels[v] for v in order], [adj[a][b] for a, b in zip(order, order[1:])])

    def as_tree(self) -> "TreePattern":
        return TreePattern.from_graph(self.labels, self.edges)

    def _masks(self):
        return (0, len(self.atoms) - 1), -1, ()

    def _candidate(self, src, dst, bond, label):
        if src == 0:
            return SequencePattern((label,) + self.atoms, (bond,) + self.bonds)
        return SequencePattern(self.atoms + (label,), self.bonds + (bond,))

    def designated_parent_code(self) -> str:
        a = _linear_code("S", *_orient(self.atoms[1:], self.bonds[1:]))
        b = _linear_code("S", *_orient(self.atoms[:-1], self.bonds[:-1]))
        return min(a, b)

    def is_canonical_child(self, child) -> bool:
        return child.designated_parent_code() == self.code


# --------------------------------------------------------------------------
# free trees
# --------------------------------------------------------------------------

def _centers(adj) -> list[int]:
    n = len(adj)
    if n <= 2:
        return list(range(n))
    deg = [len(a) for a in adj]
    layer = [v for v in range(n) if deg[v] == 1]
    remaining = n
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for w in adj[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    return sorted(layer)


def _tree_canon(labels, edges, code_only: bool = False):
    adj = _adjacency(len(labels), edges)
    if len(edges) != len(labels) - 1 or not _connected(adj):
        raise PatternError("graph is not a tree")
    # canonical string of the subtree hanging from v, memoized per directed edge
    memo: dict[tuple[int, int], str] = {}

    def rooted(v, parent):
        s = memo.get((v, parent))
        if s is None:
            kids = sorted(_SYMBOL[b] + rooted(w, v) for w, b in adj[v].items() if w != parent)
            s = labels[v] + "(" + ",".join(kids) + ")" if kids else labels[v]
            memo[(v, parent)] = s
        return s

    root = min(_centers(adj), key=lambda c: rooted(c, -1))
    if code_only:
        return "T:" + memo[(root, -1)]
    order = []

    def preorder(v, parent):
        order.append((v, parent))
        # equal keys mean isomorphic subtrees, so their relative order cannot change the result
        for _, w in sorted((_SYMBOL[b] + memo[(w, v)], w) for w, b in adj[v].items() if w != parent):
            preorder(w, v)

    preorder(root, -1)
    index = {v: i for i, (v, _) in enumerate(order)}
    new_labels = tuple(labels[v] for v, _ in order)
    new_edges = tuple((index[p], index[v], adj[p][v]) for v, p in order if p >= 0)
    return "T:" + memo[(root, -1)], new_labels, new_edges


class TreePattern(Pattern):
    """Unrooted labeled tree; vertices numbered in canonical preorder."""

    language = PatternLanguage.TREE

    def __init__(self, code: str, labels, edges):
        self.code = code
        self.labels = tuple(labels)
        self.edges = tuple(edges)

    @classmethod
    def from_graph(cls, labels, edges) -> "TreePattern":
        if len(labels) < 2:
            raise PatternError("a tree pattern needs at least one edge")
        return cls(*_tree_canon(tuple(labels), tuple(edges)))

    def _masks(self):
        return tuple(range(self.n_vertices)), -1, ()

    def _candidate(self, src, dst, bond, label):
        n = self.n_vertices
        return TreePattern.from_graph(self.labels + (label,), self.edges + ((src, n, BondLabel(bond)),))

    def designated_parent_code(self) -> str:
        n = self.n_vertices
        deg = [0] * n
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        best = None
        for leaf in range(n):
            if deg[leaf] != 1:
                continue
            keep = [v for v in range(n) if v != leaf]
            idx = {v: i for i, v in enumerate(keep)}
            edges = [(idx[u], idx[v], b) for u, v, b in self.edges if leaf not in (u, v)]
            code = _tree_canon(tuple(self.labels[v] for v in keep), tuple(edges), code_only=True)
            if best is None or code < best:
                best = code
        return best

    def is_canonical_child(self, child) -> bool:
        return child.designated_parent_code() == self.code


# --------------------------------------------------------------------------
# graphs
# --------------------------------------------------------------------------

def _dfs_string(code) -> str:
    return "G:" + "".join(f"({i},{j},{li},{_sym(b)},{lj})" for i, j, li, b, lj in code)


class GraphPattern(Pattern):
    """Connected labeled graph; vertices numbered by its minimum DFS code."""

    language = PatternLanguage.GRAPH

    def __init__(self, dfs: Sequence[tuple]):
        self.dfs = tuple((i, j, li, BondLabel(b), lj) for i, j, li, b, lj in dfs)
        labels, edges = dfscode.code_to_graph(self.dfs)
        self.labels = tuple(labels)
        self.edges = tuple((i, j, BondLabel(b)) for i, j, b in edges)
        self.code = _dfs_string(self.dfs)

    @classmethod
    def from_graph(cls, labels, edges) -> "GraphPattern":
        adj = _adjacency(len(labels), edges)
        if len(labels) < 2 or not _connected(adj):
            raise PatternError("graph patterns must be connected with at least one edge")
        code, _ = dfscode.min_dfs_code(tuple(labels), [(u, v, int(b)) for u, v, b in edges])
        return cls(code)

    def _masks(self):
        rmpath = dfscode.rightmost_path(self.dfs)
        return tuple(rmpath), rmpath[0], tuple(rmpath[1:])

    def _candidate(self, src, dst, bond, label):
        if dst < 0:
            edge = (src, self.n_vertices, self.labels[src], BondLabel(bond), label)
        else:
            edge = (src, dst, self.labels[src], BondLabel(bond), self.labels[dst])
        return GraphPattern(self.dfs + (edge,))

    def is_canonical_child(self, child) -> bool:
        return child.dfs[:-1] == self.dfs and dfscode.is_min(child.dfs)


# --------------------------------------------------------------------------
# walks (path baseline; not part of the three mined languages)
# --------------------------------------------------------------------------

class WalkPattern(Pattern):
    """Label string of a walk without immediate backtracking; vertices may repeat."""

    language = None

    def __init__(self, atoms: Sequence[str], bonds: Sequence):
        atoms = tuple(str(a) for a in atoms)
        bonds = tuple(BondLabel(b) for b in bonds)
        if len(atoms) < 2 or len(bonds) != len(atoms) - 1:
            raise PatternError("a walk needs m >= 2 atoms and m - 1 bonds")
        self.atoms, self.bonds = _orient(atoms, bonds)
        self.labels = self.atoms
        self.edges = ()
        self.code = _linear_code("W", self.atoms, self.bonds)

    @property
    def n_edges(self) -> int:
        return len(self.bonds)

    @cached_property
    def walk_key(self) -> tuple:
        """Same orientation convention as :func:`molfrag._kernels.walk_keys`."""
        seq = [K.intern_label(self.atoms[0])]
        for b, a in zip(self.bonds, self.atoms[1:]):
            seq += [int(b), K.intern_label(a)]
        return min(tuple(seq), tuple(seq[::-1]))

    @classmethod
    def from_key(cls, key: Sequence[int]) -> "WalkPattern":
        return cls([K.label_name(x) for x in key[0::2]], key[1::2])

    @property
    def plan(self):
        raise TypeError("walk fragments are matched through walk keys, not plans")


def walk_occurs(walk: WalkPattern, molecule: MolecularGraph) -> bool:
    atoms, bonds = walk.atoms, walk.bonds
    adj = molecule.adjacency
    labs = molecule.vertices

    def rec(v, prev, i, a_seq, b_seq):
        if i == len(b_seq):
            return True
        for w, b in adj[v].items():
            if w != prev and b == b_seq[i] and labs[w] == a_seq[i + 1]:
                if rec(w, v, i + 1, a_seq, b_seq):
                    return True
        return False

    for a_seq, b_seq in ((atoms, bonds), (atoms[::-1], bonds[::-1])):
        for v in range(molecule.n_vertices):
            if labs[v] == a_seq[0] and rec(v, -1, 0, a_seq, b_seq):
                return True
    return False


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def canonical_code(pattern: Pattern) -> str:
    return pattern.code


def make_pattern(language, labels, edges) -> Pattern:
    """Build the canonical pattern of ``language`` from any vertex numbering."""
    language = PatternLanguage.parse(language)
    if language is PatternLanguage.SEQUENCE:
        return SequencePattern.from_graph(labels, edges)
    if language is PatternLanguage.TREE:
        return TreePattern.from_graph(labels, edges)
    return GraphPattern.from_graph(labels, edges)


def convert(pattern: Pattern, language) -> Pattern:
    """Reinterpret a pattern in another language (sequence -> tree -> graph)."""
    language = PatternLanguage.parse(language)
    if pattern.language is language:
        return pattern
    return make_pattern(language, pattern.labels, pattern.edges)


def single_edge(language, a: str, bond, b: str) -> Pattern:
    return make_pattern(language, (a, b), ((0, 1, BondLabel(bond)),))


def occurs(pattern: Pattern, molecule: MolecularGraph) -> bool:
    if isinstance(pattern, WalkPattern):
        return walk_occurs(pattern, molecule)
    return bool(K.occurs_many(pattern.plan, molecule.batch, [0])[0])


def occurrences(pattern: Pattern, dataset: LabeledDataset, mol_ids: Iterable[int] | None = None) -> list[int]:
    """Positions of the molecules (optionally restricted to ``mol_ids``) containing the pattern."""
    if isinstance(pattern, WalkPattern):
        ids = range(len(dataset)) if mol_ids is None else mol_ids
        return [m for m in ids if walk_occurs(pattern, dataset.molecules[m])]
    ids = list(range(len(dataset))) if mol_ids is None else list(mol_ids)
    flags = K.occurs_many(pattern.plan, dataset.batch, ids)
    return [m for m, f in zip(ids, flags) if f]


def initial_patterns(language, dataset: LabeledDataset) -> list[tuple[Pattern, list[int]]]:
    """All single-edge patterns present in ``dataset`` with their occurrence lists."""
    language = PatternLanguage.parse(language)
    occ: dict[tuple, set[int]] = {}
    for m, mol in enumerate(dataset.molecules):
        for u, v, b in mol.edges:
            la, lb = mol.vertices[u], mol.vertices[v]
            if lb < la:
                la, lb = lb, la
            occ.setdefault((la, int(b), lb), set()).add(m)
    return [(single_edge(language, a, b, c), sorted(occ[(a, b, c)])) for a, b, c in sorted(occ)]


def candidate_children(pattern: Pattern, batch, occ: Sequence[int],
                       keep: Callable[[list[int]], bool] | None = None) -> list[tuple[Pattern, list[int]]]:
    """One-edge extensions found among the embeddings of ``pattern`` in ``occ``.

    Candidates are grouped by canonical code with occurrence lists merged, but
    *not* yet filtered to canonical children (see :meth:`Pattern.is_canonical_child`).

    Isomorphic children always add the same bond and the same new label, so
    extensions are first bucketed by that pair.  When ``keep`` rejects the
    merged support of a bucket, none of its children is built.  Callers pass
    an anti-monotone test (such as a score bound) so nothing they want is lost.
    """
    fwd, bwd_src, bwd = pattern._masks()
    k = pattern.n_vertices
    nl1 = K.n_labels() + 1
    raw = K.extensions(pattern.plan, batch, occ, fwd, bwd_src, bwd)
    buckets: dict[tuple[int, int, bool], list] = {}
    for key in sorted(raw):
        src, dst, bond, lab = K.decode_key(key, k, nl1)
        b = buckets.setdefault((bond, lab, dst < 0), [set(), []])
        b[0].update(raw[key])
        b[1].append((key, src, dst, bond, lab))
    groups: dict[str, list] = {}
    for support, members in buckets.values():
        if keep is not None and not keep(sorted(support)):
            continue
        for key, src, dst, bond, lab in members:
            child = pattern._candidate(src, dst, bond, K.label_name(lab) if lab >= 0 else None)
            g = groups.get(child.code)
            if g is None:
                groups[child.code] = [child, set(raw[key])]
            else:
                g[1].update(raw[key])
    return [(groups[c][0], sorted(groups[c][1])) for c in sorted(groups)]


def refine(pattern: Pattern, language, dataset: LabeledDataset) -> list[tuple[Pattern, list[int]]]:
    """Canonical one-edge children of ``pattern`` that occur in ``dataset``.

    Starting from :func:`initial_patterns`, the closure of ``refine`` visits
    every pattern of the language occurring in the dataset exactly once.
    """
    pattern = convert(pattern, language)
    occ = occurrences(pattern, dataset)
    if not occ:
        raise PatternError("pattern does not occur in the dataset")
    return [
        (child, ids)
        for child, ids in candidate_children(pattern, dataset.batch, occ)
        if pattern.is_canonical_child(child)
    ]


# --------------------------------------------------------------------------
# parsing codes back into patterns
# --------------------------------------------------------------------------

_LINEAR_RE = re.compile(r"([A-Za-z0-9_]+)|([-=#:])")
_DFS_RE = re.compile(r"\((\d+),(\d+),([A-Za-z0-9_]+),([-=#:]),([A-Za-z0-9_]+)\)")


def _parse_linear(body: str):
    toks = _LINEAR_RE.findall(body)
    if "".join(a or b for a, b in toks) != body:
        raise PatternError(f"malformed linear code {body!r}")
    atoms = [a for a, _ in toks if a]
    bonds = [BondLabel.from_symbol(b) for _, b in toks if b]
    return atoms, bonds


def _parse_tree(body: str):
    labels: list[str] = []
    edges: list[tuple[int, int, BondLabel]] = []
    pos = 0

    def node() -> int:
        nonlocal pos
        m = re.compile(r"[A-Za-z0-9_]+").match(body, pos)
        if m is None:
            raise PatternError(f"malformed tree code at {pos}: {body!r}")
        idx = len(labels)
        labels.append(m.group(0))
        pos = m.end()
        if pos < len(body) and body[pos] == "(":
            pos += 1
            while True:
                b = BondLabel.from_symbol(body[pos])
                pos += 1
                child = node()
                edges.append((idx, child, b))
                if body[pos] == ",":
                    pos += 1
                    continue
                if body[pos] == ")":
                    pos += 1
                    break
                raise PatternError(f"malformed tree code at {pos}: {body!r}")
        return idx

    try:
        node()
    except IndexError:
        raise PatternError(f"truncated tree code {body!r}") from None
    if pos != len(body):
        raise PatternError(f"trailing characters in tree code {body!r}")
    return labels, edges


def pattern_from_code(code: str) -> Pattern:
    """Inverse of :func:`canonical_code`; the result's code equals the input."""
    tag, _, body = code.partition(":")
    if tag == "S":
        p: Pattern = SequencePattern(*_parse_linear(body))
    elif tag == "W":
        p = WalkPattern(*_parse_linear(body))
    elif tag == "T":
        p = TreePattern.from_graph(*_parse_tree(body))
    elif tag == "G":
        found = _DFS_RE.findall(body)
        if "".join(f"({i},{j},{a},{s},{c})" for i, j, a, s, c in found) != body or not found:
            raise PatternError(f"malformed graph code {code!r}")
        p = GraphPattern([(int(i), int(j), a, BondLabel.from_symbol(s), c) for i, j, a, s, c in found])
    else:
        raise PatternError(f"unknown language tag in {code!r}")
    if p.code != code or (tag == "G" and not dfscode.is_min(p.dfs)):
        raise PatternError(f"{code!r} is not in canonical form")
    return p
