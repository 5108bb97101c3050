"""Integer-encoded graph batches and matching plans, plus backend selection.

The hot loops (embedding enumeration with one-edge extension collection,
occurrence tests, non-backtracking walk enumeration) live in a compiled
Cython module ``_ckernels``.  ``_pykernels`` is a line-by-line pure-Python
mirror used when the extension is not built or ``MOLFRAG_PURE_PYTHON`` is set.
"""
from __future__ import annotations

import os
import threading

import numpy as np

_label_lock = threading.Lock()
_label_ids: dict[str, int] = {}
_label_names: list[str] = []


def intern_label(name: str) -> int:
    """Process-local integer id for an atom label; ids carry no ordering meaning."""
    try:
        return _label_ids[name]
    except KeyError:
        with _label_lock:
            if name not in _label_ids:
                _label_ids[name] = len(_label_names)
                _label_names.append(name)
            return _label_ids[name]


def label_name(label_id: int) -> str:
    return _label_names[label_id]


def n_labels() -> int:
    return len(_label_names)


class GraphBatch:
    """Molecules concatenated into one CSR adjacency with global vertex ids."""

    def __init__(self, molecules):
        labels, indptr, nbr, bond, vstart = [], [0], [], [], [0]
        for mol in molecules:
            off = len(labels)
            adj = mol.adjacency
            for v, lab in enumerate(mol.vertices):
                labels.append(intern_label(lab))
                for w in sorted(adj[v]):
                    nbr.append(off + w)
                    bond.append(int(adj[v][w]))
                indptr.append(len(nbr))
            vstart.append(len(labels))
        self.n_molecules = len(vstart) - 1
        self.labels = np.asarray(labels, dtype=np.int32)
        self.indptr = np.asarray(indptr, dtype=np.int32)
        self.nbr = np.asarray(nbr, dtype=np.int32)
        self.bond = np.asarray(bond, dtype=np.int32)
        self.vstart = np.asarray(vstart, dtype=np.int32)
        # list views for the pure-Python backend
        self.labels_l = labels
        self.vstart_l = vstart
        self.adj_l = [
            [(nbr[p], bond[p]) for p in range(indptr[v], indptr[v + 1])]
            for v in range(len(labels))
        ]

    def __len__(self) -> int:
        return self.n_molecules


class Plan:
    """Matching order for a connected pattern.

    Vertex ``i > 0`` is matched as a neighbour of ``anchor[i] < i``; the other
    pattern edges to earlier vertices are verified afterwards.
    """

    def __init__(self, labels, edges):
        k = len(labels)
        adj: list[dict[int, int]] = [{} for _ in range(k)]
        for u, v, b in edges:
            adj[u][v] = int(b)
            adj[v][u] = int(b)
        anchor = [-1] * k
        abond = [0] * k
        chk_ptr = [0]
        chk_v: list[int] = []
        chk_b: list[int] = []
        for i in range(k):
            earlier = sorted(j for j in adj[i] if j < i)
            if i > 0:
                if not earlier:
                    raise ValueError("pattern vertices are not in a connected order")
                anchor[i] = earlier[0]
                abond[i] = adj[i][earlier[0]]
                for j in earlier[1:]:
                    chk_v.append(j)
                    chk_b.append(adj[i][j])
            chk_ptr.append(len(chk_v))
        padj = np.zeros(k * k, dtype=np.uint8)
        for u in range(k):
            for v in adj[u]:
                padj[u * k + v] = 1
        self.k = k
        self.labels_l = [intern_label(x) for x in labels]
        self.anchor_l = anchor
        self.abond_l = abond
        self.chk_ptr_l = chk_ptr
        self.chk_v_l = chk_v
        self.chk_b_l = chk_b
        self.padj_l = padj.tolist()
        self.labels = np.asarray(self.labels_l, dtype=np.int32)
        self.anchor = np.asarray(anchor, dtype=np.int32)
        self.abond = np.asarray(abond, dtype=np.int32)
        self.chk_ptr = np.asarray(chk_ptr, dtype=np.int32)
        self.chk_v = np.asarray(chk_v, dtype=np.int32)
        self.chk_b = np.asarray(chk_b, dtype=np.int32)
        self.padj = padj


def encode_key(k: int, nl1: int, src: int, dst: int, bond: int, label: int) -> int:
    """Pack an extension ``(src, dst or -1, bond, label id or -1)`` into an int."""
    return ((src * (k + 1) + dst + 1) * 5 + bond) * nl1 + label + 1


def decode_key(key: int, k: int, nl1: int) -> tuple[int, int, int, int]:
    key, lab = divmod(key, nl1)
    key, bond = divmod(key, 5)
    src, dst = divmod(key, k + 1)
    return src, dst - 1, bond, lab - 1


def _select_backend():
    if not os.environ.get("MOLFRAG_PURE_PYTHON"):
        try:
            from . import _ckernels

            return _ckernels, "cython"
        except ImportError:
            pass
    from . import _pykernels

    return _pykernels, "python"


_backend, BACKEND = _select_backend()


def use_backend(name: str) -> None:
    """Switch backend at runtime (``"cython"`` or ``"python"``); used by tests and benchmarks."""
    global _backend, BACKEND
    if name == "cython":
        from . import _ckernels as mod
    elif name == "python":
        from . import _pykernels as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    _backend, BACKEND = mod, name


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def extensions(plan: Plan, batch: GraphBatch, mol_ids, fwd_mask, bwd_src: int = -1, bwd_mask=None):
    """Collect one-edge extensions over all embeddings of ``plan`` in ``mol_ids``.

    Returns a dict mapping packed extension keys (see :func:`encode_key`) to the
    ascending list of molecules (batch positions) in which they occur.
    """
    k = plan.k
    fwd = np.zeros(k, dtype=np.uint8)
    fwd[list(fwd_mask)] = 1
    bwd = np.zeros(k, dtype=np.uint8)
    if bwd_mask is not None:
        bwd[list(bwd_mask)] = 1
    ids = np.asarray(sorted(mol_ids), dtype=np.int32)
    return _backend.extensions(plan, batch, ids, fwd, int(bwd_src), bwd, n_labels() + 1)


def occurs_many(plan: Plan, batch: GraphBatch, mol_ids=None) -> np.ndarray:
    """uint8 flags: does the pattern embed in each requested molecule."""
    if mol_ids is None:
        ids = np.arange(batch.n_molecules, dtype=np.int32)
    else:
        ids = np.asarray(mol_ids, dtype=np.int32)
    return np.asarray(_backend.occurs_many(plan, batch, ids), dtype=np.uint8)


def walk_keys(batch: GraphBatch, mol: int, max_len: int) -> set:
    """Orientation-canonical label tuples of non-backtracking walks of 1..max_len bonds.

    Tuples interleave label ids and bond codes ``(l0, b0, l1, ..., lm)``; of a
    walk and its reversal only the lexicographically smaller tuple is kept.
    """
    return _backend.walk_keys(batch, int(mol), int(max_len))
