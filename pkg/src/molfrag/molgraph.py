"""Molecular graph model, labeled datasets and the two ingestion formats.

Molecules are hydrogen-suppressed, undirected, vertex- and edge-labeled
simple graphs.  Two text formats are supported:

* a line-based transaction format (``t``/``v``/``e`` records, gSpan style)
* a small SMILES subset (organic subset, bracket atoms, branches, ring
  closures, aromatic lowercase atoms)
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

ACTIVE = 1
INACTIVE = 0

_LABEL_RE = re.compile(r"^[A-Za-z0-9_]+$")


class BondLabel(enum.IntEnum):
    """Bond types; the integer value is the transaction-file code and the order."""

    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def symbol(self) -> str:
        return _BOND_SYMBOLS[self]

    @classmethod
    def from_symbol(cls, symbol: str) -> "BondLabel":
        try:
            return _SYMBOL_BONDS[symbol]
        except KeyError:
            raise ValueError(f"unknown bond symbol {symbol!r}") from None


_BOND_SYMBOLS = {
    BondLabel.SINGLE: "-",
    BondLabel.DOUBLE: "=",
    BondLabel.TRIPLE: "#",
    BondLabel.AROMATIC: ":",
}
_SYMBOL_BONDS = {v: k for k, v in _BOND_SYMBOLS.items()}


class MoleculeError(ValueError):
    """A graph violates the molecular graph invariants."""


@dataclass(frozen=True, eq=False)
class MolecularGraph:
    """Hydrogen-suppressed molecular graph.

    Edges are stored as ``(u, v, bond)`` with ``u < v``, sorted.
    """

    vertices: tuple[str, ...]
    edges: tuple[tuple[int, int, BondLabel], ...]
    id: str = ""

    def __init__(self, vertices: Iterable[str], edges: Iterable[Sequence], id: str = ""):
        verts = tuple(str(v) for v in vertices)
        norm = []
        seen = set()
        for u, v, b in edges:
            u, v, b = int(u), int(v), BondLabel(b)
            if u == v:
                raise MoleculeError(f"self-loop on vertex {u}")
            if not (0 <= u < len(verts) and 0 <= v < len(verts)):
                raise MoleculeError(f"edge ({u}, {v}) references unknown vertex")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise MoleculeError(f"parallel edge ({u}, {v})")
            seen.add((u, v))
            norm.append((u, v, b))
        for lab in verts:
            if lab == "H":
                raise MoleculeError("hydrogen vertices are not allowed")
            if not _LABEL_RE.match(lab):
                raise MoleculeError(f"invalid atom label {lab!r}")
        norm.sort()
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(norm))
        object.__setattr__(self, "id", str(id))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[dict[int, BondLabel], ...]:
        adj: list[dict[int, BondLabel]] = [{} for _ in self.vertices]
        for u, v, b in self.edges:
            adj[u][v] = b
            adj[v][u] = b
        return tuple(adj)

    @cached_property
    def batch(self):
        """Single-molecule :class:`~molfrag._kernels.GraphBatch` (cached)."""
        from ._kernels import GraphBatch

        return GraphBatch([self])

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in self.adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def __repr__(self) -> str:
        return f"MolecularGraph(id={self.id!r}, n_vertices={self.n_vertices}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class LabeledDataset:
    """Molecules with aligned binary class labels (1 = active, 0 = inactive)."""

    molecules: tuple[MolecularGraph, ...]
    labels: tuple[int, ...]
    name: str = "dataset"

    def __init__(self, molecules: Iterable[MolecularGraph], labels: Iterable[int], name: str = "dataset"):
        mols = tuple(molecules)
        labs = tuple(int(x) for x in labels)
        if len(mols) != len(labs):
            raise ValueError(f"{len(mols)} molecules but {len(labs)} labels")
        if any(x not in (ACTIVE, INACTIVE) for x in labs):
            raise ValueError("labels must be 0 (inactive) or 1 (active)")
        object.__setattr__(self, "molecules", mols)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "name", name)

    def __len__(self) -> int:
        return len(self.molecules)

    @property
    def n_active(self) -> int:
        return sum(self.labels)

    @property
    def n_inactive(self) -> int:
        return len(self.labels) - self.n_active

    def subset(self, indices: Iterable[int], name: str | None = None) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset(
            [self.molecules[i] for i in idx],
            [self.labels[i] for i in idx],
            name=self.name if name is None else name,
        )

    def with_labels(self, labels: Iterable[int]) -> "LabeledDataset":
        return LabeledDataset(self.molecules, labels, name=self.name)

    @cached_property
    def batch(self):
        from ._kernels import GraphBatch

        return GraphBatch(self.molecules)


# --------------------------------------------------------------------------
# Transaction format
# --------------------------------------------------------------------------

class TransactionFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


_CLASS_TOKENS = {"1": ACTIVE, "active": ACTIVE, "0": INACTIVE, "inactive": INACTIVE}


def parse_class_token(token: str) -> int:
    try:
        return _CLASS_TOKENS[token.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown class token {token!r}") from None


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise TransactionFormatError(f"expected integer, got {tok!r}", lineno) from None


def parse_transactions(text: str, name: str = "dataset") -> LabeledDataset:
    """Parse the ``t``/``v``/``e`` transaction format into a dataset.

    A ``t # -1`` record (the gSpan end marker) terminates parsing.
    """
    mols: list[MolecularGraph] = []
    labels: list[int] = []
    cur = None  # (id, label, verts, edges, header_line)

    def flush():
        if cur is None:
            return
        gid, lab, verts, edges, hline = cur
        try:
            mols.append(MolecularGraph(verts, edges, id=gid))
        except MoleculeError as exc:
            raise TransactionFormatError(str(exc), hline) from None
        labels.append(lab)

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "t":
            if len(toks) >= 3 and toks[1] == "#" and toks[2] == "-1":
                break
            if len(toks) != 4 or toks[1] != "#":
                raise TransactionFormatError("malformed graph header, expected 't # <id> <class>'", lineno)
            flush()
            gid = str(_int(toks[2], lineno))
            try:
                lab = parse_class_token(toks[3])
            except ValueError as exc:
                raise TransactionFormatError(str(exc), lineno) from None
            cur = (gid, lab, [], [], lineno)
        elif toks[0].startswith("#"):
            continue
        elif toks[0] == "v":
            if cur is None:
                raise TransactionFormatError("vertex record before graph header", lineno)
            if len(toks) != 3:
                raise TransactionFormatError("malformed vertex line, expected 'v <id> <label>'", lineno)
            vid = _int(toks[1], lineno)
            if vid != len(cur[2]):
                raise TransactionFormatError(
                    f"non-consecutive vertex id {vid} (expected {len(cur[2])})", lineno)
            if not _LABEL_RE.match(toks[2]) or toks[2] == "H":
                raise TransactionFormatError(f"invalid atom label {toks[2]!r}", lineno)
            cur[2].append(toks[2])
        elif toks[0] == "e":
            if cur is None:
                raise TransactionFormatError("edge record before graph header", lineno)
            if len(toks) != 4:
                raise TransactionFormatError("malformed edge line, expected 'e <src> <dst> <bond>'", lineno)
            u, v, b = (_int(t, lineno) for t in toks[1:])
            n = len(cur[2])
            if not (0 <= u < n and 0 <= v < n):
                raise TransactionFormatError("edge references unknown vertex", lineno)
            if b not in (1, 2, 3, 4):
                raise TransactionFormatError(f"unknown bond code {b}", lineno)
            cur[3].append((u, v, b))
        else:
            raise TransactionFormatError(f"malformed line {line!r}", lineno)
    flush()
    return LabeledDataset(mols, labels, name=name)


def write_transactions(dataset: LabeledDataset) -> str:
    """Serialize a dataset; ``parse_transactions`` inverts this exactly."""
    out = []
    for i, (mol, lab) in enumerate(zip(dataset.molecules, dataset.labels)):
        gid = mol.id if re.fullmatch(r"-?\d+", mol.id) and mol.id != "-1" else str(i)
        out.append(f"t # {gid} {lab}")
        out.extend(f"v {j} {a}" for j, a in enumerate(mol.vertices))
        out.extend(f"e {u} {v} {int(b)}" for u, v, b in mol.edges)
    return "".join(line + "\n" for line in out)


# --------------------------------------------------------------------------
# SMILES subset
# --------------------------------------------------------------------------

class SmilesError(ValueError):
    """The string is not in the supported SMILES subset."""


class StereoError(SmilesError):
    """Stereochemistry markers are not supported."""


_ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
_AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
_ELEMENTS = frozenset("""
H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce
Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn
Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr
""".split())
_AROMATIC_BRACKET = ("se", "as", "b", "c", "n", "o", "p", "s")
_BRACKET_RE = re.compile(
    r"^(?P<iso>\d+)?(?P<sym>[A-Z][a-z]?|se|as|[bcnops])(?P<hcount>H\d*)?"
    r"(?P<charge>(\+\d*|-\d*)+)?(?P<cls>:\d+)?$"
)


def parse_smiles(text: str, id: str = "") -> MolecularGraph:
    """Parse a SMILES string from the supported subset into a molecular graph.

    Hydrogens (explicit ``[H]`` atoms and hydrogen counts), charges and
    isotopes are dropped.  Bonds between two aromatic atoms without an explicit
    bond symbol are aromatic.  Stereo markers raise :class:`StereoError`;
    every other problem raises :class:`SmilesError`.
    """
    s = text.strip()
    if not s:
        raise SmilesError("empty SMILES string")
    for ch in "/\\@":
        if ch in s:
            raise StereoError(f"stereochemistry marker {ch!r} not supported")
    if "." in s:
        raise SmilesError("disconnected structures ('.') are not supported")

    labels: list[str] = []
    aromatic: list[bool] = []
    hydrogen: list[bool] = []
    bonds: dict[tuple[int, int], BondLabel | None] = {}
    order: list[tuple[int, int]] = []

    def add_bond(a: int, b: int, sym: str | None):
        key = (min(a, b), max(a, b))
        if a == b or key in bonds:
            raise SmilesError(f"duplicate or self bond between atoms {a} and {b}")
        bonds[key] = None if sym is None else BondLabel.from_symbol(sym)
        order.append(key)

    prev: int | None = None
    stack: list[int | None] = []
    rings: dict[int, tuple[int, str | None]] = {}
    pending: str | None = None
    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == "(":
            if prev is None:
                raise SmilesError(f"branch opened before any atom at position {i}")
            stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if not stack:
                raise SmilesError(f"unmatched ')' at position {i}")
            if pending is not None:
                raise SmilesError(f"dangling bond before ')' at position {i}")
            prev = stack.pop()
            i += 1
            continue
        if ch in "-=#:":
            if pending is not None:
                raise SmilesError(f"consecutive bond symbols at position {i}")
            pending = ch
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesError(f"ring closure before any atom at position {i}")
            if ch == "%":
                if i + 2 >= n or not s[i + 1:i + 3].isdigit():
                    raise SmilesError(f"malformed '%nn' ring index at position {i}")
                ring = int(s[i + 1:i + 3])
                i += 3
            else:
                ring = int(ch)
                i += 1
            if ring in rings:
                other, sym = rings.pop(ring)
                if sym is not None and pending is not None and sym != pending:
                    raise SmilesError(f"conflicting ring-closure bond symbols for ring {ring}")
                add_bond(other, prev, pending if pending is not None else sym)
            else:
                rings[ring] = (prev, pending)
            pending = None
            continue
        # atom
        if ch == "[":
            j = s.find("]", i)
            if j < 0:
                raise SmilesError(f"unclosed bracket atom at position {i}")
            m = _BRACKET_RE.match(s[i + 1:j])
            if m is None:
                raise SmilesError(f"unsupported bracket atom {s[i:j + 1]!r}")
            sym = m.group("sym")
            if sym in _AROMATIC_BRACKET and sym[0].islower():
                label, arom = sym.capitalize(), True
            elif sym in _ELEMENTS:
                label, arom = sym, False
            else:
                raise SmilesError(f"unknown atom symbol {sym!r}")
            i = j + 1
        else:
            for sym in _ORGANIC:
                if s.startswith(sym, i):
                    label, arom = sym, False
                    i += len(sym)
                    break
            else:
                if ch in _AROMATIC_ORGANIC:
                    label, arom = ch.upper(), True
                    i += 1
                else:
                    raise SmilesError(f"unknown atom symbol {ch!r} at position {i}")
        idx = len(labels)
        labels.append(label)
        aromatic.append(arom)
        hydrogen.append(label == "H")
        if prev is not None:
            add_bond(prev, idx, pending)
        elif pending is not None:
            raise SmilesError("bond symbol before the first atom")
        pending = None
        prev = idx

    if stack:
        raise SmilesError("unmatched '('")
    if rings:
        raise SmilesError(f"unclosed ring index {sorted(rings)[0]}")
    if pending is not None:
        raise SmilesError("dangling bond at end of string")

    keep = [k for k in range(len(labels)) if not hydrogen[k]]
    remap = {old: new for new, old in enumerate(keep)}
    edges = []
    for a, b in order:
        if a not in remap or b not in remap:
            continue
        bond = bonds[(a, b)]
        if bond is None:
            bond = BondLabel.AROMATIC if aromatic[a] and aromatic[b] else BondLabel.SINGLE
        edges.append((remap[a], remap[b], bond))
    if not keep:
        raise SmilesError("molecule has no heavy atoms")
    return MolecularGraph([labels[k] for k in keep], edges, id=id)


def read_smiles_file(text: str, name: str = "dataset", default_label: int | None = None) -> LabeledDataset:
    """Read one SMILES per line with an optional tab-separated class token."""
    mols, labels = [], []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        smi = parts[0].strip()
        if len(parts) > 1 and parts[1].strip():
            try:
                lab = parse_class_token(parts[1])
            except ValueError as exc:
                raise SmilesError(f"line {lineno}: {exc}") from None
        elif default_label is not None:
            lab = default_label
        else:
            raise SmilesError(f"line {lineno}: missing class token")
        try:
            mols.append(parse_smiles(smi, id=str(len(mols))))
        except StereoError as exc:
            raise StereoError(f"line {lineno}: {exc}") from None
        except SmilesError as exc:
            raise SmilesError(f"line {lineno}: {exc}") from None
        labels.append(lab)
    return LabeledDataset(mols, labels, name=name)


def load_dataset(path) -> LabeledDataset:
    """Load a dataset file; ``.smi``/``.smiles`` are SMILES, anything else transactions."""
    from pathlib import Path

    p = Path(path)
    text = p.read_text(encoding="ascii")
    if p.suffix.lower() in (".smi", ".smiles"):
        return read_smiles_file(text, name=p.stem)
    return parse_transactions(text, name=p.stem)
