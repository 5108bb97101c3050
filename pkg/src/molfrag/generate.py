"""Synthetic labeled molecule sets with planted class-correlated fragments.

Background skeletons are random C/N/O trees (degree at most 3) with occasional
ring closures and double bonds.  Each planted fragment is attached by a single
bond with a class-dependent probability.  Everything is drawn from one
``random.Random(seed)``, so a spec and a seed fix the output byte for byte.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import asdict, dataclass, field

from .molgraph import BondLabel, LabeledDataset, MolecularGraph, parse_smiles, write_transactions
from .patterns import PatternError, make_pattern


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Plant:
    smiles: str
    p_active: float
    p_inactive: float

    def __post_init__(self):
        for p in (self.p_active, self.p_inactive):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"insertion probability {p} outside [0, 1]")


@dataclass(frozen=True)
class GeneratorSpec:
    n_molecules: int = 300
    active_fraction: float = 0.5
    min_atoms: int = 8
    max_atoms: int = 16
    atoms: tuple[tuple[str, float], ...] = (("C", 0.7), ("N", 0.15), ("O", 0.15))
    ring_prob: float = 0.3
    double_prob: float = 0.1
    plants: tuple[Plant, ...] = ()
    name: str = "synthetic"

    def __post_init__(self):
        if self.n_molecules < 0:
            raise ValueError("n_molecules must be >= 0")
        if not 1 <= self.min_atoms <= self.max_atoms:
            raise ValueError("need 1 <= min_atoms <= max_atoms")
        if not 0.0 <= self.active_fraction <= 1.0:
            raise ValueError("active_fraction outside [0, 1]")
        sizes = [parse_smiles(p.smiles).n_vertices for p in self.plants]
        if sum(sizes) + 1 > self.max_atoms:
            raise InfeasibleSpecError(
                f"planted fragments need {sum(sizes)} atoms plus a skeleton atom, "
                f"but molecules have at most {self.max_atoms}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["atoms"] = [list(a) for a in self.atoms]
        d["plants"] = list(d["plants"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        d = dict(d)
        d["atoms"] = tuple(tuple(a) for a in d.get("atoms", cls.atoms))
        d["plants"] = tuple(Plant(**p) for p in d.get("plants", ()))
        return cls(**d)


@dataclass
class GeneratedDataset:
    dataset: LabeledDataset
    manifest: dict = field(default_factory=dict)

    def transactions(self) -> str:
        m = self.manifest
        header = f"# synthetic dataset {m['name']} seed={m['seed']} molecules={len(self.dataset)}\n"
        return header + write_transactions(self.dataset)

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


def _ring_partner(adj: list[dict], u: int, rng: random.Random) -> int | None:
    """A vertex 4 or 5 bonds away from ``u`` with spare degree (closes a 5- or 6-ring)."""
    dist = {u: 0}
    queue = deque([u])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    options = sorted(v for v, d in dist.items() if d in (4, 5) and len(adj[v]) < 3)
    return rng.choice(options) if options else None


def _skeleton(n: int, spec: GeneratorSpec, rng: random.Random):
    symbols = [a for a, _ in spec.atoms]
    weights = [w for _, w in spec.atoms]
    labels = [rng.choices(symbols, weights)[0] for _ in range(n)]
    adj: list[dict[int, BondLabel]] = [{} for _ in range(n)]
    for v in range(1, n):
        open_ = [u for u in range(v) if len(adj[u]) < 3]
        u = rng.choice(open_)
        bond = BondLabel.DOUBLE if rng.random() < spec.double_prob else BondLabel.SINGLE
        adj[u][v] = adj[v][u] = bond
    if n >= 5 and rng.random() < spec.ring_prob:
        starts = [u for u in range(n) if len(adj[u]) < 3]
        if starts:
            u = rng.choice(starts)
            w = _ring_partner(adj, u, rng)
            if w is not None:
                adj[u][w] = adj[w][u] = BondLabel.SINGLE
    return labels, adj


def _attach(labels, adj, frag: MolecularGraph, rng: random.Random) -> None:
    base = len(labels)
    labels.extend(frag.vertices)
    adj.extend({} for _ in frag.vertices)
    for u, v, b in frag.edges:
        adj[base + u][base + v] = adj[base + v][base + u] = b
    lowest = min(len(a) for a in adj[:base])
    anchor = rng.choice([u for u in range(base) if len(adj[u]) == lowest])
    fdeg = [len(adj[base + i]) for i in range(frag.n_vertices)]
    port = base + fdeg.index(min(fdeg))
    adj[anchor][port] = adj[port][anchor] = BondLabel.SINGLE


def plant_codes(smiles: str) -> dict[str, str]:
    """Canonical codes of a planted fragment in every language it belongs to."""
    g = parse_smiles(smiles)
    out = {}
    for lang in ("sequence", "tree", "graph"):
        try:
            out[lang] = make_pattern(lang, g.vertices, g.edges).code
        except PatternError:
            pass
    return out


def generate(spec: GeneratorSpec, seed: int = 0) -> GeneratedDataset:
    rng = random.Random(seed)
    n_act = round(spec.n_molecules * spec.active_fraction)
    labels = [1] * n_act + [0] * (spec.n_molecules - n_act)
    rng.shuffle(labels)
    frags = [parse_smiles(p.smiles) for p in spec.plants]
    carriers: list[list[int]] = [[] for _ in spec.plants]
    mols = []
    for i, y in enumerate(labels):
        chosen = [k for k, p in enumerate(spec.plants)
                  if rng.random() < (p.p_active if y == 1 else p.p_inactive)]
        planted = sum(frags[k].n_vertices for k in chosen)
        lo = max(spec.min_atoms, planted + 1)
        n = rng.randint(lo, max(lo, spec.max_atoms))
        atom_labels, adj = _skeleton(n - planted, spec, rng)
        for k in chosen:
            _attach(atom_labels, adj, frags[k], rng)
            carriers[k].append(i)
        edges = [(u, v, b) for u in range(len(adj)) for v, b in adj[u].items() if u < v]
        mols.append(MolecularGraph(atom_labels, edges, id=str(i)))
    ds = LabeledDataset(mols, labels, name=spec.name)
    manifest = {
        "name": spec.name,
        "seed": seed,
        "spec": spec.to_dict(),
        "n_active": ds.n_active,
        "n_inactive": ds.n_inactive,
        "plants": [
            {"smiles": p.smiles, "p_active": p.p_active, "p_inactive": p.p_inactive,
             "codes": plant_codes(p.smiles), "molecules": carriers[k]}
            for k, p in enumerate(spec.plants)
        ],
    }
    return GeneratedDataset(ds, manifest)


# --------------------------------------------------------------------------
# ready-made configurations
# --------------------------------------------------------------------------

def planted_spec(n_molecules: int = 200, p_active: float = 0.9, p_inactive: float = 0.05,
                 smiles: str = "SC=O", name: str = "planted") -> GeneratorSpec:
    """One strongly class-correlated fragment on a C/N/O background."""
    return GeneratorSpec(n_molecules=n_molecules, plants=(Plant(smiles, p_active, p_inactive),), name=name)


def redundancy_spec(n_molecules: int = 200, name: str = "redundant") -> GeneratorSpec:
    """A fused aromatic ring system tied to activity: its many subgraphs share one support."""
    return GeneratorSpec(
        n_molecules=n_molecules,
        min_atoms=14,
        max_atoms=20,
        plants=(Plant("c1ccc2ccccc2c1", 0.6, 0.1), Plant("SN", 0.3, 0.1), Plant("O=S", 0.1, 0.3)),
        name=name,
    )


_SUITE_PLANTS = (
    ("SC", "PO", "ClC", "BrN", "FC", "IC", "BO", "SN", "PC", "SO"),
    ("SO", "PN", "ClN", "BrC", "FN", "IO", "BC", "SS", "PP", "FO"),
    ("SC=O", "P=O", "ClO", "BrO", "FO", "IN", "BN", "S=N", "PS", "IC"),
    ("NS", "OP", "CCl", "CBr", "NF", "CI", "NB", "OS", "CP", "BF"),
    ("S=C", "P=N", "ClCl", "BrBr", "FF", "II", "BB", "SP", "PB", "BrF"),
)


def synthetic_suite(n_molecules: int = 300) -> list[GeneratorSpec]:
    """Five datasets whose class signal is spread over ten weakly correlated fragments.

    Half the fragments lean active and half inactive, each at 30% vs 12%, so a
    single fragment is rarely significant at 99.9% but most are at 95%.
    """
    specs = []
    for d, smiles in enumerate(_SUITE_PLANTS):
        plants = tuple(Plant(s, *((0.3, 0.12) if k % 2 == 0 else (0.12, 0.3))) for k, s in enumerate(smiles))
        specs.append(GeneratorSpec(n_molecules=n_molecules, atoms=(("C", 0.85), ("N", 0.1), ("O", 0.05)),
                                   min_atoms=8, max_atoms=30, plants=plants, name=f"suite{d + 1}"))
    return specs
